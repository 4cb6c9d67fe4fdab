//! Random, most-frequent-sense, and most-frequent-class baselines.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dot::{DotRegistry, TypeClass};
use crate::error::{Error, Result};
use crate::inventory::SenseInventory;
use crate::pairs::{RpMode, TestInstance};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomBaseline {
    /// Mean of `1 / |candidates|` over instances.
    pub analytic: f64,
    /// Share of hits over `trials` seeded draws. Each draw picks an instance
    /// uniformly, then a candidate uniformly.
    pub monte_carlo: f64,
    pub trials: u64,
    pub seed: u64,
}

pub fn random_analytic(candidate_counts: &[usize]) -> Result<f64> {
    if candidate_counts.is_empty() {
        return Err(Error::InvalidArgument("no instances".into()));
    }
    if candidate_counts.contains(&0) {
        return Err(Error::InvalidArgument("instance with zero candidates".into()));
    }
    let sum: f64 = candidate_counts.iter().map(|&k| 1.0 / k as f64).sum();
    Ok(sum / candidate_counts.len() as f64)
}

pub fn baseline_random(candidate_counts: &[usize], seed: u64, trials: u64) -> Result<RandomBaseline> {
    let analytic = random_analytic(candidate_counts)?;
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    let mut rng = seed::rng(seed, "random-baseline");
    let n = candidate_counts.len();
    let mut hits = 0u64;
    for _ in 0..trials {
        let k = candidate_counts[rng.random_range(0..n)];
        // By symmetry the gold can sit at index 0.
        if rng.random_range(0..k) == 0 {
            hits += 1;
        }
    }
    Ok(RandomBaseline {
        analytic,
        monte_carlo: hits as f64 / trials as f64,
        trials,
        seed,
    })
}

/// Most-frequent-sense predictor trained on labeled instances.
#[derive(Debug, Clone, Default)]
pub struct MfsModel {
    best: HashMap<String, String>,
}

impl MfsModel {
    /// Picks each lemma's most frequent training sense, breaking ties by
    /// inventory order. A lemma whose top count is 1 gets no prediction:
    /// when every sense is seen once there is no frequency signal.
    pub fn train(train: &[TestInstance], inv: &SenseInventory) -> Self {
        let mut counts: HashMap<&str, BTreeMap<&str, usize>> = HashMap::new();
        for inst in train {
            if let Some(gold) = inst.gold.as_deref() {
                *counts.entry(&inst.lemma).or_default().entry(gold).or_default() += 1;
            }
        }
        let best = counts
            .into_iter()
            .filter_map(|(lemma, senses)| {
                let (sense, count) = senses.into_iter().max_by(|a, b| {
                    a.1.cmp(&b.1).then_with(|| {
                        let ra = inv.rank_of(a.0).unwrap_or(usize::MAX);
                        let rb = inv.rank_of(b.0).unwrap_or(usize::MAX);
                        rb.cmp(&ra).then_with(|| b.0.cmp(a.0))
                    })
                })?;
                (count > 1).then(|| (lemma.to_string(), sense.to_string()))
            })
            .collect();
        Self { best }
    }

    pub fn predict(&self, lemma: &str) -> Option<&str> {
        self.best.get(lemma).map(String::as_str)
    }
}

fn require_gold(inst: &TestInstance) -> Result<&str> {
    inst.gold
        .as_deref()
        .ok_or_else(|| Error::Validation(format!("instance {} has no gold label", inst.id)))
}

pub fn baseline_mfs(train: &[TestInstance], test: &[TestInstance], inv: &SenseInventory) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let model = MfsModel::train(train, inv);
    let mut correct = 0usize;
    for inst in test {
        if model.predict(&inst.lemma) == Some(require_gold(inst)?) {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len() as f64)
}

/// Majority type class, per dot object (Dotted) or pooled over all
/// instances (AllTypes). Ties go to the earlier class in the dot object, or
/// in the fixed class order when pooled.
#[derive(Debug, Clone)]
pub struct MostFreqModel {
    mode: RpMode,
    per_dot: HashMap<String, TypeClass>,
    pooled: Option<TypeClass>,
}

impl MostFreqModel {
    pub fn train(train: &[TestInstance], reg: &DotRegistry, mode: RpMode) -> Result<Self> {
        let mut per_dot: HashMap<String, [usize; 8]> = HashMap::new();
        let mut pooled = [0usize; 8];
        for inst in train {
            let Some(gold) = inst.gold.as_deref() else { continue };
            let class: TypeClass = gold.parse()?;
            let dot = &reg
                .get(&inst.lemma)
                .ok_or_else(|| Error::UnknownLemma(inst.lemma.clone()))?
                .dot_object;
            let slot = TypeClass::ALL.iter().position(|c| *c == class).unwrap();
            per_dot.entry(dot.name().to_string()).or_insert([0; 8])[slot] += 1;
            pooled[slot] += 1;
        }
        let argmax = |counts: &[usize; 8], order: &[TypeClass]| {
            order
                .iter()
                .copied()
                .rev()
                .max_by_key(|c| counts[TypeClass::ALL.iter().position(|x| x == c).unwrap()])
        };
        let mut by_dot = HashMap::new();
        for dot in crate::dot::DotObject::canonical() {
            if let Some(counts) = per_dot.get(dot.name()) {
                if let Some(c) = argmax(counts, dot.classes()) {
                    by_dot.insert(dot.name().to_string(), c);
                }
            }
        }
        let pooled = pooled.iter().any(|&c| c > 0).then(|| argmax(&pooled, &TypeClass::ALL)).flatten();
        Ok(Self {
            mode,
            per_dot: by_dot,
            pooled,
        })
    }

    /// Dot objects unseen in training fall back to their first class.
    pub fn predict(&self, lemma: &str, reg: &DotRegistry) -> Result<TypeClass> {
        let dot = &reg
            .get(lemma)
            .ok_or_else(|| Error::UnknownLemma(lemma.to_string()))?
            .dot_object;
        Ok(match self.mode {
            RpMode::Dotted => self
                .per_dot
                .get(dot.name())
                .copied()
                .unwrap_or(dot.classes()[0]),
            RpMode::AllTypes => self.pooled.unwrap_or(TypeClass::ALL[0]),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MostFreqReport {
    pub overall: f64,
    pub per_dot_object: BTreeMap<String, f64>,
}

pub fn baseline_mostfreq_rp(
    train: &[TestInstance],
    test: &[TestInstance],
    reg: &DotRegistry,
    mode: RpMode,
) -> Result<MostFreqReport> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("empty test set".into()));
    }
    let model = MostFreqModel::train(train, reg, mode)?;
    let mut tally: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    let mut correct = 0;
    for inst in test {
        let gold: TypeClass = require_gold(inst)?.parse()?;
        let hit = model.predict(&inst.lemma, reg)? == gold;
        let dot = reg.get(&inst.lemma).expect("checked by predict").dot_object.name();
        let t = tally.entry(dot.to_string()).or_default();
        t.0 += usize::from(hit);
        t.1 += 1;
        correct += usize::from(hit);
    }
    Ok(MostFreqReport {
        overall: correct as f64 / test.len() as f64,
        per_dot_object: tally
            .into_iter()
            .map(|(k, (c, n))| (k, c as f64 / n as f64))
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pairs::Task;

    fn inst(lemma: &str, gold: &str, task: Task) -> TestInstance {
        TestInstance {
            id: String::new(),
            sentence: lemma.into(),
            start: 0,
            end: lemma.chars().count(),
            lemma: lemma.into(),
            pos_raw: "Na".into(),
            gold: Some(gold.into()),
            task,
        }
    }

    fn inv() -> SenseInventory {
        SenseInventory::load(
            r#"{"sense_id": "s1", "lemma": "字", "pos_raw": "Na", "gloss": "a"}
{"sense_id": "s2", "lemma": "字", "pos_raw": "Na", "gloss": "b"}
{"sense_id": "t1", "lemma": "詞", "pos_raw": "Na", "gloss": "c"}
{"sense_id": "t2", "lemma": "詞", "pos_raw": "Na", "gloss": "d"}"#
                .as_bytes(),
        )
        .unwrap()
    }

    #[test]
    fn random_all_four() {
        let b = baseline_random(&[4; 500], 11, 10_000).unwrap();
        assert_eq!(b.analytic, 0.25);
        assert!((b.monte_carlo - 0.25).abs() < 0.02, "{}", b.monte_carlo);
    }

    #[test]
    fn random_rejects_zero_candidates() {
        assert!(baseline_random(&[2, 0], 1, 10).is_err());
        assert!(baseline_random(&[], 1, 10).is_err());
    }

    #[test]
    fn mfs_hand_count() {
        let w = Task::Wsd;
        let train = vec![inst("字", "s1", w), inst("字", "s1", w), inst("字", "s1", w), inst("字", "s2", w)];
        let test = vec![inst("字", "s1", w), inst("字", "s1", w), inst("字", "s2", w)];
        let acc = baseline_mfs(&train, &test, &inv()).unwrap();
        assert!((acc - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mfs_singletons_never_predict() {
        let w = Task::Wsd;
        let train = vec![inst("字", "s1", w), inst("字", "s2", w), inst("詞", "t1", w), inst("詞", "t2", w)];
        let test = vec![inst("字", "s1", w), inst("詞", "t2", w), inst("字", "s2", w)];
        assert_eq!(baseline_mfs(&train, &test, &inv()).unwrap(), 0.0);
    }

    #[test]
    fn mfs_tie_breaks_by_inventory_order() {
        let w = Task::Wsd;
        let train = vec![inst("詞", "t2", w), inst("詞", "t2", w), inst("詞", "t1", w), inst("詞", "t1", w)];
        assert_eq!(MfsModel::train(&train, &inv()).predict("詞"), Some("t1"));
    }

    fn reg() -> DotRegistry {
        DotRegistry::load(
            r#"{"lemma": "海軍", "dot_object": "Org.Hum", "wikidata_category": "military unit"}
{"lemma": "故宮", "dot_object": "Loc.Org", "wikidata_category": "museum"}"#
                .as_bytes(),
        )
        .unwrap()
    }

    #[test]
    fn mostfreq_hand_count() {
        let r = Task::Rp;
        let mut train = vec![inst("海軍", "Organization", r); 8];
        train.extend(vec![inst("海軍", "Human", r); 2]);
        let mut test = vec![inst("海軍", "Organization", r); 7];
        test.extend(vec![inst("海軍", "Human", r); 3]);
        let rep = baseline_mostfreq_rp(&train, &test, &reg(), RpMode::Dotted).unwrap();
        assert!((rep.overall - 0.7).abs() < 1e-12);
        assert!((rep.per_dot_object["Org.Hum"] - 0.7).abs() < 1e-12);
    }

    #[test]
    fn mostfreq_single_class_train() {
        let r = Task::Rp;
        let train = vec![inst("故宮", "Location", r); 3];
        let test = vec![inst("故宮", "Location", r), inst("故宮", "Organization", r), inst("故宮", "Organization", r)];
        let rep = baseline_mostfreq_rp(&train, &test, &reg(), RpMode::Dotted).unwrap();
        assert!((rep.overall - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn mostfreq_pooled_under_all_types() {
        let r = Task::Rp;
        let mut train = vec![inst("故宮", "Location", r); 3];
        train.extend(vec![inst("海軍", "Organization", r); 5]);
        let model = MostFreqModel::train(&train, &reg(), RpMode::AllTypes).unwrap();
        assert_eq!(model.predict("故宮", &reg()).unwrap(), TypeClass::Organization);
        let dotted = MostFreqModel::train(&train, &reg(), RpMode::Dotted).unwrap();
        assert_eq!(dotted.predict("故宮", &reg()).unwrap(), TypeClass::Location);
    }
}
