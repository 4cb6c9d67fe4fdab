//! Accuracy, bucket breakdowns, baselines, and agreement statistics.

pub mod baselines;
pub mod kappa;

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dot::DotRegistry;
use crate::error::{Error, Result};
use crate::inventory::SenseInventory;
use crate::pairs::{Condition, Conditions, PairBuilder, RpMode, Sources, Task, TestInstance};
use crate::pos::PosCategory;
use crate::scoring::{disambiguate_all, Prediction, PredictionStatus, ScorerSession};

pub use baselines::{
    baseline_mfs, baseline_mostfreq_rp, baseline_random, MfsModel, MostFreqModel, MostFreqReport,
    RandomBaseline,
};
pub use kappa::{fleiss_kappa, AgreementMatrix};

/// Lemmas with at most this many senses are Simple, the rest Complex.
pub const SIMPLE_MAX_SENSES: usize = 10;

/// Fraction of predictions equal to their gold. `None` predictions
/// (discarded or unscored instances) count as wrong.
pub fn accuracy<P: AsRef<str>, G: AsRef<str>>(preds: &[Option<P>], golds: &[G]) -> Result<f64> {
    if preds.len() != golds.len() {
        return Err(Error::InvalidArgument(format!(
            "{} predictions for {} golds",
            preds.len(),
            golds.len()
        )));
    }
    if preds.is_empty() {
        return Err(Error::InvalidArgument("no predictions".into()));
    }
    let hits = preds
        .iter()
        .zip(golds)
        .filter(|(p, g)| p.as_ref().is_some_and(|p| p.as_ref() == g.as_ref()))
        .count();
    Ok(hits as f64 / preds.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Complexity {
    Simple,
    Complex,
}

pub fn complexity(lemma: &str, inv: &SenseInventory) -> Result<Complexity> {
    let n = inv
        .senses_of(lemma)
        .ok_or_else(|| Error::UnknownLemma(lemma.to_string()))?
        .len();
    Ok(if n <= SIMPLE_MAX_SENSES {
        Complexity::Simple
    } else {
        Complexity::Complex
    })
}

/// Instance indices grouped by lemma complexity.
pub fn bucket_by_complexity(
    instances: &[TestInstance],
    inv: &SenseInventory,
) -> Result<BTreeMap<Complexity, Vec<usize>>> {
    let mut out: BTreeMap<Complexity, Vec<usize>> = BTreeMap::new();
    for (i, inst) in instances.iter().enumerate() {
        out.entry(complexity(&inst.lemma, inv)?).or_default().push(i);
    }
    Ok(out)
}

/// Three-way POS bucket used for WSD reporting; proper nouns count as Other.
pub fn pos_bucket(pos: PosCategory) -> &'static str {
    match pos {
        PosCategory::CommonNoun => "Noun",
        PosCategory::Verb => "Verb",
        PosCategory::ProperNoun | PosCategory::Others => "Other",
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BucketStats {
    pub instances: usize,
    pub correct: usize,
    pub accuracy: f64,
    /// Analytic random-guess accuracy over the bucket's scorable instances.
    pub random: Option<f64>,
    /// MFS (WSD) or MostFreq (RP) accuracy, when training data was given.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub most_frequent: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    instances: usize,
    correct: usize,
    scorable: usize,
    inv_k: f64,
    freq_hits: usize,
}

impl Tally {
    fn merge(mut self, o: Tally) -> Tally {
        self.instances += o.instances;
        self.correct += o.correct;
        self.scorable += o.scorable;
        self.inv_k += o.inv_k;
        self.freq_hits += o.freq_hits;
        self
    }

    fn stats(&self, with_freq: bool) -> BucketStats {
        BucketStats {
            instances: self.instances,
            correct: self.correct,
            accuracy: ratio(self.correct, self.instances),
            random: (self.scorable > 0).then(|| self.inv_k / self.scorable as f64),
            most_frequent: with_freq.then(|| ratio(self.freq_hits, self.instances)),
        }
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Baselines {
    pub random: Option<RandomBaseline>,
    /// MFS for WSD, MostFreq for RP. Absent without training data.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub most_frequent: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub instances: usize,
    pub correct: usize,
    pub scored: usize,
    pub discarded: usize,
    pub backend_failed: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportConfig {
    pub seed: u64,
    pub trials: u64,
    /// Where frequency baselines were estimated from.
    pub frequency_source: String,
    pub train_instances: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub backend: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub format_version: u32,
    pub task: Task,
    pub condition: Condition,
    pub overall: f64,
    pub buckets: BTreeMap<String, BucketStats>,
    pub baselines: Baselines,
    pub counts: Counts,
    pub config: ReportConfig,
}

#[derive(Debug, Clone, Copy)]
pub struct EvalOptions {
    pub condition: Condition,
    pub seed: u64,
    pub trials: u64,
}

impl EvalOptions {
    pub fn new(condition: Condition, seed: u64) -> Self {
        Self {
            condition,
            seed,
            trials: 10_000,
        }
    }
}

/// Pairs each instance of the evaluated task with its prediction.
fn align<'a>(
    instances: &'a [TestInstance],
    predictions: &'a [Prediction],
    task: Task,
) -> Result<Vec<(&'a TestInstance, &'a Prediction)>> {
    let mut by_id: HashMap<&str, &Prediction> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if by_id.insert(&p.instance_id, p).is_some() {
            return Err(Error::Validation(format!("duplicate prediction for {}", p.instance_id)));
        }
    }
    let mut out = Vec::new();
    let mut used = 0;
    for inst in instances {
        let pred = by_id.get(inst.id.as_str()).copied();
        if pred.is_some() {
            used += 1;
        }
        if inst.task != task {
            continue;
        }
        let pred = pred.ok_or_else(|| Error::Validation(format!("no prediction for instance {}", inst.id)))?;
        if inst.gold.is_none() {
            return Err(Error::Validation(format!("instance {} has no gold label", inst.id)));
        }
        out.push((inst, pred));
    }
    if used != predictions.len() {
        return Err(Error::Validation(format!(
            "{} prediction(s) refer to unknown instances",
            predictions.len() - used
        )));
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument(format!("no {task:?} instances to evaluate")));
    }
    Ok(out)
}

fn tally_one(inst: &TestInstance, pred: &Prediction, freq_hit: bool, counts: &mut Counts) -> Tally {
    let correct = pred.status == PredictionStatus::Scored && pred.predicted.as_deref() == inst.gold.as_deref();
    counts.instances += 1;
    counts.correct += usize::from(correct);
    match pred.status {
        PredictionStatus::Scored => counts.scored += 1,
        PredictionStatus::Discarded => counts.discarded += 1,
        PredictionStatus::BackendFailed => counts.backend_failed += 1,
    }
    let k = pred.candidates.len();
    Tally {
        instances: 1,
        correct: usize::from(correct),
        scorable: usize::from(k > 0),
        inv_k: if k > 0 { 1.0 / k as f64 } else { 0.0 },
        freq_hits: usize::from(freq_hit),
    }
}

/// Per-run tallies gathered before the report is assembled.
#[derive(Default)]
struct Collected {
    buckets: BTreeMap<String, Tally>,
    total: Tally,
    counts: Counts,
    candidate_counts: Vec<usize>,
}

fn finish(
    task: Task,
    opts: &EvalOptions,
    acc: Collected,
    train_len: Option<usize>,
    frequency_source: &str,) -> Result<EvalReport> {
    let Collected {
        buckets,
        total,
        counts,
        candidate_counts,
    } = acc;
    let with_freq = train_len.is_some();
    let random = if candidate_counts.is_empty() {
        None
    } else {
        Some(baseline_random(&candidate_counts, opts.seed, opts.trials)?)
    };
    Ok(EvalReport {
        format_version: crate::FORMAT_VERSION,
        task,
        condition: opts.condition,
        overall: ratio(total.correct, total.instances),
        buckets: buckets.into_iter().map(|(k, t)| (k, t.stats(with_freq))).collect(),
        baselines: Baselines {
            random,
            most_frequent: with_freq.then(|| ratio(total.freq_hits, total.instances)),
        },
        counts,
        config: ReportConfig {
            seed: opts.seed,
            trials: opts.trials,
            frequency_source: if with_freq { frequency_source.into() } else { "none".into() },
            train_instances: train_len.unwrap_or(0),
            backend: None,
        },
    })
}

/// WSD report: Simple/Complex and Noun/Verb/Other buckets, random and MFS
/// baselines. MFS is estimated from `train` only.
pub fn evaluate_wsd(
    instances: &[TestInstance],
    predictions: &[Prediction],
    inv: &SenseInventory,
    train: Option<&[TestInstance]>,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if opts.condition.task() != Task::Wsd {
        return Err(Error::InvalidArgument(format!("{} is not a WSD condition", opts.condition)));
    }
    let rows = align(instances, predictions, Task::Wsd)?;
    let mfs = train.map(|t| MfsModel::train(t, inv));
    let builder = PairBuilder::default();
    let mut buckets: BTreeMap<String, Tally> = BTreeMap::new();
    let mut total = Tally::default();
    let mut counts = Counts::default();
    let mut ks = Vec::new();
    for (inst, pred) in rows {
        let freq_hit = mfs
            .as_ref()
            .is_some_and(|m| m.predict(&inst.lemma) == inst.gold.as_deref());
        let t = tally_one(inst, pred, freq_hit, &mut counts);
        if !pred.candidates.is_empty() {
            ks.push(pred.candidates.len());
        }
        let cx = match complexity(&inst.lemma, inv)? {
            Complexity::Simple => "Simple",
            Complexity::Complex => "Complex",
        };
        let pos = pos_bucket(builder.instance_pos(inst));
        for name in [cx, pos] {
            let b = buckets.entry(name.to_string()).or_default();
            *b = b.merge(t);
        }
        total = total.merge(t);
    }
    let acc = Collected {
        buckets,
        total,
        counts,
        candidate_counts: ks,
    };
    finish(Task::Wsd, opts, acc, train.map(<[_]>::len), "train split")
}

/// RP report: one bucket per dot object, random and MostFreq baselines.
pub fn evaluate_rp(
    instances: &[TestInstance],
    predictions: &[Prediction],
    reg: &DotRegistry,
    train: Option<&[TestInstance]>,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let mode = match opts.condition {
        Condition::Dotted => RpMode::Dotted,
        Condition::AllTypes => RpMode::AllTypes,
        other => return Err(Error::InvalidArgument(format!("{other} is not an RP condition"))),
    };
    let rows = align(instances, predictions, Task::Rp)?;
    let most_freq = train.map(|t| MostFreqModel::train(t, reg, mode)).transpose()?;
    let mut buckets: BTreeMap<String, Tally> = BTreeMap::new();
    let mut total = Tally::default();
    let mut counts = Counts::default();
    let mut ks = Vec::new();
    for (inst, pred) in rows {
        let entry = reg
            .get(&inst.lemma)
            .ok_or_else(|| Error::UnknownLemma(inst.lemma.clone()))?;
        let freq_hit = match &most_freq {
            Some(m) => {
                let gold: crate::dot::TypeClass = inst.gold.as_deref().unwrap_or_default().parse()?;
                m.predict(&inst.lemma, reg)? == gold
            }
            None => false,
        };
        // Gold labels may be abbreviations; compare on the canonical name.
        let mut pred = pred.clone();
        let gold_name = inst
            .gold
            .as_deref()
            .and_then(|g| g.parse::<crate::dot::TypeClass>().ok())
            .map(|c| c.name().to_string());
        let inst = TestInstance {
            gold: gold_name.or_else(|| inst.gold.clone()),
            ..inst.clone()
        };
        if let Some(p) = pred.predicted.as_mut() {
            if let Ok(c) = p.parse::<crate::dot::TypeClass>() {
                *p = c.name().to_string();
            }
        }
        let t = tally_one(&inst, &pred, freq_hit, &mut counts);
        if !pred.candidates.is_empty() {
            ks.push(pred.candidates.len());
        }
        let b = buckets.entry(entry.dot_object.name().to_string()).or_default();
        *b = b.merge(t);
        total = total.merge(t);
    }
    let acc = Collected {
        buckets,
        total,
        counts,
        candidate_counts: ks,
    };
    finish(Task::Rp, opts, acc, train.map(<[_]>::len), "train split")
}

/// Runs the backend over `instances` and reports under `opts.condition`.
pub fn evaluate(
    instances: &[TestInstance],
    sources: Sources<'_>,
    session: &mut ScorerSession,
    train: Option<&[TestInstance]>,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    let task = opts.condition.task();
    let selected: Vec<TestInstance> = instances.iter().filter(|i| i.task == task).cloned().collect();
    let conditions = Conditions::default().with(opts.condition);
    let predictions = disambiguate_all(
        &PairBuilder::default(),
        &selected,
        sources,
        session,
        conditions,
        opts.seed,
    )?;
    match task {
        Task::Wsd => {
            let inv = sources
                .inventory
                .ok_or_else(|| Error::InvalidArgument("WSD evaluation needs an inventory".into()))?;
            evaluate_wsd(&selected, &predictions, inv, train, opts)
        }
        Task::Rp => {
            let reg = sources
                .registry
                .ok_or_else(|| Error::InvalidArgument("RP evaluation needs a registry".into()))?;
            evaluate_rp(&selected, &predictions, reg, train, opts)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_examples() {
        let golds = ["a"; 10];
        let mut preds: Vec<Option<&str>> = vec![Some("a"); 8];
        preds.extend([Some("b"), None]);
        assert!((accuracy(&preds, &golds).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(accuracy(&[Some("a")], &["a"]).unwrap(), 1.0);
        assert!(accuracy(&[Some("a")], &["a", "b"]).is_err());
    }

    fn inv_with(lemma: &str, n: usize) -> String {
        (0..n)
            .map(|i| format!(r#"{{"sense_id": "{lemma}{i}", "lemma": "{lemma}", "pos_raw": "VC", "gloss": "義{i}"}}"#))
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn complexity_boundaries() {
        let text = [inv_with("甲", 10), inv_with("乙", 11), inv_with("打", 125)].join("\n");
        let inv = SenseInventory::load(text.as_bytes()).unwrap();
        assert_eq!(complexity("甲", &inv).unwrap(), Complexity::Simple);
        assert_eq!(complexity("乙", &inv).unwrap(), Complexity::Complex);
        assert_eq!(complexity("打", &inv).unwrap(), Complexity::Complex);
        assert!(complexity("丙", &inv).is_err());
    }

    #[test]
    fn report_flags_mismatched_ids() {
        let inv = SenseInventory::load(inv_with("甲", 2).as_bytes()).unwrap();
        let inst = TestInstance {
            id: "x".into(),
            sentence: "甲".into(),
            start: 0,
            end: 1,
            lemma: "甲".into(),
            pos_raw: "VC".into(),
            gold: Some("甲0".into()),
            task: Task::Wsd,
        };
        let pred = Prediction {
            instance_id: "y".into(),
            predicted: Some("甲0".into()),
            scores: vec![1.0, 0.0],
            candidates: vec!["甲0".into(), "甲1".into()],
            status: PredictionStatus::Scored,
            error: None,
        };
        let opts = EvalOptions::new(Condition::PosGuided, 0);
        let err = evaluate_wsd(&[inst], &[pred], &inv, None, &opts).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
