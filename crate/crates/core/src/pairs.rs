//! Context-gloss pair construction.
//!
//! Each test instance becomes one pair per candidate. The context is the
//! sentence with the target wrapped in angle-bracket markers; the gloss is the
//! target followed by the candidate's definition and, for word senses, one
//! example sentence drawn deterministically from `(sense_id, seed)`.

use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dot::{DotRegistry, TypeClass};
use crate::error::{Error, Result};
use crate::inventory::{Sense, SenseInventory};
use crate::jsonl;
use crate::pos::{PosCategory, PosMap};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "WSD", alias = "wsd")]
    Wsd,
    #[serde(rename = "RP", alias = "rp")]
    Rp,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestInstance {
    #[serde(default)]
    pub id: String,
    pub sentence: String,
    /// Character offsets, end exclusive.
    pub start: usize,
    pub end: usize,
    pub lemma: String,
    pub pos_raw: String,
    #[serde(default)]
    pub gold: Option<String>,
    pub task: Task,
}

impl TestInstance {
    pub fn validate(&self) -> Result<()> {
        let len = self.sentence.chars().count();
        if self.start >= self.end || self.end > len {
            return Err(Error::Span {
                start: self.start,
                end: self.end,
                len,
            });
        }
        let surface: String = self
            .sentence
            .chars()
            .skip(self.start)
            .take(self.end - self.start)
            .collect();
        if surface != self.lemma {
            return Err(Error::Validation(format!(
                "span covers `{surface}` but lemma is `{}`",
                self.lemma
            )));
        }
        Ok(())
    }
}

/// Reads and validates an instance file. Instances without an `id` get their
/// 0-based record index.
pub fn load_instances<R: BufRead>(reader: R) -> Result<Vec<TestInstance>> {
    let records = jsonl::read_records::<TestInstance, _>(reader)?;
    let mut out = Vec::with_capacity(records.len());
    let mut seen = std::collections::HashSet::new();
    for (idx, (line, mut inst)) in records.into_iter().enumerate() {
        if inst.id.is_empty() {
            inst.id = idx.to_string();
        }
        inst.validate()
            .map_err(|e| Error::Validation(format!("line {line}: {e}")))?;
        if !seen.insert(inst.id.clone()) {
            return Err(Error::Validation(format!("line {line}: duplicate id {}", inst.id)));
        }
        out.push(inst);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextGlossPair {
    pub context: String,
    pub gloss: String,
    pub candidate_id: String,
    pub label: bool,
}

/// One line of a pair file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairRecord {
    pub instance_id: String,
    pub context: String,
    pub gloss: String,
    pub candidate_id: String,
    pub label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WsdMode {
    PosGuided,
    AllSenses,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RpMode {
    Dotted,
    AllTypes,
}

/// One of the four evaluation conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    PosGuided,
    AllSenses,
    Dotted,
    AllTypes,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::PosGuided,
        Condition::AllSenses,
        Condition::Dotted,
        Condition::AllTypes,
    ];

    pub fn task(self) -> Task {
        match self {
            Condition::PosGuided | Condition::AllSenses => Task::Wsd,
            Condition::Dotted | Condition::AllTypes => Task::Rp,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::PosGuided => "pos-guided",
            Condition::AllSenses => "all-senses",
            Condition::Dotted => "dotted",
            Condition::AllTypes => "all-types",
        }
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Condition {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Condition::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown mode `{s}`")))
    }
}

/// The WSD and RP conditions used together when a batch mixes both tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conditions {
    pub wsd: WsdMode,
    pub rp: RpMode,
}

impl Default for Conditions {
    fn default() -> Self {
        Self {
            wsd: WsdMode::PosGuided,
            rp: RpMode::Dotted,
        }
    }
}

impl Conditions {
    /// Overrides the half of the pair that `condition` belongs to.
    pub fn with(mut self, condition: Condition) -> Self {
        match condition {
            Condition::PosGuided => self.wsd = WsdMode::PosGuided,
            Condition::AllSenses => self.wsd = WsdMode::AllSenses,
            Condition::Dotted => self.rp = RpMode::Dotted,
            Condition::AllTypes => self.rp = RpMode::AllTypes,
        }
        self
    }

    pub fn for_task(&self, task: Task) -> Condition {
        match (task, self.wsd, self.rp) {
            (Task::Wsd, WsdMode::PosGuided, _) => Condition::PosGuided,
            (Task::Wsd, WsdMode::AllSenses, _) => Condition::AllSenses,
            (Task::Rp, _, RpMode::Dotted) => Condition::Dotted,
            (Task::Rp, _, RpMode::AllTypes) => Condition::AllTypes,
        }
    }
}

/// Marker characters and gloss separators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairFormat {
    pub open: char,
    pub close: char,
    /// Between target, definition and example in WSD glosses.
    pub wsd_separator: String,
    /// Between target and class label in RP glosses.
    pub rp_target_separator: String,
    /// Between class label and class gloss in RP glosses.
    pub rp_field_separator: String,
}

impl Default for PairFormat {
    fn default() -> Self {
        Self {
            open: '\u{3008}',
            close: '\u{3009}',
            wsd_separator: "，".into(),
            rp_target_separator: ":".into(),
            rp_field_separator: ",".into(),
        }
    }
}

/// All pairs for one instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairSet {
    pub instance_id: String,
    pub pairs: Vec<ContextGlossPair>,
    /// POS filtering left too few candidates and all senses were used instead.
    pub fallback: bool,
}

impl PairSet {
    pub fn gold_index(&self) -> Option<usize> {
        self.pairs.iter().position(|p| p.label)
    }

    pub fn candidate_ids(&self) -> impl Iterator<Item = &str> {
        self.pairs.iter().map(|p| p.candidate_id.as_str())
    }

    pub fn records(&self) -> impl Iterator<Item = PairRecord> + '_ {
        self.pairs.iter().map(|p| PairRecord {
            instance_id: self.instance_id.clone(),
            context: p.context.clone(),
            gloss: p.gloss.clone(),
            candidate_id: p.candidate_id.clone(),
            label: p.label,
        })
    }
}

/// Wraps the character span `[start, end)` in the given markers.
pub fn mark_target_with(sentence: &str, start: usize, end: usize, open: char, close: char) -> Result<String> {
    let len = sentence.chars().count();
    if start >= end || end > len {
        return Err(Error::Span { start, end, len });
    }
    let mut out = String::with_capacity(sentence.len() + 6);
    for (i, ch) in sentence.chars().enumerate() {
        if i == start {
            out.push(open);
        }
        out.push(ch);
        if i + 1 == end {
            out.push(close);
        }
    }
    Ok(out)
}

pub fn mark_target(sentence: &str, start: usize, end: usize) -> Result<String> {
    let f = PairFormat::default();
    mark_target_with(sentence, start, end, f.open, f.close)
}

#[derive(Debug, Clone, Default)]
pub struct PairBuilder {
    pub format: PairFormat,
    pub pos_map: PosMap,
}

/// Picks the example sentence shown with a sense, if it has any.
pub fn example_for(sense: &Sense, seed: u64) -> Option<&str> {
    match sense.examples.len() {
        0 => None,
        n => {
            let idx = seed::rng(seed, &sense.sense_id).random_range(0..n);
            Some(sense.examples[idx].as_str())
        }
    }
}

impl PairBuilder {
    pub fn new(format: PairFormat, pos_map: PosMap) -> Self {
        Self { format, pos_map }
    }

    pub fn instance_pos(&self, inst: &TestInstance) -> PosCategory {
        self.pos_map.simplify(&inst.pos_raw)
    }

    /// Candidate senses under `mode`, and whether the all-senses fallback fired.
    pub fn wsd_candidates<'a>(
        &self,
        inst: &TestInstance,
        inv: &'a SenseInventory,
        mode: WsdMode,
    ) -> Result<(Vec<&'a Sense>, bool)> {
        let all = inv.candidates_for(&inst.lemma, None)?;
        if all.len() < 2 {
            return Err(Error::Discarded {
                lemma: inst.lemma.clone(),
                candidates: all.len(),
            });
        }
        if mode == WsdMode::AllSenses {
            return Ok((all, false));
        }
        let pos = self.instance_pos(inst);
        let filtered: Vec<&Sense> = all.iter().copied().filter(|s| s.pos == pos).collect();
        if filtered.len() < 2 {
            log::info!(
                "instance {}: {} {pos} sense(s) for `{}`, using all senses",
                inst.id,
                filtered.len(),
                inst.lemma
            );
            Ok((all, true))
        } else {
            Ok((filtered, false))
        }
    }

    pub fn wsd_gloss(&self, lemma: &str, sense: &Sense, seed: u64) -> String {
        let sep = &self.format.wsd_separator;
        match example_for(sense, seed) {
            Some(ex) => format!("{lemma}{sep}{}{sep}{ex}", sense.gloss),
            None => format!("{lemma}{sep}{}", sense.gloss),
        }
    }

    pub fn build_wsd_pairs(
        &self,
        inst: &TestInstance,
        inv: &SenseInventory,
        mode: WsdMode,
        seed: u64,
    ) -> Result<PairSet> {
        if inst.task != Task::Wsd {
            return Err(Error::InvalidArgument(format!("instance {} is not a WSD instance", inst.id)));
        }
        let context = mark_target_with(&inst.sentence, inst.start, inst.end, self.format.open, self.format.close)?;
        let (candidates, fallback) = self.wsd_candidates(inst, inv, mode)?;
        let pairs = candidates
            .into_iter()
            .map(|sense| ContextGlossPair {
                context: context.clone(),
                gloss: self.wsd_gloss(&inst.lemma, sense, seed),
                candidate_id: sense.sense_id.clone(),
                label: inst.gold.as_deref() == Some(sense.sense_id.as_str()),
            })
            .collect();
        Ok(PairSet {
            instance_id: inst.id.clone(),
            pairs,
            fallback,
        })
    }

    pub fn rp_gloss(&self, lemma: &str, class: TypeClass, reg: &DotRegistry) -> String {
        let g = reg.gloss(class);
        format!(
            "{lemma}{}{}{}{}",
            self.format.rp_target_separator, g.label_zh, self.format.rp_field_separator, g.gloss_zh
        )
    }

    pub fn rp_candidates<'a>(&self, inst: &TestInstance, reg: &'a DotRegistry, mode: RpMode) -> Result<&'a [TypeClass]> {
        let dotted = reg.dot_candidates(&inst.lemma)?;
        Ok(match mode {
            RpMode::Dotted => dotted,
            RpMode::AllTypes => &TypeClass::ALL,
        })
    }

    pub fn build_rp_pairs(&self, inst: &TestInstance, reg: &DotRegistry, mode: RpMode) -> Result<PairSet> {
        if inst.task != Task::Rp {
            return Err(Error::InvalidArgument(format!("instance {} is not an RP instance", inst.id)));
        }
        let gold = inst
            .gold
            .as_deref()
            .map(str::parse::<TypeClass>)
            .transpose()
            .map_err(|e| Error::Validation(format!("instance {}: {e}", inst.id)))?;
        let context = mark_target_with(&inst.sentence, inst.start, inst.end, self.format.open, self.format.close)?;
        let pairs = self
            .rp_candidates(inst, reg, mode)?
            .iter()
            .map(|&class| ContextGlossPair {
                context: context.clone(),
                gloss: self.rp_gloss(&inst.lemma, class, reg),
                candidate_id: class.name().to_string(),
                label: gold == Some(class),
            })
            .collect();
        Ok(PairSet {
            instance_id: inst.id.clone(),
            pairs,
            fallback: false,
        })
    }

    /// Builds the pair set for one instance under the condition for its task.
    pub fn build(&self, inst: &TestInstance, sources: Sources<'_>, conditions: Conditions, seed: u64) -> Result<PairSet> {
        match inst.task {
            Task::Wsd => {
                let inv = sources
                    .inventory
                    .ok_or_else(|| Error::InvalidArgument("WSD instance but no sense inventory".into()))?;
                self.build_wsd_pairs(inst, inv, conditions.wsd, seed)
            }
            Task::Rp => {
                let reg = sources
                    .registry
                    .ok_or_else(|| Error::InvalidArgument("RP instance but no dot registry".into()))?;
                self.build_rp_pairs(inst, reg, conditions.rp)
            }
        }
    }

    /// Builds every instance's pairs in parallel; output order is input order.
    pub fn flatten(
        &self,
        instances: &[TestInstance],
        sources: Sources<'_>,
        conditions: Conditions,
        seed: u64,
    ) -> Result<Flattened> {
        let results: Vec<Result<PairSet>> = instances
            .par_iter()
            .map(|inst| self.build(inst, sources, conditions, seed))
            .collect();
        let mut out = Flattened::default();
        for (inst, res) in instances.iter().zip(results) {
            match res {
                Ok(set) => {
                    out.fallbacks += usize::from(set.fallback);
                    out.sets.push(set);
                }
                Err(Error::Discarded { lemma, candidates }) => out.discarded.push(Discard {
                    instance_id: inst.id.clone(),
                    lemma,
                    candidates,
                }),
                Err(e) => return Err(e),
            }
        }
        Ok(out)
    }
}

/// The lookup tables an instance may need.
#[derive(Debug, Clone, Copy, Default)]
pub struct Sources<'a> {
    pub inventory: Option<&'a SenseInventory>,
    pub registry: Option<&'a DotRegistry>,
}

impl<'a> Sources<'a> {
    pub fn new(inventory: Option<&'a SenseInventory>, registry: Option<&'a DotRegistry>) -> Self {
        Self { inventory, registry }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Discard {
    pub instance_id: String,
    pub lemma: String,
    pub candidates: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Flattened {
    pub sets: Vec<PairSet>,
    pub discarded: Vec<Discard>,
    pub fallbacks: usize,
}

impl Flattened {
    pub fn examples(&self) -> usize {
        self.sets.len()
    }

    pub fn sequences(&self) -> usize {
        self.sets.iter().map(|s| s.pairs.len()).sum()
    }

    pub fn records(&self) -> impl Iterator<Item = PairRecord> + '_ {
        self.sets.iter().flat_map(PairSet::records)
    }
}

pub fn build_wsd_pairs(inst: &TestInstance, inv: &SenseInventory, mode: WsdMode, seed: u64) -> Result<PairSet> {
    PairBuilder::default().build_wsd_pairs(inst, inv, mode, seed)
}

pub fn build_rp_pairs(inst: &TestInstance, reg: &DotRegistry) -> Result<PairSet> {
    PairBuilder::default().build_rp_pairs(inst, reg, RpMode::Dotted)
}

pub fn flatten(
    instances: &[TestInstance],
    sources: Sources<'_>,
    conditions: Conditions,
    seed: u64,
) -> Result<Flattened> {
    PairBuilder::default().flatten(instances, sources, conditions, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn wsd(sentence: &str, start: usize, lemma: &str, pos_raw: &str, gold: Option<&str>) -> TestInstance {
        TestInstance {
            id: "t".into(),
            sentence: sentence.into(),
            start,
            end: start + lemma.chars().count(),
            lemma: lemma.into(),
            pos_raw: pos_raw.into(),
            gold: gold.map(Into::into),
            task: Task::Wsd,
        }
    }

    const MIXED: &str = r#"
{"sense_id": "v1", "lemma": "跑", "pos_raw": "VA", "gloss": "以腳快速移動。", "examples": ["他跑得很快。", "小狗跑來跑去。"]}
{"sense_id": "n1", "lemma": "跑", "pos_raw": "Na", "gloss": "賽跑的簡稱。", "examples": []}
{"sense_id": "v2", "lemma": "跑", "pos_raw": "VC", "gloss": "為某事奔走。", "examples": ["跑業務"]}
{"sense_id": "n2", "lemma": "跑", "pos_raw": "Na", "gloss": "跑道。", "examples": ["三號跑"]}
{"sense_id": "u1", "lemma": "唯", "pos_raw": "D", "gloss": "只有。", "examples": []}
{"sense_id": "k1", "lemma": "看", "pos_raw": "VC", "gloss": "用眼睛注視。", "examples": []}
{"sense_id": "k2", "lemma": "看", "pos_raw": "VC", "gloss": "探望。", "examples": []}
{"sense_id": "k3", "lemma": "看", "pos_raw": "VE", "gloss": "認為。", "examples": []}
{"sense_id": "k4", "lemma": "看", "pos_raw": "Na", "gloss": "看法。", "examples": []}
"#;

    fn inv() -> SenseInventory {
        SenseInventory::load(MIXED.as_bytes()).unwrap()
    }

    #[test]
    fn marks_target() {
        assert_eq!(mark_target("雇主一狀告到上頭", 3, 4).unwrap(), "雇主一〈狀〉告到上頭");
        assert_eq!(mark_target("狀告", 0, 1).unwrap(), "〈狀〉告");
        assert_eq!(mark_target("告狀", 1, 2).unwrap(), "告〈狀〉");
        assert!(matches!(mark_target("告狀", 1, 3), Err(Error::Span { .. })));
        assert!(matches!(mark_target("告狀", 1, 1), Err(Error::Span { .. })));
    }

    #[test]
    fn pos_guided_keeps_matching_pos() {
        // Brute force over the fixture: senses of 跑 whose raw tag starts with V.
        let expected: Vec<_> = MIXED
            .lines()
            .filter(|l| l.contains("\"lemma\": \"跑\"") && l.contains("\"pos_raw\": \"V"))
            .map(|l| l.split('"').nth(3).unwrap().to_string())
            .collect();
        assert_eq!(expected, ["v1", "v2"]);
        let set = build_wsd_pairs(&wsd("他在跑", 2, "跑", "VC", Some("v2")), &inv(), WsdMode::PosGuided, 0).unwrap();
        assert_eq!(set.candidate_ids().collect::<Vec<_>>(), expected);
        assert_eq!(set.gold_index(), Some(1));
        assert!(!set.fallback);
    }

    #[test]
    fn all_senses_ignores_pos() {
        let set = build_wsd_pairs(&wsd("他在跑", 2, "跑", "VC", None), &inv(), WsdMode::AllSenses, 0).unwrap();
        assert_eq!(set.pairs.len(), 4);
        assert!(set.pairs.iter().all(|p| !p.label));
    }

    #[test]
    fn single_sense_is_discarded() {
        let err = build_wsd_pairs(&wsd("唯一", 0, "唯", "D", Some("u1")), &inv(), WsdMode::AllSenses, 0).unwrap_err();
        assert!(matches!(err, Error::Discarded { candidates: 1, .. }));
    }

    #[test]
    fn sparse_pos_falls_back_to_all_senses() {
        // Only one Na sense of 看: fallback to all four, gold still present.
        let set = build_wsd_pairs(&wsd("我的看", 2, "看", "Na", Some("k4")), &inv(), WsdMode::PosGuided, 0).unwrap();
        assert!(set.fallback);
        assert_eq!(set.pairs.len(), 4);
        assert_eq!(set.gold_index(), Some(3));
    }

    #[test]
    fn filtered_gold_leaves_no_true_label() {
        // Gold is a Na sense, tagged as verb: the two V senses remain, neither true.
        let set = build_wsd_pairs(&wsd("他在跑", 2, "跑", "VA", Some("n1")), &inv(), WsdMode::PosGuided, 0).unwrap();
        assert_eq!(set.pairs.len(), 2);
        assert_eq!(set.gold_index(), None);
    }

    #[test]
    fn gloss_without_example_omits_trailing_field() {
        let set = build_wsd_pairs(&wsd("他在跑", 2, "跑", "Na", None), &inv(), WsdMode::PosGuided, 3).unwrap();
        assert_eq!(set.pairs[0].gloss, "跑，賽跑的簡稱。");
        assert_eq!(set.pairs[1].gloss, "跑，跑道。，三號跑");
    }

    #[test]
    fn example_draw_depends_only_on_sense_and_seed() {
        let inv = inv();
        let sense = inv.sense("v1").unwrap();
        let seen: std::collections::BTreeSet<_> = (0..64).map(|s| example_for(sense, s).unwrap()).collect();
        assert_eq!(seen.len(), 2, "both examples should be reachable");
        for s in 0..16 {
            assert_eq!(example_for(sense, s), example_for(sense, s));
        }
    }

    #[test]
    fn unknown_lemma_is_lookup_error() {
        let err = build_wsd_pairs(&wsd("xyz", 0, "xyz", "Na", None), &inv(), WsdMode::AllSenses, 0).unwrap_err();
        assert!(matches!(err, Error::UnknownLemma(_)));
    }

    #[test]
    fn rp_pairs_without_gold() {
        let reg = DotRegistry::load(
            r#"{"lemma": "星巴克", "dot_object": "Prcr.Prct.Loc", "wikidata_category": "business"}"#.as_bytes(),
        )
        .unwrap();
        let inst = TestInstance {
            id: "r".into(),
            sentence: "天天喝星巴克".into(),
            start: 3,
            end: 6,
            lemma: "星巴克".into(),
            pos_raw: "Nb".into(),
            gold: None,
            task: Task::Rp,
        };
        let set = build_rp_pairs(&inst, &reg).unwrap();
        assert_eq!(set.candidate_ids().collect::<Vec<_>>(), ["Producer", "Product", "Location"]);
        assert_eq!(set.gold_index(), None);
        assert_eq!(set.pairs[2].gloss, "星巴克:地點,所在的地方。");
        let all = PairBuilder::default().build_rp_pairs(&inst, &reg, RpMode::AllTypes).unwrap();
        assert_eq!(all.pairs.len(), 8);
    }

    #[test]
    fn flatten_counts_sequences_and_discards() {
        let inv = inv();
        let insts = vec![
            TestInstance { id: "a".into(), ..wsd("他在跑", 2, "跑", "VC", None) },
            TestInstance { id: "b".into(), ..wsd("唯一", 0, "唯", "D", None) },
            TestInstance { id: "c".into(), ..wsd("去看", 1, "看", "VC", None) },
        ];
        let flat = flatten(&insts, Sources::new(Some(&inv), None), Conditions::default(), 1).unwrap();
        assert_eq!(flat.examples(), 2);
        assert_eq!(flat.sequences(), 2 + 3);
        assert_eq!(flat.discarded.len(), 1);
        assert_eq!(flat.discarded[0].instance_id, "b");
        assert_eq!(flat.records().count(), flat.sequences());
    }

    #[test]
    fn instance_file_validation() {
        let good = r#"{"sentence": "去看", "start": 1, "end": 2, "lemma": "看", "pos_raw": "VC", "gold": "k1", "task": "WSD"}"#;
        let insts = load_instances(good.as_bytes()).unwrap();
        assert_eq!(insts[0].id, "0");
        let bad = r#"{"sentence": "去看", "start": 0, "end": 1, "lemma": "看", "pos_raw": "VC", "task": "WSD"}"#;
        assert!(matches!(load_instances(bad.as_bytes()), Err(Error::Validation(_))));
    }

    proptest! {
        #[test]
        fn markers_are_removable((s, a, b) in "[\u{4e00}-\u{4e40}a-z]{1,20}".prop_flat_map(|s| {
            let n = s.chars().count();
            (Just(s), 0..n).prop_flat_map(move |(s, a)| (Just(s), Just(a), a + 1..=n))
        })) {
            let marked = mark_target(&s, a, b).unwrap();
            prop_assert_eq!(marked.chars().filter(|c| *c == '〈').count(), 1);
            prop_assert_eq!(marked.chars().filter(|c| *c == '〉').count(), 1);
            let stripped: String = marked.chars().filter(|c| *c != '〈' && *c != '〉').collect();
            prop_assert_eq!(stripped, s);
        }

        #[test]
        fn builds_are_deterministic(seed in any::<u64>(), mode in prop::bool::ANY) {
            let inv = inv();
            let mode = if mode { WsdMode::PosGuided } else { WsdMode::AllSenses };
            let inst = wsd("他在跑", 2, "跑", "VA", Some("v1"));
            let a = build_wsd_pairs(&inst, &inv, mode, seed).unwrap();
            let b = build_wsd_pairs(&inst, &inv, mode, seed).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.pairs.iter().filter(|p| p.label).count() <= 1);
        }
    }
}
