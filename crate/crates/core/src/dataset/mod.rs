//! From an entity-tagged corpus to a proper-noun dataset: entity-type and
//! frequency filtering, Wikidata resolution, dot-object assignment, sentence
//! sampling, and train/test splitting.

pub mod category;
pub mod wikidata;

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use rand::seq::{index, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dot::{DotRegistry, TypeClass};
use crate::error::{Error, Result};
use crate::inventory::SenseInventory;
use crate::jsonl;
use crate::pairs::{Task, TestInstance};
use crate::seed;

pub use category::{map_category_to_dot, CategoryMap};
pub use wikidata::{
    resolve_all, resolve_wikidata, FixtureClient, LiveClient, ResolveStats, ResolvedWord, WikidataClient,
    WikidataEntry,
};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum EntityType {
    Gpe,
    Org,
    Loc,
    Product,
    WorkOfArt,
    Other(String),
}

impl EntityType {
    /// The types kept by [`filter_entity_types`].
    pub const RELEVANT: [EntityType; 5] = [
        EntityType::Gpe,
        EntityType::Org,
        EntityType::Loc,
        EntityType::Product,
        EntityType::WorkOfArt,
    ];

    pub fn is_relevant(&self) -> bool {
        !matches!(self, EntityType::Other(_))
    }

    pub fn as_str(&self) -> &str {
        match self {
            EntityType::Gpe => "GPE",
            EntityType::Org => "ORG",
            EntityType::Loc => "LOC",
            EntityType::Product => "PRODUCT",
            EntityType::WorkOfArt => "WORK_OF_ART",
            EntityType::Other(s) => s,
        }
    }
}

impl FromStr for EntityType {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "GPE" => EntityType::Gpe,
            "ORG" => EntityType::Org,
            "LOC" => EntityType::Loc,
            "PRODUCT" => EntityType::Product,
            "WORK_OF_ART" => EntityType::WorkOfArt,
            _ => EntityType::Other(s.trim().to_string()),
        })
    }
}

impl From<String> for EntityType {
    fn from(s: String) -> Self {
        s.parse().expect("infallible")
    }
}

impl From<EntityType> for String {
    fn from(t: EntityType) -> Self {
        t.as_str().to_string()
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A tagged span. `sentence` indexes into the owning [`Corpus`]; offsets are
/// characters, end exclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityMention {
    pub surface: String,
    pub entity_type: EntityType,
    pub sentence: usize,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Deserialize)]
struct MentionRecord {
    surface: String,
    #[serde(rename = "type")]
    entity_type: EntityType,
    start: usize,
    end: usize,
}

#[derive(Debug, Deserialize)]
struct SentenceRecord {
    sentence: String,
    #[serde(default)]
    mentions: Vec<MentionRecord>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<String>,
    pub mentions: Vec<EntityMention>,
}

impl Corpus {
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut corpus = Corpus::default();
        for (line, rec) in jsonl::read_records::<SentenceRecord, _>(reader)? {
            let idx = corpus.sentences.len();
            corpus.sentences.push(rec.sentence);
            for m in rec.mentions {
                let mention = EntityMention {
                    surface: m.surface,
                    entity_type: m.entity_type,
                    sentence: idx,
                    start: m.start,
                    end: m.end,
                };
                corpus
                    .check(&mention)
                    .map_err(|e| Error::Validation(format!("line {line}: {e}")))?;
                corpus.mentions.push(mention);
            }
        }
        Ok(corpus)
    }

    fn check(&self, m: &EntityMention) -> Result<()> {
        let sentence = self
            .sentences
            .get(m.sentence)
            .ok_or_else(|| Error::Validation(format!("no sentence {}", m.sentence)))?;
        let len = sentence.chars().count();
        if m.start >= m.end || m.end > len {
            return Err(Error::Span {
                start: m.start,
                end: m.end,
                len,
            });
        }
        let covered: String = sentence.chars().skip(m.start).take(m.end - m.start).collect();
        if covered != m.surface {
            return Err(Error::Validation(format!(
                "span covers `{covered}` but surface is `{}`",
                m.surface
            )));
        }
        Ok(())
    }

    pub fn push(&mut self, sentence: impl Into<String>, mentions: &[(&str, EntityType, usize, usize)]) -> Result<()> {
        let idx = self.sentences.len();
        self.sentences.push(sentence.into());
        for (surface, t, start, end) in mentions {
            let m = EntityMention {
                surface: surface.to_string(),
                entity_type: t.clone(),
                sentence: idx,
                start: *start,
                end: *end,
            };
            self.check(&m)?;
            self.mentions.push(m);
        }
        Ok(())
    }
}

/// Keeps GPE, ORG, LOC, PRODUCT, and WORK_OF_ART mentions.
pub fn filter_entity_types(mentions: &[EntityMention]) -> Vec<EntityMention> {
    mentions.iter().filter(|m| m.entity_type.is_relevant()).cloned().collect()
}

/// Word types at or above the `percentile` frequency cut.
///
/// The cut is the frequency of the `ceil((1 - percentile) * n)`-th most
/// frequent type (at least one), and every type tied with it is kept. Output
/// is ordered by descending frequency, then by word.
pub fn frequency_percentile_filter(counts: &BTreeMap<String, u64>, percentile: f64) -> Result<Vec<String>> {
    if counts.is_empty() {
        return Err(Error::InvalidArgument("no word types to filter".into()));
    }
    if !(percentile > 0.0 && percentile < 1.0) {
        return Err(Error::InvalidArgument(format!("percentile {percentile} is outside (0, 1)")));
    }
    let n = counts.len();
    let keep = (((1.0 - percentile) * n as f64) - 1e-9).ceil().max(1.0) as usize;
    let mut sorted: Vec<(&String, u64)> = counts.iter().map(|(w, &c)| (w, c)).collect();
    sorted.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    let threshold = sorted[keep.min(n) - 1].1;
    Ok(sorted
        .into_iter()
        .take_while(|(_, c)| *c >= threshold)
        .map(|(w, _)| w.clone())
        .collect())
}

/// Surface frequencies per entity type.
pub fn type_frequencies(mentions: &[EntityMention]) -> BTreeMap<EntityType, BTreeMap<String, u64>> {
    let mut out: BTreeMap<EntityType, BTreeMap<String, u64>> = BTreeMap::new();
    for m in mentions {
        *out.entry(m.entity_type.clone())
            .or_default()
            .entry(m.surface.clone())
            .or_default() += 1;
    }
    out
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeStage {
    pub mentions: usize,
    pub word_types: usize,
    pub survivors: usize,
}

/// Applies the frequency cut within each entity type and returns the union of
/// survivors in first-seen order, with per-type tallies.
pub fn select_words(
    mentions: &[EntityMention],
    percentile: f64,
) -> Result<(Vec<String>, BTreeMap<String, TypeStage>)> {
    let mut words = Vec::new();
    let mut seen = HashSet::new();
    let mut stages = BTreeMap::new();
    for (t, counts) in type_frequencies(mentions) {
        let kept = frequency_percentile_filter(&counts, percentile)?;
        stages.insert(
            t.to_string(),
            TypeStage {
                mentions: counts.values().sum::<u64>() as usize,
                word_types: counts.len(),
                survivors: kept.len(),
            },
        );
        for w in kept {
            if seen.insert(w.clone()) {
                words.push(w);
            }
        }
    }
    Ok((words, stages))
}

/// Relevant-type mention positions by surface, in corpus order.
pub struct OccurrenceIndex<'c> {
    corpus: &'c Corpus,
    by_word: HashMap<&'c str, Vec<(usize, usize, usize)>>,
}

impl<'c> OccurrenceIndex<'c> {
    pub fn new(corpus: &'c Corpus) -> Self {
        let mut by_word: HashMap<&str, Vec<(usize, usize, usize)>> = HashMap::new();
        for m in corpus.mentions.iter().filter(|m| m.entity_type.is_relevant()) {
            by_word
                .entry(m.surface.as_str())
                .or_default()
                .push((m.sentence, m.start, m.end));
        }
        for occ in by_word.values_mut() {
            occ.sort_unstable();
            occ.dedup();
        }
        Self { corpus, by_word }
    }

    pub fn count(&self, word: &str) -> usize {
        self.by_word.get(word).map_or(0, Vec::len)
    }

    /// Up to `n` occurrences of `word`, drawn without replacement and
    /// returned in corpus order. A sentence mentioning the word twice yields
    /// two instances.
    pub fn sample(&self, word: &str, n: usize, seed: u64) -> Vec<TestInstance> {
        let Some(occ) = self.by_word.get(word) else {
            log::warn!("no occurrences of {word}");
            return Vec::new();
        };
        let picked: Vec<usize> = if occ.len() <= n {
            (0..occ.len()).collect()
        } else {
            let mut rng = seed::rng(seed, &format!("sample\x1f{word}"));
            let mut v = index::sample(&mut rng, occ.len(), n).into_vec();
            v.sort_unstable();
            v
        };
        picked
            .into_iter()
            .map(|i| {
                let (s, start, end) = occ[i];
                TestInstance {
                    id: format!("{word}#{s}:{start}"),
                    sentence: self.corpus.sentences[s].clone(),
                    start,
                    end,
                    lemma: word.to_string(),
                    pos_raw: "Nb".into(),
                    gold: None,
                    task: Task::Rp,
                }
            })
            .collect()
    }
}

pub fn sample_sentences(corpus: &Corpus, word: &str, n: usize, seed: u64) -> Vec<TestInstance> {
    OccurrenceIndex::new(corpus).sample(word, n, seed)
}

/// Splits into (train, test), stratified by lemma.
///
/// The test side gets `round(len * test_fraction)` instances. Each lemma
/// receives the floor of its proportional share and leftover slots go to the
/// largest remainders. Both halves keep input order.
pub fn split_dataset(
    instances: &[TestInstance],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<TestInstance>, Vec<TestInstance>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!("test fraction {test_fraction} is outside (0, 1)")));
    }
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, inst) in instances.iter().enumerate() {
        groups.entry(&inst.lemma).or_default().push(i);
    }
    let target = (instances.len() as f64 * test_fraction).round() as usize;
    let mut quota: Vec<(&str, usize, f64)> = groups
        .iter()
        .map(|(l, idx)| {
            let exact = idx.len() as f64 * test_fraction;
            (*l, exact.floor() as usize, exact - exact.floor())
        })
        .collect();
    let mut remaining = target.saturating_sub(quota.iter().map(|q| q.1).sum());
    let mut order: Vec<usize> = (0..quota.len()).collect();
    order.sort_by(|&a, &b| {
        quota[b]
            .2
            .total_cmp(&quota[a].2)
            .then_with(|| seed::derive(seed, quota[a].0).cmp(&seed::derive(seed, quota[b].0)))
    });
    for &i in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        if quota[i].1 < groups[quota[i].0].len() {
            quota[i].1 += 1;
            remaining -= 1;
        }
    }
    let mut test_set = HashSet::new();
    for (lemma, k, _) in &quota {
        let mut idx = groups[lemma].clone();
        idx.shuffle(&mut seed::rng(seed, &format!("split\x1f{lemma}")));
        test_set.extend(idx.into_iter().take(*k));
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (i, inst) in instances.iter().enumerate() {
        if test_set.contains(&i) {
            test.push(inst.clone());
        } else {
            train.push(inst.clone());
        }
    }
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub id: String,
    pub label: String,
}

/// Attaches gold labels after checking each one against the instance's
/// candidates: a sense id of the lemma for WSD, a class of the lemma's dot
/// object for RP. Returns how many instances were labelled.
pub fn import_labels(
    instances: &mut [TestInstance],
    labels: &[LabelRecord],
    inventory: Option<&SenseInventory>,
    registry: Option<&DotRegistry>,
) -> Result<usize> {
    let by_id: HashMap<String, usize> = instances.iter().enumerate().map(|(i, x)| (x.id.clone(), i)).collect();
    let mut done = HashSet::new();
    for rec in labels {
        let &i = by_id
            .get(&rec.id)
            .ok_or_else(|| Error::Validation(format!("label for unknown instance {}", rec.id)))?;
        if !done.insert(i) {
            return Err(Error::Validation(format!("instance {} labelled twice", rec.id)));
        }
        let inst = &mut instances[i];
        let label = match inst.task {
            Task::Rp => {
                let reg = registry.ok_or_else(|| Error::InvalidArgument("RP labels need a registry".into()))?;
                let class: TypeClass = rec.label.parse()?;
                if !reg.dot_candidates(&inst.lemma)?.contains(&class) {
                    return Err(Error::Validation(format!(
                        "{}: {} is not a facet of {}",
                        rec.id,
                        class,
                        reg.get(&inst.lemma).expect("checked").dot_object
                    )));
                }
                class.name().to_string()
            }
            Task::Wsd => {
                let inv = inventory.ok_or_else(|| Error::InvalidArgument("WSD labels need an inventory".into()))?;
                let senses = inv
                    .senses_of(&inst.lemma)
                    .ok_or_else(|| Error::UnknownLemma(inst.lemma.clone()))?;
                if !senses.iter().any(|s| s.sense_id == rec.label) {
                    return Err(Error::Validation(format!(
                        "{}: {} is not a sense of {}",
                        rec.id, rec.label, inst.lemma
                    )));
                }
                rec.label.clone()
            }
        };
        inst.gold = Some(label);
    }
    Ok(done.len())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BuildConfig {
    pub percentile: f64,
    pub sample_size: usize,
    pub test_fraction: f64,
    pub seed: u64,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            percentile: 0.99,
            sample_size: 30,
            test_fraction: 0.2,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub sentences: usize,
    pub mentions_extracted: usize,
    pub mentions_filtered: usize,
    pub percentile_survivors: usize,
    pub resolve: ResolveStats,
    /// Resolved words whose name repeated an earlier one.
    pub duplicates_merged: usize,
    pub mapped: usize,
    pub unmapped: usize,
    pub per_dot_object: BTreeMap<String, usize>,
    pub instances: usize,
    pub words_without_sentences: usize,
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: u32,
    pub config: BuildConfig,
    pub stages: StageCounts,
    pub per_entity_type: BTreeMap<String, TypeStage>,
    pub dropped_words: Vec<String>,
    pub unmapped_words: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct DatasetBuild {
    pub registry: DotRegistry,
    pub train: Vec<TestInstance>,
    pub test: Vec<TestInstance>,
    pub manifest: Manifest,
}

fn at_stage(stage: &str, e: Error) -> Error {
    match e {
        Error::Transport(m) => Error::Transport(format!("{stage}: {m}")),
        Error::Validation(m) => Error::Validation(format!("{stage}: {m}")),
        Error::InvalidArgument(m) => Error::InvalidArgument(format!("{stage}: {m}")),
        other => other,
    }
}

/// Runs the whole pipeline. An empty corpus yields empty outputs.
pub fn build_dataset(
    corpus: &Corpus,
    client: &dyn WikidataClient,
    map: &CategoryMap,
    config: &BuildConfig,
) -> Result<DatasetBuild> {
    if !(config.test_fraction > 0.0 && config.test_fraction < 1.0) {
        return Err(at_stage("split", Error::InvalidArgument(format!("test fraction {}", config.test_fraction))));
    }
    let mut stages = StageCounts {
        sentences: corpus.sentences.len(),
        mentions_extracted: corpus.mentions.len(),
        ..Default::default()
    };
    let filtered = filter_entity_types(&corpus.mentions);
    stages.mentions_filtered = filtered.len();

    let (words, per_entity_type) = select_words(&filtered, config.percentile).map_err(|e| at_stage("select", e))?;
    stages.percentile_survivors = words.len();

    let results: Vec<Result<Vec<ResolvedWord>>> = words.par_iter().map(|w| resolve_wikidata(w, client)).collect();
    let mut resolved = Vec::new();
    let mut dropped_words = Vec::new();
    stages.resolve.input = words.len();
    for (w, r) in words.iter().zip(results) {
        let r = r.map_err(|e| at_stage("resolve", e))?;
        match r.len() {
            0 => {
                log::info!("dropped {w}: no wikidata entry");
                dropped_words.push(w.clone());
                stages.resolve.dropped += 1;
            }
            n => stages.resolve.extra_splits += n - 1,
        }
        resolved.extend(r);
    }
    stages.resolve.output = resolved.len();

    let mut registry = DotRegistry::default();
    let mut unmapped_words = Vec::new();
    let mut names = HashSet::new();
    for r in &resolved {
        if !names.insert(r.word.clone()) {
            stages.duplicates_merged += 1;
            continue;
        }
        match map_category_to_dot(&r.entry, map) {
            Some((dot, category)) => {
                registry
                    .insert(&r.word, dot.clone(), category)
                    .map_err(|e| at_stage("map", e))?;
                stages.mapped += 1;
                *stages.per_dot_object.entry(dot.name().to_string()).or_default() += 1;
            }
            None => {
                log::info!("unmapped {} ({}): no category matches", r.word, r.entry.qid);
                unmapped_words.push(r.word.clone());
                stages.unmapped += 1;
            }
        }
    }

    let index = OccurrenceIndex::new(corpus);
    let mut instances = Vec::new();
    for (word, _) in registry.entries() {
        let sample = index.sample(word, config.sample_size, config.seed);
        if sample.is_empty() {
            stages.words_without_sentences += 1;
        }
        instances.extend(sample);
    }
    stages.instances = instances.len();

    let (train, test) = if instances.is_empty() {
        (Vec::new(), Vec::new())
    } else {
        split_dataset(&instances, config.test_fraction, config.seed).map_err(|e| at_stage("split", e))?
    };
    stages.train = train.len();
    stages.test = test.len();

    Ok(DatasetBuild {
        registry,
        train,
        test,
        manifest: Manifest {
            format_version: crate::FORMAT_VERSION,
            config: *config,
            stages,
            per_entity_type,
            dropped_words,
            unmapped_words,
        },
    })
}

/// Distinct lemmas in a set of instances.
pub fn lemmas(instances: &[TestInstance]) -> BTreeSet<&str> {
    instances.iter().map(|i| i.lemma.as_str()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(v: &[(&str, u64)]) -> BTreeMap<String, u64> {
        v.iter().map(|(w, c)| (w.to_string(), *c)).collect()
    }

    #[test]
    fn entity_type_names() {
        assert_eq!("WORK-OF-ART".parse::<EntityType>().unwrap(), EntityType::WorkOfArt);
        assert_eq!("gpe".parse::<EntityType>().unwrap(), EntityType::Gpe);
        assert_eq!("PERSON".parse::<EntityType>().unwrap(), EntityType::Other("PERSON".into()));
    }

    #[test]
    fn filter_keeps_five_types() {
        let mut c = Corpus::default();
        c.push(
            "台北和高雄的王小明與李大華去過台南",
            &[
                ("台北", EntityType::Gpe, 0, 2),
                ("高雄", EntityType::Gpe, 3, 5),
                ("王小明", EntityType::Other("PERSON".into()), 6, 9),
                ("李大華", EntityType::Other("PERSON".into()), 10, 13),
                ("台南", EntityType::Gpe, 15, 17),
            ],
        )
        .unwrap();
        assert_eq!(filter_entity_types(&c.mentions).len(), 3);
        assert!(filter_entity_types(&[]).is_empty());
    }

    #[test]
    fn corpus_rejects_bad_spans() {
        let bad = r#"{"sentence": "台北很熱", "mentions": [{"surface": "台北", "type": "GPE", "start": 1, "end": 3}]}"#;
        assert!(Corpus::load(bad.as_bytes()).is_err());
        let ok = r#"{"sentence": "台北很熱", "mentions": [{"surface": "台北", "type": "GPE", "start": 0, "end": 2}]}"#;
        assert_eq!(Corpus::load(ok.as_bytes()).unwrap().mentions.len(), 1);
    }

    #[test]
    fn percentile_examples() {
        let c: BTreeMap<String, u64> = (1..=100).map(|i| (format!("w{i:03}"), i)).collect();
        assert_eq!(frequency_percentile_filter(&c, 0.99).unwrap(), ["w100"]);
        let flat = counts(&[("a", 5), ("b", 5), ("c", 5)]);
        assert_eq!(frequency_percentile_filter(&flat, 0.99).unwrap().len(), 3);
        let tie = counts(&[("a", 9), ("b", 9), ("c", 1), ("d", 1)]);
        assert_eq!(frequency_percentile_filter(&tie, 0.9).unwrap(), ["a", "b"]);
        assert!(frequency_percentile_filter(&BTreeMap::new(), 0.99).is_err());
        assert!(frequency_percentile_filter(&flat, 1.0).is_err());
    }

    fn occurrences(word: &str, n: usize) -> Corpus {
        let mut c = Corpus::default();
        for i in 0..n {
            let s = format!("{word}第{i}句");
            c.push(s, &[(word, EntityType::Org, 0, word.chars().count())]).unwrap();
        }
        c
    }

    #[test]
    fn sampling() {
        let c = occurrences("台積電", 100);
        let a = sample_sentences(&c, "台積電", 30, 7);
        assert_eq!(a.len(), 30);
        assert_eq!(a, sample_sentences(&c, "台積電", 30, 7));
        assert_ne!(a, sample_sentences(&c, "台積電", 30, 8));
        assert!(a.iter().all(|i| i.validate().is_ok() && i.task == Task::Rp));
        let ids: HashSet<_> = a.iter().map(|i| &i.id).collect();
        assert_eq!(ids.len(), 30);
        assert_eq!(sample_sentences(&occurrences("鴻海", 12), "鴻海", 30, 7).len(), 12);
        assert!(sample_sentences(&c, "鴻海", 30, 7).is_empty());
    }

    #[test]
    fn multi_target_sentence_yields_two_instances() {
        let mut c = Corpus::default();
        c.push("台北到台北", &[("台北", EntityType::Gpe, 0, 2), ("台北", EntityType::Gpe, 3, 5)])
            .unwrap();
        let got = sample_sentences(&c, "台北", 30, 0);
        assert_eq!(got.len(), 2);
        assert_eq!((got[0].start, got[1].start), (0, 3));
    }

    fn inst(lemma: &str, i: usize) -> TestInstance {
        TestInstance {
            id: format!("{lemma}{i}"),
            sentence: lemma.into(),
            start: 0,
            end: lemma.chars().count(),
            lemma: lemma.into(),
            pos_raw: "Nb".into(),
            gold: None,
            task: Task::Rp,
        }
    }

    #[test]
    fn split_examples() {
        let xs: Vec<_> = (0..10).map(|i| inst(&format!("詞{i}"), i)).collect();
        let (train, test) = split_dataset(&xs, 0.2, 1).unwrap();
        assert_eq!((train.len(), test.len()), (8, 2));
        assert_eq!(split_dataset(&xs, 0.2, 1).unwrap().1, test);
        assert!(split_dataset(&xs, 0.0, 1).is_err());
        assert!(split_dataset(&xs, 1.0, 1).is_err());
    }

    #[test]
    fn split_is_stratified() {
        let mut xs: Vec<_> = (0..50).map(|i| inst("甲", i)).collect();
        xs.extend((0..30).map(|i| inst("乙", i)));
        let (_, test) = split_dataset(&xs, 0.2, 3).unwrap();
        let a = test.iter().filter(|i| i.lemma == "甲").count();
        assert_eq!((a, test.len() - a), (10, 6));
    }

    proptest! {
        #[test]
        fn split_partitions(n in 1usize..80, lemmas in 1usize..6, frac in 0.05f64..0.95, seed: u64) {
            let xs: Vec<_> = (0..n).map(|i| inst(&format!("詞{}", i % lemmas), i)).collect();
            let (train, test) = split_dataset(&xs, frac, seed).unwrap();
            prop_assert_eq!(test.len(), (n as f64 * frac).round() as usize);
            let mut merged: Vec<_> = train.iter().chain(&test).map(|i| i.id.clone()).collect();
            merged.sort();
            let mut all: Vec<_> = xs.iter().map(|i| i.id.clone()).collect();
            all.sort();
            prop_assert_eq!(merged, all);
        }

        #[test]
        fn percentile_matches_sort_and_threshold(
            freqs in proptest::collection::vec(1u64..20, 1..60),
            p in 0.5f64..0.995,
        ) {
            let c: BTreeMap<String, u64> = freqs.iter().enumerate().map(|(i, f)| (format!("w{i}"), *f)).collect();
            let got: BTreeSet<String> = frequency_percentile_filter(&c, p).unwrap().into_iter().collect();
            let mut desc = freqs.clone();
            desc.sort_unstable_by(|a, b| b.cmp(a));
            let k = (((1.0 - p) * freqs.len() as f64) - 1e-9).ceil().max(1.0) as usize;
            let cut = desc[k - 1];
            let want: BTreeSet<String> = c.iter().filter(|(_, f)| **f >= cut).map(|(w, _)| w.clone()).collect();
            prop_assert_eq!(got, want);
        }
    }

    fn fixture_client() -> FixtureClient {
        let e = |q: &str, l: &str, cats: &[&str]| WikidataEntry {
            qid: q.into(),
            label: l.into(),
            categories: cats.iter().map(|s| s.to_string()).collect(),
        };
        let mut c = FixtureClient::default();
        c.insert("台積電".into(), vec![e("Q1", "台積電", &["business"])]).unwrap();
        c.insert("花蓮".into(), vec![e("Q2", "花蓮市", &["city", "human-geographic territorial entity"]), e("Q3", "花蓮縣", &["county"])])
            .unwrap();
        c
    }

    #[test]
    fn pipeline_counts() {
        let mut c = occurrences("台積電", 40);
        for i in 0..3 {
            c.push(format!("花蓮市{i}"), &[("花蓮市", EntityType::Gpe, 0, 3)]).unwrap();
            c.push(format!("花蓮{i}"), &[("花蓮", EntityType::Gpe, 0, 2)]).unwrap();
        }
        c.push("某某", &[("某某", EntityType::Other("PERSON".into()), 0, 2)]).unwrap();
        let cfg = BuildConfig {
            percentile: 0.5,
            ..Default::default()
        };
        let out = build_dataset(&c, &fixture_client(), &CategoryMap::builtin(), &cfg).unwrap();
        let s = &out.manifest.stages;
        assert_eq!(s.mentions_extracted, 47);
        assert_eq!(s.mentions_filtered, 46);
        // ORG: 台積電 only. GPE: 花蓮市 and 花蓮 tie at 3.
        assert_eq!(s.percentile_survivors, 3);
        assert_eq!(s.resolve, ResolveStats { input: 3, dropped: 1, extra_splits: 1, output: 3 });
        assert_eq!(out.manifest.dropped_words, ["花蓮市"]);
        assert_eq!((s.mapped, s.unmapped), (2, 1));
        assert_eq!(out.manifest.unmapped_words, ["花蓮縣"]);
        assert_eq!(s.instances, 33);
        assert_eq!((s.train, s.test), (26, 7));
        assert_eq!(out.registry.get("花蓮市").unwrap().dot_object.name(), "Loc.Org");
    }

    #[test]
    fn empty_corpus() {
        let out = build_dataset(&Corpus::default(), &fixture_client(), &CategoryMap::builtin(), &BuildConfig::default())
            .unwrap();
        assert!(out.train.is_empty() && out.test.is_empty() && out.registry.is_empty());
    }

    #[test]
    fn import_checks_candidates() {
        let mut reg = DotRegistry::default();
        reg.insert("哈佛", "Org.Loc.Hum".parse().unwrap(), "university".into()).unwrap();
        let mut xs = vec![inst("哈佛", 0), inst("哈佛", 1)];
        let ok = [LabelRecord { id: "哈佛0".into(), label: "Org".into() }];
        assert_eq!(import_labels(&mut xs, &ok, None, Some(&reg)).unwrap(), 1);
        assert_eq!(xs[0].gold.as_deref(), Some("Organization"));
        let bad = [LabelRecord { id: "哈佛1".into(), label: "Event".into() }];
        assert!(import_labels(&mut xs, &bad, None, Some(&reg)).is_err());
        let unknown = [LabelRecord { id: "x".into(), label: "Org".into() }];
        assert!(import_labels(&mut xs, &unknown, None, Some(&reg)).is_err());
    }
}
