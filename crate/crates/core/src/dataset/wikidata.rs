//! Wikidata lookups: a fixture-backed client for tests and offline runs,
//! and a live client for the public API.

use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::io::BufRead;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::jsonl;

pub const ENDPOINT_ENV: &str = "LEXIDOT_WIKIDATA_ENDPOINT";
pub const DEFAULT_ENDPOINT: &str = "https://www.wikidata.org/w/api.php";
/// Upper bound on instance_of/subclass_of hops when collecting categories.
pub const MAX_CATEGORY_HOPS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WikidataEntry {
    pub qid: String,
    pub label: String,
    /// Category labels, breadth-first from instance_of.
    #[serde(default)]
    pub categories: Vec<String>,
}

pub trait WikidataClient: Sync {
    /// All entries whose label is exactly `word`. An empty list means the
    /// word has no entry; transport failures are errors.
    fn lookup(&self, word: &str) -> Result<Vec<WikidataEntry>>;
}

#[derive(Debug, Deserialize)]
struct FixtureRecord {
    word: String,
    #[serde(default)]
    entries: Vec<WikidataEntry>,
}

/// Lookups answered from a JSONL file of `{"word", "entries"}` records.
#[derive(Debug, Clone, Default)]
pub struct FixtureClient {
    words: HashMap<String, Vec<WikidataEntry>>,
}

impl FixtureClient {
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut client = Self::default();
        for (line, rec) in jsonl::read_records::<FixtureRecord, _>(reader)? {
            client
                .insert(rec.word, rec.entries)
                .map_err(|e| Error::Validation(format!("line {line}: {e}")))?;
        }
        Ok(client)
    }

    pub fn insert(&mut self, word: String, entries: Vec<WikidataEntry>) -> Result<()> {
        let mut qids = HashSet::new();
        for e in &entries {
            if e.qid.is_empty() {
                return Err(Error::Validation(format!("empty qid for {word}")));
            }
            if !qids.insert(e.qid.as_str()) {
                return Err(Error::Validation(format!("duplicate qid {} for {word}", e.qid)));
            }
        }
        if self.words.insert(word.clone(), entries).is_some() {
            return Err(Error::Validation(format!("duplicate word {word}")));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl WikidataClient for FixtureClient {
    fn lookup(&self, word: &str) -> Result<Vec<WikidataEntry>> {
        Ok(self.words.get(word).cloned().unwrap_or_default())
    }
}

/// Talks to a MediaWiki API endpoint. Requests are serialized and spaced by
/// `min_interval`.
pub struct LiveClient {
    endpoint: String,
    agent: ureq::Agent,
    languages: Vec<String>,
    min_interval: Duration,
    last: Mutex<Option<Instant>>,
}

impl LiveClient {
    pub fn new(endpoint: impl Into<String>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(30)))
            .user_agent("lexidot/0.1")
            .build()
            .into();
        Self {
            endpoint: endpoint.into(),
            agent,
            languages: vec!["zh-tw".into(), "zh-hant".into(), "zh".into()],
            min_interval: Duration::from_millis(200),
            last: Mutex::new(None),
        }
    }

    /// Endpoint from `LEXIDOT_WIKIDATA_ENDPOINT`, else the public API.
    pub fn from_env() -> Self {
        Self::new(std::env::var(ENDPOINT_ENV).unwrap_or_else(|_| DEFAULT_ENDPOINT.to_string()))
    }

    pub fn with_min_interval(mut self, d: Duration) -> Self {
        self.min_interval = d;
        self
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn get(&self, params: &[(&str, &str)]) -> Result<Value> {
        // Holding the lock across the call keeps requests strictly serial.
        let mut last = self.last.lock().unwrap_or_else(|p| p.into_inner());
        if let Some(t) = *last {
            let wait = self.min_interval.saturating_sub(t.elapsed());
            if !wait.is_zero() {
                std::thread::sleep(wait);
            }
        }
        let mut req = self.agent.get(&self.endpoint).query("format", "json");
        for (k, v) in params {
            req = req.query(*k, *v);
        }
        let result = req.call();
        *last = Some(Instant::now());
        let mut resp = result.map_err(|e| Error::Transport(format!("{}: {e}", self.endpoint)))?;
        let body = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport(format!("{}: {e}", self.endpoint)))?;
        let v: Value = serde_json::from_str(&body)
            .map_err(|e| Error::Transport(format!("{}: malformed response: {e}", self.endpoint)))?;
        if let Some(err) = v.get("error") {
            return Err(Error::Transport(format!("{}: api error {err}", self.endpoint)));
        }
        Ok(v)
    }

    fn label_of(&self, entity: &Value) -> Option<String> {
        let labels = entity.get("labels")?;
        self.languages
            .iter()
            .map(String::as_str)
            .chain(["en"])
            .find_map(|l| labels.get(l)?.get("value")?.as_str())
            .map(String::from)
    }

    fn fetch(&self, ids: &[String], languages: &str) -> Result<BTreeMap<String, Value>> {
        let mut out = BTreeMap::new();
        // The API caps ids per call at 50.
        for chunk in ids.chunks(50) {
            let joined = chunk.join("|");
            let v = self.get(&[
                ("action", "wbgetentities"),
                ("ids", &joined),
                ("props", "labels|claims"),
                ("languages", languages),
            ])?;
            if let Some(ents) = v.get("entities").and_then(Value::as_object) {
                for (id, ent) in ents {
                    out.insert(id.clone(), ent.clone());
                }
            }
        }
        Ok(out)
    }

    /// English category labels reachable from `entity` via P31 then P279.
    fn categories(&self, entity: &Value) -> Result<Vec<String>> {
        let mut seen: HashSet<String> = HashSet::new();
        let mut frontier: VecDeque<String> = claim_targets(entity, "P31").into_iter().collect();
        frontier.retain(|q| seen.insert(q.clone()));
        let mut out = Vec::new();
        for _hop in 0..MAX_CATEGORY_HOPS {
            if frontier.is_empty() {
                break;
            }
            let ids: Vec<String> = frontier.drain(..).collect();
            let fetched = self.fetch(&ids, "en")?;
            for id in &ids {
                let Some(ent) = fetched.get(id) else { continue };
                if let Some(l) = ent.pointer("/labels/en/value").and_then(Value::as_str) {
                    out.push(l.to_string());
                }
                for parent in claim_targets(ent, "P279") {
                    if seen.insert(parent.clone()) {
                        frontier.push_back(parent);
                    }
                }
            }
        }
        Ok(out)
    }
}

fn claim_targets(entity: &Value, prop: &str) -> Vec<String> {
    entity
        .pointer(&format!("/claims/{prop}"))
        .and_then(Value::as_array)
        .map(|claims| {
            claims
                .iter()
                .filter_map(|c| c.pointer("/mainsnak/datavalue/value/id").and_then(Value::as_str))
                .map(String::from)
                .collect()
        })
        .unwrap_or_default()
}

impl WikidataClient for LiveClient {
    fn lookup(&self, word: &str) -> Result<Vec<WikidataEntry>> {
        let search = self.get(&[
            ("action", "wbsearchentities"),
            ("search", word),
            ("language", "zh"),
            ("uselang", "zh"),
            ("type", "item"),
            ("limit", "20"),
        ])?;
        let ids: Vec<String> = search
            .get("search")
            .and_then(Value::as_array)
            .map(|hits| {
                hits.iter()
                    .filter(|h| h.pointer("/match/text").and_then(Value::as_str) == Some(word))
                    .filter_map(|h| h.get("id").and_then(Value::as_str).map(String::from))
                    .collect()
            })
            .unwrap_or_default();
        if ids.is_empty() {
            return Ok(Vec::new());
        }
        let langs = self.languages.join("|") + "|en";
        let entities = self.fetch(&ids, &langs)?;
        let mut out = Vec::new();
        for id in ids {
            let Some(ent) = entities.get(&id) else { continue };
            out.push(WikidataEntry {
                label: self.label_of(ent).unwrap_or_else(|| word.to_string()),
                categories: self.categories(ent)?,
                qid: id,
            });
        }
        Ok(out)
    }
}

/// One word after entry lookup.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedWord {
    pub word: String,
    /// Corpus surface the word came from.
    pub source: String,
    pub entry: WikidataEntry,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolveStats {
    pub input: usize,
    pub dropped: usize,
    pub extra_splits: usize,
    pub output: usize,
}

/// No entry drops the word; one entry keeps it; several entries split it
/// into one word per entry named by the entry label.
pub fn resolve_wikidata(word: &str, client: &dyn WikidataClient) -> Result<Vec<ResolvedWord>> {
    let entries = client.lookup(word)?;
    if entries.len() == 1 {
        let entry = entries.into_iter().next().expect("one entry");
        return Ok(vec![ResolvedWord {
            word: word.to_string(),
            source: word.to_string(),
            entry,
        }]);
    }
    let mut used: HashSet<String> = HashSet::new();
    Ok(entries
        .into_iter()
        .map(|entry| {
            let base = if entry.label.is_empty() { word.to_string() } else { entry.label.clone() };
            let name = if used.contains(&base) {
                format!("{base}({})", entry.qid)
            } else {
                base
            };
            used.insert(name.clone());
            ResolvedWord {
                word: name,
                source: word.to_string(),
                entry,
            }
        })
        .collect())
}

/// Resolves every word, keeping input order, and tallies drops and splits.
pub fn resolve_all(words: &[String], client: &dyn WikidataClient) -> Result<(Vec<ResolvedWord>, ResolveStats)> {
    let mut out = Vec::new();
    let mut stats = ResolveStats {
        input: words.len(),
        ..Default::default()
    };
    for w in words {
        let r = resolve_wikidata(w, client)?;
        match r.len() {
            0 => {
                log::info!("dropped {w}: no wikidata entry");
                stats.dropped += 1;
            }
            n => stats.extra_splits += n - 1,
        }
        out.extend(r);
    }
    stats.output = out.len();
    Ok((out, stats))
}
