//! The enumerated sense inventory for common words.

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::jsonl;
use crate::pos::{PosCategory, PosMap};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sense {
    pub sense_id: String,
    pub lemma: String,
    pub pos_raw: String,
    pub pos: PosCategory,
    pub gloss: String,
    pub examples: Vec<String>,
}

/// On-disk shape of one inventory line.
#[derive(Debug, Serialize, Deserialize)]
struct SenseRecord {
    sense_id: String,
    lemma: String,
    pos_raw: String,
    #[serde(default)]
    gloss: Option<String>,
    #[serde(default)]
    examples: Vec<String>,
}

/// Lemma to senses, with each lemma's senses kept in file order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SenseInventory {
    lemmas: BTreeMap<String, Vec<Sense>>,
    index: HashMap<String, (String, usize)>,
}

fn nfc(s: &str) -> String {
    s.nfc().collect()
}

impl SenseInventory {
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        Self::load_with(reader, &PosMap::builtin())
    }

    pub fn load_with<R: BufRead>(reader: R, pos_map: &PosMap) -> Result<Self> {
        let mut inv = SenseInventory::default();
        for (line, rec) in jsonl::read_records::<SenseRecord, _>(reader)? {
            let gloss = rec.gloss.map(|g| nfc(g.trim())).unwrap_or_default();
            let sense = Sense {
                sense_id: rec.sense_id,
                lemma: nfc(&rec.lemma),
                pos: pos_map.simplify(&rec.pos_raw),
                pos_raw: rec.pos_raw,
                gloss,
                examples: rec.examples.iter().map(|e| nfc(e)).collect(),
            };
            inv.insert(sense)
                .map_err(|e| Error::Validation(format!("line {line}: {e}")))?;
        }
        Ok(inv)
    }

    /// Adds a sense at the end of its lemma's list.
    pub fn insert(&mut self, sense: Sense) -> Result<()> {
        if sense.sense_id.is_empty() {
            return Err(Error::Validation("empty sense_id".into()));
        }
        if sense.lemma.is_empty() {
            return Err(Error::Validation(format!("sense {}: empty lemma", sense.sense_id)));
        }
        if sense.gloss.trim().is_empty() {
            return Err(Error::Validation(format!("sense {}: missing gloss", sense.sense_id)));
        }
        if self.index.contains_key(&sense.sense_id) {
            return Err(Error::Validation(format!("duplicate sense_id {}", sense.sense_id)));
        }
        let senses = self.lemmas.entry(sense.lemma.clone()).or_default();
        self.index
            .insert(sense.sense_id.clone(), (sense.lemma.clone(), senses.len()));
        senses.push(sense);
        Ok(())
    }

    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let records: Vec<SenseRecord> = self
            .senses()
            .map(|s| SenseRecord {
                sense_id: s.sense_id.clone(),
                lemma: s.lemma.clone(),
                pos_raw: s.pos_raw.clone(),
                gloss: Some(s.gloss.clone()),
                examples: s.examples.clone(),
            })
            .collect();
        jsonl::write_records(writer, &records)
    }

    pub fn senses_of(&self, lemma: &str) -> Option<&[Sense]> {
        self.lemmas
            .get(lemma)
            .or_else(|| self.lemmas.get(&nfc(lemma)))
            .map(Vec::as_slice)
    }

    pub fn sense(&self, sense_id: &str) -> Option<&Sense> {
        let (lemma, idx) = self.index.get(sense_id)?;
        self.lemmas.get(lemma).map(|v| &v[*idx])
    }

    /// Position of a sense within its lemma's list.
    pub fn rank_of(&self, sense_id: &str) -> Option<usize> {
        self.index.get(sense_id).map(|(_, i)| *i)
    }

    pub fn senses(&self) -> impl Iterator<Item = &Sense> {
        self.lemmas.values().flatten()
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &str> {
        self.lemmas.keys().map(String::as_str)
    }

    pub fn lemma_count(&self) -> usize {
        self.lemmas.len()
    }

    pub fn sense_count(&self) -> usize {
        self.index.len()
    }

    pub fn contains(&self, lemma: &str) -> bool {
        self.senses_of(lemma).is_some()
    }

    /// Senses of `lemma`, optionally restricted to one POS category. Order is
    /// always the inventory order.
    pub fn candidates_for(&self, lemma: &str, pos_filter: Option<PosCategory>) -> Result<Vec<&Sense>> {
        let senses = self
            .senses_of(lemma)
            .ok_or_else(|| Error::UnknownLemma(lemma.to_string()))?;
        Ok(senses
            .iter()
            .filter(|s| pos_filter.is_none_or(|p| s.pos == p))
            .collect())
    }
}
