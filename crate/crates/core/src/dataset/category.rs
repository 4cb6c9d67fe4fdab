//! Wikidata category to dot object mapping.

use std::collections::HashMap;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::dot::DotObject;
use crate::error::{Error, Result};
use crate::jsonl;

use super::wikidata::WikidataEntry;

const BUILTIN: &[(&str, &str)] = &[
    ("work of art", "Info.Phy"),
    ("human-geographic territorial entity", "Loc.Org"),
    ("government agency", "Loc.Org"),
    ("industrial zone", "Loc.Org"),
    ("intergovernmental organization", "Loc.Org"),
    ("court", "Loc.Org"),
    ("Chinese temple", "Loc.Org"),
    ("museum", "Loc.Org"),
    ("political party", "Org.Hum"),
    ("military unit", "Org.Hum"),
    ("sports organization", "Org.Hum"),
    ("religious organization", "Org.Hum"),
    ("religious identity", "Org.Hum"),
    ("mass media", "Org.Info.Phy.Hum"),
    ("university", "Org.Loc.Hum"),
    ("educational institution", "Org.Loc.Hum"),
    ("organization", "Org.Loc.Hum"),
    ("hospital", "Org.Loc.Hum"),
    ("award", "Phy.Evt.Hum"),
    ("business", "Prcr.Prct.Loc"),
];

#[derive(Debug, Serialize, Deserialize)]
struct CategoryRecord {
    category: String,
    dot_object: String,
}

/// Category names compare case-insensitively after trimming.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryMap {
    map: HashMap<String, DotObject>,
    order: Vec<String>,
}

fn key(category: &str) -> String {
    category.trim().to_lowercase()
}

impl CategoryMap {
    pub fn empty() -> Self {
        Self {
            map: HashMap::new(),
            order: Vec::new(),
        }
    }

    pub fn builtin() -> Self {
        let mut m = Self::empty();
        for (c, d) in BUILTIN {
            m.insert(c, d.parse().expect("builtin dot object")).expect("builtin category");
        }
        m
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut m = Self::empty();
        for (line, rec) in jsonl::read_records::<CategoryRecord, _>(reader)? {
            rec.dot_object
                .parse()
                .and_then(|d| m.insert(&rec.category, d))
                .map_err(|e| Error::Validation(format!("line {line}: {e}")))?;
        }
        Ok(m)
    }

    pub fn insert(&mut self, category: &str, dot: DotObject) -> Result<()> {
        let k = key(category);
        if k.is_empty() {
            return Err(Error::Validation("empty category".into()));
        }
        if self.map.insert(k, dot).is_some() {
            return Err(Error::Validation(format!("duplicate category {category}")));
        }
        self.order.push(category.trim().to_string());
        Ok(())
    }

    pub fn get(&self, category: &str) -> Option<&DotObject> {
        self.map.get(&key(category))
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Categories in insertion order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &DotObject)> {
        self.order.iter().map(|c| (c.as_str(), &self.map[&key(c)]))
    }
}

/// The first category of `entry` that the map knows, with its dot object.
/// `None` means the entry is unmapped.
pub fn map_category_to_dot<'m>(entry: &WikidataEntry, map: &'m CategoryMap) -> Option<(&'m DotObject, String)> {
    entry
        .categories
        .iter()
        .find_map(|c| map.get(c).map(|d| (d, c.clone())))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(cats: &[&str]) -> WikidataEntry {
        WikidataEntry {
            qid: "Q1".into(),
            label: "x".into(),
            categories: cats.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn builtin_targets_are_canonical() {
        let m = CategoryMap::builtin();
        assert_eq!(m.len(), BUILTIN.len());
        let canon = DotObject::canonical();
        for (_, d) in m.iter() {
            assert!(canon.contains(d));
        }
        // every canonical dot object has at least one category
        for d in &canon {
            assert!(m.iter().any(|(_, x)| x == d), "{d}");
        }
    }

    #[test]
    fn first_match_wins() {
        let m = CategoryMap::builtin();
        let (d, c) = map_category_to_dot(&entry(&["asteroid", "business", "organization"]), &m).unwrap();
        assert_eq!(d.name(), "Prcr.Prct.Loc");
        assert_eq!(c, "business");
        assert_eq!(map_category_to_dot(&entry(&["Mass Media"]), &m).unwrap().0.name(), "Org.Info.Phy.Hum");
        assert!(map_category_to_dot(&entry(&["asteroid"]), &m).is_none());
        assert!(map_category_to_dot(&entry(&[]), &m).is_none());
    }

    #[test]
    fn file_rejects_non_canonical_targets() {
        let ok = r#"{"category": "city", "dot_object": "Loc.Org"}"#;
        assert_eq!(CategoryMap::load(ok.as_bytes()).unwrap().len(), 1);
        let bad = r#"{"category": "city", "dot_object": "Loc.Hum"}"#;
        assert!(CategoryMap::load(bad.as_bytes()).is_err());
    }
}
