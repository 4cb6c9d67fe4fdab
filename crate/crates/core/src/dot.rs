//! Type classes, dot objects, and the proper-noun registry.
//!
//! A dot object names the set of type classes a regularly polysemous proper
//! noun can realize, e.g. a coffee chain is a producer, a product, and a
//! location. Only seven dot objects are recognised; every registry entry must
//! resolve to one of them.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};
use crate::jsonl;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TypeClass {
    Physical,
    Organization,
    Producer,
    Product,
    Location,
    Event,
    Human,
    Information,
}

impl TypeClass {
    pub const ALL: [TypeClass; 8] = [
        TypeClass::Physical,
        TypeClass::Organization,
        TypeClass::Producer,
        TypeClass::Product,
        TypeClass::Location,
        TypeClass::Event,
        TypeClass::Human,
        TypeClass::Information,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TypeClass::Physical => "Physical",
            TypeClass::Organization => "Organization",
            TypeClass::Producer => "Producer",
            TypeClass::Product => "Product",
            TypeClass::Location => "Location",
            TypeClass::Event => "Event",
            TypeClass::Human => "Human",
            TypeClass::Information => "Information",
        }
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            TypeClass::Physical => "Phy",
            TypeClass::Organization => "Org",
            TypeClass::Producer => "Prcr",
            TypeClass::Product => "Prct",
            TypeClass::Location => "Loc",
            TypeClass::Event => "Evt",
            TypeClass::Human => "Hum",
            TypeClass::Information => "Info",
        }
    }

    fn index(self) -> usize {
        TypeClass::ALL.iter().position(|c| *c == self).unwrap()
    }

    /// Built-in Chinese label and glosses (Chinese and English).
    pub fn builtin_gloss(self) -> ClassGloss {
        let (label_zh, gloss_zh, gloss_en) = match self {
            TypeClass::Physical => ("有形的", "有具體形狀。", "tangible objects."),
            TypeClass::Organization => (
                "機構",
                "泛指機關團體或工作單位。",
                "general reference to administrative and functional structures.",
            ),
            TypeClass::Producer => (
                "作者;製造商",
                "創作詩歌、文章或其他藝術品的人;製造或出售各種物品的商家。",
                "creators of poetry, articles, or other artworks; business who produces or supplies goods or services.",
            ),
            TypeClass::Product => (
                "作品;產品",
                "文學藝術方面創作的成品;生產的物品。",
                "artistic creations; commodities that have been produced.",
            ),
            TypeClass::Location => ("地點", "所在的地方。", "positions or occupied sites."),
            TypeClass::Event => ("事件", "事情、事項。", "circumstances, incidents."),
            TypeClass::Human => ("人類", "人的總稱。", "general term of humanity."),
            TypeClass::Information => (
                "資訊",
                "泛指一般資料和訊息。",
                "general reference to data, knowledge, and messages.",
            ),
        };
        ClassGloss {
            label_zh: label_zh.into(),
            gloss_zh: gloss_zh.into(),
            gloss_en: gloss_en.into(),
        }
    }
}

impl fmt::Display for TypeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TypeClass {
    type Err = Error;

    /// Accepts the full name or the abbreviation, case-insensitively.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        TypeClass::ALL
            .into_iter()
            .find(|c| c.name().eq_ignore_ascii_case(s) || c.abbrev().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Validation(format!("unknown type class `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassGloss {
    pub label_zh: String,
    pub gloss_zh: String,
    pub gloss_en: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DotObject {
    name: String,
    classes: Vec<TypeClass>,
}

const CANONICAL: [&[TypeClass]; 7] = {
    use TypeClass::*;
    [
        &[Information, Physical],
        &[Location, Organization],
        &[Organization, Human],
        &[Organization, Information, Physical, Human],
        &[Organization, Location, Human],
        &[Physical, Event, Human],
        &[Producer, Product, Location],
    ]
};

impl DotObject {
    /// The seven recognised dot objects.
    pub fn canonical() -> Vec<DotObject> {
        CANONICAL.iter().map(|cs| DotObject::from_classes(cs)).collect()
    }

    fn from_classes(classes: &[TypeClass]) -> Self {
        let name = classes
            .iter()
            .map(|c| c.abbrev())
            .collect::<Vec<_>>()
            .join(".");
        DotObject {
            name,
            classes: classes.to_vec(),
        }
    }

    /// Builds a dot object from classes, which must match a canonical one.
    pub fn new(classes: &[TypeClass]) -> Result<Self> {
        if CANONICAL.contains(&classes) {
            Ok(Self::from_classes(classes))
        } else {
            Err(Error::Validation(format!(
                "{} is not a recognised dot object",
                Self::from_classes(classes).name
            )))
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn classes(&self) -> &[TypeClass] {
        &self.classes
    }

    pub fn contains(&self, class: TypeClass) -> bool {
        self.classes.contains(&class)
    }
}

impl FromStr for DotObject {
    type Err = Error;

    /// Parses `Prcr.Prct.Loc`, `Prcr*Prct*Loc`, or `producer.product.location`.
    fn from_str(s: &str) -> Result<Self> {
        let classes = s
            .split(['.', '*', '•'])
            .map(str::parse)
            .collect::<Result<Vec<TypeClass>>>()?;
        DotObject::new(&classes)
    }
}

impl fmt::Display for DotObject {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

impl Serialize for DotObject {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.name)
    }
}

impl<'de> Deserialize<'de> for DotObject {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub dot_object: DotObject,
    pub wikidata_category: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum RegistryRecord {
    Entry {
        lemma: String,
        dot_object: String,
        #[serde(default)]
        wikidata_category: String,
    },
    Gloss {
        type_class: String,
        #[serde(flatten)]
        gloss: ClassGloss,
    },
}

/// Proper-noun lemma to dot object, plus the gloss table for type classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DotRegistry {
    entries: BTreeMap<String, RegistryEntry>,
    glosses: [ClassGloss; 8],
}

impl Default for DotRegistry {
    fn default() -> Self {
        Self {
            entries: BTreeMap::new(),
            glosses: TypeClass::ALL.map(TypeClass::builtin_gloss),
        }
    }
}

impl DotRegistry {
    /// Reads registry JSONL. Lines with a `type_class` key override the
    /// built-in gloss for that class.
    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let mut reg = DotRegistry::default();
        for (line, rec) in jsonl::read_records::<RegistryRecord, _>(reader)? {
            let res = match rec {
                RegistryRecord::Entry {
                    lemma,
                    dot_object,
                    wikidata_category,
                } => dot_object
                    .parse()
                    .and_then(|dot| reg.insert(&lemma, dot, wikidata_category)),
                RegistryRecord::Gloss { type_class, gloss } => type_class
                    .parse::<TypeClass>()
                    .map(|c| reg.set_gloss(c, gloss)),
            };
            res.map_err(|e| Error::Validation(format!("line {line}: {e}")))?;
        }
        Ok(reg)
    }

    pub fn insert(&mut self, lemma: &str, dot_object: DotObject, wikidata_category: String) -> Result<()> {
        let lemma: String = lemma.nfc().collect();
        if lemma.is_empty() {
            return Err(Error::Validation("empty lemma".into()));
        }
        if self.entries.contains_key(&lemma) {
            return Err(Error::Validation(format!("duplicate lemma {lemma}")));
        }
        self.entries.insert(
            lemma,
            RegistryEntry {
                dot_object,
                wikidata_category,
            },
        );
        Ok(())
    }

    pub fn set_gloss(&mut self, class: TypeClass, gloss: ClassGloss) {
        self.glosses[class.index()] = gloss;
    }

    pub fn gloss(&self, class: TypeClass) -> &ClassGloss {
        &self.glosses[class.index()]
    }

    pub fn get(&self, lemma: &str) -> Option<&RegistryEntry> {
        self.entries
            .get(lemma)
            .or_else(|| self.entries.get(&lemma.nfc().collect::<String>()))
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &RegistryEntry)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Candidate type classes for a registered lemma, in dot-object order.
    pub fn dot_candidates(&self, lemma: &str) -> Result<&[TypeClass]> {
        self.get(lemma)
            .map(|e| e.dot_object.classes())
            .ok_or_else(|| Error::UnknownLemma(lemma.to_string()))
    }

    /// Writes entry lines only; gloss overrides are not emitted.
    pub fn write<W: Write>(&self, writer: W) -> Result<()> {
        let records: Vec<RegistryRecord> = self
            .entries
            .iter()
            .map(|(lemma, e)| RegistryRecord::Entry {
                lemma: lemma.clone(),
                dot_object: e.dot_object.name().to_string(),
                wikidata_category: e.wikidata_category.clone(),
            })
            .collect();
        jsonl::write_records(writer, &records)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REGISTRY: &str = r#"
{"lemma": "星巴克", "dot_object": "Prcr.Prct.Loc", "wikidata_category": "business"}
{"lemma": "哈佛", "dot_object": "Org.Loc.Hum", "wikidata_category": "university"}
{"lemma": "海軍", "dot_object": "Org*Hum", "wikidata_category": "military unit"}
"#;

    #[test]
    fn seven_canonical_objects() {
        let names: Vec<_> = DotObject::canonical().iter().map(|d| d.name().to_string()).collect();
        assert_eq!(
            names,
            [
                "Info.Phy",
                "Loc.Org",
                "Org.Hum",
                "Org.Info.Phy.Hum",
                "Org.Loc.Hum",
                "Phy.Evt.Hum",
                "Prcr.Prct.Loc"
            ]
        );
        for d in DotObject::canonical() {
            let n = d.classes().len();
            assert!((2..=4).contains(&n));
            let mut sorted = d.classes().to_vec();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), n);
        }
    }

    #[test]
    fn parses_long_and_short_names() {
        let a: DotObject = "producer.product.location".parse().unwrap();
        let b: DotObject = "Prcr*Prct*Loc".parse().unwrap();
        assert_eq!(a, b);
        assert!("Org.Prct".parse::<DotObject>().is_err());
        assert!("Loc.Org.Loc".parse::<DotObject>().is_err());
    }

    #[test]
    fn dot_candidates_follow_registry_order() {
        let reg = DotRegistry::load(REGISTRY.as_bytes()).unwrap();
        assert_eq!(
            reg.dot_candidates("星巴克").unwrap(),
            [TypeClass::Producer, TypeClass::Product, TypeClass::Location]
        );
        assert_eq!(reg.dot_candidates("哈佛").unwrap().len(), 3);
        assert!(matches!(reg.dot_candidates("xyz"), Err(Error::UnknownLemma(_))));
    }

    #[test]
    fn non_canonical_registry_entry_rejected() {
        let text = r#"{"lemma": "x", "dot_object": "Org.Evt", "wikidata_category": ""}"#;
        assert!(matches!(DotRegistry::load(text.as_bytes()), Err(Error::Validation(_))));
    }

    #[test]
    fn gloss_override() {
        let text = r#"{"type_class": "Human", "label_zh": "人", "gloss_zh": "人。", "gloss_en": "people."}"#;
        let reg = DotRegistry::load(text.as_bytes()).unwrap();
        assert_eq!(reg.gloss(TypeClass::Human).label_zh, "人");
        assert_eq!(reg.gloss(TypeClass::Organization).label_zh, "機構");
    }

    #[test]
    fn every_class_has_both_glosses() {
        for c in TypeClass::ALL {
            let g = c.builtin_gloss();
            assert!(!g.gloss_zh.is_empty() && !g.gloss_en.is_empty() && !g.label_zh.is_empty());
        }
    }

    #[test]
    fn write_load_round_trip() {
        let reg = DotRegistry::load(REGISTRY.as_bytes()).unwrap();
        let mut buf = Vec::new();
        reg.write(&mut buf).unwrap();
        assert_eq!(DotRegistry::load(buf.as_slice()).unwrap(), reg);
    }
}
