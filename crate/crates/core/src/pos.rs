//! Reduction of CKIP part-of-speech tags to four coarse categories.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const BUILTIN_TABLE: &str = include_str!("../data/ckip_pos.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PosCategory {
    ProperNoun,
    CommonNoun,
    Verb,
    Others,
}

impl PosCategory {
    pub const ALL: [PosCategory; 4] = [
        PosCategory::ProperNoun,
        PosCategory::CommonNoun,
        PosCategory::Verb,
        PosCategory::Others,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PosCategory::ProperNoun => "ProperNoun",
            PosCategory::CommonNoun => "CommonNoun",
            PosCategory::Verb => "Verb",
            PosCategory::Others => "Others",
        }
    }
}

impl fmt::Display for PosCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PosCategory {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PosCategory::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown POS category `{s}`")))
    }
}

/// Maps a CKIP tag to its coarse category by prefix.
///
/// `Nb` is a proper noun, any other `N*` a common noun, any `V*` a verb, and
/// everything else (including unknown tags) falls into `Others`.
pub fn simplify_pos(tag: &str) -> PosCategory {
    let tag = tag.trim();
    if tag == "Nb" {
        PosCategory::ProperNoun
    } else if tag.starts_with('N') {
        PosCategory::CommonNoun
    } else if tag.starts_with('V') {
        PosCategory::Verb
    } else {
        PosCategory::Others
    }
}

/// An explicit tag table with the prefix rule as fallback.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PosMap {
    table: BTreeMap<String, PosCategory>,
}

impl PosMap {
    /// The shipped 44-tag table.
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_TABLE).expect("builtin POS table is valid")
    }

    /// Parses a JSON object of `{"tag": "Category", ...}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let table: BTreeMap<String, PosCategory> = serde_json::from_str(text)
            .map_err(|e| Error::Validation(format!("POS table: {e}")))?;
        Ok(Self { table })
    }

    pub fn simplify(&self, tag: &str) -> PosCategory {
        self.table
            .get(tag.trim())
            .copied()
            .unwrap_or_else(|| simplify_pos(tag))
    }

    pub fn tags(&self) -> impl Iterator<Item = (&str, PosCategory)> {
        self.table.iter().map(|(t, c)| (t.as_str(), *c))
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn prefix_rule() {
        assert_eq!(simplify_pos("Nb"), PosCategory::ProperNoun);
        assert_eq!(simplify_pos("Na"), PosCategory::CommonNoun);
        assert_eq!(simplify_pos("VC"), PosCategory::Verb);
        assert_eq!(simplify_pos("P"), PosCategory::Others);
        assert_eq!(simplify_pos("Nbc"), PosCategory::CommonNoun);
    }

    #[test]
    fn builtin_table_partitions_44_tags() {
        let map = PosMap::builtin();
        assert_eq!(map.len(), 44);
        for cat in PosCategory::ALL {
            assert!(map.tags().any(|(_, c)| c == cat), "{cat} has no tags");
        }
        for (tag, cat) in map.tags() {
            assert_eq!(simplify_pos(tag), cat, "table disagrees with rule on {tag}");
        }
    }

    #[test]
    fn table_overrides_rule() {
        let map = PosMap::from_json(r#"{"Nv": "Verb"}"#).unwrap();
        assert_eq!(map.simplify("Nv"), PosCategory::Verb);
        assert_eq!(map.simplify("Na"), PosCategory::CommonNoun);
    }

    proptest! {
        #[test]
        fn simplify_is_total(tag in "\\PC{1,6}") {
            let a = simplify_pos(&tag);
            prop_assert_eq!(a, simplify_pos(&tag));
            prop_assert!(PosCategory::ALL.contains(&a));
        }
    }
}
