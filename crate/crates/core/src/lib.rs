//! Word sense and regular-polysemy disambiguation over context-gloss pairs.
//!
//! Common words are resolved against an enumerated sense inventory; proper
//! nouns are resolved to one facet (type class) of their dot object. Both go
//! through the same pipeline: build one context-gloss pair per candidate,
//! score the pairs with a backend, and pick the highest score.

pub mod dataset;
pub mod dot;
pub mod error;
pub mod eval;
pub mod inventory;
pub mod jsonl;
pub mod pairs;
pub mod pos;
pub mod scoring;
pub mod seed;

pub use dot::{ClassGloss, DotObject, DotRegistry, TypeClass};
pub use error::{BackendError, Error, Result};
pub use inventory::{Sense, SenseInventory};
pub use pairs::{
    build_rp_pairs, build_wsd_pairs, flatten, mark_target, Condition, Conditions, ContextGlossPair,
    PairBuilder, PairSet, RpMode, Sources, Task, TestInstance, WsdMode,
};
pub use pos::{simplify_pos, PosCategory, PosMap};
pub use scoring::{
    disambiguate, disambiguate_all, score_overlap, select, BackendSpec, Prediction, PredictionStatus,
    ScoreVector, ScorerSession,
};

/// Version stamped into every output schema.
pub const FORMAT_VERSION: u32 = 1;
