//! Pair scoring backends and candidate selection.

pub mod external;
pub mod overlap;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairs::{Conditions, ContextGlossPair, PairBuilder, PairSet, Sources, TestInstance};
use crate::seed;

pub use external::ExternalSession;
pub use overlap::score_overlap;

/// Scores aligned index-wise with a pair set. Always finite.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScoreVector(Vec<f64>);

impl ScoreVector {
    pub fn new(scores: Vec<f64>) -> Result<Self> {
        if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("score {i} is not finite")));
        }
        Ok(Self(scores))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

/// Index of the highest score; the earliest index wins ties.
pub fn select(scores: &[f64]) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        if !s.is_finite() {
            return Err(Error::InvalidArgument(format!("score {i} is not finite")));
        }
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::InvalidArgument("cannot select from an empty score vector".into()))
}

/// Uniform pseudo-random scores fixed by the seed and the pair content.
pub fn score_random(pairs: &[ContextGlossPair], seed: u64) -> Result<ScoreVector> {
    ScoreVector::new(
        pairs
            .iter()
            .map(|p| {
                let key = format!("{}\u{1f}{}\u{1f}{}", p.context, p.gloss, p.candidate_id);
                seed::unit(seed, &key)
            })
            .collect(),
    )
}

/// Reads the gold labels back: 1 for the true pair, 0 otherwise.
pub fn score_oracle(pairs: &[ContextGlossPair]) -> Result<ScoreVector> {
    ScoreVector::new(pairs.iter().map(|p| f64::from(u8::from(p.label))).collect())
}

/// Which backend to open, as written on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BackendSpec {
    Overlap,
    /// `random` uses the run seed; `random:N` pins its own.
    Random(Option<u64>),
    Oracle,
    External(String),
}

impl FromStr for BackendSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "overlap" => Ok(BackendSpec::Overlap),
            "random" => Ok(BackendSpec::Random(None)),
            "oracle" => Ok(BackendSpec::Oracle),
            _ => {
                if let Some(cmd) = s.strip_prefix("external:") {
                    if cmd.trim().is_empty() {
                        return Err(Error::InvalidArgument("external backend needs a command".into()));
                    }
                    Ok(BackendSpec::External(cmd.trim().to_string()))
                } else if let Some(n) = s.strip_prefix("random:") {
                    n.parse()
                        .map(|n| BackendSpec::Random(Some(n)))
                        .map_err(|_| Error::InvalidArgument(format!("bad random seed `{n}`")))
                } else {
                    Err(Error::InvalidArgument(format!("unknown backend `{s}`")))
                }
            }
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BackendSpec::Overlap => f.write_str("overlap"),
            BackendSpec::Random(None) => f.write_str("random"),
            BackendSpec::Random(Some(n)) => write!(f, "random:{n}"),
            BackendSpec::Oracle => f.write_str("oracle"),
            BackendSpec::External(cmd) => write!(f, "external:{cmd}"),
        }
    }
}

#[derive(Debug)]
pub enum ScorerSession {
    Overlap,
    Random { seed: u64 },
    Oracle,
    External(ExternalSession),
}

impl ScorerSession {
    pub fn open(spec: &BackendSpec, run_seed: u64, timeout: Duration) -> Result<Self> {
        Ok(match spec {
            BackendSpec::Overlap => ScorerSession::Overlap,
            BackendSpec::Random(s) => ScorerSession::Random {
                seed: s.unwrap_or(run_seed),
            },
            BackendSpec::Oracle => ScorerSession::Oracle,
            BackendSpec::External(cmd) => {
                ScorerSession::External(ExternalSession::spawn_command_line(cmd, timeout)?)
            }
        })
    }

    /// True for backends that may be called from many threads at once.
    pub fn is_stateless(&self) -> bool {
        !matches!(self, ScorerSession::External(_))
    }

    fn stateless(&self) -> Option<StatelessScorer> {
        match self {
            ScorerSession::Overlap => Some(StatelessScorer::Overlap),
            ScorerSession::Random { seed } => Some(StatelessScorer::Random(*seed)),
            ScorerSession::Oracle => Some(StatelessScorer::Oracle),
            ScorerSession::External(_) => None,
        }
    }

    pub fn score(&mut self, pairs: &[ContextGlossPair]) -> Result<ScoreVector> {
        match self {
            ScorerSession::External(s) => {
                if pairs.is_empty() {
                    return Err(Error::InvalidArgument("no pairs to score".into()));
                }
                s.score(pairs)
            }
            other => other.stateless().expect("stateless backend").score(pairs),
        }
    }
}

#[derive(Debug, Clone, Copy)]
enum StatelessScorer {
    Overlap,
    Random(u64),
    Oracle,
}

impl StatelessScorer {
    fn score(self, pairs: &[ContextGlossPair]) -> Result<ScoreVector> {
        if pairs.is_empty() {
            return Err(Error::InvalidArgument("no pairs to score".into()));
        }
        match self {
            StatelessScorer::Overlap => score_overlap(pairs),
            StatelessScorer::Random(seed) => score_random(pairs, seed),
            StatelessScorer::Oracle => score_oracle(pairs),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PredictionStatus {
    Scored,
    Discarded,
    BackendFailed,
}

/// One line of a predictions file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub instance_id: String,
    pub predicted: Option<String>,
    #[serde(default)]
    pub scores: Vec<f64>,
    #[serde(default)]
    pub candidates: Vec<String>,
    pub status: PredictionStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Prediction {
    fn from_scores(set: &PairSet, scores: ScoreVector) -> Result<Self> {
        let winner = select(scores.as_slice())?;
        Ok(Prediction {
            instance_id: set.instance_id.clone(),
            predicted: Some(set.pairs[winner].candidate_id.clone()),
            scores: scores.into_vec(),
            candidates: set.candidate_ids().map(String::from).collect(),
            status: PredictionStatus::Scored,
            error: None,
        })
    }

    fn unscored(set: Option<&PairSet>, id: &str, status: PredictionStatus, error: String) -> Self {
        Prediction {
            instance_id: id.to_string(),
            predicted: None,
            scores: Vec::new(),
            candidates: set
                .map(|s| s.candidate_ids().map(String::from).collect())
                .unwrap_or_default(),
            status,
            error: Some(error),
        }
    }
}

/// Builds the instance's pairs, scores them, and returns the winning candidate.
pub fn disambiguate(
    inst: &TestInstance,
    sources: Sources<'_>,
    session: &mut ScorerSession,
    conditions: Conditions,
    seed: u64,
) -> Result<String> {
    let set = PairBuilder::default().build(inst, sources, conditions, seed)?;
    let scores = session.score(&set.pairs)?;
    let winner = select(scores.as_slice())?;
    Ok(set.pairs[winner].candidate_id.clone())
}

/// Disambiguates a batch, in input order.
///
/// Discarded instances and backend failures are recorded in the returned
/// predictions rather than aborting the batch; any other error aborts.
pub fn disambiguate_all(
    builder: &PairBuilder,
    instances: &[TestInstance],
    sources: Sources<'_>,
    session: &mut ScorerSession,
    conditions: Conditions,
    seed: u64,
) -> Result<Vec<Prediction>> {
    let sets: Vec<Result<PairSet>> = instances
        .par_iter()
        .map(|inst| builder.build(inst, sources, conditions, seed))
        .collect();

    let run = |set: Result<PairSet>, inst: &TestInstance, scored: Result<ScoreVector>| -> Result<Prediction> {
        let set = set?;
        match scored {
            Ok(scores) => Prediction::from_scores(&set, scores),
            Err(Error::Backend(e)) => {
                log::warn!("instance {}: {e}", inst.id);
                Ok(Prediction::unscored(Some(&set), &inst.id, PredictionStatus::BackendFailed, e.to_string()))
            }
            Err(e) => Err(e),
        }
    };
    let discard_or = |res: Result<Prediction>, inst: &TestInstance| match res {
        Err(e @ Error::Discarded { .. }) => Ok(Prediction::unscored(
            None,
            &inst.id,
            PredictionStatus::Discarded,
            e.to_string(),
        )),
        other => other,
    };

    if let Some(scorer) = session.stateless() {
        sets.into_par_iter()
            .zip(instances.par_iter())
            .map(|(set, inst)| {
                let scored = match &set {
                    Ok(s) => scorer.score(&s.pairs),
                    Err(_) => Ok(ScoreVector::default()),
                };
                discard_or(run(set, inst, scored), inst)
            })
            .collect()
    } else {
        let mut out = Vec::with_capacity(instances.len());
        for (set, inst) in sets.into_iter().zip(instances) {
            let scored = match &set {
                Ok(s) => session.score(&s.pairs),
                Err(_) => Ok(ScoreVector::default()),
            };
            out.push(discard_or(run(set, inst, scored), inst)?);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::external::testing::*;
    use super::*;
    use crate::error::BackendError;
    use proptest::prelude::*;
    use rand::seq::SliceRandom;

    #[test]
    fn select_examples() {
        assert_eq!(select(&[0.1, 0.9, 0.3]).unwrap(), 1);
        assert_eq!(select(&[0.5, 0.5]).unwrap(), 0);
        assert!(matches!(select(&[]), Err(Error::InvalidArgument(_))));
        assert!(select(&[f64::NAN]).is_err());
    }

    #[test]
    fn backend_spec_parsing() {
        assert_eq!("overlap".parse::<BackendSpec>().unwrap(), BackendSpec::Overlap);
        assert_eq!("random:7".parse::<BackendSpec>().unwrap(), BackendSpec::Random(Some(7)));
        assert_eq!(
            "external:python3 scorer.py".parse::<BackendSpec>().unwrap(),
            BackendSpec::External("python3 scorer.py".into())
        );
        assert!("external:".parse::<BackendSpec>().is_err());
        assert!("bert".parse::<BackendSpec>().is_err());
    }

    #[test]
    fn random_scores_are_seed_determined() {
        let pairs: Vec<_> = (0..4)
            .map(|i| ContextGlossPair {
                context: "c".into(),
                gloss: format!("g{i}"),
                candidate_id: i.to_string(),
                label: false,
            })
            .collect();
        let a = score_random(&pairs, 7).unwrap();
        assert_eq!(a, score_random(&pairs, 7).unwrap());
        assert_ne!(a, score_random(&pairs, 8).unwrap());
        assert_eq!(select(a.as_slice()).unwrap(), select(score_random(&pairs, 7).unwrap().as_slice()).unwrap());
    }

    proptest! {
        #[test]
        fn select_invariant_under_monotone_maps(xs in prop::collection::vec(-1e3f64..1e3, 1..16)) {
            let base = select(&xs).unwrap();
            let exp: Vec<f64> = xs.iter().map(|x| (x / 100.0).exp()).collect();
            let affine: Vec<f64> = xs.iter().map(|x| 3.0 * x - 7.0).collect();
            let cube: Vec<f64> = xs.iter().map(|x| x.powi(3)).collect();
            prop_assert_eq!(select(&exp).unwrap(), base);
            prop_assert_eq!(select(&affine).unwrap(), base);
            prop_assert_eq!(select(&cube).unwrap(), base);
        }
    }

    #[test]
    fn thousand_requests_keep_id_alignment() {
        // The backend scores each pair by the number embedded in its gloss.
        let (r, w) = serve(&handshake_line(), |v| {
            let scores: Vec<f64> = v["pairs"]
                .as_array()
                .unwrap()
                .iter()
                .map(|p| p["gloss"].as_str().unwrap()[1..].parse::<f64>().unwrap())
                .collect();
            Some(serde_json::json!({"id": v["id"], "scores": scores}).to_string())
        });
        let mut session = ExternalSession::from_streams(r, w, Duration::from_secs(10)).unwrap();
        let mut rng = seed::rng(1, "alignment");
        let mut mismatches = 0;
        for req in 0..1000u32 {
            let mut ids: Vec<u32> = (0..1 + req % 7).map(|k| req * 10 + k).collect();
            ids.shuffle(&mut rng);
            let pairs: Vec<_> = ids
                .iter()
                .map(|n| ContextGlossPair {
                    context: "x".into(),
                    gloss: format!("g{n}"),
                    candidate_id: n.to_string(),
                    label: false,
                })
                .collect();
            let scores = session.score(&pairs).unwrap();
            mismatches += ids
                .iter()
                .zip(scores.as_slice())
                .filter(|(n, s)| f64::from(**n) != **s)
                .count();
        }
        assert_eq!(mismatches, 0);
    }

    #[test]
    fn external_failure_marks_instance_not_batch() {
        use crate::inventory::SenseInventory;
        use crate::pairs::Task;
        let inv = SenseInventory::load(
            r#"{"sense_id": "a", "lemma": "看", "pos_raw": "VC", "gloss": "注視。"}
{"sense_id": "b", "lemma": "看", "pos_raw": "VC", "gloss": "探望。"}"#
                .as_bytes(),
        )
        .unwrap();
        let mut n = 0;
        let (r, w) = serve(&handshake_line(), move |v| {
            n += 1;
            let scores = if n == 1 { vec![1.0] } else { vec![0.0, 1.0] };
            Some(serde_json::json!({"id": v["id"], "scores": scores}).to_string())
        });
        let mut session =
            ScorerSession::External(ExternalSession::from_streams(r, w, Duration::from_secs(5)).unwrap());
        let insts: Vec<_> = (0..2)
            .map(|i| TestInstance {
                id: i.to_string(),
                sentence: "去看".into(),
                start: 1,
                end: 2,
                lemma: "看".into(),
                pos_raw: "VC".into(),
                gold: Some("b".into()),
                task: Task::Wsd,
            })
            .collect();
        let preds = disambiguate_all(
            &PairBuilder::default(),
            &insts,
            Sources::new(Some(&inv), None),
            &mut session,
            Conditions::default(),
            0,
        )
        .unwrap();
        assert_eq!(preds[0].status, PredictionStatus::BackendFailed);
        assert!(preds[0]
            .error
            .as_deref()
            .unwrap()
            .contains(&BackendError::LengthMismatch { expected: 2, got: 1 }.to_string()));
        assert_eq!(preds[1].predicted.as_deref(), Some("b"));
    }
}
