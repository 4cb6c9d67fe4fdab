//! Gloss-overlap scoring on character bigrams.
//!
//! Chinese text carries no word boundaries, so overlap is counted on
//! character bigrams instead of words. Markers and punctuation are removed
//! before bigrams are formed.

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::pairs::ContextGlossPair;

use super::ScoreVector;

/// ASCII and Latin-1 punctuation, CJK symbols and punctuation (which
/// includes the 〈〉 markers), general punctuation, and the full-width and
/// vertical forms.
pub fn is_punctuation(c: char) -> bool {
    c.is_ascii_punctuation()
        || matches!(c,
            '\u{A1}' | '\u{A7}' | '\u{AB}' | '\u{B6}' | '\u{B7}' | '\u{BB}' | '\u{BF}'
            | '\u{2010}'..='\u{2027}'
            | '\u{2030}'..='\u{205E}'
            | '\u{3000}'..='\u{303F}'
            | '\u{FE10}'..='\u{FE19}'
            | '\u{FE30}'..='\u{FE6B}'
            | '\u{FF01}'..='\u{FF0F}'
            | '\u{FF1A}'..='\u{FF20}'
            | '\u{FF3B}'..='\u{FF40}'
            | '\u{FF5B}'..='\u{FF65}')
}

fn bigrams(text: &str) -> HashSet<(char, char)> {
    let chars: Vec<char> = text.chars().filter(|c| !is_punctuation(*c)).collect();
    chars.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Number of distinct bigrams shared by the two strings.
pub fn shared_bigrams(context: &str, gloss: &str) -> usize {
    let a = bigrams(context);
    let b = bigrams(gloss);
    let (small, large) = if a.len() <= b.len() { (&a, &b) } else { (&b, &a) };
    small.iter().filter(|g| large.contains(g)).count()
}

pub fn score_overlap(pairs: &[ContextGlossPair]) -> Result<ScoreVector> {
    if pairs.is_empty() {
        return Err(Error::InvalidArgument("no pairs to score".into()));
    }
    ScoreVector::new(
        pairs
            .iter()
            .map(|p| shared_bigrams(&p.context, &p.gloss) as f64)
            .collect(),
    )
}
