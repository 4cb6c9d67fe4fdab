//! Synthetic workloads shared by the criterion benches in `benches/`.

use lexidot::{Sense, SenseInventory, Task, TestInstance};

const CHARS: &[char] = &[
    '的', '是', '在', '有', '人', '他', '這', '中', '大', '來', '上', '國', '個', '到', '說', '們', '為', '子', '和', '你',
    '地', '出', '道', '也', '時', '年', '得', '就', '那', '要', '下', '以', '生', '會', '自', '著', '去', '之', '過', '家',
];

/// Cheap deterministic text so benches do not depend on an RNG crate.
pub fn text(seed: usize, len: usize) -> String {
    (0..len)
        .map(|i| CHARS[(seed.wrapping_mul(31).wrapping_add(i * 17 + i * i)) % CHARS.len()])
        .collect()
}

/// `lemmas` two-character lemmas with `senses` senses each, alternating
/// noun and verb tags.
pub fn inventory(lemmas: usize, senses: usize) -> SenseInventory {
    let mut inv = SenseInventory::default();
    for l in 0..lemmas {
        let lemma = format!("{}{}", CHARS[l % CHARS.len()], CHARS[(l / CHARS.len()) % CHARS.len()]);
        for s in 0..senses {
            let pos = if s % 2 == 0 { "Na" } else { "VC" };
            inv.insert(Sense {
                sense_id: format!("{lemma}_{s}"),
                lemma: lemma.clone(),
                pos_raw: pos.into(),
                pos: lexidot::simplify_pos(pos),
                gloss: text(l * 101 + s, 24),
                examples: vec![text(l * 7 + s, 16)],
            })
            .expect("unique ids");
        }
    }
    inv
}

/// One WSD instance per lemma, target placed mid-sentence.
pub fn instances(inv: &SenseInventory) -> Vec<TestInstance> {
    inv.lemmas()
        .enumerate()
        .map(|(i, lemma)| {
            let left = text(i, 12);
            let right = text(i + 1, 12);
            TestInstance {
                id: i.to_string(),
                sentence: format!("{left}{lemma}{right}"),
                start: 12,
                end: 12 + lemma.chars().count(),
                lemma: lemma.to_string(),
                pos_raw: "Na".into(),
                gold: Some(format!("{lemma}_0")),
                task: Task::Wsd,
            }
        })
        .collect()
}
