use std::collections::HashMap;
use std::hash::Hash;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition<T> {
    pub from: T,
    pub to: T,
    pub count: usize,
}

/// Counts ordered pairs of adjacent distinct labels after collapsing runs of
/// the same label. Sorted by count descending, then by `(from, to)`.
pub fn mine_transitions<T>(sequence: &[T]) -> Vec<Transition<T>>
where
    T: Clone + Eq + Hash + Ord,
{
    let mut collapsed: Vec<&T> = Vec::with_capacity(sequence.len());
    for item in sequence {
        if collapsed.last() != Some(&item) {
            collapsed.push(item);
        }
    }
    let mut counts: HashMap<(&T, &T), usize> = HashMap::new();
    for pair in collapsed.windows(2) {
        *counts.entry((pair[0], pair[1])).or_default() += 1;
    }
    let mut out: Vec<Transition<T>> = counts
        .into_iter()
        .map(|((from, to), count)| Transition {
            from: from.clone(),
            to: to.clone(),
            count,
        })
        .collect();
    out.sort_by(|a, b| {
        b.count
            .cmp(&a.count)
            .then_with(|| a.from.cmp(&b.from))
            .then_with(|| a.to.cmp(&b.to))
    });
    out
}
