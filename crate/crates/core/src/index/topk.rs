use std::cmp::Ordering;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Entry {
    score: u64,
    ordinal: u32,
}

// The heap's maximum is the current worst result: lowest score, and among
// equal scores the highest ordinal.
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .score
            .cmp(&self.score)
            .then(self.ordinal.cmp(&other.ordinal))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Bounded top-k collector over integer scores. Starts as if filled with `k`
/// zero scores, so only strictly positive scores are ever admitted.
pub(crate) struct TopK {
    k: usize,
    heap: BinaryHeap<Entry>,
}

impl TopK {
    pub(crate) fn new(k: usize) -> Self {
        TopK {
            k,
            heap: BinaryHeap::with_capacity(k + 1),
        }
    }

    /// Score a new document must strictly exceed to enter. Documents arrive
    /// in increasing ordinal order, so a tie with the current worst never
    /// wins.
    #[inline]
    pub(crate) fn threshold(&self) -> u64 {
        if self.heap.len() < self.k {
            0
        } else {
            self.heap.peek().map_or(0, |e| e.score)
        }
    }

    pub(crate) fn insert(&mut self, ordinal: u32, score: u64) {
        if self.k == 0 || score == 0 {
            return;
        }
        let entry = Entry { score, ordinal };
        if self.heap.len() < self.k {
            self.heap.push(entry);
        } else if let Some(worst) = self.heap.peek() {
            if entry < *worst {
                self.heap.pop();
                self.heap.push(entry);
            }
        }
    }

    pub(crate) fn into_hits(self) -> Vec<(u32, u64)> {
        self.heap
            .into_iter()
            .map(|e| (e.ordinal, e.score))
            .collect()
    }
}
