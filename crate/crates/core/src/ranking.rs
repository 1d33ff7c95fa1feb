use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Global result order: descending score, then ascending doc id.
#[inline]
pub fn result_order(a: &(u64, f64), b: &(u64, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Ranked `(doc id, score)` results in [`result_order`], without duplicates.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RankedList {
    entries: Vec<(u64, f64)>,
}

impl RankedList {
    /// Validates an already ordered list.
    pub fn new(entries: Vec<(u64, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if result_order(&w[0], &w[1]) != Ordering::Less {
                return Err(Error::validation(
                    "ranked list must be sorted by descending score then ascending id, without duplicates",
                ));
            }
        }
        if entries.iter().any(|e| !e.1.is_finite()) {
            return Err(Error::NonFinite("RankedList::new"));
        }
        let mut ids: Vec<u64> = entries.iter().map(|e| e.0).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::validation("ranked list contains duplicate ids"));
        }
        Ok(RankedList { entries })
    }

    /// Sorts arbitrary scored ids and keeps the best `k`.
    pub fn from_scores(mut scored: Vec<(u64, f64)>, k: usize) -> Result<Self> {
        scored.sort_by(result_order);
        RankedList::new(scored).map(|mut r| {
            r.entries.truncate(k);
            r
        })
    }

    pub fn entries(&self) -> &[(u64, f64)] {
        &self.entries
    }

    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn truncated(&self, k: usize) -> RankedList {
        RankedList {
            entries: self.entries[..k.min(self.entries.len())].to_vec(),
        }
    }

    pub fn into_entries(self) -> Vec<(u64, f64)> {
        self.entries
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tie_order_is_ascending_id() {
        let r = RankedList::from_scores(vec![(5, 1.0), (2, 1.0), (9, 3.0)], 10).unwrap();
        assert_eq!(r.entries(), &[(9, 3.0), (2, 1.0), (5, 1.0)]);
        assert_eq!(r.truncated(1).entries(), &[(9, 3.0)]);
    }

    #[test]
    fn rejects_bad_order_and_duplicates() {
        assert!(RankedList::new(vec![(1, 1.0), (2, 2.0)]).is_err());
        assert!(RankedList::new(vec![(1, 2.0), (1, 1.0)]).is_err());
        assert!(RankedList::from_scores(vec![(1, 2.0), (1, 1.0)], 5).is_err());
    }
}
