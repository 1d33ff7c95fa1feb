use super::cursor::{open_cursors, END};
use super::topk::TopK;
use super::{InvertedIndex, RetrievalStats};
use crate::head::SparseVector;
use crate::ranking::RankedList;

/// Block-max WAND. Exact: returns the same list as exhaustive scoring.
///
/// Each round sorts cursors by current doc and finds the pivot, the first
/// cursor at which the summed list maxima exceed the threshold. The block
/// maxima around the pivot doc then either confirm the doc is worth scoring
/// or let every cursor up to the pivot jump past the shallowest block end.
pub fn retrieve_bmw(
    index: &InvertedIndex,
    query: &SparseVector,
    k: usize,
) -> (RankedList, RetrievalStats) {
    let q = index.quantize_query(query);
    let (mut cursors, total) = open_cursors(index, &q);
    let mut stats = RetrievalStats {
        postings_total: total,
        ..Default::default()
    };
    let mut top = TopK::new(k);
    if k == 0 {
        return (index.finish(Vec::new(), &q), stats);
    }

    loop {
        cursors.retain(|c| !c.is_exhausted());
        if cursors.is_empty() {
            break;
        }
        cursors.sort_by_key(|c| c.doc());
        let threshold = top.threshold();

        let mut upper = 0u64;
        let Some(mut pivot) = cursors.iter().position(|c| {
            upper += c.max_score;
            upper > threshold
        }) else {
            break;
        };
        let pivot_doc = cursors[pivot].doc();
        while pivot + 1 < cursors.len() && cursors[pivot + 1].doc() == pivot_doc {
            pivot += 1;
        }

        let mut block_upper = 0u64;
        let mut shallowest_end = END;
        for c in &cursors[..=pivot] {
            let (bound, last) = c.block_bound(pivot_doc);
            block_upper += bound;
            shallowest_end = shallowest_end.min(last);
        }

        if block_upper > threshold {
            if cursors[0].doc() == pivot_doc {
                let mut score = 0;
                for c in &mut cursors[..=pivot] {
                    score += c.score(&mut stats.postings_scored);
                    c.next();
                }
                stats.docs_scored += 1;
                top.insert(pivot_doc, score);
            } else {
                for c in cursors[..pivot].iter_mut() {
                    c.next_geq(pivot_doc);
                }
            }
        } else {
            let mut next = shallowest_end.saturating_add(1);
            if let Some(c) = cursors.get(pivot + 1) {
                next = next.min(c.doc());
            }
            for c in cursors[..=pivot].iter_mut() {
                c.next_geq(next);
            }
        }
    }

    (index.finish(top.into_hits(), &q), stats)
}
