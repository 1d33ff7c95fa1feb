use super::cursor::{open_cursors, END};
use super::topk::TopK;
use super::{InvertedIndex, RetrievalStats};
use crate::head::SparseVector;
use crate::ranking::RankedList;

/// MaxScore. Exact: returns the same list as exhaustive scoring.
///
/// Lists are ordered by their score bound. The longest prefix whose summed
/// bounds cannot beat the threshold is non-essential: candidates come only
/// from the essential lists, and non-essential lists are probed (highest
/// bound first) only while the candidate can still make it.
pub fn retrieve_maxscore(
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

    cursors.sort_by_key(|c| c.max_score);
    let bounds: Vec<u64> = cursors
        .iter()
        .scan(0u64, |acc, c| {
            *acc += c.max_score;
            Some(*acc)
        })
        .collect();

    let mut threshold = top.threshold();
    let mut first_essential = bounds.partition_point(|&b| b <= threshold);

    while first_essential < cursors.len() {
        let (non_essential, essential) = cursors.split_at_mut(first_essential);
        let current = essential.iter().map(|c| c.doc()).min().unwrap_or(END);
        if current == END {
            break;
        }

        let mut score = 0u64;
        for c in essential.iter_mut() {
            if c.doc() == current {
                score += c.score(&mut stats.postings_scored);
                c.next();
            }
        }
        for i in (0..non_essential.len()).rev() {
            if score + bounds[i] <= threshold {
                break;
            }
            let c = &mut non_essential[i];
            c.next_geq(current);
            if c.doc() == current {
                score += c.score(&mut stats.postings_scored);
            }
        }
        stats.docs_scored += 1;

        if score > threshold {
            top.insert(current, score);
            threshold = top.threshold();
            while first_essential < bounds.len() && bounds[first_essential] <= threshold {
                first_essential += 1;
            }
        }
    }

    (index.finish(top.into_hits(), &q), stats)
}
