use super::{InvertedIndex, RetrievalStats};
use crate::head::SparseVector;
use crate::ranking::RankedList;

/// Scores every document term-at-a-time. The reference the pruning
/// algorithms are checked against.
pub fn retrieve_exhaustive(
    index: &InvertedIndex,
    query: &SparseVector,
    k: usize,
) -> (RankedList, RetrievalStats) {
    let q = index.quantize_query(query);
    let mut acc = vec![0u64; index.num_docs()];
    let mut stats = RetrievalStats::default();
    for &(term, qimp) in &q.terms {
        let Some(list) = index.postings(term) else {
            continue;
        };
        stats.postings_total += list.len();
        stats.postings_scored += list.len();
        for (&d, &imp) in list.docs.iter().zip(&list.impacts) {
            acc[d as usize] += u64::from(qimp) * u64::from(imp);
        }
    }
    let mut hits: Vec<(u32, u64)> = acc
        .into_iter()
        .enumerate()
        .filter(|&(_, s)| s > 0)
        .map(|(d, s)| (d as u32, s))
        .collect();
    stats.docs_scored = hits.len();
    hits.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    hits.truncate(k);
    (index.finish(hits, &q), stats)
}
