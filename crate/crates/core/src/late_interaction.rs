//! Exact MaxSim scoring over frozen token embeddings: the re-ranking stage
//! and the distillation teacher.

use crate::embedding::{EmbeddingStore, TokenEmbeddingRecord};
use crate::error::{Error, Result};
use crate::numerics::dot;
use crate::ranking::RankedList;

/// `Σ_i max_j q_i · d_j`.
pub fn maxsim_score(query: &TokenEmbeddingRecord, doc: &TokenEmbeddingRecord) -> Result<f64> {
    if query.dim() != doc.dim() {
        return Err(Error::Dimension {
            context: "maxsim_score",
            expected: query.dim(),
            actual: doc.dim(),
        });
    }
    let mut total = 0.0;
    for i in 0..query.num_tokens() {
        let q = query.token(i);
        let mut best = f64::NEG_INFINITY;
        for j in 0..doc.num_tokens() {
            let s = dot(q, doc.token(j));
            if s > best {
                best = s;
            }
        }
        total += best;
    }
    Ok(total)
}

/// Frozen store plus the ids that make up the re-rankable corpus.
#[derive(Debug, Clone)]
pub struct DenseDocStore<'a> {
    store: &'a EmbeddingStore,
    ids: Vec<u64>,
}

impl<'a> DenseDocStore<'a> {
    /// Every document in the store.
    pub fn new(store: &'a EmbeddingStore) -> Result<Self> {
        Self::with_ids(store, store.ids().collect())
    }

    pub fn with_ids(store: &'a EmbeddingStore, mut ids: Vec<u64>) -> Result<Self> {
        if !store.is_frozen() {
            return Err(Error::Usage(
                "document store must be frozen before re-ranking".into(),
            ));
        }
        ids.sort_unstable();
        ids.dedup();
        let missing: Vec<u64> = ids
            .iter()
            .copied()
            .filter(|&id| !store.contains(id))
            .collect();
        if !missing.is_empty() {
            return Err(Error::UnknownIds(missing));
        }
        Ok(DenseDocStore { store, ids })
    }

    pub fn ids(&self) -> &[u64] {
        &self.ids
    }

    pub fn store(&self) -> &'a EmbeddingStore {
        self.store
    }

    pub fn get(&self, id: u64) -> Result<&'a TokenEmbeddingRecord> {
        if self.ids.binary_search(&id).is_err() {
            return Err(Error::UnknownIds(vec![id]));
        }
        self.store.get(id)
    }
}

/// Scores the candidates exactly and keeps the top `k`. Repeated candidate
/// ids are scored once.
pub fn rerank(
    query: &TokenEmbeddingRecord,
    candidate_ids: &[u64],
    store: &DenseDocStore<'_>,
    k: usize,
) -> Result<RankedList> {
    let mut ids = candidate_ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let missing: Vec<u64> = ids
        .iter()
        .copied()
        .filter(|id| store.ids.binary_search(id).is_err())
        .collect();
    if !missing.is_empty() {
        return Err(Error::UnknownIds(missing));
    }
    let scored = ids
        .into_iter()
        .map(|id| Ok((id, maxsim_score(query, store.store.get(id)?)?)))
        .collect::<Result<Vec<_>>>()?;
    RankedList::from_scores(scored, k)
}

/// Exhaustive MaxSim ranking of the whole corpus, top `n`.
pub fn teacher_rank(
    query: &TokenEmbeddingRecord,
    store: &DenseDocStore<'_>,
    n: usize,
) -> Result<RankedList> {
    rerank(query, &store.ids, store, n)
}
