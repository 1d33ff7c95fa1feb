//! Retrieve-then-rerank pipeline and its evaluation surface.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::time::Instant;

use rayon::prelude::*;

use crate::embedding::{EmbeddingStore, TokenEmbeddingRecord};
use crate::error::{Error, Result};
use crate::head::{AdapterHead, SparseVector};
use crate::index::{Algorithm, BuildOptions, InvertedIndex, RetrievalStats};
use crate::late_interaction::{rerank, teacher_rank, DenseDocStore};
use crate::ranking::RankedList;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PipelineConfig {
    pub k_q: usize,
    pub k_d: usize,
    pub k_candidates: usize,
    pub k_final: usize,
    pub algorithm: Algorithm,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k_q: 10,
            k_d: 100,
            k_candidates: 50,
            k_final: 10,
            algorithm: Algorithm::BlockMaxWand,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_final > self.k_candidates {
            return Err(Error::Usage(format!(
                "k_final ({}) must not exceed k_candidates ({})",
                self.k_final, self.k_candidates
            )));
        }
        if self.k_q == 0 || self.k_d == 0 || self.k_candidates == 0 {
            return Err(Error::Usage(
                "k_q, k_d and k_candidates must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Encodes every document of a store with `k_d`.
pub fn encode_corpus(
    head: &AdapterHead,
    docs: &EmbeddingStore,
    k_d: usize,
) -> Result<BTreeMap<u64, SparseVector>> {
    let records: Vec<&TokenEmbeddingRecord> = docs.iter().collect();
    let encoded = records
        .par_iter()
        .map(|r| Ok((r.id(), head.encode(r, k_d)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(encoded.into_iter().collect())
}

/// Encodes the corpus and builds its index.
pub fn index_corpus(
    head: &AdapterHead,
    docs: &EmbeddingStore,
    k_d: usize,
    options: BuildOptions,
) -> Result<InvertedIndex> {
    let vectors = encode_corpus(head, docs, k_d)?;
    InvertedIndex::build(&vectors, head.vocab_size(), options)
}

/// Sparse candidate generation, optionally followed by exact re-ranking.
#[derive(Debug, Clone, Copy)]
pub struct Pipeline<'a> {
    pub head: &'a AdapterHead,
    pub index: &'a InvertedIndex,
    pub dense: Option<&'a DenseDocStore<'a>>,
    pub config: PipelineConfig,
}

impl<'a> Pipeline<'a> {
    pub fn new(
        head: &'a AdapterHead,
        index: &'a InvertedIndex,
        dense: Option<&'a DenseDocStore<'a>>,
        config: PipelineConfig,
    ) -> Result<Self> {
        config.validate()?;
        if index.meta().vocab_size as usize != head.vocab_size() {
            return Err(Error::Dimension {
                context: "index vocabulary",
                expected: head.vocab_size(),
                actual: index.meta().vocab_size as usize,
            });
        }
        Ok(Pipeline {
            head,
            index,
            dense,
            config,
        })
    }

    pub fn encode_query(&self, query: &TokenEmbeddingRecord) -> Result<SparseVector> {
        self.head.encode(query, self.config.k_q)
    }

    pub fn retrieve_encoded(&self, query: &SparseVector) -> (RankedList, RetrievalStats) {
        self.index
            .retrieve(query, self.config.k_candidates, self.config.algorithm)
    }

    /// Top `k_candidates` of the sparse stage.
    pub fn run_retrieval(&self, query: &TokenEmbeddingRecord) -> Result<RankedList> {
        Ok(self.retrieve_encoded(&self.encode_query(query)?).0)
    }

    /// Sparse candidates re-ranked by MaxSim, top `k_final`.
    pub fn run_e2e(&self, query: &TokenEmbeddingRecord) -> Result<RankedList> {
        let dense = self
            .dense
            .ok_or_else(|| Error::Usage("end-to-end run needs a dense document store".into()))?;
        let candidates: Vec<u64> = self.run_retrieval(query)?.ids().collect();
        rerank(query, &candidates, dense, self.config.k_final)
    }
}

/// R(k) of one query.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Overlap {
    pub value: f64,
    /// Set when fewer than `k` exact or `k_prime` approximate entries were
    /// available; the value is then computed over what exists.
    pub truncated: bool,
}

/// Fraction of the exact top-`k` found in the approximate top-`k_prime`.
pub fn recall_overlap(
    approx: &RankedList,
    exact: &RankedList,
    k: usize,
    k_prime: usize,
) -> Result<Overlap> {
    if k == 0 {
        return Err(Error::validation("R(k) needs k >= 1"));
    }
    if exact.is_empty() {
        return Err(Error::validation("R(k) needs a nonempty exact list"));
    }
    let kk = k.min(exact.len());
    let mut window: Vec<u64> = approx.ids().take(k_prime).collect();
    window.sort_unstable();
    let hits = exact
        .ids()
        .take(kk)
        .filter(|id| window.binary_search(id).is_ok())
        .count();
    Ok(Overlap {
        value: hits as f64 / kk as f64,
        truncated: kk < k || approx.len() < k_prime,
    })
}

fn check_judged(relevant: &[u64], k: usize) -> Result<()> {
    if relevant.is_empty() {
        return Err(Error::validation("query has no relevant documents"));
    }
    if k == 0 {
        return Err(Error::validation("cutoff must be at least 1"));
    }
    Ok(())
}

pub fn mrr_at_k(ranked: &RankedList, relevant: &[u64], k: usize) -> Result<f64> {
    check_judged(relevant, k)?;
    Ok(ranked
        .ids()
        .take(k)
        .position(|id| relevant.contains(&id))
        .map_or(0.0, |r| 1.0 / (r + 1) as f64))
}

/// 1.0 when a relevant document appears in the top `k`, else 0.0.
pub fn success_at_k(ranked: &RankedList, relevant: &[u64], k: usize) -> Result<f64> {
    check_judged(relevant, k)?;
    Ok(if ranked.ids().take(k).any(|id| relevant.contains(&id)) {
        1.0
    } else {
        0.0
    })
}

/// Arithmetic mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct MrtReport {
    /// Median latency of each query over the timed repetitions.
    pub per_query_ms: Vec<f64>,
    pub mean_ms: f64,
}

/// Mean sparse-stage latency over pre-encoded queries, on the calling
/// thread. One untimed warm-up pass precedes the measurement.
pub fn measure_mrt(
    index: &InvertedIndex,
    queries: &[SparseVector],
    k: usize,
    algorithm: Algorithm,
    repetitions: usize,
) -> Result<MrtReport> {
    if queries.is_empty() {
        return Err(Error::validation("MRT needs at least one query"));
    }
    if repetitions == 0 {
        return Err(Error::validation("MRT needs at least one repetition"));
    }
    for q in queries {
        std::hint::black_box(index.retrieve(q, k, algorithm));
    }
    let per_query_ms: Vec<f64> = queries
        .iter()
        .map(|q| {
            let mut times: Vec<f64> = (0..repetitions)
                .map(|_| {
                    let start = Instant::now();
                    std::hint::black_box(index.retrieve(q, k, algorithm));
                    start.elapsed().as_secs_f64() * 1e3
                })
                .collect();
            times.sort_by(f64::total_cmp);
            times[times.len() / 2]
        })
        .collect();
    let mean_ms = mean_std(&per_query_ms).0;
    Ok(MrtReport {
        per_query_ms,
        mean_ms,
    })
}

/// Cutoffs used by [`evaluate`].
#[derive(Debug, Clone, PartialEq)]
pub struct EvalSettings {
    pub mrr_k: usize,
    pub success_k: usize,
    /// `(k, k')` pairs of the R(k) table.
    pub overlap: Vec<(usize, usize)>,
    /// Timed repetitions per query; 0 skips latency measurement.
    pub mrt_repetitions: usize,
}

impl Default for EvalSettings {
    fn default() -> Self {
        EvalSettings {
            mrr_k: 10,
            success_k: 5,
            overlap: vec![(10, 10), (10, 20), (10, 50)],
            mrt_repetitions: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryEval {
    pub query_id: u64,
    pub mrr_retrieval: f64,
    pub mrr_e2e: f64,
    pub mrr_exact: f64,
    pub success_e2e: f64,
    /// Aligned with [`EvalSettings::overlap`].
    pub overlap: Vec<Overlap>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub config: PipelineConfig,
    pub settings: EvalSettings,
    pub seed: u64,
    pub per_query: Vec<QueryEval>,
    pub mrt: Option<MrtReport>,
}

impl EvalSummary {
    fn mean_of(&self, f: impl Fn(&QueryEval) -> f64) -> f64 {
        mean_std(&self.per_query.iter().map(f).collect::<Vec<_>>()).0
    }

    pub fn mrr_retrieval(&self) -> f64 {
        self.mean_of(|q| q.mrr_retrieval)
    }

    pub fn mrr_e2e(&self) -> f64 {
        self.mean_of(|q| q.mrr_e2e)
    }

    pub fn mrr_exact(&self) -> f64 {
        self.mean_of(|q| q.mrr_exact)
    }

    pub fn success_e2e(&self) -> f64 {
        self.mean_of(|q| q.success_e2e)
    }

    /// Mean and standard deviation of R(k) at k'.
    pub fn overlap(&self, k: usize, k_prime: usize) -> Option<(f64, f64)> {
        let at = self
            .settings
            .overlap
            .iter()
            .position(|&p| p == (k, k_prime))?;
        let values: Vec<f64> = self.per_query.iter().map(|q| q.overlap[at].value).collect();
        Some(mean_std(&values))
    }

    pub fn report(&self) -> EvalReport {
        let mut r = EvalReport::default();
        let c = &self.config;
        let s = &self.settings;
        r.push("seed", self.seed);
        r.push("k_q", c.k_q);
        r.push("k_d", c.k_d);
        r.push("k_candidates", c.k_candidates);
        r.push("k_final", c.k_final);
        r.push("algorithm", c.algorithm);
        r.push("num_queries", self.per_query.len());
        r.push(
            format!("mrr_at_{}.retrieval", s.mrr_k),
            self.mrr_retrieval(),
        );
        r.push(format!("mrr_at_{}.e2e", s.mrr_k), self.mrr_e2e());
        r.push(format!("mrr_at_{}.exact", s.mrr_k), self.mrr_exact());
        r.push(
            format!("success_at_{}.e2e", s.success_k),
            self.success_e2e(),
        );
        for &(k, kp) in &s.overlap {
            let (mean, std) = self.overlap(k, kp).unwrap_or_default();
            r.push(format!("r_overlap.k{k}.kp{kp}.mean"), mean);
            r.push(format!("r_overlap.k{k}.kp{kp}.std"), std);
        }
        if let Some(m) = &self.mrt {
            r.push("mean_response_time_ms", m.mean_ms);
        }
        for q in &self.per_query {
            let p = format!("query.{}", q.query_id);
            r.push(format!("{p}.mrr_at_{}.retrieval", s.mrr_k), q.mrr_retrieval);
            r.push(format!("{p}.mrr_at_{}.e2e", s.mrr_k), q.mrr_e2e);
            r.push(format!("{p}.success_at_{}.e2e", s.success_k), q.success_e2e);
            for (&(k, kp), o) in s.overlap.iter().zip(&q.overlap) {
                r.push(format!("{p}.r_overlap.k{k}.kp{kp}"), o.value);
            }
        }
        if let Some(m) = &self.mrt {
            for (q, ms) in self.per_query.iter().zip(&m.per_query_ms) {
                r.push(format!("query.{}.response_time_ms", q.query_id), ms);
            }
        }
        r
    }
}

/// Runs sparse retrieval, end-to-end re-ranking and the exact teacher for
/// every query with judgments in `qrels`.
pub fn evaluate(
    pipeline: &Pipeline<'_>,
    queries: &EmbeddingStore,
    qrels: &BTreeMap<u64, Vec<u64>>,
    settings: &EvalSettings,
    seed: u64,
) -> Result<EvalSummary> {
    let dense = pipeline
        .dense
        .ok_or_else(|| Error::Usage("evaluation needs a dense document store".into()))?;
    let judged: Vec<(&TokenEmbeddingRecord, &Vec<u64>)> = queries
        .iter()
        .filter_map(|q| qrels.get(&q.id()).map(|rel| (q, rel)))
        .collect();
    if judged.is_empty() {
        return Err(Error::validation("no query has relevance judgments"));
    }
    let exact_depth = settings
        .overlap
        .iter()
        .map(|p| p.0)
        .chain([settings.mrr_k])
        .max()
        .unwrap_or(10);
    let per_query = judged
        .par_iter()
        .map(|&(q, rel)| {
            let approx = pipeline.run_retrieval(q)?;
            let candidates: Vec<u64> = approx.ids().collect();
            let e2e = rerank(q, &candidates, dense, pipeline.config.k_final)?;
            let exact = teacher_rank(q, dense, exact_depth)?;
            let overlap = settings
                .overlap
                .iter()
                .map(|&(k, kp)| recall_overlap(&approx, &exact, k, kp))
                .collect::<Result<Vec<_>>>()?;
            Ok(QueryEval {
                query_id: q.id(),
                mrr_retrieval: mrr_at_k(&approx, rel, settings.mrr_k)?,
                mrr_e2e: mrr_at_k(&e2e, rel, settings.mrr_k)?,
                mrr_exact: mrr_at_k(&exact, rel, settings.mrr_k)?,
                success_e2e: success_at_k(&e2e, rel, settings.success_k)?,
                overlap,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mrt = if settings.mrt_repetitions > 0 {
        let encoded = judged
            .iter()
            .map(|(q, _)| pipeline.encode_query(q))
            .collect::<Result<Vec<_>>>()?;
        Some(measure_mrt(
            pipeline.index,
            &encoded,
            pipeline.config.k_candidates,
            pipeline.config.algorithm,
            settings.mrt_repetitions,
        )?)
    } else {
        None
    };
    Ok(EvalSummary {
        config: pipeline.config,
        settings: settings.clone(),
        seed,
        per_query,
        mrt,
    })
}

/// Ordered `key=value` lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvalReport {
    entries: Vec<(String, String)>,
}

impl EvalReport {
    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        for (k, v) in &self.entries {
            writeln!(w, "{k}={v}")?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    pub fn read_from(r: impl BufRead) -> Result<Self> {
        let mut report = EvalReport::default();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::format("eval report", format!("line {}: missing '='", i + 1))
            })?;
            report.push(k, v);
        }
        Ok(report)
    }
}

/// Documents, queries and judgments shared by every sweep row.
#[derive(Debug, Clone, Copy)]
pub struct EvalData<'a> {
    pub dense: &'a DenseDocStore<'a>,
    pub queries: &'a EmbeddingStore,
    pub qrels: &'a BTreeMap<u64, Vec<u64>>,
}

/// One row of a pooling-size sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub k_q: usize,
    pub k_d: usize,
    pub mrt_ms: f64,
    pub mrr_retrieval: f64,
    pub mrr_e2e: f64,
    pub r_overlap: f64,
}

/// Header and rows as tab-separated text.
pub fn format_sweep_table(rows: &[SweepRow], overlap: (usize, usize)) -> String {
    let mut s = format!(
        "k_q\tk_d\tmrt_ms\tmrr_retrieval\tmrr_e2e\tr{}_at_{}\n",
        overlap.0, overlap.1
    );
    for r in rows {
        let _ = writeln!(
            s,
            "{}\t{}\t{:.4}\t{:.4}\t{:.4}\t{:.4}",
            r.k_q, r.k_d, r.mrt_ms, r.mrr_retrieval, r.mrr_e2e, r.r_overlap
        );
    }
    s
}

/// Interleaved latency rounds per sweep; each row keeps its fastest round.
pub const SWEEP_MRT_ROUNDS: usize = 5;

/// Re-indexes and evaluates the corpus once per `(k_q, k_d)` pair.
/// `settings.overlap[0]` supplies the R(k) column. When
/// `settings.mrt_repetitions > 0`, latency is measured after all rows are
/// evaluated, in [`SWEEP_MRT_ROUNDS`] rounds that visit every row in turn, and
/// each row reports its fastest round so that a slow period on a shared
/// machine does not favour one row.
pub fn sweep(
    head: &AdapterHead,
    data: EvalData<'_>,
    grid: &[(usize, usize)],
    base: PipelineConfig,
    options: BuildOptions,
    settings: &EvalSettings,
) -> Result<Vec<SweepRow>> {
    let &(ok, okp) = settings
        .overlap
        .first()
        .ok_or_else(|| Error::validation("sweep needs one R(k) cutoff"))?;
    let quality_only = EvalSettings {
        mrt_repetitions: 0,
        ..settings.clone()
    };
    let mut rows = Vec::with_capacity(grid.len());
    let mut timed = Vec::with_capacity(grid.len());
    for &(k_q, k_d) in grid {
        let index = index_corpus(head, data.dense.store(), k_d, options)?;
        let config = PipelineConfig { k_q, k_d, ..base };
        let pipeline = Pipeline::new(head, &index, Some(data.dense), config)?;
        let summary = evaluate(&pipeline, data.queries, data.qrels, &quality_only, 0)?;
        rows.push(SweepRow {
            k_q,
            k_d,
            mrt_ms: 0.0,
            mrr_retrieval: summary.mrr_retrieval(),
            mrr_e2e: summary.mrr_e2e(),
            r_overlap: summary.overlap(ok, okp).map_or(0.0, |o| o.0),
        });
        if settings.mrt_repetitions > 0 {
            let encoded = data
                .queries
                .iter()
                .filter(|q| data.qrels.contains_key(&q.id()))
                .map(|q| head.encode(q, k_q))
                .collect::<Result<Vec<_>>>()?;
            timed.push((index, encoded));
        }
    }
    if settings.mrt_repetitions > 0 {
        for row in rows.iter_mut() {
            row.mrt_ms = f64::INFINITY;
        }
        for _ in 0..SWEEP_MRT_ROUNDS {
            for (row, (index, encoded)) in rows.iter_mut().zip(&timed) {
                let mrt = measure_mrt(
                    index,
                    encoded,
                    base.k_candidates,
                    base.algorithm,
                    settings.mrt_repetitions,
                )?;
                row.mrt_ms = row.mrt_ms.min(mrt.mean_ms);
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::seq::SliceRandom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn list(ids: &[u64]) -> RankedList {
        let n = ids.len() as f64;
        RankedList::new(
            ids.iter()
                .enumerate()
                .map(|(i, &id)| (id, n - i as f64))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn config_rejects_final_above_candidates() {
        let c = PipelineConfig {
            k_candidates: 5,
            k_final: 10,
            ..PipelineConfig::default()
        };
        assert!(matches!(c.validate(), Err(Error::Usage(_))));
    }

    #[test]
    fn overlap_examples() {
        let a = list(&[1, 2, 3, 4]);
        assert_eq!(recall_overlap(&a, &a, 4, 4).unwrap().value, 1.0);
        let b = list(&[5, 6, 7, 8]);
        assert_eq!(recall_overlap(&b, &a, 4, 4).unwrap().value, 0.0);
        assert!(recall_overlap(&a, &a, 0, 4).is_err());
        let short = recall_overlap(&list(&[1, 2]), &a, 4, 10).unwrap();
        assert!(short.truncated);
        assert_eq!(short.value, 0.5);
    }

    #[test]
    fn overlap_matches_set_oracle_and_grows_with_k_prime() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let mut ids: Vec<u64> = (0..60).collect();
            ids.shuffle(&mut rng);
            let exact = list(&ids[..30]);
            ids.shuffle(&mut rng);
            let approx = list(&ids[..40]);
            let k = rng.random_range(1..=30);
            let mut prev = 0.0;
            for kp in 1..=40 {
                let got = recall_overlap(&approx, &exact, k, kp).unwrap().value;
                let e: BTreeSet<u64> = exact.ids().take(k).collect();
                let a: BTreeSet<u64> = approx.ids().take(kp).collect();
                let want = e.intersection(&a).count() as f64 / k as f64;
                assert_eq!(got, want);
                assert!(got >= prev && (0.0..=1.0).contains(&got));
                prev = got;
            }
        }
    }

    #[test]
    fn mrr_and_success_examples() {
        let r = list(&[7, 8, 9, 10, 11]);
        assert_eq!(mrr_at_k(&r, &[7], 10).unwrap(), 1.0);
        assert_eq!(mrr_at_k(&r, &[10], 10).unwrap(), 0.25);
        assert_eq!(mrr_at_k(&r, &[10], 3).unwrap(), 0.0);
        assert!(mrr_at_k(&r, &[], 10).is_err());
        assert_eq!(success_at_k(&r, &[7], 5).unwrap(), 1.0);
        assert_eq!(success_at_k(&r, &[99], 5).unwrap(), 0.0);
    }

    #[test]
    fn metrics_match_loop_oracles() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..300 {
            let mut ids: Vec<u64> = (0..30).collect();
            ids.shuffle(&mut rng);
            let r = list(&ids[..20]);
            let rel: Vec<u64> = (0..rng.random_range(1..4))
                .map(|_| rng.random_range(0..30))
                .collect();
            let k = rng.random_range(1..25);
            let mut rr = 0.0;
            let mut hit = 0.0;
            for (i, &(id, _)) in r.entries().iter().enumerate() {
                if i >= k {
                    break;
                }
                if rel.contains(&id) {
                    if rr == 0.0 {
                        rr = 1.0 / (i + 1) as f64;
                    }
                    hit = 1.0;
                }
            }
            assert_eq!(mrr_at_k(&r, &rel, k).unwrap(), rr);
            assert_eq!(success_at_k(&r, &rel, k).unwrap(), hit);
        }
    }

    #[test]
    fn report_round_trips_through_text() {
        let mut r = EvalReport::default();
        r.push("seed", 7);
        r.push("mrr_at_10.e2e", 0.1 + 0.2);
        r.push("algorithm", Algorithm::MaxScore);
        let back = EvalReport::read_from(r.to_text().as_bytes()).unwrap();
        assert_eq!(back, r);
        assert_eq!(back.get_f64("mrr_at_10.e2e"), Some(0.1 + 0.2));
        assert_eq!(back.get("algorithm"), Some("maxscore"));
    }

    #[test]
    fn mean_std_values() {
        assert_eq!(mean_std(&[2.0, 4.0]), (3.0, 1.0));
        assert_eq!(mean_std(&[]), (0.0, 0.0));
    }
}
