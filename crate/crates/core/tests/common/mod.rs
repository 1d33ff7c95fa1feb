//! Checks shared by the integration tests and the acceptance harness. Each
//! check returns a summary; callers decide the size and the verdict.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use splate_core::embedding::{
    EmbeddingStore, SynthEncoder, TokenEmbeddingRecord, VocabularyConfig,
};
use splate_core::eval::{index_corpus, Pipeline, PipelineConfig};
use splate_core::head::{sparse_dot, Activation, AdapterHead, SparseVector};
use splate_core::index::{Algorithm, BuildOptions, InvertedIndex, RetrievalStats};
use splate_core::late_interaction::{teacher_rank, DenseDocStore};
use splate_core::numerics::{Matrix, Vector};
use splate_core::synth::{zipf_sparse_corpus, SynthConfig, SynthCorpus, SynthStores};
use splate_core::trainer::{
    distillation_loss, example_loss_and_gradients, TrainConfig, TrainingData, TrainingExample,
};

pub const ALGORITHMS: [Algorithm; 2] = [Algorithm::BlockMaxWand, Algorithm::MaxScore];

// ---------------------------------------------------------------- pruning

/// Independent reference: quantize with `ceil(w / scale)` clamped to
/// `[1, 2^bits - 1]`, score with integer dot products, order by score then id.
pub fn oracle_topk(
    docs: &BTreeMap<u64, SparseVector>,
    query: &SparseVector,
    bits: u8,
    k: usize,
) -> Vec<(u64, u64)> {
    let levels = (1u64 << bits) - 1;
    let q = |w: f64, scale: f64| ((w / scale).ceil() as u64).clamp(1, levels);
    let dmax = docs
        .values()
        .flat_map(|d| d.entries())
        .map(|e| e.1)
        .fold(0.0, f64::max);
    let dscale = dmax / levels as f64;
    let qmax = query.entries().iter().map(|e| e.1).fold(0.0, f64::max);
    if qmax <= 0.0 {
        return Vec::new();
    }
    let qscale = qmax / levels as f64;
    let qterms: BTreeMap<u32, u64> = query
        .entries()
        .iter()
        .map(|&(t, w)| (t, q(w, qscale)))
        .collect();
    let mut hits: Vec<(u64, u64)> = docs
        .iter()
        .filter_map(|(&id, d)| {
            let s: u64 = d
                .entries()
                .iter()
                .filter_map(|&(t, w)| qterms.get(&t).map(|&qi| qi * q(w, dscale)))
                .sum();
            (s > 0).then_some((id, s))
        })
        .collect();
    hits.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    hits.truncate(k);
    hits
}

#[derive(Debug, Default)]
pub struct PruningSafety {
    pub cases: usize,
    pub mismatches: Vec<String>,
}

fn random_sparse(
    rng: &mut ChaCha8Rng,
    vocab: usize,
    max_terms: usize,
    coarse: bool,
) -> SparseVector {
    let n = rng.random_range(0..=max_terms.min(vocab));
    let mut terms: Vec<u32> = (0..vocab as u32).collect();
    terms.shuffle(rng);
    SparseVector::from_pairs(terms[..n].iter().map(|&t| {
        // coarse weights produce many exact score ties
        let w = if coarse {
            f64::from(rng.random_range(1..=4u32)) * 0.25
        } else {
            1.0 - rng.random::<f64>()
        };
        (t, w)
    }))
    .unwrap()
}

/// Random corpora (at most 500 docs, vocabulary at most 200), random queries,
/// `k` drawn from `{1, 5, 10, 50}`: every pruned algorithm and the exhaustive
/// scorer must agree with [`oracle_topk`] on ids, order and scores.
pub fn pruning_safety(cases: usize, seed: u64) -> PruningSafety {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = PruningSafety::default();
    for case in 0..cases {
        let vocab = rng.random_range(2..=200);
        let n_docs = rng.random_range(1..=500);
        let coarse = rng.random_bool(0.5);
        let bits = [2u8, 4, 8, 8, 12][rng.random_range(0..5)];
        let block = [1usize, 3, 8, 64][rng.random_range(0..4)];
        let k = [1usize, 5, 10, 50][rng.random_range(0..4)];
        let mut docs: BTreeMap<u64, SparseVector> = (0..n_docs)
            .map(|_| {
                let id = rng.random_range(0..100_000u64);
                (id, random_sparse(&mut rng, vocab, 30, coarse))
            })
            .collect();
        // the index needs one non-empty document
        docs.insert(u64::MAX, SparseVector::from_pairs([(0, 1.0)]).unwrap());
        let index = InvertedIndex::build(
            &docs,
            vocab,
            BuildOptions {
                quantization_bits: bits,
                block_length: block,
            },
        )
        .unwrap();
        for _ in 0..3 {
            let query = random_sparse(&mut rng, vocab, 12, coarse);
            let expected = oracle_topk(&docs, &query, bits, k);
            let factor = index.quantize_query(&query).scale * index.meta().global_scale;
            let expected: Vec<(u64, f64)> = expected
                .iter()
                .map(|&(id, s)| (id, s as f64 * factor))
                .collect();
            for algo in [
                Algorithm::Exhaustive,
                Algorithm::BlockMaxWand,
                Algorithm::MaxScore,
            ] {
                let got = index.retrieve(&query, k, algo).0.into_entries();
                if got != expected {
                    out.mismatches.push(format!(
                        "case {case} {algo}: vocab {vocab}, docs {}, bits {bits}, block {block}, k {k}",
                        docs.len()
                    ));
                }
            }
            out.cases += 1;
        }
    }
    out
}

/// Totals over a query set for one algorithm.
#[derive(Debug, Clone, Copy, Default)]
pub struct Effectiveness {
    pub total: usize,
    pub scored: usize,
    pub skipped: usize,
}

impl Effectiveness {
    pub fn fraction_scored(&self) -> f64 {
        self.scored as f64 / self.total.max(1) as f64
    }
}

/// Zipf corpus of `num_docs` documents, queries drawn from the same
/// distribution, top 10.
pub fn pruning_effectiveness(
    num_docs: usize,
    num_queries: usize,
) -> Vec<(Algorithm, Effectiveness)> {
    let vocab = 5000;
    let docs: BTreeMap<u64, SparseVector> = zipf_sparse_corpus(num_docs, vocab, 60, 1.0, 11)
        .unwrap()
        .into_iter()
        .collect();
    let queries = zipf_sparse_corpus(num_queries, vocab, 6, 1.0, 12).unwrap();
    let index = InvertedIndex::build(&docs, vocab, BuildOptions::default()).unwrap();
    ALGORITHMS
        .iter()
        .map(|&algo| {
            let mut e = Effectiveness::default();
            for (_, q) in &queries {
                let s: RetrievalStats = index.retrieve(q, 10, algo).1;
                e.total += s.postings_total;
                e.scored += s.postings_scored;
                e.skipped += s.postings_skipped();
            }
            (algo, e)
        })
        .collect()
}

// ---------------------------------------------------------------- gradients

pub const BLOCK_NAMES: [&str; 5] = ["W_down", "b_down", "W_up", "b_up", "b"];

fn small_store(
    enc: &SynthEncoder,
    n: u64,
    len: std::ops::RangeInclusive<usize>,
    rng: &mut ChaCha8Rng,
) -> EmbeddingStore {
    let v = enc.config().vocab_size;
    let mut store = EmbeddingStore::new(v, enc.config().dim);
    for id in 0..n {
        let l = rng.random_range(len.clone());
        let toks: Vec<u32> = (0..l).map(|_| rng.random_range(0..v as u32)).collect();
        store.put(enc.encode(id, &toks).unwrap()).unwrap();
    }
    store.freeze();
    store
}

/// Loss of `example` with every support fixed to `supports` (query first).
fn fixed_support_loss(
    head: &AdapterHead,
    example: &TrainingExample,
    data: TrainingData<'_>,
    supports: &[Vec<u32>],
    config: &TrainConfig,
) -> f64 {
    let weights = |rec: &TokenEmbeddingRecord, terms: &[u32]| {
        let w = head.pooled_weights_on(rec, terms).unwrap();
        SparseVector::from_pairs(terms.iter().copied().zip(w)).unwrap()
    };
    let q = weights(data.queries.get(example.query_id).unwrap(), &supports[0]);
    let student: Vec<f64> = example
        .doc_ids()
        .zip(&supports[1..])
        .map(|(id, s)| sparse_dot(&q, &weights(data.docs.get(id).unwrap(), s)))
        .collect();
    distillation_loss(
        &student,
        &example.teacher_scores,
        config.loss_weight_margin,
        config.loss_weight_kl,
    )
    .unwrap()
    .0
}

/// Relative error `|a - f| / max(|a|, |f|)` per trainable block between the
/// analytic gradient and central finite differences on a `|V| = 50`, `d = 8`
/// instance with randomised parameters.
pub fn gradient_check(seed: u64, activation: Activation) -> [f64; 5] {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let enc = SynthEncoder::new(VocabularyConfig::new(50, 8, seed).unwrap()).unwrap();
    let docs = small_store(&enc, 8, 3..=8, &mut rng);
    let queries = small_store(&enc, 1, 2..=4, &mut rng);
    let data = TrainingData {
        queries: &queries,
        docs: &docs,
    };
    let head = AdapterHead::new(enc.projection().clone(), activation, seed)
        .unwrap()
        .with_random_parameters(seed ^ 0x5eed, 0.3);
    let example = TrainingExample {
        query_id: 0,
        positive_id: 0,
        negative_ids: vec![1, 2, 3, 4, 5],
        teacher_scores: (0..6).map(|_| rng.random_range(0.0..4.0)).collect(),
    };
    let config = TrainConfig {
        k_q: 6,
        k_d: 15,
        ..TrainConfig::default()
    };
    let (_, grads) = example_loss_and_gradients(&head, &example, data, &config).unwrap();

    let mut supports = vec![head
        .encode(queries.get(0).unwrap(), config.k_q)
        .unwrap()
        .terms()
        .collect::<Vec<_>>()];
    for id in example.doc_ids() {
        supports.push(
            head.encode(docs.get(id).unwrap(), config.k_d)
                .unwrap()
                .terms()
                .collect(),
        );
    }

    let step = 1e-5;
    let mut errors = [0.0; 5];
    for (b, analytic) in grads.blocks().iter().enumerate() {
        let mut num = 0.0;
        let mut den_a = 0.0;
        let mut den_f = 0.0;
        for (i, &a) in analytic.iter().enumerate() {
            let eval = |delta: f64| {
                let mut h = head.clone();
                let p = h.trainable_mut();
                let blocks = [p.w_down, p.b_down, p.w_up, p.b_up, p.bias];
                blocks[b][i] += delta;
                fixed_support_loss(&h, &example, data, &supports, &config)
            };
            let fd = (eval(step) - eval(-step)) / (2.0 * step);
            num += (a - fd).powi(2);
            den_a += a * a;
            den_f += fd * fd;
        }
        let den = den_a.sqrt().max(den_f.sqrt());
        errors[b] = if den == 0.0 { 0.0 } else { num.sqrt() / den };
    }
    errors
}

// ---------------------------------------------------------------- identity init and pooling

fn unit_row(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Freshly initialised heads against the naive `h · Eᵀ + b` loop; returns the
/// number of instances whose logits differ in any bit.
pub fn identity_init_violations(instances: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for i in 0..instances {
        let d = [2usize, 4, 8, 16, 32][i % 5];
        let v = rng.random_range(2..=300);
        let e = splate_core::embedding::projection_matrix(
            &VocabularyConfig::new(v, d, i as u64).unwrap(),
        )
        .unwrap();
        let act = if i % 2 == 0 {
            Activation::Relu
        } else {
            Activation::Tanh
        };
        let head = AdapterHead::new(e.clone(), act, rng.random()).unwrap();
        let h: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();
        let got = head.mlm_logits(&Vector::new(h.clone()).unwrap()).unwrap();
        let expected: Vec<f64> = (0..v)
            .map(|t| {
                let mut s = 0.0;
                for (x, y) in h.iter().zip(e.row(t)) {
                    s += x * y;
                }
                s + head.bias()[t]
            })
            .collect();
        let same = got
            .as_slice()
            .iter()
            .zip(&expected)
            .all(|(a, b)| a.to_bits() == b.to_bits());
        if !same {
            bad += 1;
        }
    }
    bad
}

/// Violations per pooling invariant: non-negativity, duplicate-token
/// idempotence, permutation invariance, support size at most `k`.
#[derive(Debug, Default, Clone, Copy)]
pub struct PoolingViolations {
    pub negative: usize,
    pub duplicate: usize,
    pub permutation: usize,
    pub sparsity: usize,
}

impl PoolingViolations {
    pub fn total(&self) -> usize {
        self.negative + self.duplicate + self.permutation + self.sparsity
    }
}

pub fn pooling_invariants(instances: usize, seed: u64) -> PoolingViolations {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (v, d) = (60, 8);
    let e = splate_core::embedding::projection_matrix(&VocabularyConfig::new(v, d, seed).unwrap())
        .unwrap();
    let mut out = PoolingViolations::default();
    for i in 0..instances {
        let head = AdapterHead::new(e.clone(), Activation::Relu, i as u64)
            .unwrap()
            .with_random_parameters(rng.random(), 0.5);
        let n = rng.random_range(1..=12);
        let tokens: Vec<u32> = (0..n).map(|_| rng.random_range(0..v as u32)).collect();
        let rows: Vec<Vec<f64>> = (0..n).map(|_| unit_row(&mut rng, d)).collect();
        let record = |toks: Vec<u32>, rows: &[Vec<f64>]| {
            TokenEmbeddingRecord::new(0, toks, Matrix::from_rows(rows).unwrap(), v).unwrap()
        };
        let base = head.pooled_weights(&record(tokens.clone(), &rows)).unwrap();
        if base.as_slice().iter().any(|&w| w < 0.0 || w.is_nan()) {
            out.negative += 1;
        }

        let dup = rng.random_range(0..n);
        let mut dt = tokens.clone();
        let mut dr = rows.clone();
        dt.push(tokens[dup]);
        dr.push(rows[dup].clone());
        if head.pooled_weights(&record(dt, &dr)).unwrap() != base {
            out.duplicate += 1;
        }

        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let pt = perm.iter().map(|&j| tokens[j]).collect();
        let pr: Vec<Vec<f64>> = perm.iter().map(|&j| rows[j].clone()).collect();
        if head.pooled_weights(&record(pt, &pr)).unwrap() != base {
            out.permutation += 1;
        }

        let k = rng.random_range(0..=v + 5);
        let sparse = head.encode(&record(tokens, &rows), k).unwrap();
        if sparse.len() > k || sparse.entries().iter().any(|e| e.1 <= 0.0) {
            out.sparsity += 1;
        }
    }
    out
}

// ---------------------------------------------------------------- pipeline

/// Small synthetic world for pipeline checks.
pub fn small_world(seed: u64) -> (SynthCorpus, SynthStores) {
    let config = SynthConfig {
        num_docs: 300,
        num_queries: 50,
        num_train_queries: 60,
        vocab_size: 800,
        dim: 16,
        seed,
        ..SynthConfig::default()
    };
    let corpus = SynthCorpus::generate(&config).unwrap();
    let stores = corpus.embed().unwrap();
    (corpus, stores)
}

/// With `k_candidates` equal to the corpus size, end-to-end results must equal
/// exhaustive MaxSim top-`k_final`. Returns the ids of queries that differ.
pub fn degenerate_exactness(stores: &SynthStores, head: &AdapterHead) -> Vec<u64> {
    let n = stores.docs.len();
    let config = PipelineConfig {
        k_q: 10,
        k_d: 100,
        k_candidates: n,
        k_final: 10,
        algorithm: Algorithm::BlockMaxWand,
    };
    let index = index_corpus(head, &stores.docs, config.k_d, BuildOptions::default()).unwrap();
    let dense = DenseDocStore::new(&stores.docs).unwrap();
    let pipeline = Pipeline::new(head, &index, Some(&dense), config).unwrap();
    stores
        .queries
        .iter()
        .filter(|q| {
            pipeline.run_e2e(q).unwrap() != teacher_rank(q, &dense, config.k_final).unwrap()
        })
        .map(|q| q.id())
        .collect()
}

/// Trend check: every step must not decrease, except that one decrease of at
/// most 5% relative is tolerated.
pub fn soft_nondecreasing(values: &[f64]) -> bool {
    let drops: Vec<f64> = values
        .windows(2)
        .filter(|w| w[1] < w[0])
        .map(|w| (w[0] - w[1]) / w[0].abs().max(f64::MIN_POSITIVE))
        .collect();
    drops.is_empty() || (drops.len() == 1 && drops[0] <= 0.05)
}
