//! Seeded synthetic corpora.
//!
//! Document terms follow a Zipf law over the vocabulary (term id = rank − 1).
//! Each query is a few distinct terms of one sampled source document plus
//! optional uniform noise tokens; the source document is its only relevant
//! item. Evaluation and training queries are drawn from separate streams.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::embedding::{EmbeddingStore, SynthEncoder, VocabularyConfig};
use crate::error::{Error, Result};
use crate::head::SparseVector;

const DOC_STREAM: u64 = 1;
const QUERY_STREAM: u64 = 2;
const TRAIN_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub num_docs: usize,
    pub num_queries: usize,
    pub num_train_queries: usize,
    pub vocab_size: usize,
    pub dim: usize,
    pub seed: u64,
    pub zipf_exponent: f64,
    /// Inclusive document length range, in tokens.
    pub doc_len: (usize, usize),
    /// Inclusive range of source terms per query.
    pub query_terms: (usize, usize),
    /// Inclusive range of noise tokens per query.
    pub query_noise: (usize, usize),
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            num_docs: 2000,
            num_queries: 200,
            num_train_queries: 400,
            vocab_size: 5000,
            dim: 32,
            seed: 7,
            zipf_exponent: 1.0,
            doc_len: (20, 40),
            query_terms: (3, 6),
            query_noise: (0, 1),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_docs == 0 {
            return Err(Error::validation("need at least one document"));
        }
        VocabularyConfig::new(self.vocab_size, self.dim, self.seed)?;
        if !(self.zipf_exponent.is_finite() && self.zipf_exponent > 0.0) {
            return Err(Error::validation("zipf exponent must be positive"));
        }
        let ranges = [
            ("doc_len", self.doc_len),
            ("query_terms", self.query_terms),
            ("query_noise", self.query_noise),
        ];
        for (name, (lo, hi)) in ranges {
            if lo > hi {
                return Err(Error::validation(format!(
                    "{name}: empty range {lo}..={hi}"
                )));
            }
        }
        if self.doc_len.0 == 0 || self.query_terms.0 == 0 {
            return Err(Error::validation(
                "documents and queries need at least one token",
            ));
        }
        Ok(())
    }

    pub fn vocabulary(&self) -> VocabularyConfig {
        VocabularyConfig {
            vocab_size: self.vocab_size,
            dim: self.dim,
            seed: self.seed,
        }
    }
}

/// A query with its single relevant document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthQuery {
    pub id: u64,
    pub tokens: Vec<u32>,
    pub relevant: u64,
}

/// Term sequences of a synthetic collection.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub config: SynthConfig,
    pub docs: Vec<(u64, Vec<u32>)>,
    pub queries: Vec<SynthQuery>,
    pub train_queries: Vec<SynthQuery>,
}

/// Frozen embedding stores for a synthetic collection.
#[derive(Debug, Clone)]
pub struct SynthStores {
    pub encoder: SynthEncoder,
    pub docs: EmbeddingStore,
    pub queries: EmbeddingStore,
    pub train_queries: EmbeddingStore,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

fn zipf(n: usize, s: f64) -> Result<Zipf<f64>> {
    Zipf::new(n as f64, s).map_err(|e| Error::validation(format!("zipf: {e}")))
}

fn sample_term(dist: &Zipf<f64>, rng: &mut ChaCha8Rng, n: usize) -> u32 {
    (dist.sample(rng) as usize).clamp(1, n) as u32 - 1
}

fn make_queries(
    config: &SynthConfig,
    docs: &[(u64, Vec<u32>)],
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<SynthQuery> {
    (0..count as u64)
        .map(|id| {
            let (doc_id, doc) = &docs[rng.random_range(0..docs.len())];
            let mut distinct = doc.clone();
            distinct.sort_unstable();
            distinct.dedup();
            distinct.shuffle(rng);
            let n = rng
                .random_range(config.query_terms.0..=config.query_terms.1)
                .min(distinct.len());
            let mut tokens = distinct[..n].to_vec();
            let noise = rng.random_range(config.query_noise.0..=config.query_noise.1);
            for _ in 0..noise {
                let at = rng.random_range(0..=tokens.len());
                tokens.insert(at, rng.random_range(0..config.vocab_size as u32));
            }
            SynthQuery {
                id,
                tokens,
                relevant: *doc_id,
            }
        })
        .collect()
}

impl SynthCorpus {
    pub fn generate(config: &SynthConfig) -> Result<Self> {
        config.validate()?;
        let dist = zipf(config.vocab_size, config.zipf_exponent)?;
        let mut rng = stream(config.seed, DOC_STREAM);
        let docs: Vec<(u64, Vec<u32>)> = (0..config.num_docs as u64)
            .map(|id| {
                let len = rng.random_range(config.doc_len.0..=config.doc_len.1);
                let toks = (0..len)
                    .map(|_| sample_term(&dist, &mut rng, config.vocab_size))
                    .collect();
                (id, toks)
            })
            .collect();
        let queries = make_queries(
            config,
            &docs,
            config.num_queries,
            &mut stream(config.seed, QUERY_STREAM),
        );
        let train_queries = make_queries(
            config,
            &docs,
            config.num_train_queries,
            &mut stream(config.seed, TRAIN_STREAM),
        );
        Ok(SynthCorpus {
            config: config.clone(),
            docs,
            queries,
            train_queries,
        })
    }

    /// Runs the synthetic encoder over every sequence.
    pub fn embed(&self) -> Result<SynthStores> {
        let encoder = SynthEncoder::new(self.config.vocabulary())?;
        let fill = |items: &mut dyn Iterator<Item = (u64, &[u32])>| -> Result<EmbeddingStore> {
            let mut store = EmbeddingStore::new(self.config.vocab_size, self.config.dim);
            for (id, toks) in items {
                store.put(encoder.encode(id, toks)?)?;
            }
            store.freeze();
            Ok(store)
        };
        let docs = fill(&mut self.docs.iter().map(|(id, t)| (*id, t.as_slice())))?;
        let queries = fill(&mut self.queries.iter().map(|q| (q.id, q.tokens.as_slice())))?;
        let train_queries = fill(
            &mut self
                .train_queries
                .iter()
                .map(|q| (q.id, q.tokens.as_slice())),
        )?;
        Ok(SynthStores {
            encoder,
            docs,
            queries,
            train_queries,
        })
    }

    /// `(query id, relevant doc id)` pairs of the training queries.
    pub fn train_pairs(&self) -> Vec<(u64, u64)> {
        self.train_queries
            .iter()
            .map(|q| (q.id, q.relevant))
            .collect()
    }
}

/// Random sparse document vectors with Zipf-distributed terms and uniform
/// weights in `(0, 1]`, keyed by id `0..num_docs`.
pub fn zipf_sparse_corpus(
    num_docs: usize,
    vocab_size: usize,
    terms_per_doc: usize,
    exponent: f64,
    seed: u64,
) -> Result<Vec<(u64, SparseVector)>> {
    let dist = zipf(vocab_size, exponent)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..num_docs as u64)
        .map(|id| {
            let pairs: Vec<(u32, f64)> = (0..terms_per_doc)
                .map(|_| {
                    let t = sample_term(&dist, &mut rng, vocab_size);
                    (t, 1.0 - rng.random::<f64>())
                })
                .collect();
            let mut pairs = pairs;
            pairs.sort_by_key(|p| p.0);
            pairs.dedup_by_key(|p| p.0);
            Ok((id, SparseVector::new(pairs)?))
        })
        .collect()
}

/// Least-squares slope of log(frequency) against log(rank) over the `top`
/// most frequent terms.
pub fn rank_frequency_slope(counts: &[u64], top: usize) -> Option<f64> {
    let mut sorted: Vec<u64> = counts.iter().copied().filter(|&c| c > 0).collect();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    sorted.truncate(top);
    if sorted.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = sorted
        .iter()
        .enumerate()
        .map(|(r, &c)| (((r + 1) as f64).ln(), (c as f64).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthConfig {
        SynthConfig {
            num_docs: 50,
            num_queries: 10,
            num_train_queries: 5,
            vocab_size: 300,
            dim: 8,
            seed: 3,
            ..SynthConfig::default()
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = SynthCorpus::generate(&small()).unwrap();
        let b = SynthCorpus::generate(&small()).unwrap();
        assert_eq!(a, b);
        let c = SynthCorpus::generate(&SynthConfig { seed: 4, ..small() }).unwrap();
        assert_ne!(a.docs, c.docs);
    }

    #[test]
    fn queries_come_from_their_source() {
        let cfg = SynthConfig {
            query_noise: (0, 0),
            ..small()
        };
        let c = SynthCorpus::generate(&cfg).unwrap();
        for q in c.queries.iter().chain(&c.train_queries) {
            let doc = &c.docs[q.relevant as usize].1;
            assert!(q.tokens.iter().all(|t| doc.contains(t)));
            let mut uniq = q.tokens.clone();
            uniq.sort_unstable();
            uniq.dedup();
            assert_eq!(uniq.len(), q.tokens.len());
            assert!(!q.tokens.is_empty() && q.tokens.len() <= 6);
        }
        for (_, d) in &c.docs {
            assert!((20..=40).contains(&d.len()));
        }
    }

    #[test]
    fn minimal_setup_is_valid() {
        let cfg = SynthConfig {
            num_docs: 1,
            num_queries: 1,
            num_train_queries: 1,
            vocab_size: 2,
            dim: 2,
            doc_len: (1, 1),
            ..SynthConfig::default()
        };
        let c = SynthCorpus::generate(&cfg).unwrap();
        let stores = c.embed().unwrap();
        assert_eq!(stores.docs.len(), 1);
        assert_eq!(stores.queries.len(), 1);
    }

    #[test]
    fn term_frequencies_follow_zipf() {
        let cfg = SynthConfig {
            num_docs: 2000,
            num_queries: 0,
            num_train_queries: 0,
            vocab_size: 5000,
            ..SynthConfig::default()
        };
        let c = SynthCorpus::generate(&cfg).unwrap();
        let mut counts = vec![0u64; cfg.vocab_size];
        for (_, d) in &c.docs {
            for &t in d {
                counts[t as usize] += 1;
            }
        }
        let slope = rank_frequency_slope(&counts, 200).unwrap();
        assert!((slope + 1.0).abs() < 0.2, "slope {slope}");
    }

    #[test]
    fn slope_of_exact_power_law() {
        let counts: Vec<u64> = (1..=100u64).map(|r| 1_000_000 / (r * r)).collect();
        let s = rank_frequency_slope(&counts, 100).unwrap();
        assert!((s + 2.0).abs() < 0.01);
    }

    #[test]
    fn sparse_corpus_shape() {
        let docs = zipf_sparse_corpus(100, 1000, 30, 1.0, 1).unwrap();
        assert_eq!(docs.len(), 100);
        for (_, v) in &docs {
            assert!(!v.is_empty() && v.len() <= 30);
            assert!(v.entries().iter().all(|e| e.1 > 0.0 && e.1 <= 1.0));
        }
    }
}
