//! Frozen per-token dense representations and a deterministic synthetic
//! encoder that stands in for a pretrained late-interaction backbone.
//!
//! The synthetic encoder reuses the rows of the frozen vocabulary projection
//! as per-term base vectors, so the adapter head's tied projection "knows"
//! the encoder it sits on. Each token vector is its base vector plus a seeded
//! mixture of its neighbours' base vectors, L2-normalised and rounded to
//! single precision (the on-disk payload type).

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::codec::{self, read_f32, read_u32, read_u64};
use crate::error::{Error, Result};
use crate::numerics::Matrix;

const STORE_MAGIC: &[u8; 4] = b"SPL8";
const STORE_VERSION: u32 = 1;
const NORM_TOLERANCE: f64 = 1e-6;

pub const DEFAULT_CONTEXT_WEIGHT: f64 = 0.3;
pub const DEFAULT_CONTEXT_WINDOW: usize = 2;

/// Vocabulary size, embedding dimension and the seed everything frozen is
/// derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VocabularyConfig {
    pub vocab_size: usize,
    pub dim: usize,
    pub seed: u64,
}

impl VocabularyConfig {
    pub fn new(vocab_size: usize, dim: usize, seed: u64) -> Result<Self> {
        let config = VocabularyConfig {
            vocab_size,
            dim,
            seed,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.vocab_size < 2 {
            return Err(Error::validation("vocab_size must be at least 2"));
        }
        if self.dim < 2 {
            return Err(Error::validation("dim must be at least 2"));
        }
        if self.vocab_size > u32::MAX as usize {
            return Err(Error::validation("vocab_size must fit in u32"));
        }
        Ok(())
    }
}

/// A query or document as an ordered list of term ids with one unit-norm
/// embedding row per token.
#[derive(Debug, Clone, PartialEq)]
pub struct TokenEmbeddingRecord {
    id: u64,
    tokens: Vec<u32>,
    embeddings: Matrix,
}

impl TokenEmbeddingRecord {
    pub fn new(id: u64, tokens: Vec<u32>, embeddings: Matrix, vocab_size: usize) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::validation(format!("record {id} has no tokens")));
        }
        if embeddings.rows() != tokens.len() {
            return Err(Error::Dimension {
                context: "TokenEmbeddingRecord rows",
                expected: tokens.len(),
                actual: embeddings.rows(),
            });
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t as usize >= vocab_size) {
            return Err(Error::validation(format!(
                "record {id}: term id {bad} out of range for vocabulary of {vocab_size}"
            )));
        }
        for r in 0..embeddings.rows() {
            let norm = embeddings.row(r).iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::validation(format!(
                    "record {id}: token {r} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(TokenEmbeddingRecord {
            id,
            tokens,
            embeddings,
        })
    }

    #[inline]
    pub fn id(&self) -> u64 {
        self.id
    }

    #[inline]
    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    #[inline]
    pub fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }

    #[inline]
    pub fn num_tokens(&self) -> usize {
        self.tokens.len()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }

    /// Embedding row of token `i`.
    #[inline]
    pub fn token(&self, i: usize) -> &[f64] {
        self.embeddings.row(i)
    }

    /// Same record under a different id.
    pub fn with_id(mut self, id: u64) -> Self {
        self.id = id;
        self
    }

    /// Rounds every embedding entry to single precision, the storage type.
    fn round_to_f32(&mut self) {
        for x in self.embeddings.as_mut_slice() {
            *x = f64::from(*x as f32);
        }
    }
}

/// The frozen `|V| × d` projection: seeded isotropic Gaussian rows, each
/// normalised to unit length.
pub fn projection_matrix(config: &VocabularyConfig) -> Result<Matrix> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut data = Vec::with_capacity(config.vocab_size * config.dim);
    let mut row = vec![0.0f64; config.dim];
    for _ in 0..config.vocab_size {
        loop {
            for x in row.iter_mut() {
                *x = StandardNormal.sample(&mut rng);
            }
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                data.extend(row.iter().map(|x| x / norm));
                break;
            }
        }
    }
    Matrix::from_vec(config.vocab_size, config.dim, data)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seeded mixing coefficient in (0, 1] for `neighbor` seen at `offset` from
/// `center`.
fn mixing_coefficient(seed: u64, center: u32, neighbor: u32, offset: isize) -> f64 {
    let mut h = splitmix64(seed ^ 0x5851_f42d_4c95_7f2d);
    h = splitmix64(h ^ u64::from(center));
    h = splitmix64(h ^ (u64::from(neighbor) << 20));
    h = splitmix64(h ^ (offset as i64 as u64));
    ((h >> 11) as f64 + 1.0) / (1u64 << 53) as f64
}

/// Deterministic stand-in for the frozen contextual encoder.
#[derive(Debug, Clone)]
pub struct SynthEncoder {
    config: VocabularyConfig,
    projection: Matrix,
    context_weight: f64,
    window: usize,
}

impl SynthEncoder {
    pub fn new(config: VocabularyConfig) -> Result<Self> {
        Ok(SynthEncoder {
            projection: projection_matrix(&config)?,
            config,
            context_weight: DEFAULT_CONTEXT_WEIGHT,
            window: DEFAULT_CONTEXT_WINDOW,
        })
    }

    pub fn with_context(mut self, weight: f64, window: usize) -> Result<Self> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::validation("context weight must be finite and >= 0"));
        }
        self.context_weight = weight;
        self.window = window;
        Ok(self)
    }

    pub fn config(&self) -> &VocabularyConfig {
        &self.config
    }

    /// The frozen projection whose rows double as term base vectors.
    pub fn projection(&self) -> &Matrix {
        &self.projection
    }

    /// Encodes a term-id sequence. Pure in `(config, tokens)`.
    pub fn encode(&self, id: u64, tokens: &[u32]) -> Result<TokenEmbeddingRecord> {
        if tokens.is_empty() {
            return Err(Error::validation(format!("record {id} has no tokens")));
        }
        if let Some(&bad) = tokens
            .iter()
            .find(|&&t| t as usize >= self.config.vocab_size)
        {
            return Err(Error::validation(format!(
                "record {id}: term id {bad} out of range for vocabulary of {}",
                self.config.vocab_size
            )));
        }
        let d = self.config.dim;
        let n = tokens.len();
        let mut data = Vec::with_capacity(n * d);
        let mut mix = vec![0.0f64; d];
        for (i, &t) in tokens.iter().enumerate() {
            let base = self.projection.row(t as usize);
            mix.iter_mut().for_each(|x| *x = 0.0);
            let mut total = 0.0;
            if self.context_weight > 0.0 && self.window > 0 {
                let lo = i.saturating_sub(self.window);
                let hi = (i + self.window).min(n - 1);
                for (j, &u) in tokens.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i {
                        continue;
                    }
                    let offset = j as isize - i as isize;
                    let alpha = mixing_coefficient(self.config.seed, t, u, offset);
                    total += alpha;
                    for (m, &e) in mix.iter_mut().zip(self.projection.row(u as usize)) {
                        *m += alpha * e;
                    }
                }
            }
            let scale = if total > 0.0 {
                self.context_weight / total
            } else {
                0.0
            };
            let v: Vec<f64> = base
                .iter()
                .zip(&mix)
                .map(|(&b, &m)| b + scale * m)
                .collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let v: &[f64] = if norm > 1e-12 { &v } else { base };
            let norm = if norm > 1e-12 { norm } else { 1.0 };
            data.extend(v.iter().map(|x| f64::from((x / norm) as f32)));
        }
        let embeddings = Matrix::from_vec(n, d, data)?;
        TokenEmbeddingRecord::new(id, tokens.to_vec(), embeddings, self.config.vocab_size)
    }
}

/// Write-once, read-many collection of records keyed by id.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingStore {
    vocab_size: usize,
    dim: usize,
    records: BTreeMap<u64, TokenEmbeddingRecord>,
    frozen: bool,
}

impl EmbeddingStore {
    pub fn new(vocab_size: usize, dim: usize) -> Self {
        EmbeddingStore {
            vocab_size,
            dim,
            records: BTreeMap::new(),
            frozen: false,
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Inserts a record; embeddings are rounded to single precision so that
    /// disk round trips are exact.
    pub fn put(&mut self, mut record: TokenEmbeddingRecord) -> Result<()> {
        if self.frozen {
            return Err(Error::Frozen);
        }
        if record.dim() != self.dim {
            return Err(Error::Dimension {
                context: "EmbeddingStore::put",
                expected: self.dim,
                actual: record.dim(),
            });
        }
        if let Some(&bad) = record
            .tokens
            .iter()
            .find(|&&t| t as usize >= self.vocab_size)
        {
            return Err(Error::validation(format!("term id {bad} out of range")));
        }
        if self.records.contains_key(&record.id) {
            return Err(Error::validation(format!(
                "duplicate record id {}",
                record.id
            )));
        }
        record.round_to_f32();
        self.records.insert(record.id, record);
        Ok(())
    }

    pub fn get(&self, id: u64) -> Result<&TokenEmbeddingRecord> {
        self.records.get(&id).ok_or(Error::NotFound(id))
    }

    pub fn contains(&self, id: u64) -> bool {
        self.records.contains_key(&id)
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Ids in ascending order.
    pub fn ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.records.keys().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = &TokenEmbeddingRecord> {
        self.records.values()
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        codec::write_header(w, STORE_MAGIC, STORE_VERSION)?;
        codec::write_u32(w, self.vocab_size as u32)?;
        codec::write_u32(w, self.dim as u32)?;
        codec::write_u64(w, self.records.len() as u64)?;
        for rec in self.records.values() {
            codec::write_u64(w, rec.id)?;
            codec::write_u32(w, rec.tokens.len() as u32)?;
            for &t in &rec.tokens {
                codec::write_u32(w, t)?;
            }
            for &x in rec.embeddings.as_slice() {
                codec::write_f32(w, x as f32)?;
            }
        }
        Ok(())
    }

    /// Reads a store; the result is frozen.
    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        const KIND: &str = "embedding store";
        codec::read_header(r, KIND, STORE_MAGIC, STORE_VERSION)?;
        let vocab_size = read_u32(r, KIND)? as usize;
        let dim = read_u32(r, KIND)? as usize;
        let count = read_u64(r, KIND)?;
        let mut store = EmbeddingStore::new(vocab_size, dim);
        for _ in 0..count {
            let id = read_u64(r, KIND)?;
            let n = read_u32(r, KIND)? as usize;
            let tokens = (0..n)
                .map(|_| read_u32(r, KIND))
                .collect::<Result<Vec<_>>>()?;
            let data = (0..n * dim)
                .map(|_| read_f32(r, KIND).map(f64::from))
                .collect::<Result<Vec<_>>>()?;
            let embeddings = Matrix::from_vec(n, dim, data)?;
            let rec = TokenEmbeddingRecord::new(id, tokens, embeddings, vocab_size)?;
            store.put(rec)?;
        }
        codec::expect_eof(r, KIND)?;
        store.freeze();
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let run = || -> Result<()> {
            let mut w = BufWriter::new(File::create(path)?);
            self.write_to(&mut w)?;
            w.flush()?;
            Ok(())
        };
        run().map_err(|e| e.at_path(path))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let run = || -> Result<Self> {
            let mut r = BufReader::new(File::open(path)?);
            EmbeddingStore::read_from(&mut r)
        };
        run().map_err(|e| e.at_path(path))
    }
}
