//! The sparse adapter head.
//!
//! Each frozen token vector `h` is adapted by a residual bottleneck MLP and
//! projected onto the vocabulary through the frozen tied projection `E`:
//!
//! ```text
//! logit(h, v) = (h + MLP(h)) · E_v + b_v
//! MLP(h)      = act(h · W_down + b_down) · W_up + b_up
//! ```
//!
//! Token logits are pooled into one vocabulary vector with
//! `w_v = max_i log(1 + relu(logit(h_i, v)))` and then pruned to the `k`
//! largest weights.
//!
//! `W_up` and `b_up` start at zero, so a fresh head is exactly the identity
//! adapter: its logits are `h · Eᵀ + b`. Only `W_down`, `b_down`, `W_up`,
//! `b_up` and `b` are trainable. `E` has no mutable accessor and no gradient.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::codec::{self, read_f64, read_u32};
use crate::embedding::TokenEmbeddingRecord;
use crate::error::{Error, Result};
use crate::numerics::{self, log1p_relu, log1p_relu_grad, matmul, Matrix, Vector};

const HEAD_MAGIC: &[u8; 4] = b"SPLH";
const HEAD_VERSION: u32 = 1;

/// Standard deviation of the seeded Gaussian used for `W_down`.
pub const W_DOWN_INIT_STD: f64 = 0.02;

/// Activation between the two MLP layers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Activation {
    #[default]
    Relu,
    Tanh,
}

impl Activation {
    pub fn tag(self) -> u32 {
        match self {
            Activation::Relu => 1,
            Activation::Tanh => 2,
        }
    }

    pub fn from_tag(tag: u32) -> Result<Self> {
        match tag {
            1 => Ok(Activation::Relu),
            2 => Ok(Activation::Tanh),
            other => Err(Error::format(
                "adapter checkpoint",
                format!("unknown activation tag {other}"),
            )),
        }
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => numerics::relu_scalar(x),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative given the pre-activation `x` and output `y`.
    #[inline]
    fn derivative(self, x: f64, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Query- and document-side pooling sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PoolingConfig {
    pub k_q: usize,
    pub k_d: usize,
}

impl PoolingConfig {
    pub fn new(k_q: usize, k_d: usize) -> Result<Self> {
        if k_q == 0 || k_d == 0 {
            return Err(Error::validation("pooling sizes must be at least 1"));
        }
        Ok(PoolingConfig { k_q, k_d })
    }
}

impl Default for PoolingConfig {
    fn default() -> Self {
        PoolingConfig { k_q: 10, k_d: 100 }
    }
}

/// Number of trainable parameters for a head over `dim`-dimensional tokens
/// and a `vocab_size` vocabulary.
pub fn trainable_parameter_count(dim: usize, vocab_size: usize) -> usize {
    let h = dim / 2;
    dim * h + h + h * dim + dim + vocab_size
}

/// Sparse vocabulary vector: `(term, weight)` pairs with strictly increasing
/// terms and strictly positive weights.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    entries: Vec<(u32, f64)>,
}

impl SparseVector {
    pub fn new(entries: Vec<(u32, f64)>) -> Result<Self> {
        for w in entries.windows(2) {
            if w[0].0 >= w[1].0 {
                return Err(Error::validation(
                    "sparse vector terms must be strictly increasing",
                ));
            }
        }
        if let Some(&(t, w)) = entries.iter().find(|(_, w)| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::validation(format!(
                "sparse vector weight for term {t} must be finite and positive, got {w}"
            )));
        }
        Ok(SparseVector { entries })
    }

    /// Builds from arbitrary pairs: drops non-positive weights, sorts by term,
    /// and keeps the largest weight for repeated terms.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (u32, f64)>) -> Result<Self> {
        let mut entries: Vec<(u32, f64)> = pairs.into_iter().filter(|&(_, w)| w > 0.0).collect();
        entries.sort_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)));
        entries.dedup_by_key(|e| e.0);
        SparseVector::new(entries)
    }

    pub fn empty() -> Self {
        SparseVector::default()
    }

    pub fn entries(&self) -> &[(u32, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = u32> + '_ {
        self.entries.iter().map(|e| e.0)
    }

    pub fn weight(&self, term: u32) -> Option<f64> {
        self.entries
            .binary_search_by_key(&term, |e| e.0)
            .ok()
            .map(|i| self.entries[i].1)
    }

    pub fn max_weight(&self) -> f64 {
        self.entries.iter().map(|e| e.1).fold(0.0, f64::max)
    }

    /// Entries ordered for display: descending weight, then ascending term.
    pub fn by_weight(&self) -> Vec<(u32, f64)> {
        let mut out = self.entries.clone();
        out.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        out
    }

    pub fn densify(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for &(t, w) in &self.entries {
            out[t as usize] = w;
        }
        out
    }
}

/// `Σ a_v · b_v` over the shared support.
pub fn sparse_dot(a: &SparseVector, b: &SparseVector) -> f64 {
    let (a, b) = (&a.entries, &b.entries);
    let (mut i, mut j) = (0, 0);
    let mut s = 0.0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                s += a[i].1 * b[j].1;
                i += 1;
                j += 1;
            }
        }
    }
    s
}

/// Keeps the `k` largest strictly positive weights (lower term id wins ties)
/// and returns them sorted by term id.
pub fn topk_prune(weights: &[f64], k: usize) -> SparseVector {
    let mut positive: Vec<(u32, f64)> = weights
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(t, &w)| (t as u32, w))
        .collect();
    let order = |a: &(u32, f64), b: &(u32, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if k == 0 {
        positive.clear();
    } else if positive.len() > k {
        positive.select_nth_unstable_by(k - 1, order);
        positive.truncate(k);
    }
    positive.sort_unstable_by_key(|e| e.0);
    SparseVector { entries: positive }
}

/// `w_v = max_i log(1 + relu(w_iv))` over the given token logit vectors.
pub fn splade_pool(token_logits: &[Vector]) -> Result<Vector> {
    let first = token_logits
        .first()
        .ok_or_else(|| Error::validation("pooling needs at least one token"))?;
    let n = first.len();
    let mut out = vec![0.0f64; n];
    for logits in token_logits {
        if logits.len() != n {
            return Err(Error::Dimension {
                context: "splade_pool",
                expected: n,
                actual: logits.len(),
            });
        }
        for (o, &x) in out.iter_mut().zip(logits.as_slice()) {
            let w = log1p_relu(x);
            if w > *o {
                *o = w;
            }
        }
    }
    Ok(Vector::from_trusted(out))
}

/// The adapter head: a trainable residual MLP and vocabulary bias over a
/// frozen tied projection.
#[derive(Debug, Clone, PartialEq)]
pub struct AdapterHead {
    activation: Activation,
    w_down: Matrix,
    b_down: Vector,
    w_up: Matrix,
    b_up: Vector,
    bias: Vector,
    projection: Matrix,
    projection_t: Matrix,
}

/// Mutable views of the trainable parameter blocks. `E` is deliberately not
/// reachable from here.
pub struct TrainableMut<'a> {
    pub w_down: &'a mut [f64],
    pub b_down: &'a mut [f64],
    pub w_up: &'a mut [f64],
    pub b_up: &'a mut [f64],
    pub bias: &'a mut [f64],
}

struct TokenForward {
    pre: Vec<f64>,
    act: Vec<f64>,
    adapted: Vec<f64>,
}

impl AdapterHead {
    /// Fresh head over the frozen `projection` (`|V| × d`): `W_down` is seeded
    /// Gaussian, everything else is zero.
    pub fn new(projection: Matrix, activation: Activation, seed: u64) -> Result<Self> {
        let d = projection.cols();
        let v = projection.rows();
        if d < 2 || v < 2 {
            return Err(Error::validation("projection must be at least 2 × 2"));
        }
        let h = d / 2;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, W_DOWN_INIT_STD).expect("valid std");
        let w_down = (0..d * h).map(|_| normal.sample(&mut rng)).collect();
        Ok(AdapterHead {
            activation,
            w_down: Matrix::from_vec(d, h, w_down)?,
            b_down: Vector::zeros(h),
            w_up: Matrix::zeros(h, d),
            b_up: Vector::zeros(d),
            bias: Vector::zeros(v),
            projection_t: projection.transpose(),
            projection,
        })
    }

    /// Assembles a head from explicit parameter blocks.
    pub fn from_parts(
        activation: Activation,
        w_down: Matrix,
        b_down: Vector,
        w_up: Matrix,
        b_up: Vector,
        bias: Vector,
        projection: Matrix,
    ) -> Result<Self> {
        let d = projection.cols();
        let v = projection.rows();
        let h = d / 2;
        let checks = [
            ("W_down rows", d, w_down.rows()),
            ("W_down cols", h, w_down.cols()),
            ("b_down", h, b_down.len()),
            ("W_up rows", h, w_up.rows()),
            ("W_up cols", d, w_up.cols()),
            ("b_up", d, b_up.len()),
            ("bias", v, bias.len()),
        ];
        for (context, expected, actual) in checks {
            if expected != actual {
                return Err(Error::Dimension {
                    context,
                    expected,
                    actual,
                });
            }
        }
        if d < 2 || v < 2 {
            return Err(Error::validation("projection must be at least 2 × 2"));
        }
        Ok(AdapterHead {
            activation,
            w_down,
            b_down,
            w_up,
            b_up,
            bias,
            projection_t: projection.transpose(),
            projection,
        })
    }

    /// Overwrites every trainable block with seeded uniform noise in
    /// `[-scale, scale]`. Used to get away from the identity initialisation
    /// in tests and demos.
    pub fn with_random_parameters(mut self, seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = self.trainable_mut();
        for block in [p.w_down, p.b_down, p.w_up, p.b_up, p.bias] {
            for x in block.iter_mut() {
                *x = rng.random_range(-scale..=scale);
            }
        }
        self
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn dim(&self) -> usize {
        self.projection.cols()
    }

    pub fn bottleneck(&self) -> usize {
        self.w_down.cols()
    }

    pub fn vocab_size(&self) -> usize {
        self.projection.rows()
    }

    pub fn w_down(&self) -> &Matrix {
        &self.w_down
    }

    pub fn b_down(&self) -> &Vector {
        &self.b_down
    }

    pub fn w_up(&self) -> &Matrix {
        &self.w_up
    }

    pub fn b_up(&self) -> &Vector {
        &self.b_up
    }

    pub fn bias(&self) -> &Vector {
        &self.bias
    }

    /// The frozen tied projection `E`.
    pub fn projection(&self) -> &Matrix {
        &self.projection
    }

    pub fn num_trainable_params(&self) -> usize {
        trainable_parameter_count(self.dim(), self.vocab_size())
    }

    pub fn trainable_mut(&mut self) -> TrainableMut<'_> {
        TrainableMut {
            w_down: self.w_down.as_mut_slice(),
            b_down: self.b_down.as_mut_slice(),
            w_up: self.w_up.as_mut_slice(),
            b_up: self.b_up.as_mut_slice(),
            bias: self.bias.as_mut_slice(),
        }
    }

    fn check_dim(&self, actual: usize) -> Result<()> {
        if actual != self.dim() {
            return Err(Error::Dimension {
                context: "adapter input",
                expected: self.dim(),
                actual,
            });
        }
        Ok(())
    }

    fn forward_token(&self, h: &[f64]) -> TokenForward {
        let mut pre = numerics::vecmat(h, &self.w_down);
        for (p, &b) in pre.iter_mut().zip(self.b_down.as_slice()) {
            *p += b;
        }
        let act: Vec<f64> = pre.iter().map(|&x| self.activation.apply(x)).collect();
        let mlp = numerics::vecmat(&act, &self.w_up);
        let adapted = h
            .iter()
            .zip(&mlp)
            .zip(self.b_up.as_slice())
            .map(|((&x, &m), &b)| x + (m + b))
            .collect();
        TokenForward { pre, act, adapted }
    }

    /// `h + MLP(h)`.
    pub fn adapt(&self, h: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(h.len())?;
        Ok(self.forward_token(h).adapted)
    }

    /// Vocabulary logits for one token: `(h + MLP(h)) · Eᵀ + b`.
    pub fn mlm_logits(&self, h: &Vector) -> Result<Vector> {
        self.check_dim(h.len())?;
        let u = self.forward_token(h.as_slice()).adapted;
        let logits = self
            .projection
            .as_slice()
            .chunks_exact(self.dim())
            .zip(self.bias.as_slice())
            .map(|(e, &b)| numerics::dot(&u, e) + b)
            .collect();
        let out = Vector::from_trusted(logits);
        numerics::ensure_finite(out.as_slice(), "mlm_logits")?;
        Ok(out)
    }

    /// Logits of every token as a `num_tokens × |V|` matrix, plus the
    /// per-token forward intermediates.
    fn token_logits(&self, record: &TokenEmbeddingRecord) -> Result<(Matrix, Vec<TokenForward>)> {
        self.check_dim(record.dim())?;
        let forwards: Vec<TokenForward> = (0..record.num_tokens())
            .map(|i| self.forward_token(record.token(i)))
            .collect();
        let adapted: Vec<f64> = forwards
            .iter()
            .flat_map(|f| f.adapted.iter().copied())
            .collect();
        let adapted = Matrix::from_vec(record.num_tokens(), self.dim(), adapted)?;
        let mut logits = matmul(&adapted, &self.projection_t)?;
        let v = self.vocab_size();
        let bias = self.bias.as_slice();
        for row in logits.as_mut_slice().chunks_exact_mut(v) {
            for (x, &b) in row.iter_mut().zip(bias) {
                *x += b;
            }
        }
        numerics::ensure_finite(logits.as_slice(), "token logits")?;
        Ok((logits, forwards))
    }

    /// Per-term maximum logit over tokens and the first token attaining it.
    fn max_over_tokens(&self, logits: &Matrix) -> (Vec<f64>, Vec<u32>) {
        let v = self.vocab_size();
        let mut best = logits.row(0).to_vec();
        let mut arg = vec![0u32; v];
        for i in 1..logits.rows() {
            for ((b, a), &x) in best.iter_mut().zip(arg.iter_mut()).zip(logits.row(i)) {
                if x > *b {
                    *b = x;
                    *a = i as u32;
                }
            }
        }
        (best, arg)
    }

    /// Pooled (dense) vocabulary weights of a record, before pruning.
    pub fn pooled_weights(&self, record: &TokenEmbeddingRecord) -> Result<Vector> {
        let (logits, _) = self.token_logits(record)?;
        let (best, _) = self.max_over_tokens(&logits);
        Ok(Vector::from_trusted(
            best.into_iter().map(log1p_relu).collect(),
        ))
    }

    /// Top-`k` sparse representation of a record.
    pub fn encode(&self, record: &TokenEmbeddingRecord, k: usize) -> Result<SparseVector> {
        let pooled = self.pooled_weights(record)?;
        Ok(topk_prune(pooled.as_slice(), k))
    }

    /// Like [`encode`](Self::encode) but also returns the tape needed to
    /// backpropagate through the selected support.
    pub fn encode_traced(
        &self,
        record: &TokenEmbeddingRecord,
        k: usize,
    ) -> Result<(SparseVector, EncodeTape)> {
        let (logits, forwards) = self.token_logits(record)?;
        let (best, arg) = self.max_over_tokens(&logits);
        let pooled: Vec<f64> = best.iter().map(|&z| log1p_relu(z)).collect();
        let sparse = topk_prune(&pooled, k);
        let support = sparse
            .entries()
            .iter()
            .map(|&(t, _)| SupportEntry {
                term: t,
                token: arg[t as usize],
                logit: best[t as usize],
            })
            .collect();
        let d = self.dim();
        let h_dim = self.bottleneck();
        let mut inputs = Vec::with_capacity(record.num_tokens() * d);
        let mut pre = Vec::with_capacity(record.num_tokens() * h_dim);
        let mut act = Vec::with_capacity(record.num_tokens() * h_dim);
        for (i, f) in forwards.into_iter().enumerate() {
            inputs.extend_from_slice(record.token(i));
            pre.extend(f.pre);
            act.extend(f.act);
        }
        Ok((
            sparse,
            EncodeTape {
                inputs,
                pre,
                act,
                support,
            },
        ))
    }

    /// Pooled weights restricted to a fixed set of terms (zero allowed).
    /// Holding the support fixed makes the encoder smooth almost everywhere,
    /// which is what finite-difference checks need.
    pub fn pooled_weights_on(
        &self,
        record: &TokenEmbeddingRecord,
        terms: &[u32],
    ) -> Result<Vec<f64>> {
        self.check_dim(record.dim())?;
        let adapted: Vec<Vec<f64>> = (0..record.num_tokens())
            .map(|i| self.forward_token(record.token(i)).adapted)
            .collect();
        terms
            .iter()
            .map(|&t| {
                let t = t as usize;
                if t >= self.vocab_size() {
                    return Err(Error::validation(format!("term {t} out of range")));
                }
                let e = self.projection.row(t);
                let b = self.bias[t];
                let z = adapted
                    .iter()
                    .map(|u| numerics::dot(u, e) + b)
                    .fold(f64::NEG_INFINITY, f64::max);
                Ok(log1p_relu(z))
            })
            .collect()
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        codec::write_header(w, HEAD_MAGIC, HEAD_VERSION)?;
        codec::write_u32(w, self.dim() as u32)?;
        codec::write_u32(w, self.vocab_size() as u32)?;
        codec::write_u32(w, self.activation.tag())?;
        for block in [
            self.w_down.as_slice(),
            self.b_down.as_slice(),
            self.w_up.as_slice(),
            self.b_up.as_slice(),
            self.bias.as_slice(),
            self.projection.as_slice(),
        ] {
            for &x in block {
                codec::write_f64(w, x)?;
            }
        }
        Ok(())
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        const KIND: &str = "adapter checkpoint";
        codec::read_header(r, KIND, HEAD_MAGIC, HEAD_VERSION)?;
        let d = read_u32(r, KIND)? as usize;
        let v = read_u32(r, KIND)? as usize;
        let activation = Activation::from_tag(read_u32(r, KIND)?)?;
        if d < 2 || v < 2 {
            return Err(Error::format(KIND, "dimensions too small"));
        }
        let h = d / 2;
        let mut read_block =
            |n: usize| -> Result<Vec<f64>> { (0..n).map(|_| read_f64(r, KIND)).collect() };
        let w_down = Matrix::from_vec(d, h, read_block(d * h)?)?;
        let b_down = Vector::new(read_block(h)?)?;
        let w_up = Matrix::from_vec(h, d, read_block(h * d)?)?;
        let b_up = Vector::new(read_block(d)?)?;
        let bias = Vector::new(read_block(v)?)?;
        let projection = Matrix::from_vec(v, d, read_block(v * d)?)?;
        codec::expect_eof(r, KIND)?;
        AdapterHead::from_parts(activation, w_down, b_down, w_up, b_up, bias, projection)
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
            AdapterHead::read_from(&mut r)
        };
        run().map_err(|e| e.at_path(path))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct SupportEntry {
    term: u32,
    /// First token index attaining the max logit for `term`.
    token: u32,
    logit: f64,
}

/// Forward intermediates of one [`AdapterHead::encode_traced`] call,
/// specialised to the encode graph: affine → activation → affine → residual →
/// tied projection → max over tokens → `log1p ∘ relu` → top-k mask.
#[derive(Debug, Clone)]
pub struct EncodeTape {
    inputs: Vec<f64>,
    pre: Vec<f64>,
    act: Vec<f64>,
    support: Vec<SupportEntry>,
}

/// Gradients for the trainable blocks. There is no field for `E`.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadGradients {
    pub w_down: Matrix,
    pub b_down: Vec<f64>,
    pub w_up: Matrix,
    pub b_up: Vec<f64>,
    pub bias: Vec<f64>,
}

impl HeadGradients {
    pub fn zeros_like(head: &AdapterHead) -> Self {
        let d = head.dim();
        let h = head.bottleneck();
        HeadGradients {
            w_down: Matrix::zeros(d, h),
            b_down: vec![0.0; h],
            w_up: Matrix::zeros(h, d),
            b_up: vec![0.0; d],
            bias: vec![0.0; head.vocab_size()],
        }
    }

    pub fn add_assign(&mut self, other: &HeadGradients) {
        for (a, b) in self.blocks_mut().into_iter().zip(other.blocks()) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += y;
            }
        }
    }

    pub fn scale(&mut self, factor: f64) {
        for block in self.blocks_mut() {
            block.iter_mut().for_each(|x| *x *= factor);
        }
    }

    /// Blocks in checkpoint order: `W_down, b_down, W_up, b_up, b`.
    pub fn blocks(&self) -> [&[f64]; 5] {
        [
            self.w_down.as_slice(),
            &self.b_down,
            self.w_up.as_slice(),
            &self.b_up,
            &self.bias,
        ]
    }

    pub fn blocks_mut(&mut self) -> [&mut [f64]; 5] {
        [
            self.w_down.as_mut_slice(),
            &mut self.b_down,
            self.w_up.as_mut_slice(),
            &mut self.b_up,
            &mut self.bias,
        ]
    }

    pub fn is_finite(&self) -> bool {
        self.blocks()
            .iter()
            .all(|b| b.iter().all(|x| x.is_finite()))
    }
}

impl EncodeTape {
    /// Terms that survived pruning, in ascending order.
    pub fn support(&self) -> impl Iterator<Item = u32> + '_ {
        self.support.iter().map(|s| s.term)
    }

    /// Backpropagates `∂loss/∂w_v` for terms of the selected support into
    /// `grads`. Pruned terms carry no gradient; a term outside the support is
    /// a usage error.
    pub fn backward(
        &self,
        head: &AdapterHead,
        grad_weights: &[(u32, f64)],
        grads: &mut HeadGradients,
    ) -> Result<()> {
        let d = head.dim();
        let h = head.bottleneck();
        let n_tokens = self.inputs.len() / d;
        let mut grad_adapted = vec![0.0f64; n_tokens * d];
        let mut touched = vec![false; n_tokens];
        for &(term, g) in grad_weights {
            let Ok(pos) = self.support.binary_search_by_key(&term, |s| s.term) else {
                return Err(Error::Usage(format!("term {term} is not on the tape")));
            };
            if g == 0.0 {
                continue;
            }
            let entry = self.support[pos];
            let g_logit = g * log1p_relu_grad(entry.logit);
            grads.bias[term as usize] += g_logit;
            let tok = entry.token as usize;
            touched[tok] = true;
            let e = head.projection.row(term as usize);
            for (ga, &ev) in grad_adapted[tok * d..(tok + 1) * d].iter_mut().zip(e) {
                *ga += g_logit * ev;
            }
        }
        for tok in (0..n_tokens).filter(|&t| touched[t]) {
            let gu = &grad_adapted[tok * d..(tok + 1) * d];
            let act = &self.act[tok * h..(tok + 1) * h];
            let pre = &self.pre[tok * h..(tok + 1) * h];
            let input = &self.inputs[tok * d..(tok + 1) * d];
            let mut grad_act =
                numerics::affine_backward(act, &head.w_up, gu, &mut grads.w_up, &mut grads.b_up);
            for ((g, &x), &y) in grad_act.iter_mut().zip(pre).zip(act) {
                *g *= head.activation.derivative(x, y);
            }
            numerics::affine_backward(
                input,
                &head.w_down,
                &grad_act,
                &mut grads.w_down,
                &mut grads.b_down,
            );
        }
        Ok(())
    }
}
