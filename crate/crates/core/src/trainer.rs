//! Distillation of the exact MaxSim teacher into the sparse student.
//!
//! The student score of a (query, document) pair is the sparse dot product
//! of their top-k encodings. The per-example loss is
//! `λ_m · marginMSE + λ_k · KL(softmax(teacher) ‖ softmax(student))` over the
//! positive and its mined hard negatives. Only the trainable head blocks are
//! updated (Adam); the projection `E` is never touched. Top-k selection is
//! treated as a constant mask within a step.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::embedding::{EmbeddingStore, TokenEmbeddingRecord};
use crate::error::{Error, Result};
use crate::head::{sparse_dot, AdapterHead, HeadGradients, SparseVector};
use crate::late_interaction::{maxsim_score, teacher_rank, DenseDocStore};
use crate::numerics::{log_softmax, softmax};

/// One distillation example. `teacher_scores[0]` belongs to the positive,
/// the rest follow `negative_ids`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub query_id: u64,
    pub positive_id: u64,
    pub negative_ids: Vec<u64>,
    pub teacher_scores: Vec<f64>,
}

impl TrainingExample {
    pub fn validate(&self) -> Result<()> {
        if self.negative_ids.is_empty() {
            return Err(Error::validation(format!(
                "example for query {} has no negatives",
                self.query_id
            )));
        }
        if self.teacher_scores.len() != self.negative_ids.len() + 1 {
            return Err(Error::Dimension {
                context: "teacher scores",
                expected: self.negative_ids.len() + 1,
                actual: self.teacher_scores.len(),
            });
        }
        if self.teacher_scores.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("teacher scores"));
        }
        Ok(())
    }

    /// Positive first, then negatives.
    pub fn doc_ids(&self) -> impl Iterator<Item = u64> + '_ {
        std::iter::once(self.positive_id).chain(self.negative_ids.iter().copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub n_neg: usize,
    /// Teacher top-n from which negatives are sampled.
    pub pool_size: usize,
    pub epochs: usize,
    pub lr: f64,
    pub loss_weight_margin: f64,
    pub loss_weight_kl: f64,
    pub k_q: usize,
    pub k_d: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 24,
            n_neg: 20,
            pool_size: 100,
            epochs: 3,
            lr: 1e-3,
            loss_weight_margin: 0.05,
            loss_weight_kl: 1.0,
            k_q: 10,
            k_d: 100,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::validation("batch_size must be at least 1"));
        }
        if self.n_neg == 0 || self.pool_size == 0 {
            return Err(Error::validation("n_neg and pool_size must be at least 1"));
        }
        if self.k_q == 0 || self.k_d == 0 {
            return Err(Error::validation("pooling sizes must be at least 1"));
        }
        let (m, k) = (self.loss_weight_margin, self.loss_weight_kl);
        if !(m >= 0.0 && k >= 0.0 && m + k > 0.0 && (m + k).is_finite()) {
            return Err(Error::validation(
                "loss weights must be >= 0 with a positive sum",
            ));
        }
        if !(self.lr.is_finite() && self.lr >= 0.0) {
            return Err(Error::validation("learning rate must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Samples `n_neg` negatives uniformly from the teacher's top `pool_size`
/// (positive excluded), keeping teacher order. If the pool holds at most
/// `n_neg` candidates they are all taken.
pub fn mine_hard_negatives(
    query: &TokenEmbeddingRecord,
    positive_id: u64,
    docs: &DenseDocStore<'_>,
    pool_size: usize,
    n_neg: usize,
    seed: u64,
) -> Result<TrainingExample> {
    if docs.ids().len() < n_neg + 1 {
        return Err(Error::validation(format!(
            "corpus of {} documents cannot supply {n_neg} negatives plus a positive",
            docs.ids().len()
        )));
    }
    let positive = docs.get(positive_id)?;
    let ranking = teacher_rank(query, docs, pool_size)?;
    let pool: Vec<(u64, f64)> = ranking
        .into_entries()
        .into_iter()
        .filter(|&(id, _)| id != positive_id)
        .collect();
    let chosen: Vec<(u64, f64)> = if pool.len() <= n_neg {
        pool
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picks = rand::seq::index::sample(&mut rng, pool.len(), n_neg).into_vec();
        picks.sort_unstable();
        picks.into_iter().map(|i| pool[i]).collect()
    };
    if chosen.is_empty() {
        return Err(Error::validation("teacher pool yielded no negatives"));
    }
    let mut teacher_scores = vec![maxsim_score(query, positive)?];
    teacher_scores.extend(chosen.iter().map(|e| e.1));
    Ok(TrainingExample {
        query_id: query.id(),
        positive_id,
        negative_ids: chosen.into_iter().map(|e| e.0).collect(),
        teacher_scores,
    })
}

fn mix_seed(seed: u64, id: u64) -> u64 {
    seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ id.rotate_left(29)
}

/// Mines one example per `(query, positive)` pair. The per-query sampling
/// seed is derived from `seed` and the query id.
pub fn build_training_set(
    pairs: &[(u64, u64)],
    queries: &EmbeddingStore,
    docs: &DenseDocStore<'_>,
    config: &TrainConfig,
) -> Result<Vec<TrainingExample>> {
    pairs
        .par_iter()
        .map(|&(qid, pos)| {
            mine_hard_negatives(
                queries.get(qid)?,
                pos,
                docs,
                config.pool_size,
                config.n_neg,
                mix_seed(config.seed, qid),
            )
        })
        .collect()
}

fn check_aligned(student: &[f64], teacher: &[f64]) -> Result<()> {
    if student.len() != teacher.len() {
        return Err(Error::Dimension {
            context: "distillation scores",
            expected: teacher.len(),
            actual: student.len(),
        });
    }
    if student.len() < 2 {
        return Err(Error::validation(
            "need a positive and at least one negative",
        ));
    }
    Ok(())
}

/// Mean over negatives of `((s₀ − sⱼ) − (t₀ − tⱼ))²`.
pub fn margin_mse_loss(student: &[f64], teacher: &[f64]) -> Result<f64> {
    Ok(margin_mse_with_grad(student, teacher)?.0)
}

fn margin_mse_with_grad(student: &[f64], teacher: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_aligned(student, teacher)?;
    let n = (student.len() - 1) as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; student.len()];
    for j in 1..student.len() {
        let diff = (student[0] - student[j]) - (teacher[0] - teacher[j]);
        loss += diff * diff;
        grad[0] += 2.0 * diff / n;
        grad[j] -= 2.0 * diff / n;
    }
    Ok((loss / n, grad))
}

/// `KL(softmax(teacher) ‖ softmax(student))` over the listed candidates.
pub fn kldiv_loss(student: &[f64], teacher: &[f64]) -> Result<f64> {
    Ok(kldiv_with_grad(student, teacher)?.0)
}

fn kldiv_with_grad(student: &[f64], teacher: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_aligned(student, teacher)?;
    let log_p = log_softmax(teacher);
    let log_q = log_softmax(student);
    let mut loss = 0.0;
    for (lp, lq) in log_p.iter().zip(&log_q) {
        let p = lp.exp();
        if p > 0.0 {
            loss += p * (lp - lq);
        }
    }
    let q = softmax(student);
    let grad = q.iter().zip(&log_p).map(|(qi, lp)| qi - lp.exp()).collect();
    Ok((loss, grad))
}

/// Weighted loss and its gradient with respect to the student scores.
pub fn distillation_loss(
    student: &[f64],
    teacher: &[f64],
    weight_margin: f64,
    weight_kl: f64,
) -> Result<(f64, Vec<f64>)> {
    let (lm, gm) = margin_mse_with_grad(student, teacher)?;
    let (lk, gk) = kldiv_with_grad(student, teacher)?;
    let grad = gm
        .iter()
        .zip(&gk)
        .map(|(a, b)| weight_margin * a + weight_kl * b)
        .collect();
    Ok((weight_margin * lm + weight_kl * lk, grad))
}

/// Query store and document store an example's ids refer to.
#[derive(Debug, Clone, Copy)]
pub struct TrainingData<'a> {
    pub queries: &'a EmbeddingStore,
    pub docs: &'a EmbeddingStore,
}

/// Student scores of an example under `head`: query encoded with `k_q`,
/// documents with `k_d`.
pub fn student_scores(
    head: &AdapterHead,
    example: &TrainingExample,
    data: TrainingData<'_>,
    k_q: usize,
    k_d: usize,
) -> Result<Vec<f64>> {
    let q = head.encode(data.queries.get(example.query_id)?, k_q)?;
    example
        .doc_ids()
        .map(|id| Ok(sparse_dot(&q, &head.encode(data.docs.get(id)?, k_d)?)))
        .collect()
}

/// Upstream gradient for one side of a sparse dot product: `g · other_v` for
/// every shared term of `own`'s support.
fn dot_upstream(own: &SparseVector, other: &SparseVector, g: f64, out: &mut Vec<(u32, f64)>) {
    let (a, b) = (own.entries(), other.entries());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, g * b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
}

/// Loss of one example and the gradient of that loss for every trainable
/// block, with the top-k supports held fixed.
pub fn example_loss_and_gradients(
    head: &AdapterHead,
    example: &TrainingExample,
    data: TrainingData<'_>,
    config: &TrainConfig,
) -> Result<(f64, HeadGradients)> {
    example.validate()?;
    let (q, q_tape) = head.encode_traced(data.queries.get(example.query_id)?, config.k_q)?;
    let docs = example
        .doc_ids()
        .map(|id| head.encode_traced(data.docs.get(id)?, config.k_d))
        .collect::<Result<Vec<_>>>()?;
    let student: Vec<f64> = docs.iter().map(|(d, _)| sparse_dot(&q, d)).collect();
    let (loss, grad_scores) = distillation_loss(
        &student,
        &example.teacher_scores,
        config.loss_weight_margin,
        config.loss_weight_kl,
    )?;
    if !loss.is_finite() {
        return Err(Error::Diverged(format!(
            "non-finite loss for query {} (student scores {student:?})",
            example.query_id
        )));
    }

    let mut grads = HeadGradients::zeros_like(head);
    let mut query_upstream: Vec<(u32, f64)> = Vec::new();
    let mut upstream = Vec::new();
    for ((d, tape), &g) in docs.iter().zip(&grad_scores) {
        upstream.clear();
        dot_upstream(d, &q, g, &mut upstream);
        tape.backward(head, &upstream, &mut grads)?;
        dot_upstream(&q, d, g, &mut query_upstream);
    }
    // merge repeated query terms before the backward pass
    query_upstream.sort_by_key(|e| e.0);
    let mut merged: Vec<(u32, f64)> = Vec::with_capacity(query_upstream.len());
    for (t, g) in query_upstream {
        match merged.last_mut() {
            Some(last) if last.0 == t => last.1 += g,
            _ => merged.push((t, g)),
        }
    }
    q_tape.backward(head, &merged, &mut grads)?;
    Ok((loss, grads))
}

/// Adam with bias correction.
#[derive(Debug, Clone)]
pub struct Adam {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    first: HeadGradients,
    second: HeadGradients,
}

impl Adam {
    pub fn new(head: &AdapterHead) -> Self {
        Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            first: HeadGradients::zeros_like(head),
            second: HeadGradients::zeros_like(head),
        }
    }

    pub fn steps(&self) -> u64 {
        self.step
    }

    pub fn update(&mut self, head: &mut AdapterHead, grads: &HeadGradients, lr: f64) {
        self.step += 1;
        let t = self.step as i32;
        let c1 = 1.0 - self.beta1.powi(t);
        let c2 = 1.0 - self.beta2.powi(t);
        let (b1, b2, eps) = (self.beta1, self.beta2, self.eps);
        let params = head.trainable_mut();
        let blocks = [
            params.w_down,
            params.b_down,
            params.w_up,
            params.b_up,
            params.bias,
        ];
        for (((p, g), m), v) in blocks
            .into_iter()
            .zip(grads.blocks())
            .zip(self.first.blocks_mut())
            .zip(self.second.blocks_mut())
        {
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Holds optimizer state across steps.
#[derive(Debug, Clone)]
pub struct Trainer {
    config: TrainConfig,
    optimizer: Adam,
}

impl Trainer {
    pub fn new(head: &AdapterHead, config: TrainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Trainer {
            config,
            optimizer: Adam::new(head),
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    /// One optimizer step on the batch-mean loss; returns that loss.
    /// Per-example gradients may be computed in parallel and are summed in
    /// batch order.
    pub fn train_step(
        &mut self,
        head: &mut AdapterHead,
        batch: &[TrainingExample],
        data: TrainingData<'_>,
    ) -> Result<f64> {
        if batch.is_empty() {
            return Err(Error::validation("empty batch"));
        }
        let frozen: &AdapterHead = head;
        let results = batch
            .par_iter()
            .map(|ex| example_loss_and_gradients(frozen, ex, data, &self.config))
            .collect::<Result<Vec<_>>>()?;
        let mut total = HeadGradients::zeros_like(head);
        let mut loss = 0.0;
        for (l, g) in &results {
            loss += l;
            total.add_assign(g);
        }
        let n = batch.len() as f64;
        total.scale(1.0 / n);
        loss /= n;
        if !loss.is_finite() || !total.is_finite() {
            return Err(Error::Diverged(format!(
                "non-finite loss or gradient at step {}",
                self.optimizer.steps() + 1
            )));
        }
        self.optimizer.update(head, &total, self.config.lr);
        Ok(loss)
    }
}

/// Per-epoch mean batch losses.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
}

/// Runs `config.epochs` epochs over `examples`, shuffling with `config.seed`.
/// With a checkpoint directory, writes `epoch-<n>.splh` after each epoch.
pub fn train(
    head: &mut AdapterHead,
    examples: &[TrainingExample],
    data: TrainingData<'_>,
    config: &TrainConfig,
    checkpoint_dir: Option<&Path>,
) -> Result<TrainReport> {
    if !data.docs.is_frozen() || !data.queries.is_frozen() {
        return Err(Error::Usage(
            "embedding stores must be frozen before training".into(),
        ));
    }
    if examples.is_empty() && config.epochs > 0 {
        return Err(Error::validation("no training examples"));
    }
    for ex in examples {
        ex.validate()?;
    }
    let mut trainer = Trainer::new(head, *config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut report = TrainReport::default();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<TrainingExample> = chunk.iter().map(|&i| examples[i].clone()).collect();
            sum += trainer.train_step(head, &batch, data)?;
            batches += 1;
        }
        report.epoch_losses.push(sum / batches as f64);
        if let Some(dir) = checkpoint_dir {
            head.save(&dir.join(format!("epoch-{epoch}.splh")))?;
        }
    }
    Ok(report)
}

fn join<T: ToString>(items: impl IntoIterator<Item = T>) -> String {
    items
        .into_iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

/// Writes one example per line:
/// `query_id \t positive_id \t neg,neg,... \t t_pos,t_neg,...`.
pub fn write_manifest(w: &mut impl Write, examples: &[TrainingExample]) -> Result<()> {
    for ex in examples {
        writeln!(
            w,
            "{}\t{}\t{}\t{}",
            ex.query_id,
            ex.positive_id,
            join(&ex.negative_ids),
            join(&ex.teacher_scores)
        )?;
    }
    Ok(())
}

pub fn read_manifest(r: impl BufRead) -> Result<Vec<TrainingExample>> {
    let mut out = Vec::new();
    for (lineno, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let err = |m: &str| Error::format("training manifest", format!("line {}: {m}", lineno + 1));
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 4 {
            return Err(err("expected 4 tab-separated columns"));
        }
        let query_id = cols[0].parse().map_err(|_| err("bad query id"))?;
        let positive_id = cols[1].parse().map_err(|_| err("bad positive id"))?;
        let negative_ids = cols[2]
            .split(',')
            .map(|s| s.parse().map_err(|_| err("bad negative id")))
            .collect::<Result<Vec<u64>>>()?;
        let teacher_scores = cols[3]
            .split(',')
            .map(|s| s.parse().map_err(|_| err("bad teacher score")))
            .collect::<Result<Vec<f64>>>()?;
        let ex = TrainingExample {
            query_id,
            positive_id,
            negative_ids,
            teacher_scores,
        };
        ex.validate().map_err(|e| err(&e.to_string()))?;
        out.push(ex);
    }
    Ok(out)
}

pub fn save_manifest(path: &Path, examples: &[TrainingExample]) -> Result<()> {
    let run = || -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        write_manifest(&mut w, examples)?;
        w.flush()?;
        Ok(())
    };
    run().map_err(|e| e.at_path(path))
}

pub fn load_manifest(path: &Path) -> Result<Vec<TrainingExample>> {
    let run =
        || -> Result<Vec<TrainingExample>> { read_manifest(BufReader::new(File::open(path)?)) };
    run().map_err(|e| e.at_path(path))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::{SynthEncoder, VocabularyConfig};
    use crate::head::Activation;
    use rand::Rng;

    #[test]
    fn margin_mse_examples() {
        assert_eq!(
            margin_mse_loss(&[5.0, 3.0, 1.0], &[4.0, 2.0, 0.0]).unwrap(),
            0.0
        );
        assert_eq!(margin_mse_loss(&[2.0, 0.0], &[3.0, 0.0]).unwrap(), 1.0);
        assert!(margin_mse_loss(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn margin_mse_matches_loop_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let s: Vec<f64> = (0..21).map(|_| rng.random_range(-5.0..5.0)).collect();
            let t: Vec<f64> = (0..21).map(|_| rng.random_range(-5.0..5.0)).collect();
            let mut want = 0.0;
            for j in 1..21 {
                want += ((s[0] - s[j]) - (t[0] - t[j])).powi(2);
            }
            want /= 20.0;
            assert!((margin_mse_loss(&s, &t).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn kldiv_examples() {
        let t = [1.0, 0.5, -2.0];
        let shifted: Vec<f64> = t.iter().map(|x| x + 3.25).collect();
        assert!(kldiv_loss(&shifted, &t).unwrap().abs() < 1e-12);

        // one-hot teacher against a uniform student → log(n)
        let n = 21;
        let mut teacher = vec![0.0; n];
        teacher[0] = 1e4;
        let student = vec![0.0; n];
        let got = kldiv_loss(&student, &teacher).unwrap();
        assert!((got - (n as f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn kldiv_matches_direct_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..20 {
            let s: Vec<f64> = (0..21).map(|_| rng.random_range(-3.0..3.0)).collect();
            let t: Vec<f64> = (0..21).map(|_| rng.random_range(-3.0..3.0)).collect();
            let zs: f64 = s.iter().map(|x| x.exp()).sum();
            let zt: f64 = t.iter().map(|x| x.exp()).sum();
            let mut want = 0.0;
            for j in 0..21 {
                let p = t[j].exp() / zt;
                let q = s[j].exp() / zs;
                want += p * (p / q).ln();
            }
            assert!((kldiv_loss(&s, &t).unwrap() - want).abs() < 1e-10);
        }
    }

    #[test]
    fn loss_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let t: Vec<f64> = (0..6).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (_, g) = distillation_loss(&s, &t, 0.3, 0.7).unwrap();
        let h = 1e-5;
        for j in 0..6 {
            let mut p = s.clone();
            p[j] += h;
            let mut m = s.clone();
            m[j] -= h;
            let fd = (distillation_loss(&p, &t, 0.3, 0.7).unwrap().0
                - distillation_loss(&m, &t, 0.3, 0.7).unwrap().0)
                / (2.0 * h);
            assert!((fd - g[j]).abs() < 1e-8);
        }
    }

    struct Toy {
        enc: SynthEncoder,
        docs: EmbeddingStore,
        queries: EmbeddingStore,
    }

    fn toy(n_docs: u64) -> Toy {
        let enc = SynthEncoder::new(VocabularyConfig::new(50, 8, 4).unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut docs = EmbeddingStore::new(50, 8);
        for id in 0..n_docs {
            let toks: Vec<u32> = (0..6).map(|_| rng.random_range(0..50)).collect();
            docs.put(enc.encode(id, &toks).unwrap()).unwrap();
        }
        docs.freeze();
        let mut queries = EmbeddingStore::new(50, 8);
        for qid in 0..n_docs.min(4) {
            let src = docs.get(qid).unwrap().tokens()[..3].to_vec();
            queries.put(enc.encode(qid, &src).unwrap()).unwrap();
        }
        queries.freeze();
        Toy { enc, docs, queries }
    }

    #[test]
    fn mining_with_no_slack_takes_teacher_order() {
        let t = toy(12);
        let dense = DenseDocStore::new(&t.docs).unwrap();
        let q = t.queries.get(0).unwrap();
        let ex = mine_hard_negatives(q, 0, &dense, 5, 5, 9).unwrap();
        let top: Vec<u64> = teacher_rank(q, &dense, 5)
            .unwrap()
            .ids()
            .filter(|&id| id != 0)
            .collect();
        assert_eq!(ex.negative_ids, top);
        assert_eq!(
            ex.teacher_scores[0],
            maxsim_score(q, t.docs.get(0).unwrap()).unwrap()
        );
    }

    #[test]
    fn mining_is_seeded_and_within_pool() {
        let t = toy(30);
        let dense = DenseDocStore::new(&t.docs).unwrap();
        let q = t.queries.get(1).unwrap();
        let a = mine_hard_negatives(q, 1, &dense, 15, 4, 77).unwrap();
        let b = mine_hard_negatives(q, 1, &dense, 15, 4, 77).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.negative_ids.len(), 4);
        // brute-force teacher ranking
        let mut all: Vec<(u64, f64)> = t
            .docs
            .iter()
            .map(|d| (d.id(), maxsim_score(q, d).unwrap()))
            .collect();
        all.sort_by(|x, y| y.1.partial_cmp(&x.1).unwrap().then(x.0.cmp(&y.0)));
        let pool: Vec<u64> = all[..15].iter().map(|e| e.0).collect();
        assert!(a
            .negative_ids
            .iter()
            .all(|id| pool.contains(id) && *id != 1));
    }

    #[test]
    fn mining_needs_enough_docs() {
        let t = toy(3);
        let dense = DenseDocStore::new(&t.docs).unwrap();
        assert!(mine_hard_negatives(t.queries.get(0).unwrap(), 0, &dense, 10, 3, 0).is_err());
    }

    #[test]
    fn zero_learning_rate_keeps_parameters_and_projection() {
        let t = toy(12);
        let dense = DenseDocStore::new(&t.docs).unwrap();
        let config = TrainConfig {
            lr: 0.0,
            n_neg: 3,
            pool_size: 6,
            k_q: 5,
            k_d: 10,
            ..TrainConfig::default()
        };
        let examples = build_training_set(&[(0, 0), (1, 1)], &t.queries, &dense, &config).unwrap();
        let mut head = AdapterHead::new(t.enc.projection().clone(), Activation::Relu, 1).unwrap();
        let before = head.clone();
        let data = TrainingData {
            queries: &t.queries,
            docs: &t.docs,
        };
        let mut trainer = Trainer::new(&head, config).unwrap();
        let loss = trainer.train_step(&mut head, &examples, data).unwrap();
        assert!(loss.is_finite());
        assert_eq!(head, before);

        let mut trainer = Trainer::new(&head, TrainConfig { lr: 1e-2, ..config }).unwrap();
        trainer.train_step(&mut head, &examples, data).unwrap();
        assert_ne!(head.bias(), before.bias());
        let bits = |h: &AdapterHead| -> Vec<u64> {
            h.projection()
                .as_slice()
                .iter()
                .map(|x| x.to_bits())
                .collect()
        };
        assert_eq!(bits(&head), bits(&before));
    }

    #[test]
    fn zero_epochs_is_identity() {
        let t = toy(12);
        let mut head = AdapterHead::new(t.enc.projection().clone(), Activation::Relu, 1).unwrap();
        let init = head.clone();
        let config = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let data = TrainingData {
            queries: &t.queries,
            docs: &t.docs,
        };
        let report = train(&mut head, &[], data, &config, None).unwrap();
        assert!(report.epoch_losses.is_empty());
        assert_eq!(head, init);
    }

    #[test]
    fn manifest_round_trip() {
        let examples = vec![
            TrainingExample {
                query_id: 3,
                positive_id: 10,
                negative_ids: vec![4, 5],
                teacher_scores: vec![2.5, 0.1 + 0.2, -1e-17],
            },
            TrainingExample {
                query_id: 4,
                positive_id: 11,
                negative_ids: vec![1],
                teacher_scores: vec![1.0 / 3.0, 0.0],
            },
        ];
        let mut bytes = Vec::new();
        write_manifest(&mut bytes, &examples).unwrap();
        let back = read_manifest(bytes.as_slice()).unwrap();
        assert_eq!(back, examples);
    }

    #[test]
    fn manifest_errors_name_the_line() {
        let text = "1\t2\t3\t0.5,0.1\n1\t2\t\t\n";
        match read_manifest(text.as_bytes()) {
            Err(Error::Format { message, .. }) => assert!(message.contains("line 2")),
            other => panic!("{other:?}"),
        }
    }
}
