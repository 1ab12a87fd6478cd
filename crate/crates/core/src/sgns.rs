//! Skip-gram with negative sampling over a walk corpus.
//!
//! Two parameter matrices: `input` rows are the exported node embeddings,
//! `context` rows only score (center, context) pairs during training. The
//! per-pair objective is
//!
//! ```text
//! J = ln σ(u·v⁺) + Σ_j ln σ(−u·v⁻_j)
//! ```
//!
//! and training ascends it with plain SGD and a linearly decaying step.

use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, AtomicUsize, Ordering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::kg::NodeId;
use crate::scalar::{dot, log_sigmoid, sigmoid, Scalar};
use crate::vectors::{NodeVectors, VectorError};
use crate::walk::WalkCorpus;

#[derive(Debug, Error)]
pub enum SgnsError {
    #[error("vector dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("invalid training config: {0}")]
    Config(&'static str),
    #[error("epoch {epoch} produced a non-finite loss")]
    Diverged { epoch: usize },
    #[error(transparent)]
    Vectors(#[from] VectorError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    /// Initial step size; decays linearly to `min_learning_rate`.
    pub learning_rate: f64,
    pub min_learning_rate: f64,
    pub neg_exponent: f64,
    pub rng_seed: u64,
    /// 1 trains deterministically; more uses lock-free shared updates.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 128,
            window: 5,
            negatives: 7,
            epochs: 5,
            learning_rate: 0.025,
            min_learning_rate: 1e-4,
            neg_exponent: 0.75,
            rng_seed: 0,
            threads: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), SgnsError> {
        if self.dim == 0 {
            return Err(SgnsError::Config("dim must be at least 1"));
        }
        if self.window == 0 {
            return Err(SgnsError::Config("window must be at least 1"));
        }
        if self.epochs == 0 {
            return Err(SgnsError::Config("epochs must be at least 1"));
        }
        if self.learning_rate.is_nan()
            || self.learning_rate <= 0.0
            || self.min_learning_rate.is_nan()
            || self.min_learning_rate < 0.0
        {
            return Err(SgnsError::Config("learning rates must be positive"));
        }
        if !self.neg_exponent.is_finite() {
            return Err(SgnsError::Config("neg_exponent must be finite"));
        }
        if self.threads == 0 {
            return Err(SgnsError::Config("threads must be at least 1"));
        }
        Ok(())
    }
}

/// Every `(walk[t], walk[t+j])` with `0 < |j| <= window` inside the walk.
pub fn window_pairs<T: Copy>(walk: &[T], window: usize) -> impl Iterator<Item = (T, T)> + '_ {
    (0..walk.len()).flat_map(move |t| {
        let lo = t.saturating_sub(window);
        let hi = (t + window).min(walk.len().saturating_sub(1));
        (lo..=hi).filter(move |&s| s != t).map(move |s| (walk[t], walk[s]))
    })
}

/// Positive (center, context) pairs over the whole corpus.
pub fn positive_pairs(corpus: &WalkCorpus, window: usize) -> impl Iterator<Item = (&NodeId, &NodeId)> + '_ {
    let nodes = corpus.nodes();
    corpus
        .walks()
        .iter()
        .flat_map(move |w| window_pairs(w, window))
        .map(move |(a, b)| (&nodes[a as usize], &nodes[b as usize]))
}

fn check_dims<F>(u: &[F], v_pos: &[F], v_negs: &[&[F]]) -> Result<(), SgnsError> {
    let d = u.len();
    for v in std::iter::once(v_pos).chain(v_negs.iter().copied()) {
        if v.len() != d {
            return Err(SgnsError::Dimension {
                expected: d,
                found: v.len(),
            });
        }
    }
    Ok(())
}

/// `ln σ(u·v⁺) + Σ_j ln σ(−u·v⁻_j)`; larger is better.
pub fn sgns_loss<F: Scalar>(u: &[F], v_pos: &[F], v_negs: &[&[F]]) -> Result<F, SgnsError> {
    check_dims(u, v_pos, v_negs)?;
    let pos = log_sigmoid(dot(u, v_pos));
    Ok(v_negs.iter().fold(pos, |acc, v| acc + log_sigmoid(-dot(u, v))))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradients<F> {
    pub center: Vec<F>,
    pub context: Vec<F>,
    pub negatives: Vec<Vec<F>>,
}

/// Analytical gradients of [`sgns_loss`] with respect to every input.
pub fn sgns_gradients<F: Scalar>(u: &[F], v_pos: &[F], v_negs: &[&[F]]) -> Result<SgnsGradients<F>, SgnsError> {
    check_dims(u, v_pos, v_negs)?;
    let g_pos = F::one() - sigmoid(dot(u, v_pos));
    let mut center: Vec<F> = v_pos.iter().map(|&x| g_pos * x).collect();
    let context = u.iter().map(|&x| g_pos * x).collect();
    let mut negatives = Vec::with_capacity(v_negs.len());
    for v in v_negs {
        let g = sigmoid(dot(u, v));
        for (c, &x) in center.iter_mut().zip(v.iter()) {
            *c -= g * x;
        }
        negatives.push(u.iter().map(|&x| -g * x).collect());
    }
    Ok(SgnsGradients {
        center,
        context,
        negatives,
    })
}

/// Draws vocabulary indices with probability proportional to
/// `count^exponent`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    cdf: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(counts: &[u64], exponent: f64) -> Self {
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = counts
            .iter()
            .map(|&c| {
                acc += if c == 0 { 0.0 } else { (c as f64).powf(exponent) };
                acc
            })
            .collect();
        if acc > 0.0 {
            for x in &mut cdf {
                *x = if *x == acc { 1.0 } else { *x / acc };
            }
        }
        NegativeSampler { cdf }
    }

    pub fn len(&self) -> usize {
        self.cdf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cdf.is_empty()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.cdf
            .iter()
            .map(|&c| {
                let p = c - prev;
                prev = c;
                p
            })
            .collect()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        let r: f64 = rng.gen();
        self.cdf.partition_point(|&c| c <= r).min(self.cdf.len() - 1)
    }
}

/// Trained parameters keyed by node.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix<F> {
    vocab: Vec<NodeId>,
    lookup: HashMap<NodeId, usize>,
    dim: usize,
    input: Vec<F>,
    context: Vec<F>,
}

impl<F: Scalar> EmbeddingMatrix<F> {
    pub fn vocab(&self) -> &[NodeId] {
        &self.vocab
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn index_of(&self, id: &NodeId) -> Option<usize> {
        self.lookup.get(id).copied()
    }

    pub fn input_row(&self, i: usize) -> &[F] {
        &self.input[i * self.dim..(i + 1) * self.dim]
    }

    pub fn context_row(&self, i: usize) -> &[F] {
        &self.context[i * self.dim..(i + 1) * self.dim]
    }

    pub fn input_vector(&self, id: &NodeId) -> Option<&[F]> {
        self.index_of(id).map(|i| self.input_row(i))
    }

    pub fn all_finite(&self) -> bool {
        self.input.iter().chain(&self.context).all(|x| x.is_finite())
    }

    /// The exported embedding table (input vectors only).
    pub fn to_vectors(&self) -> NodeVectors<F> {
        NodeVectors::from_rows(self.dim, self.vocab.clone(), self.input.clone()).expect("vocabulary has no duplicates")
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean of `−J` over all pairs of each epoch.
    pub epoch_losses: Vec<f64>,
    pub pairs_per_epoch: usize,
    pub vocab_size: usize,
}

/// Vocabulary in corpus node-table order, dropping nodes that never occur.
fn vocabulary(corpus: &WalkCorpus) -> (Vec<NodeId>, Vec<Option<usize>>, Vec<u64>) {
    let mut counts = vec![0u64; corpus.nodes().len()];
    for w in corpus.walks() {
        for &t in w {
            counts[t as usize] += 1;
        }
    }
    let mut vocab = Vec::new();
    let mut remap = vec![None; counts.len()];
    let mut vocab_counts = Vec::new();
    for (i, &c) in counts.iter().enumerate() {
        if c > 0 {
            remap[i] = Some(vocab.len());
            vocab.push(corpus.nodes()[i].clone());
            vocab_counts.push(c);
        }
    }
    (vocab, remap, vocab_counts)
}

/// Row access shared by the exclusive and the lock-free trainers.
trait Rows<F> {
    fn read(&self, row: usize, out: &mut [F]);
    fn add(&mut self, row: usize, delta: &[F]);
}

struct DenseRows<'a, F> {
    data: &'a mut [F],
    dim: usize,
}

impl<F: Scalar> Rows<F> for DenseRows<'_, F> {
    fn read(&self, row: usize, out: &mut [F]) {
        out.copy_from_slice(&self.data[row * self.dim..(row + 1) * self.dim]);
    }

    fn add(&mut self, row: usize, delta: &[F]) {
        for (x, &d) in self.data[row * self.dim..(row + 1) * self.dim].iter_mut().zip(delta) {
            *x += d;
        }
    }
}

/// Racy shared rows: relaxed loads and stores, lost updates tolerated.
struct SharedRows<'a> {
    data: &'a [AtomicU64],
    dim: usize,
}

impl<F: Scalar> Rows<F> for SharedRows<'_> {
    fn read(&self, row: usize, out: &mut [F]) {
        for (o, a) in out.iter_mut().zip(&self.data[row * self.dim..(row + 1) * self.dim]) {
            *o = F::from_bits_u64(a.load(Ordering::Relaxed));
        }
    }

    fn add(&mut self, row: usize, delta: &[F]) {
        for (a, &d) in self.data[row * self.dim..(row + 1) * self.dim].iter().zip(delta) {
            let x = F::from_bits_u64(a.load(Ordering::Relaxed));
            a.store((x + d).to_bits_u64(), Ordering::Relaxed);
        }
    }
}

struct Scratch<F> {
    u: Vec<F>,
    v: Vec<F>,
    grad_u: Vec<F>,
    delta: Vec<F>,
}

impl<F: Scalar> Scratch<F> {
    fn new(dim: usize) -> Self {
        Scratch {
            u: vec![F::zero(); dim],
            v: vec![F::zero(); dim],
            grad_u: vec![F::zero(); dim],
            delta: vec![F::zero(); dim],
        }
    }
}

/// One SGD ascent step on a (center, context) pair; returns `−J` evaluated
/// before the update.
#[allow(clippy::too_many_arguments)]
fn sgd_step<F: Scalar>(
    input: &mut impl Rows<F>,
    context: &mut impl Rows<F>,
    center: usize,
    target: usize,
    negatives: &[usize],
    lr: F,
    s: &mut Scratch<F>,
) -> f64 {
    input.read(center, &mut s.u);
    s.grad_u.fill(F::zero());
    let mut loss = 0.0;
    let rows = std::iter::once((target, true)).chain(negatives.iter().map(|&n| (n, false)));
    for (row, positive) in rows {
        context.read(row, &mut s.v);
        let score = dot(&s.u, &s.v);
        let g = if positive {
            loss -= log_sigmoid(score).as_f64();
            (F::one() - sigmoid(score)) * lr
        } else {
            loss -= log_sigmoid(-score).as_f64();
            -sigmoid(score) * lr
        };
        for k in 0..s.u.len() {
            s.grad_u[k] += g * s.v[k];
            s.delta[k] = g * s.u[k];
        }
        context.add(row, &s.delta);
    }
    input.add(center, &s.grad_u);
    loss
}

fn learning_rate(cfg: &TrainConfig, processed: usize, total: usize) -> f64 {
    let frac = processed as f64 / total.max(1) as f64;
    (cfg.learning_rate * (1.0 - frac)).max(cfg.min_learning_rate.min(cfg.learning_rate))
}

fn draw_negatives(sampler: &NegativeSampler, n: usize, target: usize, rng: &mut impl Rng, out: &mut Vec<usize>) {
    out.clear();
    for _ in 0..n {
        let neg = sampler.sample(rng);
        if neg != target {
            out.push(neg);
        }
    }
}

pub fn train<F: Scalar>(corpus: &WalkCorpus, cfg: &TrainConfig) -> Result<EmbeddingMatrix<F>, SgnsError> {
    train_with_report(corpus, cfg).map(|(m, _)| m)
}

/// Trains embeddings; single-threaded runs are reproducible bit for bit.
pub fn train_with_report<F: Scalar>(
    corpus: &WalkCorpus,
    cfg: &TrainConfig,
) -> Result<(EmbeddingMatrix<F>, TrainReport), SgnsError> {
    cfg.validate()?;
    if corpus.token_count() == 0 {
        return Err(SgnsError::EmptyCorpus);
    }
    let (vocab, remap, counts) = vocabulary(corpus);
    let walks: Vec<Vec<usize>> = corpus
        .walks()
        .iter()
        .map(|w| w.iter().map(|&t| remap[t as usize].expect("counted")).collect())
        .collect();
    let sampler = NegativeSampler::new(&counts, cfg.neg_exponent);
    let dim = cfg.dim;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let half = 0.5 / dim as f64;
    let mut input: Vec<F> = (0..vocab.len() * dim)
        .map(|_| F::of(rng.gen_range(-half..half)))
        .collect();
    let mut context = vec![F::zero(); vocab.len() * dim];

    let tokens_per_epoch = corpus.token_count();
    let total_tokens = tokens_per_epoch * cfg.epochs;
    let pairs_per_epoch: usize = walks.iter().map(|w| window_pairs(w, cfg.window).count()).sum();
    let mut report = TrainReport {
        epoch_losses: Vec::with_capacity(cfg.epochs),
        pairs_per_epoch,
        vocab_size: vocab.len(),
    };

    if cfg.threads <= 1 {
        let mut scratch = Scratch::new(dim);
        let mut negs = Vec::with_capacity(cfg.negatives);
        let mut processed = 0usize;
        for epoch in 0..cfg.epochs {
            let mut in_rows = DenseRows { data: &mut input, dim };
            let mut ctx_rows = DenseRows {
                data: &mut context,
                dim,
            };
            let mut loss_sum = 0.0;
            for walk in &walks {
                for t in 0..walk.len() {
                    let lr = F::of(learning_rate(cfg, processed, total_tokens));
                    let lo = t.saturating_sub(cfg.window);
                    let hi = (t + cfg.window).min(walk.len() - 1);
                    for s in (lo..=hi).filter(|&s| s != t) {
                        draw_negatives(&sampler, cfg.negatives, walk[s], &mut rng, &mut negs);
                        loss_sum += sgd_step(&mut in_rows, &mut ctx_rows, walk[t], walk[s], &negs, lr, &mut scratch);
                    }
                    processed += 1;
                }
            }
            let mean = loss_sum / pairs_per_epoch.max(1) as f64;
            if !mean.is_finite() {
                return Err(SgnsError::Diverged { epoch });
            }
            log::debug!("epoch {epoch}: mean loss {mean:.6}");
            report.epoch_losses.push(mean);
        }
    } else {
        let shared_in: Vec<AtomicU64> = input.iter().map(|x| AtomicU64::new(x.to_bits_u64())).collect();
        let shared_ctx: Vec<AtomicU64> = context.iter().map(|x| AtomicU64::new(x.to_bits_u64())).collect();
        let processed = AtomicUsize::new(0);
        let chunk = walks.len().div_ceil(cfg.threads);
        for epoch in 0..cfg.epochs {
            let loss_sum: f64 = std::thread::scope(|scope| {
                let handles: Vec<_> = walks
                    .chunks(chunk.max(1))
                    .enumerate()
                    .map(|(worker, part)| {
                        let (shared_in, shared_ctx, processed, sampler) =
                            (&shared_in, &shared_ctx, &processed, &sampler);
                        scope.spawn(move || {
                            let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
                            rng.set_stream(1 + (epoch * cfg.threads + worker) as u64);
                            let mut in_rows = SharedRows { data: shared_in, dim };
                            let mut ctx_rows = SharedRows { data: shared_ctx, dim };
                            let mut scratch = Scratch::<F>::new(dim);
                            let mut negs = Vec::with_capacity(cfg.negatives);
                            let mut loss = 0.0;
                            for walk in part {
                                for t in 0..walk.len() {
                                    let done = processed.fetch_add(1, Ordering::Relaxed);
                                    let lr = F::of(learning_rate(cfg, done, total_tokens));
                                    let lo = t.saturating_sub(cfg.window);
                                    let hi = (t + cfg.window).min(walk.len() - 1);
                                    for s in (lo..=hi).filter(|&s| s != t) {
                                        draw_negatives(sampler, cfg.negatives, walk[s], &mut rng, &mut negs);
                                        loss += sgd_step(
                                            &mut in_rows,
                                            &mut ctx_rows,
                                            walk[t],
                                            walk[s],
                                            &negs,
                                            lr,
                                            &mut scratch,
                                        );
                                    }
                                }
                            }
                            loss
                        })
                    })
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("training worker panicked"))
                    .sum()
            });
            let mean = loss_sum / pairs_per_epoch.max(1) as f64;
            if !mean.is_finite() {
                return Err(SgnsError::Diverged { epoch });
            }
            report.epoch_losses.push(mean);
        }
        input = shared_in
            .iter()
            .map(|a| F::from_bits_u64(a.load(Ordering::Relaxed)))
            .collect();
        context = shared_ctx
            .iter()
            .map(|a| F::from_bits_u64(a.load(Ordering::Relaxed)))
            .collect();
    }

    let lookup = vocab.iter().enumerate().map(|(i, id)| (id.clone(), i)).collect();
    Ok((
        EmbeddingMatrix {
            vocab,
            lookup,
            dim,
            input,
            context,
        },
        report,
    ))
}
