//! Two-layer tanh MLP classifier on a seeded two-moons dataset, with manual
//! backpropagation, exposed as a stochastic [`Problem`].
//!
//! Flat parameter layout: `W1` (hidden × input, row-major), `b1`, `W2`
//! (classes × hidden, row-major), `b2`.

use std::ops::Range;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{DeoError, Result};
use crate::landscapes::{check_dim, BatchKey, Problem};
use crate::numeric::{ParamVector, RngSeed};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpShape {
    pub input: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl Default for MlpShape {
    fn default() -> Self {
        MlpShape {
            input: 2,
            hidden: 16,
            classes: 2,
        }
    }
}

impl MlpShape {
    pub fn param_count(&self) -> usize {
        self.input * self.hidden + self.hidden + self.hidden * self.classes + self.classes
    }

    pub fn w1(&self) -> Range<usize> {
        0..self.input * self.hidden
    }

    pub fn b1(&self) -> Range<usize> {
        let s = self.w1().end;
        s..s + self.hidden
    }

    pub fn w2(&self) -> Range<usize> {
        let s = self.b1().end;
        s..s + self.hidden * self.classes
    }

    pub fn b2(&self) -> Range<usize> {
        let s = self.w2().end;
        s..s + self.classes
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub points: Vec<Sample>,
}

impl Dataset {
    /// Two interleaving half circles with Gaussian noise `noise` on each
    /// coordinate. The outer moon has label 0 and `n / 2` points.
    pub fn two_moons(n: usize, noise: f64, seed: &RngSeed) -> Self {
        let n_outer = n / 2;
        let n_inner = n - n_outer;
        let angle = |i: usize, count: usize| {
            if count <= 1 {
                0.0
            } else {
                std::f64::consts::PI * i as f64 / (count - 1) as f64
            }
        };
        let mut rng = seed.rng();
        let mut noisy = |v: f64| -> f64 { v + noise * rng.sample::<f64, _>(StandardNormal) };
        let mut points = Vec::with_capacity(n);
        for i in 0..n_outer {
            let t = angle(i, n_outer);
            let (x, y) = (t.cos(), t.sin());
            points.push(Sample {
                x: vec![noisy(x), noisy(y)],
                label: 0,
            });
        }
        for i in 0..n_inner {
            let t = angle(i, n_inner);
            let (x, y) = (1.0 - t.cos(), 1.0 - t.sin() - 0.5);
            points.push(Sample {
                x: vec![noisy(x), noisy(y)],
                label: 1,
            });
        }
        Dataset { points }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Writes `x1,x2,label` rows with a header.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x1", "x2", "label"])?;
        for p in &self.points {
            w.write_record([
                format!("{:?}", p.x[0]),
                format!("{:?}", p.x[1]),
                p.label.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let mut points = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let field = |i: usize| -> Result<&str> {
                rec.get(i)
                    .ok_or_else(|| DeoError::Io(format!("row {}: missing column {i}", line + 1)))
            };
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse()
                    .map_err(|_| DeoError::Io(format!("row {}: bad number `{s}`", line + 1)))
            };
            let x = vec![parse(field(0)?)?, parse(field(1)?)?];
            let label = field(2)?
                .trim()
                .parse()
                .map_err(|_| DeoError::Io(format!("row {}: bad label", line + 1)))?;
            points.push(Sample { x, label });
        }
        Ok(Dataset { points })
    }
}

/// Weights `N(0, 1) / √fan_in`, biases zero.
pub fn init_params(shape: &MlpShape, seed: &RngSeed) -> ParamVector {
    let mut rng = seed.rng();
    let mut p = vec![0.0; shape.param_count()];
    let s1 = 1.0 / (shape.input as f64).sqrt();
    for w in &mut p[shape.w1()] {
        *w = s1 * rng.sample::<f64, _>(StandardNormal);
    }
    let s2 = 1.0 / (shape.hidden as f64).sqrt();
    for w in &mut p[shape.w2()] {
        *w = s2 * rng.sample::<f64, _>(StandardNormal);
    }
    ParamVector::new(p).expect("finite initial weights")
}

/// Indices of minibatch `step`. Each epoch of `⌈n/b⌉` steps walks through a
/// fresh seeded permutation; the last batch of an epoch may be short.
pub fn batch_indices(n: usize, batch_size: usize, step: u64, seed: &RngSeed) -> Vec<usize> {
    assert!(batch_size >= 1 && batch_size <= n, "need 1 <= batch_size <= n");
    let per_epoch = n.div_ceil(batch_size) as u64;
    let epoch = step / per_epoch;
    let k = (step % per_epoch) as usize;
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut seed.rng_indexed(epoch));
    let start = k * batch_size;
    perm[start..(start + batch_size).min(n)].to_vec()
}

/// Network definition; parameters are passed in flat.
#[derive(Debug, Clone, Copy, Default)]
pub struct Mlp {
    pub shape: MlpShape,
}

struct Activations {
    hidden: Vec<f64>,
    probs: Vec<f64>,
    loss: f64,
}

impl Mlp {
    pub fn new(shape: MlpShape) -> Self {
        Mlp { shape }
    }

    fn check(&self, params: &ParamVector, batch: &[&Sample]) -> Result<()> {
        check_dim(self.shape.param_count(), params)?;
        if batch.is_empty() {
            return Err(DeoError::EmptyVector);
        }
        Ok(())
    }

    fn forward_one(&self, p: &[f64], s: &Sample) -> Activations {
        let sh = &self.shape;
        let (w1, b1, w2, b2) = (&p[sh.w1()], &p[sh.b1()], &p[sh.w2()], &p[sh.b2()]);
        let hidden: Vec<f64> = (0..sh.hidden)
            .map(|j| {
                let row = &w1[j * sh.input..(j + 1) * sh.input];
                (row.iter().zip(&s.x).map(|(w, x)| w * x).sum::<f64>() + b1[j]).tanh()
            })
            .collect();
        let logits: Vec<f64> = (0..sh.classes)
            .map(|c| {
                let row = &w2[c * sh.hidden..(c + 1) * sh.hidden];
                row.iter().zip(&hidden).map(|(w, z)| w * z).sum::<f64>() + b2[c]
            })
            .collect();
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
        let total: f64 = exps.iter().sum();
        let probs = exps.iter().map(|e| e / total).collect();
        let loss = total.ln() + max - logits[s.label];
        Activations {
            hidden,
            probs,
            loss,
        }
    }

    /// Mean softmax cross-entropy over `batch`.
    pub fn forward_loss(&self, params: &ParamVector, batch: &[&Sample]) -> Result<f64> {
        self.check(params, batch)?;
        let p = params.as_slice();
        let sum: f64 = batch.iter().map(|s| self.forward_one(p, s).loss).sum();
        let loss = sum / batch.len() as f64;
        if !loss.is_finite() {
            return Err(DeoError::numeric("mlp loss"));
        }
        Ok(loss)
    }

    /// Loss and exact gradient of [`Mlp::forward_loss`].
    pub fn loss_and_backward(
        &self,
        params: &ParamVector,
        batch: &[&Sample],
    ) -> Result<(f64, ParamVector)> {
        self.check(params, batch)?;
        let sh = &self.shape;
        let p = params.as_slice();
        let w2 = &p[sh.w2()];
        let mut grad = vec![0.0; sh.param_count()];
        let inv_b = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        for s in batch {
            let act = self.forward_one(p, s);
            loss += act.loss;
            let delta_out: Vec<f64> = act
                .probs
                .iter()
                .enumerate()
                .map(|(c, q)| (q - if c == s.label { 1.0 } else { 0.0 }) * inv_b)
                .collect();
            {
                let gw2 = &mut grad[sh.w2()];
                for c in 0..sh.classes {
                    for j in 0..sh.hidden {
                        gw2[c * sh.hidden + j] += delta_out[c] * act.hidden[j];
                    }
                }
            }
            for (g, d) in grad[sh.b2()].iter_mut().zip(&delta_out) {
                *g += d;
            }
            let delta_hidden: Vec<f64> = (0..sh.hidden)
                .map(|j| {
                    let back: f64 = (0..sh.classes)
                        .map(|c| w2[c * sh.hidden + j] * delta_out[c])
                        .sum();
                    back * (1.0 - act.hidden[j] * act.hidden[j])
                })
                .collect();
            {
                let gw1 = &mut grad[sh.w1()];
                for j in 0..sh.hidden {
                    for i in 0..sh.input {
                        gw1[j * sh.input + i] += delta_hidden[j] * s.x[i];
                    }
                }
            }
            for (g, d) in grad[sh.b1()].iter_mut().zip(&delta_hidden) {
                *g += d;
            }
        }
        let loss = loss * inv_b;
        if !loss.is_finite() {
            return Err(DeoError::numeric("mlp loss"));
        }
        Ok((loss, ParamVector::new(grad)?))
    }

    pub fn backward(&self, params: &ParamVector, batch: &[&Sample]) -> Result<ParamVector> {
        Ok(self.loss_and_backward(params, batch)?.1)
    }

    /// Most probable class for `x`.
    pub fn predict(&self, params: &ParamVector, x: &[f64]) -> usize {
        let s = Sample {
            x: x.to_vec(),
            label: 0,
        };
        let act = self.forward_one(params.as_slice(), &s);
        act.probs
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(c, _)| c)
            .unwrap_or(0)
    }
}

/// The MLP on a fixed dataset; the batch key selects a minibatch via
/// [`batch_indices`], and `None` evaluates the full dataset.
#[derive(Debug, Clone)]
pub struct MlpProblem {
    pub mlp: Mlp,
    pub dataset: Dataset,
    pub batch_size: usize,
    pub batch_seed: RngSeed,
}

impl MlpProblem {
    pub fn new(mlp: Mlp, dataset: Dataset, batch_size: usize, batch_seed: RngSeed) -> Result<Self> {
        if dataset.is_empty() {
            return Err(DeoError::config("dataset", "must not be empty"));
        }
        if batch_size == 0 || batch_size > dataset.len() {
            return Err(DeoError::config(
                "batch_size",
                format!("must be in 1..={}", dataset.len()),
            ));
        }
        Ok(MlpProblem {
            mlp,
            dataset,
            batch_size,
            batch_seed,
        })
    }

    /// Default benchmark: 200 two-moons points with noise 0.1, batches of 32.
    pub fn two_moons_default(data_seed: u64) -> Self {
        let dataset = Dataset::two_moons(200, 0.1, &RngSeed::new(data_seed, "data"));
        MlpProblem::new(
            Mlp::default(),
            dataset,
            32,
            RngSeed::new(data_seed, "batch"),
        )
        .expect("valid default problem")
    }

    fn batch(&self, key: Option<BatchKey>) -> Vec<&Sample> {
        match key {
            None => self.dataset.points.iter().collect(),
            Some(BatchKey(step)) => {
                batch_indices(self.dataset.len(), self.batch_size, step, &self.batch_seed)
                    .into_iter()
                    .map(|i| &self.dataset.points[i])
                    .collect()
            }
        }
    }

    /// Fraction of the full dataset classified correctly.
    pub fn accuracy(&self, params: &ParamVector) -> f64 {
        let hits = self
            .dataset
            .points
            .iter()
            .filter(|s| self.mlp.predict(params, &s.x) == s.label)
            .count();
        hits as f64 / self.dataset.len() as f64
    }
}

impl Problem for MlpProblem {
    fn name(&self) -> &str {
        "mlp"
    }

    fn dim(&self) -> usize {
        self.mlp.shape.param_count()
    }

    fn loss(&self, theta: &ParamVector, batch: Option<BatchKey>) -> Result<f64> {
        self.mlp.forward_loss(theta, &self.batch(batch))
    }

    fn grad(&self, theta: &ParamVector, batch: Option<BatchKey>) -> Result<ParamVector> {
        self.mlp.backward(theta, &self.batch(batch))
    }

    fn loss_and_grad(
        &self,
        theta: &ParamVector,
        batch: Option<BatchKey>,
    ) -> Result<(f64, ParamVector)> {
        self.mlp.loss_and_backward(theta, &self.batch(batch))
    }
}
