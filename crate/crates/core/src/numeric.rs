//! Dense vector arithmetic, seeded random streams and the cosine learning-rate
//! schedule.
//!
//! Random streams are ChaCha8 keyed by a 64-bit seed expanded with SplitMix64;
//! the stream label is hashed with 64-bit FNV-1a and selects the ChaCha stream
//! id. Both primitives are fixed algorithms, so a `(seed, label)` pair yields the
//! same sequence on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{DeoError, Result};

/// Norms at or below this are treated as zero by [`normalize`].
pub const ZERO_NORM_THRESHOLD: f64 = 1e-300;

/// Flat vector of parameters. Always non-empty with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamVector(Vec<f64>);

impl ParamVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(DeoError::EmptyVector);
        }
        if let Some(i) = values.iter().position(|x| !x.is_finite()) {
            return Err(DeoError::numeric(format!("vector entry {i}")));
        }
        Ok(ParamVector(values))
    }

    pub fn from_slice(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec())
    }

    /// # Panics
    /// If `dim == 0`.
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "ParamVector must have dim >= 1");
        ParamVector(vec![0.0; dim])
    }

    /// Unit vector along coordinate `i`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.0[i] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.0.iter()
    }

    pub fn dot(&self, other: &ParamVector) -> Result<f64> {
        check_dims(self, other)?;
        Ok(dot_slices(&self.0, &other.0))
    }

    pub fn norm(&self) -> f64 {
        dot_slices(&self.0, &self.0).sqrt()
    }

    pub fn normalize(&self) -> Result<ParamVector> {
        normalize(self)
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: f64, other: &ParamVector) -> Result<ParamVector> {
        check_dims(self, other)?;
        ParamVector::new(
            self.0
                .iter()
                .zip(&other.0)
                .map(|(a, b)| a + s * b)
                .collect(),
        )
    }

    /// `self - other`.
    pub fn sub(&self, other: &ParamVector) -> Result<ParamVector> {
        check_dims(self, other)?;
        ParamVector::new(self.0.iter().zip(&other.0).map(|(a, b)| a - b).collect())
    }

    pub fn scale(&self, s: f64) -> Result<ParamVector> {
        ParamVector::new(self.0.iter().map(|a| s * a).collect())
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
    }
}

impl std::ops::Index<usize> for ParamVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl AsRef<[f64]> for ParamVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn check_dims(a: &ParamVector, b: &ParamVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(DeoError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    Ok(())
}

pub(crate) fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inner product `Σ aᵢbᵢ`.
pub fn dot(a: &ParamVector, b: &ParamVector) -> Result<f64> {
    a.dot(b)
}

/// `v / ‖v‖`; fails on vectors whose norm is at or below [`ZERO_NORM_THRESHOLD`].
pub fn normalize(v: &ParamVector) -> Result<ParamVector> {
    let norm = v.norm();
    if !norm.is_finite() {
        return Err(DeoError::numeric("norm"));
    }
    if norm <= ZERO_NORM_THRESHOLD {
        return Err(DeoError::ZeroVector { norm });
    }
    ParamVector::new(v.0.iter().map(|x| x / norm).collect())
}

/// Seed plus a stream label. Each consumer derives its own independent stream.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RngSeed {
    pub seed: u64,
    pub label: String,
}

impl RngSeed {
    pub fn new(seed: u64, label: impl Into<String>) -> Self {
        RngSeed {
            seed,
            label: label.into(),
        }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        self.rng_indexed(0)
    }

    /// Stream `index` of this `(seed, label)`, e.g. one per epoch.
    pub fn rng_indexed(&self, index: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        let mut state = self.seed;
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        let mut mix = fnv1a64(self.label.as_bytes()) ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        rng.set_stream(splitmix64(&mut mix));
        rng
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, &b| {
        (h ^ u64::from(b)).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Standard-normal draws from the given stream.
pub fn gaussian_vec(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.sample(StandardNormal)).collect()
}

/// Uniformly distributed direction on the unit sphere (normalized Gaussian).
pub fn random_unit_vector(dim: usize, seed: &RngSeed) -> Result<ParamVector> {
    if dim == 0 {
        return Err(DeoError::EmptyVector);
    }
    let mut rng = seed.rng();
    loop {
        let v = ParamVector(gaussian_vec(&mut rng, dim));
        match normalize(&v) {
            Ok(u) => return Ok(u),
            // all-zero draw; practically unreachable but resample rather than fail
            Err(DeoError::ZeroVector { .. }) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// Cosine decay from `lr_max` at `t = 0` to `lr_min` at `t = total`.
/// Steps past `total` are clamped to `lr_min`.
pub fn cosine_lr(t: u64, total: u64, lr_max: f64, lr_min: f64) -> f64 {
    debug_assert!(total >= 1 && lr_min <= lr_max);
    if t > total {
        log::warn!("cosine_lr: step {t} beyond schedule length {total}; clamping to lr_min");
        return lr_min;
    }
    let phase = std::f64::consts::PI * t as f64 / total.max(1) as f64;
    lr_min + 0.5 * (lr_max - lr_min) * (1.0 + phase.cos())
}
