//! Seeded sampling through the stochastic representation.
//!
//! A batch of `m` rows is cut into chunks of [`CHUNK_ROWS`]; chunk `k` is
//! drawn from a ChaCha8 stream seeded with `substream(seed, k)`. Any
//! executor that concatenates chunks in index order reproduces the serial
//! batch bit for bit.

use alloc::string::String;
use alloc::vec::Vec;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::model::SkewEllipticalParams;

pub const CHUNK_ROWS: usize = 1024;

/// Draws from one distribution, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleBatch {
    params_digest: String,
    seed: u64,
    dim: usize,
    data: Vec<f64>,
}

impl SampleBatch {
    /// Assembles a batch from row-major data.
    pub fn from_parts(params_digest: String, seed: u64, dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || data.is_empty() {
            return Err(Error::EmptyBatch);
        }
        if data.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: data.len() % dim,
            });
        }
        Ok(SampleBatch {
            params_digest,
            seed,
            dim,
            data,
        })
    }

    pub fn params_digest(&self) -> &str {
        &self.params_digest
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn rows(&self) -> usize {
        self.data.len() / self.dim
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
    pub fn iter_rows(&self) -> core::slice::ChunksExact<'_, f64> {
        self.data.chunks_exact(self.dim)
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of stream `k` under master seed `seed`.
///
/// Both mixing stages are bijections of `u64` and `k` enters through an odd
/// multiplier, so distinct `k` always give distinct seeds.
pub fn substream(seed: u64, k: u64) -> u64 {
    splitmix(splitmix(seed).wrapping_add(k.wrapping_mul(0xd1b5_4a32_d192_ed03)))
}

pub fn chunk_count(m: usize) -> usize {
    m.div_ceil(CHUNK_ROWS)
}

/// Rows in chunk `k` of an `m`-row batch.
pub fn chunk_rows(m: usize, k: usize) -> usize {
    CHUNK_ROWS.min(m - k * CHUNK_ROWS)
}

/// Chunk `k` of the batch for `(p, seed)`, row-major with `rows` rows.
pub fn sample_chunk(p: &SkewEllipticalParams, seed: u64, k: usize, rows: usize) -> Vec<f64> {
    let n = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, k as u64));
    let chi = p.generator().nu().map(|nu| ChiSquared::new(nu).expect("validated nu"));
    let mu = p.mu();
    let dw = p.delta_w();
    let l = p.residual_factor();
    let mut out = Vec::with_capacity(rows * n);
    let mut u1 = alloc::vec![0.0; n];
    for _ in 0..rows {
        let u0: f64 = StandardNormal.sample(&mut rng);
        for v in u1.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let scale = match &chi {
            None => 1.0,
            Some(c) => {
                let w: f64 = c.sample(&mut rng);
                libm::sqrt(p.generator().nu().unwrap() / w)
            }
        };
        let a0 = u0.abs() * scale;
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += l[(i, j)] * u1[j];
            }
            out.push(mu[i] + dw[i] * a0 + s * scale);
        }
    }
    out
}

/// Sampling back end; implementations must reproduce [`sample`] exactly.
pub trait Sampler {
    fn sample(&self, p: &SkewEllipticalParams, m: usize, seed: u64) -> Result<SampleBatch>;
}

/// Single-threaded back end.
#[derive(Clone, Copy, Debug, Default)]
pub struct SerialSampler;

impl Sampler for SerialSampler {
    fn sample(&self, p: &SkewEllipticalParams, m: usize, seed: u64) -> Result<SampleBatch> {
        sample(p, m, seed)
    }
}

/// `m` draws of `X = mu + delta_w |U0| + omega Delta U1`.
pub fn sample(p: &SkewEllipticalParams, m: usize, seed: u64) -> Result<SampleBatch> {
    if m == 0 {
        return Err(Error::EmptyBatch);
    }
    let mut data = Vec::with_capacity(m * p.dim());
    for k in 0..chunk_count(m) {
        data.extend(sample_chunk(p, seed, k, chunk_rows(m, k)));
    }
    SampleBatch::from_parts(p.digest(), seed, p.dim(), data)
}

/// `(1/m) sum_k exp(i t'x_k)`.
pub fn empirical_cf(batch: &SampleBatch, t: &[f64]) -> Result<Complex64> {
    if t.len() != batch.dim() {
        return Err(Error::DimensionMismatch {
            expected: batch.dim(),
            found: t.len(),
        });
    }
    if batch.rows() == 0 {
        return Err(Error::EmptyBatch);
    }
    let (mut re, mut im) = (0.0, 0.0);
    for x in batch.iter_rows() {
        let a: f64 = x.iter().zip(t).map(|(a, b)| a * b).sum();
        re += libm::cos(a);
        im += libm::sin(a);
    }
    let m = batch.rows() as f64;
    Ok(Complex64::new(re / m, im / m))
}
