//! Multi-threaded sampler over the chunk plan of the core sampler.

use rayon::prelude::*;
use seorder_core::sampler::{self, SampleBatch, Sampler};
use seorder_core::{Error, Result, SkewEllipticalParams};

/// Draws chunks on a rayon pool and joins them in index order, so batches
/// match the serial sampler exactly for any thread count.
pub struct RayonSampler {
    pool: rayon::ThreadPool,
}

impl RayonSampler {
    /// `threads = 0` uses rayon's default.
    pub fn new(threads: usize) -> anyhow::Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        Ok(RayonSampler { pool })
    }
}

impl Sampler for RayonSampler {
    fn sample(&self, p: &SkewEllipticalParams, m: usize, seed: u64) -> Result<SampleBatch> {
        if m == 0 {
            return Err(Error::EmptyBatch);
        }
        let chunks: Vec<Vec<f64>> = self.pool.install(|| {
            (0..sampler::chunk_count(m))
                .into_par_iter()
                .map(|k| sampler::sample_chunk(p, seed, k, sampler::chunk_rows(m, k)))
                .collect()
        });
        SampleBatch::from_parts(p.digest(), seed, p.dim(), chunks.concat())
    }
}
