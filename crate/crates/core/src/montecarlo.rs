//! Sampling oracle: simulate the walk directly and histogram endpoints.
//!
//! Chain `c` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to stream
//! `c`, so every chain's randomness is fixed by `(seed, c)` alone. Chains are
//! split into fixed blocks, each block fills an integer histogram, and the
//! histograms are added; the counts (and everything derived from them) do not
//! depend on how many threads ran the blocks.

use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedAliasIndex;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernel::{FieldTag, KernelField, Walk, WalkSpec};
use crate::torus::{LatticePoint, TorusGeometry};

/// Largest support the sampler will tabulate.
pub const DEFAULT_SUPPORT_CAP: usize = 1 << 24;
const BLOCK: u64 = 4096;

/// Alias table over the sites where `p₁ > 0`.
#[derive(Debug, Clone)]
pub struct SamplerTable {
    geom: TorusGeometry,
    support: Vec<LatticePoint>,
    probabilities: Vec<f64>,
    alias: WeightedAliasIndex<f64>,
}

impl SamplerTable {
    pub fn support(&self) -> &[LatticePoint] {
        &self.support
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn geom(&self) -> &TorusGeometry {
        &self.geom
    }

    /// One step from the site `x` (coordinates modified in place).
    #[inline]
    fn step(&self, rng: &mut ChaCha8Rng, x: &mut [i64]) {
        let j = self.alias.sample(rng);
        for (c, s) in x.iter_mut().zip(self.support[j].coords()) {
            *c = self.geom.reduce(*c + s);
        }
    }
}

pub fn build_sampler(spec: &WalkSpec) -> Result<SamplerTable> {
    build_sampler_from_walk(&Walk::new(spec.clone())?)
}

pub fn build_sampler_from_walk(walk: &Walk) -> Result<SamplerTable> {
    build_sampler_with_cap(walk, DEFAULT_SUPPORT_CAP)
}

pub fn build_sampler_with_cap(walk: &Walk, cap: usize) -> Result<SamplerTable> {
    let geom = *walk.geom();
    let p1 = walk.one_step_values();
    let count = p1.iter().filter(|&&p| p > 0.0).count();
    if count > cap {
        return Err(Error::Capacity { sites: count as u128, cap });
    }
    let mut support = Vec::with_capacity(count);
    let mut probabilities = Vec::with_capacity(count);
    for (i, &p) in p1.iter().enumerate() {
        if p > 0.0 {
            support.push(geom.point_at(i));
            probabilities.push(p);
        }
    }
    let alias =
        WeightedAliasIndex::new(probabilities.clone()).map_err(|e| Error::InvalidParameter(format!("cannot build alias table: {e}")))?;
    Ok(SamplerTable { geom, support, probabilities, alias })
}

fn chain_rng(seed: u64, chain: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain);
    rng
}

/// Empirical field with per-site binomial standard errors.
#[derive(Debug, Clone)]
pub struct EmpiricalKernel {
    pub field: KernelField,
    pub counts: Vec<u64>,
    pub standard_errors: Vec<f64>,
    pub chains: u64,
    pub seed: u64,
}

impl EmpiricalKernel {
    /// Fraction of sites outside the band `exact ± z·√(p(1−p)/chains)`,
    /// the binomial spread under the exact kernel. This stays meaningful at
    /// sites the sample never reached, where the plug-in SE is zero.
    pub fn fraction_outside(&self, exact: &[f64], z: f64) -> f64 {
        let m = self.chains as f64;
        let outside = self
            .field
            .values
            .iter()
            .zip(exact)
            .filter(|(e, x)| {
                let p = x.clamp(0.0, 1.0);
                let se = (p * (1.0 - p) / m).sqrt();
                (*e - *x).abs() > z * se + 1e-15
            })
            .count();
        outside as f64 / exact.len() as f64
    }

    pub fn max_se(&self) -> f64 {
        self.standard_errors.iter().copied().fold(0.0, f64::max)
    }
}

/// Run `chains` independent `n`-step walks from the origin.
pub fn empirical_kernel(table: &SamplerTable, n: u64, chains: u64, seed: u64) -> Result<EmpiricalKernel> {
    if chains == 0 {
        return Err(Error::InvalidParameter("chains must be at least 1".into()));
    }
    let geom = table.geom;
    let d = geom.dim();
    let sites = geom.sites();
    let blocks = chains.div_ceil(BLOCK);
    let counts = (0..blocks)
        .into_par_iter()
        .fold(
            || vec![0u64; sites],
            |mut hist, b| {
                let mut x = vec![0i64; d];
                for chain in b * BLOCK..((b + 1) * BLOCK).min(chains) {
                    let mut rng = chain_rng(seed, chain);
                    x.iter_mut().for_each(|c| *c = 0);
                    for _ in 0..n {
                        table.step(&mut rng, &mut x);
                    }
                    let idx = geom.index_of(&x).expect("dimension fixed by the table");
                    hist[idx] += 1;
                }
                hist
            },
        )
        .reduce(
            || vec![0u64; sites],
            |mut a, b| {
                a.iter_mut().zip(&b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let cf = chains as f64;
    let values: Vec<f64> = counts.iter().map(|&c| c as f64 / cf).collect();
    let standard_errors = values.iter().map(|&p| (p * (1.0 - p) / cf).sqrt()).collect();
    Ok(EmpiricalKernel {
        field: KernelField { geom, values, tag: FieldTag::Empirical { n, chains }, clamped_mass: 0.0 },
        counts,
        standard_errors,
        chains,
        seed,
    })
}
