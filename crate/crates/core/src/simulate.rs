//! Gaussian-process paths on a grid: Brownian motion, fractional Brownian
//! motion and the Brownian bridge.
//!
//! Paths are `start + mean + L z` where `L` is a lower Cholesky factor of
//! the discretized covariance. Each path draws its normals from its own
//! ChaCha stream keyed by `(seed, path index)`, so path `i` does not depend on
//! how many paths are requested.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{same_grid, Curve, FunctionalDataset, Grid};

/// Largest diagonal jitter tried before giving up on a factorization.
pub const MAX_JITTER: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ProcessKind {
    Brownian,
    Fbm { hurst: f64 },
    Bridge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GpSpec {
    #[serde(flatten)]
    pub kind: ProcessKind,
    /// Center of symmetry; zero when absent.
    #[serde(skip)]
    pub mean: Option<Curve>,
    #[serde(default)]
    pub start_value: f64,
}

impl GpSpec {
    pub fn new(kind: ProcessKind) -> Self {
        Self {
            kind,
            mean: None,
            start_value: 0.0,
        }
    }

    pub fn brownian() -> Self {
        Self::new(ProcessKind::Brownian)
    }

    pub fn fbm(hurst: f64) -> Self {
        Self::new(ProcessKind::Fbm { hurst })
    }

    pub fn bridge() -> Self {
        Self::new(ProcessKind::Bridge)
    }

    pub fn validate(&self) -> Result<()> {
        if let ProcessKind::Fbm { hurst } = self.kind {
            if !(hurst > 0.0 && hurst < 1.0) {
                return Err(Error::InvalidHurst(hurst));
            }
        }
        if !self.start_value.is_finite() {
            return Err(Error::InvalidValue(format!(
                "start value {}",
                self.start_value
            )));
        }
        Ok(())
    }

    fn covariance(&self, t: f64, s: f64) -> f64 {
        match self.kind {
            ProcessKind::Brownian => t.min(s),
            ProcessKind::Fbm { hurst } => {
                let h2 = 2.0 * hurst;
                0.5 * (t.powf(h2) + s.powf(h2) - (t - s).abs().powf(h2))
            }
            ProcessKind::Bridge => t.min(s) - t * s,
        }
    }
}

/// Discretized covariance on a grid, with the factor used for sampling.
#[derive(Debug, Clone)]
pub struct KernelMatrix {
    grid: Arc<Grid>,
    entries: Vec<f64>,
    jitter: f64,
    factor: Option<Vec<f64>>,
}

impl KernelMatrix {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Row-major `d × d` covariances, without jitter.
    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.grid.len() + j]
    }

    /// Diagonal jitter that made the factorization succeed (the largest one
    /// tried if none did).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn is_factorized(&self) -> bool {
        self.factor.is_some()
    }
}

pub fn build_kernel(spec: &GpSpec, grid: &Arc<Grid>) -> Result<KernelMatrix> {
    spec.validate()?;
    let t = grid.points();
    let domain_ok = |p: f64| match spec.kind {
        ProcessKind::Bridge => (0.0..=1.0).contains(&p),
        _ => p >= 0.0,
    };
    if let Some(&bad) = t.iter().find(|&&p| !domain_ok(p)) {
        return Err(Error::InvalidDomain(bad));
    }
    let d = t.len();
    let mut entries = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..=i {
            let c = spec.covariance(t[i], t[j]);
            entries[i * d + j] = c;
            entries[j * d + i] = c;
        }
    }
    let mut jitter = 0.0;
    let mut factor = cholesky_psd(&entries, d, 0.0);
    let mut next = 1e-12;
    while factor.is_none() && next <= MAX_JITTER * (1.0 + 1e-9) {
        jitter = next;
        factor = cholesky_psd(&entries, d, jitter);
        next *= 10.0;
    }
    Ok(KernelMatrix {
        grid: Arc::clone(grid),
        entries,
        jitter,
        factor,
    })
}

/// Lower Cholesky factor of `a + jitter I`, tolerating exactly degenerate
/// directions: a pivot that vanishes to rounding level, with a vanishing
/// remainder column, yields a zero column. Returns `None` for indefinite
/// input.
fn cholesky_psd(a: &[f64], d: usize, jitter: f64) -> Option<Vec<f64>> {
    let scale = (0..d)
        .map(|i| a[i * d + i])
        .fold(0.0f64, f64::max)
        .max(f64::MIN_POSITIVE);
    let tol = 64.0 * f64::EPSILON * scale;
    let mut l = vec![0.0; d * d];
    for j in 0..d {
        let pivot =
            a[j * d + j] + jitter - (0..j).map(|k| l[j * d + k] * l[j * d + k]).sum::<f64>();
        if pivot > tol {
            let root = pivot.sqrt();
            l[j * d + j] = root;
            for i in j + 1..d {
                let dot: f64 = (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum();
                l[i * d + j] = (a[i * d + j] - dot) / root;
            }
        } else if pivot >= -tol {
            for i in j + 1..d {
                let dot: f64 = (0..j).map(|k| l[i * d + k] * l[j * d + k]).sum();
                if (a[i * d + j] - dot).abs() > tol {
                    return None;
                }
            }
        } else {
            return None;
        }
    }
    Some(l)
}

/// Draws `n` paths. Path `i` uses the ChaCha stream `i` of `seed`.
pub fn sample_paths(
    kernel: &KernelMatrix,
    spec: &GpSpec,
    n: usize,
    seed: u64,
) -> Result<FunctionalDataset> {
    spec.validate()?;
    let factor = kernel
        .factor
        .as_ref()
        .ok_or(Error::NotPositiveSemidefinite {
            max_jitter: MAX_JITTER,
        })?;
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let grid = &kernel.grid;
    let d = grid.len();
    let offset: Vec<f64> = match &spec.mean {
        Some(mean) => {
            if !same_grid(mean.grid(), grid) {
                return Err(Error::GridMismatch);
            }
            mean.values().iter().map(|m| m + spec.start_value).collect()
        }
        None => vec![spec.start_value; d],
    };
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            (0..d)
                .map(|r| offset[r] + (0..=r).map(|k| factor[r * d + k] * z[k]).sum::<f64>())
                .collect()
        })
        .collect();
    FunctionalDataset::new(Arc::clone(grid), rows)
}

/// Builds the kernel and samples in one call.
pub fn simulate(
    spec: &GpSpec,
    grid: &Arc<Grid>,
    n: usize,
    seed: u64,
) -> Result<(FunctionalDataset, f64)> {
    let kernel = build_kernel(spec, grid)?;
    let data = sample_paths(&kernel, spec, n, seed)?;
    Ok((data, kernel.jitter()))
}
