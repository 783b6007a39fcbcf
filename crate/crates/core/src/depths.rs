//! Empirical depths of a query curve relative to a functional sample.
//!
//! Band depth and half-region depth use inclusive comparisons and, for band
//! depth, subsets of distinct sample curves. The modified band depth,
//! modified half-region depth and integrated data depth are computed from
//! the pointwise empirical distribution functions `F̂_t(x)` and `F̂_t(x−)`,
//! which corresponds to sampling the band curves with replacement. The two
//! band conventions therefore differ on the same data.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{weighted_norm, Curve, FunctionalDataset, MeasureWeights, SortedMarginals};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepthFamily {
    Bd,
    Hrd,
    Mbd,
    Mhrd,
    Idd,
    Sd,
    #[serde(rename = "sd_vz")]
    SdVz,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthResult {
    pub value: f64,
    pub family: DepthFamily,
    /// Band order `J`, for band-type depths.
    pub order: Option<usize>,
    /// Present when the value is a Monte-Carlo estimate.
    pub standard_error: Option<f64>,
}

impl DepthResult {
    fn exact(value: f64, family: DepthFamily, order: Option<usize>) -> Self {
        Self {
            value,
            family,
            order,
            standard_error: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnivariateDepth {
    /// `min(F̂(v), 1 − F̂(v−))`
    #[default]
    Halfspace,
    /// `F̂(v) (1 − F̂(v−))`
    Simplicial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpatialConvention {
    #[default]
    Standard,
    /// Vardi–Zhang: `1 − max(0, 1 − SD(x) − p(x))` with `p(x)` the sample
    /// mass at `x`.
    Vz,
}

/// How [`band_depth_with`] evaluates the subset counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BandDepthMethod {
    /// Enumerate every subset.
    Exact,
    /// Sample `samples` subsets per order from a generator keyed by `seed`.
    MonteCarlo { samples: usize, seed: u64 },
    /// Exact while the total number of subsets is at most `max_subsets`,
    /// Monte-Carlo above it.
    Auto {
        max_subsets: u64,
        samples: usize,
        seed: u64,
    },
}

impl Default for BandDepthMethod {
    fn default() -> Self {
        BandDepthMethod::Auto {
            max_subsets: 20_000_000,
            samples: 200_000,
            seed: 0,
        }
    }
}

fn check_weights(data: &FunctionalDataset, weights: &MeasureWeights) -> Result<()> {
    if weights.len() != data.d() {
        return Err(Error::ShapeMismatch {
            expected: data.d(),
            actual: weights.len(),
        });
    }
    Ok(())
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k)
        .fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
        .min(u64::MAX as u128) as u64
}

/// Bitsets over grid points: where each sample curve is `≥ x` and `≤ x`.
struct CoverMasks {
    words: usize,
    full: Vec<u64>,
    above: Vec<u64>,
    below: Vec<u64>,
}

impl CoverMasks {
    fn new(x: &[f64], data: &FunctionalDataset) -> Self {
        let d = x.len();
        let words = d.div_ceil(64);
        let mut full = vec![u64::MAX; words];
        if !d.is_multiple_of(64) {
            full[words - 1] = (1u64 << (d % 64)) - 1;
        }
        let mut above = vec![0u64; words * data.n()];
        let mut below = vec![0u64; words * data.n()];
        for (i, row) in data.rows().enumerate() {
            for (k, (&v, &q)) in row.iter().zip(x).enumerate() {
                let (w, bit) = (i * words + k / 64, 1u64 << (k % 64));
                if v >= q {
                    above[w] |= bit;
                }
                if v <= q {
                    below[w] |= bit;
                }
            }
        }
        Self {
            words,
            full,
            above,
            below,
        }
    }

    fn above(&self, i: usize) -> &[u64] {
        &self.above[i * self.words..(i + 1) * self.words]
    }

    fn below(&self, i: usize) -> &[u64] {
        &self.below[i * self.words..(i + 1) * self.words]
    }

    fn is_full(&self, mask: &[u64]) -> bool {
        mask == self.full.as_slice()
    }

    fn covers(&self, subset: &[usize], above: &mut [u64], below: &mut [u64]) -> bool {
        above.fill(0);
        below.fill(0);
        for &i in subset {
            or_into(above, self.above(i));
            or_into(below, self.below(i));
        }
        self.is_full(above) && self.is_full(below)
    }

    /// `counts[j]` = number of `j`-subsets whose band contains `x` everywhere.
    fn count_exact(&self, n: usize, max_order: usize) -> Vec<u64> {
        let mut counts = vec![0u64; max_order + 1];
        let mut above = vec![0u64; max_order * self.words];
        let mut below = vec![0u64; max_order * self.words];
        self.descend(0, 0, n, max_order, &mut above, &mut below, &mut counts);
        counts
    }

    /// Depth-first walk over subsets in increasing index order; level `size`
    /// of the stacks holds the OR of the masks chosen so far.
    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        start: usize,
        size: usize,
        n: usize,
        max_order: usize,
        above: &mut [u64],
        below: &mut [u64],
        counts: &mut [u64],
    ) {
        let w = self.words;
        let level = size * w..(size + 1) * w;
        for i in start..n {
            for k in 0..w {
                let (prev_a, prev_b) = if size == 0 {
                    (0, 0)
                } else {
                    (above[level.start - w + k], below[level.start - w + k])
                };
                above[level.start + k] = prev_a | self.above(i)[k];
                below[level.start + k] = prev_b | self.below(i)[k];
            }
            let order = size + 1;
            if order >= 2
                && self.is_full(&above[level.clone()])
                && self.is_full(&below[level.clone()])
            {
                // Every superset extending this subset with larger indices also covers.
                for (j, count) in counts.iter_mut().enumerate().skip(order) {
                    *count += binomial(n - i - 1, j - order);
                }
                continue;
            }
            if order < max_order {
                self.descend(i + 1, order, n, max_order, above, below, counts);
            }
        }
    }
}

fn or_into(acc: &mut [u64], mask: &[u64]) {
    acc.iter_mut().zip(mask).for_each(|(a, m)| *a |= m);
}

/// Band depth of `x`: the sum over `j = 2..=order` of the fraction of
/// `j`-subsets of distinct sample curves whose pointwise envelope contains
/// `x` at every grid point.
pub fn band_depth(x: &Curve, data: &FunctionalDataset, order: usize) -> Result<DepthResult> {
    band_depth_with(x, data, order, BandDepthMethod::default())
}

pub fn band_depth_with(
    x: &Curve,
    data: &FunctionalDataset,
    order: usize,
    method: BandDepthMethod,
) -> Result<DepthResult> {
    data.check_curve(x)?;
    let n = data.n();
    if order < 2 || order > n {
        return Err(Error::InvalidOrder { order, n });
    }
    let masks = CoverMasks::new(x.values(), data);
    let total: u64 = (2..=order)
        .map(|j| binomial(n, j))
        .fold(0u64, u64::saturating_add);
    let sampled = match method {
        BandDepthMethod::Exact => None,
        BandDepthMethod::MonteCarlo { samples, seed } => Some((samples, seed)),
        BandDepthMethod::Auto {
            max_subsets,
            samples,
            seed,
        } => (total > max_subsets).then_some((samples, seed)),
    };
    match sampled {
        None => {
            let counts = masks.count_exact(n, order);
            let value = (2..=order)
                .map(|j| counts[j] as f64 / binomial(n, j) as f64)
                .sum();
            Ok(DepthResult::exact(value, DepthFamily::Bd, Some(order)))
        }
        Some((samples, seed)) => {
            if samples == 0 {
                return Err(Error::InvalidConfig(
                    "Monte-Carlo band depth needs samples > 0".into(),
                ));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut above = vec![0u64; masks.words];
            let mut below = vec![0u64; masks.words];
            let (mut value, mut var) = (0.0, 0.0);
            for j in 2..=order {
                let mut hits = 0usize;
                for _ in 0..samples {
                    let subset = index::sample(&mut rng, n, j).into_vec();
                    hits += masks.covers(&subset, &mut above, &mut below) as usize;
                }
                let p = hits as f64 / samples as f64;
                value += p;
                var += p * (1.0 - p) / samples as f64;
            }
            Ok(DepthResult {
                value,
                family: DepthFamily::Bd,
                order: Some(order),
                standard_error: Some(var.sqrt()),
            })
        }
    }
}

/// `min` of the fractions of sample curves lying entirely below and
/// entirely above `x` (inclusive).
pub fn half_region_depth(x: &Curve, data: &FunctionalDataset) -> Result<DepthResult> {
    data.check_curve(x)?;
    let q = x.values();
    let (mut below, mut above) = (0usize, 0usize);
    for row in data.rows() {
        below += row.iter().zip(q).all(|(v, x)| v <= x) as usize;
        above += row.iter().zip(q).all(|(v, x)| v >= x) as usize;
    }
    let n = data.n() as f64;
    Ok(DepthResult::exact(
        (below as f64 / n).min(above as f64 / n),
        DepthFamily::Hrd,
        None,
    ))
}

/// Shared state for evaluating the marginal-distribution depths of many
/// queries against one sample.
#[derive(Debug, Clone)]
pub struct DepthContext<'a> {
    data: &'a FunctionalDataset,
    weights: &'a MeasureWeights,
    marginals: SortedMarginals,
}

impl<'a> DepthContext<'a> {
    pub fn new(data: &'a FunctionalDataset, weights: &'a MeasureWeights) -> Result<Self> {
        check_weights(data, weights)?;
        Ok(Self {
            data,
            weights,
            marginals: SortedMarginals::new(data),
        })
    }

    pub fn marginals(&self) -> &SortedMarginals {
        &self.marginals
    }

    fn integrate_pointwise(&self, x: &Curve, mut f: impl FnMut(f64, f64) -> f64) -> Result<f64> {
        self.data.check_curve(x)?;
        Ok(x.values()
            .iter()
            .zip(self.weights.weights())
            .enumerate()
            .map(|(k, (&v, &w))| {
                let c = self.marginals.counts(k, v);
                w * f(c.cdf_left(), c.cdf())
            })
            .sum())
    }

    pub fn modified_band_depth(&self, x: &Curve, order: usize) -> Result<DepthResult> {
        if order < 2 {
            return Err(Error::InvalidOrder {
                order,
                n: self.data.n(),
            });
        }
        let value = self.integrate_pointwise(x, |left, cdf| {
            (2..=order)
                .map(|j| {
                    let j = j as i32;
                    1.0 - left.powi(j) - (1.0 - cdf).powi(j)
                })
                .sum()
        })?;
        Ok(DepthResult::exact(value, DepthFamily::Mbd, Some(order)))
    }

    pub fn modified_half_region_depth(&self, x: &Curve) -> Result<DepthResult> {
        let upper = self.integrate_pointwise(x, |_, cdf| cdf)?;
        let lower = self.integrate_pointwise(x, |left, _| left)?;
        Ok(DepthResult::exact(
            upper.min(1.0 - lower),
            DepthFamily::Mhrd,
            None,
        ))
    }

    pub fn integrated_data_depth(
        &self,
        x: &Curve,
        univariate: UnivariateDepth,
    ) -> Result<DepthResult> {
        let value = match univariate {
            UnivariateDepth::Halfspace => {
                self.integrate_pointwise(x, |left, cdf| cdf.min(1.0 - left))?
            }
            UnivariateDepth::Simplicial => {
                self.integrate_pointwise(x, |left, cdf| cdf * (1.0 - left))?
            }
        };
        Ok(DepthResult::exact(value, DepthFamily::Idd, None))
    }
}

/// `Σ_{j=2}^{J} ∫ [1 − F̂_t(x_t−)^j − (1 − F̂_t(x_t))^j] Λ(dt)`.
pub fn modified_band_depth(
    x: &Curve,
    data: &FunctionalDataset,
    weights: &MeasureWeights,
    order: usize,
) -> Result<DepthResult> {
    DepthContext::new(data, weights)?.modified_band_depth(x, order)
}

/// `min{∫ F̂_t(x_t) Λ(dt), 1 − ∫ F̂_t(x_t−) Λ(dt)}`.
pub fn modified_half_region_depth(
    x: &Curve,
    data: &FunctionalDataset,
    weights: &MeasureWeights,
) -> Result<DepthResult> {
    DepthContext::new(data, weights)?.modified_half_region_depth(x)
}

/// `∫ D_t(x_t) Λ(dt)` for a univariate depth `D_t` built from `F̂_t`.
pub fn integrated_data_depth(
    x: &Curve,
    data: &FunctionalDataset,
    weights: &MeasureWeights,
    univariate: UnivariateDepth,
) -> Result<DepthResult> {
    DepthContext::new(data, weights)?.integrated_data_depth(x, univariate)
}

/// Norm of the averaged unit vectors `(x − X_i)/‖x − X_i‖` over sample curves
/// not equal to `x`, together with the number of curves equal to `x`.
pub(crate) fn mean_unit_vector_norm(
    x: &[f64],
    data: &FunctionalDataset,
    weights: &[f64],
) -> (f64, usize) {
    let mut sum = vec![0.0; x.len()];
    let mut equal = 0usize;
    for row in data.rows() {
        if row == x {
            equal += 1;
            continue;
        }
        let dist = weighted_norm(x.iter().zip(row).map(|(a, b)| a - b), weights);
        sum.iter_mut()
            .zip(x.iter().zip(row))
            .for_each(|(s, (a, b))| *s += (a - b) / dist);
    }
    (
        weighted_norm(sum.into_iter(), weights) / data.n() as f64,
        equal,
    )
}

/// Empirical spatial depth in the L2(Λ) geometry. Sample curves identical to
/// `x` drop out of the sum but still count in the divisor `n`.
pub fn spatial_depth(
    x: &Curve,
    data: &FunctionalDataset,
    weights: &MeasureWeights,
    convention: SpatialConvention,
) -> Result<DepthResult> {
    data.check_curve(x)?;
    check_weights(data, weights)?;
    let (norm, equal) = mean_unit_vector_norm(x.values(), data, weights.weights());
    let sd = 1.0 - norm;
    Ok(match convention {
        SpatialConvention::Standard => DepthResult::exact(sd, DepthFamily::Sd, None),
        SpatialConvention::Vz => {
            let mass = equal as f64 / data.n() as f64;
            DepthResult::exact(1.0 - (1.0 - sd - mass).max(0.0), DepthFamily::SdVz, None)
        }
    })
}
