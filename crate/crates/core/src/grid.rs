//! Grids, the discretized index measure, curves and datasets.
//!
//! Every curve in an analysis is observed on one shared [`Grid`]. The
//! probability measure over the index set is carried by [`MeasureWeights`],
//! normalized quadrature weights that sum to one, so every integral over the
//! index set becomes a weighted sum over grid points.

use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Strictly increasing, finite evaluation points in a compact interval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grid {
    points: Vec<f64>,
}

impl Grid {
    /// Sorts the points ascending. Rejects empty input, non-finite values and
    /// duplicates.
    pub fn new(mut points: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidValue(
                "grid must contain at least one point".into(),
            ));
        }
        if let Some(bad) = points.iter().find(|p| !p.is_finite()) {
            return Err(Error::InvalidValue(format!("non-finite grid point {bad}")));
        }
        points.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        if let Some(w) = points.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateGridPoint(w[0]));
        }
        Ok(Self { points })
    }

    /// `d` equispaced points covering `[a, b]` inclusively. A single point is
    /// placed at `b`.
    pub fn equispaced(a: f64, b: f64, d: usize) -> Result<Self> {
        if d == 0 || a.partial_cmp(&b) != Some(std::cmp::Ordering::Less) {
            return Err(Error::InvalidValue(format!(
                "equispaced grid needs d >= 1 and a < b, got d = {d}, [{a}, {b}]"
            )));
        }
        if d == 1 {
            return Self::new(vec![b]);
        }
        let step = (b - a) / (d - 1) as f64;
        let mut points: Vec<f64> = (0..d).map(|k| a + step * k as f64).collect();
        points[d - 1] = b;
        Self::new(points)
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn lower(&self) -> f64 {
        self.points[0]
    }

    pub fn upper(&self) -> f64 {
        self.points[self.points.len() - 1]
    }
}

impl<'de> Deserialize<'de> for Grid {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            points: Vec<f64>,
        }
        let raw = Raw::deserialize(deserializer)?;
        Grid::new(raw.points).map_err(serde::de::Error::custom)
    }
}

pub fn make_grid(points: &[f64]) -> Result<Grid> {
    Grid::new(points.to_vec())
}

pub(crate) fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> bool {
    Arc::ptr_eq(a, b) || a.points == b.points
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuadratureScheme {
    #[default]
    Trapezoid,
    Uniform,
}

/// Probability weights over the grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureWeights {
    weights: Vec<f64>,
    scheme: QuadratureScheme,
}

impl MeasureWeights {
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn scheme(&self) -> QuadratureScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        integrate(values, self)
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if self.weights.len() != len {
            return Err(Error::ShapeMismatch {
                expected: self.weights.len(),
                actual: len,
            });
        }
        Ok(())
    }
}

pub fn quadrature_weights(grid: &Grid, scheme: QuadratureScheme) -> MeasureWeights {
    let d = grid.len();
    let weights = if d == 1 {
        vec![1.0]
    } else {
        match scheme {
            QuadratureScheme::Uniform => vec![1.0 / d as f64; d],
            QuadratureScheme::Trapezoid => {
                let t = grid.points();
                let mut w: Vec<f64> = (0..d)
                    .map(|k| {
                        let left = if k == 0 { t[0] } else { t[k - 1] };
                        let right = if k + 1 == d { t[d - 1] } else { t[k + 1] };
                        0.5 * (right - left)
                    })
                    .collect();
                let total: f64 = w.iter().sum();
                w.iter_mut().for_each(|x| *x /= total);
                w
            }
        }
    };
    MeasureWeights { weights, scheme }
}

/// `Σ_k w_k v_k`.
pub fn integrate(values: &[f64], weights: &MeasureWeights) -> Result<f64> {
    weights.check_len(values.len())?;
    Ok(values
        .iter()
        .zip(&weights.weights)
        .map(|(v, w)| v * w)
        .sum())
}

/// A function sampled on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl Curve {
    pub fn new(grid: Arc<Grid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!("non-finite curve value {bad}")));
        }
        Ok(Self { grid, values })
    }

    pub fn constant(grid: Arc<Grid>, value: f64) -> Result<Self> {
        let d = grid.len();
        Self::new(grid, vec![value; d])
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Weighted L2 norm of a vector of grid values.
pub(crate) fn weighted_norm(v: impl Iterator<Item = f64>, weights: &[f64]) -> f64 {
    v.zip(weights).map(|(x, w)| w * x * x).sum::<f64>().sqrt()
}

pub(crate) fn weighted_distance(a: &[f64], b: &[f64], weights: &[f64]) -> f64 {
    weighted_norm(a.iter().zip(b).map(|(x, y)| x - y), weights)
}

/// Distance in L2(Λ) between two curves on the same grid.
pub fn l2_distance(a: &Curve, b: &Curve, weights: &MeasureWeights) -> Result<f64> {
    if !same_grid(&a.grid, &b.grid) {
        return Err(Error::GridMismatch);
    }
    weights.check_len(a.len())?;
    Ok(weighted_distance(&a.values, &b.values, &weights.weights))
}

/// Resamples `curve` onto `target`: every target point receives the mean of
/// the curve's values at its `k` nearest source points. Equidistant source
/// points are taken in ascending order of `t`.
pub fn resample_to_grid(curve: &Curve, target: &Arc<Grid>, k: usize) -> Result<Curve> {
    let src = curve.grid.points();
    if k == 0 || k > src.len() {
        return Err(Error::InvalidK { k, len: src.len() });
    }
    let mut order: Vec<usize> = (0..src.len()).collect();
    let values = target
        .points()
        .iter()
        .map(|&t| {
            order.sort_by(|&i, &j| {
                let (di, dj) = ((src[i] - t).abs(), (src[j] - t).abs());
                di.partial_cmp(&dj)
                    .unwrap_or(Ordering::Equal)
                    .then(i.cmp(&j))
            });
            order[..k].iter().map(|&i| curve.values[i]).sum::<f64>() / k as f64
        })
        .collect();
    Curve::new(Arc::clone(target), values)
}

/// `n` curves sharing one grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FunctionalDataset {
    grid: Arc<Grid>,
    n: usize,
    values: Vec<f64>,
    labels: Vec<String>,
}

impl FunctionalDataset {
    pub fn new(grid: Arc<Grid>, rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let d = grid.len();
        let mut values = Vec::with_capacity(n * d);
        for row in rows {
            if row.len() != d {
                return Err(Error::ShapeMismatch {
                    expected: d,
                    actual: row.len(),
                });
            }
            values.extend(row);
        }
        Self::from_flat(grid, n, values)
    }

    /// Builds a dataset from `n * d` row-major values.
    pub fn from_flat(grid: Arc<Grid>, n: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        if values.len() != n * grid.len() {
            return Err(Error::ShapeMismatch {
                expected: n * grid.len(),
                actual: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "non-finite sample value {bad}"
            )));
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        Ok(Self {
            grid,
            n,
            values,
            labels,
        })
    }

    pub fn from_curves(curves: &[Curve]) -> Result<Self> {
        let first = curves.first().ok_or(Error::EmptyDataset)?;
        let grid = Arc::clone(&first.grid);
        let mut values = Vec::with_capacity(curves.len() * grid.len());
        for c in curves {
            if !same_grid(&grid, &c.grid) {
                return Err(Error::GridMismatch);
            }
            values.extend_from_slice(&c.values);
        }
        Self::from_flat(grid, curves.len(), values)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::ShapeMismatch {
                expected: self.n,
                actual: labels.len(),
            });
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    /// Number of curves.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of grid points.
    pub fn d(&self) -> usize {
        self.grid.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.d();
        &self.values[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d())
    }

    pub fn curve(&self, i: usize) -> Curve {
        Curve {
            grid: Arc::clone(&self.grid),
            values: self.row(i).to_vec(),
        }
    }

    /// Values of every curve at grid index `k`.
    pub fn column(&self, k: usize) -> Vec<f64> {
        self.rows().map(|r| r[k]).collect()
    }

    /// Applies `f(k, value)` to every entry; `k` is the grid index.
    pub fn map_values(&self, mut f: impl FnMut(usize, f64) -> f64) -> Result<Self> {
        let d = self.d();
        let values = self
            .values
            .iter()
            .enumerate()
            .map(|(idx, &v)| f(idx % d, v))
            .collect();
        let out = Self::from_flat(Arc::clone(&self.grid), self.n, values)?;
        out.with_labels(self.labels.clone())
    }

    /// Restricts every curve to the grid points at `indices` (ascending).
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        let points: Vec<f64> = indices
            .iter()
            .map(|&k| {
                self.grid
                    .points()
                    .get(k)
                    .copied()
                    .ok_or(Error::ShapeMismatch {
                        expected: self.d(),
                        actual: k + 1,
                    })
            })
            .collect::<Result<_>>()?;
        let grid = Arc::new(Grid::new(points)?);
        let values = self
            .rows()
            .flat_map(|r| indices.iter().map(move |&k| r[k]))
            .collect();
        Self::from_flat(grid, self.n, values)?.with_labels(self.labels.clone())
    }

    pub(crate) fn check_curve(&self, x: &Curve) -> Result<()> {
        if !same_grid(&self.grid, &x.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Pointwise counts of sample values below and equal to a query value.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarginalCounts {
    pub n_below: usize,
    pub n_equal: usize,
    pub n_total: usize,
}

impl MarginalCounts {
    /// Empirical CDF at the query value, `F̂(x)`.
    pub fn cdf(&self) -> f64 {
        (self.n_below + self.n_equal) as f64 / self.n_total as f64
    }

    /// Left limit `F̂(x−)`.
    pub fn cdf_left(&self) -> f64 {
        self.n_below as f64 / self.n_total as f64
    }
}

/// Per-coordinate sorted sample values, for repeated marginal counting.
#[derive(Debug, Clone)]
pub struct SortedMarginals {
    n: usize,
    columns: Vec<Vec<f64>>,
}

impl SortedMarginals {
    pub fn new(data: &FunctionalDataset) -> Self {
        let columns = (0..data.d())
            .map(|k| {
                let mut col = data.column(k);
                col.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
                col
            })
            .collect();
        Self {
            n: data.n(),
            columns,
        }
    }

    pub fn counts(&self, k: usize, value: f64) -> MarginalCounts {
        let col = &self.columns[k];
        let below = col.partition_point(|&v| v < value);
        let upto = col.partition_point(|&v| v <= value);
        MarginalCounts {
            n_below: below,
            n_equal: upto - below,
            n_total: self.n,
        }
    }

    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }
}
