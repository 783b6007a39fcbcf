//! Empirical deepest points: the coordinatewise median and the spatial
//! (geometric) median in L2(Λ).
//!
//! The spatial median minimizes `n⁻¹ Σ ‖x − X_i‖`. The solver runs the
//! Weiszfeld fixed point `x ← Σ X_i/‖x − X_i‖ / Σ 1/‖x − X_i‖`, whose iterates
//! are convex combinations of the sample and so stay in its convex hull.
//! When an iterate lands on sample curves it uses the Vardi–Zhang modified
//! step, which either certifies that point as optimal or moves off it.

use std::cmp::Ordering;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{weighted_distance, weighted_norm, Curve, FunctionalDataset, MeasureWeights};

/// Pointwise sample median; for even `n` the mean of the two middle order
/// statistics.
pub fn coordinatewise_median(data: &FunctionalDataset) -> Result<Curve> {
    let n = data.n();
    if n == 0 {
        return Err(Error::EmptyDataset);
    }
    let values = (0..data.d())
        .map(|k| {
            let mut col = data.column(k);
            col.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
            if n % 2 == 1 {
                col[n / 2]
            } else {
                (col[n / 2 - 1] + col[n / 2]) / 2.0
            }
        })
        .collect();
    Curve::new(Arc::clone(data.grid()), values)
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

fn objective(x: &[f64], data: &FunctionalDataset, w: &[f64]) -> f64 {
    data.rows().map(|r| weighted_distance(x, r, w)).sum::<f64>() / data.n() as f64
}

/// Mean L2(Λ) distance from `x` to the sample curves.
pub fn spatial_objective(
    x: &Curve,
    data: &FunctionalDataset,
    weights: &MeasureWeights,
) -> Result<f64> {
    data.check_curve(x)?;
    check_weights(data, weights)?;
    Ok(objective(x.values(), data, weights.weights()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Threshold on the norm of the averaged unit-vector sum.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Distance at or below which an iterate counts as sitting on a sample
    /// curve.
    pub data_point_epsilon: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-8,
            max_iterations: 10_000,
            data_point_epsilon: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let tolerance_ok = self.tolerance > 0.0;
        let epsilon_ok = self.data_point_epsilon >= 0.0;
        if !tolerance_ok || !epsilon_ok || self.max_iterations == 0 {
            return Err(Error::InvalidConfig(format!(
                "solver needs tolerance > 0, max_iterations >= 1, data_point_epsilon >= 0; got {self:?}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    pub final_objective: f64,
    /// `n⁻¹ ‖Σ (x − X_i)/‖x − X_i‖‖` over sample curves not coinciding with
    /// the output.
    pub gradient_norm: f64,
    pub converged: bool,
    /// Index of a sample curve the output coincides with, when that curve
    /// was certified optimal.
    pub anchored_at_data_point: Option<usize>,
    /// Objective at the starting point and after every accepted step.
    pub objective_history: Vec<f64>,
}

/// Distances from `x` to every sample curve, with the sum of unit vectors
/// `(X_i − x)/‖X_i − x‖` over curves farther than `eps`.
struct Pull {
    distances: Vec<f64>,
    coinciding: Vec<usize>,
    /// `Σ_{i ∉ C} (X_i − x)/D_i`
    direction: Vec<f64>,
    /// `Σ_{i ∉ C} X_i/D_i`
    weighted_sum: Vec<f64>,
    inverse_sum: f64,
}

impl Pull {
    fn at(x: &[f64], data: &FunctionalDataset, w: &[f64], eps: f64) -> Self {
        let d = x.len();
        let mut pull = Pull {
            distances: Vec::with_capacity(data.n()),
            coinciding: Vec::new(),
            direction: vec![0.0; d],
            weighted_sum: vec![0.0; d],
            inverse_sum: 0.0,
        };
        for (i, row) in data.rows().enumerate() {
            let dist = weighted_distance(x, row, w);
            pull.distances.push(dist);
            if dist <= eps {
                pull.coinciding.push(i);
                continue;
            }
            let inv = 1.0 / dist;
            pull.inverse_sum += inv;
            for k in 0..d {
                pull.direction[k] += (row[k] - x[k]) * inv;
                pull.weighted_sum[k] += row[k] * inv;
            }
        }
        pull
    }

    fn direction_norm(&self, w: &[f64]) -> f64 {
        weighted_norm(self.direction.iter().copied(), w)
    }
}

/// Subgradient optimality of sample curve `j`: the unit vectors from it to
/// the other curves must sum to a norm no larger than its multiplicity.
fn data_point_is_optimal(j: usize, data: &FunctionalDataset, w: &[f64], eps: f64) -> bool {
    let pull = Pull::at(data.row(j), data, w, eps);
    pull.direction_norm(w) <= pull.coinciding.len() as f64
}

/// Relative evaluation error allowed when comparing successive objectives.
pub const OBJECTIVE_ROUNDING: f64 = 8.0 * f64::EPSILON;

pub fn spatial_median(
    data: &FunctionalDataset,
    weights: &MeasureWeights,
    config: &SolverConfig,
) -> Result<(Curve, SolverReport)> {
    config.validate()?;
    check_weights(data, weights)?;
    let n = data.n();
    let w = weights.weights();
    let eps = config.data_point_epsilon;
    let grid = Arc::clone(data.grid());

    let mut x = coordinatewise_median(data)?.into_values();
    let mut obj = objective(&x, data, w);
    let mut history = vec![obj];
    let mut anchored = None;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iterations {
        let pull = Pull::at(&x, data, w, eps);
        let r = pull.direction_norm(w);
        if let Some(&j) = pull.coinciding.first() {
            if r <= pull.coinciding.len() as f64 {
                x.copy_from_slice(data.row(j));
                obj = objective(&x, data, w);
                anchored = Some(j);
                converged = true;
                break;
            }
        } else if r / n as f64 <= config.tolerance {
            converged = true;
            break;
        }

        // Jump straight to the nearest sample curve when it is certified
        // optimal; Weiszfeld approaches such points slowly.
        let nearest = (0..n)
            .min_by(|&a, &b| {
                pull.distances[a]
                    .partial_cmp(&pull.distances[b])
                    .unwrap_or(Ordering::Equal)
            })
            .unwrap_or(0);
        if pull.coinciding.is_empty() && data_point_is_optimal(nearest, data, w, eps) {
            let candidate = objective(data.row(nearest), data, w);
            if candidate <= obj {
                x.copy_from_slice(data.row(nearest));
                obj = candidate;
                history.push(obj);
                iterations += 1;
                anchored = Some(nearest);
                converged = true;
                break;
            }
        }

        let target: Vec<f64> = pull
            .weighted_sum
            .iter()
            .map(|s| s / pull.inverse_sum)
            .collect();
        let next: Vec<f64> = if pull.coinciding.is_empty() {
            target
        } else {
            let stay = pull.coinciding.len() as f64 / r;
            target
                .iter()
                .zip(&x)
                .map(|(t, xi)| (1.0 - stay) * t + stay * xi)
                .collect()
        };
        let next_obj = objective(&next, data, w);
        // Near the optimum a Weiszfeld step lowers the objective by less than
        // its rounding error, so only increases beyond that count.
        if next_obj > obj * (1.0 + OBJECTIVE_ROUNDING) || next == x {
            break;
        }
        x = next;
        obj = next_obj;
        history.push(obj);
        iterations += 1;
    }

    let pull = Pull::at(&x, data, w, eps);
    let gradient_norm = pull.direction_norm(w) / n as f64;
    if !converged && pull.coinciding.is_empty() && gradient_norm <= config.tolerance {
        converged = true;
    }
    let report = SolverReport {
        iterations,
        final_objective: obj,
        gradient_norm,
        converged,
        anchored_at_data_point: anchored,
        objective_history: history,
    };
    Ok((Curve::new(grid, x)?, report))
}
