//! Simulation experiments: degeneracy of band and half-region depth on
//! refining grids, maximality of the coordinatewise median, breakdown under
//! contamination, and consistency of both medians as `n` grows.
//!
//! Every replication draws from its own seed derived from
//! `(config seed, parameter index, replication)`, and replications run in
//! parallel with results collected in schedule order. Two runs with the same
//! configuration give identical reports.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::depths::{band_depth, half_region_depth, DepthContext, UnivariateDepth};
use crate::error::{Error, Result};
use crate::grid::{
    quadrature_weights, weighted_distance, Curve, FunctionalDataset, Grid, QuadratureScheme,
};
use crate::io::{Cell, ExperimentReport, ReportMetadata};
use crate::medians::{coordinatewise_median, spatial_median, SolverConfig};
use crate::simulate::{build_kernel, sample_paths, GpSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Degeneracy,
    Maximizer,
    Breakdown,
    Consistency,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Degeneracy => "degeneracy",
            ExperimentKind::Maximizer => "maximizer",
            ExperimentKind::Breakdown => "breakdown",
            ExperimentKind::Consistency => "consistency",
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degeneracy" => Ok(ExperimentKind::Degeneracy),
            "maximizer" => Ok(ExperimentKind::Maximizer),
            "breakdown" => Ok(ExperimentKind::Breakdown),
            "consistency" => Ok(ExperimentKind::Consistency),
            other => Err(Error::InvalidConfig(format!(
                "unknown experiment {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Contamination {
    /// Share of curves replaced; `⌊fraction · n⌋` curves are shifted.
    pub fraction: f64,
    /// Constant shifts `M` added to the contaminated curves.
    pub magnitudes: Vec<f64>,
}

impl Default for Contamination {
    fn default() -> Self {
        Self {
            fraction: 0.0,
            magnitudes: vec![1e2, 1e4, 1e6],
        }
    }
}

fn default_band_order() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub process: GpSpec,
    /// Sample sizes `n`; consistency pairs them with `grid_sizes`.
    pub sample_sizes: Vec<usize>,
    /// Grid sizes `d` on `[0, 1]`.
    pub grid_sizes: Vec<usize>,
    pub replications: usize,
    #[serde(default)]
    pub contamination: Contamination,
    pub seed: u64,
    #[serde(default = "default_band_order")]
    pub band_order: usize,
    #[serde(default)]
    pub quadrature: QuadratureScheme,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl ExperimentConfig {
    /// Default schedule for each experiment.
    pub fn preset(kind: ExperimentKind) -> Self {
        let base = ExperimentConfig {
            experiment: kind,
            process: GpSpec::brownian(),
            sample_sizes: vec![50],
            grid_sizes: vec![101],
            replications: 20,
            contamination: Contamination::default(),
            seed: 20_140_101,
            band_order: 3,
            quadrature: QuadratureScheme::Trapezoid,
            solver: SolverConfig::default(),
        };
        match kind {
            ExperimentKind::Degeneracy => ExperimentConfig {
                grid_sizes: vec![5, 9, 17, 33, 65, 129],
                ..base
            },
            ExperimentKind::Maximizer => ExperimentConfig {
                sample_sizes: vec![25],
                grid_sizes: vec![51],
                replications: 50,
                ..base
            },
            ExperimentKind::Breakdown => ExperimentConfig {
                sample_sizes: vec![11],
                replications: 1,
                contamination: Contamination {
                    fraction: 5.0 / 11.0,
                    magnitudes: vec![1e2, 1e4, 1e6],
                },
                ..base
            },
            ExperimentKind::Consistency => ExperimentConfig {
                process: GpSpec::fbm(0.7),
                sample_sizes: vec![10, 40, 160],
                grid_sizes: vec![26, 51, 101],
                ..base
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::InvalidConfig(m.to_owned()));
        self.process.validate()?;
        self.solver.validate()?;
        if self.sample_sizes.is_empty() || self.grid_sizes.is_empty() {
            return fail("sample_sizes and grid_sizes must be nonempty");
        }
        if self.sample_sizes.contains(&0) || self.grid_sizes.contains(&0) {
            return fail("sample and grid sizes must be positive");
        }
        if self.replications == 0 {
            return fail("replications must be positive");
        }
        let c = &self.contamination;
        if !(0.0..1.0).contains(&c.fraction) {
            return fail("contamination fraction must lie in [0, 1)");
        }
        if c.magnitudes.is_empty() || c.magnitudes.iter().any(|m| !m.is_finite()) {
            return fail("contamination magnitudes must be nonempty and finite");
        }
        if self.experiment == ExperimentKind::Consistency
            && self.sample_sizes.len() != self.grid_sizes.len()
        {
            return fail("consistency pairs sample_sizes with grid_sizes; lengths must match");
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line() as u64,
            message: e.to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn metadata(&self, jitter_used: f64) -> ReportMetadata {
        ReportMetadata {
            experiment: self.experiment.name().to_owned(),
            config: serde_json::to_value(self).unwrap_or(serde_json::Value::Null),
            seed: self.seed,
            version: env!("CARGO_PKG_VERSION").to_owned(),
            jitter_used,
            wall_clock_seconds: None,
        }
    }

    fn unit_grid(&self, d: usize) -> Result<Arc<Grid>> {
        Ok(Arc::new(Grid::equispaced(0.0, 1.0, d)?))
    }

    /// The process's center of symmetry, the constant start value.
    fn center(&self, grid: &Arc<Grid>) -> Result<Curve> {
        Curve::constant(Arc::clone(grid), self.process.start_value)
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replication `rep` at schedule position `point`.
pub fn replication_seed(seed: u64, point: usize, rep: usize) -> u64 {
    splitmix64(seed ^ splitmix64(((point as u64) << 32) ^ rep as u64))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

fn std_dev(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
}

pub fn run(config: &ExperimentConfig) -> Result<ExperimentReport> {
    match config.experiment {
        ExperimentKind::Degeneracy => run_degeneracy(config),
        ExperimentKind::Maximizer => run_maximizer_check(config),
        ExperimentKind::Breakdown => run_breakdown(config),
        ExperimentKind::Consistency => run_consistency(config),
    }
}

fn simulate_replications(
    config: &ExperimentConfig,
    grid: &Arc<Grid>,
    n: usize,
    point: usize,
) -> Result<(Vec<FunctionalDataset>, f64)> {
    let kernel = build_kernel(&config.process, grid)?;
    let data = (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            sample_paths(
                &kernel,
                &config.process,
                n,
                replication_seed(config.seed, point, rep),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((data, kernel.jitter()))
}

/// Band depth (order `band_order`) and half-region depth of the center
/// curve, averaged over replications, for each grid size.
pub fn run_degeneracy(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let n = config.sample_sizes[0];
    if config.band_order < 2 || config.band_order > n {
        return Err(Error::InvalidOrder {
            order: config.band_order,
            n,
        });
    }
    let mut rows = Vec::new();
    let mut jitter_used = 0.0f64;
    for (point, &d) in config.grid_sizes.iter().enumerate() {
        let grid = config.unit_grid(d)?;
        let center = config.center(&grid)?;
        let (datasets, jitter) = simulate_replications(config, &grid, n, point)?;
        jitter_used = jitter_used.max(jitter);
        let depths = datasets
            .par_iter()
            .map(|data| {
                let bd = band_depth(&center, data, config.band_order)?.value;
                let hrd = half_region_depth(&center, data)?.value;
                Ok((bd, hrd))
            })
            .collect::<Result<Vec<_>>>()?;
        let (bd, hrd): (Vec<f64>, Vec<f64>) = depths.into_iter().unzip();
        rows.push(vec![
            d.into(),
            n.into(),
            config.replications.into(),
            config.band_order.into(),
            mean(&bd).into(),
            mean(&hrd).into(),
            std_dev(&bd).into(),
            std_dev(&hrd).into(),
        ]);
    }
    let mut report = ExperimentReport::new(
        config.metadata(jitter_used),
        &[
            "grid_size",
            "sample_size",
            "replications",
            "band_order",
            "mean_bd",
            "mean_hrd",
            "sd_bd",
            "sd_hrd",
        ],
    );
    for row in rows {
        report.push_row(row)?;
    }
    Ok(report)
}

/// Per replication: modified band, modified half-region and integrated
/// (halfspace) depth of the coordinatewise median against the largest
/// depth among the sample curves.
pub fn run_maximizer_check(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut report = ExperimentReport::new(
        config.metadata(0.0),
        &[
            "sample_size",
            "grid_size",
            "replication",
            "seed",
            "mbd_median",
            "mbd_sample_max",
            "mbd_ok",
            "mhrd_median",
            "mhrd_sample_max",
            "mhrd_ok",
            "idd_median",
            "idd_sample_max",
            "idd_ok",
            "mhrd_upper_bound",
            "mhrd_near_bound",
        ],
    );
    let order = config.band_order.max(2);
    let mut jitter_used = 0.0f64;
    let mut point = 0;
    for &n in &config.sample_sizes {
        for &d in &config.grid_sizes {
            let grid = config.unit_grid(d)?;
            let weights = quadrature_weights(&grid, config.quadrature);
            let (datasets, jitter) = simulate_replications(config, &grid, n, point)?;
            jitter_used = jitter_used.max(jitter);
            let rows = datasets
                .par_iter()
                .enumerate()
                .map(|(rep, data)| {
                    let ctx = DepthContext::new(data, &weights)?;
                    let med = coordinatewise_median(data)?;
                    let slack = 1.0 / (2.0 * n as f64);
                    let (mut mbd_max, mut mhrd_max, mut idd_max) = (f64::MIN, f64::MIN, f64::MIN);
                    for i in 0..data.n() {
                        let c = data.curve(i);
                        mbd_max = mbd_max.max(ctx.modified_band_depth(&c, order)?.value);
                        mhrd_max = mhrd_max.max(ctx.modified_half_region_depth(&c)?.value);
                        idd_max = idd_max.max(
                            ctx.integrated_data_depth(&c, UnivariateDepth::Halfspace)?
                                .value,
                        );
                    }
                    let mbd = ctx.modified_band_depth(&med, order)?.value;
                    let mhrd = ctx.modified_half_region_depth(&med)?.value;
                    let idd = ctx
                        .integrated_data_depth(&med, UnivariateDepth::Halfspace)?
                        .value;
                    // Tie-free supremum of min(∫F̂, 1 − ∫F̂(·−)) over all curves.
                    let bound = 0.5 * (1.0 + 1.0 / n as f64);
                    Ok(vec![
                        Cell::from(n),
                        d.into(),
                        rep.into(),
                        replication_seed(config.seed, point, rep).into(),
                        mbd.into(),
                        mbd_max.into(),
                        (mbd >= mbd_max - slack).into(),
                        mhrd.into(),
                        mhrd_max.into(),
                        (mhrd >= mhrd_max - slack).into(),
                        idd.into(),
                        idd_max.into(),
                        (idd >= idd_max - slack).into(),
                        bound.into(),
                        (mhrd >= bound - slack).into(),
                    ])
                })
                .collect::<Result<Vec<_>>>()?;
            for row in rows {
                report.push_row(row)?;
            }
            point += 1;
        }
    }
    report.metadata.jitter_used = jitter_used;
    Ok(report)
}

/// Number of contaminated curves for `fraction` of `n`. The small offset
/// keeps fractions such as `5/11` from rounding below the intended count.
pub fn contaminated_count(fraction: f64, n: usize) -> usize {
    ((fraction * n as f64) + 1e-9).floor() as usize
}

/// Shifts the first `count` curves by the constant `magnitude`.
pub fn contaminate(
    data: &FunctionalDataset,
    count: usize,
    magnitude: f64,
) -> Result<FunctionalDataset> {
    let d = data.d();
    let limit = count * d;
    let mut idx = 0usize;
    data.map_values(|_, v| {
        let out = if idx < limit { v + magnitude } else { v };
        idx += 1;
        out
    })
}

/// Displacement of both medians from their clean-sample values as the
/// contaminated curves are pushed out by each magnitude.
pub fn run_breakdown(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let n = config.sample_sizes[0];
    let grid = config.unit_grid(config.grid_sizes[0])?;
    let weights = quadrature_weights(&grid, config.quadrature);
    let (clean, jitter) = simulate_replications(
        &ExperimentConfig {
            replications: 1,
            ..config.clone()
        },
        &grid,
        n,
        0,
    )?;
    let clean = &clean[0];
    let count = contaminated_count(config.contamination.fraction, n);
    let (spatial0, _) = spatial_median(clean, &weights, &config.solver)?;
    let coord0 = coordinatewise_median(clean)?;
    let w = weights.weights();

    let mut report = ExperimentReport::new(
        config.metadata(jitter),
        &[
            "magnitude",
            "sample_size",
            "contaminated",
            "spatial_displacement",
            "coordinatewise_displacement",
            "spatial_converged",
            "spatial_iterations",
        ],
    );
    let rows = config
        .contamination
        .magnitudes
        .par_iter()
        .map(|&m| {
            let dirty = contaminate(clean, count, m)?;
            let (spatial, rep) = spatial_median(&dirty, &weights, &config.solver)?;
            let coord = coordinatewise_median(&dirty)?;
            Ok(vec![
                Cell::from(m),
                n.into(),
                count.into(),
                weighted_distance(spatial.values(), spatial0.values(), w).into(),
                weighted_distance(coord.values(), coord0.values(), w).into(),
                rep.converged.into(),
                rep.iterations.into(),
            ])
        })
        .collect::<Result<Vec<_>>>()?;
    for row in rows {
        report.push_row(row)?;
    }
    Ok(report)
}

/// L2(Λ) error of the spatial median and sup error of the coordinatewise
/// median against the center of symmetry, aggregated by median (and mean)
/// over replications, for each paired `(n, d)`.
pub fn run_consistency(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let mut report = ExperimentReport::new(
        config.metadata(0.0),
        &[
            "sample_size",
            "grid_size",
            "replications",
            "median_l2_spatial",
            "mean_l2_spatial",
            "median_sup_coordinatewise",
            "mean_sup_coordinatewise",
            "median_l2_coordinatewise",
            "unconverged",
        ],
    );
    let mut jitter_used = 0.0f64;
    for (point, (&n, &d)) in config
        .sample_sizes
        .iter()
        .zip(&config.grid_sizes)
        .enumerate()
    {
        let grid = config.unit_grid(d)?;
        let weights = quadrature_weights(&grid, config.quadrature);
        let center = config.center(&grid)?;
        let (datasets, jitter) = simulate_replications(config, &grid, n, point)?;
        jitter_used = jitter_used.max(jitter);
        let errors = datasets
            .par_iter()
            .map(|data| {
                let (spatial, rep) = spatial_median(data, &weights, &config.solver)?;
                let coord = coordinatewise_median(data)?;
                let w = weights.weights();
                let l2_spatial = weighted_distance(spatial.values(), center.values(), w);
                let l2_coord = weighted_distance(coord.values(), center.values(), w);
                let sup_coord = coord
                    .values()
                    .iter()
                    .zip(center.values())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
                Ok((l2_spatial, sup_coord, l2_coord, !rep.converged))
            })
            .collect::<Result<Vec<_>>>()?;
        let l2s: Vec<f64> = errors.iter().map(|e| e.0).collect();
        let sups: Vec<f64> = errors.iter().map(|e| e.1).collect();
        let l2c: Vec<f64> = errors.iter().map(|e| e.2).collect();
        let unconverged = errors.iter().filter(|e| e.3).count();
        report.push_row(vec![
            n.into(),
            d.into(),
            config.replications.into(),
            median(&l2s).into(),
            mean(&l2s).into(),
            median(&sups).into(),
            mean(&sups).into(),
            median(&l2c).into(),
            unconverged.into(),
        ])?;
    }
    report.metadata.jitter_used = jitter_used;
    Ok(report)
}
