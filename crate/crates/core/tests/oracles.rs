mod common;

use std::path::PathBuf;
use std::sync::Arc;

use common::*;
use fndepth::depths::{DepthContext, UnivariateDepth};
use fndepth::experiment::{self, Contamination, ExperimentConfig, ExperimentKind};
use fndepth::io::{load_dataset_csv, render_report, DatasetLayout, ReportFormat};
use fndepth::simulate::simulate;
use fndepth::{
    band_depth_with, build_kernel, coordinatewise_median, half_region_depth, quadrature_weights,
    spatial_depth, spatial_median, spatial_objective, BandDepthMethod, Curve, Error, GpSpec, Grid,
    QuadratureScheme, SolverConfig, SpatialConvention,
};
use rand::Rng;

fn lattice_rows(rng: &mut rand_chacha::ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| (0..d).map(|_| rng.random_range(-3..=3) as f64).collect())
        .collect()
}

#[test]
fn band_depth_matches_subset_enumeration_with_ties() {
    let mut rng = rng(101);
    for _ in 0..300 {
        let n = rng.random_range(2..=7);
        let d = rng.random_range(1..=5);
        let grid = random_grid(&mut rng, d);
        let data = dataset(&grid, lattice_rows(&mut rng, n, d));
        let q: Vec<f64> = (0..d).map(|_| rng.random_range(-3..=3) as f64).collect();
        let x = Curve::new(Arc::clone(&grid), q.clone()).unwrap();
        for order in 2..=n.min(4) {
            let got = band_depth_with(&x, &data, order, BandDepthMethod::Exact)
                .unwrap()
                .value;
            assert_eq!(got, bd_subsets(&q, &data, order), "n={n} d={d} J={order}");
        }
    }
}

#[test]
fn marginal_depths_match_direct_counts_with_ties() {
    let mut rng = rng(102);
    for _ in 0..300 {
        let n = rng.random_range(1..=7);
        let d = rng.random_range(1..=5);
        let grid = random_grid(&mut rng, d);
        let data = dataset(&grid, lattice_rows(&mut rng, n, d));
        let w = quadrature_weights(&grid, QuadratureScheme::Trapezoid);
        let ctx = DepthContext::new(&data, &w).unwrap();
        let q: Vec<f64> = (0..d).map(|_| rng.random_range(-3..=3) as f64).collect();
        let x = Curve::new(Arc::clone(&grid), q.clone()).unwrap();
        let ww = w.weights();
        assert_eq!(
            half_region_depth(&x, &data).unwrap().value,
            hrd_brute(&q, &data)
        );
        let mhrd = ctx.modified_half_region_depth(&x).unwrap().value;
        assert!((mhrd - mhrd_brute(&q, &data, ww)).abs() <= 1e-12);
        let idd = ctx
            .integrated_data_depth(&x, UnivariateDepth::Halfspace)
            .unwrap()
            .value;
        assert!((idd - idd_halfspace_brute(&q, &data, ww)).abs() <= 1e-12);
        for order in 2..=n.min(3) {
            let mbd = ctx.modified_band_depth(&x, order).unwrap().value;
            assert!((mbd - mbd_tuples(&q, &data, ww, order)).abs() <= 1e-12);
        }
    }
}

#[test]
fn monte_carlo_band_depth_tracks_exact_value() {
    let grid = Arc::new(Grid::equispaced(0.0, 1.0, 21).unwrap());
    let (data, _) = simulate(&GpSpec::brownian(), &grid, 30, 5).unwrap();
    let x = Curve::constant(Arc::clone(&grid), 0.0).unwrap();
    let exact = band_depth_with(&x, &data, 3, BandDepthMethod::Exact)
        .unwrap()
        .value;
    let mc = band_depth_with(
        &x,
        &data,
        3,
        BandDepthMethod::MonteCarlo {
            samples: 50_000,
            seed: 3,
        },
    )
    .unwrap();
    let se = mc.standard_error.unwrap();
    assert!(se > 0.0);
    assert!(
        (mc.value - exact).abs() <= 5.0 * se + 1e-12,
        "mc {} exact {exact} se {se}",
        mc.value
    );
}

type Covariance = Box<dyn Fn(f64, f64) -> f64>;

#[test]
fn kernels_match_direct_evaluation() {
    let mut rng = rng(103);
    for _ in 0..20 {
        let d = rng.random_range(2..=60);
        let grid = random_grid(&mut rng, d);
        let h: f64 = rng.random_range(0.05..0.95);
        let cases: [(GpSpec, Covariance); 3] = [
            (GpSpec::brownian(), Box::new(|t: f64, s: f64| t.min(s))),
            (
                GpSpec::bridge(),
                Box::new(|t: f64, s: f64| t.min(s) - t * s),
            ),
            (
                GpSpec::fbm(h),
                Box::new(move |t: f64, s: f64| {
                    0.5 * (t.powf(2.0 * h) + s.powf(2.0 * h) - (t - s).abs().powf(2.0 * h))
                }),
            ),
        ];
        for (spec, cov) in cases {
            let k = build_kernel(&spec, &grid).unwrap();
            let direct = kernel_double_loop(grid.points(), cov);
            for (i, row) in direct.iter().enumerate() {
                for (j, &expected) in row.iter().enumerate() {
                    assert!((k.entry(i, j) - expected).abs() <= 1e-15);
                }
            }
        }
    }
}

fn column_moments(values: &[f64]) -> (f64, f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let m2 = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let m3 = values.iter().map(|v| (v - mean).powi(3)).sum::<f64>() / n;
    (mean, m2 * n / (n - 1.0), m3 / m2.powf(1.5))
}

#[test]
fn brownian_endpoint_variance_is_one() {
    let grid = Arc::new(Grid::equispaced(0.0, 1.0, 101).unwrap());
    let (data, _) = simulate(&GpSpec::brownian(), &grid, 2000, 2024).unwrap();
    let (_, var, _) = column_moments(&data.column(100));
    assert!((0.9..=1.1).contains(&var), "Var(X_1) = {var}");
}

#[test]
fn fbm_increment_variance_and_symmetry() {
    let grid = Arc::new(Grid::equispaced(0.0, 1.0, 51).unwrap());
    let t = grid.points().to_vec();
    for (h, seed) in [(0.3, 11), (0.7, 12)] {
        let (data, _) = simulate(&GpSpec::fbm(h), &grid, 2000, seed).unwrap();
        for (i, j) in [(10, 20), (5, 45), (30, 50)] {
            let inc: Vec<f64> = data.rows().map(|r| r[j] - r[i]).collect();
            let (_, var, _) = column_moments(&inc);
            let expected = (t[j] - t[i]).abs().powf(2.0 * h);
            assert!(
                (var / expected - 1.0).abs() <= 0.15,
                "H={h} ({i},{j}): {var} vs {expected}"
            );
        }
        let (_, _, skew) = column_moments(&data.column(50));
        assert!(skew.abs() <= 0.15, "H={h}: skewness {skew}");
    }
    let (bm, _) = simulate(&GpSpec::brownian(), &grid, 2000, 13).unwrap();
    let (_, _, skew) = column_moments(&bm.column(50));
    assert!(skew.abs() <= 0.15);
}

#[test]
fn spatial_median_objective_matches_grid_search() {
    let mut rng = rng(104);
    let config = SolverConfig::default();
    for case in 0..60 {
        let d = 1 + case % 3;
        let n = 2 + case % 4;
        let grid = random_grid(&mut rng, d);
        let rows = gaussian_rows(&mut rng, n, d);
        let data = dataset(&grid, rows.clone());
        let w = quadrature_weights(&grid, QuadratureScheme::Trapezoid);
        let (m, rep) = spatial_median(&data, &w, &config).unwrap();
        let oracle = spatial_median_grid_search(&rows, w.weights(), 100);
        let best = mean_distance(&oracle, &rows, w.weights());
        assert!(
            rep.final_objective <= best + 1e-4,
            "case {case}: {} vs {best}",
            rep.final_objective
        );
        assert!((spatial_objective(&m, &data, &w).unwrap() - rep.final_objective).abs() <= 1e-12);
    }
}

#[test]
fn spatial_median_on_even_split_returns_the_midpoint() {
    let grid = Arc::new(Grid::equispaced(0.0, 1.0, 4).unwrap());
    let data = dataset(
        &grid,
        vec![vec![-1.0; 4], vec![-1.0; 4], vec![1.0; 4], vec![1.0; 4]],
    );
    let w = quadrature_weights(&grid, QuadratureScheme::Trapezoid);
    let (m, rep) = spatial_median(&data, &w, &SolverConfig::default()).unwrap();
    assert!((rep.final_objective - 1.0).abs() <= 1e-12);
    assert!(m.values().iter().all(|v| v.abs() <= 1e-12));
}

#[test]
fn interior_spatial_median_has_depth_one() {
    let grid = Arc::new(Grid::equispaced(0.0, 1.0, 31).unwrap());
    let (data, _) = simulate(&GpSpec::fbm(0.7), &grid, 40, 77).unwrap();
    let w = quadrature_weights(&grid, QuadratureScheme::Trapezoid);
    let config = SolverConfig::default();
    let (m, rep) = spatial_median(&data, &w, &config).unwrap();
    assert!(rep.converged && rep.anchored_at_data_point.is_none());
    let sd = spatial_depth(&m, &data, &w, SpatialConvention::Standard)
        .unwrap()
        .value;
    assert!(sd >= 1.0 - config.tolerance);
}

#[test]
fn degeneracy_on_single_point_grid_is_univariate_depth() {
    let config = ExperimentConfig {
        grid_sizes: vec![1],
        replications: 40,
        ..ExperimentConfig::preset(ExperimentKind::Degeneracy)
    };
    let report = experiment::run_degeneracy(&config).unwrap();
    let hrd = report.column_f64("mean_hrd").unwrap()[0];
    // With K ~ Binomial(n, 1/2) curves below zero, E[HRD] = E[min(K, n - K)] / n.
    let n = config.sample_sizes[0];
    let mut pmf = vec![0.0f64; n + 1];
    pmf[0] = 0.5f64.powi(n as i32);
    for k in 1..=n {
        pmf[k] = pmf[k - 1] * (n + 1 - k) as f64 / k as f64;
    }
    let expected: f64 = pmf
        .iter()
        .enumerate()
        .map(|(k, p)| p * k.min(n - k) as f64)
        .sum::<f64>()
        / n as f64;
    assert!(
        (hrd - expected).abs() <= 0.025,
        "mean HRD at d = 1: {hrd}, expected {expected}"
    );
}

#[test]
fn degeneracy_with_single_curve_reports_invalid_order() {
    let config = ExperimentConfig {
        sample_sizes: vec![1],
        ..ExperimentConfig::preset(ExperimentKind::Degeneracy)
    };
    assert!(matches!(
        experiment::run(&config),
        Err(Error::InvalidOrder { order: 3, n: 1 })
    ));
}

#[test]
fn maximizer_flags_hold_for_single_curve_and_preset() {
    let single = ExperimentConfig {
        sample_sizes: vec![1],
        replications: 3,
        ..ExperimentConfig::preset(ExperimentKind::Maximizer)
    };
    let report = experiment::run_maximizer_check(&single).unwrap();
    for flag in ["mbd_ok", "mhrd_ok", "idd_ok"] {
        assert!(report.column_bool(flag).unwrap().iter().all(|&b| b));
    }
    let preset = ExperimentConfig {
        replications: 10,
        ..ExperimentConfig::preset(ExperimentKind::Maximizer)
    };
    let report = experiment::run_maximizer_check(&preset).unwrap();
    assert!(report
        .column_bool("mhrd_near_bound")
        .unwrap()
        .iter()
        .all(|&b| b));
}

#[test]
fn breakdown_without_contamination_does_not_move() {
    let config = ExperimentConfig {
        contamination: Contamination {
            fraction: 0.0,
            ..Contamination::default()
        },
        ..ExperimentConfig::preset(ExperimentKind::Breakdown)
    };
    let report = experiment::run_breakdown(&config).unwrap();
    assert!(report
        .column_f64("spatial_displacement")
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));
    assert!(report
        .column_f64("coordinatewise_displacement")
        .unwrap()
        .iter()
        .all(|&v| v == 0.0));
}

#[test]
fn consistency_errors_of_both_medians_are_comparable_for_brownian_motion() {
    let config = ExperimentConfig {
        process: GpSpec::brownian(),
        ..ExperimentConfig::preset(ExperimentKind::Consistency)
    };
    let report = experiment::run_consistency(&config).unwrap();
    let spatial = report.column_f64("median_l2_spatial").unwrap();
    let coord = report.column_f64("median_l2_coordinatewise").unwrap();
    for (s, c) in spatial.iter().zip(&coord) {
        assert!(
            s / c <= 3.0 && c / s <= 3.0,
            "spatial {s} vs coordinatewise {c}"
        );
    }
    let short = ExperimentConfig {
        sample_sizes: vec![20],
        grid_sizes: vec![11],
        ..config
    };
    assert_eq!(experiment::run_consistency(&short).unwrap().rows.len(), 1);
}

#[test]
fn experiment_rows_echo_their_parameters() {
    let config = ExperimentConfig::preset(ExperimentKind::Degeneracy);
    let report = experiment::run(&config).unwrap();
    let sizes: Vec<usize> = report
        .column_f64("grid_size")
        .unwrap()
        .iter()
        .map(|&v| v as usize)
        .collect();
    assert_eq!(sizes, config.grid_sizes);
    assert!(report
        .column_f64("sample_size")
        .unwrap()
        .iter()
        .all(|&v| v == 50.0));
    assert!(report
        .column_f64("band_order")
        .unwrap()
        .iter()
        .all(|&v| v == 3.0));
    assert_eq!(report.metadata.seed, config.seed);
    let echoed: ExperimentConfig = serde_json::from_value(report.metadata.config.clone()).unwrap();
    assert_eq!(echoed, config);
}

#[test]
fn reports_are_reproducible_across_runs() {
    let config = ExperimentConfig {
        replications: 4,
        ..ExperimentConfig::preset(ExperimentKind::Consistency)
    };
    for format in [ReportFormat::Csv, ReportFormat::Json] {
        let a = render_report(&experiment::run(&config).unwrap(), format).unwrap();
        let b = render_report(&experiment::run(&config).unwrap(), format).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn growth_fixture_medians_and_depths() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/growth_acceleration.csv");
    let data = load_dataset_csv(&path, DatasetLayout::RowsAreCurves).unwrap();
    assert_eq!((data.n(), data.d()), (20, 101));
    assert_eq!((data.grid().lower(), data.grid().upper()), (1.0, 18.0));
    let w = quadrature_weights(data.grid(), QuadratureScheme::Trapezoid);
    let ctx = DepthContext::new(&data, &w).unwrap();
    let coord = coordinatewise_median(&data).unwrap();
    let (spatial, rep) = spatial_median(&data, &w, &SolverConfig::default()).unwrap();
    assert!(rep.converged);
    let sample_max = (0..data.n())
        .map(|i| ctx.modified_band_depth(&data.curve(i), 2).unwrap().value)
        .fold(f64::MIN, f64::max);
    assert!(ctx.modified_band_depth(&coord, 2).unwrap().value >= sample_max - 1.0 / 40.0);
    let sd = spatial_depth(&spatial, &data, &w, SpatialConvention::Standard)
        .unwrap()
        .value;
    assert!(sd >= 1.0 - 1e-6);
}
