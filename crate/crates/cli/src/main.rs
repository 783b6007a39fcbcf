use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fndepth::depths::{self, BandDepthMethod, DepthContext, SpatialConvention, UnivariateDepth};
use fndepth::experiment::{self, ExperimentConfig, ExperimentKind};
use fndepth::io::{
    self as fio, Cell, DatasetLayout, ExperimentReport, ReportFormat, ReportMetadata,
};
use fndepth::{
    coordinatewise_median, quadrature_weights, spatial_median, Curve, Error, FunctionalDataset,
    GpSpec, Grid, QuadratureScheme, SolverConfig,
};
use serde_json::json;

#[derive(Parser)]
#[command(
    name = "fndepth",
    version,
    about = "Functional data depths and deepest points"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Random seed; 0 when absent (experiments keep their configured seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Csv,
    Json,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Csv => ReportFormat::Csv,
            Format::Json => ReportFormat::Json,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum Layout {
    Rows,
    Cols,
}

impl From<Layout> for DatasetLayout {
    fn from(l: Layout) -> Self {
        match l {
            Layout::Rows => DatasetLayout::RowsAreCurves,
            Layout::Cols => DatasetLayout::ColsAreCurves,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum Process {
    Brownian,
    Fbm,
    Bridge,
}

#[derive(Copy, Clone, ValueEnum)]
enum Quadrature {
    Trapezoid,
    Uniform,
}

impl From<Quadrature> for QuadratureScheme {
    fn from(q: Quadrature) -> Self {
        match q {
            Quadrature::Trapezoid => QuadratureScheme::Trapezoid,
            Quadrature::Uniform => QuadratureScheme::Uniform,
        }
    }
}

#[derive(Copy, Clone, ValueEnum)]
enum Family {
    Bd,
    Hrd,
    Mbd,
    Mhrd,
    Idd,
    Sd,
    SdVz,
}

#[derive(Copy, Clone, ValueEnum)]
enum Univariate {
    Halfspace,
    Simplicial,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate Gaussian-process paths on an equispaced grid over [0, 1].
    Simulate {
        #[arg(long, value_enum, default_value_t = Process::Brownian)]
        process: Process,
        #[arg(long, default_value_t = 0.5)]
        hurst: f64,
        #[arg(long, short = 'n', default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 101)]
        grid_size: usize,
        #[arg(long, default_value_t = 0.0)]
        start_value: f64,
        #[arg(long, value_enum, default_value_t = Layout::Rows)]
        layout: Layout,
        #[command(flatten)]
        common: Common,
    },
    /// Depth of each query curve relative to a dataset.
    Depth {
        #[arg(long)]
        data: PathBuf,
        /// Query curves; the dataset's own curves when absent.
        #[arg(long)]
        query: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Layout::Rows)]
        layout: Layout,
        #[arg(long, value_enum, default_value_t = Family::Mbd)]
        family: Family,
        /// Band order J for bd and mbd.
        #[arg(long, default_value_t = 2)]
        order: usize,
        #[arg(long, value_enum, default_value_t = Univariate::Halfspace)]
        univariate: Univariate,
        #[arg(long, value_enum, default_value_t = Quadrature::Trapezoid)]
        quadrature: Quadrature,
        #[command(flatten)]
        common: Common,
    },
    /// Coordinatewise and spatial medians of a dataset.
    Median {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = Layout::Rows)]
        layout: Layout,
        #[arg(long, value_enum, default_value_t = Quadrature::Trapezoid)]
        quadrature: Quadrature,
        #[arg(long, default_value_t = 1e-8)]
        tolerance: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iterations: usize,
        /// Write the sample curves followed by the two medians.
        #[arg(long)]
        include_data: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run one of the simulation experiments.
    Experiment {
        name: String,
        /// JSON configuration; the experiment's preset when absent.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        replications: Option<usize>,
        /// Record wall-clock time in the report metadata.
        #[arg(long)]
        timing: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Rewrite a dataset in another layout or as JSON.
    Convert {
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum, default_value_t = Layout::Rows)]
        layout: Layout,
        #[arg(long, value_enum, default_value_t = Layout::Rows)]
        to_layout: Layout,
        #[command(flatten)]
        common: Common,
    },
}

fn emit(out: &Option<PathBuf>, bytes: &[u8]) -> fndepth::Result<()> {
    match out {
        Some(path) => {
            let mut f = File::create(path)?;
            f.write_all(bytes)?;
            f.flush()?;
        }
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn json_bytes(value: &serde_json::Value) -> fndepth::Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(io::Error::other(e)))?;
    out.push(b'\n');
    Ok(out)
}

fn dataset_json(data: &FunctionalDataset) -> serde_json::Value {
    json!({
        "grid": data.grid().points(),
        "labels": data.labels(),
        "curves": data.rows().collect::<Vec<_>>(),
    })
}

fn emit_dataset(
    common: &Common,
    data: &FunctionalDataset,
    layout: DatasetLayout,
) -> fndepth::Result<()> {
    let bytes = match common.format {
        Format::Csv => {
            let mut buf = Vec::new();
            fio::write_dataset(&mut buf, data, layout)?;
            buf
        }
        Format::Json => json_bytes(&dataset_json(data))?,
    };
    emit(&common.out, &bytes)
}

fn metadata(kind: &str, config: serde_json::Value, seed: u64) -> ReportMetadata {
    ReportMetadata {
        experiment: kind.to_owned(),
        config,
        seed,
        version: env!("CARGO_PKG_VERSION").to_owned(),
        jitter_used: 0.0,
        wall_clock_seconds: None,
    }
}

fn load(path: &Path, layout: Layout) -> fndepth::Result<FunctionalDataset> {
    fio::load_dataset_csv(path, layout.into())
}

fn run(cli: Cli) -> fndepth::Result<()> {
    match cli.command {
        Command::Simulate {
            process,
            hurst,
            n,
            grid_size,
            start_value,
            layout,
            common,
        } => {
            let mut spec = match process {
                Process::Brownian => GpSpec::brownian(),
                Process::Fbm => GpSpec::fbm(hurst),
                Process::Bridge => GpSpec::bridge(),
            };
            spec.start_value = start_value;
            let grid = Arc::new(Grid::equispaced(0.0, 1.0, grid_size)?);
            let (data, jitter) =
                fndepth::simulate::simulate(&spec, &grid, n, common.seed.unwrap_or(0))?;
            if jitter > 0.0 {
                eprintln!("covariance factorized with diagonal jitter {jitter:e}");
            }
            emit_dataset(&common, &data, layout.into())
        }
        Command::Depth {
            data,
            query,
            layout,
            family,
            order,
            univariate,
            quadrature,
            common,
        } => {
            let sample = load(&data, layout)?;
            let queries = match &query {
                Some(path) => load(path, layout)?,
                None => sample.clone(),
            };
            let weights = quadrature_weights(sample.grid(), quadrature.into());
            let ctx = DepthContext::new(&sample, &weights)?;
            let univariate = match univariate {
                Univariate::Halfspace => UnivariateDepth::Halfspace,
                Univariate::Simplicial => UnivariateDepth::Simplicial,
            };
            let method = BandDepthMethod::Auto {
                max_subsets: 20_000_000,
                samples: 200_000,
                seed: common.seed.unwrap_or(0),
            };
            let config = json!({
                "data": data, "query": query, "family": family_name(family),
                "order": order, "quadrature": quadrature_name(quadrature),
            });
            let mut report = ExperimentReport::new(
                metadata("depth", config, common.seed.unwrap_or(0)),
                &["label", "family", "value", "standard_error"],
            );
            if queries.grid().points() != sample.grid().points() {
                return Err(Error::GridMismatch);
            }
            for (i, label) in queries.labels().iter().enumerate() {
                let x = Curve::new(Arc::clone(sample.grid()), queries.row(i).to_vec())?;
                let r = match family {
                    Family::Bd => depths::band_depth_with(&x, &sample, order, method)?,
                    Family::Hrd => depths::half_region_depth(&x, &sample)?,
                    Family::Mbd => ctx.modified_band_depth(&x, order)?,
                    Family::Mhrd => ctx.modified_half_region_depth(&x)?,
                    Family::Idd => ctx.integrated_data_depth(&x, univariate)?,
                    Family::Sd => {
                        depths::spatial_depth(&x, &sample, &weights, SpatialConvention::Standard)?
                    }
                    Family::SdVz => {
                        depths::spatial_depth(&x, &sample, &weights, SpatialConvention::Vz)?
                    }
                };
                report.push_row(vec![
                    Cell::Text(label.clone()),
                    Cell::Text(family_name(family).to_owned()),
                    r.value.into(),
                    r.standard_error
                        .map(Cell::Float)
                        .unwrap_or(Cell::Text(String::new())),
                ])?;
            }
            emit(
                &common.out,
                &fio::render_report(&report, common.format.into())?,
            )
        }
        Command::Median {
            data,
            layout,
            quadrature,
            tolerance,
            max_iterations,
            include_data,
            common,
        } => {
            let sample = load(&data, layout)?;
            let weights = quadrature_weights(sample.grid(), quadrature.into());
            let config = SolverConfig {
                tolerance,
                max_iterations,
                ..SolverConfig::default()
            };
            let coord = coordinatewise_median(&sample)?;
            let (spatial, report) = spatial_median(&sample, &weights, &config)?;
            if !report.converged {
                eprintln!(
                    "spatial median did not converge: gradient norm {:e} after {} iterations",
                    report.gradient_norm, report.iterations
                );
            }
            match common.format {
                Format::Csv => {
                    let mut curves: Vec<Curve> = Vec::new();
                    let mut labels = Vec::new();
                    if include_data {
                        curves.extend((0..sample.n()).map(|i| sample.curve(i)));
                        labels.extend(sample.labels().iter().cloned());
                    }
                    curves.push(coord);
                    curves.push(spatial);
                    labels.push("coordinatewise_median".to_owned());
                    labels.push("spatial_median".to_owned());
                    let out = FunctionalDataset::from_curves(&curves)?.with_labels(labels)?;
                    emit_dataset(&common, &out, layout.into())
                }
                Format::Json => {
                    let mut value = json!({
                        "grid": sample.grid().points(),
                        "coordinatewise_median": coord.values(),
                        "spatial_median": spatial.values(),
                        "solver": {
                            "iterations": report.iterations,
                            "final_objective": report.final_objective,
                            "gradient_norm": report.gradient_norm,
                            "converged": report.converged,
                            "anchored_at_data_point": report.anchored_at_data_point,
                        },
                    });
                    if include_data {
                        value["data"] = dataset_json(&sample);
                    }
                    emit(&common.out, &json_bytes(&value)?)
                }
            }
        }
        Command::Experiment {
            name,
            config,
            replications,
            timing,
            common,
        } => {
            let kind: ExperimentKind = name.parse()?;
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::from_json(&std::fs::read_to_string(path)?)?,
                None => ExperimentConfig::preset(kind),
            };
            if cfg.experiment != kind {
                return Err(Error::InvalidConfig(format!(
                    "config is for experiment {:?}, not {name:?}",
                    cfg.experiment.name()
                )));
            }
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            if let Some(r) = replications {
                cfg.replications = r;
            }
            let start = Instant::now();
            let mut report = experiment::run(&cfg)?;
            if timing {
                report.metadata.wall_clock_seconds = Some(start.elapsed().as_secs_f64());
            }
            emit(
                &common.out,
                &fio::render_report(&report, common.format.into())?,
            )
        }
        Command::Convert {
            data,
            layout,
            to_layout,
            common,
        } => {
            let sample = load(&data, layout)?;
            emit_dataset(&common, &sample, to_layout.into())
        }
    }
}

fn family_name(f: Family) -> &'static str {
    match f {
        Family::Bd => "bd",
        Family::Hrd => "hrd",
        Family::Mbd => "mbd",
        Family::Mhrd => "mhrd",
        Family::Idd => "idd",
        Family::Sd => "sd",
        Family::SdVz => "sd_vz",
    }
}

fn quadrature_name(q: Quadrature) -> &'static str {
    match q {
        Quadrature::Trapezoid => "trapezoid",
        Quadrature::Uniform => "uniform",
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("FNDEPTH_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("FNDEPTH_THREADS must be a positive integer, got {raw:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
