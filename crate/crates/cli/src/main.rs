use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use rcla::experiment::{run_comparison, Dataset, ExperimentSpec, Variant};
use rcla::features::{diagram_features, FeatureName};
use rcla::io::{
    center_in_unit_cube, read_diagrams_file, read_obj_vertices, read_points_file, subsample,
    write_curve_csv, write_diagram_csv, write_json_file, write_points_file,
};
use rcla::poisson::{stability_certificate, ShapeOccupancy};
use rcla::synth::{make_noisy_dataset, AxisBox, RngSeed};
use rcla::{
    auto_select, bottleneck_distance, cla_reduce, default_max_scale, distance_matrix, rcla_reduce,
    vr_persistence_scaled, AutoSelectConfig, Error, ReductionParams, RepresentativeMode, Result,
    Scale,
};

#[derive(Parser)]
#[command(name = "rcla", version, about = "Grid reduction, denoising and persistence tools")]
struct Cli {
    /// Master seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (defaults to the number of CPUs).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Directory that relative output paths are resolved against.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a circle or two-circle shape plus uniform background noise.
    Synth(SynthArgs),
    /// Reduce a point cloud with CLA or RCLA.
    Reduce(ReduceArgs),
    /// Choose δ and k automatically.
    Autoselect(AutoselectArgs),
    /// Vietoris–Rips persistence diagrams.
    Ph(PhArgs),
    /// Bottleneck distance between two diagrams.
    Bottleneck(BottleneckArgs),
    /// Descriptive-statistics feature vector of a diagram file.
    Features(FeaturesArgs),
    /// Stability certificate under homogeneous Poisson noise.
    Certificate(CertificateArgs),
    /// Seeded CLA/RCLA comparison over noise ratios and trials.
    Experiment(ExperimentArgs),
    /// Extract vertices from an OBJ mesh.
    ObjIngest(ObjArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Circle,
    TwoCircles,
}

impl Kind {
    fn dataset(self) -> Dataset {
        match self {
            Kind::Circle => Dataset::circle(),
            Kind::TwoCircles => Dataset::two_circles(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Center,
    Sample,
}

impl From<ModeArg> for RepresentativeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Center => RepresentativeMode::Center,
            ModeArg::Sample => RepresentativeMode::Sample,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ScaleArg {
    Eps,
    Dist,
}

impl From<ScaleArg> for Scale {
    fn from(s: ScaleArg) -> Self {
        match s {
            ScaleArg::Eps => Scale::Eps,
            ScaleArg::Dist => Scale::Dist,
        }
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    /// Shape points.
    #[arg(long, default_value_t = 1000)]
    n: usize,
    /// Noise ratio: round(r·n) uniform points in the unit square.
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    #[arg(long)]
    out: PathBuf,
    /// One line per point: 0 for shape, 1 for noise.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Args)]
struct ReduceArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    delta: f64,
    /// Occupancy threshold; 1 gives plain CLA.
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, value_enum, default_value = "center")]
    mode: ModeArg,
    #[arg(long)]
    out: PathBuf,
    /// Summary JSON path (default: the output path with `.json` appended).
    #[arg(long)]
    sidecar: Option<PathBuf>,
}

#[derive(Args)]
struct AutoselectArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// JSON file with any subset of the selection settings.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha_fp: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    cr: Option<f64>,
    #[arg(long)]
    n_min: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PhArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value_t = 1)]
    max_dim: usize,
    /// Filtration cap in the chosen unit (default: half the bounding-box
    /// diameter in ε units).
    #[arg(long)]
    max_scale: Option<f64>,
    #[arg(long, value_enum, default_value = "eps")]
    scale: ScaleArg,
    #[arg(long)]
    out: PathBuf,
    /// Also write `degree,birth,death` rows for plotting.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct BottleneckArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long, default_value_t = 1)]
    degree: usize,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Replacement for infinite deaths.
    #[arg(long)]
    cap: f64,
    #[arg(long)]
    out: PathBuf,
    /// Statistic to leave out, e.g. `life_q50` or `total`; repeatable.
    #[arg(long = "drop-stat")]
    drop_stat: Vec<String>,
}

#[derive(Args)]
struct CertificateArgs {
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    delta: f64,
    #[arg(long)]
    k: u64,
    #[arg(long)]
    dim: usize,
    /// Shape point count of every grid cell, one per line (zeros included).
    #[arg(long)]
    shape_counts: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, value_enum, default_value = "circle")]
    dataset: Kind,
    #[arg(long, default_value_t = 1000)]
    n_shape: usize,
    #[arg(long, value_delimiter = ',', default_values_t = [0.10, 0.15, 0.20, 0.25, 0.30])]
    ratios: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    /// `cla-auto`, `rcla-auto`, `cla:DELTA` or `rcla:DELTA:K`.
    #[arg(long, value_delimiter = ',', default_values_t = ["cla-auto".to_string(), "rcla-auto".to_string()])]
    variants: Vec<String>,
    #[arg(long, value_enum, default_value = "dist")]
    scale: ScaleArg,
    #[arg(long, value_enum, default_value = "center")]
    mode: ModeArg,
    #[arg(long)]
    out: PathBuf,
    /// Also write `ratio,variant,mean,sd` rows for plotting.
    #[arg(long)]
    curve: Option<PathBuf>,
}

#[derive(Args)]
struct ObjArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// Keep this many vertices, drawn without replacement.
    #[arg(long)]
    sample: Option<usize>,
    /// Translate so the bounding box is centered in the unit cube.
    #[arg(long)]
    center_unit: bool,
    #[arg(long)]
    out: PathBuf,
}

struct Ctx {
    seed: u64,
    out_dir: Option<PathBuf>,
}

impl Ctx {
    fn out(&self, p: &Path) -> Result<PathBuf> {
        let path = match &self.out_dir {
            Some(dir) if p.is_relative() => dir.join(p),
            _ => p.to_path_buf(),
        };
        if let Some(parent) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        Ok(path)
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let mut out = io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn synth(ctx: &Ctx, a: SynthArgs) -> Result<()> {
    let shape = a.kind.dataset().sample(a.n, RngSeed::new(ctx.seed, 0))?;
    let mut rng = RngSeed::new(ctx.seed, 1).rng();
    let data = make_noisy_dataset(&shape, a.r, &AxisBox::unit(2), &mut rng)?;
    let out = ctx.out(&a.out)?;
    write_points_file(&out, &data.cloud)?;
    if let Some(labels) = &a.labels {
        let text: String = data
            .is_noise
            .iter()
            .map(|&x| if x { "1\n" } else { "0\n" })
            .collect();
        fs::write(ctx.out(labels)?, text)?;
    }
    print_json(&json!({
        "n_shape": shape.len(),
        "n_noise": data.noise_count(),
        "out": out,
    }))
}

fn reduce(ctx: &Ctx, a: ReduceArgs) -> Result<()> {
    let cloud = read_points_file(&a.input)?;
    let mode = a.mode.into();
    let reduced = if a.k == 1 {
        cla_reduce(&cloud, a.delta, mode)?
    } else {
        rcla_reduce(&cloud, &ReductionParams::new(a.delta, a.k, mode)?)?
    };
    let out = ctx.out(&a.out)?;
    write_points_file(&out, &reduced.points)?;
    let summary = json!({
        "delta": a.delta,
        "k": a.k,
        "mode": mode,
        "n_in": cloud.len(),
        "n_out": reduced.points.len(),
        "kept_cells": reduced.kept_cells,
        "dropped_count": reduced.dropped_count,
        "grid": reduced.grid,
    });
    let sidecar = match &a.sidecar {
        Some(p) => ctx.out(p)?,
        None => {
            let mut s = out.into_os_string();
            s.push(".json");
            PathBuf::from(s)
        }
    };
    write_json_file(&sidecar, &summary)?;
    print_json(&json!({
        "n_out": reduced.points.len(),
        "dropped_count": reduced.dropped_count,
        "sidecar": sidecar,
    }))
}

fn autoselect(ctx: &Ctx, a: AutoselectArgs) -> Result<()> {
    let cloud = read_points_file(&a.input)?;
    let mut config: AutoSelectConfig = match &a.config {
        Some(p) => serde_json::from_str(&fs::read_to_string(p)?)?,
        None => AutoSelectConfig::default(),
    };
    if let Some(v) = a.alpha_fp {
        config.alpha_fp = v;
    }
    if let Some(v) = a.eta {
        config.eta = v;
    }
    if let Some(v) = a.cr {
        config.c_r = v;
    }
    if let Some(v) = a.n_min {
        config.n_min = v;
    }
    let result = auto_select(&cloud, &config)?;
    match &a.out {
        Some(p) => write_json_file(&ctx.out(p)?, &result),
        None => print_json(&result),
    }
}

fn ph(ctx: &Ctx, a: PhArgs) -> Result<()> {
    let cloud = read_points_file(&a.input)?;
    let scale: Scale = a.scale.into();
    let max_scale = a.max_scale.unwrap_or_else(|| {
        let eps = default_max_scale(&cloud);
        match scale {
            Scale::Eps => eps,
            Scale::Dist => 2.0 * eps,
        }
    });
    // A single point or coincident points have a zero-diameter box.
    let max_scale = if max_scale > 0.0 { max_scale } else { f64::INFINITY };
    let dm = distance_matrix(&cloud)?;
    let diagrams = vr_persistence_scaled(&dm, a.max_dim, max_scale, scale)?;
    write_json_file(&ctx.out(&a.out)?, &diagrams)?;
    if let Some(csv) = &a.csv {
        let mut w = io::BufWriter::new(fs::File::create(ctx.out(csv)?)?);
        write_diagram_csv(&mut w, &diagrams)?;
        w.flush()?;
    }
    print_json(&json!({
        "scale": scale,
        "max_scale": max_scale,
        "bars": diagrams.iter().map(|d| d.len()).collect::<Vec<_>>(),
    }))
}

fn bottleneck(a: BottleneckArgs) -> Result<()> {
    let pick = |path: &Path| -> Result<rcla::PersistenceDiagram> {
        read_diagrams_file(path)?
            .into_iter()
            .find(|d| d.degree == a.degree)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "{} has no degree-{} diagram",
                    path.display(),
                    a.degree
                ))
            })
    };
    let d = bottleneck_distance(&pick(&a.a)?, &pick(&a.b)?)?;
    if d.is_infinite() {
        println!("inf");
    } else {
        println!("{d}");
    }
    Ok(())
}

fn features(ctx: &Ctx, a: FeaturesArgs) -> Result<()> {
    let diagrams = read_diagrams_file(&a.input)?;
    let drop = a
        .drop_stat
        .iter()
        .map(|s| s.parse::<FeatureName>())
        .collect::<Result<Vec<_>>>()?;
    let fv = diagram_features(&diagrams, a.cap, &drop)?;
    let values: Vec<String> = fv.values.iter().map(|v| v.to_string()).collect();
    fs::write(
        ctx.out(&a.out)?,
        format!("{}\n{}\n", fv.schema.join(","), values.join(",")),
    )?;
    print_json(&json!({ "len": fv.len() }))
}

fn certificate(a: CertificateArgs) -> Result<()> {
    let text = fs::read_to_string(&a.shape_counts)?;
    let mut counts = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        counts.push(line.parse::<u64>().map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("{line:?}: {e}"),
        })?);
    }
    let occ = ShapeOccupancy::from_counts(&counts);
    print_json(&stability_certificate(&occ, a.lambda, a.delta, a.k, a.dim)?)
}

fn experiment(ctx: &Ctx, a: ExperimentArgs) -> Result<()> {
    let mut spec = ExperimentSpec::new(a.dataset.dataset(), a.ratios, a.trials, ctx.seed);
    spec.n_shape = a.n_shape;
    spec.variants = a
        .variants
        .iter()
        .map(|v| v.parse::<Variant>())
        .collect::<Result<_>>()?;
    spec.scale = a.scale.into();
    spec.mode = a.mode.into();
    let report = run_comparison(&spec)?;
    write_json_file(&ctx.out(&a.out)?, &report)?;
    if let Some(curve) = &a.curve {
        let mut w = io::BufWriter::new(fs::File::create(ctx.out(curve)?)?);
        write_curve_csv(&mut w, &report.curve())?;
        w.flush()?;
    }
    print_json(&report.curve().iter().map(|r| json!({
        "ratio": r.ratio,
        "variant": r.variant,
        "mean": r.mean,
        "sd": r.sd,
    })).collect::<Vec<_>>())
}

fn obj_ingest(ctx: &Ctx, a: ObjArgs) -> Result<()> {
    let mut cloud = read_obj_vertices(fs::File::open(&a.input)?)?;
    if let Some(n) = a.sample {
        cloud = subsample(&cloud, n, &mut RngSeed::new(ctx.seed, 0).rng())?;
    }
    if a.center_unit {
        cloud = center_in_unit_cube(&cloud)?;
    }
    write_points_file(&ctx.out(&a.out)?, &cloud)?;
    print_json(&json!({ "n": cloud.len() }))
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::InvalidParameter(e.to_string()))?;
    }
    let ctx = Ctx {
        seed: cli.seed,
        out_dir: cli.out_dir,
    };
    match cli.command {
        Command::Synth(a) => synth(&ctx, a),
        Command::Reduce(a) => reduce(&ctx, a),
        Command::Autoselect(a) => autoselect(&ctx, a),
        Command::Ph(a) => ph(&ctx, a),
        Command::Bottleneck(a) => bottleneck(a),
        Command::Features(a) => features(&ctx, a),
        Command::Certificate(a) => certificate(a),
        Command::Experiment(a) => experiment(&ctx, a),
        Command::ObjIngest(a) => obj_ingest(&ctx, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let mut body = json!({ "error": e.kind(), "message": e.to_string() });
            if let Error::NoFeasibleCandidate { reports } = &e {
                body["reports"] = json!(reports);
            }
            eprintln!("{body}");
            ExitCode::FAILURE
        }
    }
}
