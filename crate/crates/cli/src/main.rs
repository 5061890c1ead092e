use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cnellipse::eval::{run_benchmark, BenchReport, TH_CNC_GRID, TH_CNL_GRID};
use cnellipse::synth::{
    random_scene, sweep_axis_ratio_cells, sweep_ratio_orientation_cells, write_scene, SceneGenConfig, SceneSpec,
    NOISE_DENSITIES,
};
use cnellipse::{DetectionReport, Detector, DetectorConfig};
use rayon::prelude::*;

const CONFIG_ENV: &str = "ELLIPSE_DETECT_CONFIG";
const DEFAULT_TH_OVERLAP: f64 = 0.8;

#[derive(Parser)]
#[command(name = "ellipse-detect", version, about = "Detect ellipses in grayscale images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect ellipses in one image; prints `cx cy a b theta_deg score` per ellipse.
    Detect(DetectArgs),
    /// Score the detector on a directory of images with `.txt` ground-truth sidecars.
    Bench(BenchArgs),
    /// Write a synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Args, Clone, Default)]
struct Tuning {
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    canny_low: Option<f64>,
    #[arg(long)]
    canny_high: Option<f64>,
    #[arg(long)]
    th_length: Option<usize>,
    #[arg(long)]
    th_cnl: Option<f64>,
    /// `inf` disables the CNC test.
    #[arg(long)]
    th_cnc: Option<String>,
    #[arg(long)]
    nd: Option<usize>,
    #[arg(long)]
    th_fit: Option<f64>,
    #[arg(long)]
    th_len: Option<f64>,
    #[arg(long)]
    th_overlap: Option<f64>,
    /// Median-filter impulse noise before edge detection.
    #[arg(long)]
    denoise: bool,
    #[arg(long)]
    seed: Option<u64>,
    /// Print the effective configuration and exit.
    #[arg(long)]
    print_config: bool,
}

#[derive(Args)]
struct DetectArgs {
    image: PathBuf,
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long)]
    json: bool,
    /// Write an SVG overlay of the detections.
    #[arg(long, value_name = "PATH")]
    overlay: Option<PathBuf>,
    /// Also draw the labeled arcs in the overlay.
    #[arg(long)]
    debug_arcs: bool,
    /// Accepted for symmetry with the other commands; detection is single-threaded.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct BenchArgs {
    dataset: PathBuf,
    #[command(flatten)]
    tuning: Tuning,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// JSON report path; printed to stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_name = "PATH")]
    csv: Option<PathBuf>,
    /// Sweep the line-pruning and CNC thresholds instead of a single run.
    #[arg(long)]
    ablate: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sweep {
    RatioOrientation,
    AxisRatio,
    Noise,
    Scenes,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(value_enum)]
    sweep: Sweep,
    out_dir: PathBuf,
    /// Keep every n-th cell of a sweep.
    #[arg(long, default_value_t = 1)]
    stride: usize,
    /// Number of random scenes for `scenes` and `noise`.
    #[arg(long, default_value_t = 30)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

/// Failure classes with distinct exit codes.
enum Failure {
    Input(anyhow::Error),
    Config(anyhow::Error),
    Other(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Input(_) => 2,
            Failure::Config(_) => 3,
            Failure::Other(_) => 1,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Config(e) | Failure::Other(e) => e,
        }
    }
}

fn resolve(t: &Tuning) -> Result<(DetectorConfig, f64)> {
    let mut cfg = DetectorConfig::default();
    let mut th_o = DEFAULT_TH_OVERLAP;
    if let Ok(path) = std::env::var(CONFIG_ENV) {
        let text = std::fs::read_to_string(&path).with_context(|| format!("reading {CONFIG_ENV}={path}"))?;
        cfg.apply_text(&text, |k, v| {
            if k.replace('-', "_") == "th_overlap" {
                th_o = v
                    .parse()
                    .map_err(|_| cnellipse::Error::Config(format!("cannot parse th_overlap = {v:?}")))?;
                Ok(true)
            } else {
                Ok(false)
            }
        })
        .with_context(|| format!("in config file {path}"))?;
    }
    let mut set = |k: &str, v: Option<String>| -> Result<()> {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
        Ok(())
    };
    set("sigma", t.sigma.map(|v| v.to_string()))?;
    set("canny_low", t.canny_low.map(|v| v.to_string()))?;
    set("canny_high", t.canny_high.map(|v| v.to_string()))?;
    set("th_length", t.th_length.map(|v| v.to_string()))?;
    set("th_cnl", t.th_cnl.map(|v| v.to_string()))?;
    set("th_cnc", t.th_cnc.clone())?;
    set("nd", t.nd.map(|v| v.to_string()))?;
    set("th_fit", t.th_fit.map(|v| v.to_string()))?;
    set("th_len", t.th_len.map(|v| v.to_string()))?;
    set("denoise", t.denoise.then(|| "true".to_string()))?;
    set("seed", t.seed.map(|v| v.to_string()))?;
    if let Some(o) = t.th_overlap {
        th_o = o;
    }
    cfg.validate()?;
    if !(0.0..=1.0).contains(&th_o) {
        anyhow::bail!("th_overlap must lie in [0, 1]");
    }
    Ok((cfg, th_o))
}

fn print_config(cfg: &DetectorConfig, th_o: f64) {
    println!("{}th_overlap = {th_o}", cfg.to_text());
}

fn svg_overlay(report: &DetectionReport, debug_arcs: bool) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = report.width,
        h = report.height
    );
    if debug_arcs {
        for arc in report.arcs.iter().filter(|a| a.quadrant.is_some()) {
            let pts: Vec<String> = arc
                .points()
                .iter()
                .map(|p| format!("{},{}", p.x, p.y))
                .collect();
            let _ = writeln!(
                s,
                r#"  <polyline points="{}" fill="none" stroke="gray" stroke-width="1"/>"#,
                pts.join(" ")
            );
        }
    }
    for d in &report.ellipses {
        let p = &d.params;
        let _ = writeln!(
            s,
            r#"  <ellipse cx="{:.3}" cy="{:.3}" rx="{:.3}" ry="{:.3}" transform="rotate({:.4} {:.3} {:.3})" fill="none" stroke="lime" stroke-width="1.5"/>"#,
            p.cx,
            p.cy,
            p.a,
            p.b,
            p.theta.to_degrees(),
            p.cx,
            p.cy
        );
    }
    s.push_str("</svg>\n");
    s
}

fn detect(args: DetectArgs) -> Result<(), Failure> {
    let (cfg, th_o) = resolve(&args.tuning).map_err(Failure::Config)?;
    if args.tuning.print_config {
        print_config(&cfg, th_o);
        return Ok(());
    }
    let img = cnellipse::image::load(&args.image)
        .with_context(|| format!("cannot read {}", args.image.display()))
        .map_err(Failure::Input)?;
    let detector = Detector::new(cfg.clone()).map_err(|e| Failure::Config(e.into()))?;
    let report = detector.detect(&img);

    if args.json {
        let doc = serde_json::json!({
            "image": args.image.display().to_string(),
            "config": cfg,
            "report": report,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("serializable"));
    } else {
        for d in &report.ellipses {
            let p = &d.params;
            println!("{:.3} {:.3} {:.3} {:.3} {:.3} {:.4}", p.cx, p.cy, p.a, p.b, p.theta.to_degrees(), d.score);
        }
    }
    if let Some(path) = &args.overlay {
        std::fs::write(path, svg_overlay(&report, args.debug_arcs))
            .with_context(|| format!("writing {}", path.display()))
            .map_err(Failure::Other)?;
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), Failure> {
    let (cfg, th_o) = resolve(&args.tuning).map_err(Failure::Config)?;
    if args.tuning.print_config {
        print_config(&cfg, th_o);
        return Ok(());
    }
    if args.jobs == 0 {
        return Err(Failure::Config(anyhow::anyhow!("--jobs must be at least 1")));
    }
    if !args.dataset.is_dir() {
        return Err(Failure::Input(anyhow::anyhow!("{} is not a directory", args.dataset.display())));
    }
    let run = |cfg: DetectorConfig| -> Result<BenchReport, Failure> {
        let det = Detector::new(cfg).map_err(|e| Failure::Config(e.into()))?;
        run_benchmark(&args.dataset, &det, th_o, args.jobs).map_err(|e| match e {
            cnellipse::Error::DatasetFormat { .. } | cnellipse::Error::UnsupportedFormat(_) => {
                Failure::Input(e.into())
            }
            other => Failure::Other(other.into()),
        })
    };

    if args.ablate {
        let mut rows = Vec::new();
        let mut table = String::from("param\tvalue\tarcs\tcc\ttime_ms\tf_measure\n");
        let grid = TH_CNL_GRID
            .iter()
            .map(|&v| ("th_cnl", v))
            .chain(TH_CNC_GRID.iter().map(|&v| ("th_cnc", v)));
        for (param, value) in grid {
            let mut c = cfg.clone();
            c.set(param, &value.to_string()).map_err(|e| Failure::Config(e.into()))?;
            let rep = run(c)?;
            let a = &rep.aggregate;
            let _ = writeln!(
                table,
                "{param}\t{value}\t{:.1}\t{:.1}\t{:.3}\t{:.4}",
                a.mean_arcs, a.mean_cc, a.mean_stage_times.total, a.score.f_measure
            );
            rows.push(serde_json::json!({
                "param": param,
                "value": value,
                "mean_arcs": a.mean_arcs,
                "mean_cc": a.mean_cc,
                "mean_time_ms": a.mean_stage_times.total,
                "f_measure": a.score.f_measure,
            }));
        }
        print!("{table}");
        if let Some(out) = &args.out {
            let doc = serde_json::to_string_pretty(&rows).expect("serializable");
            std::fs::write(out, doc).with_context(|| format!("writing {}", out.display())).map_err(Failure::Other)?;
        }
        return Ok(());
    }

    let rep = run(cfg)?;
    match &args.out {
        Some(out) => {
            std::fs::write(out, rep.to_json()).with_context(|| format!("writing {}", out.display())).map_err(Failure::Other)?;
            let a = &rep.aggregate;
            println!(
                "images {} precision {:.4} recall {:.4} f_measure {:.4} mean_cc {:.1} mean_ms {:.3}",
                a.images, a.score.precision, a.score.recall, a.score.f_measure, a.mean_cc, a.mean_stage_times.total
            );
        }
        None => println!("{}", rep.to_json()),
    }
    if let Some(csv) = &args.csv {
        std::fs::write(csv, rep.to_csv()).with_context(|| format!("writing {}", csv.display())).map_err(Failure::Other)?;
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<(), Failure> {
    if args.stride == 0 || args.jobs == 0 {
        return Err(Failure::Config(anyhow::anyhow!("--stride and --jobs must be at least 1")));
    }
    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(Failure::Other)?;
    let scenes: Vec<(String, SceneSpec)> = match args.sweep {
        Sweep::RatioOrientation => sweep_ratio_orientation_cells().into_iter().map(|c| (c.name, c.spec)).collect(),
        Sweep::AxisRatio => sweep_axis_ratio_cells()
            .into_iter()
            .filter(|c| c.axis * c.ratio >= 0.5)
            .map(|c| (c.name, c.spec))
            .collect(),
        Sweep::Scenes => (0..args.count as u64)
            .map(|i| (format!("scene_{i:04}"), random_scene(&SceneGenConfig::default(), args.seed + i)))
            .collect(),
        Sweep::Noise => {
            let mut v = Vec::new();
            for i in 0..args.count as u64 {
                let base = random_scene(&SceneGenConfig::default(), args.seed + i);
                v.push((format!("noise_00_{i:04}"), base.clone()));
                for d in NOISE_DENSITIES {
                    let pct = (d * 100.0).round() as u32;
                    v.push((format!("noise_{pct:02}_{i:04}"), base.clone().with_noise(d, args.seed + i)));
                }
            }
            v
        }
    };
    let selected: Vec<&(String, SceneSpec)> = scenes.iter().step_by(args.stride).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Failure::Other(e.into()))?;
    pool.install(|| {
        selected
            .par_iter()
            .try_for_each(|(name, spec)| write_scene(&args.out_dir, name, spec).map(|_| ()))
    })
    .map_err(|e| Failure::Other(e.into()))?;
    println!("wrote {} images to {}", selected.len(), args.out_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let res = match cli.command {
        Command::Detect(a) => detect(a),
        Command::Bench(a) => bench(a),
        Command::Synth(a) => synth(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}
