use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use coartic::gradcheck::{run_gradcheck, DEFAULT_STEP, DEFAULT_TOLERANCE};
use coartic::io::{read_annotation, read_mask, read_msq, write_csv_report, write_msq};
use coartic::synth::make_corpus;
use coartic::toytrain::{ablate_window, fit, LossCurve};
use coartic::{
    coarticulation_weights, evaluate, loss_pc, loss_rec, loss_vel, BoundaryPolicy, Error, EvalPlan,
    LossKind, MeshSequence, SynthSpec, TrainConfig, VertexRegionMask, WindowSpec,
};

/// Coarticulation-weighted losses, metrics and toy experiments.
#[derive(Parser)]
#[command(name = "coartic", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-frame motion energy and coarticulation weight.
    Weights {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        sigma: usize,
        #[arg(long, default_value = "clamp")]
        policy: BoundaryPolicy,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-frame and total loss between two sequences.
    Loss {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        kind: LossKind,
        /// Window radius for `pc`.
        #[arg(long, default_value_t = 2)]
        sigma: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// FVE, LVE, LDTW and lip-max.
    Metrics {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        lips: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Synthesizes one track per spec file into a corpus directory.
    Gen {
        #[arg(long, required = true)]
        spec: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fits the toy model and writes report.csv, curve.csv and pred.msq.
    Train {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        config: PathBuf,
        /// Lip mask; all vertices when omitted.
        #[arg(long)]
        lips: Option<PathBuf>,
        /// Segment labels; motion energy decides transitions when omitted.
        #[arg(long)]
        annotation: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Window-size ablation against a reconstruction-loss baseline.
    Ablate {
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        sigmas: Vec<usize>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        lips: Option<PathBuf>,
        #[arg(long)]
        annotation: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compares every analytic gradient against finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

/// Failure after the command ran, e.g. a gradient check over tolerance.
struct Failed;

fn lips_or_all(lips: Option<&Path>, gt: &MeshSequence) -> coartic::Result<VertexRegionMask> {
    match lips {
        Some(p) => read_mask(p),
        None => VertexRegionMask::all(gt.num_vertices(), "all"),
    }
}

fn eval_plan(
    gt: &MeshSequence,
    lips: Option<&Path>,
    annotation: Option<&Path>,
) -> coartic::Result<EvalPlan> {
    let lips = lips_or_all(lips, gt)?;
    match annotation {
        Some(p) => {
            let ann = read_annotation(p)?;
            if ann.len() != gt.num_frames() {
                return Err(Error::format(
                    p,
                    format!(
                        "annotation has {} frames, sequence has {}",
                        ann.len(),
                        gt.num_frames()
                    ),
                ));
            }
            Ok(EvalPlan::from_annotation(lips, &ann))
        }
        None => EvalPlan::from_energy(lips, gt),
    }
}

fn create_dir(dir: &Path) -> coartic::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("n/a".to_string(), |v| format!("{v:.6e}"))
}

fn run(cmd: Command) -> coartic::Result<Result<(), Failed>> {
    match cmd {
        Command::Weights {
            gt,
            sigma,
            policy,
            out,
        } => {
            let gt = read_msq(gt)?;
            let w = coarticulation_weights(&gt, &WindowSpec::new(sigma).with_policy(policy))?;
            write_csv_report(&w, out)?;
        }
        Command::Loss {
            gt,
            pred,
            kind,
            sigma,
            out,
        } => {
            let gt = read_msq(gt)?;
            let pred = read_msq(pred)?;
            let report = match kind {
                LossKind::Rec => loss_rec(&gt, &pred)?,
                LossKind::Vel => loss_vel(&gt, &pred)?,
                LossKind::Pc => {
                    let w = coarticulation_weights(&gt, &WindowSpec::new(sigma))?;
                    loss_pc(&gt, &pred, &w)?
                }
            };
            write_csv_report(&report, out)?;
        }
        Command::Metrics {
            gt,
            pred,
            lips,
            out,
        } => {
            let gt = read_msq(gt)?;
            let pred = read_msq(pred)?;
            let lips = read_mask(lips)?;
            write_csv_report(&evaluate(&gt, &pred, &lips)?, out)?;
        }
        Command::Gen { spec, out } => {
            let specs = spec
                .iter()
                .map(SynthSpec::read)
                .collect::<coartic::Result<Vec<_>>>()?;
            let manifest = make_corpus(&specs, &out)?;
            for e in &manifest.entries {
                println!(
                    "{} seed={} sha256={}",
                    e.sequence.display(),
                    e.seed,
                    e.spec_hash
                );
            }
        }
        Command::Train {
            gt,
            config,
            lips,
            annotation,
            out,
        } => {
            let gt = read_msq(gt)?;
            let cfg = TrainConfig::read(config)?;
            let plan = eval_plan(&gt, lips.as_deref(), annotation.as_deref())?;
            let (model, report) = fit(&gt, &cfg, &plan)?;
            create_dir(&out)?;
            write_csv_report(&report, out.join("report.csv"))?;
            write_csv_report(&LossCurve(&report.loss_curve), out.join("curve.csv"))?;
            write_msq(&model.predict(gt.num_frames())?, out.join("pred.msq"))?;
            println!(
                "{}: objective {:.6e}, lve {:.6e}, transition lve {}",
                report.loss_choice,
                report.final_objective,
                report.metrics.lve,
                fmt_opt(report.lve_transition)
            );
        }
        Command::Ablate {
            gt,
            sigmas,
            config,
            lips,
            annotation,
            out,
        } => {
            let gt = read_msq(gt)?;
            let cfg = match config {
                Some(p) => TrainConfig::read(p)?,
                None => TrainConfig::default(),
            };
            let plan = eval_plan(&gt, lips.as_deref(), annotation.as_deref())?;
            let table = ablate_window(&gt, &cfg, &sigmas, &plan)?;
            write_csv_report(&table, &out)?;
            let base = table.baseline().lve_transition;
            println!("baseline rec: transition lve {}", fmt_opt(base));
            for row in table.window_rows() {
                let verdict = match (row.lve_transition, base) {
                    (Some(l), Some(b)) if l < b => "beats baseline",
                    (Some(_), Some(_)) => "does not beat baseline",
                    _ => "no transition frames",
                };
                println!(
                    "sigma {}: transition lve {} ({verdict})",
                    row.sigma.unwrap_or_default(),
                    fmt_opt(row.lve_transition)
                );
            }
            let best_fve = table.best_sigma_by(|r| r.fve);
            let best_lve = table.best_sigma_by(|r| r.lve);
            let observed = best_fve == Some(2) && best_lve == Some(2);
            let show = |s: Option<usize>| s.map_or("n/a".to_string(), |s| s.to_string());
            println!(
                "lowest fve at sigma {}, lowest lve at sigma {}; window 5 (sigma 2) best on both: {}",
                show(best_fve),
                show(best_lve),
                if observed { "observed" } else { "not observed" }
            );
        }
        Command::Gradcheck { trials, seed } => {
            let report = run_gradcheck(trials, seed, DEFAULT_STEP)?;
            for c in &report.cases {
                println!("{}: max relative error {:.3e}", c.name, c.max_rel_error);
            }
            let w = report.worst();
            println!(
                "worst: {} {:.3e} (trial {}, T={}, V={}), tolerance {:.0e}",
                w.name, w.max_rel_error, w.trial, w.num_frames, w.num_vertices, DEFAULT_TOLERANCE
            );
            if !report.passes(DEFAULT_TOLERANCE) {
                eprintln!("gradcheck failed: {} exceeds tolerance", w.name);
                return Ok(Err(Failed));
            }
        }
    }
    Ok(Ok(()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failed)) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}
