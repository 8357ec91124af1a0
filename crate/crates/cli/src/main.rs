//! Command-line front end: model checking, initial-data construction,
//! single runs with refinement confirmation, and parameter sweeps.
//!
//! Exit codes: `check-model`/`classify` return 0 when every condition is
//! decided and the regime is determined, 1 when the regime is Unknown,
//! and 2 when any condition is undecided. `simulate` encodes its verdict:
//! 10 finite-time blowup, 11 infinite-time blowup candidate, 12 bounded
//! candidate, 13 inconclusive. Hard errors exit 1.

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use ksblow_core::conditions::{
    check_conditions, check_raz_implies_gh, classify_regime, ConditionParams, ConditionReport,
    ConditionStatus, RegimeLabel,
};
use ksblow_core::config::SimulationConfig;
use ksblow_core::nonlinearity::{parse_model_name, NonlinearityModel};
use ksblow_core::report::{self, ExecutedRun};
use ksblow_core::solver::{confirm_blowup, Scenario, VerdictLabel};
use ksblow_core::sweep::{phase_csv, run_sweep, SweepSpec};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "ksblow", version, about = "Radial chemotaxis aggregation simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Catalog name: `semilinear`, `power_diffusion`, `remark_family`,
    /// or the full form `power_diffusion(q=-1)`.
    family: String,
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    #[arg(long)]
    gamma1: Option<f64>,
    #[arg(long)]
    gamma2: Option<f64>,
    /// Threshold s0 > 1 in the G/H definitions (default e).
    #[arg(long)]
    s0: Option<f64>,
}

impl ModelArgs {
    fn resolve(&self) -> Result<NonlinearityModel> {
        let model = if self.family.contains('(') {
            parse_model_name(&self.family)?
        } else {
            match self.family.as_str() {
                "semilinear" => NonlinearityModel::semilinear(),
                "power_diffusion" => {
                    let q = self.q.context("power_diffusion requires --q")?;
                    NonlinearityModel::power_diffusion(q)?
                }
                "remark_family" => {
                    let g1 = self.gamma1.context("remark_family requires --gamma1")?;
                    let g2 = self.gamma2.context("remark_family requires --gamma2")?;
                    NonlinearityModel::remark_family(g1, g2)?
                }
                other => bail!("unknown model family `{other}`"),
            }
        };
        Ok(match self.s0 {
            Some(s0) => model.with_s0(s0)?,
            None => model,
        })
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check the structural conditions of a model and classify its regime.
    CheckModel {
        #[command(flatten)]
        model: ModelArgs,
        /// Also verify the growth-ratio implication on a fresh grid.
        #[arg(long)]
        raz: bool,
    },
    /// Print only the regime label of a model.
    Classify {
        #[command(flatten)]
        model: ModelArgs,
    },
    /// Build the configured initial data and report its membership
    /// quantities without time integration.
    MakeInitialData {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Integrate one configuration and write series, snapshots, and the
    /// summary JSON.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Mesh-doubling levels used to confirm a blowup verdict.
        #[arg(long, default_value_t = 1)]
        refinements: usize,
    },
    /// Run a parameter sweep and write the phase-diagram CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker-pool size (defaults to all cores in parallel builds).
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn out_dir(flag: Option<PathBuf>, config_dir: Option<&str>) -> PathBuf {
    flag.or_else(|| config_dir.map(PathBuf::from))
        .or_else(|| std::env::var("KSBLOW_OUT").ok().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn condition_exit(report: &ConditionReport, regime: RegimeLabel) -> ExitCode {
    if report
        .entries()
        .iter()
        .any(|e| e.status == ConditionStatus::Unknown)
    {
        ExitCode::from(2)
    } else if regime == RegimeLabel::Unknown {
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    }
}

fn verdict_exit(label: VerdictLabel) -> ExitCode {
    ExitCode::from(match label {
        VerdictLabel::FiniteTimeBlowup => 10,
        VerdictLabel::InfiniteTimeBlowupCandidate => 11,
        VerdictLabel::BoundedCandidate => 12,
        VerdictLabel::Inconclusive => 13,
    })
}

fn cmd_check_model(args: &ModelArgs, with_raz: bool) -> Result<ExitCode> {
    let model = args.resolve()?;
    let params = ConditionParams::default();
    let report = check_conditions(&model, &params)?;
    let regime = classify_regime(&report, 2);
    let mut doc = serde_json::json!({
        "model": model.name(),
        "conditions": report,
        "regime": regime,
    });
    if with_raz {
        let implication = check_raz_implies_gh(&model, &params)?;
        doc["raz_implication"] = serde_json::to_value(&implication)?;
    }
    println!("{}", serde_json::to_string_pretty(&doc)?);
    Ok(condition_exit(&report, regime))
}

fn cmd_classify(args: &ModelArgs) -> Result<ExitCode> {
    let model = args.resolve()?;
    let report = check_conditions(&model, &ConditionParams::default())?;
    let regime = classify_regime(&report, 2);
    println!(
        "{}",
        serde_json::json!({ "model": model.name(), "regime": regime })
    );
    Ok(condition_exit(&report, regime))
}

fn load_config(path: &Path) -> Result<SimulationConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    Ok(SimulationConfig::from_toml(&text)?)
}

fn write_run_artifacts(run: &ExecutedRun, dir: &Path) -> Result<Vec<PathBuf>> {
    let hash = &run.config_hash;
    let mut written = Vec::new();
    let series = dir.join(format!("series_{hash}.csv"));
    report::write_text(&series, &report::series_csv(&run.output.records))?;
    written.push(series);
    for (t, state) in &run.snapshots {
        let path = dir.join(format!("snapshot_{hash}_t{t}.csv"));
        report::write_text(&path, &report::snapshot_csv(state))?;
        written.push(path);
    }
    Ok(written)
}

fn cmd_make_initial_data(config: &Path, out: Option<PathBuf>) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let resolved = cfg.resolve()?;
    let (spec, eta_search) = report::resolve_initial_data(&resolved)?;
    let state = ksblow_core::initdata::build(&spec, resolved.mesh)?;
    let membership =
        ksblow_core::initdata::membership(&state, &resolved.model, resolved.k_user, resolved.a_cap)?;
    let dir = out_dir(out, cfg.output.dir.as_deref());
    let hash = cfg.hash();
    let snap = dir.join(format!("initial_{hash}.csv"));
    report::write_text(&snap, &report::snapshot_csv(&state))?;
    let doc = serde_json::json!({
        "config_hash": hash,
        "model": resolved.model.name(),
        "initial_data": spec,
        "eta_search": eta_search,
        "membership": membership,
    });
    let json_path = dir.join(format!("initial_{hash}.json"));
    report::write_text(&json_path, &serde_json::to_string_pretty(&doc)?)?;
    println!("{}", serde_json::to_string_pretty(&doc)?);
    eprintln!("wrote {} and {}", snap.display(), json_path.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_simulate(config: &Path, out: Option<PathBuf>, refinements: usize) -> Result<ExitCode> {
    let cfg = load_config(config)?;
    let run = report::execute(&cfg)?;
    let mut summary = report::summarize(&run);
    if refinements >= 2 && summary.verdict.label == VerdictLabel::FiniteTimeBlowup {
        let resolved = cfg.resolve()?;
        let (spec, _) = report::resolve_initial_data(&resolved)?;
        let scenario = Scenario {
            model: resolved.model,
            mesh: resolved.mesh,
            initial: spec,
            solver: resolved.solver,
        };
        summary.verdict = confirm_blowup(&scenario, refinements)?;
    }
    let dir = out_dir(out, cfg.output.dir.as_deref());
    let mut files = write_run_artifacts(&run, &dir)?;
    let summary_path = dir.join(format!("summary_{}.json", run.config_hash));
    report::write_text(&summary_path, &report::summary_json(&summary))?;
    files.push(summary_path);
    println!("{}", report::summary_json(&summary));
    for f in files {
        eprintln!("wrote {}", f.display());
    }
    Ok(verdict_exit(summary.verdict.label))
}

fn cmd_sweep(config: &Path, out: Option<PathBuf>, jobs: Option<usize>) -> Result<ExitCode> {
    let text = std::fs::read_to_string(config)
        .with_context(|| format!("reading sweep spec {}", config.display()))?;
    let mut spec = SweepSpec::from_toml(&text)?;
    if jobs.is_some() {
        spec.jobs = jobs;
    }
    let rows = run_sweep(&spec)?;
    let csv = phase_csv(&rows);
    let dir = out_dir(out, spec.template.output.dir.as_deref());
    let hash = spec.template.hash();
    let path = dir.join(format!("phase_{hash}.csv"));
    report::write_text(&path, &csv)?;
    print!("{csv}");
    eprintln!("wrote {}", path.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::CheckModel { model, raz } => cmd_check_model(model, *raz),
        Command::Classify { model } => cmd_classify(model),
        Command::MakeInitialData { config, out } => cmd_make_initial_data(config, out.clone()),
        Command::Simulate {
            config,
            out,
            refinements,
        } => cmd_simulate(config, out.clone(), *refinements),
        Command::Sweep { config, out, jobs } => cmd_sweep(config, out.clone(), *jobs),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
