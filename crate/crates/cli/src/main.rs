//! Command-line runner: closed-form bounds, plan construction, alignment
//! audits, and SNR-sweep measurements with CSV/JSON output.
//!
//! Exit codes: 0 on success, 1 when a numerical verification fails, 2 on
//! configuration or build errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use ana_core::bounds::{self, to_f64};
use ana_core::error::Error;
use ana_core::sampling::derive_seed;
use ana_core::scenario::{
    run_scenario, sweep, to_csv, ScenarioConfig, ScenarioResult, Tolerances, VaryParam,
};
use ana_core::scheme::SchemeKind;
use ana_core::verify::{check_alignment_with, VerifyOptions};

#[derive(Parser)]
#[command(
    name = "ana",
    version,
    about = "Artificial-noise-alignment schemes for wireless X networks: build, verify, measure"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the closed-form sum-SDOF bounds for one network size
    Bounds(BoundsArgs),
    /// Draw channels, build the beamforming plan, and emit both as JSON
    Build(ScenarioArgs),
    /// Audit every alignment relation and rank claim of one build
    Verify(ScenarioArgs),
    /// Run a full scenario: build, audit, SNR sweep, slopes, bound check
    Run(ScenarioArgs),
    /// Run one scenario per value of a varied parameter
    Sweep(SweepArgs),
}

#[derive(Args, Clone)]
struct ScenarioArgs {
    /// Scheme: mx2 | asymptotic | blind
    #[arg(long)]
    scheme: Option<String>,
    /// Number of transmitters (antenna modes for the blind scheme)
    #[arg(long = "M")]
    m: Option<usize>,
    /// Number of receivers
    #[arg(long = "K")]
    k: Option<usize>,
    /// Order parameter of the asymptotic scheme
    #[arg(long)]
    n: Option<usize>,
    /// Master seed; per-trial seeds derive from it
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Low edge of the power grid in dB
    #[arg(long = "pmin-db")]
    pmin_db: Option<f64>,
    /// High edge of the power grid in dB
    #[arg(long = "pmax-db")]
    pmax_db: Option<f64>,
    /// Number of grid points
    #[arg(long)]
    points: Option<usize>,
    /// JSON config file; command-line flags override its fields
    #[arg(long)]
    config: Option<PathBuf>,
    /// Accept the generalized blind layout for M >= 4
    #[arg(long = "experimental-blind-m")]
    experimental_blind_m: bool,
    /// Output path (CSV for run/sweep, JSON otherwise); stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Parameter to vary: "m=2..6" or "n=1,2,3" (repeatable)
    #[arg(long = "vary")]
    vary: Vec<String>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long = "M")]
    m: u64,
    #[arg(long = "K")]
    k: u64,
    /// Also evaluate the finite-order achieved value
    #[arg(long)]
    n: Option<u64>,
    /// Write the bound set as JSON here as well
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Config-file shape: every field optional, merged under the flag values.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    scheme: Option<String>,
    m: Option<usize>,
    k: Option<usize>,
    n: Option<usize>,
    seed: Option<u64>,
    trials: Option<usize>,
    p_grid_db: Option<Vec<f64>>,
    pmin_db: Option<f64>,
    pmax_db: Option<f64>,
    points: Option<usize>,
    tolerances: Option<Tolerances>,
    experimental_blind: Option<bool>,
}

fn parse_scheme(tag: &str) -> Result<SchemeKind, Error> {
    match tag {
        "mx2" => Ok(SchemeKind::Mx2Ana),
        "asymptotic" => Ok(SchemeKind::AsymptoticAna),
        "blind" => Ok(SchemeKind::BlindAna),
        other => Err(Error::Config(format!(
            "unknown scheme {other:?}; expected mx2, asymptotic, or blind"
        ))),
    }
}

fn grid(pmin: f64, pmax: f64, points: usize) -> Result<Vec<f64>, Error> {
    if points < 2 {
        return Err(Error::Config("power grid needs at least 2 points".into()));
    }
    let step = (pmax - pmin) / (points - 1) as f64;
    Ok((0..points).map(|i| pmin + step * i as f64).collect())
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig, Error> {
        let file: FileConfig = match &self.config {
            Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
            None => FileConfig::default(),
        };
        let scheme_tag = self
            .scheme
            .clone()
            .or(file.scheme)
            .ok_or_else(|| Error::Config("no scheme given (flag or config file)".into()))?;
        let mut config = ScenarioConfig::new(parse_scheme(&scheme_tag)?);
        if let Some(m) = file.m {
            config.m = m;
        }
        if let Some(k) = file.k {
            config.k = k;
        }
        if let Some(n) = file.n {
            config.n = Some(n);
        }
        if let Some(seed) = file.seed {
            config.seed = seed;
        }
        if let Some(trials) = file.trials {
            config.trials = trials;
        }
        if let Some(t) = file.tolerances {
            config.tolerances = t;
        }
        if let Some(x) = file.experimental_blind {
            config.experimental_blind = x;
        }
        if let Some(g) = file.p_grid_db {
            config.p_grid_db = g;
        } else if file.pmin_db.is_some() || file.pmax_db.is_some() || file.points.is_some() {
            config.p_grid_db = grid(
                file.pmin_db.unwrap_or(60.0),
                file.pmax_db.unwrap_or(120.0),
                file.points.unwrap_or(7),
            )?;
        }

        if let Some(m) = self.m {
            config.m = m;
        }
        if let Some(k) = self.k {
            config.k = k;
        }
        if let Some(n) = self.n {
            config.n = Some(n);
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(trials) = self.trials {
            config.trials = trials;
        }
        if self.experimental_blind_m {
            config.experimental_blind = true;
        }
        if self.pmin_db.is_some() || self.pmax_db.is_some() || self.points.is_some() {
            let lo = self
                .pmin_db
                .unwrap_or_else(|| config.p_grid_db.first().copied().unwrap_or(60.0));
            let hi = self
                .pmax_db
                .unwrap_or_else(|| config.p_grid_db.last().copied().unwrap_or(120.0));
            config.p_grid_db = grid(lo, hi, self.points.unwrap_or(config.p_grid_db.len().max(2)))?;
        }
        config.validate()?;
        Ok(config)
    }
}

fn emit(path: &Option<PathBuf>, payload: &str) -> Result<(), Error> {
    match path {
        Some(path) => fs::write(path, payload).map_err(Error::from),
        None => {
            print!("{payload}");
            Ok(())
        }
    }
}

fn json_sidecar(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

fn cmd_bounds(args: &BoundsArgs) -> Result<ExitCode, Error> {
    let set = bounds::bound_set(args.m, args.k, args.n)?;
    println!("sum-SDOF bounds for M = {}, K = {}", args.m, args.k);
    println!("{:<28}{:>12}{:>12}", "bound", "exact", "decimal");
    let mut rows = vec![
        ("upper (varying)", &set.upper_xncm),
        ("achievable (varying)", &set.lower_xncm),
        ("upper (external eve)", &set.upper_xncm_ee),
        ("achievable (external eve)", &set.lower_xncm_ee),
    ];
    if let Some(f) = &set.finite_n_achieved {
        rows.push(("achieved at given n", f));
    }
    for (label, value) in rows {
        println!("{label:<28}{:>12}{:>12.6}", value.to_string(), to_f64(value));
    }
    println!("tight (upper = achievable): {}", if set.tight { "yes" } else { "no" });
    if let Some(out) = &args.out {
        fs::write(out, serde_json::to_string_pretty(&set)? + "\n")?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_build(args: &ScenarioArgs) -> Result<ExitCode, Error> {
    let config = args.resolve()?;
    let seed = derive_seed(config.seed, 0);
    let (channels, plan) = ana_core::scenario::build_trial(&config, seed)?;
    let doc = serde_json::json!({
        "config_hash": config.hash(),
        "trial_seed": seed,
        "channels": channels,
        "plan": plan,
    });
    emit(&args.out, &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(args: &ScenarioArgs) -> Result<ExitCode, Error> {
    let config = args.resolve()?;
    let seed = derive_seed(config.seed, 0);
    let (channels, plan) = ana_core::scenario::build_trial(&config, seed)?;
    let options = VerifyOptions {
        containment_tol: config.tolerances.align,
        rank_factor: config.tolerances.rank_factor,
    };
    let report = check_alignment_with(&plan, &channels, &options)?;
    if !report.relations.is_empty() {
        println!("{:<70}{:>12}  status", "relation", "residual");
        for r in &report.relations {
            println!(
                "{:<70}{:>12.3e}  {}",
                r.description,
                r.residual,
                if r.contained { "pass" } else { "FAIL" }
            );
        }
    }
    println!("{:<70}{:>6}{:>10}  status", "matrix", "rank", "expected");
    for r in &report.ranks {
        println!(
            "{:<70}{:>6}{:>10}  {}",
            r.matrix,
            r.numeric_rank,
            r.expected_rank,
            if r.matches() { "pass" } else { "FAIL" }
        );
    }
    println!("overall: {}", if report.overall_pass { "PASS" } else { "FAIL" });
    if let Some(out) = &args.out {
        fs::write(out, serde_json::to_string_pretty(&report)? + "\n")?;
    }
    Ok(if report.overall_pass { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn write_results(args: &ScenarioArgs, results: &[ScenarioResult]) -> Result<ExitCode, Error> {
    let csv = to_csv(results);
    emit(&args.out, &csv)?;
    if let Some(out) = &args.out {
        let json = serde_json::to_string_pretty(results)? + "\n";
        fs::write(json_sidecar(out), json)?;
    }
    let all_passed = results.iter().all(|r| r.trials_passed == r.config.trials);
    for r in results {
        eprintln!(
            "{} M={} K={}{}: {}/{} trials passed, network slope {} (bounds [{:.6}, {:.6}])",
            r.config.scheme,
            r.config.m,
            r.config.k,
            r.config.n.map(|n| format!(" n={n}")).unwrap_or_default(),
            r.trials_passed,
            r.config.trials,
            r.network_slope
                .as_ref()
                .map(|s| format!("{:.6}", s.mean))
                .unwrap_or_else(|| "n/a".into()),
            r.lower_bound,
            r.upper_bound,
        );
    }
    Ok(if all_passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn cmd_run(args: &ScenarioArgs) -> Result<ExitCode, Error> {
    let config = args.resolve()?;
    let result = run_scenario(&config)?;
    write_results(args, std::slice::from_ref(&result))
}

fn parse_vary(raw: &str) -> Result<(VaryParam, Vec<usize>), Error> {
    let (name, values) = raw
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("vary spec {raw:?} is not name=values")))?;
    let param: VaryParam = name.parse()?;
    let values: Vec<usize> = if let Some((lo, hi)) = values.split_once("..") {
        let lo: usize = lo.parse().map_err(|_| Error::Config(format!("bad range in {raw:?}")))?;
        let hi: usize = hi.parse().map_err(|_| Error::Config(format!("bad range in {raw:?}")))?;
        if hi < lo {
            return Err(Error::Config(format!("empty range in {raw:?}")));
        }
        (lo..=hi).collect()
    } else {
        values
            .split(',')
            .map(|v| v.parse().map_err(|_| Error::Config(format!("bad value in {raw:?}"))))
            .collect::<Result<_, _>>()?
    };
    Ok((param, values))
}

fn cmd_sweep(args: &SweepArgs) -> Result<ExitCode, Error> {
    let config = args.scenario.resolve()?;
    let vary = args
        .vary
        .iter()
        .map(|raw| parse_vary(raw))
        .collect::<Result<Vec<_>, _>>()?;
    let results = sweep(&config, &vary)?;
    write_results(&args.scenario, &results)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Bounds(args) => cmd_bounds(args),
        Command::Build(args) => cmd_build(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
