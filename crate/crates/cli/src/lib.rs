//! `crowdctl`: runs crowd simulations and obstacle searches from scenario files
//! and writes plot-ready CSV tables, density snapshots and JSON summaries.

mod args;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use crowdctl_core::optimize::{
    compass_search, evaluate_cost, exhaustive_search, CompassOptions, ExhaustiveOptions,
};
use crowdctl_core::{
    simulate, simulate_with, AnnealSpec, BehaviorSpec, CostKind, CostSpec, Error, Metrics,
    ObstacleParam, Scenario,
};
use serde_json::json;

pub use args::{
    BehaviorArgs, Cli, Command, CompareArgs, CompassArgs, ExhaustiveArgs, SimulateArgs,
};
use output::{Provenance, SnapshotWriter};

/// Process exit codes.
pub mod exit {
    pub const OK: u8 = 0;
    pub const INPUT: u8 = 2;
    pub const INFEASIBLE: u8 = 3;
    pub const NUMERICAL: u8 = 4;
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Output {
        path: PathBuf,
        source: std::io::Error,
    },
    Usage(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(Error::NoAdmissiblePosition) => exit::INFEASIBLE,
            CliError::Core(Error::NegativeDensity { .. }) => exit::NUMERICAL,
            CliError::Core(_) | CliError::Usage(_) => exit::INPUT,
            CliError::Output { .. } => exit::INPUT,
        }
    }

    /// Module the failure originated in.
    fn module(&self) -> &'static str {
        match self {
            CliError::Core(e) => match e {
                Error::Io { .. }
                | Error::Parse(_)
                | Error::Invalid { .. }
                | Error::Inadmissible => "scenario",
                Error::NoReachableCell => "pathplan",
                Error::NegativeDensity { .. } => "transport",
                Error::NoAdmissiblePosition => "optimize",
            },
            CliError::Output { .. } => "output",
            CliError::Usage(_) => "cli",
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: ", self.module())?;
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Output { path, source } => {
                write!(f, "cannot write {}: {source}", path.display())
            }
            CliError::Usage(m) => f.write_str(m),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Parses the process arguments, runs the command and maps the outcome to an
/// exit code, reporting failures on standard error.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                exit::INPUT
            } else {
                exit::OK
            });
        }
    };
    match run(&cli.command) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cmd: &Command) -> CliResult<()> {
    match cmd {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Compare(a) => cmd_compare(a),
        Command::OptimizeExhaustive(a) => cmd_optimize_exhaustive(a),
        Command::OptimizeCompass(a) => cmd_optimize_compass(a),
    }
}

fn load(path: &Path) -> CliResult<(Scenario, String)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let scenario = crowdctl_core::scenario::parse_scenario(&text)?;
    Ok((scenario, output::sha256_hex(text.as_bytes())))
}

fn prepare_out(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Output {
        path: dir.to_path_buf(),
        source,
    })
}

pub fn cmd_simulate(a: &SimulateArgs) -> CliResult<()> {
    let (s, hash) = load(&a.io.scenario)?;
    let spec = a.behavior.spec(a.behavior.behavior)?;
    prepare_out(&a.io.out)?;
    let mut prov = Provenance::new("simulate", &a.io.scenario, hash, None);
    prov.behavior("", &spec);

    let header = prov.header_line();
    let mut snapshots = a
        .snapshot_every
        .map(|every| SnapshotWriter::new(&a.io.out, every, header.clone()));
    let outcome = simulate_with(&s, &spec, None, &mut |v| {
        if let Some(w) = snapshots.as_mut() {
            w.observe(v);
        }
    })?;
    if let Some(w) = snapshots {
        w.finish()?;
    }
    let m = &outcome.metrics;
    output::write_metrics(
        &a.io.out.join("metrics.csv"),
        &header,
        &s,
        &[("run", &spec, m)],
    )?;
    output::write_mass_history(&a.io.out.join("mass_history.csv"), &header, &[("run", m)])?;
    output::write_json(
        &a.io.out.join("summary.json"),
        &json!({
            "provenance": prov.to_json(),
            "metrics": output::metrics_json(&s, m),
            "horizon_warning": outcome.horizon_warning,
            "unreachable_cells": outcome.unreachable_cells,
            "fixed_point": outcome.fixed_point,
        }),
    )?;
    println!("{}", output::metrics_line(spec.kind.name(), m));
    if outcome.horizon_warning {
        eprintln!("warning: behaviors: time-space horizon too short for part of the domain");
    }
    Ok(())
}

/// Natural and target runs on one scenario.
fn natural_and_target(
    s: &Scenario,
    behavior: &BehaviorArgs,
    target: crowdctl_core::BehaviorKind,
) -> CliResult<(BehaviorSpec, Metrics, BehaviorSpec, Metrics)> {
    let natural = behavior.spec(behavior.behavior)?;
    let target_spec = behavior.spec(target)?;
    let m_n = simulate(s, &natural, None)?.metrics;
    let m_t = simulate(s, &target_spec, None)?.metrics;
    Ok((natural, m_n, target_spec, m_t))
}

pub fn cmd_compare(a: &CompareArgs) -> CliResult<()> {
    let (s, hash) = load(&a.io.scenario)?;
    prepare_out(&a.io.out)?;
    let (natural, m_n, target, m_t) = natural_and_target(&s, &a.behavior, a.target)?;
    let mut prov = Provenance::new("compare", &a.io.scenario, hash, None);
    prov.behavior("natural.", &natural);
    prov.behavior("target.", &target);
    let header = prov.header_line();
    output::write_metrics(
        &a.io.out.join("metrics.csv"),
        &header,
        &s,
        &[("natural", &natural, &m_n), ("target", &target, &m_t)],
    )?;
    output::write_mass_history(
        &a.io.out.join("mass_history.csv"),
        &header,
        &[("natural", &m_n), ("target", &m_t)],
    )?;
    let deltas: Vec<(CostKind, f64)> = CostKind::ALL
        .iter()
        .map(|&k| (k, evaluate_cost(&CostSpec::new(k, m_t.clone()), &m_n)))
        .collect();
    output::write_deltas(&a.io.out.join("delta.csv"), &header, &deltas)?;
    println!("{}", output::metrics_line("natural", &m_n));
    println!("{}", output::metrics_line("target", &m_t));
    for (k, d) in &deltas {
        println!("{k} = {d:.6}");
    }
    Ok(())
}

pub fn cmd_optimize_exhaustive(a: &ExhaustiveArgs) -> CliResult<()> {
    let (s, hash) = load(&a.io.scenario)?;
    prepare_out(&a.io.out)?;
    let (natural, m_n, target, m_t) = natural_and_target(&s, &a.behavior, a.target)?;
    let cost = CostSpec::new(a.cost, m_t.clone());
    let opts = ExhaustiveOptions {
        stride: a.stride,
        jobs: a.jobs,
    };
    let mut prov = Provenance::new("optimize-exhaustive", &a.io.scenario, hash, None);
    prov.behavior("natural.", &natural);
    prov.behavior("target.", &target);
    prov.push("cost", a.cost);
    prov.push("obstacle_w", a.obstacle_w);
    prov.push("obstacle_h", a.obstacle_h);
    prov.push("stride", a.stride);
    let header = prov.header_line();

    let r = exhaustive_search(&s, &natural, (a.obstacle_w, a.obstacle_h), &cost, opts)?;
    if let Some(map) = &r.delta_map {
        output::write_delta_map(&a.io.out.join("delta_map.csv"), &header, map)?;
    }
    output::write_search_summary(&a.io.out.join("summary.json"), &prov, &s, &m_n, &m_t, &r)?;
    println!(
        "lambda* = ({}, {}, {}, {})  delta* = {:.6}  uncontrolled = {:.6}",
        r.lambda_star.x,
        r.lambda_star.y,
        r.lambda_star.w,
        r.lambda_star.h,
        r.delta_star,
        r.uncontrolled_delta
    );
    Ok(())
}

pub fn cmd_optimize_compass(a: &CompassArgs) -> CliResult<()> {
    let (s, hash) = load(&a.io.scenario)?;
    let lambda0 = parse_lambda(&a.lambda0)?;
    prepare_out(&a.io.out)?;
    let anneal = AnnealSpec {
        enabled: !a.no_anneal,
        t0: a.t0,
        cooling: a.cooling,
        rng_seed: a.seed,
    };
    anneal.validate()?;
    let (natural, m_n, target, m_t) = natural_and_target(&s, &a.behavior, a.target)?;
    let cost = CostSpec::new(a.cost, m_t.clone());
    let opts = CompassOptions {
        max_steps: a.max_steps,
        stall_limit: a.stall_limit,
    };
    let mut prov = Provenance::new("optimize-compass", &a.io.scenario, hash, Some(a.seed));
    prov.behavior("natural.", &natural);
    prov.behavior("target.", &target);
    prov.push("cost", a.cost);
    prov.push("lambda0", &a.lambda0);
    prov.push("anneal", anneal.enabled);
    prov.push(
        "anneal_t0",
        anneal
            .t0
            .map_or_else(|| "0.1*delta0".to_string(), |t| t.to_string()),
    );
    prov.push("anneal_cooling", anneal.cooling);
    prov.push("max_steps", opts.max_steps);
    prov.push("stall_limit", opts.stall_limit);
    let header = prov.header_line();

    let r = compass_search(&s, &natural, &lambda0, &cost, &anneal, opts)?;
    output::write_evaluations(&a.io.out.join("evaluations.csv"), &header, &r.evaluations)?;
    output::write_search_summary(&a.io.out.join("summary.json"), &prov, &s, &m_n, &m_t, &r)?;
    println!(
        "lambda* = ({}, {}, {}, {})  delta* = {:.6}  uncontrolled = {:.6}",
        r.lambda_star.x,
        r.lambda_star.y,
        r.lambda_star.w,
        r.lambda_star.h,
        r.delta_star,
        r.uncontrolled_delta
    );
    Ok(())
}

/// Parses `"x,y,w,h"`.
pub fn parse_lambda(text: &str) -> CliResult<ObstacleParam> {
    let v: Vec<f64> = text
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Usage(format!("--lambda0 `{text}`: {e}")))?;
    match v[..] {
        [x, y, w, h] => Ok(ObstacleParam::new(x, y, w, h)),
        _ => Err(CliError::Usage(format!(
            "--lambda0 `{text}`: expected x,y,w,h"
        ))),
    }
}
