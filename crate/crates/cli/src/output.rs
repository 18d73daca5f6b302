use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crowdctl_core::optimize::{DeltaCell, Evaluation, SearchResult};
use crowdctl_core::{BehaviorSpec, CostKind, Metrics, Scenario, StepView};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::{CliError, CliResult};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Everything needed to reconstruct a run: tool version, command, scenario
/// digest, seed and every parameter in effect.
#[derive(Debug, Clone)]
pub struct Provenance {
    command: String,
    scenario: String,
    sha256: String,
    seed: Option<u64>,
    params: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(command: &str, scenario: &Path, sha256: String, seed: Option<u64>) -> Self {
        Self {
            command: command.to_string(),
            scenario: scenario.display().to_string(),
            sha256,
            seed,
            params: Vec::new(),
        }
    }

    pub fn push(&mut self, key: &str, value: impl Display) {
        self.params.push((key.to_string(), value.to_string()));
    }

    /// Records a behavior spec under `prefix`.
    pub fn behavior(&mut self, prefix: &str, s: &BehaviorSpec) {
        let t_max = s
            .t_max
            .map_or_else(|| "auto".to_string(), |t| t.to_string());
        let slice_dt = s
            .hjb
            .slice_dt
            .map_or_else(|| "h".to_string(), |t| t.to_string());
        let entries: [(&str, String); 17] = [
            ("behavior", s.kind.to_string()),
            ("theta", s.theta.to_string()),
            ("replan_every", s.replan_every.to_string()),
            ("fp_max_iter", s.fp_max_iter.to_string()),
            ("fp_tol", s.fp_tol.to_string()),
            ("fp_damping", s.fp_damping.to_string()),
            ("t_max", t_max),
            ("eps_evac", s.eps_evac.to_string()),
            ("used_exit_frac", s.used_exit_frac.to_string()),
            ("hjb_controls", s.hjb.controls.len().to_string()),
            ("hjb_tol", s.hjb.tol.to_string()),
            ("hjb_max_passes", s.hjb.max_passes.to_string()),
            ("hjb_speed_floor", s.hjb.speed_floor.to_string()),
            ("hjb_slice_dt", slice_dt),
            ("cfl", s.transport.cfl.to_string()),
            ("dt_max_cells", s.transport.dt_max_cells.to_string()),
            ("rho_cap", s.transport.rho_cap.to_string()),
        ];
        for (k, v) in entries {
            self.params.push((format!("{prefix}{k}"), v));
        }
    }

    fn seed_text(&self) -> String {
        self.seed
            .map_or_else(|| "none".to_string(), |s| s.to_string())
    }

    /// Single comment line carried by every output file.
    pub fn header_line(&self) -> String {
        let mut line = format!(
            "# crowdctl {} command={} scenario={} scenario_sha256={} seed={}",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.scenario,
            self.sha256,
            self.seed_text()
        );
        for (k, v) in &self.params {
            line.push_str(&format!(" {k}={v}"));
        }
        line
    }

    pub fn to_json(&self) -> Value {
        let params: serde_json::Map<String, Value> = self
            .params
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        json!({
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "scenario": self.scenario,
            "scenario_sha256": self.sha256,
            "seed": self.seed,
            "params": params,
        })
    }
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Output {
            path: path.to_path_buf(),
            source,
        })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Output {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes a CSV file whose first line is the provenance comment.
fn write_csv(
    path: &Path,
    header: &str,
    columns: &[String],
    rows: impl IntoIterator<Item = Vec<String>>,
) -> CliResult<()> {
    let mut file = create(path)?;
    writeln!(file, "{header}").map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(file);
    let csv_err = |e: csv::Error| CliError::Output {
        path: path.to_path_buf(),
        source: e.into(),
    };
    w.write_record(columns).map_err(csv_err)?;
    for row in rows {
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_json(path: &Path, value: &Value) -> CliResult<()> {
    let mut file = create(path)?;
    let text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    writeln!(file, "{text}").map_err(io_err(path))?;
    file.flush().map_err(io_err(path))
}

fn s(v: impl Display) -> String {
    v.to_string()
}

pub fn write_metrics(
    path: &Path,
    header: &str,
    scenario: &Scenario,
    rows: &[(&str, &BehaviorSpec, &Metrics)],
) -> CliResult<()> {
    let mut columns: Vec<String> = [
        "role",
        "behavior",
        "t_evac",
        "rho_max",
        "used_exits",
        "aborted",
        "total_mass",
        "steps",
    ]
    .map(String::from)
    .to_vec();
    columns.extend(scenario.exits.iter().map(|e| format!("P_{}", e.id)));
    let rows = rows.iter().map(|(role, spec, m)| {
        let mut r = vec![
            s(role),
            s(spec.kind),
            s(m.t_evac),
            s(m.rho_max),
            s(m.used_exits),
            s(m.aborted),
            s(m.total_mass),
            s(m.steps),
        ];
        r.extend(m.exit_counts.iter().map(s));
        r
    });
    write_csv(path, header, &columns, rows)
}

pub fn write_mass_history(path: &Path, header: &str, rows: &[(&str, &Metrics)]) -> CliResult<()> {
    let columns = ["role", "t", "mass"].map(String::from);
    let rows = rows.iter().flat_map(|(role, m)| {
        m.mass_history
            .iter()
            .map(move |(t, n)| vec![s(role), s(t), s(n)])
    });
    write_csv(path, header, &columns, rows)
}

pub fn write_deltas(path: &Path, header: &str, deltas: &[(CostKind, f64)]) -> CliResult<()> {
    let columns = ["cost", "delta"].map(String::from);
    write_csv(
        path,
        header,
        &columns,
        deltas.iter().map(|(k, d)| vec![s(k), s(d)]),
    )
}

pub fn write_delta_map(path: &Path, header: &str, map: &[DeltaCell]) -> CliResult<()> {
    let columns = ["x_O", "y_O", "delta", "admissible"].map(String::from);
    let rows = map
        .iter()
        .map(|c| vec![s(c.x), s(c.y), s(c.delta), s(u8::from(c.admissible))]);
    write_csv(path, header, &columns, rows)
}

pub fn write_evaluations(path: &Path, header: &str, evals: &[Evaluation]) -> CliResult<()> {
    let columns = [
        "step", "rule", "p", "x_O", "y_O", "w", "h_side", "delta", "accepted", "aborted",
    ]
    .map(String::from);
    let opt = |v: Option<String>| v.unwrap_or_default();
    let rows = evals.iter().map(|e| {
        vec![
            s(e.step),
            opt(e.rule.map(|r| s(r.number()))),
            opt(e.p.map(s)),
            s(e.lambda.x),
            s(e.lambda.y),
            s(e.lambda.w),
            s(e.lambda.h),
            opt(e.delta.map(s)),
            s(u8::from(e.accepted)),
            s(u8::from(e.aborted)),
        ]
    });
    write_csv(path, header, &columns, rows)
}

pub fn metrics_json(scenario: &Scenario, m: &Metrics) -> Value {
    let exits: serde_json::Map<String, Value> = scenario
        .exits
        .iter()
        .zip(&m.exit_counts)
        .map(|(e, c)| (e.id.clone(), json!(c)))
        .collect();
    json!({
        "t_evac": m.t_evac,
        "rho_max": m.rho_max,
        "used_exits": m.used_exits,
        "exit_counts": exits,
        "total_mass": m.total_mass,
        "aborted": m.aborted,
        "steps": m.steps,
    })
}

pub fn write_search_summary(
    path: &Path,
    prov: &Provenance,
    scenario: &Scenario,
    natural: &Metrics,
    target: &Metrics,
    r: &SearchResult,
) -> CliResult<()> {
    let admissible = r.evaluations.iter().filter(|e| e.delta.is_some()).count();
    write_json(
        path,
        &json!({
            "provenance": prov.to_json(),
            "natural": metrics_json(scenario, natural),
            "target": metrics_json(scenario, target),
            "lambda_star": r.lambda_star,
            "delta_star": r.delta_star,
            "uncontrolled_delta": r.uncontrolled_delta,
            "evaluations": r.evaluations.len(),
            "admissible_evaluations": admissible,
        }),
    )
}

pub fn metrics_line(label: &str, m: &Metrics) -> String {
    let counts: Vec<String> = m.exit_counts.iter().map(|c| format!("{c:.2}")).collect();
    format!(
        "{label}: t_evac = {:.2} s  rho_max = {:.3} ped/m^2  used_exits = {}  P = [{}]{}",
        m.t_evac,
        m.rho_max,
        m.used_exits,
        counts.join(", "),
        if m.aborted { "  (aborted)" } else { "" }
    )
}

/// Writes `rho_%06d.grid` files every `every` steps.
pub struct SnapshotWriter {
    dir: PathBuf,
    every: usize,
    footer: String,
    error: Option<CliError>,
}

impl SnapshotWriter {
    pub fn new(dir: &Path, every: usize, footer: String) -> Self {
        Self {
            dir: dir.to_path_buf(),
            every,
            footer,
            error: None,
        }
    }

    pub fn observe(&mut self, v: &StepView<'_>) {
        if self.error.is_some() || !v.step.is_multiple_of(self.every) {
            return;
        }
        let path = self.dir.join(format!("rho_{:06}.grid", v.step));
        if let Err(e) = self.write(&path, v) {
            self.error = Some(e);
        }
    }

    fn write(&self, path: &Path, v: &StepView<'_>) -> CliResult<()> {
        let rho = v.physical_density();
        let mut f = create(path)?;
        let mut text = format!("{} {} {} {}\n", rho.nx(), rho.ny(), rho.spacing(), v.time);
        for j in 0..rho.ny() {
            let row: Vec<String> = (0..rho.nx())
                .map(|i| format!("{:.8e}", rho.get(i, j)))
                .collect();
            text.push_str(&row.join(" "));
            text.push('\n');
        }
        text.push_str(&self.footer);
        text.push('\n');
        f.write_all(text.as_bytes()).map_err(io_err(path))?;
        f.flush().map_err(io_err(path))
    }

    pub fn finish(self) -> CliResult<()> {
        self.error.map_or(Ok(()), Err)
    }
}
