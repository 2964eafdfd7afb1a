//! Overhead measurement: each manifest input runs under standard evaluation
//! and under whole-program monitoring with each policy.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::Args;
use serde::{Deserialize, Serialize};
use sct_core::reader::source_name;
use sct_core::{load_with_main, run, Config, Mode, Policy};

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Manifest files, or directories searched for `*.json` manifests.
    #[arg(default_value = "corpus/bench")]
    pub paths: Vec<PathBuf>,
    /// Monitoring policy; repeat for several.
    #[arg(long = "policy", default_value = "always")]
    pub policies: Vec<Policy>,
    /// Step ceiling for every run.
    #[arg(long, default_value_t = 10_000_000)]
    pub max_steps: u64,
    /// Print the report as JSON instead of a table.
    #[arg(long)]
    pub json: bool,
    /// Directory to write `bench.csv` and `bench.json` into.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// A program and the expressions to benchmark it on. `file` is relative to
/// the manifest.
#[derive(Debug, Deserialize)]
pub struct Manifest {
    pub file: PathBuf,
    pub inputs: Vec<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct BenchRow {
    pub program: String,
    pub input: String,
    pub policy: String,
    pub standard_steps: u64,
    pub monitored_steps: u64,
    pub standard_cost: u64,
    pub monitored_cost: u64,
    /// Monitored over standard abstract cost.
    pub ratio: f64,
    pub checks: u64,
    pub graphs_built: u64,
    pub standard_wall_us: u128,
    pub monitored_wall_us: u128,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Excluded {
    pub program: String,
    pub input: String,
    pub reason: String,
}

#[derive(Clone, Debug, Default, Serialize, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub excluded: Vec<Excluded>,
}

impl BenchReport {
    pub fn ratio(&self, program: &str, policy: Policy) -> Option<f64> {
        let policy = policy.to_string();
        self.rows
            .iter()
            .find(|r| r.program == program && r.policy == policy)
            .map(|r| r.ratio)
    }

    pub fn to_csv(&self) -> Result<String, String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| e.to_string())?;
        }
        let bytes = w.into_inner().map_err(|e| e.to_string())?;
        String::from_utf8(bytes).map_err(|e| e.to_string())
    }
}

fn manifests(paths: &[PathBuf]) -> Result<Vec<PathBuf>, String> {
    let mut found = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut here: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| format!("{}: {e}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|q| q.extension().is_some_and(|x| x == "json"))
                .collect();
            here.sort();
            found.extend(here);
        } else {
            found.push(p.clone());
        }
    }
    Ok(found)
}

/// Runs every manifest input; inputs that do not finish with a value under
/// standard evaluation are excluded. Any disagreement between monitored and
/// standard answers is an error.
pub fn bench(
    paths: &[PathBuf],
    policies: &[Policy],
    max_steps: u64,
    warn: &mut dyn Write,
) -> Result<BenchReport, String> {
    let mut report = BenchReport::default();
    for path in manifests(paths)? {
        let text = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
        let m: Manifest =
            serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))?;
        let file = path.parent().unwrap_or(Path::new(".")).join(&m.file);
        let source = fs::read_to_string(&file).map_err(|e| format!("{}: {e}", file.display()))?;
        let name = source_name(&file);
        for input in &m.inputs {
            let p = load_with_main(&name, &source, input)
                .map_err(|e| format!("{}: {input}: {e}", file.display()))?;
            let t = Instant::now();
            let std = run(&p, &Config::new(Mode::Standard).max_steps(Some(max_steps)));
            let std_wall = t.elapsed().as_micros();
            let answer = std.answer();
            if answer.value().is_none() {
                let reason = format!("no value under standard evaluation: {answer}");
                let _ = writeln!(warn, "warning: excluding {name} {input}: {reason}");
                report.excluded.push(Excluded {
                    program: name.clone(),
                    input: input.clone(),
                    reason,
                });
                continue;
            }
            for &policy in policies {
                let cfg = Config::new(Mode::MonitorWhole)
                    .policy(policy)
                    .max_steps(Some(max_steps));
                let t = Instant::now();
                let mon = run(&p, &cfg);
                let mon_wall = t.elapsed().as_micros();
                if mon.answer() != answer {
                    return Err(format!(
                        "{name} {input} under {policy}: monitored answer {} differs from {answer}",
                        mon.answer()
                    ));
                }
                let (s, c) = (&std.counters, &mon.counters);
                report.rows.push(BenchRow {
                    program: name.clone(),
                    input: input.clone(),
                    policy: policy.to_string(),
                    standard_steps: s.steps,
                    monitored_steps: c.steps,
                    standard_cost: s.cost(),
                    monitored_cost: c.cost(),
                    ratio: c.cost() as f64 / s.cost().max(1) as f64,
                    checks: c.checks,
                    graphs_built: c.graphs_built,
                    standard_wall_us: std_wall,
                    monitored_wall_us: mon_wall,
                });
            }
        }
    }
    Ok(report)
}

pub fn cmd_bench(a: &BenchArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, String> {
    let report = bench(&a.paths, &a.policies, a.max_steps, err)?;
    let json = serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?;
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir).map_err(|e| format!("{}: {e}", dir.display()))?;
        fs::write(dir.join("bench.csv"), report.to_csv()?).map_err(|e| e.to_string())?;
        fs::write(dir.join("bench.json"), &json).map_err(|e| e.to_string())?;
    }
    let w = |e: std::io::Error| e.to_string();
    if a.json {
        writeln!(out, "{json}").map_err(w)?;
        return Ok(0);
    }
    writeln!(
        out,
        "{:<10} {:<28} {:<10} {:>10} {:>10} {:>7} {:>8}",
        "program", "input", "policy", "std-cost", "mon-cost", "ratio", "checks"
    )
    .map_err(w)?;
    for r in &report.rows {
        writeln!(
            out,
            "{:<10} {:<28} {:<10} {:>10} {:>10} {:>7.3} {:>8}",
            r.program, r.input, r.policy, r.standard_cost, r.monitored_cost, r.ratio, r.checks
        )
        .map_err(w)?;
    }
    Ok(0)
}
