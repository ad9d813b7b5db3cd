//! Command-line front end for `quorum-risk`.
//!
//! [`run`] does all the work and returns the text for stdout and stderr
//! together with the exit code: 0 on success, 1 when a target is
//! unattainable or a violating configuration has no witness, 2 on input
//! errors.

pub mod config;
pub mod render;

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use quorum_risk::exact::{
    analyze_dp, enumerate_exact, enumerate_exact_with_cap, random_quorum_contains_correct, AnalysisError,
};
use quorum_risk::fault_model::ProtocolKind;
use quorum_risk::montecarlo::estimate;
use quorum_risk::optimizer::{
    sweep_table_with_reading, OptimizeOutcome, OptimizerError, QuorumRule, QuorumSizes, ReliabilityTarget, SweepRow,
};
use quorum_risk::predicates::{classify, FailureConfiguration, LivenessReading, QuorumSpec};
use quorum_risk::report::{nines, ReliabilityReport};
use quorum_risk::witness::{check_witness, find_liveness_witness, find_safety_witness, ViolationWitness};
use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use config::{default_rule, parse_config, ConfigError, Spec};
use render::{csv_line, markdown_header, markdown_row, p_label, percent, probability};

#[derive(Parser, Debug)]
#[command(name = "quorum-risk", version, about = "Probabilistic safety and liveness of quorum deployments")]
pub struct Cli {
    /// Output format; markdown on a terminal, json otherwise.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Markdown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Count-vector dynamic program.
    Dp,
    /// Brute-force enumeration of every failure configuration.
    Enumerate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Table {
    RaftPaper,
    PbftPaper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Protocol {
    Raft,
    Pbft,
}

impl From<Protocol> for ProtocolKind {
    fn from(p: Protocol) -> Self {
        match p {
            Protocol::Raft => ProtocolKind::Raft,
            Protocol::Pbft => ProtocolKind::Pbft,
        }
    }
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Exact safety and liveness probabilities of a deployment.
    Analyze {
        spec: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Dp)]
        method: Method,
        /// Largest node count the enumeration method accepts.
        #[arg(long)]
        enum_cap: Option<usize>,
        /// Bound Byzantine nodes by q_vc_t - q_vc in the PBFT liveness check.
        #[arg(long)]
        literal_theorem: bool,
    },
    /// Reliability over a grid of sizes and failure probabilities.
    Sweep {
        #[arg(long, value_enum)]
        table: Option<Table>,
        #[arg(long, value_enum)]
        protocol: Option<Protocol>,
        /// Cluster sizes, comma separated.
        #[arg(long, value_delimiter = ',')]
        n: Vec<usize>,
        /// Per-node failure probabilities, comma separated.
        #[arg(long, value_delimiter = ',')]
        p: Vec<f64>,
        /// majority, majority+K, majority-K, threshold, pbft-paper,
        /// fixed:Q_PER,Q_VC or fixed:Q_EQ,Q_PER,Q_VC,Q_VC_T.
        #[arg(long, value_parser = parse_rule)]
        rule: Option<QuorumRule>,
        #[arg(long)]
        literal_theorem: bool,
    },
    /// Cheapest mix of the spec's node classes meeting a target.
    Optimize {
        spec: PathBuf,
        /// A probability such as 0.9997, or a percentage such as 99.97%
        /// compared at its printed precision.
        #[arg(long)]
        target: String,
        #[arg(long, default_value_t = 9)]
        max_n: usize,
        #[arg(long, value_parser = parse_rule)]
        rule: Option<QuorumRule>,
    },
    /// Violating runs for a failure configuration.
    Witness {
        spec: PathBuf,
        /// Node statuses, one letter each: C correct, X crashed, B Byzantine.
        #[arg(long)]
        config: Option<String>,
        #[arg(long)]
        literal_theorem: bool,
    },
    /// Seeded Monte Carlo estimate with standard errors.
    Simulate {
        spec: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        literal_theorem: bool,
    },
}

pub fn parse_rule(s: &str) -> Result<QuorumRule, String> {
    let sizes = |list: &str| -> Result<Vec<usize>, String> {
        list.split(',').map(|x| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"))).collect()
    };
    match s {
        "majority" => Ok(QuorumRule::Majority),
        "threshold" => Ok(QuorumRule::ByzantineThreshold),
        "pbft-paper" => Ok(QuorumRule::pbft_reference_table()),
        _ => {
            if let Some(off) = s.strip_prefix("majority") {
                let off: i64 = off
                    .strip_prefix('+')
                    .unwrap_or(off)
                    .parse()
                    .map_err(|_| format!("bad majority offset in {s:?}"))?;
                return Ok(QuorumRule::MajorityOffset(off));
            }
            match s.strip_prefix("fixed:").map(sizes).transpose()?.as_deref() {
                Some(&[p, v]) => Ok(QuorumRule::Fixed(QuorumSizes::raft(p, v))),
                Some(&[e, p, v, t]) => Ok(QuorumRule::Fixed(QuorumSizes::pbft(e, p, v, t))),
                _ => Err(format!("unknown quorum rule {s:?}")),
            }
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Config(e) => e.kind(),
            CliError::Analysis(_) => "analysis",
            CliError::Optimizer(_) => "optimizer",
            CliError::Usage(_) => "usage",
        }
    }

    fn field(&self) -> Option<&str> {
        match self {
            CliError::Config(e) => e.field(),
            _ => None,
        }
    }
}

/// Rendered result of one invocation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

pub fn run(cli: &Cli, default_format: Format) -> Outcome {
    let format = cli.format.unwrap_or(default_format);
    match dispatch(&cli.command, format) {
        Ok((code, stdout)) => Outcome { code, stdout, stderr: String::new() },
        Err(e) => Outcome { code: 2, stdout: String::new(), stderr: error_text(&e, format) },
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_args<I, T>(args: I, default_format: Format) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli, default_format),
        Err(e) => Outcome { code: if e.use_stderr() { 2 } else { 0 }, stdout: String::new(), stderr: e.to_string() },
    }
}

fn error_text(e: &CliError, format: Format) -> String {
    if format == Format::Json {
        let mut err = json!({"kind": e.kind(), "message": e.to_string()});
        if let Some(f) = e.field() {
            err["field"] = json!(f);
        }
        format!("{}\n", json!({ "error": err }))
    } else {
        format!("error: {e}\n")
    }
}

fn reading(literal: bool) -> LivenessReading {
    if literal {
        LivenessReading::Literal
    } else {
        LivenessReading::Corrected
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable output");
    s.push('\n');
    s
}

fn dispatch(cmd: &Command, format: Format) -> Result<(i32, String), CliError> {
    match cmd {
        Command::Analyze { spec, method, enum_cap, literal_theorem } => {
            let spec = parse_config(spec)?;
            let q = spec.quorums.with_reading(reading(*literal_theorem));
            let report = match (method, enum_cap) {
                (Method::Dp, _) => analyze_dp(&spec.deployment, &q)?,
                (Method::Enumerate, None) => enumerate_exact(&spec.deployment, &q)?,
                (Method::Enumerate, Some(cap)) => enumerate_exact_with_cap(&spec.deployment, &q, *cap)?,
            };
            Ok((0, render_analysis(&spec, report, format)?))
        }
        Command::Sweep { table, protocol, n, p, rule, literal_theorem } => {
            let (protocol, n, p, rule) = sweep_grid(*table, *protocol, n, p, rule.as_ref())?;
            let rows = sweep_table_with_reading(protocol, &n, &rule, &p, reading(*literal_theorem))?;
            Ok((0, render_sweep(protocol, &p, &rows, format)))
        }
        Command::Optimize { spec, target, max_n, rule } => {
            let spec = parse_config(spec)?;
            let classes = spec.node_classes()?;
            let target: ReliabilityTarget = target.parse()?;
            let rule = rule.clone().unwrap_or_else(|| default_rule(spec.protocol));
            let outcome = quorum_risk::optimize_deployment(&classes, target, spec.protocol, *max_n, &rule)?;
            let code = match outcome {
                OptimizeOutcome::Found(_) => 0,
                OptimizeOutcome::Unattainable { .. } => 1,
            };
            let labels: Vec<&str> = classes.iter().map(|c| c.label.as_str()).collect();
            Ok((code, render_optimum(&labels, target, &outcome, format)))
        }
        Command::Witness { spec, config, literal_theorem } => {
            let spec = parse_config(spec)?;
            let q = spec.quorums.with_reading(reading(*literal_theorem));
            let cfg = match config {
                None => FailureConfiguration::all_correct(spec.deployment.len()),
                Some(s) => FailureConfiguration::parse(s)
                    .ok_or_else(|| CliError::Usage(format!("configuration {s:?} must use only C, X and B")))?,
            };
            let class = classify(&cfg, &q).map_err(|e| CliError::Usage(e.to_string()))?;
            witness_report(&cfg, &q, class.safe, class.live, format)
        }
        Command::Simulate { spec, samples, seed, literal_theorem } => {
            let spec = parse_config(spec)?;
            let q = spec.quorums.with_reading(reading(*literal_theorem));
            let report = estimate(&spec.deployment, &q, *samples, *seed)?;
            Ok((0, render_simulation(&report, format)))
        }
    }
}

#[derive(Serialize)]
struct NinesSummary {
    p_safe: Option<u32>,
    p_live: Option<u32>,
    p_safe_and_live: Option<u32>,
}

#[derive(Serialize)]
struct AnalysisOutput<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    description: Option<&'a str>,
    #[serde(flatten)]
    report: &'a ReliabilityReport,
    nines: NinesSummary,
    /// Probability that a uniformly random persistence quorum keeps a surviving member.
    persistence_quorum_durability: f64,
    total_cost: f64,
}

fn render_analysis(spec: &Spec, report: ReliabilityReport, format: Format) -> Result<String, CliError> {
    let durability = random_quorum_contains_correct(&spec.deployment, report.quorums.q_per())?;
    let out = AnalysisOutput {
        description: spec.description.as_deref(),
        report: &report,
        nines: NinesSummary {
            p_safe: nines(report.p_safe),
            p_live: nines(report.p_live),
            p_safe_and_live: nines(report.p_safe_and_live),
        },
        persistence_quorum_durability: durability,
        total_cost: spec.deployment.total_cost(),
    };
    Ok(match format {
        Format::Json => to_json(&out),
        Format::Csv => {
            let mut s = csv_line(["p_safe", "p_live", "p_safe_and_live", "persistence_quorum_durability", "method"]);
            s += &csv_line([
                report.p_safe.to_string(),
                report.p_live.to_string(),
                report.p_safe_and_live.to_string(),
                durability.to_string(),
                method_name(&report),
            ]);
            s
        }
        Format::Markdown => {
            let mut s = format!("## {}\n\n", report.quorums);
            if let Some(d) = &spec.description {
                let _ = writeln!(s, "{d}\n");
            }
            let _ = writeln!(s, "method: {}", method_name(&report));
            if let QuorumSpec::Pbft(p) = report.quorums {
                if p.reading == LivenessReading::Literal {
                    s += "liveness bound: literal (byz <= q_vc_t - q_vc)\n";
                }
            }
            let _ = writeln!(s, "p_safe: {}", probability(report.p_safe));
            let _ = writeln!(s, "p_live: {}", probability(report.p_live));
            let _ = writeln!(s, "p_safe_and_live: {}", probability(report.p_safe_and_live));
            let _ = writeln!(s, "persistence quorum durability: {}", probability(durability));
            s
        }
    })
}

fn method_name(r: &ReliabilityReport) -> String {
    serde_json::to_value(r.method).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default()
}

type Grid = (ProtocolKind, Vec<usize>, Vec<f64>, QuorumRule);

fn sweep_grid(
    table: Option<Table>,
    protocol: Option<Protocol>,
    n: &[usize],
    p: &[f64],
    rule: Option<&QuorumRule>,
) -> Result<Grid, CliError> {
    if let Some(t) = table {
        if protocol.is_some() || !n.is_empty() || !p.is_empty() || rule.is_some() {
            return Err(CliError::Usage("--table cannot be combined with a custom grid".into()));
        }
        return Ok(match t {
            Table::RaftPaper => {
                (ProtocolKind::Raft, vec![3, 5, 7, 9], vec![0.01, 0.02, 0.04, 0.08], QuorumRule::Majority)
            }
            Table::PbftPaper => (ProtocolKind::Pbft, vec![4, 5, 7, 8], vec![0.01], QuorumRule::pbft_reference_table()),
        });
    }
    let protocol: ProtocolKind =
        protocol.ok_or_else(|| CliError::Usage("give --table or --protocol with --n and --p".into()))?.into();
    if p.is_empty() {
        return Err(CliError::Usage("--p needs at least one probability".into()));
    }
    let rule = rule.cloned().unwrap_or_else(|| default_rule(protocol));
    Ok((protocol, n.to_vec(), p.to_vec(), rule))
}

fn render_sweep(protocol: ProtocolKind, p: &[f64], rows: &[SweepRow], format: Format) -> String {
    if format == Format::Json {
        return to_json(&rows);
    }
    let size_cols: &[&str] = match protocol {
        ProtocolKind::Raft => &["n", "q_per", "q_vc"],
        ProtocolKind::Pbft => &["n", "q_eq", "q_per", "q_vc", "q_vc_t"],
    };
    // raft tables report safe-and-live only; safety is structural
    let value_cols: Vec<String> = match (protocol, p.len()) {
        (ProtocolKind::Raft, _) => p.iter().map(|&x| p_label(x)).collect(),
        (ProtocolKind::Pbft, 1) => vec!["safe".into(), "live".into(), "safe_and_live".into()],
        (ProtocolKind::Pbft, _) => {
            p.iter().flat_map(|&x| ["safe", "live", "safe_and_live"].map(|m| format!("{m}_{}", p_label(x)))).collect()
        }
    };
    let sizes = |q: &QuorumSpec| -> Vec<String> {
        let mut v = vec![q.n().to_string()];
        if let Some(e) = q.q_eq() {
            v.push(e.to_string());
        }
        v.push(q.q_per().to_string());
        v.push(q.q_vc().to_string());
        if let Some(t) = q.q_vc_t() {
            v.push(t.to_string());
        }
        v
    };
    let values = |row: &SweepRow, show: &dyn Fn(f64) -> String| -> Vec<String> {
        row.cells
            .iter()
            .flat_map(|c| match protocol {
                ProtocolKind::Raft => vec![show(c.p_safe_and_live)],
                ProtocolKind::Pbft => vec![show(c.p_safe), show(c.p_live), show(c.p_safe_and_live)],
            })
            .collect()
    };
    let header: Vec<String> = size_cols.iter().map(|s| s.to_string()).chain(value_cols).collect();
    let mut out = String::new();
    match format {
        Format::Csv => {
            out += &csv_line(&header);
            for row in rows {
                out += &csv_line(sizes(&row.quorums).into_iter().chain(values(row, &|x| x.to_string())));
            }
        }
        _ => {
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            out += &markdown_header(&header);
            for row in rows {
                out += &markdown_row(sizes(&row.quorums).into_iter().chain(values(row, &percent)));
            }
        }
    }
    out
}

fn render_optimum(labels: &[&str], target: ReliabilityTarget, outcome: &OptimizeOutcome, format: Format) -> String {
    let mix = |counts: &[usize]| -> String {
        labels
            .iter()
            .zip(counts)
            .filter(|(_, &c)| c > 0)
            .map(|(l, c)| format!("{c} x {l}"))
            .collect::<Vec<_>>()
            .join(" + ")
    };
    match format {
        Format::Json => to_json(&json!({
            "target": target,
            "classes": labels,
            "result": outcome,
        })),
        Format::Csv => {
            let mut header = vec!["outcome", "n", "total_cost", "p_safe_and_live"];
            header.extend(labels);
            let mut s = csv_line(&header);
            let (name, best) = match outcome {
                OptimizeOutcome::Found(c) => ("found", Some(c)),
                OptimizeOutcome::Unattainable { best } => ("unattainable", best.as_ref()),
            };
            if let Some(c) = best {
                let mut row = vec![
                    name.to_string(),
                    c.n.to_string(),
                    c.total_cost.to_string(),
                    c.reliability.p_safe_and_live.to_string(),
                ];
                row.extend(c.counts.iter().map(|x| x.to_string()));
                s += &csv_line(row);
            }
            s
        }
        Format::Markdown => {
            let mut s = format!("target: {target}\n");
            match outcome {
                OptimizeOutcome::Found(c) => {
                    let _ = writeln!(s, "best: {} ({})", mix(&c.counts), c.quorums);
                    let _ = writeln!(s, "total cost: {}", c.total_cost);
                    let _ = writeln!(s, "p_safe_and_live: {}", probability(c.reliability.p_safe_and_live));
                }
                OptimizeOutcome::Unattainable { best } => {
                    s += "unattainable\n";
                    if let Some(c) = best {
                        let _ = writeln!(
                            s,
                            "closest: {} at cost {}, p_safe_and_live {}",
                            mix(&c.counts),
                            c.total_cost,
                            probability(c.reliability.p_safe_and_live)
                        );
                    }
                }
            }
            s
        }
    }
}

fn witness_report(
    cfg: &FailureConfiguration,
    q: &QuorumSpec,
    safe: bool,
    live: bool,
    format: Format,
) -> Result<(i32, String), CliError> {
    let mut found: Vec<ViolationWitness> = Vec::new();
    let mut missing: Vec<&str> = Vec::new();
    if !safe {
        match find_safety_witness(cfg, q) {
            Some(w) => found.push(w),
            None => missing.push("safety"),
        }
    }
    if !live {
        match find_liveness_witness(cfg, q) {
            Some(w) => found.push(w),
            None => missing.push("liveness"),
        }
    }
    let checked: Vec<bool> = found.iter().map(check_witness).collect();
    let code = if missing.is_empty() && checked.iter().all(|&c| c) { 0 } else { 1 };
    let text = match format {
        Format::Json => to_json(&json!({
            "configuration": cfg,
            "safe": safe,
            "live": live,
            "witnesses": found,
            "checked": checked,
            "missing": missing,
        })),
        Format::Csv => {
            let mut s = csv_line(["witness", "violation", "step", "actor", "kind", "view", "slot", "value", "target"]);
            for (i, w) in found.iter().enumerate() {
                for e in &w.trace {
                    s += &csv_line([
                        i.to_string(),
                        w.violation_kind.to_string(),
                        e.step.to_string(),
                        e.actor.to_string(),
                        e.kind.name().to_string(),
                        e.view.to_string(),
                        e.slot.to_string(),
                        e.value.to_string(),
                        e.target.map(|t| t.to_string()).unwrap_or_default(),
                    ]);
                }
            }
            s
        }
        Format::Markdown => {
            if safe && live {
                "no witness (configuration classified safe/live)\n".to_string()
            } else {
                let mut s = String::new();
                for (w, ok) in found.iter().zip(&checked) {
                    s += &w.render_trace();
                    let _ = writeln!(s, "check: {}\n", if *ok { "passed" } else { "FAILED" });
                }
                for m in &missing {
                    let _ = writeln!(s, "no {m} witness: no scripted run violates {m} for {cfg} under {q}");
                }
                s
            }
        }
    };
    Ok((code, text))
}

fn render_simulation(r: &ReliabilityReport, format: Format) -> String {
    let se = r.stderr.expect("monte carlo reports carry standard errors");
    let sampling = r.sampling.expect("monte carlo reports carry sampling info");
    match format {
        Format::Json => to_json(r),
        Format::Csv => {
            let mut s = csv_line(["metric", "p_hat", "stderr", "samples", "seed"]);
            for (m, p, e) in [
                ("p_safe", r.p_safe, se.p_safe),
                ("p_live", r.p_live, se.p_live),
                ("p_safe_and_live", r.p_safe_and_live, se.p_safe_and_live),
            ] {
                s += &csv_line([
                    m.to_string(),
                    p.to_string(),
                    e.to_string(),
                    sampling.samples.to_string(),
                    sampling.seed.to_string(),
                ]);
            }
            s
        }
        Format::Markdown => {
            let mut s = format!("## {} (monte carlo)\n\n", r.quorums);
            let _ = writeln!(s, "samples: {}, seed: {}", sampling.samples, sampling.seed);
            for (m, p, e) in [
                ("p_safe", r.p_safe, se.p_safe),
                ("p_live", r.p_live, se.p_live),
                ("p_safe_and_live", r.p_safe_and_live, se.p_safe_and_live),
            ] {
                let _ = writeln!(s, "{m}: {p:.6} ± {e:.6} ({})", percent(p));
            }
            s
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_parse() {
        assert_eq!(parse_rule("majority").unwrap(), QuorumRule::Majority);
        assert_eq!(parse_rule("majority-1").unwrap(), QuorumRule::MajorityOffset(-1));
        assert_eq!(parse_rule("majority+2").unwrap(), QuorumRule::MajorityOffset(2));
        assert_eq!(parse_rule("fixed:3,3,3,2").unwrap(), QuorumRule::Fixed(QuorumSizes::pbft(3, 3, 3, 2)));
        assert_eq!(parse_rule("fixed:2,2").unwrap(), QuorumRule::Fixed(QuorumSizes::raft(2, 2)));
        assert!(parse_rule("fixed:1,2,3").is_err());
        assert!(parse_rule("quorum").is_err());
    }

    #[test]
    fn json_errors_are_single_lines() {
        let e = CliError::Config(ConfigError::UnsupportedProtocol("zab".into()));
        let text = error_text(&e, Format::Json);
        assert_eq!(text.lines().count(), 1);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["error"]["kind"], "unsupported_protocol");
        assert_eq!(v["error"]["field"], "protocol");
    }
}
