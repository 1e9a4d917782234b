//! Command-line front end: seeded verification campaigns, counter-example
//! search, concavity profiles, commuting oracles and exact reproductions.
//!
//! Exit codes: 0 completed, 1 violation of an asserted inequality, 2 usage or
//! configuration error, 3 numerical failure.

pub mod report;
pub mod settings;

use std::ffi::OsString;
use std::io::Write;

use clap::Parser;
use thiserror::Error;
use traceineq::ensembles::{sample_ensemble, SamplerConfig, SamplerKind, DEFAULT_MIN_EIGENVALUE};
use traceineq::inequalities::{lemma2_margin, InequalityId};
use traceineq::matcore::STRICT_IMAG_TOL;
use traceineq::oracle::run_oracle;
use traceineq::reliability::{concavity_profile, uniform_grid, DEFAULT_GRID_STEP, DEFAULT_STEP};
use traceineq::search::{
    ensemble_size, histogram_labels, run_campaign, CampaignConfig, CampaignOutput, WitnessRecord,
};

use report::{count_object, float_array, Record};
use settings::{Cli, Command, Flags};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

const DEFAULT_SAMPLES: u64 = 1000;
const DEFAULT_SEARCH_REFINE_STEPS: usize = 20;
const DEFAULT_CONCAVITY_TOL: f64 = 1e-6;
const DEFAULT_ORACLE_DIM: usize = 3;
const DEFAULT_ORACLE_SAMPLES: u64 = 100;
const ORACLE_TOL: f64 = 1e-9;
const REPRO_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Io(_) => EXIT_USAGE,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<traceineq::Error> for CliError {
    fn from(e: traceineq::Error) -> Self {
        use traceineq::Error as E;
        match e {
            E::InvalidConfig(_) | E::UnknownInequality(_) | E::InvalidInput(_) | E::InvalidMatrix(_) => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Numerical(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// The fixed sequences of the published `n = 3` counter-example.
pub const LEMMA2_COUNTEREXAMPLE_T: [f64; 3] = [3.0, 2.0, 1.0];
pub const LEMMA2_COUNTEREXAMPLE_A: [f64; 3] = [2.0 / 3.0, 1.0, 1.5];
pub const LEMMA2_COUNTEREXAMPLE_B: [f64; 3] = [0.5, 4.0, 1.0];
pub const LEMMA2_COUNTEREXAMPLE_S: f64 = 0.5;

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code. Reports go to `out` unless `--out` names a file; diagnostics go
/// to `err`.
pub fn execute<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{}", e.render());
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{}", e.render());
                    EXIT_USAGE
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

/// Report lines for one invocation, flushed to the chosen sink at the end.
struct Report {
    lines: Vec<String>,
}

impl Report {
    fn new() -> Self {
        Self { lines: Vec::new() }
    }

    fn push(&mut self, r: Record) {
        self.lines.push(r.render());
    }

    fn flush(self, flags: &Flags, out: &mut dyn Write) -> Result<(), CliError> {
        let mut text = self.lines.join("\n");
        text.push('\n');
        match &flags.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?,
            None => out.write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

fn dispatch(command: Command, out: &mut dyn Write) -> Result<i32, CliError> {
    match command {
        Command::Verify(flags) => campaign(flags.resolve()?, "verify", out),
        Command::Search(flags) => campaign(flags.resolve()?, "search", out),
        Command::Concavity(flags) => concavity(flags.resolve()?, out),
        Command::Repro { target, flags } => repro(&target, flags.resolve()?, out),
        Command::Oracle(flags) => oracle(flags.resolve()?, out),
    }
}

/// Violations only fail the run for inequalities that are claimed to hold.
pub fn outcome_code(asserted: bool, violations: u64) -> i32 {
    if asserted && violations > 0 {
        EXIT_VIOLATION
    } else {
        EXIT_OK
    }
}

fn check_tol(tol: f64) -> Result<f64, CliError> {
    if tol >= 0.0 && tol.is_finite() {
        Ok(tol)
    } else {
        Err(CliError::Usage(format!("--tol must be a nonnegative number, got {tol}")))
    }
}

fn s_values(flags: &Flags) -> Result<Option<Vec<f64>>, CliError> {
    if !flags.s.is_empty() {
        return Ok(Some(flags.s.clone()));
    }
    match flags.s_grid_step {
        Some(step) => Ok(Some(uniform_grid(step)?)),
        None => Ok(None),
    }
}

fn parse_inequality(tag: &str) -> Result<InequalityId, CliError> {
    InequalityId::parse(tag).map_err(|e| {
        let valid: Vec<&str> = InequalityId::ALL.iter().map(|i| i.tag()).collect();
        CliError::Usage(format!("{e}; expected one of: {}", valid.join(", ")))
    })
}

/// Builds the campaign configuration for `verify` and `search`.
pub fn campaign_config(flags: &Flags, subcommand: &str) -> Result<CampaignConfig, CliError> {
    let id = parse_inequality(flags.require_inequality(subcommand)?)?;
    let seed = flags.require_seed(subcommand)?;
    let dim = flags.dim.unwrap_or(2);
    let samples = flags.samples.unwrap_or(DEFAULT_SAMPLES);
    let mut cfg = CampaignConfig::new(id, dim, samples, seed);
    if let Some(s) = s_values(flags)? {
        if !id.uses_s() {
            return Err(CliError::Usage(format!("{id} does not take s values")));
        }
        cfg.s_values = s;
    }
    if let Some(tol) = flags.tol {
        cfg.tolerance = check_tol(tol)?;
    }
    cfg.refine_steps = flags
        .refine_steps
        .unwrap_or(if subcommand == "search" { DEFAULT_SEARCH_REFINE_STEPS } else { 0 });
    if let Some(kind) = &flags.sampler {
        cfg.sampler.kind = SamplerKind::parse(kind)?;
    }
    if let Some(m) = flags.min_eig {
        cfg.sampler.min_eigenvalue = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn campaign(flags: Flags, subcommand: &str, out: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = campaign_config(&flags, subcommand)?;
    let CampaignOutput { result, records } = run_campaign(&cfg, flags.workers.unwrap_or(1))?;
    let id = cfg.inequality;
    let kind = id.kind().tag();
    let mut report = Report::new();
    if !flags.summary_only {
        for r in &records {
            report.push(
                Record::new()
                    .str("inequality", id.tag())
                    .opt_float("s", r.s)
                    .uint("dim", cfg.dim as u64)
                    .uint("seed", cfg.seed)
                    .uint("index", r.index)
                    .opt_float("margin", r.margin)
                    .str("kind", kind)
                    .float("imag_residual", r.imag_residual)
                    .str("status", r.status.label())
                    .bool("refined", r.refined)
                    .str("fingerprint", format!("{:016x}", r.fingerprint)),
            );
        }
    }
    let asserted = id.is_asserted(cfg.dim);
    let labels = histogram_labels();
    let histogram = count_object(labels.iter().map(String::as_str).zip(result.histogram.iter().copied()));
    let skipped = count_object(result.skipped.iter().map(|(k, v)| (k.as_str(), *v)));
    let witness = result.argmin_witness.as_ref();
    report.push(
        Record::new()
            .str("summary", subcommand)
            .str("inequality", id.tag())
            .uint("dim", cfg.dim as u64)
            .uint("seed", cfg.seed)
            .uint("samples", cfg.samples)
            .raw("s_values", float_array(&cfg.s_values))
            .float("tolerance", cfg.tolerance)
            .uint("refine_steps", cfg.refine_steps as u64)
            .str("sampler", cfg.sampler.kind.name())
            .bool("asserted", asserted)
            .float("min_margin", result.min_margin)
            .uint("violations", result.violations)
            .uint("near_violations", result.near_violations)
            .uint("evaluated", result.evaluated)
            .uint("skipped", result.skipped_total())
            .raw("skipped_reasons", skipped)
            .float("max_imag_residual", result.max_imag_residual)
            .opt_uint("argmin_index", witness.map(|w| w.index))
            .opt_float("argmin_s", witness.and_then(|w| w.s))
            .raw("histogram", histogram),
    );
    if let (Some(path), Some(w)) = (&flags.emit_witness, witness) {
        let json = serde_json::to_string(w).map_err(|e| CliError::Io(e.to_string()))?;
        std::fs::write(path, json + "\n")
            .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
    }
    report.flush(&flags, out)?;
    if flags.strict && (result.skipped_total() > 0 || result.max_imag_residual > STRICT_IMAG_TOL) {
        return Err(CliError::Numerical(format!(
            "{} evaluations failed, max imaginary residual {:e}",
            result.skipped_total(),
            result.max_imag_residual
        )));
    }
    Ok(outcome_code(asserted, result.violations))
}

fn concavity(flags: Flags, out: &mut dyn Write) -> Result<i32, CliError> {
    let dim = flags.dim.unwrap_or(2);
    let seed = flags.seed.unwrap_or(0);
    let samples = flags.samples.unwrap_or(DEFAULT_SAMPLES);
    let tol = check_tol(flags.tol.unwrap_or(DEFAULT_CONCAVITY_TOL))?;
    let grid = match s_values(&flags)? {
        Some(g) => g,
        None => uniform_grid(DEFAULT_GRID_STEP)?,
    };
    let sampler = SamplerConfig::new(SamplerKind::GinibreDensity, dim, seed)
        .with_min_eigenvalue(flags.min_eig.unwrap_or(DEFAULT_MIN_EIGENVALUE));
    sampler.validate()?;
    let asserted = dim <= 2;
    let mut report = Report::new();
    let (mut evaluated, mut violations, mut skipped) = (0u64, 0u64, 0u64);
    let mut max_second = f64::NEG_INFINITY;
    for index in 0..samples {
        let a = ensemble_size(index);
        let profile = sample_ensemble(&sampler, a, index)
            .and_then(|ens| concavity_profile(&ens, &grid, DEFAULT_STEP));
        let profile = match profile {
            Ok(p) => p,
            Err(e) if matches!(e, traceineq::Error::InvalidInput(_)) => return Err(e.into()),
            Err(e) => {
                skipped += 1;
                if !flags.summary_only {
                    report.push(
                        Record::new()
                            .str("inequality", "concavity")
                            .uint("dim", dim as u64)
                            .uint("seed", seed)
                            .uint("index", index)
                            .str("status", format!("skipped:{}", e.reason())),
                    );
                }
                continue;
            }
        };
        evaluated += 1;
        for k in 0..grid.len() {
            let d = profile.second_differences[k];
            max_second = max_second.max(d);
            let bad = d > tol;
            violations += bad as u64;
            if !flags.summary_only {
                report.push(
                    Record::new()
                        .str("inequality", "concavity")
                        .float("s", grid[k])
                        .uint("dim", dim as u64)
                        .uint("seed", seed)
                        .uint("index", index)
                        .uint("ensemble_size", a as u64)
                        .float("E", profile.e_values[k])
                        .float("second_difference", d)
                        .str("status", if bad { "nonconcave" } else { "ok" }),
                );
            }
        }
    }
    report.push(
        Record::new()
            .str("summary", "concavity")
            .uint("dim", dim as u64)
            .uint("seed", seed)
            .uint("samples", samples)
            .float("h", DEFAULT_STEP)
            .float("tolerance", tol)
            .bool("asserted", asserted)
            .float("max_second_difference", max_second)
            .uint("violations", violations)
            .uint("evaluated", evaluated)
            .uint("skipped", skipped),
    );
    report.flush(&flags, out)?;
    if flags.strict && skipped > 0 {
        return Err(CliError::Numerical(format!("{skipped} ensembles failed")));
    }
    Ok(outcome_code(asserted, violations))
}

fn repro(target: &str, flags: Flags, out: &mut dyn Write) -> Result<i32, CliError> {
    let mut report = Report::new();
    if target == "lemma2-counterexample" {
        let (t, a, b) = (LEMMA2_COUNTEREXAMPLE_T, LEMMA2_COUNTEREXAMPLE_A, LEMMA2_COUNTEREXAMPLE_B);
        let eval = lemma2_margin(&t, &a, &b, LEMMA2_COUNTEREXAMPLE_S)?;
        let sum = |f: &dyn Fn(usize) -> f64| (0..3).map(f).sum::<f64>();
        report.push(
            Record::new()
                .str("repro", target)
                .raw("t", float_array(&t))
                .raw("a", float_array(&a))
                .raw("b", float_array(&b))
                .float("s", LEMMA2_COUNTEREXAMPLE_S)
                .float("lhs", eval.lhs)
                .float("rhs", eval.rhs)
                .float("margin", eval.margin)
                .float("cond_i", eval.cond_i)
                .float("cond_ii", eval.cond_ii)
                .float("sum_t_a", sum(&|k| t[k] * a[k]))
                .float("sum_b", sum(&|k| b[k]))
                .float("sum_a", sum(&|k| a[k]))
                .float("sum_b_over_t", sum(&|k| b[k] / t[k])),
        );
        report.flush(&flags, out)?;
        return Ok(EXIT_OK);
    }
    let text = std::fs::read_to_string(target).map_err(|e| {
        CliError::Usage(format!(
            "unknown repro target '{target}' (expected lemma2-counterexample or a witness file): {e}"
        ))
    })?;
    let witness: WitnessRecord = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("invalid witness file {target}: {e}")))?;
    let id = parse_inequality(&witness.inequality)?;
    let m = witness.reevaluate()?;
    let discrepancy = (m.value - witness.margin).abs();
    let reproduced = discrepancy <= REPRO_TOL;
    report.push(
        Record::new()
            .str("repro", "witness")
            .str("inequality", id.tag())
            .opt_float("s", witness.s)
            .uint("index", witness.index)
            .float("recorded_margin", witness.margin)
            .float("margin", m.value)
            .float("discrepancy", discrepancy)
            .str("kind", id.kind().tag())
            .float("imag_residual", m.imag_residual)
            .str("status", if reproduced { "reproduced" } else { "mismatch" }),
    );
    report.flush(&flags, out)?;
    if flags.strict && !reproduced {
        return Err(CliError::Numerical(format!("witness re-evaluates {discrepancy:e} away")));
    }
    Ok(EXIT_OK)
}

fn oracle(flags: Flags, out: &mut dyn Write) -> Result<i32, CliError> {
    let dim = flags.dim.unwrap_or(DEFAULT_ORACLE_DIM);
    let seed = flags.seed.unwrap_or(0);
    let samples = flags.samples.unwrap_or(DEFAULT_ORACLE_SAMPLES);
    let s = s_values(&flags)?.unwrap_or_else(|| vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    let tol = check_tol(flags.tol.unwrap_or(ORACLE_TOL))?;
    let checks = run_oracle(dim, samples, seed, &s, flags.min_eig.unwrap_or(DEFAULT_MIN_EIGENVALUE))?;
    let mut report = Report::new();
    let mut failing = 0u64;
    let mut worst = 0.0f64;
    for c in &checks {
        let ok = c.max_rel_discrepancy <= tol;
        failing += !ok as u64;
        worst = worst.max(c.max_rel_discrepancy);
        if !flags.summary_only {
            report.push(
                Record::new()
                    .str("check", c.name.clone())
                    .uint("dim", dim as u64)
                    .uint("seed", seed)
                    .uint("evaluated", c.evaluated)
                    .float("max_abs_discrepancy", c.max_abs_discrepancy)
                    .float("max_rel_discrepancy", c.max_rel_discrepancy)
                    .str("status", if ok { "ok" } else { "discrepancy" }),
            );
        }
    }
    report.push(
        Record::new()
            .str("summary", "oracle")
            .uint("dim", dim as u64)
            .uint("seed", seed)
            .uint("samples", samples)
            .float("tolerance", tol)
            .float("max_rel_discrepancy", worst)
            .uint("failing_checks", failing),
    );
    report.flush(&flags, out)?;
    if flags.strict && failing > 0 {
        return Err(CliError::Numerical(format!("{failing} oracle checks exceed {tol:e}")));
    }
    Ok(EXIT_OK)
}
