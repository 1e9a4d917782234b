//! Command-line flags, the optional JSON config file, and their merge.
//!
//! The config file uses the flag names with `-` replaced by `_`. A flag given
//! on the command line always overrides the file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "traceineq", version, about = "Verify and search matrix trace inequalities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate an inequality on a seeded random corpus.
    Verify(Flags),
    /// Like `verify`, with local refinement of each sample's worst case.
    Search(Flags),
    /// Finite-difference profile of the auxiliary function E(s).
    Concavity(Flags),
    /// Re-run a stored computation: `lemma2-counterexample` or a witness file.
    Repro {
        target: String,
        #[command(flatten)]
        flags: Flags,
    },
    /// Compare the matrix pipeline with scalar formulas on commuting pairs.
    Oracle(Flags),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Inequality tag, e.g. thm1, thm2-operator, eq3, lemma2.
    #[arg(long)]
    pub inequality: Option<String>,
    /// Matrix dimension (sequence length for lemma2).
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub samples: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Parameter value; repeat for several.
    #[arg(long = "s", allow_negative_numbers = true)]
    pub s: Vec<f64>,
    #[arg(long)]
    pub s_grid_step: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
    /// Lower spectral bound used by the samplers.
    #[arg(long)]
    pub min_eig: Option<f64>,
    #[arg(long)]
    pub workers: Option<usize>,
    #[arg(long)]
    pub refine_steps: Option<usize>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with default values for these flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Treat numerical failures as fatal (exit code 3).
    #[arg(long)]
    pub strict: bool,
    /// Write the campaign's argmin witness to this file.
    #[arg(long)]
    pub emit_witness: Option<PathBuf>,
    /// Sampler kind: spectral_contraction, commuting_pair, ginibre_density, dirichlet_weights.
    #[arg(long)]
    pub sampler: Option<String>,
    /// Emit only the summary record.
    #[arg(long)]
    pub summary_only: bool,
}

/// The config file: every field optional, unknown keys rejected.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub inequality: Option<String>,
    pub dim: Option<usize>,
    pub samples: Option<u64>,
    pub seed: Option<u64>,
    pub s: Option<Vec<f64>>,
    pub s_grid_step: Option<f64>,
    pub tol: Option<f64>,
    pub min_eig: Option<f64>,
    pub workers: Option<usize>,
    pub refine_steps: Option<usize>,
    pub out: Option<PathBuf>,
    pub strict: Option<bool>,
    pub emit_witness: Option<PathBuf>,
    pub sampler: Option<String>,
    pub summary_only: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", path.display())))
    }
}

impl Flags {
    /// Flags win over the config file, if one was given.
    pub fn resolve(self) -> Result<Flags, CliError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = FileConfig::load(&path)?;
        Ok(Flags {
            inequality: self.inequality.or(file.inequality),
            dim: self.dim.or(file.dim),
            samples: self.samples.or(file.samples),
            seed: self.seed.or(file.seed),
            s: if self.s.is_empty() { file.s.unwrap_or_default() } else { self.s },
            s_grid_step: self.s_grid_step.or(file.s_grid_step),
            tol: self.tol.or(file.tol),
            min_eig: self.min_eig.or(file.min_eig),
            workers: self.workers.or(file.workers),
            refine_steps: self.refine_steps.or(file.refine_steps),
            out: self.out.or(file.out),
            config: Some(path),
            strict: self.strict || file.strict.unwrap_or(false),
            emit_witness: self.emit_witness.or(file.emit_witness),
            sampler: self.sampler.or(file.sampler),
            summary_only: self.summary_only || file.summary_only.unwrap_or(false),
        })
    }

    pub fn require_seed(&self, subcommand: &str) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::Usage(format!("{subcommand} requires --seed")))
    }

    pub fn require_inequality(&self, subcommand: &str) -> Result<&str, CliError> {
        self.inequality
            .as_deref()
            .ok_or_else(|| CliError::Usage(format!("{subcommand} requires --inequality")))
    }
}
