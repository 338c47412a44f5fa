//! Run settings shared by the command line and `--config` files.
//!
//! A config file holds the same fields as the flags (snake_case keys). A
//! report written by any command is also accepted: its `config` object is
//! used. Flags given on the command line win over the file.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    PartialSwap,
    ThreeRelation,
}

/// Tripartite vector feeding the three-relation family.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Psi {
    /// `Φ+` on the first two slots, trivial third slot.
    #[default]
    PhiPlus,
    /// `|0⟩|0⟩|0⟩`.
    Product,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleArg {
    #[default]
    Generic,
    NearPure,
}

impl From<EnsembleArg> for pmlab::certify::Ensemble {
    fn from(e: EnsembleArg) -> Self {
        match e {
            EnsembleArg::Generic => Self::Generic,
            EnsembleArg::NearPure => Self::NearPure,
        }
    }
}

#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Settings {
    /// Filled in on resolution; a mismatching value in a config file is an error.
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,

    /// Process family to construct.
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
    /// Partial-swap mixing parameter in [0, 1].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    /// Local dimension of every party system.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    /// Three real branch amplitudes, comma separated (unit norm).
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    /// Polar angle of the amplitude direction.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    /// Azimuthal angle of the amplitude direction.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    /// Three branch phases in radians, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phases: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psi: Option<Psi>,
    /// Read the process from a PMX1 file instead of constructing it.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,

    /// 6 or 7.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theorem: Option<u8>,
    /// Environment factors standing in for e0 (theorem 6), comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e0: Option<Vec<String>>,
    /// Environment factors standing in for f (theorem 7); searched when absent.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<Vec<String>>,

    /// p sweep as start:stop:step.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    /// θ sweep as start:stop:step.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_grid: Option<String>,
    /// φ sweep as start:stop:step.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_grid: Option<String>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    /// Objective evaluations per restart.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budget: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kept_dim: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ancilla_dim: Option<usize>,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<usize>,
    /// Subsystem dimensions for the lemma suite, comma separated.
    #[arg(long, value_delimiter = ',', num_args = 1)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dims: Option<Vec<usize>>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ensemble: Option<EnsembleArg>,

    /// Run every loop on the calling thread.
    #[arg(long)]
    pub sequential: bool,

    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,

    /// JSON settings file (or a previous report).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

macro_rules! prefer {
    ($cli:ident, $file:ident; $($field:ident),*) => {
        $( if $cli.$field.is_none() { $cli.$field = $file.$field; } )*
    };
}

impl Settings {
    /// Command-line values, then `file` for anything left unset.
    pub fn merged_with(mut self, file: Settings) -> Settings {
        prefer!(self, file; family, p, d, alpha, theta, phi, phases, psi, input, theorem, e0, f,
            grid, theta_grid, phi_grid, seed, restarts, budget, kept_dim, ancilla_dim, trials,
            dims, ensemble, out, format);
        self.sequential |= file.sequential;
        if file.command.is_some() {
            self.command = file.command;
        }
        self
    }

    pub fn load(path: &Path) -> Result<Settings, CliError> {
        let usage = |message: String| CliError::usage("config", message);
        let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        let mut value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
        if let Some(inner) = value.get_mut("config").filter(|v| v.is_object()) {
            value = inner.take();
        }
        serde_path_to_error::deserialize(value).map_err(|e| {
            let field = e.path().to_string();
            let inner = e.into_inner().to_string();
            if field == "." {
                usage(inner)
            } else {
                CliError::usage(field, inner)
            }
        })
    }

    pub fn seed_required(&self, what: &str) -> Result<u64, CliError> {
        self.seed
            .ok_or_else(|| CliError::usage("seed", format!("{what} is randomized and needs an explicit --seed")))
    }
}

/// Parses `start:stop:step` into grid points. The stop value is included
/// when the span is a whole number of steps.
pub fn parse_grid(field: &str, spec: &str) -> Result<Vec<f64>, CliError> {
    let bad = |m: &str| CliError::usage(field, format!("`{spec}`: {m}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad("expected start:stop:step"));
    }
    let mut v = [0.0f64; 3];
    for (slot, text) in v.iter_mut().zip(&parts) {
        *slot = text.trim().parse().map_err(|_| bad("not a number"))?;
    }
    let [start, stop, step] = v;
    if !(start.is_finite() && stop.is_finite() && step.is_finite()) {
        return Err(bad("values must be finite"));
    }
    if step <= 0.0 {
        return Err(bad("step must be positive"));
    }
    if stop < start {
        return Err(bad("stop is below start"));
    }
    let steps = (stop - start) / step;
    let n = if (steps - steps.round()).abs() < 1e-9 {
        steps.round()
    } else {
        steps.floor()
    };
    if n > 1e6 {
        return Err(bad("too many grid points"));
    }
    let n = n as usize;
    let span = n as f64 * step;
    Ok((0..=n).map(|k| start + span * k as f64 / n.max(1) as f64).collect())
}
