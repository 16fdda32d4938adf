//! Experiment settings from a flat `key = value` file, overridden by flags.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::ValueEnum;
use epilim_core::Grid1D;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            _ => Err(CliError::Usage(format!("unknown format {s:?}"))),
        }
    }
}

/// Settings shared by every subcommand. `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ExperimentConfig {
    pub family: Option<String>,
    pub grid: Option<Grid1D>,
    pub slope_grid: Option<Grid1D>,
    pub n: Option<usize>,
    pub tail_start: Option<usize>,
    pub tol: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
    pub curves: Option<PathBuf>,
    pub member: Option<usize>,
    pub lambda: Option<f64>,
    pub x_star: Option<f64>,
    pub input: Option<PathBuf>,
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T, CliError> {
    v.parse()
        .map_err(|_| CliError::Usage(format!("bad value {v:?} for {key}")))
}

fn grid(key: &str, v: &str) -> Result<Grid1D, CliError> {
    Grid1D::parse(v).map_err(|e| CliError::Usage(format!("{key}: {e}")))
}

impl ExperimentConfig {
    /// Parses `key = value` lines; `#` starts a comment. Keys may use `-` or
    /// `_`.
    pub fn parse_str(text: &str) -> Result<Self, CliError> {
        let mut entries = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("config line {}: expected key = value", lineno + 1)))?;
            entries.insert(k.trim().replace('_', "-"), v.trim().to_string());
        }
        let mut c = ExperimentConfig::default();
        for (k, v) in &entries {
            match k.as_str() {
                "family" => c.family = Some(v.clone()),
                "grid" => c.grid = Some(grid(k, v)?),
                "slope-grid" => c.slope_grid = Some(grid(k, v)?),
                "n" => c.n = Some(parse(k, v)?),
                "tail-start" => c.tail_start = Some(parse(k, v)?),
                "tol" => c.tol = Some(parse(k, v)?),
                "format" => c.format = Some(v.parse()?),
                "out" => c.out = Some(PathBuf::from(v)),
                "curves" => c.curves = Some(PathBuf::from(v)),
                "member" => c.member = Some(parse(k, v)?),
                "lambda" => c.lambda = Some(parse(k, v)?),
                "x-star" => c.x_star = Some(parse(k, v)?),
                "input" => c.input = Some(PathBuf::from(v)),
                _ => return Err(CliError::Usage(format!("unknown config key {k:?}"))),
            }
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_str(&text)
    }

    /// Fields set in `flags` win over fields set here.
    pub fn overridden_by(self, flags: ExperimentConfig) -> ExperimentConfig {
        ExperimentConfig {
            family: flags.family.or(self.family),
            grid: flags.grid.or(self.grid),
            slope_grid: flags.slope_grid.or(self.slope_grid),
            n: flags.n.or(self.n),
            tail_start: flags.tail_start.or(self.tail_start),
            tol: flags.tol.or(self.tol),
            format: flags.format.or(self.format),
            out: flags.out.or(self.out),
            curves: flags.curves.or(self.curves),
            member: flags.member.or(self.member),
            lambda: flags.lambda.or(self.lambda),
            x_star: flags.x_star.or(self.x_star),
            input: flags.input.or(self.input),
        }
    }
}
