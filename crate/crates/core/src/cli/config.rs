use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flow::SolverConfig;
use crate::profile::{ProfileMode, ProfileParams};

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to the built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Complex dimension n ≥ 2.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Bundle twist, 1 ≤ k ≤ n − 1.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Cap constant c > 0.
    #[arg(long, global = true)]
    pub c: Option<f64>,
    /// Half-width of the smoothing band.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// paper-smoothed or knopf-constant.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    #[arg(long = "r-min", global = true, allow_negative_numbers = true)]
    pub r_min: Option<f64>,
    #[arg(long = "r-max", global = true, allow_negative_numbers = true)]
    pub r_max: Option<f64>,
    #[arg(long = "grid-points", global = true)]
    pub grid_points: Option<usize>,
    #[arg(long = "t-end", global = true)]
    pub t_end: Option<f64>,
    /// Comma-separated snapshot times.
    #[arg(long, global = true)]
    pub snapshots: Option<String>,
    #[arg(long = "cfl-safety", global = true)]
    pub cfl_safety: Option<f64>,
    #[arg(long = "out-dir", global = true)]
    pub out_dir: Option<PathBuf>,
    /// Flat key=value file; flags override its entries.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub params: ProfileParams,
    pub mode: ProfileMode,
    pub solver: SolverConfig,
    pub out_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: ProfileParams::default(),
            mode: ProfileMode::PaperSmoothed,
            solver: SolverConfig::default(),
            out_dir: PathBuf::from("out"),
        }
    }
}

fn bad(key: &str, value: &str) -> Error {
    Error::InvalidConfig(format!("cannot parse {key} = '{value}'"))
}

fn parse_times(key: &str, value: &str) -> Result<Vec<f64>> {
    if value.trim().is_empty() {
        return Ok(Vec::new());
    }
    value
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| bad(key, value)))
        .collect()
}

impl RunConfig {
    /// Defaults, then the file named by `--config`, then the flags.
    pub fn resolve(flags: &Overrides) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = &flags.config {
            cfg.apply_file(path)?;
        }
        cfg.apply_flags(flags)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        self.apply_text(&text)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "line {}: expected key = value, got '{raw}'",
                    lineno + 1
                ))
            })?;
            self.set(key.trim(), value.trim())?;
        }
        Ok(())
    }

    /// Sets one entry; keys accept either '-' or '_' as separator.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad(key, v));
        let int = |v: &str| v.parse::<usize>().map_err(|_| bad(key, v));
        match key.replace('_', "-").as_str() {
            "n" => self.params.n = int(value)?,
            "k" => self.params.k = int(value)?,
            "c" => self.params.c = num(value)?,
            "delta" => self.params.delta = num(value)?,
            "mode" => self.mode = value.parse().map_err(|_| bad(key, value))?,
            "r-min" => self.solver.r_min = num(value)?,
            "r-max" => self.solver.r_max = num(value)?,
            "grid-points" => self.solver.m = int(value)?,
            "t-end" => self.solver.t_end = num(value)?,
            "snapshots" => self.solver.snapshot_times = parse_times(key, value)?,
            "cfl-safety" => self.solver.cfl_safety = num(value)?,
            "out-dir" => self.out_dir = PathBuf::from(value),
            other => return Err(Error::InvalidConfig(format!("unknown key '{other}'"))),
        }
        Ok(())
    }

    fn apply_flags(&mut self, f: &Overrides) -> Result<()> {
        if let Some(v) = f.n {
            self.params.n = v;
        }
        if let Some(v) = f.k {
            self.params.k = v;
        }
        if let Some(v) = f.c {
            self.params.c = v;
        }
        if let Some(v) = f.delta {
            self.params.delta = v;
        }
        if let Some(v) = &f.mode {
            self.set("mode", v)?;
        }
        if let Some(v) = f.r_min {
            self.solver.r_min = v;
        }
        if let Some(v) = f.r_max {
            self.solver.r_max = v;
        }
        if let Some(v) = f.grid_points {
            self.solver.m = v;
        }
        if let Some(v) = f.t_end {
            self.solver.t_end = v;
        }
        if let Some(v) = &f.snapshots {
            self.set("snapshots", v)?;
        }
        if let Some(v) = f.cfl_safety {
            self.solver.cfl_safety = v;
        }
        if let Some(v) = &f.out_dir {
            self.out_dir = v.clone();
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.params
            .validate()
            .map_err(|e| Error::InvalidConfig(e.to_string()))?;
        if self.mode == ProfileMode::KnopfConstant && self.params.k != 1 {
            return Err(Error::InvalidConfig(
                "knopf-constant mode requires k = 1".into(),
            ));
        }
        self.solver.validate(&self.params)
    }
}
