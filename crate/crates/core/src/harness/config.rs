//! Flat `key = value` experiment configuration.

use std::path::Path;

use crate::error::{Error, Result};
use crate::feti::{FetiOptions, Preconditioner};
use crate::kernels::{create_kernel, create_strategy, KernelSpec};
use crate::sparse_linalg::Reorthogonalization;

use super::problem::Orientation;

/// Settings for one solve or one study.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kernel: KernelSpec,
    /// Ball strategy; `None` selects the kernel's default.
    pub ball_strategy: Option<String>,
    pub n: usize,
    pub k1: usize,
    pub k2: usize,
    /// `feti`, `cg`, `direct` or `both` (FETI and CG).
    pub solver: String,
    pub feti: FetiOptions,
    pub cg_tol: f64,
    pub cg_maxit: usize,
    /// `single`, `fixed_horizon`, `fixed_ratio` or `strong_scaling`.
    pub study: String,
    pub study_rungs: usize,
    pub orientation: Orientation,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kernel: KernelSpec { family: "constant".into(), delta: 0.0625, s: 0.4 },
            ball_strategy: None,
            n: 32,
            k1: 2,
            k2: 2,
            solver: "feti".into(),
            feti: FetiOptions::default(),
            cg_tol: 1e-10,
            cg_maxit: 100_000,
            study: "single".into(),
            study_rungs: 3,
            orientation: Orientation::Consistent,
        }
    }
}

pub const SOLVER_CHOICES: [&str; 4] = ["feti", "cg", "direct", "both"];
pub const STUDY_CHOICES: [&str; 4] = ["single", "fixed_horizon", "fixed_ratio", "strong_scaling"];

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Parse(format!("invalid value '{value}' for '{key}'")))
}

impl ExperimentConfig {
    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key.trim() {
            "kernel.family" => self.kernel.family = value.to_string(),
            "kernel.delta" => self.kernel.delta = parse_num(key, value)?,
            "kernel.s" => self.kernel.s = parse_num(key, value)?,
            "ball.strategy" => {
                self.ball_strategy = if value.is_empty() || value == "default" { None } else { Some(value.to_string()) }
            }
            "mesh.n" => self.n = parse_num(key, value)?,
            "feti.k1" => self.k1 = parse_num(key, value)?,
            "feti.k2" => self.k2 = parse_num(key, value)?,
            "solver" => self.solver = value.to_string(),
            "feti.tol" => self.feti.tol = parse_num(key, value)?,
            "feti.maxit" => self.feti.maxit = parse_num(key, value)?,
            "feti.preconditioner" => {
                self.feti.preconditioner = match value {
                    "dirichlet" => Preconditioner::Dirichlet,
                    "none" => Preconditioner::None,
                    _ => return Err(Error::Parse(format!("feti.preconditioner must be dirichlet or none, got '{value}'"))),
                }
            }
            "feti.reortho" => {
                self.feti.reortho = match value {
                    "off" => Reorthogonalization::Off,
                    "full" => Reorthogonalization::Full,
                    _ => return Err(Error::Parse(format!("feti.reortho must be off or full, got '{value}'"))),
                }
            }
            "cg.tol" => self.cg_tol = parse_num(key, value)?,
            "cg.maxit" => self.cg_maxit = parse_num(key, value)?,
            "study" => self.study = value.to_string(),
            "study.rungs" => self.study_rungs = parse_num(key, value)?,
            "problem.orientation" => {
                self.orientation = match value {
                    "consistent" => Orientation::Consistent,
                    "as_printed" => Orientation::AsPrinted,
                    _ => {
                        return Err(Error::Parse(format!(
                            "problem.orientation must be consistent or as_printed, got '{value}'"
                        )))
                    }
                }
            }
            other => return Err(Error::Parse(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<()> {
        let (k, v) = pair.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got '{pair}'")))?;
        self.set(k, v)
    }

    /// Parses config text: one `key = value` per line, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            cfg.set_pair(line).map_err(|e| Error::Parse(format!("line {}: {e}", no + 1)))?;
        }
        Ok(cfg)
    }

    /// Reads a config file without validating it, so later overrides can
    /// still repair it.
    pub fn read_unvalidated(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Reads and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let cfg = Self::read_unvalidated(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks every setting against the kernel, mesh and solver rules.
    pub fn validate(&self) -> Result<()> {
        let kernel = create_kernel(&self.kernel)?;
        let strategy = self.ball_strategy.as_deref().unwrap_or(kernel.default_strategy());
        create_strategy(strategy, kernel.ball_norm())?;
        let layer = self.kernel.delta * self.n as f64;
        if self.n < 2 || (layer - layer.round()).abs() > 1e-9 * layer.max(1.0) || layer.round() < 1.0 {
            return Err(Error::Config(format!("delta*n must be a positive integer, got {layer}")));
        }
        if !SOLVER_CHOICES.contains(&self.solver.as_str()) {
            return Err(Error::Config(format!("solver must be one of {SOLVER_CHOICES:?}, got '{}'", self.solver)));
        }
        if !STUDY_CHOICES.contains(&self.study.as_str()) {
            return Err(Error::Config(format!("study must be one of {STUDY_CHOICES:?}, got '{}'", self.study)));
        }
        if self.k1 == 0 || self.k2 == 0 || self.k1 > self.n || self.k2 > self.n {
            return Err(Error::Config(format!("invalid subdomain grid {}x{} for n = {}", self.k1, self.k2, self.n)));
        }
        for (name, tol) in [("feti.tol", self.feti.tol), ("cg.tol", self.cg_tol)] {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0,1), got {tol}")));
            }
        }
        if self.feti.maxit == 0 || self.cg_maxit == 0 || self.study_rungs == 0 {
            return Err(Error::Config("iteration limits and rung counts must be positive".into()));
        }
        Ok(())
    }

    /// Writes the configuration back in the file format.
    pub fn to_text(&self) -> String {
        let pre = match self.feti.preconditioner {
            Preconditioner::Dirichlet => "dirichlet",
            Preconditioner::None => "none",
        };
        let reo = match self.feti.reortho {
            Reorthogonalization::Off => "off",
            Reorthogonalization::Full => "full",
        };
        let orient = match self.orientation {
            Orientation::Consistent => "consistent",
            Orientation::AsPrinted => "as_printed",
        };
        format!(
            "kernel.family = {}\nkernel.delta = {:?}\nkernel.s = {:?}\nball.strategy = {}\nmesh.n = {}\nfeti.k1 = {}\n\
             feti.k2 = {}\nsolver = {}\nfeti.tol = {:e}\nfeti.maxit = {}\nfeti.preconditioner = {pre}\n\
             feti.reortho = {reo}\ncg.tol = {:e}\ncg.maxit = {}\nstudy = {}\nstudy.rungs = {}\nproblem.orientation = {orient}\n",
            self.kernel.family,
            self.kernel.delta,
            self.kernel.s,
            self.ball_strategy.as_deref().unwrap_or("default"),
            self.n,
            self.k1,
            self.k2,
            self.solver,
            self.feti.tol,
            self.feti.maxit,
            self.cg_tol,
            self.cg_maxit,
            self.study,
            self.study_rungs,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let mut c = ExperimentConfig::default();
        c.set_pair("kernel.family=peridynamic").unwrap();
        c.set_pair("feti.reortho=full").unwrap();
        c.set_pair("feti.tol=1e-9").unwrap();
        assert_eq!(ExperimentConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_and_bad_values_fail() {
        assert!(ExperimentConfig::parse("mesh.m = 3").is_err());
        assert!(ExperimentConfig::parse("mesh.n = three").is_err());
        let mut c = ExperimentConfig::default();
        c.n = 33;
        assert!(c.validate().is_err());
    }
}
