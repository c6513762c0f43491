//! Plain-text `key = value` run configuration with CLI `--set` overrides.
//!
//! The format is deliberately schema-free and diffable. Unknown keys and
//! malformed values are validation errors that cite the file line or the
//! offending `--set` argument.

use std::path::PathBuf;

use thiserror::Error;

use crate::field::GridSpec;
use crate::lp::validate_exponents;
use crate::solver::{coefficient_registry, ModelCoefficients, Scheme};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Invalid(String),
    #[error("cannot read config file: {0}")]
    Io(#[from] std::io::Error),
}

/// How the noise slot is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// Seeded white noise, mollified and renormalized.
    White,
    /// A fixed smooth field with `c^ε = 0`; no ε-dependence.
    Smooth,
    /// Zero noise with `c^ε = 0`.
    Zero,
}

impl NoiseMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            NoiseMode::White => "white",
            NoiseMode::Smooth => "smooth",
            NoiseMode::Zero => "zero",
        }
    }
}

/// Everything a harness command needs: solver parameters plus the seed and
/// ε lattice, exponents, coefficient model and output directory.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub n: usize,
    pub t_final: f64,
    /// `None` means the ε-coupled default `min(ε/8, 0.9 h²/(4 a_max))`.
    pub dt: Option<f64>,
    pub eps_list: Vec<f64>,
    pub seeds: Vec<u64>,
    pub alpha: f64,
    pub beta: f64,
    pub model: String,
    pub renormalize: bool,
    pub scheme: Scheme,
    pub stride: usize,
    pub noise_mode: NoiseMode,
    pub outdir: PathBuf,
    /// 0 = rayon default.
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            n: 256,
            t_final: 0.05,
            dt: None,
            eps_list: vec![
                0.5f64.powi(4),
                0.5f64.powi(5),
                0.5f64.powi(6),
                0.5f64.powi(7),
                0.5f64.powi(8),
            ],
            seeds: vec![0, 1, 2, 3, 4],
            alpha: 0.8,
            beta: 0.7,
            model: "sin-cos".to_string(),
            renormalize: true,
            scheme: Scheme::Imex,
            stride: 16,
            noise_mode: NoiseMode::White,
            outdir: PathBuf::from("runs"),
            workers: 0,
        }
    }
}

fn parse_eps_token(tok: &str, at: &str) -> Result<f64, ConfigError> {
    let tok = tok.trim();
    if let Some(rest) = tok.strip_prefix("2^") {
        let exp: i32 = rest
            .parse()
            .map_err(|_| ConfigError::Invalid(format!("{at}: bad dyadic exponent '{tok}'")))?;
        return Ok(2f64.powi(exp));
    }
    tok.parse()
        .map_err(|_| ConfigError::Invalid(format!("{at}: bad eps value '{tok}'")))
}

impl RunConfig {
    /// Apply one `key = value` pair; `at` names the source for error messages
    /// (file line or `--set` argument).
    pub fn apply(&mut self, key: &str, value: &str, at: &str) -> Result<(), ConfigError> {
        let value = value.trim();
        let bad = |what: &str| ConfigError::Invalid(format!("{at}: {what} '{value}'"));
        match key {
            "n" => self.n = value.parse().map_err(|_| bad("bad grid size"))?,
            "t_final" => self.t_final = value.parse().map_err(|_| bad("bad final time"))?,
            "dt" => {
                self.dt = if value == "auto" {
                    None
                } else {
                    Some(value.parse().map_err(|_| bad("bad time step"))?)
                }
            }
            "eps" => {
                let mut list = Vec::new();
                for tok in value.split(',') {
                    list.push(parse_eps_token(tok, at)?);
                }
                self.eps_list = list;
            }
            "seeds" => {
                let mut list = Vec::new();
                for tok in value.split(',') {
                    list.push(
                        tok.trim()
                            .parse()
                            .map_err(|_| bad("bad seed in list"))?,
                    );
                }
                self.seeds = list;
            }
            "alpha" => self.alpha = value.parse().map_err(|_| bad("bad alpha"))?,
            "beta" => self.beta = value.parse().map_err(|_| bad("bad beta"))?,
            "model" => self.model = value.to_string(),
            "renormalize" => {
                self.renormalize = match value {
                    "on" | "true" | "1" => true,
                    "off" | "false" | "0" => false,
                    _ => return Err(bad("bad renormalize flag")),
                }
            }
            "scheme" => {
                self.scheme = Scheme::parse(value).ok_or_else(|| bad("unknown scheme"))?
            }
            "stride" => self.stride = value.parse().map_err(|_| bad("bad stride"))?,
            "noise" => {
                self.noise_mode = match value {
                    "white" => NoiseMode::White,
                    "smooth" => NoiseMode::Smooth,
                    "zero" => NoiseMode::Zero,
                    _ => return Err(bad("unknown noise mode")),
                }
            }
            "outdir" => self.outdir = PathBuf::from(value),
            "workers" => self.workers = value.parse().map_err(|_| bad("bad worker count"))?,
            _ => {
                return Err(ConfigError::Invalid(format!(
                    "{at}: unknown config key '{key}'"
                )))
            }
        }
        Ok(())
    }

    /// Load `key = value` lines from a file. `#` starts a comment; blank
    /// lines are skipped; errors cite `file:line`.
    pub fn load_file(&mut self, path: &std::path::Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path)?;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = format!("{}:{}", path.display(), lineno + 1);
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Invalid(format!("{at}: expected key = value")))?;
            self.apply(key.trim(), value, &at)?;
        }
        Ok(())
    }

    pub fn grid(&self) -> Result<GridSpec, ConfigError> {
        GridSpec::new(self.n).map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn coefficients(&self) -> Result<ModelCoefficients, ConfigError> {
        coefficient_registry(&self.model).ok_or_else(|| {
            ConfigError::Invalid(format!(
                "unknown coefficient model '{}' (registry: const, sin-cos, rational)",
                self.model
            ))
        })
    }

    /// Full validation: grid size, exponent gate, registry membership, and a
    /// dyadic strictly-decreasing ε list.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.grid()?;
        self.coefficients()?;
        validate_exponents(self.alpha, self.beta)
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.eps_list.is_empty() {
            return Err(ConfigError::Invalid("eps list is empty".into()));
        }
        for &eps in &self.eps_list {
            if !(eps > 0.0) {
                return Err(ConfigError::Invalid(format!("eps = {eps} not positive")));
            }
            let m = -eps.log2();
            if (m - m.round()).abs() > 1e-9 {
                return Err(ConfigError::Invalid(format!(
                    "eps = {eps} is not dyadic (2^-m)"
                )));
            }
        }
        for w in self.eps_list.windows(2) {
            if w[1] >= w[0] {
                return Err(ConfigError::Invalid(
                    "eps list must be strictly decreasing".into(),
                ));
            }
        }
        if self.seeds.is_empty() {
            return Err(ConfigError::Invalid("seed list is empty".into()));
        }
        if self.stride == 0 {
            return Err(ConfigError::Invalid("stride must be positive".into()));
        }
        if !(self.t_final > 0.0) {
            return Err(ConfigError::Invalid(format!(
                "t_final = {} not positive",
                self.t_final
            )));
        }
        Ok(())
    }

    /// Echo in the config-file syntax, used by manifests.
    pub fn echo(&self) -> String {
        let eps: Vec<String> = self.eps_list.iter().map(|e| format!("{e:e}")).collect();
        let seeds: Vec<String> = self.seeds.iter().map(|s| s.to_string()).collect();
        format!(
            "n = {}\nt_final = {}\ndt = {}\neps = {}\nseeds = {}\nalpha = {}\nbeta = {}\nmodel = {}\nrenormalize = {}\nscheme = {}\nstride = {}\nnoise = {}\nworkers = {}\n",
            self.n,
            self.t_final,
            self.dt.map_or("auto".to_string(), |d| format!("{d:e}")),
            eps.join(","),
            seeds.join(","),
            self.alpha,
            self.beta,
            self.model,
            if self.renormalize { "on" } else { "off" },
            self.scheme.as_str(),
            self.stride,
            self.noise_mode.as_str(),
            self.workers,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn set_overrides_apply() {
        let mut cfg = RunConfig::default();
        cfg.apply("n", "128", "--set n=128").unwrap();
        cfg.apply("eps", "2^-3,2^-4", "--set").unwrap();
        cfg.apply("renormalize", "off", "--set").unwrap();
        assert_eq!(cfg.n, 128);
        assert_eq!(cfg.eps_list, vec![0.125, 0.0625]);
        assert!(!cfg.renormalize);
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let mut cfg = RunConfig::default();
        let err = cfg.apply("frobnicate", "1", "conf.txt:7").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("conf.txt:7"), "{msg}");
        assert!(msg.contains("frobnicate"), "{msg}");
    }

    #[test]
    fn file_errors_cite_line_numbers() {
        let dir = std::env::temp_dir().join("parapam_cfg_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.conf");
        std::fs::write(&path, "n = 128\nnot a pair\n").unwrap();
        let mut cfg = RunConfig::default();
        let err = cfg.load_file(&path).unwrap_err().to_string();
        assert!(err.contains("bad.conf:2"), "{err}");
    }

    #[test]
    fn config_file_round_trips_through_echo() {
        let dir = std::env::temp_dir().join("parapam_cfg_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("echo.conf");
        let mut cfg = RunConfig::default();
        cfg.apply("n", "64", "t").unwrap();
        cfg.apply("seeds", "7,9", "t").unwrap();
        std::fs::write(&path, cfg.echo()).unwrap();
        let mut back = RunConfig::default();
        back.load_file(&path).unwrap();
        assert_eq!(back.n, 64);
        assert_eq!(back.seeds, vec![7, 9]);
        assert_eq!(back.echo(), cfg.echo());
    }

    #[test]
    fn non_dyadic_eps_rejected() {
        let mut cfg = RunConfig::default();
        cfg.eps_list = vec![0.1];
        assert!(cfg.validate().is_err());
        cfg.eps_list = vec![0.0625, 0.0625];
        assert!(cfg.validate().is_err());
        cfg.eps_list = vec![0.03125, 0.0625];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn exponent_gate_enforced() {
        let mut cfg = RunConfig::default();
        cfg.beta = 0.5;
        let err = cfg.validate().unwrap_err().to_string();
        assert!(err.contains("beta"), "{err}");
    }
}
