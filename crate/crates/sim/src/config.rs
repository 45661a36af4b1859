//! Experiment configuration.
//!
//! The file is flat `key = value` text. `#` starts a comment, lists are
//! comma separated, and a `[joint]` or `[reference]` section holds an inline
//! measure table (one atom per line) that replaces the named instance in
//! the `exponent` and `quantize` modes.
//!
//! | key | modes | meaning |
//! |---|---|---|
//! | `mode` | all | `verify`, `gp`, `wz`, `exponent` or `quantize` |
//! | `instance` | gp, wz, exponent, quantize | built-in instance name |
//! | `n` | all | block lengths (`n_grid` for exponent) |
//! | `k`, `l` | verify, gp, wz | explicit code dimensions |
//! | `rate_multipliers` | gp | `(k+l)` as a multiple of the decoding bound, in (0, 2] |
//! | `enc_margin` | gp | list-rate slack over the encoding bound, bits |
//! | `enc_fraction`, `dec_fraction` | wz | `l` and `k+l` relative to the two bounds |
//! | `p`, `gamma` | verify, quantize | modulus; with `gamma`, a single quantizer |
//! | `eps` | gp, wz, exponent | typicality radius |
//! | `eps_sensitivity` | exponent | extra radii to report |
//! | `trials` | all | trials per point; samples per `n` for exponent |
//! | `seed` | all | master seed |
//! | `workers` | all | worker threads |
//! | `out` | all | output directory |
//! | `first_step`, `last_step` | quantize | refinement schedule |
//! | `clip_levels` | quantize | clipping levels |

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use nestlat::instances;
use nestlat::measures::FiniteMeasure;

use crate::textio::{read_measure, TextError};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Verify,
    Gp,
    Wz,
    Exponent,
    Quantize,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Verify => "verify",
            Mode::Gp => "gp",
            Mode::Wz => "wz",
            Mode::Exponent => "exponent",
            Mode::Quantize => "quantize",
        }
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "verify" => Mode::Verify,
            "gp" => Mode::Gp,
            "wz" => Mode::Wz,
            "exponent" => Mode::Exponent,
            "quantize" => Mode::Quantize,
            other => return Err(format!("unknown mode `{other}`")),
        })
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A configuration problem, located when it came from a file.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}, field `{field}`: {message}")]
    Field { line: usize, field: String, message: String },
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("field `{field}`: {message}")]
    Value { field: String, message: String },
}

fn value_error(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Value { field: field.into(), message: message.into() }
}

pub const DEFAULT_SEED: u64 = 2024;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub instance: String,
    pub n: Vec<usize>,
    pub k: Option<usize>,
    pub l: Option<usize>,
    pub rate_multipliers: Vec<f64>,
    pub enc_margin: f64,
    pub enc_fraction: f64,
    pub dec_fraction: f64,
    pub p: Option<u32>,
    pub gamma: Option<f64>,
    pub eps: f64,
    pub eps_sensitivity: Vec<f64>,
    pub trials: u64,
    pub seed: u64,
    pub workers: Option<usize>,
    pub out: PathBuf,
    pub first_step: u32,
    pub last_step: u32,
    pub clip_levels: Vec<f64>,
    /// Inline joint law, replacing the instance's.
    pub joint: Option<FiniteMeasure>,
    /// Inline reference law `P_Z` (exponent mode).
    pub reference: Option<FiniteMeasure>,
}

impl ExperimentConfig {
    /// Defaults for `mode`, matching the built-in reference experiments.
    pub fn defaults(mode: Mode) -> Self {
        let base = ExperimentConfig {
            mode,
            instance: String::new(),
            n: vec![6, 9, 12],
            k: None,
            l: None,
            rate_multipliers: vec![0.5],
            enc_margin: nestlat::gp::DEFAULT_ENC_MARGIN,
            enc_fraction: 0.9,
            dec_fraction: 1.1,
            p: None,
            gamma: None,
            eps: instances::DEFAULT_EPS,
            eps_sensitivity: Vec::new(),
            trials: 2000,
            seed: DEFAULT_SEED,
            workers: None,
            out: PathBuf::from("out"),
            first_step: 1,
            last_step: 6,
            clip_levels: vec![0.5, 1.0, 2.0, 4.0, 8.0],
            joint: None,
            reference: None,
        };
        match mode {
            Mode::Verify => ExperimentConfig { n: vec![1, 2], k: Some(1), l: Some(1), p: Some(3), trials: 10_000, ..base },
            Mode::Gp => ExperimentConfig { instance: instances::GP_Z3_FLIP01.into(), ..base },
            Mode::Wz => ExperimentConfig { instance: instances::WZ_Z3_FLIP01.into(), ..base },
            Mode::Exponent => ExperimentConfig {
                instance: instances::BINARY_EXPONENT_D1.into(),
                n: vec![8, 12, 16, 20],
                eps: 0.05,
                eps_sensitivity: vec![0.1, 0.2, 0.3],
                trials: 10_000_000,
                ..base
            },
            Mode::Quantize => ExperimentConfig { instance: instances::GAUSS_RHO08.into(), ..base },
        }
    }

    /// Parses a configuration file. `mode` comes from the command line and
    /// must agree with a `mode` key if the file has one.
    pub fn parse(text: &str, mode: Mode) -> Result<Self, ConfigError> {
        let mut cfg = ExperimentConfig::defaults(mode);
        let mut section: Option<(String, usize, String)> = None;
        let mut seen: Vec<String> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if let Some(name) = line.strip_prefix('[') {
                cfg.close_section(section.take())?;
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| ConfigError::Line { line: line_no, message: "unterminated section header".into() })?
                    .trim();
                if name != "joint" && name != "reference" {
                    return Err(ConfigError::Line { line: line_no, message: format!("unknown section `[{name}]`") });
                }
                section = Some((name.to_string(), line_no + 1, String::new()));
                continue;
            }
            if let Some((_, _, body)) = section.as_mut() {
                body.push_str(line);
                body.push('\n');
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Line {
                line: line_no,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(field_error(line_no, key, "duplicate key"));
            }
            seen.push(key.to_string());
            cfg.set(key, value).map_err(|message| field_error(line_no, key, message))?;
        }
        cfg.close_section(section)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn close_section(&mut self, section: Option<(String, usize, String)>) -> Result<(), ConfigError> {
        let Some((name, first_line, body)) = section else { return Ok(()) };
        let measure = read_measure(&body, first_line).map_err(|e| match e {
            TextError::Syntax { line, message } => ConfigError::Field { line, field: name.clone(), message },
            other => ConfigError::Field { line: first_line, field: name.clone(), message: other.to_string() },
        })?;
        if name == "joint" {
            self.joint = Some(measure);
        } else {
            self.reference = Some(measure);
        }
        Ok(())
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "mode" => {
                let mode: Mode = value.parse()?;
                if mode != self.mode {
                    return Err(format!("file is for mode `{mode}` but `{}` was requested", self.mode));
                }
            }
            "instance" => {
                if !instances::NAMES.contains(&value) {
                    return Err(format!("unknown instance `{value}`; built-ins are {}", instances::NAMES.join(", ")));
                }
                self.instance = value.to_string();
            }
            "n" | "n_grid" => self.n = list(value)?,
            "k" => self.k = Some(scalar(value)?),
            "l" => self.l = Some(scalar(value)?),
            "rate_multipliers" => self.rate_multipliers = list(value)?,
            "enc_margin" => self.enc_margin = scalar(value)?,
            "enc_fraction" => self.enc_fraction = scalar(value)?,
            "dec_fraction" => self.dec_fraction = scalar(value)?,
            "p" => self.p = Some(scalar(value)?),
            "gamma" => self.gamma = Some(scalar(value)?),
            "eps" => self.eps = scalar(value)?,
            "eps_sensitivity" => self.eps_sensitivity = list(value)?,
            "trials" | "samples" => self.trials = scalar(value)?,
            "seed" => self.seed = scalar(value)?,
            "workers" => self.workers = Some(scalar(value)?),
            "out" => self.out = PathBuf::from(value),
            "first_step" => self.first_step = scalar(value)?,
            "last_step" => self.last_step = scalar(value)?,
            "clip_levels" => self.clip_levels = list(value)?,
            other => return Err(format!("unknown key `{other}`")),
        }
        Ok(())
    }

    /// Checks the documented invariants.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |field: &str, ok: bool| if ok { Ok(()) } else { Err(value_error(field, "must be positive")) };
        if self.n.is_empty() {
            return Err(value_error("n", "needs at least one block length"));
        }
        positive("n", self.n.iter().all(|&n| n > 0))?;
        positive("trials", self.trials > 0)?;
        positive("eps", self.eps > 0.0 && self.eps.is_finite())?;
        positive("eps_sensitivity", self.eps_sensitivity.iter().all(|&e| e > 0.0 && e.is_finite()))?;
        positive("enc_margin", self.enc_margin >= 0.0 && self.enc_margin.is_finite())?;
        positive("enc_fraction", self.enc_fraction > 0.0 && self.enc_fraction.is_finite())?;
        positive("dec_fraction", self.dec_fraction > 0.0 && self.dec_fraction.is_finite())?;
        positive("workers", self.workers.is_none_or(|w| w > 0))?;
        positive("gamma", self.gamma.is_none_or(|g| g > 0.0 && g.is_finite()))?;
        positive("clip_levels", self.clip_levels.iter().all(|&c| c > 0.0 && c.is_finite()))?;
        if self.rate_multipliers.is_empty() || !self.rate_multipliers.iter().all(|&r| r > 0.0 && r <= 2.0) {
            return Err(value_error("rate_multipliers", "each multiplier must lie in (0, 2]"));
        }
        if let Some(p) = self.p {
            nestlat::zp::PrimeModulus::new(p).map_err(|e| value_error("p", e.to_string()))?;
        }
        if self.k.is_some() != self.l.is_some() {
            return Err(value_error(if self.k.is_some() { "l" } else { "k" }, "`k` and `l` must be given together"));
        }
        if self.first_step == 0 || self.first_step > self.last_step {
            return Err(value_error("first_step", "need 1 <= first_step <= last_step"));
        }
        if self.gamma.is_some() != self.p.is_some() && self.mode == Mode::Quantize {
            return Err(value_error("gamma", "`gamma` and `p` must be given together"));
        }
        let fits = match self.mode {
            Mode::Verify => true,
            Mode::Gp => self.instance == instances::GP_Z3_FLIP01,
            Mode::Wz => self.instance == instances::WZ_Z3_FLIP01,
            Mode::Exponent => self.instance == instances::BINARY_EXPONENT_D1 || self.joint.is_some(),
            Mode::Quantize => self.instance == instances::GAUSS_RHO08 || self.joint.is_some(),
        };
        if !fits {
            return Err(value_error("instance", format!("`{}` is not a {} instance", self.instance, self.mode)));
        }
        if self.mode == Mode::Exponent && self.joint.is_some() != self.reference.is_some() {
            return Err(value_error("joint", "inline exponent setups need both [joint] and [reference]"));
        }
        Ok(())
    }
}

fn field_error(line: usize, field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field { line, field: field.into(), message: message.into() }
}

fn scalar<T: FromStr>(value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("cannot parse `{value}`"))
}

fn list<T: FromStr>(value: &str) -> Result<Vec<T>, String> {
    if value.is_empty() {
        return Ok(Vec::new());
    }
    value.split(',').map(|v| scalar(v.trim())).collect()
}
