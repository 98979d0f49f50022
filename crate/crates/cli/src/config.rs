//! Run configuration: a flat `key = value` file merged with command-line
//! flags (flags win). Both sources go through the same key parser.
//!
//! File grammar, one entry per line:
//!
//! ```text
//! # comment
//! gamma = 15
//! epsilon = 0.2, 0.1, 0.05
//! law = custom
//! nu2 = 0.3
//! ```
//!
//! Keys: gamma, epsilon, law (linear | custom), nu2, nu3, grid_n, grid_l,
//! delta, out, k_order (0 | 1 | 2 | oracle), branch (kdv | nls+ | nls- |
//! gzcs), suite (greens | dno | specfun | extraction), tol. Dashes and
//! underscores are interchangeable; values may be quoted.

use crate::CliError;
use ferrojet::wnl::MagnetizationLaw;
use serde::Serialize;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LawSpec {
    Linear,
    /// Cubic law through s = 1 with nu''(1) = nu2 and nu'''(1) = nu3;
    /// missing values default to the linear law's (1 and 0).
    Custom { nu2: f64, nu3: f64 },
}

impl LawSpec {
    pub fn build(self) -> MagnetizationLaw {
        match self {
            LawSpec::Linear => MagnetizationLaw::linear(),
            LawSpec::Custom { nu2, nu3 } => MagnetizationLaw::cubic(nu2, nu3),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchArg {
    Kdv,
    NlsPlus,
    NlsMinus,
    Gzcs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Greens,
    Dno,
    Specfun,
    Extraction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum KOrder {
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    Oracle,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub gamma: Option<f64>,
    pub law: LawSpec,
    pub epsilon: Vec<f64>,
    pub grid_n: Option<usize>,
    pub grid_l: Option<f64>,
    pub delta: Option<f64>,
    pub out: PathBuf,
    pub k_order: KOrder,
    pub branch: Option<BranchArg>,
    pub suite: Option<Suite>,
    pub tol: Option<f64>,
    #[serde(skip)]
    law_kind: Option<String>,
    #[serde(skip)]
    nu2: Option<f64>,
    #[serde(skip)]
    nu3: Option<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gamma: None,
            law: LawSpec::Linear,
            epsilon: Vec::new(),
            grid_n: None,
            grid_l: None,
            delta: None,
            out: PathBuf::from("ferrojet-out"),
            k_order: KOrder::Two,
            branch: None,
            suite: None,
            tol: None,
            law_kind: None,
            nu2: None,
            nu3: None,
        }
    }
}

fn real(key: &str, v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("{key}: expected a number, got '{v}'"))?;
    if !x.is_finite() {
        return Err(format!("{key}: value must be finite, got '{v}'"));
    }
    Ok(x)
}

impl RunConfig {
    /// Set one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let key = key.trim().replace('-', "_");
        let v = value.trim().trim_matches('"').trim();
        match key.as_str() {
            "gamma" => self.gamma = Some(real("gamma", v)?),
            "epsilon" => {
                self.epsilon = v
                    .split(',')
                    .map(|s| s.trim())
                    .filter(|s| !s.is_empty())
                    .map(|s| real("epsilon", s))
                    .collect::<Result<_, _>>()?;
                if self.epsilon.is_empty() {
                    return Err("epsilon: empty list".into());
                }
            }
            "law" => match v {
                "linear" | "custom" => self.law_kind = Some(v.to_string()),
                _ => return Err(format!("law: expected 'linear' or 'custom', got '{v}'")),
            },
            "nu2" => self.nu2 = Some(real("nu2", v)?),
            "nu3" => self.nu3 = Some(real("nu3", v)?),
            "grid_n" => self.grid_n = Some(v.parse().map_err(|_| format!("grid_n: expected a positive integer, got '{v}'"))?),
            "grid_l" => self.grid_l = Some(real("grid_l", v)?),
            "delta" => self.delta = Some(real("delta", v)?),
            "out" => {
                if v.is_empty() {
                    return Err("out: empty path".into());
                }
                self.out = PathBuf::from(v)
            }
            "k_order" => {
                self.k_order = match v {
                    "0" => KOrder::Zero,
                    "1" => KOrder::One,
                    "2" => KOrder::Two,
                    "oracle" => KOrder::Oracle,
                    _ => return Err(format!("k_order: expected 0, 1, 2 or 'oracle', got '{v}'")),
                }
            }
            "branch" => {
                self.branch = Some(match v {
                    "kdv" => BranchArg::Kdv,
                    "nls+" | "nls_plus" => BranchArg::NlsPlus,
                    "nls-" | "nls_minus" => BranchArg::NlsMinus,
                    "gzcs" => BranchArg::Gzcs,
                    _ => return Err(format!("branch: expected kdv, nls+, nls- or gzcs, got '{v}'")),
                })
            }
            "suite" => {
                self.suite = Some(match v {
                    "greens" => Suite::Greens,
                    "dno" => Suite::Dno,
                    "specfun" => Suite::Specfun,
                    "extraction" => Suite::Extraction,
                    _ => return Err(format!("suite: expected greens, dno, specfun or extraction, got '{v}'")),
                })
            }
            "tol" => self.tol = Some(real("tol", v)?),
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Apply a config document; errors carry the offending line number.
    pub fn apply_document(&mut self, text: &str, origin: &str) -> Result<(), CliError> {
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |msg: String| CliError::Validation(format!("{origin}:{}: {msg}", i + 1));
            let (k, v) = line.split_once('=').ok_or_else(|| at(format!("expected 'key = value', got '{line}'")))?;
            let key = k.trim().replace('-', "_");
            if !seen.insert(key.clone()) {
                return Err(at(format!("duplicate key '{key}'")));
            }
            self.set(&key, v).map_err(at)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read config {}: {e}", path.display())))?;
        self.apply_document(&text, &path.display().to_string())
    }

    /// Resolve the law and validate ranges that do not depend on the command.
    pub fn finish(&mut self) -> Result<(), CliError> {
        let v = |m: String| Err(CliError::Validation(m));
        self.law = match self.law_kind.as_deref() {
            Some("custom") => LawSpec::Custom { nu2: self.nu2.unwrap_or(1.0), nu3: self.nu3.unwrap_or(0.0) },
            _ => {
                if self.nu2.is_some() || self.nu3.is_some() {
                    return v("nu2/nu3 require law = custom".into());
                }
                LawSpec::Linear
            }
        };
        if let Some(g) = self.gamma {
            if !(g > 1.0) {
                return v(format!("gamma must exceed 1, got {g}"));
            }
        }
        for &e in &self.epsilon {
            if !(e > 0.0 && e <= 0.5) {
                return v(format!("epsilon must lie in (0, 0.5], got {e}"));
            }
        }
        if let Some(n) = self.grid_n {
            if n < 16 || !n.is_power_of_two() {
                return v(format!("grid_n must be a power of two >= 16, got {n}"));
            }
        }
        if let Some(l) = self.grid_l {
            if !(l > 0.0) {
                return v(format!("grid_l must be positive, got {l}"));
            }
        }
        if let Some(d) = self.delta {
            if !(d > 0.0) {
                return v(format!("delta must be positive, got {d}"));
            }
        }
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return v(format!("tol must be positive, got {t}"));
            }
        }
        Ok(())
    }

    pub fn require_gamma(&self) -> Result<f64, CliError> {
        self.gamma.ok_or_else(|| CliError::Validation("gamma is required (--gamma or 'gamma = ...')".into()))
    }

    /// Epsilons in decreasing order without duplicates.
    pub fn epsilons_sorted(&self) -> Vec<f64> {
        let mut e = self.epsilon.clone();
        e.sort_by(|a, b| b.partial_cmp(a).unwrap());
        e.dedup();
        e
    }
}
