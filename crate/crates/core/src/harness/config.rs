use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::frames::FrameSpec;
use crate::linalg::{self, CMatrix};
use crate::quantizer::Alphabet;

/// Post-processing scheme applied to the quantized samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Adapted,
    Alternative,
    /// β noise shaping per block of length `m/k` with the matching β-dual.
    Beta(f64),
    /// Order-`r` ΣΔ with the canonical dual `Φ^†`.
    Canonical,
}

impl Scheme {
    pub fn label(&self) -> String {
        match self {
            Scheme::Adapted => "adapted".into(),
            Scheme::Alternative => "alternative".into(),
            Scheme::Beta(b) => format!("beta({b})"),
            Scheme::Canonical => "canonical".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SignalSource {
    Explicit {
        x: Vec<Complex64>,
    },
    /// `count` signals drawn uniformly from the complex ball whose radius is
    /// the largest one keeping every grid point stable, capped at
    /// `max_magnitude`.
    Random {
        seed: u64,
        #[serde(default)]
        max_magnitude: Option<f64>,
        #[serde(default = "one")]
        count: usize,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub k: usize,
    /// Eigenvalues of the generator `Ω`.
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors; identity when absent. Rows of `[re, im]`.
    #[serde(default)]
    pub eigenvectors: Option<Vec<Vec<Complex64>>>,
    pub phi0: Vec<Complex64>,
    pub r: Vec<usize>,
    pub eta: usize,
    /// Use `η·r` coefficients at order `r` instead of a fixed `η`.
    #[serde(default)]
    pub eta_per_order: bool,
    pub rho: Vec<usize>,
    pub delta: f64,
    #[serde(rename = "L")]
    pub half_len: u32,
    pub signal: SignalSource,
    pub schemes: Vec<Scheme>,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default = "one")]
    pub threads: usize,
}

fn config_err(msg: impl Into<String>) -> HarnessError {
    HarnessError::Config(msg.into())
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| config_err(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.k == 0 {
            return Err(config_err("k must be >= 1"));
        }
        if self.eigenvalues.len() != self.k {
            return Err(config_err(format!(
                "{} eigenvalues given for k = {}",
                self.eigenvalues.len(),
                self.k
            )));
        }
        if self.phi0.len() != self.k {
            return Err(config_err(format!("phi0 has length {}, expected {}", self.phi0.len(), self.k)));
        }
        if let Some(b) = &self.eigenvectors {
            if b.len() != self.k || b.iter().any(|row| row.len() != self.k) {
                return Err(config_err("eigenvectors must be a k x k matrix"));
            }
        }
        if self.r.contains(&0) {
            return Err(config_err("orders must be >= 1"));
        }
        if self.eta == 0 || self.rho.contains(&0) {
            return Err(config_err("eta and rho must be >= 1"));
        }
        if !(self.delta.is_finite() && self.delta > 0.0) {
            return Err(config_err(format!("delta must be positive, got {}", self.delta)));
        }
        if self.half_len == 0 {
            return Err(config_err("L must be >= 1"));
        }
        if self.threads == 0 {
            return Err(config_err("threads must be >= 1"));
        }
        for s in &self.schemes {
            if let Scheme::Beta(b) = s {
                if !(b.is_finite() && *b >= 1.0) {
                    return Err(config_err(format!("beta must be >= 1, got {b}")));
                }
            }
        }
        match &self.signal {
            SignalSource::Explicit { x } if x.len() != self.k => {
                return Err(config_err(format!("signal has length {}, expected {}", x.len(), self.k)))
            }
            SignalSource::Random { count: 0, .. } => return Err(config_err("count must be >= 1")),
            SignalSource::Random {
                max_magnitude: Some(r),
                ..
            } if !(r.is_finite() && *r > 0.0) => {
                return Err(config_err("max_magnitude must be positive"))
            }
            _ => {}
        }
        self.frame_template()?;
        Ok(())
    }

    pub fn alphabet(&self) -> Result<Alphabet, HarnessError> {
        Alphabet::new(self.delta, self.half_len).map_err(|e| config_err(e.to_string()))
    }

    pub fn eta_for(&self, r: usize) -> usize {
        if self.eta_per_order {
            self.eta * r
        } else {
            self.eta
        }
    }

    /// Frame specification with placeholder length 1; use `with_length`.
    pub fn frame_template(&self) -> Result<FrameSpec, HarnessError> {
        let b = self
            .eigenvectors
            .as_ref()
            .map(|rows| {
                CMatrix::new(self.k, self.k, rows.concat()).map_err(|e| config_err(e.to_string()))
            })
            .transpose()?;
        FrameSpec::from_eigen(&self.eigenvalues, b, self.phi0.clone(), 1)
            .map_err(|e| config_err(e.to_string()))
    }

    /// Largest signal norm that keeps every requested scheme and order
    /// stable (`stability_margin ≥ 0`), since `|⟨x, φ_j⟩| ≤ ‖x‖` for unit
    /// `φ0`.
    pub fn stable_radius(&self) -> f64 {
        let delta = self.delta;
        let mut growth: f64 = 0.0;
        for s in &self.schemes {
            match s {
                Scheme::Beta(b) => growth = growth.max(b * delta / 2.0),
                _ => {
                    for &r in &self.r {
                        growth = growth.max((2f64.powi(r as i32) - 1.0) * delta / 2.0);
                    }
                }
            }
        }
        f64::from(self.half_len) * delta - growth
    }

    /// Signals and the radius they were drawn from.
    pub fn signals(&self) -> Result<(Vec<Vec<Complex64>>, f64), HarnessError> {
        match &self.signal {
            SignalSource::Explicit { x } => Ok((vec![x.clone()], linalg::vec_norm2(x))),
            SignalSource::Random {
                seed,
                max_magnitude,
                count,
            } => {
                let mut radius = self.stable_radius();
                if let Some(cap) = max_magnitude {
                    radius = radius.min(*cap);
                }
                if radius <= 0.0 {
                    return Err(config_err(format!(
                        "no stable signal radius: L·delta is too small for the requested orders ({radius})"
                    )));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let signals = (0..*count)
                    .map(|_| random_in_ball(&mut rng, self.k, radius))
                    .collect();
                Ok((signals, radius))
            }
        }
    }
}

/// Uniform sample from the ball of radius `radius` in `C^k`.
pub fn random_in_ball(rng: &mut impl Rng, k: usize, radius: f64) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..k)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let norm = linalg::vec_norm2(&v);
        if norm > 0.0 {
            let scale = radius * rng.random::<f64>().powf(1.0 / (2 * k) as f64) / norm;
            return v.into_iter().map(|z| z * scale).collect();
        }
    }
}
