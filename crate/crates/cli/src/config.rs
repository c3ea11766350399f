//! TOML run configuration and its canonical hash.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use ppot::acceptance::AcceptanceConfig;
use ppot::penergy::{LinearSolver, SolveMethod, SolverOptions};
use ppot::spaces::SpaceKind;

use crate::report::Failure;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub space: Option<SpaceConfig>,
    pub net: Option<NetConfig>,
    pub scaling: ScalingConfig,
    pub p: Option<f64>,
    pub solver: SolverConfig,
    pub acceptance: AcceptanceConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    pub kind: String,
    pub level: u32,
    pub scale: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    pub epsilon: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    1
}

/// `beta_p` is either a number or the string "estimate".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub d_h: Option<f64>,
    pub beta_p: Option<toml::Value>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub method: Option<SolveMethod>,
    pub linear: Option<LinearSolver>,
    pub reg_floor: Option<f64>,
    pub max_iters: Option<usize>,
    pub tol: Option<f64>,
    pub kkt_tol: Option<f64>,
}

impl SolverConfig {
    pub fn options(&self) -> SolverOptions {
        let d = SolverOptions::default();
        SolverOptions {
            method: self.method.unwrap_or(d.method),
            linear: self.linear.unwrap_or(d.linear),
            reg_floor: self.reg_floor.unwrap_or(d.reg_floor),
            max_iters: self.max_iters.unwrap_or(d.max_iters),
            tol: self.tol.unwrap_or(d.tol),
            kkt_tol: self.kkt_tol.unwrap_or(d.kkt_tol),
            ..d
        }
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))?;
        let cfg: Config = toml::from_str(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), Failure> {
        if let Some(p) = self.p {
            if !(p > 1.0) {
                return Err(Failure::input(format!("p must exceed 1, got {p}")));
            }
        }
        if let Some(s) = &self.space {
            SpaceKind::parse(&s.kind).map_err(|e| Failure::input(e.to_string()))?;
        }
        if let Some(b) = &self.scaling.beta_p {
            match b {
                toml::Value::String(s) if s == "estimate" => {}
                toml::Value::Float(_) | toml::Value::Integer(_) => {}
                _ => return Err(Failure::input("scaling.beta_p must be a number or \"estimate\"")),
            }
        }
        Ok(())
    }

    /// Fixed walk exponent, if one is configured.
    pub fn fixed_beta(&self) -> Option<f64> {
        match &self.scaling.beta_p {
            Some(toml::Value::Float(x)) => Some(*x),
            Some(toml::Value::Integer(i)) => Some(*i as f64),
            _ => None,
        }
    }
}

/// SHA-256 of the canonical JSON form of `value`.
pub fn hash_of<T: Serialize>(value: &T) -> String {
    let text = ppot::canon::to_canonical_json(value, false).unwrap_or_default();
    let digest = Sha256::digest(text.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_key_order_and_spacing() {
        let a: Config = toml::from_str("p = 2.0\n[net]\nepsilon = 0.1\nseed = 3\n").unwrap();
        let b: Config = toml::from_str("[net]\nseed=3\nepsilon=0.1\n\n").unwrap();
        let b = Config { p: Some(2.0), ..b };
        assert_eq!(hash_of(&a), hash_of(&b));
        assert_eq!(hash_of(&a).len(), 64);
    }

    #[test]
    fn rejects_bad_values() {
        let c: Config = toml::from_str("p = 1.0").unwrap();
        assert!(c.validate().is_err());
        let c: Config = toml::from_str("[scaling]\nbeta_p = \"guess\"").unwrap();
        assert!(c.validate().is_err());
        assert!(toml::from_str::<Config>("bogus = 1").is_err());
    }
}
