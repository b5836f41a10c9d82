//! Experiment configuration (TOML). Every field has a default, so an empty
//! file or no file at all is a valid configuration.

use std::path::{Path, PathBuf};

use dnmap_core::linalg::{CVec3, C64};
use dnmap_core::medium::StratifiedProfile;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    FactorCheck,
    Reconstruct,
    LayerStrip,
    Bridge,
    Split,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::FactorCheck => "factor-check",
            Command::Reconstruct => "reconstruct",
            Command::LayerStrip => "layer-strip",
            Command::Bridge => "bridge",
            Command::Split => "split",
            Command::Sweep => "sweep",
        }
    }
}

/// Complex number as `[re, im]`.
pub type Pair = [f64; 2];

pub fn complex(p: Pair) -> C64 {
    C64::new(p[0], p[1])
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub command: Option<Command>,
    /// CSV with header `depth,lambda,mu,rho`; relative paths resolve against the config file.
    pub profile_path: Option<PathBuf>,
    pub profile_order: usize,
    pub medium: Medium,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub grids: Grids,
    pub tolerances: Tolerances,
    pub sweep: SweepConfig,
    pub layer_strip: LayerStripConfig,
    pub bridge: BridgeSection,
    pub split: SplitConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            command: None,
            profile_path: None,
            profile_order: 1,
            medium: Medium::default(),
            seed: 1,
            output_dir: None,
            grids: Grids::default(),
            tolerances: Tolerances::default(),
            sweep: SweepConfig::default(),
            layer_strip: LayerStripConfig::default(),
            bridge: BridgeSection::default(),
            split: SplitConfig::default(),
        }
    }
}

/// Constant medium used when no profile file is given.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Medium {
    pub lambda: f64,
    pub mu: f64,
    pub rho: f64,
    pub depth: f64,
}

impl Default for Medium {
    fn default() -> Self {
        Self { lambda: 2.0, mu: 1.0, rho: 1.0, depth: 1.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Grids {
    /// Tangential frequencies η′.
    pub eta: Vec<Pair>,
    /// Laplace variables τ as `[re, im]`.
    pub tau: Vec<Pair>,
    /// Semiclassical parameters for layer stripping.
    pub h: Vec<f64>,
    /// Depths for reconstruction.
    pub depth: Vec<f64>,
}

impl Default for Grids {
    fn default() -> Self {
        Self { eta: vec![[1.0, 0.0], [0.5, 0.5]], tau: vec![[4.0, 0.0]], h: vec![0.1], depth: vec![0.0] }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub residual: f64,
    pub oracle: f64,
    pub imag_gap: f64,
    pub round_trip: f64,
    pub derivatives: f64,
    pub diagonalization: f64,
    pub completeness: f64,
    /// Required decay constant κ in `residual ~ e^{−κ Re τ T}`.
    pub bridge_kappa: f64,
    pub decay_rate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            residual: 1e-10,
            oracle: 1e-8,
            imag_gap: 1e-10,
            round_trip: 1e-10,
            derivatives: 1e-6,
            diagonalization: 1e-10,
            completeness: 1e-12,
            bridge_kappa: 0.5,
            decay_rate: 0.05,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub n_real: usize,
    pub n_complex: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { n_real: 800, n_complex: 200 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LayerStripConfig {
    pub ds: f64,
    pub steps: usize,
    pub eta_max: Option<f64>,
    pub hermitian_tol: f64,
}

impl Default for LayerStripConfig {
    fn default() -> Self {
        Self { ds: 0.001, steps: 100, eta_max: None, hermitian_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BridgeSection {
    pub horizons: Vec<f64>,
    pub length: f64,
    pub cells: usize,
    pub cfl: f64,
    /// Boundary vector ψ, three `[re, im]` entries.
    pub psi: [Pair; 3],
}

impl Default for BridgeSection {
    fn default() -> Self {
        Self { horizons: vec![2.0, 4.0, 6.0, 8.0], length: 4.0, cells: 400, cfl: 0.8, psi: [[1.0, 0.0], [0.5, 0.0], [0.0, 1.0]] }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    /// Depth samples in units of the decay length h / min Im eig S₀⁺.
    pub depths: Vec<f64>,
    pub psi: [Pair; 3],
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self { depths: (6..=14).map(f64::from).collect(), psi: [[1.0, 0.0], [0.5, 0.0], [0.0, 1.0]] }
    }
}

pub fn vector(p: &[Pair; 3]) -> CVec3 {
    CVec3::new(complex(p[0]), complex(p[1]), complex(p[2]))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).map_err(|e| format!("invalid config {}: {e}", path.display()))?;
        if let (Some(p), Some(dir)) = (&cfg.profile_path, path.parent()) {
            if p.is_relative() {
                cfg.profile_path = Some(dir.join(p));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), String> {
        let g = &self.grids;
        for (name, empty) in [
            ("grids.eta", g.eta.is_empty()),
            ("grids.tau", g.tau.is_empty()),
            ("grids.h", g.h.is_empty()),
            ("grids.depth", g.depth.is_empty()),
        ] {
            if empty {
                return Err(format!("{name} must not be empty"));
            }
        }
        if let Some(t) = g.tau.iter().find(|t| !(t[0] > 0.0)) {
            return Err(format!("grids.tau entry {t:?} must have positive real part"));
        }
        if let Some(h) = g.h.iter().find(|h| !(**h > 0.0)) {
            return Err(format!("grids.h entry {h} must be positive"));
        }
        if self.bridge.horizons.len() < 2 {
            return Err("bridge.horizons needs at least two entries".into());
        }
        if self.split.depths.len() < 2 {
            return Err("split.depths needs at least two entries".into());
        }
        if self.sweep.n_real + self.sweep.n_complex == 0 {
            return Err("sweep must contain at least one draw".into());
        }
        if !(self.layer_strip.ds > 0.0) {
            return Err("layer_strip.ds must be positive".into());
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<StratifiedProfile, String> {
        match &self.profile_path {
            Some(p) => StratifiedProfile::from_csv_path(p, self.profile_order).map_err(|e| format!("profile {}: {e}", p.display())),
            None => {
                let m = &self.medium;
                StratifiedProfile::constant(m.lambda, m.mu, m.rho, m.depth).map_err(|e| format!("medium: {e}"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_uses_defaults() {
        let cfg: ExperimentConfig = toml::from_str("").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.sweep.n_real, 800);
        assert_eq!(cfg.tolerances.residual, 1e-10);
    }

    #[test]
    fn parses_sections() {
        let cfg: ExperimentConfig =
            toml::from_str("command = \"layer-strip\"\nseed = 9\n[grids]\ntau = [[3.0, 1.0]]\n[layer_strip]\nds = 0.01\nsteps = 5\n")
                .unwrap();
        assert_eq!(cfg.command, Some(Command::LayerStrip));
        assert_eq!(cfg.grids.tau, vec![[3.0, 1.0]]);
        assert_eq!(cfg.layer_strip.steps, 5);
    }

    #[test]
    fn example_config_parses() {
        let cfg: ExperimentConfig = toml::from_str(include_str!("../configs/example.toml")).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.command, Some(Command::Split));
        assert_eq!(cfg.split.depths, SplitConfig::default().depths);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(toml::from_str::<ExperimentConfig>("bogus = 1").is_err());
        let cfg: ExperimentConfig = toml::from_str("[grids]\neta = []").unwrap();
        assert!(cfg.validate().is_err());
        let cfg: ExperimentConfig = toml::from_str("[grids]\ntau = [[-1.0, 0.0]]").unwrap();
        assert!(cfg.validate().is_err());
    }
}
