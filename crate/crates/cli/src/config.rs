//! Experiment definitions.
//!
//! A config is one JSON or TOML file. Every sweep axis is a list; the grid is
//! their Cartesian product (combinations with `W >= S` are skipped).

use std::path::Path;

use serde::{Deserialize, Serialize};

use segsr_core::pipeline::SolverKind;
use segsr_core::radar::RadarConfig;
use segsr_core::solvers::{SolverParams, Zeta};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Named radar presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// `Np = 100`, `R = 5`, `P = 10`: the direct solve takes seconds.
    #[default]
    Desk,
    /// `Np = 1000`, `R = 5`, `P = 10`.
    Paper,
    /// `Np = 6`, `R = 2`, `P = 6`: exhaustive isometry constants are cheap.
    Small,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseShape {
    #[default]
    Lfm,
    Constant,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarSection {
    pub bandwidth_hz: Option<f64>,
    pub np: Option<usize>,
    pub downsample_ratio: Option<usize>,
    pub pulses: Option<usize>,
    #[serde(default)]
    pub pulse: PulseShape,
    /// Scale the pulse to unit energy.
    #[serde(default)]
    pub unit_energy: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSection {
    /// Occupancy probabilities to sweep.
    #[serde(default)]
    pub p: Vec<f64>,
    /// Fixed `(index, amplitude)` targets; replaces the `p` axis.
    #[serde(default)]
    pub targets: Option<Vec<(usize, f64)>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Input SNRs in dB; empty together with `n0` means noiseless.
    #[serde(default)]
    pub isnr_db: Vec<f64>,
    /// One-sided noise densities.
    #[serde(default)]
    pub n0: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub methods: Vec<SolverKind>,
    #[serde(default = "default_zeta1")]
    pub zeta1: Zeta,
    #[serde(default = "default_zeta2")]
    pub zeta2: Zeta,
    #[serde(default)]
    pub max_atoms: Option<usize>,
}

fn default_zeta1() -> Zeta {
    SolverParams::default().zeta1
}

fn default_zeta2() -> Zeta {
    SolverParams::default().zeta2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub segment_pulses: Vec<usize>,
    #[serde(default = "default_slide")]
    pub slide_pulses: Vec<usize>,
}

fn default_slide() -> Vec<usize> {
    vec![1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub profile: Profile,
    #[serde(default)]
    pub radar: RadarSection,
    pub scene: SceneSection,
    #[serde(default)]
    pub noise: NoiseSection,
    pub solver: SolverSection,
    pub sweep: SweepSection,
    pub trials: usize,
    pub seed: u64,
    /// Segment whose virtual noise and block errors are recorded.
    #[serde(default = "default_probe")]
    pub probe_segment: usize,
    /// Figure tables written next to the raw CSVs.
    #[serde(default)]
    pub figures: Vec<String>,
}

fn default_probe() -> usize {
    2
}

/// Noise condition of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseCell {
    Noiseless,
    Isnr(f64),
    N0(f64),
}

impl NoiseCell {
    pub fn isnr_db(self) -> Option<f64> {
        match self {
            NoiseCell::Isnr(v) => Some(v),
            _ => None,
        }
    }

    pub fn n0(self) -> Option<f64> {
        match self {
            NoiseCell::N0(v) => Some(v),
            _ => None,
        }
    }

    /// Bit pattern used in seed derivation.
    pub fn seed_key(self) -> u64 {
        match self {
            NoiseCell::Noiseless => 0,
            NoiseCell::Isnr(v) => v.to_bits() ^ 0x1,
            NoiseCell::N0(v) => v.to_bits() ^ 0x2,
        }
    }
}

/// One point of the sweep grid. Every output row repeats these values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub id: usize,
    /// `None` for an explicit target list.
    pub p: Option<f64>,
    pub noise: NoiseCell,
    pub segment_pulses: usize,
    pub slide_pulses: usize,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let parse_err = |m: String| CliError::ConfigParse { path: path.display().to_string(), message: m };
        let cfg: Self = match path.extension().and_then(|e| e.to_str()) {
            Some("json") => serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
            Some("toml") => toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?,
            _ => return Err(parse_err("expected a .json or .toml file".into())),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Radar parameters before segmentation: `(B, Np, R, P)`.
    pub fn radar_counts(&self) -> (f64, usize, usize, usize) {
        let (b, np, r, p) = match self.profile {
            Profile::Desk => (100e6, 100, 5, 10),
            Profile::Paper => (100e6, 1000, 5, 10),
            Profile::Small => (10e6, 6, 2, 6),
        };
        (
            self.radar.bandwidth_hz.unwrap_or(b),
            self.radar.np.unwrap_or(np),
            self.radar.downsample_ratio.unwrap_or(r),
            self.radar.pulses.unwrap_or(p),
        )
    }

    pub fn radar_config(&self, segment_pulses: usize, slide_pulses: usize) -> CliResult<RadarConfig> {
        let (b, np, r, p) = self.radar_counts();
        RadarConfig::from_counts(b, np, r, p, segment_pulses, slide_pulses).map_err(|e| CliError::invalid("radar", e.to_string()))
    }

    pub fn solver_params(&self) -> SolverParams {
        SolverParams { zeta1: self.solver.zeta1, zeta2: self.solver.zeta2, max_atoms: self.solver.max_atoms, ..SolverParams::default() }
    }

    pub fn validate(&self) -> CliResult<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::invalid(
                "schema_version",
                format!("unsupported version {} (expected {SCHEMA_VERSION})", self.schema_version),
            ));
        }
        if self.trials == 0 {
            return Err(CliError::invalid("trials", "must be at least 1"));
        }
        if self.solver.methods.is_empty() {
            return Err(CliError::invalid("solver.methods", "must not be empty"));
        }
        if self.sweep.segment_pulses.is_empty() {
            return Err(CliError::invalid("sweep.segment_pulses", "must not be empty"));
        }
        if self.sweep.slide_pulses.is_empty() {
            return Err(CliError::invalid("sweep.slide_pulses", "must not be empty"));
        }
        if self.scene.targets.is_none() && self.scene.p.is_empty() {
            return Err(CliError::invalid("scene.p", "must not be empty without explicit targets"));
        }
        if let Some(p) = self.scene.p.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(CliError::invalid("scene.p", format!("{p} outside [0, 1]")));
        }
        if !self.noise.isnr_db.is_empty() && !self.noise.n0.is_empty() {
            return Err(CliError::invalid("noise", "give either isnr_db or n0, not both"));
        }
        if let Some(v) = self.noise.isnr_db.iter().find(|v| !v.is_finite()) {
            return Err(CliError::invalid("noise.isnr_db", format!("{v} is not finite")));
        }
        if let Some(v) = self.noise.n0.iter().find(|v| v.is_nan() || **v < 0.0) {
            return Err(CliError::invalid("noise.n0", format!("{v} must be >= 0")));
        }
        self.solver_params().validate().map_err(|e| CliError::invalid("solver", e.to_string()))?;
        if self.probe_segment == 0 {
            return Err(CliError::invalid("probe_segment", "segments are numbered from 1"));
        }
        let cells = self.cells();
        if cells.is_empty() {
            return Err(CliError::invalid("sweep.slide_pulses", "no slide is smaller than any segment length"));
        }
        let pulses = self.radar_counts().3;
        if let Some(s) = self.sweep.segment_pulses.iter().find(|&&s| s < 2 || s >= pulses) {
            return Err(CliError::invalid("sweep.segment_pulses", format!("{s} outside 2..{pulses}")));
        }
        for c in &cells {
            self.radar_config(c.segment_pulses, c.slide_pulses)?;
        }
        let n = self.radar_config(cells[0].segment_pulses, cells[0].slide_pulses)?.n;
        if let Some(t) = self.scene.targets.as_ref().and_then(|t| t.iter().find(|t| t.0 >= n)) {
            return Err(CliError::invalid("scene.targets", format!("index {} outside 0..{n}", t.0)));
        }
        for f in &self.figures {
            if !crate::figures::FIGURES.contains(&f.as_str()) {
                return Err(CliError::invalid("figures", format!("unknown figure `{f}`")));
            }
        }
        Ok(())
    }

    /// Sweep grid in config order.
    pub fn cells(&self) -> Vec<Cell> {
        let ps: Vec<Option<f64>> = if self.scene.targets.is_some() { vec![None] } else { self.scene.p.iter().map(|&p| Some(p)).collect() };
        let noises: Vec<NoiseCell> = if !self.noise.isnr_db.is_empty() {
            self.noise.isnr_db.iter().map(|&v| NoiseCell::Isnr(v)).collect()
        } else if !self.noise.n0.is_empty() {
            self.noise.n0.iter().map(|&v| NoiseCell::N0(v)).collect()
        } else {
            vec![NoiseCell::Noiseless]
        };
        let mut cells = Vec::new();
        for &p in &ps {
            for &noise in &noises {
                for &s in &self.sweep.segment_pulses {
                    for &w in self.sweep.slide_pulses.iter().filter(|&&w| w < s) {
                        cells.push(Cell { id: cells.len(), p, noise, segment_pulses: s, slide_pulses: w });
                    }
                }
            }
        }
        cells
    }

    /// Applies command-line overrides.
    pub fn with_overrides(mut self, seed: Option<u64>, trials: Option<usize>, solver: Option<SolverKind>) -> CliResult<Self> {
        if let Some(s) = seed {
            self.seed = s;
        }
        if let Some(t) = trials {
            self.trials = t;
        }
        if let Some(s) = solver {
            self.solver.methods = vec![s];
        }
        self.validate()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOML: &str = r#"
        schema_version = 1
        name = "fig6"
        trials = 3
        seed = 7
        [scene]
        p = [0.01, 0.02]
        [solver]
        methods = ["omp-pks", "tompp"]
        zeta1 = { relative = 0.05 }
        [sweep]
        segment_pulses = [2, 3]
        slide_pulses = [1, 2]
    "#;

    #[test]
    fn parses_toml_with_defaults() {
        let c: ExperimentConfig = toml::from_str(TOML).unwrap();
        c.validate().unwrap();
        assert_eq!(c.profile, Profile::Desk);
        assert_eq!(c.solver.zeta2, Zeta::Relative(0.01));
        assert_eq!(c.radar_counts(), (100e6, 100, 5, 10));
        // (S, W) = (2,1), (3,1), (3,2) for each p
        let cells = c.cells();
        assert_eq!(cells.len(), 6);
        assert_eq!((cells[2].segment_pulses, cells[2].slide_pulses), (3, 2));
        assert!(cells.iter().enumerate().all(|(i, c)| c.id == i));
    }

    #[test]
    fn json_round_trip() {
        let c: ExperimentConfig = toml::from_str(TOML).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_bad_fields() {
        let mut c: ExperimentConfig = toml::from_str(TOML).unwrap();
        c.trials = 0;
        assert!(matches!(c.validate(), Err(CliError::ConfigInvalid { field, .. }) if field == "trials"));
        let mut c: ExperimentConfig = toml::from_str(TOML).unwrap();
        c.sweep.segment_pulses = vec![10];
        assert!(matches!(c.validate(), Err(CliError::ConfigInvalid { field, .. }) if field == "sweep.segment_pulses"));
        let mut c: ExperimentConfig = toml::from_str(TOML).unwrap();
        c.schema_version = 2;
        assert!(c.validate().is_err());
        assert!(toml::from_str::<ExperimentConfig>(&TOML.replace("seed = 7", "seed = 7\nbogus = 1")).is_err());
    }

    #[test]
    fn explicit_targets_replace_p_axis() {
        let mut c: ExperimentConfig = toml::from_str(TOML).unwrap();
        c.scene.targets = Some(vec![(0, 1.0)]);
        assert!(c.cells().iter().all(|cell| cell.p.is_none()));
        c.scene.targets = Some(vec![(900, 1.0)]);
        assert!(c.validate().is_err());
    }
}
