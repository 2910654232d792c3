//! The JSON run configuration.
//!
//! Every section is optional; a subcommand fails with a config error when the
//! section it needs is missing. Unknown keys are rejected everywhere.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use wellsplit::accounting::TransitionModel;
use wellsplit::splitter::{Caps, SplitConfig};
use wellsplit::tdse::{Mesh, SimOptions, VALIDITY_THRESHOLD};
use wellsplit::wellcore::{alpha, make_alpha_state_in};
use wellsplit::{Complex64, WellSegment, WellState};

use crate::CliError;

/// Meshes are capped at this many intervals per unit length at desk scale.
pub const DESK_INTERVALS: usize = 10_000;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "unit_length")]
    pub length: f64,
    pub state: Option<StateSpec>,
    pub split: Option<SplitSection>,
    pub caps: Option<CapsSection>,
    pub zeros: Option<ZerosSection>,
    pub delta: Option<DeltaSection>,
    pub tdse: Option<TdseSection>,
    pub sweep: Option<SweepSection>,
    pub carpet: Option<CarpetSection>,
    pub accounting: Option<AccountingSection>,
    /// Output directory; `--out` takes precedence.
    pub out_dir: Option<PathBuf>,
}

fn unit_length() -> f64 {
    1.0
}

/// `{"alpha": x0}`, `{"alpha_mirror": x0}`, `{"eigen": l}` or
/// `{"modes": [d1, d2, ...]}` with each `d` a number or `[re, im]`.
#[derive(Clone, Debug, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Alpha(f64),
    AlphaMirror(f64),
    Eigen(u32),
    Modes(Vec<Coefficient>),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Real(f64),
    Complex([f64; 2]),
}

impl StateSpec {
    pub fn build(&self, well: &WellSegment) -> wellsplit::Result<WellState> {
        match *self {
            StateSpec::Alpha(x0) => make_alpha_state_in(well, x0),
            StateSpec::AlphaMirror(x0) => {
                // same domain check as the alpha state
                make_alpha_state_in(well, x0)?;
                WellState::from_real(*well, &[alpha(well, x0), 1.0])
            }
            StateSpec::Eigen(l) => WellState::single_mode(*well, l),
            StateSpec::Modes(ref ds) => WellState::normalized(
                *well,
                ds.iter()
                    .map(|d| match *d {
                        Coefficient::Real(re) => Complex64::new(re, 0.0),
                        Coefficient::Complex([re, im]) => Complex64::new(re, im),
                    })
                    .collect(),
            ),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    /// Barrier positions, absolute, strictly inside the well.
    pub chis: Vec<f64>,
    /// Split time.
    #[serde(default)]
    pub t: f64,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CapsSection {
    #[serde(default = "default_cap")]
    pub l_max: u32,
    #[serde(default = "default_cap")]
    pub k_max: u32,
}

fn default_cap() -> u32 {
    Caps::default().l_max
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZerosSection {
    /// Scan a single time slice.
    pub t: Option<f64>,
    /// Scan a time window `[t_start, t_end]`.
    pub window: Option<[f64; 2]>,
    /// `[n_x, n_t]`; only `n_x` is used for a single slice.
    #[serde(default = "default_zero_grid")]
    pub grid: [usize; 2],
    #[serde(default = "default_zero_tol")]
    pub tol: f64,
}

fn default_zero_grid() -> [usize; 2] {
    [1024, 256]
}

fn default_zero_tol() -> f64 {
    wellsplit::zerofinder::DEFAULT_TOL
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeltaSection {
    pub x0: f64,
    pub v: VGrid,
    #[serde(default = "default_levels")]
    pub levels: usize,
}

fn default_levels() -> usize {
    10
}

/// An explicit list of strengths or a log-spaced range.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum VGrid {
    List(Vec<f64>),
    Log(LogGrid),
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogGrid {
    pub log10_from: f64,
    pub log10_to: f64,
    pub count: usize,
    /// Prepend `V = 0`.
    #[serde(default)]
    pub include_zero: bool,
}

impl VGrid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            VGrid::List(v) => v.clone(),
            VGrid::Log(g) => {
                let mut out = Vec::with_capacity(g.count + 1);
                if g.include_zero {
                    out.push(0.0);
                }
                for i in 0..g.count {
                    let s = if g.count == 1 { 0.0 } else { i as f64 / (g.count - 1) as f64 };
                    out.push(10f64.powf(g.log10_from + s * (g.log10_to - g.log10_from)));
                }
                out
            }
        }
    }
}

/// Mesh resolution: a spacing or an interval count, not both.
#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshSection {
    pub dx: Option<f64>,
    pub intervals: Option<usize>,
}

impl MeshSection {
    pub fn build(&self, length: f64, desk: bool) -> Result<Mesh, CliError> {
        let intervals = match (self.dx, self.intervals) {
            (Some(_), Some(_)) => return Err(CliError::config("mesh", "give either dx or intervals, not both")),
            (Some(dx), None) => {
                if !(dx > 0.0 && dx < length) {
                    return Err(CliError::config("mesh.dx", format!("spacing must lie in (0, L), got {dx}")));
                }
                (length / dx).round() as usize
            }
            (None, Some(n)) => n,
            (None, None) => 100_000,
        };
        let intervals = if desk {
            intervals.min((DESK_INTERVALS as f64 * length).round() as usize)
        } else {
            intervals
        };
        Mesh::new(length, intervals).map_err(|e| CliError::config("mesh", e.to_string()))
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TdseSection {
    pub w: f64,
    pub x0: f64,
    pub v_m: f64,
    pub tau: f64,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default = "default_steps")]
    pub steps: usize,
    #[serde(default)]
    pub checkpoints: Vec<usize>,
    #[serde(default = "default_validity")]
    pub validity_threshold: f64,
}

fn default_steps() -> usize {
    SimOptions::default().steps
}

fn default_validity() -> f64 {
    VALIDITY_THRESHOLD
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            steps: default_steps(),
            checkpoints: Vec::new(),
            validity_threshold: default_validity(),
        }
    }
}

impl RunSection {
    pub fn options(&self) -> SimOptions {
        SimOptions {
            steps: self.steps,
            checkpoints: self.checkpoints.clone(),
            validity_threshold: self.validity_threshold,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedState {
    pub id: String,
    pub state: StateSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub states: Vec<NamedState>,
    pub tau: Vec<f64>,
    pub w: Vec<f64>,
    pub v_m: Vec<f64>,
    pub x0: f64,
    #[serde(default)]
    pub mesh: MeshSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub from: f64,
    pub to: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        match self.count {
            0 => Vec::new(),
            1 => vec![self.from],
            n => (0..n)
                .map(|i| self.from + (self.to - self.from) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarpetSection {
    /// Defaults to the split time.
    pub t_split: Option<f64>,
    pub x: Option<GridSpec>,
    pub t: GridSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccountingSection {
    /// `[j, k_j]` pairs.
    pub outcomes: Vec<[u32; 2]>,
    /// Any of "modulus", "weak", "mixed"; all three by default.
    pub models: Option<Vec<TransitionModel>>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            CliError::config(path, e.into_inner().to_string())
        })?;
        if !(cfg.length > 0.0 && cfg.length.is_finite()) {
            return Err(CliError::config("length", format!("must be positive, got {}", cfg.length)));
        }
        Ok(cfg)
    }

    pub fn well(&self) -> WellSegment {
        WellSegment::with_length(self.length).expect("length checked on load")
    }

    pub fn state(&self) -> Result<WellState, CliError> {
        let spec = self.state.as_ref().ok_or_else(|| CliError::missing("state"))?;
        spec.build(&self.well()).map_err(|e| CliError::config("state", e.to_string()))
    }

    pub fn split(&self) -> Result<(SplitConfig, f64), CliError> {
        let s = self.split.as_ref().ok_or_else(|| CliError::missing("split"))?;
        let cfg = SplitConfig::in_well(self.well(), s.chis.clone())
            .map_err(|e| CliError::config("split.chis", e.to_string()))?;
        Ok((cfg, s.t))
    }

    /// The state evolved to the split time, with the split geometry.
    pub fn split_state(&self) -> Result<(WellState, SplitConfig, f64), CliError> {
        let state = self.state()?;
        let (cfg, t) = self.split()?;
        Ok((state.evolved(t), cfg, t))
    }

    pub fn caps(&self, flag: Option<Caps>) -> Caps {
        flag.or(self.caps.map(|c| Caps {
            l_max: c.l_max,
            k_max: c.k_max,
        }))
        .unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_key_names_its_path() {
        let err = RunConfig::parse(r#"{"tdse": {"w": 1e-3, "x0": 0.375, "v_m": 1, "tau": 1, "mesh": {"dy": 1}}}"#)
            .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("tdse.mesh"), "{msg}");
        assert!(msg.contains("dy"), "{msg}");
    }

    #[test]
    fn state_forms() {
        let cfg = RunConfig::parse(r#"{"state": {"modes": [1, [0, 0], [0, 1]]}}"#).unwrap();
        let s = cfg.state().unwrap();
        assert!((s.coeff(3).im - 0.5f64.sqrt()).abs() < 1e-15);
        let m = RunConfig::parse(r#"{"state": {"alpha_mirror": 0.375}}"#).unwrap().state().unwrap();
        assert!(m.coeff(2).re > 0.0);
        assert!(RunConfig::parse(r#"{"state": {"alpha": 0.7}}"#).unwrap().state().is_err());
    }

    #[test]
    fn log_grid() {
        let g = VGrid::Log(LogGrid {
            log10_from: 0.0,
            log10_to: 2.0,
            count: 3,
            include_zero: true,
        });
        assert_eq!(g.values(), vec![0.0, 1.0, 10.0, 100.0]);
    }

    #[test]
    fn desk_scale_caps_the_mesh() {
        let m = MeshSection {
            dx: Some(1e-5),
            intervals: None,
        };
        assert_eq!(m.build(1.0, false).unwrap().intervals(), 100_000);
        assert_eq!(m.build(1.0, true).unwrap().intervals(), 10_000);
    }
}
