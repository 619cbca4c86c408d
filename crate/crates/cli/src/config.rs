//! Run configuration: a single versioned JSON document.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use cpwqed::circuitqed::{QubitPlacement, TransmonSpec};
use cpwqed::fluxcal::{CrosstalkModel, MeasurementSet, Protocol};
use cpwqed::lattice::{build_chain, Boundary, CellDocument, LatticeGraph, UnitCellSpec, PAPER_CELL_JSON};
use cpwqed::spectra::{Format, SvgOptions};
use cpwqed::tightbinding::{hopping_from_circuit, ModeFamily};
use serde::Deserialize;

use crate::error::CliError;

pub const CONFIG_VERSION: u32 = 1;
const BUNDLED_PREFIX: &str = "bundled:";
const BUNDLED_CELL: &str = "rhombus-chain";

/// Configurations shipped inside the binary, addressed as `bundled:NAME`.
pub const BUNDLED_CONFIGS: &[(&str, &str)] = &[
    ("halfwave-bands", include_str!("../configs/halfwave-bands.json")),
    ("fullwave-bands", include_str!("../configs/fullwave-bands.json")),
    ("device-circuit", include_str!("../configs/device-circuit.json")),
    ("boundstates-fullwave", include_str!("../configs/boundstates-fullwave.json")),
    ("crossing-fullwave", include_str!("../configs/crossing-fullwave.json")),
    ("crossing-halfwave", include_str!("../configs/crossing-halfwave.json")),
    ("fluxcal-demo", include_str!("../configs/fluxcal-demo.json")),
    ("fluxcal-identity", include_str!("../configs/fluxcal-identity.json")),
];

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub lattice: LatticeConfig,
    pub families: Vec<FamilyConfig>,
    #[serde(default)]
    pub bands: BandsConfig,
    #[serde(default)]
    pub qubits: Vec<QubitConfig>,
    #[serde(default)]
    pub boundstates: Option<BoundStatesConfig>,
    #[serde(default)]
    pub crossing: Option<CrossingConfig>,
    #[serde(default)]
    pub fluxcal: Option<FluxCalConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    /// `bundled:rhombus-chain` or a path to a cell document.
    pub cell: String,
    #[serde(default = "default_cells")]
    pub n_cells: usize,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

fn default_cells() -> usize {
    9
}

fn default_boundary() -> Boundary {
    Boundary::Hardwall
}

/// One mode family: `t0` directly or derived from circuit parameters.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub mu: u32,
    /// On-site frequency, GHz.
    pub omega: f64,
    /// Hopping, GHz.
    #[serde(default)]
    pub t0: Option<f64>,
    #[serde(default)]
    pub circuit: Option<CircuitConfig>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    #[serde(rename = "f1_GHz")]
    pub f1_ghz: f64,
    #[serde(rename = "Cc_fF")]
    pub cc_ff: f64,
    #[serde(rename = "Z0_ohm")]
    pub z0_ohm: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BandsConfig {
    pub k_points: usize,
    /// DOS bin width, GHz.
    pub bin_width: f64,
}

impl Default for BandsConfig {
    fn default() -> Self {
        BandsConfig { k_points: 256, bin_width: 1e-3 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitConfig {
    pub site: usize,
    pub transmon: TransmonSpec,
    /// Coupling to a single resonator, GHz, keyed by harmonic index.
    #[serde(default)]
    pub g0: BTreeMap<u32, f64>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxGrid {
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl FluxGrid {
    pub fn values(&self) -> Vec<f64> {
        cpwqed::spectra::linear_grid(self.start, self.stop, self.points)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundStatesConfig {
    pub family: u32,
    /// Indices into `qubits`; all qubits share the swept flux.
    #[serde(default = "first_qubit")]
    pub qubits: Vec<usize>,
    pub flux: FluxGrid,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
}

fn first_qubit() -> Vec<usize> {
    vec![0]
}

fn default_threshold() -> f64 {
    cpwqed::circuitqed::QUBIT_LIKE_THRESHOLD
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrossingConfig {
    pub family: u32,
    /// Swept qubit and parked qubit, as indices into `qubits`.
    pub pair: [usize; 2],
    /// Distances of the parked qubit below the lowest band edge, GHz.
    pub detunings: Vec<f64>,
    /// Half-width of the flux window swept around the resonance, Φ₀.
    pub flux_half_span: f64,
    pub points: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxCalConfig {
    /// Indices into `qubits`, one per bias line.
    pub qubits: Vec<usize>,
    /// Ground-truth model for a simulated experiment.
    #[serde(default)]
    pub truth: Option<CrosstalkModel>,
    /// Measured data to calibrate instead of simulating.
    #[serde(default)]
    pub measurements: Option<String>,
    #[serde(default)]
    pub protocol: Protocol,
    /// Flux targets for the voltage-inversion demonstration.
    #[serde(default)]
    pub target_flux: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub formats: Vec<Format>,
    #[serde(default)]
    pub svg: SvgOptions,
}

/// A parsed configuration plus the raw bytes it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub raw: Vec<u8>,
    /// Directory that relative paths resolve against.
    pub base: PathBuf,
}

pub fn bundled_config(name: &str) -> Option<&'static str> {
    BUNDLED_CONFIGS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(source: &str) -> Result<LoadedConfig, CliError> {
    let (raw, base) = if let Some(name) = source.strip_prefix(BUNDLED_PREFIX) {
        let text = bundled_config(name).ok_or_else(|| {
            let names: Vec<&str> = BUNDLED_CONFIGS.iter().map(|(n, _)| *n).collect();
            CliError::Config(format!("unknown bundled config '{name}' (available: {})", names.join(", ")))
        })?;
        (text.as_bytes().to_vec(), PathBuf::from("."))
    } else {
        let path = Path::new(source);
        let raw = std::fs::read(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        (raw, base)
    };
    let config: RunConfig = serde_json::from_slice(&raw)
        .map_err(|e| CliError::Config(format!("invalid config {source}: {e}")))?;
    if config.version != CONFIG_VERSION {
        return Err(CliError::Config(format!(
            "unsupported config version {} (expected {CONFIG_VERSION})",
            config.version
        )));
    }
    let loaded = LoadedConfig { config, raw, base };
    loaded.check()?;
    Ok(loaded)
}

impl LoadedConfig {
    fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    /// Structural checks that need no numerics.
    fn check(&self) -> Result<(), CliError> {
        let c = &self.config;
        if c.families.is_empty() {
            return Err(CliError::Config("at least one mode family is required".into()));
        }
        for (i, a) in c.families.iter().enumerate() {
            if c.families[..i].iter().any(|b| b.mu == a.mu) {
                return Err(CliError::Config(format!("mode family μ = {} listed twice", a.mu)));
            }
            self.family_from(a)?;
        }
        for (i, q) in c.qubits.iter().enumerate() {
            q.transmon.validate().map_err(|e| CliError::Config(format!("qubit {i}: {e}")))?;
        }
        let n_q = c.qubits.len();
        let bad_index = |what: &str, idx: &[usize]| -> Result<(), CliError> {
            match idx.iter().find(|&&i| i >= n_q) {
                Some(i) => {
                    Err(CliError::Config(format!("{what} refers to qubit {i}, but only {n_q} are defined")))
                }
                None => Ok(()),
            }
        };
        if let Some(b) = &c.boundstates {
            bad_index("boundstates", &b.qubits)?;
            if b.qubits.is_empty() {
                return Err(CliError::Config("boundstates needs at least one qubit".into()));
            }
            if b.flux.points == 0 {
                return Err(CliError::Config("boundstates flux grid needs at least one point".into()));
            }
        }
        if let Some(x) = &c.crossing {
            bad_index("crossing", &x.pair)?;
            if x.pair[0] == x.pair[1] {
                return Err(CliError::Config("crossing pair must name two different qubits".into()));
            }
            if x.points < 2 || !(x.flux_half_span > 0.0) {
                return Err(CliError::Config("crossing needs points ≥ 2 and flux_half_span > 0".into()));
            }
        }
        if let Some(f) = &c.fluxcal {
            bad_index("fluxcal", &f.qubits)?;
            if f.truth.is_some() == f.measurements.is_some() {
                return Err(CliError::Config(
                    "fluxcal needs exactly one of 'truth' or 'measurements'".into(),
                ));
            }
        }
        Ok(())
    }

    fn family_from(&self, f: &FamilyConfig) -> Result<ModeFamily, CliError> {
        let t0 = match (f.t0, f.circuit) {
            (Some(t0), None) => t0,
            (None, Some(c)) => hopping_from_circuit(c.f1_ghz, f.mu, c.cc_ff, c.z0_ohm)
                .map_err(|e| CliError::Config(format!("family μ = {}: {e}", f.mu)))?,
            _ => {
                return Err(CliError::Config(format!(
                    "family μ = {}: give exactly one of 't0' or 'circuit'",
                    f.mu
                )))
            }
        };
        ModeFamily::new(f.mu, f.omega, t0).map_err(|e| CliError::Config(format!("family μ = {}: {e}", f.mu)))
    }

    pub fn families(&self) -> Result<Vec<ModeFamily>, CliError> {
        self.config.families.iter().map(|f| self.family_from(f)).collect()
    }

    pub fn family(&self, mu: u32) -> Result<ModeFamily, CliError> {
        let f = self
            .config
            .families
            .iter()
            .find(|f| f.mu == mu)
            .ok_or_else(|| CliError::Config(format!("no mode family with μ = {mu}")))?;
        self.family_from(f)
    }

    pub fn cell(&self) -> Result<UnitCellSpec, CliError> {
        let src = &self.config.lattice.cell;
        let text = match src.strip_prefix(BUNDLED_PREFIX) {
            Some(BUNDLED_CELL) => PAPER_CELL_JSON.to_string(),
            Some(other) => {
                return Err(CliError::Config(format!(
                    "unknown bundled lattice '{other}' (available: {BUNDLED_CELL})"
                )))
            }
            None => {
                let path = self.resolve(src);
                std::fs::read_to_string(&path).map_err(|e| {
                    CliError::Config(format!("cannot read lattice file {}: {e}", path.display()))
                })?
            }
        };
        CellDocument::parse(&text)
            .and_then(CellDocument::into_cell)
            .map_err(|e| CliError::Config(format!("lattice {src}: {e}")))
    }

    pub fn chain(&self, cell: &UnitCellSpec) -> Result<LatticeGraph, CliError> {
        let l = &self.config.lattice;
        build_chain(cell, l.n_cells, l.boundary).map_err(|e| CliError::Config(format!("lattice: {e}")))
    }

    /// Placements and transmon specs for the given qubit indices and family.
    pub fn qubits(
        &self,
        indices: &[usize],
        mu: u32,
    ) -> Result<(Vec<QubitPlacement>, Vec<TransmonSpec>), CliError> {
        let mut placements = Vec::with_capacity(indices.len());
        let mut specs = Vec::with_capacity(indices.len());
        for (slot, &i) in indices.iter().enumerate() {
            let q = &self.config.qubits[i];
            let g0 = *q
                .g0
                .get(&mu)
                .ok_or_else(|| CliError::Config(format!("qubit {i} has no coupling for μ = {mu}")))?;
            placements.push(QubitPlacement { qubit: slot, site: q.site, g0 });
            specs.push(q.transmon);
        }
        Ok((placements, specs))
    }

    pub fn measurements(&self) -> Result<Option<MeasurementSet>, CliError> {
        let Some(p) = self.config.fluxcal.as_ref().and_then(|f| f.measurements.as_deref()) else {
            return Ok(None);
        };
        let path = self.resolve(p);
        let text = std::fs::read(&path)
            .map_err(|e| CliError::Config(format!("cannot read measurements {}: {e}", path.display())))?;
        serde_json::from_slice(&text)
            .map(Some)
            .map_err(|e| CliError::Config(format!("invalid measurements {}: {e}", path.display())))
    }
}
