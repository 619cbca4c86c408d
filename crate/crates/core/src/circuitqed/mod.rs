//! Transmons coupled to lattice modes in the single-excitation manifold.
//!
//! Qubits are two-level systems in the rotating-wave approximation. Qubit
//! `j` at site `x_j` couples to lattice mode `k` with `g0_j ψ_k(x_j)`, where
//! `ψ_k` are orthonormal finite-lattice eigenvectors; this absorbs the `1/√N`
//! normalization of plane-wave modes.

mod transmon;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::LatticeGraph;
use crate::linalg::eigh_real;
use crate::tightbinding::{finite_spectrum, FiniteSpectrum, ModeFamily, TightBindingError};

pub use transmon::{
    ec_from_capacitance, flux_for_frequency, frequency_slope, g_scaled, transmon_frequency, TransmonSpec,
    TRANSMON_RATIO_ADVISORY,
};

/// Closest a qubit may sit to a lattice mode in the perturbative exchange formula.
pub const MIN_GAP: f64 = 1e-6;
/// Default qubit weight above which an eigenstate counts as qubit-like.
pub const QUBIT_LIKE_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QedError {
    #[error("non-positive input: {0}")]
    NonPositiveInput(&'static str),
    #[error("invalid transmon: {0}")]
    InvalidTransmon(String),
    #[error("transmon formula invalid at flux {flux}: EJ/EC = {ratio:.3} < 1")]
    TransmonApproxInvalid { flux: f64, ratio: f64 },
    #[error("qubit frequency {target} GHz outside tunable range [{min}, {max}]")]
    FrequencyUnreachable { target: f64, min: f64, max: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid qubit placement: {0}")]
    InvalidPlacement(String),
    #[error("zero detuning")]
    ZeroDetuning,
    #[error("qubit at {qubit_freq} GHz is within {detuning:e} GHz of mode {mode}")]
    ResonantMode { mode: usize, qubit_freq: f64, detuning: f64 },
    #[error("crossing scan needs at least two flux points")]
    EmptyScan,
    #[error(transparent)]
    TightBinding(#[from] TightBindingError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitPlacement {
    pub qubit: usize,
    pub site: usize,
    /// Coupling to a single resonator of the relevant mode family, GHz.
    pub g0: f64,
}

/// Lattice modes entering the bordered matrix: frequencies plus orthonormal
/// site-indexed eigenvectors (column `k` is mode `k`).
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeModes {
    pub frequencies: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl LatticeModes {
    pub fn new(frequencies: Vec<f64>, vectors: DMatrix<f64>) -> Result<Self, QedError> {
        if vectors.ncols() != frequencies.len() {
            return Err(QedError::DimensionMismatch(format!(
                "{} mode frequencies but {} mode vectors",
                frequencies.len(),
                vectors.ncols()
            )));
        }
        Ok(LatticeModes { frequencies, vectors })
    }

    /// Frequency-corrected normal modes of a finite lattice.
    pub fn of_lattice(lat: &LatticeGraph, fam: &ModeFamily) -> Result<Self, QedError> {
        Ok(Self::from(finite_spectrum(lat, fam, true)?))
    }

    pub fn n_sites(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    fn check(&self, placements: &[QubitPlacement]) -> Result<(), QedError> {
        for p in placements {
            if p.site >= self.n_sites() {
                return Err(QedError::InvalidPlacement(format!(
                    "qubit {} at site {} but lattice has {} sites",
                    p.qubit,
                    p.site,
                    self.n_sites()
                )));
            }
            if !(p.g0 >= 0.0) {
                return Err(QedError::InvalidPlacement(format!(
                    "qubit {} has negative coupling {}",
                    p.qubit, p.g0
                )));
            }
        }
        Ok(())
    }
}

impl From<FiniteSpectrum> for LatticeModes {
    fn from(s: FiniteSpectrum) -> Self {
        LatticeModes { frequencies: s.frequencies, vectors: s.vectors }
    }
}

/// Bordered single-excitation matrix: lattice modes first, then qubits.
pub fn single_excitation_hamiltonian(
    modes: &LatticeModes,
    placements: &[QubitPlacement],
    qubit_freqs: &[f64],
) -> Result<DMatrix<f64>, QedError> {
    if placements.len() != qubit_freqs.len() {
        return Err(QedError::DimensionMismatch(format!(
            "{} placements but {} qubit frequencies",
            placements.len(),
            qubit_freqs.len()
        )));
    }
    if modes.vectors.ncols() != modes.len() {
        return Err(QedError::DimensionMismatch("mode vectors do not match frequencies".into()));
    }
    modes.check(placements)?;
    let n = modes.len();
    let dim = n + placements.len();
    let mut h = DMatrix::zeros(dim, dim);
    for (k, &f) in modes.frequencies.iter().enumerate() {
        h[(k, k)] = f;
    }
    for (j, (p, &fq)) in placements.iter().zip(qubit_freqs).enumerate() {
        let q = n + j;
        h[(q, q)] = fq;
        for k in 0..n {
            let g = p.g0 * modes.vectors[(p.site, k)];
            h[(k, q)] = g;
            h[(q, k)] = g;
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingleExcitationResult {
    /// Ascending.
    pub eigenfrequencies: Vec<f64>,
    /// `qubit_weight[state][qubit]`.
    pub qubit_weight: Vec<Vec<f64>>,
    /// `mode_weights[state][mode]`.
    pub mode_weights: Vec<Vec<f64>>,
}

impl SingleExcitationResult {
    pub fn total_qubit_weight(&self, state: usize) -> f64 {
        self.qubit_weight[state].iter().sum()
    }

    /// States with total qubit weight ≥ `threshold` whose frequency lies in
    /// none of the given bands (closed intervals).
    pub fn in_gap_states(&self, bands: &[(f64, f64)], threshold: f64) -> Vec<usize> {
        (0..self.eigenfrequencies.len())
            .filter(|&s| {
                let f = self.eigenfrequencies[s];
                self.total_qubit_weight(s) >= threshold
                    && !bands.iter().any(|&(lo, hi)| (lo..=hi).contains(&f))
            })
            .collect()
    }
}

pub fn diagonalize_single_excitation(
    modes: &LatticeModes,
    placements: &[QubitPlacement],
    qubit_freqs: &[f64],
) -> Result<SingleExcitationResult, QedError> {
    let h = single_excitation_hamiltonian(modes, placements, qubit_freqs)?;
    let n = modes.len();
    let (vals, vecs) = eigh_real(h);
    let dim = vals.len();
    let mut qubit_weight = Vec::with_capacity(dim);
    let mut mode_weights = Vec::with_capacity(dim);
    for s in 0..dim {
        let col = vecs.column(s);
        mode_weights.push((0..n).map(|k| col[k] * col[k]).collect());
        qubit_weight.push((n..dim).map(|q| col[q] * col[q]).collect());
    }
    Ok(SingleExcitationResult { eigenfrequencies: vals, qubit_weight, mode_weights })
}

/// One flux point of a bound-state scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundStatePoint {
    pub flux: f64,
    pub qubit_freqs: Vec<f64>,
    pub result: SingleExcitationResult,
}

/// Sweeps all qubits through the same flux and diagonalizes the bordered
/// matrix built from the corrected finite-lattice modes.
pub fn bound_states(
    lat: &LatticeGraph,
    fam: &ModeFamily,
    placements: &[QubitPlacement],
    qubit_specs: &[TransmonSpec],
    flux_grid: &[f64],
) -> Result<Vec<BoundStatePoint>, QedError> {
    let modes = LatticeModes::of_lattice(lat, fam)?;
    bound_states_with_modes(&modes, placements, qubit_specs, flux_grid)
}

pub fn bound_states_with_modes(
    modes: &LatticeModes,
    placements: &[QubitPlacement],
    qubit_specs: &[TransmonSpec],
    flux_grid: &[f64],
) -> Result<Vec<BoundStatePoint>, QedError> {
    if placements.len() != qubit_specs.len() {
        return Err(QedError::DimensionMismatch(format!(
            "{} placements but {} transmon specs",
            placements.len(),
            qubit_specs.len()
        )));
    }
    flux_grid
        .iter()
        .map(|&flux| {
            let qubit_freqs =
                qubit_specs.iter().map(|s| transmon_frequency(s, flux)).collect::<Result<Vec<_>, _>>()?;
            let result = diagonalize_single_excitation(modes, placements, &qubit_freqs)?;
            Ok(BoundStatePoint { flux, qubit_freqs, result })
        })
        .collect()
}

/// `χ = g²/Δ`.
pub fn dispersive_shift(g: f64, delta: f64) -> Result<f64, QedError> {
    if delta == 0.0 {
        return Err(QedError::ZeroDetuning);
    }
    Ok(g * g / delta)
}

/// Photon-mediated exchange `J = Σ_k g_j g_l ψ_k(x_j) ψ_k(x_l) / (f_q − f_k)`,
/// the coefficient of `σ_j⁻ σ_l⁺ + h.c.` for two qubits at `qubit_freq`.
pub fn exchange_coupling_perturbative(
    modes: &LatticeModes,
    pj: &QubitPlacement,
    pl: &QubitPlacement,
    qubit_freq: f64,
) -> Result<f64, QedError> {
    modes.check(&[*pj, *pl])?;
    let mut j = 0.0;
    for (k, &fk) in modes.frequencies.iter().enumerate() {
        let delta = qubit_freq - fk;
        if delta.abs() < MIN_GAP {
            return Err(QedError::ResonantMode { mode: k, qubit_freq, detuning: delta });
        }
        j += pj.g0 * pl.g0 * modes.vectors[(pj.site, k)] * modes.vectors[(pl.site, k)] / delta;
    }
    Ok(j)
}

/// Separation of the two most qubit-like eigenstates for two qubits at the
/// given bare frequencies. Returns `(lower, upper)` branch frequencies.
pub fn qubit_pair_branches(
    modes: &LatticeModes,
    p1: &QubitPlacement,
    p2: &QubitPlacement,
    f1: f64,
    f2: f64,
) -> Result<(f64, f64), QedError> {
    let r = diagonalize_single_excitation(modes, &[*p1, *p2], &[f1, f2])?;
    let mut idx: Vec<usize> = (0..r.eigenfrequencies.len()).collect();
    idx.sort_by(|&a, &b| r.total_qubit_weight(b).total_cmp(&r.total_qubit_weight(a)));
    let (a, b) = (r.eigenfrequencies[idx[0]], r.eigenfrequencies[idx[1]]);
    Ok((a.min(b), a.max(b)))
}

/// Golden-section minimum of `g` on `[lo, hi]`.
fn golden_min<F>(mut lo: f64, mut hi: f64, tol: f64, mut g: F) -> Result<(f64, f64), QedError>
where
    F: FnMut(f64) -> Result<f64, QedError>,
{
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut g1 = g(x1)?;
    let mut g2 = g(x2)?;
    while hi - lo > tol {
        if g1 <= g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - r * (hi - lo);
            g1 = g(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + r * (hi - lo);
            g2 = g(x2)?;
        }
    }
    Ok(if g1 <= g2 { (x1, g1) } else { (x2, g2) })
}

/// Minimum branch separation over qubit-1 frequencies in `[lo, hi]` with
/// qubit 2 fixed at `f2`. Returns `(f1 at minimum, gap)`.
pub fn minimum_pair_gap(
    modes: &LatticeModes,
    p1: &QubitPlacement,
    p2: &QubitPlacement,
    f2: f64,
    lo: f64,
    hi: f64,
) -> Result<(f64, f64), QedError> {
    golden_min(lo, hi, 1e-10, |f1| {
        let (a, b) = qubit_pair_branches(modes, p1, p2, f1, f2)?;
        Ok(b - a)
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingScan {
    pub flux: Vec<f64>,
    /// `branches[i] = (lower, upper)` qubit-like frequencies at `flux[i]`.
    pub branches: Vec<(f64, f64)>,
    pub gaps: Vec<f64>,
    pub min_gap: f64,
    pub min_gap_flux: f64,
}

/// Tunes qubit 1 through a flux grid with qubit 2 parked at `flux_2`,
/// tracking the two most qubit-like branches. The minimum gap is refined
/// between the neighbours of the coarse minimum.
#[allow(clippy::too_many_arguments)]
pub fn avoided_crossing_scan(
    modes: &LatticeModes,
    p1: &QubitPlacement,
    p2: &QubitPlacement,
    spec1: &TransmonSpec,
    spec2: &TransmonSpec,
    flux_1_grid: &[f64],
    flux_2: f64,
) -> Result<CrossingScan, QedError> {
    if flux_1_grid.len() < 2 {
        return Err(QedError::EmptyScan);
    }
    let f2 = transmon_frequency(spec2, flux_2)?;
    let gap_at = |phi: f64| -> Result<(f64, f64), QedError> {
        qubit_pair_branches(modes, p1, p2, transmon_frequency(spec1, phi)?, f2)
    };
    let branches = flux_1_grid.iter().map(|&phi| gap_at(phi)).collect::<Result<Vec<_>, _>>()?;
    let gaps: Vec<f64> = branches.iter().map(|(a, b)| b - a).collect();
    let i_min = (0..gaps.len()).min_by(|&a, &b| gaps[a].total_cmp(&gaps[b])).unwrap_or(0);
    let lo = flux_1_grid[i_min.saturating_sub(1)];
    let hi = flux_1_grid[(i_min + 1).min(flux_1_grid.len() - 1)];
    let (min_gap_flux, min_gap) = golden_min(lo.min(hi), lo.max(hi), 1e-12, |phi| {
        let (a, b) = gap_at(phi)?;
        Ok(b - a)
    })?;
    let (min_gap_flux, min_gap) =
        if gaps[i_min] < min_gap { (flux_1_grid[i_min], gaps[i_min]) } else { (min_gap_flux, min_gap) };
    Ok(CrossingScan { flux: flux_1_grid.to_vec(), branches, gaps, min_gap, min_gap_flux })
}
