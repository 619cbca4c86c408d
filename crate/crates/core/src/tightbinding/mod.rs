//! Photonic tight-binding models of CPW lattices.
//!
//! For mode family μ the lattice Hamiltonian is
//! `H = Σ ω_μ a†a − Σ_<n,n'> t_{n,n'} a†_n a_n'` with
//! `t_{n,n'} = s_n s_n' t0`, where `s` is the sign of the resonator mode
//! function at the end that meets the coupler. Symmetric (full-wave, even μ)
//! modes have `s = +1` at both ends; antisymmetric (half-wave, odd μ) modes
//! have `s = +1` at end 0 and `s = −1` at end 1. With the physical negative
//! `t0`, symmetric families get positive off-diagonal entries `|t0|` and the
//! line-graph flat band sits at the bottom, at `ω_μ − 2|t0|`.

mod bloch;
mod dos;
mod finite;
mod fit;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{validate, EndLabel, LatticeGraph, SiteId};

pub use bloch::{
    band_inversion_mismatch, bloch_bands, bloch_matrix, flat_band_multiplicity, normalized_bands,
    uniform_k_grid, BandResult, DEFAULT_K_POINTS, FIT_K_POINTS,
};
pub use dos::{density_of_states, DosHistogram};
pub use finite::{finite_spectrum, FiniteSpectrum};
pub use fit::{band_groups, fit_band_edges, BandEdgeFit, BandGroup, EdgeRole, EdgeSide};

/// Default tolerance for exact flat-band degeneracy on uncorrected spectra.
pub const FLAT_BAND_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TightBindingError {
    #[error("non-positive input: {0}")]
    NonPositiveInput(&'static str),
    #[error("invalid mode family: {0}")]
    InvalidFamily(String),
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("invalid unit cell: {0}")]
    InvalidCell(String),
    #[error("Bloch matrix not Hermitian (defect {0:e})")]
    NonHermitian(f64),
    #[error("hopping is zero but eigenvalue {eigenvalue} differs from ω_μ = {omega}")]
    ZeroHopping { eigenvalue: f64, omega: f64 },
    #[error("eigenvalue {eigenvalue} is outside the perturbative range around ω_μ = {omega}")]
    OutOfPerturbativeRange { eigenvalue: f64, omega: f64 },
    #[error("k value {0} outside [-π, π)")]
    KOutOfRange(f64),
    #[error("bin width must be positive")]
    InvalidBinWidth,
    #[error("band-edge fit underdetermined: {0}")]
    Underdetermined(String),
    #[error("edge role {0} does not exist for this cell")]
    UnknownEdgeRole(String),
    #[error("band-edge fit did not converge after {iterations} iterations (rms residual {rms:e} GHz, last step {step:e})")]
    NoConvergence { iterations: usize, rms: f64, step: f64 },
}

/// Parity of a resonator harmonic, which fixes the end signs of its mode
/// function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    /// Even μ: same sign at both ends.
    Symmetric,
    /// Odd μ: opposite signs at the two ends.
    Antisymmetric,
}

impl Parity {
    pub fn of_harmonic(mu: u32) -> Self {
        if mu.is_multiple_of(2) {
            Parity::Symmetric
        } else {
            Parity::Antisymmetric
        }
    }

    /// Sign of the mode function at the given resonator end.
    pub fn end_sign(self, end: EndLabel) -> f64 {
        match (self, end) {
            (Parity::Symmetric, _) | (Parity::Antisymmetric, EndLabel::Zero) => 1.0,
            (Parity::Antisymmetric, EndLabel::One) => -1.0,
        }
    }
}

/// One resonator harmonic: on-site frequency `omega` and zeroth-order
/// hopping `t0` (GHz, negative for physical capacitive coupling).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeFamily {
    pub mu: u32,
    pub omega: f64,
    pub t0: f64,
    pub parity: Parity,
}

impl ModeFamily {
    pub fn new(mu: u32, omega: f64, t0: f64) -> Result<Self, TightBindingError> {
        let fam = ModeFamily { mu, omega, t0, parity: Parity::of_harmonic(mu) };
        fam.validate()?;
        Ok(fam)
    }

    /// Half-wave family (μ = 1).
    pub fn half_wave(omega: f64, t0: f64) -> Result<Self, TightBindingError> {
        Self::new(1, omega, t0)
    }

    /// Full-wave family (μ = 2).
    pub fn full_wave(omega: f64, t0: f64) -> Result<Self, TightBindingError> {
        Self::new(2, omega, t0)
    }

    pub fn validate(&self) -> Result<(), TightBindingError> {
        if self.mu == 0 {
            return Err(TightBindingError::InvalidFamily("harmonic index must be ≥ 1".into()));
        }
        if !(self.omega > 0.0) || !self.omega.is_finite() {
            return Err(TightBindingError::InvalidFamily(format!(
                "on-site frequency must be positive, got {}",
                self.omega
            )));
        }
        if !self.t0.is_finite() || self.t0.abs() >= self.omega {
            return Err(TightBindingError::InvalidFamily(format!(
                "|t0| = {} must be below ω_μ = {}",
                self.t0.abs(),
                self.omega
            )));
        }
        if self.parity != Parity::of_harmonic(self.mu) {
            return Err(TightBindingError::InvalidFamily(format!(
                "parity {:?} inconsistent with μ = {}",
                self.parity, self.mu
            )));
        }
        Ok(())
    }

    /// Hopping matrix element between two coupled ends.
    pub(crate) fn hopping_element(&self, a: EndLabel, b: EndLabel) -> f64 {
        -self.parity.end_sign(a) * self.parity.end_sign(b) * self.t0
    }
}

/// Zeroth-order hopping `t_μ/2π = −2 f1 (μ f1) C_c Z0` in GHz, the
/// ordinary-frequency form of `t_μ ≈ −(1/π) ω1 ω_μ C_c Z0`.
pub fn hopping_from_circuit(f1_ghz: f64, mu: u32, cc_ff: f64, z0_ohm: f64) -> Result<f64, TightBindingError> {
    if !(f1_ghz > 0.0) {
        return Err(TightBindingError::NonPositiveInput("fundamental frequency"));
    }
    if mu == 0 {
        return Err(TightBindingError::NonPositiveInput("harmonic index"));
    }
    if cc_ff < 0.0 || cc_ff.is_nan() {
        return Err(TightBindingError::NonPositiveInput("coupling capacitance"));
    }
    if !(z0_ohm > 0.0) {
        return Err(TightBindingError::NonPositiveInput("impedance"));
    }
    let f1 = f1_ghz * 1e9;
    let f_mu = f64::from(mu) * f1;
    let t_hz = -2.0 * f1 * f_mu * (cc_ff * 1e-15) * z0_ohm;
    Ok(t_hz * 1e-9)
}

/// First-order frequency-dependent hopping correction of one normal-mode
/// frequency: `ω_μ + ε t0 + (ε t0)² / ω_μ` with `ε = (λ − ω_μ) / t0`.
pub fn frequency_correction(eigenvalue: f64, fam: &ModeFamily) -> Result<f64, TightBindingError> {
    let x = eigenvalue - fam.omega;
    if fam.t0 == 0.0 && x != 0.0 {
        return Err(TightBindingError::ZeroHopping { eigenvalue, omega: fam.omega });
    }
    if x.abs() >= fam.omega {
        return Err(TightBindingError::OutOfPerturbativeRange { eigenvalue, omega: fam.omega });
    }
    Ok(correct_shift(fam.omega, x))
}

/// `ε` for an uncorrected eigenvalue; zero when the hopping vanishes.
pub(crate) fn epsilon_of(eigenvalue: f64, fam: &ModeFamily) -> f64 {
    if fam.t0 == 0.0 {
        0.0
    } else {
        (eigenvalue - fam.omega) / fam.t0
    }
}

/// Corrected frequency for a shift `x = ε t0` away from `omega`.
#[inline]
pub(crate) fn correct_shift(omega: f64, x: f64) -> f64 {
    omega + x + x * x / omega
}

/// Dense real symmetric tight-binding matrix of a finite lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct Hamiltonian {
    pub matrix: DMatrix<f64>,
    /// Row/column `i` belongs to lattice site `site_index[i]`.
    pub site_index: Vec<SiteId>,
}

impl Hamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

/// Builds the tight-binding matrix of a finite lattice. Couplers joining the
/// same pair of sites more than once add up.
pub fn assemble_hamiltonian(lat: &LatticeGraph, fam: &ModeFamily) -> Result<Hamiltonian, TightBindingError> {
    fam.validate()?;
    let diags = validate(lat);
    if let Some(d) = diags.first() {
        return Err(TightBindingError::InvalidLattice(d.to_string()));
    }
    let n = lat.n_sites();
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n {
        h[(i, i)] = fam.omega;
    }
    for c in &lat.couplers {
        for (i, a) in c.members.iter().enumerate() {
            for b in &c.members[i + 1..] {
                let v = fam.hopping_element(a.end, b.end);
                h[(a.site, b.site)] += v;
                h[(b.site, a.site)] += v;
            }
        }
    }
    Ok(Hamiltonian { matrix: h, site_index: (0..n).collect() })
}
