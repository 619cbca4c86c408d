use nalgebra::DMatrix;

use super::{assemble_hamiltonian, correct_shift, epsilon_of, ModeFamily, TightBindingError};
use crate::lattice::LatticeGraph;
use crate::linalg::eigh_real;

/// Normal modes of a finite lattice, ascending in the uncorrected frequency.
#[derive(Debug, Clone)]
pub struct FiniteSpectrum {
    pub family: ModeFamily,
    /// Either the corrected or the uncorrected frequencies, as requested.
    pub frequencies: Vec<f64>,
    pub uncorrected: Vec<f64>,
    pub epsilon: Vec<f64>,
    /// Column `i` is the mode with frequency `frequencies[i]`.
    pub vectors: DMatrix<f64>,
    pub corrected: bool,
}

impl FiniteSpectrum {
    /// Fraction of mode `i` carried by the given sites.
    pub fn weight_on(&self, mode: usize, sites: &[usize]) -> f64 {
        sites.iter().map(|&s| self.vectors[(s, mode)].powi(2)).sum()
    }
}

pub fn finite_spectrum(
    lat: &LatticeGraph,
    fam: &ModeFamily,
    corrected: bool,
) -> Result<FiniteSpectrum, TightBindingError> {
    let h = assemble_hamiltonian(lat, fam)?;
    let (uncorrected, vectors) = eigh_real(h.matrix);
    let frequencies = if corrected {
        uncorrected.iter().map(|&v| correct_shift(fam.omega, v - fam.omega)).collect()
    } else {
        uncorrected.clone()
    };
    let epsilon = uncorrected.iter().map(|&v| epsilon_of(v, fam)).collect();
    Ok(FiniteSpectrum { family: *fam, frequencies, uncorrected, epsilon, vectors, corrected })
}
