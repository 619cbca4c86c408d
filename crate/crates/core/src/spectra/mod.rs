//! Display artifacts: synthetic transmission traces, flux maps and file export.
//!
//! Transmission is modelled as a sum of complex Lorentzians, one per normal
//! mode, weighted by the mode amplitude at the input and output ports. This
//! is a qualitative stand-in for measured S21 (no background or package
//! modes); linewidths are display parameters only.

mod export;
mod svg;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuitqed::{single_excitation_hamiltonian, LatticeModes, QedError, QubitPlacement};
use crate::linalg::{eigh_real, C64};
use crate::tightbinding::{correct_shift, FiniteSpectrum};

pub use export::{
    export, input_hash, Artifact, Format, Provenance, BANDS_CSV_HEADER, BOUNDSTATES_CSV_HEADER,
    CROSSING_CSV_HEADER, DOS_CSV_HEADER, MAP_CSV_HEADER, MODES_CSV_HEADER, TRACE_CSV_HEADER,
};
pub use svg::{colormap, SvgOptions};

/// Default intrinsic linewidth, GHz.
pub const DEFAULT_KAPPA0: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ExportError {
    #[error("I/O error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("serialization failed: {0}")]
    Serialize(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown format {0:?} (expected csv, json or svg)")]
    UnknownFormat(String),
    #[error(transparent)]
    Qed(#[from] QedError),
}

/// Input and output ports on two lattice sites. Mode `k` leaks into a port at
/// rate `kappa_base · ψ_k(port)²` and has intrinsic linewidth `kappa0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortCoupling {
    pub input_site: usize,
    pub output_site: usize,
    pub kappa_base: f64,
    pub kappa0: f64,
}

impl PortCoupling {
    pub fn new(input_site: usize, output_site: usize, kappa_base: f64) -> Self {
        PortCoupling { input_site, output_site, kappa_base, kappa0: DEFAULT_KAPPA0 }
    }

    pub fn rates(&self, psi_in: f64, psi_out: f64) -> (f64, f64) {
        (self.kappa_base * psi_in * psi_in, self.kappa_base * psi_out * psi_out)
    }

    /// Total linewidth of a mode with the given port amplitudes.
    pub fn linewidth(&self, psi_in: f64, psi_out: f64) -> f64 {
        let (a, b) = self.rates(psi_in, psi_out);
        self.kappa0 + a + b
    }
}

/// Normal modes expressed on lattice sites; column `k` is mode `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub frequencies: Vec<f64>,
    pub site_amplitudes: DMatrix<f64>,
}

impl EigenSystem {
    pub fn new(frequencies: Vec<f64>, site_amplitudes: DMatrix<f64>) -> Result<Self, ExportError> {
        if site_amplitudes.ncols() != frequencies.len() {
            return Err(ExportError::DimensionMismatch(format!(
                "{} frequencies but {} eigenvectors",
                frequencies.len(),
                site_amplitudes.ncols()
            )));
        }
        Ok(EigenSystem { frequencies, site_amplitudes })
    }

    /// Dressed lattice + qubit eigenstates projected back onto lattice sites.
    pub fn dressed(
        modes: &LatticeModes,
        placements: &[QubitPlacement],
        qubit_freqs: &[f64],
    ) -> Result<Self, ExportError> {
        let h = single_excitation_hamiltonian(modes, placements, qubit_freqs)?;
        let (vals, vecs) = eigh_real(h);
        let n = modes.len();
        let photonic = vecs.rows(0, n).into_owned();
        Ok(EigenSystem { frequencies: vals, site_amplitudes: &modes.vectors * photonic })
    }
}

impl From<&LatticeModes> for EigenSystem {
    fn from(m: &LatticeModes) -> Self {
        EigenSystem { frequencies: m.frequencies.clone(), site_amplitudes: m.vectors.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmissionTrace {
    pub freq: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
}

impl TransmissionTrace {
    pub fn magnitude(&self) -> Vec<f64> {
        self.re.iter().zip(&self.im).map(|(a, b)| a.hypot(*b)).collect()
    }
}

/// `A(f) = Σ_k κ_base ψ_k(in) ψ_k(out) / (i(f − f_k) + κ_k/2)`.
pub fn synth_transmission(
    sys: &EigenSystem,
    ports: &PortCoupling,
    grid: &[f64],
) -> Result<TransmissionTrace, ExportError> {
    let n_sites = sys.site_amplitudes.nrows();
    if ports.input_site >= n_sites || ports.output_site >= n_sites {
        return Err(ExportError::DimensionMismatch(format!(
            "port sites ({}, {}) outside {} lattice sites",
            ports.input_site, ports.output_site, n_sites
        )));
    }
    if sys.site_amplitudes.ncols() != sys.frequencies.len() {
        return Err(ExportError::DimensionMismatch("eigenvector count".into()));
    }
    let terms: Vec<(f64, f64, f64)> = sys
        .frequencies
        .iter()
        .enumerate()
        .map(|(k, &fk)| {
            let a = sys.site_amplitudes[(ports.input_site, k)];
            let b = sys.site_amplitudes[(ports.output_site, k)];
            (fk, ports.kappa_base * a * b, ports.linewidth(a, b))
        })
        .collect();
    let mut re = Vec::with_capacity(grid.len());
    let mut im = Vec::with_capacity(grid.len());
    for &f in grid {
        let mut acc = C64::new(0.0, 0.0);
        for &(fk, weight, kappa) in &terms {
            if weight != 0.0 {
                acc += C64::new(weight, 0.0) / C64::new(kappa / 2.0, f - fk);
            }
        }
        re.push(acc.re);
        im.push(acc.im);
    }
    Ok(TransmissionTrace { freq: grid.to_vec(), re, im })
}

/// `|A|` on a flux × frequency grid; `magnitude[i][j]` is flux `i`, frequency `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxMap {
    pub flux: Vec<f64>,
    pub freq: Vec<f64>,
    pub magnitude: Vec<Vec<f64>>,
}

pub fn flux_map(
    scan: &[(f64, EigenSystem)],
    ports: &PortCoupling,
    grid: &[f64],
) -> Result<FluxMap, ExportError> {
    let mut flux = Vec::with_capacity(scan.len());
    let mut magnitude = Vec::with_capacity(scan.len());
    for (phi, sys) in scan {
        flux.push(*phi);
        magnitude.push(synth_transmission(sys, ports, grid)?.magnitude());
    }
    Ok(FluxMap { flux, freq: grid.to_vec(), magnitude })
}

/// Finite-lattice normal modes with the weight each carries on a chosen set
/// of sites (typically the outer cells).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeTable {
    pub uncorrected: Vec<f64>,
    pub corrected: Vec<f64>,
    pub edge_weight: Vec<f64>,
}

impl ModeTable {
    pub fn new(spectrum: &FiniteSpectrum, edge_sites: &[usize]) -> Self {
        let omega = spectrum.family.omega;
        ModeTable {
            uncorrected: spectrum.uncorrected.clone(),
            corrected: spectrum.uncorrected.iter().map(|&v| correct_shift(omega, v - omega)).collect(),
            edge_weight: (0..spectrum.uncorrected.len()).map(|m| spectrum.weight_on(m, edge_sites)).collect(),
        }
    }
}

/// `n` evenly spaced points on `[lo, hi]`.
pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuitqed::LatticeModes;
    use proptest::prelude::*;

    fn single(f: f64, psi_in: f64, psi_out: f64) -> EigenSystem {
        EigenSystem::new(vec![f], DMatrix::from_row_slice(2, 1, &[psi_in, psi_out])).unwrap()
    }

    fn local_maxima(y: &[f64]) -> Vec<usize> {
        (1..y.len() - 1).filter(|&i| y[i] > y[i - 1] && y[i] >= y[i + 1]).collect()
    }

    #[test]
    fn single_mode_lorentzian() {
        let ports = PortCoupling { input_site: 0, output_site: 1, kappa_base: 0.002, kappa0: 0.001 };
        let sys = single(5.0, 0.7, 0.7);
        let kappa = ports.linewidth(0.7, 0.7);
        let grid = [5.0, 5.0 + kappa / 2.0, 5.0 - kappa / 2.0];
        let m = synth_transmission(&sys, &ports, &grid).unwrap().magnitude();
        let peak2 = m[0] * m[0];
        assert!((m[1] * m[1] - peak2 / 2.0).abs() < 1e-12 * peak2);
        assert!((m[2] * m[2] - peak2 / 2.0).abs() < 1e-12 * peak2);
    }

    #[test]
    fn mode_dark_at_output_is_invisible() {
        let ports = PortCoupling::new(0, 1, 0.002);
        let t = synth_transmission(&single(5.0, 0.7, 0.0), &ports, &linear_grid(4.9, 5.1, 11)).unwrap();
        assert!(t.magnitude().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn port_sign_products_control_the_antiresonance() {
        // Between two well-separated peaks the sum behaves like Σ w_k/(f − f_k):
        // equal-sign products cancel (a transmission zero), opposite signs add.
        let ports = PortCoupling { input_site: 0, output_site: 1, kappa_base: 2e-4, kappa0: 2e-4 };
        let amps = |s: f64| DMatrix::from_row_slice(2, 2, &[0.7, 0.7, 0.7, s * 0.7]);
        let same = EigenSystem::new(vec![5.0, 5.02], amps(1.0)).unwrap();
        let opp = EigenSystem::new(vec![5.0, 5.02], amps(-1.0)).unwrap();
        let grid = linear_grid(5.002, 5.018, 161);
        let a = synth_transmission(&same, &ports, &grid).unwrap().magnitude();
        let b = synth_transmission(&opp, &ports, &grid).unwrap().magnitude();
        // oracle: direct two-term evaluation
        let k = ports.linewidth(0.7, 0.7);
        let w = 2e-4 * 0.49;
        let term = |f: f64, fk: f64, s: f64| C64::new(s * w, 0.0) / C64::new(k / 2.0, f - fk);
        for (i, &f) in grid.iter().enumerate() {
            assert!((a[i] - (term(f, 5.0, 1.0) + term(f, 5.02, 1.0)).norm()).abs() < 1e-12);
            assert!((b[i] - (term(f, 5.0, 1.0) + term(f, 5.02, -1.0)).norm()).abs() < 1e-12);
        }
        let min_same = a.iter().copied().fold(f64::INFINITY, f64::min);
        let min_opp = b.iter().copied().fold(f64::INFINITY, f64::min);
        assert!(min_same < 0.02 * min_opp, "{min_same} vs {min_opp}");
    }

    #[test]
    fn port_outside_lattice() {
        let ports = PortCoupling::new(0, 5, 0.002);
        assert!(synth_transmission(&single(5.0, 1.0, 1.0), &ports, &[5.0]).is_err());
    }

    #[test]
    fn avoided_crossing_trail_splits_by_2g() {
        let g = 0.01;
        let modes = LatticeModes::new(vec![5.0], DMatrix::from_element(1, 1, 1.0)).unwrap();
        let p = [QubitPlacement { qubit: 0, site: 0, g0: g }];
        let ports = PortCoupling { input_site: 0, output_site: 0, kappa_base: 1e-4, kappa0: 2e-4 };
        let grid = linear_grid(4.95, 5.05, 2001);
        let step = grid[1] - grid[0];
        let scan: Vec<(f64, EigenSystem)> = linear_grid(4.97, 5.03, 61)
            .into_iter()
            .map(|fq| (fq, EigenSystem::dressed(&modes, &p, &[fq]).unwrap()))
            .collect();
        let map = flux_map(&scan, &ports, &grid).unwrap();
        let min_split = map
            .magnitude
            .iter()
            .map(|row| {
                let pk = local_maxima(row);
                assert_eq!(pk.len(), 2);
                grid[pk[1]] - grid[pk[0]]
            })
            .fold(f64::INFINITY, f64::min);
        assert!((min_split - 2.0 * g).abs() <= 2.0 * step, "{min_split}");
    }

    #[test]
    fn uncoupled_qubit_leaves_mode_lines_fixed() {
        let modes = LatticeModes::new(vec![5.0, 5.1], DMatrix::identity(2, 2)).unwrap();
        let p = [QubitPlacement { qubit: 0, site: 0, g0: 0.0 }];
        let ports = PortCoupling::new(0, 0, 1e-3);
        let grid = linear_grid(4.9, 5.2, 301);
        let scan: Vec<(f64, EigenSystem)> = linear_grid(4.95, 5.15, 5)
            .into_iter()
            .map(|fq| (fq, EigenSystem::dressed(&modes, &p, &[fq]).unwrap()))
            .collect();
        let map = flux_map(&scan, &ports, &grid).unwrap();
        for row in &map.magnitude {
            assert_eq!(row, &map.magnitude[0]);
        }
    }

    proptest! {
        #[test]
        fn transmission_is_linear_in_mode_sets(
            f in proptest::collection::vec(4.8f64..5.2, 1..6),
            amps in proptest::collection::vec(-1.0f64..1.0, 12),
            split in 0usize..6,
        ) {
            let n = f.len();
            let split = split.min(n);
            let ports = PortCoupling::new(0, 1, 0.002);
            let m = DMatrix::from_fn(2, n, |r, c| amps[2 * c + r]);
            let grid = linear_grid(4.7, 5.3, 97);
            let whole = synth_transmission(&EigenSystem::new(f.clone(), m.clone()).unwrap(), &ports, &grid).unwrap();
            let a = EigenSystem::new(f[..split].to_vec(), m.columns(0, split).into_owned()).unwrap();
            let b = EigenSystem::new(f[split..].to_vec(), m.columns(split, n - split).into_owned()).unwrap();
            let ta = synth_transmission(&a, &ports, &grid).unwrap();
            let tb = synth_transmission(&b, &ports, &grid).unwrap();
            let bound: f64 = (0..n).map(|k| {
                let (x, y) = (m[(0, k)], m[(1, k)]);
                (ports.kappa_base * x * y).abs() / (ports.linewidth(x, y) / 2.0)
            }).sum();
            for i in 0..grid.len() {
                prop_assert!((whole.re[i] - ta.re[i] - tb.re[i]).abs() < 1e-9);
                prop_assert!((whole.im[i] - ta.im[i] - tb.im[i]).abs() < 1e-9);
                prop_assert!(whole.re[i].hypot(whole.im[i]) <= bound + 1e-9);
            }
        }

        #[test]
        fn isolated_peak_within_one_grid_step(fk in 4.9f64..5.1) {
            let ports = PortCoupling { input_site: 0, output_site: 1, kappa_base: 1e-4, kappa0: 1e-4 };
            let sys = EigenSystem::new(
                vec![fk, fk + 0.05],
                DMatrix::from_row_slice(2, 2, &[0.6, 0.5, 0.6, 0.5]),
            ).unwrap();
            let grid = linear_grid(4.8, 5.2, 4001);
            let m = synth_transmission(&sys, &ports, &grid).unwrap().magnitude();
            let peaks = local_maxima(&m);
            let step = grid[1] - grid[0];
            prop_assert!(peaks.iter().any(|&i| (grid[i] - fk).abs() <= step));
        }
    }
}
