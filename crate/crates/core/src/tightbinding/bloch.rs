use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use super::{correct_shift, epsilon_of, ModeFamily, Parity, TightBindingError};
use crate::lattice::UnitCellSpec;
use crate::linalg::{eigh_hermitian, hermiticity_defect, C64};

pub const DEFAULT_K_POINTS: usize = 256;
/// Grid used when band edges are extracted for fitting or acceptance checks.
pub const FIT_K_POINTS: usize = 512;

const HERMITICITY_TOL: f64 = 1e-12;

/// `n` equally spaced wavevectors `k_j = −π + 2πj/n` (includes Γ for even `n`).
pub fn uniform_k_grid(n: usize) -> Vec<f64> {
    (0..n).map(|j| -PI + 2.0 * PI * j as f64 / n as f64).collect()
}

/// Bloch matrix `H(k)` of a unit cell. A coupler pair between site `a` in cell
/// offset `oa` and site `b` in offset `ob` picks up `e^{ik(ob − oa)}`.
pub fn bloch_matrix(
    cell: &UnitCellSpec,
    parity: Parity,
    omega: f64,
    t0: f64,
    k: f64,
) -> DMatrix<Complex<f64>> {
    let n = cell.sites_per_cell;
    let mut h = DMatrix::from_element(n, n, C64::new(0.0, 0.0));
    for i in 0..n {
        h[(i, i)] = C64::new(omega, 0.0);
    }
    for c in &cell.couplers {
        for (i, a) in c.members.iter().enumerate() {
            for b in &c.members[i + 1..] {
                let amp = -parity.end_sign(a.end) * parity.end_sign(b.end) * t0;
                let dk = f64::from(b.cell_offset) - f64::from(a.cell_offset);
                let v = C64::from_polar(amp, k * dk);
                h[(a.site, b.site)] += v;
                h[(b.site, a.site)] += v.conj();
            }
        }
    }
    h
}

/// Dimensionless bands `σ(k)` of the signed adjacency matrix, so that
/// `ω⁽⁰⁾(k) = ω_μ − t0 σ(k)` for any family of this parity.
pub fn normalized_bands(
    cell: &UnitCellSpec,
    parity: Parity,
    k_grid: &[f64],
) -> Result<Vec<Vec<f64>>, TightBindingError> {
    cell.validate().map_err(|e| TightBindingError::InvalidCell(e.to_string()))?;
    k_grid
        .iter()
        .map(|&k| {
            let h = bloch_matrix(cell, parity, 0.0, -1.0, k);
            check_hermitian(&h)?;
            Ok(eigh_hermitian(h).0)
        })
        .collect()
}

fn check_hermitian(h: &DMatrix<C64>) -> Result<(), TightBindingError> {
    let defect = hermiticity_defect(h);
    if defect > HERMITICITY_TOL {
        return Err(TightBindingError::NonHermitian(defect));
    }
    Ok(())
}

/// Band structure sampled on a k grid. All per-k arrays are indexed
/// `[k_index][band]`, bands ascending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BandResult {
    pub family: ModeFamily,
    pub k: Vec<f64>,
    pub uncorrected: Vec<Vec<f64>>,
    pub corrected: Vec<Vec<f64>>,
    pub epsilon: Vec<Vec<f64>>,
    #[serde(skip)]
    pub eigenvectors: Vec<DMatrix<Complex<f64>>>,
}

impl BandResult {
    pub fn n_bands(&self) -> usize {
        self.uncorrected.first().map_or(0, Vec::len)
    }

    pub fn values(&self, corrected: bool) -> &[Vec<f64>] {
        if corrected {
            &self.corrected
        } else {
            &self.uncorrected
        }
    }

    /// `(min, max)` of one band over the grid.
    pub fn band_range(&self, band: usize, corrected: bool) -> (f64, f64) {
        self.values(corrected)
            .iter()
            .map(|row| row[band])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), x| (lo.min(x), hi.max(x)))
    }
}

pub fn bloch_bands(
    cell: &UnitCellSpec,
    fam: &ModeFamily,
    k_grid: &[f64],
) -> Result<BandResult, TightBindingError> {
    fam.validate()?;
    cell.validate().map_err(|e| TightBindingError::InvalidCell(e.to_string()))?;
    let mut out = BandResult {
        family: *fam,
        k: k_grid.to_vec(),
        uncorrected: Vec::with_capacity(k_grid.len()),
        corrected: Vec::with_capacity(k_grid.len()),
        epsilon: Vec::with_capacity(k_grid.len()),
        eigenvectors: Vec::with_capacity(k_grid.len()),
    };
    for &k in k_grid {
        if !(-PI..PI).contains(&k) {
            return Err(TightBindingError::KOutOfRange(k));
        }
        let h = bloch_matrix(cell, fam.parity, fam.omega, fam.t0, k);
        check_hermitian(&h)?;
        let (vals, vecs) = eigh_hermitian(h);
        out.epsilon.push(vals.iter().map(|&v| epsilon_of(v, fam)).collect());
        out.corrected.push(vals.iter().map(|&v| correct_shift(fam.omega, v - fam.omega)).collect());
        out.uncorrected.push(vals);
        out.eigenvectors.push(vecs);
    }
    Ok(out)
}

/// Number of values within `tol` of `target` at each k.
pub fn flat_band_multiplicity(values: &[Vec<f64>], target: f64, tol: f64) -> Vec<usize> {
    values.iter().map(|row| row.iter().filter(|&&x| (x - target).abs() <= tol).count()).collect()
}

/// Largest deviation from the band-inversion relation between the two
/// parities: after removing the two `σ = −2` flat bands, the antisymmetric
/// bands equal `2 − σ` of the symmetric ones in reverse order. Returns
/// `None` when a k point lacks the two flat bands in either family.
pub fn band_inversion_mismatch(
    cell: &UnitCellSpec,
    k_grid: &[f64],
) -> Result<Option<f64>, TightBindingError> {
    let anti = normalized_bands(cell, Parity::Antisymmetric, k_grid)?;
    let sym = normalized_bands(cell, Parity::Symmetric, k_grid)?;
    let mut worst: f64 = 0.0;
    for (a, s) in anti.iter().zip(&sym) {
        let (Some(a), Some(s)) = (strip_flat(a), strip_flat(s)) else {
            return Ok(None);
        };
        if a.len() != s.len() {
            return Ok(None);
        }
        for (x, y) in a.iter().zip(s.iter().rev()) {
            worst = worst.max((x - (2.0 - y)).abs());
        }
    }
    Ok(Some(worst))
}

fn strip_flat(bands: &[f64]) -> Option<Vec<f64>> {
    let mut out = bands.to_vec();
    for _ in 0..2 {
        let pos = out.iter().position(|&x| (x + 2.0).abs() < 1e-8)?;
        out.remove(pos);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_chain, paper_lattice, Boundary};
    use crate::tightbinding::{assemble_hamiltonian, frequency_correction, FLAT_BAND_TOL};
    use proptest::prelude::*;

    #[test]
    fn grid_contains_gamma_and_stays_in_zone() {
        let g = uniform_k_grid(8);
        assert_eq!(g[0], -PI);
        assert!(g.iter().any(|&k| k.abs() < 1e-15));
        assert!(g.iter().all(|&k| (-PI..PI).contains(&k)));
    }

    #[test]
    fn full_wave_flat_band_is_doubly_degenerate_everywhere() {
        let fam = ModeFamily::full_wave(9.726, -0.082).unwrap();
        let bands = bloch_bands(&paper_lattice(), &fam, &uniform_k_grid(64)).unwrap();
        let flat = 9.726 - 2.0 * 0.082;
        let m = flat_band_multiplicity(&bands.uncorrected, flat, FLAT_BAND_TOL);
        assert!(m.iter().all(|&c| c == 2), "{m:?}");
    }

    #[test]
    fn epsilon_reconstructs_uncorrected_values() {
        let fam = ModeFamily::half_wave(4.889, -0.040).unwrap();
        let bands = bloch_bands(&paper_lattice(), &fam, &uniform_k_grid(16)).unwrap();
        for (eps_row, raw_row) in bands.epsilon.iter().zip(&bands.uncorrected) {
            for (e, r) in eps_row.iter().zip(raw_row) {
                assert!((fam.omega + e * fam.t0 - r).abs() < 1e-12);
            }
        }
        for (c_row, r_row) in bands.corrected.iter().zip(&bands.uncorrected) {
            for (c, r) in c_row.iter().zip(r_row) {
                assert!((c - frequency_correction(*r, &fam).unwrap()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn out_of_zone_k_is_rejected() {
        let fam = ModeFamily::half_wave(4.889, -0.040).unwrap();
        assert!(matches!(bloch_bands(&paper_lattice(), &fam, &[PI]), Err(TightBindingError::KOutOfRange(_))));
    }

    #[test]
    fn parities_are_band_inverted() {
        let m = band_inversion_mismatch(&paper_lattice(), &uniform_k_grid(32)).unwrap().unwrap();
        assert!(m < 1e-9, "{m}");
    }

    /// Spectrum of a periodic chain of N cells equals the union of Bloch
    /// spectra at k = 2πm/N.
    fn periodic_chain_vs_bloch(fam: ModeFamily, n: usize) {
        let cell = paper_lattice();
        let lat = build_chain(&cell, n, Boundary::Periodic).unwrap();
        let h = assemble_hamiltonian(&lat, &fam).unwrap();
        let (mut finite, _) = crate::linalg::eigh_real(h.matrix);
        let ks: Vec<f64> = (0..n)
            .map(|m| {
                let k = 2.0 * PI * m as f64 / n as f64;
                if k >= PI {
                    k - 2.0 * PI
                } else {
                    k
                }
            })
            .collect();
        let bands = bloch_bands(&cell, &fam, &ks).unwrap();
        let mut bloch: Vec<f64> = bands.uncorrected.concat();
        bloch.sort_by(f64::total_cmp);
        finite.sort_by(f64::total_cmp);
        for (a, b) in finite.iter().zip(&bloch) {
            assert!((a - b).abs() < 1e-10, "{a} vs {b}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn bloch_matrix_is_hermitian(k in -PI..PI, t in -0.2f64..0.2, mu in 1u32..4) {
            let fam = ModeFamily::new(mu, 5.0, t).unwrap();
            let h = bloch_matrix(&paper_lattice(), fam.parity, fam.omega, fam.t0, k);
            prop_assert!(hermiticity_defect(&h) < 1e-14);
        }

        #[test]
        fn periodic_chain_matches_bloch(n in 3usize..9, mu in 1u32..3) {
            let fam = ModeFamily::new(mu, 5.0 * f64::from(mu), -0.04 * f64::from(mu)).unwrap();
            periodic_chain_vs_bloch(fam, n);
        }
    }
}
