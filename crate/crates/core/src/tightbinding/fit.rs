//! Recovering `(ω_μ, t0)` from measured band edges.
//!
//! The band structure of a cell is fixed up to the affine map
//! `ω⁽⁰⁾ = ω_μ − t0 σ` followed by the frequency correction, so every band
//! edge is a known function of the two parameters. Edges are matched to
//! dimensionless edges `σ` and fitted by Levenberg–Marquardt, seeded from the
//! linear (uncorrected) least-squares solution.

use serde::{Deserialize, Serialize};

use super::{normalized_bands, uniform_k_grid, Parity, TightBindingError, FIT_K_POINTS};
use crate::lattice::UnitCellSpec;

const MAX_ITERATIONS: usize = 200;
const STEP_TOL: f64 = 1e-14;
const TOUCH_TOL: f64 = 1e-9;

/// Contiguous set of bands that overlap or touch, in units of `σ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandGroup {
    pub bands: Vec<usize>,
    pub sigma_min: f64,
    pub sigma_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EdgeSide {
    Lower,
    Upper,
}

/// Which edge an observed frequency belongs to. Groups are numbered in
/// ascending `σ`, which is ascending frequency for negative `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRole {
    pub group: usize,
    pub side: EdgeSide,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandEdgeFit {
    pub omega: f64,
    pub t0: f64,
    /// RMS of observed minus modelled edges, GHz.
    pub rms_residual: f64,
    pub iterations: usize,
}

/// Band groups of a cell, sampled on the fitting grid.
pub fn band_groups(cell: &UnitCellSpec, parity: Parity) -> Result<Vec<BandGroup>, TightBindingError> {
    let sigma = normalized_bands(cell, parity, &uniform_k_grid(FIT_K_POINTS))?;
    let n_bands = sigma.first().map_or(0, Vec::len);
    let mut ranges: Vec<(usize, f64, f64)> = (0..n_bands)
        .map(|b| {
            let (lo, hi) = sigma
                .iter()
                .map(|row| row[b])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, c), x| (a.min(x), c.max(x)));
            (b, lo, hi)
        })
        .collect();
    ranges.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut groups: Vec<BandGroup> = Vec::new();
    for (b, lo, hi) in ranges {
        match groups.last_mut() {
            Some(g) if lo <= g.sigma_max + TOUCH_TOL => {
                g.bands.push(b);
                g.sigma_max = g.sigma_max.max(hi);
            }
            _ => groups.push(BandGroup { bands: vec![b], sigma_min: lo, sigma_max: hi }),
        }
    }
    Ok(groups)
}

fn model(omega: f64, t0: f64, sigma: f64) -> f64 {
    let x = -t0 * sigma;
    omega + x + x * x / omega
}

/// `(∂/∂ω, ∂/∂t0)` of [`model`].
fn gradient(omega: f64, t0: f64, sigma: f64) -> [f64; 2] {
    let x = t0 * sigma;
    [1.0 - x * x / (omega * omega), -sigma + 2.0 * t0 * sigma * sigma / omega]
}

fn solve2(a: [[f64; 2]; 2], b: [f64; 2]) -> Option<[f64; 2]> {
    let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
    let scale = a[0][0].abs().max(a[1][1].abs()).max(1e-300);
    if det.abs() <= 1e-14 * scale * scale {
        return None;
    }
    Some([(b[0] * a[1][1] - b[1] * a[0][1]) / det, (a[0][0] * b[1] - a[1][0] * b[0]) / det])
}

pub fn fit_band_edges(
    observed: &[(f64, EdgeRole)],
    cell: &UnitCellSpec,
    parity: Parity,
) -> Result<BandEdgeFit, TightBindingError> {
    let groups = band_groups(cell, parity)?;
    let points: Vec<(f64, f64)> = observed
        .iter()
        .map(|&(f, role)| {
            let g = groups.get(role.group).ok_or_else(|| {
                TightBindingError::UnknownEdgeRole(format!(
                    "group {} (cell has {})",
                    role.group,
                    groups.len()
                ))
            })?;
            let s = match role.side {
                EdgeSide::Lower => g.sigma_min,
                EdgeSide::Upper => g.sigma_max,
            };
            Ok((s, f))
        })
        .collect::<Result<_, TightBindingError>>()?;
    let mut distinct: Vec<f64> = points.iter().map(|p| p.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if distinct.len() < 2 {
        return Err(TightBindingError::Underdetermined(format!(
            "{} distinct band edges given, need at least 2",
            distinct.len()
        )));
    }

    // linear seed: f ≈ ω − t0 σ
    let n = points.len() as f64;
    let (ss, s2, sf, ssf) = points
        .iter()
        .fold((0.0, 0.0, 0.0, 0.0), |acc, &(s, f)| (acc.0 + s, acc.1 + s * s, acc.2 + f, acc.3 + s * f));
    let [mut omega, slope] = solve2([[n, ss], [ss, s2]], [sf, ssf])
        .ok_or_else(|| TightBindingError::Underdetermined("degenerate band edges".into()))?;
    let mut t0 = -slope;

    let residuals =
        |omega: f64, t0: f64| -> Vec<f64> { points.iter().map(|&(s, f)| f - model(omega, t0, s)).collect() };
    let cost = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();

    let mut lambda = 1e-3;
    let mut r = residuals(omega, t0);
    let mut c = cost(&r);
    let mut last_step = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let mut jtj = [[0.0; 2]; 2];
        let mut jtr = [0.0; 2];
        for (&(s, _), &ri) in points.iter().zip(&r) {
            let g = gradient(omega, t0, s);
            for a in 0..2 {
                jtr[a] += g[a] * ri;
                for b in 0..2 {
                    jtj[a][b] += g[a] * g[b];
                }
            }
        }
        let mut accepted = false;
        for _ in 0..30 {
            let damped = [[jtj[0][0] * (1.0 + lambda), jtj[0][1]], [jtj[1][0], jtj[1][1] * (1.0 + lambda)]];
            let Some(step) = solve2(damped, jtr) else { break };
            let (o2, t2) = (omega + step[0], t0 + step[1]);
            if !(o2 > 0.0) {
                lambda *= 10.0;
                continue;
            }
            let r2 = residuals(o2, t2);
            let c2 = cost(&r2);
            if c2 <= c {
                last_step = step[0].abs().max(step[1].abs());
                omega = o2;
                t0 = t2;
                r = r2;
                c = c2;
                lambda = (lambda / 10.0).max(1e-12);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        let rms = (c / n).sqrt();
        if !accepted || last_step <= STEP_TOL * omega.abs().max(1.0) {
            // no further decrease possible: a local minimum of the cost
            return Ok(BandEdgeFit { omega, t0, rms_residual: rms, iterations: it });
        }
    }
    Err(TightBindingError::NoConvergence { iterations: MAX_ITERATIONS, rms: (c / n).sqrt(), step: last_step })
}
