//! Linear flux crosstalk: `φ = M V + φ*`.
//!
//! Calibration follows the usual two-step procedure. Sweeping one bias line
//! alone, the qubit on that line crosses a fixed reference mode twice per flux
//! quantum; the crossing period gives `|M_ii|` and the crossing pair
//! straddling the sweet spot gives `φ*_i`. With every qubit parked on a
//! sloped part of its curve, the response `∂f_i/∂V_j` divided by the model
//! slope `∂f_i/∂φ_i` gives the full matrix (including the sign of `M_ii`).

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuitqed::{flux_for_frequency, frequency_slope, transmon_frequency, QedError, TransmonSpec};

/// Condition number above which `M` is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;
/// `|∂f/∂φ|` (GHz per Φ₀) below which a parking point is a sweet spot.
pub const MIN_FLUX_SLOPE: f64 = 1e-3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FluxCalError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("crosstalk matrix is singular (condition number {condition:e})")]
    SingularMatrix { condition: f64 },
    #[error("incomplete measurements: {0}")]
    IncompleteMeasurements(String),
    #[error("qubit {qubit} parked at a sweet spot (df/dφ = {slope:e} GHz/Φ₀)")]
    DegenerateSlope { qubit: usize, slope: f64 },
    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),
    #[error(transparent)]
    Qed(#[from] QedError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CrosstalkModel {
    /// `M[i][j] = ∂φ_i/∂V_j`, Φ₀ per volt.
    #[serde(rename = "M")]
    pub m: Vec<Vec<f64>>,
    pub phi_offsets: Vec<f64>,
}

impl CrosstalkModel {
    pub fn new(m: Vec<Vec<f64>>, phi_offsets: Vec<f64>) -> Result<Self, FluxCalError> {
        let model = CrosstalkModel { m, phi_offsets };
        model.validate()?;
        Ok(model)
    }

    pub fn identity(n: usize) -> Self {
        let m = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
        CrosstalkModel { m, phi_offsets: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.phi_offsets.len()
    }

    pub fn validate(&self) -> Result<(), FluxCalError> {
        let n = self.phi_offsets.len();
        if self.m.len() != n || self.m.iter().any(|row| row.len() != n) {
            return Err(FluxCalError::DimensionMismatch(format!("M must be {n}×{n} to match {n} offsets")));
        }
        Ok(())
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| self.m[i][j])
    }

    /// 2-norm condition number (infinite when singular).
    pub fn condition_number(&self) -> f64 {
        if self.n() == 0 {
            return 1.0;
        }
        let sv = self.matrix().singular_values();
        let max = sv.max();
        let min = sv.min();
        if min == 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }
}

pub fn flux_from_voltage(model: &CrosstalkModel, v: &[f64]) -> Result<Vec<f64>, FluxCalError> {
    model.validate()?;
    if v.len() != model.n() {
        return Err(FluxCalError::DimensionMismatch(format!("{} voltages for {} lines", v.len(), model.n())));
    }
    Ok(model
        .m
        .iter()
        .zip(&model.phi_offsets)
        .map(|(row, off)| row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() + off)
        .collect())
}

pub fn voltages_for_flux(model: &CrosstalkModel, target: &[f64]) -> Result<Vec<f64>, FluxCalError> {
    model.validate()?;
    if target.len() != model.n() {
        return Err(FluxCalError::DimensionMismatch(format!(
            "{} target fluxes for {} lines",
            target.len(),
            model.n()
        )));
    }
    let condition = model.condition_number();
    if !(condition <= MAX_CONDITION) {
        return Err(FluxCalError::SingularMatrix { condition });
    }
    let rhs = DVector::from_iterator(target.len(), target.iter().zip(&model.phi_offsets).map(|(t, o)| t - o));
    let v = model.matrix().lu().solve(&rhs).ok_or(FluxCalError::SingularMatrix { condition })?;
    Ok(v.iter().copied().collect())
}

/// Settings of the synthetic calibration experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Protocol {
    /// Each line's reference mode sits at the qubit frequency for this flux.
    pub monitor_flux: f64,
    /// Flux at which every qubit is parked for the slope measurements.
    pub parking_flux: f64,
    /// Bias sweeps cover `[-window, window]` volts.
    pub window: f64,
    /// Initial half-span of the finite-difference slope measurement, volts.
    pub fd_span: f64,
    /// Allowed relative deviation from linear response within the span.
    pub linearity_tol: f64,
    /// Standard deviation of the crossing-voltage noise, volts.
    pub crossing_noise: f64,
    /// Standard deviation of the slope noise, GHz per volt.
    pub slope_noise: f64,
    pub seed: u64,
}

impl Default for Protocol {
    fn default() -> Self {
        Protocol {
            monitor_flux: 0.15,
            parking_flux: 0.25,
            window: 3.0,
            fd_span: 1e-3,
            linearity_tol: 0.01,
            crossing_noise: 0.0,
            slope_noise: 0.0,
            seed: 0,
        }
    }
}

/// Synthetic calibration data for `n` bias lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasurementSet {
    pub transmons: Vec<TransmonSpec>,
    /// Reference-mode frequency used on each line, GHz.
    pub monitor_freq: Vec<f64>,
    /// Bias voltages of line `i` (others at 0 V) where qubit `i` crosses its reference mode.
    pub crossings: Vec<Vec<f64>>,
    /// Qubit frequency at the parking point, GHz.
    pub parking_freq: Vec<f64>,
    /// `slopes[i][j] = ∂f_i/∂V_j` at the parking point, GHz per volt.
    pub slopes: Vec<Vec<f64>>,
}

fn centered_slope(
    spec: &TransmonSpec,
    model: &CrosstalkModel,
    v0: &[f64],
    i: usize,
    j: usize,
    span: f64,
) -> Result<f64, FluxCalError> {
    let mut v = v0.to_vec();
    v[j] = v0[j] + span;
    let fp = transmon_frequency(spec, flux_from_voltage(model, &v)?[i])?;
    v[j] = v0[j] - span;
    let fm = transmon_frequency(spec, flux_from_voltage(model, &v)?[i])?;
    Ok((fp - fm) / (2.0 * span))
}

/// Finite-difference slope with the span halved until the response is
/// linear to within `tol` (comparing spans `h` and `h/2`).
fn linear_slope(
    spec: &TransmonSpec,
    model: &CrosstalkModel,
    v0: &[f64],
    i: usize,
    j: usize,
    span: f64,
    tol: f64,
) -> Result<f64, FluxCalError> {
    let mut h = span;
    let mut s = centered_slope(spec, model, v0, i, j, h)?;
    for _ in 0..40 {
        let s_half = centered_slope(spec, model, v0, i, j, h / 2.0)?;
        let scale = s_half.abs().max(1e-9);
        if (s - s_half).abs() <= tol * scale {
            return Ok(s_half);
        }
        h /= 2.0;
        s = s_half;
    }
    Ok(s)
}

pub fn simulate_measurements(
    truth: &CrosstalkModel,
    transmons: &[TransmonSpec],
    protocol: &Protocol,
) -> Result<MeasurementSet, FluxCalError> {
    truth.validate()?;
    let n = truth.n();
    if transmons.len() != n {
        return Err(FluxCalError::DimensionMismatch(format!(
            "{} transmons for {} lines",
            transmons.len(),
            n
        )));
    }
    if !(protocol.window > 0.0) || !(protocol.fd_span > 0.0) || !(protocol.linearity_tol > 0.0) {
        return Err(FluxCalError::InvalidProtocol(
            "window, fd_span and linearity_tol must be positive".into(),
        ));
    }
    if protocol.crossing_noise < 0.0 || protocol.slope_noise < 0.0 {
        return Err(FluxCalError::InvalidProtocol("noise scales must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(protocol.seed);
    let crossing_noise = Normal::new(0.0, protocol.crossing_noise)
        .map_err(|e| FluxCalError::InvalidProtocol(e.to_string()))?;
    let slope_noise =
        Normal::new(0.0, protocol.slope_noise).map_err(|e| FluxCalError::InvalidProtocol(e.to_string()))?;

    let mut monitor_freq = Vec::with_capacity(n);
    let mut crossings = Vec::with_capacity(n);
    for (i, spec) in transmons.iter().enumerate() {
        let f_mon = transmon_frequency(spec, protocol.monitor_flux)?;
        let phi_c = flux_for_frequency(spec, f_mon)?;
        let mii = truth.m[i][i];
        if mii == 0.0 {
            return Err(FluxCalError::SingularMatrix { condition: f64::INFINITY });
        }
        // φ = M_ii V + φ*_i hits n ± φ_c
        let phi_at = |v: f64| mii * v + truth.phi_offsets[i];
        let (a, b) = (phi_at(-protocol.window), phi_at(protocol.window));
        let (lo, hi) = (a.min(b), a.max(b));
        let mut line = Vec::new();
        for k in (lo.floor() as i64 - 1)..=(hi.ceil() as i64 + 1) {
            for phi in [k as f64 - phi_c, k as f64 + phi_c] {
                if (lo..=hi).contains(&phi) {
                    line.push((phi - truth.phi_offsets[i]) / mii);
                }
            }
        }
        line.sort_by(f64::total_cmp);
        line.dedup();
        for v in &mut line {
            *v += crossing_noise.sample(&mut rng);
        }
        monitor_freq.push(f_mon);
        crossings.push(line);
    }

    let park = vec![protocol.parking_flux; n];
    let v0 = voltages_for_flux(truth, &park)?;
    let mut slopes = vec![vec![0.0; n]; n];
    let mut parking_freq = Vec::with_capacity(n);
    for (i, spec) in transmons.iter().enumerate() {
        parking_freq.push(transmon_frequency(spec, protocol.parking_flux)?);
        for j in 0..n {
            let s = linear_slope(spec, truth, &v0, i, j, protocol.fd_span, protocol.linearity_tol)?;
            slopes[i][j] = s + slope_noise.sample(&mut rng);
        }
    }
    Ok(MeasurementSet { transmons: transmons.to_vec(), monitor_freq, crossings, parking_freq, slopes })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub model: CrosstalkModel,
    /// Measured minus model-predicted slope, GHz per volt. Off-diagonal
    /// entries vanish by construction; diagonal ones compare the period and
    /// slope estimates of `M_ii`.
    pub slope_residuals: Vec<Vec<f64>>,
    /// RMS of measured minus predicted crossing voltages per line, volts.
    pub crossing_rms: Vec<f64>,
    pub condition_number: f64,
}

fn wrap_flux(phi: f64) -> f64 {
    phi - (phi + 0.5).floor()
}

pub fn calibrate(meas: &MeasurementSet) -> Result<Calibration, FluxCalError> {
    let n = meas.transmons.len();
    if meas.monitor_freq.len() != n
        || meas.crossings.len() != n
        || meas.parking_freq.len() != n
        || meas.slopes.len() != n
        || meas.slopes.iter().any(|r| r.len() != n)
    {
        return Err(FluxCalError::IncompleteMeasurements(format!("expected {n} lines with {n}×{n} slopes")));
    }
    let mut m = vec![vec![0.0; n]; n];
    let mut dfdphi = vec![0.0; n];
    for i in 0..n {
        let spec = &meas.transmons[i];
        let phi_park = flux_for_frequency(spec, meas.parking_freq[i])?;
        let slope = frequency_slope(spec, phi_park)?;
        if slope.abs() < MIN_FLUX_SLOPE {
            return Err(FluxCalError::DegenerateSlope { qubit: i, slope });
        }
        dfdphi[i] = slope;
        for j in 0..n {
            m[i][j] = meas.slopes[i][j] / slope;
        }
    }

    let mut offsets = vec![0.0; n];
    let mut crossing_rms = vec![0.0; n];
    for i in 0..n {
        let c = &meas.crossings[i];
        if c.len() < 3 {
            return Err(FluxCalError::IncompleteMeasurements(format!(
                "line {i} has {} crossings, need at least 3",
                c.len()
            )));
        }
        let period = c.windows(3).map(|w| w[2] - w[0]).sum::<f64>() / (c.len() - 2) as f64;
        let magnitude = 1.0 / period;
        let sign = m[i][i].signum();
        m[i][i] = sign * magnitude;

        let phi_c = flux_for_frequency(&meas.transmons[i], meas.monitor_freq[i])?;
        let sweet_gap = 2.0 * phi_c * period;
        let other_gap = (1.0 - 2.0 * phi_c) * period;
        if (sweet_gap - other_gap).abs() < 1e-3 * period {
            return Err(FluxCalError::IncompleteMeasurements(format!(
                "line {i}: reference mode at quarter flux cannot locate the sweet spot"
            )));
        }
        // crossing pair around an integer flux: gap closest to the sweet-spot gap
        let j = (0..c.len() - 1)
            .min_by(|&a, &b| {
                let da = (c[a + 1] - c[a] - sweet_gap).abs();
                let db = (c[b + 1] - c[b] - sweet_gap).abs();
                da.total_cmp(&db)
            })
            .expect("at least three crossings");
        let v_mid = 0.5 * (c[j] + c[j + 1]);
        offsets[i] = wrap_flux(-m[i][i] * v_mid);

        // predicted crossings for the residual
        let mut sq = 0.0;
        for &v in c {
            let phi = m[i][i] * v + offsets[i];
            let frac = phi - phi.round();
            let target = phi.round() + if frac >= 0.0 { phi_c } else { -phi_c };
            let v_pred = (target - offsets[i]) / m[i][i];
            sq += (v - v_pred).powi(2);
        }
        crossing_rms[i] = (sq / c.len() as f64).sqrt();
    }

    let slope_residuals =
        (0..n).map(|i| (0..n).map(|j| meas.slopes[i][j] - dfdphi[i] * m[i][j]).collect()).collect();
    let model = CrosstalkModel::new(m, offsets)?;
    let condition_number = model.condition_number();
    Ok(Calibration { model, slope_residuals, crossing_rms, condition_number })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec() -> TransmonSpec {
        TransmonSpec { ec: 0.2, ej_sum: 40.0, ej_diff: 0.0 }
    }

    fn max_err(a: &CrosstalkModel, b: &CrosstalkModel) -> f64 {
        let mut e: f64 = 0.0;
        for i in 0..a.n() {
            for j in 0..a.n() {
                e = e.max((a.m[i][j] - b.m[i][j]).abs());
            }
        }
        e
    }

    #[test]
    fn identity_forward_and_inverse() {
        let id = CrosstalkModel::identity(3);
        assert_eq!(flux_from_voltage(&id, &[0.3, 0.0, 0.0]).unwrap(), vec![0.3, 0.0, 0.0]);
        let m = CrosstalkModel { phi_offsets: vec![0.1, -0.2, 0.05], ..id };
        assert_eq!(flux_from_voltage(&m, &[0.0; 3]).unwrap(), m.phi_offsets);
        let v = voltages_for_flux(&m, &[0.3, 0.3, 0.3]).unwrap();
        for (a, b) in v.iter().zip([0.2, 0.5, 0.25]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn singular_and_mismatched_models() {
        let m = CrosstalkModel::new(vec![vec![1.0, 2.0], vec![2.0, 4.0]], vec![0.0, 0.0]).unwrap();
        assert!(matches!(voltages_for_flux(&m, &[0.1, 0.1]), Err(FluxCalError::SingularMatrix { .. })));
        assert!(CrosstalkModel::new(vec![vec![1.0]], vec![0.0, 0.0]).is_err());
        assert!(flux_from_voltage(&CrosstalkModel::identity(2), &[1.0]).is_err());
    }

    #[test]
    fn json_keys() {
        let m = CrosstalkModel::identity(2);
        let v: serde_json::Value = serde_json::to_value(&m).unwrap();
        assert!(v.get("M").is_some() && v.get("phi_offsets").is_some());
    }

    #[test]
    fn identity_crossing_period_is_one_volt() {
        let meas =
            simulate_measurements(&CrosstalkModel::identity(1), &[spec()], &Protocol::default()).unwrap();
        let c = &meas.crossings[0];
        for w in c.windows(3) {
            assert!((w[2] - w[0] - 1.0).abs() < 1e-12);
        }
        let cal = calibrate(&meas).unwrap();
        assert!((cal.model.m[0][0] - 1.0).abs() < 1e-9);
        assert!(cal.model.phi_offsets[0].abs() < 1e-9);
    }

    #[test]
    fn slopes_follow_chain_rule() {
        let truth = CrosstalkModel::new(vec![vec![0.5, 0.02], vec![-0.015, 0.4]], vec![0.1, -0.3]).unwrap();
        let meas = simulate_measurements(&truth, &[spec(), spec()], &Protocol::default()).unwrap();
        // independent oracle: finite difference of the transmon curve in flux
        let h = 1e-7;
        let dfdphi = (transmon_frequency(&spec(), 0.25 + h).unwrap()
            - transmon_frequency(&spec(), 0.25 - h).unwrap())
            / (2.0 * h);
        for i in 0..2 {
            for j in 0..2 {
                let expected = dfdphi * truth.m[i][j];
                assert!((meas.slopes[i][j] - expected).abs() < 1e-4 * dfdphi.abs(), "{i}{j}");
            }
        }
    }

    #[test]
    fn zero_noise_is_deterministic() {
        let truth = CrosstalkModel::identity(2);
        let p = Protocol { seed: 1, ..Protocol::default() };
        let a = simulate_measurements(&truth, &[spec(), spec()], &p).unwrap();
        let b = simulate_measurements(&truth, &[spec(), spec()], &Protocol { seed: 99, ..p }).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn sweet_spot_parking_is_degenerate() {
        let p = Protocol { parking_flux: 0.0, ..Protocol::default() };
        let meas = simulate_measurements(&CrosstalkModel::identity(1), &[spec()], &p).unwrap();
        assert!(matches!(calibrate(&meas), Err(FluxCalError::DegenerateSlope { .. })));
    }

    #[test]
    fn incomplete_sets_are_rejected() {
        let mut meas =
            simulate_measurements(&CrosstalkModel::identity(2), &[spec(), spec()], &Protocol::default())
                .unwrap();
        meas.slopes[1].pop();
        assert!(matches!(calibrate(&meas), Err(FluxCalError::IncompleteMeasurements(_))));
    }

    #[test]
    fn error_grows_linearly_with_slope_noise() {
        let truth = CrosstalkModel::new(
            vec![vec![0.5, 0.02, -0.01], vec![0.01, 0.45, 0.03], vec![-0.02, 0.015, 0.55]],
            vec![0.1, -0.2, 0.3],
        )
        .unwrap();
        let specs = [spec(), spec(), spec()];
        let mean_err = |sigma: f64| {
            (0..40)
                .map(|seed| {
                    let p = Protocol { slope_noise: sigma, seed, ..Protocol::default() };
                    let cal = calibrate(&simulate_measurements(&truth, &specs, &p).unwrap()).unwrap();
                    max_err(&cal.model, &truth)
                })
                .sum::<f64>()
                / 40.0
        };
        let (e1, e2, e4) = (mean_err(1e-4), mean_err(2e-4), mean_err(4e-4));
        assert!(e1 > 0.0);
        assert!((e2 / e1 - 2.0).abs() < 0.4, "{e1} {e2}");
        assert!((e4 / e2 - 2.0).abs() < 0.4, "{e2} {e4}");
    }

    fn random_model(n: usize) -> impl Strategy<Value = CrosstalkModel> {
        (
            proptest::collection::vec(0.3f64..0.8, n),
            proptest::collection::vec(-0.2f64..0.2, n * n),
            proptest::collection::vec(-0.5f64..0.5, n),
        )
            .prop_map(move |(diag, off, offsets)| {
                let m = (0..n)
                    .map(|i| {
                        (0..n).map(|j| if i == j { diag[i] } else { off[i * n + j] * diag[i] }).collect()
                    })
                    .collect();
                CrosstalkModel { m, phi_offsets: offsets }
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn calibration_round_trip(truth in (1usize..5).prop_flat_map(random_model)) {
            let specs = vec![spec(); truth.n()];
            let meas = simulate_measurements(&truth, &specs, &Protocol::default()).unwrap();
            let cal = calibrate(&meas).unwrap();
            prop_assert!(max_err(&cal.model, &truth) < 1e-6, "{:?}", cal.model);
            for (a, b) in cal.model.phi_offsets.iter().zip(&truth.phi_offsets) {
                prop_assert!((a - b).abs() < 1e-6);
            }
        }

        #[test]
        fn inversion_round_trip(
            truth in (1usize..6).prop_flat_map(random_model),
            seed in proptest::collection::vec(-1.0f64..1.0, 6),
        ) {
            let n = truth.n();
            let v: Vec<f64> = seed[..n].to_vec();
            let phi = flux_from_voltage(&truth, &v).unwrap();
            let back = voltages_for_flux(&truth, &phi).unwrap();
            for (a, b) in back.iter().zip(&v) {
                prop_assert!((a - b).abs() < 1e-9);
            }
            let phi2 = flux_from_voltage(&truth, &back).unwrap();
            for (a, b) in phi2.iter().zip(&phi) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn forward_matches_brute_force(
            m in proptest::collection::vec(-1.0f64..1.0, 9),
            off in proptest::collection::vec(-0.5f64..0.5, 3),
            v in proptest::collection::vec(-2.0f64..2.0, 3),
        ) {
            let model = CrosstalkModel::new(
                vec![m[0..3].to_vec(), m[3..6].to_vec(), m[6..9].to_vec()],
                off.clone(),
            ).unwrap();
            let phi = flux_from_voltage(&model, &v).unwrap();
            for i in 0..3 {
                let mut acc = off[i];
                for j in 0..3 {
                    acc += m[3 * i + j] * v[j];
                }
                prop_assert!((phi[i] - acc).abs() < 1e-12);
            }
        }
    }
}
