use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::QedError;

/// Below this `E_J/E_C` at zero flux the device is outside the transmon regime.
pub const TRANSMON_RATIO_ADVISORY: f64 = 20.0;

const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;
const PLANCK: f64 = 6.626_070_15e-34;

/// Split-junction transmon, energies in GHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransmonSpec {
    #[serde(rename = "EC")]
    pub ec: f64,
    #[serde(rename = "EJ_sum")]
    pub ej_sum: f64,
    #[serde(rename = "EJ_diff", default)]
    pub ej_diff: f64,
}

impl TransmonSpec {
    pub fn validate(&self) -> Result<(), QedError> {
        if !(self.ec > 0.0) || !self.ec.is_finite() {
            return Err(QedError::InvalidTransmon(format!("EC must be positive, got {}", self.ec)));
        }
        if !(self.ej_sum > 0.0) || !self.ej_sum.is_finite() {
            return Err(QedError::InvalidTransmon(format!("EJ_sum must be positive, got {}", self.ej_sum)));
        }
        if !(0.0..=self.ej_sum).contains(&self.ej_diff) {
            return Err(QedError::InvalidTransmon(format!(
                "EJ_diff must lie in [0, EJ_sum], got {}",
                self.ej_diff
            )));
        }
        Ok(())
    }

    fn asymmetry(&self) -> f64 {
        self.ej_diff / self.ej_sum
    }

    /// Effective Josephson energy of the SQUID at the given flux.
    pub fn ej(&self, flux: f64) -> f64 {
        let (s, c) = (PI * flux).sin_cos();
        let d = self.asymmetry();
        self.ej_sum * (c * c + d * d * s * s).sqrt()
    }

    /// Advisory message when `E_J/E_C` at zero flux is below the transmon regime.
    pub fn regime_warning(&self) -> Option<String> {
        let ratio = self.ej_sum / self.ec;
        (ratio < TRANSMON_RATIO_ADVISORY).then(|| {
            format!("EJ/EC = {ratio:.1} at zero flux is below {TRANSMON_RATIO_ADVISORY}; transmon formula is approximate")
        })
    }

    /// `f01` range over a flux period: `(min, max)`.
    pub fn frequency_range(&self) -> Result<(f64, f64), QedError> {
        Ok((transmon_frequency(self, 0.5)?, transmon_frequency(self, 0.0)?))
    }
}

/// `f01 = √(8 E_J(Φ) E_C) − E_C`.
pub fn transmon_frequency(spec: &TransmonSpec, flux: f64) -> Result<f64, QedError> {
    spec.validate()?;
    let ej = spec.ej(flux);
    if ej / spec.ec < 1.0 {
        return Err(QedError::TransmonApproxInvalid { flux, ratio: ej / spec.ec });
    }
    Ok((8.0 * ej * spec.ec).sqrt() - spec.ec)
}

/// `d f01 / dΦ` in GHz per flux quantum.
pub fn frequency_slope(spec: &TransmonSpec, flux: f64) -> Result<f64, QedError> {
    spec.validate()?;
    let ej = spec.ej(flux);
    if ej / spec.ec < 1.0 {
        return Err(QedError::TransmonApproxInvalid { flux, ratio: ej / spec.ec });
    }
    let (s, c) = (PI * flux).sin_cos();
    let d = spec.asymmetry();
    let dej = spec.ej_sum * PI * s * c * (d * d - 1.0) / (c * c + d * d * s * s).sqrt();
    Ok((2.0 * spec.ec / ej).sqrt() * dej)
}

/// Flux in `[0, 0.5]` at which `f01` equals `target` (the branch where
/// frequency decreases with flux).
pub fn flux_for_frequency(spec: &TransmonSpec, target: f64) -> Result<f64, QedError> {
    spec.validate()?;
    let f_max = transmon_frequency(spec, 0.0)?;
    // highest valid flux on the half period
    let mut hi = 0.5;
    let f_min = match transmon_frequency(spec, hi) {
        Ok(f) => f,
        Err(_) => {
            let (mut a, mut b) = (0.0, 0.5);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if spec.ej(m) / spec.ec >= 1.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            hi = a;
            transmon_frequency(spec, hi)?
        }
    };
    if !(f_min..=f_max).contains(&target) {
        return Err(QedError::FrequencyUnreachable { target, min: f_min, max: f_max });
    }
    let (mut a, mut b) = (0.0, hi);
    for _ in 0..100 {
        let m = 0.5 * (a + b);
        if transmon_frequency(spec, m)? > target {
            a = m;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}

/// Charging energy `e²/(2 C_Σ h)` in GHz for a capacitance in fF.
pub fn ec_from_capacitance(c_sigma_ff: f64) -> Result<f64, QedError> {
    if !(c_sigma_ff > 0.0) || !c_sigma_ff.is_finite() {
        return Err(QedError::NonPositiveInput("capacitance"));
    }
    let c = c_sigma_ff * 1e-15;
    Ok(ELEMENTARY_CHARGE * ELEMENTARY_CHARGE / (2.0 * c * PLANCK) * 1e-9)
}

/// Coupling rescaled from a reference operating point: `g ∝ √(f_mode f_qubit)`.
pub fn g_scaled(
    g_ref: f64,
    f_ref_mode: f64,
    f_ref_qubit: f64,
    f_mode: f64,
    f_qubit: f64,
) -> Result<f64, QedError> {
    for (v, name) in [
        (f_ref_mode, "reference mode frequency"),
        (f_ref_qubit, "reference qubit frequency"),
        (f_mode, "mode frequency"),
        (f_qubit, "qubit frequency"),
    ] {
        if !(v > 0.0) {
            return Err(QedError::NonPositiveInput(name));
        }
    }
    Ok(g_ref * ((f_mode * f_qubit) / (f_ref_mode * f_ref_qubit)).sqrt())
}
