//! Sensing-error parameters and energy-detector dwell-time sizing.
//!
//! The secondary user's detector is characterized by a false-alarm
//! probability `p_fa` (a free channel reads busy) and a misdetection
//! probability `p_md` (a busy channel reads free). For an energy detector
//! over AWGN, hitting target error rates at a given SNR requires a minimum
//! dwell time per sensing event; [`required_sensing_time`] computes it.

use crate::error::{Error, Result};
use crate::renewal::ChannelParams;

/// False-alarm and misdetection probabilities of one sensing event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensingErrorModel {
    p_fa: f64,
    p_md: f64,
}

impl SensingErrorModel {
    /// Both probabilities must lie in `[0, 1)`.
    pub fn new(p_fa: f64, p_md: f64) -> Result<Self> {
        for (name, p) in [("p_fa", p_fa), ("p_md", p_md)] {
            if !p.is_finite() || !(0.0..1.0).contains(&p) {
                return Err(Error::invalid(format!(
                    "{name} must lie in [0, 1), got {p}"
                )));
            }
        }
        Ok(Self { p_fa, p_md })
    }

    /// Error-free sensing.
    pub fn perfect() -> Self {
        Self { p_fa: 0.0, p_md: 0.0 }
    }

    pub fn p_fa(&self) -> f64 {
        self.p_fa
    }

    pub fn p_md(&self) -> f64 {
        self.p_md
    }

    pub fn is_perfect(&self) -> bool {
        self.p_fa == 0.0 && self.p_md == 0.0
    }
}

/// Physical-layer parameters of the energy detector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    sampling_freq: f64,
    snr: f64,
}

impl DetectorSpec {
    /// `sampling_freq` in samples per unit time, `snr` as a linear power
    /// ratio; both must be positive.
    pub fn new(sampling_freq: f64, snr: f64) -> Result<Self> {
        for (name, v) in [("sampling_freq", sampling_freq), ("snr", snr)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { sampling_freq, snr })
    }

    pub fn sampling_freq(&self) -> f64 {
        self.sampling_freq
    }

    pub fn snr(&self) -> f64 {
        self.snr
    }
}

/// Gaussian tail probability `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Inverse of [`q_function`] on `(0, 1)`.
///
/// A rational approximation of the probit supplies a starting point that is
/// already accurate to ~1e-9; one Newton step on `Q(x) - p` polishes it to
/// full double precision.
pub fn inverse_q(p: f64) -> Result<f64> {
    if !p.is_finite() || p <= 0.0 || p >= 1.0 {
        return Err(Error::invalid(format!(
            "inverse_q argument must lie in (0, 1), got {p}"
        )));
    }
    let x = -probit(p);
    // Newton: Q'(x) = -phi(x), so x_new = x + (Q(x) - p) / phi(x).
    let phi = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let x = if phi > 0.0 { x + (q_function(x) - p) / phi } else { x };
    Ok(x)
}

/// Rational approximation to the standard normal quantile (probit), with
/// central and tail branches. Relative error below ~1.2e-9 everywhere.
fn probit(p: f64) -> f64 {
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.38357751867269e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    }
}

/// Minimum energy-detector dwell time achieving the target error rates:
///
/// ```text
/// T_s = (2 / f_s) · [Q⁻¹(p_fa) - Q⁻¹(1 - p_md) · √(1 + 2·snr)]² / snr²
/// ```
///
/// Targets must lie in `(0, 1)`; the degenerate case `p_fa = 1 - p_md`
/// (detector no better than chance) yields `T_s = 0` only when both are 0.5.
pub fn required_sensing_time(det: &DetectorSpec, p_fa: f64, p_md: f64) -> Result<f64> {
    for (name, p) in [("p_fa", p_fa), ("p_md", p_md)] {
        if !p.is_finite() || p <= 0.0 || p >= 1.0 {
            return Err(Error::invalid(format!(
                "target {name} must lie in (0, 1), got {p}"
            )));
        }
    }
    let a = inverse_q(p_fa)?;
    let b = inverse_q(1.0 - p_md)?;
    let num = a - b * (1.0 + 2.0 * det.snr).sqrt();
    Ok((2.0 / det.sampling_freq) * num * num / (det.snr * det.snr))
}

/// The analytic model treats a sensing event as an instantaneous sample, so
/// the dwell time should be short relative to channel dynamics. Returns a
/// human-readable warning when `t_s` exceeds a tenth of the shortest mean
/// sojourn; the configuration is still usable.
pub fn dwell_time_warning(t_s: f64, channels: &[ChannelParams]) -> Option<String> {
    let min_sojourn = channels
        .iter()
        .flat_map(|c| [c.mean_free(), c.mean_busy()])
        .fold(f64::INFINITY, f64::min);
    (t_s > 0.1 * min_sojourn).then(|| {
        format!(
            "sensing time {t_s} exceeds 10% of the shortest mean sojourn \
             {min_sojourn}; analytic predictions may degrade"
        )
    })
}
