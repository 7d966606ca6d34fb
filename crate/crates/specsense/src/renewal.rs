//! Renewal-theory primitives for alternating busy/free channels.
//!
//! Each primary channel alternates between busy and free sojourns drawn from
//! independent exponential distributions. Two families of quantities drive
//! everything downstream:
//!
//! * the *expected free time* a secondary user would accumulate over a
//!   look-ahead window of length `t`, given the state observed at the start
//!   of the window ([`ChannelParams::expected_free_time_from_free`],
//!   [`ChannelParams::expected_free_time_from_busy`]);
//! * the probability that the channel is free at the end of the window given
//!   its state at the start ([`ChannelParams::prob_free_given_free`],
//!   [`ChannelParams::prob_free_given_busy`]).
//!
//! For exponential sojourns both have closed forms in the busy fraction `u`
//! and the rate sum `Λ`. [`delta_numeric_oracle`] evaluates the same expected
//! free times for *arbitrary* sojourn distributions by solving the defining
//! renewal equations with trapezoidal quadrature; the closed forms are tested
//! against it.

use crate::error::{Error, Result};

// ---------------------------------------------------------------------------
// Channel state and parameters
// ---------------------------------------------------------------------------

/// Instantaneous occupancy of a primary channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ChannelState {
    Busy,
    Free,
}

impl ChannelState {
    pub fn is_free(self) -> bool {
        matches!(self, ChannelState::Free)
    }

    pub fn toggled(self) -> Self {
        match self {
            ChannelState::Busy => ChannelState::Free,
            ChannelState::Free => ChannelState::Busy,
        }
    }
}

/// Exponential sojourn rates of one primary channel.
///
/// `lambda_free` is the rate parameter of the *free*-period distribution
/// (mean free period `1/lambda_free`); `lambda_busy` is the rate of the
/// *busy*-period distribution. Both must be positive and finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    lambda_free: f64,
    lambda_busy: f64,
}

impl ChannelParams {
    pub fn new(lambda_free: f64, lambda_busy: f64) -> Result<Self> {
        for (name, v) in [("lambda_free", lambda_free), ("lambda_busy", lambda_busy)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::invalid(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self { lambda_free, lambda_busy })
    }

    pub fn lambda_free(&self) -> f64 {
        self.lambda_free
    }

    pub fn lambda_busy(&self) -> f64 {
        self.lambda_busy
    }

    /// Mean duration of one free period.
    pub fn mean_free(&self) -> f64 {
        1.0 / self.lambda_free
    }

    /// Mean duration of one busy period.
    pub fn mean_busy(&self) -> f64 {
        1.0 / self.lambda_busy
    }

    /// Long-run fraction of time the channel is busy:
    /// `u = lambda_free / (lambda_free + lambda_busy)`.
    pub fn utilization(&self) -> f64 {
        self.lambda_free / (self.lambda_free + self.lambda_busy)
    }

    /// Sum of the two rates, `Λ`; `1/Λ` sets the channel's mixing time scale.
    pub fn rate_sum(&self) -> f64 {
        self.lambda_free + self.lambda_busy
    }

    /// Expected free time accumulated over `[0, t]` given the channel was
    /// busy at time 0 (stationary observation). Written `δ⁰(t)`.
    pub fn expected_free_time_from_busy(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.d0(t))
    }

    /// Expected free time accumulated over `[0, t]` given the channel was
    /// free at time 0 (stationary observation). Written `δ¹(t)`.
    pub fn expected_free_time_from_free(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.d1(t))
    }

    /// Probability the channel is free at time `t` given it was free at 0.
    pub fn prob_free_given_free(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.p11(t))
    }

    /// Probability the channel is free at time `t` given it was busy at 0.
    pub fn prob_free_given_busy(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.p01(t))
    }

    // Unchecked fast paths for hot loops whose inputs were validated once.
    // `phi(t) = t + (e^{-Λt} - 1)/Λ` is the common factor; it grows from 0
    // to the asymptote `t - 1/Λ` and stays within `[0, t]`.

    #[inline]
    pub(crate) fn phi(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        let x = self.rate_sum() * t;
        t * (1.0 + em1_over_x(x))
    }

    #[inline]
    pub(crate) fn d0(&self, t: f64) -> f64 {
        (1.0 - self.utilization()) * self.phi(t)
    }

    #[inline]
    pub(crate) fn d1(&self, t: f64) -> f64 {
        t - self.utilization() * self.phi(t)
    }

    #[inline]
    pub(crate) fn p11(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        let u = self.utilization();
        (1.0 - u) + u * (-self.rate_sum() * t).exp()
    }

    #[inline]
    pub(crate) fn p01(&self, t: f64) -> f64 {
        debug_assert!(t >= 0.0);
        (1.0 - self.utilization()) * (1.0 - (-self.rate_sum() * t).exp())
    }
}

fn check_time(t: f64) -> Result<()> {
    if !t.is_finite() || t < 0.0 {
        return Err(Error::invalid(format!(
            "time must be non-negative and finite, got {t}"
        )));
    }
    Ok(())
}

/// `(e^{-x} - 1) / x` for `x >= 0`, stable near zero.
///
/// The direct quotient loses all accuracy as `x → 0`; below a small threshold
/// the truncated series `-1 + x/2 - x²/6` is exact to double precision.
#[inline]
pub fn em1_over_x(x: f64) -> f64 {
    if x < 1e-8 {
        -1.0 + x / 2.0 - x * x / 6.0
    } else {
        (-x).exp_m1() / x
    }
}

// ---------------------------------------------------------------------------
// Numeric oracle for general sojourn distributions
// ---------------------------------------------------------------------------

/// A sojourn-length distribution given by its density, CDF, and mean.
///
/// Only the quadrature oracle consumes this type; the production code path
/// is exponential-only and uses the closed forms above.
pub struct SojournDistribution {
    pdf: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    cdf: Box<dyn Fn(f64) -> f64 + Send + Sync>,
    mean: f64,
}

impl SojournDistribution {
    pub fn new(
        pdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        cdf: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mean: f64,
    ) -> Result<Self> {
        if !mean.is_finite() || mean <= 0.0 {
            return Err(Error::invalid(format!(
                "sojourn mean must be positive and finite, got {mean}"
            )));
        }
        Ok(Self { pdf: Box::new(pdf), cdf: Box::new(cdf), mean })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        if !rate.is_finite() || rate <= 0.0 {
            return Err(Error::invalid(format!(
                "exponential rate must be positive and finite, got {rate}"
            )));
        }
        Self::new(
            move |x| if x < 0.0 { 0.0 } else { rate * (-rate * x).exp() },
            move |x| if x < 0.0 { 0.0 } else { -(-rate * x).exp_m1() },
            1.0 / rate,
        )
    }

    pub fn pdf(&self, x: f64) -> f64 {
        (self.pdf)(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        (self.cdf)(x)
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }
}

/// How the look-ahead window begins.
///
/// *Equilibrium* starts observe the channel at a stationary instant, so the
/// current sojourn's remaining length follows the equilibrium (residual-life)
/// distribution. *Fresh* starts coincide with the beginning of a sojourn.
/// For exponential sojourns the two coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartState {
    FreeEquilibrium,
    BusyEquilibrium,
    FreeFresh,
    BusyFresh,
}

/// Expected free time over `[0, t]` for arbitrary sojourn distributions,
/// via trapezoidal quadrature of the renewal equations at resolution `step`.
///
/// Writing `δ̃¹`/`δ̃⁰` for the fresh-start quantities, the recursions are
///
/// ```text
/// δ̃¹(t) = ∫₀ᵗ f_free(x) · [x + δ̃⁰(t-x)] dx + t · (1 - F_free(t))
/// δ̃⁰(t) = ∫₀ᵗ f_busy(y) · δ̃¹(t-y) dy
/// ```
///
/// and the equilibrium variants replace the first sojourn's density with its
/// residual-life density `(1 - F(x)) / mean`. Error is `O(step²)`; the cost
/// is `O((t/step)²)`.
pub fn delta_numeric_oracle(
    free: &SojournDistribution,
    busy: &SojournDistribution,
    t: f64,
    start: StartState,
    step: f64,
) -> Result<f64> {
    check_time(t)?;
    if !step.is_finite() || step <= 0.0 {
        return Err(Error::invalid(format!("step must be positive, got {step}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let n = (t / step).ceil() as usize;
    let n = n.max(1);
    if n > 10_000_000 {
        return Err(Error::NumericFailure(format!(
            "oracle grid of {n} points is too fine; increase step"
        )));
    }
    let h = t / n as f64;

    let f_free: Vec<f64> = (0..=n).map(|j| free.pdf(j as f64 * h)).collect();
    let f_busy: Vec<f64> = (0..=n).map(|j| busy.pdf(j as f64 * h)).collect();

    // Fresh-start recursion. Index k holds the value at time k·h. The k-th
    // step solves a 2x2 system because each convolution's trapezoid rule
    // couples δ̃¹(t_k) and δ̃⁰(t_k) through the half-weight at lag zero.
    let mut d_free = vec![0.0; n + 1]; // δ̃¹
    let mut d_busy = vec![0.0; n + 1]; // δ̃⁰
    let a = h * f_free[0] / 2.0;
    let b = h * f_busy[0] / 2.0;
    // Running value of ∫₀^{t_k} x·f_free(x) dx by cumulative trapezoid.
    let mut trunc_mean = 0.0;
    for k in 1..=n {
        let tk = k as f64 * h;
        let x_prev = (k - 1) as f64 * h;
        trunc_mean += h * (x_prev * f_free[k - 1] + tk * f_free[k]) / 2.0;
        let term_free = trunc_mean + tk * (1.0 - free.cdf(tk));

        let mut conv_free = 0.0; // interior of ∫ f_free(x) δ̃⁰(t_k - x) dx
        let mut conv_busy = 0.0; // interior of ∫ f_busy(y) δ̃¹(t_k - y) dy
        for j in 1..k {
            conv_free += f_free[j] * d_busy[k - j];
            conv_busy += f_busy[j] * d_free[k - j];
        }
        let a_k = term_free + h * conv_free;
        let b_k = h * conv_busy;
        let df = (a_k + a * b_k) / (1.0 - a * b);
        d_free[k] = df;
        d_busy[k] = b_k + b * df;
    }

    match start {
        StartState::FreeFresh => Ok(d_free[n]),
        StartState::BusyFresh => Ok(d_busy[n]),
        StartState::FreeEquilibrium => {
            // Residual free sojourn of length x contributes min(x, t) of free
            // time; if it ends at x < t a fresh busy sojourn follows.
            let g: Vec<f64> =
                (0..=n).map(|j| (1.0 - free.cdf(j as f64 * h)) / free.mean()).collect();
            let mut g_cum = 0.0; // ∫₀^t g
            let mut first = 0.0; // ∫₀^t x·g(x) dx
            let mut conv = g[0] * d_busy[n] / 2.0;
            for j in 1..=n {
                let x = j as f64 * h;
                g_cum += h * (g[j - 1] + g[j]) / 2.0;
                first += h * ((x - h) * g[j - 1] + x * g[j]) / 2.0;
                if j < n {
                    conv += g[j] * d_busy[n - j];
                }
            }
            let e_min = first + t * (1.0 - g_cum);
            Ok(e_min + h * conv)
        }
        StartState::BusyEquilibrium => {
            let g: Vec<f64> =
                (0..=n).map(|j| (1.0 - busy.cdf(j as f64 * h)) / busy.mean()).collect();
            let mut conv = g[0] * d_free[n] / 2.0;
            for j in 1..n {
                conv += g[j] * d_free[n - j];
            }
            Ok(h * conv)
        }
    }
}

// ---------------------------------------------------------------------------
