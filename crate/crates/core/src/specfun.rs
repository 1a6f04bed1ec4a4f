//! Channel constants `H(τ,β)`, `D(τ,β)` and `T(τ,β)`.
//!
//! With Rayleigh fading and path-loss exponent `β`, the Laplace transform of
//! the interference seen by a user served at distance `r` factors into two
//! groups. BSs that hold the requested content are no closer than the
//! serving BS (after power normalization) and contribute through `H`; BSs that
//! do not hold it can be arbitrarily close and contribute through `D`:
//!
//! ```text
//! H(τ,β) = 2τ/(β-2) · ₂F₁(1, 1-2/β; 2-2/β; -τ)
//! D(τ,β) = (2/β) τ^(2/β) B(2/β, 1-2/β)
//! T(τ,β) = H - D + 1
//! ```

use serde::Serialize;
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};

const SERIES_REL_TOL: f64 = 1e-16;
const SERIES_MAX_TERMS: usize = 10_000;

/// Above this `|z|` the Pfaff argument `z/(z-1)` exceeds 0.9 and the series
/// in `1/z` converges faster.
const PFAFF_MAX_ABS_Z: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChannelConstants {
    pub h: f64,
    pub d: f64,
    /// `H - D + 1`; always positive since `D - H < 1`.
    pub t: f64,
    pub tau: f64,
    pub beta: f64,
}

pub fn channel_constants(tau: f64, beta: f64) -> Result<ChannelConstants> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!(
            "SINR threshold must be positive, got {tau}"
        )));
    }
    if !(beta.is_finite() && beta > 2.0) {
        return Err(Error::invalid(format!(
            "path loss exponent must exceed 2, got {beta}"
        )));
    }
    let delta = 2.0 / beta;
    let h = 2.0 * tau / (beta - 2.0) * gauss_2f1_neg_arg(1.0, 1.0 - delta, 2.0 - delta, -tau)?;
    let d = delta * tau.powf(delta) * beta_fn(delta, 1.0 - delta)?;
    Ok(ChannelConstants {
        h,
        d,
        t: h - d + 1.0,
        tau,
        beta,
    })
}

/// Euler Beta function `B(x, y) = Γ(x)Γ(y)/Γ(x+y)`, via log-gamma.
pub fn beta_fn(x: f64, y: f64) -> Result<f64> {
    if !(x.is_finite() && y.is_finite() && x > 0.0 && y > 0.0) {
        return Err(Error::invalid(format!(
            "Beta function needs positive arguments, got ({x}, {y})"
        )));
    }
    Ok((ln_gamma(x) + ln_gamma(y) - ln_gamma(x + y)).exp())
}

fn is_nonpositive_integer(x: f64) -> bool {
    x <= 0.0 && x == x.round()
}

/// `1/Γ(x)`, zero at the poles.
fn recip_gamma(x: f64) -> f64 {
    if is_nonpositive_integer(x) {
        0.0
    } else {
        1.0 / gamma(x)
    }
}

/// Gauss hypergeometric `₂F₁(a, b; c; z)` for real `z ≤ 0`.
///
/// For `|z| ≤ 9` the Pfaff transformation
/// `₂F₁(a,b;c;z) = (1-z)^(-a) ₂F₁(a, c-b; c; z/(z-1))` moves the argument into
/// `[0, 0.9]` where the power series converges. Farther out, when `a - b` is
/// not an integer, the connection formula to `1/z` is used instead.
pub fn gauss_2f1_neg_arg(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && c.is_finite() && z.is_finite()) {
        return Err(Error::invalid("2F1 arguments must be finite"));
    }
    if z > 0.0 {
        return Err(Error::invalid(format!(
            "2F1 is only implemented for z <= 0, got {z}"
        )));
    }
    if is_nonpositive_integer(c) {
        return Err(Error::invalid(format!(
            "2F1 undefined for nonpositive integer c = {c}"
        )));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if -z > PFAFF_MAX_ABS_Z && !is_integer(a - b) {
        if let Some(value) = large_argument(a, b, c, z)? {
            return Ok(value);
        }
    }
    let w = z / (z - 1.0);
    Ok((1.0 - z).powf(-a) * power_series(a, c - b, c, w)?)
}

fn is_integer(x: f64) -> bool {
    x == x.round()
}

/// DLMF 15.8.2, valid for `|z| > 1`, `z` off the positive real axis.
/// Returns `None` when a gamma prefactor is singular.
fn large_argument(a: f64, b: f64, c: f64, z: f64) -> Result<Option<f64>> {
    let poles = [b - a, a - b, c];
    if poles.iter().any(|&x| is_nonpositive_integer(x)) {
        return Ok(None);
    }
    let gc = gamma(c);
    let first = gc * gamma(b - a) * recip_gamma(b) * recip_gamma(c - a);
    let second = gc * gamma(a - b) * recip_gamma(a) * recip_gamma(c - b);
    let mut total = 0.0;
    if first != 0.0 {
        total += first * (-z).powf(-a) * power_series(a, a - c + 1.0, a - b + 1.0, 1.0 / z)?;
    }
    if second != 0.0 {
        total += second * (-z).powf(-b) * power_series(b, b - c + 1.0, b - a + 1.0, 1.0 / z)?;
    }
    if !total.is_finite() {
        return Ok(None);
    }
    Ok(Some(total))
}

/// Direct Gauss series, `|x| < 1`.
fn power_series(a: f64, b: f64, c: f64, x: f64) -> Result<f64> {
    let mut term = 1.0;
    let mut sum = 1.0;
    for n in 0..SERIES_MAX_TERMS {
        let k = n as f64;
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * x;
        sum += term;
        if term == 0.0 || term.abs() <= SERIES_REL_TOL * sum.abs() {
            return Ok(sum);
        }
    }
    Err(Error::Numerical(format!(
        "2F1 series ({a}, {b}; {c}; {x}) did not converge in {SERIES_MAX_TERMS} terms; \
         last term {term:e}, partial sum {sum:e}"
    )))
}
