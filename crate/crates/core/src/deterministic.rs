//! The infinite-population limit `ẋ_k = (s(M₁ − k) − λ) x_k + λ x_{k−1}`.
//!
//! In cumulant coordinates the system is linear, `κ̇_k = −s κ_{k+1} + λ`, and
//! its solution factorizes on the probability generating function: tilt the
//! initial profile by `e^{−stk}`, renormalize, then convolve with
//! Poisson(`μ_t`), `μ_t = (λ/s)(1 − e^{−st})`. [`evolve_closed`] implements
//! that form; [`evolve_ode`] integrates the original equations and serves as
//! its independent check.

use crate::error::{domain, Error, Result};
use crate::params::RatchetParams;
use crate::profile::{check_window, poisson_weights, poisson_window, TypeProfile, EXTEND_TOLERANCE};

/// Mean of the Poisson kernel accumulated over time `t`, `(λ/s)(1 − e^{−st})`.
pub fn poisson_inflow(p: &RatchetParams, t: f64) -> f64 {
    -p.theta() * (-p.s * t).exp_m1()
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return domain(format!("time must be finite and nonnegative, got {t}"));
    }
    Ok(())
}

/// Discrete convolution of a profile with a weight vector.
pub(crate) fn convolve_into(x: &[f64], kernel: &[f64], out: &mut Vec<f64>) {
    out.clear();
    out.resize(x.len() + kernel.len() - 1, 0.0);
    for (i, &xi) in x.iter().enumerate() {
        if xi == 0.0 {
            continue;
        }
        for (j, &kj) in kernel.iter().enumerate() {
            out[i + j] += xi * kj;
        }
    }
}

/// Exact solution of the deterministic system after time `t`.
pub fn evolve_closed(x0: &TypeProfile, p: &RatchetParams, t: f64) -> Result<TypeProfile> {
    p.validate()?;
    check_time(t)?;
    let mut x = x0.clone();
    x.trim(0.0);
    if t == 0.0 {
        return Ok(x);
    }
    let decay = (-p.s * t).exp();
    let mut tilt = 1.0;
    let mut tilted: Vec<f64> = Vec::with_capacity(x.len());
    for &f in &x.freqs {
        tilted.push(f * tilt);
        tilt *= decay;
    }
    let mass: f64 = tilted.iter().sum();
    for v in &mut tilted {
        *v /= mass;
    }
    let mu = poisson_inflow(p, t);
    let kernel = poisson_weights(mu, poisson_window(mu, EXTEND_TOLERANCE));
    let mut out = Vec::new();
    convolve_into(&tilted, &kernel, &mut out);
    check_window(out.len())?;
    let mut y = TypeProfile { offset: x.offset, freqs: out };
    y.trim(EXTEND_TOLERANCE);
    y.normalize();
    Ok(y)
}

// M₁ is taken as the normalized mean: with the raw first moment, mass
// deviations grow like e^{sM₁t} and rounding swamps the solution.
fn cds_rhs(x: &[f64], lambda: f64, s: f64, out: &mut [f64]) {
    let mass: f64 = x.iter().sum();
    let m1: f64 = x.iter().enumerate().map(|(k, &v)| k as f64 * v).sum::<f64>() / mass;
    let mut prev = 0.0;
    for (k, (&v, o)) in x.iter().zip(out.iter_mut()).enumerate() {
        *o = (s * (m1 - k as f64) - lambda) * v + lambda * prev;
        prev = v;
    }
}

/// Largest step [`evolve_ode`] accepts for a window of `len` classes.
pub fn ode_max_step(p: &RatchetParams, len: usize) -> f64 {
    0.1 / (p.s * len as f64).max(p.lambda)
}

/// Fixed-step classical RK4 integration of the deterministic system on a
/// window padded far enough that no mass leaves it during `[0, t]`.
pub fn evolve_ode(x0: &TypeProfile, p: &RatchetParams, t: f64, dt: f64) -> Result<TypeProfile> {
    p.validate()?;
    check_time(t)?;
    if !(dt > 0.0) {
        return Err(Error::StepSize(format!("dt must be positive, got {dt}")));
    }
    let mut x = x0.clone();
    x.trim(0.0);
    if t == 0.0 {
        return Ok(x);
    }
    // Mutation moves mass up by at most Poisson(λt) classes.
    let pad = poisson_window(p.lambda * t, EXTEND_TOLERANCE) + 2;
    let len = x.len() + pad;
    check_window(len)?;
    let max_dt = ode_max_step(p, len);
    if dt > max_dt {
        return Err(Error::StepSize(format!(
            "dt = {dt} exceeds the stability bound {max_dt} for a window of {len} classes"
        )));
    }
    let mut y = x.freqs.clone();
    y.resize(len, 0.0);
    let steps = (t / dt).ceil() as usize;
    let h = t / steps as f64;
    let (lambda, s) = (p.lambda, p.s);
    let mut k1 = vec![0.0; len];
    let mut k2 = vec![0.0; len];
    let mut k3 = vec![0.0; len];
    let mut k4 = vec![0.0; len];
    let mut tmp = vec![0.0; len];
    for _ in 0..steps {
        cds_rhs(&y, lambda, s, &mut k1);
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k1[i];
        }
        cds_rhs(&tmp, lambda, s, &mut k2);
        for i in 0..len {
            tmp[i] = y[i] + 0.5 * h * k2[i];
        }
        cds_rhs(&tmp, lambda, s, &mut k3);
        for i in 0..len {
            tmp[i] = y[i] + h * k3[i];
        }
        cds_rhs(&tmp, lambda, s, &mut k4);
        for i in 0..len {
            y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        if let Some(bad) = y.iter().copied().find(|&v| v < -1e-9) {
            return Err(Error::StepSize(format!("integration went unstable (entry {bad:e})")));
        }
    }
    for v in &mut y {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
    let mut out = TypeProfile { offset: x.offset, freqs: y };
    out.trim(EXTEND_TOLERANCE);
    Ok(out)
}

/// Best-class frequency and mean after time `t`, read off the generating
/// function of the initial profile without evolving it.
pub fn closed_observables(x0: &TypeProfile, p: &RatchetParams, t: f64) -> Result<(f64, f64)> {
    p.validate()?;
    check_time(t)?;
    let first = x0.best_freq();
    if !(first > 0.0) {
        return domain("closed observables need a positive best-class frequency");
    }
    let decay = (-p.s * t).exp();
    let mut tilt = 1.0;
    let mut g = 0.0;
    let mut dg = 0.0;
    for (k, &f) in x0.freqs.iter().enumerate() {
        g += f * tilt;
        dg += k as f64 * f * tilt;
        tilt *= decay;
    }
    let mu = poisson_inflow(p, t);
    Ok((first * (-mu).exp() / g, dg / g + mu))
}

/// Best-class frequency and mean along the relaxation of `π̃`, with
/// `r = θ e^{−st}`.
pub fn phase_one(theta: f64, s: f64, t: f64) -> Result<(f64, f64)> {
    if !(theta > 1.0) {
        return domain(format!("phase one needs theta > 1, got {theta}"));
    }
    check_time(t)?;
    let r = theta * (-s * t).exp();
    let x0 = (-theta).exp() * r / -(-r).exp_m1();
    let m1 = theta - 1.0 + r / r.exp_m1();
    Ok((x0, m1))
}

/// The ratio `c/s` for which the phase-one best-class drift equals
/// `c (π₀ − Y₀)`.
pub fn mean_reversion_ratio(r: f64) -> f64 {
    if r < 1e-3 {
        return 1.0 + r / 6.0 - r * r / 36.0 - r * r * r / 270.0;
    }
    let q = -(-r).exp_m1();
    let num = r * q - r * r * (-r).exp();
    let den = r * q - q * q;
    num / den
}

/// Mean of a Poisson-profile approximation relaxed for time `Aτ`, given the
/// relaxed best-class frequency.
pub fn relaxed_m1(y0_relaxed: f64, theta: f64, a: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return domain(format!("theta must be positive, got {theta}"));
    }
    if !(a >= 0.0) {
        return domain(format!("relaxation multiple must be nonnegative, got {a}"));
    }
    let eta = theta.powf(1.0 - a);
    let pi0 = (-theta).exp();
    Ok(theta + crate::params::relaxation_factor(eta) * (1.0 - y0_relaxed / pi0))
}
