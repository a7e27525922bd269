//! Frequency profiles over mutation classes and Poisson weight helpers.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Largest number of classes a profile window may hold.
pub const WINDOW_CAP: usize = 4096;

/// Probability mass a truncated window may drop from its upper tail.
pub const TAIL_TOLERANCE: f64 = 1e-12;

/// Tolerance used when a computation extends a window; kept well below
/// [`TAIL_TOLERANCE`] so repeated extensions stay inside the budget.
pub(crate) const EXTEND_TOLERANCE: f64 = 1e-16;

/// Frequencies of classes `offset, offset + 1, ...`; `freqs[0]` is the
/// current best class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypeProfile {
    pub offset: usize,
    pub freqs: Vec<f64>,
}

impl TypeProfile {
    pub fn new(offset: usize, freqs: Vec<f64>) -> Result<Self> {
        if freqs.is_empty() {
            return domain("profile needs at least one class");
        }
        if freqs.iter().any(|&f| !(f >= 0.0 && f.is_finite())) {
            return domain("profile entries must be finite and nonnegative");
        }
        let mass: f64 = freqs.iter().sum();
        if (mass - 1.0).abs() > 1e-9 {
            return domain(format!("profile mass {mass} differs from 1"));
        }
        Ok(TypeProfile { offset, freqs })
    }

    /// Point mass on class `offset`.
    pub fn point_mass(offset: usize) -> Self {
        TypeProfile { offset, freqs: vec![1.0] }
    }

    pub fn len(&self) -> usize {
        self.freqs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs.is_empty()
    }

    pub fn best_freq(&self) -> f64 {
        self.freqs[0]
    }

    pub fn mass(&self) -> f64 {
        self.freqs.iter().sum()
    }

    /// Frequency of absolute class `k`.
    pub fn at(&self, k: usize) -> f64 {
        k.checked_sub(self.offset)
            .and_then(|i| self.freqs.get(i))
            .copied()
            .unwrap_or(0.0)
    }

    /// Mean class index measured from the best class.
    pub fn mean(&self) -> f64 {
        self.freqs.iter().enumerate().map(|(k, &x)| k as f64 * x).sum()
    }

    pub fn absolute_mean(&self) -> f64 {
        self.offset as f64 + self.mean()
    }

    /// Central moment of the given order.
    pub fn central_moment(&self, order: i32) -> f64 {
        let m = self.mean();
        self.freqs
            .iter()
            .enumerate()
            .map(|(k, &x)| (k as f64 - m).powi(order) * x)
            .sum()
    }

    /// Mean fitness `Σ x_k (1 − s)^k`, relative to the best class.
    pub fn mean_fitness(&self, s: f64) -> f64 {
        let mut w = 1.0;
        let mut acc = 0.0;
        for &x in &self.freqs {
            acc += x * w;
            w *= 1.0 - s;
        }
        acc
    }

    pub fn normalize(&mut self) {
        let mass = self.mass();
        if mass > 0.0 {
            for x in &mut self.freqs {
                *x /= mass;
            }
        }
    }

    /// Drops empty leading classes (advancing the offset) and a trailing
    /// tail holding less than `tol` mass. Returns how far the offset moved.
    pub fn trim(&mut self, tol: f64) -> usize {
        let lead = self.freqs.iter().take_while(|&&x| x <= 0.0).count();
        let lead = lead.min(self.freqs.len().saturating_sub(1));
        if lead > 0 {
            self.freqs.drain(..lead);
            self.offset += lead;
        }
        let mut tail = 0.0;
        while self.freqs.len() > 1 {
            let last = *self.freqs.last().unwrap();
            if tail + last < tol {
                tail += last;
                self.freqs.pop();
            } else {
                break;
            }
        }
        lead
    }

    /// Maximum absolute difference over the union of both windows.
    pub fn sup_distance(&self, other: &TypeProfile) -> f64 {
        let lo = self.offset.min(other.offset);
        let hi = (self.offset + self.len()).max(other.offset + other.len());
        (lo..hi)
            .map(|k| (self.at(k) - other.at(k)).abs())
            .fold(0.0, f64::max)
    }
}

/// Poisson(μ) probabilities for `k = 0..len`, via a log-space recurrence.
pub fn poisson_weights(mu: f64, len: usize) -> Vec<f64> {
    if mu <= 0.0 {
        let mut w = vec![0.0; len.max(1)];
        w[0] = 1.0;
        w.truncate(len.max(1));
        return w;
    }
    let ln_mu = mu.ln();
    let mut out = Vec::with_capacity(len);
    let mut ln_p = -mu;
    for k in 0..len {
        if k > 0 {
            ln_p += ln_mu - (k as f64).ln();
        }
        out.push(ln_p.exp());
    }
    out
}

/// Smallest window length `K` with `P[Poisson(μ) ≥ K] < tol`.
pub fn poisson_window(mu: f64, tol: f64) -> usize {
    if mu <= 0.0 {
        return 1;
    }
    // Far enough out that the remaining tail is negligible next to tol.
    let bound = (mu + 40.0 * mu.sqrt() + 60.0).ceil() as usize;
    let w = poisson_weights(mu, bound);
    let mut tail = 0.0;
    for k in (0..bound).rev() {
        tail += w[k];
        if tail >= tol {
            return k + 1;
        }
    }
    1
}

pub(crate) fn check_window(len: usize) -> Result<()> {
    if len > WINDOW_CAP {
        Err(Error::WindowOverflow { needed: len, cap: WINDOW_CAP })
    } else {
        Ok(())
    }
}

/// Poisson(μ) restricted to classes `0..K` and renormalized.
pub fn poisson_profile(mu: f64, k: usize) -> Result<TypeProfile> {
    if !(mu > 0.0 && mu.is_finite()) {
        return domain(format!("poisson mean must be positive, got {mu}"));
    }
    let required = poisson_window(mu, TAIL_TOLERANCE);
    if k < required {
        return Err(Error::WindowTooShort { required, given: k });
    }
    check_window(k)?;
    let mut p = TypeProfile { offset: 0, freqs: poisson_weights(mu, k) };
    p.normalize();
    Ok(p)
}

/// Profile right after a click under Haigh's assumption: `(π₁, π₂, ...)/(1 − π₀)`,
/// indexed so that entry 0 is the new best class.
pub fn pi_tilde(theta: f64, k: usize) -> Result<TypeProfile> {
    if !(theta > 0.0 && theta.is_finite()) {
        return domain(format!("theta must be positive, got {theta}"));
    }
    let required = poisson_window(theta, TAIL_TOLERANCE).saturating_sub(1).max(1);
    if k < required {
        return Err(Error::WindowTooShort { required, given: k });
    }
    check_window(k + 1)?;
    let w = poisson_weights(theta, k + 1);
    let mut p = TypeProfile { offset: 0, freqs: w[1..].to_vec() };
    p.normalize();
    Ok(p)
}

/// Poisson profile approximation: best class at `y0`, the remaining mass
/// spread over the other classes in proportion to their Poisson(θ) weights.
pub fn ppa(y0: f64, theta: f64, k: usize) -> Result<TypeProfile> {
    if !(y0 > 0.0 && y0 < 1.0) {
        return domain(format!("best-class frequency must lie in (0,1), got {y0}"));
    }
    let tail = pi_tilde(theta, k.saturating_sub(1))?;
    let mut freqs = Vec::with_capacity(tail.len() + 1);
    freqs.push(y0);
    freqs.extend(tail.freqs.iter().map(|&x| (1.0 - y0) * x));
    Ok(TypeProfile { offset: 0, freqs })
}

/// Cumulants `κ₀, κ₁, ..., κ_K` of a profile, with `κ₀ = −ln x₀` and
/// class indices measured from the best class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CumulantVector {
    pub kappa: Vec<f64>,
}

impl CumulantVector {
    pub fn kappa0(&self) -> f64 {
        self.kappa[0]
    }

    pub fn mean(&self) -> f64 {
        self.kappa.get(1).copied().unwrap_or(0.0)
    }

    pub fn variance(&self) -> f64 {
        self.kappa.get(2).copied().unwrap_or(0.0)
    }
}

/// Cumulants up to `order` from central moments by the moment–cumulant
/// recursion `κ_n = μ_n − Σ_{j=2}^{n−2} C(n−1, j−1) κ_j μ_{n−j}`.
///
/// Working about the mean keeps the recursion usable to moderate order; past
/// order ~20 the alternating sums lose digits roughly like `K!·eps`.
pub fn cumulants_of(x: &TypeProfile, order: usize) -> Result<CumulantVector> {
    let x0 = x.best_freq();
    if !(x0 > 0.0) {
        return domain("kappa_0 needs a positive best-class frequency");
    }
    let mean = x.mean();
    let mut central = vec![0.0; order + 1];
    central[0] = 1.0;
    for (k, &f) in x.freqs.iter().enumerate() {
        let d = k as f64 - mean;
        let mut pw = 1.0;
        for c in central.iter_mut().skip(1) {
            pw *= d;
            *c += pw * f;
        }
    }
    if order >= 1 {
        central[1] = 0.0;
    }
    let mut kappa = vec![0.0; order + 1];
    kappa[0] = -x0.ln();
    for n in 2..=order {
        let mut acc = central[n];
        let mut binom = 1.0; // C(n-1, j-1), j starting at 1
        for j in 1..n {
            if j > 1 {
                binom *= (n - j + 1) as f64 / (j - 1) as f64;
            }
            acc -= binom * kappa[j] * central[n - j];
        }
        kappa[n] = acc;
    }
    if order >= 1 {
        kappa[1] = mean;
    }
    Ok(CumulantVector { kappa })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn poisson_profile_basics() {
        let p = poisson_profile(5.0, 40).unwrap();
        assert_relative_eq!(p.freqs[0], 0.006_737_946_999, max_relative = 1e-9);
        assert_relative_eq!(p.freqs[1] / p.freqs[0], 5.0, max_relative = 1e-13);
        assert!((p.mass() - 1.0).abs() < 1e-12);
        assert_eq!(p.offset, 0);
    }

    #[test]
    fn poisson_profile_too_short() {
        match poisson_profile(5.0, 10) {
            Err(Error::WindowTooShort { required, given: 10 }) => assert!(required > 20),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn pi_tilde_values() {
        let p = pi_tilde(5.0, 40).unwrap();
        assert_relative_eq!(p.freqs[0], 5.0 * (-5f64).exp() / (1.0 - (-5f64).exp()), max_relative = 1e-12);
        assert_relative_eq!(p.freqs[0], 0.033_918, epsilon = 1e-6);
        assert!((p.mass() - 1.0).abs() < 1e-12);
        // Oracle: direct summation of (k-1) π_k / (1 - π₀) over k ≥ 1.
        let theta: f64 = 5.0;
        let mut pk = (-theta).exp();
        let mut direct = 0.0;
        for k in 1..200 {
            pk *= theta / k as f64;
            direct += (k - 1) as f64 * pk;
        }
        direct /= 1.0 - (-theta).exp();
        assert_relative_eq!(p.mean(), direct, max_relative = 1e-12);
        assert_relative_eq!(p.mean(), 4.0339, epsilon = 1e-4);
    }

    #[test]
    fn ppa_values() {
        let theta: f64 = 5.0;
        let pi0 = (-theta).exp();
        let p = ppa(pi0, theta, 60).unwrap();
        let poisson = poisson_profile(theta, 60).unwrap();
        assert!(p.sup_distance(&poisson) < 1e-15);

        let p = ppa(0.01, theta, 60).unwrap();
        assert_eq!(p.freqs[0], 0.01);
        assert_relative_eq!(p.freqs[1], 0.033_579, epsilon = 1e-6);
        assert!((p.mass() - 1.0).abs() < 1e-12);
        assert!(ppa(0.0, theta, 60).is_err());
        assert!(ppa(1.0, theta, 60).is_err());
    }

    #[test]
    fn cumulants_of_poisson() {
        let p = poisson_profile(5.0, 60).unwrap();
        let c = cumulants_of(&p, 6).unwrap();
        for k in 0..=3 {
            assert!((c.kappa[k] - 5.0).abs() < 1e-8, "kappa_{k} = {}", c.kappa[k]);
        }
        for k in 4..=6 {
            assert!((c.kappa[k] - 5.0).abs() < 1e-6, "kappa_{k} = {}", c.kappa[k]);
        }
    }

    #[test]
    fn cumulants_degenerate_and_bernoulli() {
        let c = cumulants_of(&TypeProfile::point_mass(0), 4).unwrap();
        assert!(c.kappa.iter().all(|&k| k == 0.0));

        let b = TypeProfile::new(0, vec![0.5, 0.5]).unwrap();
        let c = cumulants_of(&b, 3).unwrap();
        assert_relative_eq!(c.kappa0(), std::f64::consts::LN_2, max_relative = 1e-15);
        assert_relative_eq!(c.mean(), 0.5);
        assert_relative_eq!(c.variance(), 0.25);
        assert!(c.kappa[3].abs() < 1e-15);
    }

    #[test]
    fn cumulants_need_best_class() {
        let p = TypeProfile { offset: 0, freqs: vec![0.0, 1.0] };
        assert!(cumulants_of(&p, 2).is_err());
    }

    #[test]
    fn trim_drops_leading_zeros() {
        let mut p = TypeProfile { offset: 3, freqs: vec![0.0, 0.0, 0.5, 0.5, 1e-20] };
        assert_eq!(p.trim(1e-16), 2);
        assert_eq!(p.offset, 5);
        assert_eq!(p.freqs, vec![0.5, 0.5]);
        assert_eq!(p.at(6), 0.5);
        assert_eq!(p.at(4), 0.0);
    }

    #[test]
    fn profile_validation() {
        assert!(TypeProfile::new(0, vec![]).is_err());
        assert!(TypeProfile::new(0, vec![0.5, 0.4]).is_err());
        assert!(TypeProfile::new(0, vec![1.5, -0.5]).is_err());
    }
}
