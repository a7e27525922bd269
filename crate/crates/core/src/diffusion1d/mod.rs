//! One-dimensional diffusions for the best-class frequency `Y₀`: a Feller
//! branching diffusion with logistic growth `dY = a(1 − Y/π₀)Y dt + √(Y/N) dW`,
//! absorbed at 0 (a click) and reflected at `y_max`.

mod green;
mod sim;

pub use green::{expected_click_time, green_bin_masses, green_function, scale_speed, GreenResult, ScaleSpeed};
pub use sim::{simulate_clicks, ClickSim, ClickSimConfig, ClickSimResult, ClickThreshold, Reset, DEFAULT_DIFFUSION_DT};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::params::{mean_reversion_coefficient, relaxation_factor, RatchetParams, Regime, RELAXED_PREFACTOR};

/// Logistic growth rate `a` of the regime's drift `a(1 − y/π₀)y`.
pub fn growth_rate(regime: Regime, p: &RatchetParams) -> f64 {
    let theta = p.lambda / p.s;
    match regime {
        Regime::SmallA => p.lambda * (-theta).exp(),
        Regime::AEqualsOne => RELAXED_PREFACTOR * p.s,
        Regime::LargeA => p.s,
        Regime::Generic(a) => p.s * relaxation_factor(theta.powf(1.0 - a)),
    }
}

/// Drift of `Y₀` in the given regime.
pub fn drift(regime: Regime, y: f64, p: &RatchetParams) -> f64 {
    let pi0 = (-p.lambda / p.s).exp();
    growth_rate(regime, p) * (1.0 - y / pi0) * y
}

/// Mean-reversion coefficient of the rescaled equation
/// `dZ = c(1 − Z)Z dt + √Z dW`, `Z(t) = Y₀(Nπ₀t)/π₀`.
pub fn rescale(regime: Regime, p: &RatchetParams) -> Result<(f64, String)> {
    p.validate()?;
    let c = mean_reversion_coefficient(regime, p.n, p.lambda, p.s)?;
    let description = format!(
        "dZ = {c:.6}*(1 - Z)*Z dt + sqrt(Z) dW, Z(t) = Y0(N*pi0*t)/pi0 ({} regime)",
        regime.name()
    );
    Ok((c, description))
}

/// A logistic Feller diffusion on `(0, y_max]` with `σ²(y) = y/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionSpec {
    /// Logistic growth rate; zero for a driftless Feller diffusion.
    pub growth: f64,
    pub pi0: f64,
    pub n: f64,
    /// Reflecting upper boundary.
    pub y_max: f64,
}

impl DiffusionSpec {
    /// The regime's diffusion with the default cap `min(1, 8π₀)`.
    pub fn new(regime: Regime, p: &RatchetParams) -> Result<Self> {
        p.validate()?;
        let pi0 = p.pi0();
        Ok(DiffusionSpec { growth: growth_rate(regime, p), pi0, n: p.n_f64(), y_max: (8.0 * pi0).min(1.0) })
    }

    /// `dY = √(Y/N) dW` on `(0, y_max]`.
    pub fn zero_drift(n: f64, y_max: f64) -> Result<Self> {
        DiffusionSpec { growth: 0.0, pi0: 1.0, n, y_max }.checked()
    }

    pub fn with_y_max(self, y_max: f64) -> Result<Self> {
        DiffusionSpec { y_max, ..self }.checked()
    }

    fn checked(self) -> Result<Self> {
        if !(self.n > 0.0 && self.n.is_finite()) {
            return domain(format!("diffusion needs a positive population size, got {}", self.n));
        }
        if !(self.y_max > 0.0 && self.y_max.is_finite()) {
            return domain(format!("upper boundary must be positive, got {}", self.y_max));
        }
        if !(self.pi0 > 0.0) || !(self.growth >= 0.0) {
            return domain("logistic drift needs pi0 > 0 and growth >= 0");
        }
        Ok(self)
    }

    pub fn drift(&self, y: f64) -> f64 {
        self.growth * (1.0 - y / self.pi0) * y
    }

    pub fn sigma2(&self, y: f64) -> f64 {
        y / self.n
    }

    /// `ln s(y) = −∫₀^y 2b/σ² du`, in closed form since `2b/σ²` is affine.
    pub fn log_scale_density(&self, y: f64) -> f64 {
        -2.0 * self.n * self.growth * (y - y * y / (2.0 * self.pi0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::solve_s_for_gamma;

    fn desk() -> RatchetParams {
        let n = 10_000;
        let lambda = 100.0 / n as f64;
        RatchetParams::new(n, lambda, solve_s_for_gamma(n, lambda, 0.5).unwrap()).unwrap()
    }

    #[test]
    fn drift_vanishes_at_pi0() {
        let p = desk();
        for r in [Regime::SmallA, Regime::AEqualsOne, Regime::LargeA, Regime::Generic(2.5)] {
            assert!(drift(r, p.pi0(), &p).abs() < 1e-18);
            assert!(drift(r, 0.5 * p.pi0(), &p) > 0.0);
            assert!(drift(r, 1.5 * p.pi0(), &p) < 0.0);
        }
    }

    #[test]
    fn drift_values() {
        let p = desk();
        let pi0 = p.pi0();
        let a1 = drift(Regime::AEqualsOne, pi0 / 2.0, &p);
        assert!((a1 - 0.58198 * p.s * pi0 / 4.0).abs() < 1e-5 * a1);
        let small = drift(Regime::SmallA, pi0 / 2.0, &p);
        assert!((small - p.lambda * pi0 * pi0 / 4.0).abs() < 1e-15);
    }

    #[test]
    fn generic_limits() {
        let p = desk();
        for y in [0.01, 0.05, 0.2] {
            let g1 = drift(Regime::Generic(1.0), y, &p);
            assert!((g1 - drift(Regime::AEqualsOne, y, &p)).abs() < 1e-12);
            let g = drift(Regime::Generic(60.0), y, &p);
            assert!((g - drift(Regime::LargeA, y, &p)).abs() < 1e-12);
        }
    }

    #[test]
    fn rescale_examples() {
        let n = 1_000_000;
        let at = |gamma: f64, nl: f64| {
            let lambda = nl / n as f64;
            RatchetParams::new(n, lambda, solve_s_for_gamma(n, lambda, gamma).unwrap()).unwrap()
        };
        let (c, _) = rescale(Regime::SmallA, &at(0.5, 100.0)).unwrap();
        assert!((c - 1.0).abs() < 1e-9);
        let (c, d) = rescale(Regime::AEqualsOne, &at(0.5, 900.0)).unwrap();
        assert!((c - 5.1).abs() < 0.05, "{c}");
        assert!(d.contains("sqrt(Z)"));
        assert!(rescale(Regime::SmallA, &RatchetParams::new(10, 0.05, 0.01).unwrap()).is_err());
    }

    #[test]
    fn zero_drift_scale() {
        let d = DiffusionSpec::zero_drift(100.0, 1.0).unwrap();
        assert_eq!(d.log_scale_density(0.3), 0.0);
        assert!(DiffusionSpec::zero_drift(0.0, 1.0).is_err());
    }
}
