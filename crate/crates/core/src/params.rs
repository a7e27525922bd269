//! Parameter algebra: derived quantities, the γ scaling, mean-reversion
//! coefficients of the rescaled best-class diffusions and Haigh's empirical
//! click-time formula.
//!
//! All logarithms are natural.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// `1/(e - 1)`, the drift prefactor of the `A = 1` regime (usually quoted as 0.58).
pub const RELAXED_PREFACTOR: f64 = 0.581_976_706_869_326_4;

/// Raw model inputs: population size, mutation rate per genome per
/// generation and selection coefficient per mutation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatchetParams {
    pub n: u64,
    pub lambda: f64,
    pub s: f64,
}

impl RatchetParams {
    pub fn new(n: u64, lambda: f64, s: f64) -> Result<Self> {
        let p = RatchetParams { n, lambda, s };
        p.validate()?;
        Ok(p)
    }

    /// Parameters with `s` chosen so that the γ scaling equals `gamma`.
    pub fn from_gamma(n: u64, lambda: f64, gamma: f64) -> Result<Self> {
        let s = solve_s_for_gamma(n, lambda, gamma)?;
        RatchetParams::new(n, lambda, s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 1 {
            return domain("population size must be at least 1");
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return domain(format!("mutation rate must be positive, got {}", self.lambda));
        }
        if !(self.s > 0.0 && self.s < 1.0) {
            return domain(format!("selection coefficient must lie in (0,1), got {}", self.s));
        }
        Ok(())
    }

    pub fn n_f64(&self) -> f64 {
        self.n as f64
    }

    pub fn n_lambda(&self) -> f64 {
        self.n as f64 * self.lambda
    }

    /// Mean number of mutations at equilibrium, `λ/s`.
    pub fn theta(&self) -> f64 {
        self.lambda / self.s
    }

    /// Equilibrium frequency of the best class, `e^{-θ}`.
    pub fn pi0(&self) -> f64 {
        (-self.theta()).exp()
    }

    /// `π₁ = θ e^{-θ}`.
    pub fn pi1(&self) -> f64 {
        self.theta() * self.pi0()
    }

    pub fn gamma(&self) -> Result<f64> {
        gamma_of(self.n, self.lambda, self.s)
    }

    /// Haigh's relaxation time `ln(θ)/s`; `None` when `θ ≤ 1`.
    pub fn tau(&self) -> Option<f64> {
        let theta = self.theta();
        (theta > 1.0).then(|| theta.ln() / self.s)
    }
}

fn gamma_of(n: u64, lambda: f64, s: f64) -> Result<f64> {
    let nl = n as f64 * lambda;
    if nl <= 1.0 {
        return domain(format!("gamma needs N*lambda > 1, got {nl}"));
    }
    Ok(nl / (n as f64 * s * nl.ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub theta: f64,
    pub pi0: f64,
    pub n0: f64,
    /// `None` when `Nλ ≤ 1`.
    pub gamma: Option<f64>,
    /// `None` when `θ ≤ 1`.
    pub tau: Option<f64>,
}

impl DerivedParams {
    pub fn gamma(&self) -> Result<f64> {
        self.gamma
            .ok_or_else(|| crate::Error::Domain("gamma undefined for N*lambda <= 1".into()))
    }
}

pub fn derive_params(p: &RatchetParams) -> Result<DerivedParams> {
    p.validate()?;
    let theta = p.theta();
    let pi0 = (-theta).exp();
    Ok(DerivedParams {
        theta,
        pi0,
        n0: p.n_f64() * pi0,
        gamma: gamma_of(p.n, p.lambda, p.s).ok(),
        tau: p.tau(),
    })
}

/// Inverts the γ scaling: `s = λ / (γ ln(Nλ))`.
pub fn solve_s_for_gamma(n: u64, lambda: f64, gamma: f64) -> Result<f64> {
    let nl = n as f64 * lambda;
    if nl <= 1.0 {
        return domain(format!("gamma needs N*lambda > 1, got {nl}"));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return domain(format!("gamma must be positive, got {gamma}"));
    }
    Ok(lambda / (gamma * nl.ln()))
}

/// Drift regime of the best-class diffusion, indexed by the relaxation
/// multiple `A` (the profile relaxes for time `Aτ`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Regime {
    SmallA,
    AEqualsOne,
    LargeA,
    Generic(f64),
}

impl Regime {
    pub fn name(&self) -> String {
        match self {
            Regime::SmallA => "small-A".into(),
            Regime::AEqualsOne => "A=1".into(),
            Regime::LargeA => "large-A".into(),
            Regime::Generic(a) => format!("A={a}"),
        }
    }

    /// `η/(e^η − 1)` for `η = θ^{1−A}`. Not meaningful for `SmallA`, whose
    /// drift has a different form.
    pub fn relaxation_factor(&self, theta: f64) -> f64 {
        match *self {
            Regime::SmallA => relaxation_factor(theta),
            Regime::AEqualsOne => RELAXED_PREFACTOR,
            Regime::LargeA => 1.0,
            Regime::Generic(a) => relaxation_factor(theta.powf(1.0 - a)),
        }
    }
}

impl std::str::FromStr for Regime {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "small" | "small-a" | "smalla" => Ok(Regime::SmallA),
            "one" | "a1" | "a=1" | "aequalsone" => Ok(Regime::AEqualsOne),
            "large" | "large-a" | "largea" => Ok(Regime::LargeA),
            other => {
                let a = other.strip_prefix("a=").unwrap_or(other);
                match a.parse::<f64>() {
                    Ok(v) if v >= 0.0 => Ok(Regime::Generic(v)),
                    _ => domain(format!("unknown regime '{s}'")),
                }
            }
        }
    }
}

/// `η/(e^η − 1)`, continuous at `η = 0`.
pub fn relaxation_factor(eta: f64) -> f64 {
    if eta.abs() < 1e-8 {
        1.0 - eta / 2.0
    } else if eta > 700.0 {
        0.0
    } else {
        eta / eta.exp_m1()
    }
}

/// Mean-reversion coefficient of the rescaled diffusion
/// `dZ = c (1 − Z) Z dt + √Z dW`, `Z(t) = Y₀(Nπ₀ t)/π₀`, written in terms
/// of `γ` and `Nλ` only.
pub fn rescaled_coefficient(regime: Regime, gamma: f64, n_lambda: f64) -> Result<f64> {
    if n_lambda <= 1.0 {
        return domain(format!("rescaling needs N*lambda > 1, got {n_lambda}"));
    }
    let log_nl = n_lambda.ln();
    let sc = n_lambda.powf(1.0 - gamma) / (gamma * log_nl);
    Ok(match regime {
        Regime::SmallA => n_lambda.powf(1.0 - 2.0 * gamma),
        Regime::AEqualsOne => RELAXED_PREFACTOR * sc,
        Regime::LargeA => sc,
        Regime::Generic(_) => regime.relaxation_factor(gamma * log_nl) * sc,
    })
}

pub fn mean_reversion_coefficient(regime: Regime, n: u64, lambda: f64, s: f64) -> Result<f64> {
    let gamma = gamma_of(n, lambda, s)?;
    rescaled_coefficient(regime, gamma, n as f64 * lambda)
}

const THRESHOLD_UPPER: f64 = 1e300;

/// Smallest `Nλ > e` at which the `A = 1` rescaled coefficient reaches `c`.
/// Returns `f64::INFINITY` when no such value exists below `1e300`.
pub fn threshold_n_lambda(gamma: f64, c: f64) -> Result<f64> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return domain(format!("threshold needs gamma in (0,1), got {gamma}"));
    }
    if !(c > 0.0) {
        return domain(format!("threshold level must be positive, got {c}"));
    }
    let coeff = |ln_x: f64| RELAXED_PREFACTOR * ((1.0 - gamma) * ln_x).exp() / (gamma * ln_x);

    // x^{1-γ}/ln x decreases on (1, e^{1/(1-γ)}) and increases afterwards.
    if coeff(1.0) >= c {
        return Ok(std::f64::consts::E);
    }
    let mut lo = (1.0 / (1.0 - gamma)).max(1.0);
    let mut hi = THRESHOLD_UPPER.ln();
    if coeff(hi) < c {
        return Ok(f64::INFINITY);
    }
    while hi - lo > 1e-9 * hi {
        let mid = 0.5 * (lo + hi);
        if coeff(mid) >= c {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi.exp())
}

/// Haigh's empirical mean time between clicks, in generations:
/// `4Nπ₀ + 7 ln θ + 2/s − 20`.
pub fn haigh_click_time(p: &RatchetParams) -> Result<f64> {
    p.validate()?;
    let theta = p.theta();
    Ok(4.0 * p.n_f64() * p.pi0() + 7.0 * theta.ln() + 2.0 / p.s - 20.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn derive_reference_points() {
        let d = derive_params(&RatchetParams::new(10_000, 0.1, 0.02).unwrap()).unwrap();
        assert_relative_eq!(d.theta, 5.0, max_relative = 1e-14);
        assert_relative_eq!(d.pi0, 0.006_737_9, max_relative = 1e-5);
        assert_relative_eq!(d.n0, 67.379, max_relative = 1e-5);
        assert_relative_eq!(d.gamma.unwrap(), 0.7238, epsilon = 1e-4);
        assert_relative_eq!(d.tau.unwrap(), 80.47, epsilon = 1e-2);

        let d = derive_params(&RatchetParams::new(100_000, 0.01, 0.005).unwrap()).unwrap();
        assert_relative_eq!(d.theta, 2.0, max_relative = 1e-14);
        assert_relative_eq!(d.n0, 13_533.5, epsilon = 0.1);
        assert_relative_eq!(d.gamma.unwrap(), 0.2895, epsilon = 1e-4);
        assert_relative_eq!(d.tau.unwrap(), 138.63, epsilon = 1e-2);

        let d = derive_params(&RatchetParams::new(100_000, 0.1, 0.021_714_7).unwrap()).unwrap();
        assert!((d.gamma.unwrap() - 0.5).abs() < 1e-3);
    }

    #[test]
    fn tau_undefined_for_small_theta() {
        let d = derive_params(&RatchetParams::new(1000, 0.01, 0.02).unwrap()).unwrap();
        assert!(d.tau.is_none());
        assert!(d.gamma.is_some());
    }

    #[test]
    fn gamma_requires_large_n_lambda() {
        let p = RatchetParams::new(10, 0.05, 0.01).unwrap();
        let d = derive_params(&p).unwrap();
        assert!(d.gamma.is_none());
        assert!(d.gamma().is_err());
        assert!(p.gamma().is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(RatchetParams::new(0, 0.1, 0.1).is_err());
        assert!(RatchetParams::new(100, 0.0, 0.1).is_err());
        assert!(RatchetParams::new(100, 0.1, 1.0).is_err());
        assert!(RatchetParams::new(100, 0.1, 0.0).is_err());
    }

    #[test]
    fn solve_s_examples() {
        assert_relative_eq!(solve_s_for_gamma(100_000, 0.1, 0.5).unwrap(), 0.021_714_7, epsilon = 1e-7);
        assert_relative_eq!(
            solve_s_for_gamma(100_000, 0.01, 0.7).unwrap(),
            0.01 / (0.7 * 1000f64.ln()),
            max_relative = 1e-15
        );
        assert_relative_eq!(solve_s_for_gamma(100_000, 0.01, 0.7).unwrap(), 0.002_068_1, epsilon = 1e-7);
        assert!(solve_s_for_gamma(10, 0.1, 0.5).is_err());
    }

    #[test]
    fn coefficient_examples() {
        for nl in [10.0, 900.0, 1e6] {
            assert_relative_eq!(rescaled_coefficient(Regime::SmallA, 0.5, nl).unwrap(), 1.0);
        }
        let c = rescaled_coefficient(Regime::AEqualsOne, 0.5, 900.0).unwrap();
        assert!((c - 5.1).abs() < 0.05, "{c}");
        assert_relative_eq!(rescaled_coefficient(Regime::SmallA, 0.3, 100.0).unwrap(), 6.3096, epsilon = 1e-3);
        let large = rescaled_coefficient(Regime::LargeA, 0.5, 900.0).unwrap();
        assert_relative_eq!(large * RELAXED_PREFACTOR, c, max_relative = 1e-14);
        let generic = rescaled_coefficient(Regime::Generic(1.0), 0.5, 900.0).unwrap();
        assert_relative_eq!(generic, c, max_relative = 1e-12);
    }

    #[test]
    fn coefficient_matches_direct_form() {
        // N s π₀ / (e − 1) and N λ π₀² written without γ.
        let p = RatchetParams::from_gamma(10_000, 0.01, 0.6).unwrap();
        let direct = p.n_f64() * p.s * p.pi0() * RELAXED_PREFACTOR;
        let via_gamma = mean_reversion_coefficient(Regime::AEqualsOne, p.n, p.lambda, p.s).unwrap();
        assert_relative_eq!(direct, via_gamma, max_relative = 1e-12);
        let direct = p.n_lambda() * p.pi0() * p.pi0();
        let via_gamma = mean_reversion_coefficient(Regime::SmallA, p.n, p.lambda, p.s).unwrap();
        assert_relative_eq!(direct, via_gamma, max_relative = 1e-12);
    }

    #[test]
    fn prefactor_constant() {
        assert_relative_eq!(RELAXED_PREFACTOR, 1.0 / (std::f64::consts::E - 1.0), max_relative = 1e-15);
    }

    #[test]
    fn threshold_examples() {
        let t = threshold_n_lambda(0.5, 5.0).unwrap();
        assert!(t > 450.0 && t < 1800.0, "{t}");
        let t = threshold_n_lambda(0.3, 5.0).unwrap();
        assert!(t > 10.0 && t < 40.0, "{t}");
        let t = threshold_n_lambda(0.9, 5.0).unwrap();
        assert!(t > 4e26 && t < 1.6e27, "{t}");
    }

    #[test]
    fn threshold_uses_natural_log() {
        // With log10 in place of ln the γ = 0.5 entry would land far from 9·10².
        let log10_coeff = |x: f64| RELAXED_PREFACTOR * x.sqrt() / (0.5 * x.log10());
        assert!(log10_coeff(900.0) > 10.0);
        let c = rescaled_coefficient(Regime::AEqualsOne, 0.5, 900.0).unwrap();
        assert!((c - 5.0).abs() < 0.2);
    }

    #[test]
    fn threshold_infinite_when_out_of_range() {
        assert_eq!(threshold_n_lambda(0.999, 5.0).unwrap(), f64::INFINITY);
        assert!(threshold_n_lambda(1.0, 5.0).is_err());
        assert!(threshold_n_lambda(0.5, 0.0).is_err());
    }

    #[test]
    fn haigh_examples() {
        let h = |n, l, s| haigh_click_time(&RatchetParams::new(n, l, s).unwrap()).unwrap();
        assert_relative_eq!(h(10_000, 0.1, 0.02), 360.8, epsilon = 0.05);
        assert_relative_eq!(h(1000, 0.05, 0.01), 218.2, epsilon = 0.05);
        assert_relative_eq!(h(1000, 0.01, 0.01), 1651.5, epsilon = 0.05);
    }

    #[test]
    fn regime_parsing() {
        assert_eq!("small".parse::<Regime>().unwrap(), Regime::SmallA);
        assert_eq!("A=1".parse::<Regime>().unwrap(), Regime::AEqualsOne);
        assert_eq!("large".parse::<Regime>().unwrap(), Regime::LargeA);
        assert_eq!("2.5".parse::<Regime>().unwrap(), Regime::Generic(2.5));
        assert!("bogus".parse::<Regime>().is_err());
    }

    proptest! {
        #[test]
        fn n0_power_law_identity(n in 10u64..10_000_000, lambda in 1e-4f64..1.0, s in 1e-4f64..0.5) {
            prop_assume!(n as f64 * lambda > 1.5);
            let p = RatchetParams::new(n, lambda, s).unwrap();
            let d = derive_params(&p).unwrap();
            let alt = p.n_f64() * p.n_lambda().powf(-d.gamma.unwrap());
            prop_assert!((d.n0 - alt).abs() <= 1e-12 * d.n0.max(f64::MIN_POSITIVE) * 10.0
                || d.n0 < 1e-290);
            prop_assert_eq!(d.pi0, (-d.theta).exp());
            prop_assert_eq!(d.n0, p.n_f64() * d.pi0);
        }

        #[test]
        fn solve_s_round_trip(n in 10u64..10_000_000, lambda in 1e-4f64..1.0, gamma in 0.05f64..2.0) {
            prop_assume!(n as f64 * lambda > 1.5);
            let s = solve_s_for_gamma(n, lambda, gamma).unwrap();
            prop_assume!(s < 1.0);
            let g = RatchetParams::new(n, lambda, s).unwrap().gamma().unwrap();
            prop_assert!((g - gamma).abs() <= 1e-12 * gamma);
        }

        #[test]
        fn threshold_inverts_coefficient(gamma in 0.25f64..0.95, c in 1.0f64..20.0) {
            let x = threshold_n_lambda(gamma, c).unwrap();
            prop_assume!(x.is_finite() && x > std::f64::consts::E);
            let at = rescaled_coefficient(Regime::AEqualsOne, gamma, x).unwrap();
            prop_assert!(at >= c * (1.0 - 1e-12) && at <= c * 1.01, "coeff {} at {} for c {}", at, x, c);
        }

        #[test]
        fn threshold_monotone_in_gamma(g1 in 0.3f64..0.9, dg in 0.01f64..0.05) {
            let a = threshold_n_lambda(g1, 5.0).unwrap();
            let b = threshold_n_lambda(g1 + dg, 5.0).unwrap();
            prop_assert!(b >= a);
        }
    }
}
