use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::DiffusionSpec;
use crate::error::{domain, Error, Result};
use crate::forward_sim::{ClickRecord, Histogram};
use crate::params::{RatchetParams, Regime};

pub const DEFAULT_DIFFUSION_DT: f64 = 0.1;

/// Where the best class restarts after a click.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Reset {
    Fixed(f64),
    /// Run `dY = s(π₀ − Y)dt + √(Y/N) dW` from `start` until `Y` first falls
    /// to `target`, then continue with the regime's drift.
    PhaseOne { start: f64, target: f64, s: f64 },
}

/// Absorption level of the Euler scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum ClickThreshold {
    #[default]
    Zero,
    /// `1/(2N)`: less than half an individual.
    HalfIndividual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickSimConfig {
    pub dt: f64,
    /// Total simulated time.
    pub horizon: f64,
    /// Stop early after this many clicks.
    pub max_clicks: Option<u64>,
    pub noise: bool,
    pub threshold: ClickThreshold,
    /// Time-weighted occupation histogram `(bins, upper)` on `[0, upper]`.
    pub occupation: Option<(usize, f64)>,
}

impl ClickSimConfig {
    pub fn new(horizon: f64, dt: f64) -> Self {
        ClickSimConfig { dt, horizon, max_clicks: None, noise: true, threshold: ClickThreshold::Zero, occupation: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickSimResult {
    pub clicks: Vec<ClickRecord>,
    /// Simulated time when the run stopped.
    pub elapsed: f64,
    pub occupation: Option<Histogram>,
}

impl ClickSimResult {
    /// Time of the last click over the number of clicks.
    pub fn mean_interclick_time(&self) -> f64 {
        match self.clicks.last() {
            Some(c) => c.time / self.clicks.len() as f64,
            None => f64::INFINITY,
        }
    }
}

/// A one-dimensional click process: a diffusion plus its reset rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickSim {
    pub spec: DiffusionSpec,
    pub reset: Reset,
}

impl ClickSim {
    /// The regime's diffusion restarted as after a click: `π₀` for large
    /// `A`, the value `π₀η/(1 − e^{−η})` reached by `π̃` after relaxing for
    /// `Aτ` (`π₀/(1 − e^{−1})` at `A = 1`), and phase one for small `A`.
    pub fn from_regime(regime: Regime, p: &RatchetParams) -> Result<Self> {
        let spec = DiffusionSpec::new(regime, p)?;
        let pi0 = spec.pi0;
        let theta = p.theta();
        let relaxed = |eta: f64| pi0 * eta / -(-eta).exp_m1();
        let reset = match regime {
            Regime::LargeA => Reset::Fixed(pi0),
            Regime::AEqualsOne => Reset::Fixed(relaxed(1.0)),
            Regime::Generic(a) => {
                let eta = theta.powf(1.0 - a);
                Reset::Fixed(if eta < 1e-12 { pi0 } else { relaxed(eta) })
            }
            Regime::SmallA => {
                let start = p.pi1() / (1.0 - pi0);
                let target = relaxed(1.0);
                if start > target {
                    Reset::PhaseOne { start, target, s: p.s }
                } else {
                    Reset::Fixed(start)
                }
            }
        };
        Ok(ClickSim { spec, reset })
    }

    /// Full-truncation Euler: drift and noise use `max(y, 0)`; a click when
    /// `y` falls to the threshold; mirror reflection at `y_max`.
    pub fn run<R: Rng + ?Sized>(&self, cfg: &ClickSimConfig, rng: &mut R) -> Result<ClickSimResult> {
        if !(cfg.dt > 0.0) || cfg.dt > 1.0 {
            return Err(Error::StepSize(format!("diffusion step must lie in (0, 1], got {}", cfg.dt)));
        }
        if !(cfg.horizon > 0.0) {
            return domain(format!("horizon must be positive, got {}", cfg.horizon));
        }
        let spec = &self.spec;
        let threshold = match cfg.threshold {
            ClickThreshold::Zero => 0.0,
            ClickThreshold::HalfIndividual => 0.5 / spec.n,
        };
        let mut occupation = match cfg.occupation {
            Some((bins, upper)) if bins > 0 && upper > 0.0 => Some(Histogram::uniform(0.0, upper, bins)),
            Some(_) => return domain("occupation histogram needs bins > 0 and upper > 0"),
            None => None,
        };
        let dt = cfg.dt;
        let noise = if cfg.noise { (dt / spec.n).sqrt() } else { 0.0 };
        let max_steps = (cfg.horizon / dt).ceil() as u64;
        let max_clicks = cfg.max_clicks.unwrap_or(u64::MAX);
        let (a, pi0, y_max) = (spec.growth, spec.pi0, spec.y_max);

        let restart = || match self.reset {
            Reset::Fixed(y) => (y.min(y_max), None),
            Reset::PhaseOne { start, target, s } => (start, Some((target, s))),
        };
        let (mut y, mut phase_one) = restart();
        let mut clicks = Vec::new();
        let mut step = 0u64;
        while step < max_steps && (clicks.len() as u64) < max_clicks {
            let yp = y.max(0.0);
            if let Some(h) = occupation.as_mut() {
                h.add(yp, dt);
            }
            let b = match phase_one {
                Some((_, s)) => s * (pi0 - yp),
                None => a * (1.0 - yp / pi0) * yp,
            };
            let z: f64 = if cfg.noise { rng.sample(StandardNormal) } else { 0.0 };
            let mut next = y + b * dt + noise * yp.sqrt() * z;
            step += 1;
            if next <= threshold {
                let (y0, p1) = restart();
                clicks.push(ClickRecord { time: step as f64 * dt, clicks_at_event: 1, new_best_freq: y0 });
                y = y0;
                phase_one = p1;
                continue;
            }
            match phase_one {
                Some((target, _)) => {
                    if next <= target {
                        phase_one = None;
                    }
                }
                None => {
                    if next > y_max {
                        next = (2.0 * y_max - next).max(threshold);
                    }
                }
            }
            y = next;
        }
        Ok(ClickSimResult { clicks, elapsed: step as f64 * dt, occupation })
    }
}

/// Click records of the regime's diffusion over `horizon` generations.
pub fn simulate_clicks<R: Rng + ?Sized>(
    regime: Regime,
    p: &RatchetParams,
    horizon: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Vec<ClickRecord>> {
    let sim = ClickSim::from_regime(regime, p)?;
    Ok(sim.run(&ClickSimConfig::new(horizon, dt), rng)?.clicks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::solve_s_for_gamma;
    use crate::rng::seeded;

    fn desk() -> RatchetParams {
        let n = 10_000;
        let lambda = 100.0 / n as f64;
        RatchetParams::new(n, lambda, solve_s_for_gamma(n, lambda, 0.5).unwrap()).unwrap()
    }

    #[test]
    fn noiseless_equilibrium_never_clicks() {
        let p = desk();
        let mut sim = ClickSim::from_regime(Regime::LargeA, &p).unwrap();
        sim.reset = Reset::Fixed(p.pi0());
        let mut cfg = ClickSimConfig::new(1e5, 0.1);
        cfg.noise = false;
        assert!(sim.run(&cfg, &mut seeded(1)).unwrap().clicks.is_empty());
    }

    #[test]
    fn resets_per_regime() {
        let p = desk();
        let pi0 = p.pi0();
        let r = |regime| ClickSim::from_regime(regime, &p).unwrap().reset;
        assert_eq!(r(Regime::LargeA), Reset::Fixed(pi0));
        match r(Regime::AEqualsOne) {
            Reset::Fixed(y) => assert!((y / pi0 - 1.581_976_7).abs() < 1e-6),
            other => panic!("{other:?}"),
        }
        match r(Regime::SmallA) {
            Reset::PhaseOne { start, .. } => assert!((start - p.pi1() / (1.0 - pi0)).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_step() {
        let p = desk();
        assert!(simulate_clicks(Regime::AEqualsOne, &p, 100.0, 2.0, &mut seeded(1)).is_err());
        assert!(simulate_clicks(Regime::AEqualsOne, &p, 0.0, 0.1, &mut seeded(1)).is_err());
    }

    #[test]
    fn clicks_are_ordered_and_reproducible() {
        let p = RatchetParams::from_gamma(1000, 0.05, 0.6).unwrap();
        let a = simulate_clicks(Regime::SmallA, &p, 2e5, 0.1, &mut seeded(7)).unwrap();
        let b = simulate_clicks(Regime::SmallA, &p, 2e5, 0.1, &mut seeded(7)).unwrap();
        assert_eq!(a, b);
        assert!(a.len() > 5);
        assert!(a.windows(2).all(|w| w[1].time > w[0].time));
    }

    #[test]
    fn zero_drift_occupation_total() {
        let spec = DiffusionSpec::zero_drift(100.0, 1.0).unwrap();
        let sim = ClickSim { spec, reset: Reset::Fixed(0.25) };
        let mut cfg = ClickSimConfig::new(1e4, 0.1);
        cfg.occupation = Some((10, 1.0));
        let r = sim.run(&cfg, &mut seeded(2)).unwrap();
        let h = r.occupation.unwrap();
        assert!((h.total() - r.elapsed).abs() < 1e-6);
        assert!(!r.clicks.is_empty());
    }
}
