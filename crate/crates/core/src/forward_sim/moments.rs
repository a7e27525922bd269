use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::RatchetParams;
use crate::profile::TypeProfile;

/// Fewest increments a diagnostic is computed from.
pub const MIN_DIAGNOSTIC_STEPS: u64 = 1000;

/// One empirical rate against its prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub name: String,
    pub empirical: f64,
    pub predicted: f64,
    /// Standard error of `empirical − predicted`.
    pub se: f64,
}

impl MomentCheck {
    /// Discrepancy in standard errors.
    pub fn z(&self) -> f64 {
        (self.empirical - self.predicted) / self.se
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub steps: u64,
    pub dt: f64,
    pub checks: Vec<MomentCheck>,
}

impl MomentReport {
    pub fn get(&self, name: &str) -> Option<&MomentCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.checks.iter().map(|c| c.z().abs()).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct Paired {
    sum_emp: f64,
    sum_pred: f64,
    sum_r: f64,
    sum_r2: f64,
}

impl Paired {
    fn push(&mut self, emp: f64, pred: f64) {
        let r = emp - pred;
        self.sum_emp += emp;
        self.sum_pred += pred;
        self.sum_r += r;
        self.sum_r2 += r * r;
    }

    fn check(&self, name: &str, n: f64) -> MomentCheck {
        let mr = self.sum_r / n;
        let var = ((self.sum_r2 - n * mr * mr) / (n - 1.0)).max(0.0);
        MomentCheck {
            name: name.into(),
            empirical: self.sum_emp / n,
            predicted: self.sum_pred / n,
            se: (var / n).sqrt(),
        }
    }
}

/// Streaming estimator of the drift and quadratic variation of `M₁` (the
/// mean) and `M₂` (the variance). `G` and `H` are their martingale parts.
#[derive(Debug, Clone, Default)]
pub struct MomentAccumulator {
    n: u64,
    dt: f64,
    m1_drift: Paired,
    g_qv: Paired,
    m2_drift: Paired,
    h_qv: Paired,
}

impl MomentAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn steps(&self) -> u64 {
        self.n
    }

    /// Adds the increment from `prev` to `next` over `dt`.
    pub fn push(&mut self, prev: &TypeProfile, next: &TypeProfile, p: &RatchetParams, dt: f64) {
        let n = p.n as f64;
        let m2 = prev.central_moment(2);
        let m3 = prev.central_moment(3);
        let m4 = prev.central_moment(4);
        let d1 = next.absolute_mean() - prev.absolute_mean();
        let d2 = next.central_moment(2) - m2;

        let b1 = p.lambda - p.s * m2;
        let b2 = -m2 / n + p.lambda - p.s * m3;
        self.m1_drift.push(d1 / dt, b1);
        self.g_qv.push((d1 - b1 * dt).powi(2) / dt, m2 / n);
        self.m2_drift.push(d2 / dt, b2);
        self.h_qv.push((d2 - b2 * dt).powi(2) / dt, (m4 - m2 * m2) / n);
        self.n += 1;
        self.dt = dt;
    }

    pub fn report(&self) -> Result<MomentReport> {
        if self.n < MIN_DIAGNOSTIC_STEPS {
            return Err(Error::InsufficientData(format!(
                "moment diagnostics need at least {MIN_DIAGNOSTIC_STEPS} steps, got {}",
                self.n
            )));
        }
        let n = self.n as f64;
        Ok(MomentReport {
            steps: self.n,
            dt: self.dt,
            checks: vec![
                self.m1_drift.check("m1_drift", n),
                self.g_qv.check("m1_quadratic_variation", n),
                self.m2_drift.check("m2_drift", n),
                self.h_qv.check("m2_quadratic_variation", n),
            ],
        })
    }
}

/// Diagnostics over a path of snapshots taken every `dt`.
pub fn moment_diagnostics(path: &[TypeProfile], p: &RatchetParams, dt: f64) -> Result<MomentReport> {
    let mut acc = MomentAccumulator::new();
    for w in path.windows(2) {
        acc.push(&w[0], &w[1], p, dt);
    }
    acc.report()
}

/// Predicted `(M₁ drift, M₂ drift)` at a profile.
pub fn predicted_drifts(x: &TypeProfile, p: &RatchetParams) -> (f64, f64) {
    let m2 = x.central_moment(2);
    let m3 = x.central_moment(3);
    (p.lambda - p.s * m2, -m2 / p.n as f64 + p.lambda - p.s * m3)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward_sim::FlemingViot;
    use crate::profile::poisson_profile;
    use crate::rng::seeded;

    #[test]
    fn poisson_predictions() {
        let p = RatchetParams::new(10_000, 0.1, 0.02).unwrap();
        let x = poisson_profile(5.0, 80).unwrap();
        let (d1, d2) = predicted_drifts(&x, &p);
        assert!(d1.abs() < 1e-12);
        assert!((d2 + 5.0 / 10_000.0).abs() < 1e-12);
    }

    #[test]
    fn short_path_rejected() {
        let p = RatchetParams::new(100, 0.1, 0.02).unwrap();
        let path = vec![poisson_profile(5.0, 40).unwrap(); 500];
        assert!(matches!(moment_diagnostics(&path, &p, 0.1), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn fleming_viot_self_test() {
        let p = RatchetParams::new(10_000, 0.1, 0.02).unwrap();
        let mut sim = FlemingViot::from_poisson(&p, 0.1).unwrap();
        let mut rng = seeded(21);
        let mut path = vec![sim.state().clone()];
        for _ in 0..5000 {
            sim.step(&mut rng).unwrap();
            path.push(sim.state().clone());
        }
        let r = moment_diagnostics(&path, &p, 0.1).unwrap();
        for c in &r.checks {
            assert!(c.z().abs() < 4.0, "{c:?}");
        }
    }
}
