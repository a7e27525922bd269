use rand::Rng;
use rand_distr::StandardNormal;

use super::{burn_in_cap, sim_theta, validate_sim, MomentAccumulator, ProfileView, Recorder, RecorderConfig, RunStats, StepOutcome};
use crate::error::{domain, Error, Result};
use crate::params::RatchetParams;
use crate::profile::{poisson_weights, TypeProfile};

pub const DEFAULT_FV_DT: f64 = 0.1;

/// Largest clamped mass accepted in a single Euler step.
const MAX_CLAMPED: f64 = 1e-3;
const MAX_HALVINGS: u32 = 10;

/// Classes below `EXTINCTION_FLOOR · dt/N` are set to zero after each step.
/// At that scale the Gaussian increment is orders of magnitude wider than the
/// class itself, and clamping alone keeps lifting empty tail classes, which
/// biases the drift of the mean upward by several standard errors.
pub const EXTINCTION_FLOOR: f64 = 0.01;

/// Smallest window the Euler scheme runs on: `θ + 10√θ + 25` classes.
pub fn fv_min_window(theta: f64) -> usize {
    (theta + 10.0 * theta.sqrt() + 25.0).ceil() as usize
}

/// Drift `(s(M₁ − k) − λ)X_k + λX_{k−1}` of the truncated system. The last
/// class keeps its outgoing mutation flux so that the drift sums to zero.
pub fn fv_drift(x: &[f64], lambda: f64, s: f64, out: &mut Vec<f64>) {
    let mass: f64 = x.iter().sum();
    let m1 = x.iter().enumerate().map(|(k, &v)| k as f64 * v).sum::<f64>() / mass;
    let last = x.len() - 1;
    out.clear();
    for (k, &v) in x.iter().enumerate() {
        let out_flux = if k == last { 0.0 } else { lambda * v };
        let in_flux = if k == 0 { 0.0 } else { lambda * x[k - 1] };
        out.push(s * (m1 - k as f64) * v - out_flux + in_flux);
    }
}

/// Diagnostics of one Fleming-Viot step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FvStep {
    pub clicks: u64,
    pub new_best_freq: f64,
    /// How many times the step had to be halved.
    pub halvings: u32,
    /// Largest pre-clamp deviation of the total mass from one.
    pub mass_deviation: f64,
    /// Mass removed by clamping negatives and extinct classes.
    pub clamped_mass: f64,
}

/// The truncated Fleming-Viot system, Euler-discretized with the
/// antisymmetric pair noise.
#[derive(Debug, Clone)]
pub struct FlemingViot {
    params: RatchetParams,
    dt: f64,
    window: usize,
    state: TypeProfile,
    drift: Vec<f64>,
    trial: Vec<f64>,
}

impl FlemingViot {
    pub fn new(p: &RatchetParams, x: TypeProfile, dt: f64) -> Result<Self> {
        validate_sim(p)?;
        if !(dt > 0.0 && dt <= 1.0) {
            return Err(Error::StepSize(format!("Fleming-Viot step must lie in (0, 1], got {dt}")));
        }
        let theta = sim_theta(p);
        if !theta.is_finite() {
            return domain("no mutation-selection equilibrium with s = 0 and lambda > 0");
        }
        let window = fv_min_window(theta).max(x.len());
        let mut state = x;
        state.freqs.resize(window, 0.0);
        Ok(FlemingViot { params: *p, dt, window, state, drift: Vec::new(), trial: Vec::new() })
    }

    /// Start from Poisson(θ) restricted to the window.
    pub fn from_poisson(p: &RatchetParams, dt: f64) -> Result<Self> {
        validate_sim(p)?;
        let theta = sim_theta(p);
        if !theta.is_finite() {
            return domain("no mutation-selection equilibrium with s = 0 and lambda > 0");
        }
        let mut x = TypeProfile { offset: 0, freqs: poisson_weights(theta, fv_min_window(theta)) };
        x.normalize();
        FlemingViot::new(p, x, dt)
    }

    pub fn state(&self) -> &TypeProfile {
        &self.state
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub(crate) fn view(&self) -> ProfileView<'_> {
        ProfileView::Freqs { freqs: &self.state.freqs, s: self.params.s }
    }

    /// Advance by one `dt`, splitting into halves when clamping removes too
    /// much mass.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<FvStep> {
        let mut info = FvStep::default();
        self.advance(self.dt, 0, rng, &mut info)?;
        info.new_best_freq = self.state.freqs[0];
        Ok(info)
    }

    fn advance<R: Rng + ?Sized>(&mut self, dt: f64, depth: u32, rng: &mut R, info: &mut FvStep) -> Result<()> {
        let (dev, clamped) = self.euler_trial(dt, rng);
        if clamped > MAX_CLAMPED {
            if depth == MAX_HALVINGS {
                return Err(Error::Numerical(format!(
                    "Fleming-Viot step still clamps {clamped:.3e} of mass after {MAX_HALVINGS} halvings"
                )));
            }
            info.halvings = info.halvings.max(depth + 1);
            self.advance(0.5 * dt, depth + 1, rng, info)?;
            return self.advance(0.5 * dt, depth + 1, rng, info);
        }
        info.mass_deviation = info.mass_deviation.max(dev);
        info.clamped_mass += clamped;
        std::mem::swap(&mut self.state.freqs, &mut self.trial);
        let total: f64 = self.state.freqs.iter().sum();
        for v in &mut self.state.freqs {
            *v /= total;
        }
        let lead = self.state.freqs.iter().take_while(|&&v| v == 0.0).count();
        if lead > 0 {
            self.state.freqs.drain(..lead);
            self.state.freqs.resize(self.window, 0.0);
            self.state.offset += lead;
            info.clicks += lead as u64;
        }
        Ok(())
    }

    /// Writes the candidate state into `trial`; returns the pre-clamp mass
    /// deviation and the clamped mass.
    fn euler_trial<R: Rng + ?Sized>(&mut self, dt: f64, rng: &mut R) -> (f64, f64) {
        let x = &self.state.freqs;
        fv_drift(x, self.params.lambda, self.params.s, &mut self.drift);
        self.trial.clear();
        self.trial.extend(x.iter().zip(&self.drift).map(|(&v, &d)| v + d * dt));
        let scale = dt / self.params.n as f64;
        let k = x.len();
        for j in 0..k {
            if x[j] <= 0.0 {
                continue;
            }
            let sj = scale * x[j];
            for i in (j + 1)..k {
                if x[i] <= 0.0 {
                    continue;
                }
                let z: f64 = rng.sample(StandardNormal);
                let g = z * (sj * x[i]).sqrt();
                self.trial[i] += g;
                self.trial[j] -= g;
            }
        }
        let dev = (self.trial.iter().sum::<f64>() - 1.0).abs();
        let mut clamped = 0.0;
        let floor = EXTINCTION_FLOOR * scale;
        for v in &mut self.trial {
            if *v < 0.0 {
                clamped -= *v;
                *v = 0.0;
            } else if *v < floor {
                clamped += *v;
                *v = 0.0;
            }
        }
        (dev, clamped)
    }
}

/// One step of length `dt` from `x`.
pub fn fv_step<R: Rng + ?Sized>(x: &TypeProfile, p: &RatchetParams, dt: f64, rng: &mut R) -> Result<(TypeProfile, FvStep)> {
    let mut sim = FlemingViot::new(p, x.clone(), dt)?;
    let info = sim.step(rng)?;
    Ok((sim.state, info))
}

/// A full Fleming-Viot run with the same protocol as the discrete model;
/// the recorder samples once per generation and click times are fractional.
/// When `moments` is given, every measured step feeds it.
pub fn fv_run<R: Rng + ?Sized>(
    p: &RatchetParams,
    generations: u64,
    dt: f64,
    cfg: &RecorderConfig,
    mut moments: Option<&mut MomentAccumulator>,
    rng: &mut R,
) -> Result<RunStats> {
    if generations < 1 {
        return domain("a run needs at least one generation");
    }
    let mut sim = FlemingViot::from_poisson(p, dt)?;
    let pi0 = (-sim_theta(p)).exp();
    let steps_per_gen = (1.0 / dt).round().max(1.0) as u64;
    if ((steps_per_gen as f64) * dt - 1.0).abs() > 1e-9 {
        return Err(Error::StepSize(format!("1/dt must be an integer, got dt = {dt}")));
    }
    let cap = burn_in_cap(p, generations).saturating_mul(steps_per_gen);

    let mut rec = Recorder::new(cfg, pi0);
    let mut burn = 0u64;
    let mut completed = false;
    while burn < cap {
        let o = sim.step(rng)?;
        burn += 1;
        if o.clicks > 0 {
            completed = true;
            break;
        }
        if burn.is_multiple_of(steps_per_gen) {
            rec.observe(burn / steps_per_gen, &sim.view());
        }
    }
    let burn_gens = burn as f64 * dt;
    let stats = |rec: Recorder, completed: bool, measured: f64| RunStats {
        simulator: "fv".into(),
        params: *p,
        seed: None,
        generations,
        burn_in_completed: completed,
        burn_in_generations: burn_gens,
        measured_generations: measured,
        clicks: rec.clicks,
        y0_hist: rec.hist,
        scatter_interval: rec.scatter_interval,
        scatter: rec.scatter,
    };
    if !completed {
        return Ok(stats(rec, false, burn_gens));
    }

    let mut rec = Recorder::new(cfg, pi0);
    let total = generations * steps_per_gen;
    let mut prev = sim.state().clone();
    for i in 1..=total {
        let o = sim.step(rng)?;
        if let Some(acc) = moments.as_deref_mut() {
            acc.push(&prev, sim.state(), p, dt);
            prev.clone_from(sim.state());
        }
        rec.click(i as f64 * dt, StepOutcome { clicks: o.clicks, new_best_freq: o.new_best_freq });
        if i % steps_per_gen == 0 {
            rec.observe(i / steps_per_gen, &sim.view());
        }
    }
    Ok(stats(rec, true, generations as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::deterministic::evolve_ode;
    use crate::profile::poisson_profile;
    use crate::rng::seeded;

    #[test]
    fn drift_sums_to_zero() {
        let x = poisson_profile(5.0, 60).unwrap();
        let mut d = Vec::new();
        fv_drift(&x.freqs, 0.1, 0.02, &mut d);
        assert!(d.iter().sum::<f64>().abs() <= 1e-12);
        let ragged = [0.3, 0.0, 0.25, 0.4, 0.05];
        fv_drift(&ragged, 0.7, 0.1, &mut d);
        assert!(d.iter().sum::<f64>().abs() <= 1e-12);
    }

    #[test]
    fn noiseless_limit_matches_ode() {
        let p = RatchetParams { n: 1_000_000_000_000_000_000, lambda: 0.1, s: 0.02 };
        let x = TypeProfile::new(0, {
            let mut v = poisson_weights(3.0, fv_min_window(5.0));
            let t: f64 = v.iter().sum();
            v.iter_mut().for_each(|a| *a /= t);
            v
        })
        .unwrap();
        let dt = 0.01;
        let (y, info) = fv_step(&x, &p, dt, &mut seeded(1)).unwrap();
        let want = evolve_ode(&x, &p, dt, dt / 10.0).unwrap();
        assert_eq!(info.clicks, 0);
        let err = (0..y.len()).map(|k| (y.at(k) - want.at(k)).abs()).fold(0.0, f64::max);
        assert!(err < 1e-5, "err {err}");
    }

    #[test]
    fn simplex_preserved() {
        let p = RatchetParams::new(10_000, 0.1, 0.02).unwrap();
        let mut sim = FlemingViot::from_poisson(&p, 0.1).unwrap();
        let mut rng = seeded(4);
        for _ in 0..2000 {
            let info = sim.step(&mut rng).unwrap();
            assert!(info.mass_deviation <= 1e-6);
            let x = sim.state();
            assert!(x.freqs.iter().all(|&v| v >= 0.0));
            assert!((x.mass() - 1.0).abs() < 1e-12);
            assert!(x.freqs[0] > 0.0);
        }
    }

    #[test]
    fn increment_covariance() {
        let p = RatchetParams { n: 1000, lambda: 0.0, s: 0.0 };
        let x = TypeProfile::new(0, vec![0.2, 0.5, 0.3]).unwrap();
        let dt = 0.01;
        let reps = 100_000;
        let mut rng = seeded(8);
        let mut sim = FlemingViot::new(&p, x.clone(), dt).unwrap();
        let mut d = vec![[0.0f64; 3]; reps];
        for row in d.iter_mut() {
            sim.state.clone_from(&x);
            sim.state.freqs.resize(sim.window, 0.0);
            sim.step(&mut rng).unwrap();
            for k in 0..3 {
                row[k] = sim.state.freqs[k] - x.freqs[k];
            }
        }
        let n = reps as f64;
        let scale = dt / p.n as f64;
        for j in 0..3 {
            for k in j..3 {
                let prods: Vec<f64> = d.iter().map(|r| r[j] * r[k]).collect();
                let mean = prods.iter().sum::<f64>() / n;
                let var = prods.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
                let se = (var / n).sqrt();
                let want = if j == k { x.freqs[k] * (1.0 - x.freqs[k]) * scale } else { -x.freqs[j] * x.freqs[k] * scale };
                assert!((mean - want).abs() < 4.0 * se, "cov({j},{k}) {mean} vs {want} (se {se})");
            }
        }
    }

    #[test]
    fn rejects_bad_step() {
        let p = RatchetParams::new(100, 0.1, 0.02).unwrap();
        assert!(FlemingViot::from_poisson(&p, 1.5).is_err());
        assert!(FlemingViot::from_poisson(&p, 0.0).is_err());
    }

    #[test]
    fn small_population_halves_steps() {
        let p = RatchetParams::new(20, 0.5, 0.1).unwrap();
        let mut sim = FlemingViot::from_poisson(&p, 1.0).unwrap();
        let mut rng = seeded(2);
        let mut halved = false;
        for _ in 0..50 {
            let info = sim.step(&mut rng).unwrap();
            halved |= info.halvings > 0;
        }
        assert!(halved);
    }

    #[test]
    fn run_is_reproducible() {
        let p = RatchetParams::from_gamma(500, 0.1, 0.9).unwrap();
        let a = fv_run(&p, 500, 0.1, &RecorderConfig::default(), None, &mut seeded(3)).unwrap();
        let b = fv_run(&p, 500, 0.1, &RecorderConfig::default(), None, &mut seeded(3)).unwrap();
        assert_eq!(a, b);
        for w in a.clicks.windows(2) {
            assert!(w[1].time > w[0].time);
        }
    }

    #[test]
    fn no_mutation_never_clicks() {
        let p = RatchetParams { n: 200, lambda: 0.0, s: 0.05 };
        let stats = fv_run(&p, 200, 0.1, &RecorderConfig::default(), None, &mut seeded(5)).unwrap();
        assert_eq!(stats.total_clicks(), 0);
    }
}
