//! Rate sweeps, the rate-vs-γ transition, phase-plane regression, occupation
//! densities and click-entry histograms. Every experiment is a deterministic
//! function of its inputs and master seed; independent jobs run on separate
//! RNG streams.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diffusion1d::{expected_click_time, green_bin_masses, ClickSim, ClickSimConfig, Reset};
use crate::error::{domain, Error, Result};
use crate::forward_sim::{fv_run, wf_run, Histogram, RecorderConfig, WrightFisher};
use crate::params::{RatchetParams, Regime, RELAXED_PREFACTOR};
use crate::rng::job_stream;

/// Points with fewer clicks are left out of the power-law fit.
pub const MIN_FIT_CLICKS: u64 = 10;
/// Fewest (Y₀, M₁) pairs a phase-plane regression accepts.
pub const MIN_PHASE_SAMPLES: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Simulator {
    Wf,
    Fv { dt: f64 },
    Diffusion { regime: Regime, dt: f64 },
}

impl Simulator {
    pub fn tag(&self) -> String {
        match self {
            Simulator::Wf => "wf".into(),
            Simulator::Fv { .. } => "fv".into(),
            Simulator::Diffusion { regime, .. } => format!("diffusion:{}", regime.name()),
        }
    }

    /// Clicks and measured generations of one run.
    pub fn count_clicks<R: Rng + ?Sized>(&self, p: &RatchetParams, generations: u64, rng: &mut R) -> Result<(u64, f64)> {
        let cfg = RecorderConfig { scatter_interval: u64::MAX, ..RecorderConfig::default() };
        match *self {
            Simulator::Wf => {
                let r = wf_run(p, generations, &cfg, rng)?;
                Ok((r.total_clicks(), r.measured_generations))
            }
            Simulator::Fv { dt } => {
                let r = fv_run(p, generations, dt, &cfg, None, rng)?;
                Ok((r.total_clicks(), r.measured_generations))
            }
            Simulator::Diffusion { regime, dt } => {
                let sim = ClickSim::from_regime(regime, p)?;
                let r = sim.run(&ClickSimConfig::new(generations as f64, dt), rng)?;
                Ok((r.clicks.len() as u64, r.elapsed))
            }
        }
    }
}

/// Ordinary least squares `y = intercept + slope·x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
    pub residuals: Vec<f64>,
    pub points: usize,
    mean_x: f64,
    sxx: f64,
    sigma2: f64,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }

    /// Standard error of the fitted line at `x`.
    pub fn predict_se(&self, x: f64) -> f64 {
        (self.sigma2 * (1.0 / self.points as f64 + (x - self.mean_x).powi(2) / self.sxx)).sqrt()
    }
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    let n = x.len();
    if n != y.len() {
        return domain("regression needs equally many x and y values");
    }
    if n < 3 {
        return Err(Error::InsufficientData(format!("regression needs at least 3 points, got {n}")));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("regression needs at least two distinct x values".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residuals: Vec<f64> = x.iter().zip(y).map(|(a, b)| b - intercept - slope * a).collect();
    let sigma2 = residuals.iter().map(|r| r * r).sum::<f64>() / (nf - 2.0);
    Ok(LinearFit {
        slope,
        intercept,
        slope_se: (sigma2 / sxx).sqrt(),
        intercept_se: (sigma2 * (1.0 / nf + mx * mx / sxx)).sqrt(),
        residuals,
        points: n,
        mean_x: mx,
        sxx,
        sigma2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub n: u64,
    pub lambda: f64,
    pub s: f64,
    pub gamma: f64,
    pub n_lambda: f64,
    pub clicks: u64,
    pub generations: f64,
    /// Clicks per `N` generations.
    pub rate: f64,
    /// Poisson standard error of `rate`.
    pub rate_se: f64,
    pub in_fit: bool,
}

impl SweepPoint {
    fn new(p: &RatchetParams, gamma: f64, clicks: u64, generations: f64) -> Self {
        let scale = p.n as f64 / generations;
        SweepPoint {
            n: p.n,
            lambda: p.lambda,
            s: p.s,
            gamma,
            n_lambda: p.n_lambda(),
            clicks,
            generations,
            rate: clicks as f64 * p.n as f64 / generations,
            rate_se: (clicks as f64).sqrt() * scale,
            in_fit: clicks >= MIN_FIT_CLICKS,
        }
    }

    /// 95% upper bound on the rate: `3N/generations` without clicks.
    pub fn rate_upper_95(&self) -> f64 {
        if self.clicks == 0 {
            3.0 * self.n as f64 / self.generations
        } else {
            self.rate + 1.96 * self.rate_se
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub simulator: String,
    pub seed: u64,
    pub points: Vec<SweepPoint>,
    /// `ln rate` against `ln Nλ` over the points with enough clicks.
    pub fit: LinearFit,
}

/// Click rates over a list of mutation rates with `s` chosen to keep `γ`
/// fixed, and the log-log slope of rate against `Nλ`. Job `i` uses RNG
/// stream `i` under `seed`.
pub fn power_law_sweep(
    n: u64,
    gamma: f64,
    lambdas: &[f64],
    generations: u64,
    simulator: Simulator,
    seed: u64,
) -> Result<SweepResult> {
    let params: Vec<RatchetParams> = lambdas
        .iter()
        .map(|&lambda| {
            if !(n as f64 * lambda > 1.0) {
                return domain(format!("sweep points need N*lambda > 1, got {}", n as f64 * lambda));
            }
            RatchetParams::from_gamma(n, lambda, gamma)
        })
        .collect::<Result<_>>()?;
    let points: Vec<SweepPoint> = params
        .par_iter()
        .enumerate()
        .map(|(i, p)| {
            let mut rng = job_stream(seed, i as u64);
            let (clicks, gens) = simulator.count_clicks(p, generations, &mut rng)?;
            Ok(SweepPoint::new(p, gamma, clicks, gens))
        })
        .collect::<Result<_>>()?;
    let (x, y): (Vec<f64>, Vec<f64>) =
        points.iter().filter(|p| p.in_fit).map(|p| (p.n_lambda.ln(), p.rate.ln())).unzip();
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "power-law fit needs 3 points with at least {MIN_FIT_CLICKS} clicks, got {}",
            x.len()
        )));
    }
    let fit = ols(&x, &y)?;
    Ok(SweepResult { simulator: simulator.tag(), seed, points, fit })
}

/// Discrete-model click rates at fixed `Nλ` for each `γ` (via `s`).
pub fn rate_vs_gamma(n: u64, n_lambda: f64, gammas: &[f64], generations: u64, seed: u64) -> Result<Vec<SweepPoint>> {
    let lambda = n_lambda / n as f64;
    let params: Vec<RatchetParams> =
        gammas.iter().map(|&g| RatchetParams::from_gamma(n, lambda, g)).collect::<Result<_>>()?;
    params
        .par_iter()
        .zip(gammas)
        .enumerate()
        .map(|(i, (p, &g))| {
            let mut rng = job_stream(seed, i as u64);
            let (clicks, gens) = Simulator::Wf.count_clicks(p, generations, &mut rng)?;
            Ok(SweepPoint::new(p, g, clicks, gens))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeSlope {
    pub regime: String,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePlaneResult {
    pub params: RatchetParams,
    pub fit: LinearFit,
    pub samples: Vec<(f64, f64)>,
    pub scatter_interval: u64,
    pub clicks: u64,
    pub predictions: Vec<RegimeSlope>,
    /// Regime whose predicted slope is closest to the fitted one.
    pub best: String,
}

/// Predicted slopes of `M₁` against `Y₀` for the three regimes.
pub fn regime_slopes(p: &RatchetParams) -> Vec<RegimeSlope> {
    let pi0 = p.pi0();
    vec![
        RegimeSlope { regime: Regime::SmallA.name(), slope: -p.theta() / (1.0 - pi0) },
        RegimeSlope { regime: Regime::AEqualsOne.name(), slope: -RELAXED_PREFACTOR / pi0 },
        RegimeSlope { regime: Regime::LargeA.name(), slope: -1.0 / pi0 },
    ]
}

/// Least-squares regression of `M₁` on `Y₀` over a discrete-model run.
pub fn phase_plane<R: Rng + ?Sized>(p: &RatchetParams, generations: u64, rng: &mut R) -> Result<PhasePlaneResult> {
    p.validate()?;
    let stats = wf_run(p, generations, &RecorderConfig::default(), rng)?;
    let samples: Vec<(f64, f64)> = stats.scatter.iter().map(|s| (s.y0, s.m1)).collect();
    if samples.len() < MIN_PHASE_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "phase plane needs at least {MIN_PHASE_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = samples.iter().copied().unzip();
    let fit = ols(&x, &y)?;
    let predictions = regime_slopes(p);
    let best = predictions
        .iter()
        .min_by(|a, b| (a.slope - fit.slope).abs().total_cmp(&(b.slope - fit.slope).abs()))
        .map(|r| r.regime.clone())
        .expect("three predictions");
    Ok(PhasePlaneResult {
        params: *p,
        fit,
        samples,
        scatter_interval: stats.scatter_interval,
        clicks: stats.total_clicks(),
        predictions,
        best,
    })
}

/// Shared bins for occupation comparisons: width `π₀/10` on `[0, 5π₀]`.
pub fn occupation_edges(pi0: f64) -> Vec<f64> {
    (0..=50).map(|i| i as f64 * pi0 / 10.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OccupationResult {
    pub regime: String,
    pub edges: Vec<f64>,
    pub monte_carlo: Vec<f64>,
    /// Green-function bin masses; absent when the reset is not a fixed point.
    pub green: Option<Vec<f64>>,
    pub l1_green: Option<f64>,
    pub wf: Option<Vec<f64>>,
    pub l1_wf: Option<f64>,
    pub clicks: u64,
    pub clicks_target: u64,
    /// False when the horizon ran out before `clicks_target` clicks.
    pub complete: bool,
    pub mean_interclick_time: f64,
    pub expected_click_time: Option<f64>,
}

pub fn l1_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

/// Occupation histogram of the regime's diffusion over `clicks_target`
/// clicks, against its Green function and optionally a discrete-model run
/// of `wf_generations` generations.
pub fn occupation_compare<R: Rng + ?Sized>(
    p: &RatchetParams,
    regime: Regime,
    clicks_target: u64,
    dt: f64,
    wf_generations: Option<u64>,
    rng: &mut R,
) -> Result<OccupationResult> {
    let sim = ClickSim::from_regime(regime, p)?;
    let pi0 = sim.spec.pi0;
    let edges = occupation_edges(pi0);
    let x0 = match sim.reset {
        Reset::Fixed(y) => Some(y),
        Reset::PhaseOne { .. } => None,
    };
    let expected = x0.map(|x| expected_click_time(&sim.spec, x)).transpose()?;
    // Generous horizon: the run normally stops at the click target.
    let typical = expected.unwrap_or_else(|| p.n_f64());
    let mut cfg = ClickSimConfig::new(100.0 * typical * clicks_target.max(1) as f64, dt);
    cfg.max_clicks = Some(clicks_target);
    cfg.occupation = Some((50, 5.0 * pi0));
    let r = sim.run(&cfg, rng)?;
    let monte_carlo = r.occupation.as_ref().expect("occupation requested").masses();
    let green = x0.map(|x| green_bin_masses(&sim.spec, x, &edges)).transpose()?;
    let l1_green = green.as_ref().map(|g| l1_distance(g, &monte_carlo));
    let wf = match wf_generations {
        Some(g) => {
            let cfg = RecorderConfig { hist_bin_width: Some(pi0 / 10.0), hist_upper: Some(5.0 * pi0), scatter_interval: u64::MAX };
            Some(wf_run(p, g, &cfg, rng)?.y0_masses())
        }
        None => None,
    };
    let l1_wf = wf.as_ref().map(|w| l1_distance(w, &monte_carlo));
    let clicks = r.clicks.len() as u64;
    Ok(OccupationResult {
        regime: regime.name(),
        edges,
        monte_carlo,
        green,
        l1_green,
        wf,
        l1_wf,
        clicks,
        clicks_target,
        complete: clicks >= clicks_target,
        mean_interclick_time: r.mean_interclick_time(),
        expected_click_time: expected,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickEntryResult {
    pub params: RatchetParams,
    pub hist: Histogram,
    pub masses: Vec<f64>,
    pub mode: f64,
    pub clicks: u64,
    pub generations: u64,
    pub pi0: f64,
    pub pi1: f64,
}

/// Histogram of the new best-class frequency right after each click of the
/// discrete model, over `clicks_target` clicks after burn-in (or until
/// `max_generations`).
pub fn click_entry_histogram<R: Rng + ?Sized>(
    p: &RatchetParams,
    clicks_target: u64,
    max_generations: u64,
    rng: &mut R,
) -> Result<ClickEntryResult> {
    p.validate()?;
    let (pi0, pi1) = (p.pi0(), p.pi1());
    let mut hist = Histogram::uniform(0.0, 3.0 * pi0.max(pi1), 40);
    let mut sim = WrightFisher::from_poisson(p, rng)?;
    let mut burnt = false;
    let mut clicks = 0;
    let mut generations = 0;
    while generations < max_generations && clicks < clicks_target {
        let o = sim.step(rng);
        generations += 1;
        if o.clicks == 0 {
            continue;
        }
        if !burnt {
            burnt = true;
            continue;
        }
        hist.add(o.new_best_freq, 1.0);
        clicks += 1;
    }
    if clicks == 0 {
        return Err(Error::InsufficientData(format!("no clicks after burn-in within {max_generations} generations")));
    }
    Ok(ClickEntryResult { params: *p, masses: hist.masses(), mode: hist.mode(), hist, clicks, generations, pi0, pi1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn ols_recovers_line() {
        let x: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| 2.0 - 0.5 * v).collect();
        let f = ols(&x, &y).unwrap();
        assert!((f.slope + 0.5).abs() < 1e-12);
        assert!((f.intercept - 2.0).abs() < 1e-12);
        assert!(f.slope_se < 1e-10);
        assert!(ols(&x[..2], &y[..2]).is_err());
    }

    #[test]
    fn sweep_point_rate() {
        let p = RatchetParams::new(1000, 0.01, 0.002).unwrap();
        let pt = SweepPoint::new(&p, 0.5, 40, 2e5);
        assert_eq!(pt.rate, 40.0 * 1000.0 / 2e5);
        assert!(pt.in_fit);
        let none = SweepPoint::new(&p, 0.5, 0, 1e6);
        assert_eq!(none.rate, 0.0);
        assert_eq!(none.rate_upper_95(), 3.0 * 1000.0 / 1e6);
        assert!(!none.in_fit);
    }

    #[test]
    fn sweep_is_deterministic() {
        let lambdas = [0.02, 0.05, 0.1];
        let a = power_law_sweep(500, 0.9, &lambdas, 20_000, Simulator::Wf, 3).unwrap();
        let b = power_law_sweep(500, 0.9, &lambdas, 20_000, Simulator::Wf, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.fit.points, 3);
        assert!(a.fit.slope > 0.0);
    }

    #[test]
    fn sweep_rejects_small_n_lambda() {
        assert!(power_law_sweep(100, 0.5, &[0.005], 10, Simulator::Wf, 1).is_err());
    }

    #[test]
    fn phase_plane_needs_samples() {
        let p = RatchetParams::from_gamma(1000, 0.05, 0.6).unwrap();
        assert!(matches!(phase_plane(&p, 5000, &mut seeded(1)), Err(Error::InsufficientData(_))));
    }

    #[test]
    fn regime_slopes_pass_through_equilibrium() {
        let p = RatchetParams::new(10_000, 0.1, 0.02).unwrap();
        let s = regime_slopes(&p);
        assert_eq!(s.len(), 3);
        assert!((s[2].slope * p.pi0() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn click_entry_masses_sum_to_one() {
        let p = RatchetParams::from_gamma(1000, 0.1, 0.9).unwrap();
        let r = click_entry_histogram(&p, 50, 1_000_000, &mut seeded(4)).unwrap();
        assert_eq!(r.clicks, 50);
        assert!((r.masses.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
