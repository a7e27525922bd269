use rand::Rng;
use rand_distr::{Binomial, Distribution};

use super::{burn_in_cap, sim_theta, validate_sim, CountProfile, ProfileView, Recorder, RecorderConfig, RunStats, StepOutcome};
use crate::deterministic::convolve_into;
use crate::error::{domain, Result};
use crate::params::RatchetParams;
use crate::profile::{poisson_weights, poisson_window, TypeProfile, EXTEND_TOLERANCE};

fn mutation_kernel(lambda: f64) -> Vec<f64> {
    let mut k = poisson_weights(lambda, poisson_window(lambda, EXTEND_TOLERANCE));
    let total: f64 = k.iter().sum();
    for v in &mut k {
        *v /= total;
    }
    k
}

/// Selection by `(1 − s)^k`, then Poisson(λ) mutation.
fn weights_into(freqs: &[f64], s: f64, kernel: &[f64], tilted: &mut Vec<f64>, out: &mut Vec<f64>) {
    tilted.clear();
    let mut fit = 1.0;
    for &x in freqs {
        tilted.push(x * fit);
        fit *= 1.0 - s;
    }
    let w: f64 = tilted.iter().sum();
    for v in tilted.iter_mut() {
        *v /= w;
    }
    convolve_into(tilted, kernel, out);
}

/// Offspring class probabilities of the discrete model,
/// `p_k = Σ_j x_{k−j} (1−s)^{k−j} e^{−λ} λ^j / (j! W)`. This is also the
/// deterministic one-generation map of an infinite population.
pub fn wf_weights(x: &TypeProfile, lambda: f64, s: f64) -> TypeProfile {
    let kernel = mutation_kernel(lambda);
    let mut tilted = Vec::new();
    let mut out = Vec::new();
    weights_into(&x.freqs, s, &kernel, &mut tilted, &mut out);
    TypeProfile { offset: x.offset, freqs: out }
}

/// Multinomial draw of `n` individuals as a chain of conditional binomials.
fn multinomial_into<R: Rng + ?Sized>(n: u64, weights: &[f64], suffix: &mut Vec<f64>, out: &mut Vec<u64>, rng: &mut R) {
    suffix.clear();
    suffix.resize(weights.len(), 0.0);
    let mut acc = 0.0;
    for (i, &w) in weights.iter().enumerate().rev() {
        acc += w;
        suffix[i] = acc;
    }
    out.clear();
    let mut remaining = n;
    let last = weights.len() - 1;
    for (k, &w) in weights.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if k == last {
            out.push(remaining);
            break;
        }
        let q = if suffix[k] > 0.0 { w / suffix[k] } else { 1.0 };
        let draw = if q >= 1.0 {
            remaining
        } else if q <= 0.0 {
            0
        } else {
            Binomial::new(remaining, q).expect("probability in (0,1)").sample(rng)
        };
        out.push(draw);
        remaining -= draw;
    }
}

/// The discrete ratchet as a stateful simulator with reusable buffers.
#[derive(Debug, Clone)]
pub struct WrightFisher {
    params: RatchetParams,
    kernel: Vec<f64>,
    state: CountProfile,
    freqs: Vec<f64>,
    tilted: Vec<f64>,
    weights: Vec<f64>,
    suffix: Vec<f64>,
    next: Vec<u64>,
}

impl WrightFisher {
    pub fn new(p: &RatchetParams, mut state: CountProfile) -> Result<Self> {
        validate_sim(p)?;
        if state.total() != p.n {
            return domain(format!("count profile holds {} individuals, expected {}", state.total(), p.n));
        }
        state.normalize_window();
        Ok(WrightFisher {
            params: *p,
            kernel: mutation_kernel(p.lambda),
            state,
            freqs: Vec::new(),
            tilted: Vec::new(),
            weights: Vec::new(),
            suffix: Vec::new(),
            next: Vec::new(),
        })
    }

    /// Population of `N` drawn multinomially from Poisson(θ).
    pub fn from_poisson<R: Rng + ?Sized>(p: &RatchetParams, rng: &mut R) -> Result<Self> {
        validate_sim(p)?;
        let theta = sim_theta(p);
        if !theta.is_finite() {
            return domain("no mutation-selection equilibrium with s = 0 and lambda > 0");
        }
        let weights = poisson_weights(theta, poisson_window(theta, EXTEND_TOLERANCE));
        let mut counts = Vec::new();
        let mut suffix = Vec::new();
        multinomial_into(p.n, &weights, &mut suffix, &mut counts, rng);
        WrightFisher::new(p, CountProfile { offset: 0, counts })
    }

    pub fn state(&self) -> &CountProfile {
        &self.state
    }

    pub fn params(&self) -> &RatchetParams {
        &self.params
    }

    pub(crate) fn view(&self) -> ProfileView<'_> {
        ProfileView::Counts { counts: &self.state.counts, n: self.params.n as f64, s: self.params.s }
    }

    /// One generation of resampling; reports the offset advance if the best
    /// class was lost.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> StepOutcome {
        let n = self.params.n;
        self.freqs.clear();
        self.freqs.extend(self.state.counts.iter().map(|&c| c as f64));
        weights_into(&self.freqs, self.params.s, &self.kernel, &mut self.tilted, &mut self.weights);
        multinomial_into(n, &self.weights, &mut self.suffix, &mut self.next, rng);
        std::mem::swap(&mut self.state.counts, &mut self.next);
        let clicks = self.state.normalize_window() as u64;
        StepOutcome { clicks, new_best_freq: self.state.counts[0] as f64 / n as f64 }
    }
}

/// One generation from `c`.
pub fn wf_step<R: Rng + ?Sized>(c: &CountProfile, p: &RatchetParams, rng: &mut R) -> Result<(CountProfile, StepOutcome)> {
    let mut sim = WrightFisher::new(p, c.clone())?;
    let outcome = sim.step(rng);
    Ok((sim.state, outcome))
}

/// A full run: Poisson(θ) start, burn-in through the first click, then
/// `generations` recorded generations.
pub fn wf_run<R: Rng + ?Sized>(p: &RatchetParams, generations: u64, cfg: &RecorderConfig, rng: &mut R) -> Result<RunStats> {
    if generations < 1 {
        return domain("a run needs at least one generation");
    }
    let mut sim = WrightFisher::from_poisson(p, rng)?;
    let pi0 = (-sim_theta(p)).exp();
    let cap = burn_in_cap(p, generations);

    let mut rec = Recorder::new(cfg, pi0);
    let mut burn = 0u64;
    let mut completed = false;
    while burn < cap {
        let o = sim.step(rng);
        burn += 1;
        if o.clicks > 0 {
            completed = true;
            break;
        }
        rec.observe(burn, &sim.view());
    }
    let stats = |rec: Recorder, completed: bool, measured: u64| RunStats {
        simulator: "wf".into(),
        params: *p,
        seed: None,
        generations,
        burn_in_completed: completed,
        burn_in_generations: burn as f64,
        measured_generations: measured as f64,
        clicks: rec.clicks,
        y0_hist: rec.hist,
        scatter_interval: rec.scatter_interval,
        scatter: rec.scatter,
    };
    if !completed {
        return Ok(stats(rec, false, burn));
    }

    let mut rec = Recorder::new(cfg, pi0);
    for g in 1..=generations {
        let o = sim.step(rng);
        rec.click(g as f64, o);
        rec.observe(g, &sim.view());
    }
    Ok(stats(rec, true, generations))
}
