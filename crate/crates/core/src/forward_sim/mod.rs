//! Stochastic forward simulators: the discrete Wright-Fisher ratchet and the
//! truncated Fleming-Viot diffusion, with click detection and recorders.

mod fv;
mod moments;
mod wf;

pub use fv::{fv_drift, fv_min_window, EXTINCTION_FLOOR, fv_run, fv_step, FlemingViot, FvStep, DEFAULT_FV_DT};
pub use moments::{moment_diagnostics, predicted_drifts, MomentAccumulator, MomentCheck, MomentReport, MIN_DIAGNOSTIC_STEPS};
pub use wf::{wf_run, wf_step, wf_weights, WrightFisher};

use serde::{Deserialize, Serialize};

use crate::params::RatchetParams;
use crate::profile::TypeProfile;

/// Class counts of a finite population: `counts[i]` individuals carry
/// `offset + i` mutations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountProfile {
    pub offset: usize,
    pub counts: Vec<u64>,
}

impl CountProfile {
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn to_profile(&self) -> TypeProfile {
        let n = self.total() as f64;
        TypeProfile {
            offset: self.offset,
            freqs: self.counts.iter().map(|&c| c as f64 / n).collect(),
        }
    }

    /// Drops empty leading classes (advancing the offset) and trailing zeros;
    /// returns the offset advance.
    pub fn normalize_window(&mut self) -> usize {
        while self.counts.len() > 1 && *self.counts.last().unwrap() == 0 {
            self.counts.pop();
        }
        let lead = self.counts.iter().take_while(|&&c| c == 0).count();
        let lead = lead.min(self.counts.len().saturating_sub(1));
        if lead > 0 {
            self.counts.drain(..lead);
            self.offset += lead;
        }
        lead
    }
}

/// A click of the ratchet: the best class was lost.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickRecord {
    /// Time since the start of measurement, in generations.
    pub time: f64,
    /// How far the best class advanced.
    pub clicks_at_event: u64,
    /// Frequency of the new best class right after the click.
    pub new_best_freq: f64,
}

/// Result of one simulator step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepOutcome {
    pub clicks: u64,
    pub new_best_freq: f64,
}

/// Fixed-width histogram whose last bin also collects values above the range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub weight: Vec<f64>,
}

impl Histogram {
    pub fn uniform(lo: f64, hi: f64, bins: usize) -> Self {
        assert!(bins > 0 && hi > lo);
        let w = (hi - lo) / bins as f64;
        Histogram {
            edges: (0..=bins).map(|i| lo + w * i as f64).collect(),
            weight: vec![0.0; bins],
        }
    }

    pub fn bins(&self) -> usize {
        self.weight.len()
    }

    pub fn bin_of(&self, x: f64) -> usize {
        let lo = self.edges[0];
        let w = self.edges[1] - lo;
        let i = ((x - lo) / w).floor();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.bins() - 1)
        }
    }

    pub fn add(&mut self, x: f64, w: f64) {
        let i = self.bin_of(x);
        self.weight[i] += w;
    }

    pub fn total(&self) -> f64 {
        self.weight.iter().sum()
    }

    /// Bin masses summing to one (all zero for an empty histogram).
    pub fn masses(&self) -> Vec<f64> {
        let t = self.total();
        if t > 0.0 {
            self.weight.iter().map(|w| w / t).collect()
        } else {
            vec![0.0; self.bins()]
        }
    }

    /// Centre of the heaviest bin.
    pub fn mode(&self) -> f64 {
        let (i, _) = self
            .weight
            .iter()
            .enumerate()
            .fold((0, f64::MIN), |best, (i, &w)| if w > best.1 { (i, w) } else { best });
        0.5 * (self.edges[i] + self.edges[i + 1])
    }

    /// Sum of two histograms over identical edges.
    pub fn merge(&mut self, other: &Histogram) {
        assert_eq!(self.edges, other.edges, "histogram edges differ");
        for (a, b) in self.weight.iter_mut().zip(&other.weight) {
            *a += b;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecorderConfig {
    /// Y₀ histogram bin width; `None` means `π₀/50`.
    pub hist_bin_width: Option<f64>,
    /// Upper end of the Y₀ histogram; `None` means `5π₀`.
    pub hist_upper: Option<f64>,
    /// Generations between (Y₀, M₁) scatter samples.
    pub scatter_interval: u64,
}

impl Default for RecorderConfig {
    fn default() -> Self {
        RecorderConfig { hist_bin_width: None, hist_upper: None, scatter_interval: 10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint {
    pub generation: u64,
    pub y0: f64,
    pub m1: f64,
    pub mean_fitness: f64,
}

/// Everything a run records after burn-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub simulator: String,
    pub params: RatchetParams,
    pub seed: Option<u64>,
    pub generations: u64,
    /// False when no click happened within the burn-in cap; the statistics
    /// then describe the (click-free) burn-in itself.
    pub burn_in_completed: bool,
    pub burn_in_generations: f64,
    pub measured_generations: f64,
    pub clicks: Vec<ClickRecord>,
    pub y0_hist: Histogram,
    pub scatter_interval: u64,
    pub scatter: Vec<ScatterPoint>,
}

impl RunStats {
    pub fn total_clicks(&self) -> u64 {
        self.clicks.iter().map(|c| c.clicks_at_event).sum()
    }

    /// Clicks per `N` generations.
    pub fn rate_per_n_generations(&self) -> f64 {
        if self.measured_generations <= 0.0 {
            return 0.0;
        }
        self.total_clicks() as f64 * self.params.n as f64 / self.measured_generations
    }

    /// Mean number of generations between clicks; infinite without clicks.
    pub fn mean_interclick_time(&self) -> f64 {
        match self.total_clicks() {
            0 => f64::INFINITY,
            c => self.measured_generations / c as f64,
        }
    }

    pub fn y0_masses(&self) -> Vec<f64> {
        self.y0_hist.masses()
    }
}

/// Accumulates the per-generation observations of a run.
#[derive(Debug, Clone)]
pub(crate) struct Recorder {
    pub hist: Histogram,
    pub scatter_interval: u64,
    pub scatter: Vec<ScatterPoint>,
    pub clicks: Vec<ClickRecord>,
}

impl Recorder {
    pub fn new(cfg: &RecorderConfig, pi0: f64) -> Self {
        let upper = cfg.hist_upper.unwrap_or(5.0 * pi0);
        let width = cfg.hist_bin_width.unwrap_or(pi0 / 50.0);
        let bins = ((upper / width).round() as usize).max(1);
        Recorder {
            hist: Histogram::uniform(0.0, upper, bins),
            scatter_interval: cfg.scatter_interval.max(1),
            scatter: Vec::new(),
            clicks: Vec::new(),
        }
    }

    pub fn observe(&mut self, generation: u64, y: &ProfileView<'_>) {
        let y0 = y.best_freq();
        self.hist.add(y0, 1.0);
        if generation.is_multiple_of(self.scatter_interval) {
            self.scatter.push(ScatterPoint {
                generation,
                y0,
                m1: y.mean(),
                mean_fitness: y.mean_fitness(),
            });
        }
    }

    pub fn click(&mut self, time: f64, outcome: StepOutcome) {
        if outcome.clicks > 0 {
            self.clicks.push(ClickRecord {
                time,
                clicks_at_event: outcome.clicks,
                new_best_freq: outcome.new_best_freq,
            });
        }
    }
}

/// Read-only view of a population state for the recorder.
pub(crate) enum ProfileView<'a> {
    Counts { counts: &'a [u64], n: f64, s: f64 },
    Freqs { freqs: &'a [f64], s: f64 },
}

impl ProfileView<'_> {
    fn best_freq(&self) -> f64 {
        match self {
            ProfileView::Counts { counts, n, .. } => counts[0] as f64 / n,
            ProfileView::Freqs { freqs, .. } => freqs[0],
        }
    }

    fn mean(&self) -> f64 {
        match self {
            ProfileView::Counts { counts, n, .. } => {
                counts.iter().enumerate().map(|(k, &c)| k as f64 * c as f64).sum::<f64>() / n
            }
            ProfileView::Freqs { freqs, .. } => freqs.iter().enumerate().map(|(k, &x)| k as f64 * x).sum(),
        }
    }

    fn mean_fitness(&self) -> f64 {
        match self {
            ProfileView::Counts { counts, n, s } => weighted_fitness(counts.iter().map(|&c| c as f64), *s) / n,
            ProfileView::Freqs { freqs, s } => weighted_fitness(freqs.iter().copied(), *s),
        }
    }
}

fn weighted_fitness(values: impl Iterator<Item = f64>, s: f64) -> f64 {
    let mut w = 1.0;
    let mut acc = 0.0;
    for v in values {
        acc += v * w;
        w *= 1.0 - s;
    }
    acc
}

/// Generations allowed for burn-in: 100 Haigh click times, or `fallback`
/// when the formula is not usable (no mutation or selection).
pub(crate) fn burn_in_cap(p: &RatchetParams, fallback: u64) -> u64 {
    let theta = p.lambda / p.s;
    let h = 4.0 * p.n as f64 * (-theta).exp() + 7.0 * theta.ln() + 2.0 / p.s - 20.0;
    if h.is_finite() && h > 0.0 {
        (100.0 * h).ceil() as u64
    } else {
        fallback.max(1)
    }
}

/// Simulators accept `λ = 0` and `s = 0` (degenerate but well defined).
pub(crate) fn validate_sim(p: &RatchetParams) -> crate::Result<()> {
    if p.n < 1 {
        return crate::error::domain("population size must be at least 1");
    }
    if !(p.lambda >= 0.0 && p.lambda.is_finite()) {
        return crate::error::domain(format!("mutation rate must be nonnegative, got {}", p.lambda));
    }
    if !(p.s >= 0.0 && p.s < 1.0) {
        return crate::error::domain(format!("selection coefficient must lie in [0,1), got {}", p.s));
    }
    Ok(())
}

/// `λ/s`, taken as zero when there is no mutation.
pub(crate) fn sim_theta(p: &RatchetParams) -> f64 {
    if p.lambda == 0.0 {
        0.0
    } else {
        p.lambda / p.s
    }
}
