use std::path::PathBuf;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use ratchet_core::deterministic::evolve_closed;
use ratchet_core::diffusion1d::{
    expected_click_time, green_function, ClickSim, ClickSimConfig, ClickThreshold, DiffusionSpec, Reset,
    DEFAULT_DIFFUSION_DT,
};
use ratchet_core::experiments::{
    click_entry_histogram, occupation_compare, phase_plane, power_law_sweep, rate_vs_gamma, Simulator,
};
use ratchet_core::forward_sim::{
    fv_run, wf_run, MomentAccumulator, RecorderConfig, RunStats, DEFAULT_FV_DT, MIN_DIAGNOSTIC_STEPS,
};
use ratchet_core::io::{self, Manifest, Table};
use ratchet_core::params::haigh_click_time;
use ratchet_core::profile::{pi_tilde, poisson_profile, poisson_window, ppa, TAIL_TOLERANCE};
use ratchet_core::rng::seeded;
use ratchet_core::{derive_params, RatchetParams, Regime};

use crate::args::*;
use crate::svg::{self, PlotOptions, Series};
use crate::Usage;

pub fn execute(command: Command) -> Result<()> {
    match command {
        Command::Derive(a) => derive(a),
        Command::Wf(a) => wf(a),
        Command::Fv(a) => fv(a),
        Command::Det(a) => det(a),
        Command::Diff1d(a) => diff1d(a),
        Command::Green(a) => green(a),
        Command::Sweep(a) => sweep(a),
        Command::RateVsGamma(a) => rates(a),
        Command::Phase(a) => phase(a),
        Command::Occupation(a) => occupation(a),
        Command::ClickHist(a) => click_hist(a),
        Command::Plot(a) => plot(a),
    }
}

/// Worker count requested by the subcommand, if it takes one.
pub fn workers(command: &Command) -> Option<usize> {
    let run = match command {
        Command::Wf(a) => &a.run,
        Command::Fv(a) => &a.run,
        Command::Det(a) => &a.run,
        Command::Diff1d(a) => &a.run,
        Command::Green(a) => &a.run,
        Command::Sweep(a) => &a.run,
        Command::RateVsGamma(a) => &a.run,
        Command::Phase(a) => &a.run,
        Command::Occupation(a) => &a.run,
        Command::ClickHist(a) => &a.run,
        Command::Derive(_) | Command::Plot(_) => return None,
    };
    run.workers
}

fn params(m: &ModelArgs) -> Result<RatchetParams> {
    Ok(match (m.s, m.gamma) {
        (Some(s), None) => RatchetParams::new(m.n, m.lambda, s)?,
        (None, Some(g)) => RatchetParams::from_gamma(m.n, m.lambda, g)?,
        _ => return Err(Usage("give exactly one of --s and --gamma".into()).into()),
    })
}

fn regime(s: &str) -> Result<Regime> {
    Ok(s.parse::<Regime>()?)
}

/// Artifact writer for one command: tables go to `{prefix}.{name}`, each
/// headed by a reference to the manifest written last.
struct Output {
    prefix: Option<String>,
    manifest: Manifest,
    svg: bool,
}

impl Output {
    fn new<T: Serialize>(command: &str, run: &RunArgs, inputs: &T, p: Option<&RatchetParams>) -> Result<Self> {
        let seed = run.seed.unwrap_or(DEFAULT_SEED);
        let mut inputs = serde_json::to_value(inputs)?;
        if let (Some(p), Value::Object(map)) = (p, &mut inputs) {
            map.insert("resolved".into(), json!({"n": p.n, "lambda": p.lambda, "s": p.s}));
        }
        Ok(Output { prefix: run.out.clone(), manifest: Manifest::new(command, Some(seed), inputs), svg: run.svg })
    }

    fn seed(&self) -> u64 {
        self.manifest.seed.expect("always set")
    }

    fn file_name(&self, name: &str) -> String {
        match &self.prefix {
            Some(p) => format!("{p}.{name}"),
            None => name.to_string(),
        }
    }

    fn manifest_name(&self) -> String {
        match &self.prefix {
            Some(p) => format!("{p}.manifest"),
            None => format!("{}.manifest", self.manifest.command),
        }
    }

    fn basename(path: &str) -> String {
        PathBuf::from(path).file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_else(|| path.into())
    }

    fn table(&mut self, name: &str, t: &Table) -> Result<()> {
        let path = self.file_name(name);
        let comment = self.manifest.reference(&Self::basename(&self.manifest_name()));
        t.write(path.as_ref(), Some(&comment)).with_context(|| format!("writing {path}"))?;
        self.manifest.artifacts.push(Self::basename(&path));
        Ok(())
    }

    /// Chart of `t` when `--svg` was given.
    fn chart(&mut self, name: &str, t: &Table, x: &str, ys: &[&str], opts: PlotOptions) -> Result<()> {
        if !self.svg {
            return Ok(());
        }
        let ys: Vec<String> = ys.iter().map(|s| s.to_string()).collect();
        let Some(text) = chart_of(t, x, &ys, &opts)? else {
            eprintln!("note: nothing to plot for {name}");
            return Ok(());
        };
        let path = self.file_name(name);
        std::fs::write(&path, text).with_context(|| format!("writing {path}"))?;
        self.manifest.artifacts.push(Self::basename(&path));
        Ok(())
    }

    /// Writes the manifest and echoes the summary as `key=value` lines.
    fn finish(mut self, summary: Value) -> Result<()> {
        if let Value::Object(map) = &summary {
            for (k, v) in map {
                println!("{k}={}", scalar(v));
            }
        }
        self.manifest.summary = summary;
        let path = self.manifest_name();
        self.manifest.write(path.as_ref()).with_context(|| format!("writing {path}"))?;
        println!("manifest={path}");
        Ok(())
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "none".into(),
        other => other.to_string(),
    }
}

fn derive(a: DeriveArgs) -> Result<()> {
    let p = params(&a.model)?;
    let d = derive_params(&p)?;
    let opt = |v: Option<f64>| v.map(|v| v.to_string()).unwrap_or_else(|| "undefined".into());
    println!("n={}", p.n);
    println!("lambda={}", p.lambda);
    println!("s={}", p.s);
    println!("theta={}", d.theta);
    println!("pi0={}", d.pi0);
    println!("pi1={}", p.pi1());
    println!("n0={}", d.n0);
    println!("gamma={}", opt(d.gamma));
    println!("tau={}", opt(d.tau));
    println!("haigh={}", haigh_click_time(&p)?);
    Ok(())
}

fn recorder(r: &RecorderArgs) -> RecorderConfig {
    RecorderConfig { hist_bin_width: r.hist_bin_width, hist_upper: None, scatter_interval: r.scatter_interval }
}

fn run_summary(stats: &RunStats) -> Value {
    json!({
        "clicks": stats.total_clicks(),
        "rate_per_n_generations": stats.rate_per_n_generations(),
        "mean_interclick_time": stats.mean_interclick_time(),
        "burn_in_completed": stats.burn_in_completed,
        "burn_in_generations": stats.burn_in_generations,
        "measured_generations": stats.measured_generations,
    })
}

fn write_run(out: &mut Output, stats: &RunStats) -> Result<()> {
    out.table("clicks.csv", &io::clicks_table(&stats.clicks))?;
    let hist = io::hist_table(&stats.y0_hist);
    out.table("hist.csv", &hist)?;
    out.table("scatter.csv", &io::scatter_table(stats))?;
    out.table("fitness.csv", &io::fitness_table(stats))?;
    let opts = PlotOptions { title: "best-class frequency".into(), x_label: "y0".into(), ..Default::default() };
    out.chart("hist.svg", &hist, "bin_lo", &["mass"], opts)
}

fn wf(a: WfArgs) -> Result<()> {
    let p = params(&a.model)?;
    let mut out = Output::new("wf", &a.run, &a, Some(&p))?;
    let mut stats = wf_run(&p, a.generations, &recorder(&a.recorder), &mut seeded(out.seed()))?;
    stats.seed = Some(out.seed());
    write_run(&mut out, &stats)?;
    out.finish(run_summary(&stats))
}

fn fv(a: FvArgs) -> Result<()> {
    let p = params(&a.model)?;
    let mut out = Output::new("fv", &a.run, &a, Some(&p))?;
    let mut acc = MomentAccumulator::new();
    let mut stats = fv_run(&p, a.generations, a.dt, &recorder(&a.recorder), Some(&mut acc), &mut seeded(out.seed()))?;
    stats.seed = Some(out.seed());
    write_run(&mut out, &stats)?;
    let mut summary = run_summary(&stats);
    if acc.steps() >= MIN_DIAGNOSTIC_STEPS {
        let report = acc.report()?;
        out.table("moments.csv", &io::moments_table(&report))?;
        summary["moment_max_abs_z"] = json!(report.max_abs_z());
    } else {
        eprintln!("note: {} steps are too few for moment diagnostics", acc.steps());
    }
    out.finish(summary)
}

fn det(a: DetArgs) -> Result<()> {
    let p = params(&a.model)?;
    let mut out = Output::new("det", &a.run, &a, Some(&p))?;
    let theta = p.theta();
    let mu = a.mu.unwrap_or(theta);
    let k = poisson_window(mu.max(theta), TAIL_TOLERANCE) + 1;
    let x0 = match a.init {
        InitialProfile::Poisson => poisson_profile(mu, k)?,
        InitialProfile::PiTilde => pi_tilde(theta, k)?,
        InitialProfile::Ppa => {
            let y0 = a.y0.ok_or_else(|| Usage("--init ppa needs --y0".into()))?;
            ppa(y0, theta, k + 1)?
        }
    };
    let t = a.t.unwrap_or_else(|| p.tau().unwrap_or(1.0 / p.s));
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Usage(format!("--t must be finite and non-negative, got {t}")).into());
    }
    if a.points < 2 {
        return Err(Usage("--points must be at least 2".into()).into());
    }
    let times: Vec<f64> = (0..a.points).map(|i| t * i as f64 / (a.points - 1) as f64).collect();
    let traj = io::trajectory_table(&x0, &p, &times)?;
    let last = evolve_closed(&x0, &p, t)?;
    out.table("trajectory.csv", &traj)?;
    out.table("profile.csv", &io::profile_table(&last))?;
    let opts = PlotOptions { title: "best-class frequency".into(), x_label: "t".into(), ..Default::default() };
    out.chart("trajectory.svg", &traj, "t", &["x0"], opts)?;
    out.finish(json!({"t": t, "x0": last.best_freq(), "m1": last.mean(), "offset": last.offset}))
}

/// Start of the regime's diffusion after a click; phase one ends at `target`.
fn reset_point(sim: &ClickSim) -> f64 {
    match sim.reset {
        Reset::Fixed(y) => y,
        Reset::PhaseOne { target, .. } => target,
    }
}

fn diff1d(a: Diff1dArgs) -> Result<()> {
    let p = params(&a.model)?;
    let r = regime(&a.regime)?;
    let mut out = Output::new("diff1d", &a.run, &a, Some(&p))?;
    let sim = ClickSim::from_regime(r, &p)?;
    let mut cfg = ClickSimConfig::new(a.horizon, a.dt);
    cfg.threshold = match a.threshold {
        Threshold::Zero => ClickThreshold::Zero,
        Threshold::Half => ClickThreshold::HalfIndividual,
    };
    let res = sim.run(&cfg, &mut seeded(out.seed()))?;
    out.table("clicks.csv", &io::clicks_table(&res.clicks))?;
    let expected = match sim.reset {
        Reset::Fixed(y) => Some(expected_click_time(&sim.spec, y)?),
        Reset::PhaseOne { .. } => None,
    };
    out.finish(json!({
        "regime": r.name(),
        "clicks": res.clicks.len(),
        "elapsed": res.elapsed,
        "mean_interclick_time": res.mean_interclick_time(),
        "expected_click_time": expected,
    }))
}

fn green(a: GreenArgs) -> Result<()> {
    let p = params(&a.model)?;
    let r = regime(&a.regime)?;
    let mut out = Output::new("green", &a.run, &a, Some(&p))?;
    let mut spec = DiffusionSpec::new(r, &p)?;
    if let Some(y) = a.y_max {
        spec = spec.with_y_max(y)?;
    }
    let x0 = match a.x0 {
        Some(x) => x,
        None => reset_point(&ClickSim::from_regime(r, &p)?).min(spec.y_max),
    };
    if a.points < 1 {
        return Err(Usage("--points must be positive".into()).into());
    }
    let grid: Vec<f64> = (1..=a.points).map(|i| spec.y_max * i as f64 / a.points as f64).collect();
    let g = green_function(&spec, x0, &grid)?;
    let t = io::green_table(&g);
    out.table("green.csv", &t)?;
    let opts = PlotOptions { title: "occupation density".into(), x_label: "y".into(), ..Default::default() };
    out.chart("green.svg", &t, "y", &["occupation_density"], opts)?;
    out.finish(json!({"regime": r.name(), "x0": x0, "y_max": spec.y_max, "expected_click_time": g.expected_click_time}))
}

fn sweep(a: SweepArgs) -> Result<()> {
    let mut out = Output::new("sweep", &a.run, &a, None)?;
    let simulator = match a.simulator {
        SimulatorKind::Wf => Simulator::Wf,
        SimulatorKind::Fv => Simulator::Fv { dt: a.dt.unwrap_or(DEFAULT_FV_DT) },
        SimulatorKind::Diffusion => {
            Simulator::Diffusion { regime: regime(&a.regime)?, dt: a.dt.unwrap_or(DEFAULT_DIFFUSION_DT) }
        }
    };
    let r = power_law_sweep(a.n, a.gamma, &a.lambdas, a.generations, simulator, out.seed())?;
    let t = io::sweep_table(&r);
    out.table("sweep.csv", &t)?;
    let opts = PlotOptions {
        title: "clicks per N generations".into(),
        x_label: "N lambda".into(),
        log_x: true,
        log_y: true,
        scatter: false,
    };
    out.chart("sweep.svg", &t, "n_lambda", &["rate"], opts)?;
    out.finish(json!({
        "simulator": r.simulator,
        "fit_slope": r.fit.slope,
        "fit_slope_se": r.fit.slope_se,
        "fit_intercept": r.fit.intercept,
        "points_in_fit": r.points.iter().filter(|p| p.in_fit).count(),
    }))
}

fn rates(a: RateVsGammaArgs) -> Result<()> {
    let mut out = Output::new("rate-vs-gamma", &a.run, &a, None)?;
    let points = rate_vs_gamma(a.n, a.n_lambda, &a.gammas, a.generations, out.seed())?;
    let t = io::rates_table(&points);
    out.table("rates.csv", &t)?;
    let opts = PlotOptions { title: "clicks per N generations".into(), x_label: "gamma".into(), log_y: true, ..Default::default() };
    out.chart("rates.svg", &t, "gamma", &["rate"], opts)?;
    let per_gamma: Vec<Value> = points.iter().map(|p| json!({"gamma": p.gamma, "clicks": p.clicks, "rate": p.rate})).collect();
    out.finish(json!({"points": per_gamma}))
}

fn phase(a: PhaseArgs) -> Result<()> {
    let p = params(&a.model)?;
    let mut out = Output::new("phase", &a.run, &a, Some(&p))?;
    let r = phase_plane(&p, a.generations, &mut seeded(out.seed()))?;
    let t = io::phase_table(&r);
    out.table("phase.csv", &t)?;
    let opts = PlotOptions { title: "M1 against Y0".into(), x_label: "y0".into(), scatter: true, ..Default::default() };
    out.chart("phase.svg", &t, "y0", &["m1", "fitted_m1"], opts)?;
    let mut summary = json!({
        "samples": r.samples.len(),
        "clicks": r.clicks,
        "fit_slope": r.fit.slope,
        "fit_slope_se": r.fit.slope_se,
        "fit_intercept": r.fit.intercept,
        "best_regime": r.best,
    });
    for pred in &r.predictions {
        summary[format!("slope_{}", pred.regime)] = json!(pred.slope);
    }
    out.finish(summary)
}

fn occupation(a: OccupationArgs) -> Result<()> {
    let p = params(&a.model)?;
    let r = regime(&a.regime)?;
    let mut out = Output::new("occupation", &a.run, &a, Some(&p))?;
    let res = occupation_compare(&p, r, a.clicks, a.dt, a.wf_generations, &mut seeded(out.seed()))?;
    let t = io::occupation_table(&res);
    out.table("occupation.csv", &t)?;
    let opts = PlotOptions { title: "occupation".into(), x_label: "y0".into(), ..Default::default() };
    out.chart("occupation.svg", &t, "bin_lo", &["monte_carlo", "green", "wf"], opts)?;
    if !res.complete {
        eprintln!("note: only {} of {} clicks within the horizon", res.clicks, res.clicks_target);
    }
    out.finish(json!({
        "regime": res.regime,
        "clicks": res.clicks,
        "complete": res.complete,
        "l1_green": res.l1_green,
        "l1_wf": res.l1_wf,
        "mean_interclick_time": res.mean_interclick_time,
        "expected_click_time": res.expected_click_time,
    }))
}

fn click_hist(a: ClickHistArgs) -> Result<()> {
    let p = params(&a.model)?;
    let mut out = Output::new("click-hist", &a.run, &a, Some(&p))?;
    let r = click_entry_histogram(&p, a.clicks, a.max_generations, &mut seeded(out.seed()))?;
    let t = io::click_entry_table(&r);
    out.table("click_entry.csv", &t)?;
    let opts = PlotOptions { title: "best-class frequency after clicks".into(), x_label: "y0".into(), ..Default::default() };
    out.chart("click_entry.svg", &t, "bin_lo", &["mass"], opts)?;
    out.finish(json!({
        "clicks": r.clicks,
        "generations": r.generations,
        "mode": r.mode,
        "mode_over_pi0": r.mode / r.pi0,
        "mode_over_pi1": r.mode / r.pi1,
    }))
}

/// Series `(x, y)` for each of `ys`; rows whose cells do not parse are skipped.
fn series_of(t: &Table, x: &str, ys: &[String]) -> Result<Vec<Series>> {
    let col = |name: &str| {
        t.header.iter().position(|h| h == name).ok_or_else(|| Usage(format!("no column named '{name}'")))
    };
    let xi = col(x)?;
    ys.iter()
        .map(|y| {
            let yi = col(y)?;
            let points = t
                .rows
                .iter()
                .filter_map(|r| Some((r.get(xi)?.parse().ok()?, r.get(yi)?.parse().ok()?)))
                .collect();
            Ok(Series { name: y.clone(), points })
        })
        .collect()
}

fn chart_of(t: &Table, x: &str, ys: &[String], opts: &PlotOptions) -> Result<Option<String>> {
    let series = series_of(t, x, ys)?;
    let mut opts = opts.clone();
    if opts.x_label.is_empty() {
        opts.x_label = x.into();
    }
    Ok(svg::render(&series, &opts))
}

fn plot(a: PlotArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let t = Table::parse(&text)?;
    let x = match &a.x {
        Some(x) => x.clone(),
        None => t.header.first().cloned().ok_or_else(|| Usage("empty CSV".into()))?,
    };
    let ys: Vec<String> = if a.y.is_empty() {
        t.header.iter().filter(|h| **h != x && t.column(h).is_some_and(|c| !c.is_empty())).cloned().collect()
    } else {
        a.y.clone()
    };
    let title = a.input.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let opts = PlotOptions { log_x: a.log_x, log_y: a.log_y, scatter: a.scatter, title, x_label: x.clone() };
    let svg = chart_of(&t, &x, &ys, &opts)?
        .ok_or_else(|| Usage(format!("no plottable points in {}", a.input.display())))?;
    let path = a.output.unwrap_or_else(|| a.input.with_extension("svg"));
    std::fs::write(&path, svg).with_context(|| format!("writing {}", path.display()))?;
    println!("svg={}", path.display());
    Ok(())
}
