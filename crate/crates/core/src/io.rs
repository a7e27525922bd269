//! CSV tables and run manifests.
//!
//! Reals are written with 17 significant digits, so every value reads back
//! bit-identically. A leading `#` line ties each table to its manifest.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::deterministic::closed_observables;
use crate::diffusion1d::GreenResult;
use crate::error::Result;
use crate::experiments::{ClickEntryResult, OccupationResult, PhasePlaneResult, SweepPoint, SweepResult};
use crate::forward_sim::{ClickRecord, Histogram, MomentReport, RunStats};
use crate::profile::TypeProfile;
use crate::rng::RNG_ALGORITHM;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits; `inf`, `-inf` and `nan` spelled out.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// A header and rows of already formatted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    /// Comma-separated with LF endings, optionally after a `# ...` line.
    pub fn to_csv(&self, comment: Option<&str>) -> String {
        let mut out = Vec::new();
        if let Some(c) = comment {
            out.extend_from_slice(format!("# {c}\n").as_bytes());
        }
        {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut out);
            w.write_record(&self.header).expect("writing to memory");
            for row in &self.rows {
                w.write_record(row).expect("writing to memory");
            }
            w.flush().expect("writing to memory");
        }
        String::from_utf8(out).expect("cells are UTF-8")
    }

    pub fn write(&self, path: &Path, comment: Option<&str>) -> Result<()> {
        std::fs::write(path, self.to_csv(comment))?;
        Ok(())
    }

    /// Parses CSV written by [`Table::to_csv`], skipping `#` lines.
    pub fn parse(text: &str) -> Result<Table> {
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
        let header = r.headers()?.iter().map(str::to_string).collect();
        let rows = r
            .records()
            .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
            .collect::<std::result::Result<_, _>>()?;
        Ok(Table { header, rows })
    }

    /// Column `name` as reals; cells that do not parse are skipped.
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().filter_map(|r| r.get(i)?.parse().ok()).collect())
    }
}

fn int(v: u64) -> String {
    v.to_string()
}

pub fn clicks_table(clicks: &[ClickRecord]) -> Table {
    let mut t = Table::new(&["time", "clicks_at_event", "new_best_freq"]);
    for c in clicks {
        t.push(vec![fmt_real(c.time), int(c.clicks_at_event), fmt_real(c.new_best_freq)]);
    }
    t
}

pub fn hist_table(h: &Histogram) -> Table {
    let mut t = Table::new(&["bin_lo", "bin_hi", "mass"]);
    for (i, m) in h.masses().iter().enumerate() {
        t.push(vec![fmt_real(h.edges[i]), fmt_real(h.edges[i + 1]), fmt_real(*m)]);
    }
    t
}

pub fn scatter_table(stats: &RunStats) -> Table {
    let mut t = Table::new(&["generation", "y0", "m1"]);
    for s in &stats.scatter {
        t.push(vec![int(s.generation), fmt_real(s.y0), fmt_real(s.m1)]);
    }
    t
}

pub fn fitness_table(stats: &RunStats) -> Table {
    let mut t = Table::new(&["generation", "mean_fitness"]);
    for s in &stats.scatter {
        t.push(vec![int(s.generation), fmt_real(s.mean_fitness)]);
    }
    t
}

/// Absolute class index and frequency.
pub fn profile_table(x: &TypeProfile) -> Table {
    let mut t = Table::new(&["k", "x"]);
    for (i, v) in x.freqs.iter().enumerate() {
        t.push(vec![int((x.offset + i) as u64), fmt_real(*v)]);
    }
    t
}

/// Best-class frequency and mean along a deterministic trajectory.
pub fn trajectory_table(x0: &TypeProfile, p: &crate::params::RatchetParams, times: &[f64]) -> Result<Table> {
    let mut t = Table::new(&["t", "x0", "m1"]);
    for &time in times {
        let (y0, m1) = closed_observables(x0, p, time)?;
        t.push(vec![fmt_real(time), fmt_real(y0), fmt_real(m1)]);
    }
    Ok(t)
}

pub fn green_table(g: &GreenResult) -> Table {
    let mut t = Table::new(&["y", "green_value", "occupation_density"]);
    for i in 0..g.grid.len() {
        t.push(vec![fmt_real(g.grid[i]), fmt_real(g.green[i]), fmt_real(g.density[i])]);
    }
    t
}

fn point_row(p: &SweepPoint) -> Vec<String> {
    vec![
        int(p.n),
        fmt_real(p.lambda),
        fmt_real(p.s),
        fmt_real(p.gamma),
        fmt_real(p.n_lambda),
        int(p.clicks),
        fmt_real(p.generations),
        fmt_real(p.rate),
        fmt_real(p.rate_se),
        fmt_real(p.rate_upper_95()),
        p.in_fit.to_string(),
    ]
}

const POINT_HEADER: [&str; 11] = [
    "n", "lambda", "s", "gamma", "n_lambda", "clicks", "generations", "rate", "rate_se", "rate_upper_95", "in_fit",
];

/// One row per point; the fit is repeated on every row.
pub fn sweep_table(r: &SweepResult) -> Table {
    let mut header = POINT_HEADER.to_vec();
    header.extend(["fit_slope", "fit_slope_se", "fit_intercept", "fit_intercept_se"]);
    let mut t = Table::new(&header);
    for p in &r.points {
        let mut row = point_row(p);
        row.extend([r.fit.slope, r.fit.slope_se, r.fit.intercept, r.fit.intercept_se].map(fmt_real));
        t.push(row);
    }
    t
}

pub fn rates_table(points: &[SweepPoint]) -> Table {
    let mut t = Table::new(&POINT_HEADER);
    for p in points {
        t.push(point_row(p));
    }
    t
}

pub fn phase_table(r: &PhasePlaneResult) -> Table {
    let mut t = Table::new(&["y0", "m1", "fitted_m1"]);
    for &(y0, m1) in &r.samples {
        t.push(vec![fmt_real(y0), fmt_real(m1), fmt_real(r.fit.predict(y0))]);
    }
    t
}

pub fn occupation_table(r: &OccupationResult) -> Table {
    let mut t = Table::new(&["bin_lo", "bin_hi", "monte_carlo", "green", "wf"]);
    let opt = |v: &Option<Vec<f64>>, i: usize| v.as_ref().map(|v| fmt_real(v[i])).unwrap_or_default();
    for i in 0..r.monte_carlo.len() {
        t.push(vec![
            fmt_real(r.edges[i]),
            fmt_real(r.edges[i + 1]),
            fmt_real(r.monte_carlo[i]),
            opt(&r.green, i),
            opt(&r.wf, i),
        ]);
    }
    t
}

pub fn click_entry_table(r: &ClickEntryResult) -> Table {
    hist_table(&r.hist)
}

pub fn moments_table(r: &MomentReport) -> Table {
    let mut t = Table::new(&["name", "empirical", "predicted", "se", "z"]);
    for c in &r.checks {
        t.push(vec![c.name.clone(), fmt_real(c.empirical), fmt_real(c.predicted), fmt_real(c.se), fmt_real(c.z())]);
    }
    t
}

/// Everything needed to re-run a command bit-identically, plus its summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub rng: String,
    pub inputs: serde_json::Value,
    pub summary: serde_json::Value,
    pub artifacts: Vec<String>,
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>, inputs: serde_json::Value) -> Self {
        Manifest {
            tool: "ratchet".into(),
            version: VERSION.into(),
            command: command.into(),
            seed,
            rng: RNG_ALGORITHM.into(),
            inputs,
            summary: serde_json::Value::Null,
            artifacts: Vec::new(),
        }
    }

    /// The `#` line placed at the top of every artifact.
    pub fn reference(&self, manifest_file: &str) -> String {
        let seed = self.seed.map(|s| s.to_string()).unwrap_or_else(|| "none".into());
        format!("manifest={manifest_file} seed={seed} rng={} version={}", self.rng, self.version)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
