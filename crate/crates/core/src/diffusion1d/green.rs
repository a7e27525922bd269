use serde::{Deserialize, Serialize};

use super::DiffusionSpec;
use crate::error::{domain, Result};
use crate::quad::{integrate, QuadOptions};

const INNER: QuadOptions = QuadOptions { abs_tol: 0.0, rel_tol: 1e-12, max_intervals: 2000 };
const OUTER: QuadOptions = QuadOptions { abs_tol: 0.0, rel_tol: 1e-10, max_intervals: 2000 };

/// Scale and speed at a point, with logarithms for values out of range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSpeed {
    pub scale_density: f64,
    pub scale_function: f64,
    pub speed_density: f64,
    pub ln_scale_density: f64,
    pub ln_scale_function: f64,
    pub ln_speed_density: f64,
}

/// `ln S(y)`, `S(y) = ∫₀^y s(u) du`. The log scale density is convex, so its
/// maximum on `[0, y]` sits at an endpoint and factors out of the integral.
fn ln_scale_function(spec: &DiffusionSpec, y: f64) -> Result<f64> {
    if y <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let c = spec.log_scale_density(y).max(0.0);
    let r = integrate(|u| (spec.log_scale_density(u) - c).exp(), 0.0, y, INNER)?;
    Ok(r.value.ln() + c)
}

pub fn scale_speed(spec: &DiffusionSpec, y: f64) -> Result<ScaleSpeed> {
    if !(y > 0.0 && y <= spec.y_max) {
        return domain(format!("scale/speed need 0 < y <= {}, got {y}", spec.y_max));
    }
    let ln_s = spec.log_scale_density(y);
    let ln_big_s = ln_scale_function(spec, y)?;
    let ln_m = -spec.sigma2(y).ln() - ln_s;
    Ok(ScaleSpeed {
        scale_density: ln_s.exp(),
        scale_function: ln_big_s.exp(),
        speed_density: ln_m.exp(),
        ln_scale_density: ln_s,
        ln_scale_function: ln_big_s,
        ln_speed_density: ln_m,
    })
}

/// `ln G(x₀, y)` with `G = 2 m(y) S(min(x₀, y))`; `ln_s_x0 = ln S(x₀)`.
fn ln_green(spec: &DiffusionSpec, x0: f64, ln_s_x0: f64, y: f64) -> Result<f64> {
    let ln_s = if y < x0 { ln_scale_function(spec, y)? } else { ln_s_x0 };
    Ok(std::f64::consts::LN_2 + ln_s - spec.sigma2(y).ln() - spec.log_scale_density(y))
}

/// `∫_a^b G(x₀, y) dy` for `a < b` on one side of `x₀`.
fn green_integral(spec: &DiffusionSpec, x0: f64, ln_s_x0: f64, a: f64, b: f64) -> Result<f64> {
    if b <= a {
        return Ok(0.0);
    }
    let mut failure = None;
    let r = integrate(
        |y| match ln_green(spec, x0, ln_s_x0, y) {
            Ok(v) => v.exp(),
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        a,
        b,
        OUTER,
    )?;
    match failure {
        Some(e) => Err(e),
        None => Ok(r.value),
    }
}

fn check_start(spec: &DiffusionSpec, x0: f64) -> Result<()> {
    if !(x0 > 0.0 && x0 <= spec.y_max) {
        return domain(format!("start must lie in (0, {}], got {x0}", spec.y_max));
    }
    Ok(())
}

/// Mass of `G(x₀, ·)` on `[a, b]`, split at `x₀` where `G` has a kink.
fn mass_between(spec: &DiffusionSpec, x0: f64, ln_s_x0: f64, a: f64, b: f64) -> Result<f64> {
    let a = a.clamp(0.0, spec.y_max);
    let b = b.clamp(0.0, spec.y_max);
    if x0 > a && x0 < b {
        Ok(green_integral(spec, x0, ln_s_x0, a, x0)? + green_integral(spec, x0, ln_s_x0, x0, b)?)
    } else {
        green_integral(spec, x0, ln_s_x0, a, b)
    }
}

/// Expected time to absorption at 0 from `x₀`: `∫₀^{y_max} G(x₀, y) dy`.
pub fn expected_click_time(spec: &DiffusionSpec, x0: f64) -> Result<f64> {
    check_start(spec, x0)?;
    let ln_s_x0 = ln_scale_function(spec, x0)?;
    mass_between(spec, x0, ln_s_x0, 0.0, spec.y_max)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenResult {
    pub grid: Vec<f64>,
    pub green: Vec<f64>,
    /// `G` divided by the expected click time (integrates to one).
    pub density: Vec<f64>,
    pub expected_click_time: f64,
}

/// Green function of the diffusion killed at 0 and reflected at `y_max`,
/// evaluated on `grid`.
pub fn green_function(spec: &DiffusionSpec, x0: f64, grid: &[f64]) -> Result<GreenResult> {
    check_start(spec, x0)?;
    let ln_s_x0 = ln_scale_function(spec, x0)?;
    let t = mass_between(spec, x0, ln_s_x0, 0.0, spec.y_max)?;
    let mut green = Vec::with_capacity(grid.len());
    for &y in grid {
        if !(y > 0.0 && y <= spec.y_max) {
            return domain(format!("grid point {y} outside (0, {}]", spec.y_max));
        }
        green.push(ln_green(spec, x0, ln_s_x0, y)?.exp());
    }
    let density = green.iter().map(|g| g / t).collect();
    Ok(GreenResult { grid: grid.to_vec(), green, density, expected_click_time: t })
}

/// Occupation probabilities of consecutive bins `[edges[i], edges[i+1])`;
/// the last bin extends to `y_max` like an overflow bin.
pub fn green_bin_masses(spec: &DiffusionSpec, x0: f64, edges: &[f64]) -> Result<Vec<f64>> {
    check_start(spec, x0)?;
    if edges.len() < 2 {
        return domain("need at least two bin edges");
    }
    let ln_s_x0 = ln_scale_function(spec, x0)?;
    let t = mass_between(spec, x0, ln_s_x0, 0.0, spec.y_max)?;
    let last = edges.len() - 2;
    (0..=last)
        .map(|i| {
            let hi = if i == last { spec.y_max } else { edges[i + 1] };
            Ok(mass_between(spec, x0, ln_s_x0, edges[i], hi)? / t)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{solve_s_for_gamma, RatchetParams, Regime};

    fn a1_desk() -> DiffusionSpec {
        let n = 10_000;
        let lambda = 100.0 / n as f64;
        let p = RatchetParams::new(n, lambda, solve_s_for_gamma(n, lambda, 0.5).unwrap()).unwrap();
        DiffusionSpec::new(Regime::AEqualsOne, &p).unwrap()
    }

    #[test]
    fn zero_drift_absorption_time() {
        let spec = DiffusionSpec::zero_drift(100.0, 1.0).unwrap();
        let x: f64 = 0.25;
        let want = 2.0 * 100.0 * x * (1.0 - x.ln());
        assert!((want - 119.31).abs() < 0.01);
        let t = expected_click_time(&spec, x).unwrap();
        assert!(((t - want) / want).abs() < 1e-6, "{t} vs {want}");
    }

    #[test]
    fn zero_drift_scale_speed() {
        let spec = DiffusionSpec::zero_drift(100.0, 1.0).unwrap();
        let ss = scale_speed(&spec, 0.4).unwrap();
        assert_eq!(ss.scale_density, 1.0);
        assert!((ss.scale_function - 0.4).abs() < 1e-14);
        assert!((ss.speed_density - 250.0).abs() < 1e-10);
    }

    #[test]
    fn scale_function_increasing() {
        let spec = a1_desk();
        let grid: Vec<f64> = (1..=80).map(|i| i as f64 * spec.y_max / 80.0).collect();
        let values: Vec<f64> = grid.iter().map(|&y| scale_speed(&spec, y).unwrap().scale_function).collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]));
        let h = 1e-6;
        let slope = (spec.log_scale_density(spec.pi0 + h) - spec.log_scale_density(spec.pi0 - h)) / (2.0 * h);
        assert!(slope.abs() < 1e-6);
    }

    #[test]
    fn normalized_density() {
        let spec = a1_desk();
        let x0 = spec.pi0 / (1.0 - (-1f64).exp());
        let edges: Vec<f64> = (0..=50).map(|i| i as f64 * spec.pi0 / 10.0).collect();
        let masses = green_bin_masses(&spec, x0, &edges).unwrap();
        assert!((masses.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        let t = expected_click_time(&spec, x0).unwrap();
        assert!((t - 7984.0).abs() < 0.01 * 7984.0, "{t}");
        let g = green_function(&spec, x0, &[spec.pi0, x0, 2.0 * spec.pi0]).unwrap();
        assert!((g.density[0] - g.green[0] / t).abs() < 1e-15);
    }

    #[test]
    fn cap_immaterial() {
        let spec = a1_desk();
        let x0 = spec.pi0;
        let t = expected_click_time(&spec, x0).unwrap();
        let wide = spec.with_y_max(2.0 * spec.y_max).unwrap();
        let t2 = expected_click_time(&wide, x0).unwrap();
        assert!(((t2 - t) / t).abs() < 0.01);
    }

    #[test]
    fn click_time_increases_with_n() {
        let base = a1_desk();
        let times: Vec<f64> = [1000.0, 3000.0, 10_000.0, 30_000.0]
            .iter()
            .map(|&n| expected_click_time(&DiffusionSpec { n, ..base }, base.pi0).unwrap())
            .collect();
        assert!(times.windows(2).all(|w| w[1] > w[0]), "{times:?}");
    }

    #[test]
    fn rejects_bad_start() {
        let spec = a1_desk();
        assert!(expected_click_time(&spec, 0.0).is_err());
        assert!(expected_click_time(&spec, 2.0 * spec.y_max).is_err());
    }
}
