use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use ratchet_core::deterministic::{evolve_closed, evolve_ode, ode_max_step};
use ratchet_core::diffusion1d::{expected_click_time, green_function, DiffusionSpec};
use ratchet_core::forward_sim::{FlemingViot, WrightFisher};
use ratchet_core::profile::pi_tilde;
use ratchet_core::rng::seeded;
use ratchet_core::{RatchetParams, Regime};

fn params() -> RatchetParams {
    RatchetParams::new(10_000, 0.1, 0.02).unwrap()
}

fn wf_step(c: &mut Criterion) {
    let p = params();
    let mut rng = seeded(1);
    let mut sim = WrightFisher::from_poisson(&p, &mut rng).unwrap();
    c.bench_function("wf_step N=1e4 theta=5", |b| b.iter(|| black_box(sim.step(&mut rng))));
}

fn fv_step(c: &mut Criterion) {
    let p = params();
    let mut rng = seeded(2);
    let mut sim = FlemingViot::from_poisson(&p, 0.1).unwrap();
    c.bench_function("fv_step N=1e4 theta=5 dt=0.1", |b| b.iter(|| black_box(sim.step(&mut rng).unwrap())));
}

fn deterministic(c: &mut Criterion) {
    let p = params();
    let x0 = pi_tilde(p.theta(), 40).unwrap();
    let tau = p.tau().unwrap();
    c.bench_function("evolve_closed t=tau", |b| b.iter(|| black_box(evolve_closed(&x0, &p, tau).unwrap())));
    let dt = 0.9 * ode_max_step(&p, 200);
    c.bench_function("evolve_ode t=tau", |b| b.iter(|| black_box(evolve_ode(&x0, &p, tau, dt).unwrap())));
}

fn green(c: &mut Criterion) {
    let p = RatchetParams::from_gamma(10_000, 0.01, 0.5).unwrap();
    let spec = DiffusionSpec::new(Regime::AEqualsOne, &p).unwrap();
    let x0 = spec.pi0 / (1.0 - (-1f64).exp());
    let grid: Vec<f64> = (1..=100).map(|i| spec.y_max * i as f64 / 100.0).collect();
    c.bench_function("expected_click_time A=1", |b| b.iter(|| black_box(expected_click_time(&spec, x0).unwrap())));
    c.bench_function("green_function 100 points", |b| b.iter(|| black_box(green_function(&spec, x0, &grid).unwrap())));
}

criterion_group!(benches, wf_step, fv_step, deterministic, green);
criterion_main!(benches);
