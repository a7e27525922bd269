use ratchet_core::diffusion1d::{green_bin_masses, ClickSim, ClickSimConfig, Reset};
use ratchet_core::experiments::{l1_distance, occupation_compare, occupation_edges, power_law_sweep, Simulator};
use ratchet_core::rng::seeded;
use ratchet_core::{RatchetParams, Regime};

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn sweep_independent_of_worker_count() {
    let run = || power_law_sweep(1000, 0.7, &[1e-2, 3e-2, 1e-1], 30_000, Simulator::Wf, 5).unwrap();
    let one = in_pool(1, run);
    let three = in_pool(3, run);
    assert_eq!(one, three);
    assert_eq!(one.points.len(), 3);
    assert!(one.points.iter().all(|p| p.rate == p.clicks as f64 * 1000.0 / p.generations));
}

#[test]
fn sweep_needs_three_fitted_points() {
    // Two points cannot carry a fit.
    assert!(power_law_sweep(1000, 0.7, &[3e-2, 1e-1], 30_000, Simulator::Wf, 5).is_err());
    assert!(power_law_sweep(1000, 0.7, &[1e-4, 1e-1], 30_000, Simulator::Wf, 5).is_err());
}

#[test]
fn green_matches_monte_carlo_occupation() {
    let p = RatchetParams::from_gamma(10_000, 0.01, 0.5).unwrap();
    let sim = ClickSim::from_regime(Regime::LargeA, &p).unwrap();
    let Reset::Fixed(x0) = sim.reset else { panic!("large-A resets to a point") };
    let edges = occupation_edges(p.pi0());
    let green = green_bin_masses(&sim.spec, x0, &edges).unwrap();
    let mut cfg = ClickSimConfig::new(1e12, 1.0);
    cfg.max_clicks = Some(300);
    cfg.occupation = Some((50, 5.0 * p.pi0()));
    let r = sim.run(&cfg, &mut seeded(31)).unwrap();
    let mc = r.occupation.unwrap().masses();
    assert!(l1_distance(&green, &mc) < 0.1, "{}", l1_distance(&green, &mc));
}

#[test]
fn relaxed_reset_fits_rare_clicking_better() {
    let p = RatchetParams::from_gamma(10_000, 0.01, 0.5).unwrap();
    let l1 = |r| occupation_compare(&p, r, 300, 0.1, Some(1_000_000), &mut seeded(4)).unwrap().l1_wf.unwrap();
    let (one, small) = (l1(Regime::AEqualsOne), l1(Regime::SmallA));
    assert!(one < small, "A=1 {one} vs small-A {small}");
}

#[test]
fn small_a_fits_frequent_clicking_better() {
    let p = RatchetParams::from_gamma(10_000, 0.1, 0.9).unwrap();
    let l1 = |r| occupation_compare(&p, r, 1000, 0.1, Some(200_000), &mut seeded(4)).unwrap().l1_wf.unwrap();
    let (one, small) = (l1(Regime::AEqualsOne), l1(Regime::SmallA));
    assert!(small < one, "small-A {small} vs A=1 {one}");
}
