mod common;

use std::f64::consts::{FRAC_PI_2, PI};

use approx::assert_relative_eq;
use clockwork_core::model::TopLevelProfile;
use clockwork_core::tick_stats::DEGENERATE_CYCLE_HAZARD;
use clockwork_core::{baseline_metrics, clock_metrics, ClockError, ClockParams, HazardModel, Machines};
use common::{direct_moments, gauss_legendre_gw, ideal, log_uniform, rng, Neumaier};
use proptest::prelude::*;
use rand::Rng;

fn finite_t(d: u64, m: Machines, g: f64, c: f64, beta_c: f64, beta_h: f64) -> ClockParams {
    ClockParams::new(d, m, g, c, beta_c, beta_h, 1.0, 2.0).unwrap()
}

/// Composite Gauss-Legendre integral of `f` on `[a, b]` with `panels` panels.
fn composite<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let (xs, ws) = gauss_legendre_gw(20);
    let h = (b - a) / panels as f64;
    let mut acc = Neumaier::default();
    for k in 0..panels {
        let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
        let (c, r) = (0.5 * (lo + hi), 0.5 * (hi - lo));
        for (x, w) in xs.iter().zip(&ws) {
            acc.add(w * r * f(c + r * x));
        }
    }
    acc.value()
}

#[test]
fn hazard_examples() {
    let p = ClockParams::new(4, Machines::Infinite, 1.0, 3.0, 2.0, 0.5, 1.0, 2.0).unwrap();
    let h = HazardModel::new(TopLevelProfile::baseline(&p).unwrap()).unwrap();
    let level = h.profile.constant;
    for t in [0.0, 0.3, 17.0] {
        assert_relative_eq!(h.hazard(t), 3.0 * level, max_relative = 1e-15);
    }
    let h = HazardModel::from_params(&ideal(6, Machines::Finite(2), 1.0, 10.0)).unwrap();
    assert_eq!(h.hazard(0.0), 0.0);
    let h = HazardModel::from_params(&ideal(2, Machines::Infinite, 1.0, 25.0)).unwrap();
    assert_relative_eq!(h.hazard(FRAC_PI_2), 25.0, max_relative = 1e-15);
}

#[test]
fn cumulative_hazard_examples() {
    let g = 1.7;
    let h = HazardModel::from_params(&ideal(2, Machines::Infinite, g, 4.0)).unwrap();
    assert_eq!(h.cumulative_hazard(0.0), 0.0);
    assert_relative_eq!(h.cumulative_hazard(PI / g), 4.0 * PI / (2.0 * g), max_relative = 1e-14);

    let p = ideal(4, Machines::Finite(3), 0.9, 5.0);
    let h = HazardModel::from_params(&p).unwrap();
    assert!(h.uses_closed_form());
    let t = 2.3 / p.g;
    let closed = h.cumulative_hazard(t);
    let quad = h.cumulative_hazard_quadrature(t).unwrap();
    let direct = composite(|s| h.hazard(s), 0.0, t, 64);
    assert_relative_eq!(closed, quad, max_relative = 1e-9);
    assert_relative_eq!(closed, direct, max_relative = 1e-12);
}

#[test]
fn cumulative_hazard_over_many_periods() {
    let p = finite_t(5, Machines::Finite(3), 1.3, 2.0, 1.5, 0.2);
    let h = HazardModel::from_params(&p).unwrap();
    assert!(!h.uses_closed_form());
    let period = PI / p.g;
    for t in [0.4, 3.0 * period + 0.2, 11.5 * period] {
        let direct = composite(|s| h.hazard(s), 0.0, t, 64 * (1 + (t / period) as usize));
        assert_relative_eq!(h.cumulative_hazard(t), direct, max_relative = 1e-11);
    }
}

#[test]
fn tick_density_composes_hazard_and_survival() {
    let h = HazardModel::from_params(&ideal(3, Machines::Finite(2), 1.0, 25.0)).unwrap();
    let lambda = composite(|s| h.hazard(s), 0.0, 1.0, 64);
    let expect = h.hazard(1.0) * (-lambda).exp();
    assert_relative_eq!(h.tick_density(1.0), expect, max_relative = 1e-12);

    let p = ClockParams::new(3, Machines::Infinite, 1.0, 2.0, 1.0, 0.3, 1.0, 2.0).unwrap();
    let h = HazardModel::new(TopLevelProfile::baseline(&p).unwrap()).unwrap();
    let rate = h.hazard(0.0);
    for t in [0.0, 0.5, 4.0] {
        assert_relative_eq!(h.tick_density(t), rate * (-rate * t).exp(), max_relative = 1e-13);
    }
}

#[test]
fn tick_density_is_normalized() {
    let mut r = rng(11);
    let mut done = 0;
    while done < 20 {
        let d = r.random_range(2..=12u64);
        let m = if r.random_bool(0.3) { Machines::Infinite } else { Machines::Finite(r.random_range(1..=8)) };
        let g = log_uniform(&mut r, 0.2, 5.0);
        let c = log_uniform(&mut r, 0.5, 200.0);
        let p = if r.random_bool(0.5) {
            ideal(d, m, g, c)
        } else {
            finite_t(d, m, g, c, r.random_range(0.5..4.0), r.random_range(0.0..0.3))
        };
        let h = HazardModel::from_params(&p).unwrap();
        if h.cycle_hazard < 0.05 {
            continue;
        }
        let periods = (40.0 / h.cycle_hazard).ceil() as usize;
        let panels = 32 + 4 * d as usize;
        let period = PI / g;
        let mut total = Neumaier::default();
        for q in 0..periods {
            let a = q as f64 * period;
            total.add(composite(|t| h.tick_density(t), a, a + period, panels));
        }
        let tail = h.survival(periods as f64 * period);
        assert!((total.value() + tail - 1.0).abs() <= 1e-8, "{p:?}: {}", total.value() + tail);
        assert!((total.value() - 1.0).abs() <= 1e-8 + tail);
        done += 1;
    }
}

#[test]
fn baseline_moments_are_exponential() {
    let p = ClockParams::new(5, Machines::Finite(2), 1.0, 7.0, 3.0, 0.4, 1.0, 2.0).unwrap();
    let h = HazardModel::new(TopLevelProfile::baseline(&p).unwrap()).unwrap();
    let m = h.moments().unwrap();
    let rate = 7.0 * h.profile.constant;
    assert_relative_eq!(m.t_bar, 1.0 / rate, max_relative = 1e-12);
    assert_relative_eq!(m.delta_t, 1.0 / rate, max_relative = 1e-10);
    assert_relative_eq!(m.n, 1.0, max_relative = 1e-9);
}

#[test]
fn moments_match_direct_quadrature() {
    let cases = [
        ideal(2, Machines::Infinite, 1.0, 25.0),
        ideal(10, Machines::Finite(5), 1.0, 25.0),
        ideal(30, Machines::Infinite, 0.3, 4000.0),
        finite_t(6, Machines::Finite(4), 2.0, 50.0, 2.0, 0.1),
        finite_t(3, Machines::Finite(1), 0.5, 1.0, 0.8, 0.05),
    ];
    for p in cases {
        let h = HazardModel::from_params(&p).unwrap();
        let fast = h.moments().unwrap();
        let slow = direct_moments(&h.profile);
        assert_relative_eq!(fast.t_bar, slow.t_bar, max_relative = 1e-6);
        assert_relative_eq!(fast.t2_bar, slow.t2_bar, max_relative = 1e-6);
        assert_relative_eq!(fast.cycle_hazard, slow.cycle_hazard, max_relative = 1e-9);
    }
}

#[test]
fn moments_equal_geometric_series_form() {
    // Per-cycle integrals combined with closed-form sums of q^k r^q.
    for p in [
        ideal(8, Machines::Finite(3), 1.0, 30.0),
        ideal(3, Machines::Infinite, 2.5, 2.0),
        finite_t(4, Machines::Finite(2), 1.0, 15.0, 1.2, 0.1),
    ] {
        let h = HazardModel::from_params(&p).unwrap();
        let [j0, j1, j2] = h.within_cycle_integrals().unwrap();
        let r = (-h.cycle_hazard).exp();
        let s0 = 1.0 / (1.0 - r);
        let s1 = r / (1.0 - r).powi(2);
        let s2 = r * (1.0 + r) / (1.0 - r).powi(3);
        let i1 = PI * j0 * s1 + j1 * s0;
        let i2 = PI * PI * j0 * s2 + 2.0 * PI * j1 * s1 + j2 * s0;
        let m = h.moments().unwrap();
        assert_relative_eq!(m.t_bar, i1 / p.g, max_relative = 1e-9);
        assert_relative_eq!(m.t2_bar, i2 / (p.g * p.g), max_relative = 1e-9);
        // Total probability of one tick.
        assert_relative_eq!(j0 * s0, 1.0, max_relative = 1e-9);
    }
}

#[test]
fn accuracy_grows_from_two_to_three_levels() {
    let n2 = clock_metrics(&ideal(2, Machines::Infinite, 1.0, 1e3)).unwrap().n;
    let n3 = clock_metrics(&ideal(3, Machines::Infinite, 1.0, 1e3)).unwrap().n;
    assert!(n3 > n2, "{n3} <= {n2}");
}

#[test]
fn metric_identities() {
    let p = finite_t(7, Machines::Finite(3), 1.0, 40.0, 2.0, 0.2);
    let m = clock_metrics(&p).unwrap();
    assert_relative_eq!(m.epsilon / m.r, 6.0, max_relative = 1e-15);
    assert_relative_eq!(m.r, 1.0 / m.t_bar);
    assert_relative_eq!(m.n, (m.t_bar / m.delta_t).powi(2));
    assert!(m.t2_bar >= m.t_bar * m.t_bar);
}

#[test]
fn baseline_metrics_examples() {
    let p = ClockParams::new(2, Machines::Infinite, 1.0, 10.0, f64::INFINITY, 0.0, 1.0, 2.0).unwrap();
    let m = baseline_metrics(&p).unwrap();
    assert_relative_eq!(m.r, 5.0, max_relative = 1e-15);
    assert_eq!(m.n, 1.0);

    // beta_H E_L = 1.
    let p = ClockParams::new(3, Machines::Infinite, 1.0, 10.0, 5.0, 1.0, 1.0, 2.0).unwrap();
    let e = (-1.0f64).exp();
    let m = baseline_metrics(&p).unwrap();
    assert_relative_eq!(m.r, 10.0 * e * e / (1.0 + e + e * e), max_relative = 1e-14);
    assert_eq!(m.delta_t, m.t_bar);
}

#[test]
fn vanishing_amplitude_is_degenerate() {
    let p = ideal(80, Machines::Finite(1), 1.0, 1.0);
    match HazardModel::from_params(&p) {
        Err(ClockError::DegenerateProfile { cycle_hazard }) => assert!(cycle_hazard < DEGENERATE_CYCLE_HAZARD),
        other => panic!("expected a degenerate profile, got {other:?}"),
    }
}

fn hazard_params() -> impl Strategy<Value = ClockParams> {
    (
        2u64..25,
        prop_oneof![(1u64..12).prop_map(Machines::Finite), Just(Machines::Infinite)],
        0.1f64..10.0,
        1.0f64..1e4,
        prop_oneof![Just(f64::INFINITY), 0.5f64..5.0],
        0.0f64..0.3,
    )
        .prop_filter_map("non-degenerate clock", |(d, m, g, c, bc, bh)| {
            let p = ClockParams::new(d, m, g, c, bc, bh, 1.0, 2.0).ok()?;
            let h = HazardModel::from_params(&p).ok()?;
            (h.cycle_hazard > 1e-8).then_some(p)
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn survival_nonincreasing(p in hazard_params(), ts in prop::collection::vec(0.0f64..50.0, 2..20)) {
        let h = HazardModel::from_params(&p).unwrap();
        let mut ts = ts;
        ts.sort_by(f64::total_cmp);
        let mut prev = 1.0;
        for t in ts {
            let s = h.survival(t / p.g);
            prop_assert!(s <= prev + 1e-15);
            prop_assert!(h.tick_density(t / p.g) >= 0.0);
            prev = s;
        }
    }

    #[test]
    fn accuracy_is_scale_invariant(p in hazard_params(), k in 0.01f64..100.0) {
        let a = clock_metrics(&p).unwrap();
        let q = ClockParams { g: p.g * k, c: p.c * k, ..p };
        let b = clock_metrics(&q).unwrap();
        prop_assert!(((a.n - b.n) / a.n).abs() <= 1e-10, "{} vs {}", a.n, b.n);
        prop_assert!(((a.t_bar - k * b.t_bar) / a.t_bar).abs() <= 1e-10);
        prop_assert!(((a.delta_t - k * b.delta_t) / a.delta_t).abs() <= 1e-10);
    }

    #[test]
    fn moment_invariants(p in hazard_params()) {
        let m = clock_metrics(&p).unwrap();
        prop_assert!(m.t2_bar >= m.t_bar * m.t_bar * (1.0 - 1e-15));
        prop_assert!(((m.epsilon - (p.d - 1) as f64 * p.e_c * m.r) / m.epsilon).abs() <= 1e-15);
        prop_assert!(m.n > 0.0 && m.r > 0.0);
    }
}
