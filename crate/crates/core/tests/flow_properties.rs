use std::f64::consts::PI;

use proptest::prelude::*;
use singflow::generators::Generator;
use singflow::grid::{Field, PeriodicGrid};
use singflow::nonlinearity::NonlinearW;
use singflow::parabolic::{evolve, EvolutionProblem};

fn run(u0: Field, w: NonlinearW, dt: f64, t_end: f64) -> Field {
    let p = EvolutionProblem::new(u0, w, 1e-6, dt, t_end)
        .unwrap()
        .with_stop_at_extinction(false);
    evolve(&p, 0).unwrap().final_state
}

#[test]
fn small_amplitude_minimal_surface_decays_like_heat() {
    // W''(0) = 1, so a small sine mode decays at rate (2 pi)^2
    let grid = PeriodicGrid::new(128).unwrap();
    let u0 = Generator::Sine { k: 1.0, amp: 1e-3 }.sample(grid, 0).unwrap();
    let p = EvolutionProblem::new(u0, NonlinearW::minimal_surface(), 1e-6, 1e-4, 0.02)
        .unwrap()
        .with_stop_at_extinction(false);
    let rate = evolve(&p, 0).unwrap().summary.fitted_decay_rate(0.0, 0.0).unwrap();
    let exact = 4.0 * PI * PI;
    assert!((rate / exact - 1.0).abs() < 0.1, "rate {rate} vs {exact}");
}

#[test]
fn extinction_times_converge_in_dt() {
    let grid = PeriodicGrid::new(256).unwrap();
    let u0 = Generator::Plateau { a: 1.0 }.sample(grid, 0).unwrap();
    let times: Vec<f64> = [1e-2, 5e-3, 2.5e-3]
        .iter()
        .map(|&dt| {
            let p = EvolutionProblem::new(u0.clone(), NonlinearW::abs(), 1e-6, dt, 0.5).unwrap();
            evolve(&p, 0).unwrap().summary.extinction_time.unwrap()
        })
        .collect();
    let d1 = (times[0] - times[1]).abs();
    let d2 = (times[1] - times[2]).abs();
    assert!(d2 <= d1 + 1e-12, "{times:?}");
    assert!((times[2] - 0.25).abs() <= 2.0 * 2.5e-3, "{times:?}");
}

#[test]
fn evolution_commutes_with_rotation() {
    let grid = PeriodicGrid::new(64).unwrap();
    let u0 = Generator::RandomPl { knots: 6, amp: 1.0 }.sample(grid, 3).unwrap();
    let a = run(u0.rotate(5), NonlinearW::abs_plus_ms(), 1e-2, 0.05);
    let b = run(u0, NonlinearW::abs_plus_ms(), 1e-2, 0.05).rotate(5);
    assert!(a.l2_distance(&b).unwrap() < 1e-8);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn flow_is_l2_contraction(seed_a in 0u64..1000, seed_b in 0u64..1000, wi in 0usize..4) {
        let grid = PeriodicGrid::new(48).unwrap();
        let gen = Generator::RandomPl { knots: 5, amp: 1.0 };
        let u = gen.sample(grid, seed_a).unwrap();
        let v = gen.sample(grid, seed_b).unwrap();
        let w = NonlinearW::catalog()[wi].clone();
        let before = u.l2_distance(&v).unwrap();
        let after = run(u, w.clone(), 1e-2, 0.03).l2_distance(&run(v, w, 1e-2, 0.03)).unwrap();
        prop_assert!(after <= before + 1e-7, "{after} > {before}");
    }

    #[test]
    fn adding_a_constant_shifts_the_solution(c in -3.0f64..3.0, seed in 0u64..1000) {
        let grid = PeriodicGrid::new(32).unwrap();
        let u = Generator::RandomPl { knots: 4, amp: 1.0 }.sample(grid, seed).unwrap();
        let shifted = Field::new(grid, u.values().iter().map(|x| x + c).collect()).unwrap();
        let a = run(u, NonlinearW::two_kink(), 1e-2, 0.03);
        let b = run(shifted, NonlinearW::two_kink(), 1e-2, 0.03);
        for (x, y) in a.values().iter().zip(b.values()) {
            prop_assert!((x + c - y).abs() < 1e-7);
        }
    }
}
