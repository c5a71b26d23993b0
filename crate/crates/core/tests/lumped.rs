use std::f64::consts::TAU;

use approx::assert_relative_eq;
use proptest::prelude::*;
use vibroimpact::analysis::{contact_interval, max_energy_error, preservation_metric};
use vibroimpact::contact::ContactLaw;
use vibroimpact::lumped::{
    residual, simulate, warped_frequency, LumpedParams, LumpedState, SchemeKind,
};

fn params(mass: f64, k: f64, kc: f64, alpha: f64, barrier: f64) -> LumpedParams {
    LumpedParams::new(mass, k, ContactLaw::new(kc, alpha).unwrap(), barrier, 0.0, 1.0 / 44_100.0)
        .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ec_conserves_energy_through_impacts(
        mass in 0.01..1.0_f64,
        k in 0.0..1e6_f64,
        log_kc in 3.0..10.0_f64,
        alpha in 1.0..3.0_f64,
        y0 in -2e-3..2e-3_f64,
        v0 in -1.0..1.0_f64,
    ) {
        let p = params(mass, k, 10f64.powf(log_kc), alpha, 0.0);
        let init = LumpedState::from_momentum(y0, mass * v0, &p);
        let h = simulate(SchemeKind::Ec, &p, init, 2000).unwrap().total_energy();
        prop_assume!(h[0] > 1e-9);
        prop_assert!(max_energy_error(&h, h[0]).unwrap() < 1e-11);
    }

    #[test]
    fn ec_residual_slope_is_at_least_one(
        log_kc in 0.0..12.0_f64,
        alpha in 1.0..4.0_f64,
        y in -0.01..0.01_f64,
        q in -1e-3..1e-3_f64,
        s in -0.05..0.05_f64,
    ) {
        let p = params(0.1, 100.0, 10f64.powf(log_kc), alpha, 0.0);
        let r = residual(SchemeKind::Ec, s, &LumpedState::new(y, q), &p).unwrap();
        prop_assert!(r.derivative >= 1.0);
    }

    #[test]
    fn warping_lowers_frequency_and_vanishes_with_the_step(omega in 1.0..1e5_f64) {
        let coarse = warped_frequency(omega, 1.0 / 44_100.0);
        let fine = warped_frequency(omega, 1.0 / 44_100_000.0);
        prop_assert!(coarse <= omega);
        prop_assert!(coarse <= fine);
        prop_assert!((fine - omega).abs() <= 1e-5 * omega);
    }
}

#[test]
fn schemes_agree_without_contact() {
    let omega = TAU * 200.0;
    let p = LumpedParams::new(1.0, omega * omega, ContactLaw::none(), 0.0, 0.0, 1.0 / 44_100.0).unwrap();
    let init = LumpedState::new(1e-3, 0.0);
    let ec = simulate(SchemeKind::Ec, &p, init, 500).unwrap().displacement();
    for kind in [SchemeKind::Tr, SchemeKind::Mr] {
        let other = simulate(kind, &p, init, 500).unwrap().displacement();
        for (a, b) in ec.iter().zip(&other) {
            assert_relative_eq!(a, b, epsilon = 1e-15);
        }
    }
}

#[test]
fn pse_energy_is_restored_after_contact() {
    let p = params(0.1, 0.0, 5000.0, 1.0, 0.0);
    let init = LumpedState::from_momentum(0.05, -0.1, &p);
    let traj = simulate(SchemeKind::Pse, &p, init, 30_000).unwrap();
    let y = traj.displacement();
    let h = traj.total_energy();
    let (n1, n2) = contact_interval(&y, 0.0).expect("mass reaches the barrier");
    let before = h[n1 - 3];
    let after = h[n2 + 3];
    assert_relative_eq!(before, h[0], max_relative = 1e-10);
    assert!((after - before).abs() / before < 1e-3);
    assert!(preservation_metric(&h, h[0], (n1, n2)).unwrap() > 0.0);
}
