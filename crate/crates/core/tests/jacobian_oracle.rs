mod common;

use common::random_scenario;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use ris_crlb::fim::ParamLayout;
use ris_crlb::geometry::{compute_geometry, jacobian_t};
use ris_crlb::scenario::Scenario;
use ris_crlb::SPEED_OF_LIGHT;

/// Kinematic part of η from the geometry, delays expressed in meters (τ·c) so the
/// comparison is on a common scale. Gain entries are zero: they do not depend on
/// position or rotation.
fn eta_of(s: &Scenario) -> Vec<f64> {
    let g = compute_geometry(s).unwrap();
    let l = ParamLayout::new(s.num_ris());
    let mut v = vec![0.0; l.len()];
    for i in 0..=s.num_ris() {
        v[l.tau(i)] = g.tau[i] * SPEED_OF_LIGHT;
        v[l.theta_rx(i)] = g.theta_rx[i];
    }
    v[l.theta_tx0()] = g.theta_tx0;
    for k in 0..s.num_ris() {
        v[l.phi_a(k)] = g.phi_out_a[k];
        v[l.phi_e(k)] = g.phi_out_e[k];
    }
    v
}

fn perturb(s: &Scenario, row: usize, h: f64) -> Scenario {
    let mut t = s.clone();
    match row {
        0 => t.mu.x += h,
        1 => t.mu.y += h,
        _ => t.rotation += h,
    }
    t
}

#[test]
fn jacobian_matches_finite_differences_on_100_scenarios() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut checked = 0;
    for trial in 0..100 {
        let s = random_scenario(&mut rng, 1 + trial % 3);
        let t = jacobian_t(&s).unwrap().t;
        let l = ParamLayout::new(s.num_ris());
        for row in 0..3 {
            let coord = [s.mu.x, s.mu.y, s.rotation][row];
            let h = 1e-6 * coord.abs().max(1.0);
            let plus = eta_of(&perturb(&s, row, h));
            let minus = eta_of(&perturb(&s, row, -h));
            for col in 0..l.len() {
                let fd = (plus[col] - minus[col]) / (2.0 * h);
                let scale = if col <= s.num_ris() { SPEED_OF_LIGHT } else { 1.0 };
                let analytic = t[(row, col)] * scale;
                let err = (fd - analytic).abs();
                let ok = if analytic.abs() < 1e-6 {
                    err < 1e-9
                } else {
                    err < 1e-5 * analytic.abs()
                };
                assert!(ok, "trial {trial} row {row} col {col}: fd {fd:e} analytic {analytic:e}");
                checked += 1;
            }
        }
    }
    assert!(checked > 100 * 3 * 11);
}

#[test]
fn reference_delay_slope_matches_central_difference() {
    let s = Scenario::reference();
    let t = jacobian_t(&s).unwrap().t;
    let h = 1e-4;
    let tau = |dx: f64| compute_geometry(&perturb(&s, 0, dx)).unwrap().tau[0];
    let fd = (tau(h) - tau(-h)) / (2.0 * h);
    assert!((fd - t[(0, 0)]).abs() < 1e-6 * t[(0, 0)]);
}
