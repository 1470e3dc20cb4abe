#![allow(dead_code)]

use nalgebra::{DVector, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use ris_crlb::channel::{mean_signal, ChannelRealization, PhaseProfile};
use ris_crlb::fim::ChannelParams;
use ris_crlb::geometry::{compute_geometry, jacobian_t, GeometryOut};
use ris_crlb::scenario::{RisPanel, Scenario};
use ris_crlb::Complex64;

/// Reference deployment shrunk to N_t = 8, N_r = 4, L = 4, N = 16.
pub fn small_reference() -> Scenario {
    let mut s = Scenario::reference().with_ris_side(4);
    s.radio.tx_antennas = 8;
    s.radio.rx_antennas = 4;
    s.radio.subcarriers = 16;
    s
}

fn well_inside(x: f64) -> bool {
    x.abs() < 0.98
}

/// Random placement whose inverse-trig arguments stay away from ±1 and whose MU is
/// not lined up with any surface, so every Jacobian entry is well defined.
pub fn random_scenario(rng: &mut ChaCha8Rng, num_ris: usize) -> Scenario {
    loop {
        let mut s = small_reference().with_active_ris(0);
        s.bs = Vector3::new(rng.random_range(-20.0..20.0), rng.random_range(-20.0..20.0), rng.random_range(15.0..50.0));
        s.mu = Vector3::new(rng.random_range(40.0..130.0), rng.random_range(-60.0..60.0), 0.0);
        s.rotation = rng.random_range(0.1..3.0);
        for _ in 0..num_ris {
            s.ris.push(RisPanel {
                position: Vector3::new(
                    rng.random_range(-40.0..160.0),
                    rng.random_range(-80.0..80.0),
                    rng.random_range(2.0..30.0),
                ),
                side: 4,
                pathloss_exponent: 2.2,
                shadowing_std_db: 7.0,
                gain: Complex64::new(rng.random_range(0.5..1.5), rng.random_range(-0.5..0.5)),
            });
        }
        if acceptable(&s) {
            return s;
        }
    }
}

fn acceptable(s: &Scenario) -> bool {
    if compute_geometry(s).is_err() || jacobian_t(s).is_err() {
        return false;
    }
    let (p, q) = (s.mu, s.bs);
    let (sin_a, cos_a) = s.rotation.sin_cos();
    let rx_ok = |u: f64, v: f64, r: f64| well_inside((u * cos_a - v * sin_a) / r);
    let r0 = (p - q).norm();
    if !(well_inside((p.x - q.x) / r0) && rx_ok(p.x - q.x, p.y - q.y, r0)) {
        return false;
    }
    s.ris.iter().all(|panel| {
        let sp = panel.position;
        let (u, v) = (p.x - sp.x, p.y - sp.y);
        let r = (p - sp).norm();
        let horiz = u.hypot(v);
        let horiz_in = (q.x - sp.x).hypot(q.y - sp.y);
        horiz > 5.0
            && horiz_in > 5.0
            && u.abs() > 2.0
            && well_inside(v / horiz)
            && well_inside(sp.z / r)
            && rx_ok(u, v, r)
            && (sp - q).norm() > 5.0
    })
}

/// Central finite difference of `μ[n]` w.r.t. channel parameter `m`, rebuilding the
/// channel from perturbed parameters (steering vectors recomputed, explicit H[n]).
pub fn fd_mu_column(
    scenario: &Scenario,
    geometry: &GeometryOut,
    realization: &ChannelRealization,
    phases: &PhaseProfile,
    m: usize,
    step: f64,
    n: usize,
) -> DVector<Complex64> {
    let base = ChannelParams::from_model(geometry, realization);
    let eval = |delta: f64| {
        let mut p = base.clone();
        p.set(m, base.get(m) + delta);
        let (_, r) = p.apply(scenario, geometry, &realization.precoder).unwrap();
        mean_signal(&r, phases, n)
    };
    (eval(step) - eval(-step)) / Complex64::from(2.0 * step)
}

/// Finite-difference step per parameter: delays are scaled to the subcarrier phase
/// slope so the perturbation is ~1e-7 rad of phase, everything else is 1e-7 absolute.
pub fn fd_step(scenario: &Scenario, m: usize) -> f64 {
    if m <= scenario.num_ris() {
        1e-7 / (2.0 * std::f64::consts::PI * scenario.radio.bandwidth_hz)
    } else {
        1e-7
    }
}
