//! Array responses, path losses, RIS phase matrices, the precoder, and the
//! noiseless received signal `μ[n] = H[n] F x[n]`.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geometry::GeometryOut;
use crate::scenario::{Scenario, Shadowing};

const J: Complex64 = Complex64::new(0.0, 1.0);

/// Wraps a phase into `[0, 2π)`.
pub fn wrap_phase(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Uniform linear array response; entry `i` is `exp(j i (2π/λ) d sin θ)`.
pub fn steer_ula(angle: f64, n_elems: usize, d: f64, lambda: f64) -> DVector<Complex64> {
    let step = TAU / lambda * d * angle.sin();
    DVector::from_iterator(n_elems, (0..n_elems).map(|i| Complex64::cis(i as f64 * step)))
}

/// Uniform planar array response for an `L × L` panel, element `a + b L`
/// (`a` fastest): `exp(j (2π/λ) d [b cos φᵉ + a sin φᵉ sin φᵃ])`.
pub fn steer_upa(
    azimuth: f64,
    elevation: f64,
    side: usize,
    d: f64,
    lambda: f64,
) -> DVector<Complex64> {
    let k = TAU / lambda * d;
    let col_step = k * elevation.sin() * azimuth.sin();
    let row_step = k * elevation.cos();
    DVector::from_iterator(
        side * side,
        (0..side).flat_map(|b| {
            (0..side).map(move |a| Complex64::cis(b as f64 * row_step + a as f64 * col_step))
        }),
    )
}

/// `∂/∂φᵃ` phase slopes of [`steer_upa`]: `j (2π/λ) a d cos φᵃ sin φᵉ`.
pub fn upa_azimuth_slopes(
    azimuth: f64,
    elevation: f64,
    side: usize,
    d: f64,
    lambda: f64,
) -> DVector<Complex64> {
    let k = TAU / lambda * d * azimuth.cos() * elevation.sin();
    DVector::from_iterator(
        side * side,
        (0..side).flat_map(|_| (0..side).map(move |a| J * (a as f64 * k))),
    )
}

/// `∂/∂φᵉ` phase slopes of [`steer_upa`]: `j (2π/λ) d [a sin φᵃ cos φᵉ − b sin φᵉ]`.
pub fn upa_elevation_slopes(
    azimuth: f64,
    elevation: f64,
    side: usize,
    d: f64,
    lambda: f64,
) -> DVector<Complex64> {
    let k = TAU / lambda * d;
    let (sa, (se, ce)) = (azimuth.sin(), elevation.sin_cos());
    DVector::from_iterator(
        side * side,
        (0..side).flat_map(|b| {
            (0..side).map(move |a| J * (k * (a as f64 * sa * ce - b as f64 * se)))
        }),
    )
}

/// `j (2π/λ) d cos θ · i` for `i = 0..n`: the diagonal of the ULA angle derivative.
pub fn ula_angle_slopes(angle: f64, n_elems: usize, d: f64, lambda: f64) -> DVector<Complex64> {
    let k = TAU / lambda * d * angle.cos();
    DVector::from_iterator(n_elems, (0..n_elems).map(|i| J * (i as f64 * k)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Link {
    Los,
    /// Reflected link through surface `k` (0-based).
    Ris(usize),
}

impl Link {
    /// Stable per-link index for shadowing draws: 0 for LoS, `k + 1` for RIS `k`.
    pub fn index(self) -> u64 {
        match self {
            Link::Los => 0,
            Link::Ris(k) => k as u64 + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLoss {
    pub db: f64,
    pub linear: f64,
}

impl PathLoss {
    fn from_db(db: f64) -> Self {
        PathLoss {
            db,
            linear: 10f64.powf(db / 10.0),
        }
    }
}

fn free_space_constant_db() -> f64 {
    10.0 * (64.0 * PI.powi(3)).log10()
}

/// LoS path loss in dB, excluding shadowing. The carrier enters in GHz.
pub fn los_path_loss_db(d0: f64, carrier_hz: f64, exponent: f64) -> f64 {
    free_space_constant_db() + 10.0 * exponent * d0.log10() + 20.0 * (carrier_hz / 1e9).log10()
}

/// RIS-reflected path loss in dB, excluding shadowing. The carrier enters in GHz.
pub fn ris_path_loss_db(d1: f64, d2: f64, carrier_hz: f64, exponent: f64) -> f64 {
    free_space_constant_db()
        + 10.0 * exponent * (d1 * d2).log10()
        + 40.0 * (carrier_hz / 1e9).log10()
}

/// Shadow-fading offset `ξ` in dB for one link. Deterministic mode gives 0; sampled mode
/// draws one Gaussian per `(seed, link)`, reused on every subcarrier.
pub fn shadowing_db(mode: Shadowing, link: Link, std_db: f64) -> f64 {
    match mode {
        Shadowing::Deterministic => 0.0,
        Shadowing::Sampled { seed } => {
            if std_db == 0.0 {
                return 0.0;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(link.index());
            Normal::new(0.0, std_db)
                .expect("shadowing std is validated non-negative")
                .sample(&mut rng)
        }
    }
}

pub fn path_loss(link: Link, scenario: &Scenario, geometry: &GeometryOut) -> PathLoss {
    let f_c = scenario.radio.carrier_hz;
    let mode = scenario.pathloss.shadowing;
    let db = match link {
        Link::Los => {
            los_path_loss_db(geometry.d0, f_c, scenario.pathloss.los_exponent)
                + shadowing_db(mode, link, scenario.pathloss.los_shadowing_std_db)
        }
        Link::Ris(k) => {
            let panel = &scenario.ris[k];
            ris_path_loss_db(geometry.d1[k], geometry.d2[k], f_c, panel.pathloss_exponent)
                + shadowing_db(mode, link, panel.shadowing_std_db)
        }
    };
    PathLoss::from_db(db)
}

/// Per-surface phase shifts `θ` (wrapped to `[0, 2π)`) and the common amplitude `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseProfile {
    pub delta: f64,
    pub theta: Vec<Vec<f64>>,
}

impl PhaseProfile {
    pub fn new(delta: f64, theta: Vec<Vec<f64>>) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::Invariant(format!("amplitude {delta} outside (0, 1]")));
        }
        if theta.iter().flatten().any(|t| !t.is_finite()) {
            return Err(Error::Invariant("phase shifts must be finite".into()));
        }
        let theta = theta
            .into_iter()
            .map(|v| v.into_iter().map(wrap_phase).collect())
            .collect();
        Ok(PhaseProfile { delta, theta })
    }

    /// All-zero phases with unit amplitude.
    pub fn zeros(scenario: &Scenario) -> Self {
        PhaseProfile {
            delta: 1.0,
            theta: scenario.ris.iter().map(|p| vec![0.0; p.elements()]).collect(),
        }
    }

    /// Builds a profile from a flat phase vector laid out surface by surface.
    pub fn from_flat(scenario: &Scenario, delta: f64, flat: &[f64]) -> Result<Self> {
        if flat.len() != scenario.num_phases() {
            return Err(Error::Config(format!(
                "expected {} phases, got {}",
                scenario.num_phases(),
                flat.len()
            )));
        }
        let mut rest = flat;
        let mut theta = Vec::with_capacity(scenario.num_ris());
        for panel in &scenario.ris {
            let (head, tail) = rest.split_at(panel.elements());
            theta.push(head.to_vec());
            rest = tail;
        }
        PhaseProfile::new(delta, theta)
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.theta.iter().flatten().copied().collect()
    }

    /// Checks the profile shape against a scenario.
    pub fn check(&self, scenario: &Scenario) -> Result<()> {
        let shapes_match = self.theta.len() == scenario.num_ris()
            && self
                .theta
                .iter()
                .zip(&scenario.ris)
                .all(|(t, p)| t.len() == p.elements());
        if !shapes_match {
            return Err(Error::Config(
                "phase profile shape does not match the RIS panels".into(),
            ));
        }
        Ok(())
    }

    /// Diagonal of `Θ_k`: `δ e^{jθ_i}`.
    pub fn diagonal(&self, k: usize) -> DVector<Complex64> {
        DVector::from_iterator(
            self.theta[k].len(),
            self.theta[k].iter().map(|&t| Complex64::from_polar(self.delta, t)),
        )
    }
}

/// Beamforming matrix `F` (unit-norm columns) and per-subcarrier pilots `x[n]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    pub f: DMatrix<Complex64>,
    /// `pilots[n - 1]` is `x[n]`.
    pub pilots: Vec<DVector<Complex64>>,
}

impl Precoder {
    pub fn new(f: DMatrix<Complex64>, pilots: Vec<DVector<Complex64>>) -> Result<Self> {
        for (i, col) in f.column_iter().enumerate() {
            if (col.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("precoder column {i} is not unit-norm")));
            }
        }
        for (n, x) in pilots.iter().enumerate() {
            if x.len() != f.ncols() {
                return Err(Error::Config(format!("pilot {} has wrong length", n + 1)));
            }
            if (x.norm_squared() - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("pilot {} is not unit power", n + 1)));
            }
        }
        Ok(Precoder { f, pilots })
    }

    /// `F x[n]` for a 1-based subcarrier index.
    pub fn transmit(&self, n: usize) -> DVector<Complex64> {
        &self.f * &self.pilots[n - 1]
    }
}

/// One beam per path (LoS first, then each RIS in order) with an equal-power pilot.
pub fn default_precoder(scenario: &Scenario, geometry: &GeometryOut) -> Result<Precoder> {
    let k = scenario.num_ris();
    let beams = scenario.radio.beams_for(k);
    if beams != k + 1 {
        return Err(Error::Config(format!(
            "default precoder needs one beam per path ({}), got {beams}; supply F explicitly",
            k + 1
        )));
    }
    let radio = &scenario.radio;
    let nt = radio.tx_antennas;
    let scale = 1.0 / (nt as f64).sqrt();
    let mut f = DMatrix::zeros(nt, beams);
    for i in 0..beams {
        let beam = steer_ula(geometry.theta_tx(i), nt, radio.spacing(), radio.wavelength());
        f.set_column(i, &(beam * Complex64::from(scale)));
    }
    let x = DVector::from_element(beams, Complex64::from(1.0 / (beams as f64).sqrt()));
    Precoder::new(f, vec![x; radio.subcarriers])
}

/// Everything about the channel except the RIS phases: path losses, gains, delays,
/// array responses and their angle slopes, the precoder and the noise scaling.
///
/// Index `i` of the per-path vectors is the path (0 = LoS, `k + 1` = RIS `k`);
/// the per-surface vectors are indexed by `k` directly.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    pub rho: Vec<f64>,
    pub gamma: Vec<f64>,
    pub h: Vec<Complex64>,
    pub tau: Vec<f64>,
    pub a_tx: Vec<DVector<Complex64>>,
    pub a_rx: Vec<DVector<Complex64>>,
    pub a_in: Vec<DVector<Complex64>>,
    pub a_out: Vec<DVector<Complex64>>,
    pub tx0_slopes: DVector<Complex64>,
    pub rx_slopes: Vec<DVector<Complex64>>,
    pub out_az_slopes: Vec<DVector<Complex64>>,
    pub out_el_slopes: Vec<DVector<Complex64>>,
    pub precoder: Precoder,
    pub bandwidth_hz: f64,
    pub subcarriers: usize,
    /// `2 P_TX / (N_0 B)`.
    pub fim_scale: f64,
}

impl ChannelRealization {
    pub fn new(scenario: &Scenario, geometry: &GeometryOut) -> Result<Self> {
        let precoder = default_precoder(scenario, geometry)?;
        Self::with_precoder(scenario, geometry, precoder)
    }

    pub fn with_precoder(
        scenario: &Scenario,
        geometry: &GeometryOut,
        precoder: Precoder,
    ) -> Result<Self> {
        let radio = &scenario.radio;
        let k = scenario.num_ris();
        if geometry.num_ris() != k {
            return Err(Error::Config("geometry does not match scenario".into()));
        }
        if precoder.f.nrows() != radio.tx_antennas || precoder.pilots.len() != radio.subcarriers {
            return Err(Error::Config("precoder shape does not match radio".into()));
        }
        let (d, lambda) = (radio.spacing(), radio.wavelength());
        let (nt, nr) = (radio.tx_antennas, radio.rx_antennas);

        let rho: Vec<f64> = std::iter::once(Link::Los)
            .chain((0..k).map(Link::Ris))
            .map(|link| path_loss(link, scenario, geometry).linear)
            .collect();
        let gamma = rho.iter().map(|r| ((nt * nr) as f64 / r).sqrt()).collect();
        let h = std::iter::once(scenario.los_gain)
            .chain(scenario.ris.iter().map(|p| p.gain))
            .collect();

        let a_tx = (0..=k)
            .map(|i| steer_ula(geometry.theta_tx(i), nt, d, lambda))
            .collect();
        let a_rx = geometry
            .theta_rx
            .iter()
            .map(|&t| steer_ula(t, nr, d, lambda))
            .collect();
        let rx_slopes = geometry
            .theta_rx
            .iter()
            .map(|&t| ula_angle_slopes(t, nr, d, lambda))
            .collect();
        let panels = || scenario.ris.iter().enumerate();
        let a_in = panels()
            .map(|(j, p)| steer_upa(geometry.phi_in_a[j], geometry.phi_in_e[j], p.side, d, lambda))
            .collect();
        let a_out = panels()
            .map(|(j, p)| {
                steer_upa(geometry.phi_out_a[j], geometry.phi_out_e[j], p.side, d, lambda)
            })
            .collect();
        let out_az_slopes = panels()
            .map(|(j, p)| {
                upa_azimuth_slopes(geometry.phi_out_a[j], geometry.phi_out_e[j], p.side, d, lambda)
            })
            .collect();
        let out_el_slopes = panels()
            .map(|(j, p)| {
                upa_elevation_slopes(geometry.phi_out_a[j], geometry.phi_out_e[j], p.side, d, lambda)
            })
            .collect();

        Ok(ChannelRealization {
            rho,
            gamma,
            h,
            tau: geometry.tau.clone(),
            a_tx,
            a_rx,
            a_in,
            a_out,
            tx0_slopes: ula_angle_slopes(geometry.theta_tx0, nt, d, lambda),
            rx_slopes,
            out_az_slopes,
            out_el_slopes,
            precoder,
            bandwidth_hz: radio.bandwidth_hz,
            subcarriers: radio.subcarriers,
            fim_scale: 2.0 * radio.tx_power_w / (radio.noise_psd_w_per_hz * radio.bandwidth_hz),
        })
    }

    pub fn num_ris(&self) -> usize {
        self.a_in.len()
    }

    /// Subcarrier angular frequency `2π B n / N` for a 1-based `n`.
    pub fn omega(&self, n: usize) -> f64 {
        TAU * self.bandwidth_hz * n as f64 / self.subcarriers as f64
    }

    /// Per-path channel matrix `H_i[n]` (0 = LoS), formed explicitly from outer products.
    pub fn path_matrix(&self, i: usize, n: usize, phases: &PhaseProfile) -> DMatrix<Complex64> {
        let phase = Complex64::cis(self.omega(n) * self.tau[i]);
        let scale = phase * self.h[i] * self.gamma[i];
        if i == 0 {
            return &self.a_rx[0] * self.a_tx[0].adjoint() * scale;
        }
        let k = i - 1;
        let h_im = &self.a_rx[i] * self.a_out[k].adjoint();
        let h_bi = &self.a_in[k] * self.a_tx[i].adjoint();
        let theta = DMatrix::from_diagonal(&phases.diagonal(k));
        h_im * theta * h_bi * scale
    }

    /// Full channel `H[n] = H_0[n] + Σ_k H_k[n]`.
    pub fn channel_matrix(&self, n: usize, phases: &PhaseProfile) -> DMatrix<Complex64> {
        (0..=self.num_ris())
            .map(|i| self.path_matrix(i, n, phases))
            .fold(
                DMatrix::zeros(self.a_rx[0].len(), self.a_tx[0].len()),
                |acc, m| acc + m,
            )
    }
}

/// Noiseless received signal `μ[n] = H[n] F x[n]` (transmit power excluded), 1-based `n`.
pub fn mean_signal(
    realization: &ChannelRealization,
    phases: &PhaseProfile,
    n: usize,
) -> DVector<Complex64> {
    realization.channel_matrix(n, phases) * realization.precoder.transmit(n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::compute_geometry;
    use crate::optimizer::beam_aligned_phases;

    const LAMBDA: f64 = 1.0;

    fn assert_close(a: Complex64, b: Complex64, tol: f64) {
        assert!((a - b).norm() < tol, "{a} vs {b}");
    }

    #[test]
    fn ula_broadside_is_ones() {
        let v = steer_ula(0.0, 5, 0.5, LAMBDA);
        assert!(v.iter().all(|z| (*z - Complex64::from(1.0)).norm() < 1e-15));
    }

    #[test]
    fn ula_endfire_alternates() {
        let v = steer_ula(PI / 2.0, 4, 0.5, LAMBDA);
        for (i, z) in v.iter().enumerate() {
            let expect = if i % 2 == 0 { 1.0 } else { -1.0 };
            assert_close(*z, Complex64::from(expect), 1e-12);
        }
    }

    #[test]
    fn ula_thirty_degrees() {
        let v = steer_ula(0.5f64.asin(), 3, 0.5, LAMBDA);
        for (i, z) in v.iter().enumerate() {
            assert_close(*z, Complex64::cis(i as f64 * PI / 2.0), 1e-12);
        }
    }

    #[test]
    fn upa_cases() {
        let v = steer_upa(0.0, PI / 2.0, 3, 0.5, LAMBDA);
        assert!(v.iter().all(|z| (*z - Complex64::from(1.0)).norm() < 1e-12));

        // Zero elevation: only the row index b matters.
        let (d, side) = (0.3, 3);
        let v = steer_upa(0.7, 0.0, side, d, LAMBDA);
        for b in 0..side {
            for a in 0..side {
                assert_close(v[a + b * side], Complex64::cis(TAU * b as f64 * d), 1e-12);
            }
        }

        let v = steer_upa(PI / 2.0, PI / 2.0, 2, 0.5, LAMBDA);
        let expect = [1.0, -1.0, 1.0, -1.0];
        for (z, e) in v.iter().zip(expect) {
            assert_close(*z, Complex64::from(e), 1e-12);
        }
    }

    #[test]
    fn los_path_loss_reference_value() {
        let d0 = 10600f64.sqrt();
        let constant = 10.0 * (64.0 * PI.powi(3)).log10();
        assert!((constant - 32.977).abs() < 1e-3);
        let distance = 37.0 * d0.log10();
        assert!((distance - 74.468).abs() < 1e-3);
        let carrier = 20.0 * 4.9f64.log10();
        assert!((carrier - 13.804).abs() < 1e-3);
        let pl = los_path_loss_db(d0, 4.9e9, 3.7);
        assert!((pl - (constant + distance + carrier)).abs() < 1e-12);
        assert!((pl - 121.25).abs() < 5e-3);
    }

    #[test]
    fn ris_path_loss_unit_distances() {
        let pl = ris_path_loss_db(1.0, 1.0, 4.9e9, 2.2);
        let expect = 10.0 * (64.0 * PI.powi(3)).log10() + 40.0 * 4.9f64.log10();
        assert!((pl - expect).abs() < 1e-12);
    }

    #[test]
    fn doubling_distance_adds_exponent_times_3db() {
        let a = los_path_loss_db(50.0, 4.9e9, 3.7);
        let b = los_path_loss_db(100.0, 4.9e9, 3.7);
        assert!((b - a - 37.0 * 2f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn sampled_shadowing_is_reproducible() {
        let mode = Shadowing::Sampled { seed: 9 };
        let a = shadowing_db(mode, Link::Ris(1), 7.0);
        assert_eq!(a, shadowing_db(mode, Link::Ris(1), 7.0));
        assert_ne!(a, shadowing_db(mode, Link::Ris(0), 7.0));
        assert_eq!(shadowing_db(Shadowing::Deterministic, Link::Los, 4.0), 0.0);
    }

    #[test]
    fn default_precoder_is_normalized() {
        let s = Scenario::reference();
        let g = compute_geometry(&s).unwrap();
        let p = default_precoder(&s, &g).unwrap();
        assert_eq!(p.f.ncols(), 4);
        for col in p.f.column_iter() {
            assert!((col.norm() - 1.0).abs() < 1e-12);
        }
        assert!(p.pilots.iter().all(|x| (x.norm_squared() - 1.0).abs() < 1e-12));

        let los = s.with_active_ris(0);
        let p = default_precoder(&los, &compute_geometry(&los).unwrap()).unwrap();
        assert_eq!(p.f.ncols(), 1);
        assert!((p.f.column(0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn default_precoder_rejects_beam_mismatch() {
        let mut s = Scenario::reference();
        s.radio.beams = Some(2);
        let g = compute_geometry(&s).unwrap();
        assert!(matches!(default_precoder(&s, &g), Err(Error::Config(_))));
    }

    fn small() -> Scenario {
        let mut s = Scenario::reference().with_ris_side(4);
        s.radio.tx_antennas = 8;
        s.radio.rx_antennas = 4;
        s.radio.subcarriers = 16;
        s
    }

    #[test]
    fn zero_gains_give_zero_signal() {
        let mut s = small();
        s.los_gain = Complex64::from(0.0);
        for p in &mut s.ris {
            p.gain = Complex64::from(0.0);
        }
        let g = compute_geometry(&s).unwrap();
        let r = ChannelRealization::new(&s, &g).unwrap();
        let mu = mean_signal(&r, &PhaseProfile::zeros(&s), 3);
        assert!(mu.iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn los_only_signal_is_scaled_rx_steering() {
        let s = small().with_active_ris(0);
        let g = compute_geometry(&s).unwrap();
        let r = ChannelRealization::new(&s, &g).unwrap();
        let phases = PhaseProfile::zeros(&s);
        let first = mean_signal(&r, &phases, 1);
        for n in 1..=s.radio.subcarriers {
            let mu = mean_signal(&r, &phases, n);
            let fx = r.precoder.transmit(n);
            let scalar = r.a_tx[0].dotc(&fx)
                * r.gamma[0]
                * Complex64::cis(r.omega(n) * r.tau[0]);
            let expect = &r.a_rx[0] * scalar;
            assert!((&mu - &expect).norm() < 1e-12 * expect.norm());
            for (a, b) in mu.iter().zip(first.iter()) {
                assert!((a.norm() - b.norm()).abs() < 1e-12 * b.norm());
            }
        }
    }

    #[test]
    fn reflected_paths_are_rank_one() {
        let s = small();
        let g = compute_geometry(&s).unwrap();
        let r = ChannelRealization::new(&s, &g).unwrap();
        let phases = crate::optimizer::random_phases(&s, 4);
        for k in 0..s.num_ris() {
            let i = k + 1;
            let fro = r.path_matrix(i, 1, &phases).norm();
            for n in [1, 7, 16] {
                let hk = r.path_matrix(i, n, &phases);
                let cascade = r.a_out[k].dotc(&(phases.diagonal(k).component_mul(&r.a_in[k])));
                let g_scalar = Complex64::from(r.gamma[i])
                    * r.h[i]
                    * cascade
                    * Complex64::cis(r.omega(n) * r.tau[i]);
                let outer = &r.a_rx[i] * r.a_tx[i].adjoint() * g_scalar;
                assert!((&hk - &outer).norm() <= 1e-12 * outer.norm().max(1e-300));
                assert!((hk.norm() - fro).abs() <= 1e-12 * fro);
            }
        }
    }

    #[test]
    fn aligned_cascade_has_full_gain() {
        let s = Scenario::reference();
        let g = compute_geometry(&s).unwrap();
        let r = ChannelRealization::new(&s, &g).unwrap();
        let phases = beam_aligned_phases(&s, &g);
        for k in 0..3 {
            let c = r.a_out[k].dotc(&phases.diagonal(k).component_mul(&r.a_in[k]));
            assert!((c.norm() - 256.0).abs() < 1e-10);
        }
        for k in 0..3 {
            let diag = phases.diagonal(k);
            assert!(diag.iter().all(|z| (z.norm() - 1.0).abs() < 1e-14));
        }
    }

    #[test]
    fn phase_profile_wraps() {
        let s = small().with_active_ris(1);
        let p = PhaseProfile::from_flat(&s, 1.0, &[-0.5; 16]).unwrap();
        assert!(p.flatten().iter().all(|&t| (t - (TAU - 0.5)).abs() < 1e-12));
        assert!(PhaseProfile::new(0.0, vec![]).is_err());
        assert_eq!(wrap_phase(-1e-18), 0.0);
        assert!(wrap_phase(TAU) == 0.0);
    }
}
