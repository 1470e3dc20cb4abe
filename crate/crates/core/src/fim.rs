//! Fisher information over the channel parameters, the position-domain
//! transformation, and the PEB/REB extraction.

use std::ops::Range;

use nalgebra::{DMatrix, Matrix3, SymmetricEigen};
use num_complex::Complex64;

use crate::channel::{ChannelRealization, PhaseProfile, Precoder};
use crate::error::{Error, Result};
use crate::geometry::{compute_geometry, jacobian_t, GeometryOut, JacobianT};
use crate::par;
use crate::scenario::Scenario;

const J: Complex64 = Complex64::new(0.0, 1.0);

/// Largest condition number accepted for the 3×3 position-domain FIM.
pub const MAX_CONDITION: f64 = 1e12;

/// Subcarriers per work item in the FIM accumulation. The partition is fixed so the
/// floating-point summation order never depends on the thread count.
const SUBCARRIER_CHUNK: usize = 8;

/// Index map of the channel parameter vector
/// `η = [τ (K+1), θ_TX,0, θ_RX (K+1), φ_out^a (K), φ_out^e (K), h_R (K+1), h_I (K+1)]`.
///
/// Path indices `i` run over `0..=K` (0 = LoS); surface indices `k` over `0..K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    k: usize,
}

impl ParamLayout {
    pub fn new(num_ris: usize) -> Self {
        ParamLayout { k: num_ris }
    }

    pub fn num_ris(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        6 * self.k + 5
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn tau(&self, i: usize) -> usize {
        i
    }

    pub fn theta_tx0(&self) -> usize {
        self.k + 1
    }

    pub fn theta_rx(&self, i: usize) -> usize {
        self.k + 2 + i
    }

    pub fn phi_a(&self, k: usize) -> usize {
        2 * self.k + 3 + k
    }

    pub fn phi_e(&self, k: usize) -> usize {
        3 * self.k + 3 + k
    }

    pub fn h_re(&self, i: usize) -> usize {
        4 * self.k + 3 + i
    }

    pub fn h_im(&self, i: usize) -> usize {
        5 * self.k + 4 + i
    }

    /// Columns of the `(h_R, h_I)` blocks.
    pub fn gains(&self) -> Range<usize> {
        self.h_re(0)..self.len()
    }
}

/// The channel parameter vector `η` in [`ParamLayout`] order.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelParams {
    pub tau: Vec<f64>,
    pub theta_tx0: f64,
    pub theta_rx: Vec<f64>,
    pub phi_out_a: Vec<f64>,
    pub phi_out_e: Vec<f64>,
    pub gains: Vec<Complex64>,
}

impl ChannelParams {
    pub fn from_model(geometry: &GeometryOut, realization: &ChannelRealization) -> Self {
        ChannelParams {
            tau: geometry.tau.clone(),
            theta_tx0: geometry.theta_tx0,
            theta_rx: geometry.theta_rx.clone(),
            phi_out_a: geometry.phi_out_a.clone(),
            phi_out_e: geometry.phi_out_e.clone(),
            gains: realization.h.clone(),
        }
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout::new(self.phi_out_a.len())
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.layout().len());
        v.extend(&self.tau);
        v.push(self.theta_tx0);
        v.extend(&self.theta_rx);
        v.extend(&self.phi_out_a);
        v.extend(&self.phi_out_e);
        v.extend(self.gains.iter().map(|h| h.re));
        v.extend(self.gains.iter().map(|h| h.im));
        v
    }

    pub fn get(&self, m: usize) -> f64 {
        self.to_vec()[m]
    }

    pub fn set(&mut self, m: usize, value: f64) {
        let l = self.layout();
        let k = l.num_ris();
        match m {
            _ if m <= k => self.tau[m] = value,
            _ if m == l.theta_tx0() => self.theta_tx0 = value,
            _ if m < l.phi_a(0) => self.theta_rx[m - l.theta_rx(0)] = value,
            _ if m < l.phi_e(0) => self.phi_out_a[m - l.phi_a(0)] = value,
            _ if m < l.h_re(0) => self.phi_out_e[m - l.phi_e(0)] = value,
            _ if m < l.h_im(0) => self.gains[m - l.h_re(0)].re = value,
            _ if m < l.len() => self.gains[m - l.h_im(0)].im = value,
            _ => panic!("parameter index {m} out of range for K = {k}"),
        }
    }

    /// Rebuilds the channel with these parameter values in place of the geometric ones,
    /// keeping the precoder fixed. Path losses stay tied to the geometric distances.
    pub fn apply(
        &self,
        scenario: &Scenario,
        geometry: &GeometryOut,
        precoder: &Precoder,
    ) -> Result<(GeometryOut, ChannelRealization)> {
        let mut g = geometry.clone();
        g.tau = self.tau.clone();
        g.theta_tx0 = self.theta_tx0;
        g.theta_rx = self.theta_rx.clone();
        g.phi_out_a = self.phi_out_a.clone();
        g.phi_out_e = self.phi_out_e.clone();
        let mut r = ChannelRealization::with_precoder(scenario, &g, precoder.clone())?;
        r.h = self.gains.clone();
        Ok((g, r))
    }
}

/// Phase-dependent RIS cascade scalars: `α_OUT^H Θ α_IN` and its two
/// outgoing-angle derivatives `α_OUT^H diag(c)^H Θ α_IN`.
#[derive(Debug, Clone)]
struct Cascades {
    gain: Vec<Complex64>,
    azimuth: Vec<Complex64>,
    elevation: Vec<Complex64>,
}

impl Cascades {
    fn new(realization: &ChannelRealization, phases: &PhaseProfile) -> Self {
        let k = realization.num_ris();
        let mut c = Cascades {
            gain: Vec::with_capacity(k),
            azimuth: Vec::with_capacity(k),
            elevation: Vec::with_capacity(k),
        };
        for j in 0..k {
            let (mut g, mut a, mut e) = (Complex64::ZERO, Complex64::ZERO, Complex64::ZERO);
            let out = &realization.a_out[j];
            let inc = &realization.a_in[j];
            let az = &realization.out_az_slopes[j];
            let el = &realization.out_el_slopes[j];
            for (i, &theta) in phases.theta[j].iter().enumerate() {
                let through = out[i].conj() * Complex64::from_polar(phases.delta, theta) * inc[i];
                g += through;
                a += az[i].conj() * through;
                e += el[i].conj() * through;
            }
            c.gain.push(g);
            c.azimuth.push(a);
            c.elevation.push(e);
        }
        c
    }
}

/// Evaluates `μ[n]` and `∂μ[n]/∂η` using the rank-one structure of every path.
struct SignalModel<'a> {
    r: &'a ChannelRealization,
    cascades: Cascades,
    layout: ParamLayout,
}

impl<'a> SignalModel<'a> {
    fn new(r: &'a ChannelRealization, phases: &PhaseProfile) -> Self {
        SignalModel {
            cascades: Cascades::new(r, phases),
            layout: ParamLayout::new(r.num_ris()),
            r,
        }
    }

    /// Column-major `N_r × (6K+5)` derivative matrix for 1-based subcarrier `n`.
    fn derivatives_into(&self, n: usize, out: &mut [Complex64]) {
        let r = self.r;
        let l = &self.layout;
        let nr = r.a_rx[0].len();
        out.fill(Complex64::ZERO);
        let fx = r.precoder.transmit(n);
        let omega = r.omega(n);

        let mut col = |m: usize, scale: Complex64, vec: &mut dyn Iterator<Item = Complex64>| {
            for (slot, v) in out[m * nr..(m + 1) * nr].iter_mut().zip(vec) {
                *slot = scale * v;
            }
        };

        for i in 0..=l.num_ris() {
            // Scalar part of path i with the gain h_i factored out.
            let beam = r.a_tx[i].dotc(&fx);
            let cascade = if i == 0 {
                Complex64::ONE
            } else {
                self.cascades.gain[i - 1]
            };
            let carrier = Complex64::cis(omega * r.tau[i]);
            let unit = carrier * beam * cascade * r.gamma[i];
            let full = unit * r.h[i];
            let rx = &r.a_rx[i];

            col(l.tau(i), full * J * omega, &mut rx.iter().copied());
            col(
                l.theta_rx(i),
                full,
                &mut rx.iter().zip(r.rx_slopes[i].iter()).map(|(a, s)| a * s),
            );
            col(l.h_re(i), unit, &mut rx.iter().copied());
            col(l.h_im(i), unit * J, &mut rx.iter().copied());

            if i == 0 {
                // ∂/∂θ_TX,0 of α_TX^H is α_TX^H D^H.
                let beam_slope: Complex64 = r.a_tx[0]
                    .iter()
                    .zip(r.tx0_slopes.iter())
                    .zip(fx.iter())
                    .map(|((a, s), x)| (a * s).conj() * x)
                    .sum();
                let scale = carrier * beam_slope * r.gamma[0] * r.h[0];
                col(l.theta_tx0(), scale, &mut rx.iter().copied());
            } else {
                let k = i - 1;
                let common = carrier * beam * r.gamma[i] * r.h[i];
                col(
                    l.phi_a(k),
                    common * self.cascades.azimuth[k],
                    &mut rx.iter().copied(),
                );
                col(
                    l.phi_e(k),
                    common * self.cascades.elevation[k],
                    &mut rx.iter().copied(),
                );
            }
        }
    }

    /// `Σ_n Re{∂μ^H/∂η_a ∂μ/∂η_b}` over `n` in `range`, upper triangle in row-major order.
    fn gram(&self, range: Range<usize>, acc: &mut [f64]) {
        let p = self.layout.len();
        let nr = self.r.a_rx[0].len();
        let mut d = vec![Complex64::ZERO; p * nr];
        for n in range {
            self.derivatives_into(n, &mut d);
            for a in 0..p {
                let ca = &d[a * nr..(a + 1) * nr];
                for b in a..p {
                    let cb = &d[b * nr..(b + 1) * nr];
                    let re: f64 = ca
                        .iter()
                        .zip(cb)
                        .map(|(x, y)| x.re * y.re + x.im * y.im)
                        .sum();
                    acc[a * p + b] += re;
                }
            }
        }
    }
}

/// `∂μ[n]/∂η` as an `N_r × (6K+5)` matrix, columns in [`ParamLayout`] order, 1-based `n`.
///
/// Every column carries the subcarrier phase `e^{j2πB(n/N)τ_i}` of its path, and the
/// receive steering vector of path `i` is `α_RX(θ_RX,i)`.
pub fn mu_derivatives(
    realization: &ChannelRealization,
    phases: &PhaseProfile,
    n: usize,
) -> DMatrix<Complex64> {
    let model = SignalModel::new(realization, phases);
    let nr = realization.a_rx[0].len();
    let mut buf = vec![Complex64::ZERO; nr * model.layout.len()];
    model.derivatives_into(n, &mut buf);
    DMatrix::from_vec(nr, model.layout.len(), buf)
}

/// `[J_η]_{ab} = (2 P_TX / (N_0 B)) Σ_{n=1}^{N} Re{∂μ^H[n]/∂η_a ∂μ[n]/∂η_b}`.
///
/// Subcarriers are accumulated in fixed chunks (in parallel with the `parallel`
/// feature) and the chunk sums are added in order, so the result is bit-identical
/// across thread counts.
pub fn fim_eta(realization: &ChannelRealization, phases: &PhaseProfile) -> DMatrix<f64> {
    let model = SignalModel::new(realization, phases);
    let p = model.layout.len();
    let n_total = realization.subcarriers;
    let chunks = n_total.div_ceil(SUBCARRIER_CHUNK);
    let partials = par::map_range(chunks, |c| {
        let start = 1 + c * SUBCARRIER_CHUNK;
        let end = (start + SUBCARRIER_CHUNK).min(n_total + 1);
        let mut acc = vec![0.0; p * p];
        model.gram(start..end, &mut acc);
        acc
    });
    let mut sum = vec![0.0; p * p];
    for part in &partials {
        for (s, v) in sum.iter_mut().zip(part) {
            *s += v;
        }
    }
    let scale = realization.fim_scale;
    DMatrix::from_fn(p, p, |a, b| {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        scale * sum[lo * p + hi]
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FimMode {
    /// `J = T J_η Tᵀ` with the gain columns of `T` identically zero (gains treated as known).
    #[default]
    PaperLiteral,
    /// Effective FIM: the complex gains are nuisance parameters and are eliminated by
    /// a Schur complement.
    Efim,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionBounds {
    pub j: Matrix3<f64>,
    pub peb: f64,
    pub reb: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FisherResult {
    pub j_eta: DMatrix<f64>,
    pub t: JacobianT,
    pub j: Matrix3<f64>,
    pub peb: f64,
    pub reb: f64,
    pub mode: FimMode,
}

fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn singular(condition: f64) -> Error {
    Error::SingularFim { condition }
}

fn condition_number(m: &Matrix3<f64>) -> f64 {
    let eig = SymmetricEigen::new(*m).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if min <= 0.0 || !min.is_finite() || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Maps `J_η` to the `(p_x, p_y, α)` domain and extracts
/// `PEB = √tr([J⁻¹]_{1:2,1:2})` and `REB = √[J⁻¹]_{3,3}`.
pub fn position_fim(j_eta: &DMatrix<f64>, t: &JacobianT, mode: FimMode) -> Result<PositionBounds> {
    let t = &t.t;
    let p = j_eta.nrows();
    if t.nrows() != 3 || t.ncols() != p || j_eta.ncols() != p {
        return Err(Error::Config("J_eta and T dimensions do not agree".into()));
    }
    let j_full = match mode {
        FimMode::PaperLiteral => symmetrize(&(t * j_eta * t.transpose())),
        FimMode::Efim => {
            let gains = ParamLayout::new((p - 5) / 6).gains();
            let g = gains.len();
            let mut t_aug = DMatrix::zeros(3 + g, p);
            t_aug.view_mut((0, 0), (3, p)).copy_from(t);
            for (row, col) in gains.enumerate() {
                t_aug[(3 + row, col)] = 1.0;
            }
            let aug = symmetrize(&(&t_aug * j_eta * t_aug.transpose()));
            let jpp = aug.view((0, 0), (3, 3)).into_owned();
            let jph = aug.view((0, 3), (3, g)).into_owned();
            let jhh = aug.view((3, 3), (g, g)).into_owned();
            let chol = jhh.cholesky().ok_or(singular(f64::INFINITY))?;
            let correction = &jph * chol.solve(&jph.transpose());
            symmetrize(&(jpp - correction))
        }
    };
    let j = Matrix3::from_fn(|r, c| j_full[(r, c)]);
    position_bounds(j)
}

/// PEB/REB from a 3×3 position-domain FIM, with the condition-number guard.
pub fn position_bounds(j: Matrix3<f64>) -> Result<PositionBounds> {
    let cond = condition_number(&j);
    if cond.is_nan() || cond > MAX_CONDITION {
        return Err(singular(cond));
    }
    let inv = j.cholesky().ok_or(singular(cond))?.inverse();
    let peb = (inv[(0, 0)] + inv[(1, 1)]).sqrt();
    let reb = inv[(2, 2)].sqrt();
    if !(peb.is_finite() && reb.is_finite()) {
        return Err(singular(cond));
    }
    Ok(PositionBounds { j, peb, reb })
}

/// Precomputed geometry, channel and Jacobian for repeated bound evaluations
/// under different phase profiles.
#[derive(Debug, Clone)]
pub struct BoundsEvaluator {
    pub geometry: GeometryOut,
    pub realization: ChannelRealization,
    pub t: JacobianT,
    pub mode: FimMode,
    num_phases: Vec<usize>,
}

impl BoundsEvaluator {
    pub fn new(scenario: &Scenario, mode: FimMode) -> Result<Self> {
        let geometry = compute_geometry(scenario)?;
        let realization = ChannelRealization::new(scenario, &geometry)?;
        Self::from_parts(scenario, geometry, realization, mode)
    }

    pub fn from_parts(
        scenario: &Scenario,
        geometry: GeometryOut,
        realization: ChannelRealization,
        mode: FimMode,
    ) -> Result<Self> {
        let t = jacobian_t(scenario)?;
        Ok(BoundsEvaluator {
            geometry,
            realization,
            t,
            mode,
            num_phases: scenario.ris.iter().map(|p| p.elements()).collect(),
        })
    }

    pub fn evaluate(&self, phases: &PhaseProfile) -> Result<FisherResult> {
        let shape_ok = phases.theta.len() == self.num_phases.len()
            && phases
                .theta
                .iter()
                .zip(&self.num_phases)
                .all(|(t, &n)| t.len() == n);
        if !shape_ok {
            return Err(Error::Config(
                "phase profile shape does not match the RIS panels".into(),
            ));
        }
        let j_eta = fim_eta(&self.realization, phases);
        let bounds = position_fim(&j_eta, &self.t, self.mode)?;
        Ok(FisherResult {
            j_eta,
            t: self.t.clone(),
            j: bounds.j,
            peb: bounds.peb,
            reb: bounds.reb,
            mode: self.mode,
        })
    }

    /// PEB and REB only; skips cloning `T` into a [`FisherResult`].
    pub fn bounds(&self, phases: &PhaseProfile) -> Result<PositionBounds> {
        let j_eta = fim_eta(&self.realization, phases);
        position_fim(&j_eta, &self.t, self.mode)
    }
}

/// One-shot PEB/REB for a scenario and phase profile.
pub fn evaluate_bounds(
    scenario: &Scenario,
    phases: &PhaseProfile,
    mode: FimMode,
) -> Result<FisherResult> {
    phases.check(scenario)?;
    BoundsEvaluator::new(scenario, mode)?.evaluate(phases)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{beam_aligned_phases, random_phases};

    fn small() -> Scenario {
        let mut s = Scenario::reference().with_ris_side(4);
        s.radio.tx_antennas = 8;
        s.radio.rx_antennas = 4;
        s.radio.subcarriers = 16;
        s
    }

    #[test]
    fn layout_blocks_tile_the_vector() {
        for k in 0..5 {
            let l = ParamLayout::new(k);
            let mut seen = vec![false; l.len()];
            let mut mark = |i: usize| {
                assert!(!seen[i]);
                seen[i] = true;
            };
            for i in 0..=k {
                mark(l.tau(i));
                mark(l.theta_rx(i));
                mark(l.h_re(i));
                mark(l.h_im(i));
            }
            mark(l.theta_tx0());
            for j in 0..k {
                mark(l.phi_a(j));
                mark(l.phi_e(j));
            }
            assert!(seen.into_iter().all(|s| s));
        }
    }

    #[test]
    fn params_set_get_roundtrip() {
        let s = small();
        let g = compute_geometry(&s).unwrap();
        let r = ChannelRealization::new(&s, &g).unwrap();
        let mut params = ChannelParams::from_model(&g, &r);
        assert_eq!(params.to_vec().len(), 23);
        for m in 0..23 {
            params.set(m, m as f64 + 0.5);
        }
        let v = params.to_vec();
        assert!(v.iter().enumerate().all(|(m, &x)| x == m as f64 + 0.5));
    }

    #[test]
    fn imaginary_gain_column_is_j_times_real() {
        let s = small();
        let g = compute_geometry(&s).unwrap();
        let r = ChannelRealization::new(&s, &g).unwrap();
        let phases = random_phases(&s, 3);
        let l = ParamLayout::new(3);
        for n in [1, 9, 16] {
            let d = mu_derivatives(&r, &phases, n);
            for i in 0..=3 {
                let re = d.column(l.h_re(i)) * J;
                assert!((re - d.column(l.h_im(i))).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn zero_gains_kill_kinematic_columns() {
        let mut s = small();
        s.los_gain = Complex64::ZERO;
        for p in &mut s.ris {
            p.gain = Complex64::ZERO;
        }
        let g = compute_geometry(&s).unwrap();
        let r = ChannelRealization::new(&s, &g).unwrap();
        let d = mu_derivatives(&r, &random_phases(&s, 1), 5);
        let l = ParamLayout::new(3);
        for m in 0..l.h_re(0) {
            assert!(d.column(m).iter().all(|z| z.norm() == 0.0), "column {m}");
        }
        assert!(d.column(l.h_re(0)).norm() > 0.0);
    }

    #[test]
    fn fim_dimension_and_symmetry() {
        let s = small();
        let g = compute_geometry(&s).unwrap();
        let r = ChannelRealization::new(&s, &g).unwrap();
        let j = fim_eta(&r, &beam_aligned_phases(&s, &g));
        assert_eq!(j.shape(), (23, 23));
        assert_eq!(j, j.transpose());
    }

    #[test]
    fn fim_scales_linearly_with_power() {
        let s = small();
        let phases = random_phases(&s, 2);
        let a = evaluate_bounds(&s, &phases, FimMode::PaperLiteral).unwrap();
        let b = evaluate_bounds(&s.with_tx_power(2.0 * s.radio.tx_power_w), &phases, FimMode::PaperLiteral)
            .unwrap();
        for (x, y) in a.j_eta.iter().zip(b.j_eta.iter()) {
            assert!((2.0 * x - y).abs() <= 1e-14 * y.abs());
        }
    }

    #[test]
    fn identity_fim_bounds() {
        let b = position_bounds(Matrix3::identity()).unwrap();
        assert!((b.peb - 2f64.sqrt()).abs() < 1e-15);
        assert!((b.reb - 1.0).abs() < 1e-15);
    }

    #[test]
    fn diagonal_fim_bounds() {
        let b = position_bounds(Matrix3::from_diagonal(&nalgebra::Vector3::new(4.0, 4.0, 1.0 / 9.0)))
            .unwrap();
        assert!((b.peb - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((b.reb - 3.0).abs() < 1e-14);
    }

    #[test]
    fn ill_conditioned_fim_is_rejected() {
        let j = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, 1e-13));
        assert!(matches!(position_bounds(j), Err(Error::SingularFim { .. })));
        let j = Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, 0.0));
        assert!(matches!(position_bounds(j), Err(Error::SingularFim { .. })));
    }

    #[test]
    fn los_only_is_identifiable_with_known_gain() {
        let s = Scenario::reference().with_active_ris(0);
        let r = evaluate_bounds(&s, &PhaseProfile::zeros(&s), FimMode::PaperLiteral).unwrap();
        assert!(r.peb > 0.0 && r.reb > 0.0);
    }

    #[test]
    fn los_only_efim_is_singular() {
        // With h_0 unknown, θ_TX,0 only scales the whole path by a complex scalar and
        // is absorbed by the gain; τ_0 and θ_RX,0 cannot pin down three unknowns.
        let s = Scenario::reference().with_active_ris(0);
        let r = evaluate_bounds(&s, &PhaseProfile::zeros(&s), FimMode::Efim);
        assert!(matches!(r, Err(Error::SingularFim { .. })));
    }

    #[test]
    fn efim_never_reports_smaller_peb() {
        let s = small();
        for seed in 0..5 {
            let phases = random_phases(&s, seed);
            let paper = evaluate_bounds(&s, &phases, FimMode::PaperLiteral).unwrap();
            let efim = evaluate_bounds(&s, &phases, FimMode::Efim).unwrap();
            assert!(efim.peb >= paper.peb - 1e-12);
            assert!(efim.reb >= paper.reb - 1e-12);
        }
    }

    #[test]
    fn wrong_phase_shape_is_config_error() {
        let s = small();
        let ev = BoundsEvaluator::new(&s, FimMode::PaperLiteral).unwrap();
        let bad = PhaseProfile::zeros(&s.with_active_ris(2));
        assert!(matches!(ev.evaluate(&bad), Err(Error::Config(_))));
    }
}
