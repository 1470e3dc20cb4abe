//! Geometric channel parameters and their derivatives with respect to the MU
//! position and rotation.

use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};
use crate::fim::ParamLayout;
use crate::scenario::{Scenario, MIN_DISTANCE};
use crate::SPEED_OF_LIGHT;

/// Inverse-trig arguments this far outside `[-1, 1]` are clamped as rounding noise.
pub const TRIG_TOLERANCE: f64 = 1e-12;

/// Jacobian denominators below this magnitude are treated as singular.
pub const JACOBIAN_EPS: f64 = 1e-12;

/// Delays and angles of every path. Index 0 of the `(K+1)`-vectors is the LoS path.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryOut {
    pub d0: f64,
    /// BS → RIS_k distances.
    pub d1: Vec<f64>,
    /// RIS_k → MU distances.
    pub d2: Vec<f64>,
    pub tau: Vec<f64>,
    pub theta_tx0: f64,
    /// BS departure angle toward each RIS.
    pub theta_tx_k: Vec<f64>,
    pub theta_rx: Vec<f64>,
    pub phi_in_a: Vec<f64>,
    pub phi_in_e: Vec<f64>,
    pub phi_out_a: Vec<f64>,
    pub phi_out_e: Vec<f64>,
}

impl GeometryOut {
    pub fn num_ris(&self) -> usize {
        self.d1.len()
    }

    /// BS departure angle of path `i` (0 = LoS).
    pub fn theta_tx(&self, i: usize) -> f64 {
        if i == 0 {
            self.theta_tx0
        } else {
            self.theta_tx_k[i - 1]
        }
    }
}

/// Position-domain Jacobian: rows `(p_x, p_y, α)`, columns in channel-parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobianT {
    pub t: DMatrix<f64>,
}

fn checked_asin(x: f64, what: &str) -> Result<f64> {
    Ok(clamp_unit(x, what)?.asin())
}

fn checked_acos(x: f64, what: &str) -> Result<f64> {
    Ok(clamp_unit(x, what)?.acos())
}

fn clamp_unit(x: f64, what: &str) -> Result<f64> {
    if !x.is_finite() || x.abs() > 1.0 + TRIG_TOLERANCE {
        return Err(Error::DegenerateGeometry(format!(
            "{what}: inverse-trig argument {x} outside [-1, 1]"
        )));
    }
    Ok(x.clamp(-1.0, 1.0))
}

fn checked_distance(a: &Vector3<f64>, b: &Vector3<f64>, what: &str) -> Result<f64> {
    let d = (a - b).norm();
    if d < MIN_DISTANCE {
        return Err(Error::DegenerateGeometry(format!("{what} distance {d} m")));
    }
    Ok(d)
}

fn horizontal(dx: f64, dy: f64, what: &str) -> Result<f64> {
    let h = dx.hypot(dy);
    if h < MIN_DISTANCE {
        return Err(Error::DegenerateGeometry(format!(
            "{what}: zero horizontal separation, azimuth undefined"
        )));
    }
    Ok(h)
}

/// Receive angle of arrival for a source at horizontal offset `(u, v)` from the MU
/// (MU minus source) and range `r`.
fn rx_angle(u: f64, v: f64, r: f64, rotation: f64, what: &str) -> Result<f64> {
    let (sin_a, cos_a) = rotation.sin_cos();
    checked_asin((u * cos_a - v * sin_a) / r, what)
}

pub fn compute_geometry(scenario: &Scenario) -> Result<GeometryOut> {
    scenario.validate()?;
    let q = &scenario.bs;
    let p = &scenario.mu;
    let alpha = scenario.rotation;

    let d0 = checked_distance(q, p, "BS-MU")?;
    let k = scenario.num_ris();
    let mut out = GeometryOut {
        d0,
        d1: Vec::with_capacity(k),
        d2: Vec::with_capacity(k),
        tau: Vec::with_capacity(k + 1),
        theta_tx0: checked_asin((p.x - q.x) / d0, "theta_tx0")?,
        theta_tx_k: Vec::with_capacity(k),
        theta_rx: Vec::with_capacity(k + 1),
        phi_in_a: Vec::with_capacity(k),
        phi_in_e: Vec::with_capacity(k),
        phi_out_a: Vec::with_capacity(k),
        phi_out_e: Vec::with_capacity(k),
    };
    out.tau.push(d0 / SPEED_OF_LIGHT);
    out.theta_rx
        .push(rx_angle(p.x - q.x, p.y - q.y, d0, alpha, "theta_rx0")?);

    for (i, panel) in scenario.ris.iter().enumerate() {
        let s = &panel.position;
        let d1 = checked_distance(q, s, &format!("BS-RIS {i}"))?;
        let d2 = checked_distance(p, s, &format!("RIS {i}-MU"))?;
        out.d1.push(d1);
        out.d2.push(d2);
        out.tau.push((d1 + d2) / SPEED_OF_LIGHT);
        out.theta_rx
            .push(rx_angle(p.x - s.x, p.y - s.y, d2, alpha, "theta_rx_k")?);

        // MU side of the surface.
        let h_out = horizontal(p.x - s.x, p.y - s.y, "RIS-MU")?;
        out.phi_out_a
            .push(checked_asin((p.y - s.y) / h_out, "phi_out_a")?);
        out.phi_out_e.push(checked_acos(s.z / d2, "phi_out_e")?);

        // BS side: fixed by the known placement, mirrored from the MU side.
        out.theta_tx_k
            .push(checked_asin((s.x - q.x) / d1, "theta_tx_k")?);
        let h_in = horizontal(q.x - s.x, q.y - s.y, "BS-RIS")?;
        out.phi_in_a.push(checked_asin((q.y - s.y) / h_in, "phi_in_a")?);
        out.phi_in_e
            .push(checked_acos((q.z - s.z) / d1, "phi_in_e")?);
    }
    Ok(out)
}

fn nonzero(x: f64, what: &str) -> Result<f64> {
    if x.is_nan() || x.abs() < JACOBIAN_EPS {
        return Err(Error::SingularJacobian(format!("{what} denominator {x}")));
    }
    Ok(x)
}

/// Derivatives of an `arcsin(((u cos α − v sin α) / r)` receive angle w.r.t.
/// `(p_x, p_y, α)`, where `u, v` are MU-minus-source offsets.
fn rx_angle_derivatives(u: f64, v: f64, r: f64, rotation: f64) -> Result<[f64; 3]> {
    let (sin_a, cos_a) = rotation.sin_cos();
    let r2 = r * r;
    let w = u * cos_a - v * sin_a;
    let den = nonzero((r2 - w * w).max(0.0).sqrt(), "theta_rx")?;
    Ok([
        (cos_a - u * w / r2) / den,
        // d/dp_y of w is −sin α, so both terms carry a minus sign.
        (-sin_a - v * w / r2) / den,
        (-u * sin_a - v * cos_a) / den,
    ])
}

/// Closed-form `∂η/∂(p_x, p_y, α)`.
///
/// Every entry is the exact derivative of the maps in [`compute_geometry`]. Two
/// sign details matter: `∂θ_TX,0/∂p_y` and `∂θ_RX/∂p_y` are negative-signed
/// (`p_y` enters the arcsin argument with a minus after differentiating the norm
/// or via `−sin α`), and `∂φ_out^a` carries `sign(p_x − s_kx)` because `arcsin`
/// folds the azimuth into `[-π/2, π/2]`.
pub fn jacobian_t(scenario: &Scenario) -> Result<JacobianT> {
    // Surfaces the DegenerateGeometry checks.
    compute_geometry(scenario)?;
    let q = &scenario.bs;
    let p = &scenario.mu;
    let alpha = scenario.rotation;
    let k = scenario.num_ris();
    let layout = ParamLayout::new(k);
    let mut t = DMatrix::zeros(3, layout.len());

    // LoS path.
    let (u, v) = (p.x - q.x, p.y - q.y);
    let r = (q - p).norm();
    let r2 = r * r;
    t[(0, layout.tau(0))] = u / r / SPEED_OF_LIGHT;
    t[(1, layout.tau(0))] = v / r / SPEED_OF_LIGHT;

    let lateral = nonzero((r2 - u * u).max(0.0).sqrt(), "theta_tx0")?;
    t[(0, layout.theta_tx0())] = lateral / r2;
    t[(1, layout.theta_tx0())] = -u * v / (lateral * r2);

    let rx = rx_angle_derivatives(u, v, r, alpha)?;
    for (row, val) in rx.into_iter().enumerate() {
        t[(row, layout.theta_rx(0))] = val;
    }

    for (j, panel) in scenario.ris.iter().enumerate() {
        let s = &panel.position;
        let (u, v) = (p.x - s.x, p.y - s.y);
        let r = (p - s).norm();
        let r2 = r * r;
        let path = j + 1;

        t[(0, layout.tau(path))] = u / r / SPEED_OF_LIGHT;
        t[(1, layout.tau(path))] = v / r / SPEED_OF_LIGHT;

        let rx = rx_angle_derivatives(u, v, r, alpha)?;
        for (row, val) in rx.into_iter().enumerate() {
            t[(row, layout.theta_rx(path))] = val;
        }

        let rho2 = nonzero(u * u + v * v, "phi_out_a")?;
        nonzero(u, "phi_out_a (MU in line with RIS along y)")?;
        t[(0, layout.phi_a(j))] = -v * u.signum() / rho2;
        t[(1, layout.phi_a(j))] = u.abs() / rho2;

        let h = s.z;
        let root = nonzero((r2 - h * h).max(0.0).sqrt(), "phi_out_e")?;
        t[(0, layout.phi_e(j))] = h * u / (r2 * root);
        t[(1, layout.phi_e(j))] = h * v / (r2 * root);
    }
    Ok(JacobianT { t })
}
