use std::fmt::Write as _;

use nalgebra::{Vector2, Vector3};

use crate::error::{Error, Result};
use crate::fmt::csv_row;
use crate::qcore::Unitary2;

/// Converts a frequency in MHz to an angular rate in rad/ns.
pub fn angular_rate(mhz: f64) -> f64 {
    2.0 * std::f64::consts::PI * mhz * 1e-3
}

/// A closed-form sampled planar curve on a uniform, dimensionless parameter grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarCurve {
    points: Vec<Vector2<f64>>,
}

impl PlanarCurve {
    pub const MIN_SAMPLES: usize = 16;

    pub fn new(points: Vec<Vector2<f64>>) -> Result<Self> {
        if points.len() < Self::MIN_SAMPLES {
            return Err(Error::invalid(format!(
                "planar curve needs at least {} samples, got {}",
                Self::MIN_SAMPLES,
                points.len()
            )));
        }
        if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::invalid("planar curve has non-finite points"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[Vector2<f64>] {
        &self.points
    }
}

/// Unit vectors `b(t)` on a uniform time grid (ns).
#[derive(Debug, Clone, PartialEq)]
pub struct BinormalCurve {
    dt: f64,
    points: Vec<Vector3<f64>>,
}

impl BinormalCurve {
    pub fn new(dt: f64, points: Vec<Vector3<f64>>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("time step must be > 0, got {dt}")));
        }
        if let Some(i) = points.iter().position(|b| (b.norm() - 1.0).abs() > 1e-9) {
            return Err(Error::invalid(format!("binormal sample {i} is not a unit vector")));
        }
        Ok(Self { dt, points })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn points(&self) -> &[Vector3<f64>] {
        &self.points
    }

    pub fn duration(&self) -> f64 {
        self.dt * (self.points.len().saturating_sub(1)) as f64
    }

    /// `t,bx,by,bz`.
    pub fn to_csv(&self) -> String {
        vectors_csv("t_ns,bx,by,bz", self.dt, &self.points)
    }

    /// Signed areas enclosed by the projections onto the yz, zx and xy planes.
    pub fn projected_areas(&self) -> Vector3<f64> {
        projected_areas(&self.points)
    }

    /// First derivative by central differences (five-point in the interior,
/// one-sided second order at the ends).
    pub fn derivative(&self) -> Vec<Vector3<f64>> {
        first_derivative(&self.points, self.dt)
    }
}

/// A sampled error curve `r(t)` (ns) and its tangent `ṙ(t)`.
#[derive(Debug, Clone)]
pub struct ErrorCurve {
    pub dt: f64,
    pub r: Vec<Vector3<f64>>,
    pub tangent: Vec<Vector3<f64>>,
    /// `U0(t_f)` when the curve was generated from a pulse.
    pub final_unitary: Option<Unitary2>,
    /// `|r(t_f) − r(0)|` in ns.
    pub closure_residual: f64,
    /// `|ṙ(t_f) − target|`, filled in by [`super::boundary_tangent_target`]
    /// callers; zero when not applicable.
    pub boundary_mismatch: f64,
}

impl ErrorCurve {
    pub fn end(&self) -> Vector3<f64> {
        self.r.last().copied().unwrap_or_else(Vector3::zeros) - self.r.first().copied().unwrap_or_else(Vector3::zeros)
    }

    pub fn duration(&self) -> f64 {
        self.dt * (self.r.len().saturating_sub(1)) as f64
    }

    /// Largest deviation of `|ṙ|` from 1.
    pub fn speed_defect(&self) -> f64 {
        self.tangent.iter().map(|t| (t.norm() - 1.0).abs()).fold(0.0, f64::max)
    }

    /// `t,rx,ry,rz`.
    pub fn to_csv(&self) -> String {
        vectors_csv("t_ns,rx,ry,rz", self.dt, &self.r)
    }
}

fn vectors_csv(header: &str, dt: f64, v: &[Vector3<f64>]) -> String {
    let mut out = format!("{header}\n");
    for (k, p) in v.iter().enumerate() {
        let _ = writeln!(out, "{}", csv_row(&[k as f64 * dt, p.x, p.y, p.z]));
    }
    out
}

/// Inverse stereographic projection from the south pole:
/// `b = (4p, 4 − |p|²)/(4 + |p|²)`, so the radius-2 circle lands on the equator.
pub fn stereographic_project(p: Vector2<f64>) -> Vector3<f64> {
    let q = p.norm_squared();
    let d = 4.0 + q;
    Vector3::new(4.0 * p.x / d, 4.0 * p.y / d, (4.0 - q) / d)
}

/// `b_s = 2(b_x, b_y)/(1 + b_z)`.
pub fn planar_from_sphere(b: Vector3<f64>) -> Vector2<f64> {
    Vector2::new(b.x, b.y) * (2.0 / (1.0 + b.z))
}

pub fn project_curve(c: &PlanarCurve, dt: f64) -> Result<BinormalCurve> {
    BinormalCurve::new(dt, c.points.iter().map(|p| stereographic_project(*p)).collect())
}

pub(crate) fn first_derivative(x: &[Vector3<f64>], h: f64) -> Vec<Vector3<f64>> {
    let n = x.len();
    if n < 2 {
        return vec![Vector3::zeros(); n];
    }
    if n == 2 {
        let d = (x[1] - x[0]) / h;
        return vec![d, d];
    }
    (0..n)
        .map(|i| match i {
            0 => (-3.0 * x[0] + 4.0 * x[1] - x[2]) / (2.0 * h),
            _ if i == n - 1 => (3.0 * x[n - 1] - 4.0 * x[n - 2] + x[n - 3]) / (2.0 * h),
            _ if i >= 2 && i + 2 < n => (-x[i + 2] + 8.0 * x[i + 1] - 8.0 * x[i - 1] + x[i - 2]) / (12.0 * h),
            _ => (x[i + 1] - x[i - 1]) / (2.0 * h),
        })
        .collect()
}

/// Five-point second derivative in the interior, three-point next to the ends.
pub(crate) fn second_derivative(x: &[Vector3<f64>], h: f64) -> Vec<Vector3<f64>> {
    let n = x.len();
    let h2 = h * h;
    (0..n)
        .map(|i| {
            if i >= 2 && i + 2 < n {
                (-x[i + 2] + 16.0 * x[i + 1] - 30.0 * x[i] + 16.0 * x[i - 1] - x[i - 2]) / (12.0 * h2)
            } else if i >= 1 && i + 1 < n {
                (x[i + 1] - 2.0 * x[i] + x[i - 1]) / h2
            } else if i == 0 && n >= 4 {
                (2.0 * x[0] - 5.0 * x[1] + 4.0 * x[2] - x[3]) / h2
            } else if n >= 4 {
                (2.0 * x[n - 1] - 5.0 * x[n - 2] + 4.0 * x[n - 3] - x[n - 4]) / h2
            } else {
                Vector3::zeros()
            }
        })
        .collect()
}

pub(crate) fn projected_areas(p: &[Vector3<f64>]) -> Vector3<f64> {
    // ½∮ p × dp, trapezoidal on the closed polygon
    let mut a = Vector3::zeros();
    for w in p.windows(2) {
        a += w[0].cross(&w[1]);
    }
    if let (Some(first), Some(last)) = (p.first(), p.last()) {
        a += last.cross(first);
    }
    a * 0.5
}

/// `r(t) = −(1/ω)∫ b×ḃ dt` with `ω = 2π·ΔE_Z`, trapezoidal quadrature.
pub fn curve_from_binormal(b: &BinormalCurve, dez: f64) -> Result<ErrorCurve> {
    if dez == 0.0 || !dez.is_finite() {
        return Err(Error::invalid("Zeeman gradient must be non-zero"));
    }
    let omega = angular_rate(dez);
    let bd = b.derivative();
    let tangent: Vec<Vector3<f64>> = b.points.iter().zip(&bd).map(|(b, d)| -b.cross(d) / omega).collect();
    let mut r = Vec::with_capacity(tangent.len());
    let mut acc = Vector3::zeros();
    r.push(acc);
    for w in tangent.windows(2) {
        acc += (w[0] + w[1]) * (0.5 * b.dt);
        r.push(acc);
    }
    let closure_residual = (acc - r[0]).norm();
    Ok(ErrorCurve { dt: b.dt, r, tangent, final_unitary: None, closure_residual, boundary_mismatch: 0.0 })
}

/// `κ_g = b̈·(b×ḃ)/|ḃ|³`; multiply by `|ΔE_Z|` to read off `J(t)`.
pub fn geodesic_curvature(b: &BinormalCurve) -> Result<Vec<f64>> {
    let n = b.points.len();
    if n < 3 {
        return Err(Error::invalid("geodesic curvature needs at least 3 samples"));
    }
    let d1 = b.derivative();
    let d2 = second_derivative(&b.points, b.dt);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let speed = d1[i].norm();
        if speed < 1e-8 {
            if i > 0 && i + 1 < n {
                return Err(Error::DegenerateParameterization(format!(
                    "binormal is stationary at sample {i} (|ḃ| = {speed:.3e})"
                )));
            }
            out.push(f64::NAN);
            continue;
        }
        out.push(d2[i].dot(&b.points[i].cross(&d1[i])) / speed.powi(3));
    }
    // Endpoints inherit their neighbours when stationary.
    if out[0].is_nan() {
        out[0] = out[1];
    }
    if out[n - 1].is_nan() {
        out[n - 1] = out[n - 2];
    }
    Ok(out)
}

/// Frenet curvature and torsion (rad/µs) from sampled tangents `ṙ` on a
/// uniform grid, using `κ = |ṙ×r̈|/|ṙ|³` and `τ = (ṙ×r̈)·r⃛/|ṙ×r̈|²`.
pub fn frenet_from_tangent(tangent: &[Vector3<f64>], dt: f64) -> (Vec<f64>, Vec<f64>) {
    let d1 = first_derivative(tangent, dt);
    let d2 = second_derivative(tangent, dt);
    let mut kappa = Vec::with_capacity(tangent.len());
    let mut tau = Vec::with_capacity(tangent.len());
    for i in 0..tangent.len() {
        let c = tangent[i].cross(&d1[i]);
        let speed = tangent[i].norm();
        kappa.push(1e3 * c.norm() / speed.powi(3));
        let c2 = c.norm_squared();
        tau.push(if c2 > 0.0 { 1e3 * c.dot(&d2[i]) / c2 } else { f64::NAN });
    }
    (kappa, tau)
}
