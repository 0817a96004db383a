use std::f64::consts::PI;

use nalgebra::{DVector, Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use super::error_curve::{boundary_tangent_target, curve_endpoint, segments_endpoint, TargetGate};
use super::geometry::{
    angular_rate, planar_from_sphere, projected_areas, stereographic_project, BinormalCurve, PlanarCurve,
};
use super::robust::{expected_fidelity, DEFAULT_QUADRATURE_ORDER};
use crate::error::{Error, Result};
use crate::optim::{levenberg_marquardt, LmOptions};
use crate::pulse::{PulseSequence, Segment, SegmentRole};
use crate::qcore::Unitary2;

/// Which exchange level opens each block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockOrder {
    J2First,
    J1First,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityDcgParams {
    pub j1: f64,
    pub j2: f64,
    pub t1: f64,
    pub t2: f64,
    pub repetitions: usize,
    pub dez: f64,
    pub order: BlockOrder,
}

impl IdentityDcgParams {
    /// (9.7, 0.4) MHz for (60, 121) ns at ΔE_Z = 2.9 MHz, three J2-first blocks.
    pub fn paper() -> Self {
        Self { j1: 9.7, j2: 0.4, t1: 60.0, t2: 121.0, repetitions: 3, dez: 2.9, order: BlockOrder::J2First }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.j1 > 0.0 && self.j2 > 0.0) {
            return Err(Error::invalid("identity DCG exchanges must be > 0"));
        }
        if !(self.t1 > 0.0 && self.t2 > 0.0) {
            return Err(Error::invalid("identity DCG durations must be > 0"));
        }
        if self.repetitions == 0 {
            return Err(Error::invalid("identity DCG needs at least one block"));
        }
        Ok(())
    }

    pub fn block(&self) -> [(f64, f64, SegmentRole); 2] {
        let a = (self.j1, self.t1, SegmentRole::J1);
        let b = (self.j2, self.t2, SegmentRole::J2);
        match self.order {
            BlockOrder::J2First => [b, a],
            BlockOrder::J1First => [a, b],
        }
    }

    pub fn to_pulse(&self) -> Result<PulseSequence> {
        self.validate()?;
        let segs = (0..self.repetitions)
            .flat_map(|_| self.block().map(|(j, t, role)| Segment::new(j, t, role)))
            .collect();
        PulseSequence::new("DCG I", self.dez, segs)
    }

    pub fn total_duration(&self) -> f64 {
        self.repetitions as f64 * (self.t1 + self.t2)
    }
}

/// Rotation axis of a proper rotation matrix (unnormalized sign is irrelevant).
pub(crate) fn rotation_axis(r: &Matrix3<f64>) -> Vector3<f64> {
    let v = Vector3::new(r[(2, 1)] - r[(1, 2)], r[(0, 2)] - r[(2, 0)], r[(1, 0)] - r[(0, 1)]);
    let n = v.norm();
    if n > 1e-12 {
        v / n
    } else {
        Vector3::zeros()
    }
}

/// Block conditions for a `repetitions`-fold identity: the block rotates by a
/// multiple of `2π/repetitions` (not a multiple of 2π) and its error-curve
/// displacement is orthogonal to its rotation axis, so the repeated blocks sum
/// to zero. Returns `(angle residual, axial displacement / block duration)`.
pub fn block_residual(j1: f64, j2: f64, t1: f64, t2: f64, dez: f64, order: BlockOrder, repetitions: usize) -> [f64; 2] {
    let p = IdentityDcgParams { j1, j2, t1, t2, repetitions, dez, order };
    let seg = p.block().map(|(j, t, _)| (j, t));
    let e = segments_endpoint(seg, dez);
    // SU(2) trace: 2cos(α/2); the repeated block is ±I iff n·α/2 ∈ πℤ.
    let half = (0.5 * e.unitary.matrix().trace().re).clamp(-1.0, 1.0).acos();
    let n = repetitions as f64;
    let k = (n * half / PI).round().max(1.0);
    let angle = n * half - k * PI;
    let rot = e.unitary.heisenberg_rotation();
    let axial = rotation_axis(&rot).dot(&e.r) / (t1 + t2);
    [angle, axial]
}

/// Solves the two block conditions for `(t1, t2)` at fixed exchanges.
pub fn solve_block_times(
    j1: f64,
    j2: f64,
    dez: f64,
    order: BlockOrder,
    repetitions: usize,
    seed: (f64, f64),
) -> Result<(f64, f64)> {
    let res = |p: &DVector<f64>| {
        let r = block_residual(j1, j2, p[0].abs(), p[1].abs(), dez, order, repetitions);
        DVector::from_column_slice(&r)
    };
    let opts = LmOptions { max_iterations: 200, tolerance: 1e-15, initial_lambda: 1e-3 };
    let fit = levenberg_marquardt(res, &[seed.0, seed.1], opts)?;
    let (t1, t2) = (fit.params[0].abs(), fit.params[1].abs());
    let resid = fit.residuals.norm();
    if resid > 1e-9 {
        return Err(Error::DesignInfeasible {
            reason: format!("block conditions not met at J1 = {j1}, J2 = {j2}"),
            residual: resid,
            best: vec![j1, j2, t1, t2],
        });
    }
    Ok((t1, t2))
}

/// Noise the designers optimize against, expressed relative to ΔE_Z so that
/// designs scale with the Zeeman gradient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DesignNoise {
    /// σ_hyperfine / ΔE_Z.
    pub sigma_ratio: f64,
    /// σ_J / J.
    pub sigma_j_rel: f64,
}

impl DesignNoise {
    pub fn sigma_dez(&self, dez: f64) -> f64 {
        self.sigma_ratio * dez.abs()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityDesignOptions {
    /// Low exchange level as a multiple of ΔE_Z (held fixed).
    pub j2_ratio: f64,
    /// Search range for J1/ΔE_Z.
    pub j1_ratio_range: (f64, f64),
    pub grid: usize,
    pub noise: DesignNoise,
    pub order: BlockOrder,
    pub repetitions: usize,
    /// Largest acceptable `|r(t_f)|/t_f` and block-condition residual.
    pub tolerance: f64,
}

impl Default for IdentityDesignOptions {
    fn default() -> Self {
        Self {
            j2_ratio: 0.4 / 2.9,
            j1_ratio_range: (1.5, 8.0),
            grid: 40,
            noise: DesignNoise { sigma_ratio: 0.2867 / 2.9, sigma_j_rel: 0.012 },
            order: BlockOrder::J2First,
            repetitions: 3,
            tolerance: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityDesign {
    pub params: IdentityDcgParams,
    /// `|r(t_f)|` in ns.
    pub closure_residual: f64,
    pub boundary_mismatch: f64,
    /// `1 − |Tr U0(t_f)|²/4`.
    pub gate_infidelity: f64,
    /// Expected infidelity under the design noise.
    pub expected_infidelity: f64,
}

/// Dimensionless time seeds (`t·ΔE_Z` in ns·MHz) for the block solver.
const T1_SEEDS: [f64; 5] = [40.0, 90.0, 160.0, 240.0, 330.0];
const T2_SEEDS: [f64; 6] = [80.0, 160.0, 250.0, 350.0, 480.0, 640.0];

/// Every distinct positive solution of the block conditions reachable from the
/// seed grid.
fn block_solutions(j1: f64, j2: f64, dez: f64, order: BlockOrder, reps: usize) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::new();
    for a in T1_SEEDS {
        for b in T2_SEEDS {
            if let Ok((t1, t2)) = solve_block_times(j1, j2, dez, order, reps, (a / dez, b / dez)) {
                if out.iter().all(|(x, y)| (x - t1).abs() + (y - t2).abs() > 1e-6 * (t1 + t2)) {
                    out.push((t1, t2));
                }
            }
        }
    }
    out
}

fn identity_objective(p: &IdentityDcgParams, noise: &DesignNoise) -> Result<f64> {
    let pulse = p.to_pulse()?;
    let f = expected_fidelity(&pulse, &Unitary2::identity(), noise.sigma_dez(p.dez), noise.sigma_j_rel, DEFAULT_QUADRATURE_ORDER);
    Ok(1.0 - f)
}

/// Designs the identity DCG: every candidate satisfies the block conditions
/// exactly (closed error curve, identity propagator); among them, J1 is chosen
/// to minimize the expected infidelity under the design noise, with J2 held at
/// its configured level.
pub fn design_identity(dez: f64, opts: &IdentityDesignOptions) -> Result<IdentityDesign> {
    if !(dez > 0.0) || !dez.is_finite() {
        return Err(Error::invalid(format!("ΔE_Z must be > 0, got {dez}")));
    }
    let (lo, hi) = opts.j1_ratio_range;
    if !(lo > 0.0 && hi > lo) || opts.grid < 2 || !(opts.j2_ratio > 0.0) {
        return Err(Error::invalid("invalid identity design options"));
    }
    let j2 = opts.j2_ratio * dez;
    let make = |j1: f64, (t1, t2): (f64, f64)| IdentityDcgParams {
        j1,
        j2,
        t1,
        t2,
        repetitions: opts.repetitions,
        dez,
        order: opts.order,
    };

    // Coarse scan over J1 with all reachable block solutions.
    let mut best: Option<(f64, IdentityDcgParams)> = None;
    for i in 0..opts.grid {
        let j1 = dez * (lo + (hi - lo) * i as f64 / (opts.grid - 1) as f64);
        for sol in block_solutions(j1, j2, dez, opts.order, opts.repetitions) {
            let p = make(j1, sol);
            let v = identity_objective(&p, &opts.noise)?;
            if best.as_ref().map_or(true, |(b, _)| v < *b) {
                best = Some((v, p));
            }
        }
    }
    let Some((_, coarse)) = best else {
        return Err(Error::DesignInfeasible {
            reason: "no closed identity block found in the J1 search range".into(),
            residual: f64::INFINITY,
            best: vec![],
        });
    };

    // Golden-section refinement of J1 along the branch, warm-started.
    let step = dez * (hi - lo) / (opts.grid - 1) as f64;
    let eval = |j1: f64| -> Option<(f64, IdentityDcgParams)> {
        let sol = solve_block_times(j1, j2, dez, opts.order, opts.repetitions, (coarse.t1, coarse.t2)).ok()?;
        let p = make(j1, sol);
        identity_objective(&p, &opts.noise).ok().map(|v| (v, p))
    };
    let (mut a, mut b) = ((coarse.j1 - step).max(dez * lo * 0.5), coarse.j1 + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let val = |x: f64| eval(x).map_or(f64::INFINITY, |(v, _)| v);
    let (mut fc, mut fd) = (val(c), val(d));
    while (b - a) > 1e-7 * dez {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = val(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = val(d);
        }
    }
    let coarse_value = identity_objective(&coarse, &opts.noise)?;
    let params = match eval(0.5 * (a + b)) {
        Some((v, p)) if v <= coarse_value => p,
        _ => coarse,
    };
    summarize_identity(params, &opts.noise, opts.tolerance)
}

fn summarize_identity(params: IdentityDcgParams, noise: &DesignNoise, tolerance: f64) -> Result<IdentityDesign> {
    let pulse = params.to_pulse()?;
    let e = curve_endpoint(&pulse);
    let tangent = boundary_tangent_target(TargetGate::Identity, &e.unitary);
    let gate_infidelity = (1.0 - Unitary2::identity().overlap_fidelity(&e.unitary)).max(0.0);
    let closure_residual = e.r.norm();
    let expected_infidelity = identity_objective(&params, noise)?;
    let design = IdentityDesign {
        params,
        closure_residual,
        boundary_mismatch: tangent.mismatch,
        gate_infidelity,
        expected_infidelity,
    };
    if closure_residual > tolerance * pulse.total_duration() || tangent.mismatch > tolerance.sqrt() {
        return Err(Error::DesignInfeasible {
            reason: "identity design does not close".into(),
            residual: closure_residual / pulse.total_duration(),
            best: vec![params.j1, params.j2, params.t1, params.t2],
        });
    }
    Ok(design)
}

/// Shape of the identity binormal: exchange levels relative to ΔE_Z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IdentityShape {
    pub kappa1: f64,
    pub kappa2: f64,
    pub order: BlockOrder,
    pub repetitions: usize,
}

impl IdentityShape {
    pub fn of(p: &IdentityDcgParams) -> Self {
        Self { kappa1: p.j1 / p.dez, kappa2: p.j2 / p.dez, order: p.order, repetitions: p.repetitions }
    }
}

/// A binormal assembled from a planar fundamental segment and its rotated
/// copies, in the frame whose z axis is the symmetry axis.
#[derive(Debug, Clone)]
pub struct IdentityBinormal {
    pub binormal: BinormalCurve,
    pub planar: PlanarCurve,
    pub params: IdentityDcgParams,
    /// Samples per block.
    pub block_samples: usize,
}

/// Builds the identity binormal for the given shape. The fundamental segment is
/// two arcs of constant geodesic curvature (κ1, κ2) whose arc lengths satisfy
/// the block conditions; its stereographic image is repeated under rotations
/// by the block angle and projected back onto the sphere.
pub fn build_identity_binormal(dez: f64, shape: &IdentityShape, samples_per_segment: usize) -> Result<IdentityBinormal> {
    if !(dez > 0.0) || !dez.is_finite() {
        return Err(Error::invalid(format!("ΔE_Z must be > 0, got {dez}")));
    }
    let infeasible = |reason: &str| Error::DesignInfeasible {
        reason: reason.to_string(),
        residual: f64::INFINITY,
        best: vec![shape.kappa1, shape.kappa2],
    };
    if !(shape.kappa1 > 0.0 && shape.kappa2 > 0.0) || !shape.kappa1.is_finite() || !shape.kappa2.is_finite() {
        return Err(infeasible("shape curvatures must be positive and finite"));
    }
    if shape.repetitions < 2 || (shape.kappa1 - shape.kappa2).abs() < 1e-9 {
        return Err(infeasible("degenerate shape: need two distinct curvature levels and at least two repetitions"));
    }
    let (j1, j2) = (shape.kappa1 * dez, shape.kappa2 * dez);
    let sols = block_solutions(j1, j2, dez, shape.order, shape.repetitions);
    let (t1, t2) = sols
        .into_iter()
        .min_by(|a, b| (a.0 + a.1).total_cmp(&(b.0 + b.1)))
        .ok_or_else(|| infeasible("no arc lengths satisfy the block conditions"))?;
    let params = IdentityDcgParams { j1, j2, t1, t2, repetitions: shape.repetitions, dez, order: shape.order };

    // Uniform time grid over one block.
    let block_t = t1 + t2;
    let n_block = (2 * samples_per_segment.max(8)).max(16);
    let dt = block_t / n_block as f64;
    let segs = params.block().map(|(j, t, _)| (j, t));
    let sample = |t: f64| -> Vector3<f64> {
        // b(t) = −R(t) ẑ with R the Heisenberg rotation of U0(t)
        let mut left = t;
        let mut parts = Vec::with_capacity(2);
        for (j, tau) in segs {
            if left <= 0.0 {
                break;
            }
            parts.push((j, tau.min(left)));
            left -= tau;
        }
        let u = segments_endpoint(parts, dez).unitary;
        -(u.heisenberg_rotation() * Vector3::z())
    };
    let lab: Vec<Vector3<f64>> = (0..=n_block).map(|k| sample(k as f64 * dt)).collect();

    // Symmetry frame: z along the block rotation axis, oriented so the segment
    // keeps away from the projection pole.
    let block_rot = segments_endpoint(segs, dez).unitary.heisenberg_rotation();
    let mut axis = rotation_axis(&block_rot);
    if axis.norm() == 0.0 {
        return Err(infeasible("block has no rotation axis"));
    }
    let lowest = |a: &Vector3<f64>| lab.iter().map(|b| b.dot(a)).fold(f64::INFINITY, f64::min);
    if lowest(&-axis) > lowest(&axis) {
        axis = -axis;
    }
    if lowest(&axis) <= -1.0 + 1e-6 {
        return Err(infeasible("fundamental segment passes through the projection pole"));
    }
    let seed = lab[0] - axis * lab[0].dot(&axis);
    let e1 = if seed.norm() > 1e-9 { seed.normalize() } else { axis.cross(&Vector3::x()).normalize() };
    let e2 = axis.cross(&e1);
    let to_frame = |b: &Vector3<f64>| Vector3::new(b.dot(&e1), b.dot(&e2), b.dot(&axis));

    let segment: Vec<Vector2<f64>> = lab.iter().map(|b| planar_from_sphere(to_frame(b))).collect();
    if self_intersects(&segment[..n_block]) {
        return Err(infeasible("fundamental segment self-intersects"));
    }
    let (p0, pn) = (segment[0], segment[n_block]);
    let turn = (p0.x * pn.y - p0.y * pn.x).atan2(p0.dot(&pn));
    let mut planar = Vec::with_capacity(shape.repetitions * n_block + 1);
    for m in 0..shape.repetitions {
        let (s, c) = (turn * m as f64).sin_cos();
        let rot = Matrix2::new(c, -s, s, c);
        planar.extend(segment[..n_block].iter().map(|p| rot * p));
    }
    planar.push(planar[0]);
    let planar = PlanarCurve::new(planar)?;
    let binormal = BinormalCurve::new(dt, planar.points().iter().map(|p| stereographic_project(*p)).collect())?;
    Ok(IdentityBinormal { binormal, planar, params, block_samples: n_block })
}

/// Projected areas of a closed binormal alongside the bounding-box areas of
/// its projections onto the yz, zx and xy planes.
pub fn projected_area_check(b: &BinormalCurve) -> (Vector3<f64>, Vector3<f64>) {
    let pts = b.points();
    let areas = projected_areas(pts);
    let span = |f: fn(&Vector3<f64>) -> f64| {
        let lo = pts.iter().map(f).fold(f64::INFINITY, f64::min);
        let hi = pts.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
        hi - lo
    };
    let (sx, sy, sz) = (span(|p| p.x), span(|p| p.y), span(|p| p.z));
    (areas, Vector3::new(sy * sz, sz * sx, sx * sy))
}

fn self_intersects(p: &[Vector2<f64>]) -> bool {
    // Decimate, then test all non-adjacent chord pairs.
    let stride = (p.len() / 400).max(1);
    let q: Vec<Vector2<f64>> = p.iter().step_by(stride).copied().collect();
    let cross = |a: Vector2<f64>, b: Vector2<f64>| a.x * b.y - a.y * b.x;
    for i in 0..q.len().saturating_sub(1) {
        for j in (i + 2)..q.len().saturating_sub(1) {
            let (a, b, c, d) = (q[i], q[i + 1], q[j], q[j + 1]);
            let (r, s) = (b - a, d - c);
            let den = cross(r, s);
            if den.abs() < 1e-15 {
                continue;
            }
            let t = cross(c - a, s) / den;
            let u = cross(c - a, r) / den;
            if t > 1e-9 && t < 1.0 - 1e-9 && u > 1e-9 && u < 1.0 - 1e-9 {
                return true;
            }
        }
    }
    false
}

/// Arc length on the sphere per unit time for any pulse-derived binormal.
pub fn binormal_speed(dez: f64) -> f64 {
    angular_rate(dez)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scqc::curve_endpoint;

    #[test]
    fn reference_point_lies_near_the_family() {
        let p = IdentityDcgParams::paper();
        let (t1, t2) = solve_block_times(p.j1, p.j2, p.dez, p.order, 3, (p.t1, p.t2)).unwrap();
        assert!((t1 - 60.0).abs() < 1.5 && (t2 - 121.0).abs() < 1.5, "{t1} {t2}");
        let exact = IdentityDcgParams { t1, t2, ..p }.to_pulse().unwrap();
        let e = curve_endpoint(&exact);
        assert!(e.r.norm() < 1e-6 * exact.total_duration());
        let f = crate::qcore::Unitary2::identity().overlap_fidelity(&e.unitary);
        assert!((f - 1.0).abs() < 1e-12);
    }

    #[test]
    fn design_reproduces_reference_values() {
        let d = design_identity(2.9, &IdentityDesignOptions::default()).unwrap();
        let p = d.params;
        let within = |a: f64, b: f64| ((a - b) / b).abs() < 0.05;
        assert!(within(p.j1, 9.7) && within(p.j2, 0.4) && within(p.t1, 60.0) && within(p.t2, 121.0), "{p:?}");
        assert!(d.closure_residual < 1e-6 * p.total_duration() && d.gate_infidelity < 1e-12);
    }

    #[test]
    fn design_scales_with_zeeman_gradient() {
        let a = design_identity(2.9, &IdentityDesignOptions::default()).unwrap().params;
        let b = design_identity(5.8, &IdentityDesignOptions::default()).unwrap().params;
        assert!((b.j1 / a.j1 - 2.0).abs() < 1e-4 && (b.j2 / a.j2 - 2.0).abs() < 1e-9);
        assert!((b.t1 / a.t1 - 0.5).abs() < 1e-4 && (b.t2 / a.t2 - 0.5).abs() < 1e-4);
    }

    #[test]
    fn binormal_has_vanishing_areas_and_two_levels() {
        let dez = 2.9;
        let shape = IdentityShape { kappa1: 9.7 / dez, kappa2: 0.4 / dez, order: BlockOrder::J2First, repetitions: 3 };
        let built = build_identity_binormal(dez, &shape, 2000).unwrap();
        let (areas, boxes) = projected_area_check(&built.binormal);
        for i in 0..3 {
            assert!(areas[i].abs() < 1e-6 * boxes[i], "axis {i}: {} vs {}", areas[i], boxes[i]);
        }
        let kg = crate::scqc::geodesic_curvature(&built.binormal).unwrap();
        let j: Vec<f64> = kg.iter().map(|k| k * dez).collect();
        let near = |v: f64| j.iter().filter(|x| (**x - v).abs() < 0.01 * v).count();
        assert!(near(9.7) > j.len() / 5 && near(0.4) > j.len() / 3, "{} {}", near(9.7), near(0.4));
    }

    #[test]
    fn degenerate_shapes_are_rejected() {
        let bad = IdentityShape { kappa1: 1.0, kappa2: 1.0, order: BlockOrder::J2First, repetitions: 3 };
        assert!(matches!(build_identity_binormal(2.9, &bad, 100), Err(Error::DesignInfeasible { .. })));
        let bad = IdentityShape { kappa1: -1.0, ..bad };
        assert!(matches!(build_identity_binormal(2.9, &bad, 100), Err(Error::DesignInfeasible { .. })));
    }
}
