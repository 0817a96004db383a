//! Space-curve quantum control: binormal curves, error curves and the DCG
//! designers.

mod error_curve;
mod geometry;
mod hadamard;
mod identity;
mod robust;

pub use error_curve::{
    boundary_tangent_target, curve_endpoint, error_curve_from_pulse, CurveEndpoint, TangentTarget, TargetGate,
    DEFAULT_SUBSTEP_NS,
};
pub use geometry::{
    angular_rate, curve_from_binormal, frenet_from_tangent, geodesic_curvature, planar_from_sphere, project_curve,
    stereographic_project, BinormalCurve, ErrorCurve, PlanarCurve,
};
pub use identity::{
    binormal_speed, block_residual, build_identity_binormal, design_identity, projected_area_check, solve_block_times,
    BlockOrder, DesignNoise, IdentityBinormal, IdentityDcgParams, IdentityDesign, IdentityDesignOptions, IdentityShape,
};
pub use robust::{expected_fidelity, expected_infidelity, infidelity_vs_sigma, DEFAULT_QUADRATURE_ORDER};
pub use hadamard::{design_hadamard, HadamardDcgParams, HadamardDesign, HadamardDesignOptions};
