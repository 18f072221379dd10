//! Generating-function layer: transform identities, the characteristic flow
//! of the first-order PDE for `Q(x, y, t)`, and its closed-form solution.

mod flow;
mod mat2;
mod solution;
mod steady;
mod transform;

pub use flow::{build_flow, flow_matrix, growth_integral, CharacteristicFlow, MIN_EIGENVECTOR_DET};
pub use mat2::{Eigen2, Mat2};
pub use solution::{AnalyticSolution, ExpAffine};
pub use steady::{
    critical_p, solve_factors, steady_gamma, steady_gamma_unclamped, FactorMethod, FactorSolution,
    FIXED_POINT_HORIZON, FIXED_POINT_MAX_ITERATIONS, FIXED_POINT_TOLERANCE,
};
pub use transform::{coefficients_from_torus, transform_identity_check, GeneratingPolynomial, TransformTerm};

/// A point `(x, y, t)` of the generating function's domain; `x` marks inert
/// links, `y` active links.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenFuncPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl GenFuncPoint {
    pub const fn new(x: f64, y: f64, t: f64) -> Self {
        GenFuncPoint { x, y, t }
    }
}
