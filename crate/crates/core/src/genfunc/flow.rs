use crate::error::{Error, Result};
use crate::moment_ode::ClosureFactors;

use super::mat2::Mat2;

/// Smallest admissible `|det V|` for the unit-column eigenvector matrix.
pub const MIN_EIGENVECTOR_DET: f64 = 1e-10;

/// `(e^{λt} - 1) / λ`, continuous through `λ = 0` where it equals `t`.
pub fn growth_integral(lambda: f64, t: f64) -> f64 {
    if lambda == 0.0 {
        t
    } else {
        (lambda * t).exp_m1() / lambda
    }
}

/// Linear flow of the base characteristics in the shifted coordinates
/// `(X, Y) = (x - 1, y - 1)`:
///
/// ```text
/// dX/dt =  (p̄β/2)(X - Y)
/// dY/dt = ((p̄(1+α) + p)/2)(Y - X) + (p/2) Y
/// ```
///
/// with `(1, 1)` the fixed point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharacteristicFlow {
    pub p: f64,
    pub factors: ClosureFactors,
    pub matrix: Mat2,
    pub eigenvalues: [f64; 2],
    /// Unit eigenvectors as columns.
    pub vectors: Mat2,
    pub vectors_inv: Mat2,
    pub det_v: f64,
}

/// The characteristic operator for rewiring probability `p` and constant
/// closure factors.
pub fn flow_matrix(p: f64, f: &ClosureFactors) -> Mat2 {
    let pbar = 1.0 - p;
    let inert = 0.5 * pbar * f.beta;
    let active = 0.5 * (pbar * (1.0 + f.alpha) + p);
    Mat2::new(inert, -inert, -active, active + 0.5 * p)
}

pub fn build_flow(p: f64, factors: ClosureFactors) -> Result<CharacteristicFlow> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
    }
    let matrix = flow_matrix(p, &factors);
    let eig = matrix.eigen().ok_or(Error::DegenerateFlow { det_v: 0.0 })?;
    let det_v = eig.vectors.det();
    if det_v.abs() <= MIN_EIGENVECTOR_DET {
        return Err(Error::DegenerateFlow { det_v });
    }
    let vectors_inv = eig.vectors.inverse().ok_or(Error::DegenerateFlow { det_v })?;
    Ok(CharacteristicFlow { p, factors, matrix, eigenvalues: eig.values, vectors: eig.vectors, vectors_inv, det_v })
}

impl CharacteristicFlow {
    /// `V f(Λ) V⁻¹` for a scalar function applied to the eigenvalues.
    pub fn spectral(&self, f: impl Fn(f64) -> f64) -> Mat2 {
        let [l1, l2] = self.eigenvalues;
        self.vectors * Mat2::diag(f(l1), f(l2)) * self.vectors_inv
    }

    /// `e^{Mt}`.
    pub fn propagator(&self, t: f64) -> Mat2 {
        self.spectral(|l| (l * t).exp())
    }

    /// `∫₀ᵗ e^{Ms} ds`.
    pub fn integrated_propagator(&self, t: f64) -> Mat2 {
        self.spectral(|l| growth_integral(l, t))
    }

    /// Position at time `t` of the characteristic that starts at `(x, y)`.
    pub fn forward(&self, t: f64, (x, y): (f64, f64)) -> (f64, f64) {
        let [dx, dy] = self.propagator(t).mul_vec([x - 1.0, y - 1.0]);
        (1.0 + dx, 1.0 + dy)
    }

    /// Initial label `(ξ₁, ξ₂)` of the characteristic through `(x, y)` at time `t`.
    pub fn backward(&self, t: f64, (x, y): (f64, f64)) -> (f64, f64) {
        self.forward(-t, (x, y))
    }
}
