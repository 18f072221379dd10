use crate::error::{Error, Result};
use crate::moment_ode::ClosureFactors;

use super::solution::AnalyticSolution;

/// Horizon at which the fixed-point iteration reads off the stationary moments.
pub const FIXED_POINT_HORIZON: f64 = 1e3;
pub const FIXED_POINT_TOLERANCE: f64 = 1e-10;
pub const FIXED_POINT_MAX_ITERATIONS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FactorMethod {
    ClosedForm,
    FixedPoint,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FactorSolution {
    pub factors: ClosureFactors,
    pub iterations: usize,
    /// `(κ - (1+p)/(1-p)) / 2` before clamping.
    pub unclamped: f64,
}

fn check_p(p: f64) -> Result<()> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::invalid("p", format!("stationary state needs 0 <= p < 1, got {p}")));
    }
    Ok(())
}

/// `(κ - (1+p)/(1-p)) / 2`, negative beyond the transition.
pub fn steady_gamma_unclamped(kappa: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    Ok(0.5 * (kappa - (1.0 + p) / (1.0 - p)))
}

/// Stationary mean active degree, clamped to 0 on the fragmented side.
pub fn steady_gamma(kappa: f64, p: f64) -> Result<f64> {
    steady_gamma_unclamped(kappa, p).map(|g| g.max(0.0))
}

/// Rewiring probability at which the stationary active density vanishes.
pub fn critical_p(kappa: f64) -> f64 {
    ((kappa - 1.0) / (kappa + 1.0)).max(0.0)
}

/// Self-consistent closure factors. The fixed-point route iterates
/// `g <- κ Q_y / (Q_x + Q_y)` at `(1, 1, T)` with factors `(g, g, g)`, i.e.
/// rescales the stationary active degree so that inert and active degrees
/// add up to the mean degree.
pub fn solve_factors(kappa: f64, p: f64, method: FactorMethod) -> Result<FactorSolution> {
    let unclamped = steady_gamma_unclamped(kappa, p)?;
    match method {
        FactorMethod::ClosedForm => Ok(FactorSolution {
            factors: ClosureFactors::uniform(unclamped.max(0.0)),
            iterations: 0,
            unclamped,
        }),
        FactorMethod::FixedPoint => {
            let mut g = 0.5 * kappa;
            let mut delta = f64::INFINITY;
            for iteration in 1..=FIXED_POINT_MAX_ITERATIONS {
                let sol = AnalyticSolution::new(kappa, p, ClosureFactors::uniform(g))?;
                let c = sol.coefficients(FIXED_POINT_HORIZON);
                let next = kappa * c.c2 / (c.c1 + c.c2);
                delta = (next - g).abs();
                g = next;
                if delta < FIXED_POINT_TOLERANCE {
                    return Ok(FactorSolution { factors: ClosureFactors::uniform(g), iterations: iteration, unclamped });
                }
            }
            Err(Error::NotConverged { iterations: FIXED_POINT_MAX_ITERATIONS, last: g, delta })
        }
    }
}
