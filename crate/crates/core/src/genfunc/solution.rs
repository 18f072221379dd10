use crate::error::{Error, Result};
use crate::grid::AklGrid;
use crate::moment_ode::{ln_factorials, ClosureFactors};
use crate::series::{sample_times, SeriesMeta, Source, TimeSeries};

use super::flow::{build_flow, growth_integral, CharacteristicFlow};
use super::steady::{solve_factors, FactorMethod};
use super::GenFuncPoint;

/// `Q(x, y, t) = exp(c0 + c1 (x-1) + c2 (y-1))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpAffine {
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
}

/// Closed-form generating function for constant closure factors, starting
/// from `Q(x, y, 0) = exp(κ(x + y - 2)/2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnalyticSolution {
    pub kappa: f64,
    pub p: f64,
    pub factors: ClosureFactors,
    pub flow: CharacteristicFlow,
}

impl AnalyticSolution {
    pub fn new(kappa: f64, p: f64, factors: ClosureFactors) -> Result<Self> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(Error::invalid("kappa", format!("must be positive, got {kappa}")));
        }
        let flow = build_flow(p, factors)?;
        Ok(AnalyticSolution { kappa, p, factors, flow })
    }

    /// Solution with the self-consistent stationary factors `α = β = γ = γ*`.
    pub fn with_steady_factors(kappa: f64, p: f64) -> Result<Self> {
        let factors = solve_factors(kappa, p, FactorMethod::ClosedForm)?.factors;
        Self::new(kappa, p, factors)
    }

    fn source_weight(&self) -> f64 {
        0.5 * self.p * self.factors.gamma
    }

    /// Exponent coefficients at time `t`, from
    ///
    /// ```text
    /// c(t) = e^{-Mᵀt} (κ/2)(1, 1) + (pγ/2) ∫₀ᵗ e^{-Mᵀu} du e₁
    /// ```
    ///
    /// which only involves decaying exponentials for the nonnegative spectrum of `M`.
    pub fn coefficients(&self, t: f64) -> ExpAffine {
        let decay = self.flow.spectral(|l| (-l * t).exp());
        let accumulated = self.flow.spectral(|l| growth_integral(-l, t));
        let (h, w) = (0.5 * self.kappa, self.source_weight());
        ExpAffine {
            // Q(1, 1, t) = 1 for every t
            c0: 0.0,
            c1: h * (decay.m11 + decay.m21) + w * accumulated.m11,
            c2: h * (decay.m12 + decay.m22) + w * accumulated.m12,
        }
    }

    /// `(dc1/dt, dc2/dt)` by differentiating the spectral formulas term by term.
    pub fn coefficient_rates(&self, t: f64) -> [f64; 2] {
        let d_decay = self.flow.spectral(|l| -l * (-l * t).exp());
        let d_accumulated = self.flow.spectral(|l| (-l * t).exp());
        let (h, w) = (0.5 * self.kappa, self.source_weight());
        [
            h * (d_decay.m11 + d_decay.m21) + w * d_accumulated.m11,
            h * (d_decay.m12 + d_decay.m22) + w * d_accumulated.m12,
        ]
    }

    /// Exponent of `Q` written out component by component: the back-traced
    /// label, the initial exponent, and the source term accumulated along
    /// each eigen-direction. Growing and decaying exponentials cancel here, so
    /// this form loses accuracy once `e^{λt}` is large; prefer [`Self::eval_q`].
    pub fn exponent_literal(&self, point: GenFuncPoint) -> f64 {
        let (xi1, xi2) = self.flow.backward(point.t, (point.x, point.y));
        let (d1, d2) = (xi1 - 1.0, xi2 - 1.0);
        let v = &self.flow.vectors;
        // v.m11 = v₁¹, v.m21 = v₁², v.m12 = v₂¹, v.m22 = v₂²
        let [l1, l2] = self.flow.eigenvalues;
        let along1 = v.m11 * (v.m22 * d1 - v.m12 * d2) * growth_integral(l1, point.t);
        let along2 = v.m12 * (v.m11 * d2 - v.m21 * d1) * growth_integral(l2, point.t);
        0.5 * self.kappa * (d1 + d2) + self.source_weight() / self.flow.det_v * (along1 + along2)
    }

    /// `Q(x, y, t)` from the literal characteristic solution.
    pub fn eval_q_literal(&self, point: GenFuncPoint) -> f64 {
        self.exponent_literal(point).exp()
    }

    /// `Q(x, y, t)` from the exponential-affine representation.
    pub fn eval_q(&self, point: GenFuncPoint) -> f64 {
        let c = self.coefficients(point.t);
        (c.c1 * (point.x - 1.0) + c.c2 * (point.y - 1.0)).exp()
    }

    /// Mean active degree `Q_y(1,1,t) / Q(1,1,t)`.
    pub fn gamma_t(&self, t: f64) -> f64 {
        self.coefficients(t).c2
    }

    /// Mean inert degree `Q_x(1,1,t) / Q(1,1,t)`.
    pub fn inert_mean_t(&self, t: f64) -> f64 {
        self.coefficients(t).c1
    }

    /// `(Q_yy/Q_y, Q_xy/Q_x, Q_y/Q)` at `(1, 1, t)` from closed-form derivatives.
    pub fn closure_ratios(&self, t: f64) -> ClosureFactors {
        let c = self.coefficients(t);
        let q = c.c0.exp();
        let (qx, qy) = (c.c1 * q, c.c2 * q);
        let (qyy, qxy) = (c.c2 * c.c2 * q, c.c1 * c.c2 * q);
        let ratio = |n: f64, d: f64| if d == 0.0 { 0.0 } else { n / d };
        ClosureFactors { alpha: ratio(qyy, qy), beta: ratio(qxy, qx), gamma: ratio(qy, q) }
    }

    /// Taylor coefficient of `x^k y^l`: a product of Poisson masses.
    pub fn analytic_akl(&self, k: usize, l: usize, t: f64) -> f64 {
        let c = self.coefficients(t);
        let lf = ln_factorials(k.max(l));
        poisson_mass(c.c1, k, lf[k]) * poisson_mass(c.c2, l, lf[l])
    }

    pub fn analytic_grid(&self, t: f64, k_max: usize) -> AklGrid {
        let c = self.coefficients(t);
        let lf = ln_factorials(k_max);
        let px: Vec<f64> = (0..=k_max).map(|k| poisson_mass(c.c1, k, lf[k])).collect();
        let py: Vec<f64> = (0..=k_max).map(|l| poisson_mass(c.c2, l, lf[l])).collect();
        AklGrid::from_fn(k_max, |k, l| px[k] * py[l])
    }

    /// `|Q_t - RHS|` for the generating-function PDE
    ///
    /// ```text
    /// Q_t = (p̄β/2)(y-x) Q_x + [(p̄(1+α)/2)(x-y) + (p/2)(x-y) + (p/2)(1-y)] Q_y + (pγ/2)(x-1) Q
    /// ```
    pub fn pde_residual(&self, point: GenFuncPoint) -> f64 {
        let GenFuncPoint { x, y, t } = point;
        let c = self.coefficients(t);
        let [r1, r2] = self.coefficient_rates(t);
        let q = self.eval_q(point);
        let (qx, qy) = (c.c1 * q, c.c2 * q);
        let qt = (r1 * (x - 1.0) + r2 * (y - 1.0)) * q;

        let ClosureFactors { alpha, beta, gamma } = self.factors;
        let p = self.p;
        let pbar = 1.0 - p;
        let rhs = 0.5 * pbar * beta * (y - x) * qx
            + (0.5 * pbar * (1.0 + alpha) * (x - y) + 0.5 * p * (x - y) + 0.5 * p * (1.0 - y)) * qy
            + 0.5 * p * gamma * (x - 1.0) * q;
        (qt - rhs).abs()
    }

    pub fn series(&self, t_end: f64, interval: f64) -> TimeSeries {
        let meta = SeriesMeta { p: self.p, kappa: self.kappa, replicate: 0, mode: "closed-form".to_owned() };
        let mut series = TimeSeries::new(Source::Analytic, meta);
        for t in sample_times(t_end, interval) {
            series.push(t, self.gamma_t(t).max(0.0));
        }
        series
    }
}

fn poisson_mass(mean: f64, k: usize, ln_k_factorial: f64) -> f64 {
    if k == 0 {
        (-mean).exp()
    } else if mean <= 0.0 {
        0.0
    } else {
        (-mean + k as f64 * mean.ln() - ln_k_factorial).exp()
    }
}
