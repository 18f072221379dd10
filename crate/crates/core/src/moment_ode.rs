//! Truncated active-neighbourhood ODE system for `A[k][l]`.
//!
//! Every cell evolves under seven paired gain/loss fluxes:
//!
//! * (i) the node adopts from an active neighbour, `A[l][k] -> A[k][l]` (full mode only)
//! * (ii) an active neighbour adopts the node's opinion, `(k, l) -> (k+1, l-1)`
//! * (iii) an active neighbour adopts from elsewhere; same shift scaled by `α`
//! * (iv) an inert neighbour adopts from elsewhere, `(k, l) -> (k-1, l+1)` scaled by `β`
//! * (v) the node rewires an active link to a same-opinion node, `(k, l) -> (k+1, l-1)`
//! * (vi) an active neighbour rewires away, `(k, l) -> (k, l-1)`
//! * (vii) some A-node rewires onto the node, `(k, l) -> (k+1, l)` scaled by `γ`
//!
//! `α`, `β`, `γ` close the hierarchy from the grid itself. Sources outside the
//! window read as zero; gains that would land outside it are dropped and
//! reported as leakage.

use crate::error::{Error, Result};
use crate::grid::AklGrid;
use crate::series::{SeriesMeta, Source, TimeSeries};
use crate::FRAGMENTATION_GAMMA;

/// Entries more negative than this are a numerical failure.
pub const NEGATIVITY_TOLERANCE: f64 = 1e-8;
/// Bound on both cumulative leakage and mass drift.
pub const MASS_TOLERANCE: f64 = 1e-6;
/// Warn when the outer two shells carry more than this.
/// State entries smaller than this are set to zero after every step.
pub const UNDERFLOW_FLUSH: f64 = 1e-200;
pub const TAIL_WARNING: f64 = 1e-8;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClosureFactors {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl ClosureFactors {
    pub fn uniform(value: f64) -> Self {
        ClosureFactors { alpha: value, beta: value, gamma: value }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum OdeMode {
    /// All seven terms.
    #[default]
    Full,
    /// Drops term (i), matching the generating-function PDE.
    PdeMatched,
}

impl OdeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OdeMode::Full => "full",
            OdeMode::PdeMatched => "pde-matched",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdeConfig {
    pub p: f64,
    pub k_max: usize,
    pub dt: f64,
    pub t_end: f64,
    pub mode: OdeMode,
    pub sample_interval: f64,
}

impl Default for OdeConfig {
    fn default() -> Self {
        OdeConfig { p: 0.0, k_max: 60, dt: 0.01, t_end: 30.0, mode: OdeMode::Full, sample_interval: 0.1 }
    }
}

impl OdeConfig {
    pub fn new(p: f64, mode: OdeMode, t_end: f64) -> Self {
        OdeConfig { p, mode, t_end, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::invalid("p", format!("must lie in [0, 1], got {}", self.p)));
        }
        if self.k_max < 1 {
            return Err(Error::invalid("k_max", "must be at least 1"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("dt", format!("must be positive, got {}", self.dt)));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::invalid("t_end", format!("must be positive, got {}", self.t_end)));
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return Err(Error::invalid("sample_interval", format!("must be positive, got {}", self.sample_interval)));
        }
        Ok(())
    }
}

pub(crate) fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

/// Product-Poisson initial condition `A[k][l] = e^{-κ} (κ/2)^{k+l} / (k! l!)`,
/// the coefficients of `exp(κ(x + y - 2)/2)`. Returns the grid and the mass
/// truncated away.
pub fn init_grid(kappa: f64, k_max: usize) -> Result<(AklGrid, f64)> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::invalid("kappa", format!("must be positive, got {kappa}")));
    }
    if k_max < 1 {
        return Err(Error::invalid("k_max", "must be at least 1"));
    }
    let half = kappa / 2.0;
    let lf = ln_factorials(k_max);
    let marginal: Vec<f64> = (0..=k_max).map(|k| (-half + k as f64 * half.ln() - lf[k]).exp()).collect();
    let grid = AklGrid::from_fn(k_max, |k, l| marginal[k] * marginal[l]);
    let covered: f64 = marginal.iter().sum();
    let tail = (1.0 - covered * covered).max(0.0);
    Ok((grid, tail))
}

/// `α = Σ(l-1)l·A / Σ l·A`, `β = Σ lk·A / Σ k·A`, `γ = Σ l·A / Σ A`, with
/// vanishing denominators mapping the ratio to 0.
pub fn closure_factors(grid: &AklGrid) -> ClosureFactors {
    factors_of(grid.as_slice(), grid.k_max())
}

/// `γ = Σ l·A / Σ A`.
pub fn gamma(grid: &AklGrid) -> f64 {
    closure_factors(grid).gamma
}

/// γ from the grid with entries in the tolerated negative band clamped to 0.
pub fn observed_gamma(grid: &AklGrid) -> f64 {
    let (mut mass, mut lsum) = (0.0, 0.0);
    for (_, l, a) in grid.cells() {
        let a = a.max(0.0);
        mass += a;
        lsum += l as f64 * a;
    }
    if mass == 0.0 {
        0.0
    } else {
        lsum / mass
    }
}

#[derive(Clone, Debug)]
pub struct Rhs {
    pub derivative: AklGrid,
    /// Rate at which mass leaves the window.
    pub leakage: f64,
}

/// `dA/dt` with closure factors taken from `grid`.
pub fn rhs(grid: &AklGrid, p: f64, mode: OdeMode) -> Rhs {
    let factors = closure_factors(grid);
    let mut derivative = AklGrid::zeros(grid.k_max());
    let leakage = rhs_into(grid.as_slice(), grid.k_max(), p, mode, &factors, derivative.as_mut_slice());
    Rhs { derivative, leakage }
}

/// `dγ/dt` at `grid`.
pub fn gamma_rate(grid: &AklGrid, p: f64, mode: OdeMode) -> f64 {
    let d = rhs(grid, p, mode).derivative;
    let mass = grid.mass();
    if mass == 0.0 {
        return 0.0;
    }
    (d.active_mass() - gamma(grid) * d.mass()) / mass
}

/// Writes the derivative of the row-major grid `a` into `out` and returns the
/// leakage rate.
pub(crate) fn rhs_into(a: &[f64], k_max: usize, p: f64, mode: OdeMode, f: &ClosureFactors, out: &mut [f64]) -> f64 {
    let side = k_max + 1;
    let pbar = 1.0 - p;
    // (ii) + (iii) + (v) share the (k, l) -> (k+1, l-1) shift
    let c_shift = 0.5 * pbar * (1.0 + f.alpha) + 0.5 * p;
    let c_inert = 0.5 * pbar * f.beta;
    let c_away = 0.5 * p;
    let c_onto = 0.5 * p * f.gamma;
    let c_adopt = if mode == OdeMode::Full { 0.5 * pbar } else { 0.0 };

    let at = |k: usize, l: usize| a[k * side + l];
    let mut leakage = 0.0;
    for k in 0..side {
        let kf = k as f64;
        for l in 0..side {
            let lf = l as f64;
            let v = at(k, l);

            let shift_in = if k > 0 && l < k_max { (lf + 1.0) * at(k - 1, l + 1) } else { 0.0 };
            let inert_in = if k < k_max && l > 0 { (kf + 1.0) * at(k + 1, l - 1) } else { 0.0 };
            let away_in = if l < k_max { (lf + 1.0) * at(k, l + 1) } else { 0.0 };
            let onto_in = if k > 0 { at(k - 1, l) } else { 0.0 };

            let mut d = c_shift * (shift_in - lf * v)
                + c_inert * (inert_in - kf * v)
                + c_away * (away_in - lf * v)
                + c_onto * (onto_in - v);
            if c_adopt != 0.0 {
                d += c_adopt * (kf * at(l, k) - lf * v);
            }
            out[k * side + l] = d;

            if k == k_max {
                leakage += c_shift * lf * v + c_onto * v;
            }
            if l == k_max {
                leakage += c_inert * kf * v;
            }
        }
    }
    leakage
}

#[derive(Clone, Debug)]
pub struct OdeRun {
    pub trajectory: TimeSeries,
    pub final_grid: AklGrid,
    pub final_time: f64,
    /// Integrated mass lost through the truncation boundary.
    pub leakage: f64,
    /// `|Σ A(t_final) - Σ A(0)|`.
    pub mass_drift: f64,
    pub min_entry: f64,
    /// γ fell below the fragmentation threshold before `t_end`.
    pub fragmented: bool,
    pub outer_shell_mass: f64,
}

impl OdeRun {
    pub fn final_gamma(&self) -> f64 {
        observed_gamma(&self.final_grid)
    }
}

/// Integrates from the product-Poisson initial condition with mean degree `kappa`.
pub fn integrate(config: &OdeConfig, kappa: f64) -> Result<OdeRun> {
    config.validate()?;
    let (grid, tail) = init_grid(kappa, config.k_max)?;
    if (config.k_max as f64) < 2.0 * kappa {
        log::warn!("k_max = {} is below 2κ = {}", config.k_max, 2.0 * kappa);
    }
    if tail > TAIL_WARNING {
        log::warn!("initial condition loses {tail:e} of its mass to truncation");
    }
    integrate_from(config, grid, kappa)
}

/// Classic four-stage Runge–Kutta with closure factors recomputed at every
/// stage. Samples γ every `sample_interval` and stops early once γ drops
/// below [`FRAGMENTATION_GAMMA`].
pub fn integrate_from(config: &OdeConfig, initial: AklGrid, kappa: f64) -> Result<OdeRun> {
    config.validate()?;
    let k_max = initial.k_max();
    let n = initial.as_slice().len();
    let dt = config.dt;
    let steps = (config.t_end / dt).round() as u64;
    let sample_every = ((config.sample_interval / dt).round() as u64).max(1);
    let mass0 = initial.mass();

    let meta = SeriesMeta { p: config.p, kappa, replicate: 0, mode: config.mode.as_str().to_owned() };
    let mut trajectory = TimeSeries::new(Source::Ode, meta);

    let mut y = initial;
    let mut stage = vec![0.0; n];
    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut leakage = 0.0;
    let mut fragmented = false;
    let mut t = 0.0;

    let eval = |src: &[f64], out: &mut [f64]| {
        let factors = factors_of(src, k_max);
        rhs_into(src, k_max, config.p, config.mode, &factors, out)
    };

    trajectory.push(0.0, observed_gamma(&y));
    let mut step = 0u64;
    while step < steps {
        let cur = y.as_slice();
        let l1 = eval(cur, &mut k1);
        axpy(&mut stage, cur, 0.5 * dt, &k1);
        let l2 = eval(&stage, &mut k2);
        axpy(&mut stage, cur, 0.5 * dt, &k2);
        let l3 = eval(&stage, &mut k3);
        axpy(&mut stage, cur, dt, &k3);
        let l4 = eval(&stage, &mut k4);

        let w = dt / 6.0;
        for (i, yi) in y.as_mut_slice().iter_mut().enumerate() {
            *yi += w * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            // keep decaying tails out of the subnormal range, where arithmetic is very slow
            if yi.abs() < UNDERFLOW_FLUSH {
                *yi = 0.0;
            }
        }
        leakage += w * (l1 + 2.0 * l2 + 2.0 * l3 + l4);
        step += 1;
        t = step as f64 * dt;

        check_health(&y, t, leakage, mass0)?;

        let g = observed_gamma(&y);
        if g < FRAGMENTATION_GAMMA {
            trajectory.push(t, g);
            fragmented = true;
            break;
        }
        if step % sample_every == 0 {
            trajectory.push(t, g);
        }
    }

    let outer_shell_mass = y.outer_shell_mass(2);
    if outer_shell_mass > TAIL_WARNING {
        log::warn!("outer two shells hold {outer_shell_mass:e} at t = {t}; consider a larger k_max");
    }
    Ok(OdeRun {
        trajectory,
        final_time: t,
        leakage,
        mass_drift: (y.mass() - mass0).abs(),
        min_entry: y.min_entry(),
        fragmented,
        outer_shell_mass,
        final_grid: y,
    })
}

fn factors_of(a: &[f64], k_max: usize) -> ClosureFactors {
    let side = k_max + 1;
    let (mut mass, mut lsum, mut ksum, mut llsum, mut lksum) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (i, &v) in a.iter().enumerate() {
        let (k, l) = ((i / side) as f64, (i % side) as f64);
        mass += v;
        lsum += l * v;
        ksum += k * v;
        llsum += (l - 1.0) * l * v;
        lksum += l * k * v;
    }
    let ratio = |num: f64, den: f64| if den == 0.0 { 0.0 } else { num / den };
    ClosureFactors { alpha: ratio(llsum, lsum), beta: ratio(lksum, ksum), gamma: ratio(lsum, mass) }
}

fn axpy(out: &mut [f64], base: &[f64], h: f64, slope: &[f64]) {
    for ((o, &b), &s) in out.iter_mut().zip(base).zip(slope) {
        *o = b + h * s;
    }
}

fn check_health(y: &AklGrid, t: f64, leakage: f64, mass0: f64) -> Result<()> {
    let min = y.min_entry();
    if min < -NEGATIVITY_TOLERANCE {
        return Err(Error::NumericalFailure { t, reason: format!("entry {min:e} below -{NEGATIVITY_TOLERANCE:e}") });
    }
    if leakage > MASS_TOLERANCE {
        return Err(Error::NumericalFailure { t, reason: format!("boundary leakage {leakage:e} exceeds {MASS_TOLERANCE:e}") });
    }
    let drift = (y.mass() - mass0).abs();
    if drift > MASS_TOLERANCE || !drift.is_finite() {
        return Err(Error::NumericalFailure { t, reason: format!("mass drift {drift:e} exceeds {MASS_TOLERANCE:e}") });
    }
    Ok(())
}
