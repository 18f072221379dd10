//! The lattice shifts of the moment equations and the differential operators
//! they become under `Q(x, y) = Σ A[k][l] x^k y^l`.

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::grid::AklGrid;

use super::GenFuncPoint;

/// The six rate terms that move mass around the lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformTerm {
    /// An active neighbour adopts the focal opinion.
    NeighborAdopts,
    /// An active neighbour adopts from a node outside the neighbourhood.
    NeighborAdoptsElsewhere,
    /// An inert neighbour adopts from a node outside the neighbourhood.
    InertNeighborDefects,
    /// The focal node rewires an active link.
    FocalRewires,
    /// An active neighbour rewires away.
    NeighborRewiresAway,
    /// Another node rewires onto the focal node.
    RewiredOnto,
}

impl TransformTerm {
    pub const ALL: [TransformTerm; 6] = [
        TransformTerm::NeighborAdopts,
        TransformTerm::NeighborAdoptsElsewhere,
        TransformTerm::InertNeighborDefects,
        TransformTerm::FocalRewires,
        TransformTerm::NeighborRewiresAway,
        TransformTerm::RewiredOnto,
    ];

    /// Coefficient of `x^k y^l` in the shifted lattice sum, reading cells
    /// outside the window as zero.
    pub fn lattice_coefficient(self, grid: &AklGrid, k: usize, l: usize) -> f64 {
        let (kf, lf) = (k as f64, l as f64);
        let a = grid.get(k, l);
        match self {
            TransformTerm::NeighborAdopts | TransformTerm::NeighborAdoptsElsewhere | TransformTerm::FocalRewires => {
                let gain = if k > 0 { (lf + 1.0) * grid.get(k - 1, l + 1) } else { 0.0 };
                gain - lf * a
            }
            TransformTerm::InertNeighborDefects => {
                let gain = if l > 0 { (kf + 1.0) * grid.get(k + 1, l - 1) } else { 0.0 };
                gain - kf * a
            }
            TransformTerm::NeighborRewiresAway => (lf + 1.0) * grid.get(k, l + 1) - lf * a,
            TransformTerm::RewiredOnto => {
                let gain = if k > 0 { grid.get(k - 1, l) } else { 0.0 };
                gain - a
            }
        }
    }

    /// `Σ coefficient · x^k y^l` over the window.
    pub fn lattice_sum(self, grid: &AklGrid, x: f64, y: f64) -> f64 {
        let n = grid.k_max();
        let xs = powers(x, n);
        let ys = powers(y, n);
        let mut total = 0.0;
        for (k, xk) in xs.iter().enumerate() {
            for (l, yl) in ys.iter().enumerate() {
                total += self.lattice_coefficient(grid, k, l) * xk * yl;
            }
        }
        total
    }

    /// The operator the shift becomes: `(x-y)Q_y`, `(y-x)Q_x`, `(1-y)Q_y` or `(x-1)Q`.
    pub fn differential_form(self, poly: &GeneratingPolynomial<'_>, x: f64, y: f64) -> f64 {
        match self {
            TransformTerm::NeighborAdopts | TransformTerm::NeighborAdoptsElsewhere | TransformTerm::FocalRewires => {
                (x - y) * poly.d_dy(x, y)
            }
            TransformTerm::InertNeighborDefects => (y - x) * poly.d_dx(x, y),
            TransformTerm::NeighborRewiresAway => (1.0 - y) * poly.d_dy(x, y),
            TransformTerm::RewiredOnto => (x - 1.0) * poly.value(x, y),
        }
    }
}

fn powers(x: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 1.0;
    for _ in 0..=n {
        out.push(acc);
        acc *= x;
    }
    out
}

/// The truncated polynomial `Q(x, y) = Σ A[k][l] x^k y^l` of a grid.
#[derive(Clone, Copy, Debug)]
pub struct GeneratingPolynomial<'a> {
    grid: &'a AklGrid,
}

impl<'a> GeneratingPolynomial<'a> {
    pub fn new(grid: &'a AklGrid) -> Self {
        GeneratingPolynomial { grid }
    }

    // Horner in x over rows, each row Horner in y.
    fn horner(&self, x: f64, y: f64, coeff: impl Fn(usize, usize) -> f64, dx: bool, dy: bool) -> f64 {
        let n = self.grid.k_max();
        let mut outer = 0.0;
        for k in (0..=n).rev() {
            let mut inner = 0.0;
            for l in (0..=n).rev() {
                let c = coeff(k, l);
                let c = if dy { c * l as f64 } else { c };
                if dy && l == 0 {
                    continue;
                }
                inner = inner * y + c;
            }
            if dx && k == 0 {
                continue;
            }
            let inner = if dx { inner * k as f64 } else { inner };
            outer = outer * x + inner;
        }
        outer
    }

    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.horner(x, y, |k, l| self.grid.get(k, l), false, false)
    }

    /// `∂Q/∂x`.
    pub fn d_dx(&self, x: f64, y: f64) -> f64 {
        self.horner(x, y, |k, l| self.grid.get(k, l), true, false)
    }

    /// `∂Q/∂y`.
    pub fn d_dy(&self, x: f64, y: f64) -> f64 {
        self.horner(x, y, |k, l| self.grid.get(k, l), false, true)
    }

    pub fn value_complex(&self, x: Complex64, y: Complex64) -> Complex64 {
        let n = self.grid.k_max();
        let mut outer = Complex64::new(0.0, 0.0);
        for k in (0..=n).rev() {
            let mut inner = Complex64::new(0.0, 0.0);
            for l in (0..=n).rev() {
                inner = inner * y + self.grid.get(k, l);
            }
            outer = outer * x + inner;
        }
        outer
    }

    /// Values at `(ω^a, ω^b)` for `ω = e^{2πi/n}`, `n = k_max + 1`, row-major in `a`.
    pub fn torus_values(&self) -> Vec<Complex64> {
        let n = self.grid.side();
        let roots: Vec<Complex64> =
            (0..n).map(|j| Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / n as f64)).collect();
        let mut out = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                out.push(self.value_complex(roots[a], roots[b]));
            }
        }
        out
    }
}

/// Recovers the coefficient grid from polynomial values on the unit torus
/// (inverse of [`GeneratingPolynomial::torus_values`]) with a 2-D FFT.
pub fn coefficients_from_torus(values: &[Complex64], k_max: usize) -> AklGrid {
    let n = k_max + 1;
    assert_eq!(values.len(), n * n, "expected {n}×{n} torus samples");
    let mut buf = values.to_vec();
    let fft = FftPlanner::new().plan_fft_forward(n);
    for row in buf.chunks_exact_mut(n) {
        fft.process(row);
    }
    let mut column = vec![Complex64::new(0.0, 0.0); n];
    for l in 0..n {
        for k in 0..n {
            column[k] = buf[k * n + l];
        }
        fft.process(&mut column);
        for k in 0..n {
            buf[k * n + l] = column[k];
        }
    }
    let norm = 1.0 / (n * n) as f64;
    AklGrid::from_fn(k_max, |k, l| buf[k * n + l].re * norm)
}

/// Largest discrepancy between the lattice sum and the differential operator
/// over the six shift terms. Exact (up to rounding) for grids with no mass
/// in the outermost shell.
pub fn transform_identity_check(grid: &AklGrid, point: GenFuncPoint) -> f64 {
    let poly = GeneratingPolynomial::new(grid);
    TransformTerm::ALL
        .iter()
        .map(|term| (term.lattice_sum(grid, point.x, point.y) - term.differential_form(&poly, point.x, point.y)).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_grid() {
        assert_eq!(transform_identity_check(&AklGrid::zeros(6), GenFuncPoint::new(0.3, 0.8, 0.0)), 0.0);
    }

    #[test]
    fn single_cell_at_fixed_point() {
        let g = AklGrid::point_mass(4, 1, 1);
        for term in TransformTerm::ALL {
            let poly = GeneratingPolynomial::new(&g);
            assert_eq!(term.differential_form(&poly, 1.0, 1.0), 0.0);
            assert!(term.lattice_sum(&g, 1.0, 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn polynomial_derivatives() {
        // Q = 2 x^2 y^3 + 0.5 y
        let mut g = AklGrid::zeros(4);
        g.set(2, 3, 2.0);
        g.set(0, 1, 0.5);
        let q = GeneratingPolynomial::new(&g);
        let (x, y) = (0.7f64, 1.3f64);
        assert!((q.value(x, y) - (2.0 * x * x * y.powi(3) + 0.5 * y)).abs() < 1e-14);
        assert!((q.d_dx(x, y) - 4.0 * x * y.powi(3)).abs() < 1e-14);
        assert!((q.d_dy(x, y) - (6.0 * x * x * y * y + 0.5)).abs() < 1e-14);
    }

    #[test]
    fn torus_round_trip() {
        let g = AklGrid::from_fn(7, |k, l| ((k * 31 + l * 17) % 11) as f64 / 7.0);
        let back = coefficients_from_torus(&GeneratingPolynomial::new(&g).torus_values(), 7);
        assert!(back.max_abs_diff(&g) < 1e-13);
    }
}
