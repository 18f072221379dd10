use std::ops::Mul;

/// Real 2×2 matrix, row-major fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub m11: f64,
    pub m12: f64,
    pub m21: f64,
    pub m22: f64,
}

/// Real eigen-decomposition `M V = V diag(values)`; the columns of `vectors`
/// are unit eigenvectors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Eigen2 {
    pub values: [f64; 2],
    pub vectors: Mat2,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { m11: 1.0, m12: 0.0, m21: 0.0, m22: 1.0 };

    pub const fn new(m11: f64, m12: f64, m21: f64, m22: f64) -> Self {
        Mat2 { m11, m12, m21, m22 }
    }

    pub const fn diag(a: f64, b: f64) -> Self {
        Mat2::new(a, 0.0, 0.0, b)
    }

    pub fn from_columns(c1: [f64; 2], c2: [f64; 2]) -> Self {
        Mat2::new(c1[0], c2[0], c1[1], c2[1])
    }

    pub fn column(&self, j: usize) -> [f64; 2] {
        match j {
            0 => [self.m11, self.m21],
            1 => [self.m12, self.m22],
            _ => panic!("column index {j} out of range"),
        }
    }

    pub fn transpose(&self) -> Self {
        Mat2::new(self.m11, self.m21, self.m12, self.m22)
    }

    pub fn trace(&self) -> f64 {
        self.m11 + self.m22
    }

    pub fn det(&self) -> f64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn inverse(&self) -> Option<Self> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2::new(self.m22 / det, -self.m12 / det, -self.m21 / det, self.m11 / det))
    }

    pub fn mul_vec(&self, v: [f64; 2]) -> [f64; 2] {
        [self.m11 * v[0] + self.m12 * v[1], self.m21 * v[0] + self.m22 * v[1]]
    }

    pub fn max_abs(&self) -> f64 {
        self.m11.abs().max(self.m12.abs()).max(self.m21.abs()).max(self.m22.abs())
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        Mat2::new(self.m11 - other.m11, self.m12 - other.m12, self.m21 - other.m21, self.m22 - other.m22).max_abs()
    }

    /// Closed-form eigen-decomposition. `None` for complex eigenvalues.
    ///
    /// Eigenvalues are ordered largest first; the smaller one is recovered
    /// from `det / λ_large` so a vanishing eigenvalue comes out as exactly 0
    /// whenever the determinant does.
    pub fn eigen(&self) -> Option<Eigen2> {
        let half_gap = 0.5 * (self.m11 - self.m22);
        let disc = half_gap * half_gap + self.m12 * self.m21;
        if disc < 0.0 || !disc.is_finite() {
            return None;
        }
        let root = disc.sqrt();
        let half_trace = 0.5 * self.trace();
        let large_mag = half_trace + root.copysign(half_trace);
        let (mut l1, mut l2) = if large_mag == 0.0 { (root, -root) } else { (large_mag, self.det() / large_mag) };
        if l2 > l1 {
            std::mem::swap(&mut l1, &mut l2);
        }
        let v1 = self.eigenvector(l1, [1.0, 0.0]);
        let v2 = self.eigenvector(l2, [0.0, 1.0]);
        Some(Eigen2 { values: [l1, l2], vectors: Mat2::from_columns(v1, v2) })
    }

    fn eigenvector(&self, lambda: f64, fallback: [f64; 2]) -> [f64; 2] {
        // each row of (M - λI) gives a candidate orthogonal to itself
        let from_row1 = [self.m12, lambda - self.m11];
        let from_row2 = [lambda - self.m22, self.m21];
        let n1 = from_row1[0].hypot(from_row1[1]);
        let n2 = from_row2[0].hypot(from_row2[1]);
        let (v, norm) = if n1 >= n2 { (from_row1, n1) } else { (from_row2, n2) };
        let scale = self.max_abs().max(lambda.abs());
        if norm <= f64::EPSILON * scale || norm == 0.0 {
            return fallback;
        }
        let sign = if v[0].abs() >= v[1].abs() { v[0].signum() } else { v[1].signum() };
        [sign * v[0] / norm, sign * v[1] / norm]
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 * o.m11 + self.m12 * o.m21,
            self.m11 * o.m12 + self.m12 * o.m22,
            self.m21 * o.m11 + self.m22 * o.m21,
            self.m21 * o.m12 + self.m22 * o.m22,
        )
    }
}
