use std::fmt;

/// Densities `A[k][l]` over inert degree `k` and active degree `l`, truncated
/// to `0..=k_max` in both directions.
#[derive(Clone, PartialEq)]
pub struct AklGrid {
    k_max: usize,
    values: Vec<f64>,
}

impl AklGrid {
    pub fn zeros(k_max: usize) -> Self {
        let side = k_max + 1;
        AklGrid { k_max, values: vec![0.0; side * side] }
    }

    pub fn from_fn(k_max: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut grid = Self::zeros(k_max);
        for k in 0..=k_max {
            for l in 0..=k_max {
                grid.values[k * (k_max + 1) + l] = f(k, l);
            }
        }
        grid
    }

    /// Grid with all mass in a single cell.
    pub fn point_mass(k_max: usize, k: usize, l: usize) -> Self {
        let mut grid = Self::zeros(k_max);
        grid.set(k, l, 1.0);
        grid
    }

    #[inline]
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    #[inline]
    pub fn side(&self) -> usize {
        self.k_max + 1
    }

    /// Entry `(k, l)`; indices outside the window read as zero.
    #[inline]
    pub fn get(&self, k: usize, l: usize) -> f64 {
        if k > self.k_max || l > self.k_max {
            0.0
        } else {
            self.values[k * (self.k_max + 1) + l]
        }
    }

    #[inline]
    pub fn set(&mut self, k: usize, l: usize, value: f64) {
        let side = self.side();
        self.values[k * side + l] = value;
    }

    /// Row-major storage, `k` outer.
    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// `(k, l, value)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let side = self.side();
        self.values.iter().enumerate().map(move |(i, &v)| (i / side, i % side, v))
    }

    /// `Σ A[k][l]`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum()
    }

    /// `Σ l·A[k][l]`, the active-link mass.
    pub fn active_mass(&self) -> f64 {
        self.cells().map(|(_, l, v)| l as f64 * v).sum()
    }

    /// `Σ k·A[k][l]`, the inert-link mass.
    pub fn inert_mass(&self) -> f64 {
        self.cells().map(|(k, _, v)| k as f64 * v).sum()
    }

    pub fn min_entry(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Mass in the cells with `max(k, l) > k_max - width`.
    pub fn outer_shell_mass(&self, width: usize) -> f64 {
        let edge = (self.k_max + 1).saturating_sub(width);
        self.cells().filter(|&(k, l, _)| k.max(l) >= edge).map(|(_, _, v)| v.abs()).sum()
    }

    pub fn scale(&mut self, factor: f64) {
        self.values.iter_mut().for_each(|v| *v *= factor);
    }

    /// Transposed grid, `k <-> l`.
    pub fn transpose(&self) -> Self {
        Self::from_fn(self.k_max, |k, l| self.get(l, k))
    }

    pub fn max_abs_diff(&self, other: &AklGrid) -> f64 {
        assert_eq!(self.k_max, other.k_max, "grid sizes differ");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl fmt::Debug for AklGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AklGrid")
            .field("k_max", &self.k_max)
            .field("mass", &self.mass())
            .field("active_mass", &self.active_mass())
            .finish()
    }
}
