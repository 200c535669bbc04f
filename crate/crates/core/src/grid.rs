//! Truncated periodic phase-space grid, the sampled density `f(x, v)` and
//! spectral transforms in `x` and `v`.
//!
//! Storage is dense row-major over `(x-index, v-index)`: the spatial
//! multi-index varies slowest, so each spatial node owns a contiguous
//! velocity block of `nv^d` samples.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{self, AxisPlan};

/// Dimensions supported for evolution on the grid.
pub const MAX_GRID_DIM: usize = 2;
/// Default clipping tolerance for negative samples.
pub const DEFAULT_NEG_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseGrid<T> {
    pub dim: usize,
    /// Spatial half-width: the box is `[-lx, lx)^d`, periodic.
    pub lx: T,
    /// Velocity half-width: `[-lv, lv)^d`, periodic truncation.
    pub lv: T,
    pub nx: usize,
    pub nv: usize,
}

impl<T: Real> PhaseGrid<T> {
    pub fn new(dim: usize, lx: T, lv: T, nx: usize, nv: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_GRID_DIM {
            return Err(Error::Grid(format!(
                "dimension {dim} unsupported (1..={MAX_GRID_DIM})"
            )));
        }
        for (name, n) in [("nx", nx), ("nv", nv)] {
            if n < 8 || !n.is_power_of_two() {
                return Err(Error::Grid(format!(
                    "{name} = {n} must be a power of two and at least 8"
                )));
            }
        }
        if !(lx > T::zero() && lx.is_finite()) || !(lv > T::zero() && lv.is_finite()) {
            return Err(Error::Grid("box half-widths must be positive".into()));
        }
        Ok(Self { dim, lx, lv, nx, nv })
    }

    pub fn dx(&self) -> T {
        T::lit(2.0) * self.lx / T::of(self.nx)
    }

    pub fn dv(&self) -> T {
        T::lit(2.0) * self.lv / T::of(self.nv)
    }

    /// `dx^d`.
    pub fn x_cell(&self) -> T {
        self.dx().powi(self.dim as i32)
    }

    /// `dv^d`.
    pub fn v_cell(&self) -> T {
        self.dv().powi(self.dim as i32)
    }

    pub fn cell_volume(&self) -> T {
        self.x_cell() * self.v_cell()
    }

    /// Quadrature weight of the full grid, `(2Lx)^d (2Lv)^d`.
    pub fn total_measure(&self) -> T {
        let two = T::lit(2.0);
        ((two * self.lx) * (two * self.lv)).powi(self.dim as i32)
    }

    pub fn x_points(&self) -> usize {
        self.nx.pow(self.dim as u32)
    }

    pub fn v_points(&self) -> usize {
        self.nv.pow(self.dim as u32)
    }

    pub fn len(&self) -> usize {
        self.x_points() * self.v_points()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn spatial_shape(&self) -> Vec<usize> {
        vec![self.nx; self.dim]
    }

    pub fn velocity_shape(&self) -> Vec<usize> {
        vec![self.nv; self.dim]
    }

    pub fn phase_shape(&self) -> Vec<usize> {
        let mut s = self.spatial_shape();
        s.extend(self.velocity_shape());
        s
    }

    pub fn x_node(&self, i: usize) -> T {
        -self.lx + T::of(i) * self.dx()
    }

    pub fn v_node(&self, j: usize) -> T {
        -self.lv + T::of(j) * self.dv()
    }

    /// Wavenumber of x-bin `m` (integer frequency scaled by `π/Lx`).
    pub fn kx(&self, m: usize) -> T {
        T::lit(spectral::signed_index(m, self.nx) as f64) * T::PI() / self.lx
    }

    /// Wavenumber of v-bin `m` (integer frequency scaled by `π/Lv`).
    pub fn kv(&self, m: usize) -> T {
        T::lit(spectral::signed_index(m, self.nv) as f64) * T::PI() / self.lv
    }

    /// Per-axis indices of a flattened spatial (or velocity) index.
    #[inline]
    pub fn unravel(&self, flat: usize, n: usize) -> [usize; MAX_GRID_DIM] {
        match self.dim {
            1 => [flat, 0],
            _ => [flat / n, flat % n],
        }
    }

    /// Coordinates of spatial node `ix` (unused components are zero).
    pub fn x_coords(&self, ix: usize) -> [T; MAX_GRID_DIM] {
        let idx = self.unravel(ix, self.nx);
        let mut out = [T::zero(); MAX_GRID_DIM];
        for a in 0..self.dim {
            out[a] = self.x_node(idx[a]);
        }
        out
    }

    pub fn v_coords(&self, iv: usize) -> [T; MAX_GRID_DIM] {
        let idx = self.unravel(iv, self.nv);
        let mut out = [T::zero(); MAX_GRID_DIM];
        for a in 0..self.dim {
            out[a] = self.v_node(idx[a]);
        }
        out
    }

    pub fn kx_vec(&self, ix: usize) -> [T; MAX_GRID_DIM] {
        let idx = self.unravel(ix, self.nx);
        let mut out = [T::zero(); MAX_GRID_DIM];
        for a in 0..self.dim {
            out[a] = self.kx(idx[a]);
        }
        out
    }

    pub fn kv_vec(&self, iv: usize) -> [T; MAX_GRID_DIM] {
        let idx = self.unravel(iv, self.nv);
        let mut out = [T::zero(); MAX_GRID_DIM];
        for a in 0..self.dim {
            out[a] = self.kv(idx[a]);
        }
        out
    }

    pub fn x_norm_sq(&self, ix: usize) -> T {
        self.x_coords(ix).iter().map(|&c| c * c).sum()
    }

    pub fn v_norm_sq(&self, iv: usize) -> T {
        self.v_coords(iv).iter().map(|&c| c * c).sum()
    }

    /// Whether any axis index of a flattened index lies in the outermost
    /// `fraction` of its axis.
    pub fn in_outer_shell(&self, flat: usize, n: usize, fraction: f64) -> bool {
        let width = ((n as f64) * fraction / 2.0).ceil().max(1.0) as usize;
        let idx = self.unravel(flat, n);
        idx[..self.dim]
            .iter()
            .any(|&i| i < width || i >= n - width)
    }
}

/// Sampled nonnegative phase-space density on a [`PhaseGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionField<T> {
    pub grid: PhaseGrid<T>,
    pub values: Vec<T>,
    pub time: T,
}

impl<T: Real> DistributionField<T> {
    pub fn zeros(grid: PhaseGrid<T>) -> Self {
        Self {
            values: vec![T::zero(); grid.len()],
            grid,
            time: T::zero(),
        }
    }

    pub fn from_values(grid: PhaseGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        Ok(Self {
            grid,
            values,
            time: T::zero(),
        })
    }

    /// Samples `f(x, v)` at every node; slices carry `d` components.
    pub fn from_fn(grid: PhaseGrid<T>, mut f: impl FnMut(&[T], &[T]) -> T) -> Self {
        let d = grid.dim;
        let nvp = grid.v_points();
        let mut values = Vec::with_capacity(grid.len());
        for ix in 0..grid.x_points() {
            let x = grid.x_coords(ix);
            for iv in 0..nvp {
                let v = grid.v_coords(iv);
                values.push(f(&x[..d], &v[..d]));
            }
        }
        Self {
            grid,
            values,
            time: T::zero(),
        }
    }

    #[inline]
    pub fn index(&self, ix: usize, iv: usize) -> usize {
        ix * self.grid.v_points() + iv
    }

    /// Velocity block of spatial node `ix`.
    pub fn velocity_slice(&self, ix: usize) -> &[T] {
        let nvp = self.grid.v_points();
        &self.values[ix * nvp..(ix + 1) * nvp]
    }

    /// `∬ f dx dv`.
    pub fn mass(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.grid.cell_volume()
    }

    /// Spatial density `ρ(x) = Σ_v f(x, v) dv^d`.
    pub fn integrate_v(&self) -> Vec<T> {
        let dvd = self.grid.v_cell();
        self.values
            .chunks(self.grid.v_points())
            .map(|block| block.iter().copied().sum::<T>() * dvd)
            .collect()
    }

    pub fn max_value(&self) -> T {
        self.values.iter().copied().fold(T::zero(), T::max)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Zeroes negative samples of magnitude at most `neg_tol`; returns the
    /// number of samples still below `-neg_tol`.
    pub fn clip_negative(&mut self, neg_tol: T) -> usize {
        let mut remaining = 0;
        for v in &mut self.values {
            if *v < T::zero() {
                if *v >= -neg_tol {
                    *v = T::zero();
                } else {
                    remaining += 1;
                }
            }
        }
        remaining
    }

    /// Count and minimum of samples below `-neg_tol`.
    pub fn negative_cells(&self, neg_tol: T) -> (usize, T) {
        self.values
            .iter()
            .filter(|&&v| v < -neg_tol)
            .fold((0, T::zero()), |(n, m), &v| (n + 1, m.min(v)))
    }

    /// Fraction of the mass carried by nodes whose x or v index lies in the
    /// outermost 10% of an axis.
    pub fn boundary_mass_fraction(&self) -> T {
        let g = &self.grid;
        let nvp = g.v_points();
        let total: T = self.values.iter().map(|v| v.abs()).sum();
        if total == T::zero() {
            return T::zero();
        }
        let mut shell = T::zero();
        for ix in 0..g.x_points() {
            let x_outer = g.in_outer_shell(ix, g.nx, 0.1);
            for iv in 0..nvp {
                if x_outer || g.in_outer_shell(iv, g.nv, 0.1) {
                    shell = shell + self.values[ix * nvp + iv].abs();
                }
            }
        }
        shell / total
    }
}

/// FFT plans for the spatial and velocity axes of one grid.
#[derive(Debug, Clone)]
pub struct SpectralPlan<T: Real> {
    pub grid: PhaseGrid<T>,
    x: AxisPlan<T>,
    v: AxisPlan<T>,
}

impl<T: Real> SpectralPlan<T> {
    pub fn new(grid: &PhaseGrid<T>) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            grid: *grid,
            x: AxisPlan::new(&mut planner, grid.nx),
            v: AxisPlan::new(&mut planner, grid.nv),
        }
    }

    pub fn x_plan(&self) -> &AxisPlan<T> {
        &self.x
    }

    pub fn v_plan(&self) -> &AxisPlan<T> {
        &self.v
    }

    fn check_len(expected: usize, actual: usize) -> Result<()> {
        if expected != actual {
            return Err(Error::Shape { expected, actual });
        }
        Ok(())
    }

    /// Unnormalized forward transform of a spatial array.
    pub fn spectral_forward_x(&self, field: &[T]) -> Result<Vec<Complex<T>>> {
        Self::check_len(self.grid.x_points(), field.len())?;
        let mut buf = spectral::to_complex(field);
        self.forward_spatial_in_place(&mut buf);
        Ok(buf)
    }

    /// Inverse of [`Self::spectral_forward_x`].
    pub fn spectral_inverse_x(&self, spectrum: &[Complex<T>]) -> Result<Vec<Complex<T>>> {
        Self::check_len(self.grid.x_points(), spectrum.len())?;
        let mut buf = spectrum.to_vec();
        self.inverse_spatial_in_place(&mut buf);
        Ok(buf)
    }

    /// Real part of the inverse transform.
    pub fn spectral_inverse_x_real(&self, spectrum: &[Complex<T>]) -> Result<Vec<T>> {
        Ok(spectral::real_part(&self.spectral_inverse_x(spectrum)?))
    }

    pub fn forward_spatial_in_place(&self, buf: &mut [Complex<T>]) {
        let shape = self.grid.spatial_shape();
        for a in 0..self.grid.dim {
            spectral::transform_axis(buf, &shape, a, &self.x, false);
        }
    }

    pub fn inverse_spatial_in_place(&self, buf: &mut [Complex<T>]) {
        let shape = self.grid.spatial_shape();
        for a in 0..self.grid.dim {
            spectral::transform_axis(buf, &shape, a, &self.x, true);
        }
    }

    /// Transforms a full phase-space array along the x axes.
    pub fn phase_x(&self, buf: &mut [Complex<T>], inverse: bool) {
        let shape = self.grid.phase_shape();
        for a in 0..self.grid.dim {
            spectral::transform_axis(buf, &shape, a, &self.x, inverse);
        }
    }

    /// Transforms a full phase-space array along the v axes.
    pub fn phase_v(&self, buf: &mut [Complex<T>], inverse: bool) {
        let shape = self.grid.phase_shape();
        let d = self.grid.dim;
        for a in d..2 * d {
            spectral::transform_axis(buf, &shape, a, &self.v, inverse);
        }
    }

    /// Parseval normalization: `Σ|a|² dx^d = norm · Σ|â|²`.
    pub fn parseval_factor_x(&self) -> T {
        self.grid.x_cell() / T::of(self.grid.x_points())
    }
}
