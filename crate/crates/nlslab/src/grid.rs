//! Periodic spectral grid on the box [-L, L)^d, d ∈ {1, 2}.
//!
//! All fields are sampled on a uniform grid with an even number N of points
//! per axis.  Differentiation is done mode-wise in Fourier space with
//! wavenumbers k_j = j·π/L, j = -N/2, …, N/2-1 (standard FFT ordering, the
//! unpaired Nyquist mode is zeroed for odd derivative orders).  Quadrature is
//! the rectangle rule, which is spectrally accurate on smooth periodic data.
//!
//! Sobolev norms follow the multi-index convention
//!   ‖w‖_{H^s}² = Σ_{|α| ≤ s} ‖∂^α w‖²_{L²},
//! evaluated in Fourier space with the exact sum Σ_{|α| ≤ s} k^{2α}
//! (which for d = 2 is not the same weight as (1 + |k|²)^s).

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::sync::Arc;

use crate::error::Error;
use crate::Result;

/// Highest derivative order supported by the spectral routines.
pub const MAX_DERIVATIVE_ORDER: usize = 6;

thread_local! {
    static FFT_CACHE: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> =
        RefCell::new(HashMap::new());
}

fn with_fft(n: usize, inverse: bool, buf: &mut [Complex64]) {
    FFT_CACHE.with(|cache| {
        let fft = cache
            .borrow_mut()
            .entry((n, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone();
        fft.process(buf);
    });
}

/// Uniform periodic box discretization of ℝ^d, d ∈ {1, 2}.
///
/// The box is [-L, L) per axis with N points and spacing h = 2L/N, so that
/// h·N = 2L exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    dim: usize,
    n_points: usize,
    half_length: f64,
}

impl Grid {
    pub fn new(dim: usize, n_points: usize, half_length: f64) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(Error::InvalidParameter(format!("grid dim must be 1 or 2, got {dim}")));
        }
        if n_points % 2 != 0 || n_points < 16 {
            return Err(Error::InvalidParameter(format!(
                "grid needs an even point count >= 16 per axis, got {n_points}"
            )));
        }
        if !(half_length > 0.0) || !half_length.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "grid half-length must be positive and finite, got {half_length}"
            )));
        }
        Ok(Grid { dim, n_points, half_length })
    }

    pub fn new_1d(n_points: usize, half_length: f64) -> Result<Self> {
        Self::new(1, n_points, half_length)
    }

    pub fn new_2d(n_points: usize, half_length: f64) -> Result<Self> {
        Self::new(2, n_points, half_length)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis.
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    /// Grid spacing h = 2L/N.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n_points as f64
    }

    /// Total number of sample points N^d.
    pub fn len(&self) -> usize {
        self.n_points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Quadrature weight h^d of the rectangle rule.
    pub fn quad_weight(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Physical coordinate along one axis, index 0..N.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_length + i as f64 * self.spacing()
    }

    /// Wavenumbers in FFT ordering: j·π/L for j = 0,…,N/2-1, -N/2,…,-1.
    ///
    /// The j = -N/2 entry is the unpaired Nyquist mode; derivative routines
    /// zero it for odd orders.
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points;
        let scale = std::f64::consts::PI / self.half_length;
        let mut k = vec![0.0; n];
        for (j, kj) in k.iter_mut().enumerate() {
            let m = if j < n / 2 { j as isize } else { j as isize - n as isize };
            *kj = m as f64 * scale;
        }
        k
    }

    /// Flattened index of the sample at (i1, i2); axis 1 is contiguous.
    pub fn index(&self, i1: usize, i2: usize) -> usize {
        debug_assert!(self.dim == 2 || i2 == 0);
        i2 * self.n_points + i1
    }
}

/// Complex scalar field sampled on a [`Grid`] at a fixed time.
#[derive(Debug, Clone)]
pub struct Field {
    pub grid: Grid,
    pub values: Vec<Complex64>,
    pub time: f64,
    pub label: String,
}

impl Field {
    pub fn zeros(grid: Grid, time: f64) -> Self {
        Field { grid, values: vec![Complex64::ZERO; grid.len()], time, label: String::new() }
    }

    /// Sample a function of the coordinates; for d = 1 the second coordinate
    /// passed to `f` is 0.
    pub fn from_fn(grid: Grid, time: f64, mut f: impl FnMut(f64, f64) -> Complex64) -> Self {
        let n = grid.n_points;
        let mut values = Vec::with_capacity(grid.len());
        match grid.dim {
            1 => {
                for i in 0..n {
                    values.push(f(grid.coord(i), 0.0));
                }
            }
            _ => {
                for i2 in 0..n {
                    let x2 = grid.coord(i2);
                    for i1 in 0..n {
                        values.push(f(grid.coord(i1), x2));
                    }
                }
            }
        }
        Field { grid, values, time, label: String::new() }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn assert_finite(&self, context: &str) -> Result<()> {
        if self.values.iter().all(|v| v.re.is_finite() && v.im.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite { context: context.to_string() })
        }
    }

    fn same_grid(&self, other: &Field) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)))
        }
    }

    /// In-place forward FFT (unnormalized), all axes.
    pub fn to_spectral(&self) -> Vec<Complex64> {
        let mut hat = self.values.clone();
        fft_forward(self.grid, &mut hat);
        hat
    }

    /// Largest |u| on the outermost ring of the box; reported so runs can
    /// judge wraparound contamination.
    pub fn boundary_magnitude(&self) -> f64 {
        let n = self.grid.n_points;
        let mut m: f64 = 0.0;
        match self.grid.dim {
            1 => {
                m = m.max(self.values[0].norm()).max(self.values[n - 1].norm());
            }
            _ => {
                for i in 0..n {
                    m = m
                        .max(self.values[self.grid.index(i, 0)].norm())
                        .max(self.values[self.grid.index(i, n - 1)].norm())
                        .max(self.values[self.grid.index(0, i)].norm())
                        .max(self.values[self.grid.index(n - 1, i)].norm());
                }
            }
        }
        m
    }

    /// f64 linear combination: self + c * other.
    pub fn axpy(&self, c: Complex64, other: &Field) -> Result<Field> {
        self.same_grid(other)?;
        let values =
            self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        Ok(Field { grid: self.grid, values, time: self.time, label: self.label.clone() })
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.axpy(Complex64::new(-1.0, 0.0), other)
    }

    pub fn scale(&self, c: Complex64) -> Field {
        let values = self.values.iter().map(|v| c * v).collect();
        Field { grid: self.grid, values, time: self.time, label: self.label.clone() }
    }
}

pub(crate) fn fft_forward(grid: Grid, data: &mut [Complex64]) {
    fft_all_axes(grid, data, false);
}

pub(crate) fn fft_inverse_normalized(grid: Grid, data: &mut [Complex64]) {
    fft_all_axes(grid, data, true);
    let scale = 1.0 / grid.len() as f64;
    for v in data.iter_mut() {
        *v *= scale;
    }
}

fn fft_all_axes(grid: Grid, data: &mut [Complex64], inverse: bool) {
    let n = grid.n_points;
    match grid.dim {
        1 => with_fft(n, inverse, data),
        _ => {
            // axis 1 (contiguous rows)
            for row in data.chunks_mut(n) {
                with_fft(n, inverse, row);
            }
            // axis 2 (strided columns)
            let mut col = vec![Complex64::ZERO; n];
            for i1 in 0..n {
                for i2 in 0..n {
                    col[i2] = data[i2 * n + i1];
                }
                with_fft(n, inverse, &mut col);
                for i2 in 0..n {
                    data[i2 * n + i1] = col[i2];
                }
            }
        }
    }
}

fn check_orders(grid: Grid, multi_index: &[usize]) -> Result<()> {
    if multi_index.len() != grid.dim {
        return Err(Error::InvalidParameter(format!(
            "multi-index length {} does not match grid dim {}",
            multi_index.len(),
            grid.dim
        )));
    }
    let total: usize = multi_index.iter().sum();
    if total > MAX_DERIVATIVE_ORDER {
        return Err(Error::DerivativeOrder { requested: total, max: MAX_DERIVATIVE_ORDER });
    }
    Ok(())
}

/// Fourier-multiplier derivative ∂^α: multiplies mode k by Π_a (i k_a)^{α_a}.
///
/// Exact for trigonometric polynomials resolved on the grid.  Mixed
/// derivatives commute bit-identically because the multiplier is assembled
/// once per mode.
pub fn spectral_derivative(field: &Field, multi_index: &[usize]) -> Result<Field> {
    check_orders(field.grid, multi_index)?;
    field.assert_finite("spectral_derivative input")?;
    let grid = field.grid;
    let n = grid.n_points;
    let k = grid.wavenumbers();
    let mut hat = field.to_spectral();

    let axis_mult = |order: usize| -> Vec<Complex64> {
        (0..n)
            .map(|j| {
                if order == 0 {
                    return Complex64::new(1.0, 0.0);
                }
                // unpaired Nyquist mode has no well-defined sign for odd orders
                if j == n / 2 && order % 2 == 1 {
                    return Complex64::ZERO;
                }
                Complex64::new(0.0, k[j]).powu(order as u32)
            })
            .collect()
    };

    match grid.dim {
        1 => {
            let m = axis_mult(multi_index[0]);
            for (v, mj) in hat.iter_mut().zip(&m) {
                *v *= mj;
            }
        }
        _ => {
            let m1 = axis_mult(multi_index[0]);
            let m2 = axis_mult(multi_index[1]);
            for i2 in 0..n {
                for i1 in 0..n {
                    hat[i2 * n + i1] *= m1[i1] * m2[i2];
                }
            }
        }
    }
    fft_inverse_normalized(grid, &mut hat);
    Ok(Field { grid, values: hat, time: field.time, label: field.label.clone() })
}

/// Gradient along the given axis (0-based).
pub fn gradient_axis(field: &Field, axis: usize) -> Result<Field> {
    let mut mi = vec![0usize; field.grid.dim];
    mi[axis] = 1;
    spectral_derivative(field, &mi)
}

/// Rectangle-rule quadrature of Re(a·conj(b)).
pub fn inner_product_real(a: &Field, b: &Field) -> Result<f64> {
    a.same_grid(b)?;
    let s: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x.re * y.re + x.im * y.im)
        .sum();
    Ok(s * a.grid.quad_weight())
}

/// Rectangle-rule quadrature of Im(a·conj(b)).
pub fn inner_product_imag(a: &Field, b: &Field) -> Result<f64> {
    a.same_grid(b)?;
    let s: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| x.im * y.re - x.re * y.im)
        .sum();
    Ok(s * a.grid.quad_weight())
}

/// L² norm by rectangle quadrature.
pub fn l2_norm(field: &Field) -> f64 {
    let s: f64 = field.values.iter().map(|v| v.norm_sqr()).sum();
    (s * field.grid.quad_weight()).sqrt()
}

/// Spectral-side L² norm (Parseval); used as a cross-check of quadrature.
pub fn l2_norm_spectral(field: &Field) -> f64 {
    let hat = field.to_spectral();
    let s: f64 = hat.iter().map(|v| v.norm_sqr()).sum();
    (s * field.grid.quad_weight() / field.grid.len() as f64).sqrt()
}

/// Sobolev norm ‖w‖_{H^s} = (Σ_{|α| ≤ s} ‖∂^α w‖²_{L²})^{1/2}.
pub fn sobolev_norm(field: &Field, s: usize) -> Result<f64> {
    if s > MAX_DERIVATIVE_ORDER {
        return Err(Error::DerivativeOrder { requested: s, max: MAX_DERIVATIVE_ORDER });
    }
    let grid = field.grid;
    let n = grid.n_points;
    let k = grid.wavenumbers();
    let hat = field.to_spectral();
    // weight Σ_{|α| <= s} k^{2α} assembled per mode
    let axis_weights = |kk: f64, smax: usize| -> Vec<f64> {
        let mut w = Vec::with_capacity(smax + 1);
        let mut p = 1.0;
        for _ in 0..=smax {
            w.push(p);
            p *= kk * kk;
        }
        w
    };
    let mut total = 0.0;
    match grid.dim {
        1 => {
            for (j, v) in hat.iter().enumerate() {
                let w: f64 = axis_weights(k[j], s).iter().sum();
                total += w * v.norm_sqr();
            }
        }
        _ => {
            // precompute per-axis power tables
            let pow1: Vec<Vec<f64>> = k.iter().map(|&kk| axis_weights(kk, s)).collect();
            for i2 in 0..n {
                for i1 in 0..n {
                    let mut w = 0.0;
                    for a in 0..=s {
                        for b in 0..=(s - a) {
                            w += pow1[i1][a] * pow1[i2][b];
                        }
                    }
                    total += w * hat[i2 * n + i1].norm_sqr();
                }
            }
        }
    }
    Ok((total * grid.quad_weight() / grid.len() as f64).sqrt())
}

/// ‖|∇|^s w‖²_{L²} with multinomial weights: Σ_{|α| = s} (s α) ‖∂^α w‖²
/// equals Σ_k |k|^{2s} |ŵ_k|² by the multinomial theorem.
pub fn homogeneous_sobolev_sq(field: &Field, s: usize) -> Result<f64> {
    if s > MAX_DERIVATIVE_ORDER {
        return Err(Error::DerivativeOrder { requested: s, max: MAX_DERIVATIVE_ORDER });
    }
    let grid = field.grid;
    let n = grid.n_points;
    let k = grid.wavenumbers();
    let hat = field.to_spectral();
    let mut total = 0.0;
    match grid.dim {
        1 => {
            for (j, v) in hat.iter().enumerate() {
                total += (k[j] * k[j]).powi(s as i32) * v.norm_sqr();
            }
        }
        _ => {
            for i2 in 0..n {
                for i1 in 0..n {
                    let k2 = k[i1] * k[i1] + k[i2] * k[i2];
                    total += k2.powi(s as i32) * hat[i2 * n + i1].norm_sqr();
                }
            }
        }
    }
    Ok(total * grid.quad_weight() / grid.len() as f64)
}

/// Translate a field by `shift` (per axis) with the exact Fourier phase;
/// band-limited interpolation, not restricted to whole grid cells.
pub fn translate(field: &Field, shift: &[f64]) -> Result<Field> {
    if shift.len() != field.grid.dim {
        return Err(Error::InvalidParameter("translate: shift length != dim".into()));
    }
    let grid = field.grid;
    let n = grid.n_points;
    let k = grid.wavenumbers();
    let mut hat = field.to_spectral();
    match grid.dim {
        1 => {
            for (j, v) in hat.iter_mut().enumerate() {
                *v *= Complex64::from_polar(1.0, -k[j] * shift[0]);
            }
        }
        _ => {
            for i2 in 0..n {
                for i1 in 0..n {
                    hat[i2 * n + i1] *=
                        Complex64::from_polar(1.0, -(k[i1] * shift[0] + k[i2] * shift[1]));
                }
            }
        }
    }
    fft_inverse_normalized(grid, &mut hat);
    Ok(Field { grid, values: hat, time: field.time, label: field.label.clone() })
}
