//! Dense 2-D scalar fields and the numerical operators shared by every model:
//! Gaussian kernels, separable convolution and finite-difference operators.
//!
//! All operators use replicate (Neumann) boundary extension unless noted.

use crate::error::{ensure_same_dims, Error, Result};

/// Regularizer inside `sqrt(gx² + gy² + η)` for the curvature operator.
pub const CURVATURE_ETA: f64 = 1e-10;

/// A dense row-major grid of finite `f64` values.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField2D {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ScalarField2D {
    /// A `width × height` field with every value set to `fill`.
    pub fn filled(width: usize, height: usize, fill: f64) -> Result<Self> {
        check_dims(width, height)?;
        if !fill.is_finite() {
            return Err(Error::Parameter(format!("fill value {fill} is not finite")));
        }
        Ok(Self { width, height, values: vec![fill; width * height] })
    }

    pub fn zeros(width: usize, height: usize) -> Result<Self> {
        Self::filled(width, height, 0.0)
    }

    /// Wraps row-major `values`; rejects wrong lengths and non-finite entries.
    pub fn from_vec(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        check_dims(width, height)?;
        if values.len() != width * height {
            return Err(Error::Parameter(format!("{} values cannot fill a {width}x{height} grid", values.len())));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Parameter(format!("value at index {i} is not finite")));
        }
        Ok(Self { width, height, values })
    }

    /// Builds a field by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        check_dims(width, height)?;
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::from_vec(width, height, values)
    }

    /// Internal constructor for operator outputs whose finiteness follows from
    /// finite inputs.
    pub(crate) fn from_raw(width: usize, height: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), width * height);
        Self { width, height, values }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.values[y * self.width + x] = value;
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Pointwise transform.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.width, self.height, self.values.iter().map(|&v| f(v)).collect())
    }

    /// Pointwise binary combination; panics on mismatched grids.
    pub fn zip_map(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        assert_eq!(self.dims(), other.dims(), "zip_map on mismatched grids");
        Self::from_raw(self.width, self.height, self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect())
    }

    pub fn ensure_same_dims(&self, other: &Self) -> Result<()> {
        ensure_same_dims(self.dims(), other.dims())
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Parameter(format!("grid dimensions must be positive, got {width}x{height}")));
    }
    Ok(())
}

/// A truncated, normalized, separable Gaussian.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianKernel {
    sigma: f64,
    radius: usize,
    weights: Vec<f64>,
}

impl GaussianKernel {
    /// Gaussian with standard deviation `sigma`, truncated at `ceil(2σ)`.
    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Parameter(format!("kernel sigma must be positive, got {sigma}")));
        }
        Self::truncated(sigma, (2.0 * sigma).ceil() as usize)
    }

    /// Gaussian with an explicit truncation radius. Radius 0 is the identity.
    pub fn truncated(sigma: f64, radius: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Parameter(format!("kernel sigma must be positive, got {sigma}")));
        }
        let r = radius as isize;
        let mut weights: Vec<f64> = (-r..=r).map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp()).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        Ok(Self { sigma, radius, weights })
    }

    #[inline]
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.radius
    }

    /// One-dimensional weights, length `2·radius + 1`.
    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of the full 2-D kernel at offset `(dx, dy)` from the center.
    pub fn weight_2d(&self, dx: isize, dy: isize) -> f64 {
        let r = self.radius as isize;
        if dx.abs() > r || dy.abs() > r {
            return 0.0;
        }
        self.weights[(dx + r) as usize] * self.weights[(dy + r) as usize]
    }
}

/// Separable convolution, horizontal pass then vertical pass, with replicate
/// boundary extension. Output has the input's dimensions.
pub fn convolve(field: &ScalarField2D, kernel: &GaussianKernel) -> ScalarField2D {
    let (w, h) = field.dims();
    let r = kernel.radius;
    let weights = &kernel.weights;
    if r == 0 {
        return field.map(|v| v * weights[0]);
    }

    let mut horizontal = vec![0.0; w * h];
    let mut padded = vec![0.0; w + 2 * r];
    for y in 0..h {
        let row = &field.values[y * w..(y + 1) * w];
        padded[..r].fill(row[0]);
        padded[r..r + w].copy_from_slice(row);
        padded[r + w..].fill(row[w - 1]);
        let out = &mut horizontal[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let window = &padded[x..x + 2 * r + 1];
            *o = window.iter().zip(weights).map(|(v, k)| v * k).sum();
        }
    }

    // Vertical pass accumulates whole rows so memory access stays contiguous.
    let mut result = vec![0.0; w * h];
    for y in 0..h {
        let out = &mut result[y * w..(y + 1) * w];
        for (k, &weight) in weights.iter().enumerate() {
            let src_y = (y as isize + k as isize - r as isize).clamp(0, h as isize - 1) as usize;
            let src = &horizontal[src_y * w..(src_y + 1) * w];
            for (o, &s) in out.iter_mut().zip(src) {
                *o += weight * s;
            }
        }
    }
    ScalarField2D::from_raw(w, h, result)
}

/// Central differences in the interior, one-sided differences on the border.
/// Returns `(∂/∂x, ∂/∂y)` with x along columns and y along rows.
pub fn gradient(field: &ScalarField2D) -> (ScalarField2D, ScalarField2D) {
    let (w, h) = field.dims();
    let v = &field.values;
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 0..h {
        let row = y * w;
        for x in 0..w {
            gx[row + x] = if w < 2 {
                0.0
            } else if x == 0 {
                v[row + 1] - v[row]
            } else if x == w - 1 {
                v[row + x] - v[row + x - 1]
            } else {
                0.5 * (v[row + x + 1] - v[row + x - 1])
            };
            gy[row + x] = if h < 2 {
                0.0
            } else if y == 0 {
                v[w + x] - v[x]
            } else if y == h - 1 {
                v[row + x] - v[row - w + x]
            } else {
                0.5 * (v[row + w + x] - v[row - w + x])
            };
        }
    }
    (ScalarField2D::from_raw(w, h, gx), ScalarField2D::from_raw(w, h, gy))
}

/// `div(∇φ / |∇φ|)` with `|∇φ| = sqrt(gx² + gy² + η)`.
pub fn curvature(phi: &ScalarField2D) -> ScalarField2D {
    let (gx, gy) = gradient(phi);
    let (w, h) = phi.dims();
    let mut nx = vec![0.0; w * h];
    let mut ny = vec![0.0; w * h];
    for i in 0..w * h {
        let (a, b) = (gx.values[i], gy.values[i]);
        let norm = (a * a + b * b + CURVATURE_ETA).sqrt();
        nx[i] = a / norm;
        ny[i] = b / norm;
    }
    let (nxx, _) = gradient(&ScalarField2D::from_raw(w, h, nx));
    let (_, nyy) = gradient(&ScalarField2D::from_raw(w, h, ny));
    nxx.zip_map(&nyy, |a, b| a + b)
}

/// Five-point Laplacian with replicate boundaries.
pub fn laplacian(field: &ScalarField2D) -> ScalarField2D {
    let (w, h) = field.dims();
    let v = &field.values;
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let up = y.saturating_sub(1);
        let down = (y + 1).min(h - 1);
        for x in 0..w {
            let left = x.saturating_sub(1);
            let right = (x + 1).min(w - 1);
            let c = v[y * w + x];
            out[y * w + x] = v[y * w + left] + v[y * w + right] + v[up * w + x] + v[down * w + x] - 4.0 * c;
        }
    }
    ScalarField2D::from_raw(w, h, out)
}

/// `|∇φ|` using [`gradient`], unregularized.
pub fn gradient_magnitude(field: &ScalarField2D) -> ScalarField2D {
    let (gx, gy) = gradient(field);
    gx.zip_map(&gy, |a, b| (a * a + b * b).sqrt())
}
