//! Level-set representation, regularized Heaviside/Dirac functions,
//! binary-step initialization and mask readout.
//!
//! Sign convention: initialization puts `-c0` inside the seed shapes and
//! `+c0` elsewhere. The positive side is where `H_ε(φ) ≈ 1`; masks read the
//! negative side (`φ < 0`) as the object.

use std::f64::consts::{FRAC_2_PI, PI};

use crate::error::{Error, Result};
use crate::field::{convolve, GaussianKernel, ScalarField2D};

/// `½(1 + (2/π)·atan(x/ε))`
#[inline]
pub fn heaviside_eps(x: f64, epsilon: f64) -> f64 {
    0.5 * (1.0 + FRAC_2_PI * (x / epsilon).atan())
}

/// `ε / (π(ε² + x²))`, the derivative of [`heaviside_eps`].
#[inline]
pub fn dirac_eps(x: f64, epsilon: f64) -> f64 {
    epsilon / (PI * (epsilon * epsilon + x * x))
}

/// Window radius and variance of the Gaussian used to smooth φ in the LIF loop.
pub const PHI_SMOOTHING_RADIUS: usize = 2;
pub const PHI_SMOOTHING_VARIANCE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct LevelSet {
    pub phi: ScalarField2D,
    pub epsilon: f64,
}

impl LevelSet {
    pub fn new(phi: ScalarField2D, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Parameter(format!("epsilon must be positive, got {epsilon}")));
        }
        Ok(Self { phi, epsilon })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.phi.dims()
    }

    /// `H_ε(φ)` evaluated pointwise.
    pub fn heaviside(&self) -> ScalarField2D {
        let eps = self.epsilon;
        self.phi.map(|v| heaviside_eps(v, eps))
    }

    /// `δ_ε(φ)` evaluated pointwise.
    pub fn dirac(&self) -> ScalarField2D {
        let eps = self.epsilon;
        self.phi.map(|v| dirac_eps(v, eps))
    }

    /// Object mask: pixels with `φ < 0`.
    pub fn mask(&self) -> Mask {
        extract_mask(self)
    }
}

/// A seed region for binary-step initialization, in pixel coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum Shape {
    /// Half-open box `[x0, x1) × [y0, y1)`.
    Rect { x0: usize, y0: usize, x1: usize, y1: usize },
    /// Closed disk `(x-cx)² + (y-cy)² ≤ r²`.
    Circle { cx: f64, cy: f64, r: f64 },
}

impl Shape {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        match *self {
            Shape::Rect { x0, y0, x1, y1 } => (x0..x1).contains(&x) && (y0..y1).contains(&y),
            Shape::Circle { cx, cy, r } => {
                let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                dx * dx + dy * dy <= r * r
            }
        }
    }

    fn check_bounds(&self, width: usize, height: usize) -> Result<()> {
        let ok = match *self {
            Shape::Rect { x0, y0, x1, y1 } => x0 < x1 && y0 < y1 && x1 <= width && y1 <= height,
            Shape::Circle { cx, cy, r } => {
                r > 0.0
                    && cx - r >= 0.0
                    && cy - r >= 0.0
                    && cx + r <= (width - 1) as f64
                    && cy + r <= (height - 1) as f64
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Parameter(format!("shape {self:?} does not fit a {width}x{height} grid")))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitSpec {
    pub shapes: Vec<Shape>,
    pub c0: f64,
}

impl InitSpec {
    pub fn new(shapes: Vec<Shape>, c0: f64) -> Self {
        Self { shapes, c0 }
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if !(self.c0 > 0.0 && self.c0.is_finite()) {
            return Err(Error::Parameter(format!("c0 must be positive, got {}", self.c0)));
        }
        self.shapes.iter().try_for_each(|s| s.check_bounds(width, height))
    }
}

/// `φ = -c0` inside any seed shape and `+c0` elsewhere.
pub fn init_binary_step(width: usize, height: usize, spec: &InitSpec, epsilon: f64) -> Result<LevelSet> {
    if width == 0 || height == 0 {
        return Err(Error::Parameter(format!("grid dimensions must be positive, got {width}x{height}")));
    }
    spec.validate(width, height)?;
    let c0 = spec.c0;
    let phi =
        ScalarField2D::from_fn(
            width,
            height,
            |x, y| {
                if spec.shapes.iter().any(|s| s.contains(x, y)) {
                    -c0
                } else {
                    c0
                }
            },
        )?;
    LevelSet::new(phi, epsilon)
}

pub fn extract_mask(ls: &LevelSet) -> Mask {
    let (w, h) = ls.dims();
    Mask::from_bits(w, h, ls.phi.values().iter().map(|&v| v < 0.0).collect())
}

/// The truncated 5×5 Gaussian (variance 0.5) used to smooth φ between LIF steps.
pub fn phi_smoothing_kernel() -> GaussianKernel {
    GaussianKernel::truncated(PHI_SMOOTHING_VARIANCE.sqrt(), PHI_SMOOTHING_RADIUS)
        .expect("constant smoothing parameters are valid")
}

pub fn regularize_phi(ls: &LevelSet) -> LevelSet {
    LevelSet { phi: convolve(&ls.phi, &phi_smoothing_kernel()), epsilon: ls.epsilon }
}

/// A binary image on the same grid as a field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

impl Mask {
    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Self {
        assert_eq!(bits.len(), width * height, "mask length does not match grid");
        Self { width, height, bits }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self { width, height, bits }
    }

    pub fn empty(width: usize, height: usize) -> Self {
        Self::from_bits(width, height, vec![false; width * height])
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
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
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    #[inline]
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn union(&self, other: &Mask) -> Mask {
        assert_eq!(self.dims(), other.dims(), "union of mismatched masks");
        let bits = self.bits.iter().zip(&other.bits).map(|(&a, &b)| a || b).collect();
        Mask::from_bits(self.width, self.height, bits)
    }

    /// Set pixels with an unset 4-neighbour: the pixel trace of the zero
    /// level set on the object side. The grid edge does not count as unset.
    pub fn boundary(&self) -> Mask {
        let (w, h) = (self.width, self.height);
        Mask::from_fn(w, h, |x, y| {
            self.get(x, y)
                && ((x > 0 && !self.get(x - 1, y))
                    || (x + 1 < w && !self.get(x + 1, y))
                    || (y > 0 && !self.get(x, y - 1))
                    || (y + 1 < h && !self.get(x, y + 1)))
        })
    }

    /// 1·`value` on set pixels, 0 elsewhere.
    pub fn to_field(&self, value: f64) -> ScalarField2D {
        ScalarField2D::from_raw(
            self.width,
            self.height,
            self.bits.iter().map(|&b| if b { value } else { 0.0 }).collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn boundary_is_the_inner_ring() {
        let m = Mask::from_fn(6, 5, |x, y| (1..5).contains(&x) && (1..4).contains(&y));
        let b = m.boundary();
        assert_eq!(b.count(), 4 * 3 - 2);
        assert!(!b.get(2, 2) && b.get(1, 1) && !b.get(0, 0));
        assert_eq!(Mask::from_fn(3, 3, |_, _| true).boundary().count(), 0);
    }

    #[test]
    fn heaviside_reference_values() {
        assert_eq!(heaviside_eps(0.0, 0.3), 0.5);
        assert!((heaviside_eps(1.0, 1.0) - 0.75).abs() < 1e-15);
        assert!((heaviside_eps(-1.0, 1.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn dirac_reference_values() {
        assert!((dirac_eps(0.0, 1.0) - std::f64::consts::FRAC_1_PI).abs() < 1e-15);
        assert_eq!(dirac_eps(2.0, 1.0), dirac_eps(-2.0, 1.0));
    }

    #[test]
    fn dirac_integrates_to_one() {
        let h = 0.01;
        let n = 20_000;
        let mut total = 0.0;
        for i in 0..n {
            let a = -100.0 + i as f64 * h;
            total += 0.5 * h * (dirac_eps(a, 1.0) + dirac_eps(a + h, 1.0));
        }
        assert!((total - 1.0).abs() < 0.01, "{total}");
    }

    #[test]
    fn binary_step_init() {
        let spec = InitSpec::new(vec![Shape::Rect { x0: 10, y0: 10, x1: 20, y1: 20 }], 2.0);
        let ls = init_binary_step(32, 32, &spec, 1.0).unwrap();
        assert_eq!(ls.phi.get(15, 15), -2.0);
        assert_eq!(ls.phi.get(0, 0), 2.0);
        assert_eq!(ls.mask().count(), 100);

        let empty = init_binary_step(8, 8, &InitSpec::new(vec![], 2.0), 1.0).unwrap();
        assert!(empty.phi.values().iter().all(|&v| v == 2.0));
    }

    #[test]
    fn out_of_bounds_shapes_are_rejected() {
        let rect = InitSpec::new(vec![Shape::Rect { x0: 0, y0: 0, x1: 9, y1: 4 }], 2.0);
        assert!(init_binary_step(8, 8, &rect, 1.0).is_err());
        let circle = InitSpec::new(vec![Shape::Circle { cx: 2.0, cy: 4.0, r: 3.0 }], 2.0);
        assert!(init_binary_step(8, 8, &circle, 1.0).is_err());
        let bad_c0 = InitSpec::new(vec![], 0.0);
        assert!(init_binary_step(8, 8, &bad_c0, 1.0).is_err());
    }

    #[test]
    fn circle_mask_matches_disk() {
        let spec = InitSpec::new(vec![Shape::Circle { cx: 10.0, cy: 10.0, r: 4.0 }], 2.0);
        let ls = init_binary_step(21, 21, &spec, 1.0).unwrap();
        let mask = ls.mask();
        for y in 0..21 {
            for x in 0..21 {
                let d2 = (x as f64 - 10.0).powi(2) + (y as f64 - 10.0).powi(2);
                assert_eq!(mask.get(x, y), d2 <= 16.0);
            }
        }
    }

    #[test]
    fn mask_thresholds_on_sign() {
        let phi = ScalarField2D::from_fn(10, 1, |x, _| x as f64 - 5.0).unwrap();
        let mask = extract_mask(&LevelSet::new(phi, 1.0).unwrap());
        let expected: Vec<bool> = (0..10).map(|x| x < 5).collect();
        assert_eq!(mask.bits(), expected.as_slice());

        let positive = LevelSet::new(ScalarField2D::filled(4, 4, 0.5).unwrap(), 1.0).unwrap();
        assert_eq!(positive.mask().count(), 0);
    }

    #[test]
    fn smoothing_kernel_shape() {
        let k = phi_smoothing_kernel();
        assert_eq!(k.weights().len(), 5);
        assert!((k.sigma() * k.sigma() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn regularize_phi_behaviour() {
        let flat = LevelSet::new(ScalarField2D::filled(6, 6, -2.0).unwrap(), 1.0).unwrap();
        let out = regularize_phi(&flat);
        assert!(out.phi.values().iter().all(|&v| (v + 2.0).abs() < 1e-12));

        let spec = InitSpec::new(vec![Shape::Rect { x0: 4, y0: 0, x1: 8, y1: 8 }], 2.0);
        let step = init_binary_step(8, 8, &spec, 1.0).unwrap();
        let smooth = regularize_phi(&step);
        for x in [3, 4] {
            let v = smooth.phi.get(x, 4);
            assert!(v > -2.0 && v < 2.0, "{v}");
        }

        let mut imp = ScalarField2D::zeros(9, 9).unwrap();
        imp.set(4, 4, 1.0);
        let out = regularize_phi(&LevelSet::new(imp, 1.0).unwrap());
        let k = phi_smoothing_kernel();
        for dy in -2isize..=2 {
            for dx in -2isize..=2 {
                let want = k.weight_2d(dx, dy);
                let got = out.phi.get((4 + dx) as usize, (4 + dy) as usize);
                assert!((got - want).abs() < 1e-15);
            }
        }
    }
}
