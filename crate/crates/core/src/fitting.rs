//! Local fitting statistics on the two sides of the contour.
//!
//! `side1` is always the positive side of φ (weight `H_ε(φ)`), `side2` the
//! negative side (weight `1 - H_ε(φ)`). Every Gaussian-weighted integral is
//! evaluated as a convolution expansion rather than a per-pixel double sum.

use crate::error::Result;
use crate::field::{convolve, GaussianKernel, ScalarField2D};

/// Floor applied to the local weight mass in the mean and variance quotients.
pub const DENOMINATOR_FLOOR: f64 = 1e-10;
/// Lower bound on local variances.
pub const VARIANCE_FLOOR: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FitKind {
    Means,
    Variances,
}

/// The two local fitting fields, tagged by what they hold.
#[derive(Clone, Debug, PartialEq)]
pub struct FittingPair {
    pub side1: ScalarField2D,
    pub side2: ScalarField2D,
    pub kind: FitKind,
}

impl FittingPair {
    pub fn new(side1: ScalarField2D, side2: ScalarField2D, kind: FitKind) -> Result<Self> {
        side1.ensure_same_dims(&side2)?;
        Ok(Self { side1, side2, kind })
    }
}

/// Per-image convolutions that stay fixed for the length of a run.
#[derive(Clone, Debug)]
pub struct ImageStats {
    pub image: ScalarField2D,
    pub image_sq: ScalarField2D,
    /// convolve(1)
    pub mass: ScalarField2D,
    /// convolve(I)
    pub local_sum: ScalarField2D,
    /// convolve(I²)
    pub local_sum_sq: ScalarField2D,
}

impl ImageStats {
    pub fn new(image: &ScalarField2D, kernel: &GaussianKernel) -> Self {
        let (w, h) = image.dims();
        let image_sq = image.map(|v| v * v);
        let ones = ScalarField2D::from_raw(w, h, vec![1.0; w * h]);
        Self {
            image: image.clone(),
            mass: convolve(&ones, kernel),
            local_sum: convolve(image, kernel),
            local_sum_sq: convolve(&image_sq, kernel),
            image_sq,
        }
    }
}

#[inline]
fn quotient(num: f64, den: f64) -> f64 {
    num / den.max(DENOMINATOR_FLOOR)
}

/// Local Gaussian-weighted means of `image` on both sides of the contour.
pub fn fit_means(image: &ScalarField2D, heaviside: &ScalarField2D, kernel: &GaussianKernel) -> Result<FittingPair> {
    image.ensure_same_dims(heaviside)?;
    let outer = heaviside.map(|h| 1.0 - h);
    let num1 = convolve(&heaviside.zip_map(image, |h, i| h * i), kernel);
    let den1 = convolve(heaviside, kernel);
    let num2 = convolve(&outer.zip_map(image, |h, i| h * i), kernel);
    let den2 = convolve(&outer, kernel);
    FittingPair::new(num1.zip_map(&den1, quotient), num2.zip_map(&den2, quotient), FitKind::Means)
}

/// Intermediate convolutions of a mean fit, reused by the energy and the
/// variance computation.
#[derive(Clone, Debug)]
pub(crate) struct MeanFit {
    pub pair: FittingPair,
    /// convolve(H), convolve(H·I)
    pub den1: ScalarField2D,
    pub num1: ScalarField2D,
}

impl MeanFit {
    pub fn den2(&self, stats: &ImageStats) -> ScalarField2D {
        stats.mass.zip_map(&self.den1, |m, d| m - d)
    }

    pub fn num2(&self, stats: &ImageStats) -> ScalarField2D {
        stats.local_sum.zip_map(&self.num1, |s, n| s - n)
    }
}

/// [`fit_means`] using cached image convolutions: the negative-side terms
/// follow from linearity, `conv((1-H)·I) = conv(I) - conv(H·I)`.
pub(crate) fn fit_means_cached(stats: &ImageStats, heaviside: &ScalarField2D, kernel: &GaussianKernel) -> MeanFit {
    let num1 = convolve(&heaviside.zip_map(&stats.image, |h, i| h * i), kernel);
    let den1 = convolve(heaviside, kernel);
    let n = num1.len();
    let (w, h) = num1.dims();
    let mut side1 = Vec::with_capacity(n);
    let mut side2 = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (num1.values()[i], den1.values()[i]);
        side1.push(quotient(a, b));
        side2.push(quotient(stats.local_sum.values()[i] - a, stats.mass.values()[i] - b));
    }
    MeanFit {
        pair: FittingPair {
            side1: ScalarField2D::from_raw(w, h, side1),
            side2: ScalarField2D::from_raw(w, h, side2),
            kind: FitKind::Means,
        },
        den1,
        num1,
    }
}

/// Local weighted variances about the given side means, floored at
/// [`VARIANCE_FLOOR`].
pub fn fit_variances(
    image: &ScalarField2D,
    heaviside: &ScalarField2D,
    means: &FittingPair,
    kernel: &GaussianKernel,
) -> Result<FittingPair> {
    image.ensure_same_dims(heaviside)?;
    image.ensure_same_dims(&means.side1)?;
    let outer = heaviside.map(|h| 1.0 - h);
    let side = |weight: &ScalarField2D, mean: &ScalarField2D| {
        let w0 = convolve(weight, kernel);
        let w1 = convolve(&weight.zip_map(image, |h, i| h * i), kernel);
        let w2 = convolve(&weight.zip_map(image, |h, i| h * i * i), kernel);
        variance_from_moments(&w0, &w1, &w2, mean)
    };
    FittingPair::new(side(heaviside, &means.side1), side(&outer, &means.side2), FitKind::Variances)
}

/// Cached-statistics variant of [`fit_variances`] for the solver loop.
pub(crate) fn fit_variances_cached(
    stats: &ImageStats,
    heaviside: &ScalarField2D,
    fit: &MeanFit,
    kernel: &GaussianKernel,
) -> FittingPair {
    let m2_1 = convolve(&heaviside.zip_map(&stats.image_sq, |h, i2| h * i2), kernel);
    let m2_2 = stats.local_sum_sq.zip_map(&m2_1, |s, a| s - a);
    FittingPair {
        side1: variance_from_moments(&fit.den1, &fit.num1, &m2_1, &fit.pair.side1),
        side2: variance_from_moments(&fit.den2(stats), &fit.num2(stats), &m2_2, &fit.pair.side2),
        kind: FitKind::Variances,
    }
}

/// `[m2 - 2u·m1 + u²·m0] / m0`, floored.
fn variance_from_moments(
    m0: &ScalarField2D,
    m1: &ScalarField2D,
    m2: &ScalarField2D,
    mean: &ScalarField2D,
) -> ScalarField2D {
    let (w, h) = m0.dims();
    let out = (0..m0.len())
        .map(|i| {
            let u = mean.values()[i];
            let num = m2.values()[i] - 2.0 * u * m1.values()[i] + u * u * m0.values()[i];
            quotient(num, m0.values()[i]).max(VARIANCE_FLOOR)
        })
        .collect();
    ScalarField2D::from_raw(w, h, out)
}

/// `eᵢ(x) = I(x)²·conv(1)(x) - 2·I(x)·conv(fᵢ)(x) + conv(fᵢ²)(x)`.
pub fn e_terms(
    image: &ScalarField2D,
    pair: &FittingPair,
    kernel: &GaussianKernel,
) -> Result<(ScalarField2D, ScalarField2D)> {
    image.ensure_same_dims(&pair.side1)?;
    let (w, h) = image.dims();
    let mass = convolve(&ScalarField2D::from_raw(w, h, vec![1.0; w * h]), kernel);
    let term = |f: &ScalarField2D| {
        let cf = convolve(f, kernel);
        let cf2 = convolve(&f.map(|v| v * v), kernel);
        let out = (0..image.len())
            .map(|i| {
                let iv = image.values()[i];
                iv * iv * mass.values()[i] - 2.0 * iv * cf.values()[i] + cf2.values()[i]
            })
            .collect();
        ScalarField2D::from_raw(w, h, out)
    };
    Ok((term(&pair.side1), term(&pair.side2)))
}

/// Negative log-likelihood residuals of the local Gaussian model (the
/// constant `½·log 2π` dropped):
/// `eᵢ(x) = ∫K(y-x)[log σᵢ(y) + (uᵢ(y) - I(x))² / (2σᵢ²(y))] dy`.
pub fn lgdf_e_terms(
    image: &ScalarField2D,
    means: &FittingPair,
    variances: &FittingPair,
    kernel: &GaussianKernel,
) -> Result<(ScalarField2D, ScalarField2D)> {
    image.ensure_same_dims(&means.side1)?;
    image.ensure_same_dims(&variances.side1)?;
    let coeffs = |u: &ScalarField2D, var: &ScalarField2D| lgdf_coefficients(u, var, 1.0);
    let (a1, b1, c1) = coeffs(&means.side1, &variances.side1);
    let (a2, b2, c2) = coeffs(&means.side2, &variances.side2);
    let term = |a: &ScalarField2D, b: &ScalarField2D, c: &ScalarField2D| {
        let (ca, cb, cc) = (convolve(a, kernel), convolve(b, kernel), convolve(c, kernel));
        let (w, h) = image.dims();
        let out = (0..image.len())
            .map(|i| {
                let iv = image.values()[i];
                ca.values()[i] - iv * cb.values()[i] + iv * iv * cc.values()[i]
            })
            .collect();
        ScalarField2D::from_raw(w, h, out)
    };
    Ok((term(&a1, &b1, &c1), term(&a2, &b2, &c2)))
}

/// Pointwise `(λ·(½log σ² + u²/(2σ²)), λ·u/σ², λ/(2σ²))`.
pub(crate) fn lgdf_coefficients(
    u: &ScalarField2D,
    var: &ScalarField2D,
    lambda: f64,
) -> (ScalarField2D, ScalarField2D, ScalarField2D) {
    let a = u.zip_map(var, |u, v| lambda * (0.5 * v.ln() + u * u / (2.0 * v)));
    let b = u.zip_map(var, |u, v| lambda * u / v);
    let c = var.map(|v| lambda / (2.0 * v));
    (a, b, c)
}
