//! Local Gaussian distribution fitting (LGDF) flow: descent on the local
//! negative log-likelihood, with the same length and distance terms as RSF.

use super::{euler, regularization_energy, regularization_force, Context, ModelParams};
use crate::error::Result;
use crate::field::{convolve, GaussianKernel, ScalarField2D};
use crate::fitting::{fit_means_cached, fit_variances_cached, lgdf_coefficients, FittingPair};
use crate::levelset::LevelSet;
use crate::swap::swap_lgdf_in_place;

pub(crate) struct LgdfFit {
    pub means: FittingPair,
    pub variances: FittingPair,
    /// convolve of H, H·I, H·I²
    pub m0: ScalarField2D,
    pub m1: ScalarField2D,
    pub m2: ScalarField2D,
}

pub(crate) fn prepare(ctx: &Context, phi: &LevelSet) -> LgdfFit {
    let h = phi.heaviside();
    let fit = fit_means_cached(&ctx.stats, &h, &ctx.kernel);
    let mut variances = fit_variances_cached(&ctx.stats, &h, &fit, &ctx.kernel);
    let mut means = fit.pair;
    swap_lgdf_in_place(&mut means, &mut variances, ctx.params.polarity, ctx.params.variance_swap);
    let m2 = convolve(&h.zip_map(&ctx.stats.image_sq, |h, i2| h * i2), &ctx.kernel);
    LgdfFit { means, variances, m0: fit.den1, m1: fit.num1, m2 }
}

/// `λ₁ē₁ − λ₂ē₂` via three convolutions.
fn residual_difference(
    image: &ScalarField2D,
    means: &FittingPair,
    variances: &FittingPair,
    params: &ModelParams,
    kernel: &GaussianKernel,
) -> ScalarField2D {
    let (a1, b1, c1) = lgdf_coefficients(&means.side1, &variances.side1, params.lambda1);
    let (a2, b2, c2) = lgdf_coefficients(&means.side2, &variances.side2, params.lambda2);
    let ca = convolve(&a1.zip_map(&a2, |x, y| x - y), kernel);
    let cb = convolve(&b1.zip_map(&b2, |x, y| x - y), kernel);
    let cc = convolve(&c1.zip_map(&c2, |x, y| x - y), kernel);
    let (w, h) = image.dims();
    let out = (0..image.len())
        .map(|i| {
            let iv = image.values()[i];
            ca.values()[i] - iv * cb.values()[i] + iv * iv * cc.values()[i]
        })
        .collect();
    ScalarField2D::from_raw(w, h, out)
}

pub(crate) fn advance(ctx: &Context, phi: &LevelSet, f: &LgdfFit, iteration: usize) -> Result<LevelSet> {
    let p = &ctx.params;
    let dirac = phi.dirac();
    let diff = residual_difference(&ctx.stats.image, &f.means, &f.variances, p, &ctx.kernel);
    let reg = regularization_force(&phi.phi, &dirac, p.nu, p.mu);
    let (w, h) = diff.dims();
    let force = (0..diff.len()).map(|i| -dirac.values()[i] * diff.values()[i] + reg.values()[i]).collect();
    euler(phi, &ScalarField2D::from_raw(w, h, force), p.dt, iteration)
}

/// `Σₓ [aᵢ·c(w) − bᵢ·c(w·I) + cᵢ·c(w·I²)]` summed over both sides.
fn data_energy_from_moments(
    means: &FittingPair,
    variances: &FittingPair,
    params: &ModelParams,
    moments1: [&ScalarField2D; 3],
    moments2: [&ScalarField2D; 3],
) -> f64 {
    let (a1, b1, c1) = lgdf_coefficients(&means.side1, &variances.side1, params.lambda1);
    let (a2, b2, c2) = lgdf_coefficients(&means.side2, &variances.side2, params.lambda2);
    let [p0, p1, p2] = moments1;
    let [q0, q1, q2] = moments2;
    (0..a1.len())
        .map(|i| {
            a1.values()[i] * p0.values()[i] - b1.values()[i] * p1.values()[i]
                + c1.values()[i] * p2.values()[i]
                + a2.values()[i] * q0.values()[i]
                - b2.values()[i] * q1.values()[i]
                + c2.values()[i] * q2.values()[i]
        })
        .sum()
}

pub(crate) fn energy(ctx: &Context, phi: &LevelSet, f: &LgdfFit) -> f64 {
    let s = &ctx.stats;
    let n0 = s.mass.zip_map(&f.m0, |a, b| a - b);
    let n1 = s.local_sum.zip_map(&f.m1, |a, b| a - b);
    let n2 = s.local_sum_sq.zip_map(&f.m2, |a, b| a - b);
    let data = data_energy_from_moments(&f.means, &f.variances, &ctx.params, [&f.m0, &f.m1, &f.m2], [&n0, &n1, &n2]);
    data + regularization_energy(phi, ctx.params.nu, ctx.params.mu)
}

/// One explicit Euler step of the LGDF flow with means and variances
/// recomputed from `phi` (exchanged when `params.polarity` is active).
pub fn lgdf_step(
    phi: &LevelSet,
    image: &ScalarField2D,
    params: &ModelParams,
    kernel: &GaussianKernel,
) -> Result<LevelSet> {
    image.ensure_same_dims(&phi.phi)?;
    let ctx = Context::with_kernel(image, params, kernel)?;
    let f = prepare(&ctx, phi);
    advance(&ctx, phi, &f, 1)
}

/// Full LGDF energy at `phi`, using the same fitting values as [`lgdf_step`].
pub fn lgdf_energy(
    phi: &LevelSet,
    image: &ScalarField2D,
    params: &ModelParams,
    kernel: &GaussianKernel,
) -> Result<f64> {
    image.ensure_same_dims(&phi.phi)?;
    let ctx = Context::with_kernel(image, params, kernel)?;
    let f = prepare(&ctx, phi);
    Ok(energy(&ctx, phi, &f))
}

/// Data part of the flow, `−δ_ε(φ)(λ₁ē₁ − λ₂ē₂)`, for frozen means and variances.
pub fn lgdf_data_force(
    phi: &LevelSet,
    image: &ScalarField2D,
    means: &FittingPair,
    variances: &FittingPair,
    params: &ModelParams,
    kernel: &GaussianKernel,
) -> Result<ScalarField2D> {
    image.ensure_same_dims(&phi.phi)?;
    image.ensure_same_dims(&means.side1)?;
    image.ensure_same_dims(&variances.side1)?;
    let diff = residual_difference(image, means, variances, params, kernel);
    Ok(phi.dirac().zip_map(&diff, |d, e| -d * e))
}

/// Negative log-likelihood data energy (constant `½·log 2π` dropped) for
/// frozen means and variances.
pub fn lgdf_data_energy(
    phi: &LevelSet,
    image: &ScalarField2D,
    means: &FittingPair,
    variances: &FittingPair,
    params: &ModelParams,
    kernel: &GaussianKernel,
) -> Result<f64> {
    image.ensure_same_dims(&phi.phi)?;
    image.ensure_same_dims(&means.side1)?;
    image.ensure_same_dims(&variances.side1)?;
    let h = phi.heaviside();
    let outer = h.map(|v| 1.0 - v);
    let moments = |w: &ScalarField2D| {
        [
            convolve(w, kernel),
            convolve(&w.zip_map(image, |a, b| a * b), kernel),
            convolve(&w.zip_map(image, |a, b| a * b * b), kernel),
        ]
    };
    let [p0, p1, p2] = moments(&h);
    let [q0, q1, q2] = moments(&outer);
    Ok(data_energy_from_moments(means, variances, params, [&p0, &p1, &p2], [&q0, &q1, &q2]))
}
