//! Region-scalable fitting (RSF) flow.

use super::{euler, regularization_energy, regularization_force, Context, ModelParams};
use crate::error::Result;
use crate::field::{convolve, GaussianKernel, ScalarField2D};
use crate::fitting::{fit_means_cached, FittingPair, MeanFit};
use crate::levelset::LevelSet;
use crate::swap::swap_pair_in_place;

pub(crate) struct RsfFit {
    /// Side means after any exchange, with the H-weighted convolutions.
    pub fit: MeanFit,
    /// convolve(H·I²)
    pub weighted_sq: ScalarField2D,
}

pub(crate) fn prepare(ctx: &Context, phi: &LevelSet) -> RsfFit {
    let h = phi.heaviside();
    let mut fit = fit_means_cached(&ctx.stats, &h, &ctx.kernel);
    swap_pair_in_place(&mut fit.pair, ctx.params.polarity);
    let weighted_sq = convolve(&h.zip_map(&ctx.stats.image_sq, |h, i2| h * i2), &ctx.kernel);
    RsfFit { fit, weighted_sq }
}

/// `λ₁e₁ − λ₂e₂` from two convolutions, using linearity of the expansion.
pub(crate) fn residual_difference(
    image: &ScalarField2D,
    mass: &ScalarField2D,
    pair: &FittingPair,
    params: &ModelParams,
    kernel: &GaussianKernel,
) -> ScalarField2D {
    let (l1, l2) = (params.lambda1, params.lambda2);
    let linear = convolve(&pair.side1.zip_map(&pair.side2, |a, b| l1 * a - l2 * b), kernel);
    let quadratic = convolve(&pair.side1.zip_map(&pair.side2, |a, b| l1 * a * a - l2 * b * b), kernel);
    let (w, h) = image.dims();
    let out = (0..image.len())
        .map(|i| {
            let iv = image.values()[i];
            (l1 - l2) * iv * iv * mass.values()[i] - 2.0 * iv * linear.values()[i] + quadratic.values()[i]
        })
        .collect();
    ScalarField2D::from_raw(w, h, out)
}

pub(crate) fn advance(ctx: &Context, phi: &LevelSet, f: &RsfFit, iteration: usize) -> Result<LevelSet> {
    let p = &ctx.params;
    let dirac = phi.dirac();
    let diff = residual_difference(&ctx.stats.image, &ctx.stats.mass, &f.fit.pair, p, &ctx.kernel);
    let reg = regularization_force(&phi.phi, &dirac, p.nu, p.mu);
    let force = (0..diff.len()).map(|i| -dirac.values()[i] * diff.values()[i] + reg.values()[i]).collect();
    let (w, h) = diff.dims();
    euler(phi, &ScalarField2D::from_raw(w, h, force), p.dt, iteration)
}

/// Data energy `Σₓ λ₁[f₁²·c(H) − 2f₁·c(HI) + c(HI²)] + λ₂[…(1−H)…]`.
fn data_energy(ctx: &Context, f: &RsfFit) -> f64 {
    let p = &ctx.params;
    let s = &ctx.stats;
    let mut total = 0.0;
    for i in 0..s.image.len() {
        let (f1, f2) = (f.fit.pair.side1.values()[i], f.fit.pair.side2.values()[i]);
        let (m1, n1, q1) = (f.fit.den1.values()[i], f.fit.num1.values()[i], f.weighted_sq.values()[i]);
        let (m2, n2, q2) = (s.mass.values()[i] - m1, s.local_sum.values()[i] - n1, s.local_sum_sq.values()[i] - q1);
        total += p.lambda1 * (f1 * f1 * m1 - 2.0 * f1 * n1 + q1);
        total += p.lambda2 * (f2 * f2 * m2 - 2.0 * f2 * n2 + q2);
    }
    total
}

pub(crate) fn energy(ctx: &Context, phi: &LevelSet, f: &RsfFit) -> f64 {
    data_energy(ctx, f) + regularization_energy(phi, ctx.params.nu, ctx.params.mu)
}

/// One explicit Euler step of the RSF flow with fits recomputed from `phi`
/// (exchanged when `params.polarity` is active).
pub fn rsf_step(
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

/// Full RSF energy at `phi`, using the same fitting values as [`rsf_step`].
pub fn rsf_energy(phi: &LevelSet, image: &ScalarField2D, params: &ModelParams, kernel: &GaussianKernel) -> Result<f64> {
    image.ensure_same_dims(&phi.phi)?;
    let ctx = Context::with_kernel(image, params, kernel)?;
    let f = prepare(&ctx, phi);
    Ok(energy(&ctx, phi, &f))
}

/// Data part of the flow, `−δ_ε(φ)(λ₁e₁ − λ₂e₂)`, for frozen fitting values.
pub fn rsf_data_force(
    phi: &LevelSet,
    image: &ScalarField2D,
    pair: &FittingPair,
    params: &ModelParams,
    kernel: &GaussianKernel,
) -> Result<ScalarField2D> {
    image.ensure_same_dims(&phi.phi)?;
    image.ensure_same_dims(&pair.side1)?;
    let (w, h) = image.dims();
    let mass = convolve(&ScalarField2D::from_raw(w, h, vec![1.0; w * h]), kernel);
    let diff = residual_difference(image, &mass, pair, params, kernel);
    Ok(phi.dirac().zip_map(&diff, |d, e| -d * e))
}

/// Data energy for frozen fitting values:
/// `Σₓ Σ_y K(x−y)·[λ₁|I(y) − f₁(x)|²H(y) + λ₂|I(y) − f₂(x)|²(1 − H(y))]`.
pub fn rsf_data_energy(
    phi: &LevelSet,
    image: &ScalarField2D,
    pair: &FittingPair,
    params: &ModelParams,
    kernel: &GaussianKernel,
) -> Result<f64> {
    image.ensure_same_dims(&phi.phi)?;
    image.ensure_same_dims(&pair.side1)?;
    let h = phi.heaviside();
    let outer = h.map(|v| 1.0 - v);
    let side = |weight: &ScalarField2D, fit: &ScalarField2D, lambda: f64| {
        let c0 = convolve(weight, kernel);
        let c1 = convolve(&weight.zip_map(image, |a, b| a * b), kernel);
        let c2 = convolve(&weight.zip_map(image, |a, b| a * b * b), kernel);
        (0..image.len())
            .map(|i| {
                let f = fit.values()[i];
                lambda * (f * f * c0.values()[i] - 2.0 * f * c1.values()[i] + c2.values()[i])
            })
            .sum::<f64>()
    };
    Ok(side(&h, &pair.side1, params.lambda1) + side(&outer, &pair.side2, params.lambda2))
}
