//! Local image fitting (LIF) flow.
//!
//! `I_fit = m₁·H_ε(φ) + m₂·(1 − H_ε(φ))`; the flow is the first variation of
//! `½Σ(I − I_fit)²` with the fits held fixed, followed by Gaussian smoothing
//! of φ.

use super::{euler, Context, ModelParams};
use crate::error::Result;
use crate::field::{GaussianKernel, ScalarField2D};
use crate::fitting::{fit_means_cached, FittingPair};
use crate::levelset::{heaviside_eps, regularize_phi, LevelSet};
use crate::swap::swap_pair_in_place;

pub(crate) struct LifFit {
    pub pair: FittingPair,
    pub fitted_image: ScalarField2D,
}

fn fitted_image(phi: &LevelSet, pair: &FittingPair) -> ScalarField2D {
    let eps = phi.epsilon;
    let (w, h) = phi.dims();
    let out = (0..phi.phi.len())
        .map(|i| {
            let hv = heaviside_eps(phi.phi.values()[i], eps);
            pair.side1.values()[i] * hv + pair.side2.values()[i] * (1.0 - hv)
        })
        .collect();
    ScalarField2D::from_raw(w, h, out)
}

pub(crate) fn prepare(ctx: &Context, phi: &LevelSet) -> LifFit {
    let h = phi.heaviside();
    let mut pair = fit_means_cached(&ctx.stats, &h, &ctx.kernel).pair;
    swap_pair_in_place(&mut pair, ctx.params.polarity);
    LifFit { fitted_image: fitted_image(phi, &pair), pair }
}

fn force(image: &ScalarField2D, phi: &LevelSet, pair: &FittingPair, fitted: &ScalarField2D) -> ScalarField2D {
    let dirac = phi.dirac();
    let (w, h) = image.dims();
    let out = (0..image.len())
        .map(|i| {
            dirac.values()[i]
                * (image.values()[i] - fitted.values()[i])
                * (pair.side1.values()[i] - pair.side2.values()[i])
        })
        .collect();
    ScalarField2D::from_raw(w, h, out)
}

pub(crate) fn advance(ctx: &Context, phi: &LevelSet, f: &LifFit, iteration: usize) -> Result<LevelSet> {
    let drive = force(&ctx.stats.image, phi, &f.pair, &f.fitted_image);
    let moved = euler(phi, &drive, ctx.params.dt, iteration)?;
    Ok(regularize_phi(&moved))
}

fn half_squared_residual(image: &ScalarField2D, fitted: &ScalarField2D) -> f64 {
    image.values().iter().zip(fitted.values()).map(|(i, f)| 0.5 * (i - f) * (i - f)).sum()
}

pub(crate) fn energy(ctx: &Context, f: &LifFit) -> f64 {
    half_squared_residual(&ctx.stats.image, &f.fitted_image)
}

/// One LIF iteration: Euler step of the data flow, then φ smoothing.
pub fn lif_step(
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

/// `½Σ(I − I_fit)²` with fits recomputed from `phi`.
pub fn lif_energy(phi: &LevelSet, image: &ScalarField2D, params: &ModelParams, kernel: &GaussianKernel) -> Result<f64> {
    image.ensure_same_dims(&phi.phi)?;
    let ctx = Context::with_kernel(image, params, kernel)?;
    Ok(energy(&ctx, &prepare(&ctx, phi)))
}

/// `½Σ(I − I_fit)²` for frozen fits.
pub fn lif_energy_with(phi: &LevelSet, image: &ScalarField2D, pair: &FittingPair) -> Result<f64> {
    image.ensure_same_dims(&phi.phi)?;
    image.ensure_same_dims(&pair.side1)?;
    Ok(half_squared_residual(image, &fitted_image(phi, pair)))
}

/// `δ_ε(φ)·(I − I_fit)·(m₁ − m₂)` for frozen fits.
pub fn lif_data_force(phi: &LevelSet, image: &ScalarField2D, pair: &FittingPair) -> Result<ScalarField2D> {
    image.ensure_same_dims(&phi.phi)?;
    image.ensure_same_dims(&pair.side1)?;
    Ok(force(image, phi, pair, &fitted_image(phi, pair)))
}
