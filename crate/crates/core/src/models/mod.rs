//! Curve-evolution engines for the two-phase local fitting models and the
//! shared solver loop.
//!
//! Each engine recomputes its fitting values from the current φ, optionally
//! exchanges them according to [`Polarity`], and takes one explicit Euler
//! step of its gradient flow.

mod lgdf;
mod lif;
mod rsf;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use lgdf::{lgdf_data_energy, lgdf_data_force, lgdf_energy, lgdf_step};
pub use lif::{lif_data_force, lif_energy, lif_energy_with, lif_step};
pub use rsf::{rsf_data_energy, rsf_data_force, rsf_energy, rsf_step};

use crate::error::{Error, Result};
use crate::field::{curvature, gradient, laplacian, GaussianKernel, ScalarField2D};
use crate::fitting::{FittingPair, ImageStats};
use crate::levelset::{init_binary_step, InitSpec, LevelSet, Mask};
use crate::swap::{Polarity, VarianceSwap};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModelKind {
    Rsf,
    Lif,
    Lgdf,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Rsf, ModelKind::Lif, ModelKind::Lgdf];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Rsf => "rsf",
            ModelKind::Lif => "lif",
            ModelKind::Lgdf => "lgdf",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "rsf" => Ok(ModelKind::Rsf),
            "lif" => Ok(ModelKind::Lif),
            "lgdf" => Ok(ModelKind::Lgdf),
            other => Err(format!("unknown model `{other}` (expected rsf, lif or lgdf)")),
        }
    }
}

/// Every scalar that controls an evolution.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams {
    pub lambda1: f64,
    pub lambda2: f64,
    /// Length-term weight.
    pub nu: f64,
    /// Distance-regularization weight.
    pub mu: f64,
    /// Width of the regularized Heaviside/Dirac pair.
    pub epsilon: f64,
    /// Scale of the local Gaussian window.
    pub sigma: f64,
    /// Truncation radius of the window; `None` means `ceil(2σ)`.
    pub kernel_radius: Option<usize>,
    pub dt: f64,
    pub c0: f64,
    pub max_iters: usize,
    pub polarity: Polarity,
    pub variance_swap: VarianceSwap,
    /// Stop once the mask has not changed for [`EARLY_STOP_WINDOW`] iterations.
    pub early_stop: bool,
}

/// Consecutive unchanged-mask iterations that trigger an early stop.
pub const EARLY_STOP_WINDOW: usize = 10;

/// Iteration budget used when none is configured.
pub const DEFAULT_MAX_ITERS: usize = 500;

impl ModelParams {
    /// RSF defaults: `c0=2, σ=3, ε=1, λ₁=λ₂=1, μ=1, ν=0.001·255², Δt=0.1`.
    pub fn rsf() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 1.0,
            nu: 0.001 * 255.0 * 255.0,
            mu: 1.0,
            epsilon: 1.0,
            sigma: 3.0,
            kernel_radius: None,
            dt: 0.1,
            c0: 2.0,
            max_iters: DEFAULT_MAX_ITERS,
            polarity: Polarity::Off,
            variance_swap: VarianceSwap::Independent,
            early_stop: false,
        }
    }

    /// LIF defaults: `c0=2, σ=3, ε=1, Δt=0.01`. The LIF flow has no length or
    /// distance term, so `ν = μ = 0`.
    pub fn lif() -> Self {
        Self { nu: 0.0, mu: 0.0, dt: 0.01, ..Self::rsf() }
    }

    /// LGDF defaults: `c0=2, σ=3, ε=1, λ₁=λ₂=1, μ=0.01, ν=1, Δt=1`.
    pub fn lgdf() -> Self {
        Self { nu: 1.0, mu: 0.01, dt: 1.0, ..Self::rsf() }
    }

    /// Four-phase defaults: the RSF values with the heavier length weight
    /// `ν = 0.003·255²`.
    pub fn mrsf() -> Self {
        Self { nu: 0.003 * 255.0 * 255.0, ..Self::rsf() }
    }

    pub fn defaults_for(model: ModelKind) -> Self {
        match model {
            ModelKind::Rsf => Self::rsf(),
            ModelKind::Lif => Self::lif(),
            ModelKind::Lgdf => Self::lgdf(),
        }
    }

    pub fn with_polarity(mut self, polarity: Polarity) -> Self {
        self.polarity = polarity;
        self
    }

    pub fn with_max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        self.sigma = sigma;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("epsilon", self.epsilon),
            ("sigma", self.sigma),
            ("dt", self.dt),
            ("c0", self.c0),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("nu", self.nu), ("mu", self.mu)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be non-negative, got {v}")));
            }
        }
        Ok(())
    }

    /// The local window implied by `sigma` and `kernel_radius`.
    pub fn kernel(&self) -> Result<GaussianKernel> {
        match self.kernel_radius {
            Some(r) => GaussianKernel::truncated(self.sigma, r),
            None => GaussianKernel::new(self.sigma),
        }
    }
}

/// Outcome of a full evolution.
#[derive(Clone, Debug)]
pub struct RunResult {
    pub final_phi: LevelSet,
    pub mask: Mask,
    /// Energy after each iteration; length equals `iterations_run`.
    pub energy_trace: Vec<f64>,
    pub iterations_run: usize,
    pub elapsed: Duration,
}

/// `ν·δ_ε(φ)·κ + μ·(∇²φ − κ)`.
pub(crate) fn regularization_force(phi: &ScalarField2D, dirac: &ScalarField2D, nu: f64, mu: f64) -> ScalarField2D {
    if nu == 0.0 && mu == 0.0 {
        return ScalarField2D::from_raw(phi.width(), phi.height(), vec![0.0; phi.len()]);
    }
    let kappa = curvature(phi);
    let lap = laplacian(phi);
    let (w, h) = phi.dims();
    let out = (0..phi.len())
        .map(|i| {
            let k = kappa.values()[i];
            nu * dirac.values()[i] * k + mu * (lap.values()[i] - k)
        })
        .collect();
    ScalarField2D::from_raw(w, h, out)
}

/// `ν·Σδ_ε(φ)|∇φ| + μ·Σ½(|∇φ| − 1)²`.
pub(crate) fn regularization_energy(ls: &LevelSet, nu: f64, mu: f64) -> f64 {
    if nu == 0.0 && mu == 0.0 {
        return 0.0;
    }
    let (gx, gy) = gradient(&ls.phi);
    let mut length = 0.0;
    let mut distance = 0.0;
    for i in 0..ls.phi.len() {
        let g = gx.values()[i].hypot(gy.values()[i]);
        length += crate::levelset::dirac_eps(ls.phi.values()[i], ls.epsilon) * g;
        distance += 0.5 * (g - 1.0) * (g - 1.0);
    }
    nu * length + mu * distance
}

/// Explicit Euler update `φ + Δt·force`, with a divergence check.
pub(crate) fn euler(ls: &LevelSet, force: &ScalarField2D, dt: f64, iteration: usize) -> Result<LevelSet> {
    let phi = ls.phi.zip_map(force, |p, f| p + dt * f);
    if !phi.all_finite() {
        return Err(Error::Divergence { iteration });
    }
    Ok(LevelSet { phi, epsilon: ls.epsilon })
}

/// Fitting state evaluated at one φ, reused for the energy and the next step.
enum Fitted {
    Rsf(rsf::RsfFit),
    Lif(lif::LifFit),
    Lgdf(lgdf::LgdfFit),
}

impl Fitted {
    fn fits(&self) -> &FittingPair {
        match self {
            Fitted::Rsf(f) => &f.fit.pair,
            Fitted::Lif(f) => &f.pair,
            Fitted::Lgdf(f) => &f.means,
        }
    }

    fn variances(&self) -> Option<&FittingPair> {
        match self {
            Fitted::Lgdf(f) => Some(&f.variances),
            _ => None,
        }
    }
}

pub(crate) struct Context {
    pub stats: ImageStats,
    pub kernel: GaussianKernel,
    pub params: ModelParams,
}

impl Context {
    pub fn new(image: &ScalarField2D, params: &ModelParams) -> Result<Self> {
        params.validate()?;
        let kernel = params.kernel()?;
        Ok(Self { stats: ImageStats::new(image, &kernel), kernel, params: params.clone() })
    }

    pub fn with_kernel(image: &ScalarField2D, params: &ModelParams, kernel: &GaussianKernel) -> Result<Self> {
        params.validate()?;
        Ok(Self { stats: ImageStats::new(image, kernel), kernel: kernel.clone(), params: params.clone() })
    }
}

/// Stepwise evolution of one level set under one model.
///
/// Fitting values are recomputed (and exchanged, when the polarity is
/// active) from the current φ before every step.
pub struct Evolution {
    model: ModelKind,
    ctx: Context,
    phi: LevelSet,
    fitted: Fitted,
    iteration: usize,
}

impl Evolution {
    pub fn new(model: ModelKind, image: &ScalarField2D, init: &InitSpec, params: &ModelParams) -> Result<Self> {
        let (w, h) = image.dims();
        let phi = init_binary_step(w, h, init, params.epsilon)?;
        Self::from_level_set(model, image, phi, params)
    }

    pub fn from_level_set(
        model: ModelKind,
        image: &ScalarField2D,
        phi: LevelSet,
        params: &ModelParams,
    ) -> Result<Self> {
        image.ensure_same_dims(&phi.phi)?;
        let ctx = Context::new(image, params)?;
        let fitted = fit(model, &ctx, &phi);
        Ok(Self { model, ctx, phi, fitted, iteration: 0 })
    }

    pub fn model(&self) -> ModelKind {
        self.model
    }

    pub fn params(&self) -> &ModelParams {
        &self.ctx.params
    }

    pub fn phi(&self) -> &LevelSet {
        &self.phi
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Fitting means at the current φ, after any exchange.
    pub fn fits(&self) -> &FittingPair {
        self.fitted.fits()
    }

    /// Fitting variances at the current φ (LGDF only), after any exchange.
    pub fn variances(&self) -> Option<&FittingPair> {
        self.fitted.variances()
    }

    pub fn energy(&self) -> f64 {
        energy(&self.ctx, &self.phi, &self.fitted)
    }

    /// Advances one iteration and returns the energy of the new state.
    pub fn step(&mut self) -> Result<f64> {
        let next = self.iteration + 1;
        let phi = advance(&self.ctx, &self.phi, &self.fitted, next)?;
        self.fitted = fit(self.model, &self.ctx, &phi);
        self.phi = phi;
        self.iteration = next;
        Ok(self.energy())
    }

    pub fn into_level_set(self) -> LevelSet {
        self.phi
    }
}

fn fit(model: ModelKind, ctx: &Context, phi: &LevelSet) -> Fitted {
    match model {
        ModelKind::Rsf => Fitted::Rsf(rsf::prepare(ctx, phi)),
        ModelKind::Lif => Fitted::Lif(lif::prepare(ctx, phi)),
        ModelKind::Lgdf => Fitted::Lgdf(lgdf::prepare(ctx, phi)),
    }
}

fn energy(ctx: &Context, phi: &LevelSet, fitted: &Fitted) -> f64 {
    match fitted {
        Fitted::Rsf(f) => rsf::energy(ctx, phi, f),
        Fitted::Lif(f) => lif::energy(ctx, f),
        Fitted::Lgdf(f) => lgdf::energy(ctx, phi, f),
    }
}

fn advance(ctx: &Context, phi: &LevelSet, fitted: &Fitted, iteration: usize) -> Result<LevelSet> {
    match fitted {
        Fitted::Rsf(f) => rsf::advance(ctx, phi, f, iteration),
        Fitted::Lif(f) => lif::advance(ctx, phi, f, iteration),
        Fitted::Lgdf(f) => lgdf::advance(ctx, phi, f, iteration),
    }
}

/// Per-iteration view handed to [`run_observed`] callbacks.
pub struct IterationView<'a> {
    pub iteration: usize,
    pub phi: &'a LevelSet,
    pub fits: &'a FittingPair,
    pub variances: Option<&'a FittingPair>,
    pub energy: f64,
}

/// Binary-step initialization followed by `max_iters` iterations (fewer if
/// early stopping is enabled and triggers).
pub fn run(model: ModelKind, image: &ScalarField2D, init: &InitSpec, params: &ModelParams) -> Result<RunResult> {
    run_observed(model, image, init, params, |_| {})
}

/// [`run`] with a callback after every iteration.
pub fn run_observed(
    model: ModelKind,
    image: &ScalarField2D,
    init: &InitSpec,
    params: &ModelParams,
    mut observe: impl FnMut(&IterationView<'_>),
) -> Result<RunResult> {
    let start = Instant::now();
    let mut evo = Evolution::new(model, image, init, params)?;
    let mut trace = Vec::with_capacity(params.max_iters);
    let mut last_mask = evo.phi().mask();
    let mut unchanged = 0;
    while evo.iteration() < params.max_iters {
        let energy = evo.step()?;
        trace.push(energy);
        observe(&IterationView {
            iteration: evo.iteration(),
            phi: evo.phi(),
            fits: evo.fits(),
            variances: evo.variances(),
            energy,
        });
        if params.early_stop {
            let mask = evo.phi().mask();
            if mask == last_mask {
                unchanged += 1;
                if unchanged >= EARLY_STOP_WINDOW {
                    break;
                }
            } else {
                unchanged = 0;
                last_mask = mask;
            }
        }
    }
    let iterations_run = evo.iteration();
    let final_phi = evo.into_level_set();
    Ok(RunResult { mask: final_phi.mask(), final_phi, energy_trace: trace, iterations_run, elapsed: start.elapsed() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levelset::Shape;

    #[test]
    fn defaults_follow_the_published_parameter_lists() {
        let r = ModelParams::rsf();
        assert_eq!((r.c0, r.sigma, r.epsilon, r.lambda1, r.lambda2, r.mu, r.dt), (2.0, 3.0, 1.0, 1.0, 1.0, 1.0, 0.1));
        assert!((r.nu - 65.025).abs() < 1e-9);
        let l = ModelParams::lif();
        assert_eq!((l.c0, l.sigma, l.epsilon, l.dt), (2.0, 3.0, 1.0, 0.01));
        let g = ModelParams::lgdf();
        assert_eq!(
            (g.c0, g.sigma, g.epsilon, g.lambda1, g.lambda2, g.mu, g.nu, g.dt),
            (2.0, 3.0, 1.0, 1.0, 1.0, 0.01, 1.0, 1.0)
        );
        let m = ModelParams::mrsf();
        assert!((m.nu - 195.075).abs() < 1e-9);
        assert_eq!(ModelParams { nu: r.nu, ..m }, r);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let mut p = ModelParams::rsf();
        p.dt = 0.0;
        assert!(p.validate().is_err());
        let mut p = ModelParams::rsf();
        p.nu = -1.0;
        assert!(p.validate().is_err());
    }

    #[test]
    fn zero_iterations_returns_initial_mask() {
        let img = ScalarField2D::from_fn(20, 20, |x, _| if x < 10 { 200.0 } else { 50.0 }).unwrap();
        let init = InitSpec::new(vec![Shape::Rect { x0: 5, y0: 5, x1: 12, y1: 12 }], 2.0);
        for model in ModelKind::ALL {
            let res = run(model, &img, &init, &ModelParams::defaults_for(model).with_max_iters(0)).unwrap();
            assert_eq!(res.iterations_run, 0);
            assert!(res.energy_trace.is_empty());
            assert_eq!(res.mask.count(), 49);
        }
    }

    #[test]
    fn trace_length_matches_iterations() {
        let img = ScalarField2D::from_fn(24, 24, |x, y| {
            if (x as i32 - 12).pow(2) + (y as i32 - 12).pow(2) < 36 {
                180.0
            } else {
                40.0
            }
        })
        .unwrap();
        let init = InitSpec::new(vec![Shape::Rect { x0: 8, y0: 8, x1: 18, y1: 18 }], 2.0);
        for model in ModelKind::ALL {
            let res = run(model, &img, &init, &ModelParams::defaults_for(model).with_max_iters(7)).unwrap();
            assert_eq!(res.iterations_run, 7);
            assert_eq!(res.energy_trace.len(), 7);
            assert!(res.final_phi.phi.all_finite());
        }
    }

    #[test]
    fn early_stop_halts_a_static_run() {
        let img = ScalarField2D::filled(16, 16, 100.0).unwrap();
        let init = InitSpec::new(vec![], 2.0);
        let mut params = ModelParams::rsf().with_max_iters(200);
        params.early_stop = true;
        let res = run(ModelKind::Rsf, &img, &init, &params).unwrap();
        assert_eq!(res.iterations_run, EARLY_STOP_WINDOW);
    }

    #[test]
    fn divergence_is_reported() {
        let img = ScalarField2D::from_fn(16, 16, |x, _| if x < 8 { 1e200 } else { 0.0 }).unwrap();
        let init = InitSpec::new(vec![Shape::Rect { x0: 4, y0: 4, x1: 12, y1: 12 }], 2.0);
        let err = run(ModelKind::Rsf, &img, &init, &ModelParams::rsf().with_max_iters(5)).unwrap_err();
        assert!(matches!(err, Error::Divergence { iteration: 1 }), "{err:?}");
    }

    #[test]
    fn model_names_round_trip() {
        for m in ModelKind::ALL {
            assert_eq!(m.as_str().parse::<ModelKind>().unwrap(), m);
        }
        assert!("mrsf2".parse::<ModelKind>().is_err());
    }
}
