//! Four-phase RSF with two level sets.
//!
//! Phases are the sign patterns of `(φ_a, φ_b)`, with product memberships
//! `M₁ = H_a·H_b`, `M₂ = H_a·(1−H_b)`, `M₃ = (1−H_a)·H_b`,
//! `M₄ = (1−H_a)·(1−H_b)`. The exchange generalizes to a pointwise sort of
//! the four phase fits: for a bright-object polarity the ascending values go
//! to `M₁, M₂, M₃, M₄` (the doubly positive phase gets the darkest value, as
//! the positive side does in the two-phase exchange); for a dark-object
//! polarity the order is reversed. When only two phases are present this
//! reduces to the two-phase min/max rule.
//!
//! All four phases share unit data weights; `lambda1`/`lambda2` are unused.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::field::{convolve, GaussianKernel, ScalarField2D};
use crate::fitting::{ImageStats, DENOMINATOR_FLOOR};
use crate::levelset::{init_binary_step, InitSpec, LevelSet, Mask};
use crate::models::{euler, regularization_energy, regularization_force, ModelParams, EARLY_STOP_WINDOW};
use crate::swap::Polarity;

pub const PHASES: usize = 4;

/// Two level sets partitioning the image into four phases.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseSet {
    pub phi_a: LevelSet,
    pub phi_b: LevelSet,
}

impl PhaseSet {
    pub fn new(phi_a: LevelSet, phi_b: LevelSet) -> Result<Self> {
        phi_a.phi.ensure_same_dims(&phi_b.phi)?;
        Ok(Self { phi_a, phi_b })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.phi_a.dims()
    }

    /// `[M₁, M₂, M₃, M₄]`.
    pub fn memberships(&self) -> [ScalarField2D; PHASES] {
        memberships(&self.phi_a.heaviside(), &self.phi_b.heaviside())
    }

    /// Hard phase masks from the sign patterns of `(φ_a, φ_b)`.
    pub fn phase_masks(&self) -> [Mask; PHASES] {
        let (w, h) = self.dims();
        let a = self.phi_a.phi.values();
        let b = self.phi_b.phi.values();
        let pattern = |neg_a: bool, neg_b: bool| {
            Mask::from_bits(w, h, (0..w * h).map(|i| (a[i] < 0.0) == neg_a && (b[i] < 0.0) == neg_b).collect())
        };
        [pattern(false, false), pattern(false, true), pattern(true, false), pattern(true, true)]
    }
}

fn memberships(ha: &ScalarField2D, hb: &ScalarField2D) -> [ScalarField2D; PHASES] {
    [
        ha.zip_map(hb, |a, b| a * b),
        ha.zip_map(hb, |a, b| a * (1.0 - b)),
        ha.zip_map(hb, |a, b| (1.0 - a) * b),
        ha.zip_map(hb, |a, b| (1.0 - a) * (1.0 - b)),
    ]
}

/// How the two level sets are seeded.
#[derive(Clone, Debug, PartialEq)]
pub enum MultiphaseInit {
    /// Independent binary steps for `φ_a` and `φ_b`.
    Shapes { a: InitSpec, b: InitSpec },
    /// One to three ascending global thresholds. A pixel exceeding `k` of
    /// them is placed in phase `M_{k+1}` (so two thresholds seed three
    /// phases): `φ_a = −c0` for `k ≥ 2`, `φ_b = −c0` for odd `k`.
    Thresholds { levels: Vec<f64>, c0: f64 },
}

impl MultiphaseInit {
    pub fn build(&self, image: &ScalarField2D, epsilon: f64) -> Result<PhaseSet> {
        let (w, h) = image.dims();
        match self {
            MultiphaseInit::Shapes { a, b } => {
                PhaseSet::new(init_binary_step(w, h, a, epsilon)?, init_binary_step(w, h, b, epsilon)?)
            }
            MultiphaseInit::Thresholds { levels, c0 } => {
                if !(*c0 > 0.0 && c0.is_finite()) {
                    return Err(Error::Parameter(format!("c0 must be positive, got {c0}")));
                }
                if levels.is_empty() || levels.len() >= PHASES {
                    return Err(Error::Parameter(format!(
                        "threshold initialization takes 1 to {} thresholds, got {}",
                        PHASES - 1,
                        levels.len()
                    )));
                }
                if !levels.iter().all(|t| t.is_finite()) || levels.windows(2).any(|p| p[0] >= p[1]) {
                    return Err(Error::Parameter(format!(
                        "thresholds must be finite and strictly ascending, got {levels:?}"
                    )));
                }
                let class = |v: f64| levels.iter().filter(|&&t| v > t).count();
                let sign = |neg: bool| if neg { -c0 } else { *c0 };
                let phi_a = LevelSet::new(image.map(|v| sign(class(v) >= 2)), epsilon)?;
                let phi_b = LevelSet::new(image.map(|v| sign(class(v) % 2 == 1)), epsilon)?;
                PhaseSet::new(phi_a, phi_b)
            }
        }
    }
}

/// `fᵢ = conv(Mᵢ·I) / conv(Mᵢ)` for the four phases.
pub fn mrsf_fit(image: &ScalarField2D, phases: &PhaseSet, kernel: &GaussianKernel) -> Result<[ScalarField2D; PHASES]> {
    image.ensure_same_dims(&phases.phi_a.phi)?;
    Ok(phases.memberships().map(|m| {
        let num = convolve(&m.zip_map(image, |a, b| a * b), kernel);
        let den = convolve(&m, kernel);
        num.zip_map(&den, |n, d| n / d.max(DENOMINATOR_FLOOR))
    }))
}

/// Pointwise sort of the four phase fits into the canonical phase order.
pub fn mrsf_swap(fits: &[ScalarField2D; PHASES], polarity: Polarity) -> [ScalarField2D; PHASES] {
    let mut out = fits.clone();
    mrsf_swap_in_place(&mut out, polarity);
    out
}

fn mrsf_swap_in_place(fits: &mut [ScalarField2D; PHASES], polarity: Polarity) {
    if !polarity.is_active() {
        return;
    }
    let n = fits[0].len();
    for i in 0..n {
        let mut v = [0.0; PHASES];
        for (slot, f) in v.iter_mut().zip(fits.iter()) {
            *slot = f.values()[i];
        }
        v.sort_by(f64::total_cmp);
        if polarity == Polarity::DarkObject {
            v.reverse();
        }
        for (f, value) in fits.iter_mut().zip(v) {
            f.values_mut()[i] = value;
        }
    }
}

/// `ēᵢ = I²·conv(1) − 2I·conv(fᵢ) + conv(fᵢ²)` for each phase.
fn phase_e_terms(
    image: &ScalarField2D,
    mass: &ScalarField2D,
    fits: &[ScalarField2D; PHASES],
    kernel: &GaussianKernel,
) -> [ScalarField2D; PHASES] {
    fits.clone().map(|f| {
        let cf = convolve(&f, kernel);
        let cf2 = convolve(&f.map(|v| v * v), kernel);
        let (w, h) = image.dims();
        let out = (0..image.len())
            .map(|i| {
                let iv = image.values()[i];
                iv * iv * mass.values()[i] - 2.0 * iv * cf.values()[i] + cf2.values()[i]
            })
            .collect();
        ScalarField2D::from_raw(w, h, out)
    })
}

/// Data forces `(−∂E/∂φ_a, −∂E/∂φ_b)` from phase residuals.
fn data_forces(phases: &PhaseSet, e: &[ScalarField2D; PHASES]) -> (ScalarField2D, ScalarField2D) {
    let (w, h) = phases.dims();
    let (a, b) = (&phases.phi_a, &phases.phi_b);
    let n = w * h;
    let mut fa = Vec::with_capacity(n);
    let mut fb = Vec::with_capacity(n);
    for i in 0..n {
        let ha = crate::levelset::heaviside_eps(a.phi.values()[i], a.epsilon);
        let hb = crate::levelset::heaviside_eps(b.phi.values()[i], b.epsilon);
        let da = crate::levelset::dirac_eps(a.phi.values()[i], a.epsilon);
        let db = crate::levelset::dirac_eps(b.phi.values()[i], b.epsilon);
        let [e1, e2, e3, e4] = [e[0].values()[i], e[1].values()[i], e[2].values()[i], e[3].values()[i]];
        fa.push(-da * ((e1 - e3) * hb + (e2 - e4) * (1.0 - hb)));
        fb.push(-db * ((e1 - e2) * ha + (e3 - e4) * (1.0 - ha)));
    }
    (ScalarField2D::from_raw(w, h, fa), ScalarField2D::from_raw(w, h, fb))
}

/// Data parts of the two flows for frozen phase fits.
pub fn mrsf_data_forces(
    phases: &PhaseSet,
    image: &ScalarField2D,
    fits: &[ScalarField2D; PHASES],
    kernel: &GaussianKernel,
) -> Result<(ScalarField2D, ScalarField2D)> {
    image.ensure_same_dims(&phases.phi_a.phi)?;
    let (w, h) = image.dims();
    let mass = convolve(&ScalarField2D::from_raw(w, h, vec![1.0; w * h]), kernel);
    Ok(data_forces(phases, &phase_e_terms(image, &mass, fits, kernel)))
}

/// `Σᵢ Σₓ Σ_y K(x−y)|I(y) − fᵢ(x)|² Mᵢ(y)` for frozen phase fits.
pub fn mrsf_data_energy(
    phases: &PhaseSet,
    image: &ScalarField2D,
    fits: &[ScalarField2D; PHASES],
    kernel: &GaussianKernel,
) -> Result<f64> {
    image.ensure_same_dims(&phases.phi_a.phi)?;
    let mut total = 0.0;
    for (m, f) in phases.memberships().iter().zip(fits) {
        let c0 = convolve(m, kernel);
        let c1 = convolve(&m.zip_map(image, |a, b| a * b), kernel);
        let c2 = convolve(&m.zip_map(image, |a, b| a * b * b), kernel);
        for i in 0..image.len() {
            let fv = f.values()[i];
            total += fv * fv * c0.values()[i] - 2.0 * fv * c1.values()[i] + c2.values()[i];
        }
    }
    Ok(total)
}

/// State of a four-phase fit at one `(φ_a, φ_b)`.
struct PhaseFit {
    fits: [ScalarField2D; PHASES],
    /// conv(Mᵢ), conv(Mᵢ·I), conv(Mᵢ·I²)
    moments: [[ScalarField2D; 3]; PHASES],
}

fn prepare(stats: &ImageStats, kernel: &GaussianKernel, phases: &PhaseSet, polarity: Polarity) -> PhaseFit {
    let m = phases.memberships();
    // Three phases are convolved directly; the fourth follows from linearity.
    let mut moments: Vec<[ScalarField2D; 3]> = m[..3]
        .iter()
        .map(|mi| {
            [
                convolve(mi, kernel),
                convolve(&mi.zip_map(&stats.image, |a, b| a * b), kernel),
                convolve(&mi.zip_map(&stats.image_sq, |a, b| a * b), kernel),
            ]
        })
        .collect();
    let rest = |total: &ScalarField2D, k: usize| {
        let mut out = total.clone();
        for mom in &moments {
            out = out.zip_map(&mom[k], |a, b| a - b);
        }
        out
    };
    let last = [rest(&stats.mass, 0), rest(&stats.local_sum, 1), rest(&stats.local_sum_sq, 2)];
    moments.push(last);
    let moments: [[ScalarField2D; 3]; PHASES] = moments.try_into().unwrap_or_else(|_| unreachable!());
    let mut fits = [0, 1, 2, 3].map(|i| moments[i][1].zip_map(&moments[i][0], |n, d| n / d.max(DENOMINATOR_FLOOR)));
    mrsf_swap_in_place(&mut fits, polarity);
    PhaseFit { fits, moments }
}

fn energy(phases: &PhaseSet, f: &PhaseFit, params: &ModelParams) -> f64 {
    let mut total = 0.0;
    for (fit, [c0, c1, c2]) in f.fits.iter().zip(&f.moments) {
        for i in 0..fit.len() {
            let v = fit.values()[i];
            total += v * v * c0.values()[i] - 2.0 * v * c1.values()[i] + c2.values()[i];
        }
    }
    total
        + regularization_energy(&phases.phi_a, params.nu, params.mu)
        + regularization_energy(&phases.phi_b, params.nu, params.mu)
}

fn advance(
    stats: &ImageStats,
    kernel: &GaussianKernel,
    phases: &PhaseSet,
    f: &PhaseFit,
    params: &ModelParams,
    iteration: usize,
) -> Result<PhaseSet> {
    let e = phase_e_terms(&stats.image, &stats.mass, &f.fits, kernel);
    let (da, db) = data_forces(phases, &e);
    let step = |ls: &LevelSet, data: ScalarField2D| {
        let reg = regularization_force(&ls.phi, &ls.dirac(), params.nu, params.mu);
        euler(ls, &data.zip_map(&reg, |a, b| a + b), params.dt, iteration)
    };
    PhaseSet::new(step(&phases.phi_a, da)?, step(&phases.phi_b, db)?)
}

/// One coupled explicit Euler step of both level sets.
pub fn mrsf_step(
    phases: &PhaseSet,
    image: &ScalarField2D,
    params: &ModelParams,
    kernel: &GaussianKernel,
) -> Result<PhaseSet> {
    image.ensure_same_dims(&phases.phi_a.phi)?;
    params.validate()?;
    let stats = ImageStats::new(image, kernel);
    let f = prepare(&stats, kernel, phases, params.polarity);
    advance(&stats, kernel, phases, &f, params, 1)
}

/// Stepwise four-phase evolution.
pub struct MultiphaseEvolution {
    stats: ImageStats,
    kernel: GaussianKernel,
    params: ModelParams,
    phases: PhaseSet,
    fit: PhaseFit,
    iteration: usize,
}

impl MultiphaseEvolution {
    pub fn new(image: &ScalarField2D, phases: PhaseSet, params: &ModelParams) -> Result<Self> {
        image.ensure_same_dims(&phases.phi_a.phi)?;
        params.validate()?;
        let kernel = params.kernel()?;
        let stats = ImageStats::new(image, &kernel);
        let fit = prepare(&stats, &kernel, &phases, params.polarity);
        Ok(Self { stats, kernel, params: params.clone(), phases, fit, iteration: 0 })
    }

    pub fn phases(&self) -> &PhaseSet {
        &self.phases
    }

    /// Phase fits at the current state, after any exchange.
    pub fn fits(&self) -> &[ScalarField2D; PHASES] {
        &self.fit.fits
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    pub fn energy(&self) -> f64 {
        energy(&self.phases, &self.fit, &self.params)
    }

    pub fn step(&mut self) -> Result<f64> {
        let next = self.iteration + 1;
        let phases = advance(&self.stats, &self.kernel, &self.phases, &self.fit, &self.params, next)?;
        self.fit = prepare(&self.stats, &self.kernel, &phases, self.params.polarity);
        self.phases = phases;
        self.iteration = next;
        Ok(self.energy())
    }
}

#[derive(Clone, Debug)]
pub struct MultiphaseRunResult {
    pub final_phases: PhaseSet,
    /// Hard masks for `M₁..M₄`.
    pub masks: [Mask; PHASES],
    pub energy_trace: Vec<f64>,
    pub iterations_run: usize,
    pub elapsed: Duration,
}

impl MultiphaseRunResult {
    /// Phase index (0..4) per pixel.
    pub fn labels(&self) -> Vec<u8> {
        let (w, h) = self.final_phases.dims();
        (0..w * h).map(|i| self.masks.iter().position(|m| m.bits()[i]).unwrap_or(0) as u8).collect()
    }
}

pub fn run_multiphase(
    image: &ScalarField2D,
    init: &MultiphaseInit,
    params: &ModelParams,
) -> Result<MultiphaseRunResult> {
    run_multiphase_observed(image, init, params, |_, _| {})
}

/// [`run_multiphase`] with a callback receiving the iteration and the
/// (exchanged) phase fits after every step.
pub fn run_multiphase_observed(
    image: &ScalarField2D,
    init: &MultiphaseInit,
    params: &ModelParams,
    mut observe: impl FnMut(usize, &[ScalarField2D; PHASES]),
) -> Result<MultiphaseRunResult> {
    let start = Instant::now();
    let phases = init.build(image, params.epsilon)?;
    let mut evo = MultiphaseEvolution::new(image, phases, params)?;
    let mut trace = Vec::with_capacity(params.max_iters);
    let mut last = evo.phases().phase_masks();
    let mut unchanged = 0;
    while evo.iteration() < params.max_iters {
        trace.push(evo.step()?);
        observe(evo.iteration(), evo.fits());
        if params.early_stop {
            let masks = evo.phases().phase_masks();
            if masks == last {
                unchanged += 1;
                if unchanged >= EARLY_STOP_WINDOW {
                    break;
                }
            } else {
                unchanged = 0;
                last = masks;
            }
        }
    }
    let final_phases = evo.phases().clone();
    Ok(MultiphaseRunResult {
        masks: final_phases.phase_masks(),
        final_phases,
        energy_trace: trace,
        iterations_run: evo.iteration(),
        elapsed: start.elapsed(),
    })
}
