//! Experiment suites: multi-initialization robustness, σ sweeps and
//! original-versus-exchanged timing.
//!
//! Every suite evaluates each case under each requested polarity. A failing
//! run becomes a row carrying its error instead of aborting the suite.

use std::fmt::Write as _;
use std::time::Duration;

use crate::bench::metrics::{dsc, matched_dsc};
use crate::error::{Error, Result};
use crate::field::ScalarField2D;
use crate::levelset::{InitSpec, Mask, Shape};
use crate::models::{run, ModelKind, ModelParams};
use crate::multiphase::{run_multiphase, MultiphaseInit};
use crate::swap::Polarity;

/// An initialization with a display name.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedInit {
    pub name: String,
    pub init: InitSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NamedMultiphaseInit {
    pub name: String,
    pub init: MultiphaseInit,
}

fn frac(v: usize, f: f64) -> usize {
    (v as f64 * f).round() as usize
}

fn rect(w: usize, h: usize, x0: f64, y0: f64, x1: f64, y1: f64) -> Shape {
    Shape::Rect { x0: frac(w, x0), y0: frac(h, y0), x1: frac(w, x1), y1: frac(h, y1) }
}

/// The four two-phase initializations: centered box, corner box, oversized
/// box and two small boxes. Coordinates scale with the grid.
pub fn standard_inits(width: usize, height: usize, c0: f64) -> Vec<NamedInit> {
    let (w, h) = (width, height);
    let named = |name: &str, shapes: Vec<Shape>| NamedInit { name: name.to_string(), init: InitSpec::new(shapes, c0) };
    vec![
        named("centered_box", vec![rect(w, h, 0.34, 0.34, 0.66, 0.66)]),
        named("corner_box", vec![rect(w, h, 0.04, 0.04, 0.44, 0.44)]),
        named("oversized_box", vec![rect(w, h, 0.12, 0.12, 0.88, 0.88)]),
        named("two_small_boxes", vec![rect(w, h, 0.05, 0.40, 0.19, 0.54), rect(w, h, 0.80, 0.64, 0.94, 0.78)]),
    ]
}

/// Initialization used for σ sweeps on the vessel scene: the centered box
/// of [`standard_inits`].
pub fn vessel_init(width: usize, height: usize, c0: f64) -> NamedInit {
    standard_inits(width, height, c0).swap_remove(0)
}

/// Three four-phase initializations: global thresholds between the levels
/// (on target), and two box pairs that ignore the scene layout.
pub fn standard_multiphase_inits(width: usize, height: usize, thresholds: &[f64], c0: f64) -> Vec<NamedMultiphaseInit> {
    let (w, h) = (width, height);
    vec![
        NamedMultiphaseInit {
            name: "thresholds".to_string(),
            init: MultiphaseInit::Thresholds { levels: thresholds.to_vec(), c0 },
        },
        NamedMultiphaseInit {
            name: "offset_boxes".to_string(),
            init: MultiphaseInit::Shapes {
                a: InitSpec::new(vec![rect(w, h, 0.05, 0.05, 0.60, 0.60)], c0),
                b: InitSpec::new(vec![rect(w, h, 0.40, 0.40, 0.95, 0.95)], c0),
            },
        },
        NamedMultiphaseInit {
            name: "crossed_strips".to_string(),
            init: MultiphaseInit::Shapes {
                a: InitSpec::new(vec![rect(w, h, 0.05, 0.30, 0.95, 0.70)], c0),
                b: InitSpec::new(vec![rect(w, h, 0.30, 0.05, 0.70, 0.95)], c0),
            },
        },
    ]
}

/// One run of a suite.
#[derive(Clone, Debug)]
pub struct SuiteRow {
    pub experiment: &'static str,
    pub model: String,
    pub polarity: Polarity,
    /// Initialization name.
    pub case: String,
    pub sigma: f64,
    /// One value for two-phase runs, one per truth region (matched) for
    /// four-phase runs. Empty when the run failed.
    pub dsc: Vec<f64>,
    pub iterations: usize,
    pub elapsed: Duration,
    pub final_energy: Option<f64>,
    /// Hard masks of the final state: one, or four phase masks.
    pub masks: Vec<Mask>,
    pub energy_trace: Vec<f64>,
    pub error: Option<String>,
    /// Iteration at which φ became non-finite, for diverged runs.
    pub diverged_at: Option<usize>,
}

impl SuiteRow {
    /// Smallest DSC of the row, `None` for failed runs.
    pub fn min_dsc(&self) -> Option<f64> {
        self.dsc.iter().copied().reduce(f64::min)
    }

    fn failed(experiment: &'static str, model: &str, polarity: Polarity, case: &str, sigma: f64, err: &Error) -> Self {
        Self {
            experiment,
            model: model.to_string(),
            polarity,
            case: case.to_string(),
            sigma,
            dsc: Vec::new(),
            iterations: 0,
            elapsed: Duration::ZERO,
            final_energy: None,
            masks: Vec::new(),
            energy_trace: Vec::new(),
            error: Some(err.to_string()),
            diverged_at: match err {
                Error::Divergence { iteration } => Some(*iteration),
                _ => None,
            },
        }
    }
}

pub const CSV_HEADER: &str =
    "experiment,model,polarity,case,sigma,iterations,elapsed_s,final_energy,dsc,region_dsc,error";

/// Suite rows as CSV with [`CSV_HEADER`]. `region_dsc` lists the per-region
/// values separated by `;`, `dsc` is their minimum.
pub fn rows_to_csv(rows: &[SuiteRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let energy = r.final_energy.map(|e| format!("{e}")).unwrap_or_default();
        let min = r.min_dsc().map(|d| format!("{d:.6}")).unwrap_or_default();
        let regions = r.dsc.iter().map(|d| format!("{d:.6}")).collect::<Vec<_>>().join(";");
        let error = r.error.as_deref().unwrap_or("").replace([',', '\n'], " ");
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{:.6},{},{},{},{}",
            r.experiment,
            r.model,
            r.polarity,
            r.case,
            r.sigma,
            r.iterations,
            r.elapsed.as_secs_f64(),
            energy,
            min,
            regions,
            error
        );
    }
    out
}

fn two_phase_row(
    experiment: &'static str,
    model: ModelKind,
    image: &ScalarField2D,
    truth: &Mask,
    init: &NamedInit,
    params: &ModelParams,
) -> SuiteRow {
    let outcome = run(model, image, &init.init, params).and_then(|r| Ok((dsc(&r.mask, truth)?, r)));
    match outcome {
        Ok((score, r)) => SuiteRow {
            experiment,
            model: model.to_string(),
            polarity: params.polarity,
            case: init.name.clone(),
            sigma: params.sigma,
            dsc: vec![score],
            iterations: r.iterations_run,
            elapsed: r.elapsed,
            final_energy: r.energy_trace.last().copied(),
            masks: vec![r.mask],
            energy_trace: r.energy_trace,
            error: None,
            diverged_at: None,
        },
        Err(e) => SuiteRow::failed(experiment, model.as_str(), params.polarity, &init.name, params.sigma, &e),
    }
}

/// One run per initialization per polarity, in input order (inits outer).
pub fn robustness_suite(
    model: ModelKind,
    image: &ScalarField2D,
    truth: &Mask,
    inits: &[NamedInit],
    params: &ModelParams,
    polarities: &[Polarity],
) -> Result<Vec<SuiteRow>> {
    if inits.len() < 2 {
        return Err(Error::Parameter(format!(
            "a robustness suite needs at least 2 initializations, got {}",
            inits.len()
        )));
    }
    Ok(cases(inits, polarities)
        .map(|(init, p)| two_phase_row("robustness", model, image, truth, init, &params.clone().with_polarity(p)))
        .collect())
}

/// One run per σ per polarity from a single initialization.
pub fn sigma_sweep(
    model: ModelKind,
    image: &ScalarField2D,
    truth: &Mask,
    init: &NamedInit,
    sigmas: &[f64],
    params: &ModelParams,
    polarities: &[Polarity],
) -> Vec<SuiteRow> {
    let mut rows = Vec::with_capacity(sigmas.len() * polarities.len());
    for &sigma in sigmas {
        for &p in polarities {
            let params = params.clone().with_sigma(sigma).with_polarity(p);
            rows.push(two_phase_row("sigma_sweep", model, image, truth, init, &params));
        }
    }
    rows
}

/// Four-phase runs scored against the truth regions by best matching.
pub fn multiphase_suite(
    image: &ScalarField2D,
    truth: &[Mask],
    inits: &[NamedMultiphaseInit],
    params: &ModelParams,
    polarities: &[Polarity],
) -> Vec<SuiteRow> {
    cases(inits, polarities)
        .map(|(init, p)| {
            let params = params.clone().with_polarity(p);
            let outcome =
                run_multiphase(image, &init.init, &params).and_then(|r| Ok((matched_dsc(&r.masks, truth)?.0, r)));
            match outcome {
                Ok((scores, r)) => SuiteRow {
                    experiment: "multiphase",
                    model: "mrsf".to_string(),
                    polarity: p,
                    case: init.name.clone(),
                    sigma: params.sigma,
                    dsc: scores,
                    iterations: r.iterations_run,
                    elapsed: r.elapsed,
                    final_energy: r.energy_trace.last().copied(),
                    masks: r.masks.to_vec(),
                    energy_trace: r.energy_trace,
                    error: None,
                    diverged_at: None,
                },
                Err(e) => SuiteRow::failed("multiphase", "mrsf", p, &init.name, params.sigma, &e),
            }
        })
        .collect()
}

fn cases<'a, T>(items: &'a [T], polarities: &'a [Polarity]) -> impl Iterator<Item = (&'a T, Polarity)> + 'a {
    items.iter().flat_map(move |i| polarities.iter().map(move |&p| (i, p)))
}

/// Wall-clock comparison at an equal iteration budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Timing {
    pub original: Duration,
    pub improved: Duration,
    /// `improved / original`.
    pub ratio: f64,
}

/// Times `iters` iterations with the polarity off and with `improved`. The
/// two variants are interleaved `repeats` times and the fastest run of each
/// is kept.
pub fn timing_compare(
    model: ModelKind,
    image: &ScalarField2D,
    init: &InitSpec,
    params: &ModelParams,
    improved: Polarity,
    iters: usize,
    repeats: usize,
) -> Result<Timing> {
    let base = params.clone().with_max_iters(iters);
    let (off, on) = (base.clone().with_polarity(Polarity::Off), base.with_polarity(improved));
    compare(repeats, || Ok(run(model, image, init, &off)?.elapsed), || Ok(run(model, image, init, &on)?.elapsed))
}

/// [`timing_compare`] for the four-phase model.
pub fn timing_compare_multiphase(
    image: &ScalarField2D,
    init: &MultiphaseInit,
    params: &ModelParams,
    improved: Polarity,
    iters: usize,
    repeats: usize,
) -> Result<Timing> {
    let base = params.clone().with_max_iters(iters);
    let (off, on) = (base.clone().with_polarity(Polarity::Off), base.with_polarity(improved));
    compare(
        repeats,
        || Ok(run_multiphase(image, init, &off)?.elapsed),
        || Ok(run_multiphase(image, init, &on)?.elapsed),
    )
}

fn compare(
    repeats: usize,
    mut original: impl FnMut() -> Result<Duration>,
    mut improved: impl FnMut() -> Result<Duration>,
) -> Result<Timing> {
    let mut best = (Duration::MAX, Duration::MAX);
    for _ in 0..repeats.max(1) {
        best.0 = best.0.min(original()?);
        best.1 = best.1.min(improved()?);
    }
    let ratio = if best.0.is_zero() { 1.0 } else { best.1.as_secs_f64() / best.0.as_secs_f64() };
    Ok(Timing { original: best.0, improved: best.1, ratio })
}
