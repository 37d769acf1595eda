//! Run configuration: the TOML schema, defaulting and validation.
//!
//! [`RawConfig`] mirrors the file. [`resolve`] fills every default, loads the
//! input and checks every combination, so a config that resolves can run.
//! [`Resolved::effective`] turns the result back into a fully explicit
//! [`RawConfig`] that reproduces the same run.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use localfit::bench::{generate, standard_inits, standard_multiphase_inits, Scene, SyntheticSpec};
use localfit::io::load_image;
use localfit::levelset::Shape;
use localfit::{InitSpec, Mask, ModelKind, ModelParams, MultiphaseInit, Polarity, ScalarField2D, VarianceSwap};
use serde::{Deserialize, Serialize};

/// Default thresholds for the four-phase `thresholds` preset: four equal
/// bands of the 0..=255 range.
pub const DEFAULT_THRESHOLDS: [f64; 3] = [63.75, 127.5, 191.25];
pub const DEFAULT_SIGMAS: [f64; 3] = [3.0, 4.0, 5.0];
pub const DEFAULT_TIMING_ITERS: usize = 100;
pub const DEFAULT_TIMING_REPEATS: usize = 3;

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub polarity: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Ground-truth mask for file input: nonzero pixels are the object.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<RawSynthetic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub params: Option<RawParams>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigmas: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timing: Option<RawTiming>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub init: Vec<RawInit>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawSynthetic {
    pub scene: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub height: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bias: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawParams {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel_radius: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub variance_swap: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub early_stop: Option<bool>,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawTiming {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iters: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub repeats: Option<usize>,
}

/// One initialization. Exactly one of `preset`, `shapes`, `thresholds` or
/// the `shapes_a`/`shapes_b` pair.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawInit {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shapes: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub thresholds: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shapes_a: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub shapes_b: Option<Vec<String>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Single,
    Robustness,
    SigmaSweep,
    Timing,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Single => "single",
            Experiment::Robustness => "robustness",
            Experiment::SigmaSweep => "sigma_sweep",
            Experiment::Timing => "timing",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "single" => Ok(Experiment::Single),
            "robustness" => Ok(Experiment::Robustness),
            "sigma_sweep" => Ok(Experiment::SigmaSweep),
            "timing" => Ok(Experiment::Timing),
            other => Err(format!("unknown experiment `{other}` (expected single, robustness, sigma_sweep or timing)")),
        }
    }
}

/// Two-phase models or the four-phase one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Model {
    TwoPhase(ModelKind),
    FourPhase,
}

impl Model {
    pub fn as_str(self) -> &'static str {
        match self {
            Model::TwoPhase(k) => k.as_str(),
            Model::FourPhase => "mrsf",
        }
    }
}

impl FromStr for Model {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "mrsf" {
            return Ok(Model::FourPhase);
        }
        s.parse::<ModelKind>()
            .map(Model::TwoPhase)
            .map_err(|_| format!("unknown model `{s}` (expected rsf, lif, lgdf or mrsf)"))
    }
}

#[derive(Clone, Debug)]
pub enum Input {
    File { path: PathBuf, truth: Option<PathBuf> },
    Synthetic(SyntheticSpec),
}

#[derive(Clone, Debug)]
pub enum Inits {
    TwoPhase(Vec<(String, InitSpec)>),
    FourPhase(Vec<(String, MultiphaseInit)>),
}

impl Inits {
    pub fn len(&self) -> usize {
        match self {
            Inits::TwoPhase(v) => v.len(),
            Inits::FourPhase(v) => v.len(),
        }
    }
}

/// A validated, fully defaulted run.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub experiment: Experiment,
    pub model: Model,
    pub polarity: Polarity,
    pub out_dir: PathBuf,
    pub input: Input,
    pub params: ModelParams,
    pub inits: Inits,
    pub sigmas: Vec<f64>,
    pub timing_iters: usize,
    pub timing_repeats: usize,
    pub image: ScalarField2D,
    /// Two-phase: one object mask. Four-phase: one mask per region.
    pub truth: Option<Vec<Mask>>,
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

fn lift<T, E: std::fmt::Display>(r: Result<T, E>, what: &str) -> Result<T, ConfigError> {
    r.map_err(|e| ConfigError(format!("{what}: {e}")))
}

pub fn parse(text: &str) -> Result<RawConfig, ConfigError> {
    lift(toml::from_str(text), "config")
}

pub fn load(path: &Path) -> Result<RawConfig, ConfigError> {
    let text = lift(std::fs::read_to_string(path), &path.display().to_string())?;
    parse(&text)
}

/// `rect x0 y0 x1 y1` (half-open pixel box) or `circle cx cy r`.
pub fn parse_shape(s: &str) -> Result<Shape, ConfigError> {
    let parts: Vec<&str> = s.split_whitespace().collect();
    let bad = || ConfigError(format!("bad shape `{s}` (expected `rect x0 y0 x1 y1` or `circle cx cy r`)"));
    match parts.as_slice() {
        ["rect", rest @ ..] if rest.len() == 4 => {
            let v: Vec<usize> = rest.iter().map(|p| p.parse()).collect::<Result<_, _>>().map_err(|_| bad())?;
            Ok(Shape::Rect { x0: v[0], y0: v[1], x1: v[2], y1: v[3] })
        }
        ["circle", rest @ ..] if rest.len() == 3 => {
            let v: Vec<f64> = rest.iter().map(|p| p.parse()).collect::<Result<_, _>>().map_err(|_| bad())?;
            Ok(Shape::Circle { cx: v[0], cy: v[1], r: v[2] })
        }
        _ => Err(bad()),
    }
}

pub fn format_shape(shape: &Shape) -> String {
    match *shape {
        Shape::Rect { x0, y0, x1, y1 } => format!("rect {x0} {y0} {x1} {y1}"),
        Shape::Circle { cx, cy, r } => format!("circle {cx} {cy} {r}"),
    }
}

fn parse_shapes(list: &[String]) -> Result<Vec<Shape>, ConfigError> {
    if list.is_empty() {
        return err("an init needs at least one shape");
    }
    list.iter().map(|s| parse_shape(s)).collect()
}

fn standard_spec(scene: Scene) -> SyntheticSpec {
    match scene {
        Scene::TwoBlobInhomogeneous => SyntheticSpec::standard_two_blob(),
        Scene::VesselLike => SyntheticSpec::standard_vessel(),
        Scene::FourRegion => SyntheticSpec::standard_four_region(),
    }
}

fn resolve_params(model: Model, polarity: Polarity, raw: &RawParams) -> Result<ModelParams, ConfigError> {
    let mut p = match model {
        Model::TwoPhase(k) => ModelParams::defaults_for(k),
        Model::FourPhase => ModelParams::mrsf(),
    };
    p.polarity = polarity;
    macro_rules! set {
        ($($f:ident),*) => { $( if let Some(v) = raw.$f { p.$f = v; } )* };
    }
    set!(lambda1, lambda2, nu, mu, epsilon, sigma, dt, c0, max_iters, early_stop);
    if raw.kernel_radius.is_some() {
        p.kernel_radius = raw.kernel_radius;
    }
    if let Some(v) = &raw.variance_swap {
        p.variance_swap = lift(v.parse::<VarianceSwap>(), "params.variance_swap")?;
    }
    lift(p.validate(), "params")?;
    Ok(p)
}

fn two_phase_init(raw: &RawInit, index: usize, w: usize, h: usize, c0: f64) -> Result<(String, InitSpec), ConfigError> {
    if raw.thresholds.is_some() || raw.shapes_a.is_some() || raw.shapes_b.is_some() {
        return err(format!("init {index}: thresholds and shapes_a/shapes_b apply to model mrsf only"));
    }
    let (name, spec) = match (&raw.preset, &raw.shapes) {
        (Some(preset), None) => {
            let found = standard_inits(w, h, c0).into_iter().find(|n| &n.name == preset);
            match found {
                Some(n) => (raw.name.clone().unwrap_or(n.name), n.init),
                None => {
                    return err(format!(
                        "init {index}: unknown preset `{preset}` (expected centered_box, corner_box, oversized_box or two_small_boxes)"
                    ))
                }
            }
        }
        (None, Some(shapes)) => (
            raw.name.clone().unwrap_or_else(|| format!("init{index}")),
            InitSpec::new(lift(parse_shapes(shapes), &format!("init {index}"))?, c0),
        ),
        _ => return err(format!("init {index}: give exactly one of preset or shapes")),
    };
    lift(spec.validate(w, h), &format!("init {name}"))?;
    Ok((name, spec))
}

fn four_phase_init(
    raw: &RawInit,
    index: usize,
    image: &ScalarField2D,
    params: &ModelParams,
) -> Result<(String, MultiphaseInit), ConfigError> {
    let (w, h) = image.dims();
    let c0 = params.c0;
    if raw.shapes.is_some() {
        return err(format!("init {index}: model mrsf takes thresholds or shapes_a/shapes_b, not shapes"));
    }
    let default_name = || raw.name.clone().unwrap_or_else(|| format!("init{index}"));
    let (name, init) = match (&raw.preset, &raw.thresholds, &raw.shapes_a, &raw.shapes_b) {
        (Some(preset), None, None, None) => {
            let found =
                standard_multiphase_inits(w, h, &DEFAULT_THRESHOLDS, c0).into_iter().find(|n| &n.name == preset);
            match found {
                Some(n) => (raw.name.clone().unwrap_or(n.name), n.init),
                None => {
                    return err(format!(
                        "init {index}: unknown preset `{preset}` (expected thresholds, offset_boxes or crossed_strips)"
                    ))
                }
            }
        }
        (None, Some(levels), None, None) => (default_name(), MultiphaseInit::Thresholds { levels: levels.clone(), c0 }),
        (None, None, Some(a), Some(b)) => (
            default_name(),
            MultiphaseInit::Shapes {
                a: InitSpec::new(lift(parse_shapes(a), &format!("init {index} shapes_a"))?, c0),
                b: InitSpec::new(lift(parse_shapes(b), &format!("init {index} shapes_b"))?, c0),
            },
        ),
        _ => return err(format!("init {index}: give exactly one of preset, thresholds or the shapes_a/shapes_b pair")),
    };
    lift(init.build(image, params.epsilon), &format!("init {name}"))?;
    Ok((name, init))
}

fn load_truth(path: &Path, image: &ScalarField2D) -> Result<Mask, ConfigError> {
    let t = lift(load_image(path), "truth")?;
    if t.dims() != image.dims() {
        return err(format!("truth is {:?} but the input is {:?}", t.dims(), image.dims()));
    }
    let (w, h) = t.dims();
    Ok(Mask::from_bits(w, h, t.values().iter().map(|&v| v > 0.0).collect()))
}

pub fn resolve(raw: &RawConfig, out_override: Option<&Path>) -> Result<Resolved, ConfigError> {
    let experiment: Experiment = lift(raw.experiment.as_deref().unwrap_or("single").parse(), "experiment")?;
    let model: Model = lift(raw.model.as_deref().unwrap_or("rsf").parse(), "model")?;
    let polarity: Polarity = lift(raw.polarity.as_deref().unwrap_or("bright_object").parse(), "polarity")?;
    let out_dir =
        out_override.map(Path::to_path_buf).or_else(|| raw.out_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));
    if model == Model::FourPhase && experiment == Experiment::SigmaSweep {
        return err("experiment sigma_sweep is not available for model mrsf");
    }
    if experiment == Experiment::Timing && !polarity.is_active() {
        return err("experiment timing compares against polarity off; set polarity to bright_object or dark_object");
    }

    let (input, image, truth) = match (&raw.input, &raw.synthetic) {
        (Some(path), None) => {
            if raw.truth.is_some() && model == Model::FourPhase {
                return err("truth files are supported for two-phase models only");
            }
            let image = lift(load_image(path), "input")?;
            let truth = match &raw.truth {
                Some(t) => Some(vec![load_truth(t, &image)?]),
                None => None,
            };
            (Input::File { path: path.clone(), truth: raw.truth.clone() }, image, truth)
        }
        (None, Some(s)) => {
            if raw.truth.is_some() {
                return err("truth applies to file input only; synthetic scenes carry their own");
            }
            let scene: Scene = lift(s.scene.parse(), "synthetic.scene")?;
            let base = standard_spec(scene);
            let spec = SyntheticSpec {
                scene,
                width: s.width.unwrap_or(base.width),
                height: s.height.unwrap_or(base.height),
                levels: s.levels.clone().unwrap_or(base.levels),
                bias: s.bias.unwrap_or(base.bias),
                noise: s.noise.unwrap_or(base.noise),
                seed: s.seed.unwrap_or(base.seed),
            };
            let generated = lift(generate(&spec), "synthetic")?;
            let truth = match (model, scene) {
                (Model::FourPhase, Scene::FourRegion)
                | (Model::TwoPhase(_), Scene::TwoBlobInhomogeneous | Scene::VesselLike) => Some(generated.truth),
                _ => None,
            };
            (Input::Synthetic(spec), generated.image, truth)
        }
        (Some(_), Some(_)) => return err("give exactly one input source: input or [synthetic], not both"),
        (None, None) => return err("no input: set input = \"<path>\" or add a [synthetic] table"),
    };
    if truth.is_none() && matches!(experiment, Experiment::Robustness | Experiment::SigmaSweep) {
        return err(format!(
            "experiment {} scores against ground truth: use a matching synthetic scene or set truth",
            experiment.as_str()
        ));
    }

    let params = resolve_params(model, polarity, &raw.params.clone().unwrap_or_default())?;
    let (w, h) = image.dims();
    let defaults: Vec<RawInit> = if !raw.init.is_empty() {
        raw.init.clone()
    } else {
        let presets: Vec<&str> = match (model, experiment) {
            (Model::TwoPhase(_), Experiment::Robustness) => {
                vec!["centered_box", "corner_box", "oversized_box", "two_small_boxes"]
            }
            (Model::TwoPhase(_), _) => vec!["centered_box"],
            (Model::FourPhase, Experiment::Robustness) => vec!["thresholds", "offset_boxes", "crossed_strips"],
            (Model::FourPhase, _) => vec!["thresholds"],
        };
        presets.into_iter().map(|p| RawInit { preset: Some(p.to_string()), ..RawInit::default() }).collect()
    };
    let inits = match model {
        Model::TwoPhase(_) => Inits::TwoPhase(
            defaults
                .iter()
                .enumerate()
                .map(|(i, r)| two_phase_init(r, i, w, h, params.c0))
                .collect::<Result<_, _>>()?,
        ),
        Model::FourPhase => Inits::FourPhase(
            defaults
                .iter()
                .enumerate()
                .map(|(i, r)| four_phase_init(r, i, &image, &params))
                .collect::<Result<_, _>>()?,
        ),
    };
    match experiment {
        Experiment::Robustness if inits.len() < 2 => return err("experiment robustness needs at least 2 inits"),
        Experiment::Single | Experiment::SigmaSweep | Experiment::Timing if inits.len() != 1 => {
            return err(format!("experiment {} takes exactly 1 init, got {}", experiment.as_str(), inits.len()))
        }
        _ => {}
    }

    let sigmas = raw.sigmas.clone().unwrap_or_else(|| DEFAULT_SIGMAS.to_vec());
    if raw.sigmas.is_some() && experiment != Experiment::SigmaSweep {
        return err("sigmas applies to experiment sigma_sweep only");
    }
    if sigmas.is_empty() {
        return err("sigmas must not be empty");
    }
    for &s in &sigmas {
        lift(params.clone().with_sigma(s).validate(), "sigmas")?;
    }
    if raw.timing.is_some() && experiment != Experiment::Timing {
        return err("[timing] applies to experiment timing only");
    }
    let timing = raw.timing.clone().unwrap_or_default();
    let timing_iters = timing.iters.unwrap_or(DEFAULT_TIMING_ITERS);
    let timing_repeats = timing.repeats.unwrap_or(DEFAULT_TIMING_REPEATS);
    if timing_repeats == 0 {
        return err("timing.repeats must be at least 1");
    }

    Ok(Resolved {
        experiment,
        model,
        polarity,
        out_dir,
        input,
        params,
        inits,
        sigmas,
        timing_iters,
        timing_repeats,
        image,
        truth,
    })
}

impl Resolved {
    /// Every setting spelled out; parsing it back gives the same run.
    pub fn effective(&self) -> RawConfig {
        let p = &self.params;
        let (input, truth, synthetic) = match &self.input {
            Input::File { path, truth } => (Some(path.clone()), truth.clone(), None),
            Input::Synthetic(s) => (
                None,
                None,
                Some(RawSynthetic {
                    scene: s.scene.to_string(),
                    width: Some(s.width),
                    height: Some(s.height),
                    levels: Some(s.levels.clone()),
                    bias: Some(s.bias),
                    noise: Some(s.noise),
                    seed: Some(s.seed),
                }),
            ),
        };
        let shapes = |spec: &InitSpec| Some(spec.shapes.iter().map(format_shape).collect());
        let init = match &self.inits {
            Inits::TwoPhase(v) => v
                .iter()
                .map(|(name, spec)| RawInit { name: Some(name.clone()), shapes: shapes(spec), ..RawInit::default() })
                .collect(),
            Inits::FourPhase(v) => v
                .iter()
                .map(|(name, init)| match init {
                    MultiphaseInit::Thresholds { levels, .. } => {
                        RawInit { name: Some(name.clone()), thresholds: Some(levels.clone()), ..RawInit::default() }
                    }
                    MultiphaseInit::Shapes { a, b } => RawInit {
                        name: Some(name.clone()),
                        shapes_a: shapes(a),
                        shapes_b: shapes(b),
                        ..RawInit::default()
                    },
                })
                .collect(),
        };
        RawConfig {
            experiment: Some(self.experiment.as_str().to_string()),
            model: Some(self.model.as_str().to_string()),
            polarity: Some(self.polarity.to_string()),
            out_dir: Some(self.out_dir.clone()),
            input,
            truth,
            synthetic,
            params: Some(RawParams {
                lambda1: Some(p.lambda1),
                lambda2: Some(p.lambda2),
                nu: Some(p.nu),
                mu: Some(p.mu),
                epsilon: Some(p.epsilon),
                sigma: Some(p.sigma),
                kernel_radius: p.kernel_radius,
                dt: Some(p.dt),
                c0: Some(p.c0),
                max_iters: Some(p.max_iters),
                variance_swap: Some(p.variance_swap.as_str().to_string()),
                early_stop: Some(p.early_stop),
            }),
            sigmas: (self.experiment == Experiment::SigmaSweep).then(|| self.sigmas.clone()),
            timing: (self.experiment == Experiment::Timing)
                .then_some(RawTiming { iters: Some(self.timing_iters), repeats: Some(self.timing_repeats) }),
            init,
        }
    }

    pub fn effective_toml(&self) -> String {
        toml::to_string(&self.effective()).expect("effective config serializes")
    }
}
