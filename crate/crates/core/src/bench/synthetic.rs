//! Synthetic test scenes with known ground truth.
//!
//! A scene is a piecewise-constant label map; intensities are the per-label
//! levels plus an additive horizontal bias ramp and seeded Gaussian noise,
//! rounded and clamped to 0..=255.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::field::ScalarField2D;
use crate::levelset::Mask;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scene {
    /// Two bright blobs on a dark background. Levels: `[object, background]`.
    TwoBlobInhomogeneous,
    /// Thin curvilinear structures. Levels: `[vessel, background]`.
    VesselLike,
    /// Two overlapping disks A and B. Levels: background, B only, A only,
    /// A∩B.
    FourRegion,
}

impl Scene {
    pub fn as_str(self) -> &'static str {
        match self {
            Scene::TwoBlobInhomogeneous => "two_blob_inhomogeneous",
            Scene::VesselLike => "vessel_like",
            Scene::FourRegion => "four_region",
        }
    }

    fn level_count(self) -> usize {
        match self {
            Scene::TwoBlobInhomogeneous | Scene::VesselLike => 2,
            Scene::FourRegion => 4,
        }
    }
}

impl fmt::Display for Scene {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scene {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "two_blob_inhomogeneous" => Ok(Scene::TwoBlobInhomogeneous),
            "vessel_like" => Ok(Scene::VesselLike),
            "four_region" => Ok(Scene::FourRegion),
            other => {
                Err(format!("unknown scene `{other}` (expected two_blob_inhomogeneous, vessel_like or four_region)"))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub scene: Scene,
    pub width: usize,
    pub height: usize,
    pub levels: Vec<f64>,
    /// Total rise of the additive bias ramp from the left edge to the right.
    pub bias: f64,
    /// Standard deviation of the additive Gaussian noise.
    pub noise: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    /// 128×128 two-blob scene, levels 200/50, bias 80, noise 5.
    pub fn standard_two_blob() -> Self {
        Self {
            scene: Scene::TwoBlobInhomogeneous,
            width: 128,
            height: 128,
            levels: vec![200.0, 50.0],
            bias: 80.0,
            noise: 5.0,
            seed: 7,
        }
    }

    /// 128×128 vessel scene with a strong ramp: the left end of the vessels
    /// is darker than the right end of the background.
    pub fn standard_vessel() -> Self {
        Self {
            scene: Scene::VesselLike,
            width: 128,
            height: 128,
            levels: vec![170.0, 70.0],
            bias: 120.0,
            noise: 5.0,
            seed: 11,
        }
    }

    /// 128×128 four-region scene.
    pub fn standard_four_region() -> Self {
        Self {
            scene: Scene::FourRegion,
            width: 128,
            height: 128,
            levels: vec![30.0, 95.0, 160.0, 225.0],
            bias: 40.0,
            noise: 4.0,
            seed: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.width < 16 || self.height < 16 {
            return Err(Error::Parameter(format!(
                "synthetic scenes need at least 16x16 pixels, got {}x{}",
                self.width, self.height
            )));
        }
        if self.levels.len() != self.scene.level_count() {
            return Err(Error::Parameter(format!(
                "scene {} takes {} levels, got {}",
                self.scene,
                self.scene.level_count(),
                self.levels.len()
            )));
        }
        if !self.levels.iter().all(|v| v.is_finite()) || !self.bias.is_finite() {
            return Err(Error::Parameter("levels and bias must be finite".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Parameter(format!("noise must be non-negative, got {}", self.noise)));
        }
        Ok(())
    }
}

/// A generated image with its ground truth.
#[derive(Clone, Debug)]
pub struct SyntheticImage {
    pub image: ScalarField2D,
    /// Region label per pixel, in [`SyntheticSpec::levels`] order.
    pub labels: Vec<u8>,
    /// Two-phase scenes: one mask, the object support. Four-region scenes:
    /// one mask per region, in increasing order of intensity level.
    pub truth: Vec<Mask>,
}

impl SyntheticImage {
    pub fn object_truth(&self) -> &Mask {
        &self.truth[0]
    }
}

pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticImage> {
    spec.validate()?;
    let (w, h) = (spec.width, spec.height);
    let labels = label_map(spec.scene, w, h);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise).map_err(|e| Error::Parameter(e.to_string()))?;
    let mut values = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let base = spec.levels[labels[y * w + x] as usize];
            let ramp = spec.bias * (x as f64 / (w - 1) as f64 - 0.5);
            let n = if spec.noise > 0.0 { noise.sample(&mut rng) } else { 0.0 };
            values.push((base + ramp + n).round().clamp(0.0, 255.0));
        }
    }
    let image = ScalarField2D::from_vec(w, h, values)?;
    let truth = match spec.scene {
        Scene::TwoBlobInhomogeneous | Scene::VesselLike => {
            vec![Mask::from_bits(w, h, labels.iter().map(|&l| l == 0).collect())]
        }
        Scene::FourRegion => {
            let mut order: Vec<usize> = (0..4).collect();
            order.sort_by(|&a, &b| spec.levels[a].total_cmp(&spec.levels[b]));
            order
                .into_iter()
                .map(|k| Mask::from_bits(w, h, labels.iter().map(|&l| l as usize == k).collect()))
                .collect()
        }
    };
    Ok(SyntheticImage { image, labels, truth })
}

fn label_map(scene: Scene, w: usize, h: usize) -> Vec<u8> {
    let (wf, hf) = (w as f64, h as f64);
    let mut labels = vec![0u8; w * h];
    match scene {
        Scene::TwoBlobInhomogeneous => {
            for y in 0..h {
                for x in 0..w {
                    let (u, v) = (x as f64 / wf, y as f64 / hf);
                    let blob_a = ((u - 0.29) / 0.17).powi(2) + ((v - 0.46) / 0.30).powi(2) <= 1.0;
                    let blob_b = ((u - 0.71) / 0.16).powi(2) + ((v - 0.56) / 0.29).powi(2) <= 1.0;
                    labels[y * w + x] = if blob_a || blob_b { 0 } else { 1 };
                }
            }
        }
        Scene::VesselLike => {
            let curves = vessel_curves(wf, hf);
            for y in 0..h {
                for x in 0..w {
                    let p = (x as f64, y as f64);
                    let inside = curves.iter().any(|(pts, half_width)| {
                        pts.iter().any(|q| (p.0 - q.0).powi(2) + (p.1 - q.1).powi(2) <= half_width * half_width)
                    });
                    labels[y * w + x] = if inside { 0 } else { 1 };
                }
            }
        }
        Scene::FourRegion => {
            for y in 0..h {
                for x in 0..w {
                    let (u, v) = (x as f64 / wf, y as f64 / hf);
                    let in_a = (u - 0.40).powi(2) + (v - 0.42).powi(2) <= 0.26f64.powi(2);
                    let in_b = (u - 0.60).powi(2) + (v - 0.58).powi(2) <= 0.26f64.powi(2);
                    labels[y * w + x] = match (in_a, in_b) {
                        (false, false) => 0,
                        (false, true) => 1,
                        (true, false) => 2,
                        (true, true) => 3,
                    };
                }
            }
        }
    }
    labels
}

/// Densely sampled center lines with their half widths.
fn vessel_curves(w: f64, h: f64) -> Vec<(Vec<(f64, f64)>, f64)> {
    let samples = 4 * w.max(h) as usize;
    let main: Vec<(f64, f64)> = (0..=samples)
        .map(|i| {
            let t = i as f64 / samples as f64;
            (t * w, h * (0.42 + 0.14 * (std::f64::consts::TAU * 1.1 * t).sin()))
        })
        .collect();
    let branch: Vec<(f64, f64)> = (0..=samples)
        .map(|i| {
            let t = i as f64 / samples as f64;
            (w * (0.62 + 0.12 * (std::f64::consts::TAU * 0.9 * t).sin()), t * h)
        })
        .collect();
    vec![(main, 0.035 * h), (branch, 0.03 * w)]
}
