//! Browser bindings: build a synthetic scene, step a two-phase segmenter,
//! and render the image with the current contour as RGBA.
//!
//! [`Demo`] holds the logic and is testable natively. [`Segmenter`] is the
//! thin `wasm_bindgen` wrapper used by `www/index.html`.

use localfit::bench::{dsc, generate, standard_inits, Scene, SyntheticSpec};
use localfit::{Evolution, Mask, ModelKind, ModelParams, Polarity, ScalarField2D};
use wasm_bindgen::prelude::*;

pub struct Demo {
    image: ScalarField2D,
    truth: Mask,
    evolution: Evolution,
}

fn scene_spec(scene: Scene, size: usize) -> SyntheticSpec {
    let base = match scene {
        Scene::TwoBlobInhomogeneous => SyntheticSpec::standard_two_blob(),
        Scene::VesselLike => SyntheticSpec::standard_vessel(),
        Scene::FourRegion => SyntheticSpec::standard_four_region(),
    };
    SyntheticSpec { width: size, height: size, ..base }
}

impl Demo {
    /// `scene`: two_blob_inhomogeneous or vessel_like. `init`: one of the
    /// standard two-phase init names.
    pub fn create(scene: &str, size: usize, model: &str, polarity: &str, init: &str) -> Result<Self, String> {
        let scene: Scene = scene.parse()?;
        if scene == Scene::FourRegion {
            return Err("the demo segments two-phase scenes only".into());
        }
        let model: ModelKind = model.parse()?;
        let polarity: Polarity = polarity.parse()?;
        let generated = generate(&scene_spec(scene, size)).map_err(|e| e.to_string())?;
        let params = ModelParams::defaults_for(model).with_polarity(polarity);
        let init = standard_inits(size, size, params.c0)
            .into_iter()
            .find(|n| n.name == init)
            .ok_or_else(|| format!("unknown init `{init}`"))?;
        let evolution = Evolution::new(model, &generated.image, &init.init, &params).map_err(|e| e.to_string())?;
        Ok(Self { truth: generated.object_truth().clone(), image: generated.image, evolution })
    }

    /// Runs `n` iterations and returns the energy afterwards.
    pub fn advance(&mut self, n: usize) -> Result<f64, String> {
        for _ in 0..n {
            self.evolution.step().map_err(|e| e.to_string())?;
        }
        Ok(self.evolution.energy())
    }

    pub fn iteration(&self) -> usize {
        self.evolution.iteration()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.image.dims()
    }

    pub fn dsc(&self) -> f64 {
        dsc(&self.evolution.phi().mask(), &self.truth).expect("same grid")
    }

    /// Gray image, contour pixels in red.
    pub fn rgba(&self) -> Vec<u8> {
        let contour = self.evolution.phi().mask().boundary();
        let mut out = Vec::with_capacity(self.image.len() * 4);
        for (&v, &edge) in self.image.values().iter().zip(contour.bits()) {
            let g = v.clamp(0.0, 255.0).round() as u8;
            out.extend_from_slice(&if edge { [255, 32, 32, 255] } else { [g, g, g, 255] });
        }
        out
    }
}

#[wasm_bindgen]
pub struct Segmenter(Demo);

#[wasm_bindgen]
impl Segmenter {
    #[wasm_bindgen(constructor)]
    pub fn new(scene: &str, size: usize, model: &str, polarity: &str, init: &str) -> Result<Segmenter, JsError> {
        Demo::create(scene, size, model, polarity, init).map(Segmenter).map_err(|e| JsError::new(&e))
    }

    pub fn step(&mut self, n: usize) -> Result<f64, JsError> {
        self.0.advance(n).map_err(|e| JsError::new(&e))
    }

    pub fn overlay_rgba(&self) -> Vec<u8> {
        self.0.rgba()
    }

    pub fn width(&self) -> usize {
        self.0.dims().0
    }

    pub fn height(&self) -> usize {
        self.0.dims().1
    }

    pub fn iteration(&self) -> usize {
        self.0.iteration()
    }

    pub fn dsc(&self) -> f64 {
        self.0.dsc()
    }
}
