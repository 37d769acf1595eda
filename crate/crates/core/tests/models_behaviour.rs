mod common;

use common::*;
use localfit::bench::{generate, standard_inits, SyntheticSpec};
use localfit::models::rsf_data_force;
use localfit::multiphase::{mrsf_data_forces, run_multiphase_observed};
use localfit::{
    run, run_observed, Evolution, FitKind, FittingPair, InitSpec, LevelSet, ModelKind, ModelParams, MultiphaseInit,
    PhaseSet, Polarity, ScalarField2D, Shape,
};

fn square_image() -> ScalarField2D {
    ScalarField2D::from_fn(40, 40, |x, y| if (12..28).contains(&x) && (12..28).contains(&y) { 190.0 } else { 60.0 })
        .unwrap()
}

fn square_init() -> InitSpec {
    InitSpec::new(vec![Shape::Rect { x0: 12, y0: 12, x1: 28, y1: 28 }], 2.0)
}

fn small_blobs() -> (ScalarField2D, InitSpec) {
    let spec = SyntheticSpec { width: 48, height: 48, ..SyntheticSpec::standard_two_blob() };
    let img = generate(&spec).unwrap();
    let init = standard_inits(48, 48, 2.0).swap_remove(1).init;
    (img.image, init)
}

#[test]
fn well_placed_contour_gives_the_same_mask_either_way() {
    let image = square_image();
    for model in ModelKind::ALL {
        let params = ModelParams::defaults_for(model).with_max_iters(60);
        let off = run(model, &image, &square_init(), &params).unwrap();
        let on = run(model, &image, &square_init(), &params.clone().with_polarity(Polarity::BrightObject)).unwrap();
        assert_eq!(off.mask, on.mask, "{model}");
        assert!(off.mask.get(20, 20) && !off.mask.get(2, 2), "{model}");
    }
}

#[test]
fn dark_polarity_segments_a_dark_object() {
    let image = square_image().map(|v| 250.0 - v);
    let params = ModelParams::rsf().with_max_iters(60).with_polarity(Polarity::DarkObject);
    let r = run(ModelKind::Rsf, &image, &square_init(), &params).unwrap();
    assert!(r.mask.get(20, 20) && !r.mask.get(2, 2));
}

#[test]
fn exchanged_fits_stay_ordered_every_iteration() {
    let (image, init) = small_blobs();
    for model in ModelKind::ALL {
        for polarity in [Polarity::BrightObject, Polarity::DarkObject] {
            let params = ModelParams::defaults_for(model).with_max_iters(25).with_polarity(polarity);
            let mut seen = 0;
            run_observed(model, &image, &init, &params, |v| {
                seen += 1;
                let pairs: Vec<&FittingPair> = std::iter::once(v.fits).chain(v.variances).collect();
                for pair in pairs {
                    for (a, b) in pair.side1.values().iter().zip(pair.side2.values()) {
                        assert!(polarity.is_ordered(*a, *b), "{model} {polarity} iter {}: {a} {b}", v.iteration);
                    }
                }
                assert!(v.energy.is_finite());
            })
            .unwrap();
            assert_eq!(seen, 25);
        }
    }
}

#[test]
fn four_phase_fits_stay_sorted_every_iteration() {
    let (image, _) = small_blobs();
    let init = MultiphaseInit::Thresholds { levels: vec![80.0, 120.0, 160.0], c0: 2.0 };
    let params = ModelParams::mrsf().with_max_iters(15).with_polarity(Polarity::BrightObject);
    run_multiphase_observed(&image, &init, &params, |_, fits| {
        for i in 0..image.len() {
            let v: Vec<f64> = fits.iter().map(|f| f.values()[i]).collect();
            assert!(v.windows(2).all(|p| p[0] <= p[1]), "{v:?}");
        }
    })
    .unwrap();
}

#[test]
fn runs_are_deterministic() {
    let (image, init) = small_blobs();
    for model in ModelKind::ALL {
        let params = ModelParams::defaults_for(model).with_max_iters(20).with_polarity(Polarity::BrightObject);
        let a = run(model, &image, &init, &params).unwrap();
        let b = run(model, &image, &init, &params).unwrap();
        assert_eq!(a.final_phi, b.final_phi);
        assert_eq!(a.energy_trace, b.energy_trace);
    }
}

#[test]
fn stepping_matches_a_full_run() {
    let (image, init) = small_blobs();
    let params = ModelParams::lgdf().with_max_iters(12).with_polarity(Polarity::BrightObject);
    let full = run(ModelKind::Lgdf, &image, &init, &params).unwrap();
    let mut evo = Evolution::new(ModelKind::Lgdf, &image, &init, &params).unwrap();
    let trace: Vec<f64> = (0..12).map(|_| evo.step().unwrap()).collect();
    assert_eq!(trace, full.energy_trace);
    assert_eq!(evo.into_level_set(), full.final_phi);
}

#[test]
fn constant_image_stays_finite() {
    let image = ScalarField2D::filled(24, 24, 128.0).unwrap();
    let init = InitSpec::new(vec![Shape::Circle { cx: 12.0, cy: 12.0, r: 6.0 }], 2.0);
    for model in ModelKind::ALL {
        for polarity in [Polarity::Off, Polarity::BrightObject] {
            let params = ModelParams::defaults_for(model).with_max_iters(30).with_polarity(polarity);
            let r = run(model, &image, &init, &params).unwrap();
            assert!(r.final_phi.phi.all_finite(), "{model}");
            assert!(r.energy_trace.iter().all(|e| e.is_finite()), "{model}");
        }
    }
}

#[test]
fn four_phase_force_reduces_to_two_phase_when_one_set_is_flat() {
    // With φ_b far positive only M₁ = H_a and M₃ = 1 − H_a remain.
    let mut r = rng(5);
    let image = random_field(&mut r, 16, 16, 0.0, 255.0);
    let phi_a = LevelSet::new(random_field(&mut r, 16, 16, -2.5, 2.5), 1.0).unwrap();
    let phi_b = LevelSet::new(ScalarField2D::filled(16, 16, 1e8).unwrap(), 1.0).unwrap();
    let fits = [0, 1, 2, 3].map(|_| random_field(&mut r, 16, 16, 0.0, 255.0));
    let params = ModelParams::rsf();
    let k = params.kernel().unwrap();
    let ps = PhaseSet::new(phi_a.clone(), phi_b).unwrap();
    let (fa, _) = mrsf_data_forces(&ps, &image, &fits, &k).unwrap();
    let pair = FittingPair::new(fits[0].clone(), fits[2].clone(), FitKind::Means).unwrap();
    let two = rsf_data_force(&phi_a, &image, &pair, &params, &k).unwrap();
    let scale = two.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, b) in fa.values().iter().zip(two.values()) {
        assert!((a - b).abs() <= 1e-6 * scale, "{a} vs {b}");
    }
}
