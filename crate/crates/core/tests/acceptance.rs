//! End-to-end acceptance run. Prints one line per criterion.
//!
//! Criteria listed in `KNOWN_GAPS` are reported but do not fail the run;
//! every other criterion must pass. A known gap that starts passing is
//! flagged so the list can be trimmed.

mod common;

use std::time::{Duration, Instant};

use common::*;
use localfit::bench::{
    dsc, generate, multiphase_suite, robustness_suite, sigma_sweep, standard_inits, standard_multiphase_inits,
    timing_compare, timing_compare_multiphase, vessel_init, SuiteRow, SyntheticSpec,
};
use localfit::models::{
    lgdf_data_energy, lgdf_data_force, lif_data_force, lif_energy_with, rsf_data_energy, rsf_data_force,
};
use localfit::multiphase::{mrsf_data_energy, mrsf_data_forces, mrsf_fit, mrsf_swap};
use localfit::{
    convolve, dirac_eps, e_terms, fit_means, fit_variances, heaviside_eps, lgdf_e_terms, run_observed, swap_pair,
    FitKind, GaussianKernel, LevelSet, Mask, ModelKind, ModelParams, MultiphaseInit, PhaseSet, Polarity,
};

const KNOWN_GAPS: &[u32] = &[4, 5];
const ITERS: usize = 500;
const MULTIPHASE_THRESHOLDS: [f64; 3] = [62.5, 127.5, 192.5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn budget(elapsed: Duration, limit_s: f64) -> (bool, String) {
    let s = elapsed.as_secs_f64();
    (s < limit_s, format!("{s:.1}s/{limit_s:.0}s"))
}

fn oracle_equivalence() -> Outcome {
    let mut worst = 0.0f64;
    let mut note = |got: f64, want: f64| worst = worst.max((got - want).abs() / got.abs().max(want.abs()).max(1.0));
    for seed in 0..24 {
        let inst = random_instance(seed);
        let k = GaussianKernel::new(inst.sigma).unwrap();
        let img = Grid::from_field(&inst.image);
        let hv = inst.phi.heaviside();
        let (hg, og) = (Grid::from_field(&hv), Grid::from_field(&hv.map(|v| 1.0 - v)));
        for (g, w) in convolve(&inst.image, &k).values().iter().zip(&conv(&img, inst.sigma).v) {
            note(*g, *w);
        }
        let means = fit_means(&inst.image, &hv, &k).unwrap();
        let (m1, m2) = (Grid::from_field(&means.side1), Grid::from_field(&means.side2));
        for (g, w) in means.side1.values().iter().zip(&local_mean(&img, &hg, inst.sigma).v) {
            note(*g, *w);
        }
        let (e1, _) = e_terms(&inst.image, &means, &k).unwrap();
        for (g, w) in e1.values().iter().zip(&e_term(&img, &m1, inst.sigma).v) {
            note(*g, *w);
        }
        let vars = fit_variances(&inst.image, &hv, &means, &k).unwrap();
        let (l1, _) = lgdf_e_terms(&inst.image, &means, &vars, &k).unwrap();
        for (g, w) in l1.values().iter().zip(&lgdf_e_term(&img, &m1, &Grid::from_field(&vars.side1), inst.sigma).v) {
            note(*g, *w);
        }
        let params = ModelParams::rsf();
        let got = rsf_data_energy(&inst.phi, &inst.image, &means, &params, &k).unwrap();
        note(got, fitting_energy(&img, &[(&m1, &hg, 1.0), (&m2, &og, 1.0)], inst.sigma));
    }
    outcome(worst <= 1e-9, format!("24 instances, worst relative error {worst:.1e} (limit 1e-9)"))
}

fn gradient_checks() -> Outcome {
    const STEP: f64 = 1e-4;
    let mut worst = 0.0f64;
    let mut samples = 0;
    let mut note = |analytic: f64, numeric: f64| {
        samples += 1;
        worst = worst.max((analytic + numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8));
    };
    let ls = |p: &localfit::ScalarField2D| LevelSet::new(p.clone(), 1.0).unwrap();
    for seed in 0..2 {
        let mut r = rng(500 + seed);
        let image = random_field(&mut r, 16, 16, 0.0, 255.0);
        let phi = ls(&random_field(&mut r, 16, 16, -2.5, 2.5));
        let phi_b = ls(&random_field(&mut r, 16, 16, -2.5, 2.5));
        let k = GaussianKernel::new(1.5).unwrap();
        let pair = random_pair(&mut r, 16, 16, 0.0, 255.0, FitKind::Means);
        let vars = random_pair(&mut r, 16, 16, 10.0, 2000.0, FitKind::Variances);
        let fits = [0, 1, 2, 3].map(|_| random_field(&mut r, 16, 16, 0.0, 255.0));
        let (rsf, lgdf) = (ModelParams::rsf(), ModelParams::lgdf());
        let f_rsf = rsf_data_force(&phi, &image, &pair, &rsf, &k).unwrap();
        let f_lif = lif_data_force(&phi, &image, &pair).unwrap();
        let f_lgdf = lgdf_data_force(&phi, &image, &pair, &vars, &lgdf, &k).unwrap();
        let (f_a, _) =
            mrsf_data_forces(&PhaseSet::new(phi.clone(), phi_b.clone()).unwrap(), &image, &fits, &k).unwrap();
        for i in interior_pixels(&mut r, 16, 16, k.radius(), 5) {
            note(
                f_rsf.values()[i],
                central_difference(&phi.phi, i, STEP, |p| rsf_data_energy(&ls(p), &image, &pair, &rsf, &k).unwrap()),
            );
            note(
                f_lif.values()[i],
                central_difference(&phi.phi, i, STEP, |p| lif_energy_with(&ls(p), &image, &pair).unwrap()),
            );
            note(
                f_lgdf.values()[i],
                central_difference(&phi.phi, i, STEP, |p| {
                    lgdf_data_energy(&ls(p), &image, &pair, &vars, &lgdf, &k).unwrap()
                }),
            );
            note(
                f_a.values()[i],
                central_difference(&phi.phi, i, STEP, |p| {
                    mrsf_data_energy(&PhaseSet::new(ls(p), phi_b.clone()).unwrap(), &image, &fits, &k).unwrap()
                }),
            );
        }
    }
    outcome(worst <= 1e-4, format!("{samples} samples over 4 models, worst relative error {worst:.1e} (limit 1e-4)"))
}

fn swap_invariants() -> Outcome {
    let mut violations = 0usize;
    let mut r = rng(77);
    for _ in 0..200 {
        let pair = random_pair(&mut r, 9, 7, -100.0, 300.0, FitKind::Means);
        for p in [Polarity::BrightObject, Polarity::DarkObject] {
            let out = swap_pair(&pair, p);
            let ordered = out.side1.values().iter().zip(out.side2.values()).all(|(a, b)| p.is_ordered(*a, *b));
            let kept = (0..pair.side1.len()).all(|i| {
                let (x, y, u, v) =
                    (pair.side1.values()[i], pair.side2.values()[i], out.side1.values()[i], out.side2.values()[i]);
                (u == x && v == y) || (u == y && v == x)
            });
            violations += usize::from(!ordered || !kept || swap_pair(&out, p) != out);
        }
        let fits = [0, 1, 2, 3].map(|_| random_field(&mut r, 9, 7, 0.0, 255.0));
        let out = mrsf_swap(&fits, Polarity::BrightObject);
        violations += usize::from(mrsf_swap(&out, Polarity::BrightObject) != out);
    }
    let img = generate(&SyntheticSpec { width: 48, height: 48, ..SyntheticSpec::standard_two_blob() }).unwrap();
    let init = standard_inits(48, 48, 2.0).swap_remove(1).init;
    let mut iterations = 0;
    for model in ModelKind::ALL {
        let params = ModelParams::defaults_for(model).with_max_iters(20).with_polarity(Polarity::BrightObject);
        run_observed(model, &img.image, &init, &params, |v| {
            iterations += 1;
            let pairs = std::iter::once(v.fits).chain(v.variances);
            for pair in pairs {
                if !pair.side1.values().iter().zip(pair.side2.values()).all(|(a, b)| a <= b) {
                    violations += 1;
                }
            }
        })
        .unwrap();
    }
    outcome(violations == 0, format!("600 random swaps, {iterations} improved iterations, {violations} violations"))
}

fn fmt_dsc(rows: &[SuiteRow]) -> String {
    rows.iter()
        .map(|r| match r.min_dsc() {
            Some(d) => format!("{d:.3}"),
            None => "err".to_string(),
        })
        .collect::<Vec<_>>()
        .join("/")
}

fn min_or_zero(rows: &[SuiteRow]) -> f64 {
    rows.iter().map(|r| r.min_dsc().unwrap_or(0.0)).fold(1.0, f64::min)
}

fn robustness(rows_out: &mut Vec<SuiteRow>) -> Outcome {
    let start = Instant::now();
    let img = generate(&SyntheticSpec::standard_two_blob()).unwrap();
    let (w, h) = img.image.dims();
    let inits = standard_inits(w, h, 2.0);
    let mut pass = true;
    let mut parts = Vec::new();
    for model in ModelKind::ALL {
        let params = ModelParams::defaults_for(model).with_max_iters(ITERS);
        let pols: &[Polarity] =
            if model == ModelKind::Rsf { &[Polarity::BrightObject, Polarity::Off] } else { &[Polarity::BrightObject] };
        let rows = robustness_suite(model, &img.image, img.object_truth(), &inits, &params, pols).unwrap();
        let (improved, original): (Vec<SuiteRow>, Vec<SuiteRow>) =
            rows.into_iter().partition(|r| r.polarity.is_active());
        let ok = min_or_zero(&improved) >= 0.95;
        pass &= ok;
        parts.push(format!("{model} improved {} [{}]", fmt_dsc(&improved), if ok { "ok" } else { "below 0.95" }));
        if !original.is_empty() {
            let ok = original.iter().any(|r| r.min_dsc().is_some_and(|d| d < 0.90));
            pass &= ok;
            parts.push(format!(
                "rsf original {} [{}]",
                fmt_dsc(&original),
                if ok { "ok" } else { "no init below 0.90" }
            ));
        }
        rows_out.extend(improved);
        rows_out.extend(original);
    }
    let (in_budget, b) = budget(start.elapsed(), 60.0);
    parts.push(b);
    outcome(pass && in_budget, parts.join("; "))
}

fn multiphase(rows_out: &mut Vec<SuiteRow>) -> Outcome {
    let start = Instant::now();
    let img = generate(&SyntheticSpec::standard_four_region()).unwrap();
    let (w, h) = img.image.dims();
    let params = ModelParams::mrsf().with_max_iters(ITERS);
    let inits = standard_multiphase_inits(w, h, &MULTIPHASE_THRESHOLDS, 2.0);
    let rows = multiphase_suite(&img.image, &img.truth, &inits, &params, &[Polarity::BrightObject, Polarity::Off]);
    let describe = |r: &SuiteRow| {
        let d: Vec<String> = r.dsc.iter().map(|v| format!("{v:.2}")).collect();
        format!("{}:{}", r.case, if d.is_empty() { "err".into() } else { d.join("/") })
    };
    let improved: Vec<&SuiteRow> = rows.iter().filter(|r| r.polarity.is_active()).collect();
    let original: Vec<&SuiteRow> = rows.iter().filter(|r| !r.polarity.is_active()).collect();
    let improved_ok = improved.iter().all(|r| r.min_dsc().is_some_and(|d| d >= 0.90));
    let original_ok = original.iter().any(|r| r.case != "thresholds" && r.min_dsc().is_some_and(|d| d < 0.70));
    let (in_budget, b) = budget(start.elapsed(), 90.0);
    let detail = format!(
        "improved {} [{}]; original {} [{}]; {b}",
        improved.iter().map(|r| describe(r)).collect::<Vec<_>>().join(" "),
        if improved_ok { "ok" } else { "region below 0.90" },
        original.iter().map(|r| describe(r)).collect::<Vec<_>>().join(" "),
        if original_ok { "ok" } else { "no off-target region below 0.70" },
    );
    rows_out.extend(rows);
    outcome(improved_ok && original_ok && in_budget, detail)
}

fn sigma_sensitivity(rows_out: &mut Vec<SuiteRow>) -> Outcome {
    let start = Instant::now();
    let img = generate(&SyntheticSpec::standard_vessel()).unwrap();
    let (w, h) = img.image.dims();
    let init = vessel_init(w, h, 2.0);
    let params = ModelParams::rsf().with_max_iters(ITERS);
    let rows = sigma_sweep(
        ModelKind::Rsf,
        &img.image,
        img.object_truth(),
        &init,
        &[3.0, 4.0, 5.0],
        &params,
        &[Polarity::BrightObject, Polarity::Off],
    );
    let find = |s: f64, active: bool| {
        rows.iter()
            .find(|r| r.sigma == s && r.polarity.is_active() == active)
            .and_then(SuiteRow::min_dsc)
            .unwrap_or(0.0)
    };
    let improved: Vec<f64> = [3.0, 4.0, 5.0].iter().map(|&s| find(s, true)).collect();
    let original: Vec<f64> = [3.0, 4.0, 5.0].iter().map(|&s| find(s, false)).collect();
    let ok = improved.iter().all(|&d| d >= 0.90) && original[0] < improved[0];
    let (in_budget, b) = budget(start.elapsed(), 60.0);
    rows_out.extend(rows);
    outcome(
        ok && in_budget,
        format!(
            "improved σ=3/4/5 {:.3}/{:.3}/{:.3}; original {:.3}/{:.3}/{:.3}; {b}",
            improved[0], improved[1], improved[2], original[0], original[1], original[2]
        ),
    )
}

fn overhead() -> Outcome {
    const ITERS: usize = 60;
    const REPEATS: usize = 5;
    let start = Instant::now();
    let img = generate(&SyntheticSpec::standard_two_blob()).unwrap();
    let (w, h) = img.image.dims();
    let init = standard_inits(w, h, 2.0).swap_remove(0).init;
    let mut pass = true;
    let mut parts = Vec::new();
    for model in ModelKind::ALL {
        let t = timing_compare(
            model,
            &img.image,
            &init,
            &ModelParams::defaults_for(model),
            Polarity::BrightObject,
            ITERS,
            REPEATS,
        )
        .unwrap();
        pass &= t.ratio <= 1.2;
        parts.push(format!("{model} {:.3}", t.ratio));
    }
    let four = generate(&SyntheticSpec::standard_four_region()).unwrap();
    let mp_init = MultiphaseInit::Thresholds { levels: MULTIPHASE_THRESHOLDS.to_vec(), c0: 2.0 };
    let t =
        timing_compare_multiphase(&four.image, &mp_init, &ModelParams::mrsf(), Polarity::BrightObject, ITERS, REPEATS)
            .unwrap();
    pass &= t.ratio <= 1.2;
    parts.push(format!("mrsf {:.3}", t.ratio));
    let (in_budget, b) = budget(start.elapsed(), 60.0);
    outcome(
        pass && in_budget,
        format!("improved/original at {ITERS} iterations: {} (limit 1.2); {b}", parts.join(", ")),
    )
}

/// Worst `max(0, E(t+20) − E(t)) / |E(t)|` over a trace.
fn worst_window_rise(trace: &[f64]) -> f64 {
    trace.windows(21).map(|w| ((w[20] - w[0]) / w[0].abs().max(f64::MIN_POSITIVE)).max(0.0)).fold(0.0, f64::max)
}

fn hygiene(rows: &[SuiteRow]) -> Outcome {
    let broken: Vec<String> = rows
        .iter()
        .filter(|r| r.error.is_some() || r.energy_trace.iter().any(|e| !e.is_finite()))
        .map(|r| format!("{} {} {}", r.experiment, r.model, r.case))
        .collect();
    let rsf: Vec<&SuiteRow> = rows.iter().filter(|r| r.model == "rsf").collect();
    let worst = rsf.iter().map(|r| worst_window_rise(&r.energy_trace)).fold(0.0, f64::max);
    let steps: usize = rsf.iter().map(|r| r.energy_trace.len().saturating_sub(1)).sum();
    let step_rises: usize =
        rsf.iter().map(|r| r.energy_trace.windows(2).filter(|p| p[1] > p[0] + 1e-3 * p[0].abs()).count()).sum();
    outcome(
        broken.is_empty() && worst <= 1e-3,
        format!(
            "{} runs, {} non-finite or failed {:?}; {} rsf traces, worst 20-iteration rise {worst:.1e} (limit 1e-3), {step_rises}/{steps} single steps above tolerance",
            rows.len(),
            broken.len(),
            broken,
            rsf.len()
        ),
    )
}

fn analytic_primitives() -> Outcome {
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };
    for eps in [0.5, 1.0, 2.0] {
        check("H(0)", heaviside_eps(0.0, eps) == 0.5);
        check("δ(0)", (dirac_eps(0.0, eps) - 1.0 / (std::f64::consts::PI * eps)).abs() < 1e-15);
        for x in [-40.0, -3.0, -0.2, 0.7, 5.0, 90.0] {
            check("H symmetry", (heaviside_eps(x, eps) + heaviside_eps(-x, eps) - 1.0).abs() < 1e-15);
            let numeric = (heaviside_eps(x + 1e-6, eps) - heaviside_eps(x - 1e-6, eps)) / 2e-6;
            check("dH/dx", (numeric - dirac_eps(x, eps)).abs() <= 1e-6 * dirac_eps(x, eps).max(1e-3));
        }
    }
    for sigma in [0.5, 1.0, 3.0, 5.0, 7.3] {
        let k = GaussianKernel::new(sigma).unwrap();
        check("kernel sum", (k.weights().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let empty = Mask::empty(5, 4);
    let full = Mask::from_fn(5, 4, |_, _| true);
    let half = Mask::from_fn(5, 4, |x, _| x < 2);
    check("dsc empty/empty", dsc(&empty, &empty).unwrap() == 1.0);
    check("dsc empty/full", dsc(&empty, &full).unwrap() == 0.0);
    check("dsc self", dsc(&half, &half).unwrap() == 1.0);
    check("dsc subset", (dsc(&half, &full).unwrap() - 2.0 * 8.0 / 28.0).abs() < 1e-15);
    check("dsc dims", dsc(&half, &Mask::empty(4, 5)).is_err());
    let ps = PhaseSet::new(
        LevelSet::new(random_field(&mut rng(3), 6, 6, -2.0, 2.0), 1.0).unwrap(),
        LevelSet::new(random_field(&mut rng(4), 6, 6, -2.0, 2.0), 1.0).unwrap(),
    )
    .unwrap();
    check(
        "four-phase fits finite",
        mrsf_fit(&random_field(&mut rng(5), 6, 6, 0.0, 255.0), &ps, &GaussianKernel::new(1.0).unwrap())
            .unwrap()
            .iter()
            .all(|f| f.all_finite()),
    );
    outcome(
        failures.is_empty(),
        if failures.is_empty() { "all identities hold".to_string() } else { format!("failed: {failures:?}") },
    )
}

fn main() {
    let total = Instant::now();
    let mut rows = Vec::new();
    let mut results: Vec<(u32, &str, Outcome, Duration)> = Vec::new();
    let mut record = |id: u32, name: &'static str, f: &mut dyn FnMut() -> Outcome| {
        let t = Instant::now();
        let o = f();
        results.push((id, name, o, t.elapsed()));
    };
    record(1, "oracle equivalence", &mut oracle_equivalence);
    record(2, "gradient checks", &mut gradient_checks);
    record(3, "swap invariants", &mut swap_invariants);
    record(4, "robustness", &mut || robustness(&mut rows));
    record(5, "multiphase", &mut || multiphase(&mut rows));
    record(6, "sigma sensitivity", &mut || sigma_sensitivity(&mut rows));
    record(7, "overhead", &mut overhead);
    record(8, "numerical hygiene", &mut || hygiene(&rows));
    record(9, "analytic primitives", &mut analytic_primitives);

    println!("\nacceptance");
    let mut unexpected = 0;
    for (id, name, o, t) in &results {
        let known = KNOWN_GAPS.contains(id);
        let tag = match (o.pass, known) {
            (true, false) => "PASS",
            (true, true) => "PASS (listed as known gap)",
            (false, true) => "FAIL (known gap)",
            (false, false) => "FAIL",
        };
        if !o.pass && !known {
            unexpected += 1;
        }
        println!("criterion {id} {name}: {tag} in {:.1}s: {}", t.as_secs_f64(), o.detail);
    }
    println!("total {:.1}s\n", total.elapsed().as_secs_f64());
    if unexpected > 0 {
        eprintln!("{unexpected} criteria failed outside the known gaps");
        std::process::exit(1);
    }
}
