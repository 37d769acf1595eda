//! Executes a resolved config and writes its outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::time::Duration;

use localfit::bench::{
    dsc, matched_dsc, multiphase_suite, robustness_suite, rows_to_csv, sigma_sweep, timing_compare,
    timing_compare_multiphase, NamedInit, NamedMultiphaseInit, SuiteRow, Timing,
};
use localfit::io::{contour_overlay, save_image, save_mask};
use localfit::multiphase::run_multiphase;
use localfit::{run, Error, Mask, Polarity, ScalarField2D};

use crate::config::{Experiment, Inits, Model, Resolved};

pub enum Failure {
    Io(String),
    Diverged(String),
}

fn io(e: impl std::fmt::Display) -> Failure {
    Failure::Io(e.to_string())
}

/// Runs, writes every output and reports divergence after the outputs are
/// on disk.
pub fn execute(cfg: &Resolved) -> Result<(), Failure> {
    fs::create_dir_all(&cfg.out_dir).map_err(|e| Failure::Io(format!("{}: {e}", cfg.out_dir.display())))?;
    fs::write(cfg.out_dir.join("effective_config.toml"), cfg.effective_toml()).map_err(io)?;
    if cfg.experiment == Experiment::Timing {
        let t = timing(cfg).map_err(|e| match e {
            Error::Divergence { .. } => Failure::Diverged(e.to_string()),
            other => io(other),
        })?;
        let csv = format!(
            "model,polarity,iterations,repeats,original_s,improved_s,ratio\n{},{},{},{},{:.6},{:.6},{:.6}\n",
            cfg.model.as_str(),
            cfg.polarity,
            cfg.timing_iters,
            cfg.timing_repeats,
            t.original.as_secs_f64(),
            t.improved.as_secs_f64(),
            t.ratio
        );
        fs::write(cfg.out_dir.join("results.csv"), csv).map_err(io)?;
        eprintln!("ratio {:.3} (improved {:?}, original {:?})", t.ratio, t.improved, t.original);
        return Ok(());
    }
    let rows = rows(cfg);
    write_rows(cfg, &rows)?;
    for r in &rows {
        let dsc = r.min_dsc().map(|d| format!("{d:.4}")).unwrap_or_else(|| "-".into());
        eprintln!("{} {} {} sigma={} iters={} dsc={dsc}", r.model, r.polarity, r.case, r.sigma, r.iterations);
    }
    let diverged: Vec<String> = rows
        .iter()
        .filter_map(|r| r.diverged_at.map(|i| format!("{} {} {} at iteration {i}", r.model, r.polarity, r.case)))
        .collect();
    if let Some(other) = rows.iter().find(|r| r.error.is_some() && r.diverged_at.is_none()) {
        return Err(Failure::Io(other.error.clone().unwrap_or_default()));
    }
    if diverged.is_empty() {
        Ok(())
    } else {
        Err(Failure::Diverged(format!("numerical divergence: {}", diverged.join("; "))))
    }
}

fn suite_polarities(p: Polarity) -> Vec<Polarity> {
    if p.is_active() {
        vec![Polarity::Off, p]
    } else {
        vec![Polarity::Off]
    }
}

fn two_phase_inits(v: &[(String, localfit::InitSpec)]) -> Vec<NamedInit> {
    v.iter().map(|(name, init)| NamedInit { name: name.clone(), init: init.clone() }).collect()
}

fn four_phase_inits(v: &[(String, localfit::MultiphaseInit)]) -> Vec<NamedMultiphaseInit> {
    v.iter().map(|(name, init)| NamedMultiphaseInit { name: name.clone(), init: init.clone() }).collect()
}

fn rows(cfg: &Resolved) -> Vec<SuiteRow> {
    let p = &cfg.params;
    match (&cfg.inits, cfg.model, cfg.experiment) {
        (Inits::TwoPhase(v), Model::TwoPhase(kind), Experiment::Single) => {
            let (name, init) = &v[0];
            vec![match run(kind, &cfg.image, init, p) {
                Ok(r) => SuiteRow {
                    experiment: "single",
                    model: kind.to_string(),
                    polarity: p.polarity,
                    case: name.clone(),
                    sigma: p.sigma,
                    dsc: cfg
                        .truth
                        .as_ref()
                        .map(|t| vec![dsc(&r.mask, &t[0]).expect("truth matches the grid")])
                        .unwrap_or_default(),
                    iterations: r.iterations_run,
                    elapsed: r.elapsed,
                    final_energy: r.energy_trace.last().copied(),
                    masks: vec![r.mask],
                    energy_trace: r.energy_trace,
                    error: None,
                    diverged_at: None,
                },
                Err(e) => failed_row("single", kind.as_str(), p.polarity, name, p.sigma, &e),
            }]
        }
        (Inits::FourPhase(v), Model::FourPhase, Experiment::Single) => {
            let (name, init) = &v[0];
            vec![match run_multiphase(&cfg.image, init, p) {
                Ok(r) => SuiteRow {
                    experiment: "single",
                    model: "mrsf".into(),
                    polarity: p.polarity,
                    case: name.clone(),
                    sigma: p.sigma,
                    dsc: cfg
                        .truth
                        .as_ref()
                        .map(|t| matched_dsc(&r.masks, t).expect("truth matches the grid").0)
                        .unwrap_or_default(),
                    iterations: r.iterations_run,
                    elapsed: r.elapsed,
                    final_energy: r.energy_trace.last().copied(),
                    masks: r.masks.to_vec(),
                    energy_trace: r.energy_trace,
                    error: None,
                    diverged_at: None,
                },
                Err(e) => failed_row("single", "mrsf", p.polarity, name, p.sigma, &e),
            }]
        }
        (Inits::TwoPhase(v), Model::TwoPhase(kind), Experiment::Robustness) => {
            let truth = &cfg.truth.as_ref().expect("validated")[0];
            robustness_suite(kind, &cfg.image, truth, &two_phase_inits(v), p, &suite_polarities(cfg.polarity))
                .expect("validated")
        }
        (Inits::FourPhase(v), Model::FourPhase, Experiment::Robustness) => {
            let truth = cfg.truth.as_ref().expect("validated");
            multiphase_suite(&cfg.image, truth, &four_phase_inits(v), p, &suite_polarities(cfg.polarity))
        }
        (Inits::TwoPhase(v), Model::TwoPhase(kind), Experiment::SigmaSweep) => {
            let truth = &cfg.truth.as_ref().expect("validated")[0];
            let init = &two_phase_inits(v)[0];
            sigma_sweep(kind, &cfg.image, truth, init, &cfg.sigmas, p, &suite_polarities(cfg.polarity))
        }
        _ => unreachable!("combination rejected during resolution"),
    }
}

/// Mirrors the suite's own failure rows for single runs.
fn failed_row(
    experiment: &'static str,
    model: &str,
    polarity: Polarity,
    case: &str,
    sigma: f64,
    e: &Error,
) -> SuiteRow {
    SuiteRow {
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
        error: Some(e.to_string()),
        diverged_at: match e {
            Error::Divergence { iteration } => Some(*iteration),
            _ => None,
        },
    }
}

fn timing(cfg: &Resolved) -> localfit::Result<Timing> {
    let p = &cfg.params;
    match (&cfg.inits, cfg.model) {
        (Inits::TwoPhase(v), Model::TwoPhase(kind)) => {
            timing_compare(kind, &cfg.image, &v[0].1, p, cfg.polarity, cfg.timing_iters, cfg.timing_repeats)
        }
        (Inits::FourPhase(v), Model::FourPhase) => {
            timing_compare_multiphase(&cfg.image, &v[0].1, p, cfg.polarity, cfg.timing_iters, cfg.timing_repeats)
        }
        _ => unreachable!("inits follow the model"),
    }
}

/// Two-phase: the object mask. Four-phase: phase index scaled to 0..=255.
fn mask_image(masks: &[Mask]) -> ScalarField2D {
    if masks.len() == 1 {
        return masks[0].to_field(255.0);
    }
    let step = 255.0 / (masks.len() - 1) as f64;
    let (w, h) = masks[0].dims();
    ScalarField2D::from_fn(w, h, |x, y| masks.iter().position(|m| m.get(x, y)).unwrap_or(0) as f64 * step)
        .expect("mask grid is non-empty")
}

fn write_rows(cfg: &Resolved, rows: &[SuiteRow]) -> Result<(), Failure> {
    let dir: &Path = &cfg.out_dir;
    for (i, r) in rows.iter().enumerate() {
        if r.masks.is_empty() {
            continue;
        }
        if r.masks.len() == 1 {
            save_mask(&r.masks[0], dir.join(format!("mask_{i:03}.pgm"))).map_err(io)?;
        } else {
            save_image(&mask_image(&r.masks), dir.join(format!("mask_{i:03}.pgm"))).map_err(io)?;
        }
        save_image(&contour_overlay(&cfg.image, &r.masks), dir.join(format!("overlay_{i:03}.pgm"))).map_err(io)?;
        let mut trace = String::from("iteration,energy\n");
        for (t, e) in r.energy_trace.iter().enumerate() {
            let _ = writeln!(trace, "{},{e}", t + 1);
        }
        fs::write(dir.join(format!("energy_{i:03}.csv")), trace).map_err(io)?;
    }
    fs::write(dir.join("results.csv"), rows_to_csv(rows)).map_err(io)
}
