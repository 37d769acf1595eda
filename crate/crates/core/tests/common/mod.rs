//! Brute-force references shared by the integration tests.
//!
//! Everything here is computed straight from the definitions with explicit
//! double sums over the window and clamped (replicate) indexing. Gaussian
//! weights are rebuilt from `exp(-d²/2σ²)` rather than taken from the library.

#![allow(dead_code)]

use localfit::{heaviside_eps, FittingPair, LevelSet, ScalarField2D};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const DEN_FLOOR: f64 = 1e-10;
pub const VAR_FLOOR: f64 = 1e-4;

/// Dense grid used by the oracles, row-major.
#[derive(Clone, Debug)]
pub struct Grid {
    pub w: usize,
    pub h: usize,
    pub v: Vec<f64>,
}

impl Grid {
    pub fn from_field(f: &ScalarField2D) -> Self {
        Self { w: f.width(), h: f.height(), v: f.values().to_vec() }
    }

    pub fn at(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.w as isize - 1) as usize;
        let cy = y.clamp(0, self.h as isize - 1) as usize;
        self.v[cy * self.w + cx]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { w: self.w, h: self.h, v: self.v.iter().map(|&a| f(a)).collect() }
    }

    pub fn zip(&self, o: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        Self { w: self.w, h: self.h, v: self.v.iter().zip(&o.v).map(|(&a, &b)| f(a, b)).collect() }
    }
}

/// Normalized 1-D Gaussian weights on `[-r, r]`.
pub fn weights_1d(sigma: f64, r: usize) -> Vec<f64> {
    let raw: Vec<f64> =
        (-(r as isize)..=r as isize).map(|d| (-((d * d) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

pub fn default_radius(sigma: f64) -> usize {
    (2.0 * sigma).ceil() as usize
}

/// Window offsets with their 2-D weights.
pub fn window(sigma: f64) -> Vec<(isize, isize, f64)> {
    let r = default_radius(sigma);
    let w = weights_1d(sigma, r);
    let ri = r as isize;
    let mut out = Vec::new();
    for dy in -ri..=ri {
        for dx in -ri..=ri {
            out.push((dx, dy, w[(dx + ri) as usize] * w[(dy + ri) as usize]));
        }
    }
    out
}

/// Σ_d w(d)·g(clamp(x + d)).
pub fn conv(g: &Grid, sigma: f64) -> Grid {
    let win = window(sigma);
    let mut v = Vec::with_capacity(g.w * g.h);
    for y in 0..g.h as isize {
        for x in 0..g.w as isize {
            v.push(win.iter().map(|&(dx, dy, k)| k * g.at(x + dx, y + dy)).sum());
        }
    }
    Grid { w: g.w, h: g.h, v }
}

/// Local weighted means of `img` under weight `m`:
/// `Σ_d w(d)·m(y)·I(y) / max(Σ_d w(d)·m(y), floor)` with `y = clamp(x+d)`.
pub fn local_mean(img: &Grid, m: &Grid, sigma: f64) -> Grid {
    let win = window(sigma);
    let mut v = Vec::with_capacity(img.w * img.h);
    for y in 0..img.h as isize {
        for x in 0..img.w as isize {
            let (mut num, mut den) = (0.0, 0.0);
            for &(dx, dy, k) in &win {
                num += k * m.at(x + dx, y + dy) * img.at(x + dx, y + dy);
                den += k * m.at(x + dx, y + dy);
            }
            v.push(num / den.max(DEN_FLOOR));
        }
    }
    Grid { w: img.w, h: img.h, v }
}

/// Local weighted variance about the given mean, computed from squared
/// deviations directly.
pub fn local_variance(img: &Grid, m: &Grid, mean: &Grid, sigma: f64) -> Grid {
    let win = window(sigma);
    let mut v = Vec::with_capacity(img.w * img.h);
    for y in 0..img.h as isize {
        for x in 0..img.w as isize {
            let u = mean.at(x, y);
            let (mut num, mut den) = (0.0, 0.0);
            for &(dx, dy, k) in &win {
                let d = img.at(x + dx, y + dy) - u;
                num += k * m.at(x + dx, y + dy) * d * d;
                den += k * m.at(x + dx, y + dy);
            }
            v.push((num / den.max(DEN_FLOOR)).max(VAR_FLOOR));
        }
    }
    Grid { w: img.w, h: img.h, v }
}

/// `e(x) = Σ_d w(d)·(I(x) − f(clamp(x+d)))²`.
pub fn e_term(img: &Grid, f: &Grid, sigma: f64) -> Grid {
    let win = window(sigma);
    let mut v = Vec::with_capacity(img.w * img.h);
    for y in 0..img.h as isize {
        for x in 0..img.w as isize {
            let i = img.at(x, y);
            v.push(win.iter().map(|&(dx, dy, k)| k * (i - f.at(x + dx, y + dy)).powi(2)).sum());
        }
    }
    Grid { w: img.w, h: img.h, v }
}

/// `ē(x) = Σ_d w(d)·[½ ln σ²(y) + (I(x) − u(y))² / 2σ²(y)]`, `y = clamp(x+d)`.
pub fn lgdf_e_term(img: &Grid, u: &Grid, var: &Grid, sigma: f64) -> Grid {
    let win = window(sigma);
    let mut v = Vec::with_capacity(img.w * img.h);
    for y in 0..img.h as isize {
        for x in 0..img.w as isize {
            let i = img.at(x, y);
            v.push(
                win.iter()
                    .map(|&(dx, dy, k)| {
                        let (uu, vv) = (u.at(x + dx, y + dy), var.at(x + dx, y + dy));
                        k * (0.5 * vv.ln() + (i - uu).powi(2) / (2.0 * vv))
                    })
                    .sum(),
            );
        }
    }
    Grid { w: img.w, h: img.h, v }
}

/// Two-sided local fitting data energy with fits indexed at the window
/// center: `Σₓ Σ_d w(d)·Σᵢ λᵢ·(I(y) − fᵢ(x))²·Mᵢ(y)`.
pub fn fitting_energy(img: &Grid, sides: &[(&Grid, &Grid, f64)], sigma: f64) -> f64 {
    let win = window(sigma);
    let mut total = 0.0;
    for y in 0..img.h as isize {
        for x in 0..img.w as isize {
            for &(fit, weight, lambda) in sides {
                let f = fit.at(x, y);
                for &(dx, dy, k) in &win {
                    let (i, m) = (img.at(x + dx, y + dy), weight.at(x + dx, y + dy));
                    total += lambda * k * (i - f).powi(2) * m;
                }
            }
        }
    }
    total
}

/// Negative log-likelihood counterpart of [`fitting_energy`].
pub fn lgdf_energy(img: &Grid, sides: &[(&Grid, &Grid, &Grid, f64)], sigma: f64) -> f64 {
    let win = window(sigma);
    let mut total = 0.0;
    for y in 0..img.h as isize {
        for x in 0..img.w as isize {
            for &(u, var, weight, lambda) in sides {
                let (uu, vv) = (u.at(x, y), var.at(x, y));
                for &(dx, dy, k) in &win {
                    let (i, m) = (img.at(x + dx, y + dy), weight.at(x + dx, y + dy));
                    total += lambda * k * (0.5 * vv.ln() + (i - uu).powi(2) / (2.0 * vv)) * m;
                }
            }
        }
    }
    total
}

pub fn heaviside_grid(phi: &Grid, eps: f64) -> Grid {
    phi.map(|p| heaviside_eps(p, eps))
}

/// `|a − b| ≤ tol·max(|a|, |b|, 1)`.
pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn assert_fields_close(label: &str, got: &ScalarField2D, want: &Grid, tol: f64) {
    assert_eq!((got.width(), got.height()), (want.w, want.h), "{label}: dims");
    for (i, (&g, &w)) in got.values().iter().zip(&want.v).enumerate() {
        assert!(rel_close(g, w, tol), "{label}[{i}]: got {g}, oracle {w}");
    }
}

/// Random instance: image with values in 0..=255, a smooth-ish φ and size in
/// 8..=16 per side.
pub struct Instance {
    pub image: ScalarField2D,
    pub phi: LevelSet,
    pub sigma: f64,
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_field(r: &mut ChaCha8Rng, w: usize, h: usize, lo: f64, hi: f64) -> ScalarField2D {
    ScalarField2D::from_fn(w, h, |_, _| r.random_range(lo..hi)).unwrap()
}

pub fn random_instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    let w = r.random_range(8..=16);
    let h = r.random_range(8..=16);
    let image = random_field(&mut r, w, h, 0.0, 255.0);
    let (cx, cy, rad) =
        (r.random_range(2.0..w as f64 - 2.0), r.random_range(2.0..h as f64 - 2.0), r.random_range(2.0..5.0));
    let jitter = random_field(&mut r, w, h, -0.5, 0.5);
    let phi = ScalarField2D::from_fn(w, h, |x, y| {
        let d = ((x as f64 - cx).powi(2) + (y as f64 - cy).powi(2)).sqrt() - rad;
        d.clamp(-3.0, 3.0) + jitter.get(x, y)
    })
    .unwrap();
    let sigma = r.random_range(1.0..2.5);
    Instance { image, phi: LevelSet::new(phi, 1.0).unwrap(), sigma }
}

/// Arbitrary frozen fitting pair with values in `lo..hi`.
pub fn random_pair(r: &mut ChaCha8Rng, w: usize, h: usize, lo: f64, hi: f64, kind: localfit::FitKind) -> FittingPair {
    FittingPair::new(random_field(r, w, h, lo, hi), random_field(r, w, h, lo, hi), kind).unwrap()
}

/// Central difference of `energy` with respect to the value at pixel `i`.
pub fn central_difference(
    phi: &ScalarField2D,
    i: usize,
    step: f64,
    mut energy: impl FnMut(&ScalarField2D) -> f64,
) -> f64 {
    let (w, h) = phi.dims();
    let bump = |delta: f64| {
        let mut v = phi.values().to_vec();
        v[i] += delta;
        ScalarField2D::from_vec(w, h, v).unwrap()
    };
    (energy(&bump(step)) - energy(&bump(-step))) / (2.0 * step)
}

/// Pixels at least `margin` away from every border.
pub fn interior_pixels(r: &mut ChaCha8Rng, w: usize, h: usize, margin: usize, count: usize) -> Vec<usize> {
    (0..count)
        .map(|_| {
            let x = r.random_range(margin..w - margin);
            let y = r.random_range(margin..h - margin);
            y * w + x
        })
        .collect()
}
