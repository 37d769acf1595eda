//! Overlap metrics.

use crate::error::{ensure_same_dims, Result};
use crate::levelset::Mask;

/// Dice similarity coefficient `2|A∩B| / (|A| + |B|)`; 1 when both are empty.
pub fn dsc(a: &Mask, b: &Mask) -> Result<f64> {
    ensure_same_dims(a.dims(), b.dims())?;
    let inter = a.bits().iter().zip(b.bits()).filter(|(&x, &y)| x && y).count();
    let total = a.count() + b.count();
    Ok(if total == 0 { 1.0 } else { 2.0 * inter as f64 / total as f64 })
}

/// Per-region DSC under the phase-to-region assignment that maximizes the
/// summed DSC. `predicted` and `truth` must have the same length (≤ 8).
///
/// Returns `(dsc per truth region, assignment)` where `assignment[r]` is the
/// predicted index matched to truth region `r`.
pub fn matched_dsc(predicted: &[Mask], truth: &[Mask]) -> Result<(Vec<f64>, Vec<usize>)> {
    assert_eq!(predicted.len(), truth.len(), "region counts differ");
    assert!(truth.len() <= 8, "too many regions for exhaustive matching");
    let n = truth.len();
    let mut table = vec![vec![0.0; n]; n];
    for (r, t) in truth.iter().enumerate() {
        for (p, m) in predicted.iter().enumerate() {
            table[r][p] = dsc(m, t)?;
        }
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut perm: Vec<usize> = (0..n).collect();
    permute(&mut perm, 0, &mut |p| {
        let score: f64 = p.iter().enumerate().map(|(r, &k)| table[r][k]).sum();
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, p.to_vec()));
        }
    });
    let (_, assignment) = best.unwrap_or((0.0, Vec::new()));
    let scores = assignment.iter().enumerate().map(|(r, &k)| table[r][k]).collect();
    Ok((scores, assignment))
}

fn permute(items: &mut [usize], k: usize, visit: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        visit(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, visit);
        items.swap(k, i);
    }
}
