//! Fitting-value exchange across the contour.
//!
//! Each iteration the two side fits are reordered pointwise so that the
//! negative side (the object side of the mask) always carries the extreme
//! value: for a bright object the positive side receives `min(f₁, f₂)` and
//! the negative side `max(f₁, f₂)`; for a dark object the assignment is
//! reversed. Every piece of the contour then moves in the same direction
//! relative to the object, so separate pieces merge instead of repelling.

use std::fmt;
use std::str::FromStr;

use crate::fitting::FittingPair;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum Polarity {
    /// Object brighter than background: side1 ≤ side2 after the exchange.
    BrightObject,
    /// Object darker than background: side1 ≥ side2 after the exchange.
    DarkObject,
    /// No exchange; the original model.
    #[default]
    Off,
}

impl Polarity {
    pub fn is_active(self) -> bool {
        self != Polarity::Off
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::BrightObject => "bright_object",
            Polarity::DarkObject => "dark_object",
            Polarity::Off => "off",
        }
    }

    /// Whether `(side1, side2)` already satisfies this polarity's ordering.
    #[inline]
    pub fn is_ordered(self, side1: f64, side2: f64) -> bool {
        match self {
            Polarity::BrightObject => side1 <= side2,
            Polarity::DarkObject => side1 >= side2,
            Polarity::Off => true,
        }
    }

    /// Reorders one pixel's pair.
    #[inline]
    pub fn order(self, side1: f64, side2: f64) -> (f64, f64) {
        if self.is_ordered(side1, side2) {
            (side1, side2)
        } else {
            (side2, side1)
        }
    }
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Polarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bright_object" => Ok(Polarity::BrightObject),
            "dark_object" => Ok(Polarity::DarkObject),
            "off" => Ok(Polarity::Off),
            other => Err(format!("unknown polarity `{other}` (expected bright_object, dark_object or off)")),
        }
    }
}

/// How LGDF variances are exchanged alongside the means.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum VarianceSwap {
    /// Variances are min/max-sorted on their own, like the means.
    #[default]
    Independent,
    /// Variances are exchanged exactly where the means were exchanged.
    FollowMeans,
}

impl VarianceSwap {
    pub fn as_str(self) -> &'static str {
        match self {
            VarianceSwap::Independent => "independent",
            VarianceSwap::FollowMeans => "follow_means",
        }
    }
}

impl FromStr for VarianceSwap {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "independent" => Ok(VarianceSwap::Independent),
            "follow_means" => Ok(VarianceSwap::FollowMeans),
            other => Err(format!("unknown variance_swap `{other}` (expected independent or follow_means)")),
        }
    }
}

/// Pointwise reorder of a fitting pair according to `polarity`.
pub fn swap_pair(pair: &FittingPair, polarity: Polarity) -> FittingPair {
    let mut out = pair.clone();
    swap_pair_in_place(&mut out, polarity);
    out
}

pub(crate) fn swap_pair_in_place(pair: &mut FittingPair, polarity: Polarity) {
    if !polarity.is_active() {
        return;
    }
    let FittingPair { side1, side2, .. } = pair;
    for (s1, s2) in side1.values_mut().iter_mut().zip(side2.values_mut()) {
        let (x, y) = polarity.order(*s1, *s2);
        *s1 = x;
        *s2 = y;
    }
}

/// Exchange for the LGDF model: means per [`swap_pair`], variances either
/// sorted independently with the same rule or carried along with the means.
pub fn swap_lgdf(
    means: &FittingPair,
    variances: &FittingPair,
    polarity: Polarity,
    rule: VarianceSwap,
) -> (FittingPair, FittingPair) {
    let (mut m, mut v) = (means.clone(), variances.clone());
    swap_lgdf_in_place(&mut m, &mut v, polarity, rule);
    (m, v)
}

pub(crate) fn swap_lgdf_in_place(
    means: &mut FittingPair,
    variances: &mut FittingPair,
    polarity: Polarity,
    rule: VarianceSwap,
) {
    if !polarity.is_active() {
        return;
    }
    let m = means.side1.values_mut().iter_mut().zip(means.side2.values_mut());
    let v = variances.side1.values_mut().iter_mut().zip(variances.side2.values_mut());
    for ((a, b), (va, vb)) in m.zip(v) {
        let exchanged = !polarity.is_ordered(*a, *b);
        (*a, *b) = polarity.order(*a, *b);
        (*va, *vb) = match rule {
            VarianceSwap::Independent => polarity.order(*va, *vb),
            VarianceSwap::FollowMeans if exchanged => (*vb, *va),
            VarianceSwap::FollowMeans => (*va, *vb),
        };
    }
}
