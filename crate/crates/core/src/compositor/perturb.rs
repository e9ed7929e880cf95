use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::CompositorError;
use crate::policy::GenerationPolicy;
use crate::rng::weighted_index;

/// Perturbation factors, declared in application order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[derive(schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Factor {
    Hue,
    Lighting,
    Contrast,
    Clarity,
    Scaling,
    Translation,
}

impl Factor {
    pub const ALL: [Factor; 6] = [
        Factor::Hue,
        Factor::Lighting,
        Factor::Contrast,
        Factor::Clarity,
        Factor::Scaling,
        Factor::Translation,
    ];

    /// Magnitude at which the factor leaves the image unchanged.
    pub fn neutral(self) -> f64 {
        match self {
            Factor::Contrast | Factor::Scaling => 1.0,
            _ => 0.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Factor::Hue => "hue",
            Factor::Lighting => "lighting",
            Factor::Contrast => "contrast",
            Factor::Clarity => "clarity",
            Factor::Scaling => "scaling",
            Factor::Translation => "translation",
        }
    }
}

impl fmt::Display for Factor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[derive(schemars::JsonSchema)]
#[serde(rename_all = "snake_case")]
pub enum Intensity {
    Mild,
    Moderate,
    Severe,
}

impl Intensity {
    pub const ALL: [Intensity; 3] = [Intensity::Mild, Intensity::Moderate, Intensity::Severe];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Range of magnitudes for one (factor, intensity) cell.
///
/// When `signed`, magnitudes are `neutral +/- [min, max]`; otherwise they lie
/// in `[min, max]` directly. The neutral value itself is never drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct MagnitudeRange {
    pub min: f64,
    pub max: f64,
    #[serde(default)]
    pub signed: bool,
}

impl MagnitudeRange {
    pub const fn plain(min: f64, max: f64) -> Self {
        MagnitudeRange { min, max, signed: false }
    }

    pub const fn symmetric(min: f64, max: f64) -> Self {
        MagnitudeRange { min, max, signed: true }
    }

    pub fn contains(&self, value: f64, neutral: f64) -> bool {
        if self.signed {
            let d = (value - neutral).abs();
            d >= self.min && d <= self.max
        } else {
            value >= self.min && value <= self.max
        }
    }

    /// Center of the cell, as a deviation from neutral.
    pub fn mean_deviation(&self, neutral: f64) -> f64 {
        if self.signed {
            (self.min + self.max) / 2.0
        } else {
            // Mean |v - neutral| for v uniform on [min, max].
            let (a, b) = (self.min - neutral, self.max - neutral);
            if b <= a {
                return a.abs();
            }
            if a >= 0.0 || b <= 0.0 {
                ((a + b) / 2.0).abs()
            } else {
                (a * a + b * b) / (2.0 * (b - a))
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, neutral: f64) -> f64 {
        loop {
            let u: f64 = rng.random();
            let v = self.min + u * (self.max - self.min);
            let value = if self.signed {
                if rng.random::<bool>() {
                    neutral + v
                } else {
                    neutral - v
                }
            } else {
                v
            };
            if value != neutral || self.min == self.max {
                return value;
            }
        }
    }
}

/// Per-factor magnitude ranges for mild/moderate/severe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct MagnitudeTable(pub BTreeMap<Factor, [MagnitudeRange; 3]>);

impl Default for MagnitudeTable {
    /// Hue in degrees, lighting additive, contrast gain, clarity blur sigma
    /// (negative = unsharp amount), scaling factor, translation as a
    /// fraction of the face extent.
    fn default() -> Self {
        use MagnitudeRange as R;
        let mut t = BTreeMap::new();
        t.insert(Factor::Hue, [R::symmetric(2.0, 6.0), R::symmetric(6.0, 14.0), R::symmetric(14.0, 30.0)]);
        t.insert(
            Factor::Lighting,
            [R::symmetric(0.02, 0.06), R::symmetric(0.06, 0.14), R::symmetric(0.14, 0.30)],
        );
        t.insert(Factor::Contrast, [R::plain(0.95, 1.05), R::plain(0.85, 1.15), R::plain(0.7, 1.3)]);
        t.insert(Factor::Clarity, [R::symmetric(0.3, 0.8), R::symmetric(0.8, 1.6), R::symmetric(1.6, 3.0)]);
        t.insert(Factor::Scaling, [R::plain(0.99, 1.01), R::plain(0.97, 1.03), R::plain(0.93, 1.07)]);
        t.insert(
            Factor::Translation,
            [R::plain(0.002, 0.006), R::plain(0.006, 0.015), R::plain(0.015, 0.04)],
        );
        MagnitudeTable(t)
    }
}

impl MagnitudeTable {
    pub fn range(&self, factor: Factor, intensity: Intensity) -> Option<MagnitudeRange> {
        self.0.get(&factor).map(|cells| cells[intensity.index()])
    }

    pub fn validate(&self) -> Result<(), CompositorError> {
        for (factor, cells) in &self.0 {
            for (i, c) in cells.iter().enumerate() {
                if !(c.min.is_finite() && c.max.is_finite()) || c.min > c.max {
                    return Err(CompositorError::Table(format!("{factor} level {i}: bad range {c:?}")));
                }
                if c.signed && c.min < 0.0 {
                    return Err(CompositorError::Table(format!("{factor} level {i}: signed range below 0")));
                }
                let geometric = matches!(factor, Factor::Scaling) && c.min <= 0.0;
                let degenerate = !c.signed && c.min == c.max && c.min == factor.neutral();
                if geometric || degenerate {
                    return Err(CompositorError::Table(format!("{factor} level {i}: unusable range {c:?}")));
                }
            }
        }
        Ok(())
    }
}

/// Anchor point and reference length for the geometric factors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct Geometry {
    /// Scaling center in pixel coordinates.
    pub anchor: [f64; 2],
    /// Pixel length that translation fractions are measured against.
    pub extent: f64,
}

impl Geometry {
    pub fn for_image(width: usize, height: usize) -> Self {
        Geometry {
            anchor: [(width as f64 - 1.0) / 2.0, (height as f64 - 1.0) / 2.0],
            extent: width.min(height) as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct FactorSetting {
    pub intensity: Intensity,
    pub magnitude: f64,
    /// Translation direction in degrees; unused by other factors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub direction_deg: Option<f64>,
}

/// The sampled augmentation recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, schemars::JsonSchema)]
pub struct PerturbationParams {
    pub factors: BTreeMap<Factor, FactorSetting>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub geometry: Option<Geometry>,
}

impl PerturbationParams {
    pub fn single(factor: Factor, intensity: Intensity, magnitude: f64) -> Self {
        let mut factors = BTreeMap::new();
        factors.insert(
            factor,
            FactorSetting {
                intensity,
                magnitude,
                direction_deg: (factor == Factor::Translation).then_some(0.0),
            },
        );
        PerturbationParams { factors, geometry: None }
    }

    pub fn with_geometry(mut self, geometry: Geometry) -> Self {
        self.geometry = Some(geometry);
        self
    }

    pub fn intensity_of(&self, factor: Factor) -> Option<Intensity> {
        self.factors.get(&factor).map(|s| s.intensity)
    }

    /// True when every magnitude lies in its table cell.
    pub fn within(&self, table: &MagnitudeTable) -> bool {
        !self.factors.is_empty()
            && self.factors.iter().all(|(f, s)| {
                table
                    .range(*f, s.intensity)
                    .is_some_and(|r| r.contains(s.magnitude, f.neutral()))
            })
    }
}

/// Draws a factor subset, an intensity per factor and a magnitude per cell.
pub fn sample_perturbation<R: Rng + ?Sized>(
    rng: &mut R,
    policy: &GenerationPolicy,
    table: &MagnitudeTable,
) -> Result<PerturbationParams, CompositorError> {
    let eligible: Vec<(Factor, f64)> = Factor::ALL
        .iter()
        .filter_map(|&f| {
            let w = policy.factor_weight(f);
            let levels = policy.intensity_weights_for(f);
            let usable = w > 0.0 && levels.iter().any(|v| *v > 0.0) && table.0.contains_key(&f);
            usable.then_some((f, w))
        })
        .collect();
    if eligible.is_empty() {
        return Err(CompositorError::EmptyPerturbation);
    }
    let [lo, hi] = policy.factor_count_range;
    let hi = hi.clamp(1, eligible.len());
    let lo = lo.clamp(1, hi);
    let count = rng.random_range(lo..=hi);

    let mut pool = eligible;
    let mut factors = BTreeMap::new();
    for _ in 0..count {
        let weights: Vec<f64> = pool.iter().map(|(_, w)| *w).collect();
        let Some(i) = weighted_index(rng, &weights) else { break };
        let (factor, _) = pool.remove(i);
        let levels = policy.intensity_weights_for(factor);
        let level = weighted_index(rng, &levels).ok_or(CompositorError::EmptyPerturbation)?;
        let intensity = Intensity::ALL[level];
        let range = table.range(factor, intensity).ok_or(CompositorError::EmptyPerturbation)?;
        let magnitude = range.sample(rng, factor.neutral());
        let direction_deg = (factor == Factor::Translation).then(|| rng.random_range(0.0..360.0));
        factors.insert(
            factor,
            FactorSetting {
                intensity,
                magnitude,
                direction_deg,
            },
        );
    }
    if factors.is_empty() {
        return Err(CompositorError::EmptyPerturbation);
    }
    Ok(PerturbationParams { factors, geometry: None })
}
