use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{McqaOptions, SpeParameter};
use crate::seed;
use crate::{Error, Result};

const MAX_RANDOM_DRAWS: usize = 1000;

/// A number with its display unit and precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quantity {
    pub value: f64,
    pub unit: String,
    pub decimals: usize,
}

impl Quantity {
    pub fn new(value: f64, unit: &str, decimals: usize) -> Self {
        Self {
            value,
            unit: unit.to_string(),
            decimals,
        }
    }

    fn with_value(&self, value: f64) -> Self {
        Self {
            value,
            ..self.clone()
        }
    }

    fn round(&self, v: f64) -> f64 {
        let scale = 10f64.powi(self.decimals as i32);
        (v * scale).round() / scale
    }

    /// Option text, e.g. `20.0 µs` or `3`.
    pub fn format(&self) -> String {
        if self.unit.is_empty() {
            format!("{:.*}", self.decimals, self.value)
        } else {
            format!("{:.*} {}", self.decimals, self.value, self.unit)
        }
    }
}

/// How numeric distractors are proposed and filtered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistractorPolicy {
    pub multiplicative_factors: Vec<f64>,
    /// Additive offsets in answer units.
    pub offsets: Vec<f64>,
    /// Random draws from `[lo·gt, hi·gt]`.
    pub random_range: (f64, f64),
    /// Minimum |d − gt| for any distractor.
    pub min_separation: f64,
}

impl DistractorPolicy {
    /// Default rules with `min_separation = 2 × tolerance`, so the scoring
    /// window around the ground truth can never contain a distractor.
    pub fn for_tolerance(tolerance: f64) -> Self {
        Self {
            multiplicative_factors: vec![0.5, 2.0, 3.0],
            offsets: vec![-10.0, -5.0, 5.0, 10.0],
            random_range: (0.2, 5.0),
            min_separation: 2.0 * tolerance,
        }
    }

    /// Exact-count parameters have zero tolerance; their distractors only
    /// need to differ by one.
    pub fn for_parameter(parameter: SpeParameter) -> Self {
        let tol = parameter.tolerance();
        let mut policy = Self::for_tolerance(tol);
        if tol == 0.0 {
            policy.min_separation = 1.0;
        }
        policy
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.min_separation.is_finite() && self.min_separation > 0.0) {
            return Err(Error::invalid("min_separation must be positive"));
        }
        if self.multiplicative_factors.iter().any(|&f| f == 1.0 || !f.is_finite()) {
            return Err(Error::invalid("multiplicative factor 1.0 is not a distractor"));
        }
        if self.offsets.iter().any(|&o| o == 0.0 || !o.is_finite()) {
            return Err(Error::invalid("offset 0 is not a distractor"));
        }
        let (lo, hi) = self.random_range;
        if !(lo.is_finite() && hi.is_finite() && 0.0 < lo && lo < hi) {
            return Err(Error::invalid("random range must satisfy 0 < lo < hi"));
        }
        Ok(())
    }

    /// Rule-based candidates before filtering: every factor and offset
    /// applied to `gt`.
    pub fn rule_candidates(&self, gt: f64) -> Vec<f64> {
        self.multiplicative_factors
            .iter()
            .map(|f| f * gt)
            .chain(self.offsets.iter().map(|o| gt + o))
            .collect()
    }
}

/// Numeric MCQA: the ground truth, three distractors at least
/// `min_separation` away, and "Unable to answer", shuffled per seed.
/// `tolerance` is the scoring window half-width and is carried only for
/// validation against the policy.
pub fn make_mcqa_numeric(
    gt: &Quantity,
    tolerance: f64,
    policy: &DistractorPolicy,
    seed: u64,
) -> Result<McqaOptions> {
    if !gt.value.is_finite() {
        return Err(Error::invalid("ground truth must be finite"));
    }
    policy.validate()?;
    if tolerance < 0.0 || policy.min_separation < 2.0 * tolerance {
        return Err(Error::invalid(format!(
            "min_separation {} must be at least twice the tolerance {tolerance}",
            policy.min_separation
        )));
    }
    let truth = gt.round(gt.value);
    let nonnegative = truth >= 0.0;
    let gt_text = gt.with_value(truth).format();
    let mut chosen: Vec<f64> = Vec::with_capacity(3);
    let mut texts: Vec<String> = vec![gt_text.clone()];

    let mut accept = |candidate: f64, chosen: &mut Vec<f64>| {
        let d = gt.round(candidate);
        if !d.is_finite() || (nonnegative && d < 0.0) || (d - truth).abs() < policy.min_separation {
            return;
        }
        let text = gt.with_value(d).format();
        if !texts.contains(&text) {
            texts.push(text);
            chosen.push(d);
        }
    };

    let mut rng = seed::rng(seed::sub_seed(seed, "distractors"));
    let mut rules = policy.rule_candidates(truth);
    rules.shuffle(&mut rng);
    for c in rules {
        if chosen.len() == 3 {
            break;
        }
        accept(c, &mut chosen);
    }

    let (lo, hi) = random_bounds(truth, policy);
    let mut draws = 0;
    while chosen.len() < 3 && draws < MAX_RANDOM_DRAWS {
        draws += 1;
        accept(rng.random_range(lo..=hi), &mut chosen);
    }
    if chosen.len() < 3 {
        return Err(Error::DistractorExhausted {
            needed: 3,
            attempts: draws,
        });
    }

    let distractors = chosen.iter().map(|&d| gt.with_value(d).format()).collect();
    Ok(McqaOptions::shuffled(
        gt_text,
        distractors,
        seed::sub_seed(seed, "shuffle"),
    ))
}

/// Random-sampling interval. Falls back to a band around the ground truth
/// when the relative range collapses (e.g. a zero delay).
fn random_bounds(gt: f64, policy: &DistractorPolicy) -> (f64, f64) {
    let (a, b) = (policy.random_range.0 * gt, policy.random_range.1 * gt);
    let (lo, hi) = (a.min(b), a.max(b));
    if hi - lo >= 4.0 * policy.min_separation {
        return (lo, hi);
    }
    let lo = if gt >= 0.0 {
        (gt - 10.0 * policy.min_separation).max(0.0)
    } else {
        gt - 10.0 * policy.min_separation
    };
    (lo, gt + 10.0 * policy.min_separation)
}
