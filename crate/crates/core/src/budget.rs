//! Multi-view context packing and the autoregressive probability / loss
//! arithmetic, plus the stage-wise vision token schedule.
//!
//! Views are packed back to back with one boundary token between neighbors;
//! the view-index embedding is added to existing positions and costs nothing
//! extra. Everything here is arithmetic: no embeddings, no training.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const TOKENS_PER_VIEW: usize = 729;
pub const BASE_RESOLUTION: u32 = 384;
/// Prompt tokens held back when checking the single-view and early
/// multi-view stages.
pub const RESERVED_PROMPT_TOKENS: usize = 256;

/// One curriculum stage of the vision-token schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageConfig {
    pub stage: u8,
    pub tokens_per_view: usize,
    pub max_views: usize,
    /// Side of the square tile grid at the base resolution.
    pub grid: u32,
    pub max_seq_len: usize,
}

impl StageConfig {
    pub fn new(stage: u8) -> Result<Self> {
        let (max_views, grid, max_seq_len) = match stage {
            1 => (1, 1, 4096),
            2 => (5, 2, 4096),
            3 => (10, 6, 8192),
            4 => (10, 6, 8192),
            _ => return Err(Error::invalid(format!("stage must be 1..=4, got {stage}"))),
        };
        Ok(Self {
            stage,
            tokens_per_view: TOKENS_PER_VIEW,
            max_views,
            grid,
            max_seq_len,
        })
    }

    pub fn all() -> [StageConfig; 4] {
        [1, 2, 3, 4].map(|s| StageConfig::new(s).expect("valid stage"))
    }

    /// Packed length of a full-capacity multi-view context.
    pub fn max_layout_len(&self) -> usize {
        self.max_views * self.tokens_per_view + self.max_views.saturating_sub(1)
    }
}

/// Token spans of packed views and the boundary tokens between them.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PackingLayout {
    /// `(start, length)` for each view, in order.
    pub view_spans: Vec<(usize, usize)>,
    pub boundary_positions: Vec<usize>,
    pub view_index_ids: Vec<usize>,
}

impl PackingLayout {
    pub fn view_count(&self) -> usize {
        self.view_spans.len()
    }

    pub fn total_len(&self) -> usize {
        self.view_spans.iter().map(|(_, len)| len).sum::<usize>() + self.boundary_positions.len()
    }
}

pub fn pack_views(view_token_counts: &[usize]) -> Result<PackingLayout> {
    if view_token_counts.is_empty() {
        return Err(Error::invalid("need at least one view to pack"));
    }
    if view_token_counts.contains(&0) {
        return Err(Error::invalid("view token counts must be positive"));
    }
    let mut view_spans = Vec::with_capacity(view_token_counts.len());
    let mut boundary_positions = Vec::with_capacity(view_token_counts.len() - 1);
    let mut cursor = 0;
    for (i, &len) in view_token_counts.iter().enumerate() {
        if i > 0 {
            boundary_positions.push(cursor);
            cursor += 1;
        }
        view_spans.push((cursor, len));
        cursor += len;
    }
    Ok(PackingLayout {
        view_spans,
        boundary_positions,
        view_index_ids: (0..view_token_counts.len()).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BudgetVerdict {
    pub fits: bool,
    pub total: usize,
    /// `max_seq_len - total`; negative when the context overflows.
    pub slack: i64,
}

/// Check a packed context plus prompt and response against a stage's
/// maximum sequence length. Exceeding the stage's view cap is an error.
pub fn check_budget(
    layout: &PackingLayout,
    prompt_len: usize,
    response_len: usize,
    stage: &StageConfig,
) -> Result<BudgetVerdict> {
    if layout.view_count() > stage.max_views {
        return Err(Error::Budget(format!(
            "{} views exceed the stage-{} cap of {}",
            layout.view_count(),
            stage.stage,
            stage.max_views
        )));
    }
    let total = layout.total_len() + prompt_len + response_len;
    Ok(BudgetVerdict {
        fits: total <= stage.max_seq_len,
        total,
        slack: stage.max_seq_len as i64 - total as i64,
    })
}

/// Per-step log-probabilities (`L × V`) and the realized target tokens.
#[derive(Debug, Clone, PartialEq)]
pub struct LmBatch {
    step_logprobs: Vec<Vec<f64>>,
    targets: Vec<usize>,
    context_len: usize,
}

impl LmBatch {
    pub fn new(step_logprobs: Vec<Vec<f64>>, targets: Vec<usize>, context_len: usize) -> Result<Self> {
        if step_logprobs.len() != targets.len() {
            return Err(Error::LengthMismatch {
                expected: step_logprobs.len(),
                actual: targets.len(),
            });
        }
        for (t, (row, &target)) in step_logprobs.iter().zip(&targets).enumerate() {
            if row.is_empty() {
                return Err(Error::invalid(format!("step {t} has an empty vocabulary")));
            }
            if target >= row.len() {
                return Err(Error::invalid(format!(
                    "step {t}: target {target} outside vocabulary of {}",
                    row.len()
                )));
            }
            if row.iter().any(|v| v.is_nan() || *v > 0.0) {
                return Err(Error::invalid(format!("step {t}: log-probabilities must be ≤ 0")));
            }
            let mass: f64 = row.iter().map(|v| v.exp()).sum();
            if (mass - 1.0).abs() > 1e-6 {
                return Err(Error::invalid(format!(
                    "step {t}: probabilities sum to {mass}, not 1"
                )));
            }
        }
        Ok(Self {
            step_logprobs,
            targets,
            context_len,
        })
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn step_logprobs(&self) -> &[Vec<f64>] {
        &self.step_logprobs
    }

    pub fn context_len(&self) -> usize {
        self.context_len
    }
}

/// Log-probability of the whole response: the sum of per-step target
/// log-probabilities, i.e. the log of the chain-rule product.
pub fn seq_logprob(batch: &LmBatch) -> f64 {
    batch
        .step_logprobs
        .iter()
        .zip(&batch.targets)
        .map(|(row, &t)| row[t])
        .sum()
}

/// Negative log-likelihood of the response.
pub fn lm_loss(batch: &LmBatch) -> f64 {
    -seq_logprob(batch)
}
