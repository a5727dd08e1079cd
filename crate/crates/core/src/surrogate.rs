//! Differentiable approximations of the ranking metrics: the ranking
//! sigmoid, soft RBC, the weighted training objective, and its analytic
//! gradient for linear-logistic models.
//!
//! The original model is frozen throughout: only its *scores* enter the
//! objective and gradient, never its parameters.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ScoreVector};
use crate::error::{Error, Result};
use crate::trainer::RiskModel;

/// Score clamp applied inside binary cross-entropy so saturated risk
/// estimates keep the loss finite.
pub const BCE_CLAMP: f64 = 1e-12;

/// Sharpness and mixing weight for the differentiable objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateConfig {
    /// Ranking-sigmoid sharpness; larger values approximate the strict
    /// ranking indicator more closely.
    pub s: f64,
    /// Weight on binary cross-entropy; `1 - alpha` goes to the ranking
    /// incompatibility term.
    pub alpha: f64,
}

impl Default for SurrogateConfig {
    fn default() -> Self {
        // s = 10 keeps gradients alive for score gaps around 0.1 while
        // still separating clearly ordered pairs.
        Self { s: 10.0, alpha: 1.0 }
    }
}

impl SurrogateConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.s > 0.0) || !self.s.is_finite() {
            return Err(Error::InvalidConfig {
                what: format!("sigmoid sharpness s must be positive and finite, got {}", self.s),
            });
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidConfig {
                what: format!("alpha must lie in [0, 1], got {}", self.alpha),
            });
        }
        Ok(())
    }
}

/// The three parts of the weighted objective:
/// `total = alpha * bce + (1 - alpha) * rank_loss`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveValue {
    pub total: f64,
    pub bce: f64,
    /// Ranking incompatibility, `1 - soft RBC`. Zero when `alpha = 1`
    /// (the term carries no weight and is skipped).
    pub rank_loss: f64,
}

/// The ranking sigmoid `1 / (1 + exp(-s * d))` applied to a pair's score
/// difference `d`.
#[inline]
pub fn rank_sigmoid(d: f64, s: f64) -> f64 {
    stable_logistic(s * d)
}

/// Numerically stable logistic function.
#[inline]
pub(crate) fn stable_logistic(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Differentiable approximation of RBC: the strict pair indicators are
/// replaced by ranking sigmoids of the score differences.
///
/// Mathematically the value lies strictly inside (0, 1); at large
/// sharpness the sigmoids saturate in f64 and the endpoints become
/// reachable.
pub fn rbc_soft(orig: &ScoreVector, upd: &ScoreVector, labels: &[bool], s: f64) -> Result<f64> {
    check_pair_lengths(orig, upd, labels)?;
    let (neg, pos) = split_classes(labels)?;
    let o = orig.as_slice();
    let u = upd.as_slice();

    let mut num = 0.0;
    let mut den = 0.0;
    for &i in &neg {
        for &j in &pos {
            let so = rank_sigmoid(o[j] - o[i], s);
            num += so * rank_sigmoid(u[j] - u[i], s);
            den += so;
        }
    }
    Ok(num / den)
}

/// Weighted objective `alpha * BCE + (1 - alpha) * (1 - soft RBC)` for a
/// batch, given the frozen original model's scores on the same rows.
///
/// BCE is the mean over the batch so both terms share the same scale.
pub fn objective(
    orig_scores: &ScoreVector,
    upd_scores: &ScoreVector,
    labels: &[bool],
    cfg: &SurrogateConfig,
) -> Result<ObjectiveValue> {
    cfg.validate()?;
    check_pair_lengths(orig_scores, upd_scores, labels)?;

    let bce = mean_bce(upd_scores.as_slice(), labels);
    let rank_loss = if cfg.alpha < 1.0 {
        1.0 - rbc_soft(orig_scores, upd_scores, labels, cfg.s)?
    } else {
        0.0
    };
    Ok(ObjectiveValue {
        total: cfg.alpha * bce + (1.0 - cfg.alpha) * rank_loss,
        bce,
        rank_loss,
    })
}

/// Gradient of [`objective`] with respect to the model's weights and
/// intercept (returned as a vector of length d + 1, intercept last),
/// holding `orig_scores` fixed.
pub fn objective_gradient(
    model: &RiskModel,
    orig_scores: &ScoreVector,
    batch: &Dataset,
    cfg: &SurrogateConfig,
) -> Result<Vec<f64>> {
    cfg.validate()?;
    if model.dim() != batch.d() {
        return Err(Error::DimensionMismatch {
            expected: model.dim(),
            actual: batch.d(),
        });
    }
    if orig_scores.len() != batch.n() {
        return Err(Error::LengthMismatch {
            left: orig_scores.len(),
            right: batch.n(),
            what: "original scores vs batch rows",
        });
    }
    let upd = model.predict(batch)?;
    let mut grad = vec![0.0; batch.d() + 1];
    accumulate_bce_gradient(&mut grad, batch, upd.as_slice(), cfg.alpha);
    if cfg.alpha < 1.0 {
        let (neg, pos) = split_classes(batch.labels())?;
        accumulate_rank_gradient(
            &mut grad,
            batch,
            orig_scores.as_slice(),
            upd.as_slice(),
            &neg,
            &pos,
            cfg.s,
            1.0 - cfg.alpha,
        );
    }
    Ok(grad)
}

/// Mean binary cross-entropy with scores clamped away from 0 and 1.
pub(crate) fn mean_bce(scores: &[f64], labels: &[bool]) -> f64 {
    let mut sum = 0.0;
    for (&p, &y) in scores.iter().zip(labels) {
        let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
        sum -= if y { p.ln() } else { (1.0 - p).ln() };
    }
    sum / labels.len() as f64
}

/// Adds `weight * d(mean BCE)/d(params)` into `grad`.
///
/// d(BCE)/dz = p - y for the logistic link, so the chain rule needs no
/// extra sigmoid factor here.
pub(crate) fn accumulate_bce_gradient(grad: &mut [f64], batch: &Dataset, upd: &[f64], weight: f64) {
    if weight == 0.0 {
        return;
    }
    let n = batch.n() as f64;
    let d = batch.d();
    for i in 0..batch.n() {
        let resid = weight * (upd[i] - if batch.labels()[i] { 1.0 } else { 0.0 }) / n;
        let row = batch.row(i);
        for k in 0..d {
            grad[k] += resid * row[k];
        }
        grad[d] += resid;
    }
}

/// Adds `weight * d(1 - soft RBC)/d(params)` into `grad`.
///
/// The denominator of soft RBC depends only on the frozen original
/// scores, so only the numerator terms differentiate. Per-pair
/// contributions are folded into one coefficient per patient before the
/// O(n*d) feature pass.
#[allow(clippy::too_many_arguments)]
pub(crate) fn accumulate_rank_gradient(
    grad: &mut [f64],
    batch: &Dataset,
    orig: &[f64],
    upd: &[f64],
    neg: &[usize],
    pos: &[usize],
    s: f64,
    weight: f64,
) {
    if weight == 0.0 {
        return;
    }
    let mut denom = 0.0;
    let mut coef = vec![0.0; batch.n()];
    for &i in neg {
        for &j in pos {
            let so = rank_sigmoid(orig[j] - orig[i], s);
            denom += so;
            let su = rank_sigmoid(upd[j] - upd[i], s);
            // d(su)/d(delta) with delta = upd[j] - upd[i]
            let c = so * s * su * (1.0 - su);
            coef[j] += c;
            coef[i] -= c;
        }
    }
    // d(rank_loss)/dp_k = -coef[k]/denom; dp_k/dz_k = p_k(1 - p_k)
    let d = batch.d();
    let scale = -weight / denom;
    for k in 0..batch.n() {
        if coef[k] == 0.0 {
            continue;
        }
        let g = scale * coef[k] * upd[k] * (1.0 - upd[k]);
        let row = batch.row(k);
        for f in 0..d {
            grad[f] += g * row[f];
        }
        grad[d] += g;
    }
}

fn check_pair_lengths(orig: &ScoreVector, upd: &ScoreVector, labels: &[bool]) -> Result<()> {
    if orig.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: orig.len(),
            right: labels.len(),
            what: "original scores vs labels",
        });
    }
    if upd.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: upd.len(),
            right: labels.len(),
            what: "updated scores vs labels",
        });
    }
    Ok(())
}

/// Indices of the negative and positive class, in row order.
pub(crate) fn split_classes(labels: &[bool]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut neg = Vec::new();
    let mut pos = Vec::new();
    for (i, &y) in labels.iter().enumerate() {
        if y {
            pos.push(i);
        } else {
            neg.push(i);
        }
    }
    if neg.is_empty() || pos.is_empty() {
        return Err(Error::SingleClass {
            n0: neg.len(),
            n1: pos.len(),
        });
    }
    Ok((neg, pos))
}
