//! Exact pair-counting metrics: AUROC, accuracy, backwards trust
//! compatibility (BTC), rank-based compatibility (RBC), the
//! pairwise-ordering-proportion (POP) table, and the analytic bounds that
//! relate RBC to the two models' AUROCs.
//!
//! A *patient-pair* is one 0-labeled and one 1-labeled row. A model ranks
//! the pair correctly when it assigns the 1-labeled row a strictly larger
//! risk estimate; ties count as incorrect throughout.

use crate::dataset::ScoreVector;
use crate::error::{Error, Result};

/// Pair counts and proportions describing how an (original, updated)
/// model-pair jointly ranks patient-pairs.
///
/// Cell naming: the first letter is the original model, the second the
/// updated model; `p` ranks the pair correctly, `m` incorrectly. So
/// `m_pm` counts pairs the original gets right and the update gets wrong.
#[derive(Debug, Clone, PartialEq)]
pub struct PopTable {
    pub m_pp: u64,
    pub m_pm: u64,
    pub m_mp: u64,
    pub m_mm: u64,
    /// Total pair count, n0 * n1.
    pub m: u64,
    pub phi_pp: f64,
    pub phi_pm: f64,
    pub phi_mp: f64,
    pub phi_mm: f64,
    /// Original-model AUROC, (m_pp + m_pm) / m.
    pub auroc_o: f64,
    /// Updated-model AUROC, (m_pp + m_mp) / m.
    pub auroc_u: f64,
}

impl PopTable {
    /// Assemble a table from the four joint pair counts.
    pub fn from_counts(m_pp: u64, m_pm: u64, m_mp: u64, m_mm: u64) -> Result<Self> {
        let m = m_pp + m_pm + m_mp + m_mm;
        if m == 0 {
            return Err(Error::EmptyInput { what: "pair counts" });
        }
        let mf = m as f64;
        Ok(Self {
            m_pp,
            m_pm,
            m_mp,
            m_mm,
            m,
            phi_pp: m_pp as f64 / mf,
            phi_pm: m_pm as f64 / mf,
            phi_mp: m_mp as f64 / mf,
            phi_mm: m_mm as f64 / mf,
            auroc_o: (m_pp + m_pm) as f64 / mf,
            auroc_u: (m_pp + m_mp) as f64 / mf,
        })
    }

    /// Pairs the original model ranks correctly.
    pub fn m_original_correct(&self) -> u64 {
        self.m_pp + self.m_pm
    }

    /// Pairs the updated model ranks correctly.
    pub fn m_updated_correct(&self) -> u64 {
        self.m_pp + self.m_mp
    }
}

/// Analytic bounds on RBC and the POP proportions implied by the two
/// models' AUROCs in the model-updating regime.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundSet {
    pub rbc_lower: f64,
    pub phi_pp_lo: f64,
    pub phi_pp_hi: f64,
    pub phi_pm_hi: f64,
    pub phi_mp_hi: f64,
    pub phi_mm_hi: f64,
}

fn check_lengths(a: usize, b: usize, what: &'static str) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch {
            left: a,
            right: b,
            what,
        });
    }
    Ok(())
}

fn class_counts(labels: &[bool]) -> Result<(usize, usize)> {
    let n1 = labels.iter().filter(|&&y| y).count();
    let n0 = labels.len() - n1;
    if n0 == 0 || n1 == 0 {
        return Err(Error::SingleClass { n0, n1 });
    }
    Ok((n0, n1))
}

/// AUROC of a score vector: the fraction of patient-pairs ranked
/// correctly, counting ties as incorrect.
///
/// Computed in O(n log n) by sorting the negative-class scores and, for
/// each positive, counting negatives strictly below it.
pub fn auroc(scores: &ScoreVector, labels: &[bool]) -> Result<f64> {
    check_lengths(scores.len(), labels.len(), "scores vs labels")?;
    let (n0, n1) = class_counts(labels)?;

    let mut neg: Vec<f64> = Vec::with_capacity(n0);
    let mut pos: Vec<f64> = Vec::with_capacity(n1);
    for (&s, &y) in scores.as_slice().iter().zip(labels) {
        if y {
            pos.push(s);
        } else {
            neg.push(s);
        }
    }
    neg.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

    let mut correct: u64 = 0;
    for &p in &pos {
        // number of negatives with score strictly below p
        correct += neg.partition_point(|&q| q < p) as u64;
    }
    Ok(correct as f64 / (n0 as u64 * n1 as u64) as f64)
}

/// Fraction of patients whose thresholded prediction `1(p > tau)` matches
/// the label.
pub fn accuracy(scores: &ScoreVector, labels: &[bool], tau: f64) -> Result<f64> {
    check_lengths(scores.len(), labels.len(), "scores vs labels")?;
    let correct = scores
        .as_slice()
        .iter()
        .zip(labels)
        .filter(|(&s, &y)| (s > tau) == y)
        .count();
    Ok(correct as f64 / labels.len() as f64)
}

/// Backwards trust compatibility: of the patients the original model
/// labels correctly at `tau_o`, the fraction the updated model also
/// labels correctly at `tau_u`. Asymmetric in its arguments.
pub fn btc(
    orig: &ScoreVector,
    upd: &ScoreVector,
    labels: &[bool],
    tau_o: f64,
    tau_u: f64,
) -> Result<f64> {
    check_lengths(orig.len(), labels.len(), "original scores vs labels")?;
    check_lengths(upd.len(), labels.len(), "updated scores vs labels")?;

    let mut orig_correct: u64 = 0;
    let mut both_correct: u64 = 0;
    for ((&po, &pu), &y) in orig.as_slice().iter().zip(upd.as_slice()).zip(labels) {
        if (po > tau_o) == y {
            orig_correct += 1;
            if (pu > tau_u) == y {
                both_correct += 1;
            }
        }
    }
    if orig_correct == 0 {
        return Err(Error::OriginalAllWrong { tau: tau_o });
    }
    Ok(both_correct as f64 / orig_correct as f64)
}

/// Rank-based compatibility: of the patient-pairs the original model
/// ranks correctly, the fraction the updated model also ranks correctly.
/// Threshold-free.
pub fn rbc(orig: &ScoreVector, upd: &ScoreVector, labels: &[bool]) -> Result<f64> {
    let pop = pop_table(orig, upd, labels)?;
    rbc_from_pop(&pop)
}

/// General-form RBC over ordinal labels: the pair set is every (i, j)
/// with `labels[i] < labels[j]`, and a model ranks such a pair correctly
/// when its score for j strictly exceeds its score for i.
///
/// On {0,1} labels this coincides exactly with [`rbc`].
pub fn rbc_general(orig: &ScoreVector, upd: &ScoreVector, labels: &[u32]) -> Result<f64> {
    check_lengths(orig.len(), labels.len(), "original scores vs labels")?;
    check_lengths(upd.len(), labels.len(), "updated scores vs labels")?;

    let o = orig.as_slice();
    let u = upd.as_slice();
    let n = labels.len();
    let mut ordered_pairs: u64 = 0;
    let mut orig_correct: u64 = 0;
    let mut both_correct: u64 = 0;
    for i in 0..n {
        for j in 0..n {
            if labels[i] < labels[j] {
                ordered_pairs += 1;
                if o[i] < o[j] {
                    orig_correct += 1;
                    if u[i] < u[j] {
                        both_correct += 1;
                    }
                }
            }
        }
    }
    if ordered_pairs == 0 {
        return Err(Error::NoOrderedPairs);
    }
    if orig_correct == 0 {
        return Err(Error::OriginalNoCorrectPairs);
    }
    Ok(both_correct as f64 / orig_correct as f64)
}

/// Exact joint pair counts for a model-pair, by full O(n0*n1)
/// enumeration.
pub fn pop_table(orig: &ScoreVector, upd: &ScoreVector, labels: &[bool]) -> Result<PopTable> {
    check_lengths(orig.len(), labels.len(), "original scores vs labels")?;
    check_lengths(upd.len(), labels.len(), "updated scores vs labels")?;
    class_counts(labels)?;

    let mut neg: Vec<(f64, f64)> = Vec::new();
    let mut pos: Vec<(f64, f64)> = Vec::new();
    for i in 0..labels.len() {
        let pair = (orig[i], upd[i]);
        if labels[i] {
            pos.push(pair);
        } else {
            neg.push(pair);
        }
    }

    let (mut m_pp, mut m_pm, mut m_mp, mut m_mm) = (0u64, 0u64, 0u64, 0u64);
    for &(oi, ui) in &neg {
        for &(oj, uj) in &pos {
            match (oi < oj, ui < uj) {
                (true, true) => m_pp += 1,
                (true, false) => m_pm += 1,
                (false, true) => m_mp += 1,
                (false, false) => m_mm += 1,
            }
        }
    }
    PopTable::from_counts(m_pp, m_pm, m_mp, m_mm)
}

/// RBC computed from a POP table: m_pp / (m_pp + m_pm).
pub fn rbc_from_pop(pop: &PopTable) -> Result<f64> {
    let denom = pop.m_original_correct();
    if denom == 0 {
        return Err(Error::OriginalNoCorrectPairs);
    }
    Ok(pop.m_pp as f64 / denom as f64)
}

/// Analytic RBC lower bound and POP-cell bounds for a model-pair with the
/// given AUROCs.
///
/// Only derived for the model-updating regime
/// `0.5 < auroc_o <= auroc_u <= 1`; anything else is rejected.
pub fn bounds(auroc_o: f64, auroc_u: f64) -> Result<BoundSet> {
    if !(auroc_o > 0.5 && auroc_o <= auroc_u && auroc_u <= 1.0) {
        return Err(Error::OutOfRegime { auroc_o, auroc_u });
    }
    // associated so that a perfect updated model gives exactly 1
    Ok(BoundSet {
        rbc_lower: (auroc_o + (auroc_u - 1.0)) / auroc_o,
        phi_pp_lo: auroc_o + auroc_u - 1.0,
        phi_pp_hi: auroc_o,
        phi_pm_hi: 1.0 - auroc_u,
        phi_mp_hi: 1.0 - auroc_o,
        phi_mm_hi: 1.0 - auroc_u,
    })
}
