//! Combination counts over joint pair-ranking configurations: how many
//! ways two models with fixed correct-pair totals can share exactly k
//! correctly ranked pairs.
//!
//! Counts overflow any fixed-width integer well before realistic pair
//! totals (C(260, 130) alone has 77 digits), so everything is carried in
//! natural-log space via the log-gamma function.

use crate::error::{Error, Result};

/// Total pair count plus each model's correct-pair count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairCountTriple {
    pub m: u64,
    /// Pairs the original model ranks correctly.
    pub m_op: u64,
    /// Pairs the updated model ranks correctly.
    pub m_up: u64,
}

impl PairCountTriple {
    pub fn new(m: u64, m_op: u64, m_up: u64) -> Result<Self> {
        if m_op > m || m_up > m {
            return Err(Error::InfeasibleCounts {
                what: format!("correct-pair counts ({m_op}, {m_up}) exceed total {m}"),
            });
        }
        Ok(Self { m, m_op, m_up })
    }

    /// Smallest feasible shared-correct count, max(0, m_op + m_up - m).
    pub fn k_min(&self) -> u64 {
        (self.m_op + self.m_up).saturating_sub(self.m)
    }

    /// Largest feasible shared-correct count, min(m_op, m_up).
    pub fn k_max(&self) -> u64 {
        self.m_op.min(self.m_up)
    }
}

/// Natural log of the binomial coefficient C(n, k) via log-gamma;
/// negative infinity when k > n.
pub fn log_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    if k == 0 || k == n {
        return 0.0;
    }
    let (n, k) = (n as f64, k as f64);
    libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)
}

/// Natural log of the number of joint ranking configurations with exactly
/// `k` pairs ranked correctly by both models:
/// `C(m_op, k) * C(m - m_op, m_up - k)`. Negative infinity outside the
/// feasible range.
pub fn log_nu(t: &PairCountTriple, k: i64) -> f64 {
    if k < 0 {
        return f64::NEG_INFINITY;
    }
    let k = k as u64;
    if k < t.k_min() || k > t.k_max() {
        return f64::NEG_INFINITY;
    }
    log_binomial(t.m_op, k) + log_binomial(t.m - t.m_op, t.m_up - k)
}

/// The shared-correct count with the largest number of configurations:
/// `floor((m_op + 1)(m_up + 1) / (m + 2))`, the mode of the underlying
/// hypergeometric numerator.
pub fn k_star(t: &PairCountTriple) -> u64 {
    (t.m_op + 1) * (t.m_up + 1) / (t.m + 2)
}

/// One point of a combination-count curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NuCurvePoint {
    pub k: u64,
    /// k rescaled to an RBC value, k / m_op.
    pub rbc: f64,
    /// Natural-log configuration count.
    pub ln_count: f64,
}

/// A full curve for one updated-model AUROC.
#[derive(Debug, Clone, PartialEq)]
pub struct NuCurve {
    pub auroc_u: f64,
    pub triple: PairCountTriple,
    pub points: Vec<NuCurvePoint>,
}

impl NuCurve {
    /// The point with the largest count (the leftmost in case of ties).
    pub fn peak(&self) -> &NuCurvePoint {
        self.points
            .iter()
            .reduce(|best, p| if p.ln_count > best.ln_count { p } else { best })
            .expect("feasible range is never empty")
    }
}

/// Combination-count curves over the feasible shared-correct range, one
/// per updated-model AUROC, with the x-axis rescaled to RBC.
///
/// AUROCs are converted to pair counts by rounding to the nearest
/// integer; conversions outside [0, m] or with `m_op = 0` are rejected.
pub fn nu_curve(auroc_o: f64, auroc_u_list: &[f64], m: u64) -> Result<Vec<NuCurve>> {
    if m == 0 {
        return Err(Error::InfeasibleCounts {
            what: "total pair count m must be positive".into(),
        });
    }
    if auroc_u_list.is_empty() {
        return Err(Error::EmptyInput { what: "auroc_u list" });
    }
    let m_op = auroc_to_count(auroc_o, m)?;
    if m_op == 0 {
        return Err(Error::InfeasibleCounts {
            what: format!("original AUROC {auroc_o} rounds to zero correct pairs"),
        });
    }
    let mut curves = Vec::with_capacity(auroc_u_list.len());
    for &auroc_u in auroc_u_list {
        let m_up = auroc_to_count(auroc_u, m)?;
        let triple = PairCountTriple::new(m, m_op, m_up)?;
        let points = (triple.k_min()..=triple.k_max())
            .map(|k| NuCurvePoint {
                k,
                rbc: k as f64 / m_op as f64,
                ln_count: log_nu(&triple, k as i64),
            })
            .collect();
        curves.push(NuCurve {
            auroc_u,
            triple,
            points,
        });
    }
    Ok(curves)
}

fn auroc_to_count(auroc: f64, m: u64) -> Result<u64> {
    if !auroc.is_finite() {
        return Err(Error::InfeasibleCounts {
            what: format!("AUROC {auroc} is not finite"),
        });
    }
    let count = (auroc * m as f64).round();
    if count < 0.0 || count > m as f64 {
        return Err(Error::InfeasibleCounts {
            what: format!("AUROC {auroc} maps to count {count} outside [0, {m}]"),
        });
    }
    Ok(count as u64)
}
