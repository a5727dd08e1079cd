//! The model-update experiment: dataset splitting, original-model
//! selection, BCE/RBC candidate generation, beta-weighted selection,
//! held-out evaluation, replications with empirical confidence intervals,
//! phi-plus-plus histograms, and the BTC threshold sweep.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ScoreVector};
use crate::error::{Error, Result};
use crate::metrics::{accuracy, auroc, btc, pop_table, rbc_from_pop};
use crate::trainer::{train, RiskModel, TrainConfig};

/// Decision threshold used when reporting evaluation BTC alongside the
/// rank-based metrics.
pub const EVAL_TAU: f64 = 0.5;

/// How many rows go to the original-model and updated-model datasets;
/// the remainder is held out for evaluation. Each model dataset is split
/// into development and validation parts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub n_original: usize,
    pub n_updated: usize,
    /// Fraction of each model dataset that becomes the development set
    /// (rounded down).
    pub dev_fraction: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            n_original: 1000,
            n_updated: 5000,
            dev_fraction: 0.5,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self, n: usize) -> Result<()> {
        if !(self.dev_fraction > 0.0 && self.dev_fraction < 1.0) {
            return Err(Error::InvalidConfig {
                what: format!("dev_fraction must lie in (0, 1), got {}", self.dev_fraction),
            });
        }
        if self.n_original + self.n_updated >= n {
            return Err(Error::SpecTooLarge {
                requested: self.n_original + self.n_updated,
                available: n.saturating_sub(1),
            });
        }
        for (name, size) in [("original", self.n_original), ("updated", self.n_updated)] {
            let dev = (size as f64 * self.dev_fraction).floor() as usize;
            if dev == 0 || dev == size {
                return Err(Error::InvalidConfig {
                    what: format!(
                        "{name} dataset of {size} rows splits into an empty dev or val part"
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Row indices of the five disjoint partitions.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitIndices {
    pub orig_dev: Vec<usize>,
    pub orig_val: Vec<usize>,
    pub upd_dev: Vec<usize>,
    pub upd_val: Vec<usize>,
    pub eval: Vec<usize>,
}

/// The five materialized partitions.
#[derive(Debug, Clone)]
pub struct Splits {
    pub orig_dev: Dataset,
    pub orig_val: Dataset,
    pub upd_dev: Dataset,
    pub upd_val: Dataset,
    pub eval: Dataset,
}

/// Randomly partition `0..n` according to the spec. Deterministic per
/// seed.
pub fn split_indices(n: usize, spec: &SplitSpec, seed: u64) -> Result<SplitIndices> {
    spec.validate(n)?;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let orig_dev_n = (spec.n_original as f64 * spec.dev_fraction).floor() as usize;
    let upd_dev_n = (spec.n_updated as f64 * spec.dev_fraction).floor() as usize;

    let mut cursor = order.into_iter();
    let mut take = |k: usize| -> Vec<usize> { cursor.by_ref().take(k).collect() };
    Ok(SplitIndices {
        orig_dev: take(orig_dev_n),
        orig_val: take(spec.n_original - orig_dev_n),
        upd_dev: take(upd_dev_n),
        upd_val: take(spec.n_updated - upd_dev_n),
        eval: take(n),
    })
}

/// Split a dataset into the five partitions.
pub fn split(data: &Dataset, spec: &SplitSpec, seed: u64) -> Result<Splits> {
    let idx = split_indices(data.n(), spec, seed)?;
    Ok(Splits {
        orig_dev: data.subset(&idx.orig_dev)?,
        orig_val: data.subset(&idx.orig_val)?,
        upd_dev: data.subset(&idx.upd_dev)?,
        upd_val: data.subset(&idx.upd_val)?,
        eval: data.subset(&idx.eval)?,
    })
}

/// Train one cross-entropy model per regularization strength and keep the
/// one with the highest validation AUROC; ties go to the smaller
/// strength.
pub fn train_original(
    orig_dev: &Dataset,
    orig_val: &Dataset,
    reg_grid: &[f64],
    base: &TrainConfig,
    seed: u64,
) -> Result<RiskModel> {
    if reg_grid.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    for part in [orig_dev, orig_val] {
        if !part.has_both_classes() {
            let n1 = part.n_positive();
            return Err(Error::SingleClass {
                n0: part.n() - n1,
                n1,
            });
        }
    }
    let mut best: Option<(f64, f64, RiskModel)> = None;
    for &reg in reg_grid {
        let cfg = TrainConfig {
            surrogate: crate::surrogate::SurrogateConfig {
                alpha: 1.0,
                ..base.surrogate
            },
            reg_l2: reg,
            seed,
            ..base.clone()
        };
        let model = train(orig_dev, orig_val, None, &cfg)?;
        let a = auroc(&model.predict(orig_val)?, orig_val.labels())?;
        let better = match &best {
            None => true,
            Some((best_a, best_reg, _)) => a > *best_a || (a == *best_a && reg < *best_reg),
        };
        if better {
            best = Some((a, reg, model));
        }
    }
    Ok(best.expect("non-empty grid").2)
}

/// How the candidate-update pools are built.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSpec {
    /// Dev-set variants drawn by bootstrap resampling.
    pub n_resample: usize,
    /// Dev-set variants that are plain reshuffles.
    pub n_shuffle: usize,
    pub reg_grid: Vec<f64>,
    pub alpha_grid: Vec<f64>,
}

impl Default for CandidateSpec {
    fn default() -> Self {
        Self {
            n_resample: 45,
            n_shuffle: 5,
            reg_grid: vec![0.1, 0.01, 0.001],
            alpha_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
        }
    }
}

impl CandidateSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_resample + self.n_shuffle == 0 {
            return Err(Error::InvalidConfig {
                what: "need at least one resample or shuffle variant".into(),
            });
        }
        if self.reg_grid.is_empty() || self.alpha_grid.is_empty() {
            return Err(Error::InvalidConfig {
                what: "reg_grid and alpha_grid must be non-empty".into(),
            });
        }
        if let Some(&a) = self.alpha_grid.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::InvalidConfig {
                what: format!("alpha {a} outside [0, 1]"),
            });
        }
        if let Some(&r) = self.reg_grid.iter().find(|r| **r < 0.0 || !r.is_finite()) {
            return Err(Error::InvalidConfig {
                what: format!("regularization strength {r} must be non-negative"),
            });
        }
        Ok(())
    }

    /// Total size of the BCE candidate pool.
    pub fn bce_count(&self) -> usize {
        (self.n_resample + self.n_shuffle) * self.reg_grid.len()
    }
}

const MAX_BOOTSTRAP_REDRAWS: usize = 10;

/// SplitMix64; the counter-based seed mixer underneath all derived seeds.
fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Derive an independent seed from (base, stream, index). Counters make
/// parallel work units deterministic regardless of scheduling order.
pub fn mix_seed(base: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ stream) ^ index)
}

/// Generate the standard-update pool: every combination of a dev-set
/// variant (bootstrap or reshuffle) and a regularization strength,
/// trained with cross-entropy only. Candidate order is stable.
pub fn generate_bce_candidates(
    upd_dev: &Dataset,
    upd_val: &Dataset,
    spec: &CandidateSpec,
    base: &TrainConfig,
    seed: u64,
) -> Result<Vec<RiskModel>> {
    spec.validate()?;
    let mut models = Vec::with_capacity(spec.bce_count());
    for v in 0..(spec.n_resample + spec.n_shuffle) {
        let variant_seed = mix_seed(seed, 1, v as u64);
        let variant = if v < spec.n_resample {
            bootstrap(upd_dev, variant_seed)?
        } else {
            reshuffle(upd_dev, variant_seed)?
        };
        for (g, &reg) in spec.reg_grid.iter().enumerate() {
            let cfg = TrainConfig {
                surrogate: crate::surrogate::SurrogateConfig {
                    alpha: 1.0,
                    ..base.surrogate
                },
                reg_l2: reg,
                seed: mix_seed(variant_seed, 2, g as u64),
                ..base.clone()
            };
            models.push(train(&variant, upd_val, None, &cfg)?);
        }
    }
    Ok(models)
}

fn bootstrap(data: &Dataset, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..MAX_BOOTSTRAP_REDRAWS {
        let indices: Vec<usize> = (0..data.n())
            .map(|_| rng.random_range(0..data.n()))
            .collect();
        let sample = data.subset(&indices)?;
        if sample.has_both_classes() {
            return Ok(sample);
        }
    }
    let n1 = data.n_positive();
    Err(Error::SingleClass {
        n0: data.n() - n1,
        n1,
    })
}

fn reshuffle(data: &Dataset, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..data.n()).collect();
    indices.shuffle(&mut rng);
    data.subset(&indices)
}

/// The compatibility-trained candidates for one mixing weight.
#[derive(Debug, Clone)]
pub struct AlphaCandidates {
    pub alpha: f64,
    pub models: Vec<RiskModel>,
}

/// Generate the compatibility-trained pool: one model per
/// (alpha, regularization strength), trained with the weighted objective
/// against the original model's scores.
pub fn generate_rbc_candidates(
    upd_dev: &Dataset,
    upd_val: &Dataset,
    orig: &RiskModel,
    spec: &CandidateSpec,
    base: &TrainConfig,
    seed: u64,
) -> Result<Vec<AlphaCandidates>> {
    spec.validate()?;
    if orig.dim() != upd_dev.d() {
        return Err(Error::DimensionMismatch {
            expected: orig.dim(),
            actual: upd_dev.d(),
        });
    }
    let mut out = Vec::with_capacity(spec.alpha_grid.len());
    for (ai, &alpha) in spec.alpha_grid.iter().enumerate() {
        let mut models = Vec::with_capacity(spec.reg_grid.len());
        for (g, &reg) in spec.reg_grid.iter().enumerate() {
            let cfg = TrainConfig {
                surrogate: crate::surrogate::SurrogateConfig {
                    alpha,
                    ..base.surrogate
                },
                reg_l2: reg,
                seed: mix_seed(seed, 3, (ai * spec.reg_grid.len() + g) as u64),
                ..base.clone()
            };
            models.push(train(upd_dev, upd_val, Some(orig), &cfg)?);
        }
        out.push(AlphaCandidates { alpha, models });
    }
    Ok(out)
}

/// Validation AUROC and RBC for each candidate against one original
/// model; the inputs to the selection rule.
pub fn validation_scores(
    candidates: &[RiskModel],
    orig: &RiskModel,
    val: &Dataset,
) -> Result<Vec<(f64, f64)>> {
    if candidates.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let orig_scores = orig.predict(val)?;
    candidates
        .iter()
        .map(|cand| {
            let scores = cand.predict(val)?;
            let pop = pop_table(&orig_scores, &scores, val.labels())?;
            Ok((pop.auroc_u, rbc_from_pop(&pop)?))
        })
        .collect()
}

/// Argmax of `beta * AUROC + (1 - beta) * RBC` over precomputed
/// validation scores; ties keep the earliest candidate.
pub fn select_scored(scores: &[(f64, f64)], beta: f64) -> Result<usize> {
    if scores.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidConfig {
            what: format!("beta must lie in [0, 1], got {beta}"),
        });
    }
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, &(a, r)) in scores.iter().enumerate() {
        let score = beta * a + (1.0 - beta) * r;
        if score > best_score {
            best_score = score;
            best = i;
        }
    }
    Ok(best)
}

/// Pick the candidate maximizing the beta-weighted validation rule.
pub fn select<'a>(
    candidates: &'a [RiskModel],
    orig: &RiskModel,
    val: &Dataset,
    beta: f64,
) -> Result<&'a RiskModel> {
    let scores = validation_scores(candidates, orig, val)?;
    Ok(&candidates[select_scored(&scores, beta)?])
}

/// Held-out metrics for one candidate against the original model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateEval {
    pub auroc: f64,
    pub rbc: f64,
    /// BTC at the fixed reporting threshold [`EVAL_TAU`].
    pub btc: f64,
    pub phi_pp: f64,
}

/// Evaluation metrics for the compatibility pool at one alpha.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AlphaEvals {
    pub alpha: f64,
    pub evals: Vec<CandidateEval>,
}

/// Selection identities and metric gaps for one (alpha, beta) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub alpha: f64,
    pub beta: f64,
    /// Index into the alpha slice of the compatibility pool.
    pub rbc_candidate: usize,
    /// Index into the BCE pool.
    pub bce_candidate: usize,
    /// Held-out RBC of the selected RBC model minus the selected BCE
    /// model's.
    pub delta_rbc: f64,
    pub delta_auroc: f64,
}

/// Everything recorded for one replication.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub seed: u64,
    pub original_eval_auroc: f64,
    pub bce_evals: Vec<CandidateEval>,
    pub rbc_evals: Vec<AlphaEvals>,
    pub cells: Vec<CellResult>,
}

fn evaluate_candidate(
    orig_scores: &ScoreVector,
    cand: &RiskModel,
    eval: &Dataset,
) -> Result<CandidateEval> {
    let scores = cand.predict(eval)?;
    let pop = pop_table(orig_scores, &scores, eval.labels())?;
    Ok(CandidateEval {
        auroc: pop.auroc_u,
        rbc: rbc_from_pop(&pop)?,
        btc: btc(orig_scores, &scores, eval.labels(), EVAL_TAU, EVAL_TAU)?,
        phi_pp: pop.phi_pp,
    })
}

/// One full split / train / generate / select / evaluate cycle.
///
/// For every (alpha, beta) pair the best compatibility model (from that
/// alpha's slice) and the best standard model are selected with the same
/// beta on validation data, then compared on the held-out set.
pub fn run_replication(
    data: &Dataset,
    splits_spec: &SplitSpec,
    cand_spec: &CandidateSpec,
    base: &TrainConfig,
    beta_grid: &[f64],
    seed: u64,
) -> Result<ReplicationResult> {
    if beta_grid.is_empty() {
        return Err(Error::EmptyInput { what: "beta grid" });
    }
    let parts = split(data, splits_spec, mix_seed(seed, 0, 0))?;
    let orig = train_original(
        &parts.orig_dev,
        &parts.orig_val,
        &cand_spec.reg_grid,
        base,
        mix_seed(seed, 0, 1),
    )?;
    let bce_pool = generate_bce_candidates(
        &parts.upd_dev,
        &parts.upd_val,
        cand_spec,
        base,
        mix_seed(seed, 0, 2),
    )?;
    let rbc_pool = generate_rbc_candidates(
        &parts.upd_dev,
        &parts.upd_val,
        &orig,
        cand_spec,
        base,
        mix_seed(seed, 0, 3),
    )?;

    let bce_val = validation_scores(&bce_pool, &orig, &parts.upd_val)?;
    let rbc_val: Vec<Vec<(f64, f64)>> = rbc_pool
        .iter()
        .map(|slice| validation_scores(&slice.models, &orig, &parts.upd_val))
        .collect::<Result<_>>()?;

    let orig_eval_scores = orig.predict(&parts.eval)?;
    let original_eval_auroc = auroc(&orig_eval_scores, parts.eval.labels())?;
    let bce_evals: Vec<CandidateEval> = bce_pool
        .iter()
        .map(|c| evaluate_candidate(&orig_eval_scores, c, &parts.eval))
        .collect::<Result<_>>()?;
    let rbc_evals: Vec<AlphaEvals> = rbc_pool
        .iter()
        .map(|slice| {
            Ok(AlphaEvals {
                alpha: slice.alpha,
                evals: slice
                    .models
                    .iter()
                    .map(|c| evaluate_candidate(&orig_eval_scores, c, &parts.eval))
                    .collect::<Result<_>>()?,
            })
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(rbc_pool.len() * beta_grid.len());
    for (ai, slice) in rbc_pool.iter().enumerate() {
        for &beta in beta_grid {
            let rbc_candidate = select_scored(&rbc_val[ai], beta)?;
            let bce_candidate = select_scored(&bce_val, beta)?;
            let r = &rbc_evals[ai].evals[rbc_candidate];
            let b = &bce_evals[bce_candidate];
            cells.push(CellResult {
                alpha: slice.alpha,
                beta,
                rbc_candidate,
                bce_candidate,
                delta_rbc: r.rbc - b.rbc,
                delta_auroc: r.auroc - b.auroc,
            });
        }
    }

    Ok(ReplicationResult {
        seed,
        original_eval_auroc,
        bce_evals,
        rbc_evals,
        cells,
    })
}

/// Mean and empirical 95% interval of the metric gaps for one
/// (alpha, beta) cell, across replications.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryCell {
    pub alpha: f64,
    pub beta: f64,
    pub mean_drbc: f64,
    pub drbc_lo: f64,
    pub drbc_hi: f64,
    pub mean_dauroc: f64,
    pub dauroc_lo: f64,
    pub dauroc_hi: f64,
    /// True when the RBC gap's interval excludes zero from below while
    /// the AUROC gap's interval still contains zero.
    pub improvement: bool,
}

/// Aggregated experiment results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentSummary {
    pub replications: usize,
    pub cells: Vec<SummaryCell>,
}

/// Empirical percentile with linear interpolation between order
/// statistics. `sorted` must be ascending and non-empty.
pub fn empirical_percentile(sorted: &[f64], p: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let rank = p / 100.0 * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (rank - lo as f64) * (sorted[hi] - sorted[lo])
    }
}

/// Aggregate replications into per-(alpha, beta) means and empirical 95%
/// confidence intervals (2.5 / 97.5 percentiles).
pub fn aggregate(results: &[ReplicationResult]) -> Result<ExperimentSummary> {
    if results.len() < 2 {
        return Err(Error::TooFewReplications { got: results.len() });
    }
    let cells0 = &results[0].cells;
    for r in &results[1..] {
        if r.cells.len() != cells0.len()
            || r.cells
                .iter()
                .zip(cells0)
                .any(|(a, b)| a.alpha != b.alpha || a.beta != b.beta)
        {
            return Err(Error::InvalidConfig {
                what: "replications disagree on the (alpha, beta) grid".into(),
            });
        }
    }

    let n = results.len() as f64;
    let mut cells = Vec::with_capacity(cells0.len());
    for k in 0..cells0.len() {
        let mut drbc: Vec<f64> = results.iter().map(|r| r.cells[k].delta_rbc).collect();
        let mut dauroc: Vec<f64> = results.iter().map(|r| r.cells[k].delta_auroc).collect();
        let mean_drbc = drbc.iter().sum::<f64>() / n;
        let mean_dauroc = dauroc.iter().sum::<f64>() / n;
        drbc.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        dauroc.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let drbc_lo = empirical_percentile(&drbc, 2.5);
        let drbc_hi = empirical_percentile(&drbc, 97.5);
        let dauroc_lo = empirical_percentile(&dauroc, 2.5);
        let dauroc_hi = empirical_percentile(&dauroc, 97.5);
        cells.push(SummaryCell {
            alpha: cells0[k].alpha,
            beta: cells0[k].beta,
            mean_drbc,
            drbc_lo,
            drbc_hi,
            mean_dauroc,
            dauroc_lo,
            dauroc_hi,
            improvement: drbc_lo > 0.0 && dauroc_lo <= 0.0 && dauroc_hi >= 0.0,
        });
    }
    Ok(ExperimentSummary {
        replications: results.len(),
        cells,
    })
}

/// A histogram over [0, 1] with fixed-width bins; the last bin is closed.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin: f64,
    /// Mass per bin; sums to 1 for a non-empty input.
    pub mass: Vec<f64>,
}

impl Histogram {
    /// Number of bins covering [0, 1].
    pub fn n_bins(bin: f64) -> usize {
        ((1.0 - 1e-9) / bin).floor() as usize + 1
    }

    /// Bin index for a value in [0, 1].
    pub fn bin_index(value: f64, bin: f64) -> usize {
        ((value / bin).floor() as usize).min(Self::n_bins(bin) - 1)
    }

    /// Center of a bin.
    pub fn center(&self, index: usize) -> f64 {
        (index as f64 + 0.5) * self.bin
    }
}

/// Per-replication histograms of phi-plus-plus values, averaged bin-wise
/// across replications. Each replication's histogram is normalized to
/// total mass 1 before averaging.
pub fn phi_pp_histogram(per_replication: &[Vec<f64>], bin: f64) -> Result<Histogram> {
    if !(bin > 0.0) || !bin.is_finite() {
        return Err(Error::InvalidConfig {
            what: format!("histogram bin width must be positive, got {bin}"),
        });
    }
    if per_replication.is_empty() || per_replication.iter().any(|v| v.is_empty()) {
        return Err(Error::EmptyInput {
            what: "phi_pp values",
        });
    }
    let n_bins = Histogram::n_bins(bin);
    let mut mass = vec![0.0; n_bins];
    for values in per_replication {
        let weight = 1.0 / (values.len() as f64 * per_replication.len() as f64);
        for &v in values {
            mass[Histogram::bin_index(v, bin)] += weight;
        }
    }
    Ok(Histogram { bin, mass })
}

/// One cell of the BTC threshold sweep.
///
/// `btc: None` marks a degenerate denominator (the original model labels
/// nothing correctly at `tau_o`), distinct from a genuine 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BtcSweepCell {
    pub tau_o: f64,
    pub tau_u: f64,
    pub btc: Option<f64>,
    pub acc_orig: f64,
    pub acc_upd: Option<f64>,
    /// Pool index of the model maximizing validation BTC; None when the
    /// validation denominator is degenerate and no selection exists.
    pub selected: Option<usize>,
}

/// The full threshold-sweep grid, row-major over (tau_o, tau_u).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BtcSweepGrid {
    pub tau_o_grid: Vec<f64>,
    pub tau_u_grid: Vec<f64>,
    pub cells: Vec<BtcSweepCell>,
}

impl BtcSweepGrid {
    pub fn cell(&self, io: usize, iu: usize) -> &BtcSweepCell {
        &self.cells[io * self.tau_u_grid.len() + iu]
    }
}

/// The default threshold grid: a fine region near zero and a coarse
/// region over the rest of the unit interval.
pub fn default_tau_grid() -> Vec<f64> {
    let mut grid: Vec<f64> = (0..=10).map(|i| i as f64 / 100.0).collect();
    grid.extend((3..=19).map(|i| i as f64 * 5.0 / 100.0));
    grid
}

/// For every threshold pair, select the pool model with the best
/// validation BTC and report its held-out BTC plus both models' held-out
/// accuracies.
pub fn btc_threshold_sweep(
    orig: &RiskModel,
    pool: &[RiskModel],
    val: &Dataset,
    eval: &Dataset,
    tau_o_grid: &[f64],
    tau_u_grid: &[f64],
) -> Result<BtcSweepGrid> {
    if tau_o_grid.is_empty() || tau_u_grid.is_empty() {
        return Err(Error::EmptyInput { what: "tau grid" });
    }
    if pool.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let orig_val = orig.predict(val)?;
    let orig_eval = orig.predict(eval)?;
    let pool_val: Vec<ScoreVector> = pool.iter().map(|m| m.predict(val)).collect::<Result<_>>()?;
    let pool_eval: Vec<ScoreVector> = pool
        .iter()
        .map(|m| m.predict(eval))
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(tau_o_grid.len() * tau_u_grid.len());
    for &tau_o in tau_o_grid {
        let acc_orig = accuracy(&orig_eval, eval.labels(), tau_o)?;
        let val_denominator_ok = orig_val
            .as_slice()
            .iter()
            .zip(val.labels())
            .any(|(&p, &y)| (p > tau_o) == y);
        let eval_denominator_ok = orig_eval
            .as_slice()
            .iter()
            .zip(eval.labels())
            .any(|(&p, &y)| (p > tau_o) == y);
        for &tau_u in tau_u_grid {
            if !val_denominator_ok {
                cells.push(BtcSweepCell {
                    tau_o,
                    tau_u,
                    btc: None,
                    acc_orig,
                    acc_upd: None,
                    selected: None,
                });
                continue;
            }
            let mut best = 0usize;
            let mut best_btc = f64::NEG_INFINITY;
            for (i, scores) in pool_val.iter().enumerate() {
                let b = btc(&orig_val, scores, val.labels(), tau_o, tau_u)?;
                if b > best_btc {
                    best_btc = b;
                    best = i;
                }
            }
            let eval_btc = if eval_denominator_ok {
                Some(btc(
                    &orig_eval,
                    &pool_eval[best],
                    eval.labels(),
                    tau_o,
                    tau_u,
                )?)
            } else {
                None
            };
            cells.push(BtcSweepCell {
                tau_o,
                tau_u,
                btc: eval_btc,
                acc_orig,
                acc_upd: Some(accuracy(&pool_eval[best], eval.labels(), tau_u)?),
                selected: Some(best),
            });
        }
    }
    Ok(BtcSweepGrid {
        tau_o_grid: tau_o_grid.to_vec(),
        tau_u_grid: tau_u_grid.to_vec(),
        cells,
    })
}

/// Cell-wise mean of several sweep grids; degenerate cells are averaged
/// over the replications where they are defined.
pub fn mean_btc_grids(grids: &[BtcSweepGrid]) -> Result<BtcSweepGrid> {
    let first = grids.first().ok_or(Error::EmptyInput { what: "grids" })?;
    for g in &grids[1..] {
        if g.tau_o_grid != first.tau_o_grid || g.tau_u_grid != first.tau_u_grid {
            return Err(Error::InvalidConfig {
                what: "sweep grids disagree on thresholds".into(),
            });
        }
    }
    let cells = (0..first.cells.len())
        .map(|k| {
            let btc_vals: Vec<f64> = grids.iter().filter_map(|g| g.cells[k].btc).collect();
            let acc_upd_vals: Vec<f64> = grids.iter().filter_map(|g| g.cells[k].acc_upd).collect();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            BtcSweepCell {
                tau_o: first.cells[k].tau_o,
                tau_u: first.cells[k].tau_u,
                btc: (!btc_vals.is_empty()).then(|| mean(&btc_vals)),
                acc_orig: mean(
                    &grids
                        .iter()
                        .map(|g| g.cells[k].acc_orig)
                        .collect::<Vec<_>>(),
                ),
                acc_upd: (!acc_upd_vals.is_empty()).then(|| mean(&acc_upd_vals)),
                selected: None,
            }
        })
        .collect();
    Ok(BtcSweepGrid {
        tau_o_grid: first.tau_o_grid.clone(),
        tau_u_grid: first.tau_u_grid.clone(),
        cells,
    })
}

/// Full experiment configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub split: SplitSpec,
    pub candidates: CandidateSpec,
    pub train: TrainConfig,
    pub beta_grid: Vec<f64>,
    pub replications: usize,
    pub seed: u64,
    /// Worker threads for replications; 0 means one per available core.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            split: SplitSpec::default(),
            candidates: CandidateSpec::default(),
            train: TrainConfig::default(),
            beta_grid: (0..=10).map(|i| i as f64 / 10.0).collect(),
            replications: 40,
            seed: 0,
            jobs: 0,
        }
    }
}

/// Replication results plus their aggregate.
#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub replications: Vec<ReplicationResult>,
    pub summary: ExperimentSummary,
}

/// Run all replications (in parallel when `jobs != 1`) and aggregate.
/// Results are identical for any job count: every replication derives its
/// own seed by counter and the reduce runs in index order.
pub fn run_experiment(data: &Dataset, cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    if cfg.replications < 2 {
        return Err(Error::TooFewReplications {
            got: cfg.replications,
        });
    }
    let run = |r: usize| {
        run_replication(
            data,
            &cfg.split,
            &cfg.candidates,
            &cfg.train,
            &cfg.beta_grid,
            mix_seed(cfg.seed, 10, r as u64),
        )
    };
    let replications: Vec<ReplicationResult> = if cfg.jobs == 1 {
        (0..cfg.replications).map(run).collect::<Result<_>>()?
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::InvalidConfig {
                what: format!("cannot build thread pool: {e}"),
            })?;
        pool.install(|| {
            (0..cfg.replications)
                .into_par_iter()
                .map(run)
                .collect::<Result<_>>()
        })?
    };
    let summary = aggregate(&replications)?;
    Ok(ExperimentOutput {
        replications,
        summary,
    })
}
