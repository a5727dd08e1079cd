//! Synthetic dataset generation and file persistence: datasets as CSV,
//! models as JSON, experiment reports as CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::combinatorics::NuCurve;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::pipeline::{BtcSweepGrid, ExperimentSummary, ReplicationResult};
use crate::trainer::RiskModel;

/// Configuration of the class-conditional Gaussian generator.
///
/// Labels are Bernoulli(`prevalence`). The first `d - noise_features`
/// columns are informative: unit-variance Gaussians centered at
/// `+/- class_separation / 2` by class. The remaining columns are
/// label-independent standard normals.
///
/// `shift` offsets every informative-feature mean by a constant; generate
/// the update-era data with a nonzero shift (and the original-era data
/// without) to emulate covariate drift between model generations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub n: usize,
    pub d: usize,
    pub prevalence: f64,
    pub class_separation: f64,
    pub noise_features: usize,
    pub shift: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n: 8577,
            d: 50,
            prevalence: 0.15,
            class_separation: 0.45,
            noise_features: 40,
            shift: 0.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.d == 0 {
            return Err(Error::InvalidConfig {
                what: format!("n and d must be positive, got n={} d={}", self.n, self.d),
            });
        }
        if !(self.prevalence > 0.0 && self.prevalence < 1.0) {
            return Err(Error::InvalidConfig {
                what: format!("prevalence must lie in (0, 1), got {}", self.prevalence),
            });
        }
        if self.class_separation < 0.0 || !self.class_separation.is_finite() {
            return Err(Error::InvalidConfig {
                what: format!(
                    "class_separation must be non-negative, got {}",
                    self.class_separation
                ),
            });
        }
        if self.noise_features > self.d {
            return Err(Error::InvalidConfig {
                what: format!(
                    "noise_features {} exceeds d {}",
                    self.noise_features, self.d
                ),
            });
        }
        if !self.shift.is_finite() {
            return Err(Error::InvalidConfig {
                what: format!("shift must be finite, got {}", self.shift),
            });
        }
        Ok(())
    }
}

/// Draw a synthetic dataset. A pure function of the config.
pub fn generate(cfg: &SynthConfig) -> Result<Dataset> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let informative = cfg.d - cfg.noise_features;
    let half_sep = cfg.class_separation / 2.0;

    let mut features = Vec::with_capacity(cfg.n * cfg.d);
    let mut labels = Vec::with_capacity(cfg.n);
    for _ in 0..cfg.n {
        let y = rng.random::<f64>() < cfg.prevalence;
        let mean = if y { half_sep } else { -half_sep } + cfg.shift;
        for k in 0..cfg.d {
            let noise: f64 = StandardNormal.sample(&mut rng);
            features.push(if k < informative { mean + noise } else { noise });
        }
        labels.push(y);
    }
    Dataset::new(features, labels, cfg.d)
}

// ---------------------------------------------------------------------------
// Dataset CSV
// ---------------------------------------------------------------------------

/// Write a dataset as CSV: header `y,f0,...,f{d-1}`, LF line endings,
/// shortest round-trippable decimals.
pub fn save_dataset(path: &Path, data: &Dataset) -> Result<()> {
    let mut out = String::new();
    out.push('y');
    for k in 0..data.d() {
        let _ = write!(out, ",f{k}");
    }
    out.push('\n');
    for i in 0..data.n() {
        out.push(if data.labels()[i] { '1' } else { '0' });
        for &v in data.row(i) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Read a dataset CSV written by [`save_dataset`]. Labels must be 0 or 1;
/// parse failures name the 1-based line and column.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| Error::SchemaError {
        path: path.display().to_string(),
        what: "file is empty".into(),
    })?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.first() != Some(&"y") || cols.len() < 2 {
        return Err(Error::SchemaError {
            path: path.display().to_string(),
            what: format!("header must be y,f0,...; got {header:?}"),
        });
    }
    for (k, col) in cols[1..].iter().enumerate() {
        if *col != format!("f{k}") {
            return Err(Error::SchemaError {
                path: path.display().to_string(),
                what: format!("feature column {} named {col:?}, expected f{k}", k + 1),
            });
        }
    }
    let d = cols.len() - 1;

    let parse_err = |line: usize, column: usize, what: String| Error::ParseError {
        path: path.display().to_string(),
        line,
        column,
        what,
    };
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != d + 1 {
            return Err(parse_err(
                lineno,
                fields.len(),
                format!("expected {} fields, found {}", d + 1, fields.len()),
            ));
        }
        labels.push(match fields[0] {
            "0" => false,
            "1" => true,
            other => {
                return Err(parse_err(
                    lineno,
                    1,
                    format!("label must be 0 or 1, found {other:?}"),
                ))
            }
        });
        for (k, field) in fields[1..].iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                parse_err(lineno, k + 2, format!("not a number: {field:?}"))
            })?;
            if !v.is_finite() {
                return Err(parse_err(lineno, k + 2, format!("non-finite value {v}")));
            }
            features.push(v);
        }
    }
    Dataset::new(features, labels, d)
}

// ---------------------------------------------------------------------------
// Model JSON
// ---------------------------------------------------------------------------

/// Write a model as JSON. Non-finite parameters are rejected at save
/// time rather than silently serialized.
pub fn save_model(path: &Path, model: &RiskModel) -> Result<()> {
    for &w in model.weights.iter().chain([&model.intercept, &model.reg_l2]) {
        if !w.is_finite() {
            return Err(Error::NonFiniteValue {
                what: "model parameter",
                value: w,
            });
        }
    }
    let json = serde_json::to_string_pretty(model).expect("model serializes");
    fs::write(path, json).map_err(|e| Error::io(path, e))
}

/// Read a model JSON written by [`save_model`].
pub fn load_model(path: &Path) -> Result<RiskModel> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let model: RiskModel = serde_json::from_str(&text).map_err(|e| {
        if e.is_syntax() || e.is_eof() {
            Error::ParseError {
                path: path.display().to_string(),
                line: e.line(),
                column: e.column(),
                what: e.to_string(),
            }
        } else {
            Error::SchemaError {
                path: path.display().to_string(),
                what: e.to_string(),
            }
        }
    })?;
    RiskModel::new(
        model.weights.clone(),
        model.intercept,
        model.reg_l2,
        model.metadata,
    )
}

// ---------------------------------------------------------------------------
// Report CSVs
// ---------------------------------------------------------------------------

/// Write the per-(alpha, beta) experiment summary.
pub fn write_summary_report(path: &Path, summary: &ExperimentSummary) -> Result<()> {
    let mut out = String::from(
        "alpha,beta,mean_drbc,drbc_lo,drbc_hi,mean_dauroc,dauroc_lo,dauroc_hi,improvement\n",
    );
    for c in &summary.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.alpha,
            c.beta,
            c.mean_drbc,
            c.drbc_lo,
            c.drbc_hi,
            c.mean_dauroc,
            c.dauroc_lo,
            c.dauroc_hi,
            c.improvement
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write one replication's per-(alpha, beta) cells.
pub fn write_replication_report(path: &Path, result: &ReplicationResult) -> Result<()> {
    let mut out =
        String::from("alpha,beta,rbc_candidate,bce_candidate,delta_rbc,delta_auroc\n");
    for c in &result.cells {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            c.alpha, c.beta, c.rbc_candidate, c.bce_candidate, c.delta_rbc, c.delta_auroc
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write per-candidate held-out metrics across replications (the scatter
/// behind the AUROC-vs-RBC plots).
pub fn write_scatter_csv(path: &Path, results: &[ReplicationResult]) -> Result<()> {
    let mut out = String::from(
        "replication,kind,alpha,candidate,original_auroc,auroc,rbc,btc,phi_pp\n",
    );
    for (r, result) in results.iter().enumerate() {
        for (k, e) in result.bce_evals.iter().enumerate() {
            let _ = writeln!(
                out,
                "{r},bce,1,{k},{},{},{},{},{}",
                result.original_eval_auroc, e.auroc, e.rbc, e.btc, e.phi_pp
            );
        }
        for slice in &result.rbc_evals {
            for (k, e) in slice.evals.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{r},rbc,{},{k},{},{},{},{},{}",
                    slice.alpha, result.original_eval_auroc, e.auroc, e.rbc, e.btc, e.phi_pp
                );
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write combination-count curves with a log10 vertical axis.
pub fn write_nu_curves_csv(path: &Path, curves: &[NuCurve]) -> Result<()> {
    let mut out = String::from("auroc_u,k,rbc,log10_count\n");
    for curve in curves {
        for p in &curve.points {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                curve.auroc_u,
                p.k,
                p.rbc,
                p.ln_count / std::f64::consts::LN_10
            );
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write a threshold-sweep grid; degenerate cells carry an empty `btc`
/// field and state `degenerate`.
pub fn write_btc_grid_csv(path: &Path, grid: &BtcSweepGrid) -> Result<()> {
    let mut out = String::from("tau_o,tau_u,state,btc,acc_orig,acc_upd\n");
    for c in &grid.cells {
        let state = if c.btc.is_some() { "ok" } else { "degenerate" };
        let btc = c.btc.map(|v| v.to_string()).unwrap_or_default();
        let acc_upd = c.acc_upd.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{state},{btc},{},{acc_upd}",
            c.tau_o, c.tau_u, c.acc_orig
        );
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
