//! Subcommand implementations.

use std::fs;
use std::path::Path;
use std::time::Instant;

use rankcompat::combinatorics::nu_curve;
use rankcompat::data_io::{
    self, generate, load_dataset, load_model, save_dataset, save_model, SynthConfig,
};
use rankcompat::metrics::{accuracy, auroc, bounds, btc, pop_table, rbc_from_pop};
use rankcompat::pipeline::{
    btc_threshold_sweep, default_tau_grid, generate_bce_candidates, mean_btc_grids, mix_seed,
    run_experiment, split, train_original, BtcSweepGrid, CandidateSpec, ExperimentConfig,
    ExperimentOutput, SplitSpec,
};
use rankcompat::trainer::train_full;
use rankcompat::{Dataset, TrainConfig};
use serde_json::json;

use crate::config::{self, FileConfig};
use crate::grid::parse_grid;
use crate::svg::{palette, Plot, Series};
use crate::{
    BtcSweepArgs, Cli, CliError, CombinatoricsArgs, Command, EvaluateArgs, GenDataArgs,
    SplitArgs, SynthFlags, TrainArgs, TrainFlags, UpdateExperimentArgs,
};

pub fn run(cli: Cli) -> Result<(), CliError> {
    let file_cfg = config::load(cli.config.as_deref())?;
    match cli.command {
        Command::GenData(args) => gen_data(args, &file_cfg, cli.seed),
        Command::Split(args) => split_cmd(args, &file_cfg, cli.seed),
        Command::Train(args) => train_cmd(args, &file_cfg, cli.seed),
        Command::Evaluate(args) => evaluate_cmd(args),
        Command::UpdateExperiment(args) => update_experiment(args, &file_cfg, cli.seed),
        Command::Combinatorics(args) => combinatorics_cmd(args),
        Command::BtcSweep(args) => btc_sweep_cmd(args, &file_cfg, cli.seed),
    }
}

fn usage(msg: String) -> CliError {
    CliError::Usage(msg)
}

fn echo_config(label: &str, value: &serde_json::Value) {
    eprintln!("resolved {label} config: {value}");
}

fn resolve_synth(
    flags: &SynthFlags,
    file: &FileConfig,
    seed_flag: Option<u64>,
) -> Result<SynthConfig, CliError> {
    let mut cfg = file.synth.clone().unwrap_or_default();
    cfg.seed = config::resolve_seed(seed_flag, file.synth.as_ref().map(|s| s.seed))
        .map_err(usage)?;
    if let Some(v) = flags.n {
        cfg.n = v;
    }
    if let Some(v) = flags.d {
        cfg.d = v;
    }
    if let Some(v) = flags.prevalence {
        cfg.prevalence = v;
    }
    if let Some(v) = flags.class_separation {
        cfg.class_separation = v;
    }
    if let Some(v) = flags.noise_features {
        cfg.noise_features = v;
    }
    if let Some(v) = flags.shift {
        cfg.shift = v;
    }
    Ok(cfg)
}

fn resolve_train(flags: &TrainFlags, file: &FileConfig, seed: u64) -> TrainConfig {
    let mut cfg = file.train.clone().unwrap_or_default();
    cfg.seed = seed;
    if let Some(v) = flags.s {
        cfg.surrogate.s = v;
    }
    if let Some(v) = flags.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = flags.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = flags.max_epochs {
        cfg.max_epochs = v;
    }
    if let Some(v) = flags.patience {
        cfg.patience = v;
    }
    cfg
}

fn resolve_split(
    n_original: Option<usize>,
    n_updated: Option<usize>,
    dev_fraction: Option<f64>,
    file: &FileConfig,
) -> SplitSpec {
    let mut spec = file.split.clone().unwrap_or_default();
    if let Some(v) = n_original {
        spec.n_original = v;
    }
    if let Some(v) = n_updated {
        spec.n_updated = v;
    }
    if let Some(v) = dev_fraction {
        spec.dev_fraction = v;
    }
    spec
}

fn resolve_candidates(
    n_resample: Option<usize>,
    n_shuffle: Option<usize>,
    reg_grid: Option<&str>,
    alphas: Option<&str>,
    file: &FileConfig,
) -> Result<CandidateSpec, CliError> {
    let mut spec = file.candidates.clone().unwrap_or_default();
    if let Some(v) = n_resample {
        spec.n_resample = v;
    }
    if let Some(v) = n_shuffle {
        spec.n_shuffle = v;
    }
    if let Some(text) = reg_grid {
        spec.reg_grid = parse_grid(text).map_err(usage)?;
    }
    if let Some(text) = alphas {
        spec.alpha_grid = parse_grid(text).map_err(usage)?;
    }
    Ok(spec)
}

fn load_or_generate(
    data: Option<&Path>,
    flags: &SynthFlags,
    file: &FileConfig,
    seed_flag: Option<u64>,
) -> Result<(Dataset, serde_json::Value), CliError> {
    match data {
        Some(path) => {
            let data = load_dataset(path)?;
            Ok((data, json!({ "data": path.display().to_string() })))
        }
        None => {
            let cfg = resolve_synth(flags, file, seed_flag)?;
            let data = generate(&cfg)?;
            Ok((data, json!({ "synth": cfg })))
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| {
        CliError::Core(rankcompat::Error::Io {
            path: dir.display().to_string(),
            source: e,
        })
    })
}

// ---------------------------------------------------------------------------
// gen-data
// ---------------------------------------------------------------------------

fn gen_data(args: GenDataArgs, file: &FileConfig, seed: Option<u64>) -> Result<(), CliError> {
    let cfg = resolve_synth(&args.synth, file, seed)?;
    echo_config("gen-data", &json!({ "synth": cfg, "out": args.out }));
    let data = generate(&cfg)?;
    save_dataset(&args.out, &data)?;
    println!(
        "wrote {} rows x {} features ({} positive) to {}",
        data.n(),
        data.d(),
        data.n_positive(),
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// split
// ---------------------------------------------------------------------------

fn split_cmd(args: SplitArgs, file: &FileConfig, seed: Option<u64>) -> Result<(), CliError> {
    let spec = resolve_split(args.n_original, args.n_updated, args.dev_fraction, file);
    let seed = config::resolve_seed(seed, None).map_err(usage)?;
    echo_config(
        "split",
        &json!({ "split": spec, "seed": seed, "data": args.data, "out_dir": args.out_dir }),
    );
    let data = load_dataset(&args.data)?;
    let parts = split(&data, &spec, seed)?;
    ensure_dir(&args.out_dir)?;
    for (name, part) in [
        ("orig_dev.csv", &parts.orig_dev),
        ("orig_val.csv", &parts.orig_val),
        ("upd_dev.csv", &parts.upd_dev),
        ("upd_val.csv", &parts.upd_val),
        ("eval.csv", &parts.eval),
    ] {
        let path = args.out_dir.join(name);
        save_dataset(&path, part)?;
        println!("wrote {} ({} rows)", path.display(), part.n());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

fn train_cmd(args: TrainArgs, file: &FileConfig, seed: Option<u64>) -> Result<(), CliError> {
    let seed = config::resolve_seed(seed, file.train.as_ref().map(|t| t.seed)).map_err(usage)?;
    let mut cfg = resolve_train(&args.train, file, seed);
    if let Some(alpha) = args.alpha {
        cfg.surrogate.alpha = alpha;
    }
    if let Some(reg) = args.reg_l2 {
        cfg.reg_l2 = reg;
    }
    echo_config(
        "train",
        &json!({
            "train": cfg,
            "dev": args.dev,
            "val": args.val,
            "orig": args.orig,
            "out": args.out
        }),
    );
    let dev = load_dataset(&args.dev)?;
    let val = load_dataset(&args.val)?;
    let orig = args.orig.as_deref().map(load_model).transpose()?;
    let outcome = train_full(&dev, &val, orig.as_ref(), &cfg)?;
    save_model(&args.out, &outcome.model)?;
    let val_auroc = auroc(&outcome.model.predict(&val)?, val.labels())?;
    println!(
        "trained {} epochs (alpha={}), validation AUROC {:.4}; wrote {}",
        outcome.model.metadata.epochs_run,
        cfg.surrogate.alpha,
        val_auroc,
        args.out.display()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

fn evaluate_cmd(args: EvaluateArgs) -> Result<(), CliError> {
    echo_config(
        "evaluate",
        &json!({
            "orig": args.orig,
            "updated": args.updated,
            "data": args.data,
            "tau_o": args.tau_o,
            "tau_u": args.tau_u
        }),
    );
    let orig = load_model(&args.orig)?;
    let updated = load_model(&args.updated)?;
    let data = load_dataset(&args.data)?;
    let orig_scores = orig.predict(&data)?;
    let upd_scores = updated.predict(&data)?;

    let pop = pop_table(&orig_scores, &upd_scores, data.labels())?;
    println!("AUROC(original) = {:.6}", pop.auroc_o);
    println!("AUROC(updated)  = {:.6}", pop.auroc_u);
    match rbc_from_pop(&pop) {
        Ok(r) => println!("RBC             = {:.6}", r),
        Err(e) => println!("RBC             = undefined ({e})"),
    }
    match btc(&orig_scores, &upd_scores, data.labels(), args.tau_o, args.tau_u) {
        Ok(b) => println!(
            "BTC(tau_o={}, tau_u={}) = {:.6}",
            args.tau_o, args.tau_u, b
        ),
        Err(e) => println!(
            "BTC(tau_o={}, tau_u={}) = undefined ({e})",
            args.tau_o, args.tau_u
        ),
    }
    println!(
        "accuracy(original, tau={}) = {:.6}",
        args.tau_o,
        accuracy(&orig_scores, data.labels(), args.tau_o)?
    );
    println!(
        "accuracy(updated, tau={})  = {:.6}",
        args.tau_u,
        accuracy(&upd_scores, data.labels(), args.tau_u)?
    );
    println!(
        "POP counts: m={} m_pp={} m_pm={} m_mp={} m_mm={}",
        pop.m, pop.m_pp, pop.m_pm, pop.m_mp, pop.m_mm
    );
    println!(
        "POP proportions: phi_pp={:.6} phi_pm={:.6} phi_mp={:.6} phi_mm={:.6}",
        pop.phi_pp, pop.phi_pm, pop.phi_mp, pop.phi_mm
    );
    match bounds(pop.auroc_o, pop.auroc_u) {
        Ok(b) => println!("RBC lower bound (in regime) = {:.6}", b.rbc_lower),
        Err(_) => println!("RBC lower bound: model-pair outside the 0.5 < AUROC_o <= AUROC_u regime"),
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// update-experiment
// ---------------------------------------------------------------------------

fn update_experiment(
    args: UpdateExperimentArgs,
    file: &FileConfig,
    seed: Option<u64>,
) -> Result<(), CliError> {
    let seed = config::resolve_seed(seed, file.synth.as_ref().map(|s| s.seed)).map_err(usage)?;
    let (data, source) = load_or_generate(args.data.as_deref(), &args.synth, file, Some(seed))?;
    let candidates = resolve_candidates(
        args.n_resample,
        args.n_shuffle,
        args.reg_grid.as_deref(),
        Some(&args.alphas),
        file,
    )?;
    let cfg = ExperimentConfig {
        split: resolve_split(args.n_original, args.n_updated, args.dev_fraction, file),
        candidates,
        train: resolve_train(&args.train, file, seed),
        beta_grid: parse_grid(&args.betas).map_err(usage)?,
        replications: args.replications,
        seed,
        jobs: args.jobs,
    };
    echo_config(
        "update-experiment",
        &json!({ "experiment": cfg, "source": source, "out_dir": args.out_dir }),
    );

    let started = Instant::now();
    let output = run_experiment(&data, &cfg)?;
    eprintln!(
        "ran {} replications in {:.1}s",
        cfg.replications,
        started.elapsed().as_secs_f64()
    );

    ensure_dir(&args.out_dir)?;
    let summary_path = args.out_dir.join("summary.csv");
    data_io::write_summary_report(&summary_path, &output.summary)?;
    let scatter_path = args.out_dir.join("scatter.csv");
    data_io::write_scatter_csv(&scatter_path, &output.replications)?;
    let svg_path = args.out_dir.join("scatter.svg");
    fs::write(&svg_path, scatter_svg(&output)).map_err(|e| {
        CliError::Core(rankcompat::Error::Io {
            path: svg_path.display().to_string(),
            source: e,
        })
    })?;

    let improved = output
        .summary
        .cells
        .iter()
        .filter(|c| c.improvement)
        .count();
    println!(
        "{} of {} (alpha, beta) cells show an RBC improvement without AUROC degradation",
        improved,
        output.summary.cells.len()
    );
    for p in [&summary_path, &scatter_path, &svg_path] {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn scatter_svg(output: &ExperimentOutput) -> String {
    let mut series: Vec<Series> = Vec::new();
    let bce_points: Vec<(f64, f64)> = output
        .replications
        .iter()
        .flat_map(|r| r.bce_evals.iter().map(|e| (e.auroc, e.rbc)))
        .collect();
    series.push(Series {
        name: "bce".into(),
        color: palette(0),
        points: bce_points,
    });
    if let Some(first) = output.replications.first() {
        for (k, slice) in first.rbc_evals.iter().enumerate() {
            let points: Vec<(f64, f64)> = output
                .replications
                .iter()
                .flat_map(|r| r.rbc_evals[k].evals.iter().map(|e| (e.auroc, e.rbc)))
                .collect();
            series.push(Series {
                name: format!("rbc alpha={}", slice.alpha),
                color: palette(k + 1),
                points,
            });
        }
    }
    let all: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied()).collect();
    let xs = all.iter().map(|p| p.0);
    let ys = all.iter().map(|p| p.1);
    let x_range = (
        xs.clone().fold(f64::INFINITY, f64::min),
        xs.fold(f64::NEG_INFINITY, f64::max),
    );
    let y_range = (
        ys.clone().fold(f64::INFINITY, f64::min),
        ys.fold(f64::NEG_INFINITY, f64::max),
    );
    let mut plot = Plot::new(x_range, y_range);
    for s in &series {
        plot.scatter_series(s);
    }
    plot.finish(
        "Held-out AUROC vs RBC per candidate",
        "AUROC (updated model)",
        "RBC",
    )
}

// ---------------------------------------------------------------------------
// combinatorics
// ---------------------------------------------------------------------------

fn combinatorics_cmd(args: CombinatoricsArgs) -> Result<(), CliError> {
    let auroc_u = parse_grid(&args.auroc_u).map_err(usage)?;
    echo_config(
        "combinatorics",
        &json!({
            "m": args.m,
            "auroc_o": args.auroc_o,
            "auroc_u": auroc_u,
            "out_dir": args.out_dir
        }),
    );
    let curves = nu_curve(args.auroc_o, &auroc_u, args.m)?;
    ensure_dir(&args.out_dir)?;
    let csv_path = args.out_dir.join("nu_curves.csv");
    data_io::write_nu_curves_csv(&csv_path, &curves)?;

    let ln10 = std::f64::consts::LN_10;
    let mut y_max = f64::NEG_INFINITY;
    let mut x_min = f64::INFINITY;
    for c in &curves {
        for p in &c.points {
            y_max = y_max.max(p.ln_count / ln10);
            x_min = x_min.min(p.rbc);
        }
    }
    let mut plot = Plot::new((x_min, 1.0), (0.0, y_max.max(1.0)));
    for (k, c) in curves.iter().enumerate() {
        plot.line_series(&Series {
            name: format!("auroc_u={}", c.auroc_u),
            color: palette(k),
            points: c.points.iter().map(|p| (p.rbc, p.ln_count / ln10)).collect(),
        });
        let peak = c.peak();
        println!(
            "auroc_u={}: feasible k in [{}, {}], peak at rbc={:.4}",
            c.auroc_u,
            c.triple.k_min(),
            c.triple.k_max(),
            peak.rbc
        );
    }
    let svg_path = args.out_dir.join("nu_curves.svg");
    fs::write(
        &svg_path,
        plot.finish("Combination counts by RBC value", "RBC", "log10 count"),
    )
    .map_err(|e| {
        CliError::Core(rankcompat::Error::Io {
            path: svg_path.display().to_string(),
            source: e,
        })
    })?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", svg_path.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// btc-sweep
// ---------------------------------------------------------------------------

fn btc_sweep_cmd(args: BtcSweepArgs, file: &FileConfig, seed: Option<u64>) -> Result<(), CliError> {
    let seed = config::resolve_seed(seed, file.synth.as_ref().map(|s| s.seed)).map_err(usage)?;
    let (data, source) = load_or_generate(args.data.as_deref(), &args.synth, file, Some(seed))?;
    let split_spec = resolve_split(args.n_original, args.n_updated, args.dev_fraction, file);
    let cand_spec = resolve_candidates(
        args.n_resample,
        args.n_shuffle,
        args.reg_grid.as_deref(),
        None,
        file,
    )?;
    let base = resolve_train(&args.train, file, seed);
    let tau_o_grid = match &args.tau_o_grid {
        Some(text) => parse_grid(text).map_err(usage)?,
        None => default_tau_grid(),
    };
    let tau_u_grid = match &args.tau_u_grid {
        Some(text) => parse_grid(text).map_err(usage)?,
        None => default_tau_grid(),
    };
    echo_config(
        "btc-sweep",
        &json!({
            "source": source,
            "split": split_spec,
            "candidates": cand_spec,
            "train": base,
            "tau_o_grid": tau_o_grid,
            "tau_u_grid": tau_u_grid,
            "replications": args.replications,
            "seed": seed,
            "out_dir": args.out_dir
        }),
    );

    let mut grids: Vec<BtcSweepGrid> = Vec::with_capacity(args.replications);
    for r in 0..args.replications {
        let parts = split(&data, &split_spec, mix_seed(seed, 20, r as u64))?;
        let orig = train_original(
            &parts.orig_dev,
            &parts.orig_val,
            &cand_spec.reg_grid,
            &base,
            mix_seed(seed, 21, r as u64),
        )?;
        let pool = generate_bce_candidates(
            &parts.upd_dev,
            &parts.upd_val,
            &cand_spec,
            &base,
            mix_seed(seed, 22, r as u64),
        )?;
        grids.push(btc_threshold_sweep(
            &orig,
            &pool,
            &parts.upd_val,
            &parts.eval,
            &tau_o_grid,
            &tau_u_grid,
        )?);
        eprintln!("replication {} of {} done", r + 1, args.replications);
    }
    let mean_grid = mean_btc_grids(&grids)?;

    ensure_dir(&args.out_dir)?;
    let csv_path = args.out_dir.join("btc_grid.csv");
    data_io::write_btc_grid_csv(&csv_path, &mean_grid)?;
    let svg_path = args.out_dir.join("btc_grid.svg");
    fs::write(&svg_path, heatmap_svg(&mean_grid)).map_err(|e| {
        CliError::Core(rankcompat::Error::Io {
            path: svg_path.display().to_string(),
            source: e,
        })
    })?;
    let degenerate = mean_grid.cells.iter().filter(|c| c.btc.is_none()).count();
    println!(
        "{} cells ({} degenerate) over {} replications",
        mean_grid.cells.len(),
        degenerate,
        args.replications
    );
    println!("wrote {}", csv_path.display());
    println!("wrote {}", svg_path.display());
    Ok(())
}

/// Cell boundaries at midpoints between consecutive grid values.
fn cell_edges(grid: &[f64]) -> Vec<(f64, f64)> {
    (0..grid.len())
        .map(|i| {
            let lo = if i == 0 {
                grid[0] - (grid[1.min(grid.len() - 1)] - grid[0]).max(0.005) / 2.0
            } else {
                (grid[i - 1] + grid[i]) / 2.0
            };
            let hi = if i + 1 == grid.len() {
                grid[i] + (grid[i] - grid[i.saturating_sub(1)]).max(0.005) / 2.0
            } else {
                (grid[i] + grid[i + 1]) / 2.0
            };
            (lo, hi)
        })
        .collect()
}

fn heatmap_svg(grid: &BtcSweepGrid) -> String {
    let o_edges = cell_edges(&grid.tau_o_grid);
    let u_edges = cell_edges(&grid.tau_u_grid);
    let x_range = (o_edges[0].0, o_edges.last().unwrap().1);
    let y_range = (u_edges[0].0, u_edges.last().unwrap().1);
    let mut plot = Plot::new(x_range, y_range);
    for (io, &(x0, x1)) in o_edges.iter().enumerate() {
        for (iu, &(y0, y1)) in u_edges.iter().enumerate() {
            plot.heat_cell(x0, x1, y0, y1, grid.cell(io, iu).btc);
        }
    }
    plot.finish(
        "Mean max-achievable held-out BTC",
        "tau_o (original threshold)",
        "tau_u (updated threshold)",
    )
}
