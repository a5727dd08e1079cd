//! End-to-end tests of the `rankcompat` binary: workflows, file formats,
//! exit codes, config resolution, and plot structure.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_rankcompat"))
}

fn run(args: &[&str], dir: &Path) -> Output {
    bin()
        .args(args)
        .current_dir(dir)
        .env_remove("RANKCOMPAT_SEED")
        .output()
        .expect("binary runs")
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// cheap well-formedness check: tags balance and no stray ampersands
fn assert_valid_xml(text: &str) {
    let mut stack: Vec<String> = Vec::new();
    let mut rest = text;
    while let Some(start) = rest.find('<') {
        let end = rest[start..].find('>').expect("unclosed tag") + start;
        let tag = &rest[start + 1..end];
        rest = &rest[end + 1..];
        if tag.starts_with('?') || tag.starts_with('!') || tag.ends_with('/') {
            continue;
        }
        if let Some(name) = tag.strip_prefix('/') {
            assert_eq!(stack.pop().as_deref(), Some(name), "tag mismatch at </{name}>");
        } else {
            let name = tag.split_whitespace().next().unwrap();
            stack.push(name.to_string());
        }
    }
    assert!(stack.is_empty(), "unclosed tags: {stack:?}");
    for (i, _) in text.match_indices('&') {
        assert!(
            text[i..].starts_with("&amp;") || text[i..].starts_with("&lt;")
                || text[i..].starts_with("&gt;"),
            "raw ampersand"
        );
    }
}

const SMALL_DATA: &[&str] = &[
    "gen-data",
    "--n",
    "600",
    "--d",
    "6",
    "--prevalence",
    "0.3",
    "--class-separation",
    "1.0",
    "--noise-features",
    "2",
    "--seed",
    "7",
    "--out",
    "data.csv",
];

#[test]
fn help_exits_zero_for_every_subcommand() {
    for sub in [
        "gen-data",
        "split",
        "train",
        "evaluate",
        "update-experiment",
        "combinatorics",
        "btc-sweep",
    ] {
        let out = bin().args([sub, "--help"]).output().unwrap();
        assert!(out.status.success(), "{sub} --help failed");
        let text = stdout(&out);
        assert!(text.contains("--seed"), "{sub} help misses --seed");
        assert!(text.contains("--config"), "{sub} help misses --config");
    }
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
}

#[test]
fn gen_data_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&run(SMALL_DATA, dir.path()));
    let first = std::fs::read(dir.path().join("data.csv")).unwrap();
    let mut again: Vec<&str> = SMALL_DATA.to_vec();
    again[SMALL_DATA.len() - 1] = "data2.csv";
    assert_success(&run(&again, dir.path()));
    let second = std::fs::read(dir.path().join("data2.csv")).unwrap();
    assert_eq!(first, second);
}

#[test]
fn evaluate_identical_models_reports_rbc_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&run(SMALL_DATA, dir.path()));
    assert_success(&run(
        &[
            "split",
            "--data",
            "data.csv",
            "--n-original",
            "150",
            "--n-updated",
            "300",
            "--seed",
            "1",
            "--out-dir",
            ".",
        ],
        dir.path(),
    ));
    assert_success(&run(
        &[
            "train",
            "--dev",
            "orig_dev.csv",
            "--val",
            "orig_val.csv",
            "--max-epochs",
            "20",
            "--seed",
            "2",
            "--out",
            "model.json",
        ],
        dir.path(),
    ));
    let out = run(
        &[
            "evaluate",
            "--orig",
            "model.json",
            "--updated",
            "model.json",
            "--data",
            "eval.csv",
        ],
        dir.path(),
    );
    assert_success(&out);
    let text = stdout(&out);
    assert!(text.contains("RBC             = 1.000000"), "{text}");
    assert!(text.contains("BTC(tau_o=0.5, tau_u=0.5) = 1.000000"), "{text}");
}

#[test]
fn train_below_alpha_one_without_original_fails_with_data_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_success(&run(SMALL_DATA, dir.path()));
    let out = run(
        &[
            "train",
            "--dev",
            "data.csv",
            "--val",
            "data.csv",
            "--alpha",
            "0.5",
            "--out",
            "m.json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn update_experiment_full_grid_emits_121_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "update-experiment",
            "--n",
            "400",
            "--d",
            "4",
            "--prevalence",
            "0.3",
            "--class-separation",
            "1.2",
            "--noise-features",
            "1",
            "--n-original",
            "100",
            "--n-updated",
            "200",
            "--n-resample",
            "1",
            "--n-shuffle",
            "1",
            "--reg-grid",
            "0.01",
            "--alphas",
            "0..1",
            "--betas",
            "0..1",
            "--replications",
            "2",
            "--max-epochs",
            "10",
            "--seed",
            "5",
            "--out-dir",
            "exp",
        ],
        dir.path(),
    );
    assert_success(&out);
    let summary = std::fs::read_to_string(dir.path().join("exp/summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 1 + 121, "11 alphas x 11 betas");
    assert!(lines[0].starts_with("alpha,beta,mean_drbc,drbc_lo,drbc_hi,mean_dauroc"));

    let svg = std::fs::read_to_string(dir.path().join("exp/scatter.svg")).unwrap();
    assert_valid_xml(&svg);
    // one series for the BCE pool plus one per alpha
    assert_eq!(svg.matches("class=\"series\"").count(), 12);

    let scatter = std::fs::read_to_string(dir.path().join("exp/scatter.csv")).unwrap();
    // 2 replications x (2 BCE + 11 alphas x 1 reg)
    assert_eq!(scatter.lines().count(), 1 + 2 * (2 + 11));
}

#[test]
fn update_experiment_summary_identical_across_jobs() {
    let dir = tempfile::tempdir().unwrap();
    let args = |jobs: &'static str, out: &'static str| {
        vec![
            "update-experiment",
            "--n",
            "400",
            "--d",
            "4",
            "--prevalence",
            "0.3",
            "--class-separation",
            "1.2",
            "--noise-features",
            "1",
            "--n-original",
            "100",
            "--n-updated",
            "200",
            "--n-resample",
            "1",
            "--n-shuffle",
            "1",
            "--reg-grid",
            "0.01",
            "--alphas",
            "0,0.5,1",
            "--betas",
            "0,0.5,1",
            "--replications",
            "3",
            "--max-epochs",
            "10",
            "--seed",
            "9",
            "--jobs",
            jobs,
            "--out-dir",
            out,
        ]
    };
    assert_success(&run(&args("1", "a"), dir.path()));
    assert_success(&run(&args("2", "b"), dir.path()));
    let a = std::fs::read(dir.path().join("a/summary.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b/summary.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn combinatorics_emits_curves_with_peaks_at_updated_auroc() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "combinatorics",
            "--m",
            "400",
            "--auroc-o",
            "0.65",
            "--auroc-u",
            "0.65,0.75,0.85,0.95",
            "--out-dir",
            "comb",
        ],
        dir.path(),
    );
    assert_success(&out);
    let text = stdout(&out);
    for peak in ["peak at rbc=0.6500", "peak at rbc=0.7500", "peak at rbc=0.8500", "peak at rbc=0.9500"] {
        assert!(text.contains(peak), "{text}");
    }
    let svg = std::fs::read_to_string(dir.path().join("comb/nu_curves.svg")).unwrap();
    assert_valid_xml(&svg);
    assert_eq!(svg.matches("<polyline").count(), 4);

    let csv = std::fs::read_to_string(dir.path().join("comb/nu_curves.csv")).unwrap();
    assert!(csv.starts_with("auroc_u,k,rbc,log10_count\n"));
}

#[test]
fn btc_sweep_grid_dimensions_and_heatmap() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "btc-sweep",
            "--n",
            "400",
            "--d",
            "4",
            "--prevalence",
            "0.3",
            "--class-separation",
            "1.2",
            "--noise-features",
            "1",
            "--n-original",
            "100",
            "--n-updated",
            "200",
            "--n-resample",
            "1",
            "--n-shuffle",
            "1",
            "--reg-grid",
            "0.01",
            "--replications",
            "2",
            "--max-epochs",
            "10",
            "--tau-o-grid",
            "0,0.5,0.9",
            "--tau-u-grid",
            "0.25,0.75",
            "--seed",
            "3",
            "--out-dir",
            "btc",
        ],
        dir.path(),
    );
    assert_success(&out);
    let csv = std::fs::read_to_string(dir.path().join("btc/btc_grid.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2, "|tau_o| x |tau_u| cells");
    assert!(csv.starts_with("tau_o,tau_u,state,btc,acc_orig,acc_upd\n"));
    let svg = std::fs::read_to_string(dir.path().join("btc/btc_grid.svg")).unwrap();
    assert_valid_xml(&svg);
    assert_eq!(svg.matches("<rect").count() >= 6, true);
}

#[test]
fn config_file_provides_defaults_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{ "synth": { "n": 120, "d": 3, "prevalence": 0.4, "class_separation": 0.9, "noise_features": 1, "shift": 0.0, "seed": 11 } }"#,
    )
    .unwrap();
    let out = run(
        &[
            "gen-data",
            "--config",
            "cfg.json",
            "--d",
            "5",
            "--out",
            "from_cfg.csv",
        ],
        dir.path(),
    );
    assert_success(&out);
    // resolved config echoed to stderr, with the flag override applied
    let err = stderr(&out);
    assert!(err.contains("resolved gen-data config"), "{err}");
    assert!(err.contains("\"d\":5"), "{err}");
    assert!(err.contains("\"n\":120"), "{err}");
    assert!(err.contains("\"seed\":11"), "{err}");
    let text = std::fs::read_to_string(dir.path().join("from_cfg.csv")).unwrap();
    assert!(text.starts_with("y,f0,f1,f2,f3,f4\n"));
    assert_eq!(text.lines().count(), 1 + 120);

    let bad = run(&["gen-data", "--config", "missing.json", "--out", "x.csv"], dir.path());
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn env_seed_is_a_fallback() {
    let dir = tempfile::tempdir().unwrap();
    let mut with_env = bin();
    with_env
        .args(["gen-data", "--n", "50", "--d", "2", "--noise-features", "0", "--out", "env.csv"])
        .current_dir(dir.path())
        .env("RANKCOMPAT_SEED", "7");
    assert_success(&with_env.output().unwrap());

    let with_flag: Vec<&str> = vec![
        "gen-data", "--n", "50", "--d", "2", "--noise-features", "0", "--seed", "7", "--out",
        "flag.csv",
    ];
    assert_success(&run(&with_flag, dir.path()));

    let env_bytes = std::fs::read(dir.path().join("env.csv")).unwrap();
    let flag_bytes = std::fs::read(dir.path().join("flag.csv")).unwrap();
    assert_eq!(env_bytes, flag_bytes);

    let bad_env = bin()
        .args(["gen-data", "--n", "10", "--d", "2", "--noise-features", "0", "--out", "bad.csv"])
        .current_dir(dir.path())
        .env("RANKCOMPAT_SEED", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(bad_env.status.code(), Some(1));
}

#[test]
fn exit_codes_by_error_class() {
    let dir = tempfile::tempdir().unwrap();
    // usage: unknown flag
    let out = run(&["gen-data", "--frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    // data: missing input file
    let out = run(
        &["evaluate", "--orig", "nope.json", "--updated", "nope.json", "--data", "nope.csv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    // numeric: infeasible AUROC-to-count conversion
    let out = run(
        &["combinatorics", "--auroc-o", "1.5", "--out-dir", "x"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}
