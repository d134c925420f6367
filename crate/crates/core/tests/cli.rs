use std::path::{Path, PathBuf};
use std::process::Command;

use hetreg::cli::main_with_args;
use hetreg::train::ModelBundle;
use tempfile::TempDir;

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("hetreg").chain(args.iter().copied()))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate(dir: &Path, seed: &str, n: &str) -> PathBuf {
    let out = dir.join(format!("gen-{seed}-{n}"));
    assert_eq!(run(&["generate", "--seed", seed, "--n", n, "--out", s(&out)]), 0);
    out
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn generate_is_byte_identical_and_self_describing() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for out in [&a, &b] {
        assert_eq!(
            run(&["generate", "--seed", "7", "--n", "3000", "--out", s(out)]),
            0
        );
    }
    for f in ["corpus.csv", "truth.csv", "generator.toml"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "generate");
    assert_eq!(manifest["seeds"]["generator"], 7);
    for f in manifest["outputs"].as_array().unwrap() {
        assert!(a.join(f.as_str().unwrap()).is_file(), "{f}");
    }
}

#[test]
fn strength_one_corpus_has_constant_truth_sd() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("control");
    assert_eq!(
        run(&[
            "generate",
            "--n",
            "2000",
            "--hetero-strength",
            "1",
            "--out",
            s(&out)
        ]),
        0
    );
    let truth = hetreg::data::read_truth(std::fs::File::open(out.join("truth.csv")).unwrap()).unwrap();
    assert!(truth.iter().all(|t| (t.sd_hours - 0.5).abs() < 1e-12));
}

#[test]
fn invalid_config_exits_with_config_code_naming_the_field() {
    let tmp = TempDir::new().unwrap();
    let cfg = tmp.path().join("bad.toml");
    std::fs::write(&cfg, "[generator]\nmissing_fraction = 1.5\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hetreg"))
        .args(["generate", "--config", s(&cfg), "--out", s(&tmp.path().join("x"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing_fraction"));

    std::fs::write(&cfg, "[generator]\nbogus = 1\n").unwrap();
    assert_eq!(
        run(&["generate", "--config", s(&cfg), "--out", s(&tmp.path().join("y"))]),
        2
    );
    assert_eq!(
        run(&[
            "generate",
            "--hetero-strength",
            "0.5",
            "--out",
            s(&tmp.path().join("z"))
        ]),
        2
    );
}

#[test]
fn missing_inputs_exit_with_data_code() {
    let tmp = TempDir::new().unwrap();
    let none = tmp.path().join("none");
    assert_eq!(
        run(&["train", "--corpus", s(&none), "--out", s(&tmp.path().join("t"))]),
        3
    );
    assert_eq!(
        run(&[
            "eval",
            "--bundle",
            s(&none),
            "--corpus",
            s(&none),
            "--out",
            s(&tmp.path().join("e"))
        ]),
        3
    );
}

#[test]
fn homoscedastic_gamma_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let corpus = generate(tmp.path(), "1", "500");
    let out = tmp.path().join("t");
    assert_eq!(
        run(&[
            "train",
            "--corpus",
            s(&corpus),
            "--head",
            "gamma-homo",
            "--out",
            s(&out)
        ]),
        2
    );
    assert!(!out.join("bundle.json").exists());
}

#[test]
fn gamma_run_reloads_bit_exactly_and_grid_writes_results() {
    let tmp = TempDir::new().unwrap();
    let corpus = generate(tmp.path(), "3", "1500");
    let out = tmp.path().join("train");
    let args = [
        "train",
        "--corpus",
        s(&corpus),
        "--head",
        "gamma",
        "--grid",
        "--epochs",
        "1",
        "--out",
        s(&out),
    ];
    assert_eq!(run(&args), 0);

    let text = std::fs::read_to_string(out.join("bundle.json")).unwrap();
    let bundle = ModelBundle::from_json(&text).unwrap();
    assert_eq!(bundle.to_json().unwrap(), text);
    let names: Vec<&str> = bundle.models.iter().map(|m| m.name.as_str()).collect();
    assert_eq!(
        names,
        ["current-method", "procedure-means", "linear", "mlp-gamma-hetero"]
    );

    let (header, rows) = read_csv(&out.join("grid_results.csv"));
    assert_eq!(header[..3], ["model", "hidden_layers", "hidden_width"]);
    assert_eq!(rows.len(), 12);
    assert_eq!(rows.iter().filter(|r| r[5] == "true").count(), 1);

    let (_, log) = read_csv(&out.join("training_log.csv"));
    assert!(log.iter().any(|r| r[0] == "mlp-gamma-hetero"));
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains(&bundle.schema_hash));
}

#[test]
fn eval_booking_and_ablate_write_their_tables() {
    let tmp = TempDir::new().unwrap();
    let corpus = generate(tmp.path(), "5", "2000");
    let model = tmp.path().join("train");
    let heads = ["--head", "gaussian", "--head", "laplace-homo"];
    let mut args = vec![
        "train",
        "--corpus",
        s(&corpus),
        "--epochs",
        "2",
        "--out",
        s(&model),
    ];
    args.extend(heads);
    assert_eq!(run(&args), 0);

    let eval = tmp.path().join("eval");
    let args = [
        "eval",
        "--bundle",
        s(&model),
        "--corpus",
        s(&corpus),
        "--booking",
        "percentile",
        "--ablate",
        "--out",
        s(&eval),
    ];
    assert_eq!(run(&args), 0);
    let (header, rows) = read_csv(&eval.join("metrics.csv"));
    assert_eq!(
        header,
        [
            "model",
            "rmse_minutes",
            "mae_minutes",
            "nll_nats",
            "nll_delta_vs_baseline"
        ]
    );
    let names: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(
        names,
        [
            "current-method",
            "procedure-means",
            "linear",
            "mlp-gaussian-hetero",
            "mlp-laplace-homo"
        ]
    );
    assert_eq!(rows[0][4].parse::<f64>().unwrap(), 0.0);

    let (_, curve) = read_csv(&eval.join("booking_curve.csv"));
    assert!(curve.iter().all(|r| r[1] == "percentile"));
    for name in &names {
        let pts: Vec<(f64, f64)> = curve
            .iter()
            .filter(|r| r[0] == *name)
            .map(|r| (r[3].parse().unwrap(), r[4].parse().unwrap()))
            .collect();
        assert_eq!(pts.len(), 19);
        for w in pts.windows(2) {
            assert!(w[1].0 >= w[0].0 && w[1].1 <= w[0].1, "{name}");
        }
    }

    let (_, abl) = read_csv(&eval.join("ablation.csv"));
    let groups = abl.iter().filter(|r| r[0] == "mlp-gaussian-hetero").count();
    assert!(groups >= 10);
    assert_eq!(abl.len(), 2 * groups);
    assert!(abl.iter().any(|r| r[1] == "procedure"));

    let book = tmp.path().join("book");
    let args = [
        "booking",
        "--bundle",
        s(&model),
        "--corpus",
        s(&corpus),
        "--cost-under",
        "3",
        "--out",
        s(&book),
    ];
    assert_eq!(run(&args), 0);
    let (_, optima) = read_csv(&book.join("booking_optima.csv"));
    assert_eq!(optima.len(), 5 * 3);

    let abl_only = tmp.path().join("abl");
    let args = [
        "ablate",
        "--bundle",
        s(&model),
        "--corpus",
        s(&corpus),
        "--model",
        "linear",
        "--out",
        s(&abl_only),
    ];
    assert_eq!(run(&args), 2);
}

#[test]
fn pipeline_reports_are_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let mut reports = Vec::new();
    for run_id in ["one", "two"] {
        let root = tmp.path().join(run_id);
        let corpus = generate(&root, "11", "1500");
        let model = root.join("train");
        let args = [
            "train",
            "--corpus",
            s(&corpus),
            "--head",
            "laplace",
            "--epochs",
            "2",
            "--out",
            s(&model),
        ];
        assert_eq!(run(&args), 0);
        let eval = root.join("eval");
        assert_eq!(
            run(&[
                "eval",
                "--bundle",
                s(&model),
                "--corpus",
                s(&corpus),
                "--out",
                s(&eval)
            ]),
            0
        );
        reports.push(std::fs::read(eval.join("report.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}
