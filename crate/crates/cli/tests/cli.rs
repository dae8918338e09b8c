use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn sustain(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sustain"))
        .args(args)
        .env_remove("SUSTAIN_REPORT_DIR")
        .output()
        .expect("binary runs")
}

fn report(args: &[&str]) -> (i32, Value) {
    let out = sustain(args);
    let code = out.status.code().unwrap();
    let json = serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)));
    (code, json)
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn param(fit: &Value, name: &str) -> f64 {
    fit["parameters"]
        .as_array()
        .unwrap()
        .iter()
        .find(|p| p["name"] == name)
        .unwrap()["value"]
        .as_f64()
        .unwrap()
}

#[test]
fn sigmoid_fit_on_product_a() {
    let (code, r) = report(&[
        "fit",
        "--builtin",
        "product_a",
        "--model",
        "sigmoid",
        "--fix",
        "kappa_0=1",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["command"], "fit");
    assert_eq!(r["input"]["name"], "product_a");
    let fit = &r["fits"][0];
    assert!(param(fit, "kappa_inf") > 0.0);
    assert_eq!(fit["parameters"][1]["fixed"], true);
    assert_eq!(r["bands"][0]["points"].as_array().unwrap().len(), 200);
    assert_eq!(r["safe_load"][0]["service_life_h"], 438000.0);
    assert!(r["warnings"].is_array());
}

#[test]
fn logarithmic_fit_signs() {
    let (code, r) = report(&["fit", "--builtin", "product_a", "--model", "logarithmic"]);
    assert_eq!(code, 0);
    assert!(param(&r["fits"][0], "a") < 0.0);
    assert!(param(&r["fits"][0], "b") > 0.0);
}

#[test]
fn unknown_model_is_a_usage_error() {
    let out = sustain(&["fit", "--builtin", "product_a", "--model", "cubic"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown model"));
}

#[test]
fn missing_file_is_an_io_error() {
    let out = sustain(&[
        "fit",
        "--csv",
        "/nonexistent/ttf.csv",
        "--model",
        "logarithmic",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn fit_failure_exits_two_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("two.csv");
    std::fs::write(&csv, "load_level,failure_time_h\n0.8,1\n0.6,100\n").unwrap();
    let (code, r) = report(&[
        "fit",
        "--csv",
        csv.to_str().unwrap(),
        "--model",
        "rate_theory",
    ]);
    assert_eq!(code, 2);
    assert_eq!(r["error"]["kind"], "insufficient_points");
    assert!(r["fits"].is_null());
}

#[test]
fn compare_ranks_all_families() {
    let (code, r) = report(&["compare", "--builtin", "product_c", "--models", "all"]);
    assert_eq!(code, 0);
    let rows = r["ranking"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let sse: Vec<f64> = rows
        .iter()
        .map(|x| x["load_sse"].as_f64().unwrap())
        .collect();
    assert!(sse.windows(2).all(|w| w[0] <= w[1]));
    // The negative sigmoid asymptote on this product is flagged.
    assert!(r["warnings"]
        .as_array()
        .unwrap()
        .iter()
        .any(|w| w.as_str().unwrap().contains("non-physical")));
}

#[test]
fn extrapolate_given_parameters() {
    let (code, r) = report(&[
        "extrapolate",
        "--service-life-years",
        "50",
        "--model",
        "logarithmic",
        "--params",
        "a=-0.05,b=1.0",
    ]);
    assert_eq!(code, 0);
    let y = r["safe_load"][0]["load_level"].as_f64().unwrap();
    assert!((y - (1.0 - 0.05 * 438_000f64.ln())).abs() < 1e-15);
    assert!((y - 0.350_501_3).abs() < 1e-7);
}

#[test]
fn extrapolate_from_a_fit() {
    let (code, r) = report(&[
        "extrapolate",
        "--builtin",
        "product_a",
        "--model",
        "sigmoid",
        "--fix",
        "kappa_inf=0.2",
        "--service-life-years",
        "50",
        "--service-life-years",
        "100",
    ]);
    assert_eq!(code, 0);
    let rows = r["safe_load"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1]["service_life_h"], 876000.0);
    assert!(rows[1]["load_level"].as_f64() < rows[0]["load_level"].as_f64());
}

#[test]
fn extrapolate_rejects_incomplete_parameters() {
    let out = sustain(&[
        "extrapolate",
        "--service-life-years",
        "50",
        "--model",
        "sigmoid",
        "--params",
        "b=1",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn rate_sensitivity_reports() {
    let p1 = data("p1_rates.csv");
    let (code, r) = report(&[
        "rate",
        "--csv",
        p1.to_str().unwrap(),
        "--diameter",
        "16",
        "--embedment",
        "75",
    ]);
    assert_eq!(code, 0);
    let e = r["rate"]["exponent"].as_f64().unwrap();
    assert!((e - 0.048).abs() <= 0.003);
    let ppd = r["rate"]["percent_per_decade"].as_f64().unwrap();
    assert!((ppd - (10f64.powf(e) - 1.0)).abs() < 1e-15);
    assert_eq!(r["rate"]["bond_strength"].as_array().unwrap().len(), 3);

    let p2 = data("p2_rates.csv");
    let (_, r) = report(&["rate", "--csv", p2.to_str().unwrap()]);
    assert!((r["rate"]["exponent"].as_f64().unwrap() - 0.027).abs() <= 0.003);
}

fn write_record(path: &Path) -> f64 {
    let bp = 8f64.exp();
    let mut text = String::from("time_s,displacement_mm,load_kN\n");
    for i in 0..5600 {
        let t = i as f64;
        let d = if t == 0.0 {
            0.0
        } else if t < bp {
            0.01 * t.ln()
        } else {
            0.01 * bp.ln() + 0.2 * (t.ln() - bp.ln())
        };
        let load = if t < 4100.0 { 100.0 } else { 55.0 };
        text.push_str(&format!("{t},{d},{load}\n"));
    }
    std::fs::write(path, text).unwrap();
    bp
}

#[test]
fn detection_methods() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("record.csv");
    let bp = write_record(&rec);
    let rec = rec.to_str().unwrap();

    let (code, r) = report(&[
        "detect", "--csv", rec, "--method", "pressure", "--target", "100",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["detection"]["failure_time_s"], 4100.0);

    let (code, r) = report(&[
        "detect",
        "--csv",
        rec,
        "--method",
        "intersection",
        "--target",
        "100",
    ]);
    assert_eq!(code, 0);
    let t = r["detection"]["failure_time_s"].as_f64().unwrap();
    assert!((t - bp).abs() / bp < 0.02, "{t}");
    assert_eq!(r["detection"]["pressure_drop_s"], 4100.0);
    assert!((r["detection"]["failure_time_h"].as_f64().unwrap() - t / 3600.0).abs() < 1e-15);
}

#[test]
fn censored_record_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let rec = dir.path().join("held.csv");
    let mut text = String::from("time_s,load_kN\n");
    for i in 0..100 {
        text.push_str(&format!("{i},{}\n", 100.0 + (i % 3) as f64 * 0.5));
    }
    std::fs::write(&rec, text).unwrap();
    let (code, r) = report(&[
        "detect",
        "--csv",
        rec.to_str().unwrap(),
        "--method",
        "pressure",
        "--target",
        "100",
    ]);
    assert_eq!(code, 2);
    assert_eq!(r["error"]["kind"], "no_failure");
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    for cmd in [
        vec!["fit", "--builtin", "product_b", "--model", "rate_theory"],
        vec!["compare", "--builtin", "product_a"],
    ] {
        let mut args = cmd.clone();
        args.extend(["--out", path.to_str().unwrap()]);
        let mut runs = Vec::new();
        for _ in 0..2 {
            assert_eq!(sustain(&args).status.code(), Some(0));
            runs.push(std::fs::read_to_string(&path).unwrap());
        }
        let strip = |s: &str| {
            s.lines()
                .filter(|l| !l.contains("\"timestamp\""))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&runs[0]), strip(&runs[1]));
        assert!(runs[0].contains("\"timestamp\""));
    }
}

#[test]
fn curve_samples() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let out = sustain(&[
        "fit",
        "--builtin",
        "product_a",
        "--model",
        "logarithmic",
        "--curve-out",
        curve.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&curve).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t_h,y_fit,y_lower,y_upper"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 200);
    assert!((rows[0][0] - 0.012).abs() < 1e-15);
    assert_eq!(rows[199][0], 438_000.0);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert!(rows.iter().all(|r| r[2] <= r[1] && r[1] <= r[3]));
}

#[test]
fn report_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_sustain"))
        .args(["fit", "--builtin", "product_c", "--model", "power_law"])
        .env("SUSTAIN_REPORT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let path = dir.path().join("fit-product_c-power_law.json");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["fits"][0]["residual_domain"], "log_y_log_t");
}

#[test]
fn censored_points_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("running.csv");
    std::fs::write(
        &csv,
        "# id=lab\nload_level,failure_time_h,censored\n0.8,0.5,false\n0.7,20,false\n0.6,900,false\n0.6,2000,true\n",
    )
    .unwrap();
    let (code, r) = report(&[
        "fit",
        "--csv",
        csv.to_str().unwrap(),
        "--model",
        "logarithmic",
    ]);
    assert_eq!(code, 0);
    assert_eq!(r["fits"][0]["n_points"], 3);
    assert!(r["warnings"]
        .as_array()
        .unwrap()
        .iter()
        .any(|w| w.as_str().unwrap().contains("censored")));
}

#[test]
fn exported_builtin_fits_identically() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    let out = sustain(&[
        "dataset",
        "export",
        "--builtin",
        "product_b",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let (_, from_file) = report(&["fit", "--csv", csv.to_str().unwrap(), "--model", "sigmoid"]);
    let (_, builtin) = report(&["fit", "--builtin", "product_b", "--model", "sigmoid"]);
    assert_eq!(from_file["fits"], builtin["fits"]);

    let (code, shown) = report(&["dataset", "show", "--csv", csv.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(shown["dataset"]["points"], 8);
    assert_eq!(shown["dataset"]["id"], "product_b");
}
