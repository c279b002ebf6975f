use std::path::Path;
use std::process::{Command, Output};

use ustat_core::bounds::{abcd_params, quantile_t0};
use ustat_core::cli::{run, EXIT_FAILED, EXIT_INFEASIBLE, EXIT_OK, EXIT_USAGE};
use ustat_core::exact::{exact_distribution, moment, Exact, MomentKind};
use ustat_core::model::{sum_instance, DiscreteDistribution, UStatInstance};
use ustat_core::suite::{fit_constant, CheckArgs, CorpusItem, CSV_HEADER};

fn ustat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ustat")).args(args).output().expect("spawn ustat")
}

/// In-process run: (exit code, stdout, stderr).
fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = run(std::iter::once("ustat").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, family: &str, m: &str, n: &str, atoms: &str, seed: &str) -> std::path::PathBuf {
    let file = dir.join(name);
    let (code, _, err) = call(&["gen", "--family", family, "--m", m, "--n", n, "--atoms", atoms, "--seed", seed, "-o", path(&file)]);
    assert_eq!(code, EXIT_OK, "{err}");
    file
}

#[test]
fn generate_then_verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    let out = ustat(&["gen", "--family", "nonneg", "--m", "2", "--n", "2", "--atoms", "2", "--seed", "7", "-o", path(&inst)]);
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let out = ustat(&["verify", path(&inst), "--ineq", "MIXED_SUM_UPPER", "--p", "3"]);
    assert_eq!(out.status.code(), Some(EXIT_OK), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 1);
    assert_eq!(lines[0]["case"], "MIXED_SUM_UPPER");
    assert_eq!(lines[0]["pass"], true);
}

#[test]
fn canonical_case_on_nonnegative_instance_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let inst = gen(dir.path(), "nn.json", "nonneg", "2", "2", "2", "7");
    let out = ustat(&["verify", path(&inst), "--ineq", "KHINCHIN_UPPER"]);
    assert_eq!(out.status.code(), Some(EXIT_USAGE));
    assert!(String::from_utf8_lossy(&out.stderr).contains("canonical"));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(dir.path(), "a.json", "canonical", "2", "3", "2", "3");
    let b = gen(dir.path(), "b.json", "canonical", "2", "3", "2", "3");
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let verify = |threads: &str| call(&["verify", path(&a), "--threads", threads, "--ineq", "KHINCHIN_UPPER", "--ineq", "ABCD_MOMENT"]);
    let (c1, o1, e1) = verify("1");
    let (c2, o2, e2) = verify("3");
    assert_eq!(c1, EXIT_OK);
    assert_eq!((c1, &o1, &e1), (c2, &o2, &e2));
    let sim = |threads: &str| call(&["simulate", "--input", path(&a), "--reps", "5000", "--seed", "4", "--threads", threads, "--form", "four-regime"]);
    let (s1, t1, _) = sim("1");
    let (s2, t2, _) = sim("2");
    assert_eq!(s1, EXIT_OK);
    assert_eq!(t1, t2);
    let report: serde_json::Value = serde_json::from_str(&t1).unwrap();
    assert_eq!(report["fitted"], true);
    assert_eq!(report["majorizes"], true);
}

#[test]
fn bounds_prints_library_values() {
    let dir = tempfile::tempdir().unwrap();
    let file = gen(dir.path(), "c.json", "canonical", "2", "3", "3", "1");
    let (code, out, _) = call(&["bounds", path(&file), "--p", "4", "--q", "0.25"]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    let inst = UStatInstance::from_path(&file).unwrap();
    let params = abcd_params(&inst).unwrap();
    let dist = exact_distribution(&inst).unwrap();
    assert_eq!(doc["params"]["A"].as_f64(), Some(params.a));
    assert_eq!(doc["params"]["B"].as_f64(), Some(params.b));
    assert_eq!(doc["params"]["C"].as_f64(), Some(params.c));
    assert_eq!(doc["params"]["D"].as_f64(), Some(params.d));
    assert_eq!(doc["t0"].as_f64(), Some(quantile_t0(&dist, 0.25).unwrap()));
    assert_eq!(doc["moment"].as_f64(), Some(moment(&dist, 4.0, MomentKind::Absolute).unwrap()));
}

#[test]
fn bounds_reports_order_one_fixed_points() {
    let dir = tempfile::tempdir().unwrap();
    let file = gen(dir.path(), "s.json", "nonneg", "1", "4", "3", "2");
    let (code, out, _) = call(&["bounds", path(&file)]);
    assert_eq!(code, EXIT_OK);
    let doc: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(doc["delta0"].as_f64().is_some());
    assert!(doc["v0"].as_f64().unwrap() > 0.0);
}

#[test]
fn fit_prints_library_constant() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<_> = (0..3).map(|s| gen(dir.path(), &format!("k{s}.json"), "canonical", "2", "2", "2", &s.to_string())).collect();
    let mut args = vec!["fit", "--ineq", "ABCD_MOMENT", "--p", "4"];
    args.extend(files.iter().map(|f| path(f)));
    let (code, out, err) = call(&args);
    assert_eq!(code, EXIT_OK, "{err}");
    let corpus: Vec<CorpusItem> = files
        .iter()
        .map(|f| CorpusItem::instance(f.display().to_string(), UStatInstance::from_path(f).unwrap()))
        .collect();
    let k = fit_constant("ABCD_MOMENT", &corpus, &CheckArgs::p(4.0), Exact::default()).unwrap();
    assert_eq!(out.trim().parse::<f64>().unwrap(), k);
}

#[test]
fn verify_writes_csv_and_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, jsonl) = (dir.path().join("r.csv"), dir.path().join("r.jsonl"));
    let (code, out, _) = call(&[
        "verify", "--family", "canonical", "--m", "2", "--n", "2", "--seeds", "0..3", "--ineq", "KHINCHIN_LOWER", "--p", "2",
        "--p", "4", "--csv", path(&csv), "--jsonl", path(&jsonl),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next().unwrap(), CSV_HEADER.join(","));
    assert_eq!(text.lines().count(), 1 + 6);
    assert_eq!(std::fs::read_to_string(&jsonl).unwrap().lines().count(), 6);
}

#[test]
fn infeasible_enumeration_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let file = gen(dir.path(), "big.json", "nonneg", "2", "3", "3", "1");
    let (code, _, err) = call(&["verify", path(&file), "--cap", "10", "--ineq", "MIXED_SUM_UPPER", "--p", "2"]);
    assert_eq!(code, EXIT_INFEASIBLE);
    assert!(err.contains("cap"), "{err}");
    let (code, _, _) = call(&["bounds", path(&file), "--cap", "10"]);
    assert_eq!(code, EXIT_INFEASIBLE);
}

#[test]
fn failing_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("one.json");
    // single summand identically 1: the quantile form fails at small p
    std::fs::write(&file, sum_instance(vec![DiscreteDistribution::point_mass(1.0)]).unwrap().to_json_string()).unwrap();
    let (code, out, err) = call(&["verify", path(&file), "--ineq", "HOFFMANN_QUANTILE", "--p", "0.1"]);
    assert_eq!(code, EXIT_FAILED, "{out}{err}");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(call(&["gen", "--family", "nonneg", "--m", "2", "--n", "2"]).0, EXIT_USAGE);
    assert_eq!(call(&["simulate", "--bernoulli-product", "5"]).0, EXIT_USAGE);
    assert_eq!(call(&["verify", "--bogus"]).0, EXIT_USAGE);
    assert_eq!(call(&["gen", "--family", "nope", "--m", "1", "--n", "1", "--seed", "1"]).0, EXIT_USAGE);
    assert_eq!(call(&["verify"]).0, EXIT_USAGE);
    assert_eq!(call(&["verify", "--m", "1", "--n", "2", "--seeds", "3..3"]).0, EXIT_USAGE);
    assert_eq!(call(&["--help"]).0, EXIT_OK);
}

#[test]
fn schema_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let good = gen(dir.path(), "good.json", "nonneg", "1", "2", "2", "5");
    let mut doc: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&good).unwrap()).unwrap();
    doc["variables"][0][1]["probs"] = serde_json::json!([0.5, 0.4]);
    let file = dir.path().join("bad.json");
    std::fs::write(&file, doc.to_string()).unwrap();
    let (code, _, err) = call(&["bounds", path(&file)]);
    assert_eq!(code, EXIT_USAGE);
    assert!(err.contains("variables[0][1].probs"), "{err}");
}
