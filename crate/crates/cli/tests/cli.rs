use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gaugesim"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("gaugesim-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.toml");
    fs::write(&p, body).unwrap();
    p
}

fn run(args: &[&str], cfg: Option<&Path>, out: &Path) -> Output {
    let mut c = bin();
    c.args(args).arg("--out").arg(out);
    if let Some(cfg) = cfg {
        c.arg("--config").arg(cfg);
    }
    c.output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn load_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn assert_schema(schema: &str, doc: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schema").join(schema);
    let schema = load_json(&path);
    let v = jsonschema::validator_for(&schema).unwrap();
    let errs: Vec<String> = v.iter_errors(doc).map(|e| e.to_string()).collect();
    assert!(errs.is_empty(), "{schema}: {errs:?}");
}

const Z3_CUBE: &str = r#"
[group]
kind = "cyclic"
n = 3
[lattice]
extents = [2, 2, 2]
[evolution]
t = 1.0
steps = 10
order = "first"
[bounds]
side_length = 2
"#;

#[test]
fn bounds_example_and_d3_doubling() {
    let dir = scratch("bounds");
    let o = run(&["bounds"], Some(&write_config(&dir, Z3_CUBE)), &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let z = load_json(&dir.join("bounds.json"));
    assert_schema("bounds.schema.json", &z);
    let first = z["first_order"].as_f64().unwrap();
    assert!((first - 24.3).abs() < 1e-9, "{first}");
    assert!((z["cubic"]["first_order"].as_f64().unwrap() - 24.3).abs() < 1e-9);

    let dir_d = scratch("bounds-d3");
    let cfg = Z3_CUBE.replace("cyclic", "dihedral");
    let o = run(&["bounds"], Some(&write_config(&dir_d, &cfg)), &dir_d);
    assert_eq!(code(&o), 0);
    let d = load_json(&dir_d.join("bounds.json"));
    assert!((d["first_order"].as_f64().unwrap() - 2.0 * first).abs() < 1e-9);
}

#[test]
fn bounds_measures_small_instances() {
    let dir = scratch("bounds-small");
    let cfg = "[group]\nkind = \"cyclic\"\nn = 3\n[lattice]\nextents = [2]\n";
    let o = run(&["bounds"], Some(&write_config(&dir, cfg)), &dir);
    assert_eq!(code(&o), 0);
    let doc = load_json(&dir.join("bounds.json"));
    assert_schema("bounds.schema.json", &doc);
    let ms = doc["measured_commutators"].as_array().unwrap();
    assert_eq!(ms.len(), 13);
    for m in ms {
        assert!(m["measured"].as_f64().unwrap() <= m["bound"].as_f64().unwrap() + 1e-9);
    }
}

#[test]
fn verify_passes_and_catches_injected_fault() {
    let dir = scratch("verify");
    let o = run(&["verify", "--suite", "group"], None, &dir);
    assert_eq!(code(&o), 0);
    let doc = load_json(&dir.join("verify.json"));
    assert_schema("verify.schema.json", &doc);
    assert_eq!(doc["passed"], Value::Bool(true));

    let o = run(&["verify", "--suite", "stator", "--inject-fault", "theta-left-sign"], None, &dir);
    assert_eq!(code(&o), 1);
    let doc = load_json(&dir.join("verify.json"));
    assert_schema("verify.schema.json", &doc);
    assert_eq!(doc["passed"], Value::Bool(false));
    assert!(stdout(&o).contains("FAIL [stator]"));
}

#[test]
fn verify_trotter_reports_slopes() {
    let dir = scratch("verify-trotter");
    let o = run(&["verify", "--suite", "trotter"], None, &dir);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let doc = load_json(&dir.join("verify.json"));
    assert_schema("verify.schema.json", &doc);
    let slopes = doc["slopes"].as_array().unwrap();
    assert_eq!(slopes.len(), 2);
    assert!(stdout(&o).contains("slope"));
}

const Z2_SQUARE: &str = r#"
[group]
kind = "cyclic"
n = 2
[lattice]
extents = [2, 2]
[evolution]
t = 0.5
steps = 4
[compare]
steps = [2, 4, 8]
"#;

#[test]
fn compare_rows_within_bounds() {
    let dir = scratch("compare");
    let o = run(&["compare"], Some(&write_config(&dir, Z2_SQUARE)), &dir);
    assert_eq!(code(&o), 0);
    let doc = load_json(&dir.join("compare.json"));
    assert_schema("compare.schema.json", &doc);
    let csv = fs::read_to_string(dir.join("compare.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("order,steps,error,bound,ratio"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').skip(2).map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| r[0] <= r[1]));
    let s = stdout(&o);
    assert!(s.contains("slope (First order)") && s.contains("slope (Second order)"));
}

#[test]
fn compare_with_empty_steps_is_a_usage_error() {
    let dir = scratch("compare-empty");
    let cfg = Z2_SQUARE.replace("[2, 4, 8]", "[]");
    let o = run(&["compare"], Some(&write_config(&dir, &cfg)), &dir);
    assert_eq!(code(&o), 2);
    let err: Value = serde_json::from_slice(o.stderr.trim_ascii()).unwrap();
    assert_eq!(err["error"], "config");
}

#[test]
fn simulate_is_deterministic() {
    let a = scratch("sim-a");
    let b = scratch("sim-b");
    let cfg = write_config(&a, Z2_SQUARE);
    assert_eq!(code(&run(&["simulate"], Some(&cfg), &a)), 0);
    assert_eq!(code(&run(&["simulate"], Some(&cfg), &b)), 0);
    let sa = fs::read(a.join("series.csv")).unwrap();
    assert_eq!(sa, fs::read(b.join("series.csv")).unwrap());
    assert_eq!(fs::read(a.join("simulate.json")).unwrap(), fs::read(b.join("simulate.json")).unwrap());
    // header plus one row per step, step 0 included
    assert_eq!(String::from_utf8(sa).unwrap().lines().count(), 1 + 5);
    assert_schema("simulate.schema.json", &load_json(&a.join("simulate.json")));
}

#[test]
fn simulate_vacuum_without_hopping_or_plaquettes_is_stationary() {
    let dir = scratch("sim-vacuum");
    let cfg = format!("{Z2_SQUARE}\n[couplings]\nlambda_gm = 0.0\nlambda_b = 0.0\n");
    let o = run(&["simulate"], Some(&write_config(&dir, &cfg)), &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = load_json(&dir.join("simulate.json"));
    let cols: Vec<&str> = doc["columns"].as_array().unwrap().iter().map(|c| c.as_str().unwrap()).collect();
    let rows = doc["rows"].as_array().unwrap();
    let first = &rows[0];
    for r in rows {
        for (k, name) in cols.iter().enumerate().skip(2) {
            let (x, y) = (r[k].as_f64().unwrap(), first[k].as_f64().unwrap());
            assert!((x - y).abs() < 1e-12, "{name}: {x} vs {y}");
        }
    }
}

#[test]
fn simulate_refuses_oversize_instances() {
    let dir = scratch("sim-big");
    let cfg = write_config(&dir, Z2_SQUARE);
    let o = bin()
        .args(["simulate", "--max-mem", "4096", "--out"])
        .arg(&dir)
        .arg("--config")
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(code(&o), 2);
    let err: Value = serde_json::from_slice(o.stderr.trim_ascii()).unwrap();
    assert_eq!(err["error"], "too_large");
    assert!(err["message"].as_str().unwrap().contains("bytes"));
    assert!(!dir.join("series.csv").exists());
}

#[test]
fn usage_errors_exit_two() {
    let dir = scratch("usage");
    assert_eq!(code(&run(&["simulate"], None, &dir)), 2);
    assert_eq!(code(&bin().arg("frobnicate").output().unwrap()), 2);
    let bad = write_config(&dir, "[group]\nkind = \"cyclic\"\nn = 1\n[lattice]\nextents = [2]\n");
    assert_eq!(code(&run(&["bounds"], Some(&bad), &dir)), 2);
    let unknown = write_config(&dir, "[group]\nkind = \"cyclic\"\nn = 2\nflavour = 3\n[lattice]\nextents = [2]\n");
    assert_eq!(code(&run(&["bounds"], Some(&unknown), &dir)), 2);
}

#[test]
fn shipped_configs_run() {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let dir = scratch("shipped");
    let o = run(&["simulate"], Some(&configs.join("z2_square.toml")), &dir);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let doc = load_json(&dir.join("simulate.json"));
    assert!(doc["max_gauge_violation"].as_f64().unwrap() < 1e-10);
    assert!(doc["min_ancilla_fidelity"].as_f64().unwrap() > 1.0 - 1e-12);
    let o = run(&["bounds"], Some(&configs.join("d3_cube_bounds.toml")), &dir);
    assert_eq!(code(&o), 0);
    let b = load_json(&dir.join("bounds.json"));
    assert_schema("bounds.schema.json", &b);
    assert!(b["measured_commutators"].is_null());
}
