use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn synergy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synergy"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = synergy(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn exit_code(args: &[&str]) -> i32 {
    synergy(args).status.code().expect("exited normally")
}

fn gen_gate(dir: &TempDir, name: &str) -> PathBuf {
    let path = dir.path().join(format!("{name}.json"));
    ok(&["gen", "--gate", name, "--out", s(&path)]);
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_sources(dir: &TempDir, name: &str, alphabets: &[usize], probs: &[f64]) -> PathBuf {
    // sources only: a one-symbol target
    let path = dir.path().join(name);
    let doc = serde_json::json!({ "source_alphabets": alphabets, "target_alphabet": 1, "probs": probs });
    fs::write(&path, doc.to_string()).unwrap();
    path
}

/// Parses `node,cumulative,atom` or `level,node,cumulative,atom` CSV into
/// rows of strings.
fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(str::to_owned).collect()).collect()
}

fn atom(rows: &[Vec<String>], node: &str) -> f64 {
    let row = rows.iter().find(|r| r[0] == node).unwrap_or_else(|| panic!("no row {node}"));
    row[2].parse().unwrap()
}

#[test]
fn synergy_values_for_reference_gates() {
    let dir = TempDir::new().unwrap();
    let xor = gen_gate(&dir, "xor");
    let and = gen_gate(&dir, "and");
    assert_eq!(ok(&["synergy", "--dist", s(&xor), "--alpha", "{1}{2}"]).trim(), "1.000000");
    assert_eq!(ok(&["synergy", "--dist", s(&and), "--alpha", "{1}{2}"]).trim(), "0.311278");
    assert_eq!(ok(&["synergy", "--dist", s(&and), "--alpha", "{12}"]).trim(), "0.000000");
    assert_eq!(ok(&["synergy", "--dist", s(&xor), "--alpha", "{12}"]).trim(), "0.000000");
    assert_eq!(
        ok(&["synergy", "--dist", s(&xor), "--alpha", "{1}{2}", "--objective", "tv"]).trim(),
        "0.500000"
    );
}

#[test]
fn channel_and_lp_dumps() {
    let dir = TempDir::new().unwrap();
    let xor = gen_gate(&dir, "xor");
    let ch = dir.path().join("ch.json");
    let lp = dir.path().join("lp.json");
    ok(&[
        "synergy", "--dist", s(&xor), "--alpha", "{1}{2}", "--emit-channel", s(&ch), "--dump-lp", s(&lp),
    ]);
    let doc: Value = serde_json::from_str(&fs::read_to_string(&ch).unwrap()).unwrap();
    assert_eq!(doc["verified"], Value::Bool(true));
    let weights: Vec<f64> = serde_json::from_value(doc["weights"].clone()).unwrap();
    assert!((weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    assert_eq!(doc["reverse_channel"].as_array().unwrap().len(), weights.len());
    let dump: Value = serde_json::from_str(&fs::read_to_string(&lp).unwrap()).unwrap();
    assert!(dump["vertices"].as_array().unwrap().len() >= 2);
    assert!(dump["solution"]["tableau"].is_array());
}

#[test]
fn decompose_tbc_matches_reference_atoms() {
    let dir = TempDir::new().unwrap();
    let tbc = gen_gate(&dir, "tbc");
    let rows = csv_rows(&ok(&["decompose", "--dist", s(&tbc)]));
    assert!((atom(&rows, "{1}{2}") - 1.0).abs() < 1e-9);
    assert!((atom(&rows, "{}") - 1.0).abs() < 1e-9);
    assert!(atom(&rows, "{1}").abs() < 1e-9);
    assert!(atom(&rows, "{2}").abs() < 1e-9);
    let total = rows.last().unwrap();
    assert_eq!(total[0], "total");
    let i: f64 = total[1].parse().unwrap();
    let sum: f64 = total[2].parse().unwrap();
    assert!((i - 2.0).abs() < 1e-12 && (sum - 2.0).abs() < 1e-9);
}

#[test]
fn decompose_copy_backbone() {
    let dir = TempDir::new().unwrap();
    let copy = gen_gate(&dir, "copy");
    let rows = csv_rows(&ok(&["decompose", "--dist", s(&copy), "--backbone"]));
    // level,node,cumulative,atom
    let atom_at = |m: &str| -> f64 { rows.iter().find(|r| r[0] == m).unwrap()[3].parse().unwrap() };
    assert!((atom_at("1") - 1.0).abs() < 1e-9);
    assert!(atom_at("2").abs() < 1e-9);
    let json: Value = serde_json::from_str(&ok(&["decompose", "--dist", s(&copy), "--backbone", "--json"])).unwrap();
    assert!(json.is_object());
}

#[test]
fn decompose_random_file_is_exact() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("nsb.json");
    ok(&["gen", "--nsb", "n=3,seed=11", "--out", s(&path)]);
    let out = dir.path().join("d.csv");
    ok(&["decompose", "--dist", s(&path), "--out", s(&out)]);
    let rows = csv_rows(&fs::read_to_string(&out).unwrap());
    assert_eq!(rows.len(), 20);
    let total = rows.last().unwrap();
    let i: f64 = total[1].parse().unwrap();
    let sum: f64 = total[2].parse().unwrap();
    assert!((i - sum).abs() < 1e-8);
}

#[test]
fn self_synergy_of_coins() {
    let dir = TempDir::new().unwrap();
    let two = write_sources(&dir, "two.json", &[2, 2], &[0.25; 4]);
    let rows = csv_rows(&ok(&["selfsyn", "--dist", s(&two)]));
    assert!((atom(&rows, "{1}{2}") - 1.0).abs() < 1e-9);

    let three = write_sources(&dir, "three.json", &[2, 2, 2], &[0.125; 8]);
    let rows = csv_rows(&ok(&["selfsyn", "--dist", s(&three), "--backbone"]));
    let b = |m: &str| -> f64 { rows.iter().find(|r| r[0] == m).unwrap()[2].parse().unwrap() };
    assert!((b("1") - 2.0).abs() < 1e-8);
    assert!((b("2") - 1.0).abs() < 1e-8);
    assert!(b("3").abs() < 1e-8);

    let pair = write_sources(&dir, "pair.json", &[2, 2], &[0.5, 0.0, 0.0, 0.5]);
    let rows = csv_rows(&ok(&["selfsyn", "--dist", s(&pair)]));
    assert!(atom(&rows, "{1}{2}").abs() < 1e-9);
}

#[test]
fn sweeps_write_tables_and_metadata() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("and.csv");
    ok(&["sweep", "--experiment", "correlated-and", "--out", s(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "S∅_frac").unwrap();
    let fracs: Vec<f64> = r.records().map(|rec| rec.unwrap()[col].parse().unwrap()).collect();
    assert_eq!(fracs.len(), 21);
    assert!(fracs.windows(2).all(|w| w[1] >= w[0] - 1e-9));
    let meta: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("and.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["experiment"], "correlated-and");
    assert_eq!(meta["seed"], 0);
    assert!(meta["prng"].is_string());

    let out = dir.path().join("self.csv");
    ok(&["sweep", "--experiment", "self-disclosure", "--params", "p_divisions=10,r_divisions=20", "--out", s(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let best = r
        .records()
        .map(|rec| {
            let rec = rec.unwrap();
            let v: Vec<f64> = rec.iter().map(|f| f.parse().unwrap()).collect();
            (v[0], v[1], v[2])
        })
        .max_by(|a, b| a.2.total_cmp(&b.2))
        .unwrap();
    assert!((best.0 - 0.5).abs() < 1e-12 && (best.1 - 0.25).abs() < 1e-12);
    assert!((best.2 - 1.0).abs() < 1e-6);
}

#[test]
fn ising_sweep_is_deterministic_per_seed() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &Path| {
        vec![
            "sweep".to_string(),
            "--experiment".into(),
            "ising-b1".into(),
            "--params".into(),
            "n=3,k_max=3,replicates=3".into(),
            "--seed".into(),
            "5".into(),
            "--out".into(),
            s(p).into(),
        ]
    };
    let run = |p: &Path| {
        let v = args(p);
        ok(&v.iter().map(String::as_str).collect::<Vec<_>>());
    };
    run(&a);
    run(&b);
    let ta = fs::read_to_string(&a).unwrap();
    assert_eq!(ta, fs::read_to_string(&b).unwrap());
    assert_eq!(ta.lines().count(), 1 + 3 * 3);
}

#[test]
fn generated_files_round_trip_and_repeat() {
    let dir = TempDir::new().unwrap();
    let xor = gen_gate(&dir, "xor");
    let doc: Value = serde_json::from_str(&fs::read_to_string(&xor).unwrap()).unwrap();
    let probs: Vec<f64> = serde_json::from_value(doc["probs"].clone()).unwrap();
    assert_eq!(probs.len(), 8);
    assert_eq!(probs.iter().filter(|&&p| p == 0.25).count(), 4);
    assert_eq!(doc["metadata"]["generator"], "gate");

    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    ok(&["gen", "--nsb", "n=2", "--seed", "3", "--out", s(&a)]);
    ok(&["gen", "--nsb", "n=2", "--seed", "3", "--out", s(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let meta: Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(meta["metadata"]["seed"], 3);

    let g = dir.path().join("g.json");
    ok(&["gen", "--gibbs", "n=3,k=2,seed=9", "--out", s(&g)]);
    let text = fs::read_to_string(&g).unwrap();
    let file = synergy_core::io::DistributionFile::from_json_str(&text).unwrap();
    let spec = synergy_core::generators::GibbsSpec::new(3, 2, synergy_core::generators::GibbsMode::UpToK, 9);
    assert_eq!(file.to_distribution().unwrap(), synergy_core::generators::gibbs(&spec).unwrap());

    let job = dir.path().join("job.json");
    fs::write(&job, r#"{"nsb": {"n": 2, "seed": 3}}"#).unwrap();
    let c = dir.path().join("c.json");
    ok(&["gen", "--job", s(&job), "--out", s(&c)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn exit_codes() {
    let dir = TempDir::new().unwrap();
    let xor = gen_gate(&dir, "xor");
    assert_eq!(exit_code(&["synergy", "--dist", s(&xor), "--alpha", "{1"]), 2);
    assert_eq!(exit_code(&["synergy", "--dist", s(&xor), "--alpha", "{3}"]), 3);
    assert_eq!(exit_code(&["synergy", "--dist", "/nonexistent.json", "--alpha", "{1}"]), 2);
    assert_eq!(exit_code(&["sweep", "--experiment", "nope", "--out", s(&dir.path().join("x.csv"))]), 2);
    assert_eq!(exit_code(&["gen", "--gate", "nand", "--out", s(&dir.path().join("x.json"))]), 2);
    assert_eq!(exit_code(&["gen", "--out", s(&dir.path().join("x.json"))]), 2);

    let five = write_sources(&dir, "five.json", &[2; 5], &[1.0 / 32.0; 32]);
    assert_eq!(exit_code(&["decompose", "--dist", s(&five)]), 4);
}
