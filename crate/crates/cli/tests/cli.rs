// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cec_core::aiger::write_aag;
use cec_core::gen::{gen_multiplier, MultArch};
use cec_core::sched::{Tree, TreeEnsemble, TreeNode};
use cec_core::XagBuilder;

fn cec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cec"))
        .args(args)
        .env_remove("FASTLEC_THREADS")
        .output()
        .expect("run cec")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn gen_mutation(dir: &Path, width: usize, gate: usize) -> std::path::PathBuf {
    let f = dir.join(format!("mut_{width}_{gate}.aag"));
    let o = cec(&[
        "gen",
        "mutation",
        &width.to_string(),
        "--gate",
        &gate.to_string(),
        "-o",
        p(&f),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    f
}

#[test]
fn prove_self_miter_is_eq() {
    let dir = tempfile::tempdir().unwrap();
    let m = gen_multiplier(4, MultArch::Diagonal).unwrap();
    let f = dir.path().join("d4.aag");
    fs::write(&f, write_aag(&m)).unwrap();
    let o = cec(&["prove", p(&f), p(&f), "--threads", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).trim(), "EQ");
}

#[test]
fn gen_mult_then_prove_each_engine() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("m4.aag");
    let o = cec(&["gen", "mult", "4", "-o", p(&f)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for engine in ["auto", "sat", "es", "bdd", "portfolio-even"] {
        let o = cec(&["prove", p(&f), "--engine", engine, "--threads", "3"]);
        assert_eq!(o.status.code(), Some(0), "{engine}: {}", stderr(&o));
        assert_eq!(stdout(&o).trim(), "EQ", "{engine}");
    }
    let o = cec(&["prove", p(&f), "--select-only", "--threads", "1"]);
    assert_eq!(stdout(&o).trim(), "EQ");
}

#[test]
fn mutated_miter_witness_replays() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen_mutation(dir.path(), 4, 11);
    let o = cec(&["prove", p(&f), "--threads", "2"]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let line = stdout(&o);
    let bits = line.trim().strip_prefix("NEQ ").expect("NEQ line");
    assert_eq!(bits.len(), 8);
    let e = cec(&["eval", p(&f), bits]);
    assert_eq!(e.status.code(), Some(0));
    assert_eq!(stdout(&e).trim(), "1");
}

#[test]
fn io_and_usage_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.aag");
    assert_eq!(cec(&["prove", p(&missing)]).status.code(), Some(3));
    assert_eq!(cec(&["prove"]).status.code(), Some(3));
    assert_eq!(cec(&["bench", p(dir.path())]).status.code(), Some(3));
    let garbage = dir.path().join("bad.aag");
    fs::write(&garbage, "aag 1 2 3\n").unwrap();
    let o = cec(&["prove", p(&garbage)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("error"));

    let f = dir.path().join("m2.aag");
    cec(&["gen", "mult", "2", "-o", p(&f)]);
    assert_eq!(cec(&["eval", p(&f), "101"]).status.code(), Some(3));
    assert_eq!(cec(&["eval", p(&f), "10x1"]).status.code(), Some(3));
    assert_eq!(
        cec(&["prove", p(&f), "--threads", "0"]).status.code(),
        Some(3)
    );
    assert_eq!(
        cec(&["prove", p(&f), "--timeout", "-1"]).status.code(),
        Some(3)
    );
    assert_eq!(
        cec(&["gen", "mult", "1", "-o", p(&f)]).status.code(),
        Some(3)
    );
}

#[test]
fn timeout_gives_unknown() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("m12.aag");
    cec(&["gen", "mult", "12", "-o", p(&f)]);
    let o = cec(&[
        "prove",
        p(&f),
        "--engine",
        "sat",
        "--threads",
        "1",
        "--timeout",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout(&o).trim(), "UNKNOWN");
}

#[test]
fn stats_json_document() {
    let dir = tempfile::tempdir().unwrap();
    let f = gen_mutation(dir.path(), 3, 4);
    let o = cec(&["prove", p(&f), "--stats", "json", "--threads", "2"]);
    let text = stdout(&o);
    let (first, json) = text.split_once('\n').unwrap();
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    let verdict = v["verdict"].as_str().unwrap();
    assert!(first.starts_with(verdict));
    if verdict == "NEQ" {
        assert_eq!(first, format!("NEQ {}", v["witness"].as_str().unwrap()));
    }
    assert_eq!(v["threads"], 2);
    assert_eq!(v["mode"], "auto");
    for k in [
        "rounds",
        "submiters",
        "pairs_proven",
        "pairs_refuted",
        "merges",
    ] {
        assert!(v["sweep"][k].is_u64(), "{k}");
    }
    for e in ["sat", "es", "bdd"] {
        assert!(v["engines"][e]["seconds"].is_f64(), "{e}");
        assert!(v["engines"][e]["thread_sum"].is_u64(), "{e}");
    }
    assert!(v["wall_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn bench_csv_and_par2() {
    let dir = tempfile::tempdir().unwrap();
    cec(&["gen", "mult", "3", "-o", p(&dir.path().join("a.aag"))]);
    gen_mutation(dir.path(), 3, 2);
    fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
    let o = cec(&["bench", p(dir.path()), "--cutoff", "60", "--threads", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(r.headers().unwrap(), vec!["name", "verdict", "seconds"]);
    let rows: Vec<csv::StringRecord> = r.records().map(|x| x.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][0], "a.aag");
    assert_eq!(&rows[0][1], "EQ");
    assert!(matches!(&rows[1][1], "EQ" | "NEQ"));
    let total: f64 = rows.iter().map(|r| r[2].parse::<f64>().unwrap()).sum();
    let summary = stderr(&o);
    let par2: f64 = summary.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((par2 - total / 2.0).abs() < 0.01, "{summary}");
    assert!(summary.contains("solved 2/2"));
}

#[test]
fn features_csv_has_33_columns() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = XagBuilder::new(2);
    let o = b.and(b.pi(0), b.pi(1));
    let x = b.build(vec![o]);
    let f = dir.path().join("one.aag");
    fs::write(&f, write_aag(&x)).unwrap();
    let o = cec(&["features", p(&f)]);
    assert_eq!(o.status.code(), Some(0));
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    assert_eq!(r.headers().unwrap().len(), 33);
    let row = r.records().next().unwrap().unwrap();
    assert_eq!(row.len(), 33);
    assert_eq!(&row[0], "one");
    assert_eq!(&row[1], "2");
    assert_eq!(&row[2], "1");
}

#[test]
fn thread_env_variable() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("m3.aag");
    cec(&["gen", "mult", "3", "-o", p(&f)]);
    let run = |env: &str, extra: &[&str]| {
        let mut args = vec!["prove", p(&f), "--stats", "json"];
        args.extend_from_slice(extra);
        Command::new(env!("CARGO_BIN_EXE_cec"))
            .args(&args)
            .env("FASTLEC_THREADS", env)
            .output()
            .unwrap()
    };
    let threads = |o: &Output| {
        let text = stdout(o);
        let v: serde_json::Value = serde_json::from_str(text.split_once('\n').unwrap().1).unwrap();
        v["threads"].as_u64().unwrap()
    };
    assert_eq!(threads(&run("5", &[])), 5);
    assert_eq!(threads(&run("5", &["--threads", "2"])), 2);
    assert_eq!(threads(&run("64", &[])), 32);
    assert_eq!(run("many", &[]).status.code(), Some(3));
    assert_eq!(threads(&run("many", &["--threads", "1"])), 1);
}

#[test]
fn dump_submiters_writes_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("m5.aag");
    cec(&["gen", "mult", "5", "-o", p(&f)]);
    let dump = dir.path().join("dump");
    let o = cec(&[
        "prove",
        p(&f),
        "--dump-submiters",
        p(&dump),
        "--threads",
        "1",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let manifest = fs::read_to_string(dump.join("manifest.csv")).unwrap();
    let mut lines = manifest.lines();
    assert_eq!(lines.next(), Some("id,origin_a,origin_b,num_pis"));
    let mut n = 0;
    for l in lines {
        let cols: Vec<&str> = l.split(',').collect();
        assert_eq!(cols.len(), 4);
        let id: usize = cols[0].parse().unwrap();
        let file = dump.join(format!("sm_{id:06}.aag"));
        let x = cec_core::aiger::parse_aiger(&fs::read(&file).unwrap()).unwrap();
        assert_eq!(x.num_pis().to_string(), cols[3]);
        assert_eq!(x.outputs().len(), 1);
        n += 1;
    }
    assert!(n > 0);
    assert_eq!(fs::read_dir(&dump).unwrap().count(), n + 1);
}

#[test]
fn sat_log_and_es_dump() {
    let dir = tempfile::tempdir().unwrap();
    // a single satisfying row that random simulation will not hit
    let mut b = XagBuilder::new(20);
    let mut acc = b.pi(0);
    for i in 1..20 {
        acc = b.and(acc, b.pi(i));
    }
    let x = b.build(vec![acc]);
    let f = dir.path().join("and20.aag");
    fs::write(&f, write_aag(&x)).unwrap();
    let log = dir.path().join("sat.log");
    let o = cec(&[
        "prove",
        p(&f),
        "--engine",
        "sat",
        "--threads",
        "2",
        "--sat-log",
        p(&log),
        "--es-dump-program",
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim(), format!("NEQ {}", "1".repeat(20)));
    let text = fs::read_to_string(&log).unwrap();
    assert!(!text.is_empty());
    // id parent cube_size state elapsed
    for l in text.lines() {
        let cols: Vec<&str> = l.split_whitespace().collect();
        assert_eq!(cols.len(), 5, "{l}");
        assert!(cols[4].parse::<f64>().is_ok());
    }
    assert!(text.lines().any(|l| l.contains(" SAT ")));
    let err = stderr(&o);
    assert_eq!(err.lines().filter(|l| l.contains("LOAD_PI")).count(), 20);
    assert!(err.lines().any(|l| l.starts_with("OUTPUT")));
}

#[test]
fn model_files() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("m4.aag");
    cec(&["gen", "mult", "4", "-o", p(&f)]);
    let tree = Tree {
        nodes: vec![
            TreeNode::Split {
                f: 0,
                t: 4.0,
                l: 1,
                r: 2,
            },
            TreeNode::Leaf { v: 0.001 },
            TreeNode::Leaf { v: 500.0 },
        ],
    };
    let model = dir.path().join("sat.json");
    fs::write(&model, TreeEnsemble::new(0.0, vec![tree]).to_json()).unwrap();
    let sat_spec = format!("sat={}", p(&model));
    let bdd_spec = format!("bdd={}", p(&model));
    let o = cec(&[
        "prove",
        p(&f),
        "--model",
        &sat_spec,
        "--model",
        &bdd_spec,
        "--threads",
        "4",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = cec(&["prove", p(&f), "--model", p(&model)]);
    assert_eq!(o.status.code(), Some(0));

    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"version": 1, "trees": "no"}"#).unwrap();
    let o = cec(&["prove", p(&f), "--model", p(&bad)]);
    assert_eq!(o.status.code(), Some(3));
    let es_spec = format!("es={}", p(&model));
    assert_eq!(
        cec(&["prove", p(&f), "--model", &es_spec]).status.code(),
        Some(3)
    );
}
