use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn geek(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_geek"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = geek(dir, args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn gen_dense(dir: &Path) {
    ok(
        dir,
        &[
            "gen",
            "--kind",
            "gaussian-mixture",
            "--n",
            "1200",
            "--d",
            "6",
            "--clusters",
            "4",
            "--separation",
            "10",
            "--seed",
            "3",
            "--out",
            "x.fvecs",
        ],
    );
    fs::write(
        dir.join("c.json"),
        r#"{"m": 8, "t": 30, "silk_K": 2, "silk_L": 10, "delta": 5, "seed": 4}"#,
    )
    .unwrap();
}

#[test]
fn staged_commands_match_a_single_worker_run() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_dense(d);
    ok(
        d,
        &[
            "run",
            "--input",
            "x.fvecs",
            "--config",
            "c.json",
            "--assignment",
            "run.txt",
            "--metrics",
            "m.json",
        ],
    );
    ok(
        d,
        &[
            "transform",
            "--input",
            "x.fvecs",
            "--config",
            "c.json",
            "--out",
            "b.bin",
        ],
    );
    ok(
        d,
        &[
            "seed",
            "--buckets",
            "b.bin",
            "--config",
            "c.json",
            "--out",
            "s.bin",
        ],
    );
    ok(
        d,
        &[
            "assign",
            "--input",
            "x.fvecs",
            "--seeds",
            "s.bin",
            "--config",
            "c.json",
            "--assignment",
            "staged.txt",
            "--out",
            "c.bin",
        ],
    );
    let run = fs::read_to_string(d.join("run.txt")).unwrap();
    assert_eq!(run.lines().count(), 1200);
    assert_eq!(run, fs::read_to_string(d.join("staged.txt")).unwrap());
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("m.json")).unwrap()).unwrap();
    assert!(m["k_star"].as_u64().unwrap() >= 1);
}

#[test]
fn runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_dense(d);
    for name in ["a.txt", "b.txt"] {
        ok(
            d,
            &[
                "run",
                "--input",
                "x.fvecs",
                "--config",
                "c.json",
                "--g",
                "2",
                "--assignment",
                name,
            ],
        );
    }
    assert_eq!(
        fs::read(d.join("a.txt")).unwrap(),
        fs::read(d.join("b.txt")).unwrap()
    );
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_dense(d);
    ok(
        d,
        &[
            "gen",
            "--kind",
            "sparse-overlap",
            "--n",
            "200",
            "--d",
            "50000",
            "--clusters",
            "2",
            "--separation",
            "2",
            "--set-size",
            "40",
            "--out",
            "s.txt",
        ],
    );
    fs::write(d.join("bad.json"), r#"{"m": 8, "colour": 1}"#).unwrap();
    fs::write(
        d.join("euc.json"),
        r#"{"metric": "euclidean", "transform_L": 4}"#,
    )
    .unwrap();
    let cases: [&[&str]; 4] = [
        &["run", "--input", "x.fvecs", "--frobnicate"],
        &["run", "--input", "x.fvecs", "--config", "bad.json"],
        &["run", "--input", "s.txt", "--config", "euc.json"],
        &["explode"],
    ];
    for args in cases {
        assert_eq!(geek(d, args).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn runtime_errors_exit_with_one_and_name_the_stage() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_dense(d);
    let out = geek(d, &["run", "--input", "nope.fvecs"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("input stage"));

    fs::write(
        d.join("tiny.json"),
        r#"{"m": 8, "t": 30, "memory_budget": 10}"#,
    )
    .unwrap();
    let out = geek(d, &["run", "--input", "x.fvecs", "--config", "tiny.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seeding stage"));

    fs::write(d.join("junk.bin"), b"not an artifact").unwrap();
    let out = geek(d, &["seed", "--buckets", "junk.bin", "--out", "s.bin"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn csv_input_keeps_dictionaries() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(
        d,
        &[
            "gen",
            "--kind",
            "categorical-patterns",
            "--n",
            "300",
            "--d",
            "10",
            "--clusters",
            "3",
            "--separation",
            "5",
            "--out",
            "k.csv",
        ],
    );
    fs::write(d.join("c.json"), r#"{"transform_L": 8, "delta": 5}"#).unwrap();
    ok(
        d,
        &[
            "run", "--input", "k.csv", "--config", "c.json", "--out", "k.bin",
        ],
    );
    let dict: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("k.dict.json")).unwrap()).unwrap();
    assert_eq!(dict["header"][0], "a0");
    assert!(dict["values"][0][0].as_str().unwrap().starts_with('v'));
}

#[test]
fn bench_writes_one_record_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    gen_dense(d);
    ok(
        d,
        &[
            "bench", "--input", "x.fvecs", "--config", "c.json", "--t", "20,40", "--m", "4,8",
            "--silk-l", "5,10", "--out", "b.jsonl",
        ],
    );
    let text = fs::read_to_string(d.join("b.jsonl")).unwrap();
    let recs: Vec<serde_json::Value> = text
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(recs.len(), 8);
    assert!(recs
        .iter()
        .all(|r| r["k_star"].as_u64().is_some() && r["timings"]["total"].is_number()));
}
