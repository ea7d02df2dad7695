use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn quadsky(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quadsky"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = quadsky(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, n: &str, seed: &str) -> (std::path::PathBuf, std::path::PathBuf) {
    let (input, truth) = (dir.join("entities.csv"), dir.join("truth.csv"));
    ok(&[
        "gen",
        "--n",
        n,
        "--seed",
        seed,
        "--out",
        s(&input),
        "--truth",
        s(&truth),
    ]);
    (input, truth)
}

#[test]
fn stages_reproduce_the_pipeline() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let (input, truth) = gen(d, "1200", "7");
    let full = d.join("full");
    ok(&[
        "pipeline",
        "--input",
        s(&input),
        "--out-dir",
        s(&full),
        "--truth",
        s(&truth),
    ]);
    for f in [
        "blocks.csv",
        "pairs.csv",
        "ranked.csv",
        "labeled.csv",
        "report.csv",
        "summary.txt",
        "manifest.json",
    ] {
        assert!(full.join(f).exists(), "{f} missing");
    }

    let staged = d.join("staged");
    fs::create_dir_all(&staged).unwrap();
    let (blocks, pairs, ranked) = (
        staged.join("blocks.csv"),
        staged.join("pairs.csv"),
        staged.join("ranked.csv"),
    );
    ok(&["block", "--input", s(&input), "--out", s(&blocks)]);
    ok(&[
        "compare",
        "--input",
        s(&input),
        "--blocks",
        s(&blocks),
        "--out",
        s(&pairs),
    ]);
    ok(&["rank", "--pairs", s(&pairs), "--out", s(&ranked)]);
    ok(&[
        "label",
        "--pairs",
        s(&ranked),
        "--input",
        s(&input),
        "--out-dir",
        s(&staged),
        "--truth",
        s(&truth),
    ]);
    for f in [
        "blocks.csv",
        "pairs.csv",
        "ranked.csv",
        "labeled.csv",
        "report.csv",
        "summary.txt",
    ] {
        assert_eq!(
            fs::read(full.join(f)).unwrap(),
            fs::read(staged.join(f)).unwrap(),
            "{f} differs"
        );
    }

    let out = ok(&["eval", "--pairs", s(&staged.join("labeled.csv"))]);
    let line = String::from_utf8(out.stdout).unwrap();
    assert!(line.contains("f1"), "{line}");
}

#[test]
fn label_free_method_and_thread_flag() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let (input, truth) = gen(d, "1200", "3");
    let out = d.join("out");
    ok(&[
        "--threads",
        "2",
        "pipeline",
        "--input",
        s(&input),
        "--out-dir",
        s(&out),
        "--truth",
        s(&truth),
        "--method",
        "d",
    ]);
    assert!(out.join("profile.csv").exists());
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"method\": \"d\""), "{manifest}");
}

#[test]
fn config_file_is_read_and_flags_win() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let (input, truth) = gen(d, "600", "1");
    let cfg = d.join("run.toml");
    fs::write(&cfg, "meters = 50\nmethod = \"fes\"\n").unwrap();
    let out = d.join("out");
    ok(&[
        "pipeline",
        "--input",
        s(&input),
        "--out-dir",
        s(&out),
        "--config",
        s(&cfg),
        "--truth",
        s(&truth),
        "--meters",
        "80",
    ]);
    let manifest = fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"meters\": 80.0"), "{manifest}");
    assert!(manifest.contains("\"method\": \"fes\""), "{manifest}");
}

#[test]
fn errors_name_the_stage_and_exit_non_zero() {
    let dir = TempDir::new().unwrap();
    let out = quadsky(&[
        "pipeline",
        "--input",
        s(&dir.path().join("missing.csv")),
        "--out-dir",
        s(&dir.path().join("o")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ingest"), "{err}");

    let bad = dir.path().join("bad.csv");
    fs::write(
        &bad,
        "source,id,lat,lon,name,address,categories,phone,website\ngp,1,95.0,9.9,x,,,,\n",
    )
    .unwrap();
    let out = quadsky(&[
        "block",
        "--input",
        s(&bad),
        "--out",
        s(&dir.path().join("b.csv")),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 2") && err.contains("latitude"), "{err}");

    assert!(!quadsky(&[
        "--threads",
        "0",
        "bench",
        "--sizes",
        "10",
        "--out",
        s(&dir.path().join("x.csv"))
    ])
    .status
    .success());
}

#[test]
fn bench_writes_coverage_rows() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("bench.csv");
    ok(&["bench", "--sizes", "500,2000", "--out", s(&out)]);
    let text = fs::read_to_string(&out).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0].starts_with("n,"));
    let header: Vec<&str> = rows[0].split(',').collect();
    let cov = header.iter().position(|h| *h == "coverage").unwrap();
    for r in &rows[1..] {
        let c: f64 = r.split(',').nth(cov).unwrap().parse().unwrap();
        assert!(c >= 0.99, "{r}");
    }
}
