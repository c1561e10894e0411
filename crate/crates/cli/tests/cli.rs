use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use iminfector::model::InfectorModel;
use tempfile::TempDir;

const TOY: &str = "\
a:0\tb:1 c:3 d:7
b:10\tc:12 e:15
a:20\tc:21 d:22 e:30
d:30\te:40
c:50\ta:52 e:60
a:60\tb:61 e:62
e:70\ta:75
b:80\td:81 a:90
";

fn iminfector(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_iminfector"))
        .args(args)
        .current_dir(cwd)
        .output()
        .unwrap()
}

fn toy_dir() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("toy.txt"), TOY).unwrap();
    dir
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn pipeline_is_byte_reproducible() {
    let dir = toy_dir();
    let args = |out: &'static str| {
        ["pipeline", "--cascades", "toy.txt", "--size", "2", "--rng-seed", "7", "--out-dir", out]
    };
    assert!(iminfector(&args("one"), dir.path()).status.success());
    assert!(iminfector(&args("two"), dir.path()).status.success());
    let one = fs::read(dir.path().join("one/seeds.txt")).unwrap();
    let two = fs::read(dir.path().join("two/seeds.txt")).unwrap();
    assert_eq!(one, two);
    assert_eq!(
        fs::read(dir.path().join("one/model.infv")).unwrap(),
        fs::read(dir.path().join("two/model.infv")).unwrap()
    );
    // five initiators at 10% keep a single candidate, so the run truncates
    let rows: Vec<&str> = std::str::from_utf8(&one).unwrap().lines().collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].starts_with("1\t"));
    assert_eq!(rows[0].split('\t').count(), 3);
    let manifest = fs::read_to_string(dir.path().join("one/manifest.json")).unwrap();
    assert!(manifest.contains("only 1 of 2 seeds"));
}

#[test]
fn stages_chain_by_hand() {
    let dir = toy_dir();
    let p = dir.path();
    let ok = |args: &[&str]| {
        let out = iminfector(args, p);
        assert!(out.status.success(), "{args:?}: {}", stderr(&out));
    };
    ok(&["split", "--input", "toy.txt", "--out-train", "train.txt", "--out-test", "test.txt"]);
    ok(&["stats", "--train", "train.txt", "--test", "test.txt", "--out", "stats.tsv"]);
    ok(&["train", "--cascades", "train.txt", "--embed-dim", "8", "--out", "model.infv", "--dump-pairs", "pairs.tsv"]);
    ok(&["rank", "--model", "model.infv", "--prune-percent", "50", "--out", "dmatrix.bin"]);
    ok(&["seed", "--dmatrix", "dmatrix.bin", "--size", "2", "--out", "seeds.txt"]);
    ok(&["evaluate", "--seeds", "seeds.txt", "--test", "test.txt", "--out", "result.tsv"]);
    ok(&["baseline", "--method", "avgsize", "--train", "train.txt", "--size", "2", "--out", "avg.txt"]);

    assert_eq!(fs::read_to_string(p.join("train.txt")).unwrap().lines().count(), 7);
    assert_eq!(fs::read_to_string(p.join("test.txt")).unwrap().lines().count(), 1);
    assert!(fs::read(p.join("dmatrix.bin")).unwrap().starts_with(b"DPM1"));
    assert!(fs::read(p.join("model.infv")).unwrap().starts_with(b"INFV1"));
    let pairs = fs::read_to_string(p.join("pairs.tsv")).unwrap();
    assert_eq!(pairs.lines().filter(|l| l.contains("\tS\t")).count(), 7);
    let result = fs::read_to_string(p.join("result.tsv")).unwrap();
    assert_eq!(result.lines().count(), 3);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(p.join("model.infv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "train");
    assert_eq!(manifest["params"]["epochs"], 5);
    assert_eq!(manifest["params"]["learning_rate"], 0.1);
    assert_eq!(manifest["params"]["oversample"], 1.2);
    assert_eq!(manifest["epoch_losses"].as_array().unwrap().len(), 5);
    assert_eq!(manifest["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
}

#[test]
fn pipeline_manifest_defaults() {
    let dir = toy_dir();
    let out = iminfector(&["pipeline", "--cascades", "toy.txt", "--size", "2"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    let text = fs::read_to_string(dir.path().join("iminfector-run/manifest.json")).unwrap();
    let m: serde_json::Value = serde_json::from_str(&text).unwrap();
    let params = &m["params"];
    assert_eq!(params["embed_dim"], 50);
    assert_eq!(params["epochs"], 5);
    assert_eq!(params["learning_rate"], 0.1);
    assert_eq!(params["oversample"], 1.2);
    assert_eq!(params["train_frac"], 0.8);
    assert_eq!(params["prune_percent"], 10.0);
    let stages: Vec<&str> = m["stages"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["stage"].as_str().unwrap())
        .collect();
    assert_eq!(stages[..6], ["split", "stats", "train", "rank", "seed", "evaluate"]);
}

#[test]
fn missing_input_names_the_flag() {
    let dir = toy_dir();
    let out = iminfector(&["train", "--cascades", "nope.txt", "--out", "m.infv"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--cascades"), "{}", stderr(&out));

    let out = iminfector(&["baseline", "--method", "kcore", "--size", "3", "--out", "k.txt"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--edges"));

    let out = iminfector(&["seed", "--dmatrix", "d.bin"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn format_errors_exit_3() {
    let dir = toy_dir();
    fs::write(dir.path().join("bad.txt"), "a:0\tb:1\na:9\tb:3\n").unwrap();
    let out = iminfector(&["split", "--input", "bad.txt", "--out-train", "t", "--out-test", "s"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("line 2"), "{}", stderr(&out));

    fs::write(dir.path().join("seeds.txt"), "1\ta\n").unwrap();
    let out = iminfector(&["evaluate", "--seeds", "seeds.txt", "--test", "toy.txt", "--out", "r"], dir.path());
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn mismatched_artifacts_are_refused() {
    let dir = toy_dir();
    assert!(iminfector(&["pipeline", "--cascades", "toy.txt", "--size", "2", "--out-dir", "r"], dir.path())
        .status
        .success());
    let out = iminfector(&["seed", "--dmatrix", "r/model.infv", "--out", "s.txt"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("DPM1"), "{}", stderr(&out));
    let out = iminfector(&["rank", "--model", "r/dmatrix.bin", "--out", "d.bin"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("INFV1"), "{}", stderr(&out));
}

#[test]
fn degenerate_data_exit_5() {
    let dir = toy_dir();
    fs::write(dir.path().join("one.txt"), "a:0\tb:1\n").unwrap();
    let out = iminfector(&["split", "--input", "one.txt", "--out-train", "t", "--out-test", "s"], dir.path());
    assert_eq!(out.status.code(), Some(5));

    let zeros = InfectorModel::from_parts(2, 2, 3, vec![0.0; 4], vec![0.5; 6], vec![0.0; 3], 0.0).unwrap();
    zeros.save(dir.path().join("zero.infv")).unwrap();
    let out = iminfector(&["rank", "--model", "zero.infv", "--out", "d.bin"], dir.path());
    assert_eq!(out.status.code(), Some(5), "{}", stderr(&out));
}

#[test]
fn divergent_training_exits_4() {
    let dir = toy_dir();
    let out = iminfector(
        &["train", "--cascades", "toy.txt", "--lr", "1e300", "--embed-dim", "4", "--out", "m.infv"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(4), "{}", stderr(&out));
    assert!(stderr(&out).contains("epoch"));
}

#[test]
fn bad_arguments_are_usage_errors() {
    let dir = toy_dir();
    let out = iminfector(&["rank", "--model", "x", "--prune-percent", "0", "--out", "d"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = iminfector(&["split", "--input", "toy.txt", "--train-frac", "1.5", "--out-train", "a", "--out-test", "b"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = iminfector(&["frobnicate"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = iminfector(&["--threads", "0", "synth", "--out", "c.txt"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn synth_writes_planted_ids_and_graph() {
    let dir = tempfile::tempdir().unwrap();
    let out = iminfector(
        &["synth", "--out", "c.txt", "--edges-out", "g.txt", "--planted-out", "p.txt", "--rng-seed", "2"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(dir.path().join("c.txt")).unwrap().lines().count(), 500);
    assert_eq!(fs::read_to_string(dir.path().join("p.txt")).unwrap().lines().count(), 5);
    let out = iminfector(&["baseline", "--method", "kcore", "--edges", "g.txt", "--size", "4", "--out", "k.txt"], dir.path());
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(fs::read_to_string(dir.path().join("k.txt")).unwrap().lines().count(), 4);
}
