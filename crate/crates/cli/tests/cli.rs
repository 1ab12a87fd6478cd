use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn medgraph(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_medgraph"))
        .arg("--data-dir")
        .arg(data)
        .args(args)
        .env_remove("MEDGRAPH_DATA_DIR")
        .output()
        .unwrap()
}

fn prepared() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let synth = medgraph(dir.path(), &["synth", "--articles", "20", "--seed", "2"]);
    assert!(synth.status.success(), "{}", String::from_utf8_lossy(&synth.stderr));
    let run = medgraph(
        dir.path(),
        &[
            "--deterministic",
            "--set",
            "train.dim=16",
            "--set",
            "walk.per_node=5",
            "--set",
            "walk.length=15",
            "--set",
            "train.epochs=2",
            "run",
        ],
    );
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    dir
}

fn first_query(dir: &Path) -> String {
    let text = std::fs::read_to_string(dir.join("queries.tsv")).unwrap();
    text.lines().next().unwrap().split('\t').nth(1).unwrap().to_string()
}

#[test]
fn query_exit_codes() {
    let dir = prepared();
    let q = first_query(dir.path());

    let ok = medgraph(dir.path(), &["query", &q, "-k", "1"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    let stdout = String::from_utf8(ok.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("1\t"));

    let miss = medgraph(dir.path(), &["query", "zzqxzzqxzzqx"]);
    assert_eq!(miss.status.code(), Some(2));

    let empty = tempfile::tempdir().unwrap();
    let broken = medgraph(empty.path(), &["query", &q]);
    assert_eq!(broken.status.code(), Some(1));
}

#[test]
fn report_prints_grid() {
    let dir = prepared();
    let out = medgraph(dir.path(), &["report"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("| recall | medgraph |"));
    assert!(text.contains("| precision | tfidf |"));
}

#[test]
fn repl_answers_until_exit() {
    let dir = prepared();
    let q = first_query(dir.path());
    let mut child = Command::new(env!("CARGO_BIN_EXE_medgraph"))
        .arg("--data-dir")
        .arg(dir.path())
        .args(["repl", "-k", "2"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    writeln!(child.stdin.as_mut().unwrap(), "{q}\nzzqxzzqx\nexit\nnever reached").unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("1\t"));
    assert!(text.contains("2\t"));
    assert!(text.contains("error:"));
}

#[test]
fn bad_override_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = medgraph(dir.path(), &["--set", "walk.p=-1", "ingest"]);
    assert_eq!(out.status.code(), Some(1));
    let out = medgraph(dir.path(), &["--set", "nonsense", "ingest"]);
    assert_eq!(out.status.code(), Some(1));
}
