use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

fn molforge(dir: &Path, args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_molforge"))
        .current_dir(dir)
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn corpus() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/corpus_1k.smi").display().to_string()
}

#[test]
fn canon_merges_equivalent_spellings() {
    let dir = tempfile::tempdir().unwrap();
    let o = molforge(dir.path(), &["canon"], "OCC\nC(O)C\n[CH3][CH2][OH]\n");
    assert!(o.status.success());
    let lines: Vec<String> = stdout(&o).lines().map(str::to_string).collect();
    assert_eq!(lines.len(), 3);
    assert!(lines.iter().all(|l| *l == lines[0]));
}

#[test]
fn invalid_input_line_is_exit_1_and_others_still_emitted() {
    let dir = tempfile::tempdir().unwrap();
    let o = molforge(dir.path(), &["canon"], "CCO\nC1CC(\nc1ccccc1\n");
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o).lines().count(), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn usage_errors_are_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(molforge(dir.path(), &["no-such-command"], "").status.code(), Some(2));
    assert_eq!(molforge(dir.path(), &["sim", "CCO"], "").status.code(), Some(2));
    assert_eq!(molforge(dir.path(), &["score", "--props", "Q", "--mock", "--scores", "x.tsv"], "").status.code(), Some(2));
}

#[test]
fn missing_file_is_exit_1_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = molforge(dir.path(), &["--json-errors", "canon", "absent.smi"], "");
    assert_eq!(o.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["level"], "error");
    assert_eq!(err["exit_code"], 1);
    assert!(err["error"].as_str().unwrap().contains("absent.smi"));
}

#[test]
fn similarity_of_identical_and_distinct_molecules() {
    let dir = tempfile::tempdir().unwrap();
    let same = molforge(dir.path(), &["sim", "OCC", "CCO"], "");
    assert_eq!(stdout(&same).trim(), "1.000000");
    let diff = molforge(dir.path(), &["sim", "CCO", "c1ccccc1"], "");
    assert!(stdout(&diff).trim().parse::<f64>().unwrap() < 0.2);
}

#[test]
fn outputs_carry_manifests_with_input_hashes() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("in.smi"), "CCO\nCCN\n").unwrap();
    let o = molforge(dir.path(), &["--seed", "9", "score", "in.smi", "--props", "QP", "--mock", "-o", "s.tsv"], "");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.tsv.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "score");
    assert_eq!(m["seed"], 9);
    assert_eq!(m["output"], "s.tsv");
    assert_eq!(m["inputs"][0]["path"], "in.smi");
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["config"]["oracle"]["backend"]["kind"], "mock");
    let table = std::fs::read_to_string(dir.path().join("s.tsv")).unwrap();
    assert!(table.starts_with("smiles\tP\tQ\n"));
}

#[test]
fn forty_two_task_manifests_and_seed_sensitivity() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let run = |args: &[&str]| {
        let o = molforge(p, args, "");
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    };
    run(&["score", &corpus(), "--props", "BDHMPQ", "--mock", "-o", "pool.tsv"]);
    run(&["mine-pairs", "--pool", "pool.tsv", "-o", "cands.jsonl"]);
    run(&["build-tasks", "--candidates", "cands.jsonl", "--min-props", "3", "--out-dir", "a"]);
    run(&["--seed", "43", "build-tasks", "--candidates", "cands.jsonl", "--min-props", "3", "--out-dir", "b"]);
    let manifests = std::fs::read_dir(p.join("a")).unwrap().filter(|e| e.as_ref().unwrap().path().join("task.json").exists()).count();
    assert_eq!(manifests, 42);
    let train = |d: &str| std::fs::read_to_string(p.join(d).join("MPQ/train.jsonl")).unwrap();
    assert_ne!(train("a"), train("b"));

    run(&["build-testset", "--task-dir", "a", "--pool", "pool.tsv"]);
    let m: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(p.join("a/MPQ/task.json")).unwrap()).unwrap();
    assert_eq!(m["n_test"].as_u64().unwrap() as usize, std::fs::read_to_string(p.join("a/MPQ/test.jsonl")).unwrap().lines().count());
    assert_eq!(m["split"], "OOD");

    let o = molforge(p, &["stats", "a"], "");
    let out = stdout(&o);
    assert!(out.starts_with("task\ttrain\tval\ttest\tmols"));
    assert!(out.lines().any(|l| l.starts_with("MPQ\t")));
}

#[test]
fn filter_pairs_from_scored_tsv() {
    let dir = tempfile::tempdir().unwrap();
    let tsv = "mx\tmy\tQ_x\tQ_y\nCCO\tCCCO\t0.3\t0.5\nCCO\tCCN\t0.3\t0.35\nCCCO\tCCO\t0.5\t0.3\n";
    std::fs::write(dir.path().join("pairs.tsv"), tsv).unwrap();
    let strict = molforge(dir.path(), &["filter-pairs", "pairs.tsv", "--task", "Q", "--mode", "strict"], "");
    assert!(strict.status.success(), "{}", String::from_utf8_lossy(&strict.stderr));
    assert_eq!(stdout(&strict).lines().count(), 1);
    let loose = molforge(dir.path(), &["filter-pairs", "pairs.tsv", "--task", "Q", "--mode", "loose"], "");
    assert_eq!(stdout(&loose).lines().count(), 2);
}

#[test]
fn report_formats() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("scores.tsv"), "smiles\tQ\nCCO\t0.4\nCCCO\t0.5\nCCN\t0.3\n").unwrap();
    let gens = concat!(
        r#"{"task":"Q","input":"CCO","candidates":["OCCC","CCN"]}"#,
        "\n",
        r#"{"task":"Q","input":"CCCO","candidates":["C1CC("]}"#,
        "\n"
    );
    std::fs::write(p.join("gen.jsonl"), gens).unwrap();
    let o = molforge(p, &["evaluate", "gen.jsonl", "--scores", "scores.tsv", "-o", "cases.jsonl"], "");
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let tsv = stdout(&molforge(p, &["report", "cases.jsonl"], ""));
    let sim: f64 = stdout(&molforge(p, &["sim", "CCO", "CCCO"], "")).trim().parse().unwrap();
    let want = format!("Q\t2\t50.00\t50.00\t{sim:.2}\tn/a\tn/a\t0.25\t0.50");
    assert_eq!(tsv.lines().nth(1).unwrap(), want);
    let md = stdout(&molforge(p, &["report", "cases.jsonl", "--format", "md"], ""));
    assert!(md.contains("| Q | 2 | 50.00 |"));
    let json: serde_json::Value = serde_json::from_str(&stdout(&molforge(p, &["report", "cases.jsonl", "--format", "json"], ""))).unwrap();
    assert_eq!(json["reports"][0]["RI"], 0.25);
    assert!(json["reports"][0]["Nov"].is_null());
}

#[test]
fn emit_prompts_respects_held_out_template() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let run = |args: &[&str]| {
        let o = molforge(p, args, "");
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        stdout(&o)
    };
    run(&["score", &corpus(), "--props", "BDHMPQ", "--mock", "-o", "pool.tsv"]);
    run(&["mine-pairs", "--pool", "pool.tsv", "-o", "cands.jsonl"]);
    run(&["build-tasks", "--candidates", "cands.jsonl", "--tasks", "BQ", "--pool", "pool.tsv", "--out-dir", "t"]);
    let train = run(&["emit-prompts", "--task-dir", "t/BQ"]);
    assert!(train.lines().count() > 0);
    for line in train.lines() {
        let r: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_ne!(r["template"], 6);
        assert!(r["output"].as_str().unwrap().starts_with("<SMILES> "));
    }
    assert_eq!(molforge(p, &["emit-prompts", "--task-dir", "t/BQ", "--template", "6"], "").status.code(), Some(1));
    let unseen = run(&["emit-prompts", "--task-dir", "t/BQ", "--split", "test", "--names", "unseen", "--style", "simple"]);
    for line in unseen.lines() {
        let r: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(r.get("output").is_none());
        assert!(r["instruction"].as_str().unwrap().ends_with("as minimal as possible."));
    }
}
