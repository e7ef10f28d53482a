//! End-to-end command tests against the built binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_finemotion")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

fn assert_code(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

fn synth_corpus(dir: &Path, per_family: usize) -> PathBuf {
    let out = dir.join("corpus");
    let out_str = out.display().to_string();
    let pf = per_family.to_string();
    let o = run(&["synth", "--out", &out_str, "--per-family", &pf, "--seed", "5"]);
    assert_code(&o, 0);
    out.join("corpus.jsonl")
}

fn write_expand_inputs(dir: &Path, n: usize) -> PathBuf {
    let lines: Vec<String> = (0..n)
        .map(|i| {
            format!(r#"{{"source_id":"in_{i:02}","coarse":"A man walks.","motion_file":"m_{i:02}.json"}}"#)
        })
        .collect();
    let path = dir.join("inputs.jsonl");
    std::fs::write(&path, lines.join("\n") + "\n").unwrap();
    path
}

const VALID_RESPONSE: &str = "<step 1: beginning pose>The man stands upright.</step 1: beginning pose> <step 2: walk>He walks forward.</step 2: walk>\npseudo-code:\nstand()\n\nwalk(direction=forward)\n";

#[test]
fn expand_offline_all_valid_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_expand_inputs(dir.path(), 10);
    let fixtures = dir.path().join("fixtures");
    std::fs::create_dir_all(&fixtures).unwrap();
    for i in 0..10 {
        std::fs::write(fixtures.join(format!("in_{i:02}.txt")), VALID_RESPONSE).unwrap();
    }
    let out = dir.path().join("out");
    let o = run(&[
        "expand",
        "--inputs",
        inputs.to_str().unwrap(),
        "--offline-fixtures",
        fixtures.to_str().unwrap(),
        "--template",
        "P8",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&o, 0);
    let corpus = std::fs::read_to_string(out.join("corpus.jsonl")).unwrap();
    assert_eq!(corpus.lines().count(), 10);
    assert!(out.join("run_config.json").exists());
    assert!(out.join("exchanges.jsonl").exists());
}

#[test]
fn expand_unreadable_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "expand",
        "--inputs",
        dir.path().join("missing.jsonl").to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_code(&o, 1);
}

#[test]
fn expand_missing_fixture_is_transport_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_expand_inputs(dir.path(), 2);
    let fixtures = dir.path().join("fixtures");
    std::fs::create_dir_all(&fixtures).unwrap();
    std::fs::write(fixtures.join("in_00.txt"), VALID_RESPONSE).unwrap();
    let o = run(&[
        "expand",
        "--inputs",
        inputs.to_str().unwrap(),
        "--offline-fixtures",
        fixtures.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_code(&o, 2);
}

#[test]
fn expand_all_dropped_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_expand_inputs(dir.path(), 3);
    let fixtures = dir.path().join("fixtures");
    std::fs::create_dir_all(&fixtures).unwrap();
    for i in 0..3 {
        std::fs::write(
            fixtures.join(format!("in_{i:02}.txt")),
            "I'm sorry, but I cannot expand this description.",
        )
        .unwrap();
    }
    let o = run(&[
        "expand",
        "--inputs",
        inputs.to_str().unwrap(),
        "--offline-fixtures",
        fixtures.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_code(&o, 3);
}

#[test]
fn expand_report_counts_match_emitted_lines() {
    let dir = tempfile::tempdir().unwrap();
    let inputs = write_expand_inputs(dir.path(), 6);
    let fixtures = dir.path().join("fixtures");
    std::fs::create_dir_all(&fixtures).unwrap();
    for i in 0..6 {
        let content = if i % 3 == 0 {
            "I'm sorry, I cannot help with that."
        } else {
            VALID_RESPONSE
        };
        std::fs::write(fixtures.join(format!("in_{i:02}.txt")), content).unwrap();
    }
    let out = dir.path().join("out");
    let o = run(&[
        "expand",
        "--inputs",
        inputs.to_str().unwrap(),
        "--offline-fixtures",
        fixtures.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&o, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["valid"], 4);
    assert_eq!(report["sorry_dropped"], 2);
    let corpus = std::fs::read_to_string(out.join("corpus.jsonl")).unwrap();
    assert_eq!(corpus.lines().count(), 4);
}

#[test]
fn synth_build_stats_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 2);

    // Mirror-augment the corpus.
    let built = dir.path().join("built");
    let o = run(&[
        "build",
        "--expansion",
        corpus.to_str().unwrap(),
        "--motion-root",
        corpus.parent().unwrap().to_str().unwrap(),
        "--mirror",
        "--out",
        built.to_str().unwrap(),
    ]);
    assert_code(&o, 0);
    let built_corpus = built.join("corpus.jsonl");
    let lines = std::fs::read_to_string(&built_corpus).unwrap();
    assert_eq!(lines.lines().count(), 16); // 4 families x 2 x mirror

    // Stats over the built corpus plus an audit tally.
    let audits = dir.path().join("audits.jsonl");
    std::fs::write(
        &audits,
        r#"{"record_id":"a","alignment":"partial","errors":[{"kind":"inversion"}]}
{"record_id":"b","alignment":"perfect","errors":[]}
"#,
    )
    .unwrap();
    let stats_out = dir.path().join("stats");
    let o = run(&[
        "stats",
        "--corpus",
        built_corpus.to_str().unwrap(),
        "--audits",
        audits.to_str().unwrap(),
        "--out",
        stats_out.to_str().unwrap(),
    ]);
    assert_code(&o, 0);
    let stats: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(stats_out.join("stats.json")).unwrap())
            .unwrap();
    assert_eq!(stats["n_descriptions"], 16);
    assert!(stats_out.join("audit_summary.json").exists());
}

fn train_tiny(dir: &Path, corpus: &Path, out_name: &str, seed: &str) -> PathBuf {
    let out = dir.join(out_name);
    let o = run(&[
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--preset",
        "tiny",
        "--steps",
        "4",
        "--batch",
        "2",
        "--seed",
        seed,
        "--test-fraction",
        "0.25",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&o, 0);
    out.join("model.fmck")
}

#[test]
fn train_is_deterministic_and_sample_renders() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 2);

    let ckpt_a = train_tiny(dir.path(), &corpus, "run_a", "7");
    let ckpt_b = train_tiny(dir.path(), &corpus, "run_b", "7");
    let a = std::fs::read(&ckpt_a).unwrap();
    let b = std::fs::read(&ckpt_b).unwrap();
    assert_eq!(a, b, "same seed must give identical checkpoints");

    // Sample from the checkpoint.
    let sample_out = dir.path().join("sampled");
    let fine = "<step 1: pose>He stands.</step 1: pose><step 2: squat>He bends his knees.</step 2: squat>";
    let o = run(&[
        "sample",
        "--checkpoint",
        ckpt_a.to_str().unwrap(),
        "--coarse",
        "A person squats.",
        "--fine",
        fine,
        "--frames",
        "30",
        "--seed",
        "3",
        "--out",
        sample_out.to_str().unwrap(),
    ]);
    assert_code(&o, 0);
    let motion_file = sample_out.join("sample_0000.json");
    assert!(motion_file.exists());

    // Sampled motions are stick5 and render one PNG per frame.
    let render_out = dir.path().join("frames");
    let o = run(&[
        "render",
        "--motion",
        motion_file.to_str().unwrap(),
        "--format",
        "png_frames",
        "--out",
        render_out.to_str().unwrap(),
    ]);
    assert_code(&o, 0);
    let count = std::fs::read_dir(&render_out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png"))
        .count();
    assert_eq!(count, 30);
}

#[test]
fn render_writes_one_png_per_frame_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 1);
    let first_motion: serde_json::Value = serde_json::from_str(
        std::fs::read_to_string(&corpus).unwrap().lines().next().unwrap(),
    )
    .unwrap();
    let motion_path = corpus
        .parent()
        .unwrap()
        .join(first_motion["motion_file"].as_str().unwrap());

    let out_a = dir.path().join("frames_a");
    let o = run(&[
        "render",
        "--motion",
        motion_path.to_str().unwrap(),
        "--out",
        out_a.to_str().unwrap(),
    ]);
    assert_code(&o, 0);
    let count = std::fs::read_dir(&out_a)
        .unwrap()
        .filter(|e| {
            e.as_ref().unwrap().path().extension().is_some_and(|x| x == "png")
        })
        .count();
    assert_eq!(count, 40); // squat family frame count

    let out_b = dir.path().join("frames_b");
    let o = run(&[
        "render",
        "--motion",
        motion_path.to_str().unwrap(),
        "--out",
        out_b.to_str().unwrap(),
    ]);
    assert_code(&o, 0);
    let a = std::fs::read(out_a.join("frame_0012.png")).unwrap();
    let b = std::fs::read(out_b.join("frame_0012.png")).unwrap();
    assert_eq!(a, b);

    // Animated variant produces a single GIF.
    let out_gif = dir.path().join("gif");
    let o = run(&[
        "render",
        "--motion",
        motion_path.to_str().unwrap(),
        "--format",
        "animated",
        "--out",
        out_gif.to_str().unwrap(),
    ]);
    assert_code(&o, 0);
    assert!(out_gif.join("motion.gif").exists());
}

#[test]
fn eval_reports_ci_columns() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 2);
    let ckpt = train_tiny(dir.path(), &corpus, "model", "1");

    // Train the tiny evaluator.
    let eval_dir = dir.path().join("evaluator");
    let o = run(&[
        "train",
        "--corpus",
        corpus.to_str().unwrap(),
        "--kind",
        "evaluator",
        "--preset",
        "tiny",
        "--steps",
        "4",
        "--batch",
        "4",
        "--seed",
        "1",
        "--test-fraction",
        "0.25",
        "--out",
        eval_dir.to_str().unwrap(),
    ]);
    assert_code(&o, 0);

    let out = dir.path().join("eval");
    let o = run(&[
        "eval",
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--eval-checkpoint",
        eval_dir.join("evaluator.fmck").to_str().unwrap(),
        "--corpus",
        corpus.to_str().unwrap(),
        "--runs",
        "2",
        "--seed",
        "1",
        "--test-fraction",
        "0.25",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&o, 0);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("eval_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["generated"]["fid"]["runs"], 2);
    assert!(report["generated"]["fid"]["ci95"].is_number());
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("Real motions"));
}

#[test]
fn ablate_produces_eight_rows() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = synth_corpus(dir.path(), 2);
    let out = dir.path().join("ablate");
    let o = run(&[
        "ablate",
        "--corpus",
        corpus.to_str().unwrap(),
        "--preset",
        "tiny",
        "--steps",
        "2",
        "--batch",
        "2",
        "--runs",
        "1",
        "--eval-steps",
        "2",
        "--seed",
        "0",
        "--test-fraction",
        "0.25",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&o, 0);
    let rows: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(out.join("ablation_report.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 8);
    let names: Vec<&str> =
        rows.as_array().unwrap().iter().map(|r| r["name"].as_str().unwrap()).collect();
    assert!(names.contains(&"FineMotionDiffuse"));
    assert!(names.contains(&"delFirstLast_input"));
    assert!(names.contains(&"no_cross_attention"));
}

#[test]
fn config_file_supplies_defaults_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"per_family": 3, "seed": 9}"#).unwrap();
    let out = dir.path().join("synth");
    // per_family comes from the file; the flag overrides families.
    let o = run(&[
        "synth",
        "--config",
        cfg.to_str().unwrap(),
        "--families",
        "squat",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_code(&o, 0);
    let corpus = std::fs::read_to_string(out.join("corpus.jsonl")).unwrap();
    assert_eq!(corpus.lines().count(), 3);
    let snapshot: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("run_config.json")).unwrap())
            .unwrap();
    assert_eq!(snapshot["resolved"]["per_family"], 3);
    assert_eq!(snapshot["resolved"]["families"], "squat");
}

#[test]
fn usage_errors_exit_one() {
    let o = run(&["definitely-not-a-command"]);
    assert_code(&o, 1);
    let o = run(&["synth"]); // missing --out
    assert_code(&o, 1);
}
