use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../data")
        .join(name)
}

fn boardsim(out_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boardsim"))
        .arg("--out-dir")
        .arg(out_dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn three_push_cycles_give_three_pushes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(boardsim(
        d,
        &["trace", "gen", "--kind", "push", "--cycles", "3"],
    ));
    let trace = d.join("trace.csv");
    ok(boardsim(d, &["trace", "validate", "--trace", s(&trace)]));
    let stdout = ok(boardsim(d, &["gestures", "run", "--trace", s(&trace)]));
    assert!(stdout.contains("3 pushes"), "{stdout}");
    let events = fs::read_to_string(d.join("events.csv")).unwrap();
    assert_eq!(events.lines().filter(|l| l.ends_with(",Push")).count(), 3);
    let hid = fs::read_to_string(d.join("hid.csv")).unwrap();
    assert_eq!(hid.lines().count(), 1 + 6);
}

#[test]
fn neutral_trace_is_flat() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(boardsim(
        d,
        &[
            "trace",
            "gen",
            "--kind",
            "lean",
            "--direction",
            "neutral",
            "--out",
            "n.csv",
        ],
    ));
    let text = fs::read_to_string(d.join("n.csv")).unwrap();
    let values: Vec<&str> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("timestamp"))
        .map(|l| l.rsplit(',').next().unwrap())
        .collect();
    assert_eq!(values.len(), 100);
    assert!(values.iter().all(|v| v.parse::<f64>().unwrap() == 150.0));
}

#[test]
fn missing_required_flag_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(boardsim(d, &["trace", "gen"]).status.code(), Some(2));
    assert_eq!(
        boardsim(d, &["trace", "gen", "--kind", "push"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        boardsim(d, &["trace", "gen", "--kind", "lean"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(boardsim(d, &["pipeline", "run"]).status.code(), Some(2));
}

fn pipeline(d: &Path, trace: &Path, extra: &[&str]) -> String {
    let course = data("demo_course.json");
    let mut args = vec![
        "pipeline",
        "run",
        "--trace",
        s(trace),
        "--course",
        s(&course),
    ];
    args.extend_from_slice(extra);
    ok(boardsim(d, &args));
    fs::read_to_string(d.join("report.csv")).unwrap()
}

fn push_trace(d: &Path) -> PathBuf {
    ok(boardsim(
        d,
        &[
            "trace",
            "gen",
            "--kind",
            "push",
            "--cycles",
            "12",
            "--cadence-hz",
            "1.5",
        ],
    ));
    d.join("trace.csv")
}

#[test]
fn lossless_channel_is_transparent() {
    let dir = tempfile::tempdir().unwrap();
    let trace = push_trace(dir.path());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let with_link = pipeline(&a, &trace, &["--loss-rate", "0"]);
    let direct = pipeline(&b, &trace, &["--no-channel"]);
    assert_eq!(with_link, direct);
    assert!(a.join("capture.bin").is_file());
    assert!(!b.join("capture.bin").exists());
    let stats = fs::read_to_string(a.join("link_stats.csv")).unwrap();
    assert!(stats.contains("right_shoe,20,0,0"), "{stats}");
}

#[test]
fn total_loss_is_dnf() {
    let dir = tempfile::tempdir().unwrap();
    let trace = push_trace(dir.path());
    let report = pipeline(&dir.path().join("x"), &trace, &["--loss-rate", "1.0"]);
    assert!(
        report.lines().nth(1).unwrap().starts_with("DNF,0,0,0,"),
        "{report}"
    );
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(boardsim(
        d,
        &[
            "--seed",
            "17",
            "trace",
            "gen",
            "--kind",
            "push",
            "--cycles",
            "20",
            "--noise-sigma",
            "2.5",
        ],
    ));
    let trace = d.join("trace.csv");
    let run = |name: &str| {
        let out = d.join(name);
        ok(boardsim(
            &out,
            &[
                "--seed",
                "99",
                "pipeline",
                "run",
                "--trace",
                s(&trace),
                "--course",
                s(&data("demo_course.json")),
                "--loss-rate",
                "0.3",
                "--reorder-window",
                "5",
            ],
        ));
        out
    };
    let (x, y) = (run("x"), run("y"));
    for f in [
        "events.csv",
        "hid.csv",
        "link_stats.csv",
        "report.csv",
        "capture.bin",
    ] {
        assert_eq!(
            fs::read(x.join(f)).unwrap(),
            fs::read(y.join(f)).unwrap(),
            "{f}"
        );
    }
    let stats = fs::read_to_string(x.join("link_stats.csv")).unwrap();
    assert!(
        !stats.contains("right_shoe,50,"),
        "a 0.3 loss rate should drop something"
    );
}

#[test]
fn stage_failure_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = boardsim(
        d,
        &[
            "pipeline",
            "run",
            "--trace",
            "missing.csv",
            "--course",
            s(&data("demo_course.json")),
        ],
    );
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("stage `load`"), "{err}");
}

#[test]
fn config_file_applies() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let trace = push_trace(d);
    let cfg = d.join("run.toml");
    // Dips reach 100 degrees, so a 95 degree threshold is never crossed.
    fs::write(
        &cfg,
        "[thresholds]\npush_angle_deg = 95.0\ncrouch_angle_deg = 60.0\n",
    )
    .unwrap();
    let stdout = ok(boardsim(
        d,
        &["--config", s(&cfg), "gestures", "run", "--trace", s(&trace)],
    ));
    assert!(stdout.starts_with("0 events"), "{stdout}");

    fs::write(&cfg, "[thresholds]\nwarp = 1\n").unwrap();
    let out = boardsim(
        d,
        &["--config", s(&cfg), "gestures", "run", "--trace", s(&trace)],
    );
    assert!(!out.status.success());
}

#[test]
fn sim_run_in_parallel_matches_serial() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut files = Vec::new();
    for (i, t) in [[0, 400, 900], [0, 0, 3000], [100, 200, 5000]]
        .iter()
        .enumerate()
    {
        let p = d.join(format!("e{i}.csv"));
        let body: String = t.iter().map(|ms| format!("{ms},Push\n")).collect();
        fs::write(&p, format!("timestamp_ms,kind\n{body}")).unwrap();
        files.push(p);
    }
    let course = data("demo_course.json");
    let mut args = vec![
        "sim",
        "run",
        "--course",
        s(&course),
        "--workers",
        "3",
        "--events",
    ];
    args.extend(files.iter().map(|p| s(p)));
    ok(boardsim(d, &args));
    let all = fs::read_to_string(d.join("reports.csv")).unwrap();
    let rows: Vec<&str> = all.lines().skip(1).collect();
    assert_eq!(rows.len(), 3);
    for (file, row) in files.iter().zip(rows) {
        let single = d.join("single");
        ok(boardsim(
            &single,
            &["sim", "run", "--course", s(&course), "--events", s(file)],
        ));
        let report = fs::read_to_string(single.join("report.csv")).unwrap();
        assert_eq!(
            row,
            format!("{},{}", file.display(), report.lines().nth(1).unwrap())
        );
    }
}

#[test]
fn ks_fixture_matches_published_table() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(boardsim(
        dir.path(),
        &["stats", "ks", "--counts", s(&data("enjoyment_counts.csv"))],
    ));
    assert!(stdout.contains("D = 0.266667"), "{stdout}");
    let line = stdout.lines().find(|l| l.starts_with("0.05")).unwrap();
    assert!(line.contains("0.2400  Reject"), "{line}");
    assert!(stdout.contains("but not at alpha 0.01"));
    let csv = fs::read_to_string(dir.path().join("ks.csv")).unwrap();
    assert!(
        csv.contains("one_sample_table,0.05,30,0.266666667,0.240000,Reject"),
        "{csv}"
    );
}

#[test]
fn ks_from_survey_question() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let mut body = String::from("participant,controller,enjoy,other\n");
    for (ctrl, counts) in [("N", [1, 2, 8, 10, 9]), ("B", [0, 0, 4, 9, 17])] {
        let mut p = 0;
        for (value, &c) in (1..=5).zip(&counts) {
            for _ in 0..c {
                p += 1;
                body += &format!("p{p},{ctrl},{value},3\n");
            }
        }
    }
    let survey = d.join("s.csv");
    fs::write(&survey, body).unwrap();
    let stdout = ok(boardsim(
        d,
        &["stats", "ks", "--survey", s(&survey), "--question", "enjoy"],
    ));
    assert!(stdout.contains("D = 0.266667"), "{stdout}");
    let by_index = ok(boardsim(
        d,
        &["stats", "ks", "--survey", s(&survey), "--question", "1"],
    ));
    assert_eq!(stdout, by_index);
}

#[test]
fn identical_surveys_differ_by_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let survey = d.join("s.csv");
    fs::write(
        &survey,
        "participant,controller,q1,q2,q3\np1,X,1,4,5\np2,X,3,3,2\np3,X,5,2,2\n",
    )
    .unwrap();
    let stdout = ok(boardsim(
        d,
        &["stats", "diff", "--survey", s(&survey), s(&survey)],
    ));
    assert!(stdout.trim_end().ends_with("0.00"), "{stdout}");
    let items = ok(boardsim(d, &["stats", "items", "--survey", s(&survey)]));
    assert!(items.contains("3.00"), "{items}");
    assert!(d.join("items.csv").is_file());
}

#[test]
fn reconstructed_means_sum_to_published_total() {
    let dir = tempfile::tempdir().unwrap();
    let stdout = ok(boardsim(
        dir.path(),
        &[
            "stats",
            "diff",
            "--summary",
            s(&data("reconstructed_item_means.csv")),
        ],
    ));
    assert!(stdout.trim_end().ends_with("5.33"), "{stdout}");
    let csv = fs::read_to_string(dir.path().join("diff.csv")).unwrap();
    assert_eq!(csv.lines().count(), 22);
}

#[test]
fn survey_parse_error_names_location() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let survey = d.join("bad.csv");
    fs::write(&survey, "participant,controller,q1\np1,X,2\np2,X,nine\n").unwrap();
    let out = boardsim(d, &["stats", "items", "--survey", s(&survey)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 3"), "{err}");
}
