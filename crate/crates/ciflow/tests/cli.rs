use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn corpus(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn ci<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_ci")).args(args).output().expect("spawn ci")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

const SUBCOMMANDS: [&str; 12] = [
    "validate",
    "stats",
    "incomplete",
    "bloat",
    "vagueness",
    "diff",
    "aggregate",
    "score-words",
    "score-spans",
    "screen",
    "readability",
    "replay",
];

#[test]
fn help_for_every_subcommand() {
    let out = ci(["--help"]);
    assert_eq!(out.status.code(), Some(0));
    for sub in SUBCOMMANDS {
        assert!(stdout(&out).contains(sub), "top-level help lists {sub}");
        let out = ci([sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub} --help");
        assert!(stdout(&out).contains("Usage:"), "{sub} --help prints usage");
        assert!(out.stderr.is_empty());
    }
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        vec!["frobnicate"],
        vec![],
        vec!["stats"],
        vec!["stats", "x.json", "--format", "xml"],
        vec!["diff", "a.json", "b.json", "--thresholds", "sender=140"],
        vec!["diff", "a.json", "b.json", "--thresholds", "colour=50"],
        vec!["incomplete", "x.json", "--required", "nobody"],
    ] {
        let out = ci(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
        assert!(out.stdout.is_empty());
    }
}

#[test]
fn processing_errors_exit_1() {
    let out = ci(["stats", "does/not/exist.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("does/not/exist.json"), "{}", stderr(&out));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"policy_id": "p", "version_label": "v", "flows": [{"id": "f"}]}"#).unwrap();
    let out = ci([Path::new("validate"), &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bad.json"));

    let markup = dir.path().join("bad.xml");
    std::fs::write(&markup, "<flow id=\"f\"><sender>We</recipient></flow>").unwrap();
    let out = ci([Path::new("validate"), &markup]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));
}

#[test]
fn validate_reports_counts() {
    let out = ci([Path::new("validate"), &corpus("fb_prev.json")]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "OK, 42 flows\n");
    let out = ci([Path::new("validate"), &corpus("fb_updated.json")]);
    assert_eq!(stdout(&out), "OK, 72 flows\n");
    let out = ci([Path::new("validate"), &corpus("example_flow.xml")]);
    assert_eq!(stdout(&out), "OK, 1 flow\n");
    let out = ci([Path::new("validate"), &corpus("replay")]);
    assert_eq!(stdout(&out), "OK, 13 excerpts, 176 responses\n");
}

#[test]
fn incomplete_csv_echoes_percentages() {
    let out = ci([Path::new("incomplete"), &corpus("fb_prev.json"), Path::new("--format"), Path::new("csv")]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("any,19,42,45.24\n"), "{}", stdout(&out));
    let out = ci([Path::new("incomplete"), &corpus("fb_updated.json"), Path::new("--format"), Path::new("csv")]);
    assert!(stdout(&out).contains("any,49,72,68.06\n"));
}

#[test]
fn diff_of_a_document_with_itself_matches_everything() {
    let doc = corpus("fb_prev.json");
    let out = ci([Path::new("diff"), &doc, &doc]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let kinds = v["kinds"].as_object().unwrap();
    assert_eq!(kinds.len(), 4);
    for (kind, d) in kinds {
        let unique = v["unique_counts"][kind]["previous"].as_u64().unwrap();
        assert_eq!(d["matched"].as_array().unwrap().len() as u64, unique, "{kind}");
        assert!(d["added"].as_array().unwrap().is_empty());
        assert!(d["removed"].as_array().unwrap().is_empty());
        for p in d["matched"].as_array().unwrap() {
            assert_eq!(p["similarity"], 100);
            assert_eq!(p["previous"], p["updated"]);
        }
    }
}

#[test]
fn diff_markdown_has_sections() {
    let out = ci([
        Path::new("diff"),
        &corpus("fb_prev.json"),
        &corpus("fb_updated.json"),
        Path::new("--format"),
        Path::new("md"),
    ]);
    let md = stdout(&out);
    for heading in ["## recipient: matched", "## recipient: added", "## recipient: removed", "## attribute: review"] {
        assert!(md.contains(heading), "missing {heading}");
    }
    assert!(md.contains("| content creator |"));
}

#[test]
fn vagueness_flags_modality() {
    let dir = tempfile::tempdir().unwrap();
    let doc = dir.path().join("p.xml");
    std::fs::write(
        &doc,
        "<flow id=\"a\"><recipient>We</recipient> may share <attribute>your name</attribute>.</flow>\n\
         <flow id=\"b\"><recipient>We</recipient> share <attribute>your email</attribute>.</flow>",
    )
    .unwrap();
    let out = ci([Path::new("vagueness"), &doc, Path::new("--format"), Path::new("csv")]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("modality,1,2,50.00\n"), "{text}");
    assert!(text.contains("a,modality,may,"), "{text}");

    let lexicon = dir.path().join("lex.json");
    std::fs::write(&lexicon, r#"{"conditionality": ["share"]}"#).unwrap();
    let out = ci([
        Path::new("vagueness"),
        &doc,
        Path::new("--lexicon"),
        &lexicon,
        Path::new("--format"),
        Path::new("csv"),
    ]);
    let text = stdout(&out);
    assert!(text.contains("conditionality,2,2,100.00\n"), "{text}");
    assert!(text.contains("modality,0,2,0.00\n"), "{text}");
}

#[test]
fn out_dir_refuses_to_overwrite_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let run = |force: bool| {
        let mut args = vec![
            "bloat".into(),
            corpus("fb_prev.json").into_os_string(),
            "--format".into(),
            "json,csv,md".into(),
            "--out".into(),
            dir.path().into(),
        ];
        if force {
            args.push("--force".into());
        }
        ci(args)
    };
    let out = run(false);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    for f in ["bloat.json", "bloat.csv", "bloat.md"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let csv = std::fs::read_to_string(dir.path().join("bloat.csv")).unwrap();
    assert!(csv.starts_with("kind,instances,flows\nsender,2,3\nrecipient,2,9\nrecipient,10,1\n"), "{csv}");

    std::fs::write(dir.path().join("bloat.json"), "sentinel").unwrap();
    let out = run(false);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("bloat.json"));
    assert_eq!(std::fs::read_to_string(dir.path().join("bloat.json")).unwrap(), "sentinel");

    let out = run(true);
    assert_eq!(out.status.code(), Some(0));
    assert_ne!(std::fs::read_to_string(dir.path().join("bloat.json")).unwrap(), "sentinel");
    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .filter(|n| !n.to_string_lossy().starts_with("bloat."))
        .collect();
    assert!(leftovers.is_empty(), "{leftovers:?}");
}

#[test]
fn replay_outputs_are_byte_identical_across_runs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = ci([
            Path::new("replay"),
            &corpus("replay"),
            Path::new("--format"),
            Path::new("json,csv,md"),
            Path::new("--out"),
            dir.path(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 5, "{names:?}");
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert_eq!(x, y, "{name:?} differs");
    }
}

#[test]
fn crowd_subcommands_run_on_the_bundle() {
    for sub in ["aggregate", "score-words", "score-spans", "screen", "readability"] {
        let out = ci([Path::new(sub), &corpus("replay")]);
        assert_eq!(out.status.code(), Some(0), "{sub}: {}", stderr(&out));
        let _: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    }
    let out = ci([
        Path::new("score-words"),
        &corpus("replay"),
        Path::new("--per-annotator"),
        Path::new("--format"),
        Path::new("csv"),
    ]);
    let text = stdout(&out);
    // one row per work response plus the header and micro rows
    assert!(text.lines().filter(|l| l.contains(",a01,")).count() >= 4, "{text}");
}

#[test]
fn screen_reports_failures() {
    let out = ci([Path::new("screen"), &corpus("replay"), Path::new("--format"), Path::new("csv")]);
    let text = stdout(&out);
    for f in ["f01", "f02", "f03", "f04"] {
        let line = text.lines().find(|l| l.starts_with(f)).unwrap();
        assert!(line.starts_with(&format!("{f},false,")), "{line}");
    }
    assert_eq!(text.lines().filter(|l| l.contains(",true,")).count(), 21);
}
