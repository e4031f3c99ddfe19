use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn config() -> String {
    fixture("mini_sector/config.toml").display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sidewalk-audit"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn missing_config_exits_2() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "-c",
        "/nonexistent/config.toml",
        "-o",
        out.path().to_str().unwrap(),
        "audit",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn missing_network_exits_2() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&[
        "-c",
        &config(),
        "--set",
        "network=/nonexistent/net.geojson",
        "-o",
        out.path().to_str().unwrap(),
        "audit",
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn score_without_earlier_stages_exits_2() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["-c", &config(), "-o", out.path().to_str().unwrap(), "score"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn unknown_config_key_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "trace_budget = 5\n").unwrap();
    let o = run(&["-c", cfg.to_str().unwrap(), "-o", dir.path().to_str().unwrap(), "audit"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

fn audit_with_labels(csv: &str) -> Output {
    let dir = tempfile::tempdir().unwrap();
    let labels = dir.path().join("labels.csv");
    std::fs::write(&labels, csv).unwrap();
    let set = format!("labels={}", labels.display());
    run(&[
        "-c",
        &config(),
        "--set",
        &set,
        "-o",
        dir.path().join("out").to_str().unwrap(),
        "audit",
    ])
}

#[test]
fn empty_label_file_exits_3() {
    let o = audit_with_labels("label_id,segment_id,label_type,severity,tags,lat,lon,pano_id\n");
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn removed_tag_is_rejected_with_its_line() {
    let mut csv = std::fs::read_to_string(fixture("mini_sector/labels.csv")).unwrap();
    csv.push_str("L999,0,ObstacleInPath,2,mailbox,30.7333,76.7799,p\n");
    let lines = csv.lines().count();
    let o = audit_with_labels(&csv);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains(&format!("line {lines}")), "{}", stderr(&o));
}

#[test]
fn logs_are_json_lines() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["-c", &config(), "-o", out.path().to_str().unwrap(), "pois"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let logs: Vec<serde_json::Value> = stderr(&o)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("{l:?}: {e}")))
        .collect();
    assert!(!logs.is_empty());
    assert!(logs.iter().all(|v| v["level"].is_string() && v["msg"].is_string()));
}

#[test]
fn staged_run_matches_full_audit() {
    let dir = tempfile::tempdir().unwrap();
    let staged = dir.path().join("staged");
    for stage in ["pois", "trace", "coverage", "score"] {
        let o = run(&["-c", &config(), "-o", staged.to_str().unwrap(), stage]);
        assert!(o.status.success(), "{stage}: {}", stderr(&o));
    }
    let full = dir.path().join("full");
    assert!(run(&["-c", &config(), "-o", full.to_str().unwrap(), "audit"])
        .status
        .success());
    for f in ["scores.json", "summary.csv", "heatmap.geojson", "findings.json"] {
        assert_eq!(
            std::fs::read(staged.join(f)).unwrap(),
            std::fs::read(full.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn summary_csv_marks_empty_categories() {
    let out = tempfile::tempdir().unwrap();
    assert!(run(&["-c", &config(), "-o", out.path().to_str().unwrap(), "audit"])
        .status
        .success());
    let csv = std::fs::read_to_string(out.path().join("summary.csv")).unwrap();
    assert!(csv.starts_with("level,id,score,weight,sector_id\n"));
    assert!(csv.lines().any(|l| l.starts_with("category,") && l.contains("no data")));
}

#[test]
fn guidance_logs_one_line_per_trigger() {
    let out = tempfile::tempdir().unwrap();
    let o = run(&["-c", &config(), "-o", out.path().to_str().unwrap(), "guidance"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let text = std::fs::read_to_string(out.path().join("guidance.jsonl")).unwrap();
    let lines: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len() as u64, summary["triggered"].as_u64().unwrap());
    assert!(summary["segments"].as_u64().unwrap() <= summary["triggered"].as_u64().unwrap());
    for l in &lines {
        for key in ["segment_id", "road_type", "text", "degraded", "model_id"] {
            assert!(!l[key].is_null(), "missing {key} in {l}");
        }
        assert!(l["text"].as_str().unwrap().chars().count() <= 600);
    }
}

#[test]
fn rate_writes_tables_with_undefined_marker() {
    let out = tempfile::tempdir().unwrap();
    let ratings = fixture("ratings/sample_ratings.csv");
    let o = run(&["-o", out.path().to_str().unwrap(), "rate", ratings.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let desc = std::fs::read_to_string(out.path().join("descriptive.csv")).unwrap();
    assert_eq!(desc.lines().count(), 4);
    let agree = std::fs::read_to_string(out.path().join("agreement.csv")).unwrap();
    assert!(
        agree.lines().any(|l| l.starts_with("Relevance,R1-R2,n/a,n/a,")),
        "{agree}"
    );
    assert_eq!(agree.lines().count(), 1 + 3 * 3);
}

#[test]
fn incomplete_ratings_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    std::fs::write(
        &path,
        "criterion,rater,item,score\nRelevance,R1,1,5\nRelevance,R2,2,4\n",
    )
    .unwrap();
    let o = run(&["-o", dir.path().to_str().unwrap(), "rate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}
