use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use field_atlas_core::fixture;
use tempfile::TempDir;

fn atlas(data: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_atlas"))
        .arg("--data-dir")
        .arg(data)
        .args(args)
        .env_remove("ATLAS_CONFIG")
        .output()
        .expect("run atlas")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Compares with `tests/golden/<name>`; `ATLAS_UPDATE_GOLDEN=1` rewrites it.
fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    if std::env::var_os("ATLAS_UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(actual, expected, "golden file {name} differs");
}

fn with_fixture() -> TempDir {
    let dir = TempDir::new().unwrap();
    let o = atlas(dir.path(), &["fixture"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    dir
}

#[test]
fn etm_outputs_are_golden() {
    let dir = with_fixture();
    let out = TempDir::new().unwrap();
    let svg = out.path().join("met.svg");
    let json = out.path().join("met.json");
    let o = atlas(
        dir.path(),
        &["etm", "--session", fixture::MET_SESSION, "--svg", svg.to_str().unwrap(), "--json", json.to_str().unwrap()],
    );
    assert!(o.status.success());
    golden("etm_met.txt", &stdout(&o));
    let svg_text = std::fs::read_to_string(&svg).unwrap();
    assert_eq!(svg_text.matches(r#"class="pivot-marker""#).count(), 1);
    assert_eq!(svg_text.matches(r#"class="card-provocation""#).count(), 1);
    golden("met.svg", &svg_text);
    golden("met_trajectory.json", &std::fs::read_to_string(&json).unwrap());
}

#[test]
fn query_outputs_are_golden() {
    let dir = with_fixture();
    let mut text = String::new();
    for args in [
        &["links", "--learner", "maya"][..],
        &["compare", "--a", fixture::MET_SESSION, "--b", fixture::LINCOLN_SESSION][..],
        &["compare", "--a", fixture::MET_SESSION, "--b", fixture::LINCOLN_SESSION, "--metric", "dtw"][..],
        &["provoke", "--card", fixture::MET_ICE_CARD][..],
        &["provoke", "--card", fixture::LINCOLN_CARD][..],
        &["verify", "--session", fixture::LINCOLN_SESSION, "--json"][..],
    ] {
        let o = atlas(dir.path(), args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        text.push_str(&format!("$ atlas {}\n{}", args.join(" "), stdout(&o)));
    }
    golden("queries.txt", &text);
}

#[test]
fn verify_exit_code_tracks_authenticity() {
    let dir = with_fixture();
    assert_eq!(atlas(dir.path(), &["verify", "--session", fixture::MET_SESSION]).status.code(), Some(0));

    let path = dir.path().join(format!("{}.jsonl", fixture::MET_SESSION));
    let text = std::fs::read_to_string(&path).unwrap();
    let tampered = text.replacen("standing in the light", "standing in the lighT", 1);
    assert_ne!(text, tampered);
    let copy = dir.path().join("copy.txt");
    std::fs::write(&copy, tampered).unwrap();
    let o = atlas(dir.path(), &["verify", "--file", copy.to_str().unwrap(), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["authentic"], false);
    assert_eq!(report["violations"][0]["code"], "A4");
    assert_eq!(report["violations"][0]["card_ids"][0], "met-760-0001");

    let o = atlas(dir.path(), &["verify", "--session", "missing"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn gate_exit_code() {
    let dir = with_fixture();
    let reject = atlas(dir.path(), &["gate", "--session", fixture::MET_SESSION, "--text", fixture::DECLARATIVE_CONTROL]);
    assert_eq!(reject.status.code(), Some(1));
    assert!(stdout(&reject).starts_with("rejected"));
    let pass = atlas(dir.path(), &["gate", "--session", fixture::MET_SESSION, "--text", fixture::MET_PROVOCATION, "--json"]);
    assert_eq!(pass.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&pass)).unwrap();
    assert_eq!(v["passed"], true);
    assert_eq!(v["rule_results"].as_array().unwrap().len(), 4);
}

#[test]
fn new_ingest_and_provoke_append() {
    let dir = TempDir::new().unwrap();
    let o = atlas(dir.path(), &["new", "--learner", "ana", "--title", "walk", "--id", "w1", "--geofence", "40.7794,-73.9632,200"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let input = TempDir::new().unwrap();
    let file = input.path().join("cards.jsonl");
    std::fs::write(
        &file,
        concat!(
            r#"{"ts":"2025-06-01T10:00:00Z","lat":40.7794,"lon":-73.9632,"voice_text":"moss on the wall","idempotency_key":"a"}"#,
            "\n\n",
            r#"{"ts":"2025-06-01T10:01:00Z","lat":40.7794,"lon":-73.9632,"voice_text":"moss and lichen on the old wall","idempotency_key":"b"}"#,
            "\n",
        ),
    )
    .unwrap();
    let o = atlas(dir.path(), &["ingest", file.to_str().unwrap(), "--session", "w1"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    golden("ingest.txt", &stdout(&o));
    // Re-running the same file is a no-op thanks to the keys.
    let again = atlas(dir.path(), &["ingest", file.to_str().unwrap(), "--session", "w1"]);
    assert!(stdout(&again).contains("(replayed)"));

    let o = atlas(dir.path(), &["provoke", "--card", "w1-0000", "--append", "--json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["card"]["kind"], "provocation");
    assert_eq!(atlas(dir.path(), &["verify", "--session", "w1"]).status.code(), Some(0));

    // Importing a session file.
    let other = TempDir::new().unwrap();
    let o = atlas(other.path(), &["ingest", dir.path().join("w1.jsonl").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        std::fs::read(other.path().join("w1.jsonl")).unwrap(),
        std::fs::read(dir.path().join("w1.jsonl")).unwrap()
    );
}

#[test]
fn config_file_is_honoured() {
    let dir = with_fixture();
    let cfg = dir.path().join("atlas.toml");
    std::fs::write(&cfg, "[auth]\nt_min = 100000.0\n").unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_atlas"))
        .args(["--data-dir", dir.path().to_str().unwrap(), "--config", cfg.to_str().unwrap()])
        .args(["verify", "--session", fixture::MET_SESSION])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("A5"));
}
