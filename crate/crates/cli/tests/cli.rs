use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("renorm-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn renorm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_renorm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RENORM_THREADS", "2")
        .output()
        .unwrap()
}

fn error_json(o: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&o.stderr);
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

#[test]
fn rotation_counts_follow_fibonacci_and_are_deterministic() {
    let dir = scratch("rotation");
    let o = renorm(&["rotation", "--level", "12"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read(dir.join("rotation.csv")).unwrap();
    let mut rdr = csv::Reader::from_reader(first.as_slice());
    let headers = rdr.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let mut rows = 0;
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert_eq!(rec[col("j_count")], rec[col("q_2n1")]);
        assert_eq!(rec[col("i_count")], rec[col("q_2n")]);
        assert_eq!(&rec[col("refine_ok")], "true");
        rows += 1;
    }
    assert_eq!(rows, 13);
    let part = std::fs::read_to_string(dir.join("partition.csv")).unwrap();
    assert!(part.starts_with("level,kind,word,left,right\n"));

    let o = renorm(&["rotation", "--level", "12"], &dir);
    assert!(o.status.success());
    assert_eq!(std::fs::read(dir.join("rotation.csv")).unwrap(), first);

    let m: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("rotation.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["command"], "rotation");
    assert_eq!(m["config_sha256"].as_str().unwrap().len(), 64);
    assert!(m["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn invalid_input_exits_with_validation_code() {
    let dir = scratch("invalid");
    let o = renorm(&["henon", "--nu", "1.5"], &dir);
    assert_eq!(o.status.code(), Some(2));
    let e = error_json(&o);
    assert_eq!(e["error"], "Config");
    assert!(e["message"].as_str().unwrap().contains("nu"));

    let o = renorm(&["rotation", "--level", "13"], &dir);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_fixed_point_is_reported() {
    let dir = scratch("missing");
    let o = renorm(&["spectrum"], &dir);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_json(&o)["error"], "MissingArtifact");
}

#[test]
fn config_file_takes_precedence_over_flags() {
    let dir = scratch("config");
    let cfg = dir.join("run.toml");
    std::fs::write(&cfg, "level = 3\n").unwrap();
    let o = renorm(&["rotation", "--level", "9", "--config", cfg.to_str().unwrap()], &dir);
    assert!(o.status.success());
    let rows = std::fs::read_to_string(dir.join("rotation.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 4);

    std::fs::write(&cfg, "levle = 3\n").unwrap();
    let o = renorm(&["rotation", "--config", cfg.to_str().unwrap()], &dir);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fixed_point_artifact_feeds_the_spectrum() {
    let dir = scratch("fp");
    let o = renorm(&["fixed-point", "--degree", "40"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fp: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("fixedpoint.json")).unwrap()).unwrap();
    assert_eq!(fp["schema"], 1);
    assert_eq!(fp["degree"], 40);
    assert_eq!(fp["eta"].as_array().unwrap().len(), 41);
    assert!(fp["residual"].as_f64().unwrap() < 1e-11);

    let o = renorm(&["spectrum", "--dim", "20"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sp: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("spectrum.json")).unwrap()).unwrap();
    assert_eq!(sp["expanding_count"], 1);
}

#[test]
fn degenerate_arc_matches_the_one_dimensional_arc() {
    let dir = scratch("arc0");
    let o = renorm(&["arc", "--nu", "0", "--level", "4"], &dir);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let arc = std::fs::read_to_string(dir.join("arc.csv")).unwrap();
    assert!(arc.starts_with("t,word,level,x_re,x_im,y_re,y_im\n"));
    let stdout = String::from_utf8_lossy(&o.stdout);
    let line = stdout.lines().find(|l| l.contains("degenerate")).unwrap();
    let err: f64 = line.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(err < 1e-10);
}
