use std::path::PathBuf;
use std::process::Command;

use cobfc::harness::Report;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cobfc"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("cobfc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn synth_then_run_json() {
    let data = scratch("xor.arff");
    let ok = bin().args(["synth", "--kind", "xor", "--output"]).arg(&data).status().unwrap();
    assert!(ok.success());
    let out = bin()
        .args(["run", "--method", "cobfc", "--folds", "3", "--seed", "7", "--input"])
        .arg(&data)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: Report = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report.runs.len(), 1);
    assert_eq!(report.runs[0].folds, 3);
    // JSON -> parse -> JSON is stable.
    let again = serde_json::to_string_pretty(&report).unwrap() + "\n";
    assert_eq!(again.as_bytes(), out.stdout.as_slice());
}

#[test]
fn construct_writes_features_and_data() {
    let data = scratch("fig.csv");
    let features = scratch("features.json");
    let augmented = scratch("fig_aug.arff");
    assert!(bin().args(["synth", "--kind", "figure-one", "--output"]).arg(&data).status().unwrap().success());
    let status = bin()
        .arg("construct")
        .arg("--input")
        .arg(&data)
        .arg("--features")
        .arg(&features)
        .arg("--output")
        .arg(&augmented)
        .status()
        .unwrap();
    assert!(status.success());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&features).unwrap()).unwrap();
    let n = json["features"].as_array().unwrap().len();
    assert!(n >= 3);
    let arff = std::fs::read_to_string(&augmented).unwrap();
    assert_eq!(arff.matches("{0,1}").count(), n);
}

#[test]
fn errors_exit_nonzero() {
    let out = bin().args(["run", "--input", "/definitely/missing.arff"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.arff"));

    let bad = scratch("bad.arff");
    std::fs::write(&bad, "@relation r\n@attribute a numeric\n@attribute class {p,q}\n@data\n1,z\n").unwrap();
    let out = bin().arg("construct").arg("--input").arg(&bad).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"));

    let out = bin().args(["run", "--learner", "svm", "--input", "x.arff"]).output().unwrap();
    assert!(!out.status.success());
}
