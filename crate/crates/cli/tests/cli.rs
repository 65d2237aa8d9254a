use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fx(rel: &str) -> PathBuf {
    fixtures().join(rel)
}

fn trustmap<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_trustmap"))
        .args(args)
        .output()
        .expect("spawn trustmap")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn survey_paths() -> Vec<PathBuf> {
    ["me1", "me2", "me3", "me4"]
        .iter()
        .map(|s| fx(&format!("surveys/{s}.json")))
        .collect()
}

#[test]
fn quantifies_four_surveys_and_writes_reports() {
    let dir = TempDir::new().unwrap();
    let mut args: Vec<PathBuf> = vec!["trust-quantify".into()];
    args.extend(survey_paths());
    args.extend(["--out".into(), dir.path().to_path_buf()]);
    let o = trustmap(&args);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "expert_id\ttrust_value\tband\toutcome\titerations");
    assert_eq!(lines.len(), 5);
    assert!(lines[4].starts_with("ME4\t0.0000\tignorance\tfixed-point\t"), "{}", lines[4]);
    for s in ["me1", "me2", "me3", "me4"] {
        assert!(dir.path().join(format!("{s}.report.json")).is_file());
    }
    assert_eq!(std::fs::read_to_string(dir.path().join("summary.tsv")).unwrap(), out);
    let me4 = std::fs::read_to_string(dir.path().join("me4.report.json")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&me4).unwrap();
    assert_eq!(v["kind"], "trust-report");
    assert_eq!(v["trust_value"], 0.0);
    assert_eq!(v["band"], "ignorance");
}

#[test]
fn empty_input_list_is_an_input_error() {
    let o = trustmap(["trust-quantify"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no surveys given"));
}

fn write_survey_with(dir: &Path, name: &str, c1_label: &str) -> PathBuf {
    let text = std::fs::read_to_string(fx("surveys/me4.json")).unwrap();
    let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
    v["ratings"]["C1"] = c1_label.into();
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(&v).unwrap()).unwrap();
    p
}

#[test]
fn unknown_label_names_file_field_and_label() {
    let dir = TempDir::new().unwrap();
    let bad = write_survey_with(dir.path(), "bad.json", "Agree a lot");
    let o = trustmap([
        "trust-quantify".as_ref(),
        fx("surveys/me1.json").as_os_str(),
        bad.as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad.json"), "{err}");
    assert!(err.contains("ratings.C1"), "{err}");
    assert!(err.contains("\"Agree a lot\""), "{err}");
    assert!(stdout(&o).is_empty(), "nothing is reported when an input is bad");
}

#[test]
fn strict_labels_reject_typographic_apostrophes() {
    let p = fx("surveys/me4.json");
    let o = trustmap(["trust-quantify".as_ref(), p.as_os_str(), "--strict-labels".as_ref()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("did you mean"), "{}", stderr(&o));
    let o = trustmap(["trust-quantify".as_ref(), p.as_os_str()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn invalid_config_flags_are_input_errors() {
    let p = fx("surveys/me4.json");
    let o = trustmap(["trust-quantify".as_ref(), p.as_os_str(), "--epsilon".as_ref(), "2".as_ref()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("epsilon"));
    let o = trustmap(["trust-quantify".as_ref(), p.as_os_str(), "--activation".as_ref(), "relu".as_ref()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_is_an_io_error() {
    let o = trustmap(["trust-quantify", "/definitely/not/here.json"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("/definitely/not/here.json"));
}

#[test]
fn manifest_resolves_paths_relative_to_itself() {
    let dir = TempDir::new().unwrap();
    for s in ["me3", "me4"] {
        std::fs::copy(fx(&format!("surveys/{s}.json")), dir.path().join(format!("{s}.json"))).unwrap();
    }
    std::fs::copy(fx("covid_rules.rules"), dir.path().join("r.rules")).unwrap();
    std::fs::copy(fx("covid_patients.csv"), dir.path().join("p.csv")).unwrap();
    let manifest = r#"{
        "format_version": 1,
        "kind": "run-manifest",
        "inputs": ["me3.json", "me4.json"],
        "rules": "r.rules",
        "patients": "p.csv",
        "config": { "epsilon": 1e-5, "max_iterations": 100, "cycle_window": 50 },
        "output": "out"
    }"#;
    let mpath = dir.path().join("run.json");
    std::fs::write(&mpath, manifest).unwrap();
    let o = trustmap(["run".as_ref(), mpath.as_os_str()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = dir.path().join("out");
    for f in ["me3.report.json", "me4.report.json", "summary.tsv", "predictions.json", "predictions.tsv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(stdout(&o).contains("Patient 3\tPositive\tr2"));

    std::fs::write(&mpath, r#"{"format_version":1,"kind":"run-manifest","inputs":[]}"#).unwrap();
    let o = trustmap(["run".as_ref(), mpath.as_os_str()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no surveys given"));
}

fn fcm(name: &str, out: Option<&Path>) -> Output {
    let m = fx(&format!("models/{name}.json"));
    let s = fx(&format!("models/{name}.state.json"));
    let mut args = vec!["fcm-run".as_ref(), m.as_os_str(), s.as_os_str()];
    if let Some(o) = out {
        args.extend(["--out".as_ref(), o.as_os_str()]);
    }
    trustmap(args)
}

fn read_trace(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').skip(1).map(|x| x.parse().unwrap()).collect())
        .collect()
}

#[test]
fn zero_model_reaches_origin_after_one_productive_step() {
    let dir = TempDir::new().unwrap();
    let o = fcm("zero3", Some(dir.path()));
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("outcome\tfixed-point\n"));
    let trace = read_trace(&dir.path().join("trace.csv"));
    assert_eq!(trace[0], vec![0.5, -0.25, 1.0]);
    assert!(trace[1..].iter().all(|r| r == &vec![0.0; 3]));
    // the only state change is the first step; the last row confirms it
    assert_eq!(trace.len(), 3);
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("outcome.json")).unwrap()).unwrap();
    assert_eq!(doc["kind"], "fcm-outcome");
    assert_eq!(doc["outcome"]["kind"], "fixed-point");
}

#[test]
fn oscillator_trace_matches_brute_force() {
    let dir = TempDir::new().unwrap();
    let o = fcm("oscillator", Some(dir.path()));
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("outcome\tnon-convergent\niterations\t100\n"));
    let trace = read_trace(&dir.path().join("trace.csv"));
    assert_eq!(trace.len(), 101);
    let (mut x, mut y) = (1.0f64, 1.0f64);
    for (k, row) in trace.iter().enumerate() {
        assert_eq!(row, &vec![x, y], "k={k}");
        (x, y) = ((-y).tanh(), x.tanh());
    }
    assert_eq!(trace[100][1], 0.12118244169517264);
}

#[test]
fn invalid_model_is_refused_with_every_violation() {
    let o = fcm("bad_diagonal", None);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("bad_diagonal.json"));
    assert!(err.contains("nonzero diagonal at concept 2 (c): 0.5"), "{err}");
    assert!(err.contains("weight out of [-1,1] at a -> b: 1.5"), "{err}");
    assert!(stdout(&o).is_empty());
}

#[test]
fn sigmoid_override_changes_the_run() {
    let m = fx("models/zero3.json");
    let s = fx("models/zero3.state.json");
    let o = trustmap(["fcm-run".as_ref(), m.as_os_str(), s.as_os_str(), "--activation".as_ref(), "sigmoid".as_ref()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("a\t0.5\n"), "{}", stdout(&o));
}

fn classify(rules: &Path, patients: &Path, explain: bool) -> Output {
    let mut args = vec!["rules-classify".as_ref(), rules.as_os_str(), patients.as_os_str()];
    if explain {
        args.push("--explain".as_ref());
    }
    trustmap(args)
}

const EXPECTED_TABLE: &str = "record_id\tprediction\tfired_rule\n\
Patient 1\tPositive\tr1\n\
Patient 2\tNegative\t-\n\
Patient 3\tPositive\tr2\n\
Patient 4\tNegative\t-\n";

#[test]
fn classifies_covid_patients() {
    let o = classify(&fx("covid_rules.rules"), &fx("covid_patients.csv"), false);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), EXPECTED_TABLE);

    let o = classify(&fx("covid_rules.rules"), &fx("covid_patients.csv"), true);
    let out = stdout(&o);
    assert!(out.starts_with(EXPECTED_TABLE));
    assert!(out.contains("[x] Basophils = 0.01 <= 0.01"), "{out}");
    assert!(out.contains("[ ] Lactate dehydrogenase = 154 >= 320"), "{out}");
}

#[test]
fn unused_features_do_not_change_predictions() {
    let dir = TempDir::new().unwrap();
    let src = std::fs::read_to_string(fx("covid_patients.csv")).unwrap();
    let mut lines = src.lines();
    let mut out = format!("{},Ferritin,Heart rate\n", lines.next().unwrap());
    for (i, l) in lines.enumerate() {
        out.push_str(&format!("{l},{},{}\n", 100 + i, 60 + i));
    }
    let p = dir.path().join("wide.csv");
    std::fs::write(&p, out).unwrap();
    let o = classify(&fx("covid_rules.rules"), &p, false);
    assert_eq!(stdout(&o), EXPECTED_TABLE);
}

#[test]
fn rule_errors_exit_two_with_names() {
    let dir = TempDir::new().unwrap();
    let no_default = dir.path().join("nodefault.rules");
    std::fs::write(&no_default, "RULE a: IF Albumin <= 1 THEN Positive\n").unwrap();
    let o = classify(&no_default, &fx("covid_patients.csv"), false);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no DEFAULT"), "{}", stderr(&o));

    let needs = dir.path().join("needs.rules");
    std::fs::write(&needs, "RULE z9: IF Ferritin >= 1 THEN Positive\nDEFAULT Negative\n").unwrap();
    let o = classify(&needs, &fx("covid_patients.csv"), false);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("Patient 1") && err.contains("z9") && err.contains("Ferritin"), "{err}");

    let syntax = dir.path().join("syntax.rules");
    std::fs::write(&syntax, "RULE a: IF Albumin < 1 THEN Positive\nDEFAULT Negative\n").unwrap();
    let o = classify(&syntax, &fx("covid_patients.csv"), false);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("syntax.rules: syntax error at line 1"), "{}", stderr(&o));
}

#[test]
fn serve_refuses_remote_bind_without_override() {
    let o = trustmap(["serve", "--bind", "0.0.0.0", "--port", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--allow-remote"));
}

#[test]
fn scales_export_round_trips_through_custom_scale_flags() {
    let dir = TempDir::new().unwrap();
    let o = trustmap(["scales".as_ref(), "--out".as_ref(), dir.path().as_os_str()]);
    assert_eq!(o.status.code(), Some(0));
    let rating = dir.path().join("explanation-satisfaction-rating.json");
    let influence = dir.path().join("influence-strength.json");
    let me4 = fx("surveys/me4.json");
    let o = trustmap([
        "trust-quantify".as_ref(),
        me4.as_os_str(),
        "--rating-scale".as_ref(),
        rating.as_os_str(),
        "--influence-scale".as_ref(),
        influence.as_os_str(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("ME4\t0.0000\tignorance"));
}
