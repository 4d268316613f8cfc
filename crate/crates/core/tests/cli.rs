use serde_json::Value;
use std::path::PathBuf;
use std::process::Command;

fn configs() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> (i32, String) {
    run_with_env(args, &[])
}

fn run_with_env(args: &[&str], env: &[(&str, &str)]) -> (i32, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_wildkz"))
        .args(args)
        .current_dir(configs())
        .envs(env.iter().copied())
        .output()
        .expect("binary runs");
    (out.status.code().expect("exit code"), String::from_utf8(out.stdout).expect("utf-8"))
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).expect("report is JSON")
}

fn scratch(name: &str, content: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("wildkz-cli-{}-{name}", std::process::id()));
    std::fs::write(&path, content).unwrap();
    path
}

#[test]
fn dims_table_for_sl2_depth_two() {
    let (code, out) = run(&["dims", "--algebra", "A1", "--p", "2", "--height", "3"]);
    assert_eq!(code, 0);
    let dims: Vec<u64> = json(&out)["results"]["rows"].as_array().unwrap().iter().map(|r| r["dim"].as_u64().unwrap()).collect();
    assert_eq!(dims, vec![1, 2, 3, 4]);
    let (_, csv) = run(&["dims", "--p", "2", "--height", "3", "--format", "csv"]);
    assert_eq!(csv, "weight,p,dim\n0,2,1\n1,2,2\n2,2,3\n3,2,4\n");
}

#[test]
fn cybe_check_passes() {
    let (code, out) = run(&["cybe-check", "--p", "2", "--algebra", "A1", "--samples", "20"]);
    assert_eq!(code, 0);
    assert_eq!(json(&out)["pass"], Value::Bool(true));
}

#[test]
fn too_few_cybe_samples_fail_the_bound_check() {
    let (code, _) = run(&["cybe-check", "--p", "2", "--samples", "3"]);
    assert_eq!(code, 1);
}

#[test]
fn critical_level_sentinel_has_its_own_exit_code() {
    let (code, out) = run(&["sugawara-check", "--config", "critical.json"]);
    assert_eq!(code, 3);
    assert_eq!(json(&out)["error"]["kind"], "CriticalLevel");
}

#[test]
fn coincident_times_and_schema_errors() {
    let text = std::fs::read_to_string(configs().join("tame_kz.json")).unwrap();
    let clash = scratch("clash.json", &text.replace("\"t\": \"1\"", "\"t\": \"0\""));
    let (code, out) = run(&["coinvariants", "--config", clash.to_str().unwrap()]);
    assert_eq!(code, 4);
    assert_eq!(json(&out)["error"]["kind"], "CoincidentTimes");
    let typo = scratch("typo.json", &text.replace("\"restricted\"", "\"restrict\""));
    let (code, out) = run(&["coinvariants", "--config", typo.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert_eq!(json(&out)["error"]["kind"], "Schema");
    let (code, _) = run(&["coinvariants"]);
    assert_eq!(code, 2);
}

#[test]
fn reports_are_byte_deterministic() {
    let args = ["flatness-check", "--config", "wild_infinity.json", "--samples", "2", "--seed", "5"];
    let (code, first) = run(&args);
    assert_eq!(code, 0);
    let (_, second) = run_with_env(&args, &[("WILDKZ_THREADS", "1")]);
    assert_eq!(first, second);
}

#[test]
fn emit_writes_the_report() {
    let target = std::env::temp_dir().join(format!("wildkz-cli-{}-emit.json", std::process::id()));
    let (code, out) = run(&["connection", "--config", "tame_kz.json", "--at", "1/2,-3", "--emit", target.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let report = json(&std::fs::read_to_string(&target).unwrap());
    assert_eq!(report["results"]["times"], serde_json::json!(["1/2", "-3/1"]));
    assert_eq!(report["results"]["hamiltonians"].as_array().unwrap().len(), 2);
}

#[test]
fn transport_reports_vector_and_statistics() {
    let (code, out) = run(&["transport", "--config", "tame_kz.json", "--path", "loop.json", "--v0", "v0.json"]);
    assert_eq!(code, 0);
    let report = json(&out);
    assert_eq!(report["results"]["final_vector"].as_array().unwrap().len(), 4);
    assert!(report["results"]["statistics"]["accepted_steps"].as_u64().unwrap() > 0);
}

#[test]
fn module_commands_pass_on_a_depth_two_character() {
    for cmd in ["module-build", "sugawara-check", "shapovalov"] {
        let (code, out) = run(&[cmd, "--config", "character_p2.json"]);
        assert_eq!(code, 0, "{cmd}: {out}");
    }
}
