use std::path::PathBuf;

use kwise::cli::run_with;
use kwise::fixtures;
use serde_json::Value;

fn kwise(args: &[&str]) -> (i32, Value) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run_with(std::iter::once("kwise").chain(args.iter().copied()), &mut out, &mut err);
    let text = String::from_utf8(out).unwrap();
    (code, serde_json::from_str(&text).unwrap_or(Value::String(text)))
}

fn write(dir: &tempfile::TempDir, name: &str, v: &Value) -> String {
    let path = dir.path().join(name);
    std::fs::write(&path, v.to_string()).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn bundled_fixtures_match_the_generator() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    for (name, v) in fixtures::all().unwrap() {
        let on_disk = std::fs::read_to_string(dir.join(&name)).unwrap();
        assert_eq!(on_disk, fixtures::render(&v), "{name} is stale; regenerate with `kwise fixtures --dir`");
    }
}

#[test]
fn lines_counts() {
    let (code, v) = kwise(&["lines", "--n", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["total_lines"], 7);
    assert_eq!(v["command"], "lines");
    assert!(v["config_hash"].as_str().unwrap().len() == 64);
    let (_, v) = kwise(&["lines", "--n", "4", "--enumerate"]);
    assert_eq!(v["result"]["enumerated"], 256 - 81);
}

#[test]
fn embed_check_on_fixture_files_and_names() {
    let file = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/ap3_full_p3.json");
    for dist in [file.to_str().unwrap(), "ap3_full_p3.json", "ap3_full_p3"] {
        let (code, v) = kwise(&["embed-check", "--dist", dist]);
        assert_eq!(code, 0);
        assert_eq!(v["result"]["abelian"], true);
        assert_eq!(v["result"]["z"], false);
        assert_eq!(v["result"]["witness"]["group"], serde_json::json!([3]));
    }
    let (_, v) = kwise(&["embed-check", "--dist", "ap3_restricted_p3"]);
    assert_eq!(v["result"]["z"], true);
    let (_, v) = kwise(&["classify", "--dist", "dhj3"]);
    assert_eq!(v["result"]["is_pairwise_connected"], false);
}

#[test]
fn swap_norm_paths_agree() {
    let dir = tempfile::tempdir().unwrap();
    let values: Vec<Value> = (0..18)
        .map(|i| serde_json::json!([((i * 7 % 11) as f64 - 5.0) / 6.0, ((i * 5 % 13) as f64 - 6.0) / 7.0]))
        .collect();
    let f = serde_json::json!({
        "radices": [3, 3, 2],
        "measure": [["1/3", "1/3", "1/3"], ["1/3", "1/3", "1/3"], ["1/2", "1/2"]],
        "values": values,
    });
    let path = write(&dir, "f.json", &f);
    let (c1, a) = kwise(&["norm", "--kind", "swap", "--fn", &path, "--exact"]);
    let (c2, b) = kwise(&["norm", "--kind", "swap", "--fn", &path, "--method", "exchange"]);
    assert_eq!((c1, c2), (0, 0));
    let a = a["result"]["value"].as_f64().unwrap();
    let b = b["result"]["value"].as_f64().unwrap();
    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
}

#[test]
fn output_is_deterministic_and_records_the_seed() {
    let args = ["patterns", "--p", "3", "--n", "3", "--density", "0.4", "--seed", "9"];
    let (_, a) = kwise(&args);
    let (_, b) = kwise(&args);
    assert_eq!(a, b);
    assert_eq!(a["seed"], 9);
    let (_, c) = kwise(&["patterns", "--p", "3", "--n", "3", "--density", "0.4", "--seed", "10"]);
    assert_ne!(a["config_hash"], c["config_hash"]);
    let (_, t) = kwise(&["patterns", "--p", "3", "--n", "3", "--density", "0.4", "--seed", "9", "--threads", "4"]);
    assert_eq!(a, t);
}

#[test]
fn exit_codes() {
    let (code, v) = kwise(&["gap3", "--dist", "ap3_full_p3"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"], "MISSING_SEED");
    let (code, v) = kwise(&["lines", "--bogus"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"], "USAGE");
    let (code, v) = kwise(&["embed-check", "--dist", "no_such_fixture"]);
    assert_eq!(code, 2);
    assert_eq!(v["error"], "IO");
    let (code, _) = kwise(&["--help"]);
    assert_eq!(code, 0);
}

#[test]
fn selftest_runs_without_command_arguments() {
    for cmd in ["lines", "csp", "norm"] {
        let (code, v) = kwise(&[cmd, "--selftest"]);
        assert_eq!(code, 0, "{v}");
        assert_eq!(v["passed"], true);
    }
}

#[test]
fn csp_and_game_commands() {
    let dir = tempfile::tempdir().unwrap();
    let sys = dir.path().join("sys.txt");
    std::fs::write(&sys, "# x0 + x1 + x2 = 1, x0 + x1 + x2 = 0\n1 1 1 1 0 1 2\n1 1 1 0 0 1 2\n").unwrap();
    let (code, v) = kwise(&["csp", "--lin3", sys.to_str().unwrap(), "--p", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["value"]["value"], "1/2");
    assert_eq!(v["result"]["gauss"]["consistent"], false);
    assert_eq!(v["result"]["random_assignment_value"], "1/2");

    let edges: Vec<Value> = [(0, 1), (1, 2), (0, 2)]
        .iter()
        .map(|&(u, v)| serde_json::json!({ "vertices": [u, v], "accepted": [[0, 1], [1, 0]] }))
        .collect();
    let g = serde_json::json!({ "vertices": [3, 3], "alphabets": [2, 2], "edges": edges });
    let path = write(&dir, "g.json", &g);
    let (code, v) = kwise(&["game", "--game", &path, "--repeat", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["result"]["value"]["value"], "1");
    assert_eq!(v["result"]["repeated"]["at_least_power"], true);
}

#[test]
fn dict_test_dictator_accepts_like_the_predicate() {
    let (code, v) = kwise(&["dict-test", "--dist", "ap3_somewhat_p3", "--pred-set", "lin3_p3", "--pred-index", "1", "--dictator", "0", "--n", "3"]);
    assert_eq!(code, 0, "{v}");
    let acc = v["result"]["acceptance"]["value"].as_f64().unwrap();
    let p = kwise::rational::parse(v["result"]["predicate_probability"].as_str().unwrap()).unwrap();
    assert!((acc - kwise::rational::to_f64(&p)).abs() < 1e-12);
}
