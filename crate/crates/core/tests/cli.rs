use std::process::{Command, Output};

fn hsa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hsa"))
        .args(args)
        .output()
        .expect("spawn hsa")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn bell_run_with_flat_spatial_state_fires_no_probe() {
    for pol in ["Phi+", "Phi-", "Psi+", "Psi-"] {
        let out = hsa(&["run", "--pol", pol, "--spatial", "Phi+"]);
        assert_eq!(out.status.code(), Some(0));
        let text = stdout(&out);
        assert!(text.contains("probes:  0 0"), "{text}");
        assert!(text.contains(&format!("decoded: {pol} / Phi+")), "{text}");
        assert!(text.contains("pass:    true"));
    }
}

#[test]
fn json_output_has_expected_keys() {
    let out = hsa(&[
        "run",
        "--mode",
        "ghz",
        "--pol",
        "+:010",
        "--spatial",
        "-:100",
        "--format",
        "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let mut keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    assert_eq!(
        keys,
        ["decoded", "input", "pass", "ports", "probes", "seed", "spbsm"]
    );
    assert_eq!(v["probes"], serde_json::json!(["theta", "theta", "pi"]));
    assert_eq!(v["decoded"], v["input"]);
    assert_eq!(v["pass"], true);
}

#[test]
fn same_seed_gives_identical_output() {
    let args = ["run", "--mode", "ghz", "--photons", "4", "--seed", "42"];
    let a = hsa(&args);
    let b = hsa(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), Some(0));
}

#[test]
fn seeds_reach_several_records() {
    let outputs: std::collections::BTreeSet<String> = (0..16)
        .map(|seed| {
            let s = seed.to_string();
            let out = hsa(&["run", "--pol", "Psi-", "--spatial", "Psi-", "--seed", &s]);
            let text = stdout(&out);
            text.lines()
                .find(|l| l.starts_with("spbsm:"))
                .unwrap()
                .to_owned()
        })
        .collect();
    assert!(outputs.len() > 1);
    assert!(outputs.len() <= 4);
}

#[test]
fn verify_bell_passes() {
    let out = hsa(&["verify", "--mode", "bell"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("16/16 labels, 64 records, pass"));
}

#[test]
fn verify_ghz_three_photons_passes() {
    let out = hsa(&["verify", "--mode", "ghz", "--photons", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("64/64 labels"));
}

#[test]
fn tables_are_printed() {
    let one = stdout(&hsa(&["tables", "--which", "I"]));
    assert!(one.contains("Phi-      Psi+      0       theta"), "{one}");
    let two = stdout(&hsa(&["tables", "--which", "II"]));
    assert_eq!(two.matches("group").count(), 4);
    let three = stdout(&hsa(&["tables", "--which", "III"]));
    assert!(three.contains("-:100     theta   theta   pi"), "{three}");
}

#[test]
fn expand_lists_four_combinations() {
    let out = hsa(&["expand", "--pol", "Phi+", "--spatial", "Psi-"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let rows: Vec<_> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 4, "{text}");
    assert!(rows.iter().all(|r| r.ends_with("0.250000")));
}

#[test]
fn usage_errors_exit_with_two() {
    for args in [
        vec!["frobnicate"],
        vec!["run", "--mode", "ghz", "--pol", "+:110"],
        vec!["run", "--pol", "Chi+"],
        vec!["run", "--mode", "bell", "--photons", "3"],
        vec!["verify", "--mode", "ghz", "--photons", "9"],
        vec!["run", "--mode", "ghz", "--photons", "3", "--pol", "+:01"],
    ] {
        let out = hsa(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn non_canonical_label_names_canonical_form() {
    let out = hsa(&["run", "--mode", "ghz", "--pol", "+:110"]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("+:001"), "{err}");
}
