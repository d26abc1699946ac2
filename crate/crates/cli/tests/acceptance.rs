//! Acceptance battery: every criterion runs at its stated tolerance and
//! prints one pass/fail line. Criterion 12 runs the `suite` subcommand
//! twice and compares artifact bytes.

use pressure_transport_cli::suite;

const SEED: u64 = 7;

fn check(report: suite::CriterionReport) {
    println!(
        "criterion {:02} ({}): {}",
        report.id,
        report.name,
        if report.passed { "pass" } else { "FAIL" }
    );
    for metric in &report.metrics {
        let op = match metric.cmp {
            suite::Cmp::Le => "<=",
            suite::Cmp::Ge => ">=",
        };
        assert!(
            metric.passed,
            "criterion {} metric '{}': {} {op} {} violated",
            report.id, metric.name, metric.value, metric.bound
        );
    }
    assert!(report.passed);
}

#[test]
fn criterion_01_pressureless_closed_form() {
    check(suite::criterion_1(SEED));
}

#[test]
fn criterion_02_action_additivity() {
    check(suite::criterion_2(SEED));
}

#[test]
fn criterion_03_hj_residual_from_a_point() {
    check(suite::criterion_3(SEED));
}

#[test]
fn criterion_04_semigroup_law() {
    check(suite::criterion_4(SEED));
}

#[test]
fn criterion_05_reversible_pair() {
    check(suite::criterion_5(SEED));
}

#[test]
fn criterion_06_duality_gap() {
    check(suite::criterion_6(SEED));
}

#[test]
fn criterion_07_flow_transport_optimality() {
    check(suite::criterion_7(SEED));
}

#[test]
fn criterion_08_reversibility_set_invariance() {
    check(suite::criterion_8(SEED));
}

#[test]
fn criterion_09_dynamic_norm_identities() {
    check(suite::criterion_9(SEED));
}

#[test]
fn criterion_10_tube_construction() {
    check(suite::criterion_10(SEED));
}

#[test]
fn criterion_11_regularized_dual_bound() {
    check(suite::criterion_11(SEED));
}

#[test]
fn criterion_12_suite_determinism() {
    // the full battery, twice, must emit byte-identical JSON
    let work = tempfile::tempdir().unwrap();
    let config_path = work.path().join("suite.toml");
    std::fs::write(
        &config_path,
        r#"
dimension = 1
seed = 7

[grid]
m = 256
time_steps = 16
horizon = 1.0

[pressure]
offset = 0.0
"#,
    )
    .unwrap();

    let run = |out: &str| {
        let out_dir = work.path().join(out);
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_ptrans"))
            .args([
                "--config",
                config_path.to_str().unwrap(),
                "--out",
                out_dir.to_str().unwrap(),
                "--quiet",
                "suite",
            ])
            .status()
            .expect("suite run");
        assert!(status.success(), "suite exited with {status}");
        out_dir
    };
    let first = run("a");
    let second = run("b");

    let mut compared = 0usize;
    for entry in walk_json(&first) {
        let rel = entry.strip_prefix(&first).unwrap();
        let twin = second.join(rel);
        let a = std::fs::read(&entry).unwrap();
        let b = std::fs::read(&twin).unwrap_or_else(|_| panic!("missing twin {}", twin.display()));
        assert_eq!(a, b, "JSON differs between runs: {}", rel.display());
        compared += 1;
    }
    assert!(compared >= 12, "expected at least 12 JSON artifacts, saw {compared}");
    println!("criterion 12 (suite determinism): pass ({compared} identical artifacts)");
}

fn walk_json(root: &std::path::Path) -> Vec<std::path::PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "json") {
                out.push(path);
            }
        }
    }
    out.sort();
    out
}
