//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (run with `cargo test --test acceptance -- --nocapture` to see them all).
//! Every tolerance and threshold is pinned here through the experiment
//! implementations; nothing is deferred to later calibration.

use mixlab::experiments::{run_experiment, ExperimentReport, Overrides};

fn run(name: &str) -> ExperimentReport {
    run_experiment(name, Overrides(None)).expect("experiment must run")
}

fn summarize(criterion: &str, report: &ExperimentReport, pick: Option<&[usize]>) -> bool {
    let indices: Vec<usize> = match pick {
        Some(list) => list.to_vec(),
        None => (0..report.assertions.len()).collect(),
    };
    let mut all = true;
    for &i in &indices {
        let a = &report.assertions[i];
        println!(
            "{criterion} {} :: {} [{}]",
            if a.passed { "PASS" } else { "FAIL" },
            a.name,
            a.measured
        );
        all &= a.passed;
    }
    println!("{criterion} {}", if all { "PASS" } else { "FAIL" });
    all
}

#[test]
fn a01_lemma32_equality() {
    let report = run("lemma32");
    assert!(summarize("A1", &report, Some(&[0])));
}

#[test]
fn a02_lemma32_inequalities() {
    let report = run("lemma32");
    assert!(summarize("A2", &report, Some(&[1, 2])));
}

#[test]
fn a03_cheeger_sandwich() {
    let report = run("cheeger-suite");
    assert!(summarize("A3", &report, None));
}

#[test]
fn a04_relaxation_bounds() {
    let report = run("trel-bounds");
    assert!(summarize("A4", &report, None));
}

#[test]
fn a05_quantile_relations() {
    let report = run("example33-quantiles");
    assert!(summarize("A5", &report, None));
}

#[test]
fn a06_poissonization_identities() {
    let report = run("poissonization");
    assert!(summarize("A6", &report, None));
}

#[test]
fn a07_crossing_law_and_bias() {
    let report = run("fact41");
    assert!(summarize("A7", &report, None));
}

#[test]
fn a08_perturbation_sensitivity_trend() {
    let report = run("thm2a-sensitivity");
    assert!(summarize("A8", &report, None));
}

#[test]
fn a09_local_clt() {
    let report = run("local-clt");
    assert!(summarize("A9", &report, None));
}

#[test]
fn a10_lumping() {
    let report = run("thm2c-lumping");
    assert!(summarize("A10", &report, None));
}

/// The two coefficient-of-variation thresholds are not attainable at the
/// pinned desk parameters (s=3, m=10, b=4): the exact per-block escape
/// probabilities give base CV ~0.59 and perturbed CV ~0.75, both verified
/// against exact absorbing computations on explicit micro instances. The
/// criterion runs faithfully as stated and reports red.
#[test]
fn a11_escape_law_profile() {
    let report = run("thm3-profile");
    assert!(summarize("A11", &report, None));
}

#[test]
fn a12_nbrw_harmonic_invariance() {
    let report = run("nbrw-harmonic");
    assert!(summarize("A12", &report, None));
}

#[test]
fn a13_rate_function_consistency() {
    let report = run("psi-rate");
    assert!(summarize("A13", &report, None));
}
