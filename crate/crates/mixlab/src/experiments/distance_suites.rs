//! Experiments on spectral bounds and the discrete/continuous time
//! correspondence: the Cheeger sandwich, the relaxation-time bounds, and the
//! Poissonization identities.

use serde_json::json;

use crate::chain::{build_chain, heat_kernel_row, Chain};
use crate::constructions::{example33, random_connected_network, theorem1_chain, Theorem1Params};
use crate::distances::{tv_profile, StartSet};
use crate::error::Result;
use crate::experiments::{Assertion, ExperimentReport, Overrides};
use crate::hitting::{hitting_pmf, poissonize};
use crate::network::network_from_edges;
use crate::numeric::derive_seed;
use crate::spectral::{check_cheeger_inequality, check_trel_bounds, spectrum};

/// A3: Phi^2/2 <= gap <= 2 Phi with exact Phi by enumeration on 100 seeded
/// random networks of at most 12 states.
pub fn run_cheeger_suite(overrides: Overrides) -> Result<ExperimentReport> {
    let seed = overrides.u64("seed", 31_415);
    let config = json!({ "networks": 100, "max_states": 12, "seed": seed, "slack": 1e-9 });
    let mut report = ExperimentReport::new("cheeger-suite", config);
    let mut violations = 0usize;
    let mut tightest = f64::INFINITY;
    for c in 0..100u64 {
        let n = 4 + (derive_seed(seed, c) % 9) as usize;
        let extra = 1 + (derive_seed(seed, c + 500) % 5) as usize;
        let net = random_connected_network(n, extra, 0.5, 3.0, derive_seed(seed, c))?;
        let chain = build_chain(&net, 0.5)?;
        let r = check_cheeger_inequality(&chain)?;
        if !r.holds {
            violations += 1;
        }
        tightest = tightest.min((r.upper - r.gap).min(r.gap - r.lower));
    }
    report.push(Assertion::new(
        "A3 Cheeger sandwich holds on all 100 networks (1e-9 slack)",
        violations == 0,
        format!("{violations} violations, tightest margin {tightest:.3e}"),
    ));
    Ok(report)
}

/// A4: the relaxation-time bounds on the two named constructions, the lazy
/// 4-cycle, and 20 seeded random chains, at eps in {0.05, 0.25, 0.45}.
pub fn run_trel_bounds(overrides: Overrides) -> Result<ExperimentReport> {
    let epsilons = [0.05f64, 0.25, 0.45];
    let seed = overrides.u64("seed", 27_182);
    let config = json!({
        "epsilons": epsilons,
        "chains": ["example33(20)", "theorem1(16,0.125,2)", "C4", "20 random"],
        "seed": seed,
    });
    let mut report = ExperimentReport::new("trel-bounds", config);

    let mut checks: Vec<(String, Chain)> = Vec::new();
    checks.push(("example33(n=20)".into(), build_chain(&example33(20)?, 0.5)?));
    let t1 = theorem1_chain(Theorem1Params { n: 16, delta: 0.125, s: 2 })?;
    checks.push(("theorem1(16,1/8,2)".into(), build_chain(&t1.network, 0.5)?));
    let c4 = network_from_edges(&[
        ("0", "1", 1.0),
        ("1", "2", 1.0),
        ("2", "3", 1.0),
        ("3", "0", 1.0),
    ])?;
    checks.push(("C4".into(), build_chain(&c4, 0.5)?));
    for c in 0..20u64 {
        let n = 4 + (derive_seed(seed, c) % 9) as usize;
        let extra = 1 + (derive_seed(seed, c + 77) % 4) as usize;
        let net = random_connected_network(n, extra, 0.5, 2.5, derive_seed(seed, c))?;
        checks.push((format!("random#{c}({n} states)"), build_chain(&net, 0.5)?));
    }

    for (label, chain) in &checks {
        // Profile out to the theoretical upper bound at the smallest eps:
        // exceeding it without reaching eps is itself a violation.
        let summary = spectrum(chain)?;
        let min_pi = chain.stationary().iter().cloned().fold(f64::INFINITY, f64::min);
        let horizon =
            ((summary.t_rel * (0.05 * min_pi).ln().abs()).ceil() as usize + 5).min(20_000);
        let profile = tv_profile(chain, horizon, &StartSet::All)?;
        let r = check_trel_bounds(chain, &epsilons, &profile)?;
        let exhausted = r.rows.iter().any(|row| row.holds.is_none());
        report.push(Assertion::new(
            format!("A4 relaxation bounds hold for {label}"),
            r.all_hold && !exhausted,
            format!(
                "t_rel {:.4}; rows {}",
                r.t_rel,
                r.rows
                    .iter()
                    .map(|row| format!(
                        "eps {}: {:.2} <= {:?} <= {:.2}",
                        row.epsilon, row.lower, row.t_mix, row.upper
                    ))
                    .collect::<Vec<_>>()
                    .join("; ")
            ),
        ));
    }
    Ok(report)
}

/// A6: the two-speed heat-kernel identity on 20 random chains and the
/// Poissonized-hitting vs continuous-absorbing-chain CDF comparison.
pub fn run_poissonization(overrides: Overrides) -> Result<ExperimentReport> {
    let seed = overrides.u64("seed", 16_180);
    let tol = 1e-9;
    let times = [0.5f64, 1.0, 5.0];
    let config = json!({ "chains": 20, "times": times, "tol": tol, "seed": seed });
    let mut report = ExperimentReport::new("poissonization", config);

    let mut worst = 0.0f64;
    for c in 0..20u64 {
        let n = 3 + (derive_seed(seed, c) % 8) as usize;
        let extra = 1 + (derive_seed(seed, c + 5) % 4) as usize;
        let net = random_connected_network(n, extra, 0.5, 2.0, derive_seed(seed, c))?;
        let p = build_chain(&net, 0.0)?;
        let pl = build_chain(&net, 0.5)?;
        for &t in &times {
            for start in 0..n {
                let h = heat_kernel_row(&p, start, t, tol)?;
                let hl = heat_kernel_row(&pl, start, 2.0 * t, tol)?;
                for (a, b) in h.0.iter().zip(&hl.0) {
                    worst = worst.max((a - b).abs());
                }
            }
        }
    }
    report.push(Assertion::new(
        "A6 two-speed identity |H_t(P) - H_2t(P_L)|_inf <= 2 tol (20 chains)",
        worst <= 2.0 * tol,
        format!("worst entry difference {worst:.3e}"),
    ));

    // Poissonized lazy hitting CDF vs the continuous absorbing chain.
    let net = random_connected_network(5, 2, 0.8, 1.6, derive_seed(seed, 99))?;
    let lazy = build_chain(&net, 0.5)?;
    let nonlazy = build_chain(&net, 0.0)?;
    let target = 4usize;
    let start = 0usize;
    let pmf = hitting_pmf(&lazy, start, &[target], 4000)?;

    // Absorbing continuous chain: replace the target row by a hold.
    let mut rows: Vec<Vec<(usize, f64)>> = nonlazy.rows().to_vec();
    rows[target] = vec![(target, 1.0)];
    let mut absorbing_pi = vec![0.0; 5];
    absorbing_pi[target] = 1.0;
    let absorbing = Chain::from_parts(
        rows,
        absorbing_pi,
        0.0,
        false,
        nonlazy.state_names().to_vec(),
    )?;
    let mut worst_cdf = 0.0f64;
    for &t in &[0.5f64, 1.0, 2.0, 5.0, 10.0] {
        let via_poisson = poissonize(&pmf, 2.0, t)?;
        let h = heat_kernel_row(&absorbing, start, t, 1e-12)?;
        let via_heat = h.0[target];
        worst_cdf = worst_cdf.max((via_poisson.value - via_heat).abs());
    }
    report.push(Assertion::new(
        "A6 Poissonized hitting CDF matches continuous absorbing CDF <= 1e-8",
        worst_cdf <= 1e-8 + pmf.residual,
        format!("worst difference {worst_cdf:.3e}, pmf residual {:.3e}", pmf.residual),
    ));
    Ok(report)
}
