//! The recursive stretched-tree construction: 5-ary blocks of depth m whose
//! leaves split into boundary vertices (few left turns) and continuation
//! vertices, every tree edge stretched by s, glued to a certified expander.
//! The boundary fraction per block is pinned to [1/b, 2/b] by an exact
//! binomial threshold search.

use serde::Serialize;
use serde_json::json;

use crate::constructions::walker::{StopRule, TreeWalkerConfig};
use crate::error::{MixError, Result};
use crate::network::{NetworkBuilder, WeightedNetwork};
use crate::numeric::binom_cdf;
use crate::transforms::{EdgeSelector, LabelTerm};

#[derive(Debug, Clone, Copy)]
pub struct Theorem3Params {
    /// Stretch factor for every tree edge.
    pub s: usize,
    /// Block depth (levels per recursion step).
    pub m: usize,
    /// Boundary-fraction parameter: per-block fraction in [1/b, 2/b].
    pub b: usize,
    /// Number of blocks to materialize explicitly (the depth budget is
    /// blocks * m tree levels); the walker uses the full s^2 b blocks.
    pub blocks: usize,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct BoundaryWindow {
    /// Leaves with at most `theta` left turns in their block are boundary.
    pub theta: i64,
    /// The g in f(u) <= m/5 - g.
    pub g: f64,
    /// Exact P[Bin(m, 1/5) <= theta].
    pub fraction: f64,
}

/// Exact integer threshold search for the window
/// 1/b <= P[Bin(m, 1/5) <= theta] <= 2/b.
pub fn boundary_threshold(m: usize, b: usize) -> Result<BoundaryWindow> {
    if b < 2 {
        return Err(MixError::BadParams(format!("boundary window needs b >= 2, got {b}")));
    }
    let lo = 1.0 / b as f64;
    let hi = 2.0 / b as f64;
    let mut below = 0.0f64;
    for theta in -1..=(m as i64) {
        let fraction = binom_cdf(m, 0.2, theta);
        if fraction >= lo && fraction <= hi {
            return Ok(BoundaryWindow { theta, g: m as f64 / 5.0 - theta as f64, fraction });
        }
        if fraction < lo {
            below = fraction;
        } else {
            return Err(MixError::NoBoundaryThreshold { lo, hi, below, above: fraction });
        }
    }
    Err(MixError::NoBoundaryThreshold { lo, hi, below, above: 1.0 })
}

#[derive(Debug, Clone)]
pub struct Theorem3Output {
    pub network: WeightedNetwork,
    /// All boundary vertices (theta-selected plus the forced final level).
    pub boundary: Vec<String>,
    /// Perturbation selector for the left stretched paths (factor
    /// 1 + b^{-1/3} in the construction's perturbed variant).
    pub selector: EdgeSelector,
    pub metadata: serde_json::Value,
}

const EXPLICIT_VERTEX_CAP: usize = 300_000;

fn word_id(word: &[u8]) -> String {
    if word.is_empty() {
        "o".into()
    } else {
        let digits: String = word.iter().map(|d| char::from(b'0' + d)).collect();
        format!("w:{digits}")
    }
}

/// Explicit desk-scale instance. The recursion runs for `blocks` blocks (the
/// final level is forced into the boundary, mirroring the full construction's
/// last level), every tree edge is stretched by s, and each boundary vertex
/// is joined by one edge to a distinct vertex of the base expander.
pub fn theorem3(base: &WeightedNetwork, p: &Theorem3Params) -> Result<Theorem3Output> {
    if p.s < 2 {
        return Err(MixError::BadParams(format!("theorem3 needs s >= 2, got {}", p.s)));
    }
    if p.blocks < 2 {
        return Err(MixError::BadParams(format!(
            "theorem3 needs at least 2 blocks, got {}",
            p.blocks
        )));
    }
    let window = boundary_threshold(p.m, p.b)?;
    // Count before materializing: per block, each continuing vertex expands
    // into (5^{m+1} - 5)/4 descendants.
    let leaves_per = 5usize.pow(p.m as u32);
    let boundary_per: usize = (0..=window.theta.max(0) as usize)
        .map(|j| binom_count(p.m, j) * 4usize.pow((p.m - j) as u32))
        .sum();
    let subtree_size: usize = (1..=p.m).map(|j| 5usize.pow(j as u32)).sum();
    let mut a_count = 1usize;
    let mut tree_vertices = 1usize;
    let mut boundary_count = 0usize;
    for k in 1..=p.blocks {
        tree_vertices += a_count * subtree_size;
        if k == 1 {
            a_count *= leaves_per;
        } else if k == p.blocks {
            boundary_count += a_count * leaves_per;
            a_count = 0;
        } else {
            boundary_count += a_count * boundary_per;
            a_count *= leaves_per - boundary_per;
        }
    }
    let stretched_estimate = tree_vertices + (p.s - 1) * (tree_vertices - 1);
    if stretched_estimate > EXPLICIT_VERTEX_CAP {
        return Err(MixError::BadParams(format!(
            "explicit instance would need ~{stretched_estimate} vertices (cap {EXPLICIT_VERTEX_CAP}); \
             use the walker for dynamics at this scale"
        )));
    }
    if boundary_count > base.n_vertices() {
        return Err(MixError::BadParams(format!(
            "boundary has {boundary_count} vertices but the expander only {}; \
             the bulk must dominate the tree",
            base.n_vertices()
        )));
    }

    // Level-by-level generation; boundary vertices do not expand.
    let mut b_net = NetworkBuilder::new();
    b_net.add_vertex_with_labels("o", vec!["tree5".into(), "d:0".into(), "root".into()])?;
    let mut frontier: Vec<Vec<u8>> = vec![Vec::new()];
    let mut boundary: Vec<String> = Vec::new();
    let mut block_counts: Vec<(usize, usize)> = Vec::new(); // (boundary, survivors)
    for k in 1..=p.blocks {
        let mut next_frontier = Vec::new();
        let mut level_boundary = 0usize;
        let mut words = frontier.clone();
        for depth_in_block in 1..=p.m {
            let mut next_words = Vec::with_capacity(words.len() * 5);
            for w in &words {
                for digit in 0u8..5 {
                    let mut child = w.clone();
                    child.push(digit);
                    let level = child.len();
                    let mut labels = vec!["tree5".to_string(), format!("d:{level}")];
                    if digit == 0 {
                        labels.push("upleft".into());
                    }
                    let is_block_leaf = depth_in_block == p.m;
                    let mut is_boundary = false;
                    if is_block_leaf {
                        let zeros =
                            child[level - p.m..].iter().filter(|&&d| d == 0).count() as i64;
                        if k == p.blocks {
                            is_boundary = true;
                            labels.push("D".into());
                            labels.push(if zeros <= window.theta {
                                format!("Dk:{k}")
                            } else {
                                "Dk:final".into()
                            });
                            labels.push("boundary".into());
                        } else if k >= 2 && zeros <= window.theta {
                            is_boundary = true;
                            labels.push("D".into());
                            labels.push(format!("Dk:{k}"));
                            labels.push("boundary".into());
                        }
                    }
                    let id = word_id(&child);
                    b_net.add_vertex_with_labels(&id, labels)?;
                    b_net.add_edge(&word_id(w), &id, 1.0)?;
                    if is_block_leaf {
                        if is_boundary {
                            boundary.push(id);
                            level_boundary += 1;
                        } else {
                            next_frontier.push(child.clone());
                        }
                    }
                    next_words.push(child);
                }
            }
            words = next_words;
        }
        block_counts.push((level_boundary, next_frontier.len()));
        frontier = next_frontier;
    }
    let tree = b_net.build()?;

    // Stretch in two passes so the left paths stay selectable afterwards:
    // first the edges into left children (tagging their internals "pleft"),
    // then the remaining tree edges.
    let left_sel = EdgeSelector::query(
        vec![LabelTerm::Exact("upleft".into()), LabelTerm::Deeper],
        vec![LabelTerm::Exact("tree5".into())],
    );
    let pass1 = crate::transforms::stretch_edges_with_label(&tree, &left_sel, p.s, Some("pleft"))?;
    let rest_sel = EdgeSelector::query(
        vec![LabelTerm::Exact("tree5".into())],
        vec![LabelTerm::Exact("tree5".into())],
    );
    let pass2 = crate::transforms::stretch_edges(&pass1.network, &rest_sel, p.s)?;
    let stretched = pass2.network;

    // Glue the expander: one edge from each boundary vertex to a distinct
    // expander vertex.
    let mut g = NetworkBuilder::new();
    for v in 0..stretched.n_vertices() {
        g.add_vertex_with_labels(stretched.name(v), stretched.labels(v).to_vec())?;
    }
    for e in stretched.edges() {
        g.add_edge(stretched.name(e.u), stretched.name(e.v), e.weight)?;
    }
    for v in 0..base.n_vertices() {
        let mut labels = base.labels(v).to_vec();
        labels.push("bulk".into());
        g.add_vertex_with_labels(base.name(v), labels)?;
    }
    for e in base.edges() {
        g.add_edge(base.name(e.u), base.name(e.v), e.weight)?;
    }
    for (i, id) in boundary.iter().enumerate() {
        g.add_edge(id, base.name(i), 1.0)?;
    }
    let network = g.build()?;

    let selector = EdgeSelector::query(vec![LabelTerm::Exact("pleft".into())], Vec::new());
    let metadata = json!({
        "family": "theorem3",
        "base_girth_found": base.girth(),
        "s": p.s,
        "m": p.m,
        "b": p.b,
        "blocks": p.blocks,
        "theta": window.theta,
        "g": window.g,
        "boundary_fraction": window.fraction,
        "block_counts": block_counts,
        "boundary_total": boundary.len(),
        "perturbation_factor": 1.0 + (p.b as f64).powf(-1.0 / 3.0),
        "desk_constraint": "boundary <= expander size; blocks stand in for s^2 b",
        "states": network.n_vertices(),
    });
    Ok(Theorem3Output { network, boundary, selector, metadata })
}

fn binom_count(n: usize, k: usize) -> usize {
    let mut num = 1usize;
    for i in 0..k {
        num = num * (n - i) / (i + 1);
    }
    num
}

/// Walker configuration mirroring the (possibly perturbed) stretched tree:
/// arity 5, left path weight 1 + eps, all paths stretched by s, lazy 1/2.
/// The stop rule fires at theta-boundary leaves of blocks k >= 2 and
/// unconditionally at block s^2 b.
pub fn theorem3_walker_config(
    p: &Theorem3Params,
    perturb_eps: f64,
) -> Result<(TreeWalkerConfig, StopRule)> {
    let window = boundary_threshold(p.m, p.b)?;
    let cfg = TreeWalkerConfig {
        arity: 5,
        child_weights: vec![1.0 + perturb_eps, 1.0, 1.0, 1.0, 1.0],
        child_stretch: vec![p.s; 5],
        holding: 0.5,
    };
    let stop = StopRule::BlockBoundary {
        m: p.m,
        theta: window.theta,
        final_block: p.s * p.s * p.b,
    };
    Ok((cfg, stop))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constructions::random_regular_expander;

    #[test]
    fn threshold_window_hits_and_misses() {
        let w = boundary_threshold(10, 4).unwrap();
        assert_eq!(w.theta, 1);
        assert!((w.fraction - 0.37580963447).abs() < 1e-8);
        assert!(w.fraction >= 0.25 && w.fraction <= 0.5);

        let w = boundary_threshold(15, 8).unwrap();
        assert_eq!(w.theta, 1);
        assert!(w.fraction >= 0.125 && w.fraction <= 0.25);

        // m=10, b=8: the CDF jumps over [1/8, 1/4] entirely.
        match boundary_threshold(10, 8) {
            Err(MixError::NoBoundaryThreshold { below, above, .. }) => {
                assert!(below < 0.125 && above > 0.25);
            }
            other => panic!("expected window failure, got {other:?}"),
        }
    }

    #[test]
    fn explicit_instance_structure() {
        let p = Theorem3Params { s: 2, m: 2, b: 2, blocks: 2 };
        // theta = 0 (P[Bin(2,0.2)=0] = 0.64 in [1/2, 1]); boundary per block
        // subtree: 16 of 25 leaves.
        let exp = random_regular_expander(768, 4, 9, 0.02, 30).unwrap();
        let out = theorem3(&exp.network, &p).unwrap();
        assert!(out.network.is_connected());
        // Final level rule: every level-4 leaf is boundary (theta-selected
        // or forced), and the counts match |A_1| * 5^m.
        assert_eq!(out.boundary.len(), 625);
        let (b2, survivors) = (
            out.metadata["block_counts"][1][0].as_u64().unwrap(),
            out.metadata["block_counts"][1][1].as_u64().unwrap(),
        );
        assert_eq!(b2 + survivors, 625);
        assert_eq!(survivors, 0);
        // Boundary fraction of the theta-selected part of each block: 16/25.
        let theta_selected = out
            .boundary
            .iter()
            .filter(|id| {
                let v = out.network.index_of(id).unwrap();
                out.network.has_label(v, "Dk:2")
            })
            .count();
        assert_eq!(theta_selected, 25 * 16);
        // Perturbation selector touches exactly the left stretched paths:
        // each left path of length s=2 has one pleft internal and 2 edges.
        let picked = out.selector.select(&out.network);
        let left_tree_edges = 1 + 5 + 25 + 25 * (5 + 25); // left children count
        let _ = left_tree_edges;
        let pleft_internals = (0..out.network.n_vertices())
            .filter(|&v| out.network.has_label(v, "pleft"))
            .count();
        assert_eq!(picked.len(), 2 * pleft_internals);
    }

    #[test]
    fn explicit_instance_rejects_oversized_and_small_expander() {
        let p = Theorem3Params { s: 2, m: 4, b: 4, blocks: 3 };
        let exp = random_regular_expander(64, 4, 9, 0.02, 30).unwrap();
        assert!(theorem3(&exp.network, &p).is_err());
        let p2 = Theorem3Params { s: 2, m: 2, b: 2, blocks: 2 };
        assert!(theorem3(&exp.network, &p2).is_err()); // boundary 625 > 64
    }

    /// The implicit walker's escape-time law must match the exact absorbing
    /// computation on the explicit micro instance.
    #[test]
    fn walker_matches_exact_escape_law_on_micro_instance() {
        use crate::chain::build_chain;
        use crate::constructions::walker::{mc_hitting, McConfig, StopRule, TreeWalkerConfig};
        use crate::hitting::hitting_pmf;

        let p = Theorem3Params { s: 2, m: 2, b: 2, blocks: 2 };
        let exp = random_regular_expander(768, 4, 9, 0.02, 30).unwrap();
        let out = theorem3(&exp.network, &p).unwrap();
        let chain = build_chain(&out.network, 0.5).unwrap();
        let o = chain.index_of("o").unwrap();
        let targets: Vec<usize> =
            out.boundary.iter().map(|id| chain.index_of(id).unwrap()).collect();
        let pmf = hitting_pmf(&chain, o, &targets, 4000).unwrap();
        assert!(pmf.residual < 1e-9);
        let exact_mean = pmf.mean();

        let cfg = TreeWalkerConfig {
            arity: 5,
            child_weights: vec![1.0; 5],
            child_stretch: vec![2; 5],
            holding: 0.5,
        };
        let stop = StopRule::BlockBoundary { m: 2, theta: 0, final_block: 2 };
        let mc = McConfig { samples: 40_000, seed: 5, step_cap: 100_000 };
        let run = mc_hitting(&cfg, stop, &mc);
        assert_eq!(run.cap_hits, 0);
        assert!(
            (run.mean - exact_mean).abs() < 4.0 * run.ci95,
            "walker mean {} vs exact {exact_mean} (ci {})",
            run.mean,
            run.ci95
        );
        // Exact and empirical escape CDFs agree pointwise within MC noise.
        let cdf = pmf.cdf();
        for &t in &[20usize, 60, 120, 240] {
            let emp = run.times.iter().filter(|&&x| x <= t as u64).count() as f64
                / run.times.len() as f64;
            assert!(
                (emp - cdf[t]).abs() < 0.015,
                "t={t}: empirical {emp} vs exact {}",
                cdf[t]
            );
        }
    }

    #[test]
    fn walker_config_mirrors_params() {
        let p = Theorem3Params { s: 3, m: 10, b: 4, blocks: 2 };
        let (cfg, stop) = theorem3_walker_config(&p, 0.5).unwrap();
        assert_eq!(cfg.arity, 5);
        assert_eq!(cfg.child_weights[0], 1.5);
        assert_eq!(cfg.child_stretch, vec![3; 5]);
        match stop {
            StopRule::BlockBoundary { m, theta, final_block } => {
                assert_eq!(m, 10);
                assert_eq!(theta, 1);
                assert_eq!(final_block, 36);
            }
            _ => panic!("wrong stop rule"),
        }
    }
}
