//! Generators for the chain and graph families under study, their building
//! blocks (binary trees, 3D tori, certified random-regular expanders), and
//! the Monte Carlo tree walker for instances beyond exact range.

mod expander;
mod fact41;
mod families;
mod theorem3;
mod walker;

pub use expander::{random_regular_expander, ExpanderCertificate, ExpanderOutput};
pub use fact41::{fact41_bias_levels, fact41_closed_form};
pub use families::{
    example33, theorem1_chain, theorem2a, theorem2a_perturbation_selector, theorem2b,
    theorem2c_gadget_bias, theorem2c_pair, Theorem1Output, Theorem1Params, Theorem2aOutput,
    Theorem2aParams, Theorem2bOutput, Theorem2bVariant, Theorem2cOutput,
};
pub use theorem3::{
    boundary_threshold, theorem3, theorem3_walker_config, BoundaryWindow, Theorem3Output,
    Theorem3Params,
};
pub use walker::{
    mc_hitting, word_g_value, McConfig, McReport, StopRule, TreeWalker, TreeWalkerConfig,
    WalkOutcome,
};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::network::{NetworkBuilder, WeightedNetwork};
use crate::numeric::derive_seed;

/// 3D torus of the given side length: side^3 vertices with wrap-around
/// adjacency; for side 2 the doubled wrap edges collapse to single unit
/// edges (each vertex then has degree 3), for side >= 3 it is 6-regular.
pub fn torus3d(side: usize) -> Result<WeightedNetwork> {
    assert!(side >= 2, "torus side must be >= 2");
    let mut b = NetworkBuilder::new();
    for x in 0..side {
        for y in 0..side {
            for z in 0..side {
                b.add_vertex_with_labels(&format!("p:{x}:{y}:{z}"), vec!["torus".into()])?;
            }
        }
    }
    let mut edges = std::collections::BTreeSet::new();
    let id = |x: usize, y: usize, z: usize| format!("p:{x}:{y}:{z}");
    for x in 0..side {
        for y in 0..side {
            for z in 0..side {
                let here = id(x, y, z);
                for (nx, ny, nz) in [
                    ((x + 1) % side, y, z),
                    (x, (y + 1) % side, z),
                    (x, y, (z + 1) % side),
                ] {
                    let there = id(nx, ny, nz);
                    if here != there {
                        let key = if here < there {
                            (here.clone(), there)
                        } else {
                            (there, here.clone())
                        };
                        edges.insert(key);
                    }
                }
            }
        }
    }
    for (u, v) in edges {
        b.add_edge(&u, &v, 1.0)?;
    }
    b.build()
}

/// Full binary tree of the given depth. Vertices are "t:<level>:<index>";
/// every non-root vertex is labeled "left" or "right", and all carry "tree"
/// and "d:<level>". The left child of (l, i) is (l+1, 2i).
pub fn binary_tree(depth: usize) -> Result<WeightedNetwork> {
    let mut b = NetworkBuilder::new();
    for level in 0..=depth {
        for idx in 0u64..(1 << level) {
            let mut labels = vec!["tree".to_string(), format!("d:{level}")];
            if level > 0 {
                labels.push(if idx % 2 == 0 { "left".into() } else { "right".into() });
            } else {
                labels.push("root".into());
            }
            b.add_vertex_with_labels(&tree_id(level, idx), labels)?;
        }
    }
    for level in 1..=depth {
        for idx in 0u64..(1 << level) {
            b.add_edge(&tree_id(level - 1, idx >> 1), &tree_id(level, idx), 1.0)?;
        }
    }
    b.build()
}

pub fn tree_id(level: usize, idx: u64) -> String {
    format!("t:{level}:{idx}")
}

/// Seeded random connected network: a random spanning tree plus extra random
/// edges, weights uniform in [w_lo, w_hi]. Deterministic given the seed.
pub fn random_connected_network(
    n: usize,
    extra_edges: usize,
    w_lo: f64,
    w_hi: f64,
    seed: u64,
) -> Result<WeightedNetwork> {
    assert!(n >= 2);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x6e65));
    let mut b = NetworkBuilder::new();
    for v in 0..n {
        b.add_vertex(&format!("v{v}"))?;
    }
    let mut have: std::collections::HashSet<(usize, usize)> = std::collections::HashSet::new();
    let w = move |rng: &mut ChaCha8Rng| rng.random_range(w_lo..w_hi);
    for v in 1..n {
        let parent = rng.random_range(0..v);
        have.insert((parent, v));
        let weight = w(&mut rng);
        b.add_edge(&format!("v{parent}"), &format!("v{v}"), weight)?;
    }
    let mut added = 0;
    let mut guard = 0;
    while added < extra_edges && guard < 100 * (extra_edges + 1) {
        guard += 1;
        let u = rng.random_range(0..n);
        let v = rng.random_range(0..n);
        let key = (u.min(v), u.max(v));
        if u == v || have.contains(&key) {
            continue;
        }
        have.insert(key);
        let weight = w(&mut rng);
        b.add_edge(&format!("v{}", key.0), &format!("v{}", key.1), weight)?;
        added += 1;
    }
    b.build()
}

/// Seeded random partition of a network's vertices into k non-empty blocks.
pub fn random_partition(
    net: &WeightedNetwork,
    k: usize,
    seed: u64,
) -> crate::transforms::Partition {
    assert!(k >= 1 && k <= net.n_vertices());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 0x7061));
    let mut ids: Vec<String> = net.names().to_vec();
    ids.shuffle(&mut rng);
    let mut blocks: Vec<Vec<String>> = vec![Vec::new(); k];
    for (i, id) in ids.into_iter().enumerate() {
        if i < k {
            blocks[i].push(id);
        } else {
            let j = rng.random_range(0..k);
            blocks[j].push(id);
        }
    }
    crate::transforms::Partition { blocks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_side_two_collapses_doubled_edges() {
        let t = torus3d(2).unwrap();
        assert_eq!(t.n_vertices(), 8);
        for v in 0..8 {
            assert_eq!(t.degree(v), 3);
        }
    }

    #[test]
    fn torus_side_three_is_six_regular() {
        let t = torus3d(3).unwrap();
        assert_eq!(t.n_vertices(), 27);
        for v in 0..27 {
            assert_eq!(t.degree(v), 6);
        }
    }

    #[test]
    fn binary_tree_structure() {
        let t = binary_tree(3).unwrap();
        assert_eq!(t.n_vertices(), 15);
        assert_eq!(t.n_edges(), 14);
        let root = t.index_of("t:0:0").unwrap();
        assert_eq!(t.degree(root), 2);
        let leaf = t.index_of("t:3:5").unwrap();
        assert_eq!(t.degree(leaf), 1);
        assert!(t.has_label(leaf, "right"));
    }

    #[test]
    fn random_network_is_connected_and_deterministic() {
        let a = random_connected_network(12, 6, 0.5, 2.0, 99).unwrap();
        let b = random_connected_network(12, 6, 0.5, 2.0, 99).unwrap();
        assert!(a.is_connected());
        assert_eq!(a.n_edges(), b.n_edges());
        for (ea, eb) in a.edges().iter().zip(b.edges()) {
            assert_eq!(ea.weight, eb.weight);
        }
        let c = random_connected_network(12, 6, 0.5, 2.0, 100).unwrap();
        let same = a
            .edges()
            .iter()
            .zip(c.edges())
            .all(|(x, y)| x.u == y.u && x.v == y.v && x.weight == y.weight);
        assert!(!same);
    }

    #[test]
    fn random_partition_covers_all() {
        let net = random_connected_network(10, 3, 1.0, 2.0, 7).unwrap();
        let part = random_partition(&net, 3, 11);
        assert_eq!(part.blocks.len(), 3);
        let total: usize = part.blocks.iter().map(|b| b.len()).sum();
        assert_eq!(total, 10);
        assert!(part.blocks.iter().all(|b| !b.is_empty()));
    }
}
