//! The named chain/graph families: the biased birth-death gadget, the
//! five-branch separation chain, and the decorated-tree constructions with
//! their unbalanced-vertex sets.

use serde::Serialize;
use serde_json::json;

use crate::constructions::{random_regular_expander, torus3d, tree_id};
use crate::error::{MixError, Result};
use crate::hitting::absorption_split;
use crate::network::{NetworkBuilder, WeightedNetwork};
use crate::numeric::derive_seed;
use crate::transforms::{decorate, lump, stretch_edges, EdgeSelector, LabelTerm, Partition};

/// Birth-death chain on A u B u {z} (2n+1 states) with geometric conductances
/// w(a_i, a_{i-1}) = w(b_i, b_{i-1}) = 2^{-i}: interior bias 2/3 toward z,
/// reflecting endpoints a, b, and P(z, a_1) = P(z, b_1) = 1/2.
pub fn example33(n: usize) -> Result<WeightedNetwork> {
    if n < 2 {
        return Err(MixError::BadParams(format!("example33 needs n >= 2, got {n}")));
    }
    let mut b = NetworkBuilder::new();
    b.add_vertex_with_labels("z", vec!["z".into()])?;
    for side in ["a", "b"] {
        for i in 1..=n {
            let mut labels = vec![format!("branch:{side}"), format!("i:{i}")];
            if i == n {
                labels.push(side.into());
            }
            b.add_vertex_with_labels(&format!("{side}:{i}"), labels)?;
        }
    }
    for side in ["a", "b"] {
        for i in 1..=n {
            let lo = if i == 1 { "z".to_string() } else { format!("{side}:{}", i - 1) };
            b.add_edge(&lo, &format!("{side}:{i}"), 0.5f64.powi(i as i32))?;
        }
    }
    b.build()
}

#[derive(Debug, Clone, Copy)]
pub struct Theorem1Params {
    pub n: usize,
    pub delta: f64,
    pub s: usize,
}

#[derive(Debug, Clone)]
pub struct Theorem1Output {
    pub network: WeightedNetwork,
    pub pi_z: f64,
    pub metadata: serde_json::Value,
}

/// The five-branch chain: the gadget of `example33` on A u B u {z}, two
/// parallel branches C (stretched by s) and D from z-bar to z, and a fast
/// segment E from z' to z-bar. Indices like delta*n/2 are rounded down.
pub fn theorem1_chain(p: Theorem1Params) -> Result<Theorem1Output> {
    if p.s < 2 {
        return Err(MixError::BadParams(format!("theorem1 needs s >= 2, got {}", p.s)));
    }
    if !(p.delta > 0.0 && p.delta < 1.0) {
        return Err(MixError::BadParams(format!(
            "theorem1 needs 0 < delta < 1, got {}",
            p.delta
        )));
    }
    let m = (p.delta * p.n as f64 / 2.0 + 1e-12).floor() as usize;
    if m < 1 {
        return Err(MixError::BadParams(format!(
            "theorem1 needs delta*n/2 >= 1 (got {} with n={}, delta={})",
            p.delta * p.n as f64 / 2.0,
            p.n,
            p.delta
        )));
    }
    if p.n < 2 {
        return Err(MixError::BadParams(format!("theorem1 needs n >= 2, got {}", p.n)));
    }
    let pow2 = |e: i64| 2.0f64.powi(e as i32);
    let mut b = NetworkBuilder::new();
    b.add_vertex_with_labels("z", vec!["z".into()])?;
    b.add_vertex_with_labels("zbar", vec!["zbar".into()])?;
    b.add_vertex_with_labels("zprime", vec!["zprime".into()])?;
    for side in ["a", "b"] {
        for i in 1..=p.n {
            let mut labels = vec![format!("branch:{}", side.to_uppercase()), format!("i:{i}")];
            if i == p.n {
                labels.push(side.into());
            }
            b.add_vertex_with_labels(&format!("{side}:{i}"), labels)?;
        }
    }
    for i in 1..=m {
        b.add_vertex_with_labels(&format!("d:{i}"), vec!["branch:D".into(), format!("i:{i}")])?;
        b.add_vertex_with_labels(&format!("e:{i}"), vec!["branch:E".into(), format!("i:{i}")])?;
    }
    // C-branch vertices: per segment i, internals c:<i>:<1..s-1> plus the
    // junction c:<i>:s for i < m (the last junction is z itself).
    for i in 1..=m {
        let top_j = if i < m { p.s } else { p.s - 1 };
        for j in 1..=top_j {
            b.add_vertex_with_labels(
                &format!("c:{i}:{j}"),
                vec!["branch:C".into(), format!("i:{i}"), format!("j:{j}")],
            )?;
        }
    }

    // A and B: w(a_i, a_{i-1}) = 2^{-i}, a_0 = z.
    for side in ["a", "b"] {
        for i in 1..=p.n {
            let lo = if i == 1 { "z".to_string() } else { format!("{side}:{}", i - 1) };
            b.add_edge(&lo, &format!("{side}:{i}"), pow2(-(i as i64)))?;
        }
    }
    // D: w(d_i, d_{i+1}) = 2^{m-i} for 0 <= i <= m, d_0 = zbar, d_{m+1} = z.
    for i in 0..=m {
        let lo = if i == 0 { "zbar".to_string() } else { format!("d:{i}") };
        let hi = if i == m { "z".to_string() } else { format!("d:{}", i + 1) };
        b.add_edge(&lo, &hi, pow2(m as i64 - i as i64))?;
    }
    // C: segment i is a path of s edges of weight 2^{m-i} from junction i-1
    // to junction i, junction 0 = zbar, junction m = z.
    for i in 1..=m {
        let w = pow2(m as i64 - i as i64);
        let junction = |k: usize| -> String {
            if k == 0 {
                "zbar".into()
            } else if k == m {
                "z".into()
            } else {
                format!("c:{k}:{}", p.s)
            }
        };
        let mut prev = junction(i - 1);
        for j in 1..=p.s {
            let next = if j == p.s { junction(i) } else { format!("c:{i}:{j}") };
            b.add_edge(&prev, &next, w)?;
            prev = next;
        }
    }
    // E: w(e_i, e_{i+1}) = 2^{2m-i} for 0 <= i <= m, e_0 = zprime,
    // e_{m+1} = zbar.
    for i in 0..=m {
        let lo = if i == 0 { "zprime".to_string() } else { format!("e:{i}") };
        let hi = if i == m { "zbar".to_string() } else { format!("e:{}", i + 1) };
        b.add_edge(&lo, &hi, pow2(2 * m as i64 - i as i64))?;
    }
    let network = b.build()?;
    let z = network.index_of("z")?;
    let pi_z = network.stationary()[z];
    let metadata = json!({
        "family": "theorem1",
        "n": p.n,
        "delta": p.delta,
        "s": p.s,
        "delta_n_over_2_rounded": m,
        "pi_z": pi_z,
        "states": network.n_vertices(),
    });
    Ok(Theorem1Output { network, pi_z, metadata })
}

/// Guarded iterated-logarithm factor: log log is undefined or negative for
/// small arguments, so the factor is max(1, ln ln (max(q, 16))).
fn lil_guard(q: usize) -> f64 {
    ((q.max(16) as f64).ln().ln()).max(1.0)
}

/// The unbalance threshold 3 sqrt(Cj * guard(Cj)).
pub fn lil_threshold(cj: usize) -> f64 {
    3.0 * (cj as f64 * lil_guard(cj)).sqrt()
}

/// The unbalanced sets D_i: vertices u at level C*i whose path to the root
/// (based at u itself) satisfies, for every 1 <= j <= i, that the signed
/// left-right count over the first C*j + 1 path vertices is at least the
/// threshold. Returns indices into each level C*i, for i = 1..=depth/(2C).
pub fn theorem2a_d_sets(depth: usize, c: usize) -> Vec<Vec<u64>> {
    let i_max = depth / (2 * c);
    let mut out = Vec::with_capacity(i_max);
    for i in 1..=i_max {
        let level = c * i;
        let mut members = Vec::new();
        for idx in 0u64..(1 << level) {
            // Prefix sums of the signed turn sequence from u upward: the
            // vertex at distance l from u contributes +1 when it is a left
            // child (bit l of idx is 0), -1 otherwise.
            let mut ok = true;
            for j in 1..=i {
                let span = (c * j).min(level - 1);
                let mut g = 0i64;
                for l in 0..=span {
                    g += if (idx >> l) & 1 == 0 { 1 } else { -1 };
                }
                if (g as f64) < lil_threshold(c * j) {
                    ok = false;
                    break;
                }
            }
            if ok {
                members.push(idx);
            }
        }
        out.push(members);
    }
    out
}

#[derive(Debug, Clone, Copy)]
pub struct Theorem2aParams {
    /// Tree depth (the desk-scale stand-in for k^3).
    pub depth: usize,
    pub c_step: usize,
    pub torus_side: usize,
    pub expander_degree: usize,
    pub expander_gap_threshold: f64,
    pub seed: u64,
}

impl Default for Theorem2aParams {
    fn default() -> Self {
        Theorem2aParams {
            depth: 8,
            c_step: 1,
            torus_side: 2,
            expander_degree: 4,
            expander_gap_threshold: 0.03,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem2aOutput {
    #[serde(skip)]
    pub network: WeightedNetwork,
    pub d_vertices: Vec<String>,
    pub metadata: serde_json::Value,
}

/// Binary tree of the given depth with an expander joining the leaves, the
/// root and every unbalanced vertex (the D sets) decorated by a 3D torus.
pub fn theorem2a(
    p: &Theorem2aParams,
    expander: Option<&WeightedNetwork>,
) -> Result<Theorem2aOutput> {
    let leaves = 1u64 << p.depth;
    let generated;
    let exp_net = match expander {
        Some(net) => {
            if net.n_vertices() as u64 != leaves {
                return Err(MixError::BadParams(format!(
                    "expander has {} vertices, need 2^depth = {leaves}",
                    net.n_vertices()
                )));
            }
            net
        }
        None => {
            generated = random_regular_expander(
                leaves as usize,
                p.expander_degree,
                derive_seed(p.seed, 0xe8),
                p.expander_gap_threshold,
                50,
            )?;
            &generated.network
        }
    };

    let d_sets = theorem2a_d_sets(p.depth, p.c_step);
    let mut b = NetworkBuilder::new();
    for level in 0..=p.depth {
        for idx in 0u64..(1 << level) {
            let mut labels = vec!["tree".to_string(), format!("d:{level}")];
            if level > 0 {
                labels.push(if idx % 2 == 0 { "left".into() } else { "right".into() });
            } else {
                labels.push("root".into());
                labels.push("D".into());
                labels.push("Di:0".into());
            }
            b.add_vertex_with_labels(&tree_id(level, idx), labels)?;
        }
    }
    for (i, members) in d_sets.iter().enumerate() {
        let level = p.c_step * (i + 1);
        for &idx in members {
            b.add_label(&tree_id(level, idx), "D")?;
            b.add_label(&tree_id(level, idx), &format!("Di:{}", i + 1))?;
        }
    }
    for level in 1..=p.depth {
        for idx in 0u64..(1 << level) {
            b.add_edge(&tree_id(level - 1, idx >> 1), &tree_id(level, idx), 1.0)?;
        }
    }
    for e in exp_net.edges() {
        b.add_edge(
            &tree_id(p.depth, e.u as u64),
            &tree_id(p.depth, e.v as u64),
            e.weight,
        )?;
    }
    let mut network = b.build()?;

    // Decorate the root and every D vertex with a torus.
    let torus = torus3d(p.torus_side)?;
    let attach = "p:0:0:0";
    let mut d_vertices = vec![tree_id(0, 0)];
    for (i, members) in d_sets.iter().enumerate() {
        let level = p.c_step * (i + 1);
        for &idx in members {
            d_vertices.push(tree_id(level, idx));
        }
    }
    for host in &d_vertices {
        network = decorate(&network, host, &torus, attach)?.network;
    }

    let metadata = json!({
        "family": "theorem2a",
        "depth": p.depth,
        "c_step": p.c_step,
        "torus_side": p.torus_side,
        "expander_degree": p.expander_degree,
        "seed": p.seed,
        "d_set_sizes": d_sets.iter().map(|s| s.len()).collect::<Vec<_>>(),
        "d_total": d_vertices.len(),
        "lil_guard": "max(1, ln ln max(Cj, 16))",
        "states": network.n_vertices(),
    });
    Ok(Theorem2aOutput { network, d_vertices, metadata })
}

/// The part-(a) perturbation targets: edges between a top-half vertex and its
/// left child (the `deeper` term pins the left endpoint as the child).
pub fn theorem2a_perturbation_selector(depth: usize) -> EdgeSelector {
    EdgeSelector::query(
        vec![
            LabelTerm::Exact("left".into()),
            LabelTerm::Deeper,
            LabelTerm::Le { key: "d".into(), value: (depth / 2 + 1) as i64 },
        ],
        vec![
            LabelTerm::Exact("tree".into()),
            LabelTerm::Le { key: "d".into(), value: (depth / 2) as i64 },
        ],
    )
}

#[derive(Debug, Clone, Copy)]
pub enum Theorem2bVariant {
    /// Same recursion as part (a) with the constant replaced by C(k).
    GrowingC { c: usize },
    /// Block-wise recursion: membership at level i*ell depends on the last
    /// ell ancestors, with descendants of earlier D vertices excluded.
    Blockwise { ell: usize, m: usize },
}

/// Raw block condition of the second variant: the signed left-right count
/// over the vertex's own last ell steps (the block it just crossed) reaches
/// the threshold. Depends on the last ell digits only, so blocks are exactly
/// independent and the level-1 density is an exact binomial tail.
pub fn blockwise_member(idx: u64, ell: usize, threshold: i64) -> bool {
    let mut g = 0i64;
    for l in 0..ell {
        g += if (idx >> l) & 1 == 0 { 1 } else { -1 };
    }
    g >= threshold
}

#[derive(Debug, Clone, Serialize)]
pub struct Theorem2bOutput {
    #[serde(skip)]
    pub network: WeightedNetwork,
    pub d_vertices: Vec<String>,
    pub metadata: serde_json::Value,
}

pub fn theorem2b(
    base: &Theorem2aParams,
    variant: Theorem2bVariant,
    expander: Option<&WeightedNetwork>,
) -> Result<Theorem2bOutput> {
    match variant {
        Theorem2bVariant::GrowingC { c } => {
            let p = Theorem2aParams { c_step: c, ..*base };
            let out = theorem2a(&p, expander)?;
            Ok(Theorem2bOutput {
                network: out.network,
                d_vertices: out.d_vertices,
                metadata: json!({
                    "family": "theorem2b-variant1",
                    "base": out.metadata,
                }),
            })
        }
        Theorem2bVariant::Blockwise { ell, m } => {
            let depth = base.depth;
            if depth % ell != 0 {
                return Err(MixError::BadParams(format!(
                    "blockwise variant needs ell | depth; got ell={ell}, depth={depth}"
                )));
            }
            let m_cap = (ell as f64).powf(0.25).ceil() as usize;
            if m < 1 || m > m_cap {
                return Err(MixError::BadParams(format!(
                    "blockwise variant needs 1 <= m <= ceil(ell^(1/4)) = {m_cap}, got {m}"
                )));
            }
            let r = depth / ell;
            let threshold = (m as f64 * (ell as f64).sqrt()).ceil() as i64;
            let mut raw_counts = Vec::new();
            let mut final_sets: Vec<Vec<u64>> = Vec::new();
            for i in 1..=r / 2 {
                let level = i * ell;
                let raw: Vec<u64> = (0u64..(1 << level))
                    .filter(|&idx| blockwise_member(idx, ell, threshold))
                    .collect();
                raw_counts.push(raw.len());
                // Exclude vertices whose path to the root passes an earlier
                // D vertex.
                let survivors: Vec<u64> = raw
                    .into_iter()
                    .filter(|&idx| {
                        for (j, set) in final_sets.iter().enumerate() {
                            let ancestor = idx >> (level - (j + 1) * ell);
                            if set.binary_search(&ancestor).is_ok() {
                                return false;
                            }
                        }
                        true
                    })
                    .collect();
                final_sets.push(survivors);
            }

            let leaves = 1u64 << depth;
            let generated;
            let exp_net = match expander {
                Some(net) => net,
                None => {
                    generated = random_regular_expander(
                        leaves as usize,
                        base.expander_degree,
                        derive_seed(base.seed, 0xe8),
                        base.expander_gap_threshold,
                        50,
                    )?;
                    &generated.network
                }
            };
            let mut b = NetworkBuilder::new();
            for level in 0..=depth {
                for idx in 0u64..(1 << level) {
                    let mut labels = vec!["tree".to_string(), format!("d:{level}")];
                    if level > 0 {
                        labels.push(if idx % 2 == 0 { "left".into() } else { "right".into() });
                    } else {
                        labels.push("root".into());
                        labels.push("D".into());
                    }
                    b.add_vertex_with_labels(&tree_id(level, idx), labels)?;
                }
            }
            let mut d_vertices = vec![tree_id(0, 0)];
            for (i, set) in final_sets.iter().enumerate() {
                let level = (i + 1) * ell;
                for &idx in set {
                    b.add_label(&tree_id(level, idx), "D")?;
                    b.add_label(&tree_id(level, idx), &format!("Di:{}", i + 1))?;
                    d_vertices.push(tree_id(level, idx));
                }
            }
            for level in 1..=depth {
                for idx in 0u64..(1 << level) {
                    b.add_edge(&tree_id(level - 1, idx >> 1), &tree_id(level, idx), 1.0)?;
                }
            }
            for e in exp_net.edges() {
                b.add_edge(
                    &tree_id(depth, e.u as u64),
                    &tree_id(depth, e.v as u64),
                    e.weight,
                )?;
            }
            let mut network = b.build()?;
            let torus = torus3d(base.torus_side)?;
            for host in &d_vertices {
                network = decorate(&network, host, &torus, "p:0:0:0")?.network;
            }
            let metadata = json!({
                "family": "theorem2b-variant2",
                "depth": depth,
                "ell": ell,
                "m": m,
                "r": r,
                "threshold": threshold,
                "raw_counts": raw_counts,
                "final_counts": final_sets.iter().map(|s| s.len()).collect::<Vec<_>>(),
                "states": network.n_vertices(),
            });
            Ok(Theorem2bOutput { network, d_vertices, metadata })
        }
    }
}

#[derive(Debug, Clone)]
pub struct Theorem2cOutput {
    pub stretched: WeightedNetwork,
    pub lumped: WeightedNetwork,
    pub lumped_pairs: usize,
    pub metadata: serde_json::Value,
}

/// Part (c): stretch every edge of the part-(a) graph by 3, then lump the
/// two internal vertices of each left-child tree path, leaving a weight-2
/// self-loop per pair.
pub fn theorem2c_pair(
    p: &Theorem2aParams,
    expander: Option<&WeightedNetwork>,
) -> Result<Theorem2cOutput> {
    let base = theorem2a(p, expander)?;
    let stretched = stretch_edges(&base.network, &EdgeSelector::All, 3)?.network;
    let mut blocks: Vec<Vec<String>> = Vec::new();
    let mut in_pair = std::collections::HashSet::new();
    for level in 1..=p.depth {
        for idx in (0u64..(1 << level)).step_by(2) {
            let parent = tree_id(level - 1, idx >> 1);
            let child = tree_id(level, idx);
            let w1 = format!("{parent}~{child}~1");
            let w2 = format!("{parent}~{child}~2");
            stretched.index_of(&w1)?;
            stretched.index_of(&w2)?;
            in_pair.insert(w1.clone());
            in_pair.insert(w2.clone());
            blocks.push(vec![w1, w2]);
        }
    }
    let lumped_pairs = blocks.len();
    for name in stretched.names() {
        if !in_pair.contains(name) {
            blocks.push(vec![name.clone()]);
        }
    }
    let lumped = lump(&stretched, &Partition { blocks })?.network;
    let metadata = json!({
        "family": "theorem2c",
        "base": base.metadata,
        "stretch": 3,
        "lumped_pairs": lumped_pairs,
        "stretched_states": stretched.n_vertices(),
        "lumped_states": lumped.n_vertices(),
    });
    Ok(Theorem2cOutput { stretched, lumped, lumped_pairs, metadata })
}

/// Exact left bias of the single lumped gadget: a root with two 3-stretched
/// child edges, the left path's internal pair lumped into one vertex with a
/// weight-2 self-loop. Returns (lumped bias, plain stretched bias).
pub fn theorem2c_gadget_bias() -> Result<(f64, f64)> {
    let mut b = NetworkBuilder::new();
    b.add_vertex("r")?;
    b.add_vertex_with_labels("va", vec!["left".into()])?;
    b.add_vertex("vb")?;
    b.add_edge("r", "va", 1.0)?;
    b.add_edge("r", "vb", 1.0)?;
    let gadget = b.build()?;
    let stretched = stretch_edges(&gadget, &EdgeSelector::All, 3)?.network;
    let bias = |net: &WeightedNetwork| -> Result<f64> {
        let chain = crate::chain::build_chain(net, 0.5)?;
        let r = chain.index_of("r")?;
        let a = chain.index_of("va")?;
        let bb = chain.index_of("vb")?;
        let mut start = vec![0.0; chain.n_states()];
        start[r] = 1.0;
        let split = absorption_split(chain.rows(), &start, &[a], &[bb], 1e-14, 1_000_000)?;
        Ok(split.to_a)
    };
    let plain_bias = bias(&stretched)?;
    let mut blocks = vec![vec!["r~va~1".to_string(), "r~va~2".to_string()]];
    for name in stretched.names() {
        if name != "r~va~1" && name != "r~va~2" {
            blocks.push(vec![name.clone()]);
        }
    }
    let lumped = lump(&stretched, &Partition { blocks })?.network;
    let lumped_bias = bias(&lumped)?;
    Ok((lumped_bias, plain_bias))
}
