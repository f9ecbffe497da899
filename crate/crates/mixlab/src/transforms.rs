//! Transformations on weighted networks: edge-weight perturbation, lumping of
//! vertex partitions, edge stretching (subdivision), vertex decoration, and
//! the non-backtracking lift.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::chain::Chain;
use crate::error::{MixError, Result};
use crate::network::{NetworkBuilder, WeightedNetwork};

/// One conjunct of a label query: an exact label, a numeric comparison
/// against labels of the form "key:<integer>", or the relational term
/// `deeper`, satisfied when this endpoint's "d:" value exceeds the other's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LabelTerm {
    Exact(String),
    Le { key: String, value: i64 },
    Ge { key: String, value: i64 },
    Eq { key: String, value: i64 },
    Deeper,
}

impl LabelTerm {
    fn matches(&self, labels: &[String], other: &[String]) -> bool {
        match self {
            LabelTerm::Exact(l) => labels.iter().any(|x| x == l),
            LabelTerm::Le { key, value } => numeric_label(labels, key).is_some_and(|n| n <= *value),
            LabelTerm::Ge { key, value } => numeric_label(labels, key).is_some_and(|n| n >= *value),
            LabelTerm::Eq { key, value } => numeric_label(labels, key).is_some_and(|n| n == *value),
            LabelTerm::Deeper => match (numeric_label(labels, "d"), numeric_label(other, "d")) {
                (Some(a), Some(b)) => a > b,
                _ => false,
            },
        }
    }

    fn parse(text: &str) -> Result<LabelTerm> {
        let text = text.trim();
        if text == "deeper" {
            return Ok(LabelTerm::Deeper);
        }
        for (op, ctor) in [
            ("<=", LabelTerm::Le { key: String::new(), value: 0 }),
            (">=", LabelTerm::Ge { key: String::new(), value: 0 }),
            ("=", LabelTerm::Eq { key: String::new(), value: 0 }),
        ] {
            if let Some(pos) = text.find(op) {
                let key = text[..pos].trim().to_string();
                let value: i64 = text[pos + op.len()..]
                    .trim()
                    .parse()
                    .map_err(|_| MixError::BadSelector(format!("bad number in `{text}`")))?;
                if key.is_empty() {
                    return Err(MixError::BadSelector(format!("empty key in `{text}`")));
                }
                return Ok(match ctor {
                    LabelTerm::Le { .. } => LabelTerm::Le { key, value },
                    LabelTerm::Ge { .. } => LabelTerm::Ge { key, value },
                    _ => LabelTerm::Eq { key, value },
                });
            }
        }
        if text.is_empty() {
            return Err(MixError::BadSelector("empty term".into()));
        }
        Ok(LabelTerm::Exact(text.to_string()))
    }
}

fn numeric_label(labels: &[String], key: &str) -> Option<i64> {
    let prefix = format!("{key}:");
    labels.iter().find_map(|l| l.strip_prefix(&prefix).and_then(|s| s.parse().ok()))
}

/// A deterministic predicate over labeled edges. An edge {u, v} is selected
/// when one endpoint satisfies every term of `first` and the other satisfies
/// every term of `second` (both orientations are tried).
///
/// String form: `all`, `none`, or `"<terms> -- <terms>"` with comma-separated
/// terms and `*` for an empty (always true) side, e.g. `left,d<=6 -- d<=5`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum EdgeSelector {
    All,
    None,
    Query { first: Vec<LabelTerm>, second: Vec<LabelTerm> },
}

impl EdgeSelector {
    pub fn query(first: Vec<LabelTerm>, second: Vec<LabelTerm>) -> Self {
        EdgeSelector::Query { first, second }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        match text {
            "all" => return Ok(EdgeSelector::All),
            "none" => return Ok(EdgeSelector::None),
            _ => {}
        }
        let (a, b) = match text.split_once("--") {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (text, "*"),
        };
        let parse_side = |side: &str| -> Result<Vec<LabelTerm>> {
            if side == "*" || side.is_empty() {
                return Ok(Vec::new());
            }
            side.split(',').map(LabelTerm::parse).collect()
        };
        Ok(EdgeSelector::Query { first: parse_side(a)?, second: parse_side(b)? })
    }

    pub fn to_query_string(&self) -> String {
        match self {
            EdgeSelector::All => "all".into(),
            EdgeSelector::None => "none".into(),
            EdgeSelector::Query { first, second } => {
                let side = |terms: &[LabelTerm]| -> String {
                    if terms.is_empty() {
                        return "*".into();
                    }
                    terms
                        .iter()
                        .map(|t| match t {
                            LabelTerm::Exact(l) => l.clone(),
                            LabelTerm::Le { key, value } => format!("{key}<={value}"),
                            LabelTerm::Ge { key, value } => format!("{key}>={value}"),
                            LabelTerm::Eq { key, value } => format!("{key}={value}"),
                            LabelTerm::Deeper => "deeper".into(),
                        })
                        .collect::<Vec<_>>()
                        .join(",")
                };
                format!("{} -- {}", side(first), side(second))
            }
        }
    }

    pub fn matches(&self, net: &WeightedNetwork, u: usize, v: usize) -> bool {
        match self {
            EdgeSelector::All => true,
            EdgeSelector::None => false,
            EdgeSelector::Query { first, second } => {
                let hit = |w: usize, other: usize, terms: &[LabelTerm]| {
                    terms.iter().all(|t| t.matches(net.labels(w), net.labels(other)))
                };
                (hit(u, v, first) && hit(v, u, second))
                    || (hit(v, u, first) && hit(u, v, second))
            }
        }
    }

    /// Indices into `net.edges()` of the selected edges.
    pub fn select(&self, net: &WeightedNetwork) -> Vec<usize> {
        net.edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| self.matches(net, e.u, e.v))
            .map(|(i, _)| i)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct PerturbOutcome {
    pub network: WeightedNetwork,
    pub changed_edges: usize,
}

/// Multiplies the weight of every selected edge by `factor` (>= 1). Factors
/// below 1 are rejected: shrinking a weight is equivalent, after global
/// rescaling, to growing all the others.
pub fn perturb_edges(
    net: &WeightedNetwork,
    selector: &EdgeSelector,
    factor: f64,
) -> Result<PerturbOutcome> {
    if !(factor >= 1.0) || !factor.is_finite() {
        return Err(MixError::FactorBelowOne(factor));
    }
    let mut b = NetworkBuilder::new();
    for v in 0..net.n_vertices() {
        b.add_vertex_with_labels(net.name(v), net.labels(v).to_vec())?;
    }
    let mut changed = 0;
    for e in net.edges() {
        let w = if self_or_selected(net, selector, e.u, e.v) {
            changed += 1;
            e.weight * factor
        } else {
            e.weight
        };
        b.add_edge(net.name(e.u), net.name(e.v), w)?;
    }
    Ok(PerturbOutcome { network: b.build()?, changed_edges: changed })
}

fn self_or_selected(net: &WeightedNetwork, sel: &EdgeSelector, u: usize, v: usize) -> bool {
    sel.matches(net, u, v)
}

/// A partition of the vertex set into disjoint non-empty blocks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Partition {
    pub blocks: Vec<Vec<String>>,
}

impl Partition {
    pub fn singletons(net: &WeightedNetwork) -> Self {
        Partition { blocks: net.names().iter().map(|n| vec![n.clone()]).collect() }
    }

    fn block_index(&self, net: &WeightedNetwork) -> Result<Vec<usize>> {
        let n = net.n_vertices();
        let mut of = vec![usize::MAX; n];
        for (k, block) in self.blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(MixError::BadPartition(format!("block {k} is empty")));
            }
            for id in block {
                let v = net
                    .index_of(id)
                    .map_err(|_| MixError::BadPartition(format!("unknown vertex `{id}`")))?;
                if of[v] != usize::MAX {
                    return Err(MixError::BadPartition(format!(
                        "vertex `{id}` appears in more than one block"
                    )));
                }
                of[v] = k;
            }
        }
        if let Some(v) = (0..n).find(|&v| of[v] == usize::MAX) {
            return Err(MixError::BadPartition(format!(
                "vertex `{}` is not covered by any block",
                net.name(v)
            )));
        }
        Ok(of)
    }
}

#[derive(Debug, Clone)]
pub struct LumpOutcome {
    pub network: WeightedNetwork,
    /// Block index of each original vertex, keyed by name.
    pub block_of: HashMap<String, usize>,
    /// Name of the new vertex representing each block.
    pub block_names: Vec<String>,
}

/// Collapses each block A_i into one state. Cross-block weights are summed
/// over the unordered cross edges; internal mass becomes an explicit
/// self-loop of weight 2 * (internal non-loop weight) + (internal loop
/// weight), i.e. the ordered-pair sum, so the lumped walk reproduces
/// Pr_pi[X_1 in A_j | X_0 in A_i] exactly and block stationary masses add up.
pub fn lump(net: &WeightedNetwork, partition: &Partition) -> Result<LumpOutcome> {
    let of = partition.block_index(net)?;
    let k = partition.blocks.len();
    let mut b = NetworkBuilder::new();
    let mut block_names = Vec::with_capacity(k);
    for (i, block) in partition.blocks.iter().enumerate() {
        let name = if block.len() == 1 { block[0].clone() } else { format!("lump{i}") };
        // Union of member labels keeps transform provenance queryable.
        let mut labels: Vec<String> = Vec::new();
        for id in block {
            for l in net.labels(net.index_of(id)?) {
                if !labels.iter().any(|x| x == l) {
                    labels.push(l.clone());
                }
            }
        }
        if block.len() > 1 {
            labels.push(format!("lump:{i}"));
        }
        b.add_vertex_with_labels(&name, labels)?;
        block_names.push(name);
    }
    let mut cross: HashMap<(usize, usize), f64> = HashMap::new();
    let mut loops = vec![0.0f64; k];
    for e in net.edges() {
        let (i, j) = (of[e.u], of[e.v]);
        if i == j {
            loops[i] += if e.u == e.v { e.weight } else { 2.0 * e.weight };
        } else {
            *cross.entry((i.min(j), i.max(j))).or_insert(0.0) += e.weight;
        }
    }
    let mut cross: Vec<((usize, usize), f64)> = cross.into_iter().collect();
    cross.sort_by_key(|&(key, _)| key);
    for ((i, j), w) in cross {
        b.add_edge(&block_names[i], &block_names[j], w)?;
    }
    for (i, &w) in loops.iter().enumerate() {
        if w > 0.0 {
            b.add_edge(&block_names[i], &block_names[i], w)?;
        }
    }
    let mut block_of = HashMap::new();
    for v in 0..net.n_vertices() {
        block_of.insert(net.name(v).to_string(), of[v]);
    }
    Ok(LumpOutcome { network: b.build()?, block_of, block_names })
}

#[derive(Debug, Clone)]
pub struct StretchOutcome {
    pub network: WeightedNetwork,
    pub stretched_edges: usize,
}

/// Replaces each selected edge {u, v} of weight w by a path of `s` edges of
/// weight w through s-1 fresh vertices. Internal vertices carry labels
/// "stretch", "orig:<u>--<v>" and "idx:<k>" so later selectors can target
/// whole stretched paths. Self-loops are never stretched.
pub fn stretch_edges(
    net: &WeightedNetwork,
    selector: &EdgeSelector,
    s: usize,
) -> Result<StretchOutcome> {
    stretch_edges_with_label(net, selector, s, None)
}

/// `stretch_edges` with an extra label attached to every created internal
/// vertex; lets multi-pass stretches keep their path families selectable.
pub fn stretch_edges_with_label(
    net: &WeightedNetwork,
    selector: &EdgeSelector,
    s: usize,
    extra_label: Option<&str>,
) -> Result<StretchOutcome> {
    if s < 2 {
        return Err(MixError::BadStretchFactor(s));
    }
    let mut b = NetworkBuilder::new();
    for v in 0..net.n_vertices() {
        b.add_vertex_with_labels(net.name(v), net.labels(v).to_vec())?;
    }
    let mut stretched = 0;
    for e in net.edges() {
        let (un, vn) = (net.name(e.u).to_string(), net.name(e.v).to_string());
        if e.u == e.v || !selector.matches(net, e.u, e.v) {
            b.add_edge(&un, &vn, e.weight)?;
            continue;
        }
        stretched += 1;
        let mut prev = un.clone();
        for k in 1..s {
            let mut id = format!("{un}~{vn}~{k}");
            while b.contains(&id) {
                id.push('\'');
            }
            let mut labels =
                vec!["stretch".into(), format!("orig:{un}--{vn}"), format!("idx:{k}")];
            if let Some(extra) = extra_label {
                labels.push(extra.to_string());
            }
            b.add_vertex_with_labels(&id, labels)?;
            b.add_edge(&prev, &id, e.weight)?;
            prev = id;
        }
        b.add_edge(&prev, &vn, e.weight)?;
    }
    Ok(StretchOutcome { network: b.build()?, stretched_edges: stretched })
}

#[derive(Debug, Clone)]
pub struct DecorateOutcome {
    pub network: WeightedNetwork,
    /// (requested id, final id) pairs for decoration vertices whose prefixed
    /// id still collided and had to be renamed further.
    pub renames: Vec<(String, String)>,
}

/// Glues `dec` onto `net` by identifying `attach` (in dec) with `host`
/// (in net). Decoration vertex ids are prefixed "<host>/" for traceability;
/// remaining collisions are renamed automatically and reported.
pub fn decorate(
    net: &WeightedNetwork,
    host: &str,
    dec: &WeightedNetwork,
    attach: &str,
) -> Result<DecorateOutcome> {
    let _ = net.index_of(host)?;
    let attach_idx = dec.index_of(attach)?;
    let mut b = NetworkBuilder::new();
    for v in 0..net.n_vertices() {
        b.add_vertex_with_labels(net.name(v), net.labels(v).to_vec())?;
    }
    for e in net.edges() {
        b.add_edge(net.name(e.u), net.name(e.v), e.weight)?;
    }
    b.add_label(host, &format!("dec-host:{host}"))?;

    let mut renames = Vec::new();
    let mut final_name = vec![String::new(); dec.n_vertices()];
    for v in 0..dec.n_vertices() {
        if v == attach_idx {
            final_name[v] = host.to_string();
            continue;
        }
        let wanted = format!("{host}/{}", dec.name(v));
        let mut id = wanted.clone();
        let mut bump = 1;
        while b.contains(&id) {
            bump += 1;
            id = format!("{wanted}#{bump}");
        }
        if id != wanted {
            renames.push((wanted, id.clone()));
        }
        let mut labels = dec.labels(v).to_vec();
        labels.push(format!("dec:{host}"));
        b.add_vertex_with_labels(&id, labels)?;
        final_name[v] = id;
    }
    for e in dec.edges() {
        let (u, v) = (&final_name[e.u], &final_name[e.v]);
        if u == host || v == host {
            b.add_or_accumulate_edge(u, v, e.weight)?;
        } else {
            b.add_edge(u, v, e.weight)?;
        }
    }
    Ok(DecorateOutcome { network: b.build()?, renames })
}

/// Lifts a simple unweighted graph to the delta-lazy non-backtracking walk on
/// directed-edge states (v, u): hold with probability delta, otherwise move
/// uniformly to (u, x) with x != v adjacent to u. The stationary distribution
/// (uniform on directed edges) is certified by power iteration rather than
/// assumed.
pub fn nbrw_lift(net: &WeightedNetwork, holding: f64) -> Result<Chain> {
    if !(0.0..1.0).contains(&holding) {
        return Err(MixError::BadHolding(holding));
    }
    if !net.is_simple_unit() {
        return Err(MixError::BadParams(
            "non-backtracking lift requires a simple graph with unit weights".into(),
        ));
    }
    net.check_connected()?;
    for v in 0..net.n_vertices() {
        if net.degree(v) < 2 {
            return Err(MixError::DegreeTooSmall {
                vertex: net.name(v).to_string(),
                degree: net.degree(v),
            });
        }
    }
    let mut states: Vec<(usize, usize)> = Vec::new();
    let mut state_of: HashMap<(usize, usize), usize> = HashMap::new();
    for e in net.edges() {
        for &(a, b2) in &[(e.u, e.v), (e.v, e.u)] {
            state_of.insert((a, b2), states.len());
            states.push((a, b2));
        }
    }
    let m = states.len();
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
    for &(v, u) in &states {
        let continuations: Vec<usize> = net
            .neighbors(u)
            .iter()
            .map(|&(x, _)| x)
            .filter(|&x| x != v)
            .map(|x| state_of[&(u, x)])
            .collect();
        let p = (1.0 - holding) / continuations.len() as f64;
        let mut row: Vec<(usize, f64)> = continuations.into_iter().map(|s| (s, p)).collect();
        if holding > 0.0 {
            row.push((state_of[&(v, u)], holding));
        }
        rows.push(row);
    }
    let stationary = stationary_by_power_iteration(&rows, 1e-12, 200_000)?;
    let names = states
        .iter()
        .map(|&(v, u)| format!("{}>{}", net.name(v), net.name(u)))
        .collect();
    Chain::from_parts(rows, stationary, holding, false, names)
}

/// Power iteration pi <- pi P from the uniform start, to max-norm tolerance.
fn stationary_by_power_iteration(
    rows: &[Vec<(usize, f64)>],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = rows.len();
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0f64; n];
    for _ in 0..max_iter {
        next.iter_mut().for_each(|x| *x = 0.0);
        for (x, row) in rows.iter().enumerate() {
            for &(y, p) in row {
                next[y] += pi[x] * p;
            }
        }
        let diff = pi.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0f64, f64::max);
        std::mem::swap(&mut pi, &mut next);
        if diff < tol {
            return Ok(pi);
        }
    }
    Err(MixError::NoConvergence(max_iter, tol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::build_chain;
    use crate::network::network_from_edges;

    fn labeled_tree() -> WeightedNetwork {
        // Root r with left child l (label "left", d:1) and right child rr.
        let mut b = NetworkBuilder::new();
        b.add_vertex_with_labels("r", vec!["d:0".into()]).unwrap();
        b.add_vertex_with_labels("l", vec!["left".into(), "d:1".into()]).unwrap();
        b.add_vertex_with_labels("rr", vec!["right".into(), "d:1".into()]).unwrap();
        b.add_edge("r", "l", 1.0).unwrap();
        b.add_edge("r", "rr", 1.0).unwrap();
        b.build().unwrap()
    }

    #[test]
    fn selector_string_round_trip() {
        for text in ["all", "none", "left,d<=6 -- *", "left -- d>=2", "k=3 -- tree"] {
            let sel = EdgeSelector::parse(text).unwrap();
            let back = EdgeSelector::parse(&sel.to_query_string()).unwrap();
            assert_eq!(sel, back);
        }
        assert!(EdgeSelector::parse("a, -- b").is_err());
    }

    #[test]
    fn selector_picks_left_edge() {
        let net = labeled_tree();
        let sel = EdgeSelector::parse("left -- d<=0").unwrap();
        let picked = sel.select(&net);
        assert_eq!(picked.len(), 1);
        let e = net.edges()[picked[0]];
        let names = (net.name(e.u), net.name(e.v));
        assert!(names == ("r", "l") || names == ("l", "r"));
    }

    #[test]
    fn perturb_identity_and_rejection() {
        let net = labeled_tree();
        let out = perturb_edges(&net, &EdgeSelector::All, 1.0).unwrap();
        assert_eq!(out.changed_edges, 2);
        for (a, b) in net.edges().iter().zip(out.network.edges()) {
            assert_eq!(a.weight, b.weight);
        }
        assert!(matches!(
            perturb_edges(&net, &EdgeSelector::All, 0.5),
            Err(MixError::FactorBelowOne(_))
        ));
    }

    #[test]
    fn perturb_changes_only_selected() {
        let net = labeled_tree();
        let sel = EdgeSelector::parse("left -- *").unwrap();
        let out = perturb_edges(&net, &sel, 1.5).unwrap();
        assert_eq!(out.changed_edges, 1);
        let l = out.network.index_of("l").unwrap();
        assert!((out.network.conductance(l) - 1.5).abs() < 1e-15);
        let rr = out.network.index_of("rr").unwrap();
        assert!((out.network.conductance(rr) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_state_perturbation_leaves_chain_unchanged() {
        let net = network_from_edges(&[("u", "v", 1.0)]).unwrap();
        let out = perturb_edges(&net, &EdgeSelector::All, 2.0).unwrap();
        let a = build_chain(&net, 0.5).unwrap();
        let b = build_chain(&out.network, 0.5).unwrap();
        for x in 0..2 {
            assert!((a.stationary()[x] - b.stationary()[x]).abs() < 1e-15);
            for y in 0..2 {
                assert!((a.prob(x, y) - b.prob(x, y)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn singleton_lump_is_identity() {
        let net = labeled_tree();
        let out = lump(&net, &Partition::singletons(&net)).unwrap();
        assert_eq!(out.network.n_vertices(), net.n_vertices());
        assert_eq!(out.network.n_edges(), net.n_edges());
        for e in net.edges() {
            let u = out.network.index_of(net.name(e.u)).unwrap();
            let others: f64 = out
                .network
                .neighbors(u)
                .iter()
                .map(|&(_, w)| w)
                .sum();
            assert!(others > 0.0);
        }
    }

    #[test]
    fn lump_path_internal_pair_gets_loop_weight_two() {
        // Path u - w - w' - v, unit weights; lump {w, w'}.
        let net = network_from_edges(&[("u", "w", 1.0), ("w", "wp", 1.0), ("wp", "v", 1.0)])
            .unwrap();
        let part = Partition {
            blocks: vec![vec!["u".into()], vec!["w".into(), "wp".into()], vec!["v".into()]],
        };
        let out = lump(&net, &part).unwrap();
        let z = out.network.index_of(&out.block_names[1]).unwrap();
        let loop_w: f64 = out
            .network
            .neighbors(z)
            .iter()
            .filter(|&&(x, _)| x == z)
            .map(|&(_, w)| w)
            .sum();
        assert!((loop_w - 2.0).abs() < 1e-15);
        // pi(z) equals pi(w) + pi(w').
        let pi_orig = net.stationary();
        let w_idx = net.index_of("w").unwrap();
        let wp_idx = net.index_of("wp").unwrap();
        let pi_lump = out.network.stationary();
        assert!((pi_lump[z] - (pi_orig[w_idx] + pi_orig[wp_idx])).abs() < 1e-14);
        // Lumped transition probabilities match Pr_pi[X_1 in A_j | X_0 in A_i].
        let chain = build_chain(&out.network, 0.0).unwrap();
        let u = out.network.index_of("u").unwrap();
        assert!((chain.prob(z, u) - 0.25).abs() < 1e-15);
        assert!((chain.prob(z, z) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lump_rejects_bad_partitions() {
        let net = labeled_tree();
        let missing = Partition { blocks: vec![vec!["r".into()], vec!["l".into()]] };
        let err = lump(&net, &missing).unwrap_err();
        assert!(err.to_string().contains("rr"));
        let dup = Partition {
            blocks: vec![vec!["r".into(), "l".into()], vec!["l".into(), "rr".into()]],
        };
        assert!(lump(&net, &dup).is_err());
    }

    #[test]
    fn stretch_single_edge_series_conductance() {
        let net = network_from_edges(&[("u", "v", 1.5)]).unwrap();
        let out = stretch_edges(&net, &EdgeSelector::All, 3).unwrap();
        assert_eq!(out.network.n_vertices(), 4);
        assert_eq!(out.network.n_edges(), 3);
        for e in out.network.edges() {
            assert!((e.weight - 1.5).abs() < 1e-15);
        }
        // Effective conductance of a series of 3 equal edges is w/3.
        // Check via the walk: from u, probability of reaching v before
        // returning to u is (w/3)/w = 1/3 in the unit-conductance sense;
        // here we just confirm the path structure.
        let u = out.network.index_of("u").unwrap();
        assert_eq!(out.network.degree(u), 1);
        assert!(matches!(
            stretch_edges(&net, &EdgeSelector::All, 1),
            Err(MixError::BadStretchFactor(1))
        ));
    }

    #[test]
    fn stretch_empty_selector_is_identity() {
        let net = labeled_tree();
        let out = stretch_edges(&net, &EdgeSelector::None, 5).unwrap();
        assert_eq!(out.stretched_edges, 0);
        assert_eq!(out.network.n_vertices(), net.n_vertices());
        assert_eq!(out.network.n_edges(), net.n_edges());
    }

    #[test]
    fn decorate_with_triangle() {
        let net = network_from_edges(&[("u", "v", 1.0)]).unwrap();
        let tri = network_from_edges(&[("a", "b", 1.0), ("b", "c", 1.0), ("c", "a", 1.0)])
            .unwrap();
        let out = decorate(&net, "u", &tri, "a").unwrap();
        assert_eq!(out.network.n_vertices(), 4);
        let u = out.network.index_of("u").unwrap();
        assert_eq!(out.network.degree(u), 3);
        assert!(out.renames.is_empty());
    }

    #[test]
    fn decorate_reports_renames_on_collision() {
        // The host network already contains the id the prefixing would pick.
        let net =
            network_from_edges(&[("u", "v", 1.0), ("v", "u/a", 1.0)]).unwrap();
        let tri = network_from_edges(&[("a", "b", 1.0), ("b", "c", 1.0), ("c", "a", 1.0)])
            .unwrap();
        let out = decorate(&net, "u", &tri, "b").unwrap();
        assert_eq!(out.renames.len(), 1);
        assert_eq!(out.renames[0].0, "u/a");
        assert!(out.network.index_of(&out.renames[0].1).is_ok());
    }

    #[test]
    fn decorate_twice_counts_vertices() {
        let net = network_from_edges(&[("u", "v", 1.0)]).unwrap();
        let tri = network_from_edges(&[("a", "b", 1.0), ("b", "c", 1.0), ("c", "a", 1.0)])
            .unwrap();
        let once = decorate(&net, "u", &tri, "a").unwrap();
        let twice = decorate(&once.network, "v", &tri, "a").unwrap();
        assert_eq!(twice.network.n_vertices(), 2 + 2 * (tri.n_vertices() - 1));
    }

    #[test]
    fn nbrw_cycle_is_deterministic_rotation() {
        let net = network_from_edges(&[
            ("0", "1", 1.0),
            ("1", "2", 1.0),
            ("2", "3", 1.0),
            ("3", "4", 1.0),
            ("4", "0", 1.0),
        ])
        .unwrap();
        let lift = nbrw_lift(&net, 0.0).unwrap();
        assert_eq!(lift.n_states(), 10);
        for x in 0..lift.n_states() {
            let row = lift.row(x);
            assert_eq!(row.len(), 1);
            assert!((row[0].1 - 1.0).abs() < 1e-15);
        }
        // Uniform stationary measure, certified by power iteration.
        for &p in lift.stationary() {
            assert!((p - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn nbrw_triangle_deterministic() {
        let net =
            network_from_edges(&[("a", "b", 1.0), ("b", "c", 1.0), ("c", "a", 1.0)]).unwrap();
        let lift = nbrw_lift(&net, 0.0).unwrap();
        for x in 0..lift.n_states() {
            assert_eq!(lift.row(x).len(), 1);
        }
    }

    #[test]
    fn nbrw_three_regular_lazy_rows() {
        // K4 is 3-regular: off-diagonal entries (1-delta)/2 = 1/4.
        let net = network_from_edges(&[
            ("a", "b", 1.0),
            ("a", "c", 1.0),
            ("a", "d", 1.0),
            ("b", "c", 1.0),
            ("b", "d", 1.0),
            ("c", "d", 1.0),
        ])
        .unwrap();
        let lift = nbrw_lift(&net, 0.5).unwrap();
        for x in 0..lift.n_states() {
            for &(y, p) in lift.row(x) {
                if y == x {
                    assert!((p - 0.5).abs() < 1e-15);
                } else {
                    assert!((p - 0.25).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn nbrw_rejects_degree_one() {
        let net = network_from_edges(&[("a", "b", 1.0), ("b", "c", 1.0)]).unwrap();
        assert!(matches!(nbrw_lift(&net, 0.0), Err(MixError::DegreeTooSmall { .. })));
    }

    /// The cycle lift is a deterministic rotation on directed edges: it holds
    /// its uniform stationary measure (doubly stochastic) but is not in
    /// detailed balance, and the report quantifies the violation as
    /// pi(x)P(x,y) = 1/10 against P(y,x) = 0.
    #[test]
    fn nbrw_cycle_lift_reversibility_report() {
        let net = network_from_edges(&[
            ("0", "1", 1.0),
            ("1", "2", 1.0),
            ("2", "3", 1.0),
            ("3", "4", 1.0),
            ("4", "0", 1.0),
        ])
        .unwrap();
        let lift = nbrw_lift(&net, 0.0).unwrap();
        let report = crate::chain::check_reversibility(&lift, 1e-12);
        assert!(!report.reversible);
        assert!((report.violation - 0.1).abs() < 1e-15);
    }
}
