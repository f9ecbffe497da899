//! Weighted networks: vertices with string ids and labels, symmetric positive
//! edge conductances, optional self-loops. Everything downstream (chains,
//! transforms, generators) derives from this structure.
//!
//! Conventions: an undirected edge {u, v} with u != v contributes its weight
//! to both c_u and c_v; a self-loop at v contributes its stored weight once to
//! c_v. The stationary distribution of the derived walk is pi(x) = c_x / c_V
//! with c_V = sum_v c_v.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{MixError, Result};

/// One undirected edge in canonical form (u <= v by index; u == v is a loop).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub weight: f64,
}

#[derive(Debug, Clone)]
pub struct WeightedNetwork {
    names: Vec<String>,
    index: HashMap<String, usize>,
    labels: Vec<Vec<String>>,
    edges: Vec<Edge>,
    /// adj[v] lists (neighbor, weight); self-loops appear once as (v, w).
    adj: Vec<Vec<(usize, f64)>>,
}

impl WeightedNetwork {
    pub fn n_vertices(&self) -> usize {
        self.names.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn labels(&self, v: usize) -> &[String] {
        &self.labels[v]
    }

    pub fn has_label(&self, v: usize, label: &str) -> bool {
        self.labels[v].iter().any(|l| l == label)
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| MixError::UnknownVertex(name.to_string()))
    }

    pub fn neighbors(&self, v: usize) -> &[(usize, f64)] {
        &self.adj[v]
    }

    /// Degree counting distinct incident edges (a loop counts once).
    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    /// Total conductance c_v (loop weight counted once).
    pub fn conductance(&self, v: usize) -> f64 {
        self.adj[v].iter().map(|&(_, w)| w).sum()
    }

    /// c_V = sum_v c_v.
    pub fn total_conductance(&self) -> f64 {
        (0..self.n_vertices()).map(|v| self.conductance(v)).sum()
    }

    /// Stationary distribution pi(x) = c_x / c_V in closed form.
    pub fn stationary(&self) -> Vec<f64> {
        let total = self.total_conductance();
        (0..self.n_vertices()).map(|v| self.conductance(v) / total).collect()
    }

    /// Checks connectivity; on failure names the component reachable from
    /// vertex 0 (or the smaller side, whichever reads better in the error).
    pub fn check_connected(&self) -> Result<()> {
        if self.n_vertices() == 0 {
            return Err(MixError::BadParams("empty vertex set".into()));
        }
        let mut seen = vec![false; self.n_vertices()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(u, _) in &self.adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    count += 1;
                    stack.push(u);
                }
            }
        }
        if count == self.n_vertices() {
            return Ok(());
        }
        let inside: Vec<&str> =
            (0..self.n_vertices()).filter(|&v| seen[v]).map(|v| self.name(v)).collect();
        let outside: Vec<&str> =
            (0..self.n_vertices()).filter(|&v| !seen[v]).map(|v| self.name(v)).collect();
        let smaller = if inside.len() <= outside.len() { inside } else { outside };
        let mut desc = smaller.iter().take(8).cloned().collect::<Vec<_>>().join(", ");
        if smaller.len() > 8 {
            desc.push_str(&format!(", ... ({} vertices)", smaller.len()));
        }
        Err(MixError::Disconnected { component: desc })
    }

    pub fn is_connected(&self) -> bool {
        self.check_connected().is_ok()
    }

    /// True when every edge has weight exactly 1 and there are no loops.
    pub fn is_simple_unit(&self) -> bool {
        self.edges.iter().all(|e| e.u != e.v && e.weight == 1.0)
    }

    /// Shortest cycle length found by BFS from every vertex; None if acyclic.
    pub fn girth(&self) -> Option<usize> {
        let n = self.n_vertices();
        let mut best: Option<usize> = None;
        for root in 0..n {
            let mut dist = vec![usize::MAX; n];
            let mut parent = vec![usize::MAX; n];
            let mut queue = std::collections::VecDeque::new();
            dist[root] = 0;
            queue.push_back(root);
            while let Some(v) = queue.pop_front() {
                for &(u, _) in &self.adj[v] {
                    if u == v {
                        best = Some(best.map_or(1, |b: usize| b.min(1)));
                        continue;
                    }
                    if dist[u] == usize::MAX {
                        dist[u] = dist[v] + 1;
                        parent[u] = v;
                        queue.push_back(u);
                    } else if parent[v] != u && parent[u] != v {
                        let cycle = dist[v] + dist[u] + 1;
                        best = Some(best.map_or(cycle, |b| b.min(cycle)));
                    }
                }
            }
        }
        best
    }

    pub fn to_json(&self) -> NetworkFile {
        NetworkFile {
            vertices: (0..self.n_vertices())
                .map(|v| VertexRecord { id: self.names[v].clone(), labels: self.labels[v].clone() })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeRecord {
                    u: self.names[e.u].clone(),
                    v: self.names[e.v].clone(),
                    w: e.weight,
                })
                .collect(),
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let json = serde_json::to_string_pretty(&self.to_json())?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let file: NetworkFile =
            serde_json::from_str(&text).map_err(|e| MixError::BadNetworkFile(e.to_string()))?;
        file.into_network()
    }
}

/// Serialized form: {"vertices":[{"id":..,"labels":[..]}],"edges":[{"u":..,"v":..,"w":..}]}
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkFile {
    pub vertices: Vec<VertexRecord>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VertexRecord {
    pub id: String,
    #[serde(default)]
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub u: String,
    pub v: String,
    pub w: f64,
}

impl NetworkFile {
    pub fn into_network(self) -> Result<WeightedNetwork> {
        let mut b = NetworkBuilder::new();
        for v in self.vertices {
            b.add_vertex_with_labels(&v.id, v.labels)?;
        }
        for e in self.edges {
            b.add_edge(&e.u, &e.v, e.w)?;
        }
        b.build()
    }
}

/// Incremental network construction with validation on insert.
#[derive(Debug, Default)]
pub struct NetworkBuilder {
    names: Vec<String>,
    index: HashMap<String, usize>,
    labels: Vec<Vec<String>>,
    edges: Vec<Edge>,
    edge_set: HashMap<(usize, usize), usize>,
}

impl NetworkBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_vertex(&mut self, id: &str) -> Result<usize> {
        self.add_vertex_with_labels(id, Vec::new())
    }

    pub fn add_vertex_with_labels(&mut self, id: &str, labels: Vec<String>) -> Result<usize> {
        if self.index.contains_key(id) {
            return Err(MixError::DuplicateVertex(id.to_string()));
        }
        let v = self.names.len();
        self.names.push(id.to_string());
        self.index.insert(id.to_string(), v);
        self.labels.push(labels);
        Ok(v)
    }

    /// Adds a vertex if absent, returning its index either way.
    pub fn ensure_vertex(&mut self, id: &str) -> usize {
        match self.index.get(id) {
            Some(&v) => v,
            None => self.add_vertex(id).expect("absent id"),
        }
    }

    pub fn add_label(&mut self, id: &str, label: &str) -> Result<()> {
        let v = *self.index.get(id).ok_or_else(|| MixError::UnknownVertex(id.to_string()))?;
        if !self.labels[v].iter().any(|l| l == label) {
            self.labels[v].push(label.to_string());
        }
        Ok(())
    }

    pub fn contains(&self, id: &str) -> bool {
        self.index.contains_key(id)
    }

    pub fn add_edge(&mut self, u: &str, v: &str, weight: f64) -> Result<()> {
        let ui = *self.index.get(u).ok_or_else(|| MixError::UnknownVertex(u.to_string()))?;
        let vi = *self.index.get(v).ok_or_else(|| MixError::UnknownVertex(v.to_string()))?;
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(MixError::NonPositiveWeight { u: u.to_string(), v: v.to_string(), weight });
        }
        let key = (ui.min(vi), ui.max(vi));
        if self.edge_set.contains_key(&key) {
            return Err(MixError::DuplicateEdge { u: u.to_string(), v: v.to_string() });
        }
        self.edge_set.insert(key, self.edges.len());
        self.edges.push(Edge { u: key.0, v: key.1, weight });
        Ok(())
    }

    /// Adds weight to an existing edge or creates it; used by lumping where
    /// several original edges can land on the same block pair.
    pub fn add_or_accumulate_edge(&mut self, u: &str, v: &str, weight: f64) -> Result<()> {
        let ui = *self.index.get(u).ok_or_else(|| MixError::UnknownVertex(u.to_string()))?;
        let vi = *self.index.get(v).ok_or_else(|| MixError::UnknownVertex(v.to_string()))?;
        if !(weight > 0.0) || !weight.is_finite() {
            return Err(MixError::NonPositiveWeight { u: u.to_string(), v: v.to_string(), weight });
        }
        let key = (ui.min(vi), ui.max(vi));
        match self.edge_set.get(&key) {
            Some(&i) => self.edges[i].weight += weight,
            None => {
                self.edge_set.insert(key, self.edges.len());
                self.edges.push(Edge { u: key.0, v: key.1, weight });
            }
        }
        Ok(())
    }

    pub fn build(self) -> Result<WeightedNetwork> {
        let n = self.names.len();
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for e in &self.edges {
            if e.u == e.v {
                adj[e.u].push((e.u, e.weight));
            } else {
                adj[e.u].push((e.v, e.weight));
                adj[e.v].push((e.u, e.weight));
            }
        }
        for row in &mut adj {
            row.sort_by_key(|&(u, _)| u);
        }
        Ok(WeightedNetwork {
            names: self.names,
            index: self.index,
            labels: self.labels,
            edges: self.edges,
            adj,
        })
    }
}

/// Convenience constructor from (u, v, w) triples; vertices created on sight.
pub fn network_from_edges(edges: &[(&str, &str, f64)]) -> Result<WeightedNetwork> {
    let mut b = NetworkBuilder::new();
    for &(u, v, _) in edges {
        b.ensure_vertex(u);
        b.ensure_vertex(v);
    }
    for &(u, v, w) in edges {
        b.add_edge(u, v, w)?;
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stationary_from_conductances() {
        // Path u - v - w with weights (1, 2): c = (1, 3, 2), c_V = 6.
        let net = network_from_edges(&[("u", "v", 1.0), ("v", "w", 2.0)]).unwrap();
        let pi = net.stationary();
        assert!((pi[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((pi[1] - 0.5).abs() < 1e-15);
        assert!((pi[2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn loop_counts_once_in_conductance() {
        let mut b = NetworkBuilder::new();
        b.add_vertex("a").unwrap();
        b.add_vertex("z").unwrap();
        b.add_edge("a", "z", 1.0).unwrap();
        b.add_edge("z", "z", 2.0).unwrap();
        let net = b.build().unwrap();
        let z = net.index_of("z").unwrap();
        assert_eq!(net.conductance(z), 3.0);
        assert_eq!(net.total_conductance(), 4.0);
    }

    #[test]
    fn rejects_bad_edges() {
        let mut b = NetworkBuilder::new();
        b.add_vertex("a").unwrap();
        b.add_vertex("b").unwrap();
        let err = b.add_edge("a", "b", 0.0).unwrap_err();
        assert!(matches!(err, MixError::NonPositiveWeight { .. }));
        b.add_edge("a", "b", 1.0).unwrap();
        let err = b.add_edge("b", "a", 2.0).unwrap_err();
        assert!(matches!(err, MixError::DuplicateEdge { .. }));
    }

    #[test]
    fn disconnected_is_reported_with_component() {
        let mut b = NetworkBuilder::new();
        for id in ["a", "b", "c", "d"] {
            b.add_vertex(id).unwrap();
        }
        b.add_edge("a", "b", 1.0).unwrap();
        b.add_edge("c", "d", 1.0).unwrap();
        let net = b.build().unwrap();
        let err = net.check_connected().unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("disconnected"));
        assert!(msg.contains('a') || msg.contains('c'));
    }

    #[test]
    fn json_round_trip() {
        let net = network_from_edges(&[("u", "v", 1.5), ("v", "v", 0.5)]).unwrap();
        let file = net.to_json();
        let text = serde_json::to_string(&file).unwrap();
        let parsed: NetworkFile = serde_json::from_str(&text).unwrap();
        let back = parsed.into_network().unwrap();
        assert_eq!(back.n_vertices(), 2);
        assert_eq!(back.n_edges(), 2);
        assert!((back.conductance(back.index_of("v").unwrap()) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn girth_of_cycle() {
        let net = network_from_edges(&[
            ("0", "1", 1.0),
            ("1", "2", 1.0),
            ("2", "3", 1.0),
            ("3", "0", 1.0),
        ])
        .unwrap();
        assert_eq!(net.girth(), Some(4));
        let path = network_from_edges(&[("0", "1", 1.0), ("1", "2", 1.0)]).unwrap();
        assert_eq!(path.girth(), None);
    }
}
