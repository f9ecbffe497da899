//! Row-stochastic kernels derived from weighted networks: delta-lazy discrete
//! kernels and continuous-time heat-kernel rows, plus reversibility checks.

use serde::Serialize;

use crate::error::{MixError, Result};
use crate::network::WeightedNetwork;

/// A probability distribution over the chain's state space, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(pub Vec<f64>);

impl Distribution {
    pub fn point_mass(n: usize, state: usize) -> Self {
        let mut v = vec![0.0; n];
        v[state] = 1.0;
        Distribution(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn validate(&self, tol: f64) -> Result<()> {
        if self.0.iter().any(|&p| p < -tol || !p.is_finite()) {
            return Err(MixError::BadParams("distribution has negative or non-finite mass".into()));
        }
        if (self.total_mass() - 1.0).abs() > tol {
            return Err(MixError::BadParams(format!(
                "distribution mass {} differs from 1",
                self.total_mass()
            )));
        }
        Ok(())
    }
}

/// A finite Markov kernel with its stationary distribution.
///
/// Rows are stored sparsely and sorted by column. `holding` records the
/// laziness delta the chain was built with; `reversible` is a certificate
/// that detailed balance holds (set by construction or by an explicit check).
#[derive(Debug, Clone)]
pub struct Chain {
    rows: Vec<Vec<(usize, f64)>>,
    stationary: Vec<f64>,
    holding: f64,
    reversible: bool,
    state_names: Vec<String>,
}

pub const ROW_SUM_TOL: f64 = 1e-12;
pub const STATIONARY_TOL: f64 = 1e-10;
pub const REVERSIBILITY_TOL: f64 = 1e-12;

impl Chain {
    /// Assembles a chain from raw parts, validating the invariants:
    /// row sums 1, entries >= 0, diagonal >= holding, pi stochastic and
    /// stationary, detailed balance when `reversible` is claimed.
    pub fn from_parts(
        rows: Vec<Vec<(usize, f64)>>,
        stationary: Vec<f64>,
        holding: f64,
        reversible: bool,
        state_names: Vec<String>,
    ) -> Result<Self> {
        let mut rows = rows;
        for row in &mut rows {
            row.sort_by_key(|&(j, _)| j);
        }
        let chain = Chain { rows, stationary, holding, reversible, state_names };
        chain.validate()?;
        Ok(chain)
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<(usize, f64)>] {
        &self.rows
    }

    pub fn row(&self, x: usize) -> &[(usize, f64)] {
        &self.rows[x]
    }

    pub fn prob(&self, x: usize, y: usize) -> f64 {
        match self.rows[x].binary_search_by_key(&y, |&(j, _)| j) {
            Ok(i) => self.rows[x][i].1,
            Err(_) => 0.0,
        }
    }

    pub fn stationary(&self) -> &[f64] {
        &self.stationary
    }

    pub fn holding(&self) -> f64 {
        self.holding
    }

    pub fn is_reversible(&self) -> bool {
        self.reversible
    }

    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn state_name(&self, x: usize) -> &str {
        &self.state_names[x]
    }

    pub fn index_of(&self, name: &str) -> Result<usize> {
        self.state_names
            .iter()
            .position(|s| s == name)
            .ok_or_else(|| MixError::UnknownVertex(name.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n_states();
        for (x, row) in self.rows.iter().enumerate() {
            let mut sum = 0.0;
            let mut diag = 0.0;
            for &(y, p) in row {
                if y >= n || p < 0.0 || !p.is_finite() {
                    return Err(MixError::BadParams(format!(
                        "row {} has invalid entry ({}, {})",
                        x, y, p
                    )));
                }
                if y == x {
                    diag = p;
                }
                sum += p;
            }
            if (sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(MixError::BadParams(format!("row {} sums to {}", x, sum)));
            }
            if diag < self.holding - ROW_SUM_TOL {
                return Err(MixError::BadParams(format!(
                    "diagonal entry {} at state {} below holding {}",
                    diag, x, self.holding
                )));
            }
        }
        let mass: f64 = self.stationary.iter().sum();
        if (mass - 1.0).abs() > ROW_SUM_TOL {
            return Err(MixError::BadParams(format!("stationary mass {}", mass)));
        }
        // pi P = pi in max norm.
        let mut pi_p = vec![0.0; n];
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, p) in row {
                pi_p[y] += self.stationary[x] * p;
            }
        }
        let worst = pi_p
            .iter()
            .zip(&self.stationary)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        if worst > STATIONARY_TOL {
            return Err(MixError::BadParams(format!("pi P deviates from pi by {:.3e}", worst)));
        }
        if self.reversible {
            let (ok, x, y, violation) = self.reversibility_check(REVERSIBILITY_TOL);
            if !ok {
                return Err(MixError::NotReversible {
                    x: self.state_names[x].clone(),
                    y: self.state_names[y].clone(),
                    violation,
                });
            }
        }
        Ok(())
    }

    /// Max |pi(x)P(x,y) - pi(y)P(y,x)| with its argmax pair.
    fn reversibility_check(&self, tol: f64) -> (bool, usize, usize, f64) {
        let mut worst = 0.0f64;
        let mut arg = (0usize, 0usize);
        for (x, row) in self.rows.iter().enumerate() {
            for &(y, p) in row {
                let flow = self.stationary[x] * p;
                let back = self.stationary[y] * self.prob(y, x);
                let d = (flow - back).abs();
                if d > worst {
                    worst = d;
                    arg = (x, y);
                }
            }
        }
        (worst <= tol, arg.0, arg.1, worst)
    }

    /// The delta-lazy version delta I + (1 - delta) P of this chain.
    pub fn lazified(&self, delta: f64) -> Result<Chain> {
        if !(0.0..1.0).contains(&delta) {
            return Err(MixError::BadHolding(delta));
        }
        let n = self.n_states();
        let mut rows = Vec::with_capacity(n);
        for (x, row) in self.rows.iter().enumerate() {
            let mut new_row: Vec<(usize, f64)> =
                row.iter().map(|&(y, p)| (y, (1.0 - delta) * p)).collect();
            match new_row.binary_search_by_key(&x, |&(j, _)| j) {
                Ok(i) => new_row[i].1 += delta,
                Err(i) => new_row.insert(i, (x, delta)),
            }
            rows.push(new_row);
        }
        Chain::from_parts(
            rows,
            self.stationary.clone(),
            self.holding + delta * (1.0 - self.holding),
            self.reversible,
            self.state_names.clone(),
        )
    }
}

/// Builds the delta-lazy walk on a network:
/// P(v,u) = (1-delta) c_{v,u} / c_v for u != v,
/// P(v,v) = delta + (1-delta) c_{v,v} / c_v,
/// pi(x) = c_x / c_V (closed form, never an eigen-solve).
pub fn build_chain(net: &WeightedNetwork, holding: f64) -> Result<Chain> {
    if !(0.0..1.0).contains(&holding) {
        return Err(MixError::BadHolding(holding));
    }
    net.check_connected()?;
    let n = net.n_vertices();
    let mut rows = Vec::with_capacity(n);
    for v in 0..n {
        let cv = net.conductance(v);
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(net.neighbors(v).len() + 1);
        let mut diag = holding;
        for &(u, w) in net.neighbors(v) {
            if u == v {
                diag += (1.0 - holding) * w / cv;
            } else {
                row.push((u, (1.0 - holding) * w / cv));
            }
        }
        if diag > 0.0 {
            row.push((v, diag));
        }
        rows.push(row);
    }
    Chain::from_parts(rows, net.stationary(), holding, true, net.names().to_vec())
}

/// Outcome of an explicit detailed-balance check.
#[derive(Debug, Clone, Serialize)]
pub struct ReversibilityReport {
    pub reversible: bool,
    pub worst_pair: (String, String),
    pub violation: f64,
}

/// Checks |pi(x)P(x,y) - pi(y)P(y,x)| <= tol over all pairs, reporting the
/// argmax pair either way.
pub fn check_reversibility(chain: &Chain, tol: f64) -> ReversibilityReport {
    let (ok, x, y, violation) = chain.reversibility_check(tol);
    ReversibilityReport {
        reversible: ok,
        worst_pair: (chain.state_name(x).to_string(), chain.state_name(y).to_string()),
        violation,
    }
}

/// One row of the heat kernel H_t(start, .) = sum_k e^{-t} t^k / k! P^k(start, .),
/// truncated at the smallest K whose Poisson tail mass is below `tol`.
///
/// `t` is measured in units of the given kernel's clock; the two-speed
/// identity H_t(P) = H_{2t}(P_L) lets callers pass either the non-lazy or the
/// lazy kernel as long as times are scaled accordingly.
pub fn heat_kernel_row(chain: &Chain, start: usize, t: f64, tol: f64) -> Result<Distribution> {
    if t < 0.0 {
        return Err(MixError::NegativeTime(t));
    }
    if !(tol > 0.0 && tol <= 1e-3) {
        return Err(MixError::BadTolerance(tol, 1e-3));
    }
    let truncation = poisson_truncation(t, tol);
    let n = chain.n_states();
    let mut acc = vec![0.0f64; n];
    let mut v = vec![0.0f64; n];
    v[start] = 1.0;
    let mut scratch = vec![0.0f64; n];
    for (k, &w) in truncation.weights.iter().enumerate() {
        if w > 0.0 {
            for (x, &m) in v.iter().enumerate() {
                if m != 0.0 {
                    acc[x] += w * m;
                }
            }
        }
        if k < truncation.weights.len() - 1 {
            step(chain, &v, &mut scratch);
            std::mem::swap(&mut v, &mut scratch);
        }
    }
    Ok(Distribution(acc))
}

fn step(chain: &Chain, v: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (x, &m) in v.iter().enumerate() {
        if m != 0.0 {
            for &(y, p) in chain.row(x) {
                out[y] += m * p;
            }
        }
    }
}

struct PoissonTruncation {
    weights: Vec<f64>,
}

/// Poisson weights e^{-t} t^k / k! for k = 0..=K with tail mass < tol beyond K,
/// found by direct summation. Uses log-space weights for large t so nothing
/// underflows before the mode.
fn poisson_truncation(t: f64, tol: f64) -> PoissonTruncation {
    if t == 0.0 {
        return PoissonTruncation { weights: vec![1.0] };
    }
    let cap = (t + 12.0 * t.sqrt() + 60.0 + 10.0 * (1.0 / tol).ln()) as usize;
    let weights = crate::numeric::poisson_pmf_table(t, cap);
    let mut cum = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        cum += w;
        if 1.0 - cum < tol {
            return PoissonTruncation { weights: weights[..=k].to_vec() };
        }
    }
    PoissonTruncation { weights }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::network_from_edges;

    #[test]
    fn single_edge_lazy_chain() {
        let net = network_from_edges(&[("u", "v", 1.0)]).unwrap();
        let chain = build_chain(&net, 0.5).unwrap();
        assert!((chain.prob(0, 0) - 0.5).abs() < 1e-15);
        assert!((chain.prob(0, 1) - 0.5).abs() < 1e-15);
        assert!((chain.stationary()[0] - 0.5).abs() < 1e-15);
        assert!((chain.stationary()[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn weighted_path_stationary() {
        let net = network_from_edges(&[("u", "v", 1.0), ("v", "w", 2.0)]).unwrap();
        let chain = build_chain(&net, 0.0).unwrap();
        let pi = chain.stationary();
        assert!((pi[0] - 1.0 / 6.0).abs() < 1e-15);
        assert!((pi[1] - 0.5).abs() < 1e-15);
        assert!((pi[2] - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lazification_is_half_identity_plus_half_kernel() {
        let net = network_from_edges(&[
            ("a", "b", 1.0),
            ("b", "c", 2.5),
            ("c", "a", 0.3),
            ("c", "c", 1.0),
        ])
        .unwrap();
        let p0 = build_chain(&net, 0.0).unwrap();
        let pl = build_chain(&net, 0.5).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let expect = 0.5 * p0.prob(x, y) + if x == y { 0.5 } else { 0.0 };
                assert!((pl.prob(x, y) - expect).abs() < 1e-15);
            }
        }
        // lazified() agrees with building at delta = 1/2 directly.
        let via = p0.lazified(0.5).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                assert!((via.prob(x, y) - pl.prob(x, y)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rejects_disconnected_and_bad_holding() {
        let mut b = crate::network::NetworkBuilder::new();
        for id in ["a", "b", "c", "d"] {
            b.add_vertex(id).unwrap();
        }
        b.add_edge("a", "b", 1.0).unwrap();
        b.add_edge("c", "d", 1.0).unwrap();
        let net = b.build().unwrap();
        assert!(matches!(build_chain(&net, 0.5), Err(MixError::Disconnected { .. })));

        let ok = network_from_edges(&[("a", "b", 1.0)]).unwrap();
        assert!(matches!(build_chain(&ok, 1.0), Err(MixError::BadHolding(_))));
    }

    #[test]
    fn reversibility_detects_directed_cycle() {
        // 3-state deterministic rotation with uniform pi: violation 1/3.
        let rows = vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![(0, 1.0)]];
        let pi = vec![1.0 / 3.0; 3];
        let names = vec!["1".into(), "2".into(), "3".into()];
        let chain = Chain::from_parts(rows, pi, 0.0, false, names).unwrap();
        let report = check_reversibility(&chain, 1e-12);
        assert!(!report.reversible);
        assert!((report.violation - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn network_chains_are_reversible() {
        let net = network_from_edges(&[("a", "b", 1.0), ("b", "c", 0.2), ("a", "c", 3.0)]).unwrap();
        let chain = build_chain(&net, 0.25).unwrap();
        let report = check_reversibility(&chain, 1e-12);
        assert!(report.reversible);
    }

    #[test]
    fn heat_kernel_point_mass_at_time_zero() {
        let net = network_from_edges(&[("a", "b", 1.0), ("b", "c", 1.0)]).unwrap();
        let chain = build_chain(&net, 0.0).unwrap();
        let row = heat_kernel_row(&chain, 1, 0.0, 1e-9).unwrap();
        assert_eq!(row.0, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn heat_kernel_two_state_swap_closed_form() {
        // Swap kernel P(u,v) = 1: H_t(u,u) = (1 + e^{-2t}) / 2.
        let net = network_from_edges(&[("u", "v", 1.0)]).unwrap();
        let chain = build_chain(&net, 0.0).unwrap();
        for &t in &[0.1, 0.7, 2.0, 13.0] {
            let row = heat_kernel_row(&chain, 0, t, 1e-10).unwrap();
            let expect = 0.5 * (1.0 + (-2.0 * t).exp());
            assert!((row.0[0] - expect).abs() < 1e-10, "t={t}");
            assert!((row.total_mass() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn heat_kernel_rejects_bad_inputs() {
        let net = network_from_edges(&[("u", "v", 1.0)]).unwrap();
        let chain = build_chain(&net, 0.0).unwrap();
        assert!(matches!(heat_kernel_row(&chain, 0, -1.0, 1e-6), Err(MixError::NegativeTime(_))));
        assert!(matches!(
            heat_kernel_row(&chain, 0, 1.0, 0.5),
            Err(MixError::BadTolerance(_, _))
        ));
    }

    #[test]
    fn two_speed_identity_on_a_small_chain() {
        let net = network_from_edges(&[("a", "b", 1.0), ("b", "c", 2.0), ("c", "a", 1.0)]).unwrap();
        let p = build_chain(&net, 0.0).unwrap();
        let pl = build_chain(&net, 0.5).unwrap();
        let tol = 1e-10;
        for &t in &[0.3, 1.0, 4.0] {
            let h = heat_kernel_row(&p, 0, t, tol).unwrap();
            let hl = heat_kernel_row(&pl, 0, 2.0 * t, tol).unwrap();
            for (a, b) in h.0.iter().zip(&hl.0) {
                assert!((a - b).abs() < 2.0 * tol);
            }
        }
    }
}
