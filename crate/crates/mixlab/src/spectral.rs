//! Eigenvalue analysis of reversible kernels, relaxation times, Cheeger
//! constants (exact enumeration and sweep cuts), and the spectral bounds that
//! tie them to mixing times.

use nalgebra::DMatrix;
use serde::Serialize;

use crate::chain::{build_chain, Chain};
use crate::distances::{mixing_time, DistanceProfile, MixingTime};
use crate::error::{MixError, Result};
use crate::network::{NetworkBuilder, WeightedNetwork};
use crate::numeric::{derive_seed, linear_fit, splitmix64};

pub const DENSE_CAP: usize = 3000;
pub const EXACT_CHEEGER_CAP: usize = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SpectralMethod {
    Dense,
    Iterative,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralSummary {
    /// Sorted descending. Dense mode holds all of them; iterative mode only
    /// lambda_1 = 1, lambda_2 and lambda_min.
    pub eigenvalues: Vec<f64>,
    pub gap: f64,
    pub t_rel: f64,
    pub method: SpectralMethod,
    pub residual_bound: f64,
}

impl SpectralSummary {
    pub fn lambda2(&self) -> f64 {
        self.eigenvalues.get(1).copied().unwrap_or(f64::NAN)
    }

    pub fn lambda_min(&self) -> f64 {
        *self.eigenvalues.last().unwrap()
    }
}

fn require_reversible(chain: &Chain) -> Result<()> {
    if chain.is_reversible() {
        return Ok(());
    }
    let report = crate::chain::check_reversibility(chain, 1e-10);
    if report.reversible {
        Ok(())
    } else {
        Err(MixError::NotReversible {
            x: report.worst_pair.0,
            y: report.worst_pair.1,
            violation: report.violation,
        })
    }
}

/// Dense symmetrized kernel D^{1/2} P D^{-1/2}.
fn symmetrized(chain: &Chain) -> DMatrix<f64> {
    let n = chain.n_states();
    let pi = chain.stationary();
    let mut m = DMatrix::zeros(n, n);
    for (x, row) in chain.rows().iter().enumerate() {
        for &(y, p) in row {
            m[(x, y)] = p * (pi[x] / pi[y]).sqrt();
        }
    }
    // Enforce exact symmetry against rounding before the eigensolver.
    for x in 0..n {
        for y in (x + 1)..n {
            let avg = 0.5 * (m[(x, y)] + m[(y, x)]);
            m[(x, y)] = avg;
            m[(y, x)] = avg;
        }
    }
    m
}

/// All eigenvalues of the pi-symmetrized kernel, dense mode (n <= 3000).
pub fn spectrum(chain: &Chain) -> Result<SpectralSummary> {
    require_reversible(chain)?;
    let n = chain.n_states();
    if n > DENSE_CAP {
        return Err(MixError::DenseCapExceeded { cap: DENSE_CAP, states: n });
    }
    let eig = symmetrized(chain).symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let gap = 1.0 - vals[1.min(vals.len() - 1)];
    Ok(SpectralSummary {
        eigenvalues: vals,
        gap,
        t_rel: 1.0 / gap,
        method: SpectralMethod::Dense,
        residual_bound: 0.0,
    })
}

/// lambda_2 and lambda_min by deflated power iteration; works above the dense
/// cap. The residual bound applies to both extremal estimates.
pub fn extremal_spectrum(chain: &Chain) -> Result<SpectralSummary> {
    require_reversible(chain)?;
    let n = chain.n_states();
    let pi = chain.stationary();
    let v1: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
    // S v computed sparsely: (S v)(x) = sum_y P(x,y) sqrt(pi_x/pi_y) v(y).
    let apply_s = |v: &[f64], out: &mut [f64]| {
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &(y, p) in chain.row(x) {
                acc += p * (pi[x] / pi[y]).sqrt() * v[y];
            }
            *o = acc;
        }
    };
    let deflate = |v: &mut [f64]| {
        let dot: f64 = v.iter().zip(&v1).map(|(a, b)| a * b).sum();
        for (x, val) in v.iter_mut().enumerate() {
            *val -= dot * v1[x];
        }
    };
    let tol = 1e-8;
    let max_iter = 500_000;
    // theta = largest eigenvalue of (shift I + sign * A) restricted to v1's
    // complement, found by power iteration from a seeded start.
    let run = |sign: f64, shift: f64, seed: u64| -> Result<(f64, f64)> {
        let mut v: Vec<f64> = (0..n)
            .map(|i| (splitmix64(derive_seed(seed, i as u64)) as f64 / u64::MAX as f64) - 0.5)
            .collect();
        deflate(&mut v);
        normalize(&mut v);
        let mut sv = vec![0.0f64; n];
        let mut theta;
        for _ in 0..max_iter {
            apply_s(&v, &mut sv);
            let mut w: Vec<f64> =
                v.iter().zip(&sv).map(|(a, b)| shift * a + sign * b).collect();
            deflate(&mut w);
            theta = v.iter().zip(&w).map(|(a, b)| a * b).sum();
            let residual = w
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - theta * b) * (a - theta * b))
                .sum::<f64>()
                .sqrt();
            normalize(&mut w);
            v = w;
            if residual <= tol {
                return Ok((theta, residual));
            }
        }
        Err(MixError::NoConvergence(max_iter, tol))
    };
    // lambda_2: largest of A + I (A = deflated S) minus the shift.
    let (top, r1) = run(1.0, 1.0, 11)?;
    let lambda2 = top - 1.0;
    // lambda_min: largest of I - A, i.e. 1 - lambda_min when lambda_min < 0,
    // or dominated by the deflated zero (report 0) otherwise.
    let (bot, r2) = run(-1.0, 1.0, 23)?;
    let lambda_min = (1.0 - bot).min(lambda2);
    let gap = 1.0 - lambda2;
    Ok(SpectralSummary {
        eigenvalues: vec![1.0, lambda2, lambda_min],
        gap,
        t_rel: 1.0 / gap,
        method: SpectralMethod::Iterative,
        residual_bound: r1.max(r2),
    })
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheegerMode {
    Exact,
    Sweep,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheegerReport {
    pub phi: f64,
    pub set: Vec<String>,
    /// True iff found by exhaustive subset enumeration.
    pub exact: bool,
}

/// Q(A) = sum_{x in A, y not in A} pi(x) P(x,y).
pub fn edge_flow(chain: &Chain, in_set: &[bool]) -> f64 {
    let pi = chain.stationary();
    let mut q = 0.0;
    for (x, row) in chain.rows().iter().enumerate() {
        if in_set[x] {
            for &(y, p) in row {
                if !in_set[y] {
                    q += pi[x] * p;
                }
            }
        }
    }
    q
}

/// Cheeger constant Phi = min over 0 < pi(A) <= 1/2 of Q(A)/pi(A).
/// Exact mode enumerates all subsets (n <= 22); sweep mode orders states by
/// the second eigenvector of the symmetrized kernel and takes the best
/// prefix cut, an upper bound on Phi.
pub fn cheeger(chain: &Chain, mode: CheegerMode) -> Result<CheegerReport> {
    require_reversible(chain)?;
    let n = chain.n_states();
    match mode {
        CheegerMode::Exact => {
            if n > EXACT_CHEEGER_CAP {
                return Err(MixError::CheegerCapExceeded { cap: EXACT_CHEEGER_CAP, states: n });
            }
            let pi = chain.stationary();
            let mut best = f64::INFINITY;
            let mut best_mask = 0u32;
            for mask in 1u32..(1 << n) - 1 {
                let mut pa = 0.0;
                for x in 0..n {
                    if mask >> x & 1 == 1 {
                        pa += pi[x];
                    }
                }
                if pa <= 0.0 || pa > 0.5 + 1e-15 {
                    continue;
                }
                let in_set: Vec<bool> = (0..n).map(|x| mask >> x & 1 == 1).collect();
                let phi = edge_flow(chain, &in_set) / pa;
                if phi < best {
                    best = phi;
                    best_mask = mask;
                }
            }
            let set = (0..n)
                .filter(|&x| best_mask >> x & 1 == 1)
                .map(|x| chain.state_name(x).to_string())
                .collect();
            Ok(CheegerReport { phi: best, set, exact: true })
        }
        CheegerMode::Sweep => {
            let order = sweep_order(chain)?;
            let pi = chain.stationary();
            let mut in_set = vec![false; n];
            let mut pa = 0.0;
            let mut q = 0.0;
            let mut best = f64::INFINITY;
            let mut best_k = 0;
            for (k, &x) in order.iter().enumerate().take(n - 1) {
                // Update Q(A) incrementally: adding x sends its outward flow
                // out and cancels the formerly-outward flow into x.
                for &(y, p) in chain.row(x) {
                    if y == x {
                        continue;
                    }
                    if in_set[y] {
                        q -= pi[y] * chain.prob(y, x);
                    } else {
                        q += pi[x] * p;
                    }
                }
                in_set[x] = true;
                pa += pi[x];
                let side = pa.min(1.0 - pa);
                if side > 0.0 {
                    let phi = q / side;
                    if phi < best {
                        best = phi;
                        best_k = k;
                    }
                }
            }
            let prefix: Vec<usize> = order[..=best_k].to_vec();
            let prefix_pi: f64 = prefix.iter().map(|&x| pi[x]).sum();
            let set: Vec<String> = if prefix_pi <= 0.5 {
                prefix.iter().map(|&x| chain.state_name(x).to_string()).collect()
            } else {
                order[best_k + 1..].iter().map(|&x| chain.state_name(x).to_string()).collect()
            };
            Ok(CheegerReport { phi: best, set, exact: false })
        }
    }
}

fn sweep_order(chain: &Chain) -> Result<Vec<usize>> {
    let n = chain.n_states();
    let pi = chain.stationary();
    let scores: Vec<f64> = if n <= DENSE_CAP {
        let eig = symmetrized(chain).symmetric_eigen();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let col = idx[1];
        (0..n).map(|x| eig.eigenvectors[(x, col)] / pi[x].sqrt()).collect()
    } else {
        let v2 = second_eigenvector_estimate(chain, 1e-8, 500_000)?;
        (0..n).map(|x| v2[x] / pi[x].sqrt()).collect()
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap());
    Ok(order)
}

/// Deflated power iteration on (I + S) restricted to the complement of the
/// top eigenvector; returns the lambda_2 eigenvector estimate.
fn second_eigenvector_estimate(chain: &Chain, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let n = chain.n_states();
    let pi = chain.stationary();
    let v1: Vec<f64> = pi.iter().map(|p| p.sqrt()).collect();
    let mut v: Vec<f64> = (0..n)
        .map(|i| (splitmix64(derive_seed(31, i as u64)) as f64 / u64::MAX as f64) - 0.5)
        .collect();
    let deflate = |v: &mut [f64]| {
        let dot: f64 = v.iter().zip(&v1).map(|(a, b)| a * b).sum();
        for (x, val) in v.iter_mut().enumerate() {
            *val -= dot * v1[x];
        }
    };
    deflate(&mut v);
    normalize(&mut v);
    let mut sv = vec![0.0f64; n];
    for _ in 0..max_iter {
        for (x, o) in sv.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &(y, p) in chain.row(x) {
                acc += p * (pi[x] / pi[y]).sqrt() * v[y];
            }
            *o = acc;
        }
        let mut w: Vec<f64> = v.iter().zip(&sv).map(|(a, b)| a + b).collect();
        deflate(&mut w);
        let theta: f64 = v.iter().zip(&w).map(|(a, b)| a * b).sum();
        let residual = w
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - theta * b) * (a - theta * b))
            .sum::<f64>()
            .sqrt();
        normalize(&mut w);
        v = w;
        if residual <= tol {
            return Ok(v);
        }
    }
    Err(MixError::NoConvergence(max_iter, tol))
}

/// Independent recomputation of Phi(A) for a reported set.
pub fn verify_cheeger_set(chain: &Chain, set: &[String]) -> Result<f64> {
    let mut in_set = vec![false; chain.n_states()];
    for name in set {
        in_set[chain.index_of(name)?] = true;
    }
    let pa: f64 = chain
        .stationary()
        .iter()
        .enumerate()
        .filter(|&(x, _)| in_set[x])
        .map(|(_, p)| p)
        .sum();
    Ok(edge_flow(chain, &in_set) / pa)
}

#[derive(Debug, Clone, Serialize)]
pub struct CheegerInequalityReport {
    pub phi: f64,
    pub gap: f64,
    pub lower: f64,
    pub upper: f64,
    pub holds: bool,
}

/// Phi^2 / 2 <= gap <= 2 Phi, with 1e-9 slack.
pub fn check_cheeger_inequality(chain: &Chain) -> Result<CheegerInequalityReport> {
    let report = cheeger(chain, CheegerMode::Exact)?;
    let summary = spectrum(chain)?;
    let lower = report.phi * report.phi / 2.0;
    let upper = 2.0 * report.phi;
    let holds = lower <= summary.gap + 1e-9 && summary.gap <= upper + 1e-9;
    Ok(CheegerInequalityReport { phi: report.phi, gap: summary.gap, lower, upper, holds })
}

#[derive(Debug, Clone, Serialize)]
pub struct TrelBoundRow {
    pub epsilon: f64,
    pub t_mix: Option<f64>,
    pub lower: f64,
    pub upper: f64,
    /// None when the profile horizon was exhausted (reported, not failed).
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TrelBoundsReport {
    pub t_rel: f64,
    pub rows: Vec<TrelBoundRow>,
    pub all_hold: bool,
}

/// (t_rel - 1) |log 2eps| <= t_mix(eps) <= t_rel |log(eps min_x pi(x))| for
/// lazy reversible chains, checked per epsilon against a TV profile.
pub fn check_trel_bounds(
    chain: &Chain,
    epsilons: &[f64],
    profile: &DistanceProfile,
) -> Result<TrelBoundsReport> {
    if chain.holding() < 0.5 {
        return Err(MixError::BadParams(format!(
            "relaxation bounds require a 1/2-lazy chain, holding = {}",
            chain.holding()
        )));
    }
    let summary = spectrum(chain)?;
    let min_pi = chain.stationary().iter().cloned().fold(f64::INFINITY, f64::min);
    let mut rows = Vec::new();
    let mut all_hold = true;
    for &eps in epsilons {
        let lower = (summary.t_rel - 1.0) * (1.0 / (2.0 * eps)).ln().max(0.0);
        let upper = summary.t_rel * (eps * min_pi).ln().abs();
        let tm = mixing_time(profile, eps);
        let (t_mix, holds) = match tm {
            MixingTime::Reached { time } => {
                let ok = lower <= time + 1e-9 && time <= upper + 1e-9;
                all_hold &= ok;
                (Some(time), Some(ok))
            }
            MixingTime::HorizonExhausted { .. } => (None, None),
        };
        rows.push(TrelBoundRow { epsilon: eps, t_mix, lower, upper, holds });
    }
    Ok(TrelBoundsReport { t_rel: summary.t_rel, rows, all_hold })
}

/// r = ceil((2/c^2) log(3 D |A| / (2 eps))) from the induced-chain bound.
pub fn prop_induced_r(c: f64, d_max: f64, a_size: usize, eps: f64) -> usize {
    ((2.0 / (c * c)) * (3.0 * d_max * a_size as f64 / (2.0 * eps)).ln()).ceil() as usize
}

#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct InducedBoundReport {
    pub r: usize,
    pub cheeger_c: f64,
    pub cheeger_exact: bool,
    pub d_max: f64,
    pub hypotheses: Vec<HypothesisCheck>,
    pub tv_at_r: f64,
    pub verdict: bool,
}

/// Bound via the lazy walk on the induced network on A: after checking the
/// hypotheses (conductance normalization, pi(A-tilde) >= 1 - eps/3, escape
/// probability of the start), verifies ||Pr_x^r - pi||_TV <= eps by exact
/// evolution of the full chain.
pub fn induced_subchain_bound(
    net: &WeightedNetwork,
    a_set: &[String],
    eps: f64,
    start: &str,
) -> Result<InducedBoundReport> {
    if !(0.0 < eps && eps <= 1.0) {
        return Err(MixError::BadParams(format!("eps = {eps} outside (0, 1]")));
    }
    // Global rescale so min_v c_v >= 1; the walk is scale-invariant.
    let min_c = (0..net.n_vertices())
        .map(|v| net.conductance(v))
        .fold(f64::INFINITY, f64::min);
    let scale = if min_c < 1.0 { 1.0 / min_c } else { 1.0 };
    let mut b = NetworkBuilder::new();
    for v in 0..net.n_vertices() {
        b.add_vertex_with_labels(net.name(v), net.labels(v).to_vec())?;
    }
    for e in net.edges() {
        b.add_edge(net.name(e.u), net.name(e.v), e.weight * scale)?;
    }
    let net = b.build()?;

    let mut in_a = vec![false; net.n_vertices()];
    for name in a_set {
        in_a[net.index_of(name)?] = true;
    }
    let x = net.index_of(start)?;
    let d_max =
        (0..net.n_vertices()).map(|v| net.conductance(v)).fold(0.0f64, f64::max);

    // Internal vertex boundary and A-tilde.
    let boundary: Vec<usize> = (0..net.n_vertices())
        .filter(|&v| in_a[v] && net.neighbors(v).iter().any(|&(u, _)| !in_a[u]))
        .collect();
    let in_boundary: Vec<bool> = {
        let mut f = vec![false; net.n_vertices()];
        for &v in &boundary {
            f[v] = true;
        }
        f
    };
    let chain = build_chain(&net, 0.5)?;
    let pi = chain.stationary();
    let pi_tilde: f64 =
        (0..net.n_vertices()).filter(|&v| in_a[v] && !in_boundary[v]).map(|v| pi[v]).sum();

    // Induced network on A.
    let mut ib = NetworkBuilder::new();
    for v in 0..net.n_vertices() {
        if in_a[v] {
            ib.add_vertex(net.name(v))?;
        }
    }
    for e in net.edges() {
        if in_a[e.u] && in_a[e.v] {
            ib.add_edge(net.name(e.u), net.name(e.v), e.weight)?;
        }
    }
    let induced = ib.build()?;
    let induced_chain = build_chain(&induced, 0.5)?;
    let (c, c_exact) = if induced.n_vertices() <= EXACT_CHEEGER_CAP {
        (cheeger(&induced_chain, CheegerMode::Exact)?.phi, true)
    } else {
        (cheeger(&induced_chain, CheegerMode::Sweep)?.phi, false)
    };
    let a_size = a_set.len();
    let r = prop_induced_r(c, d_max, a_size, eps);

    let mut hypotheses = Vec::new();
    hypotheses.push(HypothesisCheck {
        name: "pi(A-tilde) >= 1 - eps/3".into(),
        holds: pi_tilde >= 1.0 - eps / 3.0,
        detail: format!("pi(A-tilde) = {pi_tilde:.6}, needed {:.6}", 1.0 - eps / 3.0),
    });
    hypotheses.push(HypothesisCheck {
        name: "start in A-tilde".into(),
        holds: in_a[x] && !in_boundary[x],
        detail: format!("start `{start}`"),
    });
    let escape = if boundary.is_empty() {
        0.0
    } else {
        let targets: Vec<usize> = boundary.clone();
        let pmf =
            crate::hitting::hitting_pmf(&chain, x, &targets, r.saturating_sub(1))?;
        pmf.masses.iter().sum::<f64>()
    };
    hypotheses.push(HypothesisCheck {
        name: "Pr_x[T_boundary < r] <= eps/3".into(),
        holds: escape <= eps / 3.0 + 1e-12,
        detail: format!("escape probability {escape:.6}, needed <= {:.6}", eps / 3.0),
    });

    let evolved = crate::distances::evolve(
        &chain,
        &crate::chain::Distribution::point_mass(chain.n_states(), x),
        r,
    )?;
    let tv_at_r = crate::distances::tv_distance(
        &evolved,
        &crate::chain::Distribution(pi.to_vec()),
    )?;
    Ok(InducedBoundReport {
        r,
        cheeger_c: c,
        cheeger_exact: c_exact,
        d_max,
        hypotheses,
        tv_at_r,
        verdict: tv_at_r <= eps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FamilyKind {
    /// Stretched expanders: t_rel = O(s^2), ratios t_rel/s^2 bounded above.
    Stretch,
    /// Torus decorations: t_rel = Omega(k^3), ratios t_rel/k^3 bounded below.
    Decorate,
    Identity,
}

#[derive(Debug, Clone, Serialize)]
pub struct RelaxationReport {
    pub kind: FamilyKind,
    pub pairs: Vec<(f64, f64)>,
    pub fitted_exponent: f64,
    pub fit_r2: f64,
    /// t_rel / param^2 for Stretch, t_rel / param^3 for Decorate,
    /// t_rel itself for Identity.
    pub ratios: Vec<f64>,
}

/// Fits log t_rel against log param over a transformed family and reports the
/// per-member ratios against the expected power law.
pub fn check_relaxation_lemma(
    members: &[(f64, &Chain)],
    kind: FamilyKind,
) -> Result<RelaxationReport> {
    if members.len() < 3 {
        return Err(MixError::FamilyTooSmall(members.len()));
    }
    let mut pairs = Vec::new();
    for &(param, chain) in members {
        let summary = if chain.n_states() <= DENSE_CAP {
            spectrum(chain)?
        } else {
            extremal_spectrum(chain)?
        };
        pairs.push((param, summary.t_rel));
    }
    let xs: Vec<f64> = pairs.iter().map(|&(p, _)| p.ln()).collect();
    let ys: Vec<f64> = pairs.iter().map(|&(_, t)| t.ln()).collect();
    let (_, slope, r2) = linear_fit(&xs, &ys);
    let power = match kind {
        FamilyKind::Stretch => 2.0,
        FamilyKind::Decorate => 3.0,
        FamilyKind::Identity => 0.0,
    };
    let ratios = pairs.iter().map(|&(p, t)| t / p.powf(power)).collect();
    Ok(RelaxationReport { kind, pairs, fitted_exponent: slope, fit_r2: r2, ratios })
}
