//! Exact evolution of distributions and worst-case distance profiles: total
//! variation, separation and L2, with mixing times and cutoff diagnostics
//! over chain families.

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{heat_kernel_row, Chain, Distribution};
use crate::error::{MixError, Result};

/// Half the L1 distance between two distributions on the same state space.
pub fn tv_distance(mu: &Distribution, nu: &Distribution) -> Result<f64> {
    if mu.len() != nu.len() {
        return Err(MixError::MismatchedSupport(mu.len(), nu.len()));
    }
    Ok(0.5 * mu.0.iter().zip(&nu.0).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// ||mu - pi||_{2,pi} = sqrt(sum_x pi(x) (mu(x)/pi(x) - 1)^2).
pub fn l2_pi_norm(mu: &Distribution, pi: &[f64]) -> Result<f64> {
    if mu.len() != pi.len() {
        return Err(MixError::MismatchedSupport(mu.len(), pi.len()));
    }
    let mut sum = 0.0;
    for (m, p) in mu.0.iter().zip(pi) {
        let d = m / p - 1.0;
        sum += p * d * d;
    }
    Ok(sum.sqrt())
}

/// start . P^t by t sparse row-combination steps.
pub fn evolve(chain: &Chain, start: &Distribution, t: usize) -> Result<Distribution> {
    if start.len() != chain.n_states() {
        return Err(MixError::MismatchedSupport(start.len(), chain.n_states()));
    }
    let mut v = start.0.clone();
    let mut scratch = vec![0.0f64; v.len()];
    for _ in 0..t {
        evolve_step(chain, &v, &mut scratch);
        std::mem::swap(&mut v, &mut scratch);
    }
    Ok(Distribution(v))
}

pub(crate) fn evolve_step(chain: &Chain, v: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|x| *x = 0.0);
    for (x, &m) in v.iter().enumerate() {
        if m != 0.0 {
            for &(y, p) in chain.row(x) {
                out[y] += m * p;
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ProfileKind {
    Tv,
    Separation,
    L2,
}

/// An ordered time series of a worst-case distance.
#[derive(Debug, Clone, Serialize)]
pub struct DistanceProfile {
    pub kind: ProfileKind,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub start_set: String,
    pub chain: String,
}

impl DistanceProfile {
    pub fn to_csv(&self, config_hash: Option<&str>) -> String {
        let mut out = String::from("t,value\n");
        for (t, v) in self.times.iter().zip(&self.values) {
            out.push_str(&format!("{t},{v}\n"));
        }
        if let Some(h) = config_hash {
            out.push_str(&format!("# config={h}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StartSet {
    All,
    States(Vec<usize>),
}

impl StartSet {
    fn resolve(&self, chain: &Chain, t_max: usize) -> Result<Vec<usize>> {
        match self {
            StartSet::All => {
                let n = chain.n_states();
                if n > EXACT_STATE_CAP || t_max > EXACT_STEP_CAP {
                    return Err(MixError::ExactCapExceeded {
                        cap: EXACT_STATE_CAP,
                        step_cap: EXACT_STEP_CAP,
                        states: n,
                        steps: t_max,
                    });
                }
                Ok((0..n).collect())
            }
            StartSet::States(v) => Ok(v.clone()),
        }
    }

    fn describe(&self, chain: &Chain) -> String {
        match self {
            StartSet::All => "ALL".into(),
            StartSet::States(v) => v
                .iter()
                .map(|&x| chain.state_name(x).to_string())
                .collect::<Vec<_>>()
                .join("+"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetSet {
    All,
    States(Vec<usize>),
}

impl TargetSet {
    fn resolve(&self, chain: &Chain) -> Vec<usize> {
        match self {
            TargetSet::All => (0..chain.n_states()).collect(),
            TargetSet::States(v) => v.clone(),
        }
    }
}

/// Profile computation is exact; ALL-starts mode is capped to keep the
/// O(|V| E t) cost bounded. Callers above the cap must name start sets.
pub const EXACT_STATE_CAP: usize = 5000;
pub const EXACT_STEP_CAP: usize = 20000;

/// d(t) = max over starts of || P^t(x, .) - pi ||_TV for t = 0..=t_max.
pub fn tv_profile(chain: &Chain, t_max: usize, starts: &StartSet) -> Result<DistanceProfile> {
    let profiles = discrete_profiles(chain, t_max, starts, &TargetSet::All)?;
    Ok(profiles.tv)
}

/// d_sep(t) = 1 - min over (x in starts, y in targets) of P^t(x,y)/pi(y).
pub fn separation_profile(
    chain: &Chain,
    t_max: usize,
    starts: &StartSet,
    targets: &TargetSet,
) -> Result<DistanceProfile> {
    let profiles = discrete_profiles(chain, t_max, starts, targets)?;
    Ok(profiles.separation)
}

pub struct ProfileBundle {
    pub tv: DistanceProfile,
    pub separation: DistanceProfile,
    pub l2: DistanceProfile,
}

/// Computes TV, separation and L2 profiles from the same evolved rows.
/// Start states evolve independently (in parallel); per-time values merge by
/// max (TV, L2) and min (separation ratio), which is order-independent.
pub fn discrete_profiles(
    chain: &Chain,
    t_max: usize,
    starts: &StartSet,
    targets: &TargetSet,
) -> Result<ProfileBundle> {
    let start_states = starts.resolve(chain, t_max)?;
    let target_states = targets.resolve(chain);
    if target_states.is_empty() {
        return Err(MixError::EmptyTargets);
    }
    let pi = chain.stationary().to_vec();
    let per_start: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = start_states
        .par_iter()
        .map(|&x| {
            let mut v = vec![0.0f64; chain.n_states()];
            v[x] = 1.0;
            let mut scratch = vec![0.0f64; chain.n_states()];
            let mut tvs = Vec::with_capacity(t_max + 1);
            let mut seps = Vec::with_capacity(t_max + 1);
            let mut l2s = Vec::with_capacity(t_max + 1);
            for t in 0..=t_max {
                tvs.push(0.5 * v.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum::<f64>());
                seps.push(
                    target_states
                        .iter()
                        .map(|&y| v[y] / pi[y])
                        .fold(f64::INFINITY, f64::min),
                );
                l2s.push(
                    v.iter()
                        .zip(&pi)
                        .map(|(a, b)| {
                            let d = a / b - 1.0;
                            b * d * d
                        })
                        .sum::<f64>()
                        .sqrt(),
                );
                if t < t_max {
                    evolve_step(chain, &v, &mut scratch);
                    std::mem::swap(&mut v, &mut scratch);
                }
            }
            (tvs, seps, l2s)
        })
        .collect();

    let mut tv = vec![0.0f64; t_max + 1];
    let mut min_ratio = vec![f64::INFINITY; t_max + 1];
    let mut l2 = vec![0.0f64; t_max + 1];
    for (tvs, seps, l2s) in &per_start {
        for t in 0..=t_max {
            tv[t] = tv[t].max(tvs[t]);
            min_ratio[t] = min_ratio[t].min(seps[t]);
            l2[t] = l2[t].max(l2s[t]);
        }
    }
    let sep: Vec<f64> = min_ratio.iter().map(|r| (1.0 - r).max(0.0)).collect();
    let times: Vec<f64> = (0..=t_max).map(|t| t as f64).collect();
    let start_desc = starts.describe(chain);
    let mk = |kind, values| DistanceProfile {
        kind,
        times: times.clone(),
        values,
        start_set: start_desc.clone(),
        chain: format!("{}-state chain, delta={}", chain.n_states(), chain.holding()),
    };
    Ok(ProfileBundle {
        tv: mk(ProfileKind::Tv, tv),
        separation: mk(ProfileKind::Separation, sep),
        l2: mk(ProfileKind::L2, l2),
    })
}

/// Continuous-time TV and separation profiles over a caller-specified grid,
/// one heat-kernel row per (start, grid point), each correct within tol.
pub fn continuous_profiles(
    chain: &Chain,
    grid: &[f64],
    tol: f64,
    starts: &StartSet,
    targets: &TargetSet,
) -> Result<(DistanceProfile, DistanceProfile)> {
    let start_states = starts.resolve(chain, grid.len())?;
    let target_states = targets.resolve(chain);
    if target_states.is_empty() {
        return Err(MixError::EmptyTargets);
    }
    let pi = chain.stationary().to_vec();
    let rows: Vec<Vec<(f64, f64)>> = start_states
        .par_iter()
        .map(|&x| -> Result<Vec<(f64, f64)>> {
            let mut out = Vec::with_capacity(grid.len());
            for &t in grid {
                let h = heat_kernel_row(chain, x, t, tol)?;
                let tv = 0.5 * h.0.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum::<f64>();
                let ratio = target_states
                    .iter()
                    .map(|&y| h.0[y] / pi[y])
                    .fold(f64::INFINITY, f64::min);
                out.push((tv, ratio));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut tv = vec![0.0f64; grid.len()];
    let mut ratio = vec![f64::INFINITY; grid.len()];
    for per_start in &rows {
        for (i, &(t, r)) in per_start.iter().enumerate() {
            tv[i] = tv[i].max(t);
            ratio[i] = ratio[i].min(r);
        }
    }
    let sep: Vec<f64> = ratio.iter().map(|r| (1.0 - r).max(0.0)).collect();
    let start_desc = starts.describe(chain);
    let desc = format!("{}-state chain, continuous", chain.n_states());
    Ok((
        DistanceProfile {
            kind: ProfileKind::Tv,
            times: grid.to_vec(),
            values: tv,
            start_set: start_desc.clone(),
            chain: desc.clone(),
        },
        DistanceProfile {
            kind: ProfileKind::Separation,
            times: grid.to_vec(),
            values: sep,
            start_set: start_desc,
            chain: desc,
        },
    ))
}

/// TV profile from a single start, evolving only until the distance drops
/// below `stop_below` (or `cap` steps). Used by experiment drivers that need
/// t_mix at a few quantiles without guessing a horizon.
pub fn tv_profile_until(
    chain: &Chain,
    start: usize,
    stop_below: f64,
    cap: usize,
) -> DistanceProfile {
    let pi = chain.stationary();
    let mut v = vec![0.0f64; chain.n_states()];
    v[start] = 1.0;
    let mut scratch = vec![0.0f64; chain.n_states()];
    let mut values = Vec::new();
    let mut times = Vec::new();
    for t in 0..=cap {
        let tv = 0.5 * v.iter().zip(pi).map(|(a, b)| (a - b).abs()).sum::<f64>();
        times.push(t as f64);
        values.push(tv);
        if tv < stop_below {
            break;
        }
        evolve_step(chain, &v, &mut scratch);
        std::mem::swap(&mut v, &mut scratch);
    }
    DistanceProfile {
        kind: ProfileKind::Tv,
        times,
        values,
        start_set: chain.state_name(start).to_string(),
        chain: format!("{}-state chain, delta={}", chain.n_states(), chain.holding()),
    }
}

/// First grid time at which a profile drops to eps, or a horizon marker
/// carrying the final value so drivers can extend horizons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum MixingTime {
    Reached { time: f64 },
    HorizonExhausted { final_value: f64 },
}

impl MixingTime {
    pub fn time(&self) -> Option<f64> {
        match self {
            MixingTime::Reached { time } => Some(*time),
            MixingTime::HorizonExhausted { .. } => None,
        }
    }
}

pub fn mixing_time(profile: &DistanceProfile, eps: f64) -> MixingTime {
    for (t, v) in profile.times.iter().zip(&profile.values) {
        if *v <= eps {
            return MixingTime::Reached { time: *t };
        }
    }
    MixingTime::HorizonExhausted { final_value: *profile.values.last().unwrap_or(&f64::NAN) }
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffRow {
    pub member: String,
    pub size: f64,
    pub epsilon: f64,
    pub t_low: Option<f64>,
    pub t_high: Option<f64>,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TrendClass {
    TowardOne,
    Bounded,
    Growing,
    Flat,
}

#[derive(Debug, Clone, Serialize)]
pub struct CutoffDiagnostics {
    pub rows: Vec<CutoffRow>,
    /// Per epsilon: how t_mix(eps)/t_mix(1-eps) behaves as the family grows.
    pub size_trends: Vec<(f64, TrendClass)>,
    /// Per member: least-squares slope of the ratio against |log eps|.
    pub log_eps_slopes: Vec<(String, f64)>,
}

pub struct FamilyMember {
    pub label: String,
    pub size: f64,
    pub profile: DistanceProfile,
}

/// Ratios t_mix(eps)/t_mix(1-eps) per family member and epsilon, with
/// monotone-trend summaries. Members should be supplied in increasing size.
pub fn cutoff_diagnostics(family: &[FamilyMember], epsilons: &[f64]) -> CutoffDiagnostics {
    let mut rows = Vec::new();
    for member in family {
        for &eps in epsilons {
            let low = mixing_time(&member.profile, eps);
            let high = mixing_time(&member.profile, 1.0 - eps);
            let ratio = match (low.time(), high.time()) {
                (Some(a), Some(b)) if b > 0.0 => Some(a / b),
                (Some(a), Some(b)) if b == 0.0 && a == 0.0 => Some(1.0),
                _ => None,
            };
            rows.push(CutoffRow {
                member: member.label.clone(),
                size: member.size,
                epsilon: eps,
                t_low: low.time(),
                t_high: high.time(),
                ratio,
            });
        }
    }
    let size_trends = epsilons
        .iter()
        .map(|&eps| {
            let ratios: Vec<f64> = rows
                .iter()
                .filter(|r| r.epsilon == eps)
                .filter_map(|r| r.ratio)
                .collect();
            (eps, classify_trend(&ratios))
        })
        .collect();
    let log_eps_slopes = family
        .iter()
        .map(|member| {
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            for row in rows.iter().filter(|r| r.member == member.label) {
                if let Some(ratio) = row.ratio {
                    xs.push((1.0 / row.epsilon).ln());
                    ys.push(ratio);
                }
            }
            let slope = if xs.len() >= 2 { crate::numeric::linear_fit(&xs, &ys).1 } else { 0.0 };
            (member.label.clone(), slope)
        })
        .collect();
    CutoffDiagnostics { rows, size_trends, log_eps_slopes }
}

fn classify_trend(ratios: &[f64]) -> TrendClass {
    if ratios.len() < 2 {
        return TrendClass::Flat;
    }
    let first = ratios[0];
    let last = *ratios.last().unwrap();
    let spread = ratios.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - ratios.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    if spread < 0.05 {
        return TrendClass::Flat;
    }
    if last < first && (last - 1.0) <= 0.7 * (first - 1.0).max(0.0) {
        TrendClass::TowardOne
    } else if last > first * 1.1 {
        TrendClass::Growing
    } else {
        TrendClass::Bounded
    }
}
