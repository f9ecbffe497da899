//! Implicit tree walker: the lazy network walk on a (possibly stretched,
//! possibly edge-weight-perturbed) rooted regular tree, with the position
//! encoded as a path word plus a within-edge offset. Enables Monte Carlo at
//! depths where explicit storage is impossible; the step law matches the
//! explicit network chain exactly.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::numeric::derive_seed;

#[derive(Debug, Clone)]
pub struct TreeWalkerConfig {
    /// Children per vertex (the root has exactly `arity` children too).
    pub arity: usize,
    /// Weight of the (stretched) edge to child c.
    pub child_weights: Vec<f64>,
    /// Path length of the edge to child c; 1 means unstretched.
    pub child_stretch: Vec<usize>,
    /// Lazy holding probability.
    pub holding: f64,
}

impl TreeWalkerConfig {
    pub fn unbiased_binary() -> Self {
        TreeWalkerConfig {
            arity: 2,
            child_weights: vec![1.0, 1.0],
            child_stretch: vec![1, 1],
            holding: 0.5,
        }
    }
}

/// Position: `word` is the sequence of child indices from the root; `sub`
/// is the distance from the parent along the (stretched) edge to `word`'s
/// vertex. At the root the word is empty and sub = 0; otherwise
/// sub in 1..=stretch(last digit), with sub == stretch <=> at a tree vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WalkerPosition {
    pub word: Vec<u8>,
    pub sub: usize,
}

impl WalkerPosition {
    pub fn root() -> Self {
        WalkerPosition { word: Vec::new(), sub: 0 }
    }

    pub fn at_tree_vertex(&self, cfg: &TreeWalkerConfig) -> bool {
        match self.word.last() {
            None => true,
            Some(&c) => self.sub == cfg.child_stretch[c as usize],
        }
    }

    pub fn level(&self) -> usize {
        self.word.len()
    }
}

#[derive(Debug, Clone)]
pub struct TreeWalker {
    pub cfg: TreeWalkerConfig,
    pub pos: WalkerPosition,
    rng: ChaCha8Rng,
}

/// When to stop a walk; evaluated after each step, at tree vertices only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopRule {
    /// Stop on first arrival at the given tree level.
    FirstHitLevel(usize),
    /// Stop at block-boundary vertices: at levels k*m with k >= 2, stop when
    /// the number of left steps (digit 0) among the last m digits is <=
    /// theta, or unconditionally at block `final_block`.
    BlockBoundary { m: usize, theta: i64, final_block: usize },
}

impl StopRule {
    fn hit(&self, pos: &WalkerPosition) -> bool {
        match *self {
            StopRule::FirstHitLevel(n) => pos.level() == n,
            StopRule::BlockBoundary { m, theta, final_block } => {
                let level = pos.level();
                if level == 0 || level % m != 0 {
                    return false;
                }
                let k = level / m;
                if k < 2 {
                    return false;
                }
                if k >= final_block {
                    return true;
                }
                let zeros =
                    pos.word[level - m..].iter().filter(|&&d| d == 0).count() as i64;
                zeros <= theta
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct WalkOutcome {
    pub steps: u64,
    pub stopped: bool,
    pub word: Vec<u8>,
}

impl TreeWalker {
    pub fn new(cfg: TreeWalkerConfig, seed: u64) -> Self {
        assert_eq!(cfg.arity, cfg.child_weights.len());
        assert_eq!(cfg.arity, cfg.child_stretch.len());
        TreeWalker { cfg, pos: WalkerPosition::root(), rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    /// Runs until the stop rule fires or `cap` steps elapse. Every lazy step
    /// (including holds) counts toward `steps`.
    pub fn run(&mut self, stop: StopRule, cap: u64) -> WalkOutcome {
        self.pos = WalkerPosition::root();
        let mut steps = 0u64;
        if self.pos.at_tree_vertex(&self.cfg) && stop.hit(&self.pos) {
            return WalkOutcome { steps, stopped: true, word: self.pos.word.clone() };
        }
        while steps < cap {
            steps += 1;
            self.lazy_step();
            if self.pos.at_tree_vertex(&self.cfg) && stop.hit(&self.pos) {
                return WalkOutcome { steps, stopped: true, word: self.pos.word.clone() };
            }
        }
        WalkOutcome { steps, stopped: false, word: self.pos.word.clone() }
    }

    /// One lazy step (hold with probability `holding`, else move); callers
    /// that need per-step visibility drive this directly and read `pos`.
    pub fn lazy_step(&mut self) {
        if self.rng.random::<f64>() < self.cfg.holding {
            return;
        }
        self.move_once();
    }

    fn move_once(&mut self) {
        let cfg_arity = self.cfg.arity;
        let at_vertex = self.pos.at_tree_vertex(&self.cfg);
        if at_vertex {
            // Neighbors: the parent edge (absent at the root) plus one edge
            // per child path; pick proportionally to edge weights.
            let up_weight = match self.pos.word.last() {
                Some(&c) => self.cfg.child_weights[c as usize],
                None => 0.0,
            };
            let total: f64 = up_weight + self.cfg.child_weights.iter().sum::<f64>();
            let mut pick = self.rng.random::<f64>() * total;
            if pick < up_weight {
                self.step_up();
                return;
            }
            pick -= up_weight;
            for c in 0..cfg_arity {
                let w = self.cfg.child_weights[c];
                if pick < w {
                    self.pos.word.push(c as u8);
                    self.pos.sub = 1;
                    return;
                }
                pick -= w;
            }
            // Rounding fallthrough: take the last child.
            self.pos.word.push((cfg_arity - 1) as u8);
            self.pos.sub = 1;
        } else {
            // Interior of a stretched edge: both incident edges carry the
            // same weight, so up/down are equally likely.
            if self.rng.random::<f64>() < 0.5 {
                self.step_up();
            } else {
                self.pos.sub += 1;
            }
        }
    }

    fn step_up(&mut self) {
        if self.pos.sub > 1 {
            self.pos.sub -= 1;
            return;
        }
        self.pos.word.pop();
        self.pos.sub = match self.pos.word.last() {
            Some(&c) => self.cfg.child_stretch[c as usize],
            None => 0,
        };
    }
}

/// (# digit-0 steps) - (# other steps) of a path word; for binary trees this
/// is the left-minus-right count g(u).
pub fn word_g_value(word: &[u8]) -> i64 {
    let zeros = word.iter().filter(|&&d| d == 0).count() as i64;
    2 * zeros - word.len() as i64
}

#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub samples: usize,
    pub seed: u64,
    pub step_cap: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct McReport {
    /// Per-sample stopping times, in sample order (capped runs excluded from
    /// the statistics but present here with `stopped[i] = false`).
    pub times: Vec<u64>,
    pub stopped: Vec<bool>,
    pub words: Vec<Vec<u8>>,
    pub mean: f64,
    /// 95% normal-approximation half-width on the mean.
    pub ci95: f64,
    pub cap_hits: usize,
    /// Set when more than 1% of samples hit the step cap.
    pub flagged: bool,
}

/// Seeded, reproducible empirical law of a stopping time. Trajectories get
/// per-sample derived seeds and merge by index, so the output is independent
/// of scheduling.
pub fn mc_hitting(cfg: &TreeWalkerConfig, stop: StopRule, mc: &McConfig) -> McReport {
    let outcomes: Vec<WalkOutcome> = (0..mc.samples)
        .into_par_iter()
        .map(|i| {
            let mut walker = TreeWalker::new(cfg.clone(), derive_seed(mc.seed, i as u64));
            walker.run(stop, mc.step_cap)
        })
        .collect();
    let times: Vec<u64> = outcomes.iter().map(|o| o.steps).collect();
    let stopped: Vec<bool> = outcomes.iter().map(|o| o.stopped).collect();
    let words: Vec<Vec<u8>> = outcomes.into_iter().map(|o| o.word).collect();
    let good: Vec<f64> =
        times.iter().zip(&stopped).filter(|&(_, &s)| s).map(|(&t, _)| t as f64).collect();
    let cap_hits = mc.samples - good.len();
    let mean = if good.is_empty() { f64::NAN } else { good.iter().sum::<f64>() / good.len() as f64 };
    let var = if good.len() > 1 {
        good.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (good.len() - 1) as f64
    } else {
        0.0
    };
    let ci95 = 1.96 * (var / good.len().max(1) as f64).sqrt();
    McReport {
        times,
        stopped,
        words,
        mean,
        ci95,
        cap_hits,
        flagged: cap_hits as f64 > 0.01 * mc.samples as f64,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_seeds_identical_outputs() {
        let cfg = TreeWalkerConfig::unbiased_binary();
        let mc = McConfig { samples: 200, seed: 42, step_cap: 100_000 };
        let a = mc_hitting(&cfg, StopRule::FirstHitLevel(6), &mc);
        let b = mc_hitting(&cfg, StopRule::FirstHitLevel(6), &mc);
        assert_eq!(a.times, b.times);
        assert_eq!(a.words, b.words);
        assert_eq!(a.cap_hits, 0);
    }

    #[test]
    fn two_state_gadget_matches_geometric_law() {
        // Arity-1 "tree" with a single unit edge is the lazy two-state
        // gadget: first hit of level 1 is geometric with mean 1/(1/4)...
        // here P[move down] = 1/2 * 1 = 1/2, so the mean stopping time is 2.
        let cfg = TreeWalkerConfig {
            arity: 1,
            child_weights: vec![1.0],
            child_stretch: vec![1],
            holding: 0.5,
        };
        let mc = McConfig { samples: 30_000, seed: 7, step_cap: 10_000 };
        let report = mc_hitting(&cfg, StopRule::FirstHitLevel(1), &mc);
        assert!((report.mean - 2.0).abs() < 3.0 * report.ci95 / 1.96 * 2.0 + 0.05);
        assert!(!report.flagged);
    }

    #[test]
    fn walker_respects_stretched_geometry() {
        // One stretched child edge of length 3: hitting level 1 requires
        // crossing 3 sub-edges; stopping word is always [0].
        let cfg = TreeWalkerConfig {
            arity: 1,
            child_weights: vec![1.0],
            child_stretch: vec![3],
            holding: 0.5,
        };
        let mc = McConfig { samples: 500, seed: 3, step_cap: 1_000_000 };
        let report = mc_hitting(&cfg, StopRule::FirstHitLevel(1), &mc);
        assert!(report.stopped.iter().all(|&s| s));
        assert!(report.words.iter().all(|w| w == &vec![0u8]));
        // Crossing a length-3 path takes at least 3 moves (6 lazy steps on
        // average scale); the mean must exceed the unstretched value 2.
        assert!(report.mean > 6.0);
    }

    #[test]
    fn block_boundary_rule_fires_on_low_left_count() {
        let rule = StopRule::BlockBoundary { m: 3, theta: 0, final_block: 10 };
        // Level 6, k = 2, last 3 digits (0,1,1) have one zero > theta: no stop.
        let pos = WalkerPosition { word: vec![1, 1, 1, 0, 1, 1], sub: 1 };
        assert!(!rule.hit(&pos));
        // Level 9, k = 3, last 3 digits (2,3,4) have zero zeros: stop.
        let pos2 = WalkerPosition { word: vec![1, 1, 1, 0, 1, 1, 2, 3, 4], sub: 1 };
        assert!(rule.hit(&pos2));
        // Level 5 is not a block boundary.
        let pos3 = WalkerPosition { word: vec![1, 1, 1, 1, 1], sub: 1 };
        assert!(!rule.hit(&pos3));
    }

    #[test]
    fn cap_hits_flag_the_report() {
        let cfg = TreeWalkerConfig::unbiased_binary();
        let mc = McConfig { samples: 50, seed: 1, step_cap: 2 };
        let report = mc_hitting(&cfg, StopRule::FirstHitLevel(30), &mc);
        assert_eq!(report.cap_hits, 50);
        assert!(report.flagged);
    }

    #[test]
    fn g_value_counts_signed_lefts() {
        assert_eq!(word_g_value(&[0, 0, 1, 0]), 2);
        assert_eq!(word_g_value(&[]), 0);
        assert_eq!(word_g_value(&[1, 1]), -2);
    }

    /// On the unbiased tree with both child edges stretched by 2, the
    /// crossing law is unchanged: g at the first hit of level k is still the
    /// exact symmetric binomial (chi-square against the closed form).
    #[test]
    fn stretched_crossing_law_matches_binomial() {
        let cfg = TreeWalkerConfig {
            arity: 2,
            child_weights: vec![1.0, 1.0],
            child_stretch: vec![2, 2],
            holding: 0.5,
        };
        let level = 8usize;
        let mc = McConfig { samples: 20_000, seed: 31, step_cap: 2_000_000 };
        let run = mc_hitting(&cfg, StopRule::FirstHitLevel(level), &mc);
        assert_eq!(run.cap_hits, 0);
        let mut counts = std::collections::HashMap::new();
        for word in &run.words {
            *counts.entry(word_g_value(word)).or_insert(0usize) += 1;
        }
        let law = crate::hitting::srw_level_law(level);
        let mut stat = 0.0;
        for &(g, p) in &law {
            let expect = p * mc.samples as f64;
            let observed = *counts.get(&g).unwrap_or(&0) as f64;
            stat += (observed - expect) * (observed - expect) / expect;
        }
        let p_value = crate::numeric::chi_square_pvalue(stat, law.len() - 1);
        assert!(p_value > 0.001, "chi2 {stat:.2}, p {p_value:.5}");
    }
}
