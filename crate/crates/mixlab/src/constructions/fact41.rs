//! Exact left-bias of the perturbed binary tree with absorbing leaves,
//! computed by the network reduction from the harmonic-measure argument:
//! the effective conductance from a height-h vertex to its leaf boundary
//! satisfies a two-branch series/parallel recursion.

/// The limiting bias sqrt(1+eps) / (1 + sqrt(1+eps)).
pub fn fact41_closed_form(eps: f64) -> f64 {
    let s = (1.0 + eps).sqrt();
    s / (1.0 + s)
}

/// bias[h-1] = P[absorbed in the left subtree] from a vertex at height h
/// (h = depth at the root) in the binary tree whose left-child edges carry
/// weight 1 + eps, with absorbing leaves. Exact finite-tree values.
pub fn fact41_bias_levels(depth: usize, eps: f64) -> Vec<f64> {
    assert!(depth >= 1);
    let wl = 1.0 + eps;
    let mut out = Vec::with_capacity(depth);
    // w = effective conductance from a height-h vertex down to the leaves.
    let mut w = f64::INFINITY;
    for _ in 1..=depth {
        let cl = if w.is_infinite() { wl } else { 1.0 / (1.0 / wl + 1.0 / w) };
        let cr = if w.is_infinite() { 1.0 } else { 1.0 / (1.0 + 1.0 / w) };
        out.push(cl / (cl + cr));
        w = cl + cr;
    }
    out
}
