//! One-dimensional Lagrange interpolation weights on arbitrary nodes.

/// Weights `w` with `p(at) = Σ w_k f(nodes[k])` for the interpolating polynomial.
pub fn value_weights(nodes: &[f64], at: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|k| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(m, _)| m != k)
                .map(|(_, &xm)| (at - xm) / (nodes[k] - xm))
                .product()
        })
        .collect()
}

/// Weights `w` with `p'(at) = Σ w_k f(nodes[k])`.
pub fn derivative_weights(nodes: &[f64], at: f64) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|k| {
            let denom: f64 = (0..n)
                .filter(|&m| m != k)
                .map(|m| nodes[k] - nodes[m])
                .product();
            // d/dx Π_{m≠k} (x - x_m) = Σ_l Π_{m≠k,l} (x - x_m)
            let numer: f64 = (0..n)
                .filter(|&l| l != k)
                .map(|l| {
                    (0..n)
                        .filter(|&m| m != k && m != l)
                        .map(|m| at - nodes[m])
                        .product::<f64>()
                })
                .sum();
            numer / denom
        })
        .collect()
}
