//! Gauss–Legendre rules and small composite-quadrature helpers.

use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss–Legendre nodes and weights on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Golub–Welsch: nodes are the eigenvalues of the Jacobi matrix, weights
    /// are twice the squared first eigenvector components.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut jacobi = DMatrix::<f64>::zeros(n, n);
        for k in 1..n {
            let kf = k as f64;
            let beta = kf / (4.0 * kf * kf - 1.0).sqrt();
            jacobi[(k, k - 1)] = beta;
            jacobi[(k - 1, k)] = beta;
        }
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| (eig.eigenvalues[i], 2.0 * eig.eigenvectors[(0, i)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Symmetrise to remove eigensolver round-off.
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let x = 0.5 * (pairs[j].0 - pairs[i].0);
            let w = 0.5 * (pairs[i].1 + pairs[j].1);
            pairs[i] = (-x, w);
            pairs[j] = (x, w);
        }
        if n % 2 == 1 {
            pairs[n / 2].0 = 0.0;
        }
        GaussLegendre { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() }
    }

    /// Nodes and weights mapped to [a, b].
    pub fn on(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes.iter().zip(&self.weights).map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.on(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Composite rule: the given rule on each panel between consecutive edges.
pub fn composite_nodes(rule: &GaussLegendre, edges: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(rule.nodes.len() * edges.len());
    let mut ws = Vec::with_capacity(xs.capacity());
    for pair in edges.windows(2) {
        if pair[1] > pair[0] {
            for (x, w) in rule.on(pair[0], pair[1]) {
                xs.push(x);
                ws.push(w);
            }
        }
    }
    (xs, ws)
}
