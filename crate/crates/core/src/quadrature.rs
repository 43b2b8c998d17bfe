//! Gauss–Legendre rules on `[0, 1]` and their tensor products on cells.

use std::sync::{Mutex, OnceLock};

/// A one-dimensional rule on `[0, 1]`; weights sum to one.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// `n`-point rule, exact for polynomials of degree `2n - 1`.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "quadrature needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            // Chebyshev-like initial guess, then Newton on P_n
            let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, t);
                dp = d;
                let dt = p / d;
                t -= dt;
                if dt.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, t);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - t * t) * dp * dp);
            // map [-1,1] -> [0,1]
            nodes[i] = 0.5 * (1.0 - t);
            nodes[n - 1 - i] = 0.5 * (1.0 + t);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Self { nodes, weights }
    }

    /// Shared cached rule.
    pub fn cached(n: usize) -> std::sync::Arc<GaussRule> {
        static CACHE: OnceLock<Mutex<Vec<Option<std::sync::Arc<GaussRule>>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(Vec::new()));
        let mut guard = cache.lock().unwrap();
        if guard.len() <= n {
            guard.resize(n + 1, None);
        }
        guard[n]
            .get_or_insert_with(|| std::sync::Arc::new(GaussRule::new(n)))
            .clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// `(P_n(t), P_n'(t))` by the three-term recurrence.
fn legendre_with_derivative(n: usize, t: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = t;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * t * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (t * p1 - p0) / (t * t - 1.0);
    (p1, d)
}

/// Calls `visit(x, w)` for every node of the tensor rule on `x0 + delta * [0,1]^d`
/// with `orders[j]` points along axis `j`. Weights include the cell volume.
pub fn for_each_tensor_node(
    x0: &[f64],
    delta: &[f64],
    orders: &[usize],
    mut visit: impl FnMut(&[f64], f64),
) {
    let d = x0.len();
    let rules: Vec<_> = orders.iter().map(|&n| GaussRule::cached(n)).collect();
    let vol: f64 = delta.iter().product();
    let mut idx = vec![0usize; d];
    let mut x = vec![0.0; d];
    loop {
        let mut w = vol;
        for j in 0..d {
            x[j] = x0[j] + delta[j] * rules[j].nodes[idx[j]];
            w *= rules[j].weights[idx[j]];
        }
        visit(&x, w);
        let mut j = d;
        loop {
            if j == 0 {
                return;
            }
            j -= 1;
            idx[j] += 1;
            if idx[j] < rules[j].len() {
                break;
            }
            idx[j] = 0;
        }
    }
}
