//! Gauss–Legendre quadrature with node-doubling refinement.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        for i in 0..half {
            // Tricomi's initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() <= 1e-16 * x.abs().max(1.0) {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            dp = if d.is_finite() { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    /// Shared rule for `n` nodes.
    pub fn cached(n: usize) -> Arc<GaussLegendre> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussLegendre>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("quadrature cache poisoned");
        guard.entry(n).or_insert_with(|| Arc::new(GaussLegendre::new(n))).clone()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `(node, weight)` pairs mapped onto `[a, b]`.
    pub fn points(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    pub fn integrate(&self, a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        self.points(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let n = n as f64;
    (p1, n * (x * p1 - p0) / (x * x - 1.0))
}

/// Refinement policy: start at `initial_nodes` and double until two
/// successive results differ by at most `rel_tol · |value| + abs_tol`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub initial_nodes: usize,
    pub max_nodes: usize,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            initial_nodes: 16,
            max_nodes: 8192,
            rel_tol: 1e-8,
            abs_tol: 0.0,
        }
    }
}

impl QuadratureSpec {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        QuadratureSpec { rel_tol, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Refined<T> {
    pub value: T,
    /// Node count of the accepted rule.
    pub nodes: usize,
    /// Difference to the previous (half as many nodes) result.
    pub delta: f64,
}

/// Runs `eval(n)` for doubling `n` until the change measured by
/// `compare(new, old) -> (delta, scale)` is within tolerance.
pub fn refine<T>(
    spec: &QuadratureSpec,
    what: &str,
    mut eval: impl FnMut(&GaussLegendre) -> T,
    compare: impl Fn(&T, &T) -> (f64, f64),
) -> Result<Refined<T>> {
    let mut n = spec.initial_nodes.max(1);
    let mut prev = eval(&GaussLegendre::cached(n));
    let mut last_delta = f64::NAN;
    while n * 2 <= spec.max_nodes {
        n *= 2;
        let cur = eval(&GaussLegendre::cached(n));
        let (delta, scale) = compare(&cur, &prev);
        if delta <= spec.rel_tol * scale + spec.abs_tol {
            return Ok(Refined { value: cur, nodes: n, delta });
        }
        last_delta = delta;
        prev = cur;
    }
    Err(Error::convergence(
        what,
        format!(
            "node doubling reached {n} nodes with last change {last_delta:e} (rel_tol {:e}, abs_tol {:e})",
            spec.rel_tol, spec.abs_tol
        ),
    ))
}

/// Scalar integral of `f` over `[a, b]` refined by node doubling.
pub fn integrate(spec: &QuadratureSpec, what: &str, a: f64, b: f64, f: impl Fn(f64) -> f64) -> Result<Refined<f64>> {
    refine(spec, what, |rule| rule.integrate(a, b, &f), |x, y| ((x - y).abs(), x.abs()))
}
