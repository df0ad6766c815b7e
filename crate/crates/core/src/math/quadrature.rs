//! One-dimensional quadrature: Gauss-Hermite against the standard normal
//! weight, and adaptive Simpson on a bounded interval.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

use super::special::gaussian_pdf;

pub const DEFAULT_HERMITE_NODES: usize = 200;
pub const DEFAULT_SIMPSON_TOLERANCE: f64 = 1e-10;
pub const DEFAULT_SIMPSON_DEPTH: usize = 50;
/// Truncation interval used when adaptive Simpson integrates against the Gaussian weight.
pub const GAUSSIAN_TRUNCATION: (f64, f64) = (-12.0, 12.0);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum QuadratureRule {
    GaussHermite { nodes: usize },
    AdaptiveSimpson { tolerance: f64, max_depth: usize },
}

impl QuadratureRule {
    pub fn gauss_hermite() -> Self {
        Self::GaussHermite {
            nodes: DEFAULT_HERMITE_NODES,
        }
    }

    pub fn adaptive_simpson() -> Self {
        Self::AdaptiveSimpson {
            tolerance: DEFAULT_SIMPSON_TOLERANCE,
            max_depth: DEFAULT_SIMPSON_DEPTH,
        }
    }
}

/// What the integrand is multiplied by.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Weight {
    /// Standard normal density: the integral is `E[f(Z)]`.
    Gaussian,
    None,
}

/// Nodes and weights for `E[f(Z)]`, `Z ~ N(0, 1)`.
#[derive(Debug, Clone)]
pub struct HermiteRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Integrate `f` under `rule`.
///
/// Gauss-Hermite only supports the Gaussian weight. Adaptive Simpson with the
/// Gaussian weight integrates `f(s) phi(s)` over `bounds`, defaulting to
/// [`GAUSSIAN_TRUNCATION`]; without a weight the bounds are mandatory.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    rule: QuadratureRule,
    weight: Weight,
    bounds: Option<(f64, f64)>,
) -> Result<f64> {
    match rule {
        QuadratureRule::GaussHermite { nodes } => {
            if weight != Weight::Gaussian {
                return Err(Error::BadSpec(
                    "Gauss-Hermite quadrature requires the Gaussian weight".into(),
                ));
            }
            if nodes == 0 {
                return Err(Error::BadSpec(
                    "Gauss-Hermite needs at least one node".into(),
                ));
            }
            let rule = hermite_rule(nodes);
            Ok(rule
                .nodes
                .iter()
                .zip(rule.weights.iter())
                .map(|(&s, &w)| w * f(s))
                .sum())
        }
        QuadratureRule::AdaptiveSimpson {
            tolerance,
            max_depth,
        } => {
            if !(tolerance > 0.0) {
                return Err(Error::BadSpec(format!(
                    "tolerance must be positive, got {tolerance}"
                )));
            }
            let (a, b) = match (weight, bounds) {
                (_, Some(b)) => b,
                (Weight::Gaussian, None) => GAUSSIAN_TRUNCATION,
                (Weight::None, None) => {
                    return Err(Error::BadSpec(
                        "bounds are required when integrating without a weight".into(),
                    ))
                }
            };
            match weight {
                Weight::Gaussian => {
                    adaptive_simpson(|s| f(s) * gaussian_pdf(s), a, b, tolerance, max_depth)
                }
                Weight::None => adaptive_simpson(f, a, b, tolerance, max_depth),
            }
        }
    }
}

/// Cached Gauss-Hermite rule for the standard normal weight.
pub fn hermite_rule(n: usize) -> Arc<HermiteRule> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<HermiteRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("hermite cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Arc::new(compute_hermite_rule(n)))
        .clone()
}

/// Golub-Welsch starting points (eigenvalues of the Jacobi matrix of the
/// probabilists' Hermite recurrence), polished by Newton on the orthonormal
/// recurrence. Weights use the Christoffel form `1 / sum_k q_k(x)^2`, which
/// keeps full relative accuracy in the far tails where eigenvector
/// components do not.
fn compute_hermite_rule(n: usize) -> HermiteRule {
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for k in 1..n {
        let b = (k as f64).sqrt();
        jacobi[(k, k - 1)] = b;
        jacobi[(k - 1, k)] = b;
    }
    let mut roots: Vec<f64> = SymmetricEigen::new(jacobi)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    roots.sort_by(f64::total_cmp);
    let half = n / 2;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let j = n - 1 - i;
        let mut x = if i == j {
            0.0
        } else {
            0.5 * (roots[j] - roots[i])
        };
        for _ in 0..20 {
            let (qn, qn1, _) = orthonormal_hermite(n, x);
            let step = qn / ((n as f64).sqrt() * qn1);
            x -= step;
            if step.abs() <= 1e-16 * x.abs().max(1.0) {
                break;
            }
        }
        let (_, _, sumsq) = orthonormal_hermite(n, x);
        let w = 1.0 / sumsq;
        nodes[j] = x;
        nodes[i] = -x;
        weights[i] = w;
        weights[j] = w;
    }
    if n % 2 == 1 {
        nodes[half] = 0.0;
    }
    HermiteRule { nodes, weights }
}

/// `(q_n(x), q_{n-1}(x), sum_{k<n} q_k(x)^2)` for the Hermite polynomials
/// orthonormal under the standard normal density.
fn orthonormal_hermite(n: usize, x: f64) -> (f64, f64, f64) {
    let mut prev = 0.0;
    let mut cur = 1.0;
    let mut sumsq = 0.0;
    for k in 0..n {
        sumsq += cur * cur;
        let next = (x * cur - (k as f64).sqrt() * prev) / ((k + 1) as f64).sqrt();
        prev = cur;
        cur = next;
    }
    (cur, prev, sumsq)
}

/// Panel width below which adaptive refinement starts; coarser starts can
/// step over a narrow peak and stop early.
const SIMPSON_PANEL: f64 = 0.25;

fn adaptive_simpson(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: usize,
) -> Result<f64> {
    let panels = (((b - a) / SIMPSON_PANEL).ceil() as usize).max(1);
    let width = (b - a) / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * width;
        let hi = if k + 1 == panels { b } else { lo + width };
        let fa = f(lo);
        let fb = f(hi);
        let fm = f(0.5 * (lo + hi));
        let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
        total += simpson_step(
            &f,
            lo,
            hi,
            fa,
            fm,
            fb,
            whole,
            tol / panels as f64,
            max_depth,
        )
        .map_err(|_| Error::NonConvergence { depth: max_depth })?;
    }
    Ok(total)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if delta.abs() <= 15.0 * tol {
        return Ok(left + right + delta / 15.0);
    }
    if depth == 0 {
        return Err(Error::NonConvergence { depth: 0 });
    }
    Ok(
        simpson_step(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)?
            + simpson_step(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)?,
    )
}
