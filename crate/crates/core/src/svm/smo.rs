//! Sequential minimal optimization for the soft-margin SVM dual
//!
//! ```text
//! min_a  ½ aᵀQa − eᵀa   s.t.  yᵀa = 0,  0 ≤ a_i ≤ C,   Q_ij = y_i y_j K(x_i, x_j)
//! ```
//!
//! Working pairs are chosen with second-order information (maximal violating
//! `i`, then the `j` giving the largest guaranteed objective decrease) and the
//! gradient is kept up to date incrementally. No shrinking.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::Kernel;

const TAU: f64 = 1e-12;

/// Lazily computed kernel rows with FIFO eviction.
struct KernelRows<'a, X: AsRef<[f64]>> {
    xs: &'a [X],
    kernel: Kernel,
    rows: Vec<Option<Vec<f64>>>,
    resident: VecDeque<usize>,
    capacity: usize,
}

impl<'a, X: AsRef<[f64]>> KernelRows<'a, X> {
    fn new(xs: &'a [X], kernel: Kernel, budget_bytes: usize) -> Self {
        let n = xs.len();
        let per_row = (n * std::mem::size_of::<f64>()).max(1);
        let capacity = (budget_bytes / per_row).clamp(2, n.max(2));
        KernelRows {
            xs,
            kernel,
            rows: vec![None; n],
            resident: VecDeque::new(),
            capacity,
        }
    }

    fn ensure(&mut self, i: usize, keep: usize) {
        if self.rows[i].is_some() {
            return;
        }
        while self.resident.len() >= self.capacity {
            let pos = self.resident.iter().position(|&r| r != keep).expect("capacity >= 2");
            let victim = self.resident.remove(pos).expect("position is valid");
            self.rows[victim] = None;
        }
        let xi = self.xs[i].as_ref();
        self.rows[i] = Some(
            self.xs
                .iter()
                .map(|x| self.kernel.eval_unchecked(xi, x.as_ref()))
                .collect(),
        );
        self.resident.push_back(i);
    }

    fn row(&self, i: usize) -> &[f64] {
        self.rows[i].as_deref().expect("row made resident before use")
    }
}

/// Solver output, exposed for diagnostics and oracle comparisons.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    /// `eᵀa − ½ aᵀQa` (the maximized form).
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest per-sample KKT violation measured on the functional margin.
    pub max_kkt_violation: f64,
}

pub(crate) struct SmoParams {
    pub c: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    pub seed: u64,
    pub cache_bytes: usize,
}

pub(crate) fn solve<X: AsRef<[f64]>>(xs: &[X], y: &[f64], kernel: Kernel, params: &SmoParams) -> DualSolution {
    let n = xs.len();
    let c = params.c;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(params.seed));

    let diag: Vec<f64> = xs
        .iter()
        .map(|x| kernel.eval_unchecked(x.as_ref(), x.as_ref()))
        .collect();
    let mut rows = KernelRows::new(xs, kernel, params.cache_bytes);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yt: f64| if yt > 0.0 { a < c } else { a > 0.0 };
    let in_low = |a: f64, yt: f64| if yt > 0.0 { a > 0.0 } else { a < c };

    let mut iterations = 0;
    let mut converged = false;
    while iterations < params.max_iterations {
        // i: maximal violator over I_up.
        let mut g_max = f64::NEG_INFINITY;
        let mut i_sel = None;
        for &t in &order {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] > g_max {
                g_max = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            break;
        };
        rows.ensure(i, i);

        // j: second-order choice over I_low.
        let mut g_max2 = f64::NEG_INFINITY;
        let mut best = f64::INFINITY;
        let mut j_sel = None;
        {
            let k_i = rows.row(i);
            for &t in &order {
                if !in_low(alpha[t], y[t]) {
                    continue;
                }
                let v = y[t] * grad[t];
                if v > g_max2 {
                    g_max2 = v;
                }
                let grad_diff = g_max + v;
                if grad_diff > 0.0 {
                    let quad = diag[i] + diag[t] - 2.0 * k_i[t];
                    let obj = -(grad_diff * grad_diff) / if quad > 0.0 { quad } else { TAU };
                    if obj < best {
                        best = obj;
                        j_sel = Some(t);
                    }
                }
            }
        }
        if g_max + g_max2 < params.tolerance {
            converged = true;
            break;
        }
        let Some(j) = j_sel else {
            converged = true;
            break;
        };
        rows.ensure(j, i);
        iterations += 1;

        let k_ij = rows.row(i)[j];
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = {
            let q = diag[i] + diag[j] - 2.0 * k_ij;
            if q > 0.0 {
                q
            } else {
                TAU
            }
        };
        let (mut ai, mut aj) = (old_i, old_j);
        if y[i] != y[j] {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = ai - aj;
            ai += delta;
            aj += delta;
            if diff > 0.0 {
                if aj < 0.0 {
                    aj = 0.0;
                    ai = diff;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = -diff;
            }
            if diff > 0.0 {
                if ai > c {
                    ai = c;
                    aj = c - diff;
                }
            } else if aj > c {
                aj = c;
                ai = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = ai + aj;
            ai -= delta;
            aj += delta;
            if sum > c {
                if ai > c {
                    ai = c;
                    aj = sum - c;
                }
            } else if aj < 0.0 {
                aj = 0.0;
                ai = sum;
            }
            if sum > c {
                if aj > c {
                    aj = c;
                    ai = sum - c;
                }
            } else if ai < 0.0 {
                ai = 0.0;
                aj = sum;
            }
        }
        alpha[i] = ai.clamp(0.0, c);
        alpha[j] = aj.clamp(0.0, c);

        let (d_i, d_j) = (alpha[i] - old_i, alpha[j] - old_j);
        let (k_i, k_j) = (rows.row(i), rows.row(j));
        for t in 0..n {
            grad[t] += y[t] * (y[i] * k_i[t] * d_i + y[j] * k_j[t] * d_j);
        }
    }
    if !converged {
        log::warn!("SMO stopped after {iterations} iterations without reaching tolerance");
    }

    let bias = compute_bias(&alpha, y, &grad, c);
    let objective = alpha.iter().zip(&grad).map(|(a, g)| -0.5 * a * (g - 1.0)).sum();
    let max_kkt_violation = (0..n)
        .map(|t| {
            let margin_minus_one = grad[t] + y[t] * bias;
            if alpha[t] <= 0.0 {
                (-margin_minus_one).max(0.0)
            } else if alpha[t] >= c {
                margin_minus_one.max(0.0)
            } else {
                margin_minus_one.abs()
            }
        })
        .fold(0.0, f64::max);

    DualSolution {
        alpha,
        bias,
        objective,
        iterations,
        converged,
        max_kkt_violation,
    }
}

/// Offset from the free variables' averaged optimality condition, or the
/// midpoint of the feasible interval when every variable sits at a bound.
fn compute_bias(alpha: &[f64], y: &[f64], grad: &[f64], c: f64) -> f64 {
    let (mut upper, mut lower) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut free_count) = (0.0, 0usize);
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free_count += 1;
            free_sum += yg;
        }
    }
    let rho = if free_count > 0 {
        free_sum / free_count as f64
    } else {
        (upper + lower) / 2.0
    };
    -rho
}
