//! Discrete optimal transport between two probability vectors.
//!
//! The exact solver is the network simplex specialised to the bipartite
//! transportation graph: a basis is a spanning tree over the `m + n` row and
//! column nodes, potentials come from the tree, and each pivot pushes flow
//! around the cycle closed by the entering cell. The entropic solver runs
//! Sinkhorn iterations in the log domain and rounds the result onto the
//! feasible set.

use ndarray::Array2;
use thiserror::Error;

/// Tolerance on the marginal sums.
pub const MARGINAL_TOLERANCE: f64 = 1e-9;

/// Target L1 marginal error of the Sinkhorn iterations.
pub const SINKHORN_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TransportError {
    #[error("cost matrix is {rows}x{cols} but weights have lengths {m} and {n}")]
    Shape { rows: usize, cols: usize, m: usize, n: usize },
    #[error("{side} weights must be non-negative and finite")]
    BadWeight { side: &'static str },
    #[error("{side} weights sum to {sum}, expected 1")]
    NotNormalized { side: &'static str, sum: f64 },
    #[error("costs must be non-negative and finite")]
    BadCost,
    #[error("transport problem has no mass")]
    ZeroMass,
    #[error("epsilon must be positive, got {0}")]
    BadEpsilon(f64),
    #[error("Sinkhorn did not converge after {iterations} iterations (marginal error {marginal_error:.3e})")]
    NotConverged { iterations: usize, marginal_error: f64 },
    #[error("network simplex exceeded {0} pivots")]
    PivotLimit(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    source: Vec<f64>,
    target: Vec<f64>,
    cost: Array2<f64>,
}

impl TransportProblem {
    pub fn new(source: Vec<f64>, target: Vec<f64>, cost: Array2<f64>) -> Result<Self, TransportError> {
        let (rows, cols) = cost.dim();
        if rows != source.len() || cols != target.len() {
            return Err(TransportError::Shape {
                rows,
                cols,
                m: source.len(),
                n: target.len(),
            });
        }
        if source.is_empty() || target.is_empty() {
            return Err(TransportError::ZeroMass);
        }
        for (side, w) in [("source", &source), ("target", &target)] {
            if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                return Err(TransportError::BadWeight { side });
            }
            let sum: f64 = w.iter().sum();
            if sum == 0.0 {
                return Err(TransportError::ZeroMass);
            }
            if (sum - 1.0).abs() > MARGINAL_TOLERANCE {
                return Err(TransportError::NotNormalized { side, sum });
            }
        }
        if cost.iter().any(|&c| !(c >= 0.0 && c.is_finite())) {
            return Err(TransportError::BadCost);
        }
        Ok(TransportProblem { source, target, cost })
    }

    pub fn source(&self) -> &[f64] {
        &self.source
    }

    pub fn target(&self) -> &[f64] {
        &self.target
    }

    pub fn cost(&self) -> &Array2<f64> {
        &self.cost
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransportMethod {
    Exact,
    Sinkhorn { epsilon: f64, max_iter: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransportSolution {
    pub plan: Array2<f64>,
    /// `sum(plan * cost)`.
    pub cost: f64,
    /// Pivots (exact) or sweeps (Sinkhorn).
    pub iterations: usize,
    /// L1 row-marginal error before rounding (Sinkhorn); 0 for the exact solver.
    pub marginal_error: f64,
}

pub fn solve_transport(problem: &TransportProblem, method: TransportMethod) -> Result<TransportSolution, TransportError> {
    // zero-weight rows and columns carry no flow; solve the reduced problem
    let rows: Vec<usize> = (0..problem.source.len()).filter(|&i| problem.source[i] > 0.0).collect();
    let cols: Vec<usize> = (0..problem.target.len()).filter(|&j| problem.target[j] > 0.0).collect();
    let a: Vec<f64> = rows.iter().map(|&i| problem.source[i]).collect();
    let b: Vec<f64> = cols.iter().map(|&j| problem.target[j]).collect();
    let c = Array2::from_shape_fn((rows.len(), cols.len()), |(i, j)| problem.cost[[rows[i], cols[j]]]);

    let (reduced, iterations, marginal_error) = match method {
        TransportMethod::Exact => {
            let (plan, pivots) = network_simplex(&a, &b, &c)?;
            (plan, pivots, 0.0)
        }
        TransportMethod::Sinkhorn { epsilon, max_iter } => sinkhorn(&a, &b, &c, epsilon, max_iter)?,
    };

    let mut plan = Array2::zeros(problem.cost.dim());
    for (ri, &i) in rows.iter().enumerate() {
        for (ci, &j) in cols.iter().enumerate() {
            plan[[i, j]] = reduced[[ri, ci]];
        }
    }
    let cost = (&plan * &problem.cost).sum();
    Ok(TransportSolution {
        plan,
        cost,
        iterations,
        marginal_error,
    })
}

/// Transportation simplex. Returns the optimal plan and the pivot count.
fn network_simplex(a: &[f64], b: &[f64], c: &Array2<f64>) -> Result<(Array2<f64>, usize), TransportError> {
    let (m, n) = (a.len(), b.len());
    let mut x = Array2::<f64>::zeros((m, n));
    let mut basic = Array2::<bool>::from_elem((m, n), false);
    let mut basis: Vec<(usize, usize)> = Vec::with_capacity(m + n - 1);

    // north-west corner start: m + n - 1 basic cells forming a spanning tree
    let mut supply = a.to_vec();
    let mut demand = b.to_vec();
    let (mut i, mut j) = (0, 0);
    loop {
        let flow = if i == m - 1 && j == n - 1 {
            supply[i]
        } else {
            supply[i].min(demand[j])
        };
        x[[i, j]] = flow;
        basic[[i, j]] = true;
        basis.push((i, j));
        supply[i] -= flow;
        demand[j] -= flow;
        if i == m - 1 && j == n - 1 {
            break;
        } else if i == m - 1 {
            j += 1;
        } else if j == n - 1 || supply[i] <= 0.0 {
            i += 1;
        } else {
            j += 1;
        }
    }
    debug_assert_eq!(basis.len(), m + n - 1);

    let scale = c.iter().fold(1.0f64, |acc, &v| acc.max(v));
    let tol = 1e-12 * scale;
    let max_pivots = 50 * (m + n) * (m + n) + 1000;
    let mut degenerate_streak = 0usize;
    let mut u = vec![0.0; m];
    let mut v = vec![0.0; n];

    for pivot in 0..max_pivots {
        let tree = Tree::new(m, n, &basis);
        tree.potentials(c, &basis, &mut u, &mut v);

        let bland = degenerate_streak > m + n;
        let mut entering: Option<(usize, usize)> = None;
        let mut best = -tol;
        'scan: for i in 0..m {
            for j in 0..n {
                if basic[[i, j]] {
                    continue;
                }
                let reduced = c[[i, j]] - u[i] - v[j];
                if reduced < best {
                    entering = Some((i, j));
                    if bland {
                        break 'scan;
                    }
                    best = reduced;
                }
            }
        }
        let Some((ei, ej)) = entering else {
            return Ok((x, pivot));
        };

        // cycle: entering cell, then tree path from column ej back to row ei
        let path = tree.path(m + ej, ei, &basis);
        let mut theta = f64::INFINITY;
        let mut leave_pos = usize::MAX;
        for (k, &bi) in path.iter().enumerate().filter(|(k, _)| k % 2 == 0) {
            let (pi, pj) = basis[bi];
            let flow = x[[pi, pj]];
            let better = flow < theta
                || (flow == theta && bland && basis[bi] < basis[path[leave_pos]]);
            if better {
                theta = flow;
                leave_pos = k;
            }
        }
        let leaving = path[leave_pos];
        for (k, &bi) in path.iter().enumerate() {
            let (pi, pj) = basis[bi];
            if k % 2 == 0 {
                x[[pi, pj]] -= theta;
            } else {
                x[[pi, pj]] += theta;
            }
        }
        let (li, lj) = basis[leaving];
        x[[li, lj]] = 0.0;
        basic[[li, lj]] = false;
        x[[ei, ej]] = theta;
        basic[[ei, ej]] = true;
        basis[leaving] = (ei, ej);

        if theta <= 0.0 {
            degenerate_streak += 1;
        } else {
            degenerate_streak = 0;
        }
    }
    Err(TransportError::PivotLimit(max_pivots))
}

/// Spanning tree over rows `0..m` and columns `m..m+n`; edges are basis cells.
struct Tree {
    m: usize,
    adj: Vec<Vec<(usize, usize)>>,
}

impl Tree {
    fn new(m: usize, n: usize, basis: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); m + n];
        for (k, &(i, j)) in basis.iter().enumerate() {
            adj[i].push((m + j, k));
            adj[m + j].push((i, k));
        }
        Tree { m, adj }
    }

    fn potentials(&self, c: &Array2<f64>, basis: &[(usize, usize)], u: &mut [f64], v: &mut [f64]) {
        let m = self.m;
        let mut seen = vec![false; self.adj.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        u[0] = 0.0;
        while let Some(node) = stack.pop() {
            for &(next, k) in &self.adj[node] {
                if seen[next] {
                    continue;
                }
                seen[next] = true;
                let (i, j) = basis[k];
                if next >= m {
                    v[j] = c[[i, j]] - u[i];
                } else {
                    u[i] = c[[i, j]] - v[j];
                }
                stack.push(next);
            }
        }
    }

    /// Basis indices along the tree path from `from` to `to`, in order.
    fn path(&self, from: usize, to: usize, _basis: &[(usize, usize)]) -> Vec<usize> {
        let mut parent: Vec<Option<(usize, usize)>> = vec![None; self.adj.len()];
        let mut seen = vec![false; self.adj.len()];
        let mut queue = std::collections::VecDeque::from([to]);
        seen[to] = true;
        while let Some(node) = queue.pop_front() {
            if node == from {
                break;
            }
            for &(next, k) in &self.adj[node] {
                if !seen[next] {
                    seen[next] = true;
                    parent[next] = Some((node, k));
                    queue.push_back(next);
                }
            }
        }
        let mut path = Vec::new();
        let mut node = from;
        while node != to {
            let (prev, k) = parent[node].expect("basis is a spanning tree");
            path.push(k);
            node = prev;
        }
        path
    }
}

fn logsumexp(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = values.clone().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + values.map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Log-domain Sinkhorn followed by rounding onto the transport polytope.
fn sinkhorn(
    a: &[f64],
    b: &[f64],
    c: &Array2<f64>,
    epsilon: f64,
    max_iter: usize,
) -> Result<(Array2<f64>, usize, f64), TransportError> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(TransportError::BadEpsilon(epsilon));
    }
    let (m, n) = (a.len(), b.len());
    let log_a: Vec<f64> = a.iter().map(|x| x.ln()).collect();
    let log_b: Vec<f64> = b.iter().map(|x| x.ln()).collect();
    let mut f = vec![0.0; m];
    let mut g = vec![0.0; n];
    let mut error = f64::INFINITY;
    let mut iterations = 0;

    while iterations < max_iter {
        iterations += 1;
        for i in 0..m {
            f[i] = epsilon * log_a[i] - epsilon * logsumexp((0..n).map(|j| (g[j] - c[[i, j]]) / epsilon));
        }
        for j in 0..n {
            g[j] = epsilon * log_b[j] - epsilon * logsumexp((0..m).map(|i| (f[i] - c[[i, j]]) / epsilon));
        }
        // columns match exactly after the g update; measure the rows
        error = (0..m)
            .map(|i| {
                let row: f64 = (0..n).map(|j| ((f[i] + g[j] - c[[i, j]]) / epsilon).exp()).sum();
                (row - a[i]).abs()
            })
            .sum();
        if error <= SINKHORN_TOLERANCE {
            break;
        }
    }
    if error > SINKHORN_TOLERANCE {
        return Err(TransportError::NotConverged {
            iterations,
            marginal_error: error,
        });
    }

    let mut plan = Array2::from_shape_fn((m, n), |(i, j)| ((f[i] + g[j] - c[[i, j]]) / epsilon).exp());
    for i in 0..m {
        let r: f64 = plan.row(i).sum();
        if r > a[i] {
            plan.row_mut(i).mapv_inplace(|p| p * a[i] / r);
        }
    }
    for j in 0..n {
        let s: f64 = plan.column(j).sum();
        if s > b[j] {
            plan.column_mut(j).mapv_inplace(|p| p * b[j] / s);
        }
    }
    let err_r: Vec<f64> = (0..m).map(|i| a[i] - plan.row(i).sum()).collect();
    let err_c: Vec<f64> = (0..n).map(|j| b[j] - plan.column(j).sum()).collect();
    let total: f64 = err_r.iter().sum();
    if total > 0.0 {
        for i in 0..m {
            for j in 0..n {
                plan[[i, j]] += err_r[i] * err_c[j] / total;
            }
        }
    }
    Ok((plan, iterations, error))
}
