//! The continuum residual `F`, the network residual `G_n`, the multiplier `Q`
//! and dense linearizations.
//!
//! A continuum state lives on a partition of `[0,1]` with left endpoints
//! `x_i` and widths `w_i`. Integrals `∫ W(x_i, y) g(y) dy` against a
//! piecewise-constant `g` become `sum_j w_j K_ij g_j` with `K_ij = W(x_i, x_j)`,
//! so on a uniform grid the continuum operators coincide with their network
//! counterparts on the weighted graph `A = K`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::GraphonKernel;
use crate::models::Model;
use crate::quadrature::integrate_piecewise;
use crate::sampling::SampledGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    ContinuumFrozen,
    DiscreteJacobian,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedOperator {
    pub matrix: DMatrix<f64>,
    pub q_values: Vec<f64>,
    pub kind: OperatorKind,
}

impl LinearizedOperator {
    pub fn n(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn min_q(&self) -> f64 {
        self.q_values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Widths of the cells whose left endpoints are `points`; exactly `1/n` on
/// the uniform grid.
pub fn cell_widths(points: &[f64]) -> Vec<f64> {
    let n = points.len();
    if points.iter().enumerate().all(|(i, &x)| x == i as f64 / n as f64) {
        return vec![1.0 / n as f64; n];
    }
    (0..n)
        .map(|i| points.get(i + 1).copied().unwrap_or(1.0) - points[i])
        .collect()
}

/// `K_ij`: the kernel averaged over an `r x r` lattice of left-aligned
/// sub-points of cell `(i, j)`; `r = 1` is plain point evaluation at `(x_i, x_j)`.
pub fn kernel_matrix(kernel: &GraphonKernel, points: &[f64], refinement: usize) -> DMatrix<f64> {
    let n = points.len();
    let r = refinement.max(1);
    let w = cell_widths(points);
    let sub: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..r).map(|a| points[i] + w[i] * a as f64 / r as f64).collect())
        .collect();
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let sub = &sub;
            (0..n).map(move |j| {
                if r == 1 {
                    return kernel.value(sub[i][0], sub[j][0]);
                }
                let mut acc = 0.0;
                for &x in &sub[i] {
                    for &y in &sub[j] {
                        acc += kernel.value(x, y);
                    }
                }
                acc / (r * r) as f64
            })
        })
        .collect();
    DMatrix::from_row_slice(n, n, &rows)
}

/// `f(u_i) + sum_j w_j K_ij D(u_i, u_j)`.
fn weighted_residual<M: Model + ?Sized>(model: &M, k: &DMatrix<f64>, w: &[f64], u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let row = |i: usize| {
        let ui = u[i];
        let mut s = 0.0;
        for j in 0..n {
            let a = k[(i, j)];
            if a != 0.0 {
                s += w[j] * a * model.d(ui, u[j]);
            }
        }
        model.f(ui) + s
    };
    if n >= 128 {
        (0..n).into_par_iter().map(row).collect()
    } else {
        (0..n).map(row).collect()
    }
}

fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        Err(Error::Shape { expected, got })
    } else {
        Ok(())
    }
}

/// `G_n(u)_i = f(u_i) + (1/n) sum_j A_ij D(u_i, u_j)`.
pub fn eval_gn<M: Model + ?Sized>(model: &M, graph: &SampledGraph, u: &[f64]) -> Result<Vec<f64>> {
    let n = graph.n();
    check_dim(n, u.len())?;
    let w = vec![1.0 / n as f64; n];
    Ok(weighted_residual(model, &graph.adjacency, &w, u))
}

/// `F(u)` for a piecewise-constant `u`, with the kernel sampled at the grid.
pub fn eval_f<M: Model + ?Sized>(model: &M, kernel: &GraphonKernel, u: &GridFunction) -> GridFunction {
    let k = kernel_matrix(kernel, &u.points, 1);
    let w = cell_widths(&u.points);
    GridFunction { points: u.points.clone(), values: weighted_residual(model, &k, &w, &u.values) }
}

/// `F(u)(x)` at each of `points` for a continuum state given in closed form,
/// by Gauss-Legendre quadrature split at the kernel's jumps and at `u_breaks`.
pub fn eval_f_continuum<M: Model + ?Sized>(
    model: &M,
    kernel: &GraphonKernel,
    u: impl Fn(f64) -> f64 + Sync,
    u_breaks: &[f64],
    points: &[f64],
) -> Vec<f64> {
    points
        .par_iter()
        .map(|&x| {
            let ux = u(x);
            let mut breaks = kernel.y_breakpoints(x);
            breaks.extend_from_slice(u_breaks);
            let integral = integrate_piecewise(|y| kernel.value(x, y) * model.d(ux, u(y)), 0.0, 1.0, &breaks, 8, 20);
            model.f(ux) + integral
        })
        .collect()
}

fn q_weighted<M: Model + ?Sized>(model: &M, k: &DMatrix<f64>, w: &[f64], u: &[f64]) -> Vec<f64> {
    let n = u.len();
    (0..n)
        .map(|i| {
            let s: f64 = (0..n).map(|j| w[j] * k[(i, j)] * model.d1(u[i], u[j])).sum();
            -model.f_prime(u[i]) - s
        })
        .collect()
}

/// `Q(x_i) = -f'(u*(x_i)) - ∫ W(x_i, y) D_1(u*(x_i), u*(y)) dy`.
pub fn q_function<M: Model + ?Sized>(model: &M, kernel: &GraphonKernel, u_star: &GridFunction) -> GridFunction {
    let k = kernel_matrix(kernel, &u_star.points, 1);
    let w = cell_widths(&u_star.points);
    GridFunction { points: u_star.points.clone(), values: q_weighted(model, &k, &w, &u_star.values) }
}

/// Whether `Q > 0` everywhere on the grid.
pub fn q_positive(q: &GridFunction) -> bool {
    q.min() > 0.0
}

/// `Q_n(u)_i = -f'(u_i) - (1/n) sum_j A_ij D_1(u_i, u_j)`.
pub fn qn_function<M: Model + ?Sized>(model: &M, graph: &SampledGraph, u: &[f64]) -> Result<Vec<f64>> {
    let n = graph.n();
    check_dim(n, u.len())?;
    let w = vec![1.0 / n as f64; n];
    Ok(q_weighted(model, &graph.adjacency, &w, u))
}

fn linearize<M: Model + ?Sized>(model: &M, k: &DMatrix<f64>, w: &[f64], u: &[f64], kind: OperatorKind) -> LinearizedOperator {
    let n = u.len();
    let q = q_weighted(model, k, w, u);
    let rows: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let q = &q;
            (0..n).map(move |j| {
                let off = w[j] * k[(i, j)] * model.d2(u[i], u[j]);
                if i == j {
                    off - q[i]
                } else {
                    off
                }
            })
        })
        .collect();
    LinearizedOperator { matrix: DMatrix::from_row_slice(n, n, &rows), q_values: q, kind }
}

/// `DF(u*) = -Q + ∫ W D_2`, discretized on the grid of `u_star`.
pub fn frozen_jacobian<M: Model + ?Sized>(model: &M, kernel: &GraphonKernel, u_star: &GridFunction) -> LinearizedOperator {
    let k = kernel_matrix(kernel, &u_star.points, 1);
    let w = cell_widths(&u_star.points);
    linearize(model, &k, &w, &u_star.values, OperatorKind::ContinuumFrozen)
}

/// Exact Jacobian of `eval_gn` at `u`.
pub fn discrete_jacobian<M: Model + ?Sized>(model: &M, graph: &SampledGraph, u: &[f64]) -> Result<LinearizedOperator> {
    let n = graph.n();
    check_dim(n, u.len())?;
    let w = vec![1.0 / n as f64; n];
    Ok(linearize(model, &graph.adjacency, &w, u, OperatorKind::DiscreteJacobian))
}

fn require_positive_q(q: &[f64]) -> Result<()> {
    let min_q = q.iter().copied().fold(f64::INFINITY, f64::min);
    if min_q > 0.0 {
        Ok(())
    } else {
        Err(Error::HypothesisViolation { min_q })
    }
}

/// `max{1, max_i (1/Q_i) ∫ |D_2(u*(x_i), u*(y))| dy}`.
pub fn eta_bound<M: Model + ?Sized>(model: &M, kernel: &GraphonKernel, u_star: &GridFunction) -> Result<f64> {
    let q = q_function(model, kernel, u_star).values;
    require_positive_q(&q)?;
    let w = cell_widths(&u_star.points);
    let u = &u_star.values;
    let worst = (0..u.len())
        .map(|i| (0..u.len()).map(|j| w[j] * model.d2(u[i], u[j]).abs()).sum::<f64>() / q[i])
        .fold(0.0, f64::max);
    Ok(worst.max(1.0))
}

/// Sup-norm operator norm of `v -> (1/Q) (1/n) sum_j (A_ij - W(x_i, x_j)) D_2 v_j`.
pub fn xi_opnorm_estimate<M: Model + ?Sized>(
    model: &M,
    kernel: &GraphonKernel,
    graph: &SampledGraph,
    u_star: &GridFunction,
) -> Result<f64> {
    let n = graph.n();
    check_dim(n, u_star.n())?;
    if !u_star.same_grid(&graph.grid_points) {
        return Err(Error::Parameter("graph and state live on different grids".into()));
    }
    let q = q_function(model, kernel, u_star).values;
    require_positive_q(&q)?;
    let k = kernel_matrix(kernel, &graph.grid_points, 1);
    let u = &u_star.values;
    Ok((0..n)
        .map(|i| {
            let s: f64 = (0..n)
                .map(|j| ((graph.adjacency[(i, j)] - k[(i, j)]) * model.d2(u[i], u[j])).abs())
                .sum();
            s / (n as f64 * q[i])
        })
        .fold(0.0, f64::max))
}
