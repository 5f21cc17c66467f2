//! Steady states of `G_n` by the frozen-Jacobian iteration
//! `T_n[u] = u - DF(u*)^{-1} G_n(u)`, with full Newton as a baseline.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{project_mean_zero, sup_norm, GridFunction};
use crate::kernel::GraphonKernel;
use crate::linalg::Factorization;
use crate::models::Model;
use crate::operators::{discrete_jacobian, eval_gn, frozen_jacobian};
use crate::sampling::SampledGraph;

pub const MAX_CONDITION: f64 = 1e12;
pub const DIVERGENCE_RESIDUAL: f64 = 1e6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Gauge {
    #[default]
    None,
    /// Work in the subspace of mean-zero vectors.
    MeanZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    pub max_iters: usize,
    pub tol_residual: f64,
    pub tol_step: f64,
    pub gauge: Gauge,
    pub damping: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { max_iters: 200, tol_residual: 1e-10, tol_step: 1e-12, gauge: Gauge::None, damping: 1.0 }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_residual > 0.0 && self.tol_step > 0.0) {
            return Err(Error::Parameter("tolerances must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::Parameter(format!("damping = {} must lie in (0,1]", self.damping)));
        }
        if self.max_iters == 0 {
            return Err(Error::Parameter("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub iterations: usize,
    /// Sup-norm residual at every visited iterate, the last one included.
    pub residual_history: Vec<f64>,
    /// Sup-norm of each applied step.
    pub step_history: Vec<f64>,
    pub final_u: Vec<f64>,
    /// `||u_final - u_start||_inf`; the start is `u*` for the frozen iteration.
    pub distance_to_continuum: f64,
    /// `||u_{k+1} - u_k|| / ||u_k - u_{k-1}||`
    pub contraction_ratios_t: Vec<f64>,
    /// `||u_{k+2} - u_k|| / ||u_k - u_{k-2}||`
    pub contraction_ratios_s: Vec<f64>,
    pub condition_estimate: f64,
}

impl SolveReport {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// A fixed linear solve `v = M^{-1} r`, restricted to mean-zero vectors under
/// the mean-zero gauge via the bordered system `[[M, 1], [1^T, 0]]`.
pub struct LinearSolve {
    fact: Factorization,
    gauge: Gauge,
    n: usize,
    cond: f64,
}

const GAUGE_HINT: &str = "; the model is translation invariant, use the mean-zero gauge";

impl LinearSolve {
    pub fn new(m: &DMatrix<f64>, gauge: Gauge, periodic: bool) -> Result<Self> {
        let n = m.nrows();
        let fact = match gauge {
            Gauge::None => Factorization::new(m),
            Gauge::MeanZero => {
                let mut b = DMatrix::zeros(n + 1, n + 1);
                b.view_mut((0, 0), (n, n)).copy_from(m);
                for i in 0..n {
                    b[(i, n)] = 1.0;
                    b[(n, i)] = 1.0;
                }
                Factorization::new(&b)
            }
        };
        let cond = fact.condition_estimate();
        if !(cond <= MAX_CONDITION) {
            let hint = if periodic && gauge == Gauge::None { GAUGE_HINT } else { "" };
            return Err(Error::SingularJacobian { cond, hint });
        }
        Ok(Self { fact, gauge, n, cond })
    }

    pub fn condition_estimate(&self) -> f64 {
        self.cond
    }

    pub fn solve(&self, r: &[f64]) -> Result<Vec<f64>> {
        let singular = || Error::SingularJacobian { cond: f64::INFINITY, hint: "" };
        match self.gauge {
            Gauge::None => {
                let x = self.fact.solve(&DVector::from_column_slice(r)).ok_or_else(singular)?;
                Ok(x.as_slice().to_vec())
            }
            Gauge::MeanZero => {
                let mut rhs = DVector::zeros(self.n + 1);
                rhs.rows_mut(0, self.n).copy_from_slice(r);
                let x = self.fact.solve(&rhs).ok_or_else(singular)?;
                let mut v = x.rows(0, self.n).iter().copied().collect::<Vec<_>>();
                project_mean_zero(&mut v);
                Ok(v)
            }
        }
    }
}

fn check_gauge<M: Model + ?Sized>(model: &M, gauge: Gauge) -> Result<()> {
    if gauge == Gauge::MeanZero && !model.periodic_state() {
        return Err(Error::Parameter(format!(
            "mean-zero gauge needs a translation-invariant model, got {}",
            model.name()
        )));
    }
    Ok(())
}

fn residual<M: Model + ?Sized>(model: &M, graph: &SampledGraph, u: &[f64], gauge: Gauge) -> Result<Vec<f64>> {
    let mut r = eval_gn(model, graph, u)?;
    if gauge == Gauge::MeanZero {
        project_mean_zero(&mut r);
    }
    Ok(r)
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Shared driver: `jac(u)` yields the linear solve used at iterate `u`.
fn iterate<M: Model + ?Sized>(
    model: &M,
    graph: &SampledGraph,
    u0: &[f64],
    opts: &SolveOptions,
    mut jac: impl FnMut(&[f64]) -> Result<std::rc::Rc<LinearSolve>>,
) -> Result<SolveReport> {
    opts.validate()?;
    check_gauge(model, opts.gauge)?;
    let mut u = u0.to_vec();
    let mut residuals = Vec::new();
    let mut steps: Vec<f64> = Vec::new();
    let mut recent: Vec<Vec<f64>> = Vec::new();
    let mut ratios_t = Vec::new();
    let mut ratios_s = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    let mut cond: f64 = 0.0;
    for k in 0..opts.max_iters {
        iterations = k + 1;
        let r = residual(model, graph, &u, opts.gauge)?;
        let res = sup_norm(&r);
        residuals.push(res);
        if !(res <= DIVERGENCE_RESIDUAL) {
            return Err(Error::Divergence { iteration: k, residual: res });
        }
        let solver = jac(&u)?;
        cond = cond.max(solver.condition_estimate());
        let mut d = solver.solve(&r)?;
        d.iter_mut().for_each(|v| *v *= -opts.damping);
        let step = sup_norm(&d);
        if res <= opts.tol_residual && step <= opts.tol_step {
            converged = true;
            break;
        }
        u.iter_mut().zip(&d).for_each(|(a, b)| *a += b);
        if let Some(&prev) = steps.last() {
            ratios_t.push(step / prev);
        }
        steps.push(step);
        recent.push(d);
        if recent.len() > 4 {
            recent.remove(0);
        }
        if recent.len() == 4 {
            let two = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0, |m: f64, (x, y)| m.max((x + y).abs()));
            let den = two(&recent[0], &recent[1]);
            ratios_s.push(two(&recent[2], &recent[3]) / den);
        }
    }
    if !converged {
        residuals.push(sup_norm(&residual(model, graph, &u, opts.gauge)?));
    }
    Ok(SolveReport {
        converged,
        iterations,
        residual_history: residuals,
        step_history: steps,
        distance_to_continuum: diff_norm(&u, u0),
        final_u: u,
        contraction_ratios_t: ratios_t,
        contraction_ratios_s: ratios_s,
        condition_estimate: cond,
    })
}

/// The frozen-Jacobian iteration started from `u*` on the graph's grid.
pub fn solve_frozen<M: Model + ?Sized>(
    model: &M,
    graph: &SampledGraph,
    kernel: &GraphonKernel,
    u_star: &GridFunction,
    opts: &SolveOptions,
) -> Result<SolveReport> {
    if u_star.n() != graph.n() {
        return Err(Error::Shape { expected: graph.n(), got: u_star.n() });
    }
    if !u_star.same_grid(&graph.grid_points) {
        return Err(Error::Parameter("graph and state live on different grids".into()));
    }
    check_gauge(model, opts.gauge)?;
    let jac = frozen_jacobian(model, kernel, u_star);
    let solve = std::rc::Rc::new(LinearSolve::new(&jac.matrix, opts.gauge, model.periodic_state())?);
    iterate(model, graph, &u_star.values, opts, |_| Ok(solve.clone()))
}

/// Newton's method on `G_n` with the exact Jacobian at every iterate.
pub fn solve_newton<M: Model + ?Sized>(model: &M, graph: &SampledGraph, u0: &[f64], opts: &SolveOptions) -> Result<SolveReport> {
    if u0.len() != graph.n() {
        return Err(Error::Shape { expected: graph.n(), got: u0.len() });
    }
    iterate(model, graph, u0, opts, |u| {
        let j = discrete_jacobian(model, graph, u)?;
        Ok(std::rc::Rc::new(LinearSolve::new(&j.matrix, opts.gauge, model.periodic_state())?))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub max_ratio_t: f64,
    pub max_ratio_s: f64,
}

/// Largest observed Lipschitz ratios of `T_n` and `S_n = T_n o T_n` over
/// random pairs in the sup-norm ball of radius `rho` about `u*`.
#[allow(clippy::too_many_arguments)]
pub fn contraction_probe<M: Model + ?Sized>(
    model: &M,
    graph: &SampledGraph,
    kernel: &GraphonKernel,
    u_star: &GridFunction,
    rho: f64,
    pairs: usize,
    seed: u64,
    gauge: Gauge,
) -> Result<ProbeReport> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::Parameter(format!("rho = {rho} must lie in (0,1)")));
    }
    if u_star.n() != graph.n() {
        return Err(Error::Shape { expected: graph.n(), got: u_star.n() });
    }
    check_gauge(model, gauge)?;
    let jac = frozen_jacobian(model, kernel, u_star);
    let solve = LinearSolve::new(&jac.matrix, gauge, model.periodic_state())?;
    let t = |u: &[f64]| -> Result<Vec<f64>> {
        let r = residual(model, graph, u, gauge)?;
        let d = solve.solve(&r)?;
        Ok(u.iter().zip(&d).map(|(a, b)| a - b).collect())
    };
    let n = u_star.n();
    let ratios: Vec<(f64, f64)> = (0..pairs.max(1) as u64)
        .into_par_iter()
        .map(|p| -> Result<(f64, f64)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(p);
            let mut draw = || {
                let mut e: Vec<f64> = (0..n).map(|_| rng.random_range(-rho..=rho)).collect();
                if gauge == Gauge::MeanZero {
                    project_mean_zero(&mut e);
                }
                u_star.values.iter().zip(&e).map(|(a, b)| a + b).collect::<Vec<f64>>()
            };
            let (u1, u2) = (draw(), draw());
            let base = diff_norm(&u1, &u2);
            let (t1, t2) = (t(&u1)?, t(&u2)?);
            let (s1, s2) = (t(&t1)?, t(&t2)?);
            Ok((diff_norm(&t1, &t2) / base, diff_norm(&s1, &s2) / base))
        })
        .collect::<Result<_>>()?;
    Ok(ratios.into_iter().fold(ProbeReport { max_ratio_t: 0.0, max_ratio_s: 0.0 }, |acc, (a, b)| ProbeReport {
        max_ratio_t: acc.max_ratio_t.max(a),
        max_ratio_s: acc.max_ratio_s.max(b),
    }))
}
