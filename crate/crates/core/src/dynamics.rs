//! Fixed-step RK4 integration of the network ODE and perturbation-decay
//! experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{mean, project_mean_zero, sup_norm};
use crate::models::Model;
use crate::operators::eval_gn;
use crate::sampling::SampledGraph;

pub const DEFAULT_DT: f64 = 1e-2;
pub const DEFAULT_T_END: f64 = 50.0;
/// Deviations below this are treated as round-off when fitting decay rates.
const DEVIATION_FLOOR: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub dt: f64,
    pub model_id: String,
    pub graph_id: String,
    /// Time at which a non-finite state appeared; the trajectory stops before it.
    pub blow_up: Option<f64>,
}

impl Trajectory {
    /// Every `stride`-th sample, always keeping the last one.
    pub fn subsample(&self, stride: usize) -> Trajectory {
        let stride = stride.max(1);
        let last = self.times.len().saturating_sub(1);
        let keep: Vec<usize> = (0..self.times.len()).filter(|&k| k % stride == 0 || k == last).collect();
        Trajectory {
            times: keep.iter().map(|&k| self.times[k]).collect(),
            states: keep.iter().map(|&k| self.states[k].clone()).collect(),
            blow_up: self.blow_up,
            dt: self.dt,
            model_id: self.model_id.clone(),
            graph_id: self.graph_id.clone(),
        }
    }
}

fn step_count(dt: f64, t_end: f64) -> Result<usize> {
    if !(dt > 0.0 && t_end > 0.0 && dt <= t_end) {
        return Err(Error::Parameter(format!("need 0 < dt <= t_end, got dt = {dt}, t_end = {t_end}")));
    }
    Ok(((t_end / dt).round() as usize).max(1))
}

/// Runs RK4 and hands every accepted state to `visit`; returns the blow-up time, if any.
fn rk4_run<M: Model + ?Sized>(
    model: &M,
    graph: &SampledGraph,
    u0: &[f64],
    h: f64,
    steps: usize,
    mut visit: impl FnMut(f64, &[f64]),
) -> Result<Option<f64>> {
    let n = u0.len();
    let mut u = u0.to_vec();
    let mut tmp = vec![0.0; n];
    visit(0.0, &u);
    for s in 0..steps {
        let k1 = eval_gn(model, graph, &u)?;
        tmp.iter_mut().zip(&u).zip(&k1).for_each(|((t, a), k)| *t = a + 0.5 * h * k);
        let k2 = eval_gn(model, graph, &tmp)?;
        tmp.iter_mut().zip(&u).zip(&k2).for_each(|((t, a), k)| *t = a + 0.5 * h * k);
        let k3 = eval_gn(model, graph, &tmp)?;
        tmp.iter_mut().zip(&u).zip(&k3).for_each(|((t, a), k)| *t = a + h * k);
        let k4 = eval_gn(model, graph, &tmp)?;
        for i in 0..n {
            tmp[i] = u[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t = (s + 1) as f64 * h;
        if tmp.iter().any(|v| !v.is_finite()) {
            return Ok(Some(t));
        }
        std::mem::swap(&mut u, &mut tmp);
        visit(t, &u);
    }
    Ok(None)
}

/// Classic fourth-order Runge-Kutta for `du/dt = G_n(u)`. The step is
/// `t_end / round(t_end / dt)`, so the run ends exactly at `t_end`.
pub fn integrate_rk4<M: Model + ?Sized>(
    model: &M,
    graph: &SampledGraph,
    u0: &[f64],
    dt: f64,
    t_end: f64,
) -> Result<Trajectory> {
    if u0.len() != graph.n() {
        return Err(Error::Shape { expected: graph.n(), got: u0.len() });
    }
    let steps = step_count(dt, t_end)?;
    let h = t_end / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    let blow_up = rk4_run(model, graph, u0, h, steps, |t, u| {
        times.push(t);
        states.push(u.to_vec());
    })?;
    Ok(Trajectory {
        times,
        states,
        dt: h,
        model_id: model.name().to_string(),
        graph_id: graph.kernel_id.clone(),
        blow_up,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub decayed: bool,
    /// Fitted slope of `log ||u(t) - u*||_inf` over the second half of the run.
    pub rate: f64,
    pub initial_deviation: f64,
    pub final_deviation: f64,
}

fn deviation(u: &[f64], u_star: &[f64], modulo_constants: bool) -> f64 {
    let mut d: Vec<f64> = u.iter().zip(u_star).map(|(a, b)| a - b).collect();
    if modulo_constants {
        project_mean_zero(&mut d);
    }
    sup_norm(&d)
}

fn slope(ts: &[f64], ys: &[f64]) -> Option<f64> {
    if ts.len() < 2 {
        return None;
    }
    let tm = mean(ts);
    let ym = mean(ys);
    let sxx: f64 = ts.iter().map(|t| (t - tm).powi(2)).sum();
    let sxy: f64 = ts.iter().zip(ys).map(|(t, y)| (t - tm) * (y - ym)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Perturbs a steady state by noise of sup-norm `eps` and reports whether
/// the deviation falls below `eps / 10` by `t_end`. For translation-invariant
/// models the noise is mean-zero and deviations are taken modulo constants.
#[allow(clippy::too_many_arguments)]
pub fn perturbation_decay<M: Model + ?Sized>(
    model: &M,
    graph: &SampledGraph,
    u_star: &[f64],
    eps: f64,
    dt: f64,
    t_end: f64,
    seed: u64,
) -> Result<DecayReport> {
    let res = sup_norm(&eval_gn(model, graph, u_star)?);
    if !(res <= 1e-8) {
        return Err(Error::NotSteady(res));
    }
    if !(eps >= 0.0) {
        return Err(Error::Parameter(format!("eps = {eps} must be nonnegative")));
    }
    if eps == 0.0 {
        return Ok(DecayReport { decayed: true, rate: 0.0, initial_deviation: 0.0, final_deviation: 0.0 });
    }
    let steps = step_count(dt, t_end)?;
    let h = t_end / steps as f64;
    let gauged = model.periodic_state();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise: Vec<f64> = (0..u_star.len()).map(|_| rng.random_range(-1.0..=1.0)).collect();
    if gauged {
        project_mean_zero(&mut noise);
    }
    let scale = sup_norm(&noise);
    if scale == 0.0 {
        return Ok(DecayReport { decayed: true, rate: 0.0, initial_deviation: 0.0, final_deviation: 0.0 });
    }
    let u0: Vec<f64> = u_star.iter().zip(&noise).map(|(a, b)| a + eps * b / scale).collect();
    let mut ts = Vec::with_capacity(steps + 1);
    let mut devs = Vec::with_capacity(steps + 1);
    let blow_up = rk4_run(model, graph, &u0, h, steps, |t, u| {
        ts.push(t);
        devs.push(deviation(u, u_star, gauged));
    })?;
    let initial = devs[0];
    let last = *devs.last().unwrap();
    if blow_up.is_some() {
        return Ok(DecayReport { decayed: false, rate: f64::INFINITY, initial_deviation: initial, final_deviation: f64::INFINITY });
    }
    let half = ts.len() / 2;
    let (mut fit_t, mut fit_y): (Vec<f64>, Vec<f64>) = ts[half..]
        .iter()
        .zip(&devs[half..])
        .filter(|(_, d)| **d > DEVIATION_FLOOR)
        .map(|(t, d)| (*t, d.ln()))
        .unzip();
    if fit_t.len() < 3 {
        (fit_t, fit_y) = ts.iter().zip(&devs).filter(|(_, d)| **d > DEVIATION_FLOOR).map(|(t, d)| (*t, d.ln())).unzip();
    }
    let rate = slope(&fit_t, &fit_y).unwrap_or_else(|| (last.max(DEVIATION_FLOOR) / initial).ln() / t_end);
    Ok(DecayReport { decayed: last <= eps / 10.0, rate, initial_deviation: initial, final_deviation: last })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::GraphonKernel;
    use crate::models::{kuramoto, wc_homogeneous_roots, wilson_cowan, ModelSpec};
    use crate::operators::frozen_jacobian;
    use crate::grid::GridFunction;
    use crate::sampling::{sample_deterministic, sample_random};
    use crate::spectra::eigenvalues_dense;
    use nalgebra::DMatrix;

    fn scalar_decay_error(dt: f64) -> f64 {
        let m = ModelSpec::Linear { a: -1.0, b: 0.0 };
        let g = SampledGraph::from_adjacency(DMatrix::zeros(1, 1), "single").unwrap();
        let tr = integrate_rk4(&m, &g, &[1.0], dt, 1.0).unwrap();
        (tr.states.last().unwrap()[0] - (-1.0f64).exp()).abs()
    }

    #[test]
    fn exponential_decay_accuracy() {
        assert!(scalar_decay_error(1e-3) / (-1.0f64).exp() <= 1e-6);
    }

    #[test]
    fn fourth_order_convergence() {
        let dts = [1e-1, 5e-2, 2.5e-2];
        let xs: Vec<f64> = dts.iter().map(|d: &f64| d.ln()).collect();
        let ys: Vec<f64> = dts.iter().map(|&d| scalar_decay_error(d).ln()).collect();
        let s = slope(&xs, &ys).unwrap();
        assert!((s - 4.0).abs() <= 0.3, "{s}");
    }

    #[test]
    fn constant_kuramoto_state_is_frozen() {
        let g = sample_random(&GraphonKernel::constant(0.5).unwrap(), 30, 2);
        let tr = integrate_rk4(&kuramoto(), &g, &[0.7; 30], 0.05, 5.0).unwrap();
        assert!(tr.states.iter().all(|s| s.iter().all(|&v| v == 0.7)));
        assert_eq!(tr.times.len(), 101);
        assert_eq!(tr.subsample(10).times.len(), 11);
    }

    #[test]
    fn kuramoto_mean_is_conserved() {
        let g = sample_random(&GraphonKernel::constant(0.5).unwrap(), 40, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u0: Vec<f64> = (0..40).map(|_| rng.random_range(-0.5..0.5)).collect();
        let tr = integrate_rk4(&kuramoto(), &g, &u0, 0.01, 5.0).unwrap();
        let drift = (mean(tr.states.last().unwrap()) - mean(&u0)).abs();
        assert!(drift <= 1e-9 * 5.0, "{drift}");
    }

    #[test]
    fn equilibrium_stays_put() {
        let k = GraphonKernel::constant(0.5).unwrap();
        let g = sample_deterministic(&k, 20);
        let root = wc_homogeneous_roots(0.5, 1.0, 1.0, 1.0).unwrap()[0].u;
        let tr = integrate_rk4(&wilson_cowan(1.0, 1.0, 1.0).unwrap(), &g, &[root; 20], 0.01, 10.0).unwrap();
        assert!(tr.states.last().unwrap().iter().all(|v| (v - root).abs() <= 1e-8));
    }

    #[test]
    fn blow_up_is_flagged() {
        let m = ModelSpec::Linear { a: 1e3, b: 0.0 };
        let g = SampledGraph::from_adjacency(DMatrix::zeros(2, 2), "pair").unwrap();
        let tr = integrate_rk4(&m, &g, &[1.0, 1.0], 0.1, 100.0).unwrap();
        assert!(tr.blow_up.is_some());
        assert!(tr.states.iter().all(|s| s.iter().all(|v| v.is_finite())));
    }

    #[test]
    fn wc_branches() {
        let k = GraphonKernel::constant(0.5).unwrap();
        let g = sample_deterministic(&k, 30);
        let m = wilson_cowan(22.0, 4.0, 1.0).unwrap();
        let roots = wc_homogeneous_roots(0.5, 22.0, 4.0, 1.0).unwrap();
        let low = vec![roots[0].u; 30];
        let rep = perturbation_decay(&m, &g, &low, 1e-3, 0.01, 20.0, 5).unwrap();
        assert!(rep.decayed);
        let op = frozen_jacobian(&m, &k, &GridFunction::constant(30, roots[0].u));
        let lead = eigenvalues_dense(&op.matrix).unwrap()[0].re;
        assert!(rep.rate < 0.0 && rep.rate / lead <= 2.0 && rep.rate / lead >= 0.5, "{} vs {}", rep.rate, lead);

        let mid = vec![roots[1].u; 30];
        assert!(!perturbation_decay(&m, &g, &mid, 1e-3, 0.01, 50.0, 5).unwrap().decayed);
    }

    #[test]
    fn zero_perturbation_and_bad_start() {
        let k = GraphonKernel::constant(0.5).unwrap();
        let g = sample_deterministic(&k, 10);
        let m = wilson_cowan(1.0, 1.0, 1.0).unwrap();
        let root = wc_homogeneous_roots(0.5, 1.0, 1.0, 1.0).unwrap()[0].u;
        let r = perturbation_decay(&m, &g, &[root; 10], 0.0, 0.01, 1.0, 1).unwrap();
        assert!(r.decayed && r.rate == 0.0);
        assert!(matches!(perturbation_decay(&m, &g, &[0.9; 10], 1e-3, 0.01, 1.0, 1), Err(Error::NotSteady(_))));
    }
}
