//! Reaction and coupling terms of `du_i/dt = f(u_i) + (1/n) sum_j A_ij D(u_i, u_j)`
//! for the example systems, and their closed-form steady states.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{uniform_points, GridFunction};
use crate::kernel::GraphonKernel;

/// Reaction `f`, coupling `D` and first derivatives.
pub trait Model: Sync {
    fn name(&self) -> &'static str;
    fn f(&self, u: f64) -> f64;
    fn f_prime(&self, u: f64) -> f64;
    fn d(&self, a: f64, b: f64) -> f64;
    /// `dD/da`
    fn d1(&self, a: f64, b: f64) -> f64;
    /// `dD/db`
    fn d2(&self, a: f64, b: f64) -> f64;
    fn params(&self) -> BTreeMap<String, f64>;
    /// States are phases, so `u + c` is equivalent to `u`.
    fn periodic_state(&self) -> bool {
        false
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    Kuramoto,
    WilsonCowan {
        lambda: f64,
        mu: f64,
        delta: f64,
    },
    LotkaVolterra {
        lambda: f64,
        #[serde(default)]
        cooperative: bool,
    },
    /// `f(u) = a u`, `D(u, v) = b v`.
    Linear {
        a: f64,
        b: f64,
    },
}

pub fn kuramoto() -> ModelSpec {
    ModelSpec::Kuramoto
}

pub fn wilson_cowan(lambda: f64, mu: f64, delta: f64) -> Result<ModelSpec> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda = {lambda} must be positive")));
    }
    Ok(ModelSpec::WilsonCowan { lambda, mu, delta })
}

pub fn lotka_volterra(lambda: f64, cooperative: bool) -> Result<ModelSpec> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda = {lambda} must be positive")));
    }
    Ok(ModelSpec::LotkaVolterra { lambda, cooperative })
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::WilsonCowan { lambda, mu, delta } => wilson_cowan(lambda, mu, delta).map(|_| ()),
            ModelSpec::LotkaVolterra { lambda, cooperative } => lotka_volterra(lambda, cooperative).map(|_| ()),
            _ => Ok(()),
        }
    }
}

/// `1/(1+e^z)` without overflow.
#[inline]
fn logistic_neg(z: f64) -> f64 {
    if z >= 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

impl Model for ModelSpec {
    fn name(&self) -> &'static str {
        match self {
            ModelSpec::Kuramoto => "kuramoto",
            ModelSpec::WilsonCowan { .. } => "wilson_cowan",
            ModelSpec::LotkaVolterra { .. } => "lotka_volterra",
            ModelSpec::Linear { .. } => "linear",
        }
    }

    fn f(&self, u: f64) -> f64 {
        match *self {
            ModelSpec::Kuramoto => 0.0,
            ModelSpec::WilsonCowan { .. } => -u,
            ModelSpec::LotkaVolterra { .. } => u * (1.0 - u),
            ModelSpec::Linear { a, .. } => a * u,
        }
    }

    fn f_prime(&self, u: f64) -> f64 {
        match *self {
            ModelSpec::Kuramoto => 0.0,
            ModelSpec::WilsonCowan { .. } => -1.0,
            ModelSpec::LotkaVolterra { .. } => 1.0 - 2.0 * u,
            ModelSpec::Linear { a, .. } => a,
        }
    }

    fn d(&self, a: f64, b: f64) -> f64 {
        match *self {
            ModelSpec::Kuramoto => (2.0 * PI * (b - a)).sin(),
            ModelSpec::WilsonCowan { lambda, mu, delta } => lambda * logistic_neg(mu - delta * b),
            ModelSpec::LotkaVolterra { lambda, cooperative } => lv_sign(cooperative) * lambda * a * b,
            ModelSpec::Linear { b: c, .. } => c * b,
        }
    }

    fn d1(&self, a: f64, b: f64) -> f64 {
        match *self {
            ModelSpec::Kuramoto => -2.0 * PI * (2.0 * PI * (b - a)).cos(),
            ModelSpec::WilsonCowan { .. } | ModelSpec::Linear { .. } => 0.0,
            ModelSpec::LotkaVolterra { lambda, cooperative } => lv_sign(cooperative) * lambda * b,
        }
    }

    fn d2(&self, a: f64, b: f64) -> f64 {
        match *self {
            ModelSpec::Kuramoto => 2.0 * PI * (2.0 * PI * (b - a)).cos(),
            ModelSpec::WilsonCowan { lambda, mu, delta } => {
                let s = logistic_neg(mu - delta * b);
                lambda * delta * s * (1.0 - s)
            }
            ModelSpec::LotkaVolterra { lambda, cooperative } => lv_sign(cooperative) * lambda * a,
            ModelSpec::Linear { b: c, .. } => c,
        }
    }

    fn params(&self) -> BTreeMap<String, f64> {
        let pairs: Vec<(&str, f64)> = match *self {
            ModelSpec::Kuramoto => vec![],
            ModelSpec::WilsonCowan { lambda, mu, delta } => vec![("lambda", lambda), ("mu", mu), ("delta", delta)],
            ModelSpec::LotkaVolterra { lambda, cooperative } => {
                vec![("lambda", lambda), ("cooperative", if cooperative { 1.0 } else { 0.0 })]
            }
            ModelSpec::Linear { a, b } => vec![("a", a), ("b", b)],
        };
        pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()
    }

    fn periodic_state(&self) -> bool {
        matches!(self, ModelSpec::Kuramoto)
    }
}

fn lv_sign(cooperative: bool) -> f64 {
    if cooperative {
        1.0
    } else {
        -1.0
    }
}

/// `u*(x_i) = m (x_i - 1/2)` on the uniform grid.
pub fn kuramoto_twisted_state(m: i64, n: usize) -> GridFunction {
    GridFunction::from_fn(uniform_points(n), |x| m as f64 * (x - 0.5))
}

/// A constant steady state `u = lambda Omega / (1 + exp(mu - delta u))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WcRoot {
    pub u: f64,
    /// The nontrivial linearized eigenvalue is `R - 1`.
    pub r: f64,
}

/// All constant steady states of the Wilson-Cowan model with mean coupling
/// `omega`, in increasing order.
pub fn wc_homogeneous_roots(omega: f64, lambda: f64, mu: f64, delta: f64) -> Result<Vec<WcRoot>> {
    if !(0.0..=1.0).contains(&omega) {
        return Err(Error::Parameter(format!("omega = {omega} must lie in [0,1]")));
    }
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda = {lambda} must be positive")));
    }
    let top = lambda * omega;
    let r_of = |u: f64| {
        let s = logistic_neg(mu - delta * u);
        top * delta * s * (1.0 - s)
    };
    if top == 0.0 {
        return Ok(vec![WcRoot { u: 0.0, r: 0.0 }]);
    }
    let g = |u: f64| top * logistic_neg(mu - delta * u) - u;
    const CELLS: usize = 4096;
    let mut roots = Vec::new();
    let mut a = 0.0;
    let mut ga = g(a);
    for k in 1..=CELLS {
        let b = top * k as f64 / CELLS as f64;
        let gb = g(b);
        if ga == 0.0 {
            roots.push(a);
        } else if ga * gb < 0.0 {
            let (mut lo, mut hi, mut glo) = (a, b, ga);
            while hi - lo > 1e-12 * hi.max(1.0) {
                let mid = 0.5 * (lo + hi);
                let gm = g(mid);
                if gm == 0.0 {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (gm < 0.0) == (glo < 0.0) {
                    lo = mid;
                    glo = gm;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        a = b;
        ga = gb;
    }
    if ga == 0.0 {
        roots.push(a);
    }
    assert!(!roots.is_empty(), "continuity guarantees a root in [0, lambda*omega]");
    Ok(roots.into_iter().map(|u| WcRoot { u, r: r_of(u) }).collect())
}

/// `(u*, Omega)` with `Omega = u* (1 + exp(mu - delta u*)) / lambda`.
pub fn wc_bifurcation_curve(u_grid: &[f64], lambda: f64, mu: f64, delta: f64) -> Result<Vec<(f64, f64)>> {
    if !(lambda > 0.0) {
        return Err(Error::Parameter(format!("lambda = {lambda} must be positive")));
    }
    Ok(u_grid
        .iter()
        .map(|&u| (u, u * (1.0 + (mu - delta * u).exp()) / lambda))
        .collect())
}

/// Constant competitive steady state `1/(1 + lambda p)`.
pub fn lv_steady(p: f64, lambda: f64) -> f64 {
    1.0 / (1.0 + lambda * p)
}

/// Two-level cooperative steady state on the bipartite kernel.
pub fn bipartite_lv_steady(p: f64, alpha: f64, lambda: f64) -> Result<(f64, f64)> {
    let det = 1.0 - lambda * lambda * p * p * alpha * (1.0 - alpha);
    if !(det > 0.0) {
        return Err(Error::Parameter(format!(
            "lambda^2 p^2 alpha (1 - alpha) = {} must be below 1",
            1.0 - det
        )));
    }
    Ok(((1.0 + lambda * p * (1.0 - alpha)) / det, (1.0 + lambda * p * alpha) / det))
}

/// Root in `(1/2, 1)` of `tan(pi mu) (2 - (pi mu)^2) = 2 pi mu`.
pub fn mu_star() -> f64 {
    let h = |mu: f64| {
        let t = PI * mu;
        t.tan() * (2.0 - t * t) - 2.0 * t
    };
    let (mut lo, mut hi) = (0.5 + 1e-6, 1.0 - 1e-6);
    let hlo_pos = h(lo) > 0.0;
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if (h(mid) > 0.0) == hlo_pos {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The condition `|m| alpha < mu* pi` for the m-twisted state on the
/// small-world kernel with `q = 0`. It is not sufficient on its own: use
/// `ring_twisted_eigenvalues` for a verdict.
pub fn kuramoto_stability_predicate(m: i64, alpha: f64) -> bool {
    (m.unsigned_abs() as f64) * alpha < mu_star() * PI
}

/// Which constant Wilson-Cowan state to pick when several coexist.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WcBranch {
    #[default]
    Low,
    Middle,
    High,
}

/// A continuum steady state in closed form, sampled at `points`.
///
/// Kuramoto needs a ring-type kernel and a `twist`; Lotka-Volterra accepts a
/// constant-degree or a bipartite kernel; Wilson-Cowan needs a constant
/// degree; the linear model always has the zero state.
pub fn closed_form_state(
    model: &ModelSpec,
    kernel: &GraphonKernel,
    points: &[f64],
    twist: Option<i64>,
    branch: WcBranch,
) -> Result<GridFunction> {
    let points = points.to_vec();
    let need_constant_degree = || {
        kernel.constant_degree().ok_or_else(|| {
            Error::Parameter(format!("no closed-form state for {} on a kernel with varying degree", model.name()))
        })
    };
    match *model {
        ModelSpec::Kuramoto => {
            if !matches!(kernel, GraphonKernel::Constant { .. } | GraphonKernel::Ring(_) | GraphonKernel::SmallWorld { .. }) {
                return Err(Error::Parameter("twisted states need a ring-type kernel".into()));
            }
            let m = twist.ok_or_else(|| Error::Parameter("the Kuramoto model needs a twist m".into()))?;
            Ok(GridFunction::from_fn(points, |x| m as f64 * (x - 0.5)))
        }
        ModelSpec::LotkaVolterra { lambda, cooperative } => {
            let s = lv_sign(cooperative);
            if let GraphonKernel::Bipartite { alpha, p } = *kernel {
                let det = 1.0 - lambda * lambda * p * p * alpha * (1.0 - alpha);
                let u1 = (1.0 + s * lambda * p * (1.0 - alpha)) / det;
                let u2 = (1.0 + s * lambda * p * alpha) / det;
                if !(det > 0.0 && u1 > 0.0 && u2 > 0.0) {
                    return Err(Error::Parameter("no positive two-level state for these parameters".into()));
                }
                return Ok(GridFunction::from_fn(points, |x| if x < alpha { u1 } else { u2 }));
            }
            let d = need_constant_degree()?;
            let denom = 1.0 - s * lambda * d;
            if !(denom > 0.0) {
                return Err(Error::Parameter(format!("lambda d = {} leaves no positive constant state", lambda * d)));
            }
            Ok(GridFunction::constant_on(points, 1.0 / denom))
        }
        ModelSpec::WilsonCowan { lambda, mu, delta } => {
            let roots = wc_homogeneous_roots(need_constant_degree()?, lambda, mu, delta)?;
            let root = match branch {
                WcBranch::Low => roots[0],
                WcBranch::High => roots[roots.len() - 1],
                WcBranch::Middle if roots.len() == 3 => roots[1],
                WcBranch::Middle => {
                    return Err(Error::Parameter(format!("{} constant state(s); no middle branch", roots.len())));
                }
            };
            Ok(GridFunction::constant_on(points, root.u))
        }
        ModelSpec::Linear { .. } => Ok(GridFunction::constant_on(points, 0.0)),
    }
}
