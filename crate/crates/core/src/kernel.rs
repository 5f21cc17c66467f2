//! Graphon kernels, step graphons, degree functions and the continuity
//! modulus diagnostic.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{uniform_points, GridFunction};
use crate::quadrature::midpoint_unit;

/// Slack on closed band comparisons so grid distances computed as `k/n - j/n`
/// land on the same side of `alpha` as the exact rational distance.
const BAND_SLACK: f64 = 1e-12;

/// Distance on the unit circle, `min{|x-y|, 1-|x-y|}`.
#[inline]
pub fn ring_distance(x: f64, y: f64) -> f64 {
    let d = (x - y).abs();
    d.min(1.0 - d)
}

/// A graphon cut into `n x n` constant cells.
#[derive(Debug, Clone, PartialEq)]
pub struct StepGraphon {
    values: DMatrix<f64>,
}

impl StepGraphon {
    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    #[inline]
    fn cell(&self, x: f64) -> usize {
        let n = self.n();
        ((x * n as f64).floor() as usize).min(n - 1)
    }

    #[inline]
    pub fn value(&self, x: f64, y: f64) -> f64 {
        self.values[(self.cell(x), self.cell(y))]
    }
}

/// Embed a symmetric matrix with entries in `[0,1]` as a step graphon.
pub fn step_from_matrix(a: &DMatrix<f64>) -> Result<StepGraphon> {
    validate_graphon_matrix(a)?;
    Ok(StepGraphon { values: a.clone() })
}

fn validate_graphon_matrix(a: &DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    if n == 0 || a.ncols() != n {
        return Err(Error::InvalidMatrix(format!(
            "expected a non-empty square matrix, got {}x{}",
            a.nrows(),
            a.ncols()
        )));
    }
    for i in 0..n {
        for j in 0..n {
            let v = a[(i, j)];
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::InvalidMatrix(format!("entry ({i},{j}) = {v} outside [0,1]")));
            }
            if v != a[(j, i)] {
                return Err(Error::InvalidMatrix(format!("not symmetric at ({i},{j})")));
            }
        }
    }
    Ok(())
}

/// Distance profile of a ring graphon `W(x,y) = R(d(x,y))`.
#[derive(Debug, Clone, PartialEq)]
pub enum RingProfile {
    /// Cosine coefficients `c_0..c_K`; `W = c_0 + 2 sum_k c_k cos(2 pi k (x-y))`.
    Fourier(Vec<f64>),
    /// `R(d) = values[k]` for the first `k` with `d <= edges[k]`; the last edge is `1/2`.
    Piecewise { edges: Vec<f64>, values: Vec<f64> },
}

impl RingProfile {
    fn value(&self, d: f64) -> f64 {
        match self {
            RingProfile::Fourier(c) => {
                let s: f64 = c
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, ck)| ck * (2.0 * PI * k as f64 * d).cos())
                    .sum();
                (c[0] + 2.0 * s).clamp(0.0, 1.0)
            }
            RingProfile::Piecewise { edges, values } => {
                let k = edges.iter().position(|&e| d <= e + BAND_SLACK).unwrap_or(edges.len() - 1);
                values[k]
            }
        }
    }

    fn mean(&self) -> f64 {
        match self {
            RingProfile::Fourier(c) => c[0],
            RingProfile::Piecewise { edges, values } => {
                let mut lo = 0.0;
                let mut acc = 0.0;
                for (e, v) in edges.iter().zip(values) {
                    acc += v * (e - lo);
                    lo = *e;
                }
                2.0 * acc
            }
        }
    }
}

/// Symmetric kernel on `[0,1]^2` with values in `[0,1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub enum GraphonKernel {
    Constant { p: f64 },
    Ring(RingProfile),
    SmallWorld { alpha: f64, p: f64, q: f64 },
    /// Blocks `[0, alpha)` and `[alpha, 1]`; edges only across blocks.
    Bipartite { alpha: f64, p: f64 },
    Step(StepGraphon),
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::InvalidKernel(format!("{name} = {v} must lie in [0,1]")))
    }
}

impl GraphonKernel {
    pub fn constant(p: f64) -> Result<Self> {
        check_unit("p", p)?;
        Ok(Self::Constant { p })
    }

    pub fn small_world(alpha: f64, p: f64, q: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 0.5) {
            return Err(Error::InvalidKernel(format!("alpha = {alpha} must lie in (0, 1/2]")));
        }
        check_unit("p", p)?;
        check_unit("q", q)?;
        Ok(Self::SmallWorld { alpha, p, q })
    }

    pub fn bipartite(alpha: f64, p: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidKernel(format!("alpha = {alpha} must lie in (0,1)")));
        }
        check_unit("p", p)?;
        Ok(Self::Bipartite { alpha, p })
    }

    pub fn step(a: &DMatrix<f64>) -> Result<Self> {
        Ok(Self::Step(step_from_matrix(a)?))
    }

    /// Ring kernel from cosine coefficients `c_0..c_K`. Rejects truncations
    /// whose profile leaves `[0,1]`.
    pub fn ring_fourier(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::InvalidKernel("empty Fourier coefficient list".into()));
        }
        let profile = RingProfile::Fourier(coeffs.clone());
        for k in 0..=2048 {
            let d = 0.5 * k as f64 / 2048.0;
            let raw = coeffs[0]
                + 2.0
                    * coeffs
                        .iter()
                        .enumerate()
                        .skip(1)
                        .map(|(j, c)| c * (2.0 * PI * j as f64 * d).cos())
                        .sum::<f64>();
            if !(-1e-9..=1.0 + 1e-9).contains(&raw) {
                return Err(Error::InvalidKernel(format!(
                    "Fourier profile takes value {raw} at distance {d}"
                )));
            }
        }
        Ok(Self::Ring(profile))
    }

    pub fn ring_piecewise(edges: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if edges.is_empty() || edges.len() != values.len() {
            return Err(Error::InvalidKernel("edges and values must be non-empty and equal length".into()));
        }
        if edges.windows(2).any(|w| w[0] >= w[1]) || edges[0] <= 0.0 {
            return Err(Error::InvalidKernel("edges must be strictly increasing and positive".into()));
        }
        if (edges[edges.len() - 1] - 0.5).abs() > 1e-15 {
            return Err(Error::InvalidKernel("last edge must be 1/2".into()));
        }
        for &v in &values {
            check_unit("profile value", v)?;
        }
        Ok(Self::Ring(RingProfile::Piecewise { edges, values }))
    }

    pub fn family(&self) -> &'static str {
        match self {
            Self::Constant { .. } => "constant",
            Self::Ring(_) => "ring",
            Self::SmallWorld { .. } => "smallworld",
            Self::Bipartite { .. } => "bipartite",
            Self::Step(_) => "step",
        }
    }

    /// Short identifier written into manifests.
    pub fn id(&self) -> String {
        match self {
            Self::Constant { p } => format!("constant(p={p})"),
            Self::Ring(RingProfile::Fourier(c)) => format!("ring(fourier,K={})", c.len() - 1),
            Self::Ring(RingProfile::Piecewise { edges, .. }) => format!("ring(piecewise,{} pieces)", edges.len()),
            Self::SmallWorld { alpha, p, q } => format!("smallworld(alpha={alpha},p={p},q={q})"),
            Self::Bipartite { alpha, p } => format!("bipartite(alpha={alpha},p={p})"),
            Self::Step(s) => format!("step(n={})", s.n()),
        }
    }

    /// `W(x,y)`, checking that both coordinates lie in `[0,1]`.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::Domain { x, y });
        }
        Ok(self.value(x, y))
    }

    /// `W(x,y)` without the domain check.
    #[inline]
    pub fn value(&self, x: f64, y: f64) -> f64 {
        match self {
            Self::Constant { p } => *p,
            Self::Ring(profile) => profile.value(ring_distance(x, y)),
            Self::SmallWorld { alpha, p, q } => {
                if ring_distance(x, y) <= alpha + BAND_SLACK {
                    *p
                } else {
                    *q
                }
            }
            Self::Bipartite { alpha, p } => {
                if (x < *alpha) != (y < *alpha) {
                    *p
                } else {
                    0.0
                }
            }
            Self::Step(s) => s.value(x, y),
        }
    }

    /// `d_W(x) = ∫ W(x,y) dy`, in closed form for every family.
    pub fn degree_at(&self, x: f64) -> f64 {
        match self {
            Self::Constant { p } => *p,
            Self::Ring(profile) => profile.mean(),
            Self::SmallWorld { alpha, p, q } => 2.0 * alpha * p + (1.0 - 2.0 * alpha) * q,
            Self::Bipartite { alpha, p } => {
                if x < *alpha {
                    p * (1.0 - alpha)
                } else {
                    p * alpha
                }
            }
            Self::Step(s) => {
                let i = s.cell(x);
                s.values.row(i).sum() / s.n() as f64
            }
        }
    }

    /// The common degree when `d_W` is constant, as for ring-type kernels.
    pub fn constant_degree(&self) -> Option<f64> {
        match self {
            Self::Constant { .. } | Self::Ring(_) | Self::SmallWorld { .. } => Some(self.degree_at(0.0)),
            Self::Bipartite { alpha, .. } => (*alpha == 0.5).then(|| self.degree_at(0.0)),
            Self::Step(s) => {
                let n = s.n() as f64;
                let d: Vec<f64> = s.values.row_iter().map(|r| r.sum() / n).collect();
                let (lo, hi) = d.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
                (hi - lo <= 1e-12).then_some(d[0])
            }
        }
    }

    /// Points in `(0,1)` where `y -> W(x,y)` may jump.
    pub fn y_breakpoints(&self, x: f64) -> Vec<f64> {
        let wrap = |t: f64| t.rem_euclid(1.0);
        let mut b = match self {
            Self::Constant { .. } | Self::Ring(RingProfile::Fourier(_)) => vec![],
            Self::Ring(RingProfile::Piecewise { edges, .. }) => {
                edges.iter().flat_map(|e| [wrap(x + e), wrap(x - e)]).collect()
            }
            Self::SmallWorld { alpha, .. } => vec![wrap(x + alpha), wrap(x - alpha)],
            Self::Bipartite { alpha, .. } => vec![*alpha],
            Self::Step(s) => (1..s.n()).map(|k| k as f64 / s.n() as f64).collect(),
        };
        b.retain(|&t| t > 0.0 && t < 1.0);
        b
    }
}

/// Degree function at the uniform grid points `x_i = (i-1)/resolution`.
pub fn degree(kernel: &GraphonKernel, resolution: usize) -> GridFunction {
    GridFunction::from_fn(uniform_points(resolution.max(1)), |x| kernel.degree_at(x))
}

/// Numerical check of the equicontinuity condition on `x -> W(x,.)` in `L^1`:
/// the largest `∫ |W(x,y) - W(x0,y)| dy` over grid points `x0, x` within
/// `delta` of each other, with `10 * grid` midpoint nodes in `y`.
pub fn continuity_modulus(kernel: &GraphonKernel, delta: f64, grid: usize) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Parameter(format!("delta = {delta} must lie in (0,1)")));
    }
    let grid = grid.max(1);
    let nodes = 10 * grid;
    let xs: Vec<f64> = (0..=grid).map(|k| k as f64 / grid as f64).collect();
    let ys: Vec<f64> = (0..nodes).map(|k| (k as f64 + 0.5) / nodes as f64).collect();
    let rows: Vec<Vec<f64>> = xs
        .iter()
        .map(|&x| ys.iter().map(|&y| kernel.value(x, y)).collect())
        .collect();
    let mut best: f64 = 0.0;
    for a in 0..xs.len() {
        for b in a + 1..xs.len() {
            if xs[b] - xs[a] >= delta {
                break;
            }
            let l1 = rows[a].iter().zip(&rows[b]).map(|(u, v)| (u - v).abs()).sum::<f64>()
                / nodes as f64;
            best = best.max(l1);
        }
    }
    Ok(best)
}

/// Fourier coefficients `c_{-K..K}` of a ring graphon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoeffs {
    /// `c_0..c_K`; negative indices mirror these.
    nonneg: Vec<f64>,
}

impl FourierCoeffs {
    pub fn from_nonnegative(nonneg: Vec<f64>) -> Self {
        Self { nonneg }
    }

    pub fn max_index(&self) -> usize {
        self.nonneg.len().saturating_sub(1)
    }

    pub fn get(&self, k: i64) -> Option<f64> {
        self.nonneg.get(k.unsigned_abs() as usize).copied()
    }

    pub fn nonnegative(&self) -> &[f64] {
        &self.nonneg
    }

    /// `c_{-K}, ..., c_0, ..., c_K`.
    pub fn to_symmetric_vec(&self) -> Vec<f64> {
        let k = self.max_index() as i64;
        (-k..=k).map(|i| self.get(i).unwrap()).collect()
    }
}

/// Fourier coefficients of the small-world kernel up to `|k| <= k_max`.
pub fn smallworld_fourier(alpha: f64, p: f64, q: f64, k_max: usize) -> FourierCoeffs {
    let nonneg = (0..=k_max)
        .map(|k| {
            if k == 0 {
                2.0 * alpha * p + (1.0 - 2.0 * alpha) * q
            } else {
                let k = k as f64;
                (p - q) / (PI * k) * (2.0 * PI * k * alpha).sin()
            }
        })
        .collect();
    FourierCoeffs { nonneg }
}

/// Fourier coefficients of any ring-type kernel (constant, small-world,
/// Fourier ring). Piecewise rings are integrated numerically.
pub fn ring_coefficients(kernel: &GraphonKernel, k_max: usize) -> Option<FourierCoeffs> {
    match kernel {
        GraphonKernel::Constant { p } => {
            let mut c = vec![0.0; k_max + 1];
            c[0] = *p;
            Some(FourierCoeffs { nonneg: c })
        }
        GraphonKernel::SmallWorld { alpha, p, q } => Some(smallworld_fourier(*alpha, *p, *q, k_max)),
        GraphonKernel::Ring(RingProfile::Fourier(c)) => {
            let mut c = c.clone();
            c.resize(k_max + 1, 0.0);
            Some(FourierCoeffs { nonneg: c })
        }
        GraphonKernel::Ring(profile @ RingProfile::Piecewise { edges, .. }) => {
            let nonneg = (0..=k_max)
                .map(|k| {
                    let f = |s: f64| profile.value(ring_distance(s, 0.0)) * (2.0 * PI * k as f64 * s).cos();
                    let breaks: Vec<f64> = edges.iter().flat_map(|e| [*e, 1.0 - e]).collect();
                    crate::quadrature::integrate_piecewise(f, 0.0, 1.0, &breaks, 8, 16)
                })
                .collect();
            Some(FourierCoeffs { nonneg })
        }
        _ => None,
    }
}

/// Degree by composite midpoint quadrature; used where no closed form is wanted.
pub fn degree_by_quadrature(kernel: &GraphonKernel, x: f64, nodes: usize) -> f64 {
    midpoint_unit(|y| kernel.value(x, y), nodes)
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "family")]
enum KernelRepr {
    #[serde(rename = "constant")]
    Constant { p: f64 },
    #[serde(rename = "ring")]
    Ring {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fourier: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        edges: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<f64>>,
    },
    #[serde(rename = "smallworld")]
    SmallWorld { alpha: f64, p: f64, q: f64 },
    #[serde(rename = "bipartite")]
    Bipartite { alpha: f64, p: f64 },
    #[serde(rename = "step")]
    Step { values: Vec<Vec<f64>> },
}

impl TryFrom<KernelRepr> for GraphonKernel {
    type Error = Error;

    fn try_from(r: KernelRepr) -> Result<Self> {
        match r {
            KernelRepr::Constant { p } => GraphonKernel::constant(p),
            KernelRepr::SmallWorld { alpha, p, q } => GraphonKernel::small_world(alpha, p, q),
            KernelRepr::Bipartite { alpha, p } => GraphonKernel::bipartite(alpha, p),
            KernelRepr::Ring { fourier: Some(c), .. } => GraphonKernel::ring_fourier(c),
            KernelRepr::Ring { edges: Some(e), values: Some(v), .. } => GraphonKernel::ring_piecewise(e, v),
            KernelRepr::Ring { .. } => Err(Error::InvalidKernel(
                "ring kernel needs either `fourier` or `edges` + `values`".into(),
            )),
            KernelRepr::Step { values } => {
                let n = values.len();
                if values.iter().any(|r| r.len() != n) {
                    return Err(Error::InvalidMatrix("step values must be square".into()));
                }
                let m = DMatrix::from_fn(n, n, |i, j| values[i][j]);
                GraphonKernel::step(&m)
            }
        }
    }
}

impl From<GraphonKernel> for KernelRepr {
    fn from(k: GraphonKernel) -> Self {
        match k {
            GraphonKernel::Constant { p } => KernelRepr::Constant { p },
            GraphonKernel::SmallWorld { alpha, p, q } => KernelRepr::SmallWorld { alpha, p, q },
            GraphonKernel::Bipartite { alpha, p } => KernelRepr::Bipartite { alpha, p },
            GraphonKernel::Ring(RingProfile::Fourier(c)) => KernelRepr::Ring {
                fourier: Some(c),
                edges: None,
                values: None,
            },
            GraphonKernel::Ring(RingProfile::Piecewise { edges, values }) => KernelRepr::Ring {
                fourier: None,
                edges: Some(edges),
                values: Some(values),
            },
            GraphonKernel::Step(s) => {
                let n = s.n();
                KernelRepr::Step {
                    values: (0..n).map(|i| (0..n).map(|j| s.values[(i, j)]).collect()).collect(),
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn fig1_kernel() -> GraphonKernel {
        GraphonKernel::small_world(0.2, 1.0 / (0.4 * PI), 0.0).unwrap()
    }

    fn all_families() -> Vec<GraphonKernel> {
        let fig_ex = DMatrix::from_row_slice(
            4,
            4,
            &[0., 1., 1., 1., 1., 0., 1., 0., 1., 1., 0., 0., 1., 0., 0., 0.],
        );
        vec![
            GraphonKernel::constant(0.3).unwrap(),
            fig1_kernel(),
            GraphonKernel::small_world(0.35, 0.9, 0.1).unwrap(),
            GraphonKernel::bipartite(0.3, 0.5).unwrap(),
            GraphonKernel::step(&fig_ex).unwrap(),
            GraphonKernel::ring_fourier(vec![0.5, 0.2, 0.05]).unwrap(),
            GraphonKernel::ring_piecewise(vec![0.1, 0.3, 0.5], vec![1.0, 0.4, 0.0]).unwrap(),
        ]
    }

    #[test]
    fn smallworld_band_values() {
        let w = fig1_kernel();
        assert_abs_diff_eq!(w.eval(0.0, 0.1).unwrap(), 0.795_774_715_459_476_7, epsilon = 1e-12);
        assert_eq!(w.eval(0.0, 0.5).unwrap(), 0.0);
        // wraps around the circle
        assert_abs_diff_eq!(w.eval(0.05, 0.95).unwrap(), 1.0 / (0.4 * PI), epsilon = 1e-15);
    }

    #[test]
    fn eval_rejects_out_of_range() {
        let w = GraphonKernel::constant(0.5).unwrap();
        assert!(matches!(w.eval(1.5, 0.0), Err(Error::Domain { .. })));
        assert!(matches!(w.eval(0.0, -0.1), Err(Error::Domain { .. })));
    }

    #[test]
    fn constructors_validate_parameters() {
        assert!(GraphonKernel::constant(1.2).is_err());
        assert!(GraphonKernel::small_world(0.6, 0.5, 0.0).is_err());
        assert!(GraphonKernel::small_world(0.0, 0.5, 0.0).is_err());
        assert!(GraphonKernel::bipartite(1.0, 0.5).is_err());
        // a truncated band overshoots [0,1]
        let c = smallworld_fourier(0.1, 1.0, 0.0, 5);
        assert!(GraphonKernel::ring_fourier(c.nonnegative().to_vec()).is_err());
    }

    #[test]
    fn degree_closed_forms() {
        let d = degree(&GraphonKernel::constant(0.5).unwrap(), 7);
        assert!(d.values.iter().all(|&v| v == 0.5));

        let d = degree(&fig1_kernel(), 16);
        for v in &d.values {
            assert_abs_diff_eq!(*v, 1.0 / PI, epsilon = 1e-15);
        }

        let b = GraphonKernel::bipartite(0.3, 0.5).unwrap();
        assert_abs_diff_eq!(b.degree_at(0.1), 0.35, epsilon = 1e-15);
        assert_abs_diff_eq!(b.degree_at(0.9), 0.15, epsilon = 1e-15);
    }

    #[test]
    fn degree_matches_quadrature_oracle() {
        // high-resolution midpoint quadrature as the independent route
        for k in all_families() {
            for &x in &[0.0, 0.13, 0.29, 0.31, 0.5, 0.77, 0.99] {
                let oracle = degree_by_quadrature(&k, x, 200_000);
                assert_abs_diff_eq!(k.degree_at(x), oracle, epsilon = 2e-5);
            }
        }
    }

    #[test]
    fn ring_degree_is_constant_c0() {
        let k = GraphonKernel::ring_fourier(vec![0.5, 0.2, 0.05]).unwrap();
        for x in [0.0, 0.3, 0.71] {
            assert_abs_diff_eq!(degree_by_quadrature(&k, x, 100_000), 0.5, epsilon = 1e-6);
        }
    }

    #[test]
    fn step_embedding_is_identity() {
        let one = DMatrix::from_element(1, 1, 0.37);
        let s = step_from_matrix(&one).unwrap();
        assert_eq!(s.value(0.0, 0.99), 0.37);
        assert_eq!(s.value(1.0, 1.0), 0.37);

        let fig_ex = DMatrix::from_row_slice(
            4,
            4,
            &[0., 1., 1., 1., 1., 0., 1., 0., 1., 1., 0., 0., 1., 0., 0., 0.],
        );
        let s = step_from_matrix(&fig_ex).unwrap();
        assert_eq!(s.values(), &fig_ex);
        // pixel (row 1, col 4) is black
        assert_eq!(s.value(0.1, 0.8), 1.0);
        assert_eq!(s.value(0.8, 0.8), 0.0);
    }

    #[test]
    fn step_rejects_bad_matrices() {
        let asym = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(step_from_matrix(&asym).is_err());
        let big = DMatrix::from_row_slice(2, 2, &[0.0, 1.5, 1.5, 0.0]);
        assert!(step_from_matrix(&big).is_err());
    }

    #[test]
    fn continuity_modulus_examples() {
        let c = GraphonKernel::constant(0.4).unwrap();
        assert_eq!(continuity_modulus(&c, 0.1, 100).unwrap(), 0.0);

        let p = 0.7;
        let sw = GraphonKernel::small_world(0.2, p, 0.0).unwrap();
        for delta in [0.01, 0.05, 0.1] {
            let v = continuity_modulus(&sw, delta, 200).unwrap();
            assert!(v <= 2.0 * p * delta + 1e-2, "delta {delta}: {v}");
        }

        let b = GraphonKernel::bipartite(0.3, 0.5).unwrap();
        let v = continuity_modulus(&b, 0.01, 200).unwrap();
        assert_abs_diff_eq!(v, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn continuity_modulus_monotone_in_delta() {
        for k in all_families() {
            let mut prev = 0.0;
            for delta in [0.005, 0.01, 0.05, 0.1, 0.3] {
                let v = continuity_modulus(&k, delta, 80).unwrap();
                assert!(v + 1e-15 >= prev);
                prev = v;
            }
        }
    }

    #[test]
    fn fourier_coefficients() {
        let c = smallworld_fourier(0.2, 1.0 / (0.4 * PI), 0.0, 64);
        assert_abs_diff_eq!(c.get(0).unwrap(), 1.0 / PI, epsilon = 1e-15);
        for k in 1..=64 {
            assert_eq!(c.get(k), c.get(-k));
        }
        let flat = smallworld_fourier(0.3, 0.6, 0.6, 10);
        assert_abs_diff_eq!(flat.get(0).unwrap(), 0.6, epsilon = 1e-15);
        assert!((1..=10).all(|k| flat.get(k).unwrap() == 0.0));
        assert_eq!(c.to_symmetric_vec().len(), 129);
    }

    #[test]
    fn fourier_coefficients_match_quadrature() {
        let (alpha, p, q) = (0.2, 0.8, 0.1);
        let w = GraphonKernel::small_world(alpha, p, q).unwrap();
        let c = smallworld_fourier(alpha, p, q, 6);
        for k in 0..=6i64 {
            let f = |s: f64| w.value(s, 0.0) * (2.0 * PI * k as f64 * s).cos();
            let oracle = crate::quadrature::integrate_piecewise(f, 0.0, 1.0, &[alpha, 1.0 - alpha], 16, 16);
            assert_abs_diff_eq!(c.get(k).unwrap(), oracle, epsilon = 1e-12);
        }
    }

    #[test]
    fn json_config_roundtrip() {
        let json = r#"{"family": "smallworld", "alpha": 0.2, "p": 0.79577, "q": 0.0}"#;
        let k: GraphonKernel = serde_json::from_str(json).unwrap();
        assert_eq!(k, GraphonKernel::SmallWorld { alpha: 0.2, p: 0.79577, q: 0.0 });
        let back: GraphonKernel = serde_json::from_str(&serde_json::to_string(&k).unwrap()).unwrap();
        assert_eq!(back, k);
        let bad = r#"{"family": "constant", "p": 2.0}"#;
        assert!(serde_json::from_str::<GraphonKernel>(bad).is_err());
    }

    proptest! {
        #[test]
        fn kernels_symmetric_and_bounded(x in 0.0f64..=1.0, y in 0.0f64..=1.0) {
            for k in all_families() {
                let a = k.eval(x, y).unwrap();
                let b = k.eval(y, x).unwrap();
                prop_assert_eq!(a, b);
                prop_assert!((0.0..=1.0).contains(&a));
            }
        }
    }
}
