//! Eigenvalues of linearizations and stability verdicts.

use std::ops::RangeInclusive;

use nalgebra::{linalg::balancing::balance_parlett_reinsch, DMatrix, DVector, Hessenberg};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::cutnorm::{cutnorm, l1_upper, CutNormMode, AUTO_BRUTE_MAX};
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::kernel::FourierCoeffs;
use crate::linalg::{norm1, Factorization};
use crate::operators::{LinearizedOperator, OperatorKind};
use crate::solver::Gauge;

pub const DEFAULT_MARGIN: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectrumSource {
    ContinuumFrozen,
    DiscreteJacobian,
    RingAnalytic,
}

impl From<OperatorKind> for SpectrumSource {
    fn from(k: OperatorKind) -> Self {
        match k {
            OperatorKind::ContinuumFrozen => SpectrumSource::ContinuumFrozen,
            OperatorKind::DiscreteJacobian => SpectrumSource::DiscreteJacobian,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Verdict {
    Stable { gap: f64 },
    Unstable { count: usize },
    Marginal,
}

impl Verdict {
    pub fn is_stable(&self) -> bool {
        matches!(self, Verdict::Stable { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<Complex64>,
    pub essential_interval: (f64, f64),
    pub gauge_modes_excluded: usize,
    pub verdict: Verdict,
    pub source: SpectrumSource,
}

impl SpectrumReport {
    /// Largest real part among eigenvalues that were not excluded as gauge modes.
    pub fn max_real_part(&self) -> f64 {
        match self.verdict {
            Verdict::Stable { gap } => -gap,
            _ => self.eigenvalues.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

fn sort_spectrum(v: &mut [Complex64]) {
    v.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// All eigenvalues of a real square matrix: balancing, Householder reduction
/// to Hessenberg form, then Francis double-shift QR. Sorted by real part,
/// then imaginary part, both descending.
pub fn eigenvalues_dense(m: &DMatrix<f64>) -> Result<Vec<Complex64>> {
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Shape { expected: n, got: m.ncols() });
    }
    if n == 0 {
        return Ok(vec![]);
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidMatrix("non-finite entry".into()));
    }
    let mut b = m.clone();
    balance_parlett_reinsch(&mut b);
    let h = Hessenberg::new(b).h();
    let mut a: Vec<f64> = (0..n * n).map(|k| h[(k / n, k % n)]).collect();
    let mut eigs = hqr(&mut a, n).ok_or(Error::EigenNonConvergence { n, norm: norm1(m) })?;
    sort_spectrum(&mut eigs);
    Ok(eigs)
}

/// Eigenvalues of an upper Hessenberg matrix stored row-major, destroying it.
fn hqr(a: &mut [f64], n: usize) -> Option<Vec<Complex64>> {
    const MAX_ITS: usize = 60;
    let idx = |i: usize, j: usize| i * n + j;
    let sign = |a: f64, b: f64| if b >= 0.0 { a.abs() } else { -a.abs() };
    let eps = f64::EPSILON;
    let mut wr = vec![Complex64::new(0.0, 0.0); n];
    let mut anorm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            anorm += a[idx(i, j)].abs();
        }
    }
    let mut nn = n as isize - 1;
    let mut t = 0.0;
    while nn >= 0 {
        let mut its = 0;
        loop {
            let nu = nn as usize;
            let mut l = nu;
            while l > 0 {
                let mut s = a[idx(l - 1, l - 1)].abs() + a[idx(l, l)].abs();
                if s == 0.0 {
                    s = anorm;
                }
                if a[idx(l, l - 1)].abs() <= eps * s {
                    a[idx(l, l - 1)] = 0.0;
                    break;
                }
                l -= 1;
            }
            let mut x = a[idx(nu, nu)];
            if l == nu {
                wr[nu] = Complex64::new(x + t, 0.0);
                nn -= 1;
                break;
            }
            let mut y = a[idx(nu - 1, nu - 1)];
            let mut w = a[idx(nu, nu - 1)] * a[idx(nu - 1, nu)];
            if l == nu - 1 {
                let p = 0.5 * (y - x);
                let q = p * p + w;
                let z = q.abs().sqrt();
                x += t;
                if q >= 0.0 {
                    let z = p + sign(z, p);
                    wr[nu - 1] = Complex64::new(x + z, 0.0);
                    wr[nu] = if z != 0.0 { Complex64::new(x - w / z, 0.0) } else { wr[nu - 1] };
                } else {
                    wr[nu] = Complex64::new(x + p, -z);
                    wr[nu - 1] = wr[nu].conj();
                }
                nn -= 2;
                break;
            }
            if its == MAX_ITS {
                return None;
            }
            if its == 10 || its == 20 || its == 40 {
                // exceptional shift
                t += x;
                for i in 0..=nu {
                    a[idx(i, i)] -= x;
                }
                let s = a[idx(nu, nu - 1)].abs() + a[idx(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            its += 1;
            let (mut p, mut q, mut r, mut z);
            let mut m = nu - 2;
            loop {
                z = a[idx(m, m)];
                let rr = x - z;
                let ss = y - z;
                p = (rr * ss - w) / a[idx(m + 1, m)] + a[idx(m, m + 1)];
                q = a[idx(m + 1, m + 1)] - z - rr - ss;
                r = a[idx(m + 2, m + 1)];
                let s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let u = a[idx(m, m - 1)].abs() * (q.abs() + r.abs());
                let v = p.abs() * (a[idx(m - 1, m - 1)].abs() + z.abs() + a[idx(m + 1, m + 1)].abs());
                if u <= eps * v {
                    break;
                }
                m -= 1;
            }
            for i in m..nu - 1 {
                a[idx(i + 2, i)] = 0.0;
                if i != m {
                    a[idx(i + 2, i - 1)] = 0.0;
                }
            }
            for k in m..nu {
                if k != m {
                    p = a[idx(k, k - 1)];
                    q = a[idx(k + 1, k - 1)];
                    r = if k + 1 != nu { a[idx(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x != 0.0 {
                        p /= x;
                        q /= x;
                        r /= x;
                    }
                }
                let s = sign((p * p + q * q + r * r).sqrt(), p);
                if s == 0.0 {
                    continue;
                }
                if k == m {
                    if l != m {
                        a[idx(k, k - 1)] = -a[idx(k, k - 1)];
                    }
                } else {
                    a[idx(k, k - 1)] = -s * x;
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;
                for j in k..=nu {
                    let mut pp = a[idx(k, j)] + q * a[idx(k + 1, j)];
                    if k + 1 != nu {
                        pp += r * a[idx(k + 2, j)];
                        a[idx(k + 2, j)] -= pp * z;
                    }
                    a[idx(k + 1, j)] -= pp * y;
                    a[idx(k, j)] -= pp * x;
                }
                let mmin = nu.min(k + 3);
                for i in l..=mmin {
                    let mut pp = x * a[idx(i, k)] + y * a[idx(i, k + 1)];
                    if k + 1 != nu {
                        pp += z * a[idx(i, k + 2)];
                        a[idx(i, k + 2)] -= pp * r;
                    }
                    a[idx(i, k + 1)] -= pp * q;
                    a[idx(i, k)] -= pp;
                }
            }
            if (l as isize) + 1 >= nn {
                break;
            }
        }
    }
    Some(wr)
}

/// `lambda_l = pi (c_{l+m} + c_{l-m} - 2 c_m)` for the m-twisted Kuramoto state.
pub fn ring_twisted_eigenvalues(coeffs: &FourierCoeffs, m: i64, ells: RangeInclusive<i64>) -> Result<Vec<(i64, f64)>> {
    let c = |k: i64| {
        coeffs.get(k).ok_or_else(|| {
            Error::Parameter(format!("Fourier coefficient c_{k} missing (have |k| <= {})", coeffs.max_index()))
        })
    };
    ells.map(|l| Ok((l, PI * (c(l + m)? + c(l - m)? - 2.0 * c(m)?))))
        .collect()
}

/// `Rng(-Q)` on the grid.
pub fn essential_spectrum(q: &GridFunction) -> (f64, f64) {
    (-q.max(), -q.min())
}

/// Inverse iteration near `shift`; returns a unit eigenvector estimate.
fn eigvec_near(m: &DMatrix<f64>, shift: f64) -> Option<DVector<f64>> {
    let n = m.nrows();
    let scale = norm1(m).max(1.0);
    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)] -= shift - 1e-9 * scale;
    }
    let fact = Factorization::new(&a);
    let mut rng = ChaCha8Rng::seed_from_u64(0x6761_7567);
    let mut x = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
    for _ in 0..4 {
        let y = fact.solve(&x)?;
        let nrm = y.norm();
        if !(nrm > 0.0) {
            return None;
        }
        x = y / nrm;
    }
    Some(x)
}

fn is_constant_vector(v: &DVector<f64>) -> bool {
    let n = v.len() as f64;
    let mean = v.sum() / n;
    let ms = v.norm_squared() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    ms > 0.0 && var <= 1e-6 * ms
}

/// Classify stability from a spectrum. Under the mean-zero gauge exactly one
/// eigenvalue near zero with a constant eigenvector is set aside; `matrix`
/// is required to check the eigenvector.
pub fn stability_verdict(
    eigenvalues: &[Complex64],
    essential: (f64, f64),
    matrix: Option<&DMatrix<f64>>,
    gauge: Gauge,
    margin: f64,
    source: SpectrumSource,
) -> Result<SpectrumReport> {
    if !(margin > 0.0) {
        return Err(Error::Parameter(format!("margin = {margin} must be positive")));
    }
    let mut eigs = eigenvalues.to_vec();
    sort_spectrum(&mut eigs);
    let mut excluded = 0;
    if gauge == Gauge::MeanZero {
        let m = matrix.ok_or_else(|| Error::Gauge("the matrix is needed to identify the gauge mode".into()))?;
        let tol = 1e-6 * norm1(m).max(1.0);
        let idx = eigs
            .iter()
            .enumerate()
            .filter(|(_, z)| z.norm() <= tol)
            .min_by(|(_, a), (_, b)| a.norm().total_cmp(&b.norm()).then(a.re.total_cmp(&b.re)).then(a.im.total_cmp(&b.im)))
            .map(|(i, _)| i)
            .ok_or_else(|| Error::Gauge(format!("no eigenvalue within {tol:.1e} of zero")))?;
        let v = eigvec_near(m, eigs[idx].re)
            .ok_or_else(|| Error::Gauge("inverse iteration broke down".into()))?;
        if !is_constant_vector(&v) {
            return Err(Error::Gauge("the eigenvector nearest zero is not constant".into()));
        }
        eigs.remove(idx);
        excluded = 1;
    }
    let max_re = eigs.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    let verdict = if max_re < -margin && essential.1 < -margin {
        Verdict::Stable { gap: -max_re }
    } else {
        let count = eigs.iter().filter(|z| z.re > margin).count();
        if count > 0 {
            Verdict::Unstable { count }
        } else if essential.1 > margin {
            Verdict::Unstable { count: 0 }
        } else {
            Verdict::Marginal
        }
    };
    Ok(SpectrumReport { eigenvalues: eigs, essential_interval: essential, gauge_modes_excluded: excluded, verdict, source })
}

/// Eigenvalues, essential interval `Rng(-Q)` and verdict for a linearization.
pub fn analyze(op: &LinearizedOperator, gauge: Gauge, margin: f64) -> Result<SpectrumReport> {
    let eigs = eigenvalues_dense(&op.matrix)?;
    let q = &op.q_values;
    let ess = (
        -q.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        -q.iter().copied().fold(f64::INFINITY, f64::min),
    );
    stability_verdict(&eigs, ess, Some(&op.matrix), gauge, margin, op.kind.into())
}

/// Symmetric Hausdorff distance between two finite sets in the complex plane.
pub fn spectral_distance(a: &[Complex64], b: &[Complex64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Parameter("spectral distance needs nonempty sets".into()));
    }
    let directed = |x: &[Complex64], y: &[Complex64]| {
        x.iter()
            .map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(a, b).max(directed(b, a)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwBound {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// Compares `||T_W||_{2->2}` of the step kernel with matrix `m_diff` against
/// `2 sqrt(2) ||W||_cut^{1/2}`, using a certified upper bound for the cut norm.
pub fn tw_opnorm_bound_check(m_diff: &DMatrix<f64>) -> Result<TwBound> {
    let n = m_diff.nrows();
    if m_diff.ncols() != n {
        return Err(Error::Shape { expected: n, got: m_diff.ncols() });
    }
    if n == 0 {
        return Ok(TwBound { lhs: 0.0, rhs: 0.0, ok: true });
    }
    let sigma = m_diff.clone().svd(false, false).singular_values.max();
    let lhs = sigma / n as f64;
    let cut_upper = if n <= AUTO_BRUTE_MAX {
        cutnorm(m_diff, CutNormMode::BruteForce, 1)?.value()
    } else {
        l1_upper(m_diff)
    };
    let rhs = 2.0 * 2f64.sqrt() * cut_upper.sqrt();
    Ok(TwBound { lhs, rhs, ok: lhs <= rhs + 1e-12 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{smallworld_fourier, GraphonKernel};
    use crate::models::{kuramoto, kuramoto_twisted_state, lotka_volterra, lv_steady, wc_homogeneous_roots, wilson_cowan};
    use crate::operators::{discrete_jacobian, frozen_jacobian, q_function};
    use crate::sampling::{sample_deterministic, sample_random};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig, Just, Strategy};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn diagonal_and_rotation() {
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, -2.0, 3.0]));
        let e = eigenvalues_dense(&d).unwrap();
        assert_eq!(e, vec![c(3.0, 0.0), c(-1.0, 0.0), c(-2.0, 0.0)]);
        let r = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let e = eigenvalues_dense(&r).unwrap();
        assert!((e[0] - c(0.0, 1.0)).norm() < 1e-14 && (e[1] - c(0.0, -1.0)).norm() < 1e-14);
    }

    #[test]
    fn trace_and_determinant() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let m = DMatrix::from_fn(8, 8, |_, _| rng.random_range(-1.0..1.0));
            let e = eigenvalues_dense(&m).unwrap();
            let sum: Complex64 = e.iter().sum();
            let prod: Complex64 = e.iter().product();
            assert!((sum - c(m.trace(), 0.0)).norm() <= 1e-8);
            let det = m.determinant();
            assert!((prod - c(det, 0.0)).norm() <= 1e-6 * det.abs().max(1e-300));
        }
    }

    #[test]
    fn agrees_with_library_schur() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for n in [5, 37, 120] {
            let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
            let ours = eigenvalues_dense(&m).unwrap();
            let theirs: Vec<Complex64> = nalgebra::Schur::try_new(m.clone(), 1e-13, 0)
                .unwrap()
                .complex_eigenvalues()
                .iter()
                .copied()
                .collect();
            assert!(spectral_distance(&ours, &theirs).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn companion_matrix_roots() {
        // (x-1)(x-2)(x-3)(x^2+1)
        let coeffs = [-6.0, 11.0, -12.0, 12.0, -6.0];
        let mut m = DMatrix::zeros(5, 5);
        for i in 1..5 {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..5 {
            m[(i, 4)] = -coeffs[i];
        }
        let e = eigenvalues_dense(&m).unwrap();
        let expect = [c(3.0, 0.0), c(2.0, 0.0), c(1.0, 0.0), c(0.0, 1.0), c(0.0, -1.0)];
        for (a, b) in e.iter().zip(expect) {
            assert!((a - b).norm() <= 1e-9, "{e:?}");
        }
    }

    #[test]
    fn conjugate_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let m = DMatrix::from_fn(30, 30, |_, _| rng.random_range(-1.0..1.0));
        let e = eigenvalues_dense(&m).unwrap();
        for z in &e {
            assert!(e.iter().any(|w| (w - z.conj()).norm() <= 1e-8));
        }
    }

    #[test]
    fn ring_eigenvalues() {
        let coeffs = smallworld_fourier(0.2, 1.0 / (0.4 * PI), 0.0, 64);
        for m in 0..4 {
            let l0 = ring_twisted_eigenvalues(&coeffs, m, 0..=0).unwrap();
            assert_abs_diff_eq!(l0[0].1, 0.0, epsilon = 1e-15);
        }
        let mut flat = vec![0.0; 10];
        flat[0] = 0.4;
        let flat = FourierCoeffs::from_nonnegative(flat);
        for (l, lam) in ring_twisted_eigenvalues(&flat, 2, -5..=5).unwrap() {
            let expect = if l.abs() == 2 { PI * 0.4 } else { 0.0 };
            assert_abs_diff_eq!(lam, expect, epsilon = 1e-15);
        }
        assert!(ring_twisted_eigenvalues(&flat, 2, 0..=9).is_err());
    }

    #[test]
    fn ring_eigenvalue_signs_on_the_figure_kernel() {
        // computed directly from the formula: m = 1 is linearly stable, m = 2 is not
        let coeffs = smallworld_fourier(0.2, 1.0 / (0.4 * PI), 0.0, 64);
        let nonzero = |m| {
            ring_twisted_eigenvalues(&coeffs, m, -50..=50)
                .unwrap()
                .into_iter()
                .filter(|(l, _)| *l != 0)
                .map(|(_, v)| v)
                .collect::<Vec<_>>()
        };
        assert!(nonzero(1).iter().all(|&v| v < 0.0));
        let m2 = nonzero(2);
        assert!(m2.iter().any(|&v| v > 0.0));
        let l1 = ring_twisted_eigenvalues(&coeffs, 2, 1..=1).unwrap()[0].1;
        assert!(l1 > 0.1, "{l1}");
    }

    #[test]
    fn essential_examples() {
        let lv = lotka_volterra(1.0, false).unwrap();
        let u = GridFunction::constant(20, lv_steady(0.5, 1.0));
        let q = q_function(&lv, &GraphonKernel::constant(0.5).unwrap(), &u);
        let (lo, hi) = essential_spectrum(&q);
        assert_abs_diff_eq!(lo, -2.0 / 3.0, epsilon = 1e-14);
        assert_abs_diff_eq!(hi, -2.0 / 3.0, epsilon = 1e-14);
        let wc = wilson_cowan(1.0, 1.0, 1.0).unwrap();
        let q = q_function(&wc, &GraphonKernel::constant(0.5).unwrap(), &GridFunction::constant(5, 0.15));
        assert_eq!(essential_spectrum(&q), (-1.0, -1.0));
    }

    #[test]
    fn lv_two_point_spectrum() {
        let (p, lambda, n) = (0.5, 1.0, 60);
        let k = GraphonKernel::constant(p).unwrap();
        let u = GridFunction::constant(n, lv_steady(p, lambda));
        let op = frozen_jacobian(&lotka_volterra(lambda, false).unwrap(), &k, &u);
        let e = eigenvalues_dense(&op.matrix).unwrap();
        let near = |t: f64| e.iter().filter(|z| (*z - c(t, 0.0)).norm() <= 1e-8).count();
        assert_eq!(near(-1.0), 1);
        assert_eq!(near(-2.0 / 3.0), n - 1);
        let rep = analyze(&op, Gauge::None, DEFAULT_MARGIN).unwrap();
        assert!(matches!(rep.verdict, Verdict::Stable { gap } if (gap - 2.0 / 3.0).abs() < 1e-8));
    }

    #[test]
    fn verdict_simple_cases() {
        let e = vec![c(-0.5, 0.0), c(-2.0, 0.0)];
        let r = stability_verdict(&e, (-1.0, -1.0), None, Gauge::None, DEFAULT_MARGIN, SpectrumSource::RingAnalytic).unwrap();
        assert_eq!(r.verdict, Verdict::Stable { gap: 0.5 });
        let e = vec![c(0.5, 0.0), c(0.1, 1.0), c(0.1, -1.0), c(-1.0, 0.0)];
        let r = stability_verdict(&e, (-1.0, -1.0), None, Gauge::None, DEFAULT_MARGIN, SpectrumSource::RingAnalytic).unwrap();
        assert_eq!(r.verdict, Verdict::Unstable { count: 3 });
        let e = vec![c(0.0, 0.0), c(-1.0, 0.0)];
        let r = stability_verdict(&e, (-1.0, -1.0), None, Gauge::None, DEFAULT_MARGIN, SpectrumSource::RingAnalytic).unwrap();
        assert_eq!(r.verdict, Verdict::Marginal);
        assert!(stability_verdict(&e, (-1.0, -1.0), None, Gauge::MeanZero, DEFAULT_MARGIN, SpectrumSource::RingAnalytic).is_err());
    }

    #[test]
    fn kuramoto_gauge_mode_is_excluded() {
        let k = GraphonKernel::small_world(0.2, 1.0 / (0.4 * PI), 0.0).unwrap();
        let g = sample_deterministic(&k, 100);
        let u = kuramoto_twisted_state(1, 100);
        let op = discrete_jacobian(&kuramoto(), &g, &u.values).unwrap();
        let rep = analyze(&op, Gauge::MeanZero, DEFAULT_MARGIN).unwrap();
        assert_eq!(rep.gauge_modes_excluded, 1);
        assert!(rep.verdict.is_stable(), "{:?}", rep.verdict);
        assert_eq!(rep.eigenvalues.len(), 99);
    }

    #[test]
    fn gauge_requires_a_constant_eigenvector() {
        // a zero eigenvalue whose eigenvector is e_1, not constant
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, -1.0, -2.0]));
        let e = eigenvalues_dense(&m).unwrap();
        let err = stability_verdict(&e, (-1.0, -1.0), Some(&m), Gauge::MeanZero, DEFAULT_MARGIN, SpectrumSource::DiscreteJacobian);
        assert!(matches!(err, Err(Error::Gauge(_))));
    }

    #[test]
    fn wc_middle_branch_is_unstable() {
        let roots = wc_homogeneous_roots(0.5, 22.0, 4.0, 1.0).unwrap();
        let mid = roots[1];
        assert!(mid.r > 1.0);
        let k = GraphonKernel::constant(0.5).unwrap();
        let op = frozen_jacobian(&wilson_cowan(22.0, 4.0, 1.0).unwrap(), &k, &GridFunction::constant(40, mid.u));
        let rep = analyze(&op, Gauge::None, DEFAULT_MARGIN).unwrap();
        assert_eq!(rep.verdict, Verdict::Unstable { count: 1 });
        assert_abs_diff_eq!(rep.eigenvalues[0].re, mid.r - 1.0, epsilon = 1e-9);
    }

    #[test]
    fn hausdorff_examples() {
        let a = vec![c(1.0, 2.0), c(-3.0, 0.5)];
        assert_eq!(spectral_distance(&a, &a).unwrap(), 0.0);
        assert_eq!(spectral_distance(&[c(0.0, 0.0)], &[c(3.0, 0.0), c(0.0, 4.0)]).unwrap(), 4.0);
        assert!(spectral_distance(&[], &a).is_err());
    }

    #[test]
    fn tw_bound_examples() {
        let z = tw_opnorm_bound_check(&DMatrix::zeros(5, 5)).unwrap();
        assert!(z.ok && z.lhs == 0.0 && z.rhs == 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [4, 9, 16] {
            for _ in 0..5 {
                let m = DMatrix::from_fn(n, n, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 });
                let m = (&m + m.transpose()) * 0.5;
                assert!(tw_opnorm_bound_check(&m).unwrap().ok);
            }
        }
        let g = sample_random(&GraphonKernel::constant(0.5).unwrap(), 256, 1);
        let diff = g.adjacency.map(|a| a - 0.5);
        assert!(tw_opnorm_bound_check(&diff).unwrap().ok);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn verdict_is_permutation_invariant(
            perm in Just((0..6usize).collect::<Vec<_>>()).prop_shuffle(),
            shift in -0.5f64..0.5,
        ) {
            let base = [c(shift, 0.0), c(-1.0, 0.3), c(-1.0, -0.3), c(-0.2 + shift, 0.0), c(-3.0, 0.0), c(0.1 * shift, 0.0)];
            let perm_eigs: Vec<Complex64> = perm.iter().map(|&i| base[i]).collect();
            let a = stability_verdict(&base, (-1.0, -1.0), None, Gauge::None, DEFAULT_MARGIN, SpectrumSource::RingAnalytic).unwrap();
            let b = stability_verdict(&perm_eigs, (-1.0, -1.0), None, Gauge::None, DEFAULT_MARGIN, SpectrumSource::RingAnalytic).unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn eigenvalue_sum_is_trace(seed in 0u64..1000, n in 1usize..24) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = DMatrix::from_fn(n, n, |_, _| rng.random_range(-2.0..2.0));
            let e = eigenvalues_dense(&m).unwrap();
            let s: Complex64 = e.iter().sum();
            prop_assert!((s.re - m.trace()).abs() <= 1e-8 * (1.0 + norm1(&m)));
            prop_assert!(s.im.abs() <= 1e-8 * (1.0 + norm1(&m)));
        }
    }
}
