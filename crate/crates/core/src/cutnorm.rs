//! Cut norm `sup_{S,T} |sum_{S x T} M| / n^2` and its `[-1,1]`-valued variant.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `n` accepted by the exhaustive cut-norm search.
pub const BRUTE_FORCE_MAX: usize = 22;
/// `Auto` mode enumerates exhaustively up to this size.
pub const AUTO_BRUTE_MAX: usize = 16;
/// Largest `n` for which the sign-vector variant is enumerated exactly.
pub const BRUTE_FORCE_2_MAX: usize = 20;
pub const DEFAULT_RESTARTS: usize = 64;

const HEURISTIC_SEED: u64 = 0x6375_746e_6f72_6d00;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutNormMethod {
    BruteForce,
    AlternatingHeuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum CutNormMode {
    #[default]
    Auto,
    BruteForce,
    Heuristic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutNormEstimate {
    pub lower: f64,
    pub upper: f64,
    pub exact: Option<f64>,
    pub method: CutNormMethod,
}

impl CutNormEstimate {
    /// The exact value when known, otherwise the certified lower bound.
    pub fn value(&self) -> f64 {
        self.exact.unwrap_or(self.lower)
    }
}

fn check_square(m: &DMatrix<f64>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::Shape { expected: m.nrows(), got: m.ncols() });
    }
    Ok(m.nrows())
}

/// `||M||_1 / n^2`, the entrywise mean absolute value.
pub fn l1_upper(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows().max(1) as f64;
    m.iter().map(|v| v.abs()).sum::<f64>() / (n * n)
}

#[inline]
fn best_t(colsum: &[f64]) -> f64 {
    let (mut pos, mut neg) = (0.0, 0.0);
    for &c in colsum {
        if c > 0.0 {
            pos += c;
        } else {
            neg -= c;
        }
    }
    pos.max(neg)
}

/// Exhaustive search over row subsets `S` in Gray-code order; the optimal `T`
/// for fixed `S` keeps every column whose partial sum has the winning sign.
fn brute_force_raw(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut colsum = vec![0.0; n];
    let mut in_s = vec![false; n];
    let mut best: f64 = 0.0;
    for k in 1u64..(1u64 << n) {
        let i = k.trailing_zeros() as usize;
        let sign = if in_s[i] { -1.0 } else { 1.0 };
        in_s[i] = !in_s[i];
        for (j, c) in colsum.iter_mut().enumerate() {
            *c += sign * m[(i, j)];
        }
        best = best.max(best_t(&colsum));
    }
    best
}

fn ascent_from(m: &DMatrix<f64>, mut s: Vec<bool>, sign: f64) -> f64 {
    let n = m.nrows();
    let mut best = f64::NEG_INFINITY;
    let mut t = vec![false; n];
    for _ in 0..4 * n + 8 {
        let mut colsum = vec![0.0; n];
        for i in (0..n).filter(|&i| s[i]) {
            for j in 0..n {
                colsum[j] += m[(i, j)];
            }
        }
        for j in 0..n {
            t[j] = sign * colsum[j] > 0.0;
        }
        let mut rowsum = vec![0.0; n];
        for j in (0..n).filter(|&j| t[j]) {
            for i in 0..n {
                rowsum[i] += m[(i, j)];
            }
        }
        for i in 0..n {
            s[i] = sign * rowsum[i] > 0.0;
        }
        let val: f64 = (0..n).filter(|&i| s[i]).map(|i| sign * rowsum[i]).sum();
        if val <= best + 1e-15 * best.abs().max(1.0) {
            best = best.max(val);
            break;
        }
        best = val;
    }
    best.max(0.0)
}

fn heuristic_raw(m: &DMatrix<f64>, restarts: usize) -> f64 {
    let n = m.nrows();
    (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(HEURISTIC_SEED);
            rng.set_stream(r);
            let s: Vec<bool> = if r == 0 { vec![true; n] } else { (0..n).map(|_| rng.random()).collect() };
            ascent_from(m, s.clone(), 1.0).max(ascent_from(m, s, -1.0))
        })
        .reduce(|| 0.0, f64::max)
}

/// Normalized cut norm of a square matrix.
pub fn cutnorm(m: &DMatrix<f64>, mode: CutNormMode, restarts: usize) -> Result<CutNormEstimate> {
    let n = check_square(m)?;
    let upper = l1_upper(m);
    if n == 0 {
        return Ok(CutNormEstimate { lower: 0.0, upper: 0.0, exact: Some(0.0), method: CutNormMethod::BruteForce });
    }
    let brute = match mode {
        CutNormMode::BruteForce if n > BRUTE_FORCE_MAX => {
            return Err(Error::TooLarge { n, max: BRUTE_FORCE_MAX })
        }
        CutNormMode::BruteForce => true,
        CutNormMode::Auto => n <= AUTO_BRUTE_MAX,
        CutNormMode::Heuristic => false,
    };
    let nn = (n * n) as f64;
    if brute {
        let exact = (brute_force_raw(m) / nn).min(upper);
        Ok(CutNormEstimate { lower: exact, upper, exact: Some(exact), method: CutNormMethod::BruteForce })
    } else {
        let lower = (heuristic_raw(m, restarts) / nn).min(upper);
        Ok(CutNormEstimate { lower, upper, exact: None, method: CutNormMethod::AlternatingHeuristic })
    }
}

fn sign_brute_raw(m: &DMatrix<f64>) -> f64 {
    // f_0 = +1 without loss of generality; the objective is even in (f, g).
    let n = m.nrows();
    let mut colsum: Vec<f64> = (0..n).map(|j| m.column(j).sum()).collect();
    let abs_sum = |c: &[f64]| c.iter().map(|v| v.abs()).sum::<f64>();
    let mut flipped = vec![false; n];
    let mut best = abs_sum(&colsum);
    for k in 1u64..(1u64 << (n - 1)) {
        let i = 1 + k.trailing_zeros() as usize;
        let delta = if flipped[i] { 2.0 } else { -2.0 };
        flipped[i] = !flipped[i];
        for (j, c) in colsum.iter_mut().enumerate() {
            *c += delta * m[(i, j)];
        }
        best = best.max(abs_sum(&colsum));
    }
    best
}

fn sign_ascent_raw(m: &DMatrix<f64>, restarts: usize) -> f64 {
    let n = m.nrows();
    (0..restarts.max(1) as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(HEURISTIC_SEED ^ 0x2);
            rng.set_stream(r);
            let mut f: Vec<f64> = (0..n).map(|_| if rng.random() { 1.0 } else { -1.0 }).collect();
            let mut best = f64::NEG_INFINITY;
            for _ in 0..4 * n + 8 {
                let g: Vec<f64> = (0..n)
                    .map(|j| if (0..n).map(|i| f[i] * m[(i, j)]).sum::<f64>() >= 0.0 { 1.0 } else { -1.0 })
                    .collect();
                let mg: Vec<f64> = (0..n).map(|i| (0..n).map(|j| m[(i, j)] * g[j]).sum()).collect();
                f = mg.iter().map(|v| if *v >= 0.0 { 1.0 } else { -1.0 }).collect();
                let val: f64 = mg.iter().map(|v| v.abs()).sum();
                if val <= best + 1e-15 * best.abs().max(1.0) {
                    best = best.max(val);
                    break;
                }
                best = val;
            }
            best
        })
        .reduce(|| 0.0, f64::max)
}

/// `sup_{f,g in [-1,1]^n} |f^T M g| / n^2`. The optimum sits at sign vectors,
/// which are enumerated for `n <= BRUTE_FORCE_2_MAX`.
pub fn cutnorm_2(m: &DMatrix<f64>, restarts: usize) -> Result<CutNormEstimate> {
    let n = check_square(m)?;
    let upper = 4.0 * l1_upper(m);
    if n == 0 {
        return Ok(CutNormEstimate { lower: 0.0, upper: 0.0, exact: Some(0.0), method: CutNormMethod::BruteForce });
    }
    let nn = (n * n) as f64;
    if n <= BRUTE_FORCE_2_MAX {
        let exact = sign_brute_raw(m) / nn;
        Ok(CutNormEstimate { lower: exact, upper, exact: Some(exact), method: CutNormMethod::BruteForce })
    } else {
        let lower = sign_ascent_raw(m, restarts) / nn;
        Ok(CutNormEstimate { lower, upper, exact: None, method: CutNormMethod::AlternatingHeuristic })
    }
}
