//! Dense LU solves and a 1-norm condition estimate.

use nalgebra::{DMatrix, DVector, LU, Dyn};

pub struct Factorization {
    lu: LU<f64, Dyn, Dyn>,
    lu_t: LU<f64, Dyn, Dyn>,
    norm1: f64,
}

pub fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

impl Factorization {
    pub fn new(m: &DMatrix<f64>) -> Self {
        Self { lu: m.clone().lu(), lu_t: m.transpose().lu(), norm1: norm1(m) }
    }

    pub fn solve(&self, b: &DVector<f64>) -> Option<DVector<f64>> {
        self.lu.solve(b).filter(|x| x.iter().all(|v| v.is_finite()))
    }

    fn solve_t(&self, b: &DVector<f64>) -> Option<DVector<f64>> {
        self.lu_t.solve(b).filter(|x| x.iter().all(|v| v.is_finite()))
    }

    /// Hager-Higham estimate of `||M||_1 ||M^{-1}||_1`; infinite when a
    /// solve breaks down.
    pub fn condition_estimate(&self) -> f64 {
        let n = self.lu.l().nrows();
        if n == 0 {
            return 1.0;
        }
        let l1 = |v: &DVector<f64>| v.iter().map(|x| x.abs()).sum::<f64>();
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        let mut est: f64 = 0.0;
        for _ in 0..5 {
            let Some(y) = self.solve(&x) else { return f64::INFINITY };
            est = est.max(l1(&y));
            let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let Some(z) = self.solve_t(&xi) else { return f64::INFINITY };
            let (j, zmax) = z.iter().enumerate().fold((0, 0.0), |(bj, bv), (j, v)| {
                if v.abs() > bv {
                    (j, v.abs())
                } else {
                    (bj, bv)
                }
            });
            if zmax <= z.dot(&x) {
                break;
            }
            x = DVector::zeros(n);
            x[j] = 1.0;
        }
        let alt = DVector::from_fn(n, |i, _| {
            let s = if i % 2 == 0 { 1.0 } else { -1.0 };
            s * (1.0 + i as f64 / (n.max(2) - 1) as f64)
        });
        if let Some(y) = self.solve(&alt) {
            est = est.max(2.0 * l1(&y) / (3.0 * n as f64));
        }
        est * self.norm1
    }
}
