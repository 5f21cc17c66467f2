//! Piecewise-constant functions on a partition of `[0,1]`.

use serde::{Deserialize, Serialize};

/// Left endpoints `x_i = (i-1)/n` of the uniform partition `I_n`.
pub fn uniform_points(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 / n as f64).collect()
}

/// A function constant on each cell of a partition of `[0,1]`, stored as one
/// value per cell together with the cell's left endpoint.
///
/// Most functions live on the uniform partition; the bipartite-aligned
/// discretization uses a non-uniform one, which is why the points are kept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub points: Vec<f64>,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn uniform(values: Vec<f64>) -> Self {
        let points = uniform_points(values.len());
        Self { points, values }
    }

    pub fn from_fn(points: Vec<f64>, f: impl Fn(f64) -> f64) -> Self {
        let values = points.iter().map(|&x| f(x)).collect();
        Self { points, values }
    }

    pub fn constant_on(points: Vec<f64>, c: f64) -> Self {
        let values = vec![c; points.len()];
        Self { points, values }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::uniform(vec![c; n])
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn sup_norm(&self) -> f64 {
        sup_norm(&self.values)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Whether `other` lives on the same partition.
    pub fn same_grid(&self, points: &[f64]) -> bool {
        self.points.len() == points.len()
            && self.points.iter().zip(points).all(|(a, b)| (a - b).abs() <= 1e-14)
    }
}

pub fn sup_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.iter().sum::<f64>() / v.len() as f64
}

/// Subtract the mean in place.
pub fn project_mean_zero(v: &mut [f64]) {
    let m = mean(v);
    v.iter_mut().for_each(|x| *x -= m);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grid_left_endpoints() {
        assert_eq!(uniform_points(4), vec![0.0, 0.25, 0.5, 0.75]);
    }

    #[test]
    fn projection_removes_mean() {
        let mut v = vec![1.0, 2.0, 6.0];
        project_mean_zero(&mut v);
        assert!(mean(&v).abs() < 1e-15);
        assert_eq!(v, vec![-2.0, -1.0, 3.0]);
    }
}
