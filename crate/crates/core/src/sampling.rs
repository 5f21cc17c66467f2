//! Deterministic and random graphs drawn from a kernel, plus convergence
//! diagnostics against the generating kernel.

use nalgebra::DMatrix;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cutnorm::{cutnorm, CutNormEstimate, CutNormMode};
use crate::error::{Error, Result};
use crate::grid::uniform_points;
use crate::kernel::GraphonKernel;

pub const DEFAULT_REFINEMENT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMode {
    Deterministic,
    Random,
    BipartiteAligned,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampledGraph {
    pub adjacency: DMatrix<f64>,
    pub mode: SamplingMode,
    pub seed: Option<u64>,
    pub kernel_id: String,
    /// Latent position of each vertex; also the left end of its cell.
    pub grid_points: Vec<f64>,
}

impl SampledGraph {
    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    /// Wrap an arbitrary symmetric matrix on the uniform grid.
    pub fn from_adjacency(adjacency: DMatrix<f64>, kernel_id: impl Into<String>) -> Result<Self> {
        let n = adjacency.nrows();
        if adjacency.ncols() != n {
            return Err(Error::Shape { expected: n, got: adjacency.ncols() });
        }
        if adjacency != adjacency.transpose() {
            return Err(Error::InvalidMatrix("adjacency is not symmetric".into()));
        }
        Ok(Self {
            adjacency,
            mode: SamplingMode::Deterministic,
            seed: None,
            kernel_id: kernel_id.into(),
            grid_points: uniform_points(n),
        })
    }

    /// Index of the cell containing `x`.
    pub fn cell_of(&self, x: f64) -> usize {
        self.grid_points.partition_point(|&p| p <= x).saturating_sub(1)
    }

    /// Right end of cell `i`.
    pub fn cell_end(&self, i: usize) -> f64 {
        self.grid_points.get(i + 1).copied().unwrap_or(1.0)
    }

    /// `(1/n) sum_j A_ij`, diagonal included.
    pub fn degrees(&self) -> Vec<f64> {
        let n = self.n() as f64;
        self.adjacency.row_iter().map(|r| r.sum() / n).collect()
    }

    pub fn edge_density(&self) -> f64 {
        let n = self.n();
        if n < 2 {
            return 0.0;
        }
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..i {
                s += self.adjacency[(i, j)];
            }
        }
        s / (n * (n - 1) / 2) as f64
    }
}

/// The uniform deviate attached to vertex pair `(i, j)`, `i < j`, under `seed`.
/// Each row has its own ChaCha stream and each column its own word offset, so
/// the value does not depend on the order in which pairs are visited.
pub fn edge_uniform(seed: u64, i: usize, j: usize) -> f64 {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i as u64);
    rng.set_word_pos(2 * j as u128);
    to_unit(rng.next_u64())
}

#[inline]
fn to_unit(x: u64) -> f64 {
    (x >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

fn bernoulli_matrix(points: &[f64], seed: u64, prob: impl Fn(f64, f64) -> f64 + Sync) -> DMatrix<f64> {
    let n = points.len();
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            if i + 1 >= n {
                return vec![];
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            rng.set_word_pos(2 * (i + 1) as u128);
            (i + 1..n)
                .map(|j| {
                    let u = to_unit(rng.next_u64());
                    (j, if u < prob(points[i], points[j]) { 1.0 } else { 0.0 })
                })
                .collect()
        })
        .collect();
    let mut a = DMatrix::zeros(n, n);
    for (i, row) in rows.into_iter().enumerate() {
        for (j, v) in row {
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

/// Weighted graph `A_ij = W(x_i, x_j)` on the uniform grid, diagonal kept.
pub fn sample_deterministic(kernel: &GraphonKernel, n: usize) -> SampledGraph {
    let points = uniform_points(n);
    let adjacency = DMatrix::from_fn(n, n, |i, j| kernel.value(points[i], points[j]));
    SampledGraph {
        adjacency,
        mode: SamplingMode::Deterministic,
        seed: None,
        kernel_id: kernel.id(),
        grid_points: points,
    }
}

/// Simple graph with independent edges `P(i ~ j) = W(x_i, x_j)` and no loops.
pub fn sample_random(kernel: &GraphonKernel, n: usize, seed: u64) -> SampledGraph {
    let points = uniform_points(n);
    let adjacency = bernoulli_matrix(&points, seed, |x, y| kernel.value(x, y));
    SampledGraph {
        adjacency,
        mode: SamplingMode::Random,
        seed: Some(seed),
        kernel_id: kernel.id(),
        grid_points: points,
    }
}

/// Grid with `floor(alpha n)` points in `[0, alpha)` and the rest in `[alpha, 1)`.
pub fn bipartite_aligned_points(alpha: f64, n: usize) -> Result<Vec<f64>> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha = {alpha} must lie in (0,1)")));
    }
    let n1 = (alpha * n as f64).floor() as usize;
    let n2 = n - n1;
    if n1 == 0 || n2 == 0 {
        return Err(Error::DegeneratePartition { n1, n2 });
    }
    let mut pts: Vec<f64> = (0..n1).map(|i| alpha * i as f64 / n1 as f64).collect();
    pts.extend((0..n2).map(|i| alpha + (1.0 - alpha) * i as f64 / n2 as f64));
    Ok(pts)
}

pub fn sample_bipartite_aligned(alpha: f64, p: f64, n: usize, seed: u64) -> Result<SampledGraph> {
    let kernel = GraphonKernel::bipartite(alpha, p)?;
    let points = bipartite_aligned_points(alpha, n)?;
    let adjacency = bernoulli_matrix(&points, seed, |x, y| kernel.value(x, y));
    Ok(SampledGraph {
        adjacency,
        mode: SamplingMode::BipartiteAligned,
        seed: Some(seed),
        kernel_id: kernel.id(),
        grid_points: points,
    })
}

/// Weighted counterpart of the aligned sample: `A_ij = W(x_i, x_j)` on the
/// aligned grid.
pub fn sample_bipartite_aligned_deterministic(alpha: f64, p: f64, n: usize) -> Result<SampledGraph> {
    let kernel = GraphonKernel::bipartite(alpha, p)?;
    let points = bipartite_aligned_points(alpha, n)?;
    let adjacency = DMatrix::from_fn(n, n, |i, j| kernel.value(points[i], points[j]));
    Ok(SampledGraph {
        adjacency,
        mode: SamplingMode::Deterministic,
        seed: None,
        kernel_id: kernel.id(),
        grid_points: points,
    })
}

/// `sup_x |d_{W_n}(x) - d_W(x)|` with `d_{W_n}` the step-function degree of
/// the graph. Each cell is probed at both ends so a kernel jump inside a cell
/// is seen.
pub fn degree_deviation(graph: &SampledGraph, kernel: &GraphonKernel) -> f64 {
    let deg = graph.degrees();
    let mut worst: f64 = 0.0;
    for (i, d) in deg.iter().enumerate() {
        let left = graph.grid_points[i];
        let right = (graph.cell_end(i) - 1e-12).max(left);
        worst = worst
            .max((d - kernel.degree_at(left)).abs())
            .max((d - kernel.degree_at(right)).abs());
    }
    worst
}

/// `max_i |(1/n) sum_j (A_ij - W(x_i, x_j))|`: degree deviation from the
/// weighted graph on the same vertex positions.
pub fn degree_deviation_deterministic(graph: &SampledGraph, kernel: &GraphonKernel) -> f64 {
    let n = graph.n();
    let x = &graph.grid_points;
    (0..n)
        .map(|i| {
            let s: f64 = (0..n).map(|j| graph.adjacency[(i, j)] - kernel.value(x[i], x[j])).sum();
            (s / n as f64).abs()
        })
        .fold(0.0, f64::max)
}

/// Cut distance between the step graphon of `graph` and `kernel`, with the
/// kernel midpoint-sampled on a `refinement`-fold uniform grid.
pub fn cut_distance(
    graph: &SampledGraph,
    kernel: &GraphonKernel,
    refinement: usize,
    restarts: usize,
) -> Result<CutNormEstimate> {
    if refinement == 0 {
        return Err(Error::Parameter("refinement must be at least 1".into()));
    }
    let m = graph.n() * refinement;
    let mids: Vec<f64> = (0..m).map(|a| (a as f64 + 0.5) / m as f64).collect();
    let cells: Vec<usize> = mids.iter().map(|&y| graph.cell_of(y)).collect();
    let diff = DMatrix::from_fn(m, m, |a, b| {
        graph.adjacency[(cells[a], cells[b])] - kernel.value(mids[a], mids[b])
    });
    cutnorm(&diff, CutNormMode::Auto, restarts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn deterministic_constant() {
        let g = sample_deterministic(&GraphonKernel::constant(0.5).unwrap(), 3);
        assert!(g.adjacency.iter().all(|&v| v == 0.5));
        assert_eq!(degree_deviation(&g, &GraphonKernel::constant(0.5).unwrap()), 0.0);
    }

    #[test]
    fn deterministic_smallworld_entry() {
        let k = GraphonKernel::small_world(0.2, 1.0 / (0.4 * PI), 0.0).unwrap();
        let g = sample_deterministic(&k, 10);
        assert_eq!(g.adjacency[(0, 1)], 1.0 / (0.4 * PI));
        assert_eq!(g.adjacency[(0, 5)], 0.0);
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(g.adjacency[(i, j)], k.value(g.grid_points[i], g.grid_points[j]));
            }
        }
    }

    #[test]
    fn random_extremes() {
        let z = sample_random(&GraphonKernel::constant(0.0).unwrap(), 20, 3);
        assert!(z.adjacency.iter().all(|&v| v == 0.0));
        let o = sample_random(&GraphonKernel::constant(1.0).unwrap(), 5, 3);
        for i in 0..5 {
            for j in 0..5 {
                assert_eq!(o.adjacency[(i, j)], if i == j { 0.0 } else { 1.0 });
            }
        }
    }

    #[test]
    fn random_density_concentrates() {
        let g = sample_random(&GraphonKernel::constant(0.5).unwrap(), 1000, 1);
        let pairs = 1000.0 * 999.0 / 2.0;
        let sigma = 0.5 / f64::sqrt(pairs);
        assert!((g.edge_density() - 0.5).abs() <= 3.0 * sigma);
    }

    #[test]
    fn keyed_stream_matches_pairwise_lookup() {
        let k = GraphonKernel::constant(0.37).unwrap();
        let g = sample_random(&k, 40, 99);
        for i in 0..40 {
            for j in i + 1..40 {
                let expect = if edge_uniform(99, j, i) < 0.37 { 1.0 } else { 0.0 };
                assert_eq!(g.adjacency[(i, j)], expect);
            }
        }
        assert_eq!(g, sample_random(&k, 40, 99));
        assert_ne!(g.adjacency, sample_random(&k, 40, 100).adjacency);
    }

    #[test]
    fn smaller_graph_is_a_prefix() {
        // pair keys do not depend on n
        let k = GraphonKernel::constant(0.5).unwrap();
        let big = sample_random(&k, 30, 4);
        let small = sample_random(&k, 12, 4);
        assert_eq!(small.adjacency, big.adjacency.view((0, 0), (12, 12)).into_owned());
    }

    #[test]
    fn bipartite_partition() {
        let g = sample_bipartite_aligned(0.3, 0.5, 10, 1).unwrap();
        let n1 = g.grid_points.iter().filter(|&&x| x < 0.3).count();
        assert_eq!(n1, 3);
        for i in 0..10 {
            for j in 0..10 {
                if (i < 3) == (j < 3) {
                    assert_eq!(g.adjacency[(i, j)], 0.0);
                }
            }
        }
        assert!(matches!(
            sample_bipartite_aligned(0.05, 0.5, 10, 1),
            Err(Error::DegeneratePartition { n1: 0, n2: 10 })
        ));
    }

    #[test]
    fn bipartite_cross_density() {
        let g = sample_bipartite_aligned(0.3, 0.5, 200, 7).unwrap();
        let (n1, n2) = (60, 140);
        let mut s = 0.0;
        for i in 0..n1 {
            for j in n1..200 {
                s += g.adjacency[(i, j)];
            }
        }
        let pairs = (n1 * n2) as f64;
        assert!((s / pairs - 0.5).abs() <= 3.0 * 0.5 / pairs.sqrt());
    }

    #[test]
    fn naive_grid_misses_the_block_boundary() {
        // alpha*n not an integer: one uniform cell straddles the jump
        let k = GraphonKernel::bipartite(0.35, 0.5).unwrap();
        let naive = sample_deterministic(&k, 10);
        assert!(degree_deviation(&naive, &k) >= 0.05);
        let aligned = sample_bipartite_aligned_deterministic(0.35, 0.5, 10).unwrap();
        assert!(degree_deviation(&aligned, &k) <= 0.05 + 1e-12);
    }

    #[test]
    fn cut_distance_of_matching_step_is_zero() {
        let m = DMatrix::from_fn(8, 8, |i, j| ((i + j) % 3) as f64 / 2.0);
        let k = GraphonKernel::step(&m).unwrap();
        let g = sample_deterministic(&k, 8);
        let e = cut_distance(&g, &k, 2, 4).unwrap();
        assert_eq!(e.upper, 0.0);
        assert_eq!(e.value(), 0.0);
    }

    #[test]
    fn degree_deviation_shrinks_for_constant_kernel() {
        let k = GraphonKernel::constant(0.5).unwrap();
        let med = |n: usize| {
            let mut v: Vec<f64> = (0..9).map(|s| degree_deviation(&sample_random(&k, n, s), &k)).collect();
            v.sort_by(f64::total_cmp);
            v[4]
        };
        assert!(med(400) < med(50));
        let det = sample_deterministic(&k, 50);
        assert_abs_diff_eq!(degree_deviation_deterministic(&det, &k), 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn random_graphs_are_simple(n in 1usize..60, seed in any::<u64>(), p in 0.0f64..=1.0) {
            let g = sample_random(&GraphonKernel::constant(p).unwrap(), n, seed);
            for i in 0..n {
                prop_assert_eq!(g.adjacency[(i, i)], 0.0);
                for j in 0..n {
                    let v = g.adjacency[(i, j)];
                    prop_assert!(v == 0.0 || v == 1.0);
                    prop_assert_eq!(v, g.adjacency[(j, i)]);
                }
            }
        }

        #[test]
        fn aligned_samples_have_no_intra_block_edges(alpha in 0.1f64..0.9, n in 10usize..80, seed in any::<u64>()) {
            let g = sample_bipartite_aligned(alpha, 1.0, n, seed).unwrap();
            for i in 0..n {
                for j in 0..n {
                    if (g.grid_points[i] < alpha) == (g.grid_points[j] < alpha) {
                        prop_assert_eq!(g.adjacency[(i, j)], 0.0);
                    }
                }
            }
        }
    }
}
