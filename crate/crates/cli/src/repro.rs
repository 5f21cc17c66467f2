//! Figure recipes. Each writes tidy CSVs named after the figure panels plus
//! `repro_manifest.json` with every seed, parameter and tolerance used.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use anyhow::{Context, Result};
use graphon_core::io::{eigen_rows, write_dense_csv, write_eigen_csv, EigenRow};
use graphon_core::models::{
    kuramoto, lotka_volterra, wc_bifurcation_curve, wc_homogeneous_roots, wilson_cowan, WcBranch,
};
use graphon_core::sampling::sample_bipartite_aligned;
use graphon_core::{
    analyze, discrete_jacobian, sample_random, solve_frozen, Gauge, GraphonKernel, GridFunction, ModelSpec, SampledGraph,
    SolveOptions, SolveReport,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::output::{num, unix_now, verdict_cells, write_atomic, write_json, write_rows};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    /// Twisted states m = 2, 3, 4 on one small-world random graph, n = 200
    Fig1,
    /// Wilson-Cowan bifurcation curve for (lambda, mu, delta) = (22, 4, 1)
    Scurve,
    /// Wilson-Cowan (1, 1, 1) on ER(0.5): steady states and eigenvalue array
    Hugeneuro,
    /// Competitive Lotka-Volterra on ER(0.5), n = 200 and 1000
    Lv,
    /// Cooperative Lotka-Volterra on the bipartite kernel (0.5, 0.3), n = 200
    Lvbipartite,
}

impl Figure {
    pub fn id(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Scurve => "scurve",
            Figure::Hugeneuro => "hugeneuro",
            Figure::Lv => "lv",
            Figure::Lvbipartite => "lvbipartite",
        }
    }

    /// The fixed seed used unless overridden.
    pub fn default_seed(self) -> u64 {
        match self {
            Figure::Fig1 => 2023,
            Figure::Scurve => 0,
            Figure::Hugeneuro => 17,
            Figure::Lv => 5,
            Figure::Lvbipartite => 3,
        }
    }
}

#[derive(Serialize)]
struct Manifest {
    figure: &'static str,
    seed: u64,
    parameters: BTreeMap<&'static str, serde_json::Value>,
    solver: SolveOptions,
    files: Vec<String>,
    notes: Vec<String>,
    created_unix: u64,
}

struct Recipe<'a> {
    dir: &'a Path,
    solver: SolveOptions,
    files: Vec<String>,
    notes: Vec<String>,
    params: BTreeMap<&'static str, serde_json::Value>,
}

impl Recipe<'_> {
    fn rows(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        write_rows(&self.dir.join(name), header, rows)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn eigen(&mut self, name: &str, rows: &[EigenRow]) -> Result<()> {
        write_atomic(&self.dir.join(name), |w| Ok(write_eigen_csv(w, rows)?))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn param(&mut self, key: &'static str, v: impl Serialize) {
        self.params.insert(key, serde_json::to_value(v).expect("plain data serializes"));
    }
}

fn stage<T>(name: &str, r: graphon_core::Result<T>) -> Result<T> {
    r.with_context(|| format!("stage {name}"))
}

fn state_rows(graph: &SampledGraph, u_star: &GridFunction, u: &[f64]) -> Vec<Vec<String>> {
    (0..graph.n())
        .map(|i| vec![(i + 1).to_string(), num(graph.grid_points[i]), num(u_star.values[i]), num(u[i])])
        .collect()
}

/// Returns the number of recorded non-convergences.
pub fn run(figure: Figure, out: &Path, seed: Option<u64>, opts: SolveOptions) -> Result<usize> {
    let dir = out.join(figure.id());
    let seed = seed.unwrap_or(figure.default_seed());
    let mut r = Recipe { dir: &dir, solver: opts, files: Vec::new(), notes: Vec::new(), params: BTreeMap::new() };
    let failures = match figure {
        Figure::Fig1 => fig1(&mut r, seed, opts)?,
        Figure::Scurve => scurve(&mut r)?,
        Figure::Hugeneuro => hugeneuro(&mut r, seed, opts)?,
        Figure::Lv => lv(&mut r, seed, opts)?,
        Figure::Lvbipartite => lvbipartite(&mut r, seed, opts)?,
    };
    let manifest = Manifest {
        figure: figure.id(),
        seed,
        parameters: r.params,
        solver: r.solver,
        files: r.files,
        notes: r.notes,
        created_unix: unix_now(),
    };
    write_json(&dir.join("repro_manifest.json"), &manifest)?;
    println!("{}: wrote {} files to {}", figure.id(), manifest.files.len(), dir.display());
    Ok(failures)
}

fn fig1(r: &mut Recipe, seed: u64, opts: SolveOptions) -> Result<usize> {
    let (alpha, n) = (0.2, 200);
    let p = 1.0 / (2.0 * PI * alpha);
    let kernel = stage("kernel", GraphonKernel::small_world(alpha, p, 0.0))?;
    r.param("kernel", &kernel);
    r.param("n", n);
    r.param("m", [2, 3, 4]);
    r.notes.push("all three panels share one random graph realization".into());

    let grid: Vec<f64> = (0..=100).map(|i| i as f64 / 100.0).collect();
    let contour: Vec<Vec<String>> = grid
        .iter()
        .flat_map(|&x| grid.iter().map(move |&y| (x, y)))
        .map(|(x, y)| vec![num(x), num(y), num(kernel.value(x, y))])
        .collect();
    r.rows("fig1b_kernel.csv", &["x", "y", "w"], &contour)?;

    let graph = sample_random(&kernel, n, seed);
    write_atomic(&r.dir.join("fig1c_adjacency.csv"), |w| Ok(write_dense_csv(w, &graph.adjacency)?))?;
    r.files.push("fig1c_adjacency.csv".into());

    let model = kuramoto();
    let opts = SolveOptions { gauge: Gauge::MeanZero, ..opts };
    r.solver = opts;
    let runs: Vec<(i64, Result<(GridFunction, SolveReport)>)> = [2i64, 3, 4]
        .par_iter()
        .map(|&m| {
            let u_star = GridFunction::from_fn(graph.grid_points.clone(), |x| m as f64 * (x - 0.5));
            (m, stage("solve", solve_frozen(&model, &graph, &kernel, &u_star, &opts)).map(|rep| (u_star, rep)))
        })
        .collect();
    let mut summary = Vec::new();
    let mut failures = 0;
    for ((m, res), panel) in runs.into_iter().zip(['d', 'e', 'f']) {
        let (u_star, rep) = res?;
        let (verdict, detail, max_re) = if rep.converged {
            let j = stage("spectrum", discrete_jacobian(&model, &graph, &rep.final_u))?;
            let s = stage("spectrum", analyze(&j, Gauge::MeanZero, graphon_core::spectra::DEFAULT_MARGIN))?;
            let (v, detail) = verdict_cells(&s.verdict);
            (v, detail, num(s.max_real_part()))
        } else {
            failures += 1;
            r.notes.push(format!("m={m}: no convergence after {} iterations (residual {:.3e})", rep.iterations, rep.final_residual()));
            (String::new(), String::new(), String::new())
        };
        r.rows(&format!("fig1{panel}_m{m}.csv"), &["i", "x", "u_continuum", "u_graph"], &state_rows(&graph, &u_star, &rep.final_u))?;
        summary.push(vec![
            m.to_string(),
            rep.converged.to_string(),
            rep.iterations.to_string(),
            num(rep.final_residual()),
            num(rep.distance_to_continuum),
            verdict,
            detail,
            max_re,
        ]);
    }
    r.rows(
        "fig1_summary.csv",
        &["m", "converged", "iterations", "residual", "distance_to_continuum", "verdict", "gap_or_count", "max_real_part"],
        &summary,
    )?;
    Ok(failures)
}

fn scurve(r: &mut Recipe) -> Result<usize> {
    let (lambda, mu, delta) = (22.0, 4.0, 1.0);
    r.param("model", wilson_cowan(lambda, mu, delta)?);
    let u: Vec<f64> = (0..=2200).map(|i| i as f64 / 100.0).collect();
    let curve = stage("curve", wc_bifurcation_curve(&u, lambda, mu, delta))?;
    let rows: Vec<Vec<String>> = curve
        .iter()
        .map(|&(u, omega)| {
            let s = 1.0 / (1.0 + (mu - delta * u).exp());
            let rr = lambda * omega * delta * s * (1.0 - s);
            vec![num(u), num(omega), num(rr), (rr < 1.0).to_string()]
        })
        .collect();
    r.rows("scurve.csv", &["u", "omega", "r", "stable"], &rows)?;
    let roots = stage("roots", wc_homogeneous_roots(0.5, lambda, mu, delta))?;
    r.param("omega", 0.5);
    let rows: Vec<Vec<String>> = roots.iter().map(|x| vec![num(x.u), num(x.r), (x.r < 1.0).to_string()]).collect();
    r.rows("scurve_roots.csv", &["u", "r", "stable"], &rows)?;
    Ok(0)
}

/// Solves on a random graph from the closed-form continuum state; fails the stage on non-convergence.
fn solve_on(model: &ModelSpec, kernel: &GraphonKernel, graph: &SampledGraph, u_star: &GridFunction, opts: &SolveOptions) -> Result<SolveReport> {
    let rep = stage("solve", solve_frozen(model, graph, kernel, u_star, opts))?;
    if !rep.converged {
        anyhow::bail!("stage solve: n={} did not converge (residual {:.3e})", graph.n(), rep.final_residual());
    }
    Ok(rep)
}

fn eigen_array(
    r: &mut Recipe,
    name: &str,
    model: &ModelSpec,
    kernel: &GraphonKernel,
    sizes: &[usize],
    seed: u64,
    opts: &SolveOptions,
) -> Result<()> {
    let clouds: Vec<Result<Vec<EigenRow>>> = sizes
        .par_iter()
        .map(|&n| {
            let g = sample_random(kernel, n, seed);
            let u = stage("state", graphon_core::models::closed_form_state(model, kernel, &g.grid_points, None, WcBranch::Low))?;
            let rep = solve_on(model, kernel, &g, &u, opts)?;
            let j = stage("spectrum", discrete_jacobian(model, &g, &rep.final_u))?;
            let s = stage("spectrum", analyze(&j, Gauge::None, graphon_core::spectra::DEFAULT_MARGIN))?;
            Ok(eigen_rows(&s.eigenvalues, n, Some(seed)))
        })
        .collect();
    let mut rows = Vec::new();
    for c in clouds {
        rows.extend(c?);
    }
    r.eigen(name, &rows)
}

fn steady_panels(
    r: &mut Recipe,
    prefix: &str,
    model: &ModelSpec,
    kernel: &GraphonKernel,
    sizes: &[usize],
    seed: u64,
    opts: &SolveOptions,
) -> Result<()> {
    for &n in sizes {
        let g = sample_random(kernel, n, seed);
        let u = stage("state", graphon_core::models::closed_form_state(model, kernel, &g.grid_points, None, WcBranch::Low))?;
        let rep = solve_on(model, kernel, &g, &u, opts)?;
        r.rows(&format!("{prefix}_n{n}.csv"), &["i", "x", "u_continuum", "u_graph"], &state_rows(&g, &u, &rep.final_u))?;
    }
    Ok(())
}

fn hugeneuro(r: &mut Recipe, seed: u64, opts: SolveOptions) -> Result<usize> {
    let model = wilson_cowan(1.0, 1.0, 1.0)?;
    let kernel = GraphonKernel::constant(0.5)?;
    r.param("model", model);
    r.param("kernel", &kernel);
    r.param("steady_n", [10, 200]);
    r.param("eigen_n", [50, 100, 200, 400]);
    steady_panels(r, "hugeneuro_left", &model, &kernel, &[10, 200], seed, &opts)?;
    eigen_array(r, "hugeneuro_right_eigenvalues.csv", &model, &kernel, &[50, 100, 200, 400], seed, &opts)?;
    Ok(0)
}

fn lv(r: &mut Recipe, seed: u64, opts: SolveOptions) -> Result<usize> {
    let model = lotka_volterra(1.0, false)?;
    let kernel = GraphonKernel::constant(0.5)?;
    r.param("model", model);
    r.param("kernel", &kernel);
    r.param("n", [200, 1000]);
    steady_panels(r, "lv_steady", &model, &kernel, &[200, 1000], seed, &opts)?;
    eigen_array(r, "lv_eigenvalues.csv", &model, &kernel, &[200, 1000], seed, &opts)?;
    Ok(0)
}

fn lvbipartite(r: &mut Recipe, seed: u64, opts: SolveOptions) -> Result<usize> {
    let (p, alpha, n) = (0.5, 0.3, 200);
    let model = lotka_volterra(1.0, true)?;
    let kernel = GraphonKernel::bipartite(alpha, p)?;
    r.param("model", model);
    r.param("kernel", &kernel);
    r.param("n", n);
    r.notes.push("graph sampled on the aligned grid with floor(alpha n) points in [0, alpha)".into());
    let g = stage("sample", sample_bipartite_aligned(alpha, p, n, seed))?;
    let u = stage("state", graphon_core::models::closed_form_state(&model, &kernel, &g.grid_points, None, WcBranch::Low))?;
    let rep = solve_on(&model, &kernel, &g, &u, &opts)?;
    let rows: Vec<Vec<String>> = (0..n)
        .map(|i| {
            let x = g.grid_points[i];
            let block = if x < alpha { "1" } else { "2" };
            vec![(i + 1).to_string(), num(x), block.into(), num(u.values[i]), num(rep.final_u[i])]
        })
        .collect();
    r.rows("lvbipartite.csv", &["i", "x", "block", "u_continuum", "u_graph"], &rows)?;
    Ok(0)
}
