//! Per-instance plumbing shared by the subcommands.

use std::fmt;
use std::path::PathBuf;

use anyhow::{anyhow, bail, Result};
use graphon_core::models::{closed_form_state, Model};
use graphon_core::sampling::sample_bipartite_aligned;
use graphon_core::{
    sample_deterministic, sample_random, solve_frozen, solve_newton, Gauge, GraphonKernel, GridFunction, ModelSpec,
    SampledGraph, SamplingMode, SolveOptions, SolveReport,
};
use rayon::prelude::*;

use crate::config::ExperimentConfig;

/// One `(n, seed)` pair; deterministic graphs carry no seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Instance {
    pub n: usize,
    pub seed: Option<u64>,
}

impl fmt::Display for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.seed {
            Some(s) => write!(f, "n={} seed={s}", self.n),
            None => write!(f, "n={} deterministic", self.n),
        }
    }
}

pub struct Ctx {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
}

impl Ctx {
    /// Instances sorted by `(n, seed)`, duplicates removed.
    pub fn instances(&self) -> Vec<Instance> {
        let mut v: Vec<Instance> = match self.cfg.mode {
            SamplingMode::Deterministic => self.cfg.n_list.iter().map(|&n| Instance { n, seed: None }).collect(),
            _ => self
                .cfg
                .n_list
                .iter()
                .flat_map(|&n| self.cfg.seeds.iter().map(move |&s| Instance { n, seed: Some(s) }))
                .collect(),
        };
        v.sort();
        v.dedup();
        v
    }

    /// Runs `f` on every instance in parallel; results keep instance order.
    pub fn for_each<T: Send>(&self, f: impl Fn(Instance) -> Result<T> + Sync) -> Vec<(Instance, Result<T>)> {
        let inst = self.instances();
        let res: Vec<Result<T>> = inst.par_iter().map(|&i| f(i)).collect();
        inst.into_iter().zip(res).collect()
    }

    pub fn options_for(&self, model: &ModelSpec) -> SolveOptions {
        let gauge = if model.periodic_state() { Gauge::MeanZero } else { Gauge::None };
        SolveOptions { gauge, ..self.cfg.solver }
    }
}

pub fn build_graph(kernel: &GraphonKernel, mode: SamplingMode, inst: Instance) -> Result<SampledGraph> {
    Ok(match (mode, inst.seed) {
        (SamplingMode::Deterministic, _) => sample_deterministic(kernel, inst.n),
        (SamplingMode::Random, Some(seed)) => sample_random(kernel, inst.n, seed),
        (SamplingMode::BipartiteAligned, Some(seed)) => match *kernel {
            GraphonKernel::Bipartite { alpha, p } => sample_bipartite_aligned(alpha, p, inst.n, seed)?,
            _ => bail!("bipartite_aligned sampling needs a bipartite kernel, got {}", kernel.family()),
        },
        (_, None) => return Err(anyhow!("random sampling needs a seed")),
    })
}

pub struct Solved {
    pub graph: SampledGraph,
    pub u_star: GridFunction,
    pub report: SolveReport,
}

pub fn continuum_state(ctx: &Ctx, model: &ModelSpec, kernel: &GraphonKernel, graph: &SampledGraph) -> Result<GridFunction> {
    Ok(closed_form_state(model, kernel, &graph.grid_points, ctx.cfg.m, ctx.cfg.branch)?)
}

/// Samples the instance graph and solves for the steady state near the continuum one.
pub fn solve_instance(ctx: &Ctx, model: &ModelSpec, kernel: &GraphonKernel, inst: Instance) -> Result<Solved> {
    let graph = build_graph(kernel, ctx.cfg.mode, inst)?;
    let u_star = continuum_state(ctx, model, kernel, &graph)?;
    let opts = ctx.options_for(model);
    let report = if ctx.cfg.newton {
        solve_newton(model, &graph, &u_star.values, &opts)?
    } else {
        solve_frozen(model, &graph, kernel, &u_star, &opts)?
    };
    Ok(Solved { graph, u_star, report })
}

/// Reports instance failures on stderr and returns how many there were.
pub fn count_failures<T>(results: &[(Instance, Result<T>)], ok: impl Fn(&T) -> bool) -> usize {
    let mut failed = 0;
    for (inst, r) in results {
        match r {
            Ok(v) if ok(v) => {}
            Ok(_) => failed += 1,
            Err(e) => {
                eprintln!("instance {inst}: {e:#}");
                failed += 1;
            }
        }
    }
    failed
}
