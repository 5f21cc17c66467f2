//! Experiment configuration: a JSON file (see `config.schema.json`) merged
//! with command-line overrides.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use graphon_core::io::read_dense_csv;
use graphon_core::models::WcBranch;
use graphon_core::{GraphonKernel, ModelSpec, SamplingMode, SolveOptions};
use serde::{Deserialize, Serialize};

use crate::UsageError;

/// A kernel given inline or as a path to a JSON config or a dense CSV step graphon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum KernelField {
    Inline(GraphonKernel),
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelField {
    Inline(ModelSpec),
    Path(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Option<ModelField>,
    pub kernel: Option<KernelField>,
    pub n_list: Vec<usize>,
    pub seeds: Vec<u64>,
    pub mode: SamplingMode,
    pub solver: SolveOptions,
    pub outputs: Option<PathBuf>,
    /// Twist of the Kuramoto state.
    pub m: Option<i64>,
    pub branch: WcBranch,
    pub newton: bool,
    pub restarts: usize,
    pub refinement: usize,
    pub margin: f64,
    pub ell_max: i64,
    pub dt: f64,
    pub t_end: f64,
    pub stride: usize,
    pub eps: f64,
    pub rho: f64,
    pub pairs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: None,
            kernel: None,
            n_list: Vec::new(),
            seeds: vec![0],
            mode: SamplingMode::Random,
            solver: SolveOptions::default(),
            outputs: None,
            m: None,
            branch: WcBranch::Low,
            newton: false,
            restarts: 16,
            refinement: 1,
            margin: graphon_core::spectra::DEFAULT_MARGIN,
            ell_max: 10,
            dt: graphon_core::dynamics::DEFAULT_DT,
            t_end: graphon_core::dynamics::DEFAULT_T_END,
            stride: 10,
            eps: 1e-3,
            rho: 0.1,
            pairs: 32,
        }
    }
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Parses `arg` as inline JSON when it starts with `{`, otherwise as a path.
pub fn kernel_arg(arg: &str) -> KernelField {
    match serde_json::from_str::<GraphonKernel>(arg) {
        Ok(k) if arg.trim_start().starts_with('{') => KernelField::Inline(k),
        _ => KernelField::Path(arg.into()),
    }
}

pub fn model_arg(arg: &str) -> ModelField {
    match serde_json::from_str::<ModelSpec>(arg) {
        Ok(m) if arg.trim_start().starts_with('{') => ModelField::Inline(m),
        _ => ModelField::Path(arg.into()),
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(KernelField::Path(p)) = &mut cfg.kernel {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        if let Some(ModelField::Path(p)) = &mut cfg.model {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_list.is_empty() {
            return Err(usage("n_list must be nonempty (set it in the config or pass --n)"));
        }
        if self.n_list.contains(&0) {
            return Err(usage("n_list entries must be positive"));
        }
        if self.seeds.is_empty() {
            return Err(usage("seeds must be nonempty"));
        }
        self.solver.validate().map_err(|e| usage(e.to_string()))?;
        if self.restarts == 0 || self.refinement == 0 || self.pairs == 0 {
            return Err(usage("restarts, refinement and pairs must be positive"));
        }
        Ok(())
    }

    pub fn kernel(&self) -> Result<GraphonKernel> {
        match &self.kernel {
            None => Err(usage("no kernel given (config `kernel` or --kernel)")),
            Some(KernelField::Inline(k)) => Ok(k.clone()),
            Some(KernelField::Path(p)) => load_kernel(p),
        }
    }

    pub fn model(&self) -> Result<ModelSpec> {
        let m = match &self.model {
            None => return Err(usage("no model given (config `model` or --model)")),
            Some(ModelField::Inline(m)) => *m,
            Some(ModelField::Path(p)) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading model {}", p.display()))?;
                serde_json::from_str(&text).map_err(|e| usage(format!("model {}: {e}", p.display())))?
            }
        };
        m.validate().map_err(|e| usage(e.to_string()))?;
        Ok(m)
    }
}

/// JSON kernel config, or a dense CSV read as a step graphon.
pub fn load_kernel(path: &Path) -> Result<GraphonKernel> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        let f = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let m = read_dense_csv(f)?;
        return GraphonKernel::step(&m).map_err(|e| usage(format!("{}: {e}", path.display())));
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading kernel {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("kernel {}: {e}", path.display())))
}
