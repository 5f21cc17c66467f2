//! Steady states of reaction-diffusion dynamics on large dense networks,
//! computed through their graphon limit.
//!
//! A network state `u` evolves by
//! `du_i/dt = f(u_i) + (1/n) sum_j A_ij D(u_i, u_j)`. Steady states of the
//! continuum equation with kernel `W` are transferred to sampled graphs with a
//! Newton iteration whose Jacobian is frozen at the continuum solution, and
//! their stability is read off from the spectrum of the linearization.

pub mod cutnorm;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod io;
pub mod kernel;
mod linalg;
pub mod models;
pub mod operators;
pub mod quadrature;
pub mod sampling;
pub mod solver;
pub mod spectra;

pub use cutnorm::{cutnorm, cutnorm_2, CutNormEstimate, CutNormMethod, CutNormMode};
pub use error::{Error, Result};
pub use grid::GridFunction;
pub use kernel::{continuity_modulus, degree, smallworld_fourier, step_from_matrix, FourierCoeffs, GraphonKernel, RingProfile, StepGraphon};
pub use models::{Model, ModelSpec};
pub use sampling::{cut_distance, degree_deviation, sample_bipartite_aligned, sample_deterministic, sample_random, SampledGraph, SamplingMode};
pub use operators::{discrete_jacobian, eval_f, eval_gn, frozen_jacobian, q_function, LinearizedOperator, OperatorKind};
pub use solver::{solve_frozen, solve_newton, Gauge, SolveOptions, SolveReport};
pub use spectra::{analyze, eigenvalues_dense, SpectrumReport, SpectrumSource, Verdict};
pub use dynamics::{integrate_rk4, perturbation_decay, DecayReport, Trajectory};
