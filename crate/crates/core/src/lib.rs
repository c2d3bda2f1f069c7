//! Field derivatives of any order from a handful of FDTD runs.
//!
//! Perturbing a cell size or permittivity only changes the update
//! coefficients of the affected cells. Differentiating the leapfrog update
//! turns those coefficient changes into *equivalent sources*: ordinary field
//! differences scaled by analytic coefficient derivatives. A single run
//! records them, measured transfer functions carry them to the observation
//! port, and a frequency-domain recursion lifts them to higher and mixed
//! orders.
//!
//! Module map:
//! * [`grid`]: cells, materials, PEC edges, linear indexing, perturbation.
//! * [`fdtd`]: the Yee engine (1-D and 3-D), Gaussian sources, Mur boundaries.
//! * [`param_map`]: design parameters and analytic coefficient derivatives.
//! * [`equivalent_sources`]: recording equivalent sources during a run.
//! * [`spectral`]: DFT, transfer functions, propagation.
//! * [`local`]: response models among perturbed cells for orders above one.
//! * [`solver`]: Jacobian, high-order, mixed and Hessian tasks.
//! * [`oracles`]: central differences and a truncated-Taylor forward oracle.
//! * [`scenario`]: the text scenario format and built-in scenarios.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod consts;
pub mod equivalent_sources;
pub mod error;
pub mod fdtd;
pub mod grid;
pub mod local;
pub mod oracles;
pub mod param_map;
pub mod poly;
pub mod scenario;
pub mod solver;
pub mod spectral;

pub use error::{Error, Result};
pub use fdtd::{Component, FieldState, Node, ProbeRecord, RunCounter, SimulationConfig, SourceSpec};
pub use grid::{Axis, CellSubset, YeeGrid};
pub use num_complex::Complex64;
pub use param_map::{DesignParameter, ParamKind};
pub use poly::PolyValue;
pub use scenario::Scenario;
pub use solver::{DerivativeResult, MultiIndex, Observable, Problem, RunBudget};
pub use spectral::{FrequencyGrid, Spectrum, TransferFunction};
