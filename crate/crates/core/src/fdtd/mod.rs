//! Yee FDTD time stepping with Gaussian sources, PEC and Mur-1 boundaries.
//!
//! Step `n` (0-based) advances `H^{n-1/2} -> H^{n+1/2}` and then
//! `E^n -> E^{n+1}`. Probe sample `n` therefore holds `E^{n+1}` or
//! `H^{n+1/2}`, and the source value injected during step `n` is
//! `amplitude * g((n+1) dt)`.

mod engine;
pub mod stencil;

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use crate::consts::C0;
use crate::error::{Error, Result};
use crate::grid::YeeGrid;

pub use engine::{energy, Engine};
pub use stencil::{update_coefficients, Coefficients, Term};

/// Field component. E lives on cell edges, H on cell faces.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Component {
    Ex,
    Ey,
    Ez,
    Hx,
    Hy,
    Hz,
}

impl Component {
    pub fn electric(dir: usize) -> Self {
        [Component::Ex, Component::Ey, Component::Ez][dir]
    }

    pub fn magnetic(dir: usize) -> Self {
        [Component::Hx, Component::Hy, Component::Hz][dir]
    }

    pub fn is_electric(self) -> bool {
        matches!(self, Component::Ex | Component::Ey | Component::Ez)
    }

    pub fn dir(self) -> usize {
        match self {
            Component::Ex | Component::Hx => 0,
            Component::Ey | Component::Hy => 1,
            Component::Ez | Component::Hz => 2,
        }
    }

    pub fn name(self) -> &'static str {
        ["ex", "ey", "ez", "hx", "hy", "hz"][self as usize]
    }

    pub fn parse(s: &str) -> Option<Self> {
        let all = [Component::Ex, Component::Ey, Component::Ez, Component::Hx, Component::Hy, Component::Hz];
        all.into_iter().find(|c| c.name().eq_ignore_ascii_case(s.trim()))
    }
}

/// A field sample location: component plus 0-based storage index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Node {
    pub comp: Component,
    pub idx: usize,
}

impl Node {
    pub fn new(comp: Component, idx: usize) -> Self {
        Node { comp, idx }
    }
}

/// Staggered field arrays, one value per cell for every component.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    /// `ex`, `ey`, `ez` at integer steps.
    pub e: [Vec<f64>; 3],
    /// `hx`, `hy`, `hz` at half steps.
    pub h: [Vec<f64>; 3],
}

impl FieldState {
    pub fn zeros(p: usize) -> Self {
        FieldState { e: [vec![0.0; p], vec![0.0; p], vec![0.0; p]], h: [vec![0.0; p], vec![0.0; p], vec![0.0; p]] }
    }

    #[inline]
    pub fn get(&self, node: Node) -> f64 {
        let d = node.comp.dir();
        if node.comp.is_electric() {
            self.e[d][node.idx]
        } else {
            self.h[d][node.idx]
        }
    }

    #[inline]
    pub fn get_mut(&mut self, node: Node) -> &mut f64 {
        let d = node.comp.dir();
        if node.comp.is_electric() {
            &mut self.e[d][node.idx]
        } else {
            &mut self.h[d][node.idx]
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.e.iter().chain(self.h.iter()).flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.e.iter().chain(self.h.iter()).flatten().all(|v| v.is_finite())
    }
}

/// `exp(-(t - t0)^2 / ts^2)`.
pub fn gaussian(t: f64, t0: f64, ts: f64) -> f64 {
    let x = (t - t0) / ts;
    (-x * x).exp()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian {
    pub t0: f64,
    pub ts: f64,
}

impl Gaussian {
    pub fn eval(&self, t: f64) -> f64 {
        gaussian(t, self.t0, self.ts)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SourceKind {
    /// Added to the field after the curl update.
    Soft,
    /// Overwrites the field.
    Hard,
}

/// Gaussian excitation of one E component on a set of cells.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceSpec {
    /// 0-based storage indices.
    pub cells: Vec<usize>,
    pub component: Component,
    pub pulse: Gaussian,
    pub amplitude: f64,
    pub kind: SourceKind,
}

impl SourceSpec {
    /// Value injected during step `n`.
    pub fn value(&self, n: usize, dt: f64) -> f64 {
        self.amplitude * self.pulse.eval((n + 1) as f64 * dt)
    }

    /// The injected series over `nsteps` steps.
    pub fn series(&self, nsteps: usize, dt: f64) -> Vec<f64> {
        (0..nsteps).map(|n| self.value(n, dt)).collect()
    }

    pub fn nodes(&self) -> impl Iterator<Item = Node> + '_ {
        self.cells.iter().map(move |&c| Node::new(self.component, c))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryKind {
    Mur1,
    Pec,
}

/// Boundary condition per domain face, `faces[axis][0 = low, 1 = high]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Boundaries {
    pub faces: [[BoundaryKind; 2]; 3],
}

impl Boundaries {
    pub fn all(kind: BoundaryKind) -> Self {
        Boundaries { faces: [[kind; 2]; 3] }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplePhase {
    /// `E^{n+1}` at sample `n`.
    IntegerStep,
    /// `H^{n+1/2}` at sample `n`.
    HalfStep,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeRecord {
    pub node: Node,
    pub samples: Vec<f64>,
    pub phase: SamplePhase,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationConfig {
    pub dt: f64,
    pub nsteps: usize,
    pub sources: Vec<SourceSpec>,
    pub probes: Vec<Node>,
    pub boundary: Boundaries,
}

impl SimulationConfig {
    pub fn validate(&self, grid: &YeeGrid) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::invalid("dt must be positive"));
        }
        if self.nsteps == 0 {
            return Err(Error::invalid("nsteps must be positive"));
        }
        let p = grid.cell_count();
        for s in &self.sources {
            if !s.component.is_electric() {
                return Err(Error::invalid("sources drive E components only"));
            }
            if !(s.pulse.ts > 0.0) {
                return Err(Error::invalid("pulse width Ts must be positive"));
            }
            if s.cells.iter().any(|&c| c >= p) {
                return Err(Error::invalid("source cell outside the grid"));
            }
        }
        if self.probes.iter().any(|n| n.idx >= p) {
            return Err(Error::invalid("probe outside the grid"));
        }
        if grid.is_1d() {
            if grid.dims()[2] < 3 {
                return Err(Error::invalid("1-D grids need at least 3 cells"));
            }
            let bad = |c: Component| c != Component::Ex && c != Component::Hy;
            if self.sources.iter().any(|s| bad(s.component)) || self.probes.iter().any(|n| bad(n.comp)) {
                return Err(Error::invalid("1-D grids carry only Ex and Hy"));
            }
        } else if grid.dims().iter().any(|&n| n < 3) {
            return Err(Error::invalid("3-D grids need at least 3 cells per axis (use nx = ny = 1 for 1-D)"));
        }
        Ok(())
    }
}

/// Largest stable time step of the grid.
pub fn cfl_limit(grid: &YeeGrid) -> f64 {
    let p = grid.cell_count();
    if grid.is_1d() {
        let dmin = (0..p).map(|i| grid.size(2, i)).fold(f64::INFINITY, f64::min);
        return dmin / C0;
    }
    let worst = (0..p).map(|i| (0..3).map(|d| grid.size(d, i).powi(-2)).sum::<f64>()).fold(0.0f64, f64::max);
    1.0 / (C0 * worst.sqrt())
}

/// Counts forward FDTD runs. Clones share the count.
#[derive(Clone, Debug, Default)]
pub struct RunCounter(Arc<AtomicUsize>);

impl RunCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn count(&self) -> usize {
        self.0.load(Ordering::SeqCst)
    }

    pub(crate) fn increment(&self) {
        self.0.fetch_add(1, Ordering::SeqCst);
    }
}

/// Hooks into the time loop.
pub trait StepObserver {
    /// Fields hold `E^n`, `H^{n-1/2}`.
    fn before_h(&mut self, _n: usize, _fields: &FieldState) {}
    /// Fields hold `E^n`, `H^{n+1/2}`.
    fn after_h(&mut self, _n: usize, _fields: &FieldState) {}
}

struct NoObserver;
impl StepObserver for NoObserver {}

/// Runs a full simulation and returns the probe records.
pub fn run(grid: &YeeGrid, config: &SimulationConfig, counter: &RunCounter) -> Result<Vec<ProbeRecord>> {
    run_observed(grid, config, counter, &mut NoObserver)
}

/// [`run`] with an observer called around every H update.
pub fn run_observed(
    grid: &YeeGrid,
    config: &SimulationConfig,
    counter: &RunCounter,
    observer: &mut dyn StepObserver,
) -> Result<Vec<ProbeRecord>> {
    config.validate(grid)?;
    let mut engine = Engine::new(grid, config)?;
    counter.increment();
    let mut records: Vec<ProbeRecord> = config
        .probes
        .iter()
        .map(|&node| ProbeRecord {
            node,
            samples: Vec::with_capacity(config.nsteps),
            phase: if node.comp.is_electric() { SamplePhase::IntegerStep } else { SamplePhase::HalfStep },
        })
        .collect();
    for n in 0..config.nsteps {
        engine.step_observed(n, observer);
        let f = engine.fields();
        let mut ok = true;
        for r in records.iter_mut() {
            let v = f.get(r.node);
            ok &= v.is_finite();
            r.samples.push(v);
        }
        if !ok || (n % 64 == 63 && !f.is_finite()) {
            return Err(Error::numerical(format!(
                "non-finite field at step {n}; dt = {:.4e} s vs CFL limit {:.4e} s",
                config.dt,
                cfl_limit(grid)
            )));
        }
    }
    if !engine.fields().is_finite() {
        return Err(Error::numerical("non-finite field at the final step"));
    }
    Ok(records)
}
