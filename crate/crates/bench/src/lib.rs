//! Shared fixtures for the benchmarks.

use eqsens::fdtd::{cfl_limit, Boundaries, BoundaryKind, Engine, Gaussian, SourceKind};
use eqsens::{Complex64, Component, PolyValue, SimulationConfig, SourceSpec, YeeGrid};

/// A Mur-terminated cube of `n^3` cells driven at its centre.
pub fn cube_engine(n: usize) -> (YeeGrid, Engine) {
    let g = YeeGrid::uniform([n, n, n], [1e-3; 3]).expect("grid");
    let dt = 0.9 * cfl_limit(&g);
    let cfg = SimulationConfig {
        dt,
        nsteps: 0,
        sources: vec![SourceSpec {
            cells: vec![g.idx(n / 2, n / 2, n / 2)],
            component: Component::Ez,
            pulse: Gaussian { t0: 30.0 * dt, ts: 8.0 * dt },
            amplitude: 1.0,
            kind: SourceKind::Soft,
        }],
        probes: vec![],
        boundary: Boundaries::all(BoundaryKind::Mur1),
    };
    let e = Engine::new(&g, &cfg).expect("engine");
    (g, e)
}

/// A smooth decaying oscillation of `len` samples.
pub fn ringing_series(len: usize) -> Vec<f64> {
    (0..len).map(|n| (n as f64 * 0.07).sin() * (-(n as f64) / (len as f64 / 5.0)).exp()).collect()
}

/// A diagonally dominant complex tridiagonal system of size `n`.
pub fn tridiagonal(n: usize) -> [Vec<Complex64>; 4] {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    [
        (0..n - 1).map(|i| c(-1.0, 0.01 * i as f64)).collect(),
        (0..n).map(|i| c(2.5, 0.1 * (i % 7) as f64)).collect(),
        (0..n - 1).map(|i| c(-1.0, -0.02 * (i % 5) as f64)).collect(),
        (0..n).map(|i| c((i as f64).sin(), (i as f64).cos())).collect(),
    ]
}

/// A PolyValue of the given order with a well-conditioned constant term.
pub fn poly(order: usize, shift: f64) -> PolyValue {
    PolyValue::from_coeffs((0..=order).map(|i| 1.0 + shift + 0.3 * i as f64).collect()).expect("poly")
}
