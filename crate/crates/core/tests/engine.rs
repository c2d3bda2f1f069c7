//! Time-stepping invariants of the Yee engine.

use eqsens::consts::{EPS0, MU0};
use eqsens::fdtd::{self, cfl_limit, energy, Boundaries, BoundaryKind, Engine, Gaussian, SourceKind};
use eqsens::grid::CellBox;
use eqsens::{Component, FieldState, Node, RunCounter, Scenario, SimulationConfig, SourceSpec, YeeGrid};

fn source(comp: Component, cells: Vec<usize>, t0: f64, ts: f64, amplitude: f64) -> SourceSpec {
    SourceSpec { cells, component: comp, pulse: Gaussian { t0, ts }, amplitude, kind: SourceKind::Soft }
}

/// Exact light speed of the discrete constants.
fn magic_dt(dz: f64) -> f64 {
    dz * (EPS0 * MU0).sqrt()
}

#[test]
fn cfl_examples() {
    let g = YeeGrid::uniform([1, 1, 10], [1.0, 1.0, 0.424e-3]).unwrap();
    assert!((cfl_limit(&g) - 1.4143e-12).abs() < 1e-15);
    let g = YeeGrid::uniform([5, 5, 5], [1e-3; 3]).unwrap();
    assert!((cfl_limit(&g) - 1.926e-12).abs() < 1e-15);
    let h = YeeGrid::uniform([5, 5, 5], [0.5e-3; 3]).unwrap();
    assert!((cfl_limit(&h) / cfl_limit(&g) - 0.5).abs() < 1e-14);
}

#[test]
fn empty_fields_stay_empty() {
    let g = YeeGrid::uniform([6, 6, 6], [1e-3; 3]).unwrap();
    let cfg = SimulationConfig {
        dt: 1e-12,
        nsteps: 20,
        sources: vec![],
        probes: vec![],
        boundary: Boundaries::all(BoundaryKind::Mur1),
    };
    let mut e = Engine::new(&g, &cfg).unwrap();
    for n in 0..20 {
        e.step(n);
    }
    assert_eq!(e.fields().max_abs(), 0.0);
}

#[test]
fn zero_amplitude_source_gives_zero_probes() {
    let g = YeeGrid::uniform([1, 1, 200], [1.0, 1.0, 1e-3]).unwrap();
    let cfg = SimulationConfig {
        dt: 2e-12,
        nsteps: 300,
        sources: vec![source(Component::Ex, vec![50], 60e-12, 20e-12, 0.0)],
        probes: vec![Node::new(Component::Ex, 50), Node::new(Component::Hy, 120)],
        boundary: Boundaries::all(BoundaryKind::Mur1),
    };
    let recs = fdtd::run(&g, &cfg, &RunCounter::new()).unwrap();
    assert!(recs.iter().all(|r| r.samples.iter().all(|&v| v == 0.0)));
}

#[test]
fn magic_time_step_translates_pulses_exactly() {
    let dz = 1e-3;
    let g = YeeGrid::uniform([1, 1, 400], [1.0, 1.0, dz]).unwrap();
    let dt = magic_dt(dz);
    let (a, m) = (150, 60);
    let cfg = SimulationConfig {
        dt,
        nsteps: 500,
        sources: vec![source(Component::Ex, vec![100], 40.0 * dt, 8.0 * dt, 1.0)],
        probes: vec![Node::new(Component::Ex, a), Node::new(Component::Ex, a + m)],
        boundary: Boundaries::all(BoundaryKind::Mur1),
    };
    let recs = fdtd::run(&g, &cfg, &RunCounter::new()).unwrap();
    let (pa, pb) = (&recs[0].samples, &recs[1].samples);
    let peak = pa.iter().fold(0.0f64, |s, v| s.max(v.abs()));
    assert!(peak > 0.1);
    for n in m..500 {
        assert!((pb[n] - pa[n - m]).abs() <= 1e-12 * peak, "step {n}: {} vs {}", pb[n], pa[n - m]);
    }
}

#[test]
fn pec_edges_stay_zero() {
    let mut g = YeeGrid::uniform([10, 10, 10], [1e-3; 3]).unwrap();
    g.add_pec_sheet(2, &CellBox::new([3, 3, 6], [8, 8, 6])).unwrap();
    let cfg = SimulationConfig {
        dt: 1.5e-12,
        nsteps: 80,
        sources: vec![source(Component::Ez, vec![g.idx(5, 5, 2)], 20e-12, 6e-12, 1.0)],
        probes: vec![],
        boundary: Boundaries::all(BoundaryKind::Mur1),
    };
    let mut e = Engine::new(&g, &cfg).unwrap();
    let gr = &g;
    let sheet: Vec<(usize, usize)> = (0..g.cell_count())
        .flat_map(|i| [0, 1].into_iter().filter(move |&c| gr.is_pec(c, i)).map(move |c| (c, i)))
        .collect();
    assert!(!sheet.is_empty());
    let mut reached = false;
    for n in 0..80 {
        e.step(n);
        let f = e.fields();
        for &(c, i) in &sheet {
            assert_eq!(f.e[c][i], 0.0);
        }
        reached |= f.e[2][g.idx(5, 5, 4)] != 0.0;
    }
    assert!(reached);
}

#[test]
fn leapfrog_is_reversible_in_a_closed_box() {
    let g = YeeGrid::uniform([12, 10, 9], [1e-3, 1.2e-3, 0.9e-3]).unwrap();
    let dt = 0.9 * cfl_limit(&g);
    let cfg = SimulationConfig {
        dt,
        nsteps: 0,
        sources: vec![source(Component::Ez, vec![g.idx(6, 5, 4)], 10.0 * dt, 3.0 * dt, 1.0)],
        probes: vec![],
        boundary: Boundaries::all(BoundaryKind::Pec),
    };
    let mut e = Engine::new(&g, &cfg).unwrap();
    let mut n = 0;
    // Past the cutoff the source term underflows to exactly zero.
    while n < 120 {
        e.step(n);
        n += 1;
    }
    let snapshot = e.fields().clone();
    for _ in 0..200 {
        e.step(n);
        n += 1;
    }
    for _ in 0..200 {
        e.unstep();
    }
    let scale = snapshot.max_abs();
    let diff = max_diff(&snapshot, e.fields());
    assert!(diff <= 1e-12 * scale, "{diff:e} vs {scale:e}");
}

fn max_diff(a: &FieldState, b: &FieldState) -> f64 {
    let mut d = 0.0f64;
    for c in 0..3 {
        for (x, y) in a.e[c].iter().zip(&b.e[c]).chain(a.h[c].iter().zip(&b.h[c])) {
            d = d.max((x - y).abs());
        }
    }
    d
}

#[test]
fn mur_energy_does_not_grow_after_the_pulse_leaves() {
    let g = YeeGrid::uniform([1, 1, 300], [1.0, 1.0, 1e-3]).unwrap();
    // Far below the limit Mur-1 lets a slow residue wobble by ~1e-7 of peak.
    let dt = 0.99 * cfl_limit(&g);
    let cfg = SimulationConfig {
        dt,
        nsteps: 0,
        sources: vec![source(Component::Ex, vec![150], 30.0 * dt, 8.0 * dt, 1.0)],
        probes: vec![],
        boundary: Boundaries::all(BoundaryKind::Mur1),
    };
    let mut e = Engine::new(&g, &cfg).unwrap();
    let mut peak = 0.0f64;
    let mut prev = 0.0;
    for n in 0..1500 {
        e.step(n);
        let w = energy(&g, e.fields());
        peak = peak.max(w);
        // Both fronts have left the 150-cell half-spans by step 300.
        if n > 300 {
            assert!(w <= prev + 1e-9 * peak, "step {n}: {w:e} > {prev:e}");
        }
        prev = w;
    }
    assert!(prev < 1e-3 * peak);
}

#[test]
fn charge_free_pulse_leaves_a_bounded_residue_in_3d() {
    let g = YeeGrid::uniform([20, 20, 20], [1e-3; 3]).unwrap();
    let dt = 0.95 * cfl_limit(&g);
    let at = vec![g.idx(10, 10, 10)];
    let cfg = SimulationConfig {
        dt,
        nsteps: 0,
        // Opposite pulses deposit no net charge, so no static field remains
        // for Mur-1 to mishandle.
        sources: vec![
            source(Component::Ez, at.clone(), 24.0 * dt, 4.0 * dt, 1.0),
            source(Component::Ez, at, 40.0 * dt, 4.0 * dt, -1.0),
        ],
        probes: vec![],
        boundary: Boundaries::all(BoundaryKind::Mur1),
    };
    let mut e = Engine::new(&g, &cfg).unwrap();
    let mut peak = 0.0f64;
    let mut at_300 = 0.0;
    for n in 0..3000 {
        e.step(n);
        let w = energy(&g, e.fields());
        peak = peak.max(w);
        if n == 300 {
            at_300 = w;
        }
    }
    let last = energy(&g, e.fields());
    assert!(at_300 < 1e-3 * peak);
    assert!(last <= at_300 * (1.0 + 1e-3), "{last:e} vs {at_300:e}");
}

#[test]
fn shifting_source_and_probe_shifts_the_output() {
    let g = YeeGrid::uniform([24, 20, 20], [1e-3; 3]).unwrap();
    let dt = 0.9 * cfl_limit(&g);
    let run = |di: usize| {
        let cfg = SimulationConfig {
            dt,
            nsteps: 6,
            sources: vec![source(Component::Ez, vec![g.idx(9 + di, 10, 10)], 3.0 * dt, 1.0 * dt, 1.0)],
            probes: vec![
                Node::new(Component::Ez, g.idx(11 + di, 10, 10)),
                Node::new(Component::Hy, g.idx(10 + di, 10, 10)),
            ],
            boundary: Boundaries::all(BoundaryKind::Mur1),
        };
        fdtd::run(&g, &cfg, &RunCounter::new()).unwrap()
    };
    let (a, b) = (run(0), run(2));
    // Boundaries are at least 7 cells away, so the first steps cannot see them.
    for (ra, rb) in a.iter().zip(&b) {
        assert_eq!(ra.samples, rb.samples);
        assert!(ra.samples.iter().any(|&v| v != 0.0));
    }
}

#[test]
fn multilayer_at_4096_steps_stays_bounded() {
    let mut s = Scenario::builtin("multilayer").unwrap();
    s.simulation.nsteps = 4096;
    let p = s.problem().unwrap();
    let counter = RunCounter::new();
    let recs = fdtd::run(&p.grid, &p.config(vec![p.port.clone()], p.port_nodes()), &counter).unwrap();
    assert_eq!(counter.count(), 1);
    let peak = recs[0].samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    assert!(peak.is_finite() && peak < 10.0);
}

#[test]
fn reflections_arrive_no_earlier_than_the_round_trip() {
    let s = Scenario::builtin("multilayer").unwrap();
    let p = s.problem().unwrap();
    let probe = p.port_nodes();
    let total = fdtd::run(&p.grid, &p.config(vec![p.port.clone()], probe.clone()), &RunCounter::new()).unwrap();
    let refl =
        fdtd::run(p.reference.as_ref().unwrap(), &p.config(vec![p.port.clone()], probe), &RunCounter::new()).unwrap();
    let dz = p.grid.size(2, 0);
    // Port at storage index 9, first interface at index 401.
    let round_trip = 2.0 * (401 - 9) as f64 * dz * (EPS0 * MU0).sqrt();
    let first = (round_trip / p.dt).floor() as usize;
    let peak = refl[0].samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let gap = |n: usize| (total[0].samples[n] - refl[0].samples[n]).abs();
    // Numerical precursors outrun light by a few rounding errors at most.
    for n in 0..first {
        assert!(gap(n) <= 1e-12 * peak, "step {n}");
    }
    assert!((first..p.nsteps).any(|n| gap(n) > 1e-3 * peak));
}
