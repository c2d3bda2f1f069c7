//! Transfer-function closed forms measured on 1-D runs.

use eqsens::consts::{EPS0, MU0};
use eqsens::fdtd::{self, Boundaries, BoundaryKind, Gaussian, SourceKind};
use eqsens::spectral::{dft, transfer_function};
use eqsens::{Complex64, Component, FrequencyGrid, Node, RunCounter, SimulationConfig, SourceSpec, YeeGrid};

const DZ: f64 = 1e-3;

fn magic_dt() -> f64 {
    DZ * (EPS0 * MU0).sqrt()
}

fn run_1d(nz: usize, src: usize, probes: &[usize], nsteps: usize, boundary: Boundaries) -> Vec<Vec<f64>> {
    let g = YeeGrid::uniform([1, 1, nz], [1.0, 1.0, DZ]).unwrap();
    let dt = magic_dt();
    let cfg = SimulationConfig {
        dt,
        nsteps,
        sources: vec![SourceSpec {
            cells: vec![src],
            component: Component::Ex,
            pulse: Gaussian { t0: 48.0 * dt, ts: 8.0 * dt },
            amplitude: 1.0,
            kind: SourceKind::Soft,
        }],
        probes: probes.iter().map(|&k| Node::new(Component::Ex, k)).collect(),
        boundary,
    };
    fdtd::run(&g, &cfg, &RunCounter::new()).unwrap().into_iter().map(|r| r.samples).collect()
}

fn band() -> FrequencyGrid {
    FrequencyGrid::linspace(1e9, 20e9, 39).unwrap()
}

#[test]
fn pure_delay_has_linear_phase() {
    let m = 40;
    let r = run_1d(400, 100, &[150, 150 + m], 700, Boundaries::all(BoundaryKind::Mur1));
    let h = transfer_function(&r[1], &r[0], magic_dt(), &band(), 151, 151 + m).unwrap();
    for (i, &f) in band().values().iter().enumerate() {
        let Some(v) = h.at(i) else { continue };
        let expect = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * m as f64 * magic_dt());
        assert!((v - expect).norm() < 1e-6, "{f}: {v} vs {expect}");
    }
}

#[test]
fn transfer_functions_compose_along_a_line() {
    let r = run_1d(400, 100, &[100, 160, 230], 700, Boundaries::all(BoundaryKind::Mur1));
    let dt = magic_dt();
    let ab = transfer_function(&r[1], &r[0], dt, &band(), 101, 161).unwrap();
    let bc = transfer_function(&r[2], &r[1], dt, &band(), 161, 231).unwrap();
    let ac = transfer_function(&r[2], &r[0], dt, &band(), 101, 231).unwrap();
    for i in 0..band().len() {
        if let (Some(x), Some(y), Some(z)) = (ab.at(i), bc.at(i), ac.at(i)) {
            assert!((x * y - z).norm() <= 1e-3 * z.norm());
        }
    }
}

#[test]
fn self_transfer_in_open_vacuum_is_one() {
    // Total field in a short Mur-terminated line against a line long enough
    // that nothing returns within the record.
    let nsteps = 600;
    let total = run_1d(200, 100, &[100], nsteps, Boundaries::all(BoundaryKind::Mur1));
    let incident = run_1d(1400, 700, &[700], nsteps, Boundaries::all(BoundaryKind::Mur1));
    let h = transfer_function(&total[0], &incident[0], magic_dt(), &band(), 101, 101).unwrap();
    for i in 0..band().len() {
        if let Some(v) = h.at(i) {
            assert!((v - 1.0).norm() < 0.02, "{v}");
        }
    }
}

#[test]
fn self_transfer_next_to_a_pec_wall_matches_the_image_source() {
    let nsteps = 900;
    let nz = 260;
    let src = 200;
    let mut bc = Boundaries::all(BoundaryKind::Mur1);
    bc.faces[2][1] = BoundaryKind::Pec;
    let total = run_1d(nz, src, &[src], nsteps, bc);
    let incident = run_1d(2000, 1000, &[1000], nsteps, Boundaries::all(BoundaryKind::Mur1));
    let h = transfer_function(&total[0], &incident[0], magic_dt(), &band(), src + 1, src + 1).unwrap();
    // The last E node is the wall.
    let l = (nz - 1 - src) as f64 * DZ;
    let c = 1.0 / (EPS0 * MU0).sqrt();
    for (i, &f) in band().values().iter().enumerate() {
        let Some(v) = h.at(i) else { continue };
        let expect = 1.0 - Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * f * 2.0 * l / c);
        assert!((v - expect).norm() < 0.02 * expect.norm().max(1.0), "{f}: {v} vs {expect}");
    }
}

#[test]
fn zero_excitation_has_no_valid_band() {
    let x = vec![0.0; 100];
    assert!(transfer_function(&x, &x, 1e-12, &band(), 1, 1).is_err());
}

#[test]
fn all_zero_series_has_zero_spectrum() {
    let s = dft(&[0.0; 50], 1e-12, &band()).unwrap();
    assert!(s.values.iter().all(|v| *v == Complex64::new(0.0, 0.0)));
}
