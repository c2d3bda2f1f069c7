//! Update kernels. The 3-D path sweeps k-planes in parallel; the 1-D path is
//! a plain loop over the Ex/Hy chain.

use std::ops::RangeInclusive;

use rayon::prelude::*;

use crate::consts::{C0, EPS0, MU0};
use crate::error::Result;
use crate::grid::YeeGrid;

use super::stencil::{update_coefficients, Coefficients};
use super::{Boundaries, BoundaryKind, FieldState, SimulationConfig, SourceKind, SourceSpec, StepObserver};

/// One Mur-1 boundary node with its inward neighbour.
#[derive(Clone, Copy, Debug)]
struct MurNode {
    comp: usize,
    b: usize,
    nb: usize,
    k: f64,
}

/// Previous-step values needed by the Mur update.
#[derive(Clone, Debug, Default)]
pub struct MurMemory {
    b: Vec<f64>,
    nb: Vec<f64>,
}

/// Time stepper for one grid and configuration.
#[derive(Clone, Debug)]
pub struct Engine {
    n: [usize; 3],
    one_d: bool,
    dt: f64,
    co: Coefficients,
    mur: Vec<MurNode>,
    pec: [Vec<usize>; 3],
    sources: Vec<SourceSpec>,
    fields: FieldState,
}

/// Applies `f(row, start)` to every x-row of `r`, where `row` is the slice
/// of `dst` starting at storage index `start`.
fn plane_sweep<F>(dst: &mut [f64], n: [usize; 3], r: [RangeInclusive<usize>; 3], f: F)
where
    F: Fn(&mut [f64], usize) + Sync,
{
    let plane = n[0] * n[1];
    if r[0].is_empty() {
        return;
    }
    let (i0, len) = (*r[0].start(), r[0].end() + 1 - r[0].start());
    let sweep = |(k, chunk): (usize, &mut [f64])| {
        if !r[2].contains(&k) {
            return;
        }
        for j in r[1].clone() {
            let local = n[0] * j + i0;
            f(&mut chunk[local..local + len], local + plane * k);
        }
    };
    // Task overhead outweighs the gain on a single worker.
    if rayon::current_num_threads() > 1 {
        dst.par_chunks_mut(plane).enumerate().for_each(sweep);
    } else {
        dst.chunks_mut(plane).enumerate().for_each(sweep);
    }
}

/// Valid index range `lo..=n-2` (empty when `n < 2 + lo`).
fn span(lo: usize, n: usize) -> RangeInclusive<usize> {
    if n >= 2 + lo {
        lo..=n - 2
    } else {
        #[allow(clippy::reversed_empty_ranges)]
        {
            1..=0
        }
    }
}

impl Engine {
    pub fn new(grid: &YeeGrid, config: &SimulationConfig) -> Result<Self> {
        let n = grid.dims();
        let p = grid.cell_count();
        let co = update_coefficients(grid, config.dt);
        let one_d = grid.is_1d();
        let mut pec: [Vec<usize>; 3] = Default::default();
        for (c, list) in pec.iter_mut().enumerate() {
            if one_d && c != 0 {
                continue;
            }
            list.extend((0..p).filter(|&i| grid.is_pec(c, i)));
        }
        let mur = if one_d {
            mur_nodes_1d(grid, config.dt, &config.boundary)
        } else {
            mur_nodes_3d(grid, config.dt, &config.boundary)
        };
        Ok(Engine {
            n,
            one_d,
            dt: config.dt,
            co,
            mur,
            pec,
            sources: config.sources.clone(),
            fields: FieldState::zeros(p),
        })
    }

    pub fn fields(&self) -> &FieldState {
        &self.fields
    }

    pub fn fields_mut(&mut self) -> &mut FieldState {
        &mut self.fields
    }

    pub fn coefficients(&self) -> &Coefficients {
        &self.co
    }

    /// Advances the owned state by one step.
    pub fn step(&mut self, n: usize) {
        let mut f = std::mem::replace(&mut self.fields, FieldState::zeros(0));
        self.update_h(&mut f);
        let mem = self.mur_save(&f);
        self.update_e(&mut f);
        self.mur_apply(&mut f, &mem);
        self.apply_sources(n, &mut f);
        self.zero_pec(&mut f);
        self.fields = f;
    }

    pub(crate) fn step_observed(&mut self, n: usize, obs: &mut dyn StepObserver) {
        let mut f = std::mem::replace(&mut self.fields, FieldState::zeros(0));
        obs.before_h(n, &f);
        self.update_h(&mut f);
        obs.after_h(n, &f);
        let mem = self.mur_save(&f);
        self.update_e(&mut f);
        self.mur_apply(&mut f, &mem);
        self.apply_sources(n, &mut f);
        self.zero_pec(&mut f);
        self.fields = f;
    }

    /// Inverts one source-free interior step: `E^{n+1} -> E^n` then
    /// `H^{n+1/2} -> H^{n-1/2}`. Exact only without Mur boundaries.
    pub fn unstep(&mut self) {
        let mut f = std::mem::replace(&mut self.fields, FieldState::zeros(0));
        let before = f.clone();
        self.update_e(&mut f);
        for c in 0..3 {
            for (x, b) in f.e[c].iter_mut().zip(&before.e[c]) {
                *x = 2.0 * b - *x;
            }
        }
        let mid = f.clone();
        self.update_h(&mut f);
        for c in 0..3 {
            for (x, b) in f.h[c].iter_mut().zip(&mid.h[c]) {
                *x = 2.0 * b - *x;
            }
        }
        self.fields = f;
    }

    /// `H += curl E` on every updated H node.
    pub(crate) fn update_h(&self, f: &mut FieldState) {
        let n = self.n;
        if self.one_d {
            let ah = &self.co.h[1][0];
            let (ex, hy) = (&f.e[0], &mut f.h[1]);
            for k in 0..n[2] - 1 {
                hy[k] -= ah[k] * (ex[k + 1] - ex[k]);
            }
            return;
        }
        let s = [1, n[0], n[0] * n[1]];
        let FieldState { e, h } = f;
        for (c, hc) in h.iter_mut().enumerate() {
            let (a1, a2) = ((c + 1) % 3, (c + 2) % 3);
            let (s1, s2) = (s[a1], s[a2]);
            let (e1, e2) = (&e[a1], &e[a2]);
            let (k0, k1) = (&self.co.h[c][0], &self.co.h[c][1]);
            let mut r = [span(0, n[0]), span(0, n[1]), span(0, n[2])];
            r[c] = 0..=n[c] - 1;
            plane_sweep(hc, n, r, |d, p| {
                let m = d.len();
                let (k0, k1) = (&k0[p..p + m], &k1[p..p + m]);
                let (e2p, e2c) = (&e2[p + s1..p + s1 + m], &e2[p..p + m]);
                let (e1p, e1c) = (&e1[p + s2..p + s2 + m], &e1[p..p + m]);
                for i in 0..m {
                    d[i] += -k0[i] * (e2p[i] - e2c[i]) + k1[i] * (e1p[i] - e1c[i]);
                }
            });
        }
    }

    /// `E += curl H` on every updated interior E node.
    pub(crate) fn update_e(&self, f: &mut FieldState) {
        let n = self.n;
        if self.one_d {
            let ae = &self.co.e[0][1];
            let (ex, hy) = (&mut f.e[0], &f.h[1]);
            for k in 1..n[2] - 1 {
                ex[k] -= ae[k] * (hy[k] - hy[k - 1]);
            }
            self.zero_pec(f);
            return;
        }
        let s = [1, n[0], n[0] * n[1]];
        let FieldState { e, h } = f;
        for (c, ec) in e.iter_mut().enumerate() {
            let (a1, a2) = ((c + 1) % 3, (c + 2) % 3);
            let (s1, s2) = (s[a1], s[a2]);
            let (h1, h2) = (&h[a1], &h[a2]);
            let (k0, k1) = (&self.co.e[c][0], &self.co.e[c][1]);
            let mut r = [span(1, n[0]), span(1, n[1]), span(1, n[2])];
            r[c] = span(0, n[c]);
            plane_sweep(ec, n, r, |d, p| {
                let m = d.len();
                let (k0, k1) = (&k0[p..p + m], &k1[p..p + m]);
                let (h2c, h2m) = (&h2[p..p + m], &h2[p - s1..p - s1 + m]);
                let (h1c, h1m) = (&h1[p..p + m], &h1[p - s2..p - s2 + m]);
                for i in 0..m {
                    d[i] += k0[i] * (h2c[i] - h2m[i]) - k1[i] * (h1c[i] - h1m[i]);
                }
            });
        }
        self.zero_pec(f);
    }

    pub(crate) fn mur_save(&self, f: &FieldState) -> MurMemory {
        MurMemory {
            b: self.mur.iter().map(|m| f.e[m.comp][m.b]).collect(),
            nb: self.mur.iter().map(|m| f.e[m.comp][m.nb]).collect(),
        }
    }

    pub(crate) fn mur_apply(&self, f: &mut FieldState, mem: &MurMemory) {
        for (i, m) in self.mur.iter().enumerate() {
            let nb_new = f.e[m.comp][m.nb];
            f.e[m.comp][m.b] = mem.nb[i] + m.k * (nb_new - mem.b[i]);
        }
    }

    pub(crate) fn apply_sources(&self, n: usize, f: &mut FieldState) {
        for s in &self.sources {
            let v = s.value(n, self.dt);
            let arr = &mut f.e[s.component.dir()];
            for &c in &s.cells {
                match s.kind {
                    SourceKind::Soft => arr[c] += v,
                    SourceKind::Hard => arr[c] = v,
                }
            }
        }
    }

    pub(crate) fn zero_pec(&self, f: &mut FieldState) {
        for (c, list) in self.pec.iter().enumerate() {
            for &i in list {
                f.e[c][i] = 0.0;
            }
        }
    }
}

fn mur_k(grid: &YeeGrid, dt: f64, cell: usize, dn: f64) -> f64 {
    let v = C0 / (grid.eps_r(cell) * grid.mu_r(cell)).sqrt();
    (v * dt - dn) / (v * dt + dn)
}

fn mur_nodes_1d(grid: &YeeGrid, dt: f64, bc: &Boundaries) -> Vec<MurNode> {
    let nz = grid.dims()[2];
    let mut out = Vec::new();
    if bc.faces[2][0] == BoundaryKind::Mur1 && !grid.is_pec(0, 0) {
        let dn = 0.5 * (grid.size(2, 0) + grid.size(2, 1));
        out.push(MurNode { comp: 0, b: 0, nb: 1, k: mur_k(grid, dt, 0, dn) });
    }
    if bc.faces[2][1] == BoundaryKind::Mur1 && !grid.is_pec(0, nz - 1) {
        let dn = 0.5 * (grid.size(2, nz - 1) + grid.size(2, nz - 2));
        out.push(MurNode { comp: 0, b: nz - 1, nb: nz - 2, k: mur_k(grid, dt, nz - 1, dn) });
    }
    out
}

fn mur_nodes_3d(grid: &YeeGrid, dt: f64, bc: &Boundaries) -> Vec<MurNode> {
    let n = grid.dims();
    let s = [1, n[0], n[0] * n[1]];
    let mut out = Vec::new();
    for c in 0..3 {
        for idx in 0..grid.cell_count() {
            let q = grid.coords(idx);
            if q[c] + 1 >= n[c] || grid.is_pec(c, idx) {
                continue;
            }
            let faces: Vec<(usize, usize)> = (0..3)
                .filter(|&d| d != c)
                .filter_map(|d| {
                    if q[d] == 0 {
                        Some((d, 0))
                    } else if q[d] == n[d] - 1 {
                        Some((d, 1))
                    } else {
                        None
                    }
                })
                .collect();
            if faces.len() != 1 {
                continue;
            }
            let (d, side) = faces[0];
            if bc.faces[d][side] != BoundaryKind::Mur1 {
                continue;
            }
            let (nb, cell) = if side == 0 { (idx + s[d], idx) } else { (idx - s[d], idx - s[d]) };
            let dn = grid.size(d, cell);
            out.push(MurNode { comp: c, b: idx, nb, k: mur_k(grid, dt, cell, dn) });
        }
    }
    out
}

/// Discrete electromagnetic energy `sum (eps |E|^2 + mu |H|^2) V / 2`.
pub fn energy(grid: &YeeGrid, f: &FieldState) -> f64 {
    let mut w = 0.0;
    for idx in 0..grid.cell_count() {
        let v = grid.cell_volume(idx);
        for c in 0..3 {
            w += 0.5
                * v
                * (EPS0 * grid.edge_eps_r(c, idx) * f.e[c][idx].powi(2) + MU0 * grid.mu_r(idx) * f.h[c][idx].powi(2));
        }
    }
    w
}
