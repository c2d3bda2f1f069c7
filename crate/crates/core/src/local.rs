//! Frequency-domain response models among perturbed cells.
//!
//! Orders above one need the derivative field at the stencil nodes of the
//! source nodes, driven by sources that sit on those same nodes. Two models
//! supply that response from the subset-excitation runs:
//!
//! * [`ChainModel`] (1-D). The update is a tridiagonal system in chain order
//!   `Ex_k -> 2k`, `Hy_k -> 2k+1`. Outside a window holding every source the
//!   field is a homogeneous solution, so the ratio of the two outermost window
//!   values is source independent. Measuring that ratio in a subset run closes
//!   the window exactly.
//! * [`ProjectionModel`] (3-D). Each subset run measures the response to a
//!   unit drive on the subset's primary E nodes. A source distribution is
//!   projected onto that drive through its mean over the driven nodes.
//!
//! Responses use the record convention: the DFT of the series that a probe
//! would store, i.e. `z A^{-1} src` with `z = exp(i w dt)`.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fdtd::stencil::{terms, update_coefficients, Coefficients};
use crate::fdtd::{Component, Node};
use crate::grid::YeeGrid;

/// Field response at `targets` to `sources` at frequency index `fi`.
pub trait LocalModel: Sync {
    fn respond(&self, fi: usize, sources: &[(Node, Complex64)], targets: &[Node]) -> Result<Vec<Complex64>>;
}

/// Solves a tridiagonal system with partial pivoting (LAPACK `gttrf`/`gttrs`).
///
/// `dl`, `d`, `du` are the sub-, main and super-diagonals.
pub fn solve_tridiagonal(
    dl: &[Complex64],
    d: &[Complex64],
    du: &[Complex64],
    b: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = d.len();
    if b.len() != n || (n > 0 && (dl.len() != n - 1 || du.len() != n - 1)) {
        return Err(Error::invalid("tridiagonal dimensions disagree"));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let zero = Complex64::new(0.0, 0.0);
    let mut d = d.to_vec();
    let mut du = du.to_vec();
    let mut dl = dl.to_vec();
    let mut du2 = vec![zero; n.saturating_sub(2)];
    let mut swap = vec![false; n];
    for i in 0..n - 1 {
        if d[i].norm() >= dl[i].norm() {
            if d[i] == zero {
                return Err(Error::numerical("singular local system"));
            }
            let f = dl[i] / d[i];
            dl[i] = f;
            d[i + 1] -= f * du[i];
        } else {
            let f = d[i] / dl[i];
            d[i] = dl[i];
            dl[i] = f;
            let t = du[i];
            du[i] = d[i + 1];
            d[i + 1] = t - f * d[i + 1];
            if i + 2 < n {
                du2[i] = du[i + 1];
                du[i + 1] = -f * du[i + 1];
            }
            swap[i] = true;
        }
    }
    if d[n - 1] == zero {
        return Err(Error::numerical("singular local system"));
    }
    let mut x = b.to_vec();
    for i in 0..n - 1 {
        if swap[i] {
            let t = x[i];
            x[i] = x[i + 1];
            x[i + 1] = t - dl[i] * x[i + 1];
        } else {
            let xi = x[i];
            x[i + 1] -= dl[i] * xi;
        }
    }
    x[n - 1] /= d[n - 1];
    if n > 1 {
        x[n - 2] = (x[n - 2] - du[n - 2] * x[n - 1]) / d[n - 2];
    }
    for i in (0..n.saturating_sub(2)).rev() {
        x[i] = (x[i] - du[i] * x[i + 1] - du2[i] * x[i + 2]) / d[i];
    }
    Ok(x)
}

/// Position of a 1-D node in chain order.
pub fn chain_index(node: Node) -> Result<usize> {
    match node.comp {
        Component::Ex => Ok(2 * node.idx),
        Component::Hy => Ok(2 * node.idx + 1),
        _ => Err(Error::invalid("1-D chains carry only Ex and Hy")),
    }
}

pub fn chain_node(i: usize) -> Node {
    if i % 2 == 0 {
        Node::new(Component::Ex, i / 2)
    } else {
        Node::new(Component::Hy, i / 2)
    }
}

/// Chain-order window `[l, r]` covering `nodes` with one node of margin.
pub fn chain_window(grid: &YeeGrid, nodes: &[Node]) -> Result<(usize, usize)> {
    let idx: Vec<usize> = nodes.iter().map(|&n| chain_index(n)).collect::<Result<_>>()?;
    let (Some(&lo), Some(&hi)) = (idx.iter().min(), idx.iter().max()) else {
        return Err(Error::invalid("empty node set"));
    };
    let last = 2 * grid.dims()[2] - 1;
    // The closure nodes l-1 and r+1 must be updated nodes as well.
    if lo < 3 || hi + 3 > last - 2 {
        return Err(Error::invalid("perturbed cells too close to the domain boundary"));
    }
    Ok((lo - 1, hi + 1))
}

/// Exact 1-D local model.
#[derive(Clone, Debug)]
pub struct ChainModel {
    l: usize,
    r: usize,
    /// Per window row: signed couplings to the previous and next chain node.
    /// E rows enter the system scaled by `z`, H rows unscaled.
    rows: Vec<[f64; 2]>,
    z: Vec<Complex64>,
    rho_l: Vec<Complex64>,
    rho_r: Vec<Complex64>,
}

impl ChainModel {
    /// The nodes whose records close the window: `[l-1, l, r, r+1]`.
    pub fn closure_nodes(window: (usize, usize)) -> [Node; 4] {
        let (l, r) = window;
        [chain_node(l - 1), chain_node(l), chain_node(r), chain_node(r + 1)]
    }

    /// `closure` holds the spectra of the four closure nodes, one entry per
    /// subset run; the boundary ratios are averaged over runs. Frequencies
    /// outside `valid` get a zero ratio.
    pub fn new(
        grid: &YeeGrid,
        dt: f64,
        window: (usize, usize),
        z: Vec<Complex64>,
        closure: &[[Vec<Complex64>; 4]],
        valid: &[bool],
    ) -> Result<Self> {
        if !grid.is_1d() {
            return Err(Error::invalid("chain model requires a 1-D grid"));
        }
        if closure.is_empty() {
            return Err(Error::invalid("chain model needs at least one subset run"));
        }
        let co = update_coefficients(grid, dt);
        let (l, r) = window;
        let rows = (l..=r).map(|i| couplings(grid, &co, chain_node(i))).collect::<Vec<_>>();
        let nf = z.len();
        let runs = closure.len() as f64;
        let avg = |a: usize, b: usize| -> Vec<Complex64> {
            (0..nf)
                .map(|fi| {
                    if !valid[fi] {
                        return Complex64::new(0.0, 0.0);
                    }
                    closure.iter().map(|c| c[a][fi] / c[b][fi]).sum::<Complex64>() / runs
                })
                .collect()
        };
        let rho_l = avg(0, 1);
        let rho_r = avg(3, 2);
        if rho_l.iter().chain(&rho_r).any(|v| !v.is_finite()) {
            return Err(Error::numerical("window closure ratio is not finite"));
        }
        Ok(ChainModel { l, r, rows, z, rho_l, rho_r })
    }

    pub fn window(&self) -> (usize, usize) {
        (self.l, self.r)
    }
}

/// Signed couplings `[to chain i-1, to chain i+1]` in the update of `node`.
fn couplings(grid: &YeeGrid, co: &Coefficients, node: Node) -> [f64; 2] {
    let me = chain_index(node).unwrap_or(0);
    let mut out = [0.0; 2];
    for t in terms(grid, node) {
        let a = crate::fdtd::stencil::term_coefficient(co, node, &t) * t.sign;
        for (other, w) in [(t.plus, a), (t.minus, -a)] {
            let Ok(j) = chain_index(other) else { continue };
            if j + 1 == me {
                out[0] += w;
            } else if j == me + 1 {
                out[1] += w;
            }
        }
    }
    out
}

impl LocalModel for ChainModel {
    fn respond(&self, fi: usize, sources: &[(Node, Complex64)], targets: &[Node]) -> Result<Vec<Complex64>> {
        let z = self.z[fi];
        let n = self.r - self.l + 1;
        let mut dl = vec![Complex64::new(0.0, 0.0); n - 1];
        let mut du = vec![Complex64::new(0.0, 0.0); n - 1];
        let mut d = vec![z - 1.0; n];
        for (i, w) in self.rows.iter().enumerate() {
            let s = if (self.l + i) % 2 == 0 { z } else { Complex64::new(1.0, 0.0) };
            let lower = -s * w[0];
            let upper = -s * w[1];
            if i == 0 {
                d[0] += lower * self.rho_l[fi];
            } else {
                dl[i - 1] = lower;
            }
            if i == n - 1 {
                d[n - 1] += upper * self.rho_r[fi];
            } else {
                du[i] = upper;
            }
        }
        let mut b = vec![Complex64::new(0.0, 0.0); n];
        for &(node, v) in sources {
            let i = chain_index(node)?;
            if i < self.l || i > self.r {
                return Err(Error::invalid("source outside the local window"));
            }
            b[i - self.l] += z * v;
        }
        let x = solve_tridiagonal(&dl, &d, &du, &b)?;
        targets
            .iter()
            .map(|&t| {
                let i = chain_index(t)?;
                if i < self.l || i > self.r {
                    return Err(Error::invalid("target outside the local window"));
                }
                Ok(x[i - self.l])
            })
            .collect()
    }
}

/// Approximate 3-D local model built from per-subset unit-drive responses.
#[derive(Clone, Debug, Default)]
pub struct ProjectionModel {
    /// Driven nodes of each subset.
    drives: Vec<Vec<Node>>,
    /// `response[u][node][fi]`: record spectrum per unit drive of subset `u`.
    response: Vec<HashMap<Node, Vec<Complex64>>>,
}

impl ProjectionModel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds one subset run: its driven nodes and the transfer spectra
    /// (record spectrum over drive spectrum) at every node of interest.
    pub fn add_subset(&mut self, drives: Vec<Node>, response: HashMap<Node, Vec<Complex64>>) {
        self.drives.push(drives);
        self.response.push(response);
    }
}

impl LocalModel for ProjectionModel {
    fn respond(&self, fi: usize, sources: &[(Node, Complex64)], targets: &[Node]) -> Result<Vec<Complex64>> {
        let lookup: HashMap<Node, Complex64> = sources.iter().cloned().collect();
        let mut out = vec![Complex64::new(0.0, 0.0); targets.len()];
        for (drives, resp) in self.drives.iter().zip(&self.response) {
            let beta = drives.iter().map(|n| lookup.get(n).copied().unwrap_or_default()).sum::<Complex64>()
                / drives.len().max(1) as f64;
            if beta == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (o, t) in out.iter_mut().zip(targets) {
                let r = resp.get(t).ok_or_else(|| Error::invalid(format!("no subset response recorded at {t:?}")))?;
                *o += r[fi] * beta;
            }
        }
        Ok(out)
    }
}
