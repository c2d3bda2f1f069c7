//! The Yee update written as data.
//!
//! Every field component is updated as
//! `F += sum_t coef_t * sign_t * (F'(plus_t) - F'(minus_t))` with two terms,
//! each tied to one axis. The kernels in [`engine`](super::engine) are
//! hand-unrolled versions of this table; the table itself drives everything
//! that needs individual nodes (equivalent sources, local responses, the
//! Taylor oracle).
//!
//! For E along `c` with `a1 = c+1`, `a2 = c+2` (mod 3):
//! `E_c += Ae^{a1} (H_{a2}(p) - H_{a2}(p-a1)) - Ae^{a2} (H_{a1}(p) - H_{a1}(p-a2))`.
//! For H along `c`:
//! `H_c += -Ah^{a1} (E_{a2}(p+a1) - E_{a2}(p)) + Ah^{a2} (E_{a1}(p+a2) - E_{a1}(p))`.
//! The 1-D path keeps only the z terms of Ex and Hy.

use crate::consts::{EPS0, MU0};
use crate::grid::YeeGrid;

use super::{Component, Node};

/// One curl term of a node update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Term {
    /// Axis whose cell size enters the coefficient.
    pub axis: usize,
    /// Slot (0 or 1) in [`Coefficients`].
    pub slot: usize,
    pub sign: f64,
    pub plus: Node,
    pub minus: Node,
}

#[inline]
fn axes(c: usize) -> (usize, usize) {
    ((c + 1) % 3, (c + 2) % 3)
}

/// Curl terms of the update of `node`; empty for nodes the engine never
/// updates through the curl (boundary, ghost and PEC nodes).
pub fn terms(grid: &YeeGrid, node: Node) -> Vec<Term> {
    if !is_updated(grid, node) {
        return Vec::new();
    }
    let n = grid.dims();
    let s = [1, n[0], n[0] * n[1]];
    let c = node.comp.dir();
    let (a1, a2) = axes(c);
    let p = node.idx;
    let mut out = Vec::with_capacity(2);
    if node.comp.is_electric() {
        let h1 = Component::magnetic(a1);
        let h2 = Component::magnetic(a2);
        if !grid.is_1d() || (c == 0 && a2 == 2) {
            if !grid.is_1d() {
                out.push(Term {
                    axis: a1,
                    slot: 0,
                    sign: 1.0,
                    plus: Node::new(h2, p),
                    minus: Node::new(h2, p - s[a1]),
                });
            }
            out.push(Term { axis: a2, slot: 1, sign: -1.0, plus: Node::new(h1, p), minus: Node::new(h1, p - s[a2]) });
        }
    } else {
        let e1 = Component::electric(a1);
        let e2 = Component::electric(a2);
        if !grid.is_1d() || c == 1 {
            out.push(Term { axis: a1, slot: 0, sign: -1.0, plus: Node::new(e2, p + s[a1]), minus: Node::new(e2, p) });
            if !grid.is_1d() {
                out.push(Term {
                    axis: a2,
                    slot: 1,
                    sign: 1.0,
                    plus: Node::new(e1, p + s[a2]),
                    minus: Node::new(e1, p),
                });
            }
        }
    }
    out
}

/// Whether the engine applies the curl update to `node` (interior, not PEC).
pub fn is_updated(grid: &YeeGrid, node: Node) -> bool {
    let n = grid.dims();
    let c = node.comp.dir();
    let q = grid.coords(node.idx);
    if grid.is_1d() {
        return match node.comp {
            Component::Ex => q[2] >= 1 && q[2] + 2 <= n[2] && !grid.is_pec(0, node.idx),
            Component::Hy => q[2] + 2 <= n[2],
            _ => false,
        };
    }
    if node.comp.is_electric() {
        if grid.is_pec(c, node.idx) {
            return false;
        }
        (0..3).all(|d| if d == c { q[d] + 2 <= n[d] } else { q[d] >= 1 && q[d] + 2 <= n[d] })
    } else {
        (0..3).all(|d| d == c || q[d] + 2 <= n[d])
    }
}

/// Update coefficients per component and term slot.
///
/// `e[c][t] = dt / (eps0 * eps_edge * size_axis)`, `h[c][t] = dt / (mu0 * mu * size_axis)`
/// with the axis of slot `t` given by the term table.
#[derive(Clone, Debug)]
pub struct Coefficients {
    pub e: [[Vec<f64>; 2]; 3],
    pub h: [[Vec<f64>; 2]; 3],
}

impl Coefficients {
    /// Coefficient of the term along `axis` in the update of `comp` at `idx`.
    pub fn get(&self, comp: Component, axis: usize, idx: usize) -> Option<f64> {
        let c = comp.dir();
        let (a1, a2) = axes(c);
        let slot = if axis == a1 {
            0
        } else if axis == a2 {
            1
        } else {
            return None;
        };
        let arr = if comp.is_electric() { &self.e[c][slot] } else { &self.h[c][slot] };
        Some(arr[idx])
    }
}

/// Per-cell update coefficients `Ae = dt/(eps0 eps_r size)`, `Ah = dt/(mu0 mu_r size)`.
pub fn update_coefficients(grid: &YeeGrid, dt: f64) -> Coefficients {
    let p = grid.cell_count();
    let mk = || [vec![0.0; p], vec![0.0; p]];
    let mut co = Coefficients { e: [mk(), mk(), mk()], h: [mk(), mk(), mk()] };
    for c in 0..3 {
        let (a1, a2) = axes(c);
        for idx in 0..p {
            let ie = dt / (EPS0 * grid.edge_eps_r(c, idx));
            let ih = dt / (MU0 * grid.mu_r(idx));
            for (slot, a) in [(0, a1), (1, a2)] {
                let inv = 1.0 / grid.size(a, idx);
                co.e[c][slot][idx] = ie * inv;
                co.h[c][slot][idx] = ih * inv;
            }
        }
    }
    co
}

/// Coefficient used by `term` in the update of `node`.
pub fn term_coefficient(co: &Coefficients, node: Node, term: &Term) -> f64 {
    let c = node.comp.dir();
    if node.comp.is_electric() {
        co.e[c][term.slot][node.idx]
    } else {
        co.h[c][term.slot][node.idx]
    }
}
