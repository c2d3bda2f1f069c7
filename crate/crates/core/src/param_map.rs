//! Design parameters and analytic derivatives of the update coefficients.
//!
//! Every coefficient touched by a parameter factors as `a = D * w`, where `D`
//! is the parameter-dependent factor (`1/size` or `1/eps_edge`) and `w` the
//! remaining constant. A [`SourceNode`] stores the derivatives of `D` together
//! with the signed stencil weights `w`, so that the order-`m` equivalent source
//! at the node is `sum_q C(m, q) D^(m-q) c^(q)` with `c^(q)` the stencil applied
//! to the order-`q` field derivative.

use crate::consts::{EPS0, MU0};
use crate::error::{Error, Result};
use crate::fdtd::stencil::{is_updated, terms};
use crate::fdtd::{Component, Node};
use crate::grid::{Axis, CellSubset, YeeGrid};
use crate::poly::factorial;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamKind {
    /// Cell size along one axis.
    Geometric,
    /// Relative permittivity.
    Material,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignParameter {
    pub name: String,
    pub subset: CellSubset,
    pub kind: ParamKind,
    /// Nominal value in metres or relative permittivity; informational.
    pub nominal: f64,
}

impl DesignParameter {
    pub fn new(name: impl Into<String>, subset: CellSubset, nominal: f64) -> Self {
        let kind = if subset.axis == Axis::Material { ParamKind::Material } else { ParamKind::Geometric };
        DesignParameter { name: name.into(), subset, kind, nominal }
    }

    /// Ensures the subset lies inside the grid and away from the outer faces.
    pub fn check(&self, grid: &YeeGrid) -> Result<()> {
        self.subset.check(grid)?;
        let n = grid.dims();
        for &p in self.subset.indices() {
            let q = grid.coords(p - 1);
            let touches = (0..3).any(|d| n[d] > 1 && (q[d] == 0 || q[d] + 1 == n[d]));
            if touches {
                return Err(Error::invalid(format!("parameter {}: cell {p} touches the domain boundary", self.name)));
            }
        }
        Ok(())
    }

    /// Rejects overlapping or identical parameter pairs.
    pub fn check_disjoint(&self, other: &DesignParameter) -> Result<()> {
        if self.name == other.name {
            return Err(Error::invalid(format!(
                "mixed derivative of {} with itself: use the second-order derivative",
                self.name
            )));
        }
        if self.subset.overlaps(&other.subset) {
            return Err(Error::invalid(format!(
                "parameters {} and {} share cells; overlapping subsets are not supported",
                self.name, other.name
            )));
        }
        Ok(())
    }
}

/// `d^m (1/size) / d size^m = (-1)^m m! size^-(m+1)`.
pub fn size_reciprocal_derivative(delta: f64, m: usize) -> f64 {
    let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
    sign * factorial(m) * delta.powi(-(m as i32 + 1))
}

/// `d^m/d x^m` of `1/(x0 + b x)` at `x = 0`.
fn scaled_reciprocal_derivative(x0: f64, b: f64, m: usize) -> f64 {
    size_reciprocal_derivative(x0, m) * b.powi(m as i32)
}

/// Order-`m` derivatives of the coefficients stored at one storage index,
/// laid out like [`Coefficients`](crate::fdtd::Coefficients).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CoeffDerivative {
    pub e: [[f64; 2]; 3],
    pub h: [[f64; 2]; 3],
}

impl CoeffDerivative {
    pub fn is_zero(&self) -> bool {
        self.e.iter().chain(self.h.iter()).flatten().all(|&v| v == 0.0)
    }
}

/// Fraction of the cells sharing an E edge that belong to `subset`.
pub fn edge_fraction(grid: &YeeGrid, subset: &CellSubset, dir: usize, idx: usize) -> f64 {
    let cells = grid.edge_cells(dir, idx);
    let inside = cells.iter().filter(|&&c| subset.contains(c + 1)).count();
    inside as f64 / cells.len() as f64
}

/// `d^m a / d xi^m` for every coefficient stored at 1-based `cell`.
///
/// Geometric parameters only touch the coefficients of their own cells along
/// their axis. Material parameters act on E coefficients through the averaged
/// edge permittivity, so in 3-D an edge next to the subset also responds.
pub fn coeff_derivative(
    grid: &YeeGrid,
    dt: f64,
    param: &DesignParameter,
    cell: usize,
    m: usize,
) -> Result<CoeffDerivative> {
    if m < 1 {
        return Err(Error::invalid("derivative order must be at least 1"));
    }
    if cell == 0 || cell > grid.cell_count() {
        return Err(Error::invalid(format!("cell {cell} outside the grid")));
    }
    let idx = cell - 1;
    let mut out = CoeffDerivative::default();
    match param.subset.axis.dir() {
        Some(a) => {
            if !param.subset.contains(cell) {
                return Ok(out);
            }
            let dd = size_reciprocal_derivative(grid.size(a, idx), m);
            for c in 0..3 {
                let slot = if a == (c + 1) % 3 {
                    0
                } else if a == (c + 2) % 3 {
                    1
                } else {
                    continue;
                };
                out.e[c][slot] = dt / (EPS0 * grid.edge_eps_r(c, idx)) * dd;
                out.h[c][slot] = dt / (MU0 * grid.mu_r(idx)) * dd;
            }
        }
        None => {
            for c in 0..3 {
                let b = edge_fraction(grid, &param.subset, c, idx);
                if b == 0.0 {
                    continue;
                }
                let dd = scaled_reciprocal_derivative(grid.edge_eps_r(c, idx), b, m);
                for (slot, a) in [(0, (c + 1) % 3), (1, (c + 2) % 3)] {
                    out.e[c][slot] = dt / (EPS0 * grid.size(a, idx)) * dd;
                }
            }
        }
    }
    Ok(out)
}

/// Cross derivative of any coefficient in two disjoint parameters: always 0.
pub fn mixed_coeff_derivative(u: &DesignParameter, v: &DesignParameter, _cell: usize) -> Result<f64> {
    u.check_disjoint(v)?;
    Ok(0.0)
}

/// An updated field node whose coefficient depends on a parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceNode {
    pub node: Node,
    /// `D^(m)` for `m = 0..=order`.
    pub factor: Vec<f64>,
    /// Signed weights `w` on field nodes; the stencil input is `sum w F(node)`.
    pub stencil: Vec<(Node, f64)>,
}

impl SourceNode {
    /// Stencil input evaluated on a field snapshot.
    pub fn apply(&self, value: impl Fn(Node) -> f64) -> f64 {
        self.stencil.iter().map(|&(n, w)| w * value(n)).sum()
    }
}

/// All source nodes of `param`, with factor derivatives up to `order`.
///
/// Nodes are listed E before H, each group in storage order.
pub fn source_nodes(grid: &YeeGrid, dt: f64, param: &DesignParameter, order: usize) -> Result<Vec<SourceNode>> {
    param.check(grid)?;
    let mut out = Vec::new();
    let comps: Vec<Component> = if grid.is_1d() {
        vec![Component::Ex, Component::Hy]
    } else {
        (0..3).map(Component::electric).chain((0..3).map(Component::magnetic)).collect()
    };
    let candidates = candidate_indices(grid, param);
    for comp in comps {
        let c = comp.dir();
        for &idx in &candidates {
            let node = Node::new(comp, idx);
            if !is_updated(grid, node) {
                continue;
            }
            let (base, factor): (f64, Box<dyn Fn(usize) -> f64>) = match param.subset.axis.dir() {
                Some(a) => {
                    if !param.subset.contains(idx + 1) {
                        continue;
                    }
                    let k = if comp.is_electric() {
                        dt / (EPS0 * grid.edge_eps_r(c, idx))
                    } else {
                        dt / (MU0 * grid.mu_r(idx))
                    };
                    let size = grid.size(a, idx);
                    (k, Box::new(move |m| size_reciprocal_derivative(size, m)))
                }
                None => {
                    if !comp.is_electric() {
                        continue;
                    }
                    let b = edge_fraction(grid, &param.subset, c, idx);
                    if b == 0.0 {
                        continue;
                    }
                    let e0 = grid.edge_eps_r(c, idx);
                    (dt / EPS0, Box::new(move |m| scaled_reciprocal_derivative(e0, b, m)))
                }
            };
            let mut stencil = Vec::new();
            for t in terms(grid, node) {
                let w = match param.subset.axis.dir() {
                    Some(a) if t.axis != a => continue,
                    Some(_) => base * t.sign,
                    None => base / grid.size(t.axis, idx) * t.sign,
                };
                stencil.push((t.plus, w));
                stencil.push((t.minus, -w));
            }
            if stencil.is_empty() {
                continue;
            }
            out.push(SourceNode { node, factor: (0..=order).map(&factor).collect(), stencil });
        }
    }
    Ok(out)
}

/// Storage indices whose coefficients may depend on `param`.
fn candidate_indices(grid: &YeeGrid, param: &DesignParameter) -> Vec<usize> {
    let mut v: Vec<usize> = param.subset.indices().iter().map(|p| p - 1).collect();
    if param.kind == ParamKind::Material && !grid.is_1d() {
        let n = grid.dims();
        let s = [1, n[0], n[0] * n[1]];
        let base = v.clone();
        for idx in base {
            let q = grid.coords(idx);
            for d in 0..3 {
                if q[d] + 1 < n[d] {
                    v.push(idx + s[d]);
                }
            }
            for (a, b) in [(0, 1), (1, 2), (0, 2)] {
                if q[a] + 1 < n[a] && q[b] + 1 < n[b] {
                    v.push(idx + s[a] + s[b]);
                }
            }
        }
        v.sort_unstable();
        v.dedup();
    }
    v
}
