//! Discretized domain: cell sizes, materials, PEC edges and index mapping.
//!
//! Storage is 0-based (`idx = i + nx*(j + ny*k)`); the public linear index is
//! 1-based, `p = idx + 1`. Sizes are stored as lengths; reciprocals are formed
//! where coefficients are assembled.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// Which property of a cell a perturbation acts on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
    /// Relative permittivity.
    Material,
}

impl Axis {
    /// Spatial direction index (0, 1, 2), `None` for material.
    pub fn dir(self) -> Option<usize> {
        match self {
            Axis::X => Some(0),
            Axis::Y => Some(1),
            Axis::Z => Some(2),
            Axis::Material => None,
        }
    }

    pub fn from_dir(d: usize) -> Axis {
        [Axis::X, Axis::Y, Axis::Z][d]
    }

    pub fn name(self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
            Axis::Material => "material",
        }
    }

    pub fn parse(s: &str) -> Option<Axis> {
        match s.trim().to_ascii_lowercase().as_str() {
            "x" => Some(Axis::X),
            "y" => Some(Axis::Y),
            "z" => Some(Axis::Z),
            "material" | "eps" | "eps_r" => Some(Axis::Material),
            _ => None,
        }
    }
}

/// `(k-1)*nx*ny + (j-1)*nx + i` for 1-based `(i, j, k)`.
///
/// Only the lower bounds and the `i`, `j` upper bounds can be checked here;
/// [`YeeGrid::linear_index`] checks all three.
pub fn linear_index(i: usize, j: usize, k: usize, nx: usize, ny: usize) -> Result<usize> {
    if i == 0 || j == 0 || k == 0 || i > nx || j > ny {
        return Err(Error::invalid(format!("cell ({i},{j},{k}) outside an {nx}x{ny} layer (indices are 1-based)")));
    }
    Ok((k - 1) * nx * ny + (j - 1) * nx + i)
}

/// Inclusive 1-based box of cells, as written `i0:i1, j0:j1, k0:k1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl CellBox {
    pub fn new(lo: [usize; 3], hi: [usize; 3]) -> Self {
        CellBox { lo, hi }
    }

    pub fn single(i: usize, j: usize, k: usize) -> Self {
        CellBox { lo: [i, j, k], hi: [i, j, k] }
    }

    pub fn count(&self) -> usize {
        (0..3).map(|d| self.hi[d] + 1 - self.lo[d]).product()
    }

    /// 1-based linear indices, ascending.
    pub fn linear_indices(&self, grid: &YeeGrid) -> Result<Vec<usize>> {
        grid.check_box(self)?;
        let mut out = Vec::with_capacity(self.count());
        for k in self.lo[2]..=self.hi[2] {
            for j in self.lo[1]..=self.hi[1] {
                for i in self.lo[0]..=self.hi[0] {
                    out.push(grid.linear_index(i, j, k)?);
                }
            }
        }
        Ok(out)
    }
}

/// Cells affected by one design parameter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSubset {
    indices: Vec<usize>,
    pub axis: Axis,
}

impl CellSubset {
    /// Sorts and deduplicates; index `0` is rejected since indices are 1-based.
    pub fn new(mut indices: Vec<usize>, axis: Axis) -> Result<Self> {
        indices.sort_unstable();
        indices.dedup();
        if indices.first() == Some(&0) {
            return Err(Error::invalid("cell subset contains index 0 (indices are 1-based)"));
        }
        Ok(CellSubset { indices, axis })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn contains(&self, p: usize) -> bool {
        self.indices.binary_search(&p).is_ok()
    }

    pub fn check(&self, grid: &YeeGrid) -> Result<()> {
        match self.indices.last() {
            Some(&p) if p > grid.cell_count() => {
                Err(Error::invalid(format!("subset index {p} exceeds cell count {}", grid.cell_count())))
            }
            _ => Ok(()),
        }
    }

    pub fn overlaps(&self, other: &CellSubset) -> bool {
        let (mut a, mut b) = (self.indices.iter().peekable(), other.indices.iter().peekable());
        while let (Some(&&x), Some(&&y)) = (a.peek(), b.peek()) {
            match x.cmp(&y) {
                std::cmp::Ordering::Less => {
                    a.next();
                }
                std::cmp::Ordering::Greater => {
                    b.next();
                }
                std::cmp::Ordering::Equal => return true,
            }
        }
        false
    }
}

/// Yee grid with per-cell sizes and materials.
///
/// Perturbations are held as exact offsets on top of the nominal values, so
/// `perturb(+d)` followed by `perturb(-d)` restores an identical grid.
#[derive(Clone, Debug, PartialEq)]
pub struct YeeGrid {
    n: [usize; 3],
    sizes: [Vec<f64>; 3],
    eps_r: Vec<f64>,
    mu_r: Vec<f64>,
    /// PEC flags per E edge, indexed by component direction.
    pec: [Vec<bool>; 3],
    /// (property, idx) -> offset, property 0..3 spatial, 3 material.
    offsets: BTreeMap<(u8, usize), f64>,
}

impl YeeGrid {
    /// Uniform grid of vacuum cells. 1-D grids use `nx = ny = 1`.
    pub fn uniform(n: [usize; 3], d: [f64; 3]) -> Result<Self> {
        if n.contains(&0) {
            return Err(Error::invalid("grid dimensions must be at least 1"));
        }
        if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::invalid("cell sizes must be positive"));
        }
        let p = n[0] * n[1] * n[2];
        Ok(YeeGrid {
            n,
            sizes: [vec![d[0]; p], vec![d[1]; p], vec![d[2]; p]],
            eps_r: vec![1.0; p],
            mu_r: vec![1.0; p],
            pec: [vec![false; p], vec![false; p], vec![false; p]],
            offsets: BTreeMap::new(),
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.n
    }

    pub fn cell_count(&self) -> usize {
        self.n[0] * self.n[1] * self.n[2]
    }

    /// Propagation along z only, with the dedicated Ex/Hy update path.
    pub fn is_1d(&self) -> bool {
        self.n[0] == 1 && self.n[1] == 1
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.n[0] * (j + self.n[1] * k)
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.n[0];
        let r = idx / self.n[0];
        [i, r % self.n[1], r / self.n[1]]
    }

    /// 1-based linear index with full bounds checking.
    pub fn linear_index(&self, i: usize, j: usize, k: usize) -> Result<usize> {
        if k > self.n[2] {
            return Err(Error::invalid(format!("k = {k} exceeds nz = {}", self.n[2])));
        }
        linear_index(i, j, k, self.n[0], self.n[1])
    }

    /// Inverse of [`linear_index`](Self::linear_index), 1-based.
    pub fn cell_of(&self, p: usize) -> Result<[usize; 3]> {
        if p == 0 || p > self.cell_count() {
            return Err(Error::invalid(format!("linear index {p} out of range")));
        }
        let c = self.coords(p - 1);
        Ok([c[0] + 1, c[1] + 1, c[2] + 1])
    }

    pub fn check_box(&self, b: &CellBox) -> Result<()> {
        for d in 0..3 {
            if b.lo[d] == 0 || b.lo[d] > b.hi[d] || b.hi[d] > self.n[d] {
                return Err(Error::invalid(format!(
                    "range {}:{} on axis {} outside 1:{}",
                    b.lo[d],
                    b.hi[d],
                    Axis::from_dir(d).name(),
                    self.n[d]
                )));
            }
        }
        Ok(())
    }

    /// Cell size along `dir` at storage index `idx`, including perturbations.
    #[inline]
    pub fn size(&self, dir: usize, idx: usize) -> f64 {
        let base = self.sizes[dir][idx];
        if self.offsets.is_empty() {
            base
        } else {
            base + self.offsets.get(&(dir as u8, idx)).copied().unwrap_or(0.0)
        }
    }

    #[inline]
    pub fn eps_r(&self, idx: usize) -> f64 {
        let base = self.eps_r[idx];
        if self.offsets.is_empty() {
            base
        } else {
            base + self.offsets.get(&(3, idx)).copied().unwrap_or(0.0)
        }
    }

    #[inline]
    pub fn mu_r(&self, idx: usize) -> f64 {
        self.mu_r[idx]
    }

    pub fn cell_volume(&self, idx: usize) -> f64 {
        self.size(0, idx) * self.size(1, idx) * self.size(2, idx)
    }

    pub fn set_size(&mut self, dir: usize, idx: usize, v: f64) -> Result<()> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid("cell size must be positive"));
        }
        self.sizes[dir][idx] = v;
        Ok(())
    }

    pub fn set_eps_r(&mut self, idx: usize, v: f64) -> Result<()> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid("eps_r must be positive"));
        }
        self.eps_r[idx] = v;
        Ok(())
    }

    pub fn set_mu_r(&mut self, idx: usize, v: f64) -> Result<()> {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid("mu_r must be positive"));
        }
        self.mu_r[idx] = v;
        Ok(())
    }

    #[inline]
    pub fn is_pec(&self, dir: usize, idx: usize) -> bool {
        self.pec[dir][idx]
    }

    pub fn set_pec(&mut self, dir: usize, idx: usize, on: bool) {
        self.pec[dir][idx] = on;
    }

    /// Marks the E edges lying on the low face (along `normal`) of every cell
    /// in `b`: a zero-thickness conducting sheet.
    pub fn add_pec_sheet(&mut self, normal: usize, b: &CellBox) -> Result<()> {
        self.check_box(b)?;
        for t in (0..3).filter(|&t| t != normal) {
            let u = 3 - normal - t;
            let mut lo = [0usize; 3];
            let mut hi = [0usize; 3];
            lo[t] = b.lo[t] - 1;
            hi[t] = b.hi[t] - 1;
            lo[u] = b.lo[u] - 1;
            hi[u] = b.hi[u].min(self.n[u] - 1);
            lo[normal] = b.lo[normal] - 1;
            hi[normal] = b.hi[normal] - 1;
            self.mark_edges(t, lo, hi);
        }
        Ok(())
    }

    /// Marks all twelve edges of every cell in `b`: a solid conductor.
    pub fn add_pec_block(&mut self, b: &CellBox) -> Result<()> {
        self.check_box(b)?;
        for t in 0..3 {
            let mut lo = [0usize; 3];
            let mut hi = [0usize; 3];
            for d in 0..3 {
                lo[d] = b.lo[d] - 1;
                hi[d] = if d == t { b.hi[d] - 1 } else { b.hi[d].min(self.n[d] - 1) };
            }
            self.mark_edges(t, lo, hi);
        }
        Ok(())
    }

    fn mark_edges(&mut self, t: usize, lo: [usize; 3], hi: [usize; 3]) {
        for k in lo[2]..=hi[2] {
            for j in lo[1]..=hi[1] {
                for i in lo[0]..=hi[0] {
                    let idx = self.idx(i, j, k);
                    self.pec[t][idx] = true;
                }
            }
        }
    }

    /// Permittivity seen by the E component along `dir` stored at `idx`.
    ///
    /// 1-D grids place E at cell centres, so the cell's own value applies.
    /// In 3-D the edge is shared by up to four cells and takes their mean.
    pub fn edge_eps_r(&self, dir: usize, idx: usize) -> f64 {
        if self.is_1d() {
            return self.eps_r(idx);
        }
        let c = self.coords(idx);
        let (a, b) = ((dir + 1) % 3, (dir + 2) % 3);
        let mut sum = 0.0;
        let mut cnt = 0.0;
        for da in 0..2 {
            for db in 0..2 {
                if (da == 1 && c[a] == 0) || (db == 1 && c[b] == 0) {
                    continue;
                }
                let mut q = c;
                q[a] -= da;
                q[b] -= db;
                sum += self.eps_r(self.idx(q[0], q[1], q[2]));
                cnt += 1.0;
            }
        }
        sum / cnt
    }

    /// Storage indices of the cells sharing the E edge `(dir, idx)`.
    pub fn edge_cells(&self, dir: usize, idx: usize) -> Vec<usize> {
        if self.is_1d() {
            return vec![idx];
        }
        let c = self.coords(idx);
        let (a, b) = ((dir + 1) % 3, (dir + 2) % 3);
        let mut out = Vec::with_capacity(4);
        for da in 0..2 {
            for db in 0..2 {
                if (da == 1 && c[a] == 0) || (db == 1 && c[b] == 0) {
                    continue;
                }
                let mut q = c;
                q[a] -= da;
                q[b] -= db;
                out.push(self.idx(q[0], q[1], q[2]));
            }
        }
        out
    }

    /// True when each size array varies only along its own axis. Reciprocity
    /// of the per-cell update holds on such grids.
    pub fn is_tensor_product(&self) -> bool {
        for d in 0..3 {
            for idx in 0..self.cell_count() {
                let mut c = self.coords(idx);
                c[(d + 1) % 3] = 0;
                c[(d + 2) % 3] = 0;
                let r = self.idx(c[0], c[1], c[2]);
                if self.size(d, idx) != self.size(d, r) {
                    return false;
                }
            }
        }
        true
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.cell_count();
        let ok_len = self.sizes.iter().all(|s| s.len() == p)
            && self.eps_r.len() == p
            && self.mu_r.len() == p
            && self.pec.iter().all(|s| s.len() == p);
        if !ok_len {
            return Err(Error::invalid("per-cell arrays must have exactly P entries"));
        }
        for idx in 0..p {
            for d in 0..3 {
                if !(self.size(d, idx) > 0.0) {
                    return Err(Error::invalid(format!("non-positive cell size at cell {}", idx + 1)));
                }
            }
            if !(self.eps_r(idx) > 0.0) || !(self.mu_r(idx) > 0.0) {
                return Err(Error::invalid(format!("non-positive material at cell {}", idx + 1)));
            }
        }
        Ok(())
    }
}

/// Returns a copy of `grid` with the subset's sizes (or permittivities)
/// shifted by `delta`. Used by the finite-difference oracles.
pub fn perturb(grid: &YeeGrid, subset: &CellSubset, delta: f64) -> Result<YeeGrid> {
    subset.check(grid)?;
    if !delta.is_finite() {
        return Err(Error::invalid("perturbation must be finite"));
    }
    let prop = subset.axis.dir().unwrap_or(3) as u8;
    let mut out = grid.clone();
    for &p in subset.indices() {
        let idx = p - 1;
        let current = match subset.axis.dir() {
            Some(d) => grid.size(d, idx),
            None => grid.eps_r(idx),
        };
        if !(current + delta > 0.0) {
            return Err(Error::invalid(format!(
                "perturbation {delta} makes cell {p} {} non-positive",
                if prop == 3 { "permittivity" } else { "size" }
            )));
        }
        let entry = out.offsets.entry((prop, idx)).or_insert(0.0);
        *entry += delta;
        if *entry == 0.0 {
            out.offsets.remove(&(prop, idx));
        }
    }
    Ok(out)
}
