//! Reference derivatives: central differences on perturbed grids and a
//! forward-mode FDTD carrying truncated Taylor coefficients.
//!
//! The forward oracle stores one field array per Taylor order. Every order
//! gets the plain update with nominal coefficients; at nodes whose
//! coefficients depend on the parameter it adds the product terms
//! `sum_{q>=1} a_q * diff(F_{m-q})`, where `a_q` are the Taylor coefficients of
//! the lifted update coefficient. The source drives order 0 only. The order-m
//! derivative is `m! F_m`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::consts::{EPS0, MU0};
use crate::error::{Error, Result};
use crate::fdtd::stencil::terms;
use crate::fdtd::{cfl_limit, Engine, FieldState, Node};
use crate::grid::{perturb, YeeGrid};
use crate::param_map::{edge_fraction, DesignParameter};
use crate::poly::{factorial, PolyValue};
use crate::solver::Problem;
use crate::spectral::{dft, Spectrum};

type C = Complex64;

/// `(X(+h) - X(-h)) / 2h` on a closure; exact for linear `X`.
pub fn cfd_first_with(f: impl Fn(f64) -> Result<Vec<C>>, h: f64) -> Result<Vec<C>> {
    check_step(h)?;
    let (p, m) = (f(h)?, f(-h)?);
    Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

/// `(X(+h) - 2 X(0) + X(-h)) / h^2`; exact for quadratic `X`.
pub fn cfd_second_with(f: impl Fn(f64) -> Result<Vec<C>>, h: f64) -> Result<Vec<C>> {
    check_step(h)?;
    let (p, z, m) = (f(h)?, f(0.0)?, f(-h)?);
    Ok(p.iter().zip(&z).zip(&m).map(|((a, b), c)| (a - b * 2.0 + c) / (h * h)).collect())
}

/// Four-corner cross difference; exact for bilinear `X`.
pub fn cfd_mixed_with(f: impl Fn(f64, f64) -> Result<Vec<C>>, hu: f64, hv: f64) -> Result<Vec<C>> {
    check_step(hu)?;
    check_step(hv)?;
    let pp = f(hu, hv)?;
    let pm = f(hu, -hv)?;
    let mp = f(-hu, hv)?;
    let mm = f(-hu, -hv)?;
    let s = 4.0 * hu * hv;
    Ok((0..pp.len()).map(|i| (pp[i] - pm[i] - mp[i] + mm[i]) / s).collect())
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    Ok(())
}

/// Default step: a tenth of the affected cell size, or 1% of the permittivity.
pub fn default_step(grid: &YeeGrid, param: &DesignParameter) -> f64 {
    let idx: Vec<usize> = param.subset.indices().iter().map(|p| p - 1).collect();
    if idx.is_empty() {
        return 1e-6;
    }
    let mean = |f: &dyn Fn(usize) -> f64| idx.iter().map(|&i| f(i)).sum::<f64>() / idx.len() as f64;
    match param.subset.axis.dir() {
        Some(d) => 0.1 * mean(&|i| grid.size(d, i)),
        None => 0.01 * mean(&|i| grid.eps_r(i)),
    }
}

fn perturbed(problem: &Problem, shifts: &[(usize, f64)]) -> Result<Vec<C>> {
    let mut g = problem.grid.clone();
    for &(p, h) in shifts {
        g = perturb(&g, &problem.params[p].subset, h)?;
    }
    if problem.dt > cfl_limit(&g) {
        return Err(Error::invalid("perturbed grid violates the stability limit"));
    }
    Ok(problem.port_spectrum(&g, &problem.counter)?.0.values)
}

/// First central difference of the port field; two runs.
pub fn cfd_first(problem: &Problem, name: &str, h: f64) -> Result<Spectrum> {
    let p = problem.param_index(name)?;
    let v = cfd_first_with(|d| perturbed(problem, &[(p, d)]), h)?;
    Spectrum::new(&problem.freqs, v)
}

/// Second central difference of the port field; three runs.
pub fn cfd_second(problem: &Problem, name: &str, h: f64) -> Result<Spectrum> {
    let p = problem.param_index(name)?;
    let v = cfd_second_with(|d| perturbed(problem, &[(p, d)]), h)?;
    Spectrum::new(&problem.freqs, v)
}

/// Cross difference of the port field; four runs.
pub fn cfd_mixed(problem: &Problem, u: &str, v: &str, hu: f64, hv: f64) -> Result<Spectrum> {
    let (pu, pv) = (problem.param_index(u)?, problem.param_index(v)?);
    problem.params[pu].check_disjoint(&problem.params[pv])?;
    let out = cfd_mixed_with(|a, b| perturbed(problem, &[(pu, a), (pv, b)]), hu, hv)?;
    Spectrum::new(&problem.freqs, out)
}

/// A node whose update coefficients carry Taylor terms.
struct Lifted {
    node: Node,
    /// Per curl term: Taylor coefficients of `coef * sign`, orders `1..=M`,
    /// and the two field nodes of the difference.
    terms: Vec<(Vec<f64>, Node, Node)>,
}

fn lifted_nodes(grid: &YeeGrid, dt: f64, param: &DesignParameter, order: usize) -> Result<Vec<Lifted>> {
    param.check(grid)?;
    let mut out = Vec::new();
    let comps = if grid.is_1d() {
        vec![crate::fdtd::Component::Ex, crate::fdtd::Component::Hy]
    } else {
        (0..3).map(crate::fdtd::Component::electric).chain((0..3).map(crate::fdtd::Component::magnetic)).collect()
    };
    for comp in comps {
        for idx in 0..grid.cell_count() {
            let node = Node::new(comp, idx);
            let c = comp.dir();
            let mut lifted_terms = Vec::new();
            for t in terms(grid, node) {
                let poly = match param.subset.axis.dir() {
                    Some(a) => {
                        if t.axis != a || !param.subset.contains(idx + 1) {
                            continue;
                        }
                        let k = if comp.is_electric() {
                            dt / (EPS0 * grid.edge_eps_r(c, idx))
                        } else {
                            dt / (MU0 * grid.mu_r(idx))
                        };
                        PolyValue::variable(grid.size(a, idx), order).recip()?.scale(k)
                    }
                    None => {
                        if !comp.is_electric() {
                            continue;
                        }
                        let b = edge_fraction(grid, &param.subset, c, idx);
                        if b == 0.0 {
                            continue;
                        }
                        PolyValue::affine(grid.edge_eps_r(c, idx), b, order)
                            .recip()?
                            .scale(dt / (EPS0 * grid.size(t.axis, idx)))
                    }
                };
                let coeffs: Vec<f64> = poly.coeffs()[1..].iter().map(|v| v * t.sign).collect();
                lifted_terms.push((coeffs, t.plus, t.minus));
            }
            if !lifted_terms.is_empty() {
                out.push(Lifted { node, terms: lifted_terms });
            }
        }
    }
    Ok(out)
}

/// Probe series per order: `out[m][probe][n]` holds Taylor coefficient `m`.
///
/// With `lift = false` the correction terms are skipped, which must leave
/// order 0 identical to a plain run.
pub fn dual_records(
    problem: &Problem,
    name: &str,
    order: usize,
    probes: &[Node],
    lift: bool,
) -> Result<Vec<Vec<Vec<f64>>>> {
    if order < 1 {
        return Err(Error::invalid("derivative order must be at least 1"));
    }
    let p = problem.param_index(name)?;
    let grid = &problem.grid;
    let config = problem.config(vec![problem.port.clone()], probes.to_vec());
    config.validate(grid)?;
    let engine = Engine::new(grid, &config)?;
    let lifted = if lift { lifted_nodes(grid, problem.dt, &problem.params[p], order)? } else { Vec::new() };
    let (lifted_e, lifted_h): (Vec<&Lifted>, Vec<&Lifted>) = lifted.iter().partition(|l| l.node.comp.is_electric());
    problem.counter_increment();
    let mut f: Vec<FieldState> = (0..=order).map(|_| FieldState::zeros(grid.cell_count())).collect();
    let mut out = vec![vec![Vec::with_capacity(problem.nsteps); probes.len()]; order + 1];
    for n in 0..problem.nsteps {
        for fm in f.iter_mut() {
            engine.update_h(fm);
        }
        correct(&mut f, &lifted_h, order);
        let mem: Vec<_> = f.iter().map(|fm| engine.mur_save(fm)).collect();
        for fm in f.iter_mut() {
            engine.update_e(fm);
        }
        correct(&mut f, &lifted_e, order);
        for (fm, m) in f.iter_mut().zip(&mem) {
            engine.mur_apply(fm, m);
        }
        engine.apply_sources(n, &mut f[0]);
        for fm in f.iter_mut() {
            engine.zero_pec(fm);
        }
        for (m, fm) in f.iter().enumerate() {
            for (k, &node) in probes.iter().enumerate() {
                let v = fm.get(node);
                if !v.is_finite() {
                    return Err(Error::numerical(format!("non-finite order-{m} field at step {n}")));
                }
                out[m][k].push(v);
            }
        }
    }
    Ok(out)
}

/// Adds `sum_{q=1..m} a_q diff(F_{m-q})` at every lifted node, for each order.
fn correct(f: &mut [FieldState], lifted: &[&Lifted], order: usize) {
    for m in (1..=order).rev() {
        let (lower, upper) = f.split_at_mut(m);
        let target = &mut upper[0];
        for l in lifted {
            let mut acc = 0.0;
            for (coeffs, plus, minus) in &l.terms {
                for q in 1..=m {
                    let src = &lower[m - q];
                    acc += coeffs[q - 1] * (src.get(*plus) - src.get(*minus));
                }
            }
            *target.get_mut(l.node) += acc;
        }
    }
}

/// Port-field derivatives of orders `0..=order` (order 0 is the nominal
/// spectrum) from one forward-mode run.
pub fn dual_fdtd(problem: &Problem, name: &str, order: usize) -> Result<Vec<Spectrum>> {
    let nodes = problem.port_nodes();
    let rec = dual_records(problem, name, order, &nodes, true)?;
    rec.par_iter()
        .enumerate()
        .map(|(m, per_probe)| {
            let spectra = per_probe
                .iter()
                .map(|s| dft(s, problem.dt, &problem.freqs).map(|x| x.values))
                .collect::<Result<Vec<_>>>()?;
            let obs = problem.observable_spectrum(&spectra);
            Spectrum::new(&problem.freqs, obs.into_iter().map(|v| v * factorial(m)).collect())
        })
        .collect()
}
