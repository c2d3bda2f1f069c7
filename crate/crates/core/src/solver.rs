//! Derivative tasks on a port observable.
//!
//! The port is a set of E nodes driven by one Gaussian. Its observable is
//! the weighted mean `O = sum_p (w_p / W) E_p` with `w = eps0 eps_edge V`.
//! The main run drives the port and records the equivalent sources of every
//! parameter plus the field at every source node. On a tensor-product grid
//! the update is reciprocal under the weights `eps0 eps V` (E) and
//! `mu0 mu V` (H), so the record at source node `s` doubles as the transfer
//! function from `s` back to the port:
//!
//! * E node: `G_s = (w_s / W) R_s`
//! * H node: `G_s = -z (w_s / W) R_s`
//!
//! with `R_s` the record spectrum over the drive spectrum and
//! `z = exp(i w dt)`. Any derivative is then `sum_s G_s src_s`.
//!
//! Orders above one also need the response of the perturbed cells to their
//! own sources, which the subset runs provide (see [`local`](crate::local)).

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::OnceLock;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::consts::{EPS0, MU0};
use crate::equivalent_sources::{EquivalentSourceRecord, Recorders, StencilRecorder};
use crate::error::{Error, Result};
use crate::fdtd::{self, Boundaries, Component, Node, RunCounter, SimulationConfig, SourceSpec};
use crate::grid::YeeGrid;
use crate::local::{chain_window, ChainModel, LocalModel, ProjectionModel};
use crate::param_map::{source_nodes, DesignParameter, SourceNode};
use crate::poly::{binomial, factorial};
use crate::spectral::{dft, tail_settled, valid_band_dc, FrequencyGrid, Spectrum, BAND_THRESHOLD};

type C = Complex64;

/// What a derivative is taken of.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    /// Total field at the port.
    PortField,
    /// Reflection coefficient: scattered over incident port field.
    S11,
}

impl Observable {
    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "field" | "port" | "port_field" => Ok(Observable::PortField),
            "s11" => Ok(Observable::S11),
            "s21" => Err(Error::invalid(
                "S21 needs a second port and its own excitation; only the port field and S11 are supported",
            )),
            other => Err(Error::invalid(format!("unknown observable '{other}'"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Observable::PortField => "field",
            Observable::S11 => "s11",
        }
    }
}

/// Parameter names with their derivative orders, e.g. `d1:1,d3:1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiIndex(pub Vec<(String, usize)>);

impl MultiIndex {
    pub fn single(name: &str, order: usize) -> Self {
        MultiIndex(vec![(name.to_string(), order)])
    }

    pub fn pair(u: &str, v: &str) -> Self {
        MultiIndex(vec![(u.to_string(), 1), (v.to_string(), 1)])
    }

    pub fn order(&self) -> usize {
        self.0.iter().map(|(_, m)| m).sum()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(n, m)| format!("{n}:{m}")).collect();
        write!(f, "{}", parts.join(","))
    }
}

/// A derivative spectrum, meaningful only where `valid` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeResult {
    pub observable: Observable,
    pub index: MultiIndex,
    pub spectrum: Spectrum,
    pub valid: Vec<bool>,
    /// Set when the probe tails had not decayed by the end of the run.
    pub leakage_warning: bool,
}

impl DerivativeResult {
    /// Value at frequency index `i`, `None` outside the valid band.
    pub fn at(&self, i: usize) -> Option<C> {
        self.valid[i].then(|| self.spectrum.values[i])
    }
}

/// Forward runs each task may use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunBudget {
    pub runs: usize,
}

impl RunBudget {
    pub const JACOBIAN: RunBudget = RunBudget { runs: 1 };
    pub const HIGH_ORDER: RunBudget = RunBudget { runs: 2 };
    pub const MIXED: RunBudget = RunBudget { runs: 3 };

    pub fn hessian(n: usize) -> RunBudget {
        RunBudget { runs: n + 1 }
    }

    fn check(self, counter: &RunCounter, start: usize) -> Result<()> {
        let used = counter.count() - start;
        if used != self.runs {
            return Err(Error::Budget { expected: self.runs, used });
        }
        Ok(())
    }
}

/// Everything a derivative task needs.
#[derive(Debug)]
pub struct Problem {
    pub grid: YeeGrid,
    /// Feed-only grid giving the incident field; required for S11.
    pub reference: Option<YeeGrid>,
    pub dt: f64,
    pub nsteps: usize,
    pub boundary: Boundaries,
    /// Port excitation; its cells are also the observation nodes.
    pub port: SourceSpec,
    pub params: Vec<DesignParameter>,
    pub freqs: FrequencyGrid,
    /// Runs consumed by derivative tasks and oracles.
    pub counter: RunCounter,
    /// Incident-field calibration runs, counted apart from the task budgets.
    pub reference_counter: RunCounter,
    incident: OnceLock<Spectrum>,
}

impl Clone for Problem {
    fn clone(&self) -> Self {
        Problem {
            grid: self.grid.clone(),
            reference: self.reference.clone(),
            dt: self.dt,
            nsteps: self.nsteps,
            boundary: self.boundary,
            port: self.port.clone(),
            params: self.params.clone(),
            freqs: self.freqs.clone(),
            counter: RunCounter::new(),
            reference_counter: RunCounter::new(),
            incident: self.incident.clone(),
        }
    }
}

/// Spectra gathered from the main run.
struct MainRun {
    observable: Vec<C>,
    /// Transfer from each source node back to the observable.
    to_port: HashMap<Node, Vec<C>>,
    /// Per parameter, per source node: spectrum of the stencil input.
    c0: Vec<Vec<Vec<C>>>,
    nodes: Vec<Vec<SourceNode>>,
    records: Vec<EquivalentSourceRecord>,
    settled: bool,
}

impl Problem {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        grid: YeeGrid,
        reference: Option<YeeGrid>,
        dt: f64,
        nsteps: usize,
        boundary: Boundaries,
        port: SourceSpec,
        params: Vec<DesignParameter>,
        freqs: FrequencyGrid,
    ) -> Result<Self> {
        let p = Problem {
            grid,
            reference,
            dt,
            nsteps,
            boundary,
            port,
            params,
            freqs,
            counter: RunCounter::new(),
            reference_counter: RunCounter::new(),
            incident: OnceLock::new(),
        };
        p.config(vec![p.port.clone()], Vec::new()).validate(&p.grid)?;
        p.freqs.check_nyquist(dt)?;
        if !p.port.component.is_electric() || p.port.cells.is_empty() {
            return Err(Error::invalid("the port must drive at least one E node"));
        }
        let mut names = BTreeSet::new();
        for param in &p.params {
            if !names.insert(param.name.as_str()) {
                return Err(Error::invalid(format!("duplicate parameter name {}", param.name)));
            }
        }
        Ok(p)
    }

    pub fn param_index(&self, name: &str) -> Result<usize> {
        self.params
            .iter()
            .position(|p| p.name == name)
            .ok_or_else(|| Error::invalid(format!("unknown parameter '{name}'")))
    }

    pub fn config(&self, sources: Vec<SourceSpec>, probes: Vec<Node>) -> SimulationConfig {
        SimulationConfig { dt: self.dt, nsteps: self.nsteps, sources, probes, boundary: self.boundary }
    }

    pub fn port_nodes(&self) -> Vec<Node> {
        self.port.nodes().collect()
    }

    fn node_weight(&self, grid: &YeeGrid, node: Node) -> f64 {
        let v = grid.cell_volume(node.idx);
        if node.comp.is_electric() {
            EPS0 * grid.edge_eps_r(node.comp.dir(), node.idx) * v
        } else {
            MU0 * grid.mu_r(node.idx) * v
        }
    }

    /// Injected series, its spectrum and the valid band.
    pub fn excitation(&self) -> Result<(Vec<f64>, Spectrum, Vec<bool>)> {
        let series = self.port.series(self.nsteps, self.dt);
        let spec = dft(&series, self.dt, &self.freqs)?;
        let valid = valid_band_dc(&series, &spec, self.dt, BAND_THRESHOLD);
        if !valid.iter().any(|&v| v) {
            return Err(Error::numerical("excitation spectrum is below threshold over the whole band"));
        }
        Ok((series, spec, valid))
    }

    pub fn valid_band(&self) -> Result<Vec<bool>> {
        Ok(self.excitation()?.2)
    }

    fn step_factors(&self) -> Vec<C> {
        self.freqs.step_factors(self.dt)
    }

    /// Weighted port mean of probe spectra, probes ordered as `port_nodes`.
    fn observable_from(&self, grid: &YeeGrid, spectra: &[Vec<C>]) -> Vec<C> {
        let nodes = self.port_nodes();
        let weights: Vec<f64> = nodes.iter().map(|&n| self.node_weight(grid, n)).collect();
        let total: f64 = weights.iter().sum();
        (0..self.freqs.len()).map(|fi| spectra.iter().zip(&weights).map(|(s, w)| s[fi] * (w / total)).sum()).collect()
    }

    /// Weighted port mean of per-node spectra on the nominal grid.
    pub(crate) fn observable_spectrum(&self, spectra: &[Vec<C>]) -> Vec<C> {
        self.observable_from(&self.grid, spectra)
    }

    pub(crate) fn counter_increment(&self) {
        self.counter.increment();
    }

    /// Port observable spectrum of an arbitrary grid, one counted run.
    pub fn port_spectrum(&self, grid: &YeeGrid, counter: &RunCounter) -> Result<(Spectrum, bool)> {
        let nodes = self.port_nodes();
        let records = fdtd::run(grid, &self.config(vec![self.port.clone()], nodes), counter)?;
        let settled = records.iter().all(|r| tail_settled(&r.samples));
        let spectra = records
            .par_iter()
            .map(|r| dft(&r.samples, self.dt, &self.freqs).map(|s| s.values))
            .collect::<Result<Vec<_>>>()?;
        Ok((Spectrum::new(&self.freqs, self.observable_from(grid, &spectra))?, settled))
    }

    /// Incident port spectrum from the reference grid, computed once.
    pub fn incident(&self) -> Result<&Spectrum> {
        if let Some(s) = self.incident.get() {
            return Ok(s);
        }
        let reference =
            self.reference.as_ref().ok_or_else(|| Error::invalid("S11 needs a reference (feed-only) grid"))?;
        let (s, _) = self.port_spectrum(reference, &self.reference_counter)?;
        Ok(self.incident.get_or_init(|| s))
    }

    /// Divides a field spectrum by the incident spectrum.
    pub fn to_observable(&self, field: &Spectrum, obs: Observable) -> Result<Spectrum> {
        match obs {
            Observable::PortField => Ok(field.clone()),
            Observable::S11 => s_param_derivative(field, self.incident()?),
        }
    }

    /// Nominal S11 spectrum from an observable port spectrum.
    pub fn s11_from_total(&self, total: &Spectrum) -> Result<Spectrum> {
        let inc = self.incident()?;
        total.zip_with(inc, |t, i| (t - i) / i)
    }

    fn nodes_for(&self, p: usize, order: usize) -> Result<Vec<SourceNode>> {
        source_nodes(&self.grid, self.dt, &self.params[p], order)
    }

    fn main_run(&self, ps: &[usize], order: usize) -> Result<MainRun> {
        let nodes: Vec<Vec<SourceNode>> = ps.iter().map(|&p| self.nodes_for(p, order)).collect::<Result<_>>()?;
        let port_nodes = self.port_nodes();
        let mut probe_set: Vec<Node> = port_nodes.clone();
        let mut extra: BTreeSet<Node> = nodes.iter().flatten().map(|s| s.node).collect();
        for n in &port_nodes {
            extra.remove(n);
        }
        probe_set.extend(extra);
        let mut recorders: Vec<StencilRecorder> =
            nodes.iter().map(|n| StencilRecorder::new(n.clone(), self.nsteps)).collect();
        let records = {
            let mut fan = Recorders(recorders.iter_mut().collect());
            fdtd::run_observed(
                &self.grid,
                &self.config(vec![self.port.clone()], probe_set.clone()),
                &self.counter,
                &mut fan,
            )?
        };
        let settled = records[..port_nodes.len()].iter().all(|r| tail_settled(&r.samples));
        let spectra: Vec<Vec<C>> = records
            .par_iter()
            .map(|r| dft(&r.samples, self.dt, &self.freqs).map(|s| s.values))
            .collect::<Result<_>>()?;
        let (_, drive, _) = self.excitation()?;
        let observable = self.observable_from(&self.grid, &spectra[..port_nodes.len()]);
        let total: f64 = port_nodes.iter().map(|&n| self.node_weight(&self.grid, n)).sum();
        if !self.grid.is_tensor_product() {
            return Err(Error::invalid("reciprocal transfer functions need a tensor-product grid"));
        }
        let z = self.step_factors();
        let mut to_port = HashMap::new();
        for (node, spec) in probe_set.iter().zip(&spectra) {
            let w = self.node_weight(&self.grid, *node) / total;
            let g: Vec<C> = (0..self.freqs.len())
                .map(|fi| {
                    let r = spec[fi] / drive.values[fi];
                    if node.comp.is_electric() {
                        r * w
                    } else {
                        -z[fi] * r * w
                    }
                })
                .collect();
            to_port.insert(*node, g);
        }
        let c0 = recorders
            .iter()
            .map(|r| {
                r.samples.par_iter().map(|s| dft(s, self.dt, &self.freqs).map(|x| x.values)).collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let records = recorders.into_iter().zip(ps).map(|(r, &p)| r.into_record(&self.params[p].name)).collect();
        Ok(MainRun { observable, to_port, c0, nodes, records, settled })
    }

    /// E nodes driven in the subset run of parameter `p`.
    fn drive_nodes(&self, nodes: &[SourceNode]) -> Vec<Node> {
        for comp in [Component::Ez, Component::Ex, Component::Ey] {
            let d: Vec<Node> = nodes.iter().map(|s| s.node).filter(|n| n.comp == comp).collect();
            if !d.is_empty() {
                return d;
            }
        }
        Vec::new()
    }

    /// Drives the subset of a parameter and returns record-over-drive spectra.
    fn subset_run(&self, drives: &[Node], probes: &[Node]) -> Result<HashMap<Node, Vec<C>>> {
        let mut sources = Vec::new();
        if let Some(first) = drives.first() {
            sources.push(SourceSpec {
                cells: drives.iter().map(|n| n.idx).collect(),
                component: first.comp,
                ..self.port.clone()
            });
        }
        let records = fdtd::run(&self.grid, &self.config(sources, probes.to_vec()), &self.counter)?;
        let (_, drive, _) = self.excitation()?;
        records
            .par_iter()
            .map(|r| {
                let s = dft(&r.samples, self.dt, &self.freqs)?;
                Ok((r.node, s.values.iter().zip(&drive.values).map(|(a, b)| a / b).collect()))
            })
            .collect()
    }

    /// Local model over the given parameters, one subset run each.
    fn local_model(&self, nodes: &[Vec<SourceNode>], valid: &[bool]) -> Result<Box<dyn LocalModel>> {
        let mut all: Vec<Node> = Vec::new();
        for sn in nodes.iter().flatten() {
            all.push(sn.node);
            all.extend(sn.stencil.iter().map(|&(n, _)| n));
        }
        all.sort();
        all.dedup();
        let drives: Vec<Vec<Node>> = nodes.iter().map(|n| self.drive_nodes(n)).collect();
        if self.grid.is_1d() {
            if all.is_empty() {
                for d in &drives {
                    self.subset_run(d, &[])?;
                }
                return Ok(Box::new(ProjectionModel::new()));
            }
            let window = chain_window(&self.grid, &all)?;
            let closure = ChainModel::closure_nodes(window);
            let runs = drives.par_iter().map(|d| self.subset_run(d, &closure)).collect::<Result<Vec<_>>>()?;
            let spectra: Vec<[Vec<C>; 4]> = runs
                .into_iter()
                .filter(|r| r.values().any(|v| v.iter().any(|x| x.norm() > 0.0)))
                .map(|r| closure.map(|n| r[&n].clone()))
                .collect();
            if spectra.is_empty() {
                return Ok(Box::new(ProjectionModel::new()));
            }
            Ok(Box::new(ChainModel::new(&self.grid, self.dt, window, self.step_factors(), &spectra, valid)?))
        } else {
            let runs = drives.par_iter().map(|d| self.subset_run(d, &all)).collect::<Result<Vec<_>>>()?;
            let mut model = ProjectionModel::new();
            for (d, r) in drives.into_iter().zip(runs) {
                model.add_subset(d, r);
            }
            Ok(Box::new(model))
        }
    }

    fn result(&self, index: MultiIndex, values: Vec<C>, valid: &[bool], settled: bool) -> Result<DerivativeResult> {
        Ok(DerivativeResult {
            observable: Observable::PortField,
            index,
            spectrum: Spectrum::new(&self.freqs, values)?,
            valid: valid.to_vec(),
            leakage_warning: !settled,
        })
    }

    /// Nominal port spectrum with its valid band; one counted run.
    pub fn nominal(&self) -> Result<(Spectrum, Vec<bool>)> {
        let (s, _) = self.port_spectrum(&self.grid, &self.counter)?;
        Ok((s, self.valid_band()?))
    }

    /// First derivatives in every listed parameter from one run.
    pub fn jacobian(&self, names: &[&str]) -> Result<Vec<DerivativeResult>> {
        let ps: Vec<usize> = names.iter().map(|n| self.param_index(n)).collect::<Result<_>>()?;
        let start = self.counter.count();
        let (_, _, valid) = self.excitation()?;
        let main = self.main_run(&ps, 1)?;
        RunBudget::JACOBIAN.check(&self.counter, start)?;
        ps.iter()
            .enumerate()
            .map(|(k, &p)| {
                let values = (0..self.freqs.len())
                    .map(|fi| {
                        if !valid[fi] {
                            return C::new(0.0, 0.0);
                        }
                        main.nodes[k]
                            .iter()
                            .zip(&main.c0[k])
                            .map(|(sn, c)| main.to_port[&sn.node][fi] * sn.factor[1] * c[fi])
                            .sum()
                    })
                    .collect();
                self.result(MultiIndex::single(&self.params[p].name, 1), values, &valid, main.settled)
            })
            .collect()
    }

    /// First-order equivalent-source records of the listed parameters
    /// from one port-driven run.
    pub fn equivalent_sources(&self, names: &[&str]) -> Result<Vec<EquivalentSourceRecord>> {
        let ps: Vec<usize> = names.iter().map(|n| self.param_index(n)).collect::<Result<_>>()?;
        Ok(self.main_run(&ps, 1)?.records)
    }

    /// Derivatives of orders `1..=order` in one parameter from two runs.
    pub fn high_order(&self, name: &str, order: usize) -> Result<Vec<DerivativeResult>> {
        Ok(self.high_order_with_nominal(name, order)?.1)
    }

    /// [`high_order`](Self::high_order) plus the nominal port spectrum of
    /// the main run.
    pub fn high_order_with_nominal(&self, name: &str, order: usize) -> Result<(Spectrum, Vec<DerivativeResult>)> {
        if order == 0 {
            return Err(Error::invalid("derivative order must be at least 1"));
        }
        let p = self.param_index(name)?;
        let start = self.counter.count();
        let (_, _, valid) = self.excitation()?;
        let nodes = vec![self.nodes_for(p, order)?];
        let model = self.local_model(&nodes, &valid)?;
        let main = self.main_run(&[p], order)?;
        RunBudget::HIGH_ORDER.check(&self.counter, start)?;
        let z = self.step_factors();
        let per_freq: Vec<Vec<C>> = (0..self.freqs.len())
            .into_par_iter()
            .map(|fi| {
                if !valid[fi] {
                    return Ok(vec![C::new(0.0, 0.0); order]);
                }
                let sn = &main.nodes[0];
                let mut c: Vec<Vec<C>> = vec![main.c0[0].iter().map(|s| s[fi]).collect()];
                let mut out = Vec::with_capacity(order);
                for m in 1..=order {
                    let src: Vec<C> = sn
                        .iter()
                        .enumerate()
                        .map(|(i, s)| (0..m).map(|q| c[q][i] * (binomial(m, q) * s.factor[m - q])).sum())
                        .collect();
                    out.push(self.to_port_sum(&main, sn, &src, fi));
                    if m < order {
                        c.push(stencil_response(model.as_ref(), fi, z[fi], sn, &src, sn)?);
                    }
                }
                Ok(out)
            })
            .collect::<Result<_>>()?;
        let results = (0..order)
            .map(|m| {
                let values = per_freq.iter().map(|v| v[m]).collect();
                self.result(MultiIndex::single(name, m + 1), values, &valid, main.settled)
            })
            .collect::<Result<_>>()?;
        Ok((Spectrum::new(&self.freqs, main.observable)?, results))
    }

    fn to_port_sum(&self, main: &MainRun, nodes: &[SourceNode], src: &[C], fi: usize) -> C {
        nodes.iter().zip(src).map(|(s, v)| main.to_port[&s.node][fi] * v).sum()
    }

    /// Mixed second derivative in two parameters with disjoint subsets.
    pub fn mixed(&self, u: &str, v: &str) -> Result<DerivativeResult> {
        let (pu, pv) = (self.param_index(u)?, self.param_index(v)?);
        self.params[pu].check_disjoint(&self.params[pv])?;
        // Canonical order makes the result exactly symmetric.
        let (a, b) = if pu < pv { (pu, pv) } else { (pv, pu) };
        let start = self.counter.count();
        let (_, _, valid) = self.excitation()?;
        let nodes = vec![self.nodes_for(a, 1)?, self.nodes_for(b, 1)?];
        let model = self.local_model(&nodes, &valid)?;
        let main = self.main_run(&[a, b], 1)?;
        RunBudget::MIXED.check(&self.counter, start)?;
        let values = self.mixed_values(&main, model.as_ref(), 0, 1, &valid)?;
        self.result(MultiIndex::pair(u, v), values, &valid, main.settled)
    }

    fn mixed_values(
        &self,
        main: &MainRun,
        model: &dyn LocalModel,
        i: usize,
        j: usize,
        valid: &[bool],
    ) -> Result<Vec<C>> {
        let z = self.step_factors();
        (0..self.freqs.len())
            .into_par_iter()
            .map(|fi| {
                if !valid[fi] {
                    return Ok(C::new(0.0, 0.0));
                }
                let (ni, nj) = (&main.nodes[i], &main.nodes[j]);
                let first = |k: usize| -> Vec<C> {
                    main.nodes[k].iter().zip(&main.c0[k]).map(|(s, c)| c[fi] * s.factor[1]).collect()
                };
                let (si, sj) = (first(i), first(j));
                // Response of i's stencil to j's source, and vice versa.
                let ci = stencil_response(model, fi, z[fi], nj, &sj, ni)?;
                let cj = stencil_response(model, fi, z[fi], ni, &si, nj)?;
                let src_i: Vec<C> = ni.iter().zip(&ci).map(|(s, c)| c * s.factor[1]).collect();
                let src_j: Vec<C> = nj.iter().zip(&cj).map(|(s, c)| c * s.factor[1]).collect();
                Ok(self.to_port_sum(main, ni, &src_i, fi) + self.to_port_sum(main, nj, &src_j, fi))
            })
            .collect()
    }

    /// Full Hessian over `names` from `N + 1` runs; exactly symmetric.
    pub fn hessian(&self, names: &[&str]) -> Result<Vec<Vec<DerivativeResult>>> {
        let mut ps: Vec<usize> = names.iter().map(|n| self.param_index(n)).collect::<Result<_>>()?;
        for (i, &a) in ps.iter().enumerate() {
            for &b in &ps[i + 1..] {
                self.params[a].check_disjoint(&self.params[b])?;
            }
        }
        let order_of: Vec<usize> = ps.clone();
        ps.sort_unstable();
        let n = ps.len();
        let start = self.counter.count();
        let (_, _, valid) = self.excitation()?;
        let nodes: Vec<Vec<SourceNode>> = ps.iter().map(|&p| self.nodes_for(p, 2)).collect::<Result<_>>()?;
        let model = self.local_model(&nodes, &valid)?;
        let main = self.main_run(&ps, 2)?;
        RunBudget::hessian(n).check(&self.counter, start)?;
        let z = self.step_factors();
        let mut table: Vec<Vec<Option<Vec<C>>>> = vec![vec![None; n]; n];
        #[allow(clippy::needless_range_loop)]
        for k in 0..n {
            let diag = (0..self.freqs.len())
                .into_par_iter()
                .map(|fi| {
                    if !valid[fi] {
                        return Ok(C::new(0.0, 0.0));
                    }
                    let sn = &main.nodes[k];
                    let c0: Vec<C> = main.c0[k].iter().map(|s| s[fi]).collect();
                    let s1: Vec<C> = sn.iter().zip(&c0).map(|(s, c)| c * s.factor[1]).collect();
                    let c1 = stencil_response(model.as_ref(), fi, z[fi], sn, &s1, sn)?;
                    let s2: Vec<C> =
                        sn.iter().enumerate().map(|(i, s)| c0[i] * s.factor[2] + c1[i] * (2.0 * s.factor[1])).collect();
                    Ok(self.to_port_sum(&main, sn, &s2, fi))
                })
                .collect::<Result<Vec<C>>>()?;
            table[k][k] = Some(diag);
            for l in k + 1..n {
                let v = self.mixed_values(&main, model.as_ref(), k, l, &valid)?;
                table[k][l] = Some(v.clone());
                table[l][k] = Some(v);
            }
        }
        let pos = |p: usize| ps.iter().position(|&q| q == p).unwrap_or(0);
        order_of
            .iter()
            .map(|&a| {
                order_of
                    .iter()
                    .map(|&b| {
                        let (ia, ib) = (pos(a), pos(b));
                        let idx = if a == b {
                            MultiIndex::single(&self.params[a].name, 2)
                        } else {
                            MultiIndex::pair(&self.params[a].name, &self.params[b].name)
                        };
                        let values = table[ia][ib].clone().unwrap_or_default();
                        self.result(idx, values, &valid, main.settled)
                    })
                    .collect()
            })
            .collect()
    }

    /// Converts a port-field derivative into the requested observable.
    pub fn convert(&self, d: &DerivativeResult, obs: Observable) -> Result<DerivativeResult> {
        let spectrum = self.to_observable(&d.spectrum, obs)?;
        Ok(DerivativeResult { observable: obs, spectrum, ..d.clone() })
    }
}

/// Stencil inputs at `targets` of the field radiated by `src` on `sources`.
///
/// H-type stencils read `E^n`, one step behind the E record, hence `1/z`.
fn stencil_response(
    model: &dyn LocalModel,
    fi: usize,
    z: C,
    sources: &[SourceNode],
    src: &[C],
    targets: &[SourceNode],
) -> Result<Vec<C>> {
    let pairs: Vec<(Node, C)> = sources.iter().map(|s| s.node).zip(src.iter().copied()).collect();
    let mut nodes: Vec<Node> = targets.iter().flat_map(|t| t.stencil.iter().map(|&(n, _)| n)).collect();
    nodes.sort();
    nodes.dedup();
    let resp = model.respond(fi, &pairs, &nodes)?;
    let lookup: HashMap<Node, C> = nodes.into_iter().zip(resp).collect();
    Ok(targets
        .iter()
        .map(|t| {
            let v: C = t.stencil.iter().map(|&(n, w)| lookup[&n] * w).sum();
            if t.node.comp.is_electric() {
                v
            } else {
                v / z
            }
        })
        .collect())
}

/// `dS/dxi = (d E_scattered / d xi) / E_incident`, pointwise.
pub fn s_param_derivative(field_derivative: &Spectrum, incident: &Spectrum) -> Result<Spectrum> {
    field_derivative.zip_with(incident, |d, i| if i.norm() == 0.0 { C::new(0.0, 0.0) } else { d / i })
}

/// Truncated Taylor sum `f0 + sum_m f^(m) delta^m / m!`.
pub fn taylor_eval(nominal: &Spectrum, derivatives: &[Spectrum], delta: f64) -> Result<Spectrum> {
    let mut out = nominal.clone();
    for (k, d) in derivatives.iter().enumerate() {
        let m = k + 1;
        let s = delta.powi(m as i32) / factorial(m);
        out = out.zip_with(d, |a, b| a + b * s)?;
    }
    Ok(out)
}
