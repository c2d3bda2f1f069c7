//! Scenario text format and the built-in scenarios.
//!
//! A scenario file is a list of sections. Each section starts with a
//! `[header]` line and holds `key = value` lines. `#` starts a comment.
//! Cell ranges are 1-based and inclusive, written `a:b` or a single `a`, one
//! per axis: `cells = 32:37, 10, 1:3`.
//!
//! ```text
//! [grid]            nx ny nz dx dy dz
//! [region NAME]     cells, eps_r?, mu_r?, dx? dy? dz?, metal?, feed?
//! [simulation]      dt nsteps dt_override? source_cells source_component
//!                   source_kind? amplitude? ts t0 boundary?
//!                   boundary_{x,y,z}{low,high}?
//! [param NAME]      cells axis nominal?
//! [analysis]        observable? f_lo f_hi freqs?
//! ```
//!
//! `metal` is `none`, `block` (solid conductor) or `xlow`/`ylow`/`zlow`
//! (a zero-thickness sheet on that face of every cell). Regions with
//! `feed = true` also form the reference grid that yields the incident field.
//! Later regions override earlier ones.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::fdtd::{cfl_limit, Boundaries, BoundaryKind, Component, Gaussian, SourceKind, SourceSpec};
use crate::grid::{Axis, CellBox, CellSubset, YeeGrid};
use crate::param_map::DesignParameter;
use crate::solver::{Observable, Problem};
use crate::spectral::FrequencyGrid;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metal {
    None,
    Block,
    /// Sheet on the low face normal to this direction.
    Sheet(usize),
}

impl Metal {
    fn parse(s: &str) -> Option<Metal> {
        match s {
            "none" => Some(Metal::None),
            "block" => Some(Metal::Block),
            "xlow" => Some(Metal::Sheet(0)),
            "ylow" => Some(Metal::Sheet(1)),
            "zlow" => Some(Metal::Sheet(2)),
            _ => None,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Metal::None => "none",
            Metal::Block => "block",
            Metal::Sheet(0) => "xlow",
            Metal::Sheet(1) => "ylow",
            Metal::Sheet(_) => "zlow",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    pub name: String,
    pub cells: CellBox,
    pub eps_r: Option<f64>,
    pub mu_r: Option<f64>,
    pub size: [Option<f64>; 3],
    pub metal: Metal,
    pub feed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub cells: CellBox,
    pub axis: Axis,
    pub nominal: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulationSpec {
    pub dt: f64,
    pub nsteps: usize,
    pub dt_override: bool,
    pub source_cells: CellBox,
    pub source_component: Component,
    pub source_kind: SourceKind,
    pub amplitude: f64,
    pub ts: f64,
    pub t0: f64,
    pub boundary: Boundaries,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalysisSpec {
    pub observable: Observable,
    pub f_lo: f64,
    pub f_hi: f64,
    pub freqs: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub n: [usize; 3],
    pub d: [f64; 3],
    pub regions: Vec<Region>,
    pub simulation: SimulationSpec,
    pub params: Vec<ParamSpec>,
    pub analysis: AnalysisSpec,
}

const FACES: [&str; 6] = ["xlow", "xhigh", "ylow", "yhigh", "zlow", "zhigh"];

fn parse_box(s: &str) -> std::result::Result<CellBox, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!("expected three ranges 'i, j, k', got '{s}'"));
    }
    let mut lo = [0; 3];
    let mut hi = [0; 3];
    for (d, p) in parts.iter().enumerate() {
        let (a, b) = match p.split_once(':') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (*p, *p),
        };
        lo[d] = a.parse().map_err(|_| format!("bad range bound '{a}'"))?;
        hi[d] = b.parse().map_err(|_| format!("bad range bound '{b}'"))?;
    }
    Ok(CellBox::new(lo, hi))
}

fn fmt_box(b: &CellBox) -> String {
    (0..3)
        .map(|d| if b.lo[d] == b.hi[d] { b.lo[d].to_string() } else { format!("{}:{}", b.lo[d], b.hi[d]) })
        .collect::<Vec<_>>()
        .join(", ")
}

fn kind_name(k: BoundaryKind) -> &'static str {
    match k {
        BoundaryKind::Mur1 => "mur",
        BoundaryKind::Pec => "pec",
    }
}

/// One section as read from the file.
struct Section {
    header: String,
    line: usize,
    entries: BTreeMap<String, (String, usize)>,
}

/// Typed accessors that record errors instead of failing fast.
struct Reader<'a> {
    sec: &'a Section,
    errors: &'a mut Vec<String>,
    used: Vec<&'static str>,
}

impl<'a> Reader<'a> {
    fn raw(&mut self, key: &'static str) -> Option<&'a str> {
        self.used.push(key);
        self.sec.entries.get(key).map(|(v, _)| v.as_str())
    }

    fn err(&mut self, key: &str, msg: String) {
        let line = self.sec.entries.get(key).map_or(self.sec.line, |e| e.1);
        self.errors.push(format!("line {line}: [{}] {key}: {msg}", self.sec.header));
    }

    fn opt<T: std::str::FromStr>(&mut self, key: &'static str) -> Option<T> {
        let v = self.raw(key)?;
        match v.parse() {
            Ok(x) => Some(x),
            Err(_) => {
                self.err(key, format!("cannot parse '{v}'"));
                None
            }
        }
    }

    fn req<T: std::str::FromStr>(&mut self, key: &'static str) -> Option<T> {
        if !self.sec.entries.contains_key(key) {
            self.used.push(key);
            self.err(key, "missing required key".into());
            return None;
        }
        self.opt(key)
    }

    fn cells(&mut self, key: &'static str) -> Option<CellBox> {
        let Some(v) = self.raw(key) else {
            self.err(key, "missing required key".into());
            return None;
        };
        match parse_box(v) {
            Ok(b) => Some(b),
            Err(e) => {
                self.err(key, e);
                None
            }
        }
    }

    fn finish(self) {
        for (k, (_, line)) in &self.sec.entries {
            if !self.used.contains(&k.as_str()) {
                self.errors.push(format!("line {line}: [{}] unknown key '{k}'", self.sec.header));
            }
        }
    }
}

fn split_sections(text: &str, errors: &mut Vec<String>) -> Vec<Section> {
    let mut out: Vec<Section> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(h) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            out.push(Section { header: h.trim().to_string(), line: line_no, entries: BTreeMap::new() });
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            errors.push(format!("line {line_no}: expected 'key = value' or '[section]'"));
            continue;
        };
        let Some(sec) = out.last_mut() else {
            errors.push(format!("line {line_no}: key outside any section"));
            continue;
        };
        let key = k.trim().to_string();
        if sec.entries.insert(key.clone(), (v.trim().to_string(), line_no)).is_some() {
            errors.push(format!("line {line_no}: duplicate key '{key}'"));
        }
    }
    out
}

impl Scenario {
    /// Parses and validates a scenario, reporting every problem found.
    pub fn parse(text: &str) -> Result<Scenario> {
        let mut errors = Vec::new();
        let sections = split_sections(text, &mut errors);
        let mut grid = None;
        let mut sim = None;
        let mut analysis = None;
        let mut regions = Vec::new();
        let mut params = Vec::new();
        for sec in &sections {
            let (kind, name) = match sec.header.split_once(char::is_whitespace) {
                Some((k, n)) => (k, Some(n.trim().to_string())),
                None => (sec.header.as_str(), None),
            };
            let mut r = Reader { sec, errors: &mut errors, used: Vec::new() };
            match (kind, name) {
                ("grid", None) => {
                    let n = [r.req("nx"), r.req("ny"), r.req("nz")];
                    let d = [r.req("dx"), r.req("dy"), r.req("dz")];
                    r.finish();
                    if let ([Some(a), Some(b), Some(c)], [Some(x), Some(y), Some(z)]) = (n, d) {
                        grid = Some(([a, b, c], [x, y, z]));
                    }
                }
                ("region", Some(name)) => {
                    let cells = r.cells("cells");
                    let eps_r = r.opt("eps_r");
                    let mu_r = r.opt("mu_r");
                    let size = [r.opt("dx"), r.opt("dy"), r.opt("dz")];
                    let metal = match r.raw("metal") {
                        None => Metal::None,
                        Some(m) => Metal::parse(m).unwrap_or_else(|| {
                            r.err("metal", format!("'{m}' is not one of none, block, xlow, ylow, zlow"));
                            Metal::None
                        }),
                    };
                    let feed = r.opt("feed").unwrap_or(false);
                    r.finish();
                    if let Some(cells) = cells {
                        regions.push(Region { name, cells, eps_r, mu_r, size, metal, feed });
                    }
                }
                ("simulation", None) => {
                    let dt = r.req("dt");
                    let nsteps = r.req("nsteps");
                    let dt_override = r.opt("dt_override").unwrap_or(false);
                    let source_cells = r.cells("source_cells");
                    let comp = r.raw("source_component").map(|c| (c, Component::parse(c)));
                    let source_component = match comp {
                        Some((_, Some(c))) if c.is_electric() => Some(c),
                        Some((c, _)) => {
                            r.err("source_component", format!("'{c}' is not an E component"));
                            None
                        }
                        None => {
                            r.used.push("source_component");
                            r.err("source_component", "missing required key".into());
                            None
                        }
                    };
                    let source_kind = match r.raw("source_kind").unwrap_or("soft") {
                        "soft" => SourceKind::Soft,
                        "hard" => SourceKind::Hard,
                        other => {
                            r.err("source_kind", format!("'{other}' is not soft or hard"));
                            SourceKind::Soft
                        }
                    };
                    let amplitude = r.opt("amplitude").unwrap_or(1.0);
                    let ts = r.req("ts");
                    let t0 = r.req("t0");
                    let mut boundary = Boundaries::all(BoundaryKind::Mur1);
                    let parse_kind = |s: &str| match s {
                        "mur" => Some(BoundaryKind::Mur1),
                        "pec" => Some(BoundaryKind::Pec),
                        _ => None,
                    };
                    if let Some(v) = r.raw("boundary") {
                        match parse_kind(v) {
                            Some(k) => boundary = Boundaries::all(k),
                            None => r.err("boundary", format!("'{v}' is not mur or pec")),
                        }
                    }
                    for (i, face) in FACES.iter().enumerate() {
                        let key: &'static str = match i {
                            0 => "boundary_xlow",
                            1 => "boundary_xhigh",
                            2 => "boundary_ylow",
                            3 => "boundary_yhigh",
                            4 => "boundary_zlow",
                            _ => "boundary_zhigh",
                        };
                        if let Some(v) = r.raw(key) {
                            match parse_kind(v) {
                                Some(k) => boundary.faces[i / 2][i % 2] = k,
                                None => r.err(key, format!("'{v}' is not mur or pec on {face}")),
                            }
                        }
                    }
                    r.finish();
                    if let (Some(dt), Some(nsteps), Some(source_cells), Some(source_component), Some(ts), Some(t0)) =
                        (dt, nsteps, source_cells, source_component, ts, t0)
                    {
                        sim = Some(SimulationSpec {
                            dt,
                            nsteps,
                            dt_override,
                            source_cells,
                            source_component,
                            source_kind,
                            amplitude,
                            ts,
                            t0,
                            boundary,
                        });
                    }
                }
                ("param", Some(name)) => {
                    let cells = r.cells("cells");
                    let axis = match r.raw("axis") {
                        Some(a) => Axis::parse(a).or_else(|| {
                            r.err("axis", format!("'{a}' is not x, y, z or material"));
                            None
                        }),
                        None => {
                            r.err("axis", "missing required key".into());
                            None
                        }
                    };
                    let nominal = r.opt("nominal");
                    r.finish();
                    if let (Some(cells), Some(axis)) = (cells, axis) {
                        params.push(ParamSpec { name, cells, axis, nominal });
                    }
                }
                ("analysis", None) => {
                    let observable = match r.raw("observable") {
                        None => Some(Observable::S11),
                        Some(o) => match Observable::parse(o) {
                            Ok(o) => Some(o),
                            Err(e) => {
                                r.err("observable", e.to_string());
                                None
                            }
                        },
                    };
                    let f_lo = r.req("f_lo");
                    let f_hi = r.req("f_hi");
                    let freqs = r.opt("freqs").unwrap_or(401);
                    r.finish();
                    if let (Some(observable), Some(f_lo), Some(f_hi)) = (observable, f_lo, f_hi) {
                        analysis = Some(AnalysisSpec { observable, f_lo, f_hi, freqs });
                    }
                }
                _ => errors.push(format!("line {}: unknown section [{}]", sec.line, sec.header)),
            }
        }
        let count = |k: &str| sections.iter().filter(|s| s.header == k).count();
        for k in ["grid", "simulation", "analysis"] {
            match count(k) {
                0 => errors.push(format!("missing [{k}] section")),
                1 => {}
                _ => errors.push(format!("more than one [{k}] section")),
            }
        }
        let Some(((n, d), simulation, analysis)) = grid.zip(sim).zip(analysis).map(|((g, s), a)| (g, s, a)) else {
            return Err(Error::ValidationList(errors));
        };
        // Semantic checks still run on whatever parsed, so one pass lists everything.
        let s = Scenario { n, d, regions, simulation, params, analysis };
        match s.validate() {
            Ok(()) if errors.is_empty() => Ok(s),
            Ok(()) => Err(Error::ValidationList(errors)),
            Err(Error::ValidationList(more)) => {
                errors.extend(more);
                Err(Error::ValidationList(errors))
            }
            Err(e) => {
                errors.push(e.to_string());
                Err(Error::ValidationList(errors))
            }
        }
    }

    /// Checks geometry, stability and the analysis band; lists every problem.
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        let grid = match self.build_grid(false) {
            Ok(g) => Some(g),
            Err(e) => {
                errors.push(e.to_string());
                None
            }
        };
        if let Some(g) = &grid {
            let sim = &self.simulation;
            if let Err(e) = g.check_box(&sim.source_cells) {
                errors.push(format!("source_cells: {e}"));
            }
            let limit = cfl_limit(g);
            if sim.dt > limit && !sim.dt_override {
                errors.push(format!(
                    "dt = {:.4e} s exceeds the CFL limit {:.4e} s (set dt_override = true to force)",
                    sim.dt, limit
                ));
            }
            if !(sim.ts > 0.0) {
                errors.push("ts must be positive".into());
            }
            if sim.nsteps == 0 {
                errors.push("nsteps must be positive".into());
            }
            if g.is_1d() && sim.source_component != Component::Ex {
                errors.push("1-D scenarios drive ex".into());
            }
            let mut names = std::collections::BTreeSet::new();
            for p in &self.params {
                if !names.insert(&p.name) {
                    errors.push(format!("duplicate parameter {}", p.name));
                }
                match p.cells.linear_indices(g).and_then(|ix| CellSubset::new(ix, p.axis)) {
                    Ok(sub) => {
                        if let Err(e) = DesignParameter::new(p.name.clone(), sub, 0.0).check(g) {
                            errors.push(e.to_string());
                        }
                    }
                    Err(e) => errors.push(format!("param {}: {e}", p.name)),
                }
            }
            let a = &self.analysis;
            if let Err(e) = FrequencyGrid::linspace(a.f_lo, a.f_hi, a.freqs).and_then(|f| f.check_nyquist(sim.dt)) {
                errors.push(e.to_string());
            }
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::ValidationList(errors))
        }
    }

    /// Builds the grid; `feed_only` keeps just the regions marked `feed`.
    pub fn build_grid(&self, feed_only: bool) -> Result<YeeGrid> {
        let mut g = YeeGrid::uniform(self.n, self.d)?;
        for r in self.regions.iter().filter(|r| !feed_only || r.feed) {
            g.check_box(&r.cells).map_err(|e| Error::invalid(format!("region {}: {e}", r.name)))?;
            for p in r.cells.linear_indices(&g)? {
                let idx = p - 1;
                if let Some(e) = r.eps_r {
                    g.set_eps_r(idx, e)?;
                }
                if let Some(m) = r.mu_r {
                    g.set_mu_r(idx, m)?;
                }
                for (d, s) in r.size.iter().enumerate() {
                    if let Some(s) = s {
                        g.set_size(d, idx, *s)?;
                    }
                }
            }
            match r.metal {
                Metal::None => {}
                Metal::Block => g.add_pec_block(&r.cells)?,
                Metal::Sheet(d) => g.add_pec_sheet(d, &r.cells)?,
            }
        }
        g.validate()?;
        Ok(g)
    }

    /// Solver problem with the scenario's port, parameters and band.
    pub fn problem(&self) -> Result<Problem> {
        let grid = self.build_grid(false)?;
        let reference = self.build_grid(true)?;
        let sim = &self.simulation;
        let port = SourceSpec {
            cells: sim.source_cells.linear_indices(&grid)?.into_iter().map(|p| p - 1).collect(),
            component: sim.source_component,
            pulse: Gaussian { t0: sim.t0, ts: sim.ts },
            amplitude: sim.amplitude,
            kind: sim.source_kind,
        };
        let params = self
            .params
            .iter()
            .map(|p| {
                let sub = CellSubset::new(p.cells.linear_indices(&grid)?, p.axis)?;
                let nominal = p.nominal.unwrap_or_else(|| {
                    let first = sub.indices().first().map_or(0, |i| i - 1);
                    p.axis.dir().map_or_else(|| grid.eps_r(first), |d| grid.size(d, first))
                });
                Ok(DesignParameter::new(p.name.clone(), sub, nominal))
            })
            .collect::<Result<Vec<_>>>()?;
        let a = &self.analysis;
        let freqs = FrequencyGrid::linspace(a.f_lo, a.f_hi, a.freqs)?;
        Problem::new(grid, Some(reference), sim.dt, sim.nsteps, sim.boundary, port, params, freqs)
    }

    /// Canonical text form; parsing it yields an identical scenario.
    pub fn serialize(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[grid]");
        for (d, axis) in ["x", "y", "z"].iter().enumerate() {
            let _ = writeln!(s, "n{axis} = {}", self.n[d]);
        }
        for (d, axis) in ["x", "y", "z"].iter().enumerate() {
            let _ = writeln!(s, "d{axis} = {:?}", self.d[d]);
        }
        for r in &self.regions {
            let _ = writeln!(s, "\n[region {}]\ncells = {}", r.name, fmt_box(&r.cells));
            if let Some(e) = r.eps_r {
                let _ = writeln!(s, "eps_r = {e:?}");
            }
            if let Some(m) = r.mu_r {
                let _ = writeln!(s, "mu_r = {m:?}");
            }
            for (d, axis) in ["x", "y", "z"].iter().enumerate() {
                if let Some(v) = r.size[d] {
                    let _ = writeln!(s, "d{axis} = {v:?}");
                }
            }
            if r.metal != Metal::None {
                let _ = writeln!(s, "metal = {}", r.metal.name());
            }
            if r.feed {
                let _ = writeln!(s, "feed = true");
            }
        }
        let sim = &self.simulation;
        let _ = writeln!(s, "\n[simulation]\ndt = {:?}\nnsteps = {}", sim.dt, sim.nsteps);
        if sim.dt_override {
            let _ = writeln!(s, "dt_override = true");
        }
        let _ = writeln!(
            s,
            "source_cells = {}\nsource_component = {}\nsource_kind = {}\namplitude = {:?}\nts = {:?}\nt0 = {:?}",
            fmt_box(&sim.source_cells),
            sim.source_component.name(),
            if sim.source_kind == SourceKind::Soft { "soft" } else { "hard" },
            sim.amplitude,
            sim.ts,
            sim.t0
        );
        let _ = writeln!(s, "boundary = mur");
        for (i, face) in FACES.iter().enumerate() {
            let k = sim.boundary.faces[i / 2][i % 2];
            if k != BoundaryKind::Mur1 {
                let _ = writeln!(s, "boundary_{face} = {}", kind_name(k));
            }
        }
        for p in &self.params {
            let _ = writeln!(s, "\n[param {}]\ncells = {}\naxis = {}", p.name, fmt_box(&p.cells), p.axis.name());
            if let Some(v) = p.nominal {
                let _ = writeln!(s, "nominal = {v:?}");
            }
        }
        let a = &self.analysis;
        let _ = writeln!(
            s,
            "\n[analysis]\nobservable = {}\nf_lo = {:?}\nf_hi = {:?}\nfreqs = {}",
            a.observable.name(),
            a.f_lo,
            a.f_hi,
            a.freqs
        );
        s
    }

    /// Names of the built-in scenarios.
    pub fn builtin_names() -> &'static [&'static str] {
        &["multilayer", "microstrip", "microstrip-desk"]
    }

    /// Text of a built-in scenario.
    pub fn builtin_text(name: &str) -> Option<&'static str> {
        match name {
            "multilayer" => Some(MULTILAYER),
            "microstrip" => Some(MICROSTRIP),
            "microstrip-desk" => Some(MICROSTRIP_DESK),
            _ => None,
        }
    }

    pub fn builtin(name: &str) -> Result<Scenario> {
        let text = Self::builtin_text(name).ok_or_else(|| {
            Error::invalid(format!("unknown scenario '{name}' (built-ins: {})", Self::builtin_names().join(", ")))
        })?;
        Scenario::parse(text)
    }

    /// A built-in name or a path to a scenario file.
    pub fn load(name_or_path: &str) -> Result<Scenario> {
        if let Some(text) = Self::builtin_text(name_or_path) {
            return Scenario::parse(text);
        }
        let text = std::fs::read_to_string(name_or_path)
            .map_err(|e| Error::invalid(format!("cannot read scenario '{name_or_path}': {e}")))?;
        Scenario::parse(&text)
    }
}

/// Three dielectric slabs in a vacuum line, probed at cell 10.
pub const MULTILAYER: &str = "\
# Three dielectric slabs on a 1-D line; reflection seen at cell 10.
[grid]
nx = 1
ny = 1
nz = 1030
dx = 1.0
dy = 1.0
dz = 0.000424

[region slab1]
cells = 1, 1, 402:414
eps_r = 2.2

[region slab2]
cells = 1, 1, 509:531
eps_r = 3.0

[region slab3]
cells = 1, 1, 626:658
eps_r = 4.0

[simulation]
dt = 4.41e-13
# Long enough for the probe tail to fall below 1e-6 of its peak.
nsteps = 20480
source_cells = 1, 1, 10
source_component = ex
ts = 2e-11
t0 = 1.2e-10
boundary = mur

[param d1]
cells = 1, 1, 414
axis = z

[param d2]
cells = 1, 1, 531
axis = z

[param d3]
cells = 1, 1, 658
axis = z

[param eps1]
cells = 1, 1, 402:414
axis = material

[param eps2]
cells = 1, 1, 509:531
axis = material

[param eps3]
cells = 1, 1, 626:658
axis = material

[analysis]
observable = s11
f_lo = 1e9
f_hi = 2.5e10
freqs = 401
";

/// Microstrip line with three open stubs over a grounded substrate.
pub const MICROSTRIP: &str = "\
# Microstrip line with three open stubs; port at j = 10.
[grid]
nx = 80
ny = 150
nz = 16
dx = 0.0004064
dy = 0.0004233
dz = 0.000265

[region substrate]
cells = 1:80, 1:150, 1:3
eps_r = 2.2
feed = true

[region line]
cells = 32:37, 1:150, 4
metal = zlow
feed = true

[region stub1]
cells = 38:67, 40:45, 4
metal = zlow

[region stub2]
cells = 38:67, 85:90, 4
metal = zlow

[region stub3]
cells = 38:67, 120:125, 4
metal = zlow

[simulation]
dt = 4.41e-13
nsteps = 4000
source_cells = 32:37, 10, 1:3
source_component = ez
ts = 1.5e-11
t0 = 4.5e-11
boundary = mur
boundary_zlow = pec

[param s1]
cells = 67, 40:45, 4
axis = x

[param s2]
cells = 67, 85:90, 4
axis = x

[param s3]
cells = 67, 120:125, 4
axis = x

[analysis]
observable = s11
f_lo = 1e9
f_hi = 1.5e10
freqs = 401
";

/// The microstrip coarsened about 2x in x and y for quick checks.
pub const MICROSTRIP_DESK: &str = "\
# Microstrip coarsened about 2x in x and y; substrate kept at 3 cells.
[grid]
nx = 40
ny = 75
nz = 12
dx = 0.0008128
dy = 0.0008466
dz = 0.000265

[region substrate]
cells = 1:40, 1:75, 1:3
eps_r = 2.2
feed = true

[region line]
cells = 16:18, 1:75, 4
metal = zlow
feed = true

[region stub1]
cells = 19:33, 20:22, 4
metal = zlow

[region stub2]
cells = 19:33, 43:45, 4
metal = zlow

[region stub3]
cells = 19:33, 60:62, 4
metal = zlow

[simulation]
dt = 4.41e-13
# The quasi-static tail relaxes slowly through Mur-1; shorter records leave
# transfer-function products visibly truncated.
nsteps = 30000
source_cells = 16:18, 5, 1:3
source_component = ez
ts = 1.5e-11
t0 = 4.5e-11
boundary = mur
boundary_zlow = pec

[param s1]
cells = 33, 20:22, 4
axis = x

[param s2]
cells = 33, 43:45, 4
axis = x

[param s3]
cells = 33, 60:62, 4
axis = x

[analysis]
observable = s11
f_lo = 1e9
f_hi = 1.5e10
freqs = 401
";
