//! Task driver behind the `eqsens` binary.
//!
//! Every task writes one CSV per spectrum into `--out` plus `manifest.txt`,
//! a `key = value` file recording the task, run counts and timing.

// `!(x > 0.0)` deliberately rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use eqsens::grid::perturb;
use eqsens::oracles::{cfd_first, cfd_mixed, cfd_second, default_step, dual_fdtd};
use eqsens::solver::taylor_eval;
use eqsens::spectral::relative_l2;
use eqsens::{DerivativeResult, Error, Observable, Problem, Scenario, Spectrum};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_TOLERANCE: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "eqsens", version, about = "FDTD field derivatives from equivalent sources")]
pub struct Cli {
    #[command(subcommand)]
    pub task: Task,
}

#[derive(Subcommand, Debug)]
pub enum Task {
    /// First derivatives in every listed parameter from one run.
    Jacobian(Common),
    /// Derivatives of orders 1..M in one parameter from two runs.
    HighOrder(Common),
    /// Mixed second derivative in two parameters from three runs.
    Mixed(Common),
    /// Full Hessian over N parameters from N + 1 runs.
    Hessian(Common),
    /// Central finite differences on perturbed grids.
    OracleCfd(CfdArgs),
    /// Forward-mode Taylor-coefficient FDTD.
    OracleDual(Common),
    /// Equivalent-source time series of each parameter.
    Sources(Common),
    /// Truncated Taylor predictions against a re-meshed run.
    TaylorCheck(TaylorArgs),
    /// Method against an oracle with per-frequency errors.
    Compare(CompareArgs),
    /// Print the canonical text of a scenario.
    ShowScenario(ShowArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Built-in scenario name or path to a scenario file.
    #[arg(long, default_value = "multilayer")]
    pub scenario: String,
    /// Comma-separated parameter names; defaults to all.
    #[arg(long, value_delimiter = ',')]
    pub params: Vec<String>,
    /// Highest derivative order.
    #[arg(long, default_value_t = 2)]
    pub order: usize,
    /// Analysis band `lo:hi` in Hz.
    #[arg(long)]
    pub band: Option<String>,
    /// Number of analysis frequencies.
    #[arg(long)]
    pub freqs: Option<usize>,
    /// Override the scenario's step count.
    #[arg(long)]
    pub nsteps: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct CfdArgs {
    #[command(flatten)]
    pub common: Common,
    /// Finite-difference step; defaults to a tenth of the cell or 1% of the permittivity.
    #[arg(long)]
    pub h: Option<f64>,
    /// With two parameters and order 2, use the four-point cross stencil.
    #[arg(long)]
    pub cross: bool,
}

#[derive(Args, Debug, Clone)]
pub struct TaylorArgs {
    #[command(flatten)]
    pub common: Common,
    /// Perturbation; defaults to half the affected cell size or 5% of the permittivity.
    #[arg(long)]
    pub delta: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Oracle {
    Dual,
    Cfd,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum CompareTask {
    Jacobian,
    HighOrder,
    Mixed,
}

#[derive(Args, Debug, Clone)]
pub struct CompareArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long, value_enum, default_value = "jacobian")]
    pub task: CompareTask,
    #[arg(long, value_enum, default_value = "dual")]
    pub oracle: Oracle,
    /// Single parameter, shorthand for `--params`.
    #[arg(long)]
    pub param: Option<String>,
    /// Finite-difference step for the CFD oracle.
    #[arg(long)]
    pub h: Option<f64>,
    /// Largest accepted aggregate relative L2 error.
    #[arg(long, default_value_t = 0.01)]
    pub tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct ShowArgs {
    #[arg(long, default_value = "multilayer")]
    pub scenario: String,
}

/// Failure of a task, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Lib(Error),
    Io(std::io::Error),
    Tolerance(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Lib(Error::Validation(_) | Error::ValidationList(_)) => EXIT_VALIDATION,
            CliError::Lib(_) | CliError::Io(_) => EXIT_NUMERICAL,
            CliError::Tolerance(_) => EXIT_TOLERANCE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
            CliError::Tolerance(m) => write!(f, "comparison failed: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

type Res<T> = std::result::Result<T, CliError>;

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Lib(Error::Validation(msg.into()))
}

/// Runs one task and returns the lines printed on success.
pub fn run(cli: Cli) -> Res<String> {
    match cli.task {
        Task::ShowScenario(a) => Ok(Scenario::load(&a.scenario)?.serialize()),
        Task::Jacobian(c) => with_session("jacobian", &c, |s| s.jacobian()),
        Task::HighOrder(c) => with_session("high-order", &c, |s| s.high_order()),
        Task::Mixed(c) => with_session("mixed", &c, |s| s.mixed()),
        Task::Hessian(c) => with_session("hessian", &c, |s| s.hessian()),
        Task::OracleDual(c) => with_session("oracle-dual", &c, |s| s.oracle_dual()),
        Task::Sources(c) => with_session("sources", &c, |s| s.sources()),
        Task::OracleCfd(a) => with_session("oracle-cfd", &a.common, |s| s.oracle_cfd(a.h, a.cross)),
        Task::TaylorCheck(a) => with_session("taylor-check", &a.common, |s| s.taylor_check(a.delta)),
        Task::Compare(a) => {
            let mut common = a.common.clone();
            if let Some(p) = &a.param {
                common.params = vec![p.clone()];
            }
            with_session("compare", &common, |s| s.compare(a.task, a.oracle, a.h, a.tol))
        }
    }
}

fn with_session(task: &str, c: &Common, f: impl FnOnce(&mut Session) -> Res<()> + Send) -> Res<String> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = c.threads {
        if n == 0 {
            return Err(invalid("--threads must be at least 1"));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| invalid(format!("thread pool: {e}")))?;
    pool.install(|| {
        let mut s = Session::new(task, c)?;
        let start = Instant::now();
        f(&mut s)?;
        s.finish(start.elapsed().as_secs_f64())
    })
}

/// Parses `lo:hi` into two frequencies.
pub fn parse_band(s: &str) -> Res<(f64, f64)> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| invalid(format!("band '{s}' is not lo:hi")))?;
    let p = |v: &str| v.trim().parse::<f64>().map_err(|_| invalid(format!("bad frequency '{v}'")));
    Ok((p(lo)?, p(hi)?))
}

struct Session {
    task: String,
    scenario_name: String,
    problem: Problem,
    observable: Observable,
    params: Vec<String>,
    order: usize,
    out: PathBuf,
    files: Vec<String>,
    extra: Vec<(String, String)>,
    report: String,
}

impl Session {
    fn new(task: &str, c: &Common) -> Res<Self> {
        let mut scenario = Scenario::load(&c.scenario)?;
        if let Some(b) = &c.band {
            let (lo, hi) = parse_band(b)?;
            scenario.analysis.f_lo = lo;
            scenario.analysis.f_hi = hi;
        }
        if let Some(n) = c.freqs {
            scenario.analysis.freqs = n;
        }
        if let Some(n) = c.nsteps {
            scenario.simulation.nsteps = n;
        }
        scenario.validate()?;
        let problem = scenario.problem()?;
        let params = if c.params.is_empty() {
            problem.params.iter().map(|p| p.name.clone()).collect()
        } else {
            c.params.clone()
        };
        for p in &params {
            problem.param_index(p)?;
        }
        fs::create_dir_all(&c.out)?;
        Ok(Session {
            task: task.to_string(),
            scenario_name: c.scenario.clone(),
            observable: scenario.analysis.observable,
            problem,
            params,
            order: c.order,
            out: c.out.clone(),
            files: Vec::new(),
            extra: Vec::new(),
            report: String::new(),
        })
    }

    fn names(&self) -> Vec<&str> {
        self.params.iter().map(String::as_str).collect()
    }

    fn one_param(&self) -> Res<&str> {
        match self.params.as_slice() {
            [p] => Ok(p),
            _ => Err(invalid(format!("{} needs exactly one parameter (--params)", self.task))),
        }
    }

    fn two_params(&self) -> Res<(&str, &str)> {
        match self.params.as_slice() {
            [u, v] => Ok((u, v)),
            _ => Err(invalid(format!("{} needs exactly two parameters (--params u,v)", self.task))),
        }
    }

    fn write(&mut self, name: &str, body: &str) -> Res<()> {
        fs::write(self.out.join(name), body)?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_result(&mut self, stem: &str, d: &DerivativeResult) -> Res<()> {
        let d = self.problem.convert(d, self.observable)?;
        if d.leakage_warning {
            let _ = writeln!(self.report, "warning: {stem}: probe record had not decayed; spectra may be truncated");
        }
        let name = format!("{}_{stem}.csv", self.task);
        self.write(&name, &d.spectrum.to_csv(&d.valid))
    }

    fn observe(&self, field: &Spectrum) -> Res<Spectrum> {
        Ok(self.problem.to_observable(field, self.observable)?)
    }

    fn jacobian(&mut self) -> Res<()> {
        let res = self.problem.jacobian(&self.names())?;
        for d in &res {
            let stem = d.index.0[0].0.clone();
            self.write_result(&stem, d)?;
        }
        Ok(())
    }

    fn high_order(&mut self) -> Res<()> {
        let p = self.one_param()?.to_string();
        for d in self.problem.high_order(&p, self.order)? {
            self.write_result(&format!("{p}_m{}", d.index.order()), &d)?;
        }
        Ok(())
    }

    fn mixed(&mut self) -> Res<()> {
        let (u, v) = self.two_params()?;
        let (u, v) = (u.to_string(), v.to_string());
        let d = self.problem.mixed(&u, &v)?;
        self.write_result(&format!("{u}_{v}"), &d)
    }

    fn hessian(&mut self) -> Res<()> {
        let names = self.params.clone();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let h = self.problem.hessian(&refs)?;
        for (i, row) in h.iter().enumerate() {
            for (j, d) in row.iter().enumerate().skip(i) {
                self.write_result(&format!("{}_{}", names[i], names[j]), d)?;
            }
        }
        Ok(())
    }

    fn sources(&mut self) -> Res<()> {
        let recs = self.problem.equivalent_sources(&self.names())?;
        for r in &recs {
            let mut body = String::from("step,cell,component,kind,value\n");
            for row in r.csv_rows() {
                body.push_str(&row);
                body.push('\n');
            }
            let arrival = r.first_arrival(1e-3).map_or("none".to_string(), |n| n.to_string());
            self.extra.push((format!("first_arrival_{}", r.parameter), arrival));
            self.write(&format!("sources_{}.csv", r.parameter), &body)?;
        }
        Ok(())
    }

    fn oracle_dual(&mut self) -> Res<()> {
        let valid = self.problem.valid_band()?;
        for p in self.params.clone() {
            let spectra = dual_fdtd(&self.problem, &p, self.order)?;
            for (m, s) in spectra.iter().enumerate().skip(1) {
                let s = self.observe(s)?;
                self.write(&format!("oracle-dual_{p}_m{m}.csv"), &s.to_csv(&valid))?;
            }
        }
        Ok(())
    }

    fn step_for(&self, name: &str, h: Option<f64>) -> Res<f64> {
        let p = &self.problem.params[self.problem.param_index(name)?];
        Ok(h.unwrap_or_else(|| default_step(&self.problem.grid, p)))
    }

    fn cfd(&self, order: usize, params: &[&str], h: Option<f64>) -> Res<(Spectrum, Vec<f64>)> {
        let field = match (order, params) {
            (1, [p]) => {
                let h = self.step_for(p, h)?;
                (cfd_first(&self.problem, p, h)?, vec![h])
            }
            (2, [p]) => {
                let h = self.step_for(p, h)?;
                (cfd_second(&self.problem, p, h)?, vec![h])
            }
            (2, [u, v]) => {
                let (hu, hv) = (self.step_for(u, h)?, self.step_for(v, h)?);
                (cfd_mixed(&self.problem, u, v, hu, hv)?, vec![hu, hv])
            }
            (o, _) if o > 2 => {
                return Err(invalid(
                    "finite differences above order 2 lose all digits to cancellation; use oracle-dual",
                ))
            }
            _ => return Err(invalid("unsupported finite-difference order or parameter count")),
        };
        Ok((self.observe(&field.0)?, field.1))
    }

    fn oracle_cfd(&mut self, h: Option<f64>, cross: bool) -> Res<()> {
        let valid = self.problem.valid_band()?;
        let order = self.order;
        let groups: Vec<Vec<String>> = if cross {
            let (u, v) = self.two_params()?;
            vec![vec![u.to_string(), v.to_string()]]
        } else {
            self.params.iter().map(|p| vec![p.clone()]).collect()
        };
        for g in groups {
            let refs: Vec<&str> = g.iter().map(String::as_str).collect();
            let (s, hs) = self.cfd(order, &refs, h)?;
            let stem = g.join("_");
            let hs: Vec<String> = hs.iter().map(|h| format!("{h:e}")).collect();
            self.extra.push((format!("h_{stem}"), hs.join(",")));
            self.write(&format!("oracle-cfd_{stem}_m{order}.csv"), &s.to_csv(&valid))?;
        }
        Ok(())
    }

    fn taylor_check(&mut self, delta: Option<f64>) -> Res<()> {
        let name = self.one_param()?.to_string();
        let idx = self.problem.param_index(&name)?;
        let param = self.problem.params[idx].clone();
        let delta = match delta {
            Some(d) => d,
            None => 5.0 * default_step(&self.problem.grid, &param),
        };
        let (nominal, derivs) = self.problem.high_order_with_nominal(&name, self.order)?;
        let valid = derivs[0].valid.clone();
        let base = match self.observable {
            Observable::S11 => self.problem.s11_from_total(&nominal)?,
            Observable::PortField => nominal,
        };
        let d: Vec<Spectrum> = derivs.iter().map(|d| self.observe(&d.spectrum)).collect::<Res<_>>()?;
        let moved = perturb(&self.problem.grid, &param.subset, delta)?;
        let (field, _) = self.problem.port_spectrum(&moved, &self.problem.counter)?;
        let truth = match self.observable {
            Observable::S11 => self.problem.s11_from_total(&field)?,
            Observable::PortField => field,
        };
        self.write(&format!("taylor-check_{name}_remeshed.csv"), &truth.to_csv(&valid))?;
        let mut residuals = Vec::new();
        for m in 1..=self.order {
            let pred = taylor_eval(&base, &d[..m], delta)?;
            let r = relative_l2(&pred, &truth, &valid);
            self.extra.push((format!("residual_order{m}"), format!("{r:e}")));
            let _ = writeln!(self.report, "order {m}: relative L2 residual {r:.4e}");
            self.write(&format!("taylor-check_{name}_order{m}.csv"), &pred.to_csv(&valid))?;
            residuals.push(r);
        }
        self.extra.push(("delta".into(), format!("{delta:e}")));
        if residuals.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(CliError::Tolerance(format!("residuals do not decrease with order: {residuals:?}")));
        }
        Ok(())
    }

    fn compare(&mut self, task: CompareTask, oracle: Oracle, h: Option<f64>, tol: f64) -> Res<()> {
        let (method, valid, order, stem) = match task {
            CompareTask::Jacobian => {
                let p = self.one_param()?.to_string();
                let d = self.problem.jacobian(&[&p])?.remove(0);
                (d, self.problem.valid_band()?, 1, p)
            }
            CompareTask::HighOrder => {
                let p = self.one_param()?.to_string();
                let d = self
                    .problem
                    .high_order(&p, self.order)?
                    .pop()
                    .ok_or_else(|| invalid("order must be at least 1"))?;
                let valid = d.valid.clone();
                (d, valid, self.order, format!("{p}_m{}", self.order))
            }
            CompareTask::Mixed => {
                let (u, v) = self.two_params()?;
                let (u, v) = (u.to_string(), v.to_string());
                let d = self.problem.mixed(&u, &v)?;
                let valid = d.valid.clone();
                (d, valid, 2, format!("{u}_{v}"))
            }
        };
        let method = self.problem.convert(&method, self.observable)?.spectrum;
        let names = self.params.clone();
        let refs: Vec<&str> = names.iter().map(String::as_str).collect();
        let reference = match oracle {
            Oracle::Dual => {
                let [p] = refs.as_slice() else {
                    return Err(invalid("the dual oracle differentiates one parameter at a time"));
                };
                let s = dual_fdtd(&self.problem, p, order)?;
                self.observe(&s[order])?
            }
            Oracle::Cfd => {
                let (s, hs) = self.cfd(order, &refs, h)?;
                let hs: Vec<String> = hs.iter().map(|h| format!("{h:e}")).collect();
                self.extra.push(("h".into(), hs.join(",")));
                s
            }
        };
        let mut body = String::from("frequency_hz,relative_error\n");
        for ((f, (a, b)), _) in self
            .problem
            .freqs
            .values()
            .iter()
            .zip(method.values.iter().zip(&reference.values))
            .zip(&valid)
            .filter(|(_, &v)| v)
        {
            let e = if b.norm() > 0.0 { (a - b).norm() / b.norm() } else { (a - b).norm() };
            let _ = writeln!(body, "{f:e},{e:e}");
        }
        let agg = relative_l2(&method, &reference, &valid);
        let oname = match oracle {
            Oracle::Dual => "dual",
            Oracle::Cfd => "cfd",
        };
        self.write(&format!("compare_{stem}_{oname}.csv"), &body)?;
        self.extra.push(("oracle".into(), oname.into()));
        self.extra.push(("aggregate_l2".into(), format!("{agg:e}")));
        self.extra.push(("tolerance".into(), format!("{tol:e}")));
        let _ = writeln!(self.report, "aggregate relative L2 error {agg:.4e} (tolerance {tol:e})");
        if !(agg < tol) {
            self.write_manifest(f64::NAN)?;
            return Err(CliError::Tolerance(format!("aggregate relative L2 error {agg:e} exceeds {tol:e}")));
        }
        Ok(())
    }

    fn write_manifest(&mut self, wall: f64) -> Res<()> {
        let mut m = String::new();
        let _ = writeln!(m, "task = {}", self.task);
        let _ = writeln!(m, "scenario = {}", self.scenario_name);
        let _ = writeln!(m, "params = {}", self.params.join(","));
        let _ = writeln!(m, "observable = {}", self.observable.name());
        let _ = writeln!(m, "run_count = {}", self.problem.counter.count());
        let _ = writeln!(m, "reference_runs = {}", self.problem.reference_counter.count());
        let _ = writeln!(m, "nsteps = {}", self.problem.nsteps);
        let f = self.problem.freqs.values();
        let _ = writeln!(m, "band_hz = {:e}:{:e}", f[0], f[f.len() - 1]);
        let _ = writeln!(m, "freqs = {}", f.len());
        let _ = writeln!(m, "threads = {}", rayon::current_num_threads());
        let _ = writeln!(m, "wall_time_s = {wall:.3}");
        let _ = writeln!(m, "eqsens_version = {}", env!("CARGO_PKG_VERSION"));
        for (k, v) in &self.extra {
            let _ = writeln!(m, "{k} = {v}");
        }
        let _ = writeln!(m, "outputs = {}", self.files.join(","));
        fs::write(self.out.join("manifest.txt"), m)?;
        Ok(())
    }

    fn finish(mut self, wall: f64) -> Res<String> {
        self.write_manifest(wall)?;
        let _ = writeln!(
            self.report,
            "{}: {} forward runs, {} files in {}",
            self.task,
            self.problem.counter.count(),
            self.files.len(),
            self.out.display()
        );
        Ok(self.report)
    }
}
