use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use clap::Args;
use parisi_core::cs::{eval_q, Interval, SolutionResiduals};
use parisi_core::landscape::{default_u_grid, landscape_profile, DEFAULT_U_POINTS, GAP_TOL};
use parisi_core::parisi::{default_fbar_tol, eval_p, optimality_residuals};
use parisi_core::rsb::{classify as classify_mixture, ClassifyOptions, Criteria, CrossCheck};
use parisi_core::rsb::{FrsbSummary, OneRsbSummary, RsSummary};
use parisi_core::sim::{simulate as run_simulation, Histogram, SimReport};
use parisi_core::{
    minimize_q, DualPoint, Error, GridMeasure, LandscapeOptions, Mixture, ParisiSolution, Phase,
    SimConfig, SolverOptions,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::manifest::{
    file_name, mixture_digest, output_path, read_mixture, sidecar, write_json, RunManifest,
};
use crate::Status;

#[derive(Debug, Clone, Args)]
pub struct SolverFlags {
    /// Relative decrease of Q that stops the iteration.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, default_value_t = 200_000)]
    pub max_iters: usize,
    /// Support threshold relative to the total density mass.
    #[arg(long, default_value_t = 1e-7)]
    pub support_eps: f64,
    /// First grid of the continuation.
    #[arg(long, default_value_t = 32)]
    pub coarse_grid: usize,
    /// Tolerance for f bar in the residual record [default: 1e-6 xi''(1)].
    #[arg(long)]
    pub fbar_tol: Option<f64>,
}

impl SolverFlags {
    fn options(&self) -> SolverOptions {
        SolverOptions {
            tol: self.tol,
            max_iters: self.max_iters,
            support_eps: self.support_eps,
            coarse_grid: self.coarse_grid,
            init: None,
            fbar_tol: self.fbar_tol,
        }
    }

    /// Adds the flags to `man`; the default `f bar` tolerance needs `m`.
    fn record(&self, man: RunManifest, m: Option<&Mixture>) -> RunManifest {
        let man = man
            .tol("tol", self.tol)
            .tol("max_iters", self.max_iters as f64)
            .tol("support_eps", self.support_eps)
            .tol("coarse_grid", self.coarse_grid as f64);
        match self.fbar_tol.or(m.map(default_fbar_tol)) {
            Some(t) => man.tol("fbar_tol", t),
            None => man,
        }
    }
}

fn read_measure(path: &Path) -> Result<GridMeasure> {
    let f = File::open(path).with_context(|| format!("opening measure {}", path.display()))?;
    GridMeasure::read_csv(f).with_context(|| format!("reading measure {}", path.display()))
}

fn write_measure(path: &Path, nu: &GridMeasure) -> Result<()> {
    let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    nu.write_csv(BufWriter::new(f))?;
    Ok(())
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(io::stdout().lock(), "{text}") {
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn phase_name(p: Phase) -> String {
    serde_json::to_value(p)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

// ---------------------------------------------------------------- solve

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Mixture file, e.g. {"coeffs": {"2": 1.0}, "h": 0.0}.
    #[arg(long)]
    pub mixture: PathBuf,
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Starting measure (CSV) on a grid dividing --grid.
    #[arg(long)]
    pub init: Option<PathBuf>,
    /// Report path [default: solve.json]; the measure goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub manifest: RunManifest,
    pub me: f64,
    pub s_p: f64,
    pub b_p: f64,
    pub gamma_support: Vec<Interval>,
    pub residuals: SolutionResiduals,
    pub duality_gap: f64,
    pub iterations: usize,
    /// File name of the measure CSV, relative to the report.
    pub measure_csv: String,
}

pub fn solve(a: &SolveArgs) -> Result<Status> {
    let m = read_mixture(&a.mixture)?;
    let mut opts = a.solver.options();
    if let Some(p) = &a.init {
        opts.init = Some(read_measure(p)?);
    }
    let out = output_path(a.out.as_deref(), "solve.json")?;
    let csv = sidecar(&out, "measure.csv");
    let sol = match minimize_q(&m, a.grid, &opts) {
        Ok(s) => s,
        Err(Error::NoConvergence {
            iterations,
            objective,
            grad_norm,
            last,
        }) => {
            write_measure(&csv, &last)?;
            eprintln!("last iterate written to {}", csv.display());
            return Err(Error::NoConvergence {
                iterations,
                objective,
                grad_norm,
                last,
            }
            .into());
        }
        Err(e) => return Err(e.into()),
    };
    write_measure(&csv, &sol.nu_p)?;
    let manifest = a
        .solver
        .record(RunManifest::new("solve").mixture(&m).grid(a.grid), Some(&m))
        .output(&out)
        .output(&csv);
    let p = eval_p(&sol.dual_point(), &m)?;
    let report = SolveReport {
        manifest,
        me: sol.me,
        s_p: sol.s_p,
        b_p: sol.b_p,
        gamma_support: sol.gamma_support.clone(),
        residuals: sol.residuals,
        duality_gap: (sol.me - p).abs(),
        iterations: sol.iterations,
        measure_csv: file_name(&csv),
    };
    write_json(&out, &report)?;
    print_json(&report)?;
    Ok(Status::Ok)
}

// ------------------------------------------------------------- classify

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub mixture: PathBuf,
    /// Also run the numerical solver and compare.
    #[arg(long)]
    pub cross_check: bool,
    /// Grid for the numerical solver.
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Report path [default: classify.json].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyReport {
    pub manifest: RunManifest,
    pub phase: Phase,
    /// Closed-form value when available, numerical otherwise.
    pub me: f64,
    pub s_p: f64,
    pub z: Option<f64>,
    pub me_closed_form: Option<f64>,
    pub me_numeric: Option<f64>,
    pub criteria: Criteria,
    pub zeta_max_interior: Option<f64>,
    pub rs: Option<RsSummary>,
    pub one_rsb: Option<OneRsbSummary>,
    pub frsb: Option<FrsbSummary>,
    pub cross_check: Option<CrossCheck>,
}

pub fn classify(a: &ClassifyArgs) -> Result<Status> {
    let m = read_mixture(&a.mixture)?;
    let mut opts = ClassifyOptions {
        cross_check: a.cross_check,
        grid: Some(a.grid),
        solver: a.solver.options(),
    };
    let mut c = classify_mixture(&m, &opts)?;
    if c.phase == Phase::NumericOnly && c.cross_check.is_none() {
        opts.cross_check = true;
        c = classify_mixture(&m, &opts)?;
    }
    let out = output_path(a.out.as_deref(), "classify.json")?;
    let mut manifest = RunManifest::new("classify").mixture(&m);
    if let Some(cc) = &c.cross_check {
        manifest = a.solver.record(manifest.grid(cc.grid), Some(&m));
    }
    let me_numeric = c.cross_check.map(|cc| cc.me_numeric);
    let me = c
        .me_closed_form()
        .or(me_numeric)
        .context("no energy available")?;
    let s_p = c
        .s_p()
        .or(c.cross_check.map(|cc| cc.s_p_numeric))
        .context("no s_P available")?;
    let report = ClassifyReport {
        manifest: manifest.output(&out),
        phase: c.phase,
        me,
        s_p,
        z: c.z,
        me_closed_form: c.me_closed_form(),
        me_numeric,
        criteria: c.criteria,
        zeta_max_interior: c.zeta_max_interior,
        rs: c.rs,
        one_rsb: c.one_rsb,
        frsb: c.frsb,
        cross_check: c.cross_check,
    };
    write_json(&out, &report)?;
    print_json(&report)?;
    Ok(Status::Ok)
}

// --------------------------------------------------------------- verify

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long)]
    pub mixture: PathBuf,
    /// Measure CSV as written by `solve`.
    #[arg(long)]
    pub measure: PathBuf,
    /// Dual parameter [default: hat nu(0) + 1 / nu([0,1])].
    #[arg(long = "B")]
    pub b: Option<f64>,
    /// Tolerance for f bar [default: 1e-6 xi''(1)].
    #[arg(long)]
    pub fbar_tol: Option<f64>,
    /// Tolerance for |f(1)| [default: the f bar tolerance].
    #[arg(long)]
    pub f_tol: Option<f64>,
    /// Allowed rho-mass outside the zero set of f bar, relative to the density mass.
    #[arg(long, default_value_t = 1e-6)]
    pub support_tol: f64,
    /// Report path [default: verify.json]; f and f bar go next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyChecks {
    pub f_at_1: bool,
    pub min_fbar: bool,
    pub support: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub manifest: RunManifest,
    pub b: f64,
    pub q: f64,
    pub p: f64,
    pub f_at_1: f64,
    pub min_fbar: f64,
    pub support_violation: f64,
    pub max_abs_fbar_on_support: f64,
    pub f_tol: f64,
    pub fbar_tol: f64,
    pub support_limit: f64,
    pub checks: VerifyChecks,
    pub pass: bool,
    pub profile_csv: String,
}

pub fn verify(a: &VerifyArgs) -> Result<Status> {
    let m = read_mixture(&a.mixture)?;
    let nu = read_measure(&a.measure)?;
    ensure!(a.support_tol >= 0.0, "support tolerance must be nonnegative");
    let dp = match a.b {
        Some(b) => DualPoint::new(b, nu),
        None => DualPoint::from_measure(nu, &m)?,
    };
    let fbar_tol = a.fbar_tol.unwrap_or_else(|| default_fbar_tol(&m));
    let f_tol = a.f_tol.unwrap_or(fbar_tol);
    let r = optimality_residuals(&dp, &m, Some(fbar_tol))?;
    let support_limit = a.support_tol * dp.nu.gamma_mass();
    let checks = VerifyChecks {
        f_at_1: r.f_at_1.abs() <= f_tol,
        min_fbar: r.min_fbar >= -fbar_tol,
        support: r.support_violation <= support_limit,
    };
    let pass = checks.f_at_1 && checks.min_fbar && checks.support;

    let out = output_path(a.out.as_deref(), "verify.json")?;
    let csv = sidecar(&out, "profile.csv");
    let mut w = csv::Writer::from_path(&csv)?;
    w.write_record(["s", "f", "fbar"])?;
    for (i, (f, fb)) in r.f.iter().zip(&r.fbar).enumerate() {
        w.write_record([dp.nu.node(i).to_string(), f.to_string(), fb.to_string()])?;
    }
    w.flush()?;

    let manifest = RunManifest::new("verify")
        .mixture(&m)
        .grid(dp.nu.n())
        .tol("fbar_tol", fbar_tol)
        .tol("f_tol", f_tol)
        .tol("support_tol", a.support_tol)
        .output(&out)
        .output(&csv);
    let report = VerifyReport {
        manifest,
        b: dp.b,
        q: eval_q(&dp.nu, &m)?,
        p: eval_p(&dp, &m)?,
        f_at_1: r.f_at_1,
        min_fbar: r.min_fbar,
        support_violation: r.support_violation,
        max_abs_fbar_on_support: r.max_abs_fbar_on_support,
        f_tol,
        fbar_tol,
        support_limit,
        checks,
        pass,
        profile_csv: file_name(&csv),
    };
    write_json(&out, &report)?;
    print_json(&report)?;
    Ok(if pass { Status::Ok } else { Status::Failed })
}

// ------------------------------------------------------------ landscape

#[derive(Debug, Args)]
pub struct LandscapeArgs {
    #[arg(long)]
    pub mixture: PathBuf,
    /// Report written by `solve`; solved on --grid if absent.
    #[arg(long)]
    pub solution: Option<PathBuf>,
    #[arg(long, default_value_t = 1024)]
    pub grid: usize,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Number of equispaced overlaps on [-1, 1].
    #[arg(long, default_value_t = DEFAULT_U_POINTS)]
    pub points: usize,
    /// Gaps above this exclude an overlap.
    #[arg(long, default_value_t = GAP_TOL)]
    pub gap_tol: f64,
    /// Half-width of the lambda search box [default: (B - hat nu(0)) / 2].
    #[arg(long)]
    pub lambda_box: Option<f64>,
    /// Minimize over lambda only, without the density deformation.
    #[arg(long)]
    pub no_deform: bool,
    /// Profile CSV path [default: landscape.csv]; a JSON summary goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeSummary {
    pub manifest: RunManifest,
    pub me: f64,
    pub s_p: f64,
    pub gamma_set: Vec<Interval>,
    pub excluded: Vec<Interval>,
    pub max_gap: f64,
    pub lambda_box: f64,
    pub edge_hits: usize,
    pub solution: Option<String>,
    pub profile_csv: String,
}

fn load_solution(path: &Path, m: &Mixture) -> Result<ParisiSolution> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading solution {}", path.display()))?;
    let rep: SolveReport = serde_json::from_str(&text)
        .with_context(|| format!("parsing solution {}", path.display()))?;
    if rep.manifest.mixture_digest.as_deref() != Some(mixture_digest(m).as_str()) {
        bail!("solution {} was computed for a different mixture", path.display());
    }
    let dir = path.parent().unwrap_or(Path::new(""));
    let nu = read_measure(&dir.join(&rep.measure_csv))?;
    Ok(ParisiSolution::with_s_p(nu, m, rep.s_p)?)
}

pub fn landscape(a: &LandscapeArgs) -> Result<Status> {
    let m = read_mixture(&a.mixture)?;
    ensure!(a.points >= 2, "at least two overlaps are needed");
    let mut manifest = RunManifest::new("landscape").mixture(&m);
    let sol = match &a.solution {
        Some(p) => load_solution(p, &m)?,
        None => {
            manifest = a.solver.record(manifest, Some(&m));
            minimize_q(&m, a.grid, &a.solver.options())?
        }
    };
    let opts = LandscapeOptions {
        lambda_box: a.lambda_box,
        gap_tol: a.gap_tol,
        deform: !a.no_deform,
    };
    let u = default_u_grid(a.points);
    let rep = landscape_profile(&m, &sol, &u, &opts)?;

    let out = output_path(a.out.as_deref(), "landscape.csv")?;
    let mut summary_path = sidecar(&out, "json");
    if summary_path == out {
        summary_path = sidecar(&out, "summary.json");
    }
    let mut w = csv::Writer::from_path(&out)
        .with_context(|| format!("creating {}", out.display()))?;
    w.write_record(["u", "bound", "gap", "excluded_flag"])?;
    for ((u, b), (g, x)) in rep
        .u_grid
        .iter()
        .zip(&rep.bound)
        .zip(rep.gap.iter().zip(rep.excluded_flags()))
    {
        w.write_record([u.to_string(), b.to_string(), g.to_string(), u8::from(x).to_string()])?;
    }
    w.flush()?;

    let manifest = manifest
        .grid(sol.nu_p.n())
        .tol("gap_tol", a.gap_tol)
        .tol("points", a.points as f64)
        .tol("lambda_box", rep.lambda_box)
        .output(&out)
        .output(&summary_path);
    let summary = LandscapeSummary {
        manifest,
        me: rep.me,
        s_p: sol.s_p,
        gamma_set: rep.gamma_set.clone(),
        excluded: rep.excluded.clone(),
        max_gap: rep.gap.iter().copied().fold(0.0, f64::max),
        lambda_box: rep.lambda_box,
        edge_hits: rep.edge_hits,
        solution: a.solution.as_ref().map(|p| p.display().to_string()),
        profile_csv: file_name(&out),
    };
    write_json(&summary_path, &summary)?;
    print_json(&summary)?;
    Ok(Status::Ok)
}

// ------------------------------------------------------------- simulate

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub mixture: PathBuf,
    /// Dimension.
    #[arg(long = "N", default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 20)]
    pub restarts: usize,
    /// Number of independent disorder samples.
    #[arg(long, default_value_t = 1)]
    pub disorder: usize,
    /// Keep configurations within eta * N of the best energy.
    #[arg(long, default_value_t = 0.05)]
    pub eta: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub step0: f64,
    #[arg(long, default_value_t = 5000)]
    pub max_steps: usize,
    #[arg(long, default_value_t = 1e-7)]
    pub grad_tol: f64,
    /// Report path [default: simulate.json]; the histogram goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateOutput {
    pub manifest: RunManifest,
    pub histogram_csv: String,
    #[serde(flatten)]
    pub report: SimReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SimulateSummary {
    me_n_estimate: f64,
    best_energy_per_site: Vec<f64>,
    distinct_configurations: Vec<usize>,
    pairs: u64,
    outputs: Vec<String>,
}

fn write_histogram(path: &Path, h: &Histogram) -> Result<()> {
    let mut w = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["bin_center", "count"])?;
    for (c, n) in h.bin_centers.iter().zip(&h.counts) {
        w.write_record([c.to_string(), n.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn simulate(a: &SimulateArgs) -> Result<Status> {
    let m = read_mixture(&a.mixture)?;
    let cfg = SimConfig {
        n: a.n,
        n_restarts: a.restarts,
        n_disorder_samples: a.disorder,
        step0: a.step0,
        max_steps: a.max_steps,
        grad_tol: a.grad_tol,
        seed: a.seed,
    };
    let report = run_simulation(&m, &cfg, a.eta)?;
    let out = output_path(a.out.as_deref(), "simulate.json")?;
    let hist = sidecar(&out, "hist.csv");
    write_histogram(&hist, &report.histogram)?;
    let manifest = RunManifest::new("simulate")
        .mixture(&m)
        .seed(a.seed)
        .tol("eta", a.eta)
        .tol("step0", a.step0)
        .tol("max_steps", a.max_steps as f64)
        .tol("grad_tol", a.grad_tol)
        .output(&out)
        .output(&hist);
    let summary = SimulateSummary {
        me_n_estimate: report.me_n_estimate,
        best_energy_per_site: report.samples.iter().map(|c| c.best_energy_per_site).collect(),
        distinct_configurations: report.samples.iter().map(|c| c.configurations.len()).collect(),
        pairs: report.histogram.total(),
        outputs: manifest.outputs.clone(),
    };
    let output = SimulateOutput {
        manifest,
        histogram_csv: file_name(&hist),
        report,
    };
    write_json(&out, &output)?;
    print_json(&summary)?;
    Ok(Status::Ok)
}

// ---------------------------------------------------------------- sweep

/// Parameter values: `start:end:count` or a comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub struct Values(pub Vec<f64>);

fn parse_values(s: &str) -> std::result::Result<Values, String> {
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .map_err(|_| format!("{t:?} is not a number"))
    };
    let parts: Vec<&str> = s.split(':').collect();
    let v = match parts.as_slice() {
        [a, b, k] => {
            let (a, b) = (num(a)?, num(b)?);
            let k: usize = k.trim().parse().map_err(|_| format!("{k:?} is not a count"))?;
            match k {
                0 => return Err("count must be positive".into()),
                1 => vec![a],
                _ => (0..k)
                    .map(|i| a + (b - a) * i as f64 / (k - 1) as f64)
                    .collect(),
            }
        }
        [_] => s.split(',').map(num).collect::<std::result::Result<_, _>>()?,
        _ => return Err(format!("{s:?} is neither start:end:count nor a list")),
    };
    if v.iter().any(|x| !x.is_finite()) {
        return Err("values must be finite".into());
    }
    Ok(Values(v))
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Family xi(s) = (1 - c) s^p + c s^q.
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long, default_value_t = 4)]
    pub q: u32,
    /// Values of c in [0, 1].
    #[arg(long, value_parser = parse_values, default_value = "0:1:11")]
    pub c: Values,
    /// Values of the field h.
    #[arg(long, value_parser = parse_values, default_value = "0")]
    pub h: Values,
    /// Grid for points without a closed form.
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
    #[command(flatten)]
    pub solver: SolverFlags,
    /// Worker threads [default: available cores].
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Table path [default: sweep.csv]; the manifest goes next to it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
struct SweepRow {
    c: f64,
    h: f64,
    phase: String,
    me: f64,
    s_p: f64,
    source: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SweepManifest {
    manifest: RunManifest,
    p: u32,
    q: u32,
    c: Vec<f64>,
    h: Vec<f64>,
    rows: usize,
    not_converged: usize,
    table_csv: String,
}

fn sweep_point(p: u32, q: u32, c: f64, h: f64, grid: usize, opts: &SolverOptions) -> Result<SweepRow> {
    let m = Mixture::new([(p, 1.0 - c), (q, c)], h)?;
    let cl = classify_mixture(&m, &ClassifyOptions::default())?;
    let row = |phase: Phase, me: f64, s_p: f64, source| SweepRow {
        c,
        h,
        phase: phase_name(phase),
        me,
        s_p,
        source,
    };
    if let (Some(me), Some(s_p)) = (cl.me_closed_form(), cl.s_p()) {
        return Ok(row(cl.phase, me, s_p, "closed_form"));
    }
    match minimize_q(&m, grid, opts) {
        Ok(sol) => Ok(row(cl.phase, sol.me, sol.s_p, "numeric")),
        Err(Error::NoConvergence { objective, .. }) => {
            Ok(row(cl.phase, objective, f64::NAN, "not_converged"))
        }
        Err(e) => Err(e.into()),
    }
}

pub fn sweep(a: &SweepArgs) -> Result<Status> {
    ensure!(a.p != a.q, "the two degrees must differ");
    ensure!(
        a.c.0.iter().all(|c| (0.0..=1.0).contains(c)),
        "c must lie in [0, 1]"
    );
    let jobs = a
        .jobs
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    ensure!(jobs >= 1, "at least one job is needed");
    let points: Vec<(f64, f64)> = a
        .c
        .0
        .iter()
        .flat_map(|&c| a.h.0.iter().map(move |&h| (c, h)))
        .collect();
    let opts = a.solver.options();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    let rows: Vec<SweepRow> = pool.install(|| {
        points
            .par_iter()
            .map(|&(c, h)| sweep_point(a.p, a.q, c, h, a.grid, &opts))
            .collect::<Result<_>>()
    })?;

    let out = output_path(a.out.as_deref(), "sweep.csv")?;
    let man_path = sidecar(&out, "json");
    let mut w = csv::Writer::from_path(&out)
        .with_context(|| format!("creating {}", out.display()))?;
    w.write_record(["c", "h", "phase", "me", "s_p", "source"])?;
    for r in &rows {
        w.write_record([
            r.c.to_string(),
            r.h.to_string(),
            r.phase.clone(),
            r.me.to_string(),
            r.s_p.to_string(),
            r.source.to_string(),
        ])?;
    }
    w.flush()?;

    let not_converged = rows.iter().filter(|r| r.source == "not_converged").count();
    let manifest = a
        .solver
        .record(RunManifest::new("sweep").grid(a.grid), None)
        .output(&out)
        .output(&man_path);
    let sm = SweepManifest {
        manifest,
        p: a.p,
        q: a.q,
        c: a.c.0.clone(),
        h: a.h.0.clone(),
        rows: rows.len(),
        not_converged,
        table_csv: file_name(&out),
    };
    write_json(&man_path, &sm)?;
    print_json(&sm)?;
    Ok(if not_converged > 0 {
        Status::NotConverged
    } else {
        Status::Ok
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_flag_defaults_match_the_library() {
        let flags = SolverFlags {
            tol: 1e-10,
            max_iters: 200_000,
            support_eps: 1e-7,
            coarse_grid: 32,
            fbar_tol: None,
        };
        assert_eq!(flags.options(), SolverOptions::default());
        assert_eq!(LandscapeOptions::default().gap_tol, GAP_TOL);
        let cfg = SimConfig::default();
        assert_eq!((cfg.step0, cfg.max_steps, cfg.grad_tol), (0.1, 5000, 1e-7));
    }

    #[test]
    fn value_lists() {
        assert_eq!(parse_values("0:1:3").unwrap(), Values(vec![0.0, 0.5, 1.0]));
        assert_eq!(parse_values("0.2").unwrap(), Values(vec![0.2]));
        assert_eq!(parse_values("0, 0.1,1").unwrap(), Values(vec![0.0, 0.1, 1.0]));
        assert_eq!(parse_values("0.3:9:1").unwrap(), Values(vec![0.3]));
        assert!(parse_values("0:1:0").is_err());
        assert!(parse_values("0:1").is_err());
        assert!(parse_values("a,b").is_err());
        assert!(parse_values("nan").is_err());
    }

    #[test]
    fn phase_names_follow_the_report_format() {
        assert_eq!(phase_name(Phase::Rs), "RS");
        assert_eq!(phase_name(Phase::OneRsbAtZero), "OneRsbAtZero");
    }
}
