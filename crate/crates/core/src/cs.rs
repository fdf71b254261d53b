//! The Crisanti-Sommers functional
//! `Q(nu) = 1/2 [ int (xi' + h^2) dnu + int_0^1 dq / nu((q,1]) ]`
//! and its minimization over the discretized cone.
//!
//! The tail `nu((q,1])` is affine on each cell, so the second integral is a
//! sum of inverse logarithmic means of consecutive node tails. The solver is
//! a projected Newton method run on a sequence of doubling grids.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::band::Penta;
use crate::measure::{node_values, project_to_cone, GridMeasure};
use crate::mixture::Mixture;
use crate::numeric::{log1p_ratio, log1p_ratio_deriv};
use crate::parisi::{self, DualPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iters: usize,
    pub support_eps: f64,
    /// Size of the first grid in the continuation; `n` itself if larger.
    pub coarse_grid: usize,
    /// Starting point on any grid whose size divides `n`; the RS point if absent.
    pub init: Option<GridMeasure>,
    /// Tolerance for `f bar` in the residual record; `1e-6 xi''(1)` if absent.
    pub fbar_tol: Option<f64>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iters: 200_000,
            support_eps: 1e-7,
            coarse_grid: 32,
            init: None,
            fbar_tol: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolutionResiduals {
    pub f_at_1: f64,
    pub min_fbar: f64,
    pub max_abs_fbar_on_support: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParisiSolution {
    pub nu_p: GridMeasure,
    pub me: f64,
    pub b_p: f64,
    pub s_p: f64,
    pub gamma_support: Vec<Interval>,
    pub residuals: SolutionResiduals,
    pub iterations: usize,
    /// Objective after every iteration, finest grid last.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub history: Vec<f64>,
}

impl ParisiSolution {
    /// Wraps a measure, computing `ME = Q(nu)`, `B`, `s_P` and residuals.
    pub fn from_measure(nu: GridMeasure, m: &Mixture, support_eps: f64) -> Result<Self> {
        let s_p = first_support_point(&nu, support_eps);
        Self::with_s_p(nu, m, s_p)
    }

    /// Same as [`ParisiSolution::from_measure`] with a known `s_P`.
    pub fn with_s_p(nu: GridMeasure, m: &Mixture, s_p: f64) -> Result<Self> {
        let me = eval_q(&nu, m)?;
        let dp = DualPoint::from_measure(nu, m)?;
        let r = parisi::optimality_residuals(&dp, m, None)?;
        let gamma_support = support_intervals(&dp.nu, support_atol(&dp.nu));
        Ok(Self {
            me,
            b_p: dp.b,
            s_p,
            gamma_support,
            residuals: SolutionResiduals {
                f_at_1: r.f_at_1,
                min_fbar: r.min_fbar,
                max_abs_fbar_on_support: r.max_abs_fbar_on_support,
            },
            nu_p: dp.nu,
            iterations: 0,
            history: Vec::new(),
        })
    }

    pub fn dual_point(&self) -> DualPoint {
        DualPoint::new(self.b_p, self.nu_p.clone())
    }
}

/// Grid-dependent coefficients of `Q`.
struct Discretization {
    n: usize,
    w: f64,
    /// `xi(s_{i+1}) - xi(s_i) + h^2 / n`.
    lin: Vec<f64>,
    lin_delta: f64,
}

impl Discretization {
    fn new(m: &Mixture, n: usize) -> Self {
        let w = 1.0 / n as f64;
        let h2 = m.h() * m.h();
        let xi = node_values(n, |s| m.xi0(s));
        Self {
            n,
            w,
            lin: xi.windows(2).map(|p| p[1] - p[0] + h2 * w).collect(),
            lin_delta: m.xi1(1.0) + h2,
        }
    }

    fn tails(&self, gamma: &[f64], delta: f64, t: &mut [f64]) {
        t[self.n] = delta;
        for i in (0..self.n).rev() {
            t[i] = t[i + 1] + gamma[i] * self.w;
        }
    }

    /// `Q`, or `+inf` when some tail is not positive.
    fn value(&self, gamma: &[f64], delta: f64, t: &mut [f64]) -> f64 {
        self.tails(gamma, delta, t);
        if !(t[self.n] > 0.0) || t.iter().any(|v| !(*v > 0.0)) {
            return f64::INFINITY;
        }
        let linear: f64 = self.lin.iter().zip(gamma).map(|(c, g)| c * g).sum::<f64>()
            + self.lin_delta * delta;
        let tail: f64 = t
            .windows(2)
            .map(|p| log1p_ratio((p[0] - p[1]) / p[1]) / p[1])
            .sum::<f64>()
            * self.w;
        0.5 * (linear + tail)
    }

    /// Euclidean partial derivatives of `Q`; `t` must hold the tails.
    fn gradient(&self, t: &[f64], g_gamma: &mut [f64]) -> f64 {
        let n = self.n;
        // dQ/dT_j, accumulated as a prefix sum over j <= k
        let mut prefix = 0.0;
        let mut carry = 0.0;
        for k in 0..n {
            let (a, b) = (t[k], t[k + 1]);
            let x = (a - b) / b;
            let phi = log1p_ratio(x);
            let dphi = log1p_ratio_deriv(x);
            let b2 = b * b;
            let d_a = dphi / b2;
            let d_b = -(phi + (1.0 + x) * dphi) / b2;
            prefix += self.w * (carry + d_a);
            carry = d_b;
            g_gamma[k] = 0.5 * (self.lin[k] + self.w * prefix);
        }
        prefix += self.w * carry;
        0.5 * (self.lin_delta + prefix)
    }
}

fn check_feasible(nu: &GridMeasure) -> Result<()> {
    if nu.delta() == 0.0 && nu.gamma().iter().all(|g| *g == 0.0) {
        return Err(Error::InfeasibleMeasure("measure is identically zero".into()));
    }
    Ok(())
}

/// `Q(nu)`; `+inf` when the atom vanishes but the density does not.
pub fn eval_q(nu: &GridMeasure, m: &Mixture) -> Result<f64> {
    check_feasible(nu)?;
    let disc = Discretization::new(m, nu.n());
    let mut t = vec![0.0; nu.n() + 1];
    Ok(disc.value(nu.gamma(), nu.delta(), &mut t))
}

/// Partial derivatives `(dQ/dgamma_i, dQ/dDelta)` of the discretized `Q`.
pub fn gradient_q(nu: &GridMeasure, m: &Mixture) -> Result<(Vec<f64>, f64)> {
    check_feasible(nu)?;
    if !(nu.delta() > 0.0) {
        return Err(Error::OutOfDomain("gradient requires a positive atom".into()));
    }
    let disc = Discretization::new(m, nu.n());
    let mut t = vec![0.0; nu.n() + 1];
    disc.tails(nu.gamma(), nu.delta(), &mut t);
    let mut g = vec![0.0; nu.n()];
    let gd = disc.gradient(&t, &mut g);
    Ok((g, gd))
}

/// Left endpoint of the first cell where the cumulative density mass
/// exceeds `support_eps` times the total density mass; 1 when the density
/// carries a negligible share of `nu`.
pub fn first_support_point(nu: &GridMeasure, support_eps: f64) -> f64 {
    let mass = nu.gamma_mass();
    if !(mass > support_eps * nu.total_mass()) {
        return 1.0;
    }
    let threshold = support_eps * mass;
    let w = nu.cell_width();
    let mut cum = 0.0;
    for (i, g) in nu.gamma().iter().enumerate() {
        cum += g * w;
        if cum > threshold {
            return nu.node(i);
        }
    }
    1.0
}

/// Default absolute threshold for [`support_gamma`]: a `1e-9` share of the
/// largest density value. Infinite when the density carries less than a
/// `1e-7` share of `nu`, matching the default `s_P` rule.
pub fn support_atol(nu: &GridMeasure) -> f64 {
    if !(nu.gamma_mass() > 1e-7 * nu.total_mass()) {
        return f64::INFINITY;
    }
    let top = nu.gamma().last().copied().unwrap_or(0.0);
    (1e-9 * top).max(1e-12 * nu.total_mass())
}

/// Nodes whose `rho`-mass over a one-node window exceeds `atol`, grouped into
/// closed intervals. A run reaching the last node is extended to 1.
fn support_intervals(nu: &GridMeasure, atol: f64) -> Vec<Interval> {
    let rho = nu.rho_masses();
    let n = rho.len();
    let mut out: Vec<Interval> = Vec::new();
    let mut start: Option<usize> = None;
    for i in 0..n {
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(n - 1);
        let local: f64 = rho[lo..=hi].iter().sum();
        let marked = local > atol;
        match (marked, start) {
            (true, None) => start = Some(i),
            (false, Some(a)) => {
                out.push(Interval { lo: nu.node(a), hi: nu.node(i - 1) });
                start = None;
            }
            _ => {}
        }
    }
    if let Some(a) = start {
        out.push(Interval { lo: nu.node(a), hi: 1.0 });
    }
    out
}

/// `Gamma = supp rho_P U {1}` as disjoint closed intervals (isolated points
/// have `lo == hi`).
pub fn support_gamma(sol: &ParisiSolution, atol: f64) -> Vec<Interval> {
    let mut out = support_intervals(&sol.nu_p, atol);
    match out.last_mut() {
        Some(last) if last.hi >= 1.0 => {}
        _ => out.push(Interval { lo: 1.0, hi: 1.0 }),
    }
    out
}

/// Piecewise-constant refinement onto a grid `factor` times finer.
fn prolong(nu: &GridMeasure, factor: usize) -> GridMeasure {
    let gamma = nu
        .gamma()
        .iter()
        .flat_map(|&g| std::iter::repeat_n(g, factor))
        .collect();
    GridMeasure::from_parts_unchecked(gamma, nu.delta())
}

struct LevelOutcome {
    gamma: Vec<f64>,
    delta: f64,
    value: f64,
    iterations: usize,
    converged: bool,
    grad_norm: f64,
}

const GL_NODES: [f64; 6] = [
    0.033765242898423975,
    0.16939530676686776,
    0.3806904069584015,
    0.6193095930415985,
    0.8306046932331322,
    0.966234757101576,
];
const GL_WEIGHTS: [f64; 6] = [
    0.08566224618958487,
    0.18038078652406947,
    0.23395696728634569,
    0.23395696728634569,
    0.18038078652406947,
    0.08566224618958487,
];

impl Discretization {
    /// Hessian of `Q` in the node tails `T`; tridiagonal since each cell
    /// term `int_0^1 dt / ((1-t) T_i + t T_{i+1})` couples two neighbours.
    fn tail_hessian(&self, t: &[f64]) -> Penta {
        let mut hess = Penta::zeros(self.n + 1);
        for i in 0..self.n {
            let (a, b) = (t[i], t[i + 1]);
            let (mut haa, mut hab, mut hbb) = (0.0, 0.0, 0.0);
            for (x, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
                let l = (1.0 - x) * a + x * b;
                let k = wt / (l * l * l);
                haa += k * (1.0 - x) * (1.0 - x);
                hab += k * x * (1.0 - x);
                hbb += k * x * x;
            }
            // factor 2 from the second derivative, 1/2 from Q
            hess.d0[i] += self.w * haa;
            hess.d1[i] += self.w * hab;
            hess.d0[i + 1] += self.w * hbb;
        }
        hess
    }

}

/// Diagonal of the Hessian in the increment variables, `v_k^T H v_k` where
/// `v_k` is the tail response to a unit jump at `s_k` (or to the atom).
fn increment_hessian_diag(h: &Penta, w: f64) -> Vec<f64> {
    let m = h.n();
    let n = m - 1;
    let u = |i: usize| w * (n - i) as f64;
    // suffix[k] = u^T H u restricted to indices > k
    let mut suffix = vec![0.0; m + 1];
    for i in (0..m).rev() {
        let mut s = h.d0[i] * u(i) * u(i);
        if i + 1 < m {
            s += 2.0 * h.d1[i] * u(i) * u(i + 1);
        }
        suffix[i] = suffix[i + 1] + s;
    }
    let mut out = vec![0.0; m];
    let mut block = 0.0;
    for k in 0..n {
        block += h.d0[k] + if k > 0 { 2.0 * h.d1[k - 1] } else { 0.0 };
        let c = u(k);
        out[k] = c * c * block + 2.0 * h.d1[k] * c * u(k + 1) + suffix[k + 1];
    }
    out[n] = h.d0.iter().sum::<f64>() + 2.0 * h.d1.iter().sum::<f64>();
    out
}

/// Gradient of the quadratic model `g + H p` in the increment variables,
/// given the tail displacement `dt = A p`.
fn model_gradient(h: &Penta, dt: &[f64], gx: &[f64], w: f64) -> Vec<f64> {
    let m = h.n();
    let n = m - 1;
    // v = H dt
    let v: Vec<f64> = (0..m)
        .map(|i| {
            let mut s = h.d0[i] * dt[i];
            if i + 1 < m {
                s += h.d1[i] * dt[i + 1];
            }
            if i >= 1 {
                s += h.d1[i - 1] * dt[i - 1];
            }
            s
        })
        .collect();
    // (A^T v)_k = w [ (n - k) sum_{i<=k} v_i + sum_{i>k} (n - i) v_i ]
    let mut out = vec![0.0; m];
    let mut tail = vec![0.0; m + 1];
    for i in (0..m).rev() {
        tail[i] = tail[i + 1] + (n - i) as f64 * v[i];
    }
    let mut head = 0.0;
    for k in 0..n {
        head += v[k];
        out[k] = gx[k] + w * ((n - k) as f64 * head + tail[k + 1]);
    }
    out[n] = gx[n] + v.iter().sum::<f64>();
    out
}

fn gamma_from_increments(x: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    x[..x.len() - 1]
        .iter()
        .map(|d| {
            acc += d;
            acc
        })
        .collect()
}

/// Newton step on the quadratic model with the held increments moved to
/// zero. Between free jumps the tail direction is linear in the node index,
/// so the model reduces to a banded system in its values at the free nodes.
fn reduced_newton(
    disc: &Discretization,
    hess: &Penta,
    x: &[f64],
    gx: &[f64],
    active: &[bool],
) -> Option<Vec<f64>> {
    let n = disc.n;
    let w = disc.w;
    let bnd: Vec<usize> = (0..n).filter(|&k| !active[k]).chain([n]).collect();
    let nv = bnd.len();

    let mut known = vec![0.0; n + 1];
    let mut held = 0.0;
    let mut cum = vec![0.0; n];
    for i in 0..n {
        if active[i] {
            held -= x[i];
        }
        cum[i] = held;
    }
    for i in (0..n).rev() {
        known[i] = known[i + 1] + w * cum[i];
    }

    // tail i as a combination of the unknown node values
    let mut rows: Vec<[(usize, f64); 2]> = vec![[(0, 1.0), (0, 0.0)]; bnd[0]];
    for j in 0..nv - 1 {
        let (a, b) = (bnd[j], bnd[j + 1]);
        let len = (b - a) as f64;
        for i in a..b {
            let s = (b - i) as f64 / len;
            rows.push([(j, s), (j + 1, 1.0 - s)]);
        }
    }
    rows.push([(nv - 1, 1.0), (nv - 1, 0.0)]);

    let mut sys = Penta::zeros(nv);
    let mut rhs = vec![0.0; nv];
    for i in 0..=n {
        let mut hk = hess.d0[i] * known[i];
        if i < n {
            hk += hess.d1[i] * known[i + 1];
        }
        if i >= 1 {
            hk += hess.d1[i - 1] * known[i - 1];
        }
        for &(p, ep) in &rows[i] {
            if ep == 0.0 {
                continue;
            }
            rhs[p] -= ep * hk;
            for &(q, eq) in &rows[i] {
                if eq != 0.0 && p <= q {
                    sys.add_sym(p, q, hess.d0[i] * ep * eq);
                }
            }
            if i < n {
                for &(q, eq) in &rows[i + 1] {
                    if eq != 0.0 {
                        let v = hess.d1[i] * ep * eq;
                        sys.add_sym(p, q, if p == q { 2.0 * v } else { v });
                    }
                }
            }
        }
    }
    // first-order terms of the free jumps through the block values
    for j in 0..nv - 1 {
        let next = if j + 1 < nv - 1 { gx[bnd[j + 1]] } else { 0.0 };
        let c = (gx[bnd[j]] - next) / (w * (bnd[j + 1] - bnd[j]) as f64);
        rhs[j] -= c;
        rhs[j + 1] += c;
    }
    if active[n] {
        sys.fix(nv - 1, -x[n], &mut rhs);
    } else {
        rhs[nv - 1] -= gx[n];
    }
    let tau = sys.solve(&rhs)?;

    let block = |j: usize| (tau[j] - tau[j + 1]) / (w * (bnd[j + 1] - bnd[j]) as f64);
    let mut d: Vec<f64> = (0..=n).map(|k| if active[k] { -x[k] } else { 0.0 }).collect();
    for j in 0..nv - 1 {
        d[bnd[j]] = block(j) - if j > 0 { block(j - 1) } else { 0.0 };
    }
    d[n] = tau[nv - 1];
    Some(d)
}

fn tails_of_increments(x: &[f64], w: f64) -> Vec<f64> {
    let n = x.len() - 1;
    let gamma = gamma_from_increments(x);
    let mut t = vec![0.0; n + 1];
    t[n] = x[n];
    for i in (0..n).rev() {
        t[i] = t[i + 1] + gamma[i] * w;
    }
    t
}

fn increments_from_gamma(gamma: &[f64], delta: f64) -> Vec<f64> {
    let mut prev = 0.0;
    let mut x: Vec<f64> = gamma
        .iter()
        .map(|&g| {
            let d = (g - prev).max(0.0);
            prev = g;
            d
        })
        .collect();
    x.push(delta.max(0.0));
    x
}

/// Projected Newton iteration on one grid. The variables are the jumps of
/// `gamma` and the atom, all constrained to be nonnegative; each step solves
/// the bound-constrained quadratic model by a primal active-set pass.
fn solve_level(
    disc: &Discretization,
    gamma0: &[f64],
    delta0: f64,
    opts: &SolverOptions,
    budget: usize,
    history: &mut Vec<f64>,
) -> LevelOutcome {
    let n = disc.n;
    let mut t = vec![0.0; n + 1];
    let mut x = increments_from_gamma(gamma0, delta0);
    let mut gamma = gamma_from_increments(&x);
    let mut fx = disc.value(&gamma, x[n], &mut t);
    let mut g_gamma = vec![0.0; n];
    let mut gx = vec![0.0; n + 1];
    let mut trial = vec![0.0; n + 1];
    let mut grad_norm = f64::INFINITY;
    let mut it = 0;
    let mut small_steps = 0;
    let outcome = |x: &[f64], value, iterations, converged, grad_norm| LevelOutcome {
        gamma: gamma_from_increments(x),
        delta: x[n],
        value,
        iterations,
        converged,
        grad_norm,
    };
    while it < budget {
        it += 1;
        disc.tails(&gamma, x[n], &mut t);
        gx[n] = disc.gradient(&t, &mut g_gamma);
        let mut acc = 0.0;
        for k in (0..n).rev() {
            acc += g_gamma[k];
            gx[k] = acc;
        }
        let hess = disc.tail_hessian(&t);
        let hdiag = increment_hessian_diag(&hess, disc.w);
        // bound k is held when a diagonally scaled gradient step would cross it
        let mut active: Vec<bool> =
            (0..=n).map(|k| gx[k] > 0.0 && x[k] <= gx[k] / hdiag[k]).collect();
        grad_norm = (0..=n)
            .map(|k| (x[k] - (x[k] - gx[k]).max(0.0)).abs())
            .fold(0.0, f64::max);

        let gscale = gx.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let newton = |active: &[bool]| reduced_newton(disc, &hess, &x, &gx, active);
        // primal active-set pass on the quadratic model: the iterate stays
        // feasible, blocking bounds are added by a ratio test and held bounds
        // with negative multipliers are released
        let model = |d: &[f64], dt: &[f64]| -> f64 {
            let mg = model_gradient(&hess, dt, &gx, disc.w);
            0.5 * (0..=n).map(|k| (gx[k] + mg[k]) * d[k]).sum::<f64>()
        };
        let snap: Vec<f64> = (0..=n).map(|k| if active[k] { -x[k] } else { 0.0 }).collect();
        let mut d = if model(&snap, &tails_of_increments(&snap, disc.w)) <= 0.0 {
            snap
        } else {
            active.iter_mut().zip(&x).for_each(|(a, xk)| *a &= *xk == 0.0);
            vec![0.0; n + 1]
        };
        let mut solved = false;
        // bounds reached by the ratio test stay held, which rules out cycling
        let mut pinned = vec![false; n + 1];
        for _ in 0..n + 100 {
            let Some(p) = newton(&active) else {
                break;
            };
            solved = true;
            let mut tau = 1.0;
            let mut block = None;
            for k in 0..=n {
                if !active[k] && p[k] < d[k] && x[k] + p[k] < 0.0 {
                    let r = (x[k] + d[k]) / (d[k] - p[k]);
                    if r < tau {
                        tau = r;
                        block = Some(k);
                    }
                }
            }
            for k in 0..=n {
                d[k] += tau * (p[k] - d[k]);
            }
            if let Some(k) = block {
                active[k] = true;
                pinned[k] = true;
                d[k] = -x[k];
                continue;
            }
            let mg = model_gradient(&hess, &tails_of_increments(&d, disc.w), &gx, disc.w);
            let worst = (0..=n)
                .filter(|&k| active[k] && !pinned[k] && mg[k] < -1e-10 * gscale)
                .min_by(|&a, &b| mg[a].total_cmp(&mg[b]));
            match worst {
                Some(k) => active[k] = false,
                None => break,
            }
        }
        if !solved {
            return outcome(&x, fx, it, false, grad_norm);
        }
        // a scaled projected gradient step when the pass made no progress
        let descent: f64 = (0..=n).map(|k| gx[k] * d[k]).sum();
        let dir = if descent < 0.0 {
            d
        } else {
            active.fill(false);
            (0..=n).map(|k| (x[k] - gx[k] / hdiag[k]).max(0.0) - x[k]).collect()
        };
        let mut alpha = 1.0;
        let mut accepted = None;
        let mut full_pred = None;
        for _ in 0..60 {
            let mut pred = 0.0;
            for k in 0..=n {
                trial[k] = (x[k] + alpha * dir[k]).max(0.0);
                pred += gx[k] * (trial[k] - x[k]);
            }
            full_pred.get_or_insert(pred);
            let tg = gamma_from_increments(&trial);
            let ft = disc.value(&tg, trial[n], &mut t);
            let slack = 8.0 * f64::EPSILON * fx.abs();
            if ft.is_finite() && ft <= fx + 1e-4 * pred + slack {
                accepted = Some((tg, ft, pred));
                break;
            }
            alpha *= 0.5;
        }
        let Some((tg, ft, pred)) = accepted else {
            // no decrease representable in floating point
            return outcome(&x, fx, it, grad_norm.is_finite(), grad_norm);
        };
        let decrease = fx - ft;
        x.copy_from_slice(&trial);
        gamma = tg;
        fx = ft.min(fx);
        history.push(fx);
        let scale = fx.abs().max(1.0);
        let full_pred = full_pred.unwrap_or(pred);
        // one extra Newton step after the test first passes is nearly free
        // and removes the remaining first-order error
        if decrease.max(0.0) / scale < opts.tol && -full_pred / scale < opts.tol {
            if small_steps > 0 {
                return outcome(&x, fx, it, true, grad_norm);
            }
            small_steps += 1;
        } else {
            small_steps = 0;
        }
    }
    outcome(&x, fx, it, false, grad_norm)
}

/// Minimizes `Q` over the cone discretized on `n` cells.
pub fn minimize_q(m: &Mixture, n: usize, opts: &SolverOptions) -> Result<ParisiSolution> {
    let errs = m.validate();
    if !errs.is_empty() {
        return Err(Error::InvalidMixture(errs));
    }
    if n == 0 || !(opts.tol > 0.0) {
        return Err(Error::InvalidArgument(
            "grid size and tolerance must be positive".into(),
        ));
    }
    let mut levels = vec![n];
    while levels.last().unwrap() % 2 == 0 && levels.last().unwrap() / 2 >= opts.coarse_grid {
        let next = levels.last().unwrap() / 2;
        levels.push(next);
    }
    levels.reverse();

    let mut current = match &opts.init {
        Some(init) => {
            check_feasible(init)?;
            if !n.is_multiple_of(init.n()) {
                return Err(Error::InvalidArgument(format!(
                    "initial grid {} does not divide {n}",
                    init.n()
                )));
            }
            levels.retain(|&k| k >= init.n() && k % init.n() == 0);
            if levels.first() != Some(&init.n()) {
                levels.insert(0, init.n());
            }
            project_to_cone(init.gamma(), init.delta())
        }
        None => {
            let h2 = m.h() * m.h();
            GridMeasure::atom(levels[0], (m.xi1(1.0) + h2).powf(-0.5))
        }
    };

    let mut history = Vec::new();
    let mut used = 0;
    let mut last = None;
    for &k in &levels {
        if current.n() != k {
            current = prolong(&current, k / current.n());
        }
        let disc = Discretization::new(m, k);
        let out = solve_level(
            &disc,
            current.gamma(),
            current.delta(),
            opts,
            opts.max_iters - used,
            &mut history,
        );
        used += out.iterations;
        current = GridMeasure::from_parts_unchecked(out.gamma.clone(), out.delta);
        if !out.converged {
            return Err(Error::NoConvergence {
                iterations: used,
                objective: out.value,
                grad_norm: out.grad_norm,
                last: Box::new(current),
            });
        }
        last = Some(out);
    }
    let last = last.expect("at least one level");
    let mut sol = ParisiSolution::from_measure(current, m, opts.support_eps)?;
    sol.me = last.value;
    sol.iterations = used;
    sol.history = history;
    if opts.fbar_tol.is_some() {
        let r = parisi::optimality_residuals(&sol.dual_point(), m, opts.fbar_tol)?;
        sol.residuals.max_abs_fbar_on_support = r.max_abs_fbar_on_support;
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn rs_values() {
        let m = Mixture::pure(2, 0.0).unwrap();
        let q = eval_q(&GridMeasure::atom(16, 2f64.powf(-0.5)), &m).unwrap();
        assert_abs_diff_eq!(q, 2f64.sqrt(), epsilon = 1e-14);
        let m = Mixture::pure(2, 1.0).unwrap();
        let q = eval_q(&GridMeasure::atom(16, 3f64.powf(-0.5)), &m).unwrap();
        assert_abs_diff_eq!(q, 3f64.sqrt(), epsilon = 1e-14);
    }

    #[test]
    fn degenerate_measures() {
        let m = Mixture::pure(2, 0.0).unwrap();
        assert!(matches!(
            eval_q(&GridMeasure::atom(4, 0.0), &m),
            Err(Error::InfeasibleMeasure(_))
        ));
        assert_eq!(eval_q(&GridMeasure::flat(4, 1.0, 0.0), &m).unwrap(), f64::INFINITY);
    }

    #[test]
    fn tail_integral_matches_quadrature() {
        let m = Mixture::new([(2, 0.4), (4, 0.6)], 0.7).unwrap();
        let nu = GridMeasure::new((0..8).map(|i| 0.3 * i as f64).collect(), 0.2).unwrap();
        let q = eval_q(&nu, &m).unwrap();
        let mut tail = 0.0;
        for i in 0..8 {
            let (a, b) = (i as f64 / 8.0, (i + 1) as f64 / 8.0);
            tail += crate::numeric::adaptive_simpson(&|s| 1.0 / nu.tail_mass(s), a, b, 1e-13);
        }
        assert_abs_diff_eq!(q, 0.5 * (nu.linear_term(&m) + tail), epsilon = 1e-10);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = Mixture::new([(2, 0.5), (4, 0.3), (6, 0.2)], 0.4).unwrap();
        let gamma: Vec<f64> = (0..12).map(|i| 0.05 * (i as f64).powf(1.3)).collect();
        let nu = GridMeasure::new(gamma.clone(), 0.35).unwrap();
        let (g, gd) = gradient_q(&nu, &m).unwrap();
        let eps = 1e-6;
        for k in [0usize, 5, 11] {
            let mut up = gamma.clone();
            let mut dn = gamma.clone();
            up[k] += eps;
            dn[k] -= eps;
            let fu = eval_q(&GridMeasure::from_parts_unchecked(up, 0.35), &m).unwrap();
            let fd = eval_q(&GridMeasure::from_parts_unchecked(dn, 0.35), &m).unwrap();
            assert_abs_diff_eq!(g[k], (fu - fd) / (2.0 * eps), epsilon = 1e-8);
        }
        let fu = eval_q(&GridMeasure::from_parts_unchecked(gamma.clone(), 0.35 + eps), &m).unwrap();
        let fd = eval_q(&GridMeasure::from_parts_unchecked(gamma, 0.35 - eps), &m).unwrap();
        assert_abs_diff_eq!(gd, (fu - fd) / (2.0 * eps), epsilon = 1e-8);
    }

    #[test]
    fn solver_rs() {
        for (h, me) in [(0.0, 2f64.sqrt()), (1.0, 3f64.sqrt())] {
            let m = Mixture::pure(2, h).unwrap();
            let sol = minimize_q(&m, 256, &SolverOptions::default()).unwrap();
            assert_abs_diff_eq!(sol.me, me, epsilon = 1e-9);
            assert_eq!(sol.s_p, 1.0);
            assert_eq!(support_gamma(&sol, 1e-8), vec![Interval { lo: 1.0, hi: 1.0 }]);
        }
    }

    #[test]
    fn solver_history_is_monotone() {
        let m = Mixture::new([(2, 0.6), (4, 0.4)], 0.0).unwrap();
        let sol = minimize_q(&m, 128, &SolverOptions::default()).unwrap();
        assert!(sol.history.windows(2).all(|p| p[1] <= p[0]));
    }

    #[test]
    fn prolongation_is_exact() {
        let m = Mixture::new([(2, 0.6), (4, 0.4)], 0.3).unwrap();
        let nu = GridMeasure::new(vec![0.0, 0.1, 0.4, 0.5], 0.6).unwrap();
        let fine = prolong(&nu, 8);
        assert_abs_diff_eq!(eval_q(&nu, &m).unwrap(), eval_q(&fine, &m).unwrap(), epsilon = 1e-14);
    }

    #[test]
    fn first_support_point_rules() {
        assert_eq!(first_support_point(&GridMeasure::atom(8, 0.5), 1e-7), 1.0);
        assert_eq!(first_support_point(&GridMeasure::flat(8, 0.3, 0.5), 1e-7), 0.0);
        let nu = GridMeasure::new(vec![0.0, 0.0, 0.0, 1e-3, 1.0, 1.0, 1.0, 1.0], 0.5).unwrap();
        assert_eq!(first_support_point(&nu, 1e-7), 3.0 / 8.0);
        assert_eq!(first_support_point(&nu, 1e-2), 0.5);
    }

    fn measure_strategy() -> impl Strategy<Value = GridMeasure> {
        (prop::collection::vec(0.0..1.0f64, 16), 0.05..1.0f64).prop_map(|(raw, d)| {
            let mut acc = 0.0;
            let gamma = raw.iter().map(|v| {
                acc += v;
                acc
            });
            GridMeasure::new(gamma.collect(), d).unwrap()
        })
    }

    proptest! {
        #[test]
        fn q_is_midpoint_convex(a in measure_strategy(), b in measure_strategy()) {
            let m = Mixture::new([(2, 0.7), (4, 0.2), (8, 0.1)], 0.5).unwrap();
            let mid = GridMeasure::new(
                a.gamma().iter().zip(b.gamma()).map(|(x, y)| 0.5 * (x + y)).collect(),
                0.5 * (a.delta() + b.delta()),
            ).unwrap();
            let qa = eval_q(&a, &m).unwrap();
            let qb = eval_q(&b, &m).unwrap();
            let qm = eval_q(&mid, &m).unwrap();
            prop_assert!(qm <= 0.5 * (qa + qb) + 1e-12);
        }
    }
}
