//! The two-replica functional `P_u(B, lambda, nu)`, the overlap gap profile
//! `2 ME - min P_u`, the function `c(u)` and the chaos root `u_t`.

use serde::{Deserialize, Serialize};

use crate::cs::{Interval, ParisiSolution};
use crate::error::{Error, Result};
use crate::measure::GridMeasure;
use crate::mixture::Mixture;
use crate::numeric::{bisect, golden_min, log1p_ratio};
use crate::parisi::eval_p;
use crate::rsb::{one_rsb_parameters, zeta};

pub const GAP_TOL: f64 = 1e-4;
pub const DEFAULT_U_POINTS: usize = 401;
/// Largest deformation factor; keeps `m gamma(a-) <= 2 gamma(a)`.
pub const M_MAX: f64 = 2.0;

const SEARCH_XTOL: f64 = 1e-7;
const DOMAIN_MARGIN: f64 = 1e-9;

/// A measure with piecewise constant density on arbitrary breakpoints:
/// density `gamma[k]` on `[nodes[k], nodes[k + 1])` and an atom `delta` at 1.
/// The density need not be monotone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseMeasure {
    pub nodes: Vec<f64>,
    pub gamma: Vec<f64>,
    pub delta: f64,
}

impl PiecewiseMeasure {
    pub fn new(nodes: Vec<f64>, gamma: Vec<f64>, delta: f64) -> Result<Self> {
        let ok = nodes.len() == gamma.len() + 1
            && nodes.first() == Some(&0.0)
            && nodes.last() == Some(&1.0)
            && nodes.windows(2).all(|w| w[0] < w[1])
            && gamma.iter().all(|g| g.is_finite() && *g >= 0.0)
            && delta.is_finite()
            && delta >= 0.0;
        if !ok {
            return Err(Error::InvalidArgument(
                "piecewise measure needs increasing nodes from 0 to 1 and nonnegative masses".into(),
            ));
        }
        Ok(Self { nodes, gamma, delta })
    }

    /// Merges equal neighbouring cells of `nu` and inserts `a` as a node.
    pub fn from_grid(nu: &GridMeasure, a: f64) -> Self {
        let n = nu.n();
        let g = nu.gamma();
        let mut nodes = vec![0.0];
        let mut gamma = Vec::new();
        let mut k = 0;
        while k < n {
            let mut j = k + 1;
            while j < n && g[j] == g[k] {
                j += 1;
            }
            nodes.push(nu.node(j));
            gamma.push(g[k]);
            k = j;
        }
        let mut out = Self {
            nodes,
            gamma,
            delta: nu.delta(),
        };
        out.insert_node(a);
        out
    }

    fn insert_node(&mut self, a: f64) {
        if !(a > 0.0 && a < 1.0) {
            return;
        }
        let k = self.nodes.partition_point(|&s| s <= a);
        if self.nodes[k - 1] == a {
            return;
        }
        self.nodes.insert(k, a);
        let g = self.gamma[k - 1];
        self.gamma.insert(k - 1, g);
    }

    /// Index of the node equal to `a`, which must be present.
    fn node_index(&self, a: f64) -> usize {
        if a <= 0.0 {
            return 0;
        }
        if a >= 1.0 {
            return self.nodes.len() - 1;
        }
        self.nodes.partition_point(|&s| s < a)
    }

    pub fn total_mass(&self) -> f64 {
        self.nodes
            .windows(2)
            .zip(&self.gamma)
            .map(|(w, g)| g * (w[1] - w[0]))
            .sum::<f64>()
            + self.delta
    }
}

/// The one-step measure with density scaled by `m` below `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformedMeasure {
    #[serde(rename = "A")]
    pub a_density: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub m: f64,
    pub a: f64,
}

impl DeformedMeasure {
    pub fn to_piecewise(&self) -> PiecewiseMeasure {
        PiecewiseMeasure {
            nodes: vec![0.0, self.a, 1.0],
            gamma: vec![self.m * self.a_density, self.a_density],
            delta: self.delta,
        }
    }
}

/// Precomputed pieces of `P_u` for one `u`; evaluates the functional for any
/// `(B, lambda)` and deformation factor `m` applied to the density below `|u|`.
struct Coupled {
    u: f64,
    ia: usize,
    h2: f64,
    /// `xi'` increments per piece.
    dxi: Vec<f64>,
    /// `hat nu` at the nodes.
    nu_hat: Vec<f64>,
    moment_below: f64,
    moment_above: f64,
}

impl Coupled {
    fn new(m: &Mixture, nu: &PiecewiseMeasure, u: f64) -> Self {
        let a = u.abs();
        let mut nu = nu.clone();
        nu.insert_node(a);
        let ia = nu.node_index(a);
        let xi1: Vec<f64> = nu.nodes.iter().map(|&s| m.xi1(s)).collect();
        let prim: Vec<f64> = nu.nodes.iter().map(|&s| m.s_xi1_minus_xi(s)).collect();
        let k = nu.gamma.len();
        let mut nu_hat = vec![0.0; k + 1];
        nu_hat[k] = m.xi2(1.0) * nu.delta;
        for i in (0..k).rev() {
            nu_hat[i] = nu_hat[i + 1] + nu.gamma[i] * (xi1[i + 1] - xi1[i]);
        }
        let mom = |r: std::ops::Range<usize>| -> f64 {
            r.map(|i| nu.gamma[i] * (prim[i + 1] - prim[i])).sum()
        };
        Self {
            u,
            ia,
            h2: m.h() * m.h(),
            dxi: xi1.windows(2).map(|w| w[1] - w[0]).collect(),
            moment_below: mom(0..ia),
            moment_above: mom(ia..k) + m.xi2(1.0) * nu.delta,
            nu_hat,
        }
    }

    fn nu_hat_m(&self, i: usize, m: f64) -> f64 {
        if i >= self.ia {
            self.nu_hat[i]
        } else {
            let base = self.nu_hat[self.ia];
            base + m * (self.nu_hat[i] - base)
        }
    }

    /// `hat nu_m(0)`.
    fn nu_hat0(&self, m: f64) -> f64 {
        self.nu_hat_m(0, m)
    }

    fn integral(&self, c: f64, range: std::ops::Range<usize>, m: f64) -> f64 {
        range
            .map(|i| {
                let lo = self.nu_hat_m(i, m);
                let hi = self.nu_hat_m(i + 1, m);
                let d = c - lo;
                self.dxi[i] * log1p_ratio((lo - hi) / d) / d
            })
            .sum()
    }

    fn value(&self, b: f64, lambda: f64, m: f64) -> Result<f64> {
        let nh0 = self.nu_hat0(m);
        if !(lambda.abs() + nh0 < b) {
            return Err(Error::OutOfDomain(format!(
                "|lambda| + hat nu(0) = {} must be below B = {b}",
                lambda.abs() + nh0
            )));
        }
        let iota = if self.u >= 0.0 { 1.0 } else { -1.0 };
        let k = self.dxi.len();
        let below = self.integral(b - iota * lambda, 0..self.ia, m);
        let above = 0.5 * self.integral(b - lambda, self.ia..k, m)
            + 0.5 * self.integral(b + lambda, self.ia..k, m);
        let field = if self.u >= 0.0 {
            self.h2 / (b - lambda - nh0)
        } else {
            self.h2 / (b - lambda - self.nu_hat_m(self.ia, m))
        };
        Ok(below + above - lambda * self.u + b - m * self.moment_below - self.moment_above + field)
    }

    /// Largest admissible `m` for `lambda = 0`.
    fn m_domain(&self, b: f64) -> f64 {
        let base = self.nu_hat[self.ia];
        let span = self.nu_hat[0] - base;
        if span > 0.0 {
            (b - base) / span
        } else {
            f64::INFINITY
        }
    }
}

/// `P_u(B, lambda, nu)` for a grid measure.
pub fn eval_p_u(m: &Mixture, b: f64, lambda: f64, nu: &GridMeasure, u: f64) -> Result<f64> {
    check_u(u)?;
    Coupled::new(m, &PiecewiseMeasure::from_grid(nu, u.abs()), u).value(b, lambda, 1.0)
}

/// `P_u(B, lambda, nu)` for a piecewise measure.
pub fn eval_p_u_piecewise(
    m: &Mixture,
    b: f64,
    lambda: f64,
    nu: &PiecewiseMeasure,
    u: f64,
) -> Result<f64> {
    check_u(u)?;
    Coupled::new(m, nu, u).value(b, lambda, 1.0)
}

fn check_u(u: f64) -> Result<()> {
    if !(-1.0..=1.0).contains(&u) {
        return Err(Error::InvalidArgument(format!("u = {u} outside [-1, 1]")));
    }
    Ok(())
}

/// `c_t(u) = nu([0,1])^2 (t xi'(u) + h^2) - u`.
pub fn c_of_u(m: &Mixture, sol: &ParisiSolution, u: f64, t: f64) -> f64 {
    let mass = sol.nu_p.total_mass();
    mass * mass * (t * m.xi1(u) + m.h() * m.h()) - u
}

/// The zero `u_t` of `c_t`, exactly 0 at zero field.
pub fn chaos_root(m: &Mixture, sol: &ParisiSolution, t: f64) -> Result<f64> {
    if !(t > 0.0 && t < 1.0) {
        return Err(Error::InvalidArgument(format!("t = {t} outside (0, 1)")));
    }
    if m.h() == 0.0 {
        return Ok(0.0);
    }
    let c = |u: f64| c_of_u(m, sol, u, t);
    let mut hi = sol.s_p.clamp(0.0, 1.0);
    while c(hi) > 0.0 && hi < 1.0 {
        hi = (hi + 0.05).min(1.0);
    }
    if c(hi) > 0.0 {
        return Ok(hi);
    }
    Ok(bisect(c, 0.0, hi, 200))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeOptions {
    /// Half-width `K` of the `lambda` search box; defaults to
    /// `(B_P - hat nu_P(0)) / 2`.
    pub lambda_box: Option<f64>,
    pub gap_tol: f64,
    /// Also minimize over the density scale `m` below `|u|`.
    pub deform: bool,
}

impl Default for LandscapeOptions {
    fn default() -> Self {
        Self {
            lambda_box: None,
            gap_tol: GAP_TOL,
            deform: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeReport {
    pub u_grid: Vec<f64>,
    pub bound: Vec<f64>,
    pub gap: Vec<f64>,
    pub lambda_argmin: Vec<f64>,
    pub m_argmin: Vec<f64>,
    pub gamma_set: Vec<Interval>,
    pub excluded: Vec<Interval>,
    pub me: f64,
    pub lambda_box: f64,
    pub gap_tol: f64,
    /// Grid points whose `lambda` minimizer sits on the box edge.
    pub edge_hits: usize,
}

impl LandscapeReport {
    pub fn excluded_flags(&self) -> Vec<bool> {
        self.gap.iter().map(|g| *g > self.gap_tol).collect()
    }
}

/// `n` equispaced overlaps on `[-1, 1]`, exactly symmetric about 0.
pub fn default_u_grid(n: usize) -> Vec<f64> {
    let n = n.max(2);
    let mut u: Vec<f64> = (0..n)
        .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
        .collect();
    for i in 0..n / 2 {
        u[n - 1 - i] = -u[i];
    }
    if n % 2 == 1 {
        u[n / 2] = 0.0;
    }
    u
}

struct PointBound {
    value: f64,
    lambda: f64,
    m: f64,
    edge: bool,
}

/// Returns `(argmin, min, box)` over `|lambda| <= box`, the box being `K`
/// shrunk to stay inside the domain.
fn min_over_lambda(c: &Coupled, b: f64, k: f64, mm: f64) -> (f64, f64, f64) {
    let kk = k.min((b - c.nu_hat0(mm)) * (1.0 - DOMAIN_MARGIN)).max(0.0);
    if kk == 0.0 {
        return (0.0, c.value(b, 0.0, mm).unwrap_or(f64::INFINITY), kk);
    }
    let (l, v) = golden_min(
        |l| c.value(b, l, mm).unwrap_or(f64::INFINITY),
        -kk,
        kk,
        SEARCH_XTOL,
    );
    (l, v, kk)
}

fn point_bound(c: &Coupled, b: f64, k: f64, deform: bool) -> PointBound {
    let mut best = min_over_lambda(c, b, k, 1.0);
    let mut m_best = 1.0;
    if deform && c.ia > 0 {
        let m_hi = M_MAX.min(c.m_domain(b) * (1.0 - DOMAIN_MARGIN));
        let (mm, _) = golden_min(|mm| min_over_lambda(c, b, k, mm).1, 0.0, m_hi, SEARCH_XTOL);
        let cand = min_over_lambda(c, b, k, mm);
        if cand.1 < best.1 {
            best = cand;
            m_best = mm;
        }
    }
    let (lambda, value, kk) = best;
    PointBound {
        value,
        lambda,
        m: m_best,
        edge: kk > 0.0 && kk - lambda.abs() <= 2.0 * SEARCH_XTOL,
    }
}

/// Upper bounds `min P_u(B_P, lambda, nu_m)` and the gap `2 ME - bound`
/// across `u_grid`.
pub fn landscape_profile(
    m: &Mixture,
    sol: &ParisiSolution,
    u_grid: &[f64],
    opts: &LandscapeOptions,
) -> Result<LandscapeReport> {
    for &u in u_grid {
        check_u(u)?;
    }
    let dp = sol.dual_point();
    let me = eval_p(&dp, m)?;
    let b = dp.b;
    let k = opts
        .lambda_box
        .unwrap_or_else(|| 0.5 * (b - dp.nu.nu_hat(m, 0.0)));
    if !(k >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda box {k} must be nonnegative")));
    }
    let base = PiecewiseMeasure::from_grid(&dp.nu, 0.0);
    let symmetric = m.h() == 0.0;

    let mut cache: Vec<(f64, f64, f64, f64, bool)> = Vec::new();
    let mut bound = Vec::with_capacity(u_grid.len());
    let mut lambda_argmin = Vec::with_capacity(u_grid.len());
    let mut m_argmin = Vec::with_capacity(u_grid.len());
    let mut edge_hits = 0;
    for &u in u_grid {
        // at zero field P_{-u}(B, -lambda) = P_u(B, lambda)
        let (key, sign) = if symmetric && u < 0.0 { (-u, -1.0) } else { (u, 1.0) };
        let hit = cache.iter().find(|e| e.0 == key).copied();
        let (_, value, lambda, mm, edge) = match hit {
            Some(e) => e,
            None => {
                let c = Coupled::new(m, &base, key);
                let p = point_bound(&c, b, k, opts.deform);
                let e = (key, p.value, p.lambda, p.m, p.edge);
                cache.push(e);
                e
            }
        };
        bound.push(value);
        lambda_argmin.push(sign * lambda);
        m_argmin.push(mm);
        if edge {
            edge_hits += 1;
        }
    }
    let gap: Vec<f64> = bound.iter().map(|v| (2.0 * me - v).max(0.0)).collect();
    let excluded = runs(u_grid, &gap, opts.gap_tol);
    Ok(LandscapeReport {
        u_grid: u_grid.to_vec(),
        bound,
        gap,
        lambda_argmin,
        m_argmin,
        gamma_set: sol.gamma_support.clone(),
        excluded,
        me,
        lambda_box: k,
        gap_tol: opts.gap_tol,
        edge_hits,
    })
}

fn runs(u: &[f64], gap: &[f64], tol: f64) -> Vec<Interval> {
    let mut out: Vec<Interval> = Vec::new();
    let mut open = false;
    for (&x, &g) in u.iter().zip(gap) {
        if g > tol {
            if open {
                out.last_mut().unwrap().hi = x;
            } else {
                out.push(Interval { lo: x, hi: x });
                open = true;
            }
        } else {
            open = false;
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeformationCheck {
    pub lhs_fd: f64,
    pub rhs: f64,
    #[serde(rename = "match")]
    pub matches: bool,
}

pub const DEFAULT_DM: f64 = 1e-5;

/// Central difference of `m -> P_a(B, 0, nu_m)` at `m = 1` against `A zeta(a)`.
pub fn one_rsb_deformation_check(m: &Mixture, z: f64, a: f64, dm: f64) -> Result<DeformationCheck> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidArgument(format!("a = {a} outside (0, 1)")));
    }
    let (big_a, delta) = one_rsb_parameters(m, z);
    let b = m.xi2(1.0) * delta + 1.0 / delta;
    let at = |mm: f64| -> Result<f64> {
        let nu = DeformedMeasure {
            a_density: big_a,
            delta,
            m: mm,
            a,
        };
        eval_p_u_piecewise(m, b, 0.0, &nu.to_piecewise(), a)
    };
    let lhs_fd = (at(1.0 + dm)? - at(1.0 - dm)?) / (2.0 * dm);
    let rhs = big_a * zeta(m, z, a)?;
    Ok(DeformationCheck {
        lhs_fd,
        rhs,
        matches: (lhs_fd - rhs).abs() < 1e-6 * (1.0 + rhs.abs()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rsb::{classify, frsb_measure, frsb_s_p, one_rsb_energy, solve_z, ClassifyOptions};

    fn p4() -> Mixture {
        Mixture::pure(4, 0.0).unwrap()
    }

    fn frsb(h: f64) -> Mixture {
        Mixture::new([(2, 0.95), (4, 0.05)], h).unwrap()
    }

    fn closed_solution(m: &Mixture, n: usize) -> ParisiSolution {
        classify(m, &ClassifyOptions::default())
            .unwrap()
            .solution(m, n)
            .unwrap()
            .unwrap()
    }

    #[test]
    fn one_rsb_point_gives_twice_me_for_every_u() {
        let m = p4();
        let z = solve_z(&m, 1e-12);
        let (a, delta) = one_rsb_parameters(&m, z);
        let b = m.xi2(1.0) * delta + 1.0 / delta;
        let nu = GridMeasure::flat(64, a, delta);
        let me = one_rsb_energy(&m, z);
        for i in 0..21 {
            let u = -1.0 + 0.1 * i as f64;
            let v = eval_p_u(&m, b, 0.0, &nu, u).unwrap();
            assert!((v - 2.0 * me).abs() < 1e-8, "u={u}");
        }
    }

    #[test]
    fn zero_field_symmetry() {
        let m = frsb(0.0);
        let sol = closed_solution(&m, 128);
        let dp = sol.dual_point();
        for (u, l) in [(0.3, 0.05), (0.7, -0.1), (0.0, 0.08)] {
            let a = eval_p_u(&m, dp.b, l, &dp.nu, u).unwrap();
            let b = eval_p_u(&m, dp.b, -l, &dp.nu, -u).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn lambda_derivative_is_c() {
        for m in [frsb(0.1), Mixture::pure(2, 1.0).unwrap()] {
            let sol = closed_solution(&m, 4096);
            let dp = sol.dual_point();
            let eps = 1e-5;
            for k in 0..=10 {
                let u = sol.s_p * (-1.0 + 0.2 * k as f64);
                let fd = (eval_p_u(&m, dp.b, eps, &dp.nu, u).unwrap()
                    - eval_p_u(&m, dp.b, -eps, &dp.nu, u).unwrap())
                    / (2.0 * eps);
                assert!((fd - c_of_u(&m, &sol, u, 1.0)).abs() < 1e-6, "u={u}");
            }
        }
    }

    #[test]
    fn deformation_derivative_is_a_zeta() {
        let m = p4();
        let z = solve_z(&m, 1e-12);
        let c = one_rsb_deformation_check(&m, z, 0.5, DEFAULT_DM).unwrap();
        assert!(c.matches && c.rhs < 0.0);
        let c = one_rsb_deformation_check(&m, z, 1e-3, DEFAULT_DM).unwrap();
        assert!(c.matches && c.rhs.abs() < 1e-10);
        assert!(one_rsb_deformation_check(&m, z, 1.0, DEFAULT_DM).is_err());
    }

    #[test]
    fn c_examples() {
        let m = Mixture::pure(2, 1.0).unwrap();
        let sol = closed_solution(&m, 16);
        assert!(c_of_u(&m, &sol, 1.0, 1.0).abs() < 1e-15);
        let m = p4();
        let sol = closed_solution(&m, 16);
        assert_eq!(c_of_u(&m, &sol, 0.0, 1.0), 0.0);
        assert_eq!(chaos_root(&m, &sol, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn c_vanishes_at_s_p_with_field() {
        let m = frsb(0.1);
        let s_p = frsb_s_p(&m);
        let sol = ParisiSolution::with_s_p(frsb_measure(&m, s_p, 256), &m, s_p).unwrap();
        assert!(c_of_u(&m, &sol, s_p, 1.0).abs() < 1e-12);
        let d = 1e-6;
        let slope = (c_of_u(&m, &sol, s_p + d, 1.0) - c_of_u(&m, &sol, s_p - d, 1.0)) / (2.0 * d);
        assert!(slope <= 1e-6);
    }

    #[test]
    fn chaos_root_approaches_s_p() {
        let m = frsb(0.1);
        let sol = closed_solution(&m, 256);
        let mut prev = 0.0;
        for t in [0.5, 0.9, 0.99, 0.999, 0.999999] {
            let r = chaos_root(&m, &sol, t).unwrap();
            assert!(c_of_u(&m, &sol, r, t).abs() < 1e-10);
            assert!(r > prev && r < sol.s_p);
            prev = r;
        }
        assert!(sol.s_p - prev < 1e-2);
    }

    #[test]
    fn bound_never_exceeds_lambda_zero_value() {
        let m = frsb(0.1);
        let sol = closed_solution(&m, 128);
        let dp = sol.dual_point();
        let us = default_u_grid(21);
        let r = landscape_profile(&m, &sol, &us, &LandscapeOptions::default()).unwrap();
        for (u, b) in us.iter().zip(&r.bound) {
            assert!(*b <= eval_p_u(&m, dp.b, 0.0, &dp.nu, *u).unwrap() + 1e-14);
        }
    }

    #[test]
    fn negative_overlaps_with_field_are_certified() {
        let m = frsb(0.1);
        let sol = closed_solution(&m, 256);
        let dp = sol.dual_point();
        let d0 = dp.b - dp.nu.nu_hat(&m, 0.0);
        let us: Vec<f64> = (0..5).map(|i| -1.0 + 0.1 * i as f64).collect();
        let r = landscape_profile(&m, &sol, &us, &LandscapeOptions::default()).unwrap();
        for (u, gap) in us.iter().zip(&r.gap) {
            let a = u.abs();
            let g = m.h().powi(2) * (dp.nu.nu_hat(&m, 0.0) - dp.nu.nu_hat(&m, a))
                / (d0 * (dp.b - dp.nu.nu_hat(&m, a)));
            assert!(g > 0.0 && *gap >= g - 1e-12, "u={u}");
        }
    }

    #[test]
    fn profile_is_symmetric_at_zero_field() {
        let m = p4();
        let sol = closed_solution(&m, 64);
        let us = default_u_grid(41);
        let r = landscape_profile(&m, &sol, &us, &LandscapeOptions::default()).unwrap();
        for i in 0..us.len() {
            assert_eq!(r.bound[i], r.bound[us.len() - 1 - i]);
        }
        assert!(r.gap[20] < 1e-12);
    }

    #[test]
    fn excluded_runs_are_contiguous() {
        let u = [-1.0, -0.5, 0.0, 0.5, 1.0];
        let gap = [1.0, 1.0, 0.0, 1.0, 0.0];
        let r = runs(&u, &gap, 0.5);
        assert_eq!(r, vec![Interval { lo: -1.0, hi: -0.5 }, Interval { lo: 0.5, hi: 0.5 }]);
    }

    #[test]
    fn domain_and_argument_errors() {
        let m = p4();
        let nu = GridMeasure::flat(8, 0.3, 0.3);
        let nh0 = nu.nu_hat(&m, 0.0);
        assert!(matches!(eval_p_u(&m, nh0 + 0.1, 0.2, &nu, 0.5), Err(Error::OutOfDomain(_))));
        assert!(matches!(eval_p_u(&m, nh0 + 1.0, 0.0, &nu, 1.5), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn piecewise_from_grid_preserves_mass() {
        let nu = GridMeasure::new(vec![0.1, 0.1, 0.4, 0.4], 0.2).unwrap();
        let p = PiecewiseMeasure::from_grid(&nu, 0.3);
        assert_eq!(p.nodes, vec![0.0, 0.3, 0.5, 1.0]);
        assert!((p.total_mass() - nu.total_mass()).abs() < 1e-15);
        assert!(PiecewiseMeasure::new(vec![0.0, 0.6, 0.4, 1.0], vec![1.0; 3], 0.1).is_err());
    }
}
