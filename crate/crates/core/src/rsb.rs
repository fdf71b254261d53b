//! Closed-form phases: the replica symmetric test, one-step breaking with
//! the atom of `rho` at 0, and the full breaking profile
//! `gamma = xi''' / (2 xi''^{3/2})`.

use serde::{Deserialize, Serialize};

use crate::cs::{minimize_q, ParisiSolution, SolverOptions};
use crate::error::{Error, Result};
use crate::measure::GridMeasure;
use crate::mixture::Mixture;
use crate::numeric::{adaptive_simpson, bisect, golden_min, log1p_defect, log1p_ratio};
use crate::parisi::DualPoint;

/// Points of the uniform scan used for `zeta`.
pub const ZETA_SCAN_POINTS: usize = 8193;
pub const ZETA_TOL: f64 = 1e-9;
/// Interior points used by the convexity and concavity checks.
pub const CONVEXITY_POINTS: usize = 4097;
pub const CONV_TOL: f64 = 1e-10;
/// Grid of the tabulated full breaking profile.
pub const PROFILE_GRID: usize = 1024;

const STRICT_REL_TOL: f64 = 1e-12;
const ME_QUAD_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsTest {
    pub holds: bool,
    pub nu_delta: f64,
    pub me: f64,
}

/// `xi''(1) <= xi'(1) + h^2`, with the replica symmetric atom and energy.
pub fn rs_test(m: &Mixture) -> RsTest {
    let e = m.xi1(1.0) + m.h() * m.h();
    RsTest {
        holds: m.xi2(1.0) <= e,
        nu_delta: 1.0 / e.sqrt(),
        me: e.sqrt(),
    }
}

/// `(1 + z) ln(1 + z) / z^2 - 1/z`, decreasing from 1/2 at `z = 0` to 0.
pub fn z_equation_lhs(z: f64) -> f64 {
    log1p_ratio(z) - log1p_defect(z)
}

/// Root of `z_equation_lhs(z) = 1 / xi'(1)`; exactly 0 for pure SK.
pub fn solve_z(m: &Mixture, tol: f64) -> f64 {
    let target = 1.0 / m.xi1(1.0);
    if m.is_pure_sk() || target >= 0.5 {
        return 0.0;
    }
    let g = |z: f64| z_equation_lhs(z) - target;
    let lo = 1e-12;
    let mut hi = 1.0;
    while g(hi) > 0.0 {
        hi *= 2.0;
    }
    let z = bisect(g, lo, hi, 400);
    debug_assert!(g(z).abs() < tol.max(1e-15), "z residual {}", g(z));
    z
}

fn zeta_parts(m: &Mixture, z: f64, s: f64) -> (f64, f64) {
    let d1 = m.xi1(1.0);
    let xs = m.xi1(s);
    let y = z * xs / d1;
    (m.xi0(s) - s * xs, (1.0 + z) * xs * xs * log1p_defect(y) / d1)
}

/// `zeta(s) = xi(s) + xi'(s)(1 - s) + xi'(s)/z - (1+z) xi'(1)/z^2 ln(1 + z xi'(s)/xi'(1))`,
/// evaluated without cancellation as
/// `xi(s) - s xi'(s) + (1+z) xi'(s)^2 psi(y) / xi'(1)` with `y = z xi'(s)/xi'(1)`.
pub fn zeta(m: &Mixture, z: f64, s: f64) -> Result<f64> {
    if !(z > 0.0) {
        return Err(Error::InvalidArgument(format!("z must be positive, got {z}")));
    }
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::InvalidArgument(format!("s = {s} outside [0, 1]")));
    }
    let (a, b) = zeta_parts(m, z, s);
    Ok(a + b)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneRsbTest {
    pub is_one_rsb_at_zero: bool,
    pub z: f64,
    pub a: Option<f64>,
    pub delta: Option<f64>,
    pub me: Option<f64>,
    pub zeta_max_interior: Option<f64>,
    pub strict: bool,
}

/// Density `A` and atom `Delta` of the one-step measure.
pub fn one_rsb_parameters(m: &Mixture, z: f64) -> (f64, f64) {
    let r = ((1.0 + z) * m.xi1(1.0)).sqrt();
    (z / r, 1.0 / r)
}

pub fn one_rsb_energy(m: &Mixture, z: f64) -> f64 {
    (m.xi1(1.0) + z * m.xi0(1.0)) / ((1.0 + z) * m.xi1(1.0)).sqrt()
}

/// Scans `zeta` on the interior of the uniform grid and refines the largest
/// value by golden-section search. Returns `(max, strictly_negative)`.
fn scan_zeta(m: &Mixture, z: f64) -> (f64, bool) {
    let k = ZETA_SCAN_POINTS - 1;
    let step = 1.0 / k as f64;
    let mut best = (0usize, f64::NEG_INFINITY);
    let mut strict = true;
    for i in 1..k {
        let s = i as f64 * step;
        let (a, b) = zeta_parts(m, z, s);
        let v = a + b;
        if !(v < -STRICT_REL_TOL * (a.abs() + b.abs())) {
            strict = false;
        }
        if v > best.1 {
            best = (i, v);
        }
    }
    let lo = (best.0 - 1) as f64 * step;
    let hi = (best.0 + 1) as f64 * step;
    let (_, neg) = golden_min(
        |s| {
            let (a, b) = zeta_parts(m, z, s);
            -(a + b)
        },
        lo,
        hi,
        1e-12,
    );
    (best.1.max(-neg), strict)
}

/// One-step breaking test at zero field.
pub fn one_rsb_test(m: &Mixture) -> Result<OneRsbTest> {
    if m.h() != 0.0 {
        return Err(Error::UnsupportedRegime(
            "the one-step characterization needs h = 0".into(),
        ));
    }
    let z = solve_z(m, 1e-12);
    let has_higher = m.active().any(|(p, c)| p >= 4 && c > 0.0);
    if !has_higher || z <= 0.0 {
        return Ok(OneRsbTest {
            is_one_rsb_at_zero: false,
            z,
            a: None,
            delta: None,
            me: None,
            zeta_max_interior: None,
            strict: false,
        });
    }
    let (zmax, strict) = scan_zeta(m, z);
    let ok = zmax <= ZETA_TOL;
    let (a, delta) = one_rsb_parameters(m, z);
    Ok(OneRsbTest {
        is_one_rsb_at_zero: ok,
        z,
        a: ok.then_some(a),
        delta: ok.then_some(delta),
        me: ok.then(|| one_rsb_energy(m, z)),
        zeta_max_interior: Some(zmax),
        strict: ok && strict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cor1Test {
    pub ineq_holds: bool,
    pub convexity_holds: bool,
}

/// Second differences on `CONVEXITY_POINTS` points `s_i`, scaled so that a
/// positive result is convexity. `sign = -1` tests concavity.
fn second_differences_ok(f: impl Fn(f64) -> f64, nodes: &[f64], sign: f64) -> bool {
    let vals: Vec<f64> = nodes.iter().map(|&s| f(s)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return false;
    }
    let sup = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol = CONV_TOL * sup.max(f64::MIN_POSITIVE);
    vals.windows(3)
        .all(|w| sign * (w[0] - 2.0 * w[1] + w[2]) >= -tol)
}

/// `xi'(1) > xi''(0)(1 + z)` and convexity of `s / xi'(s)` on `(0, 1)`.
pub fn cor1_test(m: &Mixture, z: f64) -> Cor1Test {
    let k = CONVEXITY_POINTS + 1;
    let nodes: Vec<f64> = (1..k).map(|i| i as f64 / k as f64).collect();
    Cor1Test {
        ineq_holds: m.xi1(1.0) > m.xi2(0.0) * (1.0 + z),
        convexity_holds: second_differences_ok(|s| s / m.xi1(s), &nodes, 1.0),
    }
}

/// `2pq + 4 >= 3(p + q) + (p - q)^2`.
pub fn cor2_test(p: u32, q: u32) -> bool {
    let (p, q) = (p as i64, q as i64);
    2 * p * q + 4 >= 3 * (p + q) + (p - q) * (p - q)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrsbClosedForm {
    pub applies: bool,
    pub s_p: f64,
    pub me: f64,
    /// `gamma` at the nodes `i / PROFILE_GRID`; empty unless `applies`.
    pub gamma_profile: Vec<f64>,
}

/// Whether `xi''^{-1/2}` is concave on `(0, 1]`.
pub fn inverse_sqrt_xi2_concave(m: &Mixture) -> bool {
    let k = CONVEXITY_POINTS;
    let nodes: Vec<f64> = (1..=k).map(|i| i as f64 / k as f64).collect();
    second_differences_ok(|s| 1.0 / m.xi2(s).sqrt(), &nodes, -1.0)
}

/// Root of `s xi''(s) = xi'(s) + h^2` on `[0, 1]`.
pub fn frsb_s_p(m: &Mixture) -> f64 {
    let h2 = m.h() * m.h();
    bisect(|s| s * m.xi2(s) - m.xi1(s) - h2, 0.0, 1.0, 200)
}

/// `xi'''(s) / (2 xi''(s)^{3/2})` for `s >= s_p`, else 0.
pub fn frsb_density(m: &Mixture, s_p: f64, s: f64) -> f64 {
    if s < s_p {
        0.0
    } else {
        m.xi3(s) / (2.0 * m.xi2(s).powf(1.5))
    }
}

pub fn frsb_closed_form(m: &Mixture) -> FrsbClosedForm {
    let applies = m.xi2(1.0) > m.xi1(1.0) + m.h() * m.h() && inverse_sqrt_xi2_concave(m);
    if !applies {
        return FrsbClosedForm {
            applies,
            s_p: f64::NAN,
            me: f64::NAN,
            gamma_profile: Vec::new(),
        };
    }
    let s_p = frsb_s_p(m);
    let me = s_p * m.xi2(s_p).sqrt() + adaptive_simpson(&|s| m.xi2(s).sqrt(), s_p, 1.0, ME_QUAD_TOL);
    let gamma_profile = (0..=PROFILE_GRID)
        .map(|i| frsb_density(m, s_p, i as f64 / PROFILE_GRID as f64))
        .collect();
    FrsbClosedForm {
        applies,
        s_p,
        me,
        gamma_profile,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    #[serde(rename = "RS")]
    Rs,
    OneRsbAtZero,
    FrsbClosedForm,
    NumericOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RsSummary {
    #[serde(rename = "Delta")]
    pub delta: f64,
    pub me: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneRsbSummary {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "Delta")]
    pub delta: f64,
    /// `z / (1 + z)`.
    #[serde(rename = "delta")]
    pub delta_ratio: f64,
    pub me: f64,
    pub strict: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrsbSummary {
    pub s_p: f64,
    pub me: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Criteria {
    pub rs_inequality_holds: bool,
    /// Only evaluated at zero field.
    pub zeta_nonpositive: Option<bool>,
    /// Only evaluated at zero field with `z > 0`.
    pub cor1_holds: Option<bool>,
    pub inverse_sqrt_xi2_concave: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub grid: usize,
    pub me_numeric: f64,
    pub s_p_numeric: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RsbClassification {
    pub phase: Phase,
    pub z: Option<f64>,
    pub zeta_max_interior: Option<f64>,
    pub rs: Option<RsSummary>,
    pub one_rsb: Option<OneRsbSummary>,
    pub frsb: Option<FrsbSummary>,
    pub criteria: Criteria,
    pub cross_check: Option<CrossCheck>,
}

impl RsbClassification {
    pub fn me_closed_form(&self) -> Option<f64> {
        self.rs
            .map(|r| r.me)
            .or(self.one_rsb.map(|o| o.me))
            .or(self.frsb.map(|f| f.me))
    }

    pub fn s_p(&self) -> Option<f64> {
        match self.phase {
            Phase::Rs => Some(1.0),
            Phase::OneRsbAtZero => Some(0.0),
            Phase::FrsbClosedForm => self.frsb.map(|f| f.s_p),
            Phase::NumericOnly => None,
        }
    }

    /// The closed-form measure on a uniform grid of `n` cells.
    pub fn measure(&self, m: &Mixture, n: usize) -> Option<GridMeasure> {
        match self.phase {
            Phase::Rs => self.rs.map(|r| GridMeasure::atom(n, r.delta)),
            Phase::OneRsbAtZero => self.one_rsb.map(|o| GridMeasure::flat(n, o.a, o.delta)),
            Phase::FrsbClosedForm => self.frsb.map(|f| frsb_measure(m, f.s_p, n)),
            Phase::NumericOnly => None,
        }
    }

    /// The closed-form measure wrapped as a solution with the exact `s_P`.
    pub fn solution(&self, m: &Mixture, n: usize) -> Option<Result<ParisiSolution>> {
        let nu = self.measure(m, n)?;
        let s_p = self.s_p()?;
        Some(ParisiSolution::with_s_p(nu, m, s_p))
    }
}

/// Cell averages of `xi''' / (2 xi''^{3/2})` on `[s_p, 1)` plus the atom
/// `xi''(1)^{-1/2}`.
pub fn frsb_measure(m: &Mixture, s_p: f64, n: usize) -> GridMeasure {
    let base = 1.0 / m.xi2(s_p).sqrt();
    GridMeasure::from_primitive(
        n,
        |s| {
            if s < s_p {
                0.0
            } else {
                base - 1.0 / m.xi2(s).sqrt()
            }
        },
        1.0 / m.xi2(1.0).sqrt(),
    )
}

/// The one-step point `(B, nu)` with `nu = A ds + Delta delta_1` and
/// `B = xi''(1) Delta + 1 / Delta`.
pub fn one_rsb_dual_point(m: &Mixture, z: f64, n: usize) -> DualPoint {
    let (a, delta) = one_rsb_parameters(m, z);
    DualPoint::new(m.xi2(1.0) * delta + 1.0 / delta, GridMeasure::flat(n, a, delta))
}

#[derive(Debug, Clone, Default)]
pub struct ClassifyOptions {
    /// Also run the numerical solver on a grid of `grid` cells.
    pub cross_check: bool,
    pub grid: Option<usize>,
    pub solver: SolverOptions,
}

pub const DEFAULT_CROSS_CHECK_GRID: usize = 1024;

pub fn classify(m: &Mixture, opts: &ClassifyOptions) -> Result<RsbClassification> {
    let rs = rs_test(m);
    let concave = inverse_sqrt_xi2_concave(m);
    let mut criteria = Criteria {
        rs_inequality_holds: rs.holds,
        zeta_nonpositive: None,
        cor1_holds: None,
        inverse_sqrt_xi2_concave: concave,
    };
    let mut out = RsbClassification {
        phase: Phase::NumericOnly,
        z: None,
        zeta_max_interior: None,
        rs: None,
        one_rsb: None,
        frsb: None,
        criteria,
        cross_check: None,
    };

    if rs.holds {
        out.phase = Phase::Rs;
        out.rs = Some(RsSummary {
            delta: rs.nu_delta,
            me: rs.me,
        });
    } else {
        let mut done = false;
        if m.h() == 0.0 {
            let t = one_rsb_test(m)?;
            if t.zeta_max_interior.is_some() {
                criteria.zeta_nonpositive = Some(t.is_one_rsb_at_zero);
                let c = cor1_test(m, t.z);
                criteria.cor1_holds = Some(c.ineq_holds && c.convexity_holds);
            }
            if t.is_one_rsb_at_zero {
                out.phase = Phase::OneRsbAtZero;
                out.z = Some(t.z);
                out.zeta_max_interior = t.zeta_max_interior;
                out.one_rsb = Some(OneRsbSummary {
                    a: t.a.unwrap_or_default(),
                    delta: t.delta.unwrap_or_default(),
                    delta_ratio: t.z / (1.0 + t.z),
                    me: t.me.unwrap_or_default(),
                    strict: t.strict,
                });
                done = true;
            }
        }
        if !done {
            let f = frsb_closed_form(m);
            if f.applies {
                out.phase = Phase::FrsbClosedForm;
                out.frsb = Some(FrsbSummary { s_p: f.s_p, me: f.me });
            }
        }
        out.criteria = criteria;
    }

    if opts.cross_check {
        let grid = opts.grid.unwrap_or(DEFAULT_CROSS_CHECK_GRID);
        let sol = minimize_q(m, grid, &opts.solver)?;
        out.cross_check = Some(CrossCheck {
            grid,
            me_numeric: sol.me,
            s_p_numeric: sol.s_p,
            iterations: sol.iterations,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parisi::{eval_p, optimality_residuals};

    fn sk(h: f64) -> Mixture {
        Mixture::pure(2, h).unwrap()
    }

    fn p4() -> Mixture {
        Mixture::pure(4, 0.0).unwrap()
    }

    fn frsb_example(h: f64) -> Mixture {
        Mixture::new([(2, 0.95), (4, 0.05)], h).unwrap()
    }

    fn truncated_exp() -> Mixture {
        let mut fact = 1.0;
        let mut terms = Vec::new();
        for k in 1..=8u32 {
            fact *= k as f64;
            if k >= 2 {
                terms.push((2 * k, 1.0 / fact));
            }
        }
        let total: f64 = terms.iter().map(|t| t.1).sum();
        Mixture::new(terms.into_iter().map(|(p, c)| (p, c / total)), 0.0).unwrap()
    }

    #[test]
    fn rs_examples() {
        let t = rs_test(&sk(0.0));
        assert!(t.holds);
        assert!((t.me - 2f64.sqrt()).abs() < 1e-15);
        let t = rs_test(&sk(1.0));
        assert!(t.holds);
        assert!((t.me - 3f64.sqrt()).abs() < 1e-15);
        assert!((t.nu_delta - 1.0 / 3f64.sqrt()).abs() < 1e-15);
        assert!(!rs_test(&p4()).holds);
    }

    #[test]
    fn z_for_pure_models() {
        assert_eq!(solve_z(&sk(0.0), 1e-12), 0.0);
        let z4 = solve_z(&p4(), 1e-12);
        assert!(z4 > 0.0);
        assert!((z_equation_lhs(z4) - 0.25).abs() < 1e-12);
        // bracketing certificate
        assert!(z_equation_lhs(z4 / 2.0) > 0.25);
        assert!(z_equation_lhs(2.0 * z4) < 0.25);
        let z8 = solve_z(&Mixture::pure(8, 0.0).unwrap(), 1e-12);
        assert!(z8 > z4);
    }

    #[test]
    fn z_lhs_matches_direct_formula() {
        for z in [0.05, 0.7, 3.0, 40.0] {
            let direct = (1.0 + z) * (1.0f64 + z).ln() / (z * z) - 1.0 / z;
            assert!((z_equation_lhs(z) - direct).abs() < 1e-13);
        }
        assert!((z_equation_lhs(1e-9) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn zeta_matches_defining_formula_and_endpoints() {
        let m = Mixture::new([(4, 0.7), (6, 0.3)], 0.0).unwrap();
        let z = solve_z(&m, 1e-12);
        assert_eq!(zeta(&m, z, 0.0).unwrap(), 0.0);
        assert!(zeta(&m, z, 1.0).unwrap().abs() < 1e-10);
        let d1 = m.xi1(1.0);
        for s in [0.3, 0.5, 0.8] {
            let xs = m.xi1(s);
            let direct = m.xi0(s) + xs * (1.0 - s) + xs / z
                - (1.0 + z) * d1 / (z * z) * (1.0 + z * xs / d1).ln();
            assert!((zeta(&m, z, s).unwrap() - direct).abs() < 1e-12);
        }
        assert!(zeta(&p4(), solve_z(&p4(), 1e-12), 0.5).unwrap() < 0.0);
        assert!(matches!(zeta(&m, 0.0, 0.5), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn one_rsb_examples() {
        let t = one_rsb_test(&p4()).unwrap();
        assert!(t.is_one_rsb_at_zero && t.strict);
        let z = t.z;
        assert!((t.a.unwrap() - z / ((1.0 + z) * 4.0).sqrt()).abs() < 1e-15);
        assert!((t.me.unwrap() - (4.0 + z) / ((1.0 + z) * 4.0).sqrt()).abs() < 1e-15);

        assert!(!one_rsb_test(&sk(0.0)).unwrap().is_one_rsb_at_zero);
        assert!(one_rsb_test(&truncated_exp()).unwrap().is_one_rsb_at_zero);
        assert!(matches!(
            one_rsb_test(&Mixture::pure(4, 0.1).unwrap()),
            Err(Error::UnsupportedRegime(_))
        ));
    }

    #[test]
    fn one_rsb_rejects_frsb_example() {
        let t = one_rsb_test(&frsb_example(0.0)).unwrap();
        assert!(!t.is_one_rsb_at_zero);
        assert!(t.zeta_max_interior.unwrap() > ZETA_TOL);
        assert!(t.a.is_none());
    }

    #[test]
    fn cor1_examples() {
        let m = p4();
        let c = cor1_test(&m, solve_z(&m, 1e-12));
        assert!(c.ineq_holds && c.convexity_holds);

        let m = frsb_example(0.0);
        let z = solve_z(&m, 1e-12);
        let c = cor1_test(&m, z);
        assert_eq!(c.ineq_holds, 2.1 > 1.9 * (1.0 + z));

        for c4 in [0.1, 0.5, 0.9] {
            let m = Mixture::new([(4, c4), (6, 1.0 - c4)], 0.0).unwrap();
            assert!(cor1_test(&m, solve_z(&m, 1e-12)).convexity_holds);
        }
    }

    #[test]
    fn degree_pair_truth_table() {
        assert!(cor2_test(4, 4));
        assert!(cor2_test(4, 6));
        assert!(!cor2_test(4, 14));
    }

    #[test]
    fn frsb_example_closed_form() {
        let m = frsb_example(0.0);
        let f = frsb_closed_form(&m);
        assert!(f.applies);
        assert_eq!(f.s_p, 0.0);
        for (i, g) in f.gamma_profile.iter().enumerate() {
            let s = i as f64 / PROFILE_GRID as f64;
            let expect = 1.2 * s / (2.0 * (1.9 + 0.6 * s * s).powf(1.5));
            assert!((g - expect).abs() < 1e-14);
        }
        // int_0^1 sqrt(1.9 + 0.6 s^2) ds in closed form
        let (a, b) = (1.9f64, 0.6f64);
        let r = (a + b).sqrt();
        let exact = 0.5 * r + a / (2.0 * b.sqrt()) * ((b.sqrt() + r) / a.sqrt()).ln();
        assert!((f.me - exact).abs() < 1e-9);
        assert!(!frsb_closed_form(&p4()).applies);
    }

    #[test]
    fn frsb_with_field_has_positive_s_p() {
        let m = frsb_example(0.1);
        let f = frsb_closed_form(&m);
        assert!(f.applies);
        // s xi'' - xi' = 0.4 s^3 for this mixture
        assert!((f.s_p - 0.025f64.cbrt()).abs() < 1e-12);
        assert_eq!(f.gamma_profile[0], 0.0);
    }

    #[test]
    fn frsb_energy_matches_q_of_closed_form_measure() {
        for h in [0.0, 0.1] {
            let m = frsb_example(h);
            let f = frsb_closed_form(&m);
            let nu = frsb_measure(&m, f.s_p, 4096);
            let q = crate::cs::eval_q(&nu, &m).unwrap();
            assert!((q - f.me).abs() < 1e-6, "h={h} q={q} me={}", f.me);
        }
    }

    #[test]
    fn one_step_point_identities() {
        let m = p4();
        let z = solve_z(&m, 1e-12);
        let dp = one_rsb_dual_point(&m, z, 2048);
        let b = crate::parisi::b_from_nu(&dp.nu, &m).unwrap();
        assert!((b - dp.b).abs() < 1e-12);
        let p = eval_p(&dp, &m).unwrap();
        assert!((p - (4.0 + z) / ((1.0 + z) * 4.0).sqrt()).abs() < 1e-10);
        let r = optimality_residuals(&dp, &m, None).unwrap();
        assert!(r.f_at_1.abs() < 1e-10);
        for (i, fb) in r.fbar.iter().enumerate() {
            let s = i as f64 / 2048.0;
            assert!((fb + zeta(&m, z, s).unwrap()).abs() < 1e-8);
        }
        assert!(r.fbar[0].abs() < 1e-8);
        assert!(r.min_fbar >= -1e-8);
    }

    #[test]
    fn classify_exemplars() {
        let o = ClassifyOptions::default();
        let c = classify(&sk(0.0), &o).unwrap();
        assert_eq!(c.phase, Phase::Rs);
        assert_eq!(c.s_p(), Some(1.0));
        assert!(c.z.is_none() && c.one_rsb.is_none() && c.frsb.is_none());

        let c = classify(&p4(), &o).unwrap();
        assert_eq!(c.phase, Phase::OneRsbAtZero);
        assert!(c.z.unwrap() > 0.0 && c.rs.is_none() && c.frsb.is_none());
        assert_eq!(c.criteria.cor1_holds, Some(true));

        let c = classify(&frsb_example(0.0), &o).unwrap();
        assert_eq!(c.phase, Phase::FrsbClosedForm);
        assert!(c.z.is_none() && c.one_rsb.is_none());

        let c = classify(&Mixture::pure(4, 0.5).unwrap(), &o).unwrap();
        assert_eq!(c.phase, Phase::NumericOnly);
        assert!(c.me_closed_form().is_none());
    }

    #[test]
    fn rs_boundary_is_rs() {
        // xi'' (1) = xi'(1) + h^2 exactly
        let m = Mixture::new([(2, 0.5), (4, 0.5)], 2.0).unwrap();
        assert_eq!(m.xi2(1.0), m.xi1(1.0) + 4.0);
        assert_eq!(classify(&m, &ClassifyOptions::default()).unwrap().phase, Phase::Rs);
    }

    #[test]
    fn cross_check_agrees() {
        let o = ClassifyOptions {
            cross_check: true,
            grid: Some(512),
            ..Default::default()
        };
        for m in [sk(1.0), p4(), frsb_example(0.0)] {
            let c = classify(&m, &o).unwrap();
            let x = c.cross_check.unwrap();
            assert!((x.me_numeric - c.me_closed_form().unwrap()).abs() < 1e-3);
        }
    }
}
