//! The zero-temperature Parisi functional `P(B, nu)` and its first-order
//! optimality system.
//!
//! On each grid cell `B - hat nu(s)` is affine in `xi'(s)`, so every integral
//! against `xi''` is evaluated in closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measure::{node_values, GridMeasure};
use crate::mixture::Mixture;
use crate::numeric::{log1p_defect, log1p_ratio};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DualPoint {
    pub b: f64,
    pub nu: GridMeasure,
}

impl DualPoint {
    pub fn new(b: f64, nu: GridMeasure) -> Self {
        Self { b, nu }
    }

    /// The optimal `B` for `nu`, see [`b_from_nu`].
    pub fn from_measure(nu: GridMeasure, m: &Mixture) -> Result<Self> {
        let b = b_from_nu(&nu, m)?;
        Ok(Self { b, nu })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimalityResiduals {
    pub f_at_1: f64,
    /// `f` at the `n + 1` grid nodes.
    pub f: Vec<f64>,
    /// `f bar` at the `n + 1` grid nodes.
    pub fbar: Vec<f64>,
    pub min_fbar: f64,
    /// `rho`-mass sitting at nodes where `f bar > fbar_tol`.
    pub support_violation: f64,
    /// Largest `|f bar|` over nodes charged by `rho`.
    pub max_abs_fbar_on_support: f64,
    pub fbar_tol: f64,
}

/// Default tolerance for `f bar`, `1e-6 * xi''(1)`.
pub fn default_fbar_tol(m: &Mixture) -> f64 {
    1e-6 * m.xi2(1.0)
}

/// `D_i = B - hat nu(s_i)` at every node, or an out-of-domain error.
fn gaps(dp: &DualPoint, m: &Mixture) -> Result<Vec<f64>> {
    let nh = dp.nu.nu_hat_nodes(m);
    if !(dp.b > nh[0]) {
        return Err(Error::OutOfDomain(format!(
            "B = {} must exceed hat nu(0) = {}",
            dp.b, nh[0]
        )));
    }
    Ok(nh.into_iter().map(|v| dp.b - v).collect())
}

/// `int_0^1 xi''(s) / (B - hat nu(s)) ds` given node gaps `d` and node values
/// of `xi'`.
pub(crate) fn inverse_gap_integral(d: &[f64], xi1: &[f64]) -> f64 {
    d.windows(2)
        .zip(xi1.windows(2))
        .map(|(dw, xw)| (xw[1] - xw[0]) * log1p_ratio((dw[1] - dw[0]) / dw[0]) / dw[0])
        .sum()
}

/// `P(B, nu)`.
pub fn eval_p(dp: &DualPoint, m: &Mixture) -> Result<f64> {
    let d = gaps(dp, m)?;
    let xi1 = node_values(dp.nu.n(), |s| m.xi1(s));
    let h2 = m.h() * m.h();
    let integral = inverse_gap_integral(&d, &xi1);
    Ok(0.5 * (h2 / d[0] + integral + dp.b - dp.nu.moment_s_xi2(m)))
}

/// `B = hat nu(0) + 1 / nu([0,1])`.
pub fn b_from_nu(nu: &GridMeasure, m: &Mixture) -> Result<f64> {
    let mass = nu.total_mass();
    if !(mass > 0.0) {
        return Err(Error::InfeasibleMeasure("measure has zero total mass".into()));
    }
    Ok(nu.nu_hat(m, 0.0) + 1.0 / mass)
}

/// Tabulates `f` and `f bar` and checks the optimality conditions
/// `f(1) = 0`, `f bar >= 0`, `f bar = 0` on the support of `rho`.
pub fn optimality_residuals(
    dp: &DualPoint,
    m: &Mixture,
    fbar_tol: Option<f64>,
) -> Result<OptimalityResiduals> {
    let fbar_tol = fbar_tol.unwrap_or_else(|| default_fbar_tol(m));
    let d = gaps(dp, m)?;
    let n = dp.nu.n();
    let w = 1.0 / n as f64;
    let xi0 = node_values(n, |s| m.xi0(s));
    let xi1 = node_values(n, |s| m.xi1(s));
    let h2 = m.h() * m.h();

    let mut f = vec![0.0; n + 1];
    f[0] = h2 / (d[0] * d[0]);
    for i in 0..n {
        f[i + 1] = f[i] + (xi1[i + 1] - xi1[i]) / (d[i] * d[i + 1]) - w;
    }

    let mut fbar = vec![0.0; n + 1];
    for i in (0..n).rev() {
        let du = xi1[i + 1] - xi1[i];
        let x = (d[i + 1] - d[i]) / d[i];
        let cell = f[i] * du + du * du * log1p_defect(x) / (d[i] * d[i])
            - (w * xi1[i + 1] - (xi0[i + 1] - xi0[i]));
        fbar[i] = fbar[i + 1] + cell;
    }

    let rho = dp.nu.rho_masses();
    let mut support_violation = 0.0;
    let mut max_abs_fbar_on_support: f64 = 0.0;
    for (i, &r) in rho.iter().enumerate() {
        if r > 0.0 {
            max_abs_fbar_on_support = max_abs_fbar_on_support.max(fbar[i].abs());
            if fbar[i] > fbar_tol {
                support_violation += r;
            }
        }
    }
    let min_fbar = fbar.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(OptimalityResiduals {
        f_at_1: f[n],
        f,
        fbar,
        min_fbar,
        support_violation,
        max_abs_fbar_on_support,
        fbar_tol,
    })
}

/// `|Q(nu) - P(B(nu), nu)|`.
pub fn duality_gap(nu: &GridMeasure, m: &Mixture) -> Result<f64> {
    let q = crate::cs::eval_q(nu, m)?;
    let p = eval_p(&DualPoint::from_measure(nu.clone(), m)?, m)?;
    Ok((q - p).abs())
}
