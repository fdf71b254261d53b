//! Discretized measures `nu(ds) = gamma(s) 1_[0,1)(s) ds + Delta delta_1(ds)`
//! on a uniform grid, with `gamma` piecewise constant on `[s_i, s_{i+1})`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::Mixture;

/// Atoms below this size are reported as degenerate.
pub const DELTA_FLAG: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridMeasure {
    gamma: Vec<f64>,
    delta: f64,
}

impl GridMeasure {
    /// Checked constructor: `gamma` must be nonnegative and nondecreasing,
    /// `delta` nonnegative.
    pub fn new(gamma: Vec<f64>, delta: f64) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidArgument("grid must have at least one cell".into()));
        }
        if let Some(i) = gamma.iter().position(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InfeasibleMeasure(format!(
                "gamma[{i}] = {} is negative or not finite",
                gamma[i]
            )));
        }
        if let Some(i) = gamma.windows(2).position(|w| w[1] < w[0]) {
            return Err(Error::InfeasibleMeasure(format!(
                "gamma decreases between cells {i} and {}",
                i + 1
            )));
        }
        if !delta.is_finite() || delta < 0.0 {
            return Err(Error::InfeasibleMeasure(format!("atom {delta} is negative")));
        }
        Ok(Self { gamma, delta })
    }

    /// Skips the cone checks; used for deformed measures that live outside
    /// the monotone cone.
    pub fn from_parts_unchecked(gamma: Vec<f64>, delta: f64) -> Self {
        Self { gamma, delta }
    }

    /// Pure atom at 1 on a grid of `n` cells.
    pub fn atom(n: usize, delta: f64) -> Self {
        Self {
            gamma: vec![0.0; n],
            delta,
        }
    }

    /// Constant density `a` on `[0,1)` plus atom `delta`.
    pub fn flat(n: usize, a: f64, delta: f64) -> Self {
        Self {
            gamma: vec![a; n],
            delta,
        }
    }

    /// Cell averages of a density given through its antiderivative
    /// `primitive`, so that all cell masses are exact.
    pub fn from_primitive<F: Fn(f64) -> f64>(n: usize, primitive: F, delta: f64) -> Self {
        let nf = n as f64;
        let mut gamma = Vec::with_capacity(n);
        let mut prev = primitive(0.0);
        for i in 0..n {
            let next = primitive((i + 1) as f64 / nf);
            gamma.push(((next - prev) * nf).max(0.0));
            prev = next;
        }
        // cell averages of a nondecreasing density are nondecreasing up to rounding
        for i in 1..n {
            if gamma[i] < gamma[i - 1] {
                gamma[i] = gamma[i - 1];
            }
        }
        Self { gamma, delta }
    }

    pub fn n(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn cell_width(&self) -> f64 {
        1.0 / self.n() as f64
    }

    /// Grid node `s_i = i / n`.
    pub fn node(&self, i: usize) -> f64 {
        i as f64 / self.n() as f64
    }

    /// Membership in the open cone (requires a strictly positive atom).
    pub fn strict_k(&self) -> bool {
        self.delta > 0.0
    }

    /// True when the atom is small enough to be considered degenerate.
    pub fn delta_flagged(&self) -> bool {
        self.delta < DELTA_FLAG
    }

    /// Mass carried by the density part, `int_0^1 gamma`.
    pub fn gamma_mass(&self) -> f64 {
        self.gamma.iter().sum::<f64>() / self.n() as f64
    }

    /// `nu([0,1])`.
    pub fn total_mass(&self) -> f64 {
        self.gamma_mass() + self.delta
    }

    /// Jumps of `gamma` at the grid nodes, i.e. the induced measure `rho`
    /// with `rho([0, s]) = gamma(s)`; entry `i` sits at `s_i`.
    pub fn rho_masses(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.gamma
            .iter()
            .map(|&g| {
                let jump = g - prev;
                prev = g;
                jump
            })
            .collect()
    }

    fn cell_of(&self, q: f64) -> usize {
        ((q * self.n() as f64).floor() as usize).min(self.n() - 1)
    }

    /// `nu((q, 1])`.
    pub fn tail_mass(&self, q: f64) -> f64 {
        let q = q.clamp(0.0, 1.0);
        if q >= 1.0 {
            return self.delta;
        }
        let k = self.cell_of(q);
        let partial = self.gamma[k] * (self.node(k + 1) - q);
        let rest: f64 = self.gamma[k + 1..].iter().sum::<f64>() / self.n() as f64;
        self.delta + partial + rest
    }

    /// Tail masses `T_i = nu((s_i, 1])` at all `n + 1` nodes.
    pub fn tail_masses(&self) -> Vec<f64> {
        let n = self.n();
        let inv_n = 1.0 / n as f64;
        let mut t = vec![0.0; n + 1];
        t[n] = self.delta;
        for i in (0..n).rev() {
            t[i] = t[i + 1] + self.gamma[i] * inv_n;
        }
        t
    }

    /// `hat nu(s) = int_s^1 xi''(r) nu(dr)`.
    pub fn nu_hat(&self, m: &Mixture, s: f64) -> f64 {
        let s = s.clamp(0.0, 1.0);
        let atom = m.xi2(1.0) * self.delta;
        if s >= 1.0 {
            return atom;
        }
        let k = self.cell_of(s);
        let mut acc = self.gamma[k] * (m.xi1(self.node(k + 1)) - m.xi1(s));
        for j in k + 1..self.n() {
            acc += self.gamma[j] * (m.xi1(self.node(j + 1)) - m.xi1(self.node(j)));
        }
        acc + atom
    }

    /// `hat nu` at all `n + 1` nodes.
    pub fn nu_hat_nodes(&self, m: &Mixture) -> Vec<f64> {
        let n = self.n();
        let xi1 = node_values(n, |s| m.xi1(s));
        let mut out = vec![0.0; n + 1];
        out[n] = m.xi2(1.0) * self.delta;
        for i in (0..n).rev() {
            out[i] = out[i + 1] + self.gamma[i] * (xi1[i + 1] - xi1[i]);
        }
        out
    }

    /// `int_0^1 s xi''(s) nu(ds)`.
    pub fn moment_s_xi2(&self, m: &Mixture) -> f64 {
        let n = self.n();
        let prim = node_values(n, |s| m.s_xi1_minus_xi(s));
        let dens: f64 = (0..n).map(|i| self.gamma[i] * (prim[i + 1] - prim[i])).sum();
        dens + m.xi2(1.0) * self.delta
    }

    /// `int_0^1 (xi'(s) + h^2) nu(ds)`.
    pub fn linear_term(&self, m: &Mixture) -> f64 {
        let n = self.n();
        let h2 = m.h() * m.h();
        let xi = node_values(n, |s| m.xi0(s));
        let dens: f64 = (0..n)
            .map(|i| self.gamma[i] * (xi[i + 1] - xi[i] + h2 / n as f64))
            .sum();
        dens + (m.xi1(1.0) + h2) * self.delta
    }

    /// Dumps the measure as CSV: one `(s_lower, s_upper, gamma)` row per cell,
    /// then a second header and a single `(1, 1, delta)` atom row.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        let csv_err = |e: csv::Error| Error::Parse(e.to_string());
        wtr.write_record(["s_lower", "s_upper", "gamma"]).map_err(csv_err)?;
        for (i, g) in self.gamma.iter().enumerate() {
            wtr.write_record([
                self.node(i).to_string(),
                self.node(i + 1).to_string(),
                g.to_string(),
            ])
            .map_err(csv_err)?;
        }
        wtr.write_record(["s_lower", "s_upper", "delta"]).map_err(csv_err)?;
        wtr.write_record(["1", "1", &self.delta.to_string()]).map_err(csv_err)?;
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .from_reader(r);
        let parse = |s: &str, line: usize| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|_| Error::Parse(format!("line {line}: {s:?} is not a number")))
        };
        let mut rows: Vec<(f64, f64, f64)> = Vec::new();
        let mut delta: Option<f64> = None;
        let mut in_atom = false;
        let mut seen_header = false;
        for (idx, rec) in rdr.records().enumerate() {
            let line = idx + 1;
            let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
            if rec.len() != 3 {
                return Err(Error::Parse(format!("line {line}: expected 3 columns")));
            }
            if &rec[0] == "s_lower" {
                match &rec[2] {
                    "gamma" if !seen_header => seen_header = true,
                    "delta" if seen_header && !in_atom => in_atom = true,
                    other => {
                        return Err(Error::Parse(format!("line {line}: unexpected header {other:?}")))
                    }
                }
                continue;
            }
            if !seen_header {
                return Err(Error::Parse("missing gamma header".into()));
            }
            let vals = (parse(&rec[0], line)?, parse(&rec[1], line)?, parse(&rec[2], line)?);
            if in_atom {
                if delta.is_some() {
                    return Err(Error::Parse(format!("line {line}: more than one atom row")));
                }
                delta = Some(vals.2);
            } else {
                rows.push(vals);
            }
        }
        let delta = delta.ok_or_else(|| Error::Parse("missing atom row".into()))?;
        let n = rows.len();
        if n == 0 {
            return Err(Error::Parse("no density rows".into()));
        }
        for (i, &(lo, hi, _)) in rows.iter().enumerate() {
            let (elo, ehi) = (i as f64 / n as f64, (i + 1) as f64 / n as f64);
            if (lo - elo).abs() > 1e-12 || (hi - ehi).abs() > 1e-12 {
                return Err(Error::Parse(format!("row {i} is not on a uniform grid of {n} cells")));
            }
        }
        GridMeasure::new(rows.into_iter().map(|r| r.2).collect(), delta)
    }
}

pub(crate) fn node_values<F: Fn(f64) -> f64>(n: usize, f: F) -> Vec<f64> {
    (0..=n).map(|i| f(i as f64 / n as f64)).collect()
}

/// Euclidean projection of `(gamma_raw, delta_raw)` onto the cone of
/// nonnegative nondecreasing densities times the half-line of atoms.
pub fn project_to_cone(gamma_raw: &[f64], delta_raw: f64) -> GridMeasure {
    let mut gamma = isotonic_increasing(gamma_raw);
    for g in &mut gamma {
        if *g < 0.0 {
            *g = 0.0;
        }
    }
    GridMeasure {
        gamma,
        delta: delta_raw.max(0.0),
    }
}

/// Pool-adjacent-violators fit of a nondecreasing sequence (unit weights).
pub fn isotonic_increasing(y: &[f64]) -> Vec<f64> {
    // blocks of (sum, count)
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s1, c1) = blocks[blocks.len() - 1];
            let (s0, c0) = blocks[blocks.len() - 2];
            if s0 / c0 as f64 > s1 / c1 as f64 {
                blocks.pop();
                let last = blocks.last_mut().unwrap();
                *last = (s0 + s1, c0 + c1);
            } else {
                break;
            }
        }
    }
    let mut out = Vec::with_capacity(y.len());
    for (s, c) in blocks {
        let mean = s / c as f64;
        out.extend(std::iter::repeat_n(mean, c));
    }
    out
}
