//! Finite-N simulation: Gaussian p-spin Hamiltonians on the sphere of radius
//! `sqrt(N)`, gradient ascent with retraction, and overlap statistics of the
//! near-maximal configurations.
//!
//! Each degree `p` stores one coefficient per sorted index tuple
//! `i_1 <= ... <= i_p`. Folding the i.i.d. tensor `g` onto sorted tuples sums
//! `k` independent standard Gaussians, where `k` is the number of distinct
//! permutations of the tuple, so the folded coefficient is sampled directly
//! as `sqrt(k) Z`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mixture::Mixture;

/// Largest number of stored coefficients per Hamiltonian.
pub const MAX_COEFFICIENTS: u64 = 1 << 25;
pub const DEDUP_OVERLAP: f64 = 0.99;
pub const HISTOGRAM_BINS: usize = 81;

const RESTART_STREAM_BIT: u64 = 1 << 63;
const MIN_STEP: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(rename = "N")]
    pub n: usize,
    pub n_restarts: usize,
    pub n_disorder_samples: usize,
    pub step0: f64,
    pub max_steps: usize,
    pub grad_tol: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            n: 64,
            n_restarts: 20,
            n_disorder_samples: 1,
            step0: 0.1,
            max_steps: 5000,
            grad_tol: 1e-7,
            seed: 1,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        let mut bad = Vec::new();
        if self.n < 2 {
            bad.push(format!("N = {} must be at least 2", self.n));
        }
        if self.n_restarts < 1 {
            bad.push("n_restarts must be at least 1".to_string());
        }
        if self.n_disorder_samples < 1 {
            bad.push("n_disorder_samples must be at least 1".to_string());
        }
        if !(self.step0 > 0.0) || !self.step0.is_finite() {
            bad.push(format!("step0 = {} must be positive", self.step0));
        }
        if !(self.grad_tol > 0.0) {
            bad.push(format!("grad_tol = {} must be positive", self.grad_tol));
        }
        if self.max_steps < 1 {
            bad.push("max_steps must be at least 1".to_string());
        }
        if bad.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(bad.join("; ")))
        }
    }
}

fn binomial(n: u64, k: u64) -> u64 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Number of sorted `p`-tuples over `n` indices.
pub fn symmetric_len(n: usize, p: u32) -> u64 {
    binomial(n as u64 + p as u64 - 1, p as u64)
}

/// One degree of the Hamiltonian: `scale * sum_t a_t sigma^t` over sorted
/// tuples `t` in lexicographic order.
#[derive(Debug, Clone)]
struct Degree {
    p: usize,
    scale: f64,
    coeffs: Vec<f64>,
}

impl Degree {
    fn sample(n: usize, p: u32, c: f64, rng: &mut ChaCha8Rng) -> Self {
        let p = p as usize;
        let len = symmetric_len(n, p as u32) as usize;
        let mut coeffs = Vec::with_capacity(len);
        let mut idx = vec![0usize; p];
        let mut fact = vec![1.0f64; p + 1];
        for k in 1..=p {
            fact[k] = fact[k - 1] * k as f64;
        }
        loop {
            let mut denom = 1.0;
            let mut run = 1;
            for j in 1..p {
                if idx[j] == idx[j - 1] {
                    run += 1;
                } else {
                    denom *= fact[run];
                    run = 1;
                }
            }
            denom *= fact[run];
            let z: f64 = rng.sample(StandardNormal);
            coeffs.push((fact[p] / denom).sqrt() * z);
            if !next_sorted(&mut idx, n) {
                break;
            }
        }
        Self {
            p,
            scale: c.sqrt() / (n as f64).powf((p as f64 - 1.0) / 2.0),
            coeffs,
        }
    }

    /// Value without the scale factor; with `GRAD` the gradient is added
    /// into `grad`.
    fn eval<const GRAD: bool>(&self, sigma: &[f64], grad: &mut [f64]) -> f64 {
        let mut pos = 0usize;
        level::<GRAD>(&self.coeffs, sigma, self.p - 1, 0, 1.0, &mut pos, grad)
    }
}

/// `sum_{i >= start} sigma_i T(i)` at one level of the lexicographic layout,
/// where `T(i)` is the contraction of the deeper levels. `pprod` is the
/// product of `sigma` over the enclosing prefix; the gradient is accumulated
/// in reverse mode.
fn level<const GRAD: bool>(
    coeffs: &[f64],
    sigma: &[f64],
    depth_left: usize,
    start: usize,
    pprod: f64,
    pos: &mut usize,
    grad: &mut [f64],
) -> f64 {
    let n = sigma.len();
    if depth_left == 0 {
        let slice = &coeffs[*pos..*pos + n - start];
        *pos += n - start;
        let mut s = 0.0;
        for (k, &a) in slice.iter().enumerate() {
            s += a * sigma[start + k];
            if GRAD {
                grad[start + k] += pprod * a;
            }
        }
        return s;
    }
    let mut acc = 0.0;
    for i in start..n {
        let t = level::<GRAD>(coeffs, sigma, depth_left - 1, i, pprod * sigma[i], pos, grad);
        if GRAD {
            grad[i] += pprod * t;
        }
        acc += sigma[i] * t;
    }
    acc
}

fn next_sorted(idx: &mut [usize], n: usize) -> bool {
    let p = idx.len();
    let mut j = p;
    while j > 0 {
        j -= 1;
        if idx[j] + 1 < n {
            let v = idx[j] + 1;
            for x in idx[j..].iter_mut() {
                *x = v;
            }
            return true;
        }
    }
    false
}

/// Lexicographic rank of a sorted tuple among sorted tuples over `n` indices.
fn rank_sorted(t: &[usize], n: usize) -> usize {
    let p = t.len();
    let mut r = 0u64;
    let mut lo = 0usize;
    for (j, &v) in t.iter().enumerate() {
        let rest = (p - j - 1) as u32;
        for w in lo..v {
            r += symmetric_len(n - w, rest);
        }
        lo = v;
    }
    r as usize
}

/// A sampled Hamiltonian `H_N(sigma) = X_N(sigma) + h sum_i sigma_i`.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    n: usize,
    h: f64,
    degrees: Vec<Degree>,
}

impl Hamiltonian {
    /// Samples the couplings for disorder index `disorder`. Each degree draws
    /// from its own stream of the ChaCha generator keyed by `seed`.
    pub fn sample(m: &Mixture, n: usize, seed: u64, disorder: u64) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!("N = {n} must be at least 2")));
        }
        let total: u64 = m.active().map(|(p, _)| symmetric_len(n, p)).sum();
        if total > MAX_COEFFICIENTS {
            let p = m.max_degree();
            return Err(Error::Config(format!(
                "N = {n} with degree {p} needs {total} coefficients, above the budget of {MAX_COEFFICIENTS}"
            )));
        }
        let degrees = m
            .active()
            .map(|(p, c)| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream((disorder << 8) | p as u64);
                Degree::sample(n, p, c, &mut rng)
            })
            .collect();
        Ok(Self { n, h: m.h(), degrees })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn energy(&self, sigma: &[f64]) -> f64 {
        self.disorder_energy(sigma) + self.h * sigma.iter().sum::<f64>()
    }

    /// The Gaussian part `X_N(sigma)`.
    pub fn disorder_energy(&self, sigma: &[f64]) -> f64 {
        self.degrees
            .iter()
            .map(|d| d.scale * d.eval::<false>(sigma, &mut []))
            .sum()
    }

    /// Energy and Euclidean gradient.
    pub fn energy_and_gradient(&self, sigma: &[f64]) -> (f64, Vec<f64>) {
        let mut grad = vec![self.h; self.n];
        let mut part = vec![0.0; self.n];
        let mut terms = Vec::with_capacity(self.degrees.len());
        for d in &self.degrees {
            part.iter_mut().for_each(|x| *x = 0.0);
            terms.push(d.scale * d.eval::<true>(sigma, &mut part));
            for (g, x) in grad.iter_mut().zip(&part) {
                *g += d.scale * x;
            }
        }
        // same summation order as `energy`
        let e = terms.into_iter().sum::<f64>() + self.h * sigma.iter().sum::<f64>();
        (e, grad)
    }

    pub fn euclidean_gradient(&self, sigma: &[f64]) -> Vec<f64> {
        self.energy_and_gradient(sigma).1
    }

    /// The same disorder with coordinates relabelled:
    /// `H'(sigma) = H(sigma')` with `sigma'_i = sigma_{perm[i]}`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&i| i >= n || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::InvalidArgument("not a permutation".into()));
        }
        let degrees = self
            .degrees
            .iter()
            .map(|d| {
                let mut coeffs = vec![0.0; d.coeffs.len()];
                let mut idx = vec![0usize; d.p];
                let mut mapped = vec![0usize; d.p];
                for &a in &d.coeffs {
                    for (x, &i) in mapped.iter_mut().zip(&idx) {
                        *x = perm[i];
                    }
                    mapped.sort_unstable();
                    coeffs[rank_sorted(&mapped, n)] = a;
                    next_sorted(&mut idx, n);
                }
                Degree {
                    p: d.p,
                    scale: d.scale,
                    coeffs,
                }
            })
            .collect();
        Ok(Self { n, h: self.h, degrees })
    }

    /// The symmetric matrix `M` with `X_N(sigma) = sigma^T M sigma` for a
    /// pure degree-2 Hamiltonian, row-major.
    pub fn quadratic_form(&self) -> Option<Vec<f64>> {
        if self.degrees.len() != 1 || self.degrees[0].p != 2 {
            return None;
        }
        let d = &self.degrees[0];
        let n = self.n;
        let mut out = vec![0.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i..n {
                let a = d.scale * d.coeffs[k];
                if i == j {
                    out[i * n + i] = a;
                } else {
                    out[i * n + j] = 0.5 * a;
                    out[j * n + i] = 0.5 * a;
                }
                k += 1;
            }
        }
        Some(out)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Rescales onto the sphere of radius `sqrt(N)`.
pub fn retract(v: &mut [f64]) {
    let n = v.len() as f64;
    let norm = dot(v, v).sqrt();
    let f = n.sqrt() / norm;
    v.iter_mut().for_each(|x| *x *= f);
}

/// Tangential part `g - (g . sigma / N) sigma`.
pub fn tangential(g: &[f64], sigma: &[f64]) -> Vec<f64> {
    let c = dot(g, sigma) / sigma.len() as f64;
    g.iter().zip(sigma).map(|(a, s)| a - c * s).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ascent {
    pub sigma: Vec<f64>,
    pub energy: f64,
    pub steps: usize,
    pub converged: bool,
}

/// Projected gradient ascent with retraction. Trial steps start from the
/// Barzilai-Borwein length and are halved until the energy increases, so
/// accepted energies strictly increase.
pub fn ascend(h: &Hamiltonian, sigma0: &[f64], cfg: &SimConfig) -> Ascent {
    let n = h.n() as f64;
    let mut sigma = sigma0.to_vec();
    let (mut e, mut g) = h.energy_and_gradient(&sigma);
    let mut eta = cfg.step0;
    let mut prev: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut steps = 0;
    let mut converged = false;
    while steps < cfg.max_steps {
        let gt = tangential(&g, &sigma);
        if dot(&gt, &gt).sqrt() / n < cfg.grad_tol {
            converged = true;
            break;
        }
        if let Some((ps, pg)) = &prev {
            let ds: Vec<f64> = sigma.iter().zip(ps).map(|(a, b)| a - b).collect();
            let dg: Vec<f64> = gt.iter().zip(pg).map(|(a, b)| a - b).collect();
            let sy = dot(&ds, &dg);
            if sy < 0.0 {
                eta = dot(&ds, &ds) / -sy;
            }
        }
        let mut accepted = false;
        while eta >= MIN_STEP {
            let mut cand: Vec<f64> = sigma.iter().zip(&gt).map(|(s, d)| s + eta * d).collect();
            retract(&mut cand);
            let (ec, gc) = h.energy_and_gradient(&cand);
            if ec > e {
                prev = Some((std::mem::replace(&mut sigma, cand), gt));
                e = ec;
                g = gc;
                accepted = true;
                break;
            }
            eta *= 0.5;
        }
        if !accepted {
            break;
        }
        steps += 1;
    }
    Ascent {
        sigma,
        energy: e,
        steps,
        converged,
    }
}

/// Uniform starting point on the sphere for restart `restart` of disorder
/// sample `disorder`.
pub fn random_start(n: usize, seed: u64, disorder: u64, restart: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(RESTART_STREAM_BIT | (disorder << 32) | restart);
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    retract(&mut v);
    v
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_centers: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(bins: usize) -> Self {
        let w = 2.0 / bins as f64;
        Self {
            bin_centers: (0..bins).map(|i| -1.0 + (i as f64 + 0.5) * w).collect(),
            counts: vec![0; bins],
        }
    }

    pub fn add(&mut self, x: f64) {
        let bins = self.counts.len();
        let k = (((x + 1.0) / 2.0) * bins as f64).floor();
        let k = (k.max(0.0) as usize).min(bins - 1);
        self.counts[k] += 1;
    }

    pub fn merge(&mut self, other: &Histogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Near-maxima of one disorder sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Census {
    pub disorder: u64,
    pub best_energy_per_site: f64,
    /// Energy of every restart, in restart order.
    pub restart_energies: Vec<f64>,
    /// Retained distinct configurations, best first.
    pub configurations: Vec<Vec<f64>>,
    pub energies: Vec<f64>,
    /// `R(sigma, sigma') / N` among the retained configurations.
    pub overlap_matrix: Vec<Vec<f64>>,
    pub histogram: Histogram,
}

impl Census {
    /// Off-diagonal overlaps `i < j`.
    pub fn pair_overlaps(&self) -> Vec<f64> {
        let k = self.overlap_matrix.len();
        let mut out = Vec::new();
        for i in 0..k {
            for j in i + 1..k {
                out.push(self.overlap_matrix[i][j]);
            }
        }
        out
    }
}

/// Runs `cfg.n_restarts` ascents, keeps configurations within `eta * N` of
/// the best, removes those with overlap above `DEDUP_OVERLAP` with a better
/// one, and tabulates pairwise overlaps.
pub fn overlap_census(h: &Hamiltonian, cfg: &SimConfig, eta: f64, disorder: u64) -> Result<Census> {
    cfg.validate()?;
    if !(eta >= 0.0) {
        return Err(Error::Config(format!("eta = {eta} must be nonnegative")));
    }
    let n = h.n();
    let runs: Vec<Ascent> = (0..cfg.n_restarts as u64)
        .map(|r| ascend(h, &random_start(n, cfg.seed, disorder, r), cfg))
        .collect();
    let best = runs.iter().map(|a| a.energy).fold(f64::NEG_INFINITY, f64::max);
    let mut order: Vec<usize> = (0..runs.len())
        .filter(|&i| runs[i].energy > best - eta * n as f64 || runs[i].energy == best)
        .collect();
    order.sort_by(|&a, &b| runs[b].energy.total_cmp(&runs[a].energy).then(a.cmp(&b)));
    let nf = n as f64;
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        if kept
            .iter()
            .all(|&k| dot(&runs[k].sigma, &runs[i].sigma) / nf <= DEDUP_OVERLAP)
        {
            kept.push(i);
        }
    }
    let overlap_matrix: Vec<Vec<f64>> = kept
        .iter()
        .map(|&a| kept.iter().map(|&b| dot(&runs[a].sigma, &runs[b].sigma) / nf).collect())
        .collect();
    let mut histogram = Histogram::new(HISTOGRAM_BINS);
    for (i, row) in overlap_matrix.iter().enumerate() {
        for &r in &row[i + 1..] {
            histogram.add(r);
        }
    }
    Ok(Census {
        disorder,
        best_energy_per_site: best / nf,
        restart_energies: runs.iter().map(|a| a.energy).collect(),
        configurations: kept.iter().map(|&i| runs[i].sigma.clone()).collect(),
        energies: kept.iter().map(|&i| runs[i].energy).collect(),
        overlap_matrix,
        histogram,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimReport {
    pub config: SimConfig,
    pub eta: f64,
    /// Mean over disorder samples of the best energy per site.
    pub me_n_estimate: f64,
    pub samples: Vec<Census>,
    /// Pair overlaps of all samples combined.
    pub histogram: Histogram,
}

/// Census over `cfg.n_disorder_samples` independent Hamiltonians.
pub fn simulate(m: &Mixture, cfg: &SimConfig, eta: f64) -> Result<SimReport> {
    cfg.validate()?;
    let mut samples = Vec::with_capacity(cfg.n_disorder_samples);
    let mut histogram = Histogram::new(HISTOGRAM_BINS);
    for d in 0..cfg.n_disorder_samples as u64 {
        let h = Hamiltonian::sample(m, cfg.n, cfg.seed, d)?;
        let c = overlap_census(&h, cfg, eta, d)?;
        histogram.merge(&c.histogram);
        samples.push(c);
    }
    let me_n_estimate =
        samples.iter().map(|c| c.best_energy_per_site).sum::<f64>() / samples.len() as f64;
    Ok(SimReport {
        config: cfg.clone(),
        eta,
        me_n_estimate,
        samples,
        histogram,
    })
}
