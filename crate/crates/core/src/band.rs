//! Symmetric positive definite pentadiagonal systems.

/// Pentadiagonal symmetric matrix stored by diagonals:
/// `d0[i] = a[i][i]`, `d1[i] = a[i][i+1]`, `d2[i] = a[i][i+2]`.
#[derive(Debug, Clone)]
pub(crate) struct Penta {
    pub d0: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
}

impl Penta {
    pub fn zeros(n: usize) -> Self {
        Self {
            d0: vec![0.0; n],
            d1: vec![0.0; n],
            d2: vec![0.0; n],
        }
    }

    pub fn n(&self) -> usize {
        self.d0.len()
    }

    /// Adds `v` to the symmetric pair of entries `(p, q)`, `(q, p)`.
    pub fn add_sym(&mut self, p: usize, q: usize, v: f64) {
        let (a, b) = (p.min(q), p.max(q));
        match b - a {
            0 => self.d0[a] += v,
            1 => self.d1[a] += v,
            2 => self.d2[a] += v,
            _ => panic!("entry ({p}, {q}) outside the band"),
        }
    }

    /// Fixes unknown `v` to `value`, eliminating it from the other rows.
    pub fn fix(&mut self, v: usize, value: f64, rhs: &mut [f64]) {
        if v >= 1 {
            rhs[v - 1] -= self.d1[v - 1] * value;
            self.d1[v - 1] = 0.0;
        }
        if v >= 2 {
            rhs[v - 2] -= self.d2[v - 2] * value;
            self.d2[v - 2] = 0.0;
        }
        if v + 1 < self.n() {
            rhs[v + 1] -= self.d1[v] * value;
            self.d1[v] = 0.0;
        }
        if v + 2 < self.n() {
            rhs[v + 2] -= self.d2[v] * value;
            self.d2[v] = 0.0;
        }
        self.d0[v] = 1.0;
        rhs[v] = value;
    }

    /// Solves `A x = rhs` by an `L D L^T` factorization; returns `None` when a
    /// pivot is not positive.
    pub fn solve(&self, rhs: &[f64]) -> Option<Vec<f64>> {
        let n = self.n();
        let mut d = vec![0.0; n];
        // l1[i] = L[i][i-1], l2[i] = L[i][i-2]
        let mut l1 = vec![0.0; n];
        let mut l2 = vec![0.0; n];
        for j in 0..n {
            let mut dj = self.d0[j];
            if j >= 1 {
                dj -= l1[j] * l1[j] * d[j - 1];
            }
            if j >= 2 {
                dj -= l2[j] * l2[j] * d[j - 2];
            }
            if !(dj > 0.0) || !dj.is_finite() {
                return None;
            }
            d[j] = dj;
            if j + 1 < n {
                let mut a = self.d1[j];
                if j >= 1 {
                    a -= l2[j + 1] * l1[j] * d[j - 1];
                }
                l1[j + 1] = a / dj;
            }
            if j + 2 < n {
                l2[j + 2] = self.d2[j] / dj;
            }
        }
        let mut y = rhs.to_vec();
        for i in 0..n {
            if i >= 1 {
                y[i] -= l1[i] * y[i - 1];
            }
            if i >= 2 {
                y[i] -= l2[i] * y[i - 2];
            }
        }
        for i in 0..n {
            y[i] /= d[i];
        }
        for i in (0..n).rev() {
            if i + 1 < n {
                y[i] -= l1[i + 1] * y[i + 1];
            }
            if i + 2 < n {
                y[i] -= l2[i + 2] * y[i + 2];
            }
        }
        Some(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn matches_dense_solve() {
        let n = 9;
        let mut p = Penta::zeros(n);
        for i in 0..n {
            p.d0[i] = 6.0 + i as f64;
            if i + 1 < n {
                p.d1[i] = -1.0 + 0.1 * i as f64;
            }
            if i + 2 < n {
                p.d2[i] = 0.5;
            }
        }
        p.add_sym(3, 3, 4.0);
        p.add_sym(5, 3, 2.0);
        p.add_sym(4, 5, -1.0);
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            dense[(i, i)] = p.d0[i];
            if i + 1 < n {
                dense[(i, i + 1)] = p.d1[i];
                dense[(i + 1, i)] = p.d1[i];
            }
            if i + 2 < n {
                dense[(i, i + 2)] = p.d2[i];
                dense[(i + 2, i)] = p.d2[i];
            }
        }
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = p.solve(&rhs).unwrap();
        let expect = dense.lu().solve(&DVector::from_vec(rhs)).unwrap();
        for i in 0..n {
            assert!((x[i] - expect[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_indefinite() {
        let mut p = Penta::zeros(3);
        p.d0 = vec![1.0, -1.0, 1.0];
        assert!(p.solve(&[1.0, 1.0, 1.0]).is_none());
    }

    #[test]
    fn fixed_unknown() {
        let n = 7;
        let mut p = Penta::zeros(n);
        for i in 0..n {
            p.d0[i] = 5.0;
            if i + 1 < n {
                p.d1[i] = -1.0;
            }
            if i + 2 < n {
                p.d2[i] = 0.3;
            }
        }
        let orig = p.clone();
        let mut rhs: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let keep = rhs.clone();
        p.fix(3, 0.7, &mut rhs);
        let x = p.solve(&rhs).unwrap();
        assert_eq!(x[3], 0.7);
        for r in (0..n).filter(|&r| r != 3) {
            let mut ax = orig.d0[r] * x[r];
            if r + 1 < n {
                ax += orig.d1[r] * x[r + 1];
            }
            if r >= 1 {
                ax += orig.d1[r - 1] * x[r - 1];
            }
            if r + 2 < n {
                ax += orig.d2[r] * x[r + 2];
            }
            if r >= 2 {
                ax += orig.d2[r - 2] * x[r - 2];
            }
            assert!((ax - keep[r]).abs() < 1e-12);
        }
    }
}
