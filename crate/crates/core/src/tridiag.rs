//! Tridiagonal systems and the Thomas algorithm.

use crate::error::{Error, Result};

/// Tridiagonal matrix stored by diagonals.
///
/// Row `i` reads `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1]`;
/// `lower[0]` and `upper[n-1]` are ignored (and kept at zero).
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `y = A x`
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        let n = self.len();
        assert_eq!(x.len(), n);
        assert_eq!(y.len(), n);
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
    }

    /// Adds `shift[i]` to the diagonal.
    pub fn add_diagonal(&mut self, shift: &[f64]) {
        for (d, s) in self.diag.iter_mut().zip(shift) {
            *d += s;
        }
    }

    pub fn add_scalar_diagonal(&mut self, shift: f64) {
        for d in &mut self.diag {
            *d += shift;
        }
    }

    /// Solves `A x = rhs` in place using the Thomas algorithm.
    ///
    /// No pivoting: intended for diagonally dominant (M-matrix) systems.
    pub fn solve_in_place(&self, rhs: &mut [f64]) -> Result<()> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        if n == 0 {
            return Ok(());
        }
        let mut c = vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::SingularSystem(0));
        }
        c[0] = self.upper[0] / pivot;
        rhs[0] /= pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i] * c[i - 1];
            if pivot == 0.0 || !pivot.is_finite() {
                return Err(Error::SingularSystem(i));
            }
            c[i] = if i + 1 < n { self.upper[i] / pivot } else { 0.0 };
            rhs[i] = (rhs[i] - self.lower[i] * rhs[i - 1]) / pivot;
        }
        for i in (0..n - 1).rev() {
            rhs[i] -= c[i] * rhs[i + 1];
        }
        Ok(())
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        self.solve_in_place(&mut x)?;
        Ok(x)
    }

    /// Checks the M-matrix sign pattern and strict row diagonal dominance.
    pub fn is_m_matrix(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            let lo = if i > 0 { self.lower[i] } else { 0.0 };
            let up = if i + 1 < n { self.upper[i] } else { 0.0 };
            lo <= 0.0 && up <= 0.0 && self.diag[i] > lo.abs() + up.abs()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense Gaussian elimination with partial pivoting.
    #[allow(clippy::needless_range_loop)]
    fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
        let n = b.len();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i][k].abs().partial_cmp(&a[j][k].abs()).unwrap())
                .unwrap();
            a.swap(k, p);
            b.swap(k, p);
            for i in k + 1..n {
                let f = a[i][k] / a[k][k];
                for j in k..n {
                    a[i][j] -= f * a[k][j];
                }
                b[i] -= f * b[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
            x[i] = (b[i] - s) / a[i][i];
        }
        x
    }

    fn to_dense(t: &Tridiagonal) -> Vec<Vec<f64>> {
        let n = t.len();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = t.diag[i];
            if i > 0 {
                a[i][i - 1] = t.lower[i];
            }
            if i + 1 < n {
                a[i][i + 1] = t.upper[i];
            }
        }
        a
    }

    #[test]
    fn matches_dense_oracle_on_random_dominant_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(1..=16);
            let mut t = Tridiagonal::zeros(n);
            for i in 0..n {
                if i > 0 {
                    t.lower[i] = rng.gen_range(-1.0..1.0);
                }
                if i + 1 < n {
                    t.upper[i] = rng.gen_range(-1.0..1.0);
                }
                t.diag[i] = t.lower[i].abs() + t.upper[i].abs() + rng.gen_range(0.1..2.0);
                if rng.gen_bool(0.3) {
                    t.diag[i] = -t.diag[i];
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let x = t.solve(&b).unwrap();
            let y = dense_solve(to_dense(&t), b.clone());
            let scale = y.iter().fold(1e-300_f64, |m, v| m.max(v.abs()));
            for (a, b) in x.iter().zip(&y) {
                assert!((a - b).abs() <= 1e-12 * scale, "{a} vs {b}");
            }
        }
    }

    #[test]
    fn apply_inverts_solve() {
        let mut t = Tridiagonal::zeros(5);
        t.diag.fill(4.0);
        t.lower[1..].fill(-1.0);
        t.upper[..4].fill(-1.0);
        let x = vec![1.0, -2.0, 0.5, 3.0, 0.0];
        let mut b = vec![0.0; 5];
        t.apply(&x, &mut b);
        let y = t.solve(&b).unwrap();
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(t.is_m_matrix());
    }

    #[test]
    fn zero_pivot_is_reported() {
        let t = Tridiagonal::zeros(3);
        assert!(matches!(t.solve(&[1.0, 1.0, 1.0]), Err(Error::SingularSystem(0))));
    }
}
