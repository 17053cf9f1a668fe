//! Direct solvers for the implicit time steps: Thomas elimination for the 1D
//! tridiagonal systems, banded LU with partial pivoting for 2D.

use crate::error::{Error, Result};

/// Solve a tridiagonal system in place. `sub[0]` and `sup[n-1]` are unused.
pub fn solve_tridiag(sub: &[f64], diag: &[f64], sup: &[f64], rhs: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(sub.len() == n && sup.len() == n && rhs.len() == n);
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = diag[0];
    if piv.abs() < 1e-300 {
        return Err(Error::SingularSystem("zero pivot at row 0".into()));
    }
    c[0] = sup[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - sub[i] * c[i - 1];
        if piv.abs() < 1e-300 {
            return Err(Error::SingularSystem(format!("zero pivot at row {i}")));
        }
        c[i] = sup[i] / piv;
        d[i] = (rhs[i] - sub[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

/// Banded matrix in LAPACK-style storage with room for pivoting fill-in:
/// row `i`, column `j` with |i-j| <= band lives at `data[(kl + ku + i - j) * n + j]`.
pub struct Banded {
    pub n: usize,
    pub kl: usize,
    pub ku: usize,
    data: Vec<f64>,
}

impl Banded {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Banded {
        Banded { n, kl, ku, data: vec![0.0; (2 * kl + ku + 1) * n] }
    }

    #[inline]
    fn slot(&self, i: usize, j: usize) -> usize {
        (self.kl + self.ku + i - j) * self.n + j
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        // fill-in from pivoting extends the upper band to ku + kl
        debug_assert!(i <= j + self.kl && j <= i + self.kl + self.ku, "outside band");
        let s = self.slot(i, j);
        self.data[s] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self.slot(i, j);
        self.data[s] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i > j + self.kl || j > i + self.kl + self.ku {
            return 0.0;
        }
        self.data[self.slot(i, j)]
    }

    /// y = A x (uses only the declared band, valid before factorization).
    pub fn matvec(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let lo = i.saturating_sub(self.kl);
            let hi = (i + self.ku).min(self.n - 1);
            let mut acc = 0.0;
            for j in lo..=hi {
                acc += self.get(i, j) * x[j];
            }
            y[i] = acc;
        }
    }

    /// LU factorization with partial pivoting; fill-in stays within the
    /// widened band. Returns the pivot permutation.
    pub fn factor(&mut self) -> Result<Vec<usize>> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let mut pivots = vec![0usize; n];
        for col in 0..n {
            // pivot search within the column's band
            let last = (col + kl).min(n - 1);
            let mut p = col;
            let mut best = self.get(col, col).abs();
            for row in col + 1..=last {
                let v = self.get(row, col).abs();
                if v > best {
                    best = v;
                    p = row;
                }
            }
            if best < 1e-300 {
                return Err(Error::SingularSystem(format!("zero pivot in column {col}")));
            }
            pivots[col] = p;
            if p != col {
                let hi = (col + kl + ku).min(n - 1);
                for j in col..=hi {
                    let a = self.get(col, j);
                    let b = self.get(p, j);
                    self.set(col, j, b);
                    self.set(p, j, a);
                }
            }
            let piv = self.get(col, col);
            for row in col + 1..=last {
                let m = self.get(row, col) / piv;
                self.set(row, col, m);
                if m != 0.0 {
                    let hi = (col + kl + ku).min(n - 1);
                    for j in col + 1..=hi {
                        let v = self.get(row, j) - m * self.get(col, j);
                        self.set(row, j, v);
                    }
                }
            }
        }
        Ok(pivots)
    }

    /// Solve after `factor`, reusing the permutation.
    pub fn solve_factored(&self, pivots: &[usize], rhs: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x = rhs.to_vec();
        for col in 0..n {
            let p = pivots[col];
            if p != col {
                x.swap(col, p);
            }
            let last = (col + self.kl).min(n - 1);
            for row in col + 1..=last {
                let m = self.get(row, col);
                x[row] -= m * x[col];
            }
        }
        for col in (0..n).rev() {
            let hi = (col + self.kl + self.ku).min(n - 1);
            let mut acc = x[col];
            for j in col + 1..=hi {
                acc -= self.get(col, j) * x[j];
            }
            x[col] = acc / self.get(col, col);
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn tridiag_solves_reference_system() {
        // A = [[2,1,0],[1,2,1],[0,1,2]], x = (1,2,3) -> b = (4, 8, 8)
        let x = solve_tridiag(
            &[0.0, 1.0, 1.0],
            &[2.0, 2.0, 2.0],
            &[1.0, 1.0, 0.0],
            &[4.0, 8.0, 8.0],
        )
        .unwrap();
        for (xi, ei) in x.iter().zip([1.0, 2.0, 3.0]) {
            assert!((xi - ei).abs() < 1e-13);
        }
    }

    #[test]
    fn banded_matches_dense_on_random_systems() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for trial in 0..20 {
            let n = 30;
            let kl = 4;
            let ku = 3;
            let mut a = Banded::zeros(n, kl, ku);
            let mut dense = vec![vec![0.0f64; n]; n];
            for i in 0..n {
                for j in i.saturating_sub(kl)..=(i + ku).min(n - 1) {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    let v = if i == j { v + 6.0 } else { v };
                    a.set(i, j, v);
                    dense[i][j] = v;
                }
            }
            let xref: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let mut rhs = vec![0.0; n];
            a.matvec(&xref, &mut rhs);
            let piv = a.factor().unwrap();
            let x = a.solve_factored(&piv, &rhs);
            for (xi, ei) in x.iter().zip(&xref) {
                assert!((xi - ei).abs() < 1e-10, "trial {trial}");
            }
        }
    }

    #[test]
    fn banded_pivots_on_weak_diagonal() {
        // forces a row swap: first pivot is much smaller than the subdiagonal
        let mut a = Banded::zeros(3, 1, 1);
        a.set(0, 0, 1e-14);
        a.set(0, 1, 1.0);
        a.set(1, 0, 1.0);
        a.set(1, 1, 1.0);
        a.set(1, 2, 1.0);
        a.set(2, 1, 1.0);
        a.set(2, 2, 3.0);
        let xref = [1.0, -2.0, 0.5];
        let mut rhs = vec![0.0; 3];
        a.matvec(&xref, &mut rhs);
        let piv = a.factor().unwrap();
        let x = a.solve_factored(&piv, &rhs);
        for (xi, ei) in x.iter().zip(&xref) {
            assert!((xi - ei).abs() < 1e-9);
        }
    }
}
