//! Dense LDL^T factorization. Production fallback for small diagonal blocks
//! and the independent oracle the sparse paths are tested against.

/// Row-major dense LDL^T (no pivoting; requires positive definiteness).
#[derive(Debug, Clone)]
pub struct DenseLdl {
    n: usize,
    /// Strictly lower triangle of L (unit diagonal implied), row-major.
    lower: Vec<f64>,
    diag: Vec<f64>,
}

impl DenseLdl {
    /// Factor a row-major dense matrix. Returns `None` when a pivot is not
    /// strictly positive.
    pub fn factor(a: &[f64], n: usize) -> Option<Self> {
        assert_eq!(a.len(), n * n);
        let mut lower = vec![0.0; n * n];
        let mut diag = vec![0.0; n];
        for j in 0..n {
            let mut d = a[j * n + j];
            for k in 0..j {
                d -= lower[j * n + k] * lower[j * n + k] * diag[k];
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            diag[j] = d;
            for i in (j + 1)..n {
                let mut v = a[i * n + j];
                for k in 0..j {
                    v -= lower[i * n + k] * lower[j * n + k] * diag[k];
                }
                lower[i * n + j] = v / d;
            }
        }
        Some(DenseLdl { n, lower, diag })
    }

    /// Solve in place: b <- A^-1 b.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        for i in 0..n {
            let mut v = b[i];
            for k in 0..i {
                v -= self.lower[i * n + k] * b[k];
            }
            b[i] = v;
        }
        for i in 0..n {
            b[i] /= self.diag[i];
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            for k in (i + 1)..n {
                v -= self.lower[k * n + i] * b[k];
            }
            b[i] = v;
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }
}

/// One-shot dense solve used as a test oracle throughout the crate.
pub fn solve_dense(a: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let ldl = DenseLdl::factor(a, n)?;
    let mut x = b.to_vec();
    ldl.solve(&mut x);
    Some(x)
}

/// Flatten a nested dense matrix (as produced by `to_dense`) to row-major.
pub fn flatten(a: &[Vec<f64>]) -> Vec<f64> {
    a.iter().flat_map(|row| row.iter().copied()).collect()
}
