//! Up-looking sparse LDL^T factorization for SPD diagonal blocks.
//!
//! The elimination tree and column counts are computed once per pattern; a
//! numeric refactorization rewrites L and D in the preallocated storage.

const NONE: usize = usize::MAX;

#[derive(Debug, Clone)]
pub struct SparseLdl {
    n: usize,
    parent: Vec<usize>,
    /// Column pointers of L (strict lower triangle, CSC).
    lp: Vec<usize>,
    li: Vec<usize>,
    lx: Vec<f64>,
    d: Vec<f64>,
    // scratch reused across refactorizations
    lnz: Vec<usize>,
    y: Vec<f64>,
    pattern: Vec<usize>,
    flag: Vec<usize>,
}

impl SparseLdl {
    /// Symbolic analysis from a local symmetric CSR pattern (sorted columns).
    /// Only entries with `col <= row` are read.
    pub fn symbolic(n: usize, offsets: &[usize], cols: &[usize]) -> Self {
        let mut parent = vec![NONE; n];
        let mut flag = vec![NONE; n];
        let mut lnz = vec![0usize; n];
        for k in 0..n {
            parent[k] = NONE;
            flag[k] = k;
            for p in offsets[k]..offsets[k + 1] {
                let mut i = cols[p];
                if i > k {
                    break;
                }
                while flag[i] != k {
                    if parent[i] == NONE {
                        parent[i] = k;
                    }
                    lnz[i] += 1;
                    flag[i] = k;
                    i = parent[i];
                }
            }
        }
        let mut lp = vec![0usize; n + 1];
        for k in 0..n {
            lp[k + 1] = lp[k] + lnz[k];
        }
        let cap = lp[n];
        SparseLdl {
            n,
            parent,
            lp,
            li: vec![0; cap],
            lx: vec![0.0; cap],
            d: vec![0.0; n],
            lnz,
            y: vec![0.0; n],
            pattern: vec![0; n],
            flag,
        }
    }

    /// Numeric factorization. Returns the offending row on a non-positive
    /// pivot (block not positive definite).
    pub fn factor(
        &mut self,
        offsets: &[usize],
        cols: &[usize],
        vals: &[f64],
    ) -> Result<(), usize> {
        let n = self.n;
        self.y.iter_mut().for_each(|v| *v = 0.0);
        for k in 0..n {
            self.y[k] = 0.0;
            let mut top = n;
            self.flag[k] = k;
            self.lnz[k] = 0;
            for p in offsets[k]..offsets[k + 1] {
                let i0 = cols[p];
                if i0 > k {
                    break;
                }
                self.y[i0] += vals[p];
                let mut len = 0;
                let mut i = i0;
                while self.flag[i] != k {
                    self.pattern[len] = i;
                    len += 1;
                    self.flag[i] = k;
                    i = self.parent[i];
                }
                while len > 0 {
                    len -= 1;
                    top -= 1;
                    self.pattern[top] = self.pattern[len];
                }
            }
            self.d[k] = self.y[k];
            self.y[k] = 0.0;
            for s in top..n {
                let i = self.pattern[s];
                let yi = self.y[i];
                self.y[i] = 0.0;
                let p2 = self.lp[i] + self.lnz[i];
                for p in self.lp[i]..p2 {
                    self.y[self.li[p]] -= self.lx[p] * yi;
                }
                let l_ki = yi / self.d[i];
                self.d[k] -= l_ki * yi;
                self.li[p2] = k;
                self.lx[p2] = l_ki;
                self.lnz[i] += 1;
            }
            if !(self.d[k] > 0.0) || !self.d[k].is_finite() {
                return Err(k);
            }
        }
        Ok(())
    }

    /// Solve in place: b <- A^-1 b.
    pub fn solve(&self, b: &mut [f64]) {
        let n = self.n;
        for j in 0..n {
            let bj = b[j];
            for p in self.lp[j]..self.lp[j] + self.lnz[j] {
                b[self.li[p]] -= self.lx[p] * bj;
            }
        }
        for j in 0..n {
            b[j] /= self.d[j];
        }
        for j in (0..n).rev() {
            let mut bj = b[j];
            for p in self.lp[j]..self.lp[j] + self.lnz[j] {
                bj -= self.lx[p] * b[self.li[p]];
            }
            b[j] = bj;
        }
    }

}
