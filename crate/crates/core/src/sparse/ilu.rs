//! Incomplete LU with zero fill-in on a local CSR block.
//!
//! L (unit diagonal) occupies the strictly-lower slots of the pattern, U the
//! diagonal and upper slots. No symbolic phase is needed: the factor pattern
//! is the block pattern itself.

/// Relative pivot floor: pivots smaller than this times the row magnitude
/// trigger fallback to an exact factorization of the block.
pub const PIVOT_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone)]
pub struct Ilu0 {
    /// Position of the diagonal entry in each row.
    diag_pos: Vec<usize>,
    luval: Vec<f64>,
}

#[derive(Debug)]
pub struct SmallPivot {
    pub row: usize,
}

impl Ilu0 {
    /// Locate diagonal slots; fails if a row lacks its diagonal entry.
    pub fn prepare(n: usize, offsets: &[usize], cols: &[usize]) -> Option<Self> {
        let mut diag_pos = Vec::with_capacity(n);
        for i in 0..n {
            let p = (offsets[i]..offsets[i + 1]).find(|&p| cols[p] == i)?;
            diag_pos.push(p);
        }
        Some(Ilu0 {
            diag_pos,
            luval: Vec::new(),
        })
    }

    pub fn factor(
        &mut self,
        n: usize,
        offsets: &[usize],
        cols: &[usize],
        vals: &[f64],
    ) -> Result<(), SmallPivot> {
        self.luval.clear();
        self.luval.extend_from_slice(vals);
        let lu = &mut self.luval;
        for i in 0..n {
            let row_mag = (offsets[i]..offsets[i + 1])
                .map(|p| vals[p].abs())
                .fold(0.0f64, f64::max);
            let floor = PIVOT_FLOOR * row_mag.max(f64::MIN_POSITIVE);
            for pk in offsets[i]..self.diag_pos[i] {
                let k = cols[pk];
                let pivot = lu[self.diag_pos[k]];
                if pivot.abs() < floor {
                    return Err(SmallPivot { row: k });
                }
                lu[pk] /= pivot;
                let mult = lu[pk];
                // subtract mult * (row k, cols > k) wherever row i has the slot
                let mut pi = pk + 1;
                let row_i_end = offsets[i + 1];
                for p in (self.diag_pos[k] + 1)..offsets[k + 1] {
                    let j = cols[p];
                    while pi < row_i_end && cols[pi] < j {
                        pi += 1;
                    }
                    if pi == row_i_end {
                        break;
                    }
                    if cols[pi] == j {
                        lu[pi] -= mult * lu[p];
                    }
                }
            }
            if lu[self.diag_pos[i]].abs() < floor {
                return Err(SmallPivot { row: i });
            }
        }
        Ok(())
    }

    /// Solve (LU) z = r in place.
    pub fn solve(&self, n: usize, offsets: &[usize], cols: &[usize], b: &mut [f64]) {
        for i in 0..n {
            let mut v = b[i];
            for p in offsets[i]..self.diag_pos[i] {
                v -= self.luval[p] * b[cols[p]];
            }
            b[i] = v;
        }
        for i in (0..n).rev() {
            let mut v = b[i];
            for p in (self.diag_pos[i] + 1)..offsets[i + 1] {
                v -= self.luval[p] * b[cols[p]];
            }
            b[i] = v / self.luval[self.diag_pos[i]];
        }
    }
}
