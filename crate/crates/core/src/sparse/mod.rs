//! Sparse symmetric matrices and the parallel solver stack: block-Jacobi
//! preconditioning (exact per-block factorization or ILU(0)) and conjugate
//! gradients with warm starts.
//!
//! The sparsity pattern of a matrix is fixed at construction; IRLS iterations
//! only rewrite values. Preconditioners exploit that by doing symbolic work
//! once and refreshing numerics in place.

pub mod dense;
mod ilu;
mod ldl;
pub mod mm;
mod pcg;
mod precond;

pub use pcg::{pcg_solve, IdentityPreconditioner, PcgNorm, PcgReport, Preconditioner};
pub use precond::{factor_blocks, BlockJacobiPreconditioner, BlockStrategy};

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use crate::par::{self, WorkerPool};

#[derive(Debug, Clone, PartialEq)]
pub enum SparseError {
    /// Triplet input is not structurally symmetric or indexes out of range.
    InvalidStructure(String),
    /// A diagonal pivot vanished during exact factorization (matrix not
    /// positive definite on a block).
    ZeroPivot { block: usize, row: usize },
    /// refresh_values called with a matrix whose sparsity pattern differs
    /// from the one factored.
    PatternChanged,
    PreconditionerDimensionMismatch { matrix: usize, preconditioner: usize },
    DimensionMismatch { expected: usize, got: usize },
    /// p^T A p <= 0 inside PCG: the operator is not positive definite.
    BreakdownNonSpd { iteration: usize },
}

impl fmt::Display for SparseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SparseError::InvalidStructure(msg) => write!(f, "invalid matrix structure: {msg}"),
            SparseError::ZeroPivot { block, row } => {
                write!(f, "zero pivot in block {block} at local row {row}")
            }
            SparseError::PatternChanged => {
                write!(f, "matrix sparsity pattern changed since factorization")
            }
            SparseError::PreconditionerDimensionMismatch {
                matrix,
                preconditioner,
            } => write!(
                f,
                "preconditioner dimension {preconditioner} does not match matrix dimension {matrix}"
            ),
            SparseError::DimensionMismatch { expected, got } => {
                write!(f, "vector length {got}, expected {expected}")
            }
            SparseError::BreakdownNonSpd { iteration } => {
                write!(f, "non-SPD breakdown in PCG at iteration {iteration}")
            }
        }
    }
}

impl std::error::Error for SparseError {}

/// Symmetric sparse matrix in CSR form with a frozen pattern.
///
/// Entry (i, j) is present iff (j, i) is present; both carry the same value.
/// Column indices are sorted within each row and the diagonal slot exists in
/// every row that has any entry.
#[derive(Debug, Clone)]
pub struct SparseSymmetricMatrix {
    dim: usize,
    row_offsets: Vec<usize>,
    col_indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseSymmetricMatrix {
    /// Build from triplets. Each off-diagonal pair may be given once (the
    /// mirrored entry is inserted automatically) or twice with equal values;
    /// duplicates are summed before mirroring is checked.
    pub fn from_triplets(
        dim: usize,
        triplets: &[(usize, usize, f64)],
    ) -> Result<Self, SparseError> {
        let mut map: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        for &(i, j, v) in triplets {
            if i >= dim || j >= dim {
                return Err(SparseError::InvalidStructure(format!(
                    "index ({i},{j}) out of range for dimension {dim}"
                )));
            }
            *map.entry((i.min(j), i.max(j))).or_insert(0.0) += v;
        }
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); dim];
        for (&(i, j), &v) in &map {
            rows[i].push((j, v));
            if i != j {
                rows[j].push((i, v));
            }
        }
        let mut row_offsets = Vec::with_capacity(dim + 1);
        let mut col_indices = Vec::new();
        let mut values = Vec::new();
        row_offsets.push(0);
        for row in &mut rows {
            row.sort_unstable_by_key(|&(j, _)| j);
            for &(j, v) in row.iter() {
                col_indices.push(j);
                values.push(v);
            }
            row_offsets.push(col_indices.len());
        }
        Ok(SparseSymmetricMatrix {
            dim,
            row_offsets,
            col_indices,
            values,
        })
    }

    /// Construct from raw CSR arrays. Used by assembly code that builds the
    /// permuted reduced Laplacian pattern directly.
    pub fn from_csr(
        dim: usize,
        row_offsets: Vec<usize>,
        col_indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self, SparseError> {
        if row_offsets.len() != dim + 1 || col_indices.len() != values.len() {
            return Err(SparseError::InvalidStructure(
                "inconsistent CSR array lengths".into(),
            ));
        }
        let mat = SparseSymmetricMatrix {
            dim,
            row_offsets,
            col_indices,
            values,
        };
        if !mat.is_structurally_symmetric() {
            return Err(SparseError::InvalidStructure(
                "pattern is not symmetric".into(),
            ));
        }
        Ok(mat)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.col_indices.len()
    }

    pub fn row_offsets(&self) -> &[usize] {
        &self.row_offsets
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col_indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Mutable access to values only; the pattern stays frozen.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Split borrow: immutable pattern arrays plus mutable values.
    pub fn pattern_and_values_mut(&mut self) -> (&[usize], &[usize], &mut [f64]) {
        (&self.row_offsets, &self.col_indices, &mut self.values)
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let r = self.row_offsets[i]..self.row_offsets[i + 1];
        (&self.col_indices[r.clone()], &self.values[r])
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(k) => vals[k],
            Err(_) => 0.0,
        }
    }

    fn is_structurally_symmetric(&self) -> bool {
        for i in 0..self.dim {
            let (cols, _) = self.row(i);
            let mut prev = None;
            for &j in cols {
                if j >= self.dim || prev.is_some_and(|p| p >= j) {
                    return false;
                }
                prev = Some(j);
                let (jcols, _) = self.row(j);
                if jcols.binary_search(&i).is_err() {
                    return false;
                }
            }
        }
        true
    }

    /// Values-level symmetry check (pattern symmetry is structural).
    pub fn is_symmetric(&self, tol: f64) -> bool {
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if (self.get(j, i) - v).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// 64-bit fingerprint of the sparsity pattern, used to detect pattern
    /// drift between factorization and refresh.
    pub fn pattern_fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |x: u64| {
            h ^= x;
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        };
        mix(self.dim as u64);
        for &o in &self.row_offsets {
            mix(o as u64);
        }
        for &c in &self.col_indices {
            mix(c as u64);
        }
        h
    }

    /// y = A x, data-parallel over the fixed chunk decomposition.
    pub fn matvec(&self, pool: &WorkerPool, chunks: &[Range<usize>], x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        let offsets = &self.row_offsets;
        let cols = &self.col_indices;
        let vals = &self.values;
        par::for_each_chunk_mut(pool, chunks, y, |range, out| {
            for (k, i) in range.into_iter().enumerate() {
                let mut acc = 0.0;
                for p in offsets[i]..offsets[i + 1] {
                    acc += vals[p] * x[cols[p]];
                }
                out[k] = acc;
            }
        });
    }

    /// Serial matvec convenience for tests and small systems.
    pub fn matvec_serial(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim];
        self.matvec(&WorkerPool::serial(), &par::chunk_len(self.dim), x, &mut y);
        y
    }

    /// Symmetric permutation: entry (i, j) moves to (perm[i], perm[j]).
    pub fn permute(&self, perm: &[usize]) -> Result<Self, SparseError> {
        if perm.len() != self.dim {
            return Err(SparseError::DimensionMismatch {
                expected: self.dim,
                got: perm.len(),
            });
        }
        let mut triplets = Vec::with_capacity(self.nnz());
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                if j >= i {
                    triplets.push((perm[i], perm[j], v));
                }
            }
        }
        SparseSymmetricMatrix::from_triplets(self.dim, &triplets)
    }

    /// Dense copy for small-system oracles.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.dim]; self.dim];
        for i in 0..self.dim {
            let (cols, vals) = self.row(i);
            for (&j, &v) in cols.iter().zip(vals) {
                a[i][j] = v;
            }
        }
        a
    }
}

/// Permute a vector into the reordered index space: out[perm[i]] = x[i].
pub fn permute_vec(x: &[f64], perm: &[usize]) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for (i, &p) in perm.iter().enumerate() {
        out[p] = x[i];
    }
    out
}

/// Undo `permute_vec`: out[i] = x[perm[i]].
pub fn unpermute_vec(x: &[f64], perm: &[usize]) -> Vec<f64> {
    perm.iter().map(|&p| x[p]).collect()
}
