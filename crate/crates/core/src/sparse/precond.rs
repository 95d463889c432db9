//! Block-Jacobi preconditioner: independent factorizations of the diagonal
//! blocks induced by a node partition, applied in parallel.

use std::ops::Range;

use rayon::prelude::*;

use super::dense::DenseLdl;
use super::ilu::Ilu0;
use super::ldl::SparseLdl;
use super::pcg::Preconditioner;
use super::{SparseError, SparseSymmetricMatrix};
use crate::par::WorkerPool;

/// Blocks at or below this size use the dense LDL^T fallback for exact
/// solves; larger blocks use the sparse factorization.
const DENSE_BLOCK_LIMIT: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlockStrategy {
    ExactLu,
    Ilu0,
}

impl std::fmt::Display for BlockStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BlockStrategy::ExactLu => write!(f, "exact_lu"),
            BlockStrategy::Ilu0 => write!(f, "ilu0"),
        }
    }
}

enum BlockSolver {
    Dense(DenseLdl),
    Sparse(SparseLdl),
    Ilu(Ilu0),
}

struct FactoredBlock {
    range: Range<usize>,
    // local CSR of the diagonal block
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    /// parent nnz slot for each local nnz slot
    value_map: Vec<usize>,
    solver: BlockSolver,
    /// cached exact factorization for ILU(0) blocks that hit a small pivot
    exact_fallback: Option<SparseLdl>,
    fell_back: bool,
}

impl FactoredBlock {
    fn n(&self) -> usize {
        self.range.end - self.range.start
    }

    fn extract(mat: &SparseSymmetricMatrix, range: Range<usize>) -> Self {
        let mut offsets = vec![0usize];
        let mut cols = Vec::new();
        let mut value_map = Vec::new();
        for i in range.clone() {
            let (rcols, _) = mat.row(i);
            let base = mat.row_offsets()[i];
            for (k, &j) in rcols.iter().enumerate() {
                if range.contains(&j) {
                    cols.push(j - range.start);
                    value_map.push(base + k);
                }
            }
            offsets.push(cols.len());
        }
        let vals = value_map.iter().map(|&p| mat.values()[p]).collect();
        FactoredBlock {
            range,
            offsets,
            cols,
            vals,
            value_map,
            solver: BlockSolver::Dense(DenseLdl::factor(&[], 0).unwrap()),
            exact_fallback: None,
            fell_back: false,
        }
    }

    fn dense_of_block(&self) -> Vec<f64> {
        let n = self.n();
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for p in self.offsets[i]..self.offsets[i + 1] {
                a[i * n + self.cols[p]] = self.vals[p];
            }
        }
        a
    }

    fn factor_exact(&self, block_id: usize) -> Result<BlockSolver, SparseError> {
        let n = self.n();
        if n <= DENSE_BLOCK_LIMIT {
            let a = self.dense_of_block();
            DenseLdl::factor(&a, n)
                .map(BlockSolver::Dense)
                .ok_or(SparseError::ZeroPivot {
                    block: block_id,
                    row: 0,
                })
        } else {
            let mut ldl = SparseLdl::symbolic(n, &self.offsets, &self.cols);
            ldl.factor(&self.offsets, &self.cols, &self.vals)
                .map_err(|row| SparseError::ZeroPivot {
                    block: block_id,
                    row,
                })?;
            Ok(BlockSolver::Sparse(ldl))
        }
    }

    fn factor(&mut self, block_id: usize, strategy: BlockStrategy) -> Result<(), SparseError> {
        let n = self.n();
        match strategy {
            BlockStrategy::ExactLu => {
                self.solver = self.factor_exact(block_id)?;
            }
            BlockStrategy::Ilu0 => {
                let attempt = Ilu0::prepare(n, &self.offsets, &self.cols).and_then(|mut ilu| {
                    match ilu.factor(n, &self.offsets, &self.cols, &self.vals) {
                        Ok(()) => Some(ilu),
                        Err(small) => {
                            log::debug!(
                                "ilu0 small pivot at local row {} of block {block_id}",
                                small.row
                            );
                            None
                        }
                    }
                });
                match attempt {
                    Some(ilu) => {
                        self.solver = BlockSolver::Ilu(ilu);
                        self.fell_back = false;
                    }
                    None => {
                        // Small or missing pivot: use an exact factorization
                        // of this block instead.
                        log::debug!("ilu0 fallback to exact factorization on block {block_id}");
                        if n > DENSE_BLOCK_LIMIT {
                            let mut ldl = match self.exact_fallback.take() {
                                Some(ldl) => ldl,
                                None => SparseLdl::symbolic(n, &self.offsets, &self.cols),
                            };
                            ldl.factor(&self.offsets, &self.cols, &self.vals).map_err(
                                |row| SparseError::ZeroPivot {
                                    block: block_id,
                                    row,
                                },
                            )?;
                            self.exact_fallback = Some(ldl.clone());
                            self.solver = BlockSolver::Sparse(ldl);
                        } else {
                            self.solver = self.factor_exact(block_id)?;
                        }
                        self.fell_back = true;
                    }
                }
            }
        }
        Ok(())
    }

    fn refresh(&mut self, mat: &SparseSymmetricMatrix) {
        for (local, &parent) in self.value_map.iter().enumerate() {
            self.vals[local] = mat.values()[parent];
        }
    }

    fn solve_into(&self, r: &[f64], out: &mut [f64]) {
        out.copy_from_slice(r);
        match &self.solver {
            BlockSolver::Dense(ldl) => ldl.solve(out),
            BlockSolver::Sparse(ldl) => ldl.solve(out),
            BlockSolver::Ilu(ilu) => ilu.solve(self.n(), &self.offsets, &self.cols, out),
        }
    }
}

/// Block-diagonal preconditioner with refreshable numeric values.
pub struct BlockJacobiPreconditioner {
    dim: usize,
    strategy: BlockStrategy,
    blocks: Vec<FactoredBlock>,
    pattern: u64,
}

/// Extract and factor the diagonal blocks of `mat` given contiguous block
/// ranges (which must tile `0..dim`).
pub fn factor_blocks(
    mat: &SparseSymmetricMatrix,
    block_ranges: &[Range<usize>],
    strategy: BlockStrategy,
    pool: &WorkerPool,
) -> Result<BlockJacobiPreconditioner, SparseError> {
    let mut cursor = 0usize;
    for r in block_ranges {
        if r.start != cursor {
            return Err(SparseError::InvalidStructure(
                "block ranges do not tile the matrix dimension".into(),
            ));
        }
        cursor = r.end;
    }
    if cursor != mat.dim() {
        return Err(SparseError::InvalidStructure(
            "block ranges do not tile the matrix dimension".into(),
        ));
    }

    let mut blocks: Vec<FactoredBlock> = block_ranges
        .iter()
        .map(|r| FactoredBlock::extract(mat, r.clone()))
        .collect();
    factor_all(&mut blocks, strategy, pool)?;
    Ok(BlockJacobiPreconditioner {
        dim: mat.dim(),
        strategy,
        blocks,
        pattern: mat.pattern_fingerprint(),
    })
}

fn factor_all(
    blocks: &mut [FactoredBlock],
    strategy: BlockStrategy,
    pool: &WorkerPool,
) -> Result<(), SparseError> {
    if pool.workers() > 1 {
        blocks
            .par_iter_mut()
            .enumerate()
            .map(|(id, b)| b.factor(id, strategy))
            .collect::<Result<Vec<_>, _>>()?;
    } else {
        for (id, b) in blocks.iter_mut().enumerate() {
            b.factor(id, strategy)?;
        }
    }
    Ok(())
}

impl BlockJacobiPreconditioner {
    /// Numeric refactorization with new matrix values; the sparsity pattern
    /// and all symbolic structure are reused.
    pub fn refresh_values(
        &mut self,
        mat: &SparseSymmetricMatrix,
        pool: &WorkerPool,
    ) -> Result<(), SparseError> {
        if mat.dim() != self.dim || mat.pattern_fingerprint() != self.pattern {
            return Err(SparseError::PatternChanged);
        }
        for b in &mut self.blocks {
            b.refresh(mat);
        }
        factor_all(&mut self.blocks, self.strategy, pool)
    }

    pub fn block_ranges(&self) -> Vec<Range<usize>> {
        self.blocks.iter().map(|b| b.range.clone()).collect()
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    /// True for blocks where ILU(0) hit a small pivot and an exact
    /// factorization is in use instead.
    pub fn fallback_blocks(&self) -> Vec<usize> {
        self.blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.fell_back)
            .map(|(i, _)| i)
            .collect()
    }
}

impl Preconditioner for BlockJacobiPreconditioner {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, pool: &WorkerPool, r: &[f64], z: &mut [f64]) {
        assert_eq!(r.len(), self.dim);
        assert_eq!(z.len(), self.dim);
        let ranges: Vec<Range<usize>> = self.block_ranges();
        crate::par::for_each_chunk_mut(pool, &ranges, z, |range, out| {
            // Block index recovered by range start; ranges are sorted.
            let idx = self
                .blocks
                .binary_search_by_key(&range.start, |b| b.range.start)
                .unwrap();
            self.blocks[idx].solve_into(&r[range], out);
        });
    }
}
