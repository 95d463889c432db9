//! Parallel undirected s-t min-cut solver.
//!
//! The cut problem is posed as an l1 minimization over node potentials and
//! solved by iteratively reweighted least squares: each outer iteration
//! reweights the edges from the current voltage vector and solves a reduced
//! Laplacian system with preconditioned conjugate gradients (block-Jacobi,
//! warm-started). The final voltages are rounded to a binary cut either by a
//! sweep cut or by coarsening the polarized nodes into super-terminals and
//! solving the small remainder exactly.
//!
//! Modules follow the pipeline: [`graph`] holds the validated instance,
//! [`partition`] produces the block structure, [`sparse`] solves the linear
//! systems, [`irls`] runs the outer loop, [`rounding`] extracts cuts,
//! [`maxflow`] is the exact combinatorial solver (rounding backend and test
//! oracle), [`spectral`] computes the eigenvalue diagnostics, and
//! [`pipeline`] ties everything together for the CLI.

pub mod formats;
pub mod gen;
pub mod graph;
pub mod irls;
pub mod maxflow;
pub mod par;
pub mod partition;
pub mod pipeline;
pub mod rounding;
pub mod sparse;
pub mod spectral;
