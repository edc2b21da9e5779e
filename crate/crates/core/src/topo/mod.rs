//! Dense reference implementation of the topology-guided block.
//!
//! Given instance features `F` (N×D) and a connection matrix `M` (N×N,
//! entries in `[0, 1]`, `M[i][j]` scoring "end of i meets start of j"):
//!
//! ```text
//! F_succ  = M  · F
//! F_prede = Mᵀ · F
//! out     = mlp_fuse([F | mlp_succ(F_succ) | mlp_prede(F_prede)])
//! ```
//!
//! The connection head maps queries `Q` to end and start embeddings with two
//! MLPs and scores them by inner product, squashed with the logistic
//! function: `M = σ(E_e · E_sᵀ)`.
//!
//! Every forward pass has a matching analytic backward pass, verified by
//! [`grad_check`] against central differences.

mod block;
mod gradcheck;
mod mlp;

pub use block::{
    connection_scores, connection_scores_backward, random_instance, smooth_instance,
    topo_block_backward, topo_enhance, ConnectionGrads, TopoBlockParams, TopoGrads, TopoInstance,
};
pub use gradcheck::{
    grad_check, grad_check_connection, grad_check_with, GradCheckOptions, GradCheckReport,
};
pub use mlp::{mlp_forward, Activation, Linear, LinearGrads, MlpGrads, MlpParams};
