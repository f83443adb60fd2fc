//! Dense C-SVC and epsilon-SVR trained by sequential minimal optimization.

mod io;
mod kernel;
mod metrics;
mod model;
pub mod oracle;
mod smo;

pub use kernel::{InnerProducts, KernelKind, KernelSpec, GRAM_CACHE_LIMIT};
pub use metrics::{evaluate, Metrics};
pub use model::{
    kernel_for, train_svc, train_svc_with, train_svr, train_svr_with, Mode, SvmModel, SvmParams,
};
pub use oracle::{brute_force_dual, OracleSolution};
pub use smo::default_budget;
