//! Runtime monitors: terms, the synthesis from the least-fixpoint
//! fragment, a symbolic small-step runtime over equality constraint
//! stores, and two-verdict monitoring for the recursion-free fragment.

mod hmld;
mod runtime;
pub mod store;
mod term;

pub use hmld::{classify_prefix, BoundedClassifier, HmldError, TwoVerdict};
pub use runtime::{
    canonical_config, run, run_violation, run_with_env, step, tau_closure, tau_closure_config,
    tau_closure_shuffled, CTree, Config, ConfigLeaf, MonitorSession, RunOutcome, RuntimeError,
    SymbolicEnv, Verdict, ViolationError,
};
pub use store::{ConstraintStore, SymValue};
pub use term::{
    parse_monitor, render_monitor, subst_rec_monitor, synthesize, tau_divergent, Monitor,
    SynthesisError,
};
