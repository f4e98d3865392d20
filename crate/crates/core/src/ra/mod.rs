//! Alternating register automata with existential guessing: the model,
//! word membership, translations to and from monitors, liveness by type
//! abstraction, and the violation-optimal detector it enables.

pub mod automaton;
mod detector;
mod liveness;
mod member;
mod translate;

pub use automaton::{
    AutomatonError, Label, LocKind, Location, RegisterAutomaton, Transition,
};
pub use detector::{
    optimal_violation_detector, BadPrefixDetector, DetectorError, OptimalMonitor,
};
pub use liveness::{
    guard_holds, nra_liveness, partitions, partitions_after_guess, LivenessError, RegPartition,
    StarChoice,
};
pub use member::{ra_member, ra_member_budgeted, MemberError};
pub use translate::{monitor_to_ra, ra_to_monitor, unravel, TranslateError};
