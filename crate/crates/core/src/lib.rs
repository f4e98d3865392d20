//! Formulas of recursive Hennessy-Milner logic over data words, and the
//! machinery to run them: syntactic fragment classification, a guarding
//! transformation for universal quantifiers, brute-force fixpoint evaluation
//! over lasso traces, annotation witnesses, symbolic runtime monitors with
//! equality constraint stores, and translations to and from alternating
//! register automata with existential guessing.
//!
//! The data domain is an infinite set of opaque tokens whose only observable
//! relation is equality. Everything in this crate is pure computation over
//! immutable values; IO, file formats and the command line live in the
//! companion `datamon` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod ast;
pub mod budget;
pub mod fragments;
pub mod guard;
pub mod monitor;
pub mod norm;
pub mod oracle;
pub mod parse;
pub mod ra;
pub mod render;
pub mod trace;

pub use ast::{BExpr, DataEnv, DataTerm, DataValue, DataVar, Formula, RecVar};
pub use budget::{Budget, BudgetExceeded};
pub use parse::parse_formula;
pub use render::render_formula;
pub use trace::{FiniteTrace, LassoTrace};
