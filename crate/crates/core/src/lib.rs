//! Session pi-calculus and linear pi-calculus: syntax, typing, reduction,
//! the continuation-passing encoding between them, priority-based deadlock
//! analysis, session type inference by unification and local multiparty
//! type encoding.

pub mod binding;
pub mod check_pi;
pub mod check_session;
pub mod congruence;
pub mod corpus;
pub mod correspond;
pub mod deadlock;
pub mod diag;
pub mod duality;
pub mod encode;
pub mod env;
pub mod gen;
pub mod infer;
pub mod lexer;
pub mod mpst;
pub mod name;
pub mod parse;
pub mod print;
pub mod process;
pub mod reduce;
pub mod types;

pub use name::{FreshSupply, Label, Name};
pub use process::{Annot, BinOp, Calculus, Expr, Process};
pub use types::{Capability, PiType, PriorityTerm, SessionType, TypeExpr};
