//! Cost-and-size recurrence extraction for a small higher-order functional
//! language with let-polymorphism and inductive types, together with
//! denotational models that interpret the recurrences under different
//! notions of size and a harness that checks the bounds empirically.

pub mod cost_eval;
pub mod extract;
pub mod harness;
pub mod models;
pub mod rec_lang;
pub mod semdom;
pub mod source_ast;
pub mod typecheck;
