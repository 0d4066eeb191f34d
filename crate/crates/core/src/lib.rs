//! Interpreter for a process calculus of URL-addressed resources and
//! programs: RESTful default behaviour, component dispatch by url pattern,
//! sessions and session delegation.

pub mod syntax;
pub mod engine;
pub mod gen;
pub mod rules;
pub mod scenario;
pub mod urlalg;
