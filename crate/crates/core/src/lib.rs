// SPDX-License-Identifier: Apache-2.0

//! A Datalog engine for declarative program analysis with two symbolic
//! backends: an SMT-LIB2 solver bridge and a native bounded algebraic solver.

pub mod analyses;
pub mod engine;
pub mod expr;
pub mod native;
pub mod smt;
