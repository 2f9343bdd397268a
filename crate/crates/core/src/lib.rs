//! Symbolic-numeric toolkit for the semigroup of linear second-order ODEs
//! `y'' + B(x) y' + C(x) y = 0`.
//!
//! * [`expr`]: expression language: parsing, differentiation, evaluation,
//!   antiderivatives and sampled equality.
//! * [`ode`]: operators, the semigroup addition, the equation catalog,
//!   residuals and adaptive Runge-Kutta trajectories.
//! * [`lagrangian`]: standard, null and nonstandard Lagrangians, gauge
//!   functions, Euler-Lagrange residuals, the third Helmholtz condition
//!   and the Riccati construction.
//! * [`factorization`]: second canonical form, ladder operators,
//!   factorizability classification, Bessel functions and plane waves.
//! * [`verify`]: the check batteries and the JSON report they produce.

// `!(a < b)` rejects NaN on purpose; `Expr::add` and friends are smart
// constructors, not operator impls.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::should_implement_trait)]

pub mod expr;
pub mod factorization;
pub mod lagrangian;
pub mod ode;
pub mod verify;
