//! Randomized sketch-and-project methods for linear systems, projections,
//! gossip averaging and matrix inversion.
//!
//! All methods share one template: draw a random sketch `S`, then project the
//! current iterate onto the solution set of the sketched equations in a
//! weighted norm. The modules cover
//!
//! - [`linalg`]: dense helpers, weight matrices and the seeded generator;
//! - [`sampling`]: sketch distributions and convergence-rate certificates;
//! - [`linsolve`]: Kaczmarz, coordinate descent, Gaussian and block methods;
//! - [`sda`]: stochastic dual ascent for the projection problem;
//! - [`gossip`]: randomized averaging on graphs;
//! - [`matinv`]: randomized inversion, quasi-Newton updates and AdaRBFGS;
//! - [`io`] and [`generate`]: MatrixMarket files and synthetic matrices.
//!
//! ```
//! use sketchproj::linsolve::{make_method, solve, Method, MethodOptions};
//! use sketchproj::sampling::rate_certificate;
//! use sketchproj::{Mat, RateKind, SeededRng, Status};
//!
//! let mut rng = SeededRng::new(7);
//! let a = Mat::from_fn(40, 10, |_, _| rng.normal());
//! let x_true = Mat::from_fn(10, 1, |_, _| rng.normal());
//! let b = &a * &x_true;
//!
//! // Randomized Kaczmarz with rows drawn proportionally to their squared norms.
//! let p = make_method(Method::Rk, &a, &b, &MethodOptions::default())?;
//! let cert = rate_certificate(&p.sampling, &a, &p.b, RateKind::Linsolve)?;
//! assert!(cert.rho < 1.0);
//!
//! let (x, report) = solve(&p, &mut rng, 1e-8, 100_000)?;
//! assert_eq!(report.status, Status::Converged);
//! assert!((x - x_true).norm() < 1e-6);
//! # Ok::<(), sketchproj::Error>(())
//! ```

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod generate;
pub mod gossip;
pub mod io;
pub mod linalg;
pub mod linsolve;
pub mod matinv;
pub mod report;
pub mod sampling;
pub mod sda;

pub use error::{Error, Result};
pub use linalg::{Mat, SeededRng, Weight};
pub use report::{ConvergenceReport, Record, Status};
pub use sampling::{RateCertificate, RateKind, Sampling, Sketch};
