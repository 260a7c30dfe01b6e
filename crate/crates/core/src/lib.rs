//! Cover-tree accelerated inexact projected gradient for data-driven
//! compressed sensing, with a magnetic resonance fingerprinting toolkit.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases below pick a precision.
//!
//! ```
//! use cover_ipg::mrf::{build_dictionary, ExcitationSequence, ParameterGrid};
//! use cover_ipg::operators::{EpiOperator, EpiPattern, LinearOperator, ShiftRule};
//! use cover_ipg::solver::{ipg_run, SolverConfig, Strategy, ToleranceKind, EpsilonSchedule};
//! use cover_ipg::{DictionaryF64, ProductImageF64};
//!
//! let seq = ExcitationSequence::ramp(32)?;
//! let dict: DictionaryF64 = build_dictionary(&seq, &ParameterGrid::random(200, 1)?)?;
//! let tree = dict.build_tree()?;
//!
//! // 8x8 image, every pixel a scaled atom
//! let ids: Vec<usize> = (0..64).map(|j| (7 * j) % dict.len()).collect();
//! let x0 = ProductImageF64::from_atoms(&dict, &ids, &vec![1.0; 64])?;
//! let op = EpiOperator::<f64>::new(EpiPattern::lattice(8, 8, 32, 2, ShiftRule::Shifted)?);
//! let y = op.apply(x0.as_slice())?;
//!
//! let config = SolverConfig {
//!     strategy: Strategy::Tree {
//!         kind: ToleranceKind::Multiplicative,
//!         schedule: EpsilonSchedule::Constant(0.4),
//!     },
//!     ..SolverConfig::default()
//! };
//! let out = ipg_run(&op, &dict, Some(&tree), &y, &config, None)?;
//! println!("{} iterations, {} distances", out.records.len() - 1, out.records.last().unwrap().distances_cum);
//! # Ok::<(), cover_ipg::Error>(())
//! ```

pub mod covertree;
pub mod error;
pub mod model;
pub mod mrf;
pub mod operators;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Real;

pub type C64 = num_complex::Complex<f64>;
pub type C32 = num_complex::Complex<f32>;

pub type PointSetF64 = covertree::PointSet<f64>;
pub type PointSetF32 = covertree::PointSet<f32>;
pub type CoverTreeF64 = covertree::CoverTree<f64>;
pub type CoverTreeF32 = covertree::CoverTree<f32>;
pub type DictionaryF64 = model::Dictionary<f64>;
pub type DictionaryF32 = model::Dictionary<f32>;
pub type ProductImageF64 = model::ProductImage<f64>;
pub type ProductImageF32 = model::ProductImage<f32>;
pub type DenseOperatorF64 = operators::DenseOperator<f64>;
pub type EpiOperatorF64 = operators::EpiOperator<f64>;
