//! Quantum-statistical toy model of a closed stock market.
//!
//! Traders exchange shares of several types for cash at externally imposed,
//! piecewise-constant integer prices. Holdings are bosonic occupation
//! numbers, and the total number of shares of each type and the total cash
//! are conserved, so every calculation lives in one finite sector.
//!
//! The crate provides
//!
//! * [`market`]: configurations, sector bases, free energies and portfolios;
//! * [`operators`]: exchange operators and sparse Hamiltonian assembly;
//! * [`propagator`]: exact piecewise evolution, used as the reference;
//! * [`perturbation`]: first-, second- and arbitrary-order Dyson coefficients,
//!   golden-rule rates and portfolio transition probabilities;
//! * [`semiclassical`]: the second-order Heisenberg-picture occupation and
//!   portfolio shifts under classical prices;
//! * [`io`]: JSON run files, price CSVs and deterministic result emission.
//!
//! Runnable walk-throughs live in the crate's `examples/` directory.

pub mod error;
pub mod io;
pub mod kernel;
pub mod market;
pub mod operators;
pub mod perturbation;
pub mod propagator;
pub mod semiclassical;

pub use error::{ConfigError, Error, Result};
pub use kernel::ExpPolyKernel;
pub use market::{
    enumerate_sector, free_energy, portfolio_value, validate_config, BasisState, MarketConfig, MultiSectorBasis,
    PriceTrajectory, SectorBasis, SectorKey, StateSpace, StateVector,
};
pub use operators::{apply_exchange, build_h, build_h0, build_hi, ExchangeMove, SparseHermitian};
pub use perturbation::{DysonCoefficients, Order};
pub use propagator::{exact_transition_probability, expectation_occupations, propagate, PropagationResult, Propagator};
