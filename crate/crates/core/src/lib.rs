//! Valuation and price dynamics for networks of cross-owned financial firms.
//!
//! Firms hold exogenous assets (commodities, cash) and fractions of each
//! other's equity and debt. A firm's value therefore depends on the values
//! of the firms it holds, which is resolved two ways:
//!
//! * [`solver::solve_equilibrium`] finds the full-information equilibrium as
//!   a fixed point of the revaluation operator [`valuation::phi`] by Picard
//!   iteration.
//! * [`dynamics::simulate`] runs the same revaluation forward in time, with
//!   each firm seeing the others only through balance sheets published a
//!   lag earlier, and classifies the resulting feedback loop.
//!
//! ```
//! use reflexnet::io::{parse_network, parse_prices};
//! use reflexnet::solver::{solve_equilibrium, SolverConfig};
//!
//! let network = parse_network(include_bytes!("../fixtures/paper_example.network.json")).unwrap();
//! let prices = parse_prices(br#"{"commodities": 500}"#, &network).unwrap();
//! let (state, _) = solve_equilibrium(&network, &prices, &SolverConfig::default()).unwrap();
//! assert!((state.equity[0] - 1000.0 / 3.0).abs() < 1e-6);
//! ```

pub mod cli;
pub mod dynamics;
pub mod io;
pub mod network;
pub mod solver;
pub mod valuation;

pub use dynamics::{simulate, FeedbackClass, Scenario, Trajectory};
pub use network::{Network, NetworkError, NetworkParts};
pub use solver::{solve_equilibrium, SolverConfig};
pub use valuation::{phi, PriceVector, ValuationState};
