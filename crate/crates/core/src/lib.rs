//! Convertible bond pricing and risk under the Tsiveriotis-Fernandes
//! equity/cash split, on Cox-Ross-Rubinstein lattices, with an explicit
//! finite-difference solver of the coupled PDE system as an independent
//! reference.

pub mod diagnostics;
pub mod error;
pub mod fd;
pub mod hedge;
pub mod lattice;
pub mod risk;
pub mod sensitivities;
pub mod termsheet;

pub use error::{Error, Result};
pub use fd::{fd_profile, solve_tf_fd, FdGrid, FdSolution};
pub use lattice::{apply_constraints, build_crr_params, price_profile_raw, price_tf_crr, Binding, LatticeParams, NodeValue, PriceResult};
pub use sensitivities::{delta, delta_pct, gamma, greek_point, greek_profile, surface, GreekPoint, Surface};
pub use termsheet::{ContractTimeline, ConvertibleTerms, Date, DayCount, MarketParams};
pub use hedge::{hedge_increment, hedged_position, stress_curve, HedgeStressSpec, StressPoint};
pub use risk::{density_histogram, revalue, run_var, simulate_stock, var_quantile, Histogram, VarResult, VarSpec};
