//! Simulation of the limit law `J_h` of the t-statistic under local-to-unity
//! drift `h = n (1 - rho)`, and the critical-value tables built from it.

mod functionals;
mod table;

pub use functionals::{
    alpha_beta, empirical_quantile, project_ifh, sample_jh, sample_jh_many, simulate_ih_path, IfhKernel,
    JhSample, LimitFunctionals, PathGridConfig, DEGENERATE_DENOMINATOR_TOL, SMALL_H_SWITCH,
};
pub use table::{build_table, lookup, Provenance, QuantileTable, DEFAULT_ALPHAS, DEFAULT_H_GRID};
