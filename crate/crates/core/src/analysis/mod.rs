//! Exact combinatorics behind the attacks: binomial guess spaces, the EPBC
//! pair semantics and predicted attack costs.

mod combinatorics;
mod cost;
mod pairs;

pub use combinatorics::{
    binco_bound, binom_sum, binomial, binomial_cdf, log2_big, Probability,
};
pub use cost::{attack_cost_table, best_shortening_power, cost_row, CostRow};
pub use pairs::{
    apply_pairwise, di_flaw_check, epbc_pair_map, pair_image, propagate_possibilities,
    verify_pair_table, BitPair, DiFlawReport, DifferenceClass, PairSet, PairTableReport,
    PairTableRow,
};
