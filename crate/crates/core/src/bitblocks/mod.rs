//! Bit-exact block arithmetic, the three feedback functions and the cycle
//! analysis of the IOBC rotation.

mod block;
mod feedback;
mod permutation;

pub use block::{block_from_bits, Block, BlockWidth};
pub use feedback::{g_epbc, g_identity, g_iobc, FeedbackFunction};
pub use permutation::{
    fixed_point_log2_fraction, iobc_position_permutation, permutation_order, PositionPermutation,
};

pub(crate) use block::low_mask;
