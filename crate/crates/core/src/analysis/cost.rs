use num_bigint::BigUint;
use serde::Serialize;

use super::combinatorics::{binom_sum, log2_big, serialize_display};
use crate::bitblocks::{BlockWidth, PositionPermutation};
use crate::error::{Error, Result};

#[derive(Clone, Debug, Serialize)]
pub struct CostRow {
    pub n: u32,
    /// EPBC candidates `H || !H` with `|H| <= n/8`.
    #[serde(serialize_with = "serialize_display")]
    pub guess_space: BigUint,
    pub guess_space_log2: f64,
    /// Ciphertext blocks for a likely birthday collision, as a power of two.
    pub birthday_log2: u32,
    /// Smallest `k` maximising the fixed-point fraction of `g_iobc^k`.
    pub iobc_best_k: u64,
    pub iobc_best_log2: i32,
    pub iobc_order: u128,
}

/// One row per width; each width must be a multiple of 8.
pub fn attack_cost_table(widths: &[u32]) -> Result<Vec<CostRow>> {
    widths.iter().map(|&n| cost_row(n)).collect()
}

pub fn cost_row(n: u32) -> Result<CostRow> {
    if !n.is_multiple_of(8) {
        return Err(Error::InvalidWidth {
            bits: n,
            reason: "cost table needs a multiple of 8",
        });
    }
    let width = BlockWidth::new(n)?;
    let perm = PositionPermutation::iobc(width)?;
    let order = perm.order();
    let (k, best) = best_shortening_power(&perm)?;
    let guess_space = binom_sum(u64::from(n / 2), u64::from(n / 8))?;
    Ok(CostRow {
        n,
        guess_space_log2: log2_big(&guess_space),
        guess_space,
        birthday_log2: n / 2,
        iobc_best_k: k,
        iobc_best_log2: best,
        iobc_order: order,
    })
}

/// Scans `1 <= k < order` for the largest fixed-point fraction.
pub fn best_shortening_power(perm: &PositionPermutation) -> Result<(u64, i32)> {
    let order = u64::try_from(perm.order()).expect("order fits in u64 for n <= 128");
    let mut best = (0u64, i32::MIN);
    for k in 1..order.max(2) {
        let f = perm.fixed_point_log2_fraction(k)?;
        if f > best.1 {
            best = (k, f);
        }
    }
    Ok(best)
}
