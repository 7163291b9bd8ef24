use super::{check_index, check_widths, require_linear, ForgeryPlan, Knowledge};
use crate::analysis::Probability;
use crate::bitblocks::{Block, BlockWidth, FeedbackFunction, PositionPermutation};
use crate::error::{Error, Result};
use crate::modes::{EncryptionTrace, ModeKind, SequencedCiphertext};

/// `C'_1..C'_{u-1}, C_v ^ correction, C_{v+1}..C_t`, sent under the sequence
/// number of `c_prime`. Accepted with certainty when the correction is
/// `g(G'_{u-1}) ^ g(G_{v-1})`.
pub fn forge_splice(
    c: &SequencedCiphertext,
    c_prime: &SequencedCiphertext,
    u: usize,
    v: usize,
    correction: Block,
) -> Result<ForgeryPlan> {
    check_widths(c, &[correction])?;
    check_widths(c_prime, &[correction])?;
    let (t, t_prime) = (c.len(), c_prime.len());
    check_index(u, 1 < u && u <= t_prime, format!("need 1 < u <= t' = {t_prime}"))?;
    check_index(v, 1 < v && v < t, format!("need 1 < v < t = {t}"))?;
    let mut blocks = Vec::with_capacity(u - 1 + t - v + 1);
    blocks.extend_from_slice(&c_prime.blocks[..u - 1]);
    blocks.push(c.block(v) ^ correction);
    blocks.extend_from_slice(&c.blocks[v..]);
    Ok(ForgeryPlan {
        attack: "splice",
        forged: SequencedCiphertext::new(c_prime.sequence, blocks),
        knowledge: Knowledge {
            ciphertexts: 2,
            ..Knowledge::default()
        },
        predicted_success: Probability::one(),
    })
}

/// `g(G'_{u-1}) ^ g(G_{v-1})` from the two encryption traces.
pub fn oracle_splice_correction(
    g: FeedbackFunction,
    trace: &EncryptionTrace,
    trace_prime: &EncryptionTrace,
    u: usize,
    v: usize,
) -> Result<Block> {
    check_index(u, u >= 1 && u <= trace_prime.len(), "u - 1 outside the trace")?;
    check_index(v, v >= 1 && v <= trace.len(), "v - 1 outside the trace")?;
    Ok(g.apply(trace_prime.g[u - 1])? ^ g.apply(trace.g[v - 1])?)
}

fn check_shortening(c: &SequencedCiphertext, known: &[Block], j: usize, k: usize) -> Result<()> {
    check_widths(c, known)?;
    let t = c.len();
    if k == 0 {
        return Err(Error::InvalidParameter("shortening needs k >= 1".into()));
    }
    if known.len() != k {
        return Err(Error::InvalidParameter(format!(
            "shortening by k = {k} needs {k} known blocks, got {}",
            known.len()
        )));
    }
    check_index(j, j >= 1 && j + 2 * k + 2 <= t, format!("need j >= 1 and j + 2k + 2 <= t = {t}"))
}

/// `XOR_{i=1..k} g^{k-i}(C_{j+2i-1} ^ P_{j+2i})`, where `known[i-1]` is
/// `P_{j+2i}`. For linear `g` this equals `g^k(G_j) ^ G_{j+2k}`.
pub fn shortening_delta(
    kind: ModeKind,
    c: &SequencedCiphertext,
    known: &[Block],
    j: usize,
    k: usize,
) -> Result<Block> {
    require_linear(kind, "iobc-shorten")?;
    check_shortening(c, known, j, k)?;
    let g = kind.feedback();
    let mut acc = Block::zero(c.width()?);
    for i in 1..=k {
        acc = acc ^ g.pow((k - i) as u64, c.block(j + 2 * i - 1) ^ known[i - 1])?;
    }
    Ok(acc)
}

/// Probability that `g^k` fixes a random block, which is when the
/// shortening forgery is accepted.
pub fn shortening_success(kind: ModeKind, width: BlockWidth, k: u64) -> Result<Probability> {
    require_linear(kind, "iobc-shorten")?;
    match kind {
        ModeKind::Iobc => {
            let f = PositionPermutation::iobc(width)?.fixed_point_log2_fraction(k)?;
            Ok(Probability::pow2_neg(f.unsigned_abs()))
        }
        _ => Ok(Probability::one()),
    }
}

/// Drops `2k` blocks after `C_j`: `C_1..C_j, C_{j+2k+1} ^ g(delta),
/// C_{j+2k+2}..C_t`, with `delta` from [`shortening_delta`] and `known[i-1]`
/// the plaintext `P_{j+2i}`.
pub fn forge_iobc_shorten(
    kind: ModeKind,
    c: &SequencedCiphertext,
    known: &[Block],
    j: usize,
    k: usize,
) -> Result<ForgeryPlan> {
    let delta = shortening_delta(kind, c, known, j, k)?;
    let correction = kind.feedback().apply(delta)?;
    let mut plan = forge_splice(c, c, j + 1, j + 2 * k + 1, correction)?;
    plan.attack = "iobc-shorten";
    plan.knowledge.ciphertexts = 1;
    plan.knowledge = plan.knowledge.known(0, (1..=k).map(|i| j + 2 * i));
    plan.predicted_success = shortening_success(kind, c.width()?, k as u64)?;
    Ok(plan)
}

/// Two messages sealed under the same `(F_0, G_0)`: `C'_1, C'_2,
/// C_3 ^ g(C_1 ^ C'_1 ^ P_2 ^ P'_2), C_4..C_t`. Needs linear `g`.
pub fn forge_iv_reuse(
    kind: ModeKind,
    c: &SequencedCiphertext,
    c_prime: &SequencedCiphertext,
    p2: Block,
    p2_prime: Block,
) -> Result<ForgeryPlan> {
    require_linear(kind, "iv-reuse")?;
    check_widths(c, &[p2, p2_prime])?;
    check_widths(c_prime, &[p2])?;
    check_index(c.len(), c.len() >= 4, "iv-reuse needs t >= 4")?;
    check_index(c_prime.len(), c_prime.len() >= 3, "iv-reuse needs t' >= 3")?;
    let diff = c.block(1) ^ c_prime.block(1) ^ p2 ^ p2_prime;
    let correction = kind.feedback().apply(diff)?;
    let mut plan = forge_splice(c, c_prime, 3, 3, correction)?;
    plan.attack = "iv-reuse";
    plan.knowledge.shared_ivs = true;
    plan.knowledge = plan.knowledge.known(0, [2]).known(1, [2]);
    Ok(plan)
}
