//! Position-wise behaviour of the EPBC feedback function.
//!
//! Bit `i` of the left half and bit `i` of the right half form a pair
//! `(l, r)`; `g_epbc` maps each pair independently of all others.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::bitblocks::Block;
use crate::error::{Error, Result};

/// A pair `(l, r)` of bits, written `lr`.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct BitPair(u8);

impl BitPair {
    pub const ALL: [BitPair; 4] = [BitPair(0b00), BitPair(0b01), BitPair(0b10), BitPair(0b11)];

    pub fn new(l: bool, r: bool) -> Self {
        BitPair(((l as u8) << 1) | r as u8)
    }

    pub fn l(self) -> bool {
        self.0 & 2 != 0
    }

    pub fn r(self) -> bool {
        self.0 & 1 != 0
    }

    pub fn xor(self, other: BitPair) -> BitPair {
        BitPair(self.0 ^ other.0)
    }

    fn index(self) -> u8 {
        self.0
    }
}

impl fmt::Display for BitPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", self.l() as u8, self.r() as u8)
    }
}

impl std::str::FromStr for BitPair {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "00" => Ok(BitPair(0)),
            "01" => Ok(BitPair(1)),
            "10" => Ok(BitPair(2)),
            "11" => Ok(BitPair(3)),
            _ => Err(Error::InvalidParameter(format!("bad bit pair {s:?}"))),
        }
    }
}

impl Serialize for BitPair {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// A non-empty set of [`BitPair`]s.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct PairSet(u8);

impl PairSet {
    pub fn new<I: IntoIterator<Item = BitPair>>(pairs: I) -> Result<Self> {
        let mask = pairs.into_iter().fold(0u8, |m, p| m | 1 << p.index());
        Self::from_mask(mask)
    }

    /// Bit `b` of `mask` selects the pair with value `b`.
    pub fn from_mask(mask: u8) -> Result<Self> {
        if mask == 0 || mask > 0xf {
            return Err(Error::InvalidParameter(format!("pair-set mask {mask:#x}")));
        }
        Ok(PairSet(mask))
    }

    pub fn singleton(p: BitPair) -> Self {
        PairSet(1 << p.index())
    }

    /// All 15 non-empty sets, by mask.
    pub fn all() -> impl Iterator<Item = PairSet> {
        (1u8..16).map(PairSet)
    }

    pub fn mask(self) -> u8 {
        self.0
    }

    pub fn contains(self, p: BitPair) -> bool {
        self.0 & (1 << p.index()) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn is_subset(self, other: PairSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = BitPair> {
        BitPair::ALL.into_iter().filter(move |&p| self.contains(p))
    }
}

impl fmt::Display for PairSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|p| p.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

impl std::str::FromStr for PairSet {
    type Err = Error;

    /// Parses `{00,10}` or `00,10`.
    fn from_str(s: &str) -> Result<Self> {
        let inner = s.trim().trim_start_matches('{').trim_end_matches('}');
        let pairs = inner
            .split(',')
            .map(|p| p.trim().parse())
            .collect::<Result<Vec<BitPair>>>()?;
        PairSet::new(pairs)
    }
}

impl Serialize for PairSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// The action of `g_epbc` on one position: `l' = l | !r`, `r' = l & !r`.
pub fn epbc_pair_map(p: BitPair) -> BitPair {
    BitPair::new(p.l() || !p.r(), p.l() && !p.r())
}

pub fn pair_image(a: PairSet) -> PairSet {
    PairSet::new(a.iter().map(epbc_pair_map)).expect("image of a non-empty set")
}

/// Applies [`epbc_pair_map`] at every position of `x`.
pub fn apply_pairwise(x: Block) -> Block {
    let m = x.width().half();
    let (l, r) = x.halves();
    let (mut l2, mut r2) = (0u128, 0u128);
    for i in 0..m {
        let p = BitPair::new(l >> i & 1 == 1, r >> i & 1 == 1);
        let q = epbc_pair_map(p);
        l2 |= (q.l() as u128) << i;
        r2 |= (q.r() as u128) << i;
    }
    Block::from_halves(x.width(), l2, r2)
}

// The expected input/output possibility table, as (input set, output set).
const EXPECTED_TABLE: [(&str, &str); 15] = [
    ("00,01,10,11", "00,10,11"),
    ("01,10,11", "00,10,11"),
    ("00,10,11", "10,11"),
    ("00,01,11", "00,10"),
    ("00,01,10", "00,10,11"),
    ("10,11", "10,11"),
    ("01,11", "00,10"),
    ("01,10", "00,11"),
    ("00,11", "10"),
    ("00,10", "10,11"),
    ("00,01", "00,10"),
    ("11", "10"),
    ("10", "11"),
    ("01", "00"),
    ("00", "10"),
];

#[derive(Clone, Debug, Serialize)]
pub struct PairTableRow {
    pub input: PairSet,
    pub expected: PairSet,
    pub computed: PairSet,
    pub matches: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairTableReport {
    pub rows: Vec<PairTableRow>,
    pub all_match: bool,
    /// Whether every input set of size 1..4 appears exactly once.
    pub covers_every_set: bool,
    pub outputs_exclude_01: bool,
}

/// Recomputes every row of the expected table with [`pair_image`].
pub fn verify_pair_table() -> PairTableReport {
    let rows: Vec<PairTableRow> = EXPECTED_TABLE
        .iter()
        .map(|(a, b)| {
            let input: PairSet = a.parse().expect("table literal");
            let expected: PairSet = b.parse().expect("table literal");
            let computed = pair_image(input);
            PairTableRow {
                input,
                expected,
                computed,
                matches: computed == expected,
            }
        })
        .collect();
    let mut seen: Vec<u8> = rows.iter().map(|r| r.input.mask()).collect();
    seen.sort_unstable();
    seen.dedup();
    PairTableReport {
        all_match: rows.iter().all(|r| r.matches),
        covers_every_set: seen.len() == 15,
        outputs_exclude_01: rows.iter().all(|r| !r.computed.contains(BitPair(0b01))),
        rows,
    }
}

/// Possibility set for a pair of `g(G_{j+1})`, given the possibilities for
/// the same pair of `F_j` and the known plaintext pair `p` of `P_{j+1}`.
pub fn propagate_possibilities(f_set: PairSet, p: BitPair) -> PairSet {
    pair_image(PairSet::new(f_set.iter().map(|f| f.xor(p))).expect("non-empty"))
}

#[derive(Clone, Debug, Serialize)]
pub struct DifferenceClass {
    /// XOR of the two members of each set in the class.
    pub difference: BitPair,
    pub sets: usize,
    pub min_size: usize,
    pub max_size: usize,
    /// A two-element `F_j` set and plaintext pair reaching `min_size`.
    pub witness: (PairSet, BitPair),
}

#[derive(Clone, Debug, Serialize)]
pub struct DiFlawReport {
    pub classes: Vec<DifferenceClass>,
}

impl DiFlawReport {
    pub fn class(&self, difference: BitPair) -> Option<&DifferenceClass> {
        self.classes.iter().find(|c| c.difference == difference)
    }
}

/// Propagates every two-element possibility set through every plaintext
/// pair and reports the smallest and largest results per difference class.
pub fn di_flaw_check() -> DiFlawReport {
    let classes = [BitPair(0b01), BitPair(0b10), BitPair(0b11)]
        .into_iter()
        .map(|d| {
            let sets: Vec<PairSet> = PairSet::all()
                .filter(|s| s.len() == 2)
                .filter(|s| {
                    let v: Vec<BitPair> = s.iter().collect();
                    v[0].xor(v[1]) == d
                })
                .collect();
            let mut min = (usize::MAX, sets[0], BitPair(0));
            let mut max = 0;
            for &s in &sets {
                for p in BitPair::ALL {
                    let size = propagate_possibilities(s, p).len();
                    if size < min.0 {
                        min = (size, s, p);
                    }
                    max = max.max(size);
                }
            }
            DifferenceClass {
                difference: d,
                sets: sets.len(),
                min_size: min.0,
                max_size: max,
                witness: (min.1, min.2),
            }
        })
        .collect();
    DiFlawReport { classes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitblocks::{g_epbc, BlockWidth};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(s: &str) -> PairSet {
        s.parse().unwrap()
    }

    #[test]
    fn pair_map_values() {
        for (a, b) in [("11", "10"), ("10", "11"), ("01", "00"), ("00", "10")] {
            assert_eq!(epbc_pair_map(a.parse().unwrap()), b.parse().unwrap());
        }
        assert!(BitPair::ALL.iter().all(|&p| epbc_pair_map(p) != BitPair(1)));
    }

    #[test]
    fn pairwise_equals_whole_block_exhaustively() {
        let w = BlockWidth::new(8).unwrap();
        for v in 0..256 {
            let x = Block::new(w, v).unwrap();
            assert_eq!(apply_pairwise(x), g_epbc(x).unwrap());
        }
        let w = BlockWidth::new(128).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let x = Block::random(w, &mut rng);
            assert_eq!(apply_pairwise(x), g_epbc(x).unwrap());
        }
    }

    #[test]
    fn images() {
        assert_eq!(pair_image(set("{00,01,10,11}")), set("{00,10,11}"));
        assert_eq!(pair_image(set("{00,11}")), set("{10}"));
        assert_eq!(pair_image(set("{10,11}")), set("{10,11}"));
    }

    #[test]
    fn expected_table_reproduced() {
        let report = verify_pair_table();
        assert_eq!(report.rows.len(), 15);
        assert!(report.all_match, "{report:?}");
        assert!(report.covers_every_set);
        assert!(report.outputs_exclude_01);
    }

    #[test]
    fn image_is_monotone() {
        for a in PairSet::all() {
            for b in PairSet::all() {
                if a.is_subset(b) {
                    assert!(pair_image(a).is_subset(pair_image(b)), "{a} {b}");
                }
            }
        }
    }

    #[test]
    fn propagation() {
        for p in BitPair::ALL {
            assert_eq!(propagate_possibilities(set("{10,11}"), p).len(), 2);
            assert_eq!(propagate_possibilities(set("{00,10}"), p).len(), 2);
            for q in BitPair::ALL {
                assert_eq!(propagate_possibilities(PairSet::singleton(q), p).len(), 1);
            }
        }
    }

    #[test]
    fn di_flaw_classes() {
        let r = di_flaw_check();
        let by = |d: &str| r.class(d.parse().unwrap()).unwrap().clone();
        assert_eq!(by("01").min_size, 2);
        assert_eq!(by("10").min_size, 2);
        assert_eq!(by("11").min_size, 1);
        for c in &r.classes {
            assert_eq!(c.sets, 2);
            assert_eq!(c.max_size, 2);
        }
        let (s, p) = by("11").witness;
        assert_eq!(propagate_possibilities(s, p).len(), 1);
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(set("00, 10").to_string(), "{00,10}");
        assert!("{}".parse::<PairSet>().is_err());
        assert!("02".parse::<BitPair>().is_err());
        assert!(PairSet::from_mask(0).is_err());
        assert_eq!(serde_json::to_string(&set("{11}")).unwrap(), r#""{11}""#);
    }
}
