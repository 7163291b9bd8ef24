use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

/// `C(m, k)`, zero when `k > m`.
pub fn binomial(m: u64, k: u64) -> BigUint {
    if k > m {
        return BigUint::zero();
    }
    let k = k.min(m - k);
    let mut c = BigUint::one();
    for i in 0..k {
        c = c * (m - i) / (i + 1);
    }
    c
}

/// `sum_{i=0..k} C(m, i)`.
pub fn binom_sum(m: u64, k: u64) -> Result<BigUint> {
    if k > m {
        return Err(Error::InvalidParameter(format!("binom_sum needs k <= m, got k={k} m={m}")));
    }
    let mut term = BigUint::one();
    let mut sum = BigUint::one();
    for i in 0..k {
        term = term * (m - i) / (i + 1);
        sum += &term;
    }
    Ok(sum)
}

/// Upper bound `C(m, k) (m - k + 1) / (m - 2k + 1)` on [`binom_sum`], valid
/// for `k < m/2`.
pub fn binco_bound(m: u64, k: u64) -> Result<BigRational> {
    if m == 0 || 2 * k >= m {
        return Err(Error::InvalidParameter(format!(
            "binco_bound needs m >= 1 and k < m/2, got m={m} k={k}"
        )));
    }
    let num = BigInt::from(binomial(m, k)) * BigInt::from(m - k + 1);
    Ok(BigRational::new(num, BigInt::from(m - 2 * k + 1)))
}

/// `log2(x)` for arbitrarily large `x`, accurate to double precision.
pub fn log2_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return (x.to_u64().expect("fits") as f64).log2();
    }
    let shift = bits - 64;
    let top = (x >> shift).to_u64().expect("fits");
    (top as f64).log2() + shift as f64
}

/// An exact probability.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct Probability(BigRational);

impl Probability {
    pub fn new(value: BigRational) -> Result<Self> {
        if value < BigRational::zero() || value > BigRational::one() {
            return Err(Error::InvalidParameter(format!("{value} is not a probability")));
        }
        Ok(Self(value))
    }

    pub fn one() -> Self {
        Self(BigRational::one())
    }

    pub fn zero() -> Self {
        Self(BigRational::zero())
    }

    pub fn ratio(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::InvalidParameter("zero denominator".into()));
        }
        Self::new(BigRational::new(num.into(), den.into()))
    }

    /// `2^-e`.
    pub fn pow2_neg(e: u32) -> Self {
        Self(BigRational::new(BigInt::one(), BigInt::one() << e))
    }

    pub fn exact(&self) -> &BigRational {
        &self.0
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(0.0)
    }

    /// `p + (1 - p) q`: success by design or, failing that, by the chance `q`.
    pub fn or_else(&self, q: &Probability) -> Probability {
        let one = BigRational::one();
        Self(&self.0 + (&one - &self.0) * &q.0)
    }

    pub fn complement(&self) -> Probability {
        Self(BigRational::one() - &self.0)
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Serialize for Probability {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr {
            exact: String,
            approx: f64,
        }
        Repr {
            exact: self.0.to_string(),
            approx: self.to_f64(),
        }
        .serialize(s)
    }
}

/// `P(Bin(m, p) <= k)`, exactly.
pub fn binomial_cdf(m: u64, k: u64, p: &Probability) -> Probability {
    let p = p.exact();
    let q = BigRational::one() - p;
    let mut total = BigRational::zero();
    for i in 0..=k.min(m) {
        let c = BigRational::from_integer(BigInt::from(binomial(m, i)));
        total += c * pow(p, i) * pow(&q, m - i);
    }
    Probability(total)
}

fn pow(x: &BigRational, e: u64) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

pub(crate) fn serialize_display<T: fmt::Display, S: Serializer>(
    value: &T,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.collect_str(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Pascal's rule, row by row, as an independent oracle.
    fn pascal(rows: usize) -> Vec<Vec<BigUint>> {
        let mut t: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]];
        for m in 1..=rows {
            let prev = &t[m - 1];
            let mut row = vec![BigUint::one(); m + 1];
            for k in 1..m {
                row[k] = &prev[k - 1] + &prev[k];
            }
            t.push(row);
        }
        t
    }

    #[test]
    fn binomials_match_pascal() {
        let t = pascal(130);
        for m in 0..=130u64 {
            for k in 0..=m {
                assert_eq!(binomial(m, k), t[m as usize][k as usize]);
            }
            assert_eq!(binomial(m, m + 1), BigUint::zero());
        }
    }

    #[test]
    fn sums() {
        assert_eq!(binom_sum(32, 8).unwrap(), BigUint::from(15_033_173u64));
        assert_eq!(binom_sum(8, 2).unwrap(), BigUint::from(37u64));
        for m in 0..20 {
            assert_eq!(binom_sum(m, 0).unwrap(), BigUint::one());
            assert_eq!(binom_sum(m, m).unwrap(), BigUint::one() << m);
        }
        assert!(binom_sum(3, 4).is_err());
        let big = binom_sum(64, 16).unwrap();
        let t = pascal(64);
        let oracle: BigUint = t[64][..=16].iter().sum();
        assert_eq!(big, oracle);
        // 7.13e14 to three significant figures
        let lead = &big / BigUint::from(10u64).pow(12);
        assert_eq!(lead, BigUint::from(713u64));
    }

    #[test]
    fn guess_space_logs() {
        let l64 = log2_big(&binom_sum(32, 8).unwrap());
        let l128 = log2_big(&binom_sum(64, 16).unwrap());
        assert!((23.7..=23.9).contains(&l64), "{l64}");
        assert!((49.2..=49.4).contains(&l128), "{l128}");
        assert_eq!(log2_big(&(BigUint::one() << 200u32)), 200.0);
    }

    #[test]
    fn bound_is_strict() {
        for m in 1..=64u64 {
            for k in 1..m.div_ceil(2) {
                let sum = BigRational::from_integer(BigInt::from(binom_sum(m, k).unwrap()));
                assert!(sum < binco_bound(m, k).unwrap(), "m={m} k={k}");
            }
            // At k = 0 both sides are exactly 1.
            assert_eq!(binco_bound(m, 0).unwrap(), BigRational::one());
            assert!(binco_bound(m, m.div_ceil(2)).is_err());
        }
        let b = binco_bound(32, 8).unwrap();
        assert_eq!(b, BigRational::new(BigInt::from(10_518_300u64 * 25), BigInt::from(17)));
        assert!(binco_bound(0, 0).is_err());
    }

    #[test]
    fn cdf_matches_direct_count() {
        // Weight distribution of 8 independent bits, each set with
        // probability 1/4, counted over all 4^8 equally likely outcomes.
        let mut hits = 0u64;
        for v in 0..1u32 << 16 {
            let set = (0..8).filter(|i| (v >> (2 * i)) & 3 == 0).count();
            hits += (set <= 2) as u64;
        }
        let cdf = binomial_cdf(8, 2, &Probability::ratio(1, 4).unwrap());
        assert_eq!(cdf, Probability::ratio(hits, 1 << 16).unwrap());
        assert_eq!(hits, 44469);
        assert!((cdf.to_f64() - 0.679).abs() < 5e-4);
    }

    #[test]
    fn probability_arithmetic() {
        let p = Probability::pow2_neg(2);
        assert_eq!(p, Probability::ratio(1, 4).unwrap());
        let q = Probability::pow2_neg(8);
        assert_eq!(p.or_else(&q), Probability::ratio(259, 1024).unwrap());
        assert_eq!(p.complement(), Probability::ratio(3, 4).unwrap());
        assert!(Probability::ratio(5, 4).is_err());
        let json = serde_json::to_string(&p).unwrap();
        assert_eq!(json, r#"{"exact":"1/4","approx":0.25}"#);
    }
}
