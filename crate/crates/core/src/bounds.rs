//! Closed-form sum-SDOF bounds in exact rational arithmetic.
//!
//! Floating point would blur tightness comparisons (upper == lower exactly
//! when K = 2), so everything here is a ratio of big integers.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn int(v: u64) -> BigInt {
    BigInt::from(v)
}

fn ratio(num: BigInt, den: BigInt) -> BigRational {
    BigRational::new(num, den)
}

fn validate(m: u64, k: u64) -> Result<()> {
    if m < 2 || k < 2 {
        return Err(Error::InvalidBoundArgs(format!(
            "need M >= 2 and K >= 2, got M = {m}, K = {k}"
        )));
    }
    Ok(())
}

/// Sum-SDOF upper bound of the confidential X network: K(M-1)/(K+M-2).
pub fn sdof_upper_xncm(m: u64, k: u64) -> Result<BigRational> {
    validate(m, k)?;
    Ok(ratio(int(k) * int(m - 1), int(k + m - 2)))
}

/// Achievable sum SDOF of the confidential X network: the upper bound itself
/// for K = 2, and K(M-1)/(K+M-1) for K >= 3.
pub fn sdof_lower_xncm(m: u64, k: u64) -> Result<BigRational> {
    validate(m, k)?;
    if k == 2 {
        sdof_upper_xncm(m, k)
    } else {
        Ok(ratio(int(k) * int(m - 1), int(k + m - 1)))
    }
}

/// Upper bound with an external eavesdropper: K(M-1)/(K+M-2+1/M), kept exact
/// as KM(M-1)/(M(K+M-2)+1).
pub fn sdof_upper_xncm_ee(m: u64, k: u64) -> Result<BigRational> {
    validate(m, k)?;
    Ok(ratio(int(k) * int(m) * int(m - 1), int(m) * int(k + m - 2) + int(1)))
}

/// Achievable sum SDOF with an external eavesdropper: K(M-1)/(K+M-1).
pub fn sdof_lower_xncm_ee(m: u64, k: u64) -> Result<BigRational> {
    validate(m, k)?;
    Ok(ratio(int(k) * int(m - 1), int(k + m - 1)))
}

/// Sum SDOF the asymptotic layout reaches at a finite order parameter:
/// K(M-1)n^G / (K(n+1)^G + (M-1)n^G) with G = K(M-1). Increases with n
/// toward K(M-1)/(K+M-1).
pub fn achieved_sdof_finite_n(m: u64, k: u64, n: u64) -> Result<BigRational> {
    validate(m, k)?;
    if n == 0 {
        return Err(Error::InvalidBoundArgs("order parameter must be >= 1".into()));
    }
    let gamma = (k * (m - 1)) as u32;
    let n_pow = int(n).pow(gamma);
    let np1_pow = int(n + 1).pow(gamma);
    let num = int(k) * int(m - 1) * &n_pow;
    let den = int(k) * np1_pow + int(m - 1) * n_pow;
    Ok(ratio(num, den))
}

mod serrat {
    //! Rationals as "numerator/denominator" strings in JSON.

    use super::BigRational;
    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};
    use std::str::FromStr;

    pub fn serialize<S: Serializer>(
        r: &BigRational,
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&r.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BigRational, D::Error> {
        let raw = String::deserialize(d)?;
        BigRational::from_str(&raw).map_err(D::Error::custom)
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(
            r: &Option<BigRational>,
            s: S,
        ) -> std::result::Result<S::Ok, S::Error> {
            match r {
                Some(r) => s.serialize_some(&r.to_string()),
                None => s.serialize_none(),
            }
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(
            d: D,
        ) -> std::result::Result<Option<BigRational>, D::Error> {
            let raw: Option<String> = Option::deserialize(d)?;
            raw.map(|raw| BigRational::from_str(&raw).map_err(D::Error::custom))
                .transpose()
        }
    }
}

/// All bound values for one (M, K), with the tightness flag and, when an
/// order parameter is given, the finite-order achieved value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundSet {
    #[serde(with = "serrat")]
    pub upper_xncm: BigRational,
    #[serde(with = "serrat")]
    pub lower_xncm: BigRational,
    #[serde(with = "serrat")]
    pub upper_xncm_ee: BigRational,
    #[serde(with = "serrat")]
    pub lower_xncm_ee: BigRational,
    #[serde(with = "serrat::opt", default, skip_serializing_if = "Option::is_none")]
    pub finite_n_achieved: Option<BigRational>,
    pub tight: bool,
}

pub fn bound_set(m: u64, k: u64, n: Option<u64>) -> Result<BoundSet> {
    let upper_xncm = sdof_upper_xncm(m, k)?;
    let lower_xncm = sdof_lower_xncm(m, k)?;
    Ok(BoundSet {
        tight: upper_xncm == lower_xncm,
        upper_xncm,
        lower_xncm,
        upper_xncm_ee: sdof_upper_xncm_ee(m, k)?,
        lower_xncm_ee: sdof_lower_xncm_ee(m, k)?,
        finite_n_achieved: n.map(|n| achieved_sdof_finite_n(m, k, n)).transpose()?,
    })
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(num: i64, den: i64) -> BigRational {
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    #[test]
    fn upper_bound_values() {
        assert_eq!(sdof_upper_xncm(2, 2).unwrap(), r(1, 1));
        assert_eq!(sdof_upper_xncm(3, 3).unwrap(), r(3, 2));
        // K = M collapses to K/2
        for k in 2..=8u64 {
            assert_eq!(sdof_upper_xncm(k, k).unwrap(), r(k as i64, 2));
        }
    }

    #[test]
    fn lower_bound_values() {
        assert_eq!(sdof_lower_xncm(3, 2).unwrap(), r(4, 3));
        assert_eq!(sdof_lower_xncm(3, 3).unwrap(), r(6, 5));
        assert_eq!(sdof_lower_xncm(2, 2).unwrap(), r(1, 1));
        assert!(bound_set(2, 2, None).unwrap().tight);
        assert!(!bound_set(2, 3, None).unwrap().tight);
    }

    #[test]
    fn eavesdropper_upper_bound_values() {
        assert_eq!(sdof_upper_xncm_ee(2, 2).unwrap(), r(4, 5));
        for m in 2..=16u64 {
            for k in 2..=16 {
                assert!(sdof_upper_xncm_ee(m, k).unwrap() < sdof_upper_xncm(m, k).unwrap());
            }
        }
    }

    #[test]
    fn finite_order_values() {
        assert_eq!(achieved_sdof_finite_n(2, 2, 1).unwrap(), r(2, 9));
        assert_eq!(achieved_sdof_finite_n(2, 2, 2).unwrap(), r(4, 11));
        assert_eq!(achieved_sdof_finite_n(3, 2, 1).unwrap(), r(2, 17));
        assert_eq!(achieved_sdof_finite_n(2, 3, 1).unwrap(), r(3, 25));
    }

    #[test]
    fn finite_order_increases_toward_the_limit() {
        for (m, k) in [(2u64, 2u64), (3, 2), (2, 3), (4, 3)] {
            let limit = sdof_lower_xncm_ee(m, k).unwrap();
            let mut last = achieved_sdof_finite_n(m, k, 1).unwrap();
            assert!(last < limit);
            for n in 2..=6 {
                let next = achieved_sdof_finite_n(m, k, n).unwrap();
                assert!(next > last, "not increasing at n = {n} for ({m},{k})");
                assert!(next < limit);
                last = next;
            }
        }
    }

    #[test]
    fn ordering_holds_across_the_grid() {
        for m in 2..=64u64 {
            for k in 2..=64 {
                let b = bound_set(m, k, None).unwrap();
                assert!(b.lower_xncm_ee <= b.upper_xncm_ee, "({m},{k})");
                assert!(b.upper_xncm_ee <= b.upper_xncm, "({m},{k})");
                assert!(b.lower_xncm <= b.upper_xncm, "({m},{k})");
                assert!(b.lower_xncm > r(0, 1));
                assert_eq!(b.tight, k == 2, "tightness flag at ({m},{k})");
            }
        }
    }

    #[test]
    fn rejects_degenerate_networks() {
        assert!(sdof_upper_xncm(1, 2).is_err());
        assert!(sdof_lower_xncm(2, 1).is_err());
        assert!(achieved_sdof_finite_n(2, 2, 0).is_err());
    }
}
