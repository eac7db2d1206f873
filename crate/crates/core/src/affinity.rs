//! Floating-point cardinality, operand distance and the order-preserving
//! scalar encoding of path-input affinity.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lang::CmpOp;

/// Offset separating affinity levels. Must exceed every scaled distance,
/// whose supremum is `ln(1 + 2^64) ≈ 44.36`.
pub const M: f64 = 128.0;

/// Distance charged when a fork operand is NaN or infinite.
pub const MAX_OPERAND_DISTANCE: u128 = 1 << 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AffinityError {
    #[error("floating-point cardinality is undefined for non-finite value {0}")]
    NonFinite(f64),
    #[error("scaled distance {0} is outside [0, M)")]
    DistanceOutOfRange(f64),
}

/// Position of `x` on a monotone integer line over the finite doubles.
///
/// Adjacent doubles map to adjacent integers; `-0.0` and `+0.0` both map to 0.
pub fn ordered_index(x: f64) -> i64 {
    let bits = x.to_bits();
    let magnitude = (bits & !(1u64 << 63)) as i64;
    if bits >> 63 == 1 {
        -magnitude
    } else {
        magnitude
    }
}

/// Inverse of [`ordered_index`]; index 0 maps to `+0.0`.
pub fn from_ordered_index(i: i64) -> f64 {
    if i < 0 {
        f64::from_bits(i.unsigned_abs() | (1u64 << 63))
    } else {
        f64::from_bits(i as u64)
    }
}

/// Number of distinct doubles in `[min(a, b), max(a, b))`.
pub fn kappa(a: f64, b: f64) -> Result<u64, AffinityError> {
    for v in [a, b] {
        if !v.is_finite() {
            return Err(AffinityError::NonFinite(v));
        }
    }
    Ok(ordered_index(a).abs_diff(ordered_index(b)))
}

/// Unscaled operand distance at a fork whose required comparison is
/// `lhs op rhs`. Non-finite operands get [`MAX_OPERAND_DISTANCE`].
pub fn operand_distance(op: CmpOp, lhs: f64, rhs: f64) -> u128 {
    if op == CmpOp::Ne {
        return 1;
    }
    let Ok(k) = kappa(lhs, rhs) else {
        return MAX_OPERAND_DISTANCE;
    };
    match op {
        CmpOp::Le | CmpOp::Ge | CmpOp::Eq => k as u128,
        CmpOp::Lt | CmpOp::Gt => k as u128 + 1,
        CmpOp::Ne => unreachable!(),
    }
}

/// Resolution of scaled distances. With values rounded to this grid,
/// `u·M + v` is computed exactly for every `u < 1024`, so comparing encoded
/// values never loses a lexicographic distinction between affinities.
pub const V_QUANTUM: f64 = 1.0 / (1u64 << 36) as f64;

/// `ln(1 + v)` rounded to a multiple of [`V_QUANTUM`]; every attainable
/// distance stays far below [`M`].
pub fn scale_v(v_original: u128) -> f64 {
    ((v_original as f64).ln_1p() / V_QUANTUM).round() * V_QUANTUM
}

/// `u·M + v`.
pub fn encode(u: u64, v: f64) -> Result<f64, AffinityError> {
    if !(0.0..M).contains(&v) {
        return Err(AffinityError::DistanceOutOfRange(v));
    }
    Ok(u as f64 * M + v)
}

/// Closeness of an input to triggering a path: `u` branches of the path
/// remain from the fork (inclusive), `v` is the scaled operand distance
/// at the fork. `(0, 0)` means no fork.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affinity {
    pub u: u64,
    pub v: f64,
}

impl Affinity {
    pub const ZERO: Affinity = Affinity { u: 0, v: 0.0 };

    pub fn encode(&self) -> Result<f64, AffinityError> {
        encode(self.u, self.v)
    }
}

/// Lexicographic order on `(u, v)`: `u` first, then `v`.
pub fn lex_compare(p: (u64, f64), q: (u64, f64)) -> Ordering {
    p.0.cmp(&q.0).then_with(|| p.1.total_cmp(&q.1))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent count: step through successive doubles.
    fn walk_count(a: f64, b: f64) -> u64 {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let mut x = lo;
        let mut n = 0;
        while x < hi {
            x = x.next_up();
            // +0.0 and -0.0 are one value
            if x == 0.0 && x.is_sign_negative() {
                x = 0.0;
            }
            n += 1;
        }
        n
    }

    #[test]
    fn kappa_of_equal_values_is_zero() {
        for a in [0.0, 1.0, -3.5, f64::MAX, f64::MIN_POSITIVE, 5e-324] {
            assert_eq!(kappa(a, a).unwrap(), 0);
        }
        assert_eq!(kappa(-0.0, 0.0).unwrap(), 0);
    }

    #[test]
    fn kappa_unit_binade() {
        assert_eq!(kappa(1.0, 2.0).unwrap(), 1 << 52);
        assert_eq!(kappa(2.0, 1.0).unwrap(), 1 << 52);
        assert_eq!(kappa(19.0, 20.0).unwrap(), 1 << 48);
    }

    #[test]
    fn kappa_matches_walk_around_zero() {
        let tiny = 5e-324;
        assert_eq!(kappa(-tiny, tiny).unwrap(), walk_count(-tiny, tiny));
        assert_eq!(kappa(-tiny, tiny).unwrap(), 2);
        let a = -3.0 * tiny;
        assert_eq!(kappa(a, 7.0 * tiny).unwrap(), walk_count(a, 7.0 * tiny));
        let b = 1.0f64;
        let c = f64::from_bits(b.to_bits() + 300);
        assert_eq!(kappa(b, c).unwrap(), 300);
        assert_eq!(walk_count(b, c), 300);
    }

    #[test]
    fn kappa_bound() {
        let k = kappa(f64::MIN, f64::MAX).unwrap();
        assert!((k as u128) < MAX_OPERAND_DISTANCE);
        assert!(kappa(f64::NAN, 1.0).is_err());
        assert!(kappa(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn ordered_index_roundtrip() {
        for x in [0.0, 1.5, -2.25, f64::MAX, f64::MIN, 5e-324, -5e-324] {
            assert_eq!(from_ordered_index(ordered_index(x)).to_bits(), x.to_bits());
        }
        assert_eq!(ordered_index(-0.0), 0);
    }

    #[test]
    fn operand_distance_table() {
        assert_eq!(operand_distance(CmpOp::Eq, 5.0, 5.0), 0);
        assert_eq!(operand_distance(CmpOp::Lt, 1.0, 1.0), 1);
        assert_eq!(operand_distance(CmpOp::Gt, 1.0, 1.0), 1);
        assert_eq!(operand_distance(CmpOp::Ne, 7.0, 7.0), 1);
        assert_eq!(
            operand_distance(CmpOp::Le, 3.2, 3.0),
            kappa(3.2, 3.0).unwrap() as u128
        );
        assert_eq!(
            operand_distance(CmpOp::Eq, f64::NAN, 1.0),
            MAX_OPERAND_DISTANCE
        );
        assert_eq!(
            operand_distance(CmpOp::Ge, f64::NEG_INFINITY, 1.0),
            MAX_OPERAND_DISTANCE
        );
    }

    #[test]
    fn scale_v_values() {
        assert_eq!(scale_v(0), 0.0);
        // ln(1 + 2^64) = 44.36141955583649980275706588... (40-digit reference)
        let top = scale_v(MAX_OPERAND_DISTANCE);
        assert!((top - 44.361_419_555_836_5).abs() <= V_QUANTUM / 2.0);
        assert!(top < M);
        // ln(1 + 2^48) = 33.27106466687737840474...
        assert!((scale_v(1 << 48) - 33.271_064_666_877_38).abs() <= V_QUANTUM / 2.0);
        assert!(scale_v(1) < scale_v(2));
        assert_eq!(scale_v(1) % V_QUANTUM, 0.0);
    }

    #[test]
    fn encode_values() {
        assert_eq!(encode(0, 0.0).unwrap(), 0.0);
        assert_eq!(encode(2, 0.5).unwrap(), 256.5);
        assert!(encode(1, M).is_err());
        assert!(encode(1, -1.0).is_err());
        assert!(encode(1, f64::NAN).is_err());
        assert!(encode(3, M - 1e-9).unwrap() < encode(10, 0.0).unwrap());
    }

    #[test]
    fn lexicographic_examples() {
        assert_eq!(lex_compare((3, 27.0), (10, 1.0)), Ordering::Less);
        assert_eq!(lex_compare((3, 27.0), (3, 42.0)), Ordering::Less);
        assert_eq!(lex_compare((0, 0.0), (0, 0.0)), Ordering::Equal);
        assert_eq!(lex_compare((10, 1.0), (3, 27.0)), Ordering::Greater);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        fn finite() -> impl Strategy<Value = f64> {
            any::<f64>().prop_filter("finite", |x| x.is_finite())
        }

        proptest! {
            #[test]
            fn kappa_is_symmetric(a in finite(), b in finite()) {
                prop_assert_eq!(kappa(a, b).unwrap(), kappa(b, a).unwrap());
            }

            #[test]
            fn kappa_is_additive(mut xs in proptest::array::uniform3(finite())) {
                xs.sort_by(f64::total_cmp);
                let [a, b, c] = xs;
                prop_assert_eq!(
                    kappa(a, c).unwrap() as u128,
                    kappa(a, b).unwrap() as u128 + kappa(b, c).unwrap() as u128
                );
            }

            #[test]
            fn encode_preserves_lex_order(
                u1 in 0u64..64, u2 in 0u64..64,
                v1 in 0.0..M, v2 in 0.0..M,
            ) {
                if lex_compare((u1, v1), (u2, v2)) == Ordering::Less {
                    prop_assert!(encode(u1, v1).unwrap() < encode(u2, v2).unwrap());
                }
            }

            #[test]
            fn encoding_is_exact_for_quantized_v(u in 0u64..1024, k in 0u128..=MAX_OPERAND_DISTANCE) {
                let v = scale_v(k);
                let d = encode(u, v).unwrap();
                prop_assert_eq!(d - (u as f64) * M, v);
            }

            #[test]
            fn scale_v_is_monotone(a in 0u128..=MAX_OPERAND_DISTANCE, b in 0u128..=MAX_OPERAND_DISTANCE) {
                if a < b {
                    prop_assert!(scale_v(a) <= scale_v(b));
                }
            }

            // Distinct integers stay distinct while 1/(1+v) spans several quanta.
            #[test]
            fn scale_v_is_strict_below_2_pow_34(a in 0u128..(1 << 34), b in 0u128..(1 << 34)) {
                if a < b {
                    prop_assert!(scale_v(a) < scale_v(b));
                }
            }
        }
    }
}
