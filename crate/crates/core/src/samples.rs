//! Small programs used throughout the tests and documentation.

/// Loop followed by an equality check that only one double satisfies.
pub const CHECK_SUM: &str = include_str!("../programs/check_sum.awd");
/// Two nested integer equalities; target at `(20, 10)`.
pub const CHECK_DATE: &str = include_str!("../programs/check_date.awd");
/// Cotangent through an inlined `safe_reciprocal`; target reachable only at `x = 0`.
pub const COT: &str = include_str!("../programs/cot.awd");
/// Single `x <= 3.0` guard.
pub const FOO: &str = include_str!("../programs/foo.awd");
/// A square compared against a negative bound; unreachable.
pub const SQUARE_NEGATIVE: &str = include_str!("../programs/square_negative.awd");
