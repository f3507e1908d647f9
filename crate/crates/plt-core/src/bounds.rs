//! Download-rate capacity bounds and the exhaustive integer-program
//! oracle that certifies the converse optimum.
//!
//! For K messages, support size D, and demand dimension L, with
//! R = K mod D and S = gcd(D+R, R) (convention gcd(x, 0) = x, so R = 0
//! gives S = D):
//!
//! * capacity lower bound: 1 / (floor(K/D) + min(R/S, R/L))
//! * capacity upper bound: 1 / (floor(K/D) + min(1, R/L))
//!
//! Both are exact rationals; they coincide exactly when R <= L or R | D.
//! The upper bound comes from minimizing the number of answer symbols
//! over message-group size multiplicities, an integer program whose
//! closed-form optimum is L*floor(K/D) + min(L, R).

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};

/// Largest K the exhaustive integer-program oracle accepts.
pub const ILP_ORACLE_MAX_K: u64 = 40;

/// Exact capacity bounds for one (K, D, L) instance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CapacityBounds {
    pub k: u64,
    pub d: u64,
    pub l: u64,
    /// K mod D.
    pub r: u64,
    /// gcd(D + R, R), with S = D when R = 0.
    pub s: u64,
    pub lower: Ratio<u64>,
    pub upper: Ratio<u64>,
    pub tight: bool,
}

fn validate(k: u64, d: u64, l: u64) -> Result<()> {
    if l < 1 || l > d || d > k {
        return Err(Error::InvalidParameters(format!(
            "need 1 <= L <= D <= K, got K={k} D={d} L={l}"
        )));
    }
    Ok(())
}

/// Remainder and block-granularity parameters (R, S).
pub fn remainder_params(k: u64, d: u64) -> (u64, u64) {
    let r = k % d;
    let s = if r == 0 { d } else { num_integer::gcd(d + r, r) };
    (r, s)
}

/// Capacity bounds of the instance, as exact rationals.
pub fn compute_bounds(k: u64, d: u64, l: u64) -> Result<CapacityBounds> {
    validate(k, d, l)?;
    let (r, s) = remainder_params(k, d);
    let whole = Ratio::from_integer(k / d);
    let lower_den = whole + Ratio::new(r, s).min(Ratio::new(r, l));
    let upper_den = whole + Ratio::from_integer(1).min(Ratio::new(r, l));
    let lower = lower_den.recip();
    let upper = upper_den.recip();
    let tight = r <= l || (r > 0 && d % r == 0);
    debug_assert!(lower <= upper);
    debug_assert_eq!(lower == upper, tight);
    Ok(CapacityBounds {
        k,
        d,
        l,
        r,
        s,
        lower,
        upper,
        tight,
    })
}

/// Optimal value and one minimizer of the group-size program:
/// minimize sum_{j<=L} T_j*j + sum_{L<j<=D} T_j*L subject to
/// sum_j T_j*j = K, T_D >= 1, T_j >= 0, by exhaustive enumeration.
///
/// The witness is returned as multiplicities `T[j-1] = T_j` for
/// j = 1..=D.
pub fn ilp_converse_oracle(k: u64, d: u64, l: u64) -> Result<(u64, Vec<u64>)> {
    validate(k, d, l)?;
    if k > ILP_ORACLE_MAX_K {
        return Err(Error::InstanceTooLarge(format!(
            "exhaustive oracle is capped at K <= {ILP_ORACLE_MAX_K}, got K={k}"
        )));
    }
    let mut best: Option<(u64, Vec<u64>)> = None;
    let mut counts = vec![0u64; d as usize];
    // T_D ranges over 1..=K/D; the rest is a bounded partition search.
    for t_d in 1..=k / d {
        counts[d as usize - 1] = t_d;
        let spent = t_d * l.min(d);
        enumerate_rest(
            k - t_d * d,
            d.saturating_sub(1),
            l,
            spent,
            &mut counts,
            &mut best,
        );
        counts[d as usize - 1] = 0;
    }
    best.ok_or_else(|| Error::InvalidParameters("no feasible group assignment".into()))
}

fn enumerate_rest(
    remaining: u64,
    j: u64,
    l: u64,
    cost: u64,
    counts: &mut Vec<u64>,
    best: &mut Option<(u64, Vec<u64>)>,
) {
    if j == 0 {
        if remaining == 0 && best.as_ref().is_none_or(|(v, _)| cost < *v) {
            *best = Some((cost, counts.clone()));
        }
        return;
    }
    if let Some((v, _)) = best {
        if cost >= *v {
            return; // cannot improve
        }
    }
    for t_j in 0..=remaining / j {
        counts[j as usize - 1] = t_j;
        enumerate_rest(
            remaining - t_j * j,
            j - 1,
            l,
            cost + t_j * l.min(j),
            counts,
            best,
        );
    }
    counts[j as usize - 1] = 0;
}

/// Closed form of the program's optimum: L*floor(K/D) + min(L, R).
pub fn closed_form_converse(k: u64, d: u64, l: u64) -> Result<u64> {
    validate(k, d, l)?;
    Ok(l * (k / d) + l.min(k % d))
}

/// Objective value of a witness, for feasibility checks in tests.
pub fn witness_objective(counts: &[u64], l: u64) -> u64 {
    counts
        .iter()
        .enumerate()
        .map(|(idx, &t)| t * l.min(idx as u64 + 1))
        .sum()
}

/// Whether a witness satisfies the program constraints.
pub fn witness_feasible(counts: &[u64], k: u64, d: u64) -> bool {
    if counts.len() != d as usize {
        return false;
    }
    let total: u64 = counts
        .iter()
        .enumerate()
        .map(|(idx, &t)| t * (idx as u64 + 1))
        .sum();
    total == k && counts[d as usize - 1] >= 1
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_instances() {
        let b = compute_bounds(20, 8, 3).unwrap();
        assert_eq!((b.r, b.s), (4, 4));
        assert_eq!(b.lower, Ratio::new(1, 3));
        assert_eq!(b.upper, Ratio::new(1, 3));
        assert!(b.tight);

        let b = compute_bounds(20, 6, 3).unwrap();
        assert_eq!((b.r, b.s), (2, 2));
        assert_eq!(b.lower, Ratio::new(3, 11));
        assert_eq!(b.upper, Ratio::new(3, 11));
        assert!(b.tight);

        let b = compute_bounds(12, 4, 2).unwrap();
        assert_eq!(b.r, 0);
        assert_eq!(b.s, 4);
        assert_eq!(b.lower, Ratio::new(1, 3));
        assert_eq!(b.upper, Ratio::new(1, 3));
        assert!(b.tight);
    }

    #[test]
    fn oracle_worked_instances() {
        let (v, t) = ilp_converse_oracle(20, 8, 3).unwrap();
        assert_eq!(v, 9);
        assert!(witness_feasible(&t, 20, 8));
        assert_eq!(witness_objective(&t, 3), 9);

        let (v, _) = ilp_converse_oracle(20, 6, 3).unwrap();
        assert_eq!(v, 11);

        let (v, t) = ilp_converse_oracle(12, 4, 2).unwrap();
        assert_eq!(v, 6);
        assert!(witness_feasible(&t, 12, 4));

        assert_eq!(closed_form_converse(5, 5, 5).unwrap(), 5);
    }

    #[test]
    fn paper_witness_is_feasible_and_optimal() {
        // T_8 = 2, T_4 = 1 is another optimum at (20, 8, 3)
        let mut t = vec![0u64; 8];
        t[7] = 2;
        t[3] = 1;
        assert!(witness_feasible(&t, 20, 8));
        assert_eq!(witness_objective(&t, 3), 9);
    }

    #[test]
    fn oracle_agrees_with_closed_form_small_sweep() {
        for k in 1..=18u64 {
            for d in 1..=k {
                for l in 1..=d {
                    let (v, t) = ilp_converse_oracle(k, d, l).unwrap();
                    assert_eq!(v, closed_form_converse(k, d, l).unwrap(), "({k},{d},{l})");
                    assert!(witness_feasible(&t, k, d));
                    assert_eq!(witness_objective(&t, l), v);
                }
            }
        }
    }

    #[test]
    fn bound_relationships() {
        for k in 1..=18u64 {
            for d in 1..=k {
                for l in 1..=d {
                    let b = compute_bounds(k, d, l).unwrap();
                    let closed = closed_form_converse(k, d, l).unwrap();
                    assert_eq!(b.upper, Ratio::new(l, closed));
                    assert!(b.lower <= b.upper);
                    assert_eq!(b.lower == b.upper, b.tight);
                }
            }
        }
    }

    #[test]
    fn parameter_validation() {
        assert!(matches!(
            compute_bounds(3, 5, 1),
            Err(Error::InvalidParameters(_))
        ));
        assert!(matches!(
            compute_bounds(5, 3, 0),
            Err(Error::InvalidParameters(_))
        ));
        assert!(matches!(
            ilp_converse_oracle(100, 3, 2),
            Err(Error::InstanceTooLarge(_))
        ));
    }
}
