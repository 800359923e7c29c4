//! Encoding-set machinery: collapsing a synchronous encoding set onto the
//! requesters that are currently active, active windows, the χ bounds used to
//! split an encoding set into `S¹ ∪ S²`, and the windowed partition of an
//! encoding set into chronologically ordered pieces.

use thiserror::Error;

use crate::model::{RequestSchedule, SubsetMask};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EncodingSetError {
    #[error("encoding set must be nonempty")]
    EmptySet,
}

/// Active requesters at slot `b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActiveWindow {
    pub slot: usize,
    /// `U^a`: union of `U_i` for `i` in `max(1, b-Δb+1)..=b`.
    pub active: SubsetMask,
    /// `U_{b-Δb+1}`: requesters whose deadline is slot `b`.
    pub departing: SubsetMask,
}

/// Half-open slot interval `(beta, gamma]` spanned by the arrivals of an encoding set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActiveInterval {
    pub beta: usize,
    pub gamma: usize,
}

/// Members of `set` that can be served right now.
pub fn collapse(set: SubsetMask, active: SubsetMask) -> SubsetMask {
    set.intersection(active)
}

pub fn active_interval(set: SubsetMask, schedule: &RequestSchedule) -> Result<ActiveInterval, EncodingSetError> {
    let mut slots = set.iter().map(|k| schedule.arrival_slot(k));
    let first = slots.next().ok_or(EncodingSetError::EmptySet)?;
    let (earliest, latest) = slots.fold((first, first), |(lo, hi), b| (lo.min(b), hi.max(b)));
    Ok(ActiveInterval {
        beta: earliest - 1,
        gamma: latest,
    })
}

/// Arrivals in slots `from..=to`.
fn arrivals_between(schedule: &RequestSchedule, from: usize, to: usize) -> SubsetMask {
    (from..=to).fold(SubsetMask::EMPTY, |acc, b| acc.union(schedule.arrivals_in(b)))
}

/// Splits `set` into pieces whose members arrive within `delta_b` consecutive
/// slots, in chronological order.
///
/// Starting from the active interval of the whole set, leading slots without
/// members are skipped; while the remaining interval is at least `delta_b`
/// long a full window is cut off, otherwise everything up to `gamma` forms the
/// last piece. `gamma` is never recomputed after a cut.
pub fn partition_encoding_set(
    set: SubsetMask,
    schedule: &RequestSchedule,
    delta_b: usize,
) -> Result<Vec<SubsetMask>, EncodingSetError> {
    let ActiveInterval { mut beta, gamma } = active_interval(set, schedule)?;
    let mut rest = set;
    let mut pieces = Vec::new();
    while !rest.is_empty() {
        while schedule.arrivals_in(beta + 1).is_disjoint(rest) {
            beta += 1;
        }
        let piece = if gamma - beta >= delta_b {
            let piece = rest.intersection(arrivals_between(schedule, beta + 1, beta + delta_b));
            beta += delta_b;
            piece
        } else {
            rest.intersection(arrivals_between(schedule, beta + 1, gamma))
        };
        rest = rest.difference(piece);
        pieces.push(piece);
    }
    Ok(pieces)
}

/// `(max(1, s+u-K), min(s, u))`; empty when the first exceeds the second.
pub fn chi_range(s: usize, u: usize, k: usize) -> (usize, usize) {
    let lower = (s + u).saturating_sub(k).max(1);
    (lower, s.min(u))
}

pub fn active_window(schedule: &RequestSchedule, slot: usize, delta_b: usize) -> ActiveWindow {
    let first = (slot + 1).saturating_sub(delta_b).max(1);
    let departing = if slot >= delta_b {
        schedule.arrivals_in(slot + 1 - delta_b)
    } else {
        SubsetMask::EMPTY
    };
    ActiveWindow {
        slot,
        active: arrivals_between(schedule, first, slot),
        departing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_subset, Config};
    use proptest::prelude::*;

    fn set(v: &[usize]) -> SubsetMask {
        make_subset(v, 4).unwrap()
    }

    fn example1() -> RequestSchedule {
        let config = Config::new(4, 4, 2, 16, 4, 2);
        RequestSchedule::new(&config, vec![1, 2, 3, 4], vec![1, 2, 3, 4]).unwrap()
    }

    #[test]
    fn collapse_examples() {
        assert_eq!(collapse(set(&[1, 2, 3, 4]), set(&[1, 2])), set(&[1, 2]));
        assert_eq!(collapse(set(&[2, 3]), set(&[1, 2, 3])), set(&[2, 3]));
        assert_eq!(collapse(set(&[3, 4]), set(&[1, 2])), SubsetMask::EMPTY);
    }

    #[test]
    fn active_interval_examples() {
        let s = example1();
        assert_eq!(active_interval(set(&[1, 2, 3, 4]), &s), Ok(ActiveInterval { beta: 0, gamma: 4 }));
        assert_eq!(active_interval(set(&[3]), &s), Ok(ActiveInterval { beta: 2, gamma: 3 }));
        assert_eq!(active_interval(set(&[1, 4]), &s), Ok(ActiveInterval { beta: 0, gamma: 4 }));
        assert_eq!(active_interval(SubsetMask::EMPTY, &s), Err(EncodingSetError::EmptySet));
    }

    #[test]
    fn partition_examples() {
        let s = example1();
        assert_eq!(
            partition_encoding_set(set(&[1, 2, 3, 4]), &s, 2).unwrap(),
            vec![set(&[1, 2]), set(&[3, 4])]
        );
        assert_eq!(partition_encoding_set(set(&[1, 2, 4]), &s, 4).unwrap(), vec![set(&[1, 2, 4])]);
        assert_eq!(partition_encoding_set(set(&[1, 3]), &s, 1).unwrap(), vec![set(&[1]), set(&[3])]);
        assert_eq!(partition_encoding_set(SubsetMask::EMPTY, &s, 2), Err(EncodingSetError::EmptySet));
    }

    #[test]
    fn partition_tolerates_gaps_inside_a_window() {
        let config = Config::new(3, 3, 1, 16, 5, 3);
        let s = RequestSchedule::new(&config, vec![1, 3, 5], vec![1, 2, 3]).unwrap();
        let all = make_subset(&[1, 2, 3], 3).unwrap();
        assert_eq!(
            partition_encoding_set(all, &s, 3).unwrap(),
            vec![make_subset(&[1, 2], 3).unwrap(), make_subset(&[3], 3).unwrap()]
        );
    }

    #[test]
    fn chi_range_examples() {
        assert_eq!(chi_range(4, 1, 4), (1, 1));
        assert_eq!(chi_range(4, 2, 4), (2, 2));
        assert_eq!(chi_range(2, 2, 4), (1, 2));
        let (lo, hi) = chi_range(3, 0, 4);
        assert!(lo > hi, "no departing requesters means no pairs");
    }

    #[test]
    fn active_window_examples() {
        let s = example1();
        let w = active_window(&s, 3, 2);
        assert_eq!((w.active, w.departing), (set(&[2, 3]), set(&[2])));
        assert_eq!(active_window(&s, 1, 2).departing, SubsetMask::EMPTY);
        let w = active_window(&s, 4, 2);
        assert_eq!((w.active, w.departing), (set(&[3, 4]), set(&[3])));
    }

    /// Every arrival vector over `k` F-APs and `b` slots.
    fn all_schedules(k: usize, b: usize) -> Vec<RequestSchedule> {
        let config = Config::new(k, k.max(2), 1, 16, b, 1);
        (0..b.pow(k as u32))
            .map(|mut code| {
                let arrivals = (0..k)
                    .map(|_| {
                        let slot = code % b + 1;
                        code /= b;
                        slot
                    })
                    .collect();
                RequestSchedule::new(&config, arrivals, (1..=k).collect()).unwrap()
            })
            .collect()
    }

    #[test]
    fn partition_properties_exhaustive() {
        for k in 1..=5 {
            for b in 2..=5 {
                for schedule in all_schedules(k, b) {
                    for delta_b in 1..=b {
                        for mask in 1..1u32 << k {
                            let s = SubsetMask::from_bits(mask);
                            let pieces = partition_encoding_set(s, &schedule, delta_b).unwrap();
                            let mut union = SubsetMask::EMPTY;
                            for piece in &pieces {
                                assert!(!piece.is_empty());
                                assert!(piece.is_disjoint(union));
                                union = union.union(*piece);
                                let iv = active_interval(*piece, &schedule).unwrap();
                                assert!(iv.gamma - iv.beta <= delta_b, "piece spans > delta_b slots");
                            }
                            assert_eq!(union, s);
                            if delta_b == b {
                                assert_eq!(pieces, vec![s]);
                            }
                        }
                    }
                }
            }
        }
    }

    proptest! {
        #[test]
        fn collapse_is_idempotent(s in 0u32..1 << 16, a in 0u32..1 << 16) {
            let (s, a) = (SubsetMask::from_bits(s), SubsetMask::from_bits(a));
            prop_assert_eq!(collapse(collapse(s, a), a), collapse(s, a));
            prop_assert!(collapse(s, a).is_subset_of(s));
        }

        #[test]
        fn chi_range_keeps_pairs_feasible(k in 1usize..=16, s in 1usize..=16, u in 0usize..=16) {
            prop_assume!(s <= k && u <= k);
            let (lo, hi) = chi_range(s, u, k);
            for chi in lo..=hi {
                // S¹ nonempty, fits in the departing set, and S² fits in its complement.
                prop_assert!(chi >= 1 && chi <= u && chi <= s);
                prop_assert!(s - chi <= k - u);
            }
        }
    }
}
