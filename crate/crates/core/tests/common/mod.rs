#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use fogcache::encoding_sets::{active_window, partition_encoding_set};
use fogcache::model::{Config, Mode, RequestSchedule, SubsetMask, Transmission};
use rand::Rng;

/// Random small instance: K, B, Δb, N, M, arrivals and demands.
pub fn random_instance<R: Rng>(rng: &mut R, max_k: usize, max_b: usize, mode: Mode, f: u64) -> (Config, RequestSchedule) {
    let k = rng.gen_range(1..=max_k);
    let b = rng.gen_range(2..=max_b);
    let delta_b = rng.gen_range(1..=b);
    let n = rng.gen_range(k.max(2)..=k + 3);
    let m = rng.gen_range(1..n);
    let config = Config::new(k, n, m, f, b, delta_b)
        .with_mode(mode)
        .with_seed(rng.gen());
    let arrivals = (0..k).map(|_| rng.gen_range(1..=b)).collect();
    let demands = (0..k).map(|_| rng.gen_range(1..=n)).collect();
    let schedule = RequestSchedule::new(&config, arrivals, demands).unwrap();
    (config, schedule)
}

/// Every arrival vector over `k` F-APs and `b` slots.
pub fn all_arrivals(k: usize, b: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..b.pow(k as u32)).map(move |mut code| {
        (0..k)
            .map(|_| {
                let slot = code % b + 1;
                code /= b;
                slot
            })
            .collect()
    })
}

/// Each (requester, subset) carries a nonzero contribution at most once.
pub fn check_at_most_once(trace: &[Transmission]) -> Result<(), String> {
    let mut seen = BTreeSet::new();
    for t in trace {
        for c in t.composition.iter().filter(|c| c.units > 0) {
            if !seen.insert((c.fap, c.subset)) {
                return Err(format!("W_{},{} sent twice (slot {})", c.fap, c.subset, t.slot));
            }
        }
    }
    Ok(())
}

/// Replays the trace: every mid-slot skip must only touch departing
/// requesters that an earlier slot already served. Assumes every initial
/// subfile is nonempty (expected-size mode).
pub fn check_skip_safety(trace: &[Transmission], config: &Config, schedule: &RequestSchedule) -> Result<(), String> {
    let mut served: BTreeSet<(usize, SubsetMask)> = BTreeSet::new();
    let mut slot = 0;
    let mut pending = Vec::new();
    for t in trace {
        if t.slot != slot {
            served.extend(pending.drain(..));
            slot = t.slot;
        }
        if t.skipped {
            let window = active_window(schedule, t.slot, config.delta_b);
            let set = t.encoding_set();
            let departing = set.intersection(t.active).intersection(window.departing);
            for k in departing.iter() {
                if !served.contains(&(k, set.without(k))) {
                    return Err(format!("slot {}: skip of {set} starves departing F-AP {k}", t.slot));
                }
            }
        }
        pending.extend(t.composition.iter().filter(|c| c.units > 0).map(|c| (c.fap, c.subset)));
    }
    Ok(())
}

/// Nonzero transmissions of each encoding set, grouped by their effective
/// participants, must reproduce the windowed partition of that set.
pub fn check_partition_consistency(trace: &[Transmission], config: &Config, schedule: &RequestSchedule) -> Result<(), String> {
    let mut realized: BTreeMap<SubsetMask, Vec<SubsetMask>> = BTreeMap::new();
    for t in trace.iter().filter(|t| t.length_units > 0) {
        realized.entry(t.encoding_set()).or_default().push(t.effective_participants());
    }
    for mask in 1..1u32 << config.k {
        let set = SubsetMask::from_bits(mask);
        let expected = partition_encoding_set(set, schedule, config.delta_b).map_err(|e| e.to_string())?;
        let got = realized.remove(&set).unwrap_or_default();
        if got != expected {
            return Err(format!("{set}: transmitted pieces {got:?}, partition {expected:?}"));
        }
    }
    Ok(())
}

/// Every F-AP holds its file by its deadline.
pub fn check_deadlines(completion: &[usize], config: &Config, schedule: &RequestSchedule) -> Result<(), String> {
    for k in 1..=config.k {
        let deadline = schedule.deadline(k, config.delta_b);
        if completion[k - 1] > deadline {
            return Err(format!("F-AP {k} done at {} > deadline {deadline}", completion[k - 1]));
        }
    }
    Ok(())
}
