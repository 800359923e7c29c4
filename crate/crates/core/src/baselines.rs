//! Reference schemes and brute-force oracles.

use std::fmt;

use num_rational::Ratio;
use rayon::prelude::*;

use crate::delivery::{simulate, DeliveryError};
use crate::model::{Config, Mode, ModelError, RequestSchedule};

/// Largest demand space `N^K` the exhaustive search accepts.
pub const EXHAUSTIVE_LIMIT: u128 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Uncoded,
    SyncClosedForm,
    SyncSimulated,
    Async,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Uncoded => "uncoded",
            Scheme::SyncClosedForm => "sync-closed-form",
            Scheme::SyncSimulated => "sync-simulated",
            Scheme::Async => "async",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineResult {
    pub scheme: Scheme,
    pub load: Ratio<u128>,
}

/// Every F-AP is unicast the uncached part of its file: `K (1 - M/N)`.
///
/// Repeated demands are still unicast once per request.
pub fn uncoded_load(k: usize, n: usize, m: usize) -> Ratio<u128> {
    Ratio::new(k as u128 * (n - m) as u128, n as u128)
}

/// Load of decentralized synchronous delivery with distinct demands:
/// `(N/M - 1)(1 - (1 - M/N)^K)`.
pub fn sync_closed_form(k: usize, n: usize, m: usize) -> Result<Ratio<u128>, ModelError> {
    let overflow = || ModelError::Overflow(format!("closed form for K={k}, N={n}, M={m}"));
    let n_pow = (n as u128).checked_pow(k as u32).ok_or_else(overflow)?;
    let rest_pow = ((n - m) as u128).checked_pow(k as u32).ok_or_else(overflow)?;
    let coded_gain = Ratio::new(n_pow - rest_pow, n_pow);
    Ok(Ratio::new((n - m) as u128, m as u128) * coded_gain)
}

pub fn baseline(scheme: Scheme, config: &Config) -> Result<BaselineResult, DeliveryError> {
    let load = match scheme {
        Scheme::Uncoded => uncoded_load(config.k, config.n, config.m),
        Scheme::SyncClosedForm => sync_closed_form(config.k, config.n, config.m)?,
        Scheme::SyncSimulated | Scheme::Async => {
            let mut c = config.clone();
            c.mode = Mode::ExpectedSize;
            if scheme == Scheme::SyncSimulated {
                c.delta_b = c.b;
            }
            let arrivals = (1..=c.k).map(|i| (i - 1) % c.b + 1).collect();
            let schedule = RequestSchedule::new(&c, arrivals, (1..=c.k).collect())?;
            simulate(&c, &schedule)?.normalized
        }
    };
    Ok(BaselineResult { scheme, load })
}

/// Demand vector number `code` in lexicographic order (1-based files).
fn demand_vector(mut code: u128, k: usize, n: usize) -> Vec<usize> {
    let mut demands = vec![0; k];
    for slot in demands.iter_mut().rev() {
        *slot = (code % n as u128) as usize + 1;
        code /= n as u128;
    }
    demands
}

/// Runs every demand vector on a tiny instance in expected-size mode and
/// returns a maximizer with its normalized load. Ties go to the vector with
/// the most distinct files, then to the lexicographically first.
pub fn exhaustive_worst_case(
    config: &Config,
    schedule: &RequestSchedule,
) -> Result<(Vec<usize>, Ratio<u128>), DeliveryError> {
    let mut config = config.clone();
    config.mode = Mode::ExpectedSize;
    config.validate()?;
    let space = (config.n as u128)
        .checked_pow(config.k as u32)
        .filter(|&s| s <= EXHAUSTIVE_LIMIT)
        .ok_or_else(|| {
            ModelError::InvalidConfig(format!(
                "exhaustive search needs N^K <= {EXHAUSTIVE_LIMIT} (N={}, K={})",
                config.n, config.k
            ))
        })?;
    let arrivals = schedule.arrivals().to_vec();
    let results = (0..space)
        .into_par_iter()
        .map(|code| {
            let demands = demand_vector(code, config.k, config.n);
            let s = RequestSchedule::new(&config, arrivals.clone(), demands)?;
            Ok((code, simulate(&config, &s)?.normalized))
        })
        .collect::<Result<Vec<_>, DeliveryError>>()?;
    let distinct = |code: u128| {
        let mut d = demand_vector(code, config.k, config.n);
        d.sort_unstable();
        d.dedup();
        d.len()
    };
    let (code, load) = results
        .into_iter()
        .fold(None::<(u128, Ratio<u128>)>, |best, (code, load)| match best {
            Some((b_code, ref b)) if *b > load || (*b == load && distinct(b_code) >= distinct(code)) => best,
            _ => Some((code, load)),
        })
        .expect("nonempty demand space");
    Ok((demand_vector(code, config.k, config.n), load))
}
