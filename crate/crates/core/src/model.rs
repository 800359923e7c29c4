//! Core domain types: configuration, F-AP subsets, request schedules,
//! the per-requester subfile ledger, transmissions and load reports.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported number of F-APs. Subset enumeration is exponential in K.
pub const MAX_FAPS: usize = 16;

/// An exact number of bits. Expected-size runs produce fractional sizes.
pub type Bits = Ratio<u128>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ModelError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("F-AP index {index} out of range 1..={k}")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("duplicate F-AP index {0}")]
    DuplicateIndex(usize),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("file index {index} out of range 1..={n}")]
    FileOutOfRange { index: usize, n: usize },
    #[error("arithmetic overflow: {0}")]
    Overflow(String),
    #[error("failed to parse configuration: {0}")]
    Parse(String),
}

/// How subfile sizes are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Sizes are the exact expected values `F q^|S| (1-q)^(K-|S|)`.
    #[default]
    ExpectedSize,
    /// Bits are placed at random and every transmission carries a real payload.
    SampledBit,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::ExpectedSize => write!(f, "expected-size"),
            Mode::SampledBit => write!(f, "sampled-bit"),
        }
    }
}

fn default_horizon() -> f64 {
    0.0
}

/// System parameters. Field names on the wire are the single-letter symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    /// Number of F-APs.
    #[serde(rename = "K")]
    pub k: usize,
    /// Number of files in the library.
    #[serde(rename = "N")]
    pub n: usize,
    /// Cache size in file units; only integral sizes are supported.
    #[serde(rename = "M")]
    pub m: usize,
    /// File size in bits.
    #[serde(rename = "F")]
    pub f: u64,
    /// Number of time slots.
    #[serde(rename = "B")]
    pub b: usize,
    /// Maximum request delay, in slots.
    pub delta_b: usize,
    /// Time horizon in seconds. Carries no algorithmic weight.
    #[serde(rename = "T", default = "default_horizon")]
    pub t: f64,
    #[serde(default)]
    pub mode: Mode,
    #[serde(default)]
    pub seed: u64,
}

impl Config {
    pub fn new(k: usize, n: usize, m: usize, f: u64, b: usize, delta_b: usize) -> Self {
        Self {
            k,
            n,
            m,
            f,
            b,
            delta_b,
            t: b as f64,
            mode: Mode::ExpectedSize,
            seed: 0,
        }
    }

    pub fn with_mode(mut self, mode: Mode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        let config: Config =
            serde_json::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidConfig(msg));
        if self.k == 0 || self.k > MAX_FAPS {
            return bad(format!("K = {} must be in 1..={MAX_FAPS}", self.k));
        }
        if self.n < self.k {
            return bad(format!("N = {} must be at least K = {}", self.n, self.k));
        }
        if self.m == 0 || self.m >= self.n {
            return bad(format!("M = {} must satisfy 0 < M < N = {}", self.m, self.n));
        }
        if self.f == 0 {
            return bad("F must be positive".into());
        }
        if self.b < 2 {
            return bad(format!("B = {} must be at least 2", self.b));
        }
        if self.delta_b == 0 || self.delta_b > self.b {
            return bad(format!(
                "delta_b = {} must be in 1..=B = {}",
                self.delta_b, self.b
            ));
        }
        if self.mode == Mode::SampledBit && self.f > u32::MAX as u64 {
            return bad("sampled-bit mode requires F < 2^32".into());
        }
        if !self.t.is_finite() || self.t < 0.0 {
            return bad("T must be a finite non-negative number".into());
        }
        // Expected-size bookkeeping needs K * N^K * F to fit in 128 bits.
        self.unit_denominator()?
            .checked_mul(self.k as u128)
            .and_then(|v| v.checked_mul(self.f as u128))
            .ok_or_else(|| {
                ModelError::Overflow(format!("K * N^K * F too large for N={}, K={}", self.n, self.k))
            })?;
        Ok(())
    }

    /// `N^K`: denominator of every expected subfile size, relative to F.
    pub fn unit_denominator(&self) -> Result<u128, ModelError> {
        (self.n as u128)
            .checked_pow(self.k as u32)
            .ok_or_else(|| ModelError::Overflow(format!("N^K for N={}, K={}", self.n, self.k)))
    }

    /// Slot length `T / B`; cosmetic.
    pub fn slot_duration(&self) -> f64 {
        self.t / self.b as f64
    }

    /// `q = M / N`.
    pub fn cache_fraction(&self) -> Ratio<u128> {
        Ratio::new(self.m as u128, self.n as u128)
    }

    pub fn all_faps(&self) -> SubsetMask {
        SubsetMask::full(self.k)
    }

    pub fn is_synchronous(&self) -> bool {
        self.delta_b == self.b
    }
}

/// A subset of F-AP indices `1..=K`, stored as a bitmask (bit `k-1` for F-AP `k`).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct SubsetMask(u32);

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask(0);

    pub fn from_bits(bits: u32) -> Self {
        SubsetMask(bits)
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn full(k: usize) -> Self {
        debug_assert!(k <= MAX_FAPS);
        SubsetMask(((1u64 << k) - 1) as u32)
    }

    pub fn singleton(fap: usize) -> Self {
        debug_assert!((1..=MAX_FAPS).contains(&fap));
        SubsetMask(1 << (fap - 1))
    }

    pub fn contains(self, fap: usize) -> bool {
        (1..=32).contains(&fap) && self.0 & (1 << (fap - 1)) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn union(self, other: Self) -> Self {
        SubsetMask(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        SubsetMask(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        SubsetMask(self.0 & !other.0)
    }

    pub fn without(self, fap: usize) -> Self {
        self.difference(SubsetMask::singleton(fap))
    }

    pub fn with(self, fap: usize) -> Self {
        self.union(SubsetMask::singleton(fap))
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: Self) -> bool {
        self.0 & other.0 == 0
    }

    /// Complement within `1..=k`.
    pub fn complement(self, k: usize) -> Self {
        SubsetMask::full(k).difference(self)
    }

    /// Members in ascending order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let low = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(low + 1)
            }
        })
    }

    /// All subsets of `self`, ascending by mask value, starting at the empty set.
    pub fn submasks(self) -> impl Iterator<Item = SubsetMask> {
        let ground = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let current = next?;
            let succ = current.wrapping_sub(ground) & ground;
            next = if succ == 0 { None } else { Some(succ) };
            Some(SubsetMask(current))
        })
    }
}

impl fmt::Debug for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, member) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{member}")?;
        }
        f.write_str("}")
    }
}

/// Builds a mask from 1-based F-AP indices.
pub fn make_subset(indices: &[usize], k: usize) -> Result<SubsetMask, ModelError> {
    let mut mask = SubsetMask::EMPTY;
    for &index in indices {
        if index == 0 || index > k || index > MAX_FAPS {
            return Err(ModelError::IndexOutOfRange { index, k });
        }
        if mask.contains(index) {
            return Err(ModelError::DuplicateIndex(index));
        }
        mask = mask.with(index);
    }
    Ok(mask)
}

/// All subsets of `ground` with exactly `size` members, ascending by mask value.
pub fn enumerate_subsets(ground: SubsetMask, size: usize) -> Vec<SubsetMask> {
    if size > ground.len() {
        return Vec::new();
    }
    ground.submasks().filter(|s| s.len() == size).collect()
}

/// Arrival slot and demanded file of every F-AP.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RequestSchedule {
    slots: usize,
    arrival: Vec<usize>,
    demand: Vec<usize>,
}

impl RequestSchedule {
    /// `arrivals[k-1]` is the slot (1-based) of F-AP k; `demands[k-1]` its file (1-based).
    pub fn new(config: &Config, arrivals: Vec<usize>, demands: Vec<usize>) -> Result<Self, ModelError> {
        if arrivals.len() != config.k || demands.len() != config.k {
            return Err(ModelError::InvalidSchedule(format!(
                "expected {} arrivals and demands, got {} and {}",
                config.k,
                arrivals.len(),
                demands.len()
            )));
        }
        if let Some(slot) = arrivals.iter().find(|&&b| b == 0 || b > config.b) {
            return Err(ModelError::InvalidSchedule(format!(
                "arrival slot {slot} outside 1..={}",
                config.b
            )));
        }
        if let Some(&file) = demands.iter().find(|&&d| d == 0 || d > config.n) {
            return Err(ModelError::FileOutOfRange { index: file, n: config.n });
        }
        Ok(Self {
            slots: config.b,
            arrival: arrivals,
            demand: demands,
        })
    }

    pub fn fap_count(&self) -> usize {
        self.arrival.len()
    }

    pub fn slot_count(&self) -> usize {
        self.slots
    }

    pub fn arrival_slot(&self, fap: usize) -> usize {
        self.arrival[fap - 1]
    }

    pub fn demand(&self, fap: usize) -> usize {
        self.demand[fap - 1]
    }

    pub fn arrivals(&self) -> &[usize] {
        &self.arrival
    }

    pub fn demands(&self) -> &[usize] {
        &self.demand
    }

    /// `U_b`: F-APs whose request arrives in slot `b`. Empty outside `1..=B`.
    pub fn arrivals_in(&self, slot: usize) -> SubsetMask {
        self.arrival
            .iter()
            .enumerate()
            .filter(|&(_, &b)| b == slot)
            .fold(SubsetMask::EMPTY, |acc, (i, _)| acc.with(i + 1))
    }

    /// Last slot by which F-AP `fap` must hold its whole file.
    pub fn deadline(&self, fap: usize, delta_b: usize) -> usize {
        self.arrival_slot(fap) + delta_b - 1
    }
}

/// Server-side record of what each requester still needs.
///
/// Entries are indexed by `(requester, subset)` with the requester outside the
/// subset. Sizes are kept in integral units (`F / N^K` bits in expected-size
/// mode, single bits in sampled-bit mode). A separate delivered flag records
/// that the subfile was carried by some transmission, which is distinct from
/// its size being zero.
#[derive(Debug, Clone)]
pub struct SubfileLedger {
    k: usize,
    remaining: Vec<u128>,
    delivered: Vec<bool>,
    bit_indices: Option<Vec<Vec<u32>>>,
}

impl SubfileLedger {
    /// Ledger for expected sizes: `sizes[k-1][S]` is the initial size of
    /// `W_{d_k,S}` in units.
    pub fn from_units(k: usize, sizes: Vec<Vec<u128>>) -> Self {
        let width = 1usize << k;
        let mut remaining = vec![0u128; k * width];
        for (i, row) in sizes.into_iter().enumerate() {
            let fap = i + 1;
            for (mask, size) in row.into_iter().enumerate() {
                if !SubsetMask::from_bits(mask as u32).contains(fap) {
                    remaining[i * width + mask] = size;
                }
            }
        }
        Self {
            k,
            remaining,
            delivered: vec![false; k * width],
            bit_indices: None,
        }
    }

    /// Ledger for sampled bits: `bits[k-1][S]` lists the bit indices of
    /// file `d_k` cached exactly by `S`.
    pub fn from_bit_indices(k: usize, bits: Vec<Vec<Vec<u32>>>) -> Self {
        let width = 1usize << k;
        let mut remaining = vec![0u128; k * width];
        let mut indices = vec![Vec::new(); k * width];
        for (i, row) in bits.into_iter().enumerate() {
            let fap = i + 1;
            for (mask, set) in row.into_iter().enumerate() {
                if !SubsetMask::from_bits(mask as u32).contains(fap) {
                    remaining[i * width + mask] = set.len() as u128;
                    indices[i * width + mask] = set;
                }
            }
        }
        Self {
            k,
            remaining,
            delivered: vec![false; k * width],
            bit_indices: Some(indices),
        }
    }

    fn slot(&self, fap: usize, subset: SubsetMask) -> usize {
        debug_assert!(!subset.contains(fap));
        (fap - 1) * (1 << self.k) + subset.bits() as usize
    }

    pub fn fap_count(&self) -> usize {
        self.k
    }

    pub fn remaining(&self, fap: usize, subset: SubsetMask) -> u128 {
        self.remaining[self.slot(fap, subset)]
    }

    pub fn is_delivered(&self, fap: usize, subset: SubsetMask) -> bool {
        self.delivered[self.slot(fap, subset)]
    }

    /// Bit indices still missing for `(fap, subset)`; sampled-bit mode only.
    pub fn remaining_bits(&self, fap: usize, subset: SubsetMask) -> Option<&[u32]> {
        let slot = self.slot(fap, subset);
        self.bit_indices.as_ref().map(|b| b[slot].as_slice())
    }

    /// Total units still needed by `fap`.
    pub fn outstanding(&self, fap: usize) -> u128 {
        let width = 1usize << self.k;
        self.remaining[(fap - 1) * width..fap * width].iter().sum()
    }

    /// Records that `fap` recovered `W_{fap,subset}`. Returns the units removed.
    pub fn mark_recovered(&mut self, fap: usize, subset: SubsetMask) -> u128 {
        let slot = self.slot(fap, subset);
        self.delivered[slot] = true;
        if let Some(bits) = self.bit_indices.as_mut() {
            bits[slot].clear();
        }
        std::mem::take(&mut self.remaining[slot])
    }
}

/// One subfile carried inside a coded multicast.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    /// Requester that wants this subfile.
    pub fap: usize,
    /// Subset that caches it exclusively.
    pub subset: SubsetMask,
    /// Remaining size in ledger units at emission time.
    pub units: u128,
}

/// One coded-multicast emission (or a planned emission suppressed by the skip rule).
#[derive(Debug, Clone, PartialEq)]
pub struct Transmission {
    pub slot: usize,
    pub s: usize,
    pub chi: usize,
    pub s1: SubsetMask,
    pub s2: SubsetMask,
    /// Active set `U^a` at emission.
    pub active: SubsetMask,
    /// Requesters whose subfiles are XOR'ed together.
    pub participants: SubsetMask,
    pub composition: Vec<Component>,
    /// Zero-padded payload length in ledger units.
    pub length_units: u128,
    pub length_bits: Bits,
    /// Whether the skip rule suppressed this pair.
    pub skipped: bool,
    /// XOR payload; sampled-bit mode only.
    pub payload: Option<bitvec::vec::BitVec<u64>>,
}

impl Transmission {
    /// `S¹ ∪ S²`.
    pub fn encoding_set(&self) -> SubsetMask {
        self.s1.union(self.s2)
    }

    /// Requesters whose component carried a nonzero number of bits.
    pub fn effective_participants(&self) -> SubsetMask {
        self.composition
            .iter()
            .filter(|c| c.units > 0)
            .fold(SubsetMask::EMPTY, |acc, c| acc.with(c.fap))
    }

    pub fn check_invariants(&self) -> Result<(), String> {
        if !self.s1.is_disjoint(self.s2) {
            return Err(format!("S1 {} and S2 {} overlap", self.s1, self.s2));
        }
        if self.s1.len() + self.s2.len() != self.s {
            return Err(format!("|S1|+|S2| != s = {}", self.s));
        }
        if !self.participants.is_subset_of(self.encoding_set()) {
            return Err(format!(
                "participants {} outside encoding set {}",
                self.participants,
                self.encoding_set()
            ));
        }
        let longest = self.composition.iter().map(|c| c.units).max().unwrap_or(0);
        if longest != self.length_units {
            return Err(format!(
                "length {} differs from longest component {longest}",
                self.length_units
            ));
        }
        Ok(())
    }

    /// One tab-separated trace line:
    /// slot, s, chi, S1, S2, active set, composition, length in bits.
    pub fn to_trace_line(&self) -> String {
        let composition = if self.composition.is_empty() {
            "-".to_string()
        } else {
            self.composition
                .iter()
                .map(|c| format!("{}:{}", c.fap, c.subset))
                .collect::<Vec<_>>()
                .join("+")
        };
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}",
            self.slot,
            self.s,
            self.chi,
            self.s1,
            self.s2,
            self.active,
            composition,
            self.length_bits
        )
    }
}

pub const TRACE_HEADER: &str = "slot\ts\tchi\tS1\tS2\tactive_set\tcomposition\tlength_bits";

/// Renders a trace in the tab-separated export format, header included.
pub fn render_trace(trace: &[Transmission]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for t in trace {
        out.push_str(&t.to_trace_line());
        out.push('\n');
    }
    out
}

/// Fronthaul load of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadReport {
    pub file_bits: u64,
    /// Load of slot `b` at index `b-1`.
    pub per_slot: Vec<Bits>,
    pub total: Bits,
    /// `total / F`.
    pub normalized: Ratio<u128>,
    pub trace: Vec<Transmission>,
    /// Slot in which each F-AP held its complete file (index `k-1`).
    pub completion: Vec<usize>,
    /// Per (F-AP, file) cache budget lost to flooring `MF/N` (sampled-bit mode).
    pub cache_shortfall: Bits,
}

impl LoadReport {
    pub fn normalized_f64(&self) -> f64 {
        ratio_to_f64(&self.normalized)
    }

    pub fn transmitted(&self) -> impl Iterator<Item = &Transmission> {
        self.trace.iter().filter(|t| t.length_units > 0)
    }
}

impl fmt::Display for LoadReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "file size F = {} bits", self.file_bits)?;
        for (i, load) in self.per_slot.iter().enumerate() {
            writeln!(f, "slot {}: {} bits", i + 1, load)?;
        }
        writeln!(f, "total: {} bits", self.total)?;
        writeln!(
            f,
            "normalized fronthaul load: {} ({:.6})",
            self.normalized,
            self.normalized_f64()
        )?;
        if self.cache_shortfall > Bits::from_integer(0) {
            writeln!(
                f,
                "note: MF/N not integral, {} bits per file and cache left unused",
                self.cache_shortfall
            )?;
        }
        Ok(())
    }
}

pub fn ratio_to_f64(r: &Ratio<u128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Sums transmission lengths per slot and overall.
pub fn load_of(trace: Vec<Transmission>, slots: usize, file_bits: u64) -> LoadReport {
    let zero = Bits::from_integer(0);
    let mut per_slot = vec![zero; slots];
    for t in &trace {
        per_slot[t.slot - 1] += t.length_bits;
    }
    let total = per_slot.iter().fold(zero, |acc, x| acc + x);
    let normalized = total / Bits::from_integer(file_bits as u128);
    LoadReport {
        file_bits,
        per_slot,
        total,
        normalized,
        trace,
        completion: Vec::new(),
        cache_shortfall: zero,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn make_subset_examples() {
        assert_eq!(make_subset(&[1, 2], 4).unwrap(), SubsetMask::from_bits(0b0011));
        assert_eq!(make_subset(&[], 4).unwrap(), SubsetMask::EMPTY);
        assert_eq!(make_subset(&[1, 2, 3, 4], 4).unwrap(), SubsetMask::full(4));
        assert_eq!(
            make_subset(&[5], 4),
            Err(ModelError::IndexOutOfRange { index: 5, k: 4 })
        );
        assert_eq!(make_subset(&[0], 4), Err(ModelError::IndexOutOfRange { index: 0, k: 4 }));
        assert_eq!(make_subset(&[2, 2], 4), Err(ModelError::DuplicateIndex(2)));
    }

    #[test]
    fn enumerate_subsets_examples() {
        let s = |v: &[usize]| make_subset(v, 4).unwrap();
        assert_eq!(
            enumerate_subsets(s(&[1, 2, 3]), 2),
            vec![s(&[1, 2]), s(&[1, 3]), s(&[2, 3])]
        );
        assert_eq!(enumerate_subsets(s(&[3, 4]), 2), vec![s(&[3, 4])]);
        assert_eq!(enumerate_subsets(SubsetMask::EMPTY, 0), vec![SubsetMask::EMPTY]);
        assert!(enumerate_subsets(s(&[1]), 2).is_empty());
    }

    #[test]
    fn display_and_iteration() {
        let s = make_subset(&[4, 1, 3], 4).unwrap();
        assert_eq!(s.to_string(), "{1,3,4}");
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![1, 3, 4]);
        assert_eq!(SubsetMask::EMPTY.to_string(), "{}");
        assert_eq!(s.complement(4).to_string(), "{2}");
    }

    #[test]
    fn config_validation() {
        assert!(Config::new(4, 4, 2, 16, 4, 2).validate().is_ok());
        assert!(Config::new(4, 4, 4, 16, 4, 2).validate().is_err(), "M = N");
        assert!(Config::new(4, 4, 0, 16, 4, 2).validate().is_err(), "M = 0");
        assert!(Config::new(5, 4, 2, 16, 4, 2).validate().is_err(), "N < K");
        assert!(Config::new(4, 4, 2, 16, 1, 1).validate().is_err(), "B < 2");
        assert!(Config::new(4, 4, 2, 16, 4, 0).validate().is_err(), "delta_b = 0");
        assert!(Config::new(4, 4, 2, 16, 4, 5).validate().is_err(), "delta_b > B");
        assert!(Config::new(17, 20, 2, 16, 4, 2).validate().is_err(), "K > 16");
        assert!(Config::new(10, 100, 50, 1_000_000_000, 5, 2).validate().is_ok());
    }

    #[test]
    fn config_json_rejects_unknown_fields() {
        let ok = r#"{"K":4,"N":4,"M":2,"F":16,"B":4,"delta_b":2,"T":4.0,"mode":"sampled-bit","seed":7}"#;
        let c = Config::from_json(ok).unwrap();
        assert_eq!((c.k, c.n, c.m, c.f, c.b, c.delta_b, c.seed), (4, 4, 2, 16, 4, 2, 7));
        assert_eq!(c.mode, Mode::SampledBit);
        assert_eq!(c.slot_duration(), 1.0);

        let unknown = r#"{"K":4,"N":4,"M":2,"F":16,"B":4,"delta_b":2,"gamma":1}"#;
        assert!(matches!(Config::from_json(unknown), Err(ModelError::Parse(_))));
        let invalid = r#"{"K":4,"N":4,"M":4,"F":16,"B":4,"delta_b":2}"#;
        assert!(matches!(Config::from_json(invalid), Err(ModelError::InvalidConfig(_))));
    }

    #[test]
    fn schedule_partitions_faps() {
        let config = Config::new(4, 4, 2, 16, 4, 2);
        let schedule = RequestSchedule::new(&config, vec![1, 1, 3, 4], vec![1, 2, 3, 4]).unwrap();
        let union = (1..=4).fold(SubsetMask::EMPTY, |acc, b| {
            let u = schedule.arrivals_in(b);
            assert!(acc.is_disjoint(u));
            acc.union(u)
        });
        assert_eq!(union, SubsetMask::full(4));
        assert!(schedule.arrivals_in(2).is_empty());
        assert!(RequestSchedule::new(&config, vec![1, 1, 5, 4], vec![1, 2, 3, 4]).is_err());
        assert!(RequestSchedule::new(&config, vec![1, 1, 3, 4], vec![1, 2, 3, 5]).is_err());
        assert!(RequestSchedule::new(&config, vec![1, 1, 3], vec![1, 2, 3]).is_err());
    }

    #[test]
    fn ledger_only_shrinks() {
        let mut ledger = SubfileLedger::from_units(2, vec![vec![1, 2, 3, 4], vec![5, 6, 7, 8]]);
        let s = SubsetMask::singleton;
        // Entries for subsets containing the requester are not tracked.
        assert_eq!(ledger.outstanding(1), 1 + 3);
        assert_eq!(ledger.outstanding(2), 5 + 6);
        assert!(!ledger.is_delivered(1, s(2)));
        assert_eq!(ledger.mark_recovered(1, s(2)), 3);
        assert_eq!(ledger.remaining(1, s(2)), 0);
        assert!(ledger.is_delivered(1, s(2)));
        assert_eq!(ledger.mark_recovered(1, s(2)), 0);
        assert_eq!(ledger.outstanding(1), 1);
    }

    #[test]
    fn load_of_empty_trace_is_zero() {
        let report = load_of(Vec::new(), 4, 16);
        assert_eq!(report.normalized, Ratio::from_integer(0));
        assert_eq!(report.per_slot.len(), 4);
    }
}
