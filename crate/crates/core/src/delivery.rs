//! Slot-by-slot delivery engine.
//!
//! With `Δb < B` the server stays silent for the first `Δb - 1` slots, then at
//! the end of every slot `b < B` serves the requesters whose deadline is `b`
//! (mid-slot branch) and at slot `B` serves every requester still active
//! (final branch). With `Δb = B` it stays silent until `B` and sends the
//! synchronous decentralized delivery. After each transmitting slot every
//! participant decodes its subfiles and the server updates its cache records.

use std::collections::{BTreeMap, BTreeSet};

use bitvec::vec::BitVec;
use thiserror::Error;

use crate::encoding_sets::{active_window, chi_range, ActiveWindow};
use crate::model::{
    enumerate_subsets, load_of, Bits, Component, Config, LoadReport, Mode, ModelError,
    RequestSchedule, SubfileLedger, SubsetMask, Transmission,
};
use crate::placement::{place_caches, PlacementProfile};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DeliveryError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("F-AP {fap} not served by its deadline slot {deadline} (completed: {completion:?})")]
    FeasibilityViolation {
        fap: usize,
        deadline: usize,
        completion: Option<usize>,
    },
    #[error("F-AP {fap} lacks side information: bit {bit} of file {file} is not cached")]
    MissingSideInformation { fap: usize, file: usize, bit: u32 },
    #[error("F-AP {fap} decoded a file that differs from the original")]
    DecodeMismatch { fap: usize },
    #[error("internal consistency violation: {0}")]
    Inconsistent(String),
}

/// How the mid-slot skip test quantifies over the active participants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SkipRule {
    /// Skip as soon as any active participant already received its component.
    #[default]
    AnyDelivered,
    /// Skip only when every active participant already received its component.
    AllDelivered,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct EngineOptions {
    pub skip_rule: SkipRule,
}

/// Subfiles recovered in one slot, keyed by F-AP.
pub type Recovered = BTreeMap<usize, Vec<SubsetMask>>;

/// Mid-slot skip test with the default rule.
///
/// `participants` is `(S¹ ∪ S²) ∩ U^a`. A pair is skipped when nobody active
/// can use it, when some active participant's component was already
/// delivered, or when every active component is empty.
pub fn skip_check(s1: SubsetMask, s2: SubsetMask, participants: SubsetMask, ledger: &SubfileLedger) -> bool {
    skip_check_with(SkipRule::AnyDelivered, s1.union(s2), participants, ledger)
}

pub fn skip_check_with(
    rule: SkipRule,
    encoding_set: SubsetMask,
    participants: SubsetMask,
    ledger: &SubfileLedger,
) -> bool {
    if participants.is_empty() {
        return true;
    }
    let done = |k: usize| {
        let subset = encoding_set.without(k);
        ledger.is_delivered(k, subset) || ledger.remaining(k, subset) == 0
    };
    match rule {
        SkipRule::AnyDelivered => {
            participants.iter().any(|k| ledger.is_delivered(k, encoding_set.without(k)))
                || participants.iter().all(done)
        }
        SkipRule::AllDelivered => participants.iter().all(done),
    }
}

/// Bit-level state, present only in sampled-bit mode.
#[derive(Debug, Clone)]
struct BitState {
    /// Original contents of every demanded file.
    files: BTreeMap<usize, BitVec<u64>>,
    /// Per demanded file, the mask of F-APs caching each bit.
    owners: BTreeMap<usize, Vec<u32>>,
    /// Each F-AP's reconstruction of its file and which positions it holds.
    estimate: Vec<BitVec<u64>>,
    known: Vec<BitVec<u64>>,
}

impl BitState {
    fn cached_value(&self, fap: usize, file: usize, bit: u32) -> Result<bool, DeliveryError> {
        if self.owners[&file][bit as usize] & (1 << (fap - 1)) == 0 {
            return Err(DeliveryError::MissingSideInformation { fap, file, bit });
        }
        Ok(self.files[&file][bit as usize])
    }
}

#[derive(Debug, Clone)]
pub struct DeliveryState<'a> {
    config: &'a Config,
    schedule: &'a RequestSchedule,
    options: EngineOptions,
    ledger: SubfileLedger,
    unit: Bits,
    cache_shortfall: Bits,
    window: ActiveWindow,
    trace: Vec<Transmission>,
    bits: Option<BitState>,
    completion: Vec<Option<usize>>,
}

impl<'a> DeliveryState<'a> {
    pub fn new(
        config: &'a Config,
        schedule: &'a RequestSchedule,
        placement: &PlacementProfile,
        options: EngineOptions,
    ) -> Result<Self, DeliveryError> {
        config.validate()?;
        if schedule.fap_count() != config.k || schedule.slot_count() != config.b {
            return Err(ModelError::InvalidSchedule("schedule does not match configuration".into()).into());
        }
        if placement.mode() != config.mode || placement.fap_count() != config.k {
            return Err(ModelError::InvalidConfig("placement does not match configuration".into()).into());
        }
        let k = config.k;
        let demanded: BTreeSet<usize> = schedule.demands().iter().copied().collect();
        let (ledger, bits) = match config.mode {
            Mode::ExpectedSize => {
                let sizes = (1..=k)
                    .map(|fap| placement.subfile_units(schedule.demand(fap)))
                    .collect::<Result<Vec<_>, _>>()?;
                (SubfileLedger::from_units(k, sizes), None)
            }
            Mode::SampledBit => {
                let mut files = BTreeMap::new();
                let mut owners = BTreeMap::new();
                for &file in &demanded {
                    files.insert(file, placement.file_contents(file)?);
                    owners.insert(file, placement.bit_owners(file)?);
                }
                let f = config.f as usize;
                let mut indices = Vec::with_capacity(k);
                let mut estimate = Vec::with_capacity(k);
                let mut known = Vec::with_capacity(k);
                for fap in 1..=k {
                    let file = schedule.demand(fap);
                    let mut subfiles = vec![Vec::new(); 1 << k];
                    let mut est = BitVec::<u64>::repeat(false, f);
                    let mut have = BitVec::<u64>::repeat(false, f);
                    for (bit, &mask) in owners[&file].iter().enumerate() {
                        subfiles[mask as usize].push(bit as u32);
                        if mask & (1 << (fap - 1)) != 0 {
                            est.set(bit, files[&file][bit]);
                            have.set(bit, true);
                        }
                    }
                    indices.push(subfiles);
                    estimate.push(est);
                    known.push(have);
                }
                let state = BitState {
                    files,
                    owners,
                    estimate,
                    known,
                };
                (SubfileLedger::from_bit_indices(k, indices), Some(state))
            }
        };
        Ok(Self {
            config,
            schedule,
            options,
            ledger,
            unit: placement.unit_bits(),
            cache_shortfall: placement.cache_shortfall(),
            window: active_window(schedule, 1, config.delta_b),
            trace: Vec::new(),
            bits,
            completion: vec![None; k],
        })
    }

    pub fn ledger(&self) -> &SubfileLedger {
        &self.ledger
    }

    pub fn window(&self) -> ActiveWindow {
        self.window
    }

    pub fn trace(&self) -> &[Transmission] {
        &self.trace
    }

    /// Moves the engine to the start of slot `b`.
    pub fn enter_slot(&mut self, slot: usize) {
        self.window = active_window(self.schedule, slot, self.config.delta_b);
    }

    fn emit(
        &self,
        s1: SubsetMask,
        s2: SubsetMask,
        chi: usize,
        xored: SubsetMask,
        skipped: bool,
    ) -> Result<Transmission, DeliveryError> {
        let union = s1.union(s2);
        let composition: Vec<Component> = if skipped {
            Vec::new()
        } else {
            xored
                .iter()
                .map(|fap| Component {
                    fap,
                    subset: union.without(fap),
                    units: self.ledger.remaining(fap, union.without(fap)),
                })
                .collect()
        };
        let length_units = composition.iter().map(|c| c.units).max().unwrap_or(0);
        let payload = match &self.bits {
            Some(bits) if !skipped => Some(self.build_payload(bits, &composition, length_units)?),
            _ => None,
        };
        let transmission = Transmission {
            slot: self.window.slot,
            s: union.len(),
            chi,
            s1,
            s2,
            active: self.window.active,
            participants: if skipped { SubsetMask::EMPTY } else { xored },
            composition,
            length_units,
            length_bits: self.unit * Bits::from_integer(length_units),
            skipped,
            payload,
        };
        transmission.check_invariants().map_err(DeliveryError::Inconsistent)?;
        Ok(transmission)
    }

    /// Zero-padded XOR of the remaining bits of every component.
    fn build_payload(
        &self,
        bits: &BitState,
        composition: &[Component],
        length: u128,
    ) -> Result<BitVec<u64>, DeliveryError> {
        let mut payload = BitVec::<u64>::repeat(false, length as usize);
        for c in composition {
            let file = self.schedule.demand(c.fap);
            let indices = self.ledger.remaining_bits(c.fap, c.subset).unwrap_or_default();
            for (pos, &bit) in indices.iter().enumerate() {
                let value = bits.files[&file][bit as usize];
                let cur = payload[pos];
                payload.set(pos, cur ^ value);
            }
        }
        Ok(payload)
    }

    /// Mid-slot branch for `Δb <= b < B`: every emitted pair has `S¹` inside
    /// the departing set, and only active members of `S¹ ∪ S²` are XOR'ed.
    pub fn transmit_slot_async_mid(&self) -> Result<Vec<Transmission>, DeliveryError> {
        let k = self.config.k;
        let ActiveWindow { active, departing, .. } = self.window;
        let others = departing.complement(k);
        let mut out = Vec::new();
        for s in (1..=k).rev() {
            let (lo, hi) = chi_range(s, departing.len(), k);
            for chi in lo..=hi {
                for s1 in enumerate_subsets(departing, chi) {
                    for s2 in enumerate_subsets(others, s - chi) {
                        let union = s1.union(s2);
                        let participants = union.intersection(active);
                        let skipped =
                            skip_check_with(self.options.skip_rule, union, participants, &self.ledger);
                        if skipped {
                            self.check_skip_safety(union, participants.intersection(departing))?;
                        }
                        out.push(self.emit(s1, s2, chi, participants, skipped)?);
                    }
                }
            }
        }
        Ok(out)
    }

    /// A skip must never leave a departing requester without its component.
    fn check_skip_safety(&self, union: SubsetMask, departing: SubsetMask) -> Result<(), DeliveryError> {
        if self.options.skip_rule != SkipRule::AnyDelivered {
            return Ok(());
        }
        for k in departing.iter() {
            let subset = union.without(k);
            if !self.ledger.is_delivered(k, subset) && self.ledger.remaining(k, subset) > 0 {
                return Err(DeliveryError::Inconsistent(format!(
                    "slot {}: skip of {union} starves departing F-AP {k}",
                    self.window.slot
                )));
            }
        }
        Ok(())
    }

    /// Final-slot branch (`b = B`, `Δb < B`): `S¹` ranges over the active set
    /// and only `S¹` is XOR'ed. No skip test applies.
    pub fn transmit_slot_async_final(&self) -> Result<Vec<Transmission>, DeliveryError> {
        let k = self.config.k;
        let active = self.window.active;
        let others = active.complement(k);
        let mut out = Vec::new();
        for s in (1..=k).rev() {
            let (lo, hi) = chi_range(s, active.len(), k);
            for chi in lo..=hi {
                for s1 in enumerate_subsets(active, chi) {
                    for s2 in enumerate_subsets(others, s - chi) {
                        out.push(self.emit(s1, s2, chi, s1, false)?);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Synchronous delivery at `b = B` when `Δb = B`: one XOR per nonempty `S`.
    pub fn transmit_sync(&self) -> Result<Vec<Transmission>, DeliveryError> {
        let all = SubsetMask::full(self.config.k);
        let mut out = Vec::new();
        for s in (1..=self.config.k).rev() {
            for set in enumerate_subsets(all, s) {
                out.push(self.emit(set, SubsetMask::EMPTY, s, set, false)?);
            }
        }
        Ok(out)
    }

    /// Every component of every non-skipped transmission is recovered by its
    /// requester. In sampled-bit mode the requester XORs out the other
    /// components using its own cache and drops the zero padding.
    pub fn decode_all(&mut self, transmissions: &[Transmission]) -> Result<Recovered, DeliveryError> {
        let mut recovered = Recovered::new();
        for t in transmissions.iter().filter(|t| !t.skipped) {
            for c in &t.composition {
                if let Some(bits) = &self.bits {
                    let decoded = self.decode_component(bits, t, c)?;
                    let bits = self.bits.as_mut().expect("bit state");
                    for (bit, value) in decoded {
                        bits.estimate[c.fap - 1].set(bit as usize, value);
                        bits.known[c.fap - 1].set(bit as usize, true);
                    }
                }
                recovered.entry(c.fap).or_default().push(c.subset);
            }
        }
        Ok(recovered)
    }

    fn decode_component(
        &self,
        bits: &BitState,
        t: &Transmission,
        wanted: &Component,
    ) -> Result<Vec<(u32, bool)>, DeliveryError> {
        let fap = wanted.fap;
        let mut buffer = t.payload.clone().ok_or_else(|| {
            DeliveryError::Inconsistent("sampled-bit transmission without payload".into())
        })?;
        if buffer.len() as u128 != t.length_units {
            return Err(DeliveryError::Inconsistent("payload length mismatch".into()));
        }
        for c in t.composition.iter().filter(|c| c.fap != fap) {
            let file = self.schedule.demand(c.fap);
            let indices = self.ledger.remaining_bits(c.fap, c.subset).unwrap_or_default();
            for (pos, &bit) in indices.iter().enumerate() {
                let side = bits.cached_value(fap, file, bit)?;
                let cur = buffer[pos];
                buffer.set(pos, cur ^ side);
            }
        }
        let own = self.ledger.remaining_bits(fap, wanted.subset).unwrap_or_default();
        Ok(own.iter().enumerate().map(|(pos, &bit)| (bit, buffer[pos])).collect())
    }

    /// Adds the recovered subfiles to the server's cache records.
    pub fn update_records(&mut self, recovered: &Recovered) {
        for (&fap, subsets) in recovered {
            for &subset in subsets {
                self.ledger.mark_recovered(fap, subset);
            }
        }
    }

    fn note_completions(&mut self) {
        let slot = self.window.slot;
        for fap in 1..=self.config.k {
            if self.completion[fap - 1].is_none()
                && self.schedule.arrival_slot(fap) <= slot
                && self.ledger.outstanding(fap) == 0
            {
                self.completion[fap - 1] = Some(slot);
            }
        }
    }

    /// Runs one slot: transmissions, decoding and record updates.
    pub fn step(&mut self, slot: usize) -> Result<(), DeliveryError> {
        self.enter_slot(slot);
        let (big_b, delta_b) = (self.config.b, self.config.delta_b);
        let emitted = if delta_b < big_b {
            if slot < delta_b {
                Vec::new()
            } else if slot < big_b {
                self.transmit_slot_async_mid()?
            } else {
                self.transmit_slot_async_final()?
            }
        } else if slot < big_b {
            Vec::new()
        } else {
            self.transmit_sync()?
        };
        // Record updates are deferred to the end of the slot, which is only
        // sound when no two emissions share an encoding set.
        let mut seen = BTreeSet::new();
        for t in &emitted {
            if !seen.insert(t.encoding_set()) {
                return Err(DeliveryError::Inconsistent(format!(
                    "slot {slot}: encoding set {} emitted twice",
                    t.encoding_set()
                )));
            }
        }
        let recovered = self.decode_all(&emitted)?;
        self.update_records(&recovered);
        self.trace.extend(emitted);
        self.note_completions();
        Ok(())
    }

    /// Checks deadlines and, in sampled-bit mode, bit-exact recovery.
    fn check_feasibility(&self) -> Result<Vec<usize>, DeliveryError> {
        let mut completion = Vec::with_capacity(self.config.k);
        for fap in 1..=self.config.k {
            let deadline = self.schedule.deadline(fap, self.config.delta_b);
            match self.completion[fap - 1] {
                Some(done) if done <= deadline => completion.push(done),
                other => {
                    return Err(DeliveryError::FeasibilityViolation {
                        fap,
                        deadline,
                        completion: other,
                    })
                }
            }
            if let Some(bits) = &self.bits {
                let file = &bits.files[&self.schedule.demand(fap)];
                if !bits.known[fap - 1].all() || &bits.estimate[fap - 1] != file {
                    return Err(DeliveryError::DecodeMismatch { fap });
                }
            }
        }
        Ok(completion)
    }

    pub fn finish(self) -> Result<LoadReport, DeliveryError> {
        let completion = self.check_feasibility()?;
        let mut report = load_of(self.trace, self.config.b, self.config.f);
        report.completion = completion;
        report.cache_shortfall = self.cache_shortfall;
        Ok(report)
    }
}

/// Executes slots `1..=B` and returns the load report. Fails if any F-AP is
/// not fully served by its deadline.
pub fn run_delivery(
    config: &Config,
    schedule: &RequestSchedule,
    placement: &PlacementProfile,
) -> Result<LoadReport, DeliveryError> {
    run_delivery_with(config, schedule, placement, EngineOptions::default())
}

pub fn run_delivery_with(
    config: &Config,
    schedule: &RequestSchedule,
    placement: &PlacementProfile,
    options: EngineOptions,
) -> Result<LoadReport, DeliveryError> {
    let mut state = DeliveryState::new(config, schedule, placement, options)?;
    for slot in 1..=config.b {
        state.step(slot)?;
    }
    state.finish()
}

/// Places caches from `config.seed` and runs delivery.
pub fn simulate(config: &Config, schedule: &RequestSchedule) -> Result<LoadReport, DeliveryError> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(config.seed);
    let placement = place_caches(config, &mut rng)?;
    run_delivery(config, schedule, &placement)
}
