//! Decentralized placement: every F-AP independently caches a uniformly random
//! `⌊MF/N⌋`-bit subset of every file. A file then splits into `2^K` subfiles,
//! one per subset of F-APs that cache exactly those bits.

use std::collections::BTreeMap;
use std::io::Write;

use bitvec::vec::BitVec;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::derive_seed;
use crate::model::{Bits, Config, Mode, ModelError, SubsetMask};

const CACHE_STREAM: u64 = 0xCAC4E;
const CONTENT_STREAM: u64 = 0xF11E;

/// Realized cache contents `Z_1..Z_K`.
///
/// In sampled-bit mode the cached bit sets are derived on demand from a seed,
/// so only the files actually requested are ever materialized.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlacementProfile {
    k: usize,
    n: usize,
    m: usize,
    f: u64,
    mode: Mode,
    seed: u64,
    /// `N^K`, the denominator of expected subfile sizes relative to F.
    unit_den: u128,
}

/// Draws a placement. Deterministic in the RNG state.
pub fn place_caches<R: Rng + ?Sized>(config: &Config, rng: &mut R) -> Result<PlacementProfile, ModelError> {
    config.validate()?;
    Ok(PlacementProfile {
        k: config.k,
        n: config.n,
        m: config.m,
        f: config.f,
        mode: config.mode,
        seed: rng.gen(),
        unit_den: config.unit_denominator()?,
    })
}

/// Cardinality of the caching subset: a subfile `W_{n,S}` has type `|S|`.
pub fn type_of(subset: SubsetMask) -> usize {
    subset.len()
}

impl PlacementProfile {
    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn fap_count(&self) -> usize {
        self.k
    }

    pub fn file_bits(&self) -> u64 {
        self.f
    }

    /// `q = M / N`.
    pub fn cache_fraction(&self) -> Ratio<u128> {
        Ratio::new(self.m as u128, self.n as u128)
    }

    /// Bits of each file held by each cache: `⌊MF/N⌋`.
    pub fn bits_per_file(&self) -> u64 {
        (self.m as u128 * self.f as u128 / self.n as u128) as u64
    }

    /// Shortfall `MF/N - ⌊MF/N⌋` per (F-AP, file) caused by the floor.
    pub fn cache_shortfall(&self) -> Bits {
        match self.mode {
            Mode::ExpectedSize => Bits::from_integer(0),
            Mode::SampledBit => {
                Ratio::new(self.m as u128 * self.f as u128, self.n as u128)
                    - Bits::from_integer(self.bits_per_file() as u128)
            }
        }
    }

    /// Bits represented by one ledger unit.
    pub fn unit_bits(&self) -> Bits {
        match self.mode {
            Mode::ExpectedSize => Ratio::new(self.f as u128, self.unit_den),
            Mode::SampledBit => Bits::from_integer(1),
        }
    }

    fn check_file(&self, file: usize) -> Result<(), ModelError> {
        if file == 0 || file > self.n {
            return Err(ModelError::FileOutOfRange { index: file, n: self.n });
        }
        Ok(())
    }

    fn sampled_only(&self) -> Result<(), ModelError> {
        match self.mode {
            Mode::SampledBit => Ok(()),
            Mode::ExpectedSize => Err(ModelError::InvalidConfig(
                "bit-level placement requested in expected-size mode".into(),
            )),
        }
    }

    /// Sorted bit indices of `file` cached at `fap`.
    pub fn cached_bits(&self, fap: usize, file: usize) -> Result<Vec<u32>, ModelError> {
        self.sampled_only()?;
        self.check_file(file)?;
        if fap == 0 || fap > self.k {
            return Err(ModelError::IndexOutOfRange { index: fap, k: self.k });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
            self.seed,
            &[CACHE_STREAM, fap as u64, file as u64],
        ));
        let mut bits: Vec<u32> = rand::seq::index::sample(
            &mut rng,
            self.f as usize,
            self.bits_per_file() as usize,
        )
        .into_iter()
        .map(|i| i as u32)
        .collect();
        bits.sort_unstable();
        Ok(bits)
    }

    /// For every bit of `file`, the mask of F-APs caching it.
    pub fn bit_owners(&self, file: usize) -> Result<Vec<u32>, ModelError> {
        self.sampled_only()?;
        let mut owners = vec![0u32; self.f as usize];
        for fap in 1..=self.k {
            for bit in self.cached_bits(fap, file)? {
                owners[bit as usize] |= 1 << (fap - 1);
            }
        }
        Ok(owners)
    }

    /// Bit indices of `W_{file,S}` for every mask `S`, ascending within each subfile.
    pub fn subfile_bit_indices(&self, file: usize) -> Result<Vec<Vec<u32>>, ModelError> {
        let owners = self.bit_owners(file)?;
        let mut subfiles = vec![Vec::new(); 1 << self.k];
        for (bit, &mask) in owners.iter().enumerate() {
            subfiles[mask as usize].push(bit as u32);
        }
        Ok(subfiles)
    }

    /// Size of `W_{file,S}` in ledger units for every mask `S`.
    ///
    /// Expected-size units are `F / N^K` bits, so the size of a type-`s`
    /// subfile is `M^s (N-M)^(K-s)` units.
    pub fn subfile_units(&self, file: usize) -> Result<Vec<u128>, ModelError> {
        self.check_file(file)?;
        match self.mode {
            Mode::ExpectedSize => {
                let by_type: Vec<u128> = (0..=self.k)
                    .map(|s| {
                        (self.m as u128).pow(s as u32) * ((self.n - self.m) as u128).pow((self.k - s) as u32)
                    })
                    .collect();
                Ok((0..1u32 << self.k)
                    .map(|mask| by_type[mask.count_ones() as usize])
                    .collect())
            }
            Mode::SampledBit => Ok(self
                .subfile_bit_indices(file)?
                .iter()
                .map(|v| v.len() as u128)
                .collect()),
        }
    }

    /// Size in bits of `W_{file,S}` for every subset `S` of the F-APs.
    pub fn subfile_sizes(&self, file: usize) -> Result<BTreeMap<SubsetMask, Bits>, ModelError> {
        let unit = self.unit_bits();
        Ok(self
            .subfile_units(file)?
            .into_iter()
            .enumerate()
            .map(|(mask, units)| (SubsetMask::from_bits(mask as u32), unit * Bits::from_integer(units)))
            .collect())
    }

    /// Contents of library file `W_file`; uniformly random bits derived from the seed.
    pub fn file_contents(&self, file: usize) -> Result<BitVec<u64>, ModelError> {
        self.check_file(file)?;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.seed, &[CONTENT_STREAM, file as u64]));
        let words = (self.f as usize).div_ceil(64);
        let raw: Vec<u64> = (0..words).map(|_| rng.gen()).collect();
        let mut bits = BitVec::from_vec(raw);
        bits.truncate(self.f as usize);
        Ok(bits)
    }

    /// Debug dump of subfile sizes as CSV rows `file,subset_mask,bits`.
    pub fn write_subfile_csv<W: Write>(&self, files: &[usize], out: W) -> Result<(), ModelError> {
        let mut writer = csv::Writer::from_writer(out);
        let io = |e: csv::Error| ModelError::Parse(e.to_string());
        writer.write_record(["file", "subset_mask", "bits"]).map_err(io)?;
        for &file in files {
            for (subset, bits) in self.subfile_sizes(file)? {
                writer
                    .write_record([file.to_string(), subset.bits().to_string(), bits.to_string()])
                    .map_err(io)?;
            }
        }
        writer.flush().map_err(|e| ModelError::Parse(e.to_string()))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::make_subset;

    fn profile(config: &Config) -> PlacementProfile {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        place_caches(config, &mut rng).unwrap()
    }

    fn total(sizes: &BTreeMap<SubsetMask, Bits>) -> Bits {
        sizes.values().fold(Bits::from_integer(0), |a, b| a + b)
    }

    #[test]
    fn example1_caches_half_of_every_file() {
        let config = Config::new(4, 4, 2, 16, 4, 2).with_mode(Mode::SampledBit);
        let p = profile(&config);
        for fap in 1..=4 {
            for file in 1..=4 {
                assert_eq!(p.cached_bits(fap, file).unwrap().len(), 8);
            }
        }
    }

    #[test]
    fn fixed_size_sampling_is_exact() {
        for seed in 0..100 {
            let config = Config::new(2, 2, 1, 1_000_000, 2, 1)
                .with_mode(Mode::SampledBit)
                .with_seed(seed);
            let p = profile(&config);
            assert_eq!(p.cached_bits(1, 1).unwrap().len(), 500_000);
        }
    }

    #[test]
    fn expected_sizes_example1() {
        let config = Config::new(4, 4, 2, 1 << 20, 4, 2);
        let p = profile(&config);
        let sizes = p.subfile_sizes(1).unwrap();
        assert_eq!(sizes.len(), 16);
        // q = 1/2: every subset holds F/16 bits.
        for size in sizes.values() {
            assert_eq!(*size, Bits::from_integer(1 << 16));
        }
        assert_eq!(total(&sizes), Bits::from_integer(1 << 20));
    }

    #[test]
    fn expected_size_of_uncached_subfile() {
        // q = 3/10, K = 3, F = 1000: F (1-q)^K = 343.
        let config = Config::new(3, 10, 3, 1000, 2, 1);
        let p = profile(&config);
        let sizes = p.subfile_sizes(2).unwrap();
        assert_eq!(sizes[&SubsetMask::EMPTY], Bits::from_integer(343));
        assert_eq!(sizes[&make_subset(&[1, 2, 3], 3).unwrap()], Bits::from_integer(27));
        assert_eq!(total(&sizes), Bits::from_integer(1000));
    }

    #[test]
    fn sampled_partition_sums_to_file_size() {
        let config = Config::new(2, 2, 1, 1 << 16, 2, 1).with_mode(Mode::SampledBit).with_seed(3);
        let p = profile(&config);
        let sizes = p.subfile_sizes(1).unwrap();
        assert_eq!(sizes.len(), 4);
        assert_eq!(total(&sizes), Bits::from_integer(1 << 16));
    }

    #[test]
    fn non_integral_cache_budget_is_floored() {
        let config = Config::new(2, 3, 1, 100, 2, 1).with_mode(Mode::SampledBit);
        let p = profile(&config);
        assert_eq!(p.bits_per_file(), 33);
        assert_eq!(p.cache_shortfall(), Ratio::new(1, 3));
        assert_eq!(p.cached_bits(2, 3).unwrap().len(), 33);
    }

    #[test]
    fn placement_is_deterministic() {
        let config = Config::new(3, 5, 2, 4096, 3, 2).with_mode(Mode::SampledBit).with_seed(11);
        let a = profile(&config);
        let b = profile(&config);
        assert_eq!(a, b);
        assert_eq!(a.subfile_bit_indices(4).unwrap(), b.subfile_bit_indices(4).unwrap());
        assert_eq!(a.file_contents(4).unwrap(), b.file_contents(4).unwrap());
    }

    #[test]
    fn file_index_validated() {
        let config = Config::new(2, 3, 1, 100, 2, 1);
        let p = profile(&config);
        assert_eq!(p.subfile_units(4), Err(ModelError::FileOutOfRange { index: 4, n: 3 }));
        assert!(p.subfile_units(0).is_err());
        assert!(p.cached_bits(1, 1).is_err(), "no bit-level placement in expected mode");
    }

    #[test]
    fn type_of_counts_members() {
        assert_eq!(type_of(make_subset(&[2, 3, 4], 4).unwrap()), 3);
        assert_eq!(type_of(SubsetMask::EMPTY), 0);
        assert_eq!(type_of(SubsetMask::full(4)), 4);
    }

    #[test]
    fn csv_dump_lists_every_subset() {
        let config = Config::new(2, 2, 1, 8, 2, 1);
        let p = profile(&config);
        let mut out = Vec::new();
        p.write_subfile_csv(&[1], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text, "file,subset_mask,bits\n1,0,2\n1,1,2\n1,2,2\n1,3,2\n");
    }
}
