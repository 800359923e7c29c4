//! Experiment orchestration: arrival sampling, parameter sweeps, CSV output
//! and verification of the worked example against its golden trace.

use std::fmt;
use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::baselines::{sync_closed_form, uncoded_load, Scheme};
use crate::delivery::{run_delivery_with, simulate, DeliveryError, EngineOptions};
use crate::derive_seed;
use crate::model::{ratio_to_f64, render_trace, Config, Mode, ModelError, RequestSchedule};
use crate::placement::place_caches;

/// Golden trace of the four-F-AP worked example (`K = N = 4`, `M = 2`,
/// `B = 4`, `Δb = 2`, `U_b = {b}`, `d_k = k`, `F = 2^20`).
pub const EXAMPLE1_GOLDEN: &str = include_str!("../golden/example1.tsv");

/// File size used for the worked example.
pub const EXAMPLE1_FILE_BITS: u64 = 1 << 20;

/// Default file size for sampled-bit sweeps.
pub const SAMPLED_FILE_BITS: u64 = 1 << 20;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Delivery(#[from] DeliveryError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("csv output failed: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Validation(String),
    #[error("trace diverges from golden file at line {line}:\n  expected: {expected}\n  actual:   {actual}")]
    GoldenMismatch {
        line: usize,
        expected: String,
        actual: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalModel {
    /// F-AP `k` arrives in slot `((k-1) mod B) + 1`.
    Sequential,
    /// Independent uniform slots, optionally resampled until no slot is empty.
    Uniform { require_nonempty: bool },
}

impl fmt::Display for ArrivalModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ArrivalModel::Sequential => f.write_str("sequential"),
            ArrivalModel::Uniform { require_nonempty } => {
                write!(f, "uniform-independent require_nonempty={require_nonempty}")
            }
        }
    }
}

impl ArrivalModel {
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, b: usize, rng: &mut R) -> Result<Vec<usize>, HarnessError> {
        match *self {
            ArrivalModel::Sequential => Ok(sequential_arrivals(k, b)),
            ArrivalModel::Uniform { require_nonempty } => sample_arrivals(k, b, rng, require_nonempty),
        }
    }
}

pub fn sequential_arrivals(k: usize, b: usize) -> Vec<usize> {
    (0..k).map(|i| i % b + 1).collect()
}

/// Draws each F-AP's arrival slot uniformly from `1..=b`. With
/// `require_nonempty`, whole vectors are redrawn until every slot has an arrival.
pub fn sample_arrivals<R: Rng + ?Sized>(
    k: usize,
    b: usize,
    rng: &mut R,
    require_nonempty: bool,
) -> Result<Vec<usize>, HarnessError> {
    if require_nonempty && k < b {
        return Err(HarnessError::Validation(format!(
            "cannot fill {b} slots with {k} arrivals"
        )));
    }
    loop {
        let arrivals: Vec<usize> = (0..k).map(|_| rng.gen_range(1..=b)).collect();
        if !require_nonempty || (1..=b).all(|slot| arrivals.contains(&slot)) {
            return Ok(arrivals);
        }
    }
}

/// Distinct files `d_k = k`.
pub fn worst_case_demands(k: usize, n: usize) -> Result<Vec<usize>, HarnessError> {
    if n < k {
        return Err(ModelError::InvalidConfig(format!("N = {n} < K = {k}")).into());
    }
    Ok((1..=k).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    CacheSize,
    Delay,
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepVariable::CacheSize => "M",
            SweepVariable::Delay => "delta_b",
        })
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub base: Config,
    pub variable: SweepVariable,
    pub values: Vec<usize>,
    pub replicas: usize,
    pub arrivals: ArrivalModel,
    pub out: Option<PathBuf>,
}

impl ExperimentSpec {
    fn config_for(&self, value: usize) -> Config {
        let mut c = self.base.clone();
        match self.variable {
            SweepVariable::CacheSize => c.m = value,
            SweepVariable::Delay => c.delta_b = value,
        }
        c
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.replicas == 0 {
            return Err(HarnessError::Validation("replicas must be at least 1".into()));
        }
        if self.values.is_empty() {
            return Err(HarnessError::Validation("no sweep values".into()));
        }
        for &v in &self.values {
            self.config_for(v).validate()?;
        }
        if let ArrivalModel::Uniform { require_nonempty: true } = self.arrivals {
            if self.base.k < self.base.b {
                return Err(HarnessError::Validation(format!(
                    "cannot fill {} slots with {} arrivals",
                    self.base.b, self.base.k
                )));
            }
        }
        Ok(())
    }
}

/// One CSV row. `seed` is `None` for the per-value mean rows.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub scheme: String,
    pub k: usize,
    pub n: usize,
    pub m: usize,
    pub f: u64,
    pub b: usize,
    pub delta_b: usize,
    pub seed: Option<u64>,
    pub load: Ratio<u128>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepDataset {
    pub description: String,
    pub rows: Vec<SweepRow>,
}

impl SweepDataset {
    /// Mean rows for `scheme`, in sweep order.
    pub fn means(&self, scheme: Scheme) -> Vec<&SweepRow> {
        let name = format!("{scheme}-mean");
        self.rows.iter().filter(|r| r.scheme == name).collect()
    }

    pub fn replicas(&self, scheme: Scheme) -> Vec<&SweepRow> {
        let name = scheme.to_string();
        self.rows.iter().filter(|r| r.scheme == name).collect()
    }
}

pub const CSV_COLUMNS: [&str; 11] = [
    "scheme",
    "K",
    "N",
    "M",
    "F",
    "B",
    "delta_b",
    "seed",
    "load_normalized_num",
    "load_normalized_den",
    "load_normalized_float",
];

pub fn replica_seed(base: u64, replica: usize) -> u64 {
    derive_seed(base, &[replica as u64])
}

fn row(scheme: impl ToString, c: &Config, seed: Option<u64>, load: Ratio<u128>) -> SweepRow {
    SweepRow {
        scheme: scheme.to_string(),
        k: c.k,
        n: c.n,
        m: c.m,
        f: c.f,
        b: c.b,
        delta_b: c.delta_b,
        seed,
        load,
    }
}

/// Runs every (sweep value, replica) pair with worst-case demands and emits
/// async, synchronous and uncoded loads plus per-value means.
///
/// Replica `r` uses the same seed, and therefore the same arrivals, for every
/// sweep value.
pub fn sweep(spec: &ExperimentSpec) -> Result<SweepDataset, HarnessError> {
    spec.validate()?;
    let jobs: Vec<(usize, usize)> = spec
        .values
        .iter()
        .flat_map(|&v| (0..spec.replicas).map(move |r| (v, r)))
        .collect();
    let results: Vec<[SweepRow; 3]> = jobs
        .par_iter()
        .map(|&(value, replica)| {
            let seed = replica_seed(spec.base.seed, replica);
            let config = spec.config_for(value).with_seed(seed);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let arrivals = spec.arrivals.sample(config.k, config.b, &mut rng)?;
            let demands = worst_case_demands(config.k, config.n)?;
            let schedule = RequestSchedule::new(&config, arrivals, demands)?;
            let report = simulate(&config, &schedule)?;
            Ok([
                row(Scheme::Async, &config, Some(seed), report.normalized),
                row(
                    Scheme::SyncClosedForm,
                    &config,
                    Some(seed),
                    sync_closed_form(config.k, config.n, config.m)?,
                ),
                row(Scheme::Uncoded, &config, Some(seed), uncoded_load(config.k, config.n, config.m)),
            ])
        })
        .collect::<Result<_, HarnessError>>()?;

    let mut rows = Vec::with_capacity(results.len() * 3 + spec.values.len() * 3);
    for (i, &value) in spec.values.iter().enumerate() {
        let chunk = &results[i * spec.replicas..(i + 1) * spec.replicas];
        for replica in chunk {
            rows.extend(replica.iter().cloned());
        }
        let config = spec.config_for(value);
        for (col, scheme) in [Scheme::Async, Scheme::SyncClosedForm, Scheme::Uncoded].iter().enumerate() {
            let total = chunk
                .iter()
                .fold(Ratio::from_integer(0u128), |acc, r| acc + r[col].load);
            let mean = total / Ratio::from_integer(spec.replicas as u128);
            rows.push(row(format!("{scheme}-mean"), &config, None, mean));
        }
    }
    let dataset = SweepDataset {
        description: format!(
            "sweep over {} values {:?}; replicas={}; arrivals={}; demands=distinct d_k=k; mode={}; base seed={}",
            spec.variable,
            spec.values,
            spec.replicas,
            spec.arrivals,
            spec.base.mode,
            spec.base.seed
        ),
        rows,
    };
    if let Some(path) = &spec.out {
        let file = File::create(path).map_err(|source| HarnessError::Io {
            path: path.clone(),
            source,
        })?;
        write_csv(&dataset, file).map_err(|e| match e {
            HarnessError::Csv(err) if err.is_io_error() => HarnessError::Io {
                path: path.clone(),
                source: io::Error::other(err.to_string()),
            },
            other => other,
        })?;
    }
    Ok(dataset)
}

/// Writes the dataset with a leading `#` comment describing how it was produced.
pub fn write_csv<W: Write>(dataset: &SweepDataset, mut out: W) -> Result<(), HarnessError> {
    writeln!(out, "# {}", dataset.description).map_err(csv::Error::from)?;
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(CSV_COLUMNS)?;
    for r in &dataset.rows {
        writer.write_record([
            r.scheme.clone(),
            r.k.to_string(),
            r.n.to_string(),
            r.m.to_string(),
            r.f.to_string(),
            r.b.to_string(),
            r.delta_b.to_string(),
            r.seed.map_or_else(|| "mean".to_string(), |s| s.to_string()),
            r.load.numer().to_string(),
            r.load.denom().to_string(),
            format!("{:.9}", ratio_to_f64(&r.load)),
        ])?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

/// Gnuplot script plotting the mean rows of a sweep CSV.
pub fn gnuplot_script(csv_path: &Path, variable: SweepVariable) -> String {
    let column = match variable {
        SweepVariable::CacheSize => 4,
        SweepVariable::Delay => 7,
    };
    let path = csv_path.display();
    let mut script = String::new();
    script.push_str("set datafile separator ','\n");
    script.push_str(&format!("set xlabel '{variable}'\nset ylabel 'normalized fronthaul load'\n"));
    script.push_str("set key top right\n");
    let curves: Vec<String> = ["async", "sync-closed-form", "uncoded"]
        .iter()
        .map(|s| {
            format!("'{path}' using (strcol(1) eq '{s}-mean' ? ${column} : 1/0):11 with linespoints title '{s}'")
        })
        .collect();
    script.push_str(&format!("plot {}\n", curves.join(", \\\n     ")));
    script
}

pub fn example1_config(delta_b: usize) -> Config {
    let mut c = Config::new(4, 4, 2, EXAMPLE1_FILE_BITS, 4, delta_b);
    c.t = 4.0;
    c
}

pub fn example1_schedule(config: &Config) -> Result<RequestSchedule, HarnessError> {
    Ok(RequestSchedule::new(
        config,
        sequential_arrivals(config.k, config.b),
        worst_case_demands(config.k, config.n)?,
    )?)
}

/// Rendered trace of the worked example in expected-size mode.
pub fn example1_trace(delta_b: usize, options: EngineOptions) -> Result<String, HarnessError> {
    let config = example1_config(delta_b);
    let schedule = example1_schedule(&config)?;
    let placement = place_caches(&config, &mut ChaCha8Rng::seed_from_u64(config.seed))?;
    let report = run_delivery_with(&config, &schedule, &placement, options)?;
    Ok(render_trace(&report.trace))
}

/// First line where two rendered traces differ.
pub fn diff_traces(expected: &str, actual: &str) -> Result<(), HarnessError> {
    let mut exp = expected.lines();
    let mut act = actual.lines();
    let mut line = 0;
    loop {
        line += 1;
        match (exp.next(), act.next()) {
            (None, None) => return Ok(()),
            (e, a) if e == a => continue,
            (e, a) => {
                return Err(HarnessError::GoldenMismatch {
                    line,
                    expected: e.unwrap_or("<end of file>").to_string(),
                    actual: a.unwrap_or("<end of file>").to_string(),
                })
            }
        }
    }
}

pub fn verify_example1() -> Result<(), HarnessError> {
    verify_example1_with(2, EngineOptions::default())
}

pub fn verify_example1_with(delta_b: usize, options: EngineOptions) -> Result<(), HarnessError> {
    diff_traces(EXAMPLE1_GOLDEN, &example1_trace(delta_b, options)?)
}

/// Sampled-bit sweeps default to a desk-scale file size.
pub fn default_file_bits(mode: Mode) -> u64 {
    match mode {
        Mode::ExpectedSize => 1_000_000_000,
        Mode::SampledBit => SAMPLED_FILE_BITS,
    }
}
