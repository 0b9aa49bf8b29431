use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{self, Write};
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::link::{FrameOutcome, LinkPoint, LinkSetup};
use super::rng::{frame_rng, Stream};
use super::scenario::{Method, Scenario};
use crate::analysis::{
    conditional_ici_moments, union_bound_ber, AnalysisChannel, BoundMethod, PairProfiles,
};
use crate::channel::snr_to_noise_variance;
use crate::error::{Error, Result};
use crate::ofdm::diagonal_power;

/// Column order of the sweep CSV.
pub const CSV_HEADER: [&str; 8] = [
    "eps",
    "snr_db",
    "method",
    "ber",
    "errors",
    "bits",
    "stderr_or_flag",
    "seconds",
];

/// Flag for simulated points that stopped at `max_frames` short of `min_errors`.
pub const CENSORED: &str = "censored";
/// Flag for series points where some factor fell back to sampling.
pub const FALLBACK: &str = "fallback";

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub eps: f64,
    pub snr_db: f64,
    pub method: Method,
    pub ber: f64,
    pub errors: Option<u64>,
    pub bits: Option<u64>,
    /// Standard error as text, a flag, or empty.
    pub stderr_or_flag: String,
    pub seconds: Option<f64>,
}

impl SweepRow {
    fn key(&self) -> (u64, u64, Method) {
        (self.eps.to_bits(), self.snr_db.to_bits(), self.method)
    }

    pub fn is_censored(&self) -> bool {
        self.stderr_or_flag == CENSORED
    }
}

/// Reads a sweep CSV written by [`CsvSink`].
pub fn read_rows(path: impl AsRef<Path>) -> Result<Vec<SweepRow>> {
    let path = path.as_ref();
    let mut rd = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = rd.headers().map_err(|e| csv_error(path, e))?.clone();
    let missing: Vec<&str> = CSV_HEADER
        .iter()
        .copied()
        .filter(|h| !headers.iter().any(|x| x == *h))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            msg: format!("missing columns: {}", missing.join(", ")),
        });
    }
    rd.deserialize()
        .map(|r| r.map_err(|e| csv_error(path, e)))
        .collect()
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io(path, source),
        kind => Error::Parse {
            path: path.to_path_buf(),
            line,
            msg: format!("{kind:?}"),
        },
    }
}

/// Incremental CSV writer; every row is flushed as soon as it is written.
pub struct CsvSink {
    writer: csv::Writer<Box<dyn Write>>,
}

impl CsvSink {
    /// Writes to `out`, starting with the header.
    pub fn new(out: Box<dyn Write>) -> Result<Self> {
        let mut writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(out);
        writer.write_record(CSV_HEADER).map_err(sink_error)?;
        writer.flush().map_err(|e| Error::io("<csv>", e))?;
        Ok(Self { writer })
    }

    pub fn stdout() -> Result<Self> {
        Self::new(Box::new(io::stdout()))
    }

    /// Creates `path`, or appends to it when it already holds sweep rows.
    /// Returns the sink and the rows already present.
    pub fn open_append(path: impl AsRef<Path>) -> Result<(Self, Vec<SweepRow>)> {
        let path = path.as_ref();
        let existing = match std::fs::metadata(path) {
            Ok(m) if m.len() > 0 => read_rows(path)?,
            _ => {
                let f = File::create(path).map_err(|e| Error::io(path, e))?;
                return Ok((Self::new(Box::new(f))?, Vec::new()));
            }
        };
        let f = OpenOptions::new()
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        let writer = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Box::new(f) as Box<dyn Write>);
        Ok((Self { writer }, existing))
    }

    pub fn write(&mut self, row: &SweepRow) -> Result<()> {
        self.writer.serialize(row).map_err(sink_error)?;
        self.writer.flush().map_err(|e| Error::io("<csv>", e))
    }
}

fn sink_error(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::io("<csv>", source),
        kind => Error::Input(format!("csv: {kind:?}")),
    }
}

/// Execution knobs that do not change the results.
#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    /// Worker threads; `None` uses rayon's default.
    pub workers: Option<usize>,
    /// Run only these methods (intersected with the scenario's).
    pub only: Option<Vec<Method>>,
    /// Rows from an earlier run; matching points are not recomputed.
    pub resume: Vec<SweepRow>,
}

/// Runs every requested method at every `(eps, SNR)` point.
///
/// Rows are produced in a fixed order (eps, then SNR, then the scenario's
/// method order) and passed to `emit` as they complete; resumed rows are
/// returned but not re-emitted. Output depends only on the scenario.
pub fn run_sweep<F>(scenario: &Scenario, opts: &SweepOptions, mut emit: F) -> Result<Vec<SweepRow>>
where
    F: FnMut(&SweepRow) -> Result<()>,
{
    scenario.validate()?;
    let methods: Vec<Method> = scenario
        .methods
        .iter()
        .copied()
        .filter(|m| opts.only.as_ref().is_none_or(|o| o.contains(m)))
        .collect();
    let setup = LinkSetup::from_scenario(scenario)?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = opts.workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config(format!("cannot start worker pool: {e}")))?;

    let resumed: HashMap<_, _> = opts.resume.iter().map(|r| (r.key(), r.clone())).collect();
    let needs_profiles = methods.iter().any(|m| !m.is_simulation());
    let mut profiles: Option<PairProfiles> = None;
    let overloading = setup.codebook().config().overloading();
    let n = scenario.subcarriers;
    let mut rows = Vec::new();

    for (ei, &eps) in scenario.eps.iter().enumerate() {
        let mut stopped: HashMap<Method, bool> = HashMap::new();
        let rayleigh = setup
            .pdp()
            .map(|p| conditional_ici_moments(0, p, eps, n, overloading));
        for (si, &snr) in scenario.snr_db.iter().enumerate() {
            for &method in &methods {
                if method.is_simulation() && stopped.get(&method).copied().unwrap_or(false) {
                    continue;
                }
                let key = (eps.to_bits(), snr.to_bits(), method);
                let row = if let Some(r) = resumed.get(&key) {
                    r.clone()
                } else {
                    let start = Instant::now();
                    let mut row = match method {
                        Method::Sim | Method::Oma => {
                            let power = if method == Method::Sim {
                                overloading
                            } else {
                                1.0
                            };
                            let point = setup.at(eps, snr_to_noise_variance(snr, power))?;
                            let out =
                                pool.install(|| simulate_point(scenario, &point, method, ei, si))?;
                            sim_row(scenario, eps, snr, method, out)
                        }
                        _ => {
                            if profiles.is_none() && needs_profiles {
                                log::info!("enumerating codeword pairs");
                                profiles = Some(PairProfiles::build(
                                    setup.codebook(),
                                    scenario.enumeration_cap as u128,
                                )?);
                            }
                            let profiles = profiles.as_ref().expect("built above");
                            let channel = match rayleigh {
                                Some(stats) => AnalysisChannel::Rayleigh {
                                    stats,
                                    phi_nn2: diagonal_power(eps, n),
                                },
                                None => AnalysisChannel::Awgn {
                                    eps,
                                    subcarriers: n,
                                },
                            };
                            let bound = match method {
                                Method::Awgn => BoundMethod::Awgn,
                                Method::Series => BoundMethod::Series(scenario.series_controls()),
                                _ => BoundMethod::MonteCarlo {
                                    samples: scenario.mc_samples,
                                    replicates: scenario.mc_replicates,
                                },
                            };
                            let mut rng = frame_rng(scenario.seed, Stream::Analysis, ei, si, 0);
                            let ub = union_bound_ber(
                                profiles,
                                &channel,
                                snr_to_noise_variance(snr, overloading),
                                overloading,
                                &bound,
                                scenario.pep_convention,
                                &mut rng,
                            )?;
                            let flag = match (ub.std_err, ub.converged) {
                                (Some(se), _) => format!("{se:e}"),
                                (None, false) => FALLBACK.to_string(),
                                (None, true) => String::new(),
                            };
                            SweepRow {
                                eps,
                                snr_db: snr,
                                method,
                                ber: ub.ber,
                                errors: None,
                                bits: None,
                                stderr_or_flag: flag,
                                seconds: None,
                            }
                        }
                    };
                    if scenario.record_timing {
                        row.seconds = Some((start.elapsed().as_secs_f64() * 1e3).round() / 1e3);
                    }
                    log::info!(
                        "eps {eps} snr {snr} dB {method}: ber {:.3e} {}",
                        row.ber,
                        row.stderr_or_flag
                    );
                    emit(&row)?;
                    row
                };
                if method.is_simulation() {
                    if let Some(th) = scenario.stop_below_ber {
                        if row.ber < th {
                            stopped.insert(method, true);
                        }
                    }
                }
                if let Some(gap) = cross_method_gap(&rows, &row) {
                    log::warn!(
                        "eps {eps} snr {snr} dB: series and mc bounds differ by {:.1}%",
                        100.0 * gap
                    );
                }
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Series and Monte-Carlo bounds at the same point are expected to agree;
/// returns their relative difference when it exceeds 5%.
fn cross_method_gap(rows: &[SweepRow], row: &SweepRow) -> Option<f64> {
    let partner = match row.method {
        Method::Series => Method::Mc,
        Method::Mc => Method::Series,
        _ => return None,
    };
    let other = rows
        .iter()
        .rev()
        .find(|r| r.method == partner && r.eps == row.eps && r.snr_db == row.snr_db)?;
    let gap = (row.ber - other.ber).abs() / row.ber.max(other.ber);
    (gap > 0.05).then_some(gap)
}

/// Error counts of a run of frames. The sum of squared per-frame counts
/// gives a standard error that accounts for errors clustering within a frame
/// (one channel realization per frame).
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    errors: u64,
    bits: u64,
    frames: u64,
    sq_errors: u128,
}

impl Tally {
    fn frame(o: FrameOutcome) -> Self {
        Self {
            errors: o.bit_errors,
            bits: o.bits,
            frames: 1,
            sq_errors: u128::from(o.bit_errors) * u128::from(o.bit_errors),
        }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            errors: self.errors + o.errors,
            bits: self.bits + o.bits,
            frames: self.frames + o.frames,
            sq_errors: self.sq_errors + o.sq_errors,
        }
    }

    /// Standard error of the BER from the spread of per-frame error counts.
    fn std_err(&self) -> f64 {
        let n = self.frames as f64;
        let ber = self.errors as f64 / self.bits as f64;
        if self.frames < 2 {
            return (ber * (1.0 - ber) / self.bits as f64).sqrt();
        }
        let bits_per_frame = self.bits as f64 / n;
        let mean = self.errors as f64 / n;
        let var = ((self.sq_errors as f64 - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt() / bits_per_frame
    }
}

fn simulate_point(
    scenario: &Scenario,
    point: &LinkPoint<'_>,
    method: Method,
    ei: usize,
    si: usize,
) -> Result<Tally> {
    let stream = if method == Method::Oma {
        Stream::Oma
    } else {
        Stream::Scma
    };
    let mut total = Tally::default();
    let mut next = 0u64;
    while total.errors < scenario.min_errors && next < scenario.max_frames {
        let end = (next + scenario.frames_per_batch).min(scenario.max_frames);
        let batch = (next..end)
            .into_par_iter()
            .map(|f| {
                let mut rng = frame_rng(scenario.seed, stream, ei, si, f);
                if method == Method::Oma {
                    point.simulate_oma_frame(&mut rng).map(Tally::frame)
                } else {
                    point.simulate_frame(&mut rng).map(Tally::frame)
                }
            })
            .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
        total = total.merge(batch);
        next = end;
    }
    Ok(total)
}

fn sim_row(scenario: &Scenario, eps: f64, snr: f64, method: Method, out: Tally) -> SweepRow {
    let ber = out.errors as f64 / out.bits as f64;
    let flag = if out.errors < scenario.min_errors {
        CENSORED.to_string()
    } else {
        format!("{:e}", out.std_err())
    };
    SweepRow {
        eps,
        snr_db: snr,
        method,
        ber,
        errors: Some(out.errors),
        bits: Some(out.bits),
        stderr_or_flag: flag,
        seconds: None,
    }
}
