//! Time-series CSV, wavefunction snapshots and the metadata sidecar.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::entanglement::EntanglementRecord;
use crate::error::{Error, Result};
use crate::propagator::ChannelState;
use crate::units;
use crate::vibrational::csv_error;

use super::config::{Scenario, ScenarioConfig};
use super::RunOutput;

/// Column names of the time-series CSV for `n` channels and `cuts` radii.
pub fn time_series_header(n: usize, cuts: usize) -> Vec<String> {
    let mut h = vec!["t_ps".to_string()];
    h.extend((1..=n).map(|i| format!("P_{i}")));
    for k in 0..cuts {
        h.extend((1..=n).map(|i| {
            if k == 0 {
                format!("Ppart_{i}")
            } else {
                format!("Ppart_{i}_r{}", k + 1)
            }
        }));
    }
    for m in 1..=n {
        for k in (m + 1)..=n {
            h.push(if n < 10 {
                format!("ov2_{m}{k}")
            } else {
                format!("ov2_{m}_{k}")
            });
        }
    }
    h.extend((1..=n).map(|i| format!("lambda_{i}")));
    h.extend(
        [
            "svn_exact_bits",
            "svn_pop_bits",
            "purity",
            "linear_entropy",
            "renyi2_bits",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    h
}

fn record_row(r: &EntanglementRecord) -> Vec<String> {
    let mut row = vec![units::time_from_internal(r.time).to_string()];
    row.extend(r.populations.iter().map(f64::to_string));
    for cut in &r.partial_populations {
        row.extend(cut.iter().map(f64::to_string));
    }
    row.extend(r.overlaps_sq.iter().map(|(_, _, v)| v.to_string()));
    row.extend(r.schmidt.iter().map(f64::to_string));
    row.extend(
        [r.svn_exact, r.svn_pop, r.purity, r.linear_entropy, r.renyi2]
            .iter()
            .map(f64::to_string),
    );
    row
}

/// Writes the records; an empty list gives a header-only file.
pub fn write_time_series(path: &Path, n_channels: usize, n_cuts: usize, records: &[EntanglementRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(time_series_header(n_channels, n_cuts))
        .map_err(|e| csv_error(path, e))?;
    for r in records {
        w.write_record(record_row(r)).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `R_a0` followed by `re_*`, `im_*`, `abs2_*` per channel.
pub fn write_snapshot(path: &Path, state: &ChannelState, names: &[&str]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut header = vec!["R_a0".to_string()];
    for n in names {
        header.extend([format!("re_{n}"), format!("im_{n}"), format!("abs2_{n}")]);
    }
    w.write_record(&header).map_err(|e| csv_error(path, e))?;
    for (k, r) in state.grid().points().iter().enumerate() {
        let mut row = vec![r.to_string()];
        for c in state.channels() {
            let a = c.amplitudes()[k];
            row.extend([a.re.to_string(), a.im.to_string(), a.norm_sqr().to_string()]);
        }
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// SHA-256 of the compact JSON form of the materialized config.
pub fn config_hash(config: &ScenarioConfig) -> String {
    let text = serde_json::to_string(config).expect("scenario config serializes");
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct GridInfo {
    pub r_min_a0: f64,
    pub r_max_a0: f64,
    pub n_points: usize,
    pub spacing_a0: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelInfo {
    pub channel: String,
    pub v: usize,
    pub energy_cm1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SegmentInfo {
    pub index: usize,
    pub t_start_ps: f64,
    pub t_end_ps: f64,
    /// Index into the scenario's pulse list.
    pub pulse: Option<usize>,
    pub t_p_ps: Option<f64>,
    pub dressed_channel: Option<String>,
    pub photon_energy_cm1: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SwitchInfo {
    pub time_ps: f64,
    pub envelope_fraction_before: f64,
    pub envelope_fraction_after: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SnapshotInfo {
    pub requested_ps: f64,
    pub actual_ps: f64,
    pub file: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct FinalSummary {
    pub time_ps: f64,
    pub populations: Vec<f64>,
    pub linear_entropy: f64,
    pub svn_exact_bits: f64,
    pub purity: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub program: String,
    pub version: String,
    pub config_sha256: String,
    pub config: ScenarioConfig,
    pub channels: Vec<String>,
    pub grid: GridInfo,
    pub dt_ps: f64,
    pub steps: usize,
    pub samples: usize,
    pub initial_level: Option<LevelInfo>,
    pub segments: Vec<SegmentInfo>,
    pub switches: Vec<SwitchInfo>,
    pub snapshots: Vec<SnapshotInfo>,
    pub warnings: Vec<String>,
    pub population_formula_discrepancies: usize,
    pub max_norm_drift: f64,
    pub final_record: Option<FinalSummary>,
    pub wall_time_s: f64,
}

fn snapshot_name(prefix: &str, t_ps: f64) -> String {
    format!("{prefix}_t{t_ps}ps.csv")
}

pub fn metadata(s: &Scenario, out: &RunOutput) -> RunMetadata {
    let names: Vec<String> = s.config.channels.iter().map(|c| c.name.clone()).collect();
    let ps = units::time_from_internal;
    RunMetadata {
        program: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config_sha256: config_hash(&s.config),
        config: s.config.clone(),
        channels: names.clone(),
        grid: GridInfo {
            r_min_a0: s.grid.r_min(),
            r_max_a0: s.grid.r_max(),
            n_points: s.grid.n_points(),
            spacing_a0: s.grid.spacing(),
        },
        dt_ps: s.config.propagation.dt_ps.unwrap_or_else(|| ps(s.propagation.dt)),
        steps: out.steps,
        samples: out.records.len(),
        initial_level: out.selected_level.map(|l| LevelInfo {
            channel: names[l.channel].clone(),
            v: l.v,
            energy_cm1: units::energy_from_internal(l.energy),
        }),
        segments: out
            .plan
            .segments
            .iter()
            .map(|seg| SegmentInfo {
                index: seg.index,
                t_start_ps: ps(seg.t_start),
                t_end_ps: ps(seg.t_end),
                pulse: seg.pulse.as_ref().map(|(i, _)| *i),
                t_p_ps: seg.pulse.as_ref().map(|(_, p)| ps(p.t_p)),
                dressed_channel: seg.pulse.as_ref().map(|(_, p)| names[p.channels.0].clone()),
                photon_energy_cm1: seg
                    .pulse
                    .as_ref()
                    .map(|(_, p)| units::energy_from_internal(p.photon_energy)),
            })
            .collect(),
        switches: out
            .plan
            .switches
            .iter()
            .map(|sw| SwitchInfo {
                time_ps: ps(sw.time),
                envelope_fraction_before: sw.relative_envelopes.0,
                envelope_fraction_after: sw.relative_envelopes.1,
            })
            .collect(),
        snapshots: out
            .snapshots
            .iter()
            .map(|snap| SnapshotInfo {
                requested_ps: ps(snap.requested),
                actual_ps: ps(snap.state.time),
                file: snapshot_name(&s.config.output.snapshot_prefix, ps(snap.requested)),
            })
            .collect(),
        warnings: out.warnings.clone(),
        population_formula_discrepancies: out.records.iter().filter(|r| r.discrepancy).count(),
        max_norm_drift: out.max_norm_drift,
        final_record: out.records.last().map(|r| FinalSummary {
            time_ps: ps(r.time),
            populations: r.populations.clone(),
            linear_entropy: r.linear_entropy,
            svn_exact_bits: r.svn_exact,
            purity: r.purity,
        }),
        wall_time_s: out.wall_time_s,
    }
}

/// Writes time series, snapshots and metadata into `dir` (created if needed)
/// and returns the paths written.
pub fn write_outputs(s: &Scenario, out: &RunOutput, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let names: Vec<&str> = s.channel_names();
    let cfg = &s.config.output;
    let mut written = Vec::new();

    let ts = dir.join(&cfg.time_series);
    write_time_series(&ts, s.n_channels(), s.r_cuts.len(), &out.records)?;
    written.push(ts);

    for snap in &out.snapshots {
        let p = dir.join(snapshot_name(
            &cfg.snapshot_prefix,
            units::time_from_internal(snap.requested),
        ));
        write_snapshot(&p, &snap.state, &names)?;
        written.push(p);
    }

    let meta = dir.join(&cfg.metadata);
    let file = File::create(&meta).map_err(|e| Error::io(&meta, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &metadata(s, out)).map_err(|e| Error::io(&meta, std::io::Error::other(e)))?;
    w.write_all(b"\n")
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&meta, e))?;
    written.push(meta);
    Ok(written)
}
