//! Time-tagged coincidence records and their line-oriented text format.
//!
//! One record per line, fields separated by commas or whitespace:
//!
//! ```text
//! run_index passage herald_time_ns herald atomic basis click phase_mrad [truth_accidental]
//! ```
//!
//! Lines starting with `#` are comments; `# key=value` comments carry metadata
//! such as the sideband estimate of the accidental fraction.

use std::collections::BTreeMap;
use std::f64::consts::TAU;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{AtomicProjection, Herald, Passage, PhotonBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ReadoutMode {
    /// Electron shelving only: measures `σz`.
    Population,
    /// π/2 pulse then shelving: measures along the Larmor-phase-dependent equator.
    Superposition,
}

impl ReadoutMode {
    pub const ALL: [ReadoutMode; 2] = [ReadoutMode::Population, ReadoutMode::Superposition];
}

/// Result of the atomic readout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum AtomicOutcome {
    Plus,
    Minus,
    /// Shelving result for `|−½⟩` (`σz = +1`).
    Shelved0,
    /// Shelving result for `|+½⟩`.
    Shelved1,
}

impl AtomicOutcome {
    pub fn mode(self) -> ReadoutMode {
        match self {
            AtomicOutcome::Plus | AtomicOutcome::Minus => ReadoutMode::Superposition,
            _ => ReadoutMode::Population,
        }
    }

    pub fn outcomes(mode: ReadoutMode) -> [AtomicOutcome; 2] {
        match mode {
            ReadoutMode::Population => [AtomicOutcome::Shelved0, AtomicOutcome::Shelved1],
            ReadoutMode::Superposition => [AtomicOutcome::Plus, AtomicOutcome::Minus],
        }
    }

    pub fn from_projection(a: AtomicProjection) -> Self {
        match a {
            AtomicProjection::Plus => AtomicOutcome::Plus,
            AtomicProjection::Minus => AtomicOutcome::Minus,
        }
    }

    pub fn projection(self) -> Option<AtomicProjection> {
        match self {
            AtomicOutcome::Plus => Some(AtomicProjection::Plus),
            AtomicOutcome::Minus => Some(AtomicProjection::Minus),
            _ => None,
        }
    }

    /// `σz` eigenvalue for population outcomes, `±1` for superposition outcomes.
    pub fn sign(self) -> f64 {
        match self {
            AtomicOutcome::Plus | AtomicOutcome::Shelved0 => 1.0,
            AtomicOutcome::Minus | AtomicOutcome::Shelved1 => -1.0,
        }
    }

    /// The outcome seen after a `σz` flip of the atom (superposition outcomes swap).
    pub fn z_flipped(self) -> Self {
        match self {
            AtomicOutcome::Plus => AtomicOutcome::Minus,
            AtomicOutcome::Minus => AtomicOutcome::Plus,
            other => other,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AtomicOutcome::Plus => "+",
            AtomicOutcome::Minus => "-",
            AtomicOutcome::Shelved0 => "shelved0",
            AtomicOutcome::Shelved1 => "shelved1",
        }
    }
}

impl FromStr for AtomicOutcome {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "+" => Ok(AtomicOutcome::Plus),
            "-" => Ok(AtomicOutcome::Minus),
            "shelved0" => Ok(AtomicOutcome::Shelved0),
            "shelved1" => Ok(AtomicOutcome::Shelved1),
            _ => Err(Error::UnknownName {
                kind: "atomic outcome",
                name: s.to_owned(),
            }),
        }
    }
}

/// Largest representable phase in milliradians, below 2π.
pub const MAX_PHASE_MRAD: u32 = 6283;

/// One registered herald/partner coincidence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EventRecord {
    pub run_index: u64,
    pub passage: Passage,
    /// Herald time since the start of the exposure, in nanoseconds.
    pub herald_time_ns: u64,
    pub herald: Herald,
    pub atomic: AtomicOutcome,
    pub basis: PhotonBasis,
    pub click: u8,
    /// Larmor phase in milliradians, in `[0, 2π)`.
    pub phase_mrad: u32,
    /// Simulation ground truth; `None` when not recorded.
    pub truth_accidental: Option<bool>,
}

impl EventRecord {
    pub fn herald_time_s(&self) -> f64 {
        self.herald_time_ns as f64 * 1e-9
    }

    pub fn phase(&self) -> f64 {
        self.phase_mrad as f64 * 1e-3
    }

    /// Milliradians of a phase in `[0, 2π)`, rounded down.
    pub fn quantize_phase(phase: f64) -> u32 {
        let wrapped = phase.rem_euclid(TAU);
        ((wrapped * 1e3).floor() as u32).min(MAX_PHASE_MRAD)
    }

    pub fn to_line(&self, with_truth: bool) -> String {
        let mut s = format!(
            "{},{},{},{},{},{},{},{}",
            self.run_index,
            self.passage,
            self.herald_time_ns,
            self.herald.label(),
            self.atomic.label(),
            self.basis.label(),
            self.click,
            self.phase_mrad
        );
        if with_truth {
            let t = self.truth_accidental.unwrap_or(false);
            s.push_str(if t { ",1" } else { ",0" });
        }
        s
    }

    /// Parses one data line; `line` is the 1-based line number used in errors.
    pub fn parse_line(text: &str, line: usize) -> Result<Self> {
        let bad = |reason: String| Error::MalformedRecord { line, reason };
        let fields: Vec<&str> = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 8 && fields.len() != 9 {
            return Err(bad(format!(
                "expected 8 or 9 fields, found {}",
                fields.len()
            )));
        }
        let int = |i: usize, what: &str| -> Result<u64> {
            fields[i].parse::<u64>().map_err(|_| {
                bad(format!(
                    "{what} `{}` is not a non-negative integer",
                    fields[i]
                ))
            })
        };
        let named = |e: Error| bad(e.to_string());
        let click = int(6, "click")?;
        if click > 1 {
            return Err(bad(format!("click must be 0 or 1, found {click}")));
        }
        let phase = int(7, "phase")?;
        if phase > MAX_PHASE_MRAD as u64 {
            return Err(bad(format!("phase {phase} mrad is not below 2π")));
        }
        let truth_accidental = match fields.get(8) {
            None => None,
            Some(&"0") => Some(false),
            Some(&"1") => Some(true),
            Some(other) => return Err(bad(format!("truth flag must be 0 or 1, found `{other}`"))),
        };
        Ok(Self {
            run_index: int(0, "run index")?,
            passage: fields[1].parse().map_err(named)?,
            herald_time_ns: int(2, "herald time")?,
            herald: fields[3].parse().map_err(named)?,
            atomic: fields[4].parse().map_err(named)?,
            basis: fields[5].parse().map_err(named)?,
            click: click as u8,
            phase_mrad: phase as u32,
            truth_accidental,
        })
    }
}

impl fmt::Display for EventRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_line(self.truth_accidental.is_some()))
    }
}

/// `key=value` metadata carried in `#` comment lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventMetadata {
    pub entries: BTreeMap<String, String>,
}

impl EventMetadata {
    pub const ACCIDENTAL_ESTIMATE: &'static str = "accidental_estimate";

    pub fn accidental_estimate(&self) -> Result<Option<f64>> {
        self.entries
            .get(Self::ACCIDENTAL_ESTIMATE)
            .map(|v| {
                v.parse::<f64>().map_err(|_| Error::InvalidParameter {
                    name: "accidental_estimate",
                    reason: format!("`{v}` is not a number"),
                })
            })
            .transpose()
    }

    pub fn set_accidental_estimate(&mut self, f: f64) {
        // `{}` formatting of f64 round-trips exactly
        self.entries
            .insert(Self::ACCIDENTAL_ESTIMATE.to_owned(), format!("{f}"));
    }
}

pub fn write_events<W: Write>(
    mut w: W,
    metadata: &EventMetadata,
    events: &[EventRecord],
    with_truth: bool,
) -> Result<()> {
    let mut header =
        "# run_index,passage,herald_time_ns,herald,atomic,basis,click,phase_mrad".to_owned();
    if with_truth {
        header.push_str(",truth_accidental");
    }
    writeln!(w, "{header}")?;
    for (k, v) in &metadata.entries {
        writeln!(w, "# {k}={v}")?;
    }
    for e in events {
        writeln!(w, "{}", e.to_line(with_truth))?;
    }
    w.flush()?;
    Ok(())
}

/// Streaming reader. In lenient mode malformed lines are skipped and counted.
pub struct EventReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    strict: bool,
    skipped: usize,
    metadata: EventMetadata,
}

impl<R: BufRead> EventReader<R> {
    pub fn new(reader: R, strict: bool) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            strict,
            skipped: 0,
            metadata: EventMetadata::default(),
        }
    }

    pub fn skipped(&self) -> usize {
        self.skipped
    }

    /// Metadata seen so far; complete once the reader is exhausted.
    pub fn metadata(&self) -> &EventMetadata {
        &self.metadata
    }
}

impl<R: BufRead> Iterator for EventReader<R> {
    type Item = Result<EventRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(l) => l,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(comment) = trimmed.strip_prefix('#') {
                if let Some((k, v)) = comment.trim().split_once('=') {
                    self.metadata
                        .entries
                        .insert(k.trim().to_owned(), v.trim().to_owned());
                }
                continue;
            }
            match EventRecord::parse_line(trimmed, self.line_no) {
                Ok(e) => return Some(Ok(e)),
                Err(e) if self.strict => return Some(Err(e)),
                Err(_) => self.skipped += 1,
            }
        }
    }
}
