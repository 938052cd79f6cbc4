//! Mamdani fuzzy gain scheduler: 7 triangular sets per input, 49 rules per
//! output, min-AND, max aggregation and centroid defuzzification.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pid::{clamp_gains, GainBounds, PidGains};

/// Rule table shipped with the crate.
pub const DEFAULT_RULES: &str = include_str!("../../data/fuzzy_rules.txt");

/// Samples of the output universe used by the centroid.
const OUTPUT_SAMPLES: usize = 401;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RuleTableError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing rule block [{0}]")]
    MissingBlock(&'static str),
    #[error("invalid fuzzy scaling `{0}`")]
    InvalidScaling(&'static str),
}

/// Linguistic level, NB (negative big) through PB (positive big).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    NB,
    NM,
    NS,
    ZO,
    PS,
    PM,
    PB,
}

impl Level {
    pub const ALL: [Level; 7] = [Level::NB, Level::NM, Level::NS, Level::ZO, Level::PS, Level::PM, Level::PB];

    pub fn index(self) -> usize {
        self as usize
    }

    /// Peak of this level's set on the normalized universe `[-1, 1]`.
    pub fn center(self) -> f64 {
        (self as i32 - 3) as f64 / 3.0
    }

    pub fn negate(self) -> Level {
        Level::ALL[6 - self.index()]
    }

    /// Triangle with feet at the neighbouring peaks.
    pub fn mf(self) -> TriMf {
        let c = self as i32 - 3;
        TriMf::new((c - 1) as f64 / 3.0, c as f64 / 3.0, (c + 1) as f64 / 3.0)
    }
}

impl FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "NB" => Level::NB,
            "NM" => Level::NM,
            "NS" => Level::NS,
            "ZO" => Level::ZO,
            "PS" => Level::PS,
            "PM" => Level::PM,
            "PB" => Level::PB,
            other => return Err(format!("unknown level `{other}`")),
        })
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Triangular membership function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriMf {
    pub left: f64,
    pub peak: f64,
    pub right: f64,
}

impl TriMf {
    pub fn new(left: f64, peak: f64, right: f64) -> Self {
        assert!(left <= peak && peak <= right, "triangle feet out of order");
        Self { left, peak, right }
    }

    pub fn membership(&self, x: f64) -> f64 {
        if x < self.left || x > self.right {
            0.0
        } else if x == self.peak {
            1.0
        } else if x < self.peak {
            (x - self.left) / (self.peak - self.left)
        } else {
            (self.right - x) / (self.right - self.peak)
        }
    }
}

/// Memberships of `x` (clamped to `[-1, 1]`) in the seven input sets.
pub fn fuzzify(x: f64) -> [f64; 7] {
    let x = x.clamp(-1.0, 1.0);
    Level::ALL.map(|l| l.mf().membership(x))
}

/// One 7×7 consequent grid per output gain. Rows: error level, columns: rate level.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyRuleTable {
    pub kp: [[Level; 7]; 7],
    pub ki: [[Level; 7]; 7],
    pub kd: [[Level; 7]; 7],
}

impl Default for FuzzyRuleTable {
    fn default() -> Self {
        DEFAULT_RULES.parse().expect("bundled rule table parses")
    }
}

impl FromStr for FuzzyRuleTable {
    type Err = RuleTableError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut blocks: [Option<[[Level; 7]; 7]>; 3] = [None, None, None];
        let mut current: Option<(usize, Vec<[Level; 7]>, usize)> = None;

        let finish = |cur: Option<(usize, Vec<[Level; 7]>, usize)>,
                      blocks: &mut [Option<[[Level; 7]; 7]>; 3]|
         -> Result<(), RuleTableError> {
            if let Some((slot, rows, line)) = cur {
                let grid: [[Level; 7]; 7] = rows.try_into().map_err(|rows: Vec<_>| RuleTableError::Parse {
                    line,
                    msg: format!("block has {} rows, expected 7", rows.len()),
                })?;
                blocks[slot] = Some(grid);
            }
            Ok(())
        };

        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                finish(current.take(), &mut blocks)?;
                let slot = match name.trim() {
                    "kp" => 0,
                    "ki" => 1,
                    "kd" => 2,
                    other => {
                        return Err(RuleTableError::Parse { line: line_no, msg: format!("unknown block `{other}`") })
                    }
                };
                if blocks[slot].is_some() {
                    return Err(RuleTableError::Parse { line: line_no, msg: format!("duplicate block `{name}`") });
                }
                current = Some((slot, Vec::with_capacity(7), line_no));
                continue;
            }
            let Some((_, rows, _)) = current.as_mut() else {
                return Err(RuleTableError::Parse { line: line_no, msg: "rule row outside a block".into() });
            };
            let levels = line
                .split_whitespace()
                .map(|tok| tok.parse::<Level>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|msg| RuleTableError::Parse { line: line_no, msg })?;
            let row: [Level; 7] = levels.try_into().map_err(|v: Vec<_>| RuleTableError::Parse {
                line: line_no,
                msg: format!("row has {} entries, expected 7", v.len()),
            })?;
            if rows.len() == 7 {
                return Err(RuleTableError::Parse { line: line_no, msg: "more than 7 rows in block".into() });
            }
            rows.push(row);
        }
        finish(current.take(), &mut blocks)?;

        let [kp, ki, kd] = blocks;
        Ok(Self {
            kp: kp.ok_or(RuleTableError::MissingBlock("kp"))?,
            ki: ki.ok_or(RuleTableError::MissingBlock("ki"))?,
            kd: kd.ok_or(RuleTableError::MissingBlock("kd"))?,
        })
    }
}

impl fmt::Display for FuzzyRuleTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, grid) in [("kp", &self.kp), ("ki", &self.ki), ("kd", &self.kd)] {
            writeln!(f, "[{name}]")?;
            for row in grid {
                let cells: Vec<String> = row.iter().map(|l| l.to_string()).collect();
                writeln!(f, "{}", cells.join(" "))?;
            }
        }
        Ok(())
    }
}

impl FuzzyRuleTable {
    pub fn rule_count(&self) -> usize {
        49
    }

    /// True when `grid[i][j] == -grid[6-i][6-j]` for every cell.
    pub fn is_odd(grid: &[[Level; 7]; 7]) -> bool {
        (0..7).all(|i| (0..7).all(|j| grid[i][j] == grid[6 - i][6 - j].negate()))
    }
}

/// Input normalization ranges and output gain-increment scales.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FuzzyScaling {
    /// Error magnitude mapped to ±1 (m).
    pub error_range: f64,
    /// Error-rate magnitude mapped to ±1 (m/s).
    pub rate_range: f64,
    pub kp_scale: f64,
    pub ki_scale: f64,
    pub kd_scale: f64,
}

impl Default for FuzzyScaling {
    /// Output scales are half the base gains.
    fn default() -> Self {
        Self {
            error_range: 0.2,
            rate_range: 2.0,
            kp_scale: 0.6,
            ki_scale: 0.5,
            kd_scale: 0.005,
        }
    }
}

impl FuzzyScaling {
    pub fn validate(&self) -> Result<(), RuleTableError> {
        for (name, v) in [
            ("error_range", self.error_range),
            ("rate_range", self.rate_range),
            ("kp_scale", self.kp_scale),
            ("ki_scale", self.ki_scale),
            ("kd_scale", self.kd_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(RuleTableError::InvalidScaling(name));
            }
        }
        Ok(())
    }
}

/// Centroid of the clipped-and-max-aggregated output sets, on `[-1, 1]`.
/// Samples are summed in mirrored pairs so that mirrored heights give a
/// centroid of exactly zero and reversed heights an exactly negated one.
fn defuzzify(heights: &[f64; 7]) -> f64 {
    let mfs = Level::ALL.map(Level::mf);
    let half = OUTPUT_SAMPLES / 2;
    let mu = |k: usize| {
        let y = (k as f64 - half as f64) / half as f64;
        mfs.iter()
            .zip(heights)
            .map(|(mf, &h)| mf.membership(y).min(h))
            .fold(0.0, f64::max)
    };
    let (mut num, mut den) = (0.0, mu(half));
    for k in 1..=half {
        let (hi, lo) = (mu(half + k), mu(half - k));
        num += (k as f64 / half as f64) * (hi - lo);
        den += hi + lo;
    }
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

fn infer(grid: &[[Level; 7]; 7], mu_e: &[f64; 7], mu_r: &[f64; 7]) -> f64 {
    let mut heights = [0.0f64; 7];
    for (i, &me) in mu_e.iter().enumerate() {
        if me == 0.0 {
            continue;
        }
        for (j, &mr) in mu_r.iter().enumerate() {
            let strength = me.min(mr);
            let slot = &mut heights[grid[i][j].index()];
            *slot = slot.max(strength);
        }
    }
    defuzzify(&heights)
}

/// Gain increments `(Δkp, Δki, Δkd)` for error `e` (m) and rate `edot` (m/s).
pub fn fuzzy_delta(e: f64, edot: f64, table: &FuzzyRuleTable, scale: &FuzzyScaling) -> [f64; 3] {
    let mu_e = fuzzify(e / scale.error_range);
    let mu_r = fuzzify(edot / scale.rate_range);
    [
        infer(&table.kp, &mu_e, &mu_r) * scale.kp_scale,
        infer(&table.ki, &mu_e, &mu_r) * scale.ki_scale,
        infer(&table.kd, &mu_e, &mu_r) * scale.kd_scale,
    ]
}

/// `current + Δ(e, ė)`, clamped into `bounds`.
pub fn fuzzy_step(
    e: f64,
    edot: f64,
    current: &PidGains,
    table: &FuzzyRuleTable,
    scale: &FuzzyScaling,
    bounds: &GainBounds,
) -> PidGains {
    let d = fuzzy_delta(e, edot, table, scale);
    clamp_gains(
        &PidGains::new(current.kp + d[0], current.ki + d[1], current.kd + d[2]),
        bounds,
    )
}
