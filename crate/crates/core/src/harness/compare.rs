//! Aggregation of per-controller evaluation CSVs and the ranking verdict.

use super::eval::error_stats;
use super::HarnessError;

pub const CONTROLLERS: [&str; 3] = ["drl", "classical", "fuzzy"];

/// One data row of an `eval_<controller>.csv`, lengths in mm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvRow {
    pub trial: usize,
    pub step: usize,
    pub setpoint: f64,
    pub measured: f64,
    pub error: f64,
    pub gains: [f64; 3],
}

pub const EVAL_COLUMNS: &str = "trial,step,setpoint,measured,error,kp,ki,kd";

pub fn parse_eval_csv(text: &str) -> Result<Vec<CsvRow>, HarnessError> {
    let bad = |line: usize, msg: String| HarnessError::Parse { line, msg };
    let mut rows = Vec::new();
    let mut seen_header = false;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !seen_header {
            if line != EVAL_COLUMNS {
                return Err(bad(i + 1, format!("expected header `{EVAL_COLUMNS}`")));
            }
            seen_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(bad(i + 1, format!("expected 8 fields, got {}", f.len())));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|e| bad(i + 1, format!("`{s}`: {e}")));
        let num = |s: &str| s.parse::<f64>().map_err(|e| bad(i + 1, format!("`{s}`: {e}")));
        rows.push(CsvRow {
            trial: int(f[0])?,
            step: int(f[1])?,
            setpoint: num(f[2])?,
            measured: num(f[3])?,
            error: num(f[4])?,
            gains: [num(f[5])?, num(f[6])?, num(f[7])?],
        });
    }
    if !seen_header {
        return Err(bad(0, "no header row".into()));
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ControllerSummary {
    pub controller: String,
    pub rows: usize,
    pub mean_abs_mm: f64,
    pub std_abs_mm: f64,
    /// RMS over all rows pooled.
    pub rms_mm: f64,
    /// Mean of the per-trial RMS values.
    pub mean_trial_rms_mm: f64,
    pub max_abs_mm: f64,
}

impl ControllerSummary {
    pub fn from_rows(controller: &str, rows: &[CsvRow]) -> Self {
        let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
        let (max_abs_mm, rms_mm, mean_abs_mm, std_abs_mm) = error_stats(&errs);
        let mut trials: Vec<usize> = rows.iter().map(|r| r.trial).collect();
        trials.sort_unstable();
        trials.dedup();
        let per_trial: Vec<f64> = trials
            .iter()
            .map(|&t| {
                let e: Vec<f64> = rows.iter().filter(|r| r.trial == t).map(|r| r.error).collect();
                error_stats(&e).1
            })
            .collect();
        let mean_trial_rms_mm = if per_trial.is_empty() { 0.0 } else { per_trial.iter().sum::<f64>() / per_trial.len() as f64 };
        Self {
            controller: controller.to_string(),
            rows: rows.len(),
            mean_abs_mm,
            std_abs_mm,
            rms_mm,
            mean_trial_rms_mm,
            max_abs_mm,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Sorted by mean absolute error, best first.
    pub ranked: Vec<ControllerSummary>,
    /// `drl < classical < fuzzy` on mean absolute error, strictly.
    pub ordering_reproduced: bool,
}

impl Comparison {
    pub fn new(summaries: Vec<ControllerSummary>) -> Self {
        let mean = |name: &str| summaries.iter().find(|s| s.controller == name).map(|s| s.mean_abs_mm);
        let ordering_reproduced = match (mean("drl"), mean("classical"), mean("fuzzy")) {
            (Some(d), Some(c), Some(f)) => d < c && c < f,
            _ => false,
        };
        let mut ranked = summaries;
        ranked.sort_by(|a, b| a.mean_abs_mm.total_cmp(&b.mean_abs_mm));
        Self { ranked, ordering_reproduced }
    }

    pub fn get(&self, controller: &str) -> Option<&ControllerSummary> {
        self.ranked.iter().find(|s| s.controller == controller)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("controller,rank,rows,mean_abs_error,std_abs_error,rms_error,mean_trial_rms_error,max_abs_error\n");
        for (i, s) in self.ranked.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                s.controller,
                i + 1,
                s.rows,
                s.mean_abs_mm,
                s.std_abs_mm,
                s.rms_mm,
                s.mean_trial_rms_mm,
                s.max_abs_mm
            ));
        }
        out
    }

    pub fn verdict(&self) -> String {
        let mut out = String::new();
        out.push_str(if self.ordering_reproduced { "ordering reproduced\n" } else { "ordering not reproduced\n" });
        out.push_str("expected: drl < classical < fuzzy by mean absolute error\n");
        for (i, s) in self.ranked.iter().enumerate() {
            out.push_str(&format!(
                "{}. {}: {:.4} ± {:.4} mm (rms {:.4} mm, max {:.4} mm)\n",
                i + 1,
                s.controller,
                s.mean_abs_mm,
                s.std_abs_mm,
                s.rms_mm,
                s.max_abs_mm
            ));
        }
        out
    }
}
