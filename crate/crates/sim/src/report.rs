//! Per-trial rows, sweep aggregates, CSV and plot-data output.

use std::fmt::Write as _;

use nestlat::gp::{GpTrialRecord, RateThresholds};
use nestlat::stats::{Moments, Z95};
use nestlat::wz::WzTrialRecord;

pub const GP_TRIAL_HEADER: &str = "trial,n,k,l,p,gamma,eps,encoder_found,decoded_ok,block_cost,stacked_rank";
pub const WZ_TRIAL_HEADER: &str = "trial,n,k,l,p,gamma,eps,encoder_found,decoder_unique,block_distortion,rank_H";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn flag(b: bool) -> u8 {
    u8::from(b)
}

pub fn gp_trial_row(r: &GpTrialRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.trial,
        r.n,
        r.k,
        r.l,
        r.p,
        r.gamma,
        r.eps,
        flag(r.encoder_found),
        flag(r.decoded_ok),
        opt(r.block_cost),
        r.stacked_rank
    )
}

pub fn wz_trial_row(r: &WzTrialRecord) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}",
        r.trial,
        r.n,
        r.k,
        r.l,
        r.p,
        r.gamma,
        r.eps,
        flag(r.encoder_found),
        flag(r.decoder_unique),
        opt(r.block_distortion),
        r.rank_h
    )
}

/// The scheme-independent part of a trial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialOutcome {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    pub encoder_found: bool,
    /// GP: message decoded correctly. WZ: encoder and decoder both succeeded.
    pub success: bool,
    /// Block cost (GP) or block distortion (WZ), when defined.
    pub metric: Option<f64>,
}

impl From<&GpTrialRecord> for TrialOutcome {
    fn from(r: &GpTrialRecord) -> Self {
        TrialOutcome {
            n: r.n,
            k: r.k,
            l: r.l,
            encoder_found: r.encoder_found,
            success: r.decoded_ok,
            metric: r.block_cost,
        }
    }
}

impl From<&WzTrialRecord> for TrialOutcome {
    fn from(r: &WzTrialRecord) -> Self {
        TrialOutcome {
            n: r.n,
            k: r.k,
            l: r.l,
            encoder_found: r.encoder_found,
            success: r.encoder_found && r.decoder_unique,
            metric: r.block_distortion,
        }
    }
}

/// Aggregates for one `(n, rate)` point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    pub l: usize,
    /// Rate multiplier (GP) or decoding fraction (WZ) that chose `(k, l)`;
    /// NaN when the dimensions were given explicitly.
    pub setting: f64,
    /// `(k/n) log2 p`.
    pub rate: f64,
    pub trials: u64,
    pub encoder_failures: u64,
    /// GP: wrong or ambiguous decoding. WZ: no joint success.
    pub errors: u64,
    pub metric_count: u64,
    pub metric_mean: f64,
    pub metric_half_width: f64,
}

impl SweepRow {
    pub fn from_outcomes(setting: f64, p: u32, outcomes: &[TrialOutcome]) -> Self {
        let first = outcomes.first().copied().unwrap_or(TrialOutcome {
            n: 0,
            k: 0,
            l: 0,
            encoder_found: false,
            success: false,
            metric: None,
        });
        let mut metric = Moments::default();
        metric.extend(outcomes.iter().filter_map(|o| o.metric));
        SweepRow {
            n: first.n,
            k: first.k,
            l: first.l,
            setting,
            rate: if first.n == 0 { 0.0 } else { first.k as f64 * f64::from(p).log2() / first.n as f64 },
            trials: outcomes.len() as u64,
            encoder_failures: outcomes.iter().filter(|o| !o.encoder_found).count() as u64,
            errors: outcomes.iter().filter(|o| !o.success).count() as u64,
            metric_count: metric.count(),
            metric_mean: metric.mean(),
            metric_half_width: metric.half_width(Z95),
        }
    }

    fn rate_of(&self, count: u64) -> f64 {
        count as f64 / self.trials as f64
    }

    pub fn encoder_failure_rate(&self) -> f64 {
        self.rate_of(self.encoder_failures)
    }

    pub fn error_rate(&self) -> f64 {
        self.rate_of(self.errors)
    }

    pub fn success_rate(&self) -> f64 {
        1.0 - self.error_rate()
    }

    /// Normal-approximation 95% half-width of a rate.
    pub fn half_width(&self, rate: f64) -> f64 {
        Z95 * (rate * (1.0 - rate) / self.trials as f64).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Gp,
    Wz,
}

/// Per-`(n, rate)` aggregates of a GP or WZ sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepReport {
    pub scheme: Scheme,
    pub thresholds: RateThresholds,
    pub rows: Vec<SweepRow>,
}

impl SweepReport {
    fn metric_name(&self) -> &'static str {
        match self.scheme {
            Scheme::Gp => "cost",
            Scheme::Wz => "distortion",
        }
    }

    fn error_name(&self) -> &'static str {
        match self.scheme {
            Scheme::Gp => "decode_error",
            Scheme::Wz => "joint_failure",
        }
    }

    fn columns(&self) -> Vec<String> {
        let (e, m) = (self.error_name(), self.metric_name());
        [
            "n", "k", "l", "setting", "rate", "trials", "encoder_failure", "encoder_failure_hw", e, &format!("{e}_hw"),
            &format!("mean_{m}"), &format!("mean_{m}_hw"), "enc_bound", "dec_bound",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect()
    }

    fn values(&self, row: &SweepRow) -> Vec<String> {
        let (ef, er) = (row.encoder_failure_rate(), row.error_rate());
        vec![
            row.n.to_string(),
            row.k.to_string(),
            row.l.to_string(),
            row.setting.to_string(),
            row.rate.to_string(),
            row.trials.to_string(),
            ef.to_string(),
            row.half_width(ef).to_string(),
            er.to_string(),
            row.half_width(er).to_string(),
            row.metric_mean.to_string(),
            row.metric_half_width.to_string(),
            self.thresholds.enc_bound.to_string(),
            self.thresholds.dec_bound.to_string(),
        ]
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns().join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&self.values(row).join(","));
            out.push('\n');
        }
        out
    }
}

/// Whitespace-separated columns under a `#` header naming them, one line
/// per `(n, rate)` point.
pub fn emit_plotdata(report: &SweepReport) -> String {
    let mut out = String::from("# ");
    out.push_str(&report.columns().join(" "));
    out.push('\n');
    for row in &report.rows {
        writeln!(out, "{}", report.values(row).join(" ")).expect("writing to a String");
    }
    out
}

/// Re-derives the per-point outcomes from a per-trial CSV. Rows are grouped
/// by consecutive `(n, k, l)` runs, in file order.
pub fn outcomes_from_trial_csv(text: &str, scheme: Scheme) -> Result<Vec<Vec<TrialOutcome>>, String> {
    let mut lines = text.lines();
    let expected = match scheme {
        Scheme::Gp => GP_TRIAL_HEADER,
        Scheme::Wz => WZ_TRIAL_HEADER,
    };
    if lines.next() != Some(expected) {
        return Err("unexpected per-trial header".into());
    }
    let mut groups: Vec<Vec<TrialOutcome>> = Vec::new();
    for (i, line) in lines.enumerate() {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 11 {
            return Err(format!("row {}: expected 11 fields", i + 2));
        }
        let int = |j: usize| f[j].parse::<usize>().map_err(|_| format!("row {}: bad field {j}", i + 2));
        let bit = |j: usize| match f[j] {
            "0" => Ok(false),
            "1" => Ok(true),
            _ => Err(format!("row {}: bad flag {j}", i + 2)),
        };
        let metric = if f[9].is_empty() {
            None
        } else {
            Some(f[9].parse::<f64>().map_err(|_| format!("row {}: bad metric", i + 2))?)
        };
        let (encoder_found, second) = (bit(7)?, bit(8)?);
        let o = TrialOutcome {
            n: int(1)?,
            k: int(2)?,
            l: int(3)?,
            encoder_found,
            success: match scheme {
                Scheme::Gp => second,
                Scheme::Wz => encoder_found && second,
            },
            metric,
        };
        match groups.last_mut() {
            Some(g) if (g[0].n, g[0].k, g[0].l) == (o.n, o.k, o.l) => g.push(o),
            _ => groups.push(vec![o]),
        }
    }
    Ok(groups)
}

/// Checks that the report's aggregates equal a recomputation from the
/// per-trial CSV.
pub fn check_consistency(report: &SweepReport, trial_csv: &str, p: u32) -> Result<(), String> {
    let groups = outcomes_from_trial_csv(trial_csv, report.scheme)?;
    if groups.len() != report.rows.len() {
        return Err(format!("{} point(s) in the report, {} in the trial file", report.rows.len(), groups.len()));
    }
    for (row, group) in report.rows.iter().zip(&groups) {
        let again = SweepRow::from_outcomes(row.setting, p, group);
        let same_counts = (again.n, again.k, again.l, again.trials, again.encoder_failures, again.errors, again.metric_count)
            == (row.n, row.k, row.l, row.trials, row.encoder_failures, row.errors, row.metric_count);
        let close = |a: f64, b: f64| (a.is_nan() && b.is_nan()) || (a - b).abs() <= 1e-12 * (1.0 + a.abs());
        if !same_counts || !close(again.metric_mean, row.metric_mean) {
            return Err(format!("aggregates for n={} k={} l={} do not match the trial file", row.n, row.k, row.l));
        }
    }
    Ok(())
}
