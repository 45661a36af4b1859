//! Executes a configured experiment and writes its files.
//!
//! Every random draw comes from a stream keyed by `(seed, index)`, and
//! parallel results are merged in index order, so output bytes do not
//! depend on the number of workers.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use nestlat::codes::CodeDims;
use nestlat::gp::{gp_dims_for_multiplier, gp_rate_thresholds, GpScheme, GpTrialRecord};
use nestlat::instances;
use nestlat::measures::{mutual_information_split, FiniteMeasure};
use nestlat::quantize::{clipping_sweep, default_schedule, mi_refinement_sweep, RefinementStep, SweepPoint};
use nestlat::verify::{
    exponent_y, sample_rank_distribution, verify_g_uniform, verify_pairwise_independence,
    verify_parity_uniform_independent, verify_rank_distribution, ExponentRow, ExponentSetup, LemmaReport, PairCase,
    EXPONENT_CHUNK,
};
use nestlat::wz::{wz_dims_for_fractions, wz_rate_thresholds, WzScheme, WzTrialRecord};
use nestlat::zp::PrimeModulus;

use crate::config::{ConfigError, ExperimentConfig, Mode};
use crate::report::{
    check_consistency, emit_plotdata, gp_trial_row, wz_trial_row, Scheme, SweepReport, SweepRow, TrialOutcome,
    GP_TRIAL_HEADER, WZ_TRIAL_HEADER,
};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] nestlat::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
}

impl RunError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

/// What a mode produced, besides its files.
#[derive(Clone, Debug)]
pub enum ModeReport {
    Verify(Vec<LemmaReport>),
    Sweep(SweepReport),
    Exponent { divergence: f64, tables: Vec<(f64, Vec<ExponentRow>)> },
    Quantize { reference_mi: f64, refinement: Vec<SweepPoint>, clipping: Vec<(f64, f64)> },
}

#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: ModeReport,
    pub files: Vec<PathBuf>,
    /// Failure messages that turn into exit status 1.
    pub failures: Vec<String>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            1
        }
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: &Path) -> Result<Self, RunError> {
        fs::create_dir_all(dir).map_err(|source| RunError::Io { path: dir.to_path_buf(), source })?;
        Ok(Writer { dir: dir.to_path_buf(), files: Vec::new() })
    }

    fn write(&mut self, name: &str, contents: &str) -> Result<(), RunError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|source| RunError::Io { path: path.clone(), source })?;
        self.files.push(path);
        Ok(())
    }
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunOutcome, RunError> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build()
        .map_err(|e| RunError::Pool(e.to_string()))?;
    let mut out = Writer::new(&cfg.out)?;
    let (report, failures) = pool.install(|| match cfg.mode {
        Mode::Verify => run_verify(cfg, &mut out),
        Mode::Gp => run_gp(cfg, &mut out),
        Mode::Wz => run_wz(cfg, &mut out),
        Mode::Exponent => run_exponent(cfg, &mut out),
        Mode::Quantize => run_quantize(cfg, &mut out),
    })?;
    Ok(RunOutcome { report, files: out.files, failures })
}

type ModeResult = Result<(ModeReport, Vec<String>), RunError>;

fn run_verify(cfg: &ExperimentConfig, out: &mut Writer) -> ModeResult {
    let p = PrimeModulus::new(cfg.p.unwrap_or(3))?;
    let (k, l) = (cfg.k.unwrap_or(1), cfg.l.unwrap_or(1));
    let mut reports = Vec::new();
    for &n in &cfg.n {
        reports.push(verify_g_uniform(p, n, k, l)?);
        reports.push(verify_pairwise_independence(p, n, k, l, PairCase::SameMDiffA)?);
        reports.push(verify_pairwise_independence(p, n, k, l, PairCase::DiffM)?);
        reports.push(verify_parity_uniform_independent(p, n, l)?);
        reports.push(verify_rank_distribution(p, n, l)?);
        reports.push(sample_rank_distribution(p, n, l, cfg.trials, 3.0, cfg.seed)?);
    }
    let mut csv = String::from("lemma,p,n,k,l,draws,check,relation,expected,observed,tolerance,provenance,verdict\n");
    let mut text = String::new();
    let mut failures = Vec::new();
    for r in &reports {
        for c in &r.checks {
            csv.push_str(&format!(
                "{},{},{},{},{},{},\"{}\",{:?},{},{},{},{},{}\n",
                r.lemma.id(),
                r.p,
                r.n,
                r.k,
                r.l,
                r.draws,
                c.label.replace('"', "'"),
                c.relation,
                c.expected,
                c.observed,
                c.tolerance,
                c.provenance.as_str(),
                if r.failures().any(|f| f == c) { "fail" } else { "ok" },
            ));
        }
        text.push_str(&format!(
            "{} p={} n={} k={} l={} draws={} checks={} verdict={}\n",
            r.lemma.id(),
            r.p,
            r.n,
            r.k,
            r.l,
            r.draws,
            r.checks.len(),
            r.verdict.as_str()
        ));
        for f in r.failures() {
            text.push_str(&format!("  fail: {} expected {} observed {}\n", f.label, f.expected, f.observed));
        }
        if !r.verdict.passed() {
            failures.push(format!("{} failed for p={} n={} k={} l={}", r.lemma.id(), r.p, r.n, r.k, r.l));
        }
    }
    out.write("verify_checks.csv", &csv)?;
    out.write("verify_report.txt", &text)?;
    Ok((ModeReport::Verify(reports), failures))
}

fn run_points<S, R>(
    trials: u64,
    scheme: &S,
    trial: impl Fn(&mut S, u64) -> nestlat::Result<R> + Sync,
) -> Result<Vec<R>, RunError>
where
    S: Clone + Send + Sync,
    R: Send,
{
    let records: nestlat::Result<Vec<R>> =
        (0..trials).into_par_iter().map_init(|| scheme.clone(), |s, t| trial(s, t)).collect();
    Ok(records?)
}

fn check_lattice(cfg: &ExperimentConfig, lattice: &nestlat::lattice::LatticeParams) -> Result<(), RunError> {
    if let Some(p) = cfg.p {
        if p != lattice.modulus().get() {
            return Err(ConfigError::Value { field: "p".into(), message: "does not match the instance".into() }.into());
        }
    }
    if let Some(g) = cfg.gamma {
        if g != lattice.gamma() {
            return Err(ConfigError::Value { field: "gamma".into(), message: "does not match the instance".into() }.into());
        }
    }
    Ok(())
}

fn finish_sweep(
    report: SweepReport,
    trial_csv: String,
    p: u32,
    prefix: &str,
    out: &mut Writer,
) -> ModeResult {
    let mut failures = Vec::new();
    if let Err(e) = check_consistency(&report, &trial_csv, p) {
        failures.push(format!("self-consistency: {e}"));
    }
    out.write(&format!("{prefix}_trials.csv"), &trial_csv)?;
    out.write(&format!("{prefix}_summary.csv"), &report.to_csv())?;
    out.write(&format!("{prefix}_summary.dat"), &emit_plotdata(&report))?;
    Ok((ModeReport::Sweep(report), failures))
}

fn run_gp(cfg: &ExperimentConfig, out: &mut Writer) -> ModeResult {
    let spec = instances::gp_z3_flip01()?;
    let lattice = spec.lattice();
    check_lattice(cfg, &lattice)?;
    let thresholds = gp_rate_thresholds(&spec.joint_usy()?, &lattice)?;
    let mut points = Vec::new();
    match (cfg.k, cfg.l) {
        (Some(k), Some(l)) => points.extend(cfg.n.iter().map(|&n| Ok((f64::NAN, CodeDims::new(n, k, l)?)))),
        _ => {
            for &m in &cfg.rate_multipliers {
                for &n in &cfg.n {
                    points.push(gp_dims_for_multiplier(&thresholds, &lattice, n, m, cfg.enc_margin).map(|d| (m, d)));
                }
            }
        }
    }
    let p = lattice.modulus().get();
    let mut csv = format!("{GP_TRIAL_HEADER}\n");
    let mut rows = Vec::new();
    for point in points {
        let (setting, dims) = point?;
        let scheme = GpScheme::new(spec.clone(), dims, cfg.eps)?;
        let seed = cfg.seed;
        let records: Vec<GpTrialRecord> = run_points(cfg.trials, &scheme, |s, t| s.run_trial(seed, t))?;
        for r in &records {
            csv.push_str(&gp_trial_row(r));
            csv.push('\n');
        }
        let outcomes: Vec<TrialOutcome> = records.iter().map(TrialOutcome::from).collect();
        rows.push(SweepRow::from_outcomes(setting, p, &outcomes));
    }
    finish_sweep(SweepReport { scheme: Scheme::Gp, thresholds, rows }, csv, p, "gp", out)
}

fn run_wz(cfg: &ExperimentConfig, out: &mut Writer) -> ModeResult {
    let spec = instances::wz_z3_flip01()?;
    let lattice = spec.lattice();
    check_lattice(cfg, &lattice)?;
    let thresholds = wz_rate_thresholds(&spec.joint_xsu()?, &lattice)?;
    let p = lattice.modulus().get();
    let mut csv = format!("{WZ_TRIAL_HEADER}\n");
    let mut rows = Vec::new();
    for &n in &cfg.n {
        let (setting, dims) = match (cfg.k, cfg.l) {
            (Some(k), Some(l)) => (f64::NAN, CodeDims::new(n, k, l)?),
            _ => (cfg.dec_fraction, wz_dims_for_fractions(&thresholds, &lattice, n, cfg.enc_fraction, cfg.dec_fraction)?),
        };
        let scheme = WzScheme::new(spec.clone(), dims, cfg.eps)?;
        let seed = cfg.seed;
        let records: Vec<WzTrialRecord> = run_points(cfg.trials, &scheme, |s, t| s.run_trial(seed, t))?;
        for r in &records {
            csv.push_str(&wz_trial_row(r));
            csv.push('\n');
        }
        let outcomes: Vec<TrialOutcome> = records.iter().map(TrialOutcome::from).collect();
        rows.push(SweepRow::from_outcomes(setting, p, &outcomes));
    }
    finish_sweep(SweepReport { scheme: Scheme::Wz, thresholds, rows }, csv, p, "wz", out)
}

/// Exponent table for one radius, with sample chunks spread over the pool.
pub fn exponent_table(setup: &ExponentSetup, n_grid: &[usize], samples: u64, seed: u64) -> Result<Vec<ExponentRow>, RunError> {
    let chunks = samples.div_ceil(EXPONENT_CHUNK);
    let mut rows = Vec::new();
    for &n in n_grid {
        let y = exponent_y(setup, n, seed)?;
        let hits: u64 = (0..chunks)
            .into_par_iter()
            .map_init(
                || setup.typicality().expect("validated setup"),
                |cache, c| {
                    let start = c * EXPONENT_CHUNK;
                    setup.count_hits(cache, &y, seed, start, EXPONENT_CHUNK.min(samples - start))
                },
            )
            .sum();
        rows.push(ExponentRow::from_hits(n, samples, hits));
    }
    Ok(rows)
}

fn run_exponent(cfg: &ExperimentConfig, out: &mut Writer) -> ModeResult {
    let (joint, reference) = match (&cfg.joint, &cfg.reference) {
        (Some(j), Some(r)) => (j.clone(), r.clone()),
        _ => {
            let b = instances::binary_exponent_d1();
            (b.joint, b.reference)
        }
    };
    let mut radii = vec![cfg.eps];
    radii.extend(cfg.eps_sensitivity.iter().copied().filter(|&e| e != cfg.eps));
    let mut tables = Vec::new();
    let mut divergence = f64::NAN;
    for &eps in &radii {
        let setup = ExponentSetup::new(&joint, &reference, eps)?;
        divergence = setup.divergence()?;
        tables.push((eps, exponent_table(&setup, &cfg.n, cfg.trials, cfg.seed)?));
    }
    let mut csv = String::from("eps,n,samples,hits,exponent,exponent_low,exponent_high,lower_bound_only,divergence\n");
    let mut dat = String::from("# eps n samples hits exponent exponent_low exponent_high lower_bound_only divergence\n");
    for (eps, rows) in &tables {
        for r in rows {
            let fields = [
                eps.to_string(),
                r.n.to_string(),
                r.samples.to_string(),
                r.hits.to_string(),
                r.exponent.to_string(),
                r.exponent_low.to_string(),
                r.exponent_high.to_string(),
                u8::from(r.lower_bound_only).to_string(),
                divergence.to_string(),
            ];
            csv.push_str(&fields.join(","));
            csv.push('\n');
            dat.push_str(&fields.join(" "));
            dat.push('\n');
        }
    }
    out.write("exponent.csv", &csv)?;
    out.write("exponent.dat", &dat)?;
    Ok((ModeReport::Exponent { divergence, tables }, Vec::new()))
}

fn run_quantize(cfg: &ExperimentConfig, out: &mut Writer) -> ModeResult {
    let reference: FiniteMeasure = match &cfg.joint {
        Some(j) => j.clone(),
        None => instances::gauss_rho08()?,
    };
    if reference.dim() < 2 {
        return Err(ConfigError::Value { field: "joint".into(), message: "needs at least two coordinates".into() }.into());
    }
    let axes: Vec<usize> = (0..reference.dim()).collect();
    let schedule: Vec<RefinementStep> = match (cfg.gamma, cfg.p) {
        (Some(gamma), Some(p)) => vec![RefinementStep { step: 0, gamma, p: PrimeModulus::new(p)? }],
        _ => default_schedule(cfg.first_step, cfg.last_step)?,
    };
    let reference_mi = mutual_information_split(&reference, 1)?;
    let refinement: nestlat::Result<Vec<Vec<SweepPoint>>> = schedule
        .par_iter()
        .map(|s| mi_refinement_sweep(&reference, 1, &axes, std::slice::from_ref(s)))
        .collect();
    let refinement: Vec<SweepPoint> = refinement?.into_iter().flatten().collect();
    let clipping = clipping_sweep(&reference, 1, 0, &cfg.clip_levels)?;
    let mut csv = String::from("step,gamma,p,mi_bits,prokhorov_to_ref,reference_mi\n");
    let mut dat = String::from("# step gamma p mi_bits prokhorov_to_ref reference_mi\n");
    for s in &refinement {
        let fields = [
            s.step.to_string(),
            s.gamma.to_string(),
            s.p.to_string(),
            s.mi_bits.to_string(),
            s.prokhorov_to_ref.to_string(),
            reference_mi.to_string(),
        ];
        csv.push_str(&fields.join(","));
        csv.push('\n');
        dat.push_str(&fields.join(" "));
        dat.push('\n');
    }
    let mut clip_csv = String::from("level,mi_bits,reference_mi\n");
    for (level, mi) in &clipping {
        clip_csv.push_str(&format!("{level},{mi},{reference_mi}\n"));
    }
    out.write("quantize_refinement.csv", &csv)?;
    out.write("quantize_refinement.dat", &dat)?;
    out.write("quantize_clipping.csv", &clip_csv)?;
    Ok((ModeReport::Quantize { reference_mi, refinement, clipping }, Vec::new()))
}
