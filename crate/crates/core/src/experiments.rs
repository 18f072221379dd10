//! Drivers that run the three layers side by side and render the results as
//! CSV with fixed schemas and fixed float formatting.

use std::io::Write;

use rayon::prelude::*;

use crate::abm::{self, SamplingMode, SimConfig};
use crate::error::{Error, Result};
use crate::genfunc::{critical_p, steady_gamma, AnalyticSolution};
use crate::moment_ode::{self, OdeConfig, OdeMode};
use crate::series::{sample_times, Source, TimeSeries};

pub const TIMESERIES_HEADER: &str = "t,gamma,source,p,kappa,replicate,mode";
pub const SCAN_HEADER: &str = "p,gamma_ode_final,gamma_analytic_star,status";
pub const PC_CURVE_HEADER: &str = "kappa,pc_analytic,pc_ode,status";
pub const ABM_SUMMARY_HEADER: &str = "replicate,final_gamma,components,all_consensus";
pub const COMPARE_HEADER: &str = "t,abm_mean,ode_full,ode_pde_matched,analytic";
pub const COMPARE_SUMMARY_HEADER: &str = "metric,subject,value";

/// `|dγ/dt|` below which a final ODE state counts as a plateau.
pub const PLATEAU_RATE: f64 = 1e-6;
/// Final γ below which a bisection probe counts as fragmented.
pub const PC_GAMMA_FLOOR: f64 = 1e-3;
pub const PC_TOLERANCE: f64 = 1e-2;
pub const PC_SEARCH_MAX_P: f64 = 0.99;
pub const PC_SCAN_STEP: f64 = 0.1;
/// Terminal γ below which a compared source counts as fragmented.
pub const COMPARE_FRAGMENTED_GAMMA: f64 = 1e-6;

/// 17 significant digits, scientific notation.
pub fn fmt_f64(v: f64) -> String {
    if v.is_nan() {
        "nan".to_owned()
    } else {
        format!("{v:.16e}")
    }
}

/// Inclusive arithmetic range `start:stop:step`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamRange {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl ParamRange {
    pub fn values(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::invalid("range", format!("step must be positive, got {}", self.step)));
        }
        if self.start.is_nan() || self.stop.is_nan() || self.start > self.stop {
            return Err(Error::invalid("range", format!("empty range {}:{}", self.start, self.stop)));
        }
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        // round to the step's decimal grid so 0.05 * 3 prints as 0.15
        Ok((0..=count).map(|i| round12(self.start + i as f64 * self.step)).collect())
    }
}

impl std::str::FromStr for ParamRange {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| Error::invalid("range", format!("`{s}`: {e}")));
        match parts.as_slice() {
            [a, b, c] => Ok(ParamRange { start: parse(a)?, stop: parse(b)?, step: parse(c)? }),
            _ => Err(Error::invalid("range", format!("expected START:STOP:STEP, got `{s}`"))),
        }
    }
}

fn round12(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

/// Fully resolved experiment parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub kappa: f64,
    pub p_values: Vec<f64>,
    pub kappa_values: Vec<f64>,
    pub n: usize,
    pub k_max: usize,
    pub dt: f64,
    pub t_end: f64,
    pub sample_interval: f64,
    pub seed: u64,
    pub replicates: u64,
    pub modes: Vec<OdeMode>,
    pub sampling: SamplingMode,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            kappa: 4.0,
            p_values: vec![0.2],
            kappa_values: vec![4.0],
            n: 10_000,
            k_max: 60,
            dt: 0.01,
            t_end: 30.0,
            sample_interval: 0.1,
            seed: 0,
            replicates: 10,
            modes: vec![OdeMode::Full],
            sampling: SamplingMode::Uniform,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::invalid("kappa", format!("must be positive, got {}", self.kappa)));
        }
        if self.p_values.is_empty() {
            return Err(Error::invalid("p", "no rewiring probabilities given"));
        }
        if let Some(p) = self.p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::invalid("p", format!("must lie in [0, 1], got {p}")));
        }
        if self.kappa_values.is_empty() || self.kappa_values.iter().any(|k| k.is_nan() || *k <= 0.0) {
            return Err(Error::invalid("kappa-range", "mean degrees must be positive"));
        }
        if self.modes.is_empty() {
            return Err(Error::invalid("mode", "no ODE mode selected"));
        }
        if self.replicates == 0 {
            return Err(Error::invalid("replicates", "must be at least 1"));
        }
        self.ode_config(0.0, self.modes[0]).validate()
    }

    pub fn ode_config(&self, p: f64, mode: OdeMode) -> OdeConfig {
        OdeConfig { p, k_max: self.k_max, dt: self.dt, t_end: self.t_end, mode, sample_interval: self.sample_interval }
    }

    pub fn sim_config(&self, p: f64) -> SimConfig {
        SimConfig {
            n: self.n,
            mean_degree: self.kappa,
            p,
            t_end: self.t_end,
            seed: self.seed,
            sample_interval: self.sample_interval,
            sampling: self.sampling,
        }
    }

    fn single_p(&self, command: &str) -> Result<f64> {
        match self.p_values.as_slice() {
            [p] => Ok(*p),
            _ => Err(Error::invalid("p", format!("`{command}` takes a single rewiring probability"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TimeseriesRow {
    pub t: f64,
    pub gamma: f64,
    pub source: Source,
    pub p: f64,
    pub kappa: f64,
    pub replicate: u64,
    pub mode: String,
}

fn rows_of(series: &TimeSeries) -> impl Iterator<Item = TimeseriesRow> + '_ {
    series.samples().iter().map(move |&(t, gamma)| TimeseriesRow {
        t,
        gamma,
        source: series.source,
        p: series.meta.p,
        kappa: series.meta.kappa,
        replicate: series.meta.replicate,
        mode: series.meta.mode.clone(),
    })
}

/// ODE trajectories (each requested mode) and the analytic γ(t) for every p,
/// sorted by source, p, mode, t.
pub fn cmd_timeseries(cfg: &ExperimentConfig) -> Result<Vec<TimeseriesRow>> {
    cfg.validate()?;
    let jobs: Vec<(f64, Option<OdeMode>)> = cfg
        .p_values
        .iter()
        .flat_map(|&p| cfg.modes.iter().map(move |&m| (p, Some(m))).chain(std::iter::once((p, None))))
        .collect();
    let series: Vec<TimeSeries> = jobs
        .par_iter()
        .map(|&(p, mode)| match mode {
            Some(mode) => moment_ode::integrate(&cfg.ode_config(p, mode), cfg.kappa).map(|r| r.trajectory),
            None => AnalyticSolution::with_steady_factors(cfg.kappa, p).map(|s| s.series(cfg.t_end, cfg.sample_interval)),
        })
        .collect::<Result<_>>()?;
    let mut rows: Vec<TimeseriesRow> = series.iter().flat_map(rows_of).collect();
    rows.sort_by(|a, b| {
        (a.source, a.p, &a.mode, a.t)
            .partial_cmp(&(b.source, b.p, &b.mode, b.t))
            .expect("finite sort keys")
    });
    Ok(rows)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanStatus {
    Plateau,
    Fragmented,
    NotConverged,
}

impl ScanStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            ScanStatus::Plateau => "plateau",
            ScanStatus::Fragmented => "fragmented",
            ScanStatus::NotConverged => "not-converged",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanRow {
    pub p: f64,
    pub gamma_ode_final: f64,
    pub gamma_analytic_star: f64,
    pub status: ScanStatus,
}

/// Final ODE γ against the stationary closed form across p.
pub fn cmd_scan(cfg: &ExperimentConfig) -> Result<Vec<ScanRow>> {
    cfg.validate()?;
    let mode = cfg.modes[0];
    cfg.p_values
        .par_iter()
        .map(|&p| {
            let star = steady_gamma(cfg.kappa, p)?;
            let ode = cfg.ode_config(p, mode);
            let run = moment_ode::integrate(&ode, cfg.kappa)?;
            let status = if run.fragmented {
                ScanStatus::Fragmented
            } else if moment_ode::gamma_rate(&run.final_grid, p, mode).abs() < PLATEAU_RATE {
                ScanStatus::Plateau
            } else {
                ScanStatus::NotConverged
            };
            Ok(ScanRow { p, gamma_ode_final: run.final_gamma(), gamma_analytic_star: star, status })
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PcStatus {
    Bracketed,
    /// Fragmented at every probe down to p = 0.
    FragmentedAtZero,
    /// Still active at the largest probed p.
    ActiveAtMax,
    /// A probe stopped on a numerical failure.
    NumericalFailure,
}

impl PcStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PcStatus::Bracketed => "ok",
            PcStatus::FragmentedAtZero => "no-bracket:fragmented-at-p0",
            PcStatus::ActiveAtMax => "no-bracket:active-at-pmax",
            PcStatus::NumericalFailure => "numerical-failure",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcSearch {
    pub pc: Option<f64>,
    /// Bracket found by the downward scan, before bisection.
    pub coarse: (f64, f64),
    /// Final bracket, at most [`PC_TOLERANCE`] wide.
    pub lower: f64,
    pub upper: f64,
    pub status: PcStatus,
    pub evaluations: usize,
}

/// Whether the ODE started at mean degree `kappa` ends below [`PC_GAMMA_FLOOR`].
pub fn ode_fragments(base: &OdeConfig, kappa: f64, p: f64) -> Result<bool> {
    let cfg = OdeConfig { p, ..base.clone() };
    Ok(moment_ode::integrate(&cfg, kappa)?.final_gamma() < PC_GAMMA_FLOOR)
}

/// Locates the fragmentation transition of the ODE. Scans down from
/// [`PC_SEARCH_MAX_P`] in steps of [`PC_SCAN_STEP`] until a probe stays active,
/// then bisects that bracket to width [`PC_TOLERANCE`]. Starting from the
/// fragmented end keeps the probes away from small p, where large closure
/// factors make the explicit integrator stiff.
pub fn locate_pc_ode(base: &OdeConfig, kappa: f64) -> Result<PcSearch> {
    let mut evaluations = 1;
    let mut hi = PC_SEARCH_MAX_P;
    if !ode_fragments(base, kappa, hi)? {
        return Ok(PcSearch {
            pc: None,
            coarse: (hi, hi),
            lower: hi,
            upper: hi,
            status: PcStatus::ActiveAtMax,
            evaluations,
        });
    }
    let mut lo = loop {
        let p = round12((hi - PC_SCAN_STEP).max(0.0));
        evaluations += 1;
        if !ode_fragments(base, kappa, p)? {
            break p;
        }
        if p == 0.0 {
            return Ok(PcSearch {
                pc: None,
                coarse: (0.0, 0.0),
                lower: 0.0,
                upper: 0.0,
                status: PcStatus::FragmentedAtZero,
                evaluations,
            });
        }
        hi = p;
    };
    let coarse = (lo, hi);
    while hi - lo > PC_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        if ode_fragments(base, kappa, mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(PcSearch { pc: Some(0.5 * (lo + hi)), coarse, lower: lo, upper: hi, status: PcStatus::Bracketed, evaluations })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcRow {
    pub kappa: f64,
    pub pc_analytic: f64,
    pub pc_ode: Option<f64>,
    pub status: PcStatus,
}

pub fn cmd_pc_curve(cfg: &ExperimentConfig) -> Result<Vec<PcRow>> {
    cfg.validate()?;
    let base = cfg.ode_config(0.0, cfg.modes[0]);
    cfg.kappa_values
        .par_iter()
        .map(|&kappa| {
            let (pc_ode, status) = match locate_pc_ode(&base, kappa) {
                Ok(search) => (search.pc, search.status),
                Err(Error::NumericalFailure { t, reason }) => {
                    log::error!("κ = {kappa}: probe failed at t = {t}: {reason}");
                    (None, PcStatus::NumericalFailure)
                }
                Err(e) => return Err(e),
            };
            Ok(PcRow { kappa, pc_analytic: critical_p(kappa), pc_ode, status })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct AbmSummaryRow {
    pub replicate: u64,
    pub final_gamma: f64,
    pub components: usize,
    pub all_consensus: bool,
}

/// Simulation time series for every replicate plus one terminal summary per replicate.
pub fn cmd_abm(cfg: &ExperimentConfig) -> Result<(Vec<TimeseriesRow>, Vec<AbmSummaryRow>)> {
    cfg.validate()?;
    let p = cfg.single_p("abm")?;
    let runs = abm::run_ensemble(&cfg.sim_config(p), cfg.replicates)?;
    let rows = runs.iter().flat_map(|r| rows_of(&r.series)).collect();
    let summary = runs
        .iter()
        .map(|r| {
            let frag = r.state.detect_fragmentation();
            AbmSummaryRow {
                replicate: r.series.meta.replicate,
                final_gamma: r.series.last().map_or(r.state.gamma(), |(_, g)| g),
                components: frag.component_count(),
                all_consensus: frag.all_consensus(),
            }
        })
        .collect();
    Ok((rows, summary))
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompareRow {
    pub t: f64,
    pub abm_mean: f64,
    pub ode_full: f64,
    pub ode_pde_matched: f64,
    pub analytic: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub metric: &'static str,
    pub subject: String,
    pub value: f64,
}

pub const COMPARE_COLUMNS: [&str; 4] = ["abm-mean", "ode-full", "ode-pde-matched", "analytic"];

impl CompareRow {
    fn columns(&self) -> [f64; 4] {
        [self.abm_mean, self.ode_full, self.ode_pde_matched, self.analytic]
    }
}

/// `|a - b| / max(|a|, |b|)`, 0 when both are below the fragmentation level.
pub fn relative_deviation(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < COMPARE_FRAGMENTED_GAMMA {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// All three layers on a common time grid, with pairwise deviations.
pub fn cmd_compare(cfg: &ExperimentConfig) -> Result<(Vec<CompareRow>, Vec<SummaryRow>)> {
    cfg.validate()?;
    let p = cfg.single_p("compare")?;
    let runs = abm::run_ensemble(&cfg.sim_config(p), cfg.replicates)?;
    let ode_full = moment_ode::integrate(&cfg.ode_config(p, OdeMode::Full), cfg.kappa)?.trajectory;
    let ode_pde = moment_ode::integrate(&cfg.ode_config(p, OdeMode::PdeMatched), cfg.kappa)?.trajectory;
    let analytic = AnalyticSolution::with_steady_factors(cfg.kappa, p)?;

    let times = sample_times(cfg.t_end, cfg.sample_interval);
    let rows: Vec<CompareRow> = times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let abm_mean = runs.iter().map(|r| r.series.samples()[i].1).sum::<f64>() / runs.len() as f64;
            CompareRow {
                t,
                abm_mean,
                ode_full: ode_full.value_at_or_before(t).unwrap_or(f64::NAN),
                ode_pde_matched: ode_pde.value_at_or_before(t).unwrap_or(f64::NAN),
                analytic: analytic.gamma_t(t).max(0.0),
            }
        })
        .collect();

    let mut summary = Vec::new();
    let last = rows.last().expect("time grid is never empty").columns();
    for (name, &value) in COMPARE_COLUMNS.iter().zip(&last) {
        summary.push(SummaryRow { metric: "terminal_gamma", subject: (*name).to_owned(), value });
        let fragmented = if value < COMPARE_FRAGMENTED_GAMMA { 1.0 } else { 0.0 };
        summary.push(SummaryRow { metric: "fragmented", subject: (*name).to_owned(), value: fragmented });
    }
    for i in 0..COMPARE_COLUMNS.len() {
        for j in i + 1..COMPARE_COLUMNS.len() {
            let subject = format!("{}:{}", COMPARE_COLUMNS[i], COMPARE_COLUMNS[j]);
            let max = rows
                .iter()
                .map(|r| relative_deviation(r.columns()[i], r.columns()[j]))
                .fold(0.0, f64::max);
            summary.push(SummaryRow { metric: "max_rel_dev", subject: subject.clone(), value: max });
            summary.push(SummaryRow {
                metric: "terminal_rel_dev",
                subject,
                value: relative_deviation(last[i], last[j]),
            });
        }
    }
    Ok((rows, summary))
}

pub fn write_timeseries_csv<W: Write>(mut w: W, rows: &[TimeseriesRow]) -> Result<()> {
    writeln!(w, "{TIMESERIES_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.gamma),
            r.source,
            fmt_f64(r.p),
            fmt_f64(r.kappa),
            r.replicate,
            r.mode
        )?;
    }
    Ok(())
}

pub fn write_scan_csv<W: Write>(mut w: W, rows: &[ScanRow]) -> Result<()> {
    writeln!(w, "{SCAN_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(r.p),
            fmt_f64(r.gamma_ode_final),
            fmt_f64(r.gamma_analytic_star),
            r.status.as_str()
        )?;
    }
    Ok(())
}

pub fn write_pc_curve_csv<W: Write>(mut w: W, rows: &[PcRow]) -> Result<()> {
    writeln!(w, "{PC_CURVE_HEADER}")?;
    for r in rows {
        let pc_ode = r.pc_ode.map_or_else(|| "nan".to_owned(), fmt_f64);
        writeln!(w, "{},{},{},{}", fmt_f64(r.kappa), fmt_f64(r.pc_analytic), pc_ode, r.status.as_str())?;
    }
    Ok(())
}

pub fn write_abm_summary_csv<W: Write>(mut w: W, rows: &[AbmSummaryRow]) -> Result<()> {
    writeln!(w, "{ABM_SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{},{}", r.replicate, fmt_f64(r.final_gamma), r.components, r.all_consensus)?;
    }
    Ok(())
}

pub fn write_compare_csv<W: Write>(mut w: W, rows: &[CompareRow]) -> Result<()> {
    writeln!(w, "{COMPARE_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(r.t),
            fmt_f64(r.abm_mean),
            fmt_f64(r.ode_full),
            fmt_f64(r.ode_pde_matched),
            fmt_f64(r.analytic)
        )?;
    }
    Ok(())
}

pub fn write_summary_csv<W: Write>(mut w: W, rows: &[SummaryRow]) -> Result<()> {
    writeln!(w, "{COMPARE_SUMMARY_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.metric, r.subject, fmt_f64(r.value))?;
    }
    Ok(())
}
