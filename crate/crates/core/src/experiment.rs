//! Monte Carlo harness: draw channels from an ensemble, compare the
//! reduced-set estimators against the exact average fidelity, and reduce
//! the relative deviations to bounds and histograms.
//!
//! Relative deviation of the estimated gate error:
//! Δ = (ε_est − ε_av)/ε_av, with ε = 1 − F. Bounds are reported on the
//! ratio r = ε_av/ε_est = 1/(1 + Δ), so that α·ε_est ≤ ε_av ≤ β·ε_est
//! holds for every realization.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{
    gate, random_dynamical_map, random_unitary_haar, randomized_unitary, randomized_unitary_near_basis, GateName,
    MapOrder, QuantumChannel, TargetGate, DEFAULT_BASIS_TILT, DEFAULT_PHASE_SPREAD, DEFAULT_SCALE_MAX,
};
use crate::error::{Error, Result};
use crate::fidelity::{average_fidelity_exact, evaluate_set, FidelityReport};
use crate::linalg::SeedStream;
use crate::states::{computational_basis, pure_set, ReducedStateSet};

pub const DEFAULT_EPSILON_FLOOR: f64 = 1e-9;
pub const DEFAULT_REALIZATIONS: usize = 10_000;
pub const MAX_QUBITS: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnsembleKind {
    RandomDynamicalMap,
    RandomUnitaryHaar,
    RandomizedUnitary,
    RandomizedUnitaryNearBasis,
}

impl FromStr for EnsembleKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random-dynamical-map" => Ok(Self::RandomDynamicalMap),
            "random-unitary-haar" | "random-unitary" => Ok(Self::RandomUnitaryHaar),
            "randomized-unitary" => Ok(Self::RandomizedUnitary),
            "randomized-unitary-near-basis" => Ok(Self::RandomizedUnitaryNearBasis),
            other => Err(Error::InvalidConfig(format!("unknown ensemble '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    Arith,
    Lambda,
}

impl FromStr for Estimator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "arith" => Ok(Self::Arith),
            "lambda" => Ok(Self::Lambda),
            other => Err(Error::InvalidConfig(format!("unknown estimator '{other}'"))),
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Estimator::Arith => "arith",
            Estimator::Lambda => "lambda",
        })
    }
}

/// Bins for Δ: linear on [−1, 0), linear on [0, knee), then log-spaced
/// from the knee up to the largest observed Δ.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramSpec {
    pub negative_bins: usize,
    pub positive_bins: usize,
    pub knee: f64,
    pub log_bins: usize,
}

impl Default for HistogramSpec {
    fn default() -> Self {
        Self {
            negative_bins: 20,
            positive_bins: 20,
            knee: 1.0,
            log_bins: 10,
        }
    }
}

impl HistogramSpec {
    fn validate(&self) -> Result<()> {
        if self.negative_bins == 0 || self.positive_bins == 0 || self.log_bins == 0 {
            return Err(Error::InvalidConfig("histogram bin counts must be positive".into()));
        }
        if !(self.knee > 0.0 && self.knee.is_finite()) {
            return Err(Error::InvalidConfig(format!("histogram knee must be positive, got {}", self.knee)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n_qubits: usize,
    pub target: String,
    pub ensemble: EnsembleKind,
    pub realizations: usize,
    pub seed: u64,
    pub scale_max: f64,
    pub basis_tilt: f64,
    pub phase_spread: f64,
    pub map_order: MapOrder,
    pub estimators: Vec<Estimator>,
    pub epsilon_floor: f64,
    pub histogram: HistogramSpec,
}

impl ExperimentConfig {
    pub fn new(n_qubits: usize, target: &str, ensemble: EnsembleKind) -> Self {
        Self {
            n_qubits,
            target: target.to_string(),
            ensemble,
            realizations: DEFAULT_REALIZATIONS,
            seed: 0,
            scale_max: DEFAULT_SCALE_MAX,
            basis_tilt: DEFAULT_BASIS_TILT,
            phase_spread: DEFAULT_PHASE_SPREAD,
            map_order: MapOrder::default(),
            estimators: vec![Estimator::Arith, Estimator::Lambda],
            epsilon_floor: DEFAULT_EPSILON_FLOOR,
            histogram: HistogramSpec::default(),
        }
    }

    pub fn with_realizations(mut self, n: usize) -> Self {
        self.realizations = n;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<TargetGate> {
        if self.realizations == 0 {
            return Err(Error::InvalidConfig("realizations must be >= 1".into()));
        }
        if !(1..=MAX_QUBITS).contains(&self.n_qubits) {
            return Err(Error::InvalidConfig(format!("n_qubits must be in 1..={MAX_QUBITS}")));
        }
        let name = GateName::parse(&self.target, self.n_qubits)?;
        if name.n_qubits() != self.n_qubits {
            return Err(Error::InvalidConfig(format!(
                "gate {} acts on {} qubits, not {}",
                name,
                name.n_qubits(),
                self.n_qubits
            )));
        }
        for (label, x) in [("scale_max", self.scale_max), ("phase_spread", self.phase_spread)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidConfig(format!("{label} must be positive, got {x}")));
            }
        }
        if !(self.basis_tilt >= 0.0 && self.basis_tilt.is_finite()) {
            return Err(Error::InvalidConfig("basis_tilt must be >= 0".into()));
        }
        if !(self.epsilon_floor >= 0.0 && self.epsilon_floor.is_finite()) {
            return Err(Error::InvalidConfig("epsilon_floor must be >= 0".into()));
        }
        if self.estimators.is_empty() {
            return Err(Error::InvalidConfig("select at least one estimator".into()));
        }
        self.histogram.validate()?;
        Ok(gate(name))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RealizationRecord {
    pub index: usize,
    pub f_av_exact: f64,
    pub report: FidelityReport,
    /// None when ε_av fell below the floor.
    pub delta_arith: Option<f64>,
    pub delta_lambda: Option<f64>,
}

impl RealizationRecord {
    pub fn skipped(&self) -> bool {
        self.delta_arith.is_none()
    }

    pub fn delta(&self, est: Estimator) -> Option<f64> {
        match est {
            Estimator::Arith => self.delta_arith,
            Estimator::Lambda => self.delta_lambda,
        }
    }
}

fn draw_channel(cfg: &ExperimentConfig, target: &TargetGate, stream: SeedStream) -> Result<QuantumChannel> {
    let mut rng = stream.rng();
    let d = target.dim();
    match cfg.ensemble {
        EnsembleKind::RandomDynamicalMap => random_dynamical_map(target, cfg.scale_max, cfg.map_order, &mut rng),
        EnsembleKind::RandomUnitaryHaar => random_unitary_haar(d, &mut rng),
        EnsembleKind::RandomizedUnitary => randomized_unitary(d, cfg.scale_max, &mut rng),
        EnsembleKind::RandomizedUnitaryNearBasis => {
            randomized_unitary_near_basis(d, cfg.phase_spread, cfg.basis_tilt, &mut rng)
        }
    }
}

/// Builds the record for one channel.
pub fn evaluate_realization(
    index: usize,
    ch: &QuantumChannel,
    target: &TargetGate,
    set: &ReducedStateSet,
    epsilon_floor: f64,
) -> Result<RealizationRecord> {
    let f_av_exact = average_fidelity_exact(ch, target)?;
    let report = evaluate_set(ch, target, set)?;
    let eps_av = 1.0 - f_av_exact;
    let (delta_arith, delta_lambda) = if eps_av < epsilon_floor {
        (None, None)
    } else {
        let delta = |f_est: f64| ((1.0 - f_est) - eps_av) / eps_av;
        (Some(delta(report.f_arith)), Some(delta(report.f_lambda)))
    };
    Ok(RealizationRecord {
        index,
        f_av_exact,
        report,
        delta_arith,
        delta_lambda,
    })
}

fn realize(cfg: &ExperimentConfig, target: &TargetGate, set: &ReducedStateSet, index: usize) -> Result<RealizationRecord> {
    let ch = draw_channel(cfg, target, SeedStream::new(cfg.seed, index as u64))?;
    evaluate_realization(index, &ch, target, set, cfg.epsilon_floor)
}

/// Runs every realization, in parallel, ordered by index.
pub fn run_ensemble(cfg: &ExperimentConfig) -> Result<Vec<RealizationRecord>> {
    run_ensemble_with(cfg, true)
}

pub fn run_ensemble_with(cfg: &ExperimentConfig, parallel: bool) -> Result<Vec<RealizationRecord>> {
    let target = cfg.validate()?;
    let set = pure_set(&computational_basis(target.dim()))?;
    if parallel {
        (0..cfg.realizations)
            .into_par_iter()
            .map(|i| realize(cfg, &target, &set, i))
            .collect()
    } else {
        (0..cfg.realizations).map(|i| realize(cfg, &target, &set, i)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub probabilities: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimatorSummary {
    pub estimator: Estimator,
    /// min of ε_av/ε_est
    pub alpha: f64,
    /// max of ε_av/ε_est
    pub beta: f64,
    /// Geometric mean of ε_av/ε_est over records where the error is underestimated.
    pub mean_under_factor: f64,
    /// Geometric mean of ε_est/ε_av over records where the error is overestimated.
    pub mean_over_factor: f64,
    pub worst_factor: f64,
    pub histogram: Histogram,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSummary {
    pub n_records: usize,
    pub skipped_count: usize,
    pub estimators: Vec<EstimatorSummary>,
}

impl EnsembleSummary {
    pub fn get(&self, est: Estimator) -> Option<&EstimatorSummary> {
        self.estimators.iter().find(|s| s.estimator == est)
    }

    /// Table of the bounds, one row per estimator.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| estimator | alpha | beta | mean under | mean over | worst |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for s in &self.estimators {
            out.push_str(&format!(
                "| {} | {:.4} | {:.4} | {:.4} | {:.4} | {:.4} |\n",
                s.estimator, s.alpha, s.beta, s.mean_under_factor, s.mean_over_factor, s.worst_factor
            ));
        }
        out.push_str(&format!(
            "\n{} realizations used, {} skipped\n",
            self.n_records, self.skipped_count
        ));
        out
    }
}

fn geometric_mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v.ln(), n + 1));
    if n == 0 {
        1.0
    } else {
        (sum / n as f64).exp()
    }
}

/// α, β, mean factors and histogram for each requested estimator.
pub fn bounds_from_records(
    records: &[RealizationRecord],
    estimators: &[Estimator],
    spec: &HistogramSpec,
) -> Result<EnsembleSummary> {
    let skipped_count = records.iter().filter(|r| r.skipped()).count();
    let n_records = records.len() - skipped_count;
    if n_records == 0 {
        return Err(Error::EmptyEnsemble);
    }
    let estimators = estimators
        .iter()
        .map(|&est| {
            let deltas: Vec<f64> = records.iter().filter_map(|r| r.delta(est)).collect();
            let ratios: Vec<f64> = deltas.iter().map(|d| 1.0 / (1.0 + d)).collect();
            let alpha = ratios.iter().copied().fold(f64::INFINITY, f64::min);
            let beta = ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(EstimatorSummary {
                estimator: est,
                alpha,
                beta,
                mean_under_factor: geometric_mean(ratios.iter().copied().filter(|&r| r > 1.0)),
                mean_over_factor: geometric_mean(ratios.iter().filter(|&&r| r < 1.0).map(|r| 1.0 / r)),
                worst_factor: (1.0 / alpha).max(beta),
                histogram: histogram(&deltas, spec)?,
            })
        })
        .collect::<Result<_>>()?;
    Ok(EnsembleSummary {
        n_records,
        skipped_count,
        estimators,
    })
}

/// Normalized histogram of Δ values.
pub fn histogram(deltas: &[f64], spec: &HistogramSpec) -> Result<Histogram> {
    spec.validate()?;
    if deltas.is_empty() {
        return Err(Error::EmptyEnsemble);
    }
    let mut edges: Vec<f64> = (0..=spec.negative_bins)
        .map(|k| -1.0 + k as f64 / spec.negative_bins as f64)
        .collect();
    edges.extend((1..=spec.positive_bins).map(|k| spec.knee * k as f64 / spec.positive_bins as f64));
    let max = deltas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max >= spec.knee {
        // Nudge the top edge so the maximum lands inside the last bin.
        let top = (max * (1.0 + 1e-12)).max(spec.knee * (1.0 + 1e-12));
        let ratio = (top / spec.knee).ln() / spec.log_bins as f64;
        edges.extend((1..=spec.log_bins).map(|k| spec.knee * (ratio * k as f64).exp()));
    }
    let n_bins = edges.len() - 1;
    let mut counts = vec![0usize; n_bins];
    for &x in deltas {
        // Δ ≥ −1 by construction; clamp rounding below it into the first bin.
        let bin = match edges.partition_point(|&e| e <= x) {
            0 => 0,
            k => (k - 1).min(n_bins - 1),
        };
        counts[bin] += 1;
    }
    let n = deltas.len() as f64;
    Ok(Histogram {
        edges,
        probabilities: counts.iter().map(|&c| c as f64 / n).collect(),
    })
}

pub fn histogram_to_csv(h: &Histogram) -> String {
    let mut out = String::from("bin_lo,bin_hi,probability\n");
    for (w, p) in h.edges.windows(2).zip(&h.probabilities) {
        out.push_str(&format!("{:?},{:?},{:?}\n", w[0], w[1], p));
    }
    out
}

fn csv_header(d: usize) -> Vec<String> {
    let mut h: Vec<String> = ["index", "f_av", "f_arith", "f_geom", "lambda", "f_lambda", "f_diss"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    h.extend((1..=d).map(|i| format!("fB_{i}")));
    h.extend(["f_TR", "delta_arith", "delta_lambda", "skipped"].iter().map(|s| s.to_string()));
    h
}

fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Writes records as CSV; floats use the shortest round-trip form.
pub fn write_records_csv<W: Write>(records: &[RealizationRecord], writer: W) -> Result<()> {
    let d = records.first().map_or(0, |r| r.report.d);
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(csv_header(d))?;
    for r in records {
        if r.report.d != d || r.report.per_state.len() != d + 1 {
            return Err(Error::InvalidDimension("records of mixed dimension".into()));
        }
        let rep = &r.report;
        let mut row = vec![
            r.index.to_string(),
            fmt_f64(r.f_av_exact),
            fmt_f64(rep.f_arith),
            fmt_f64(rep.f_geom),
            fmt_f64(rep.lambda_weight),
            fmt_f64(rep.f_lambda),
            fmt_f64(rep.f_diss),
        ];
        row.extend(rep.per_state.iter().map(|&f| fmt_f64(f)));
        row.push(r.delta_arith.map(fmt_f64).unwrap_or_default());
        row.push(r.delta_lambda.map(fmt_f64).unwrap_or_default());
        row.push(r.skipped().to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses the CSV produced by [`write_records_csv`].
pub fn read_records_csv<R: Read>(reader: R) -> Result<Vec<RealizationRecord>> {
    let mut rd = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if header.len() < 12 {
        return Err(Error::Parse(format!("header has {} columns", header.len())));
    }
    let d = header.len() - 11;
    if header != csv_header(d) {
        return Err(Error::Parse("unexpected CSV header".into()));
    }
    let float = |s: &str, col: &str| -> Result<f64> {
        let v: f64 = s
            .parse()
            .map_err(|_| Error::Parse(format!("column {col}: '{s}' is not a number")))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Parse(format!("column {col}: non-finite value")))
        }
    };
    let optional = |s: &str, col: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            float(s, col).map(Some)
        }
    };
    let mut out = Vec::new();
    for row in rd.records() {
        let row = row?;
        if row.len() != header.len() {
            return Err(Error::Parse(format!("row has {} fields, expected {}", row.len(), header.len())));
        }
        let index: usize = row[0]
            .parse()
            .map_err(|_| Error::Parse(format!("bad index '{}'", &row[0])))?;
        let per_state = (0..=d)
            .map(|k| float(&row[7 + k], &header[7 + k]))
            .collect::<Result<Vec<_>>>()?;
        let delta_arith = optional(&row[8 + d], "delta_arith")?;
        let delta_lambda = optional(&row[9 + d], "delta_lambda")?;
        let skipped: bool = row[10 + d]
            .parse()
            .map_err(|_| Error::Parse(format!("bad skipped flag '{}'", &row[10 + d])))?;
        if skipped != delta_arith.is_none() || delta_arith.is_none() != delta_lambda.is_none() {
            return Err(Error::Parse(format!("row {index}: skipped flag disagrees with deltas")));
        }
        out.push(RealizationRecord {
            index,
            f_av_exact: float(&row[1], "f_av")?,
            report: FidelityReport {
                per_state,
                f_arith: float(&row[2], "f_arith")?,
                f_geom: float(&row[3], "f_geom")?,
                lambda_weight: float(&row[4], "lambda")?,
                f_lambda: float(&row[5], "f_lambda")?,
                f_diss: float(&row[6], "f_diss")?,
                d,
            },
            delta_arith,
            delta_lambda,
        });
    }
    Ok(out)
}
