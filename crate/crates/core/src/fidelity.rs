//! Fidelity functionals: state fidelities over a reduced set, the
//! arithmetic / geometric / λ-weighted estimators, the purity-loss measure,
//! classical fidelities with their bounds, and the Haar-averaged fidelity.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channels::{QuantumChannel, TargetGate};
use crate::error::{Error, Result};
use crate::linalg::{inner, vec_norm, ComplexMatrix, C64};
use crate::states::{basis_projectors, DensityOperator, ReducedStateSet, SetKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FidelityReport {
    /// F_{B,1..d} followed by F_TR.
    pub per_state: Vec<f64>,
    pub f_arith: f64,
    pub f_geom: f64,
    pub lambda_weight: f64,
    pub f_lambda: f64,
    pub f_diss: f64,
    pub d: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub f1: f64,
    pub f2: f64,
    pub f_pro_lower: f64,
    pub f_pro_upper: f64,
    pub f_av_lower: f64,
    pub f_av_upper: f64,
}

/// The three composite estimators computed from d+1 state fidelities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Estimators {
    pub f_arith: f64,
    pub f_geom: f64,
    pub lambda_weight: f64,
    pub f_lambda: f64,
}

impl Estimators {
    /// `fids` holds F_{B,1..d} then F_TR.
    pub fn from_state_fidelities(fids: &[f64]) -> Result<Self> {
        if fids.len() < 2 {
            return Err(Error::InvalidDimension(format!("{} state fidelities", fids.len())));
        }
        let n = fids.len() as f64;
        let (basis, tr) = fids.split_at(fids.len() - 1);
        let f_arith = fids.iter().sum::<f64>() / n;

        // 1 − Π F kept accurate near 1 by summing log1p(F − 1).
        let basis_log = log_product(basis);
        let all_log = basis_log + log_product(tr);
        let prod_all = all_log.exp();
        let f_geom = 1.0 / n + (1.0 - 1.0 / n) * prod_all;

        let deficit_basis = -basis_log.exp_m1();
        let deficit_all = -all_log.exp_m1();
        let lambda_weight = if deficit_all <= 0.0 {
            1.0
        } else {
            (1.0 - deficit_basis / deficit_all).clamp(0.0, 1.0)
        };
        let f_lambda = lambda_weight * f_geom + (1.0 - lambda_weight) * f_arith;
        Ok(Self {
            f_arith,
            f_geom,
            lambda_weight,
            f_lambda,
        })
    }
}

/// ln Π F, with −∞ for any zero factor.
fn log_product(fids: &[f64]) -> f64 {
    fids.iter()
        .map(|&f| if f <= 0.0 { f64::NEG_INFINITY } else { (f - 1.0).ln_1p() })
        .sum()
}

/// Tr[ideal·actual]
pub fn state_fidelity(ideal: &DensityOperator, actual: &DensityOperator) -> Result<f64> {
    if ideal.dim() != actual.dim() {
        return Err(Error::InvalidDimension(format!(
            "state fidelity between d={} and d={}",
            ideal.dim(),
            actual.dim()
        )));
    }
    Ok(ideal.matrix().trace_product(actual.matrix()).re)
}

fn check_dims(ch: &QuantumChannel, target: &TargetGate, d: usize) -> Result<()> {
    if ch.dim() != d || target.dim() != d {
        return Err(Error::InvalidDimension(format!(
            "channel d={}, target d={}, states d={d}",
            ch.dim(),
            target.dim()
        )));
    }
    Ok(())
}

/// Tr[O ρ O† · D(ρ)], clamped to [0, 1] to absorb rounding.
fn gate_state_fidelity(ch: &QuantumChannel, target: &TargetGate, rho: &ComplexMatrix) -> (f64, ComplexMatrix) {
    let o = target.matrix();
    let ideal = &(o * rho) * &o.adjoint();
    let actual = ch.apply_matrix(rho);
    let f = ideal.trace_product(&actual).re.clamp(0.0, 1.0);
    (f, actual)
}

/// State fidelities, estimators and F_diss over a d+1 pure set.
pub fn evaluate_set(ch: &QuantumChannel, target: &TargetGate, set: &ReducedStateSet) -> Result<FidelityReport> {
    set.require(SetKind::PureSet)?;
    let d = set.dim();
    check_dims(ch, target, d)?;
    let mut per_state = Vec::with_capacity(d + 1);
    let mut purity_sum = 0.0;
    for rho in set.states() {
        let (f, out) = gate_state_fidelity(ch, target, rho.matrix());
        per_state.push(f);
        purity_sum += out.trace_product(&out).re;
    }
    let est = Estimators::from_state_fidelities(&per_state)?;
    Ok(FidelityReport {
        per_state,
        f_arith: est.f_arith,
        f_geom: est.f_geom,
        lambda_weight: est.lambda_weight,
        f_lambda: est.f_lambda,
        f_diss: diss_from_purity_sum(purity_sum, d),
        d,
    })
}

fn diss_from_purity_sum(sum: f64, d: usize) -> f64 {
    (1.0 - sum / (d + 1) as f64).max(0.0)
}

/// 1 − mean output purity over the d+1 pure set; zero iff D is unitary.
pub fn f_diss(ch: &QuantumChannel, set: &ReducedStateSet) -> Result<f64> {
    set.require(SetKind::PureSet)?;
    if ch.dim() != set.dim() {
        return Err(Error::InvalidDimension(format!("channel d={} vs set d={}", ch.dim(), set.dim())));
    }
    let sum: f64 = set
        .states()
        .iter()
        .map(|rho| {
            let out = ch.apply_matrix(rho.matrix());
            out.trace_product(&out).re
        })
        .sum();
    Ok(diss_from_purity_sum(sum, set.dim()))
}

fn classical_fidelity_of(ch: &QuantumChannel, target: &TargetGate, states: &[DensityOperator]) -> f64 {
    let total: f64 = states
        .iter()
        .map(|rho| gate_state_fidelity(ch, target, rho.matrix()).0)
        .sum();
    total / states.len() as f64
}

/// Mean probability of the ideal output over the d basis states.
pub fn classical_fidelity(ch: &QuantumChannel, target: &TargetGate, basis: &ComplexMatrix) -> Result<f64> {
    let states: Vec<DensityOperator> = basis_projectors(basis)?
        .iter()
        .map(|p| p.as_state())
        .collect::<Result<_>>()?;
    check_dims(ch, target, basis.rows())?;
    Ok(classical_fidelity_of(ch, target, &states))
}

/// Bounds on the average fidelity from the classical fidelities of two
/// mutually unbiased bases: F1 + F2 − 1 ≤ F_pro ≤ min(F1, F2), mapped
/// through F_av = (d·F_pro + 1)/(d + 1).
pub fn hofmann_bounds(ch: &QuantumChannel, target: &TargetGate, mubs: &ReducedStateSet) -> Result<BoundsReport> {
    mubs.require(SetKind::MubPair)?;
    let d = mubs.dim();
    check_dims(ch, target, d)?;
    let f1 = classical_fidelity_of(ch, target, &mubs.states()[..d]);
    let f2 = classical_fidelity_of(ch, target, &mubs.states()[d..]);
    let f_pro_lower = f1 + f2 - 1.0;
    let f_pro_upper = f1.min(f2);
    let to_av = |f: f64| (d as f64 * f + 1.0) / (d as f64 + 1.0);
    Ok(BoundsReport {
        f1,
        f2,
        f_pro_lower,
        f_pro_upper,
        f_av_lower: to_av(f_pro_lower),
        f_av_upper: to_av(f_pro_upper),
    })
}

/// (1/d²) Σ_k |Tr[O†E_k]|²
pub fn entanglement_fidelity(ch: &QuantumChannel, target: &TargetGate) -> Result<f64> {
    let d = ch.dim();
    check_dims(ch, target, d)?;
    let o_dag = target.matrix().adjoint();
    let total: f64 = ch
        .kraus_operators()
        .iter()
        .map(|e| o_dag.trace_product(e).norm_sqr())
        .sum();
    Ok(total / (d * d) as f64)
}

/// Haar-averaged state fidelity, in closed form: (d·F_e + 1)/(d + 1).
pub fn average_fidelity_exact(ch: &QuantumChannel, target: &TargetGate) -> Result<f64> {
    let d = ch.dim() as f64;
    let fe = entanglement_fidelity(ch, target)?;
    Ok((d * fe + 1.0) / (d + 1.0))
}

/// Monte Carlo estimate of the Haar-averaged fidelity: mean and standard
/// error of ⟨Ψ|O†D(|Ψ⟩⟨Ψ|)O|Ψ⟩ over normalized complex Gaussian vectors.
pub fn average_fidelity_haar_mc<R: Rng + ?Sized>(
    ch: &QuantumChannel,
    target: &TargetGate,
    n_samples: usize,
    rng: &mut R,
) -> Result<(f64, f64)> {
    if n_samples < 100 {
        return Err(Error::InvalidConfig(format!("need at least 100 samples, got {n_samples}")));
    }
    let d = ch.dim();
    check_dims(ch, target, d)?;
    let kraus = ch.kraus_operators();
    let o = target.matrix();
    let (mut mean, mut m2) = (0.0, 0.0);
    for k in 0..n_samples {
        let raw: Vec<C64> = (0..d)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let n = vec_norm(&raw);
        let psi: Vec<C64> = raw.iter().map(|z| z / n).collect();
        let ideal = o.mul_vec(&psi);
        let value: f64 = kraus.iter().map(|e| inner(&ideal, &e.mul_vec(&psi)).norm_sqr()).sum();
        // Welford update.
        let delta = value - mean;
        mean += delta / (k + 1) as f64;
        m2 += delta * (value - mean);
    }
    let var = m2 / (n_samples - 1) as f64;
    Ok((mean, (var / n_samples as f64).sqrt()))
}
