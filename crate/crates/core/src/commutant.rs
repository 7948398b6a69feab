//! Commutant-space computations and the projector-purity unitarity check.
//!
//! The commutant computed here is the *linear* one, {X ∈ ℂ^{d×d} :
//! [X, ρ_j] = 0 ∀j}. It contains the unitary commutant, so a
//! one-dimensional linear commutant (span{I}) means no non-trivial unitary
//! leaves every state unchanged.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::channels::QuantumChannel;
use crate::error::{Error, Result};
use crate::linalg::{kron, ComplexMatrix, C64};
use crate::states::{DensityOperator, ReducedStateSet, SetKind};

/// Singular values below this fraction of the largest are treated as zero.
pub const NULLSPACE_REL_TOL: f64 = 1e-8;
/// Largest supported dimension; the stacked system has d² unknowns.
pub const MAX_COMMUTANT_DIM: usize = 16;
pub const DEFAULT_CERTIFY_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct CommutantResult {
    pub dimension: usize,
    /// Hilbert–Schmidt orthonormal basis of the commutant.
    pub basis_ops: Vec<ComplexMatrix>,
    /// max over basis ops and states of ‖[X, ρ_j]‖_F.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnitarityVerdict {
    pub is_unitary: bool,
    /// Tr[D(P_i)²] for the d basis projectors, then Tr[D(P_TR)²].
    pub projector_purities: Vec<f64>,
    /// max_{i≠j} |Tr[D(P_i)·D(P_j)]|
    pub orthogonality_residual: f64,
    pub tr_purity: f64,
}

/// Row-major vec(ρX − Xρ) = (ρ ⊗ I − I ⊗ ρᵀ)·vec(X).
pub fn commutator_superoperator(rho: &ComplexMatrix) -> ComplexMatrix {
    let id = ComplexMatrix::identity(rho.rows());
    &kron(rho, &id) - &kron(&id, &rho.transpose())
}

fn check_states(states: &[DensityOperator]) -> Result<usize> {
    let Some(first) = states.first() else {
        return Err(Error::InvalidDimension("commutant of an empty state list".into()));
    };
    let d = first.dim();
    if let Some(s) = states.iter().find(|s| s.dim() != d) {
        return Err(Error::InvalidDimension(format!("mixed dimensions {d} and {}", s.dim())));
    }
    if d > MAX_COMMUTANT_DIM {
        return Err(Error::Oversize {
            d,
            limit: MAX_COMMUTANT_DIM,
        });
    }
    Ok(d)
}

/// Dimension and basis of the space of operators commuting with every state.
pub fn commutant_dimension(states: &[DensityOperator]) -> Result<CommutantResult> {
    let d = check_states(states)?;
    let n = d * d;
    let mut stacked = DMatrix::<C64>::zeros(states.len() * n, n);
    for (k, rho) in states.iter().enumerate() {
        let sup = commutator_superoperator(rho.matrix());
        for i in 0..n {
            for j in 0..n {
                stacked[(k * n + i, j)] = sup[(i, j)];
            }
        }
    }
    let svd = stacked.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::Internal("SVD did not return right singular vectors".into()))?;
    let sigma_max = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = NULLSPACE_REL_TOL * sigma_max;

    let mut basis_ops = Vec::new();
    for (r, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma_max == 0.0 || sigma < cutoff {
            // Row r of V† is the conjugate of a null vector.
            basis_ops.push(ComplexMatrix::from_fn(d, d, |a, b| v_t[(r, a * d + b)].conj()));
        }
    }
    let residual = basis_ops
        .iter()
        .flat_map(|x| {
            states.iter().map(move |rho| {
                let m = rho.matrix();
                (&(x * m) - &(m * x)).frobenius_norm()
            })
        })
        .fold(0.0, f64::max);
    Ok(CommutantResult {
        dimension: basis_ops.len(),
        basis_ops,
        residual,
    })
}

/// True iff only multiples of the identity commute with all the states, so
/// the evolved states determine a unitary up to global phase.
pub fn check_injectivity(states: &[DensityOperator]) -> Result<bool> {
    Ok(commutant_dimension(states)?.dimension == 1)
}

/// Unitarity test: the basis projectors must stay pure and mutually
/// orthogonal, and the totally rotated projector must stay pure.
pub fn certify_unitarity(ch: &QuantumChannel, set: &ReducedStateSet, tol: f64) -> Result<UnitarityVerdict> {
    set.require(SetKind::PureSet)?;
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(Error::InvalidConfig(format!("tolerance must be positive, got {tol}")));
    }
    let d = set.dim();
    if ch.dim() != d {
        return Err(Error::InvalidDimension(format!("channel d={} vs set d={d}", ch.dim())));
    }
    let outputs: Vec<ComplexMatrix> = set.states().iter().map(|s| ch.apply_matrix(s.matrix())).collect();
    let projector_purities: Vec<f64> = outputs.iter().map(|m| m.trace_product(m).re).collect();
    let mut orthogonality_residual: f64 = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            orthogonality_residual = orthogonality_residual.max(outputs[i].trace_product(&outputs[j]).norm());
        }
    }
    let tr_purity = projector_purities[d];
    let is_unitary = projector_purities.iter().all(|&p| p > 1.0 - tol) && orthogonality_residual < tol;
    Ok(UnitarityVerdict {
        is_unitary,
        projector_purities,
        orthogonality_residual,
        tr_purity,
    })
}
