//! Input states: basis projectors, the totally rotated state, and the
//! reduced sets built from them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eig_hermitian, kron, ComplexMatrix, C64, ONE, ZERO};

/// Tolerance for the Hermitian / unit-trace / positivity checks on states.
pub const STATE_TOL: f64 = 1e-10;

/// Frobenius norm below which P_TR·P_i counts as zero.
pub const TOTAL_ROTATION_TOL: f64 = 1e-8;

/// Minimum eigenvalue gap for a spectrum to count as non-degenerate.
pub const SPECTRUM_GAP_TOL: f64 = 1e-8;

/// The two-state set only certifies unitarity for unital maps.
pub const MINIMAL_SET_UNITAL_WARNING: &str = "minimal set: unitarity certification assumes a unital map; \
     non-unital dynamics need an additional input state to detect";

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidShape("density operator must be square".into()));
        }
        let violation = matrix.hermiticity_violation();
        if violation > STATE_TOL {
            return Err(Error::InvalidState(format!("not Hermitian (violation {violation:e})")));
        }
        let tr = matrix.trace();
        if (tr - ONE).norm() > STATE_TOL {
            return Err(Error::InvalidState(format!("trace {} != 1", tr.re)));
        }
        let (w, _) = eig_hermitian(&matrix)?;
        if w[0] < -STATE_TOL {
            return Err(Error::InvalidState(format!("negative eigenvalue {:e}", w[0])));
        }
        Ok(Self { matrix })
    }

    /// |ψ⟩⟨ψ| for a normalized (or normalizable) vector.
    pub fn pure(psi: &[C64]) -> Result<Self> {
        let n = crate::linalg::vec_norm(psi);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v: Vec<C64> = psi.iter().map(|z| z / n).collect();
        Self::new(ComplexMatrix::outer(&v, &v))
    }

    /// I/d
    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(d).scale_real(1.0 / d as f64),
        }
    }

    /// Wraps an operator already known to be a valid state, e.g. a channel output.
    pub(crate) fn from_trusted(matrix: ComplexMatrix) -> Self {
        Self { matrix }
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// Tr[ρ²]
    pub fn purity(&self) -> f64 {
        self.matrix.trace_product(&self.matrix).re
    }
}

impl<'de> Deserialize<'de> for DensityOperator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let m = ComplexMatrix::deserialize(d)?;
        DensityOperator::new(m).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Projector {
    matrix: ComplexMatrix,
    rank: usize,
}

impl Projector {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidShape("projector must be square".into()));
        }
        let sq = &matrix * &matrix;
        let idem = (&sq - &matrix).max_norm();
        let herm = (&matrix - &matrix.adjoint()).max_norm();
        if idem > STATE_TOL || herm > STATE_TOL {
            return Err(Error::InvalidState(format!(
                "not an orthogonal projector (P^2-P: {idem:e}, P-P†: {herm:e})"
            )));
        }
        let tr = matrix.trace().re;
        let rank = tr.round();
        if (tr - rank).abs() > STATE_TOL || rank < 0.0 {
            return Err(Error::InvalidState(format!("projector trace {tr} is not an integer")));
        }
        Ok(Self {
            matrix,
            rank: rank as usize,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn as_state(&self) -> Result<DensityOperator> {
        if self.rank != 1 {
            return Err(Error::InvalidState(format!("rank-{} projector is not a pure state", self.rank)));
        }
        Ok(DensityOperator::from_trusted(self.matrix.clone()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    /// d basis projectors followed by the totally rotated state.
    PureSet,
    /// One state diagonal in the basis with a non-degenerate spectrum, plus the totally rotated state.
    MinimalSet,
    /// The projectors of two mutually unbiased bases, first basis first.
    MubPair,
}

impl SetKind {
    fn name(self) -> &'static str {
        match self {
            SetKind::PureSet => "pure_set",
            SetKind::MinimalSet => "minimal_set",
            SetKind::MubPair => "mub_pair",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ReducedStateSet {
    kind: SetKind,
    d: usize,
    basis: ComplexMatrix,
    states: Vec<DensityOperator>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

impl ReducedStateSet {
    /// Assembles a set after checking counts, dimensions and the basis.
    ///
    /// Total rotation is not enforced here; see [`is_totally_rotating`] and
    /// [`ReducedStateSet::validate`].
    pub fn from_parts(kind: SetKind, basis: ComplexMatrix, states: Vec<DensityOperator>) -> Result<Self> {
        check_orthonormal(&basis)?;
        let d = basis.rows();
        let expected = match kind {
            SetKind::PureSet => d + 1,
            SetKind::MinimalSet => 2,
            SetKind::MubPair => 2 * d,
        };
        if states.len() != expected {
            return Err(Error::InvalidState(format!(
                "{} with d={d} needs {expected} states, got {}",
                kind.name(),
                states.len()
            )));
        }
        if let Some(s) = states.iter().find(|s| s.dim() != d) {
            return Err(Error::InvalidDimension(format!("state of dimension {} in a d={d} set", s.dim())));
        }
        let warnings = match kind {
            SetKind::MinimalSet => vec![MINIMAL_SET_UNITAL_WARNING.to_string()],
            _ => Vec::new(),
        };
        Ok(Self {
            kind,
            d,
            basis,
            states,
            warnings,
        })
    }

    /// Full invariant check for the set's kind, including total rotation.
    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        match self.kind {
            SetKind::PureSet => {
                let projectors = basis_projectors(&self.basis)?;
                for (i, (s, p)) in self.states.iter().zip(&projectors).enumerate() {
                    if (s.matrix() - p.matrix()).max_norm() > STATE_TOL {
                        return Err(Error::InvalidState(format!("state {i} is not basis projector {i}")));
                    }
                }
                if (self.states[d].purity() - 1.0).abs() > STATE_TOL {
                    return Err(Error::InvalidState("totally rotated state is not pure".into()));
                }
            }
            SetKind::MinimalSet => {
                let rho_b = self.states[0].matrix();
                let off = ComplexMatrix::from_fn(d, d, |i, j| {
                    if i == j {
                        ZERO
                    } else {
                        (&(&self.basis.adjoint() * rho_b) * &self.basis)[(i, j)]
                    }
                });
                if off.max_norm() > STATE_TOL {
                    return Err(Error::InvalidState("first state is not diagonal in the basis".into()));
                }
                let (w, _) = eig_hermitian(rho_b)?;
                check_distinct(&w)?;
                if (self.states[1].purity() - 1.0).abs() > STATE_TOL {
                    return Err(Error::InvalidState("totally rotated state is not pure".into()));
                }
            }
            SetKind::MubPair => {
                for (i, s) in self.states.iter().enumerate() {
                    if (s.purity() - 1.0).abs() > STATE_TOL {
                        return Err(Error::InvalidState(format!("state {i} is not pure")));
                    }
                }
                let projectors = basis_projectors(&self.basis)?;
                for (i, (s, p)) in self.states[..d].iter().zip(&projectors).enumerate() {
                    if (s.matrix() - p.matrix()).max_norm() > STATE_TOL {
                        return Err(Error::InvalidState(format!("state {i} is not basis projector {i}")));
                    }
                }
                for a in &self.states[..d] {
                    for b in &self.states[d..] {
                        let overlap = a.matrix().trace_product(b.matrix()).re;
                        if (overlap - 1.0 / d as f64).abs() > STATE_TOL {
                            return Err(Error::InvalidState(format!(
                                "bases are not mutually unbiased (overlap {overlap})"
                            )));
                        }
                    }
                }
            }
        }
        if !is_totally_rotating(self) {
            return Err(Error::InvalidState("set is not totally rotating".into()));
        }
        Ok(())
    }

    pub fn kind(&self) -> SetKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn states(&self) -> &[DensityOperator] {
        &self.states
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// The states that play the totally-rotated role for this kind.
    pub fn rotated_states(&self) -> &[DensityOperator] {
        match self.kind {
            SetKind::PureSet => &self.states[self.d..],
            SetKind::MinimalSet => &self.states[1..],
            SetKind::MubPair => &self.states[self.d..],
        }
    }

    pub(crate) fn require(&self, kind: SetKind) -> Result<()> {
        if self.kind != kind {
            return Err(Error::UnsupportedSet {
                expected: kind.name().into(),
                got: self.kind.name().into(),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Parses and fully validates a set from its JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Raw {
            kind: SetKind,
            d: usize,
            basis: ComplexMatrix,
            states: Vec<DensityOperator>,
        }
        let raw: Raw = serde_json::from_str(text)?;
        if raw.basis.rows() != raw.d {
            return Err(Error::InvalidDimension(format!(
                "declared d={} but basis is {}x{}",
                raw.d,
                raw.basis.rows(),
                raw.basis.cols()
            )));
        }
        let set = Self::from_parts(raw.kind, raw.basis, raw.states)?;
        set.validate()?;
        Ok(set)
    }
}

fn check_orthonormal(basis: &ComplexMatrix) -> Result<()> {
    if !basis.is_square() {
        return Err(Error::InvalidBasis(format!("{}x{} basis is not square", basis.rows(), basis.cols())));
    }
    let violation = basis.unitarity_violation();
    if violation > STATE_TOL {
        return Err(Error::InvalidBasis(format!("columns not orthonormal (violation {violation:e})")));
    }
    Ok(())
}

fn check_distinct(values: &[f64]) -> Result<()> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    for w in sorted.windows(2) {
        if w[1] - w[0] <= SPECTRUM_GAP_TOL {
            return Err(Error::DegenerateSpectrum(format!("eigenvalues {} and {} coincide", w[0], w[1])));
        }
    }
    Ok(())
}

/// d×d identity, i.e. the computational basis as columns.
pub fn computational_basis(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d)
}

/// Columns of H^{⊗n}: the product X-eigenbasis on n qubits.
pub fn hadamard_basis(n_qubits: usize) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let h = ComplexMatrix::from_real(2, 2, &[s, s, s, -s]).expect("2x2");
    (1..n_qubits).fold(h.clone(), |acc, _| kron(&acc, &h))
}

/// P_i = |φ_i⟩⟨φ_i| for each basis column.
pub fn basis_projectors(basis: &ComplexMatrix) -> Result<Vec<Projector>> {
    check_orthonormal(basis)?;
    (0..basis.cols())
        .map(|i| {
            let phi = basis.column(i);
            Projector::new(ComplexMatrix::outer(&phi, &phi))
        })
        .collect()
}

/// ρ_TR = |Ψ⟩⟨Ψ| with |Ψ⟩ = d^{-1/2} Σ_i |φ_i⟩.
pub fn totally_rotated_state(basis: &ComplexMatrix) -> Result<DensityOperator> {
    check_orthonormal(basis)?;
    let d = basis.rows();
    let norm = 1.0 / (d as f64).sqrt();
    let psi: Vec<C64> = (0..d)
        .map(|r| (0..d).map(|i| basis[(r, i)]).sum::<C64>() * norm)
        .collect();
    DensityOperator::pure(&psi)
}

/// {P_1, …, P_d, ρ_TR}
pub fn pure_set(basis: &ComplexMatrix) -> Result<ReducedStateSet> {
    let mut states: Vec<DensityOperator> = basis_projectors(basis)?
        .iter()
        .map(Projector::as_state)
        .collect::<Result<_>>()?;
    states.push(totally_rotated_state(basis)?);
    ReducedStateSet::from_parts(SetKind::PureSet, basis.clone(), states)
}

/// λ_i = 2(d+1−i)/(d(d+1)), i = 1..d: positive, distinct, unit sum.
pub fn default_spectrum(d: usize) -> Vec<f64> {
    let denom = (d * (d + 1)) as f64;
    (1..=d).map(|i| 2.0 * (d + 1 - i) as f64 / denom).collect()
}

/// {ρ_B = Σ λ_i P_i, ρ_TR}
pub fn minimal_set(basis: &ComplexMatrix, eigenvalues: &[f64]) -> Result<ReducedStateSet> {
    check_orthonormal(basis)?;
    let d = basis.rows();
    if eigenvalues.len() != d {
        return Err(Error::InvalidSpectrum(format!("{} eigenvalues for d={d}", eigenvalues.len())));
    }
    if eigenvalues.iter().any(|&l| !l.is_finite() || l < 0.0) {
        return Err(Error::InvalidSpectrum("eigenvalues must be finite and nonnegative".into()));
    }
    let total: f64 = eigenvalues.iter().sum();
    if (total - 1.0).abs() > STATE_TOL {
        return Err(Error::InvalidSpectrum(format!("eigenvalues sum to {total}")));
    }
    check_distinct(eigenvalues)?;
    let diag: Vec<C64> = eigenvalues.iter().map(|&l| C64::new(l, 0.0)).collect();
    let rho_b = &(basis * &ComplexMatrix::from_diag(&diag)) * &basis.adjoint();
    let states = vec![DensityOperator::new(rho_b)?, totally_rotated_state(basis)?];
    ReducedStateSet::from_parts(SetKind::MinimalSet, basis.clone(), states)
}

/// Computational basis plus the Hadamard-rotated basis on n qubits.
pub fn mub_pair(n_qubits: usize) -> Result<ReducedStateSet> {
    if n_qubits == 0 {
        return Err(Error::InvalidDimension("mub_pair needs at least one qubit".into()));
    }
    let d = 1usize << n_qubits;
    let first = computational_basis(d);
    let second = hadamard_basis(n_qubits);
    let mut states = Vec::with_capacity(2 * d);
    for basis in [&first, &second] {
        for p in basis_projectors(basis)? {
            states.push(p.as_state()?);
        }
    }
    ReducedStateSet::from_parts(SetKind::MubPair, first, states)
}

/// True iff every rotated state has ‖P_TR·P_i‖_F above threshold against every basis projector.
pub fn is_totally_rotating(set: &ReducedStateSet) -> bool {
    let Ok(projectors) = basis_projectors(set.basis()) else {
        return false;
    };
    set.rotated_states().iter().all(|tr| {
        projectors
            .iter()
            .all(|p| (tr.matrix() * p.matrix()).frobenius_norm() > TOTAL_ROTATION_TOL)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ginibre, gram_schmidt_unitary, SeedStream};

    fn random_basis(d: usize, seed: u64) -> ComplexMatrix {
        gram_schmidt_unitary(&ginibre(d, &mut SeedStream::new(seed, 0).rng()).unwrap()).unwrap()
    }

    fn real(rows: usize, data: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_real(rows, rows, data).unwrap()
    }

    #[test]
    fn density_operator_validation() {
        assert!(DensityOperator::new(real(2, &[0.5, 0.0, 0.0, 0.5])).is_ok());
        assert!(DensityOperator::new(real(2, &[1.0, 0.0, 0.0, 1.0])).is_err());
        assert!(DensityOperator::new(real(2, &[1.5, 0.0, 0.0, -0.5])).is_err());
        assert!(DensityOperator::new(real(2, &[0.5, 1.0, 0.0, 0.5])).is_err());
    }

    #[test]
    fn projectors_of_standard_bases() {
        let p = basis_projectors(&computational_basis(2)).unwrap();
        assert_eq!(p[0].matrix(), &real(2, &[1.0, 0.0, 0.0, 0.0]));
        assert_eq!(p[1].matrix(), &real(2, &[0.0, 0.0, 0.0, 1.0]));

        let p = basis_projectors(&computational_basis(4)).unwrap();
        for (i, proj) in p.iter().enumerate() {
            for n in 0..4 {
                for m in 0..4 {
                    let expected = if n == i && m == i { 1.0 } else { 0.0 };
                    assert_eq!(proj.matrix()[(n, m)], C64::new(expected, 0.0));
                }
            }
        }

        let p = basis_projectors(&hadamard_basis(1)).unwrap();
        assert!((p[0].matrix() - &real(2, &[0.5, 0.5, 0.5, 0.5])).max_norm() < 1e-15);
        assert!((p[1].matrix() - &real(2, &[0.5, -0.5, -0.5, 0.5])).max_norm() < 1e-15);
    }

    #[test]
    fn projectors_resolve_identity() {
        let basis = random_basis(5, 17);
        let p = basis_projectors(&basis).unwrap();
        let sum = p.iter().fold(ComplexMatrix::zeros(5, 5), |acc, q| &acc + q.matrix());
        assert!((&sum - &ComplexMatrix::identity(5)).max_norm() < 1e-12);
        assert!(p.iter().all(|q| q.rank() == 1));
        for (i, a) in p.iter().enumerate() {
            for b in &p[i + 1..] {
                assert!((a.matrix() * b.matrix()).max_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn non_orthonormal_basis_rejected() {
        let skew = real(2, &[1.0, 1.0, 0.0, 1.0]);
        assert!(matches!(basis_projectors(&skew), Err(Error::InvalidBasis(_))));
        assert!(matches!(pure_set(&skew), Err(Error::InvalidBasis(_))));
    }

    #[test]
    fn totally_rotated_examples() {
        let tr = totally_rotated_state(&computational_basis(2)).unwrap();
        assert!((tr.matrix() - &real(2, &[0.5; 4])).max_norm() < 1e-15);
        let tr = totally_rotated_state(&computational_basis(4)).unwrap();
        assert!((tr.matrix() - &real(4, &[0.25; 16])).max_norm() < 1e-15);
        let tr = totally_rotated_state(&random_basis(6, 2)).unwrap();
        assert!((tr.purity() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pure_set_shape() {
        let s2 = pure_set(&computational_basis(2)).unwrap();
        assert_eq!(s2.states().len(), 3);
        let s4 = pure_set(&computational_basis(4)).unwrap();
        assert_eq!(s4.states().len(), 5);
        assert!(s4.states().iter().all(|s| (s.purity() - 1.0).abs() < 1e-10));
        assert!(is_totally_rotating(&s4));
        assert!(s4.validate().is_ok());
        assert!(pure_set(&random_basis(3, 8)).unwrap().validate().is_ok());
    }

    #[test]
    fn replacing_rotated_state_breaks_total_rotation() {
        let basis = computational_basis(3);
        let p = basis_projectors(&basis).unwrap();
        let mut states: Vec<DensityOperator> = p.iter().map(|q| q.as_state().unwrap()).collect();
        states.push(p[0].as_state().unwrap());
        let set = ReducedStateSet::from_parts(SetKind::PureSet, basis, states).unwrap();
        assert!(!is_totally_rotating(&set));
        assert!(set.validate().is_err());
    }

    #[test]
    fn minimal_set_examples() {
        let set = minimal_set(&computational_basis(2), &[2.0 / 3.0, 1.0 / 3.0]).unwrap();
        assert!((set.states()[0].matrix() - &real(2, &[2.0 / 3.0, 0.0, 0.0, 1.0 / 3.0])).max_norm() < 1e-15);
        assert_eq!(set.warnings().len(), 1);
        assert!(set.validate().is_ok());

        assert!(matches!(
            minimal_set(&computational_basis(2), &[0.5, 0.5]),
            Err(Error::DegenerateSpectrum(_))
        ));
        assert!(matches!(
            minimal_set(&computational_basis(2), &[0.7, 0.7]),
            Err(Error::InvalidSpectrum(_))
        ));
        assert!(matches!(
            minimal_set(&computational_basis(2), &[1.2, -0.2]),
            Err(Error::InvalidSpectrum(_))
        ));
    }

    #[test]
    fn default_spectrum_is_valid_for_all_small_d() {
        for d in 1..=64 {
            let l = default_spectrum(d);
            assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(l.iter().all(|&x| x > 0.0));
            // Gap is exactly 2/(d(d+1)).
            for w in l.windows(2) {
                assert!((w[0] - w[1] - 2.0 / (d * (d + 1)) as f64).abs() < 1e-14);
            }
            if d >= 2 {
                assert!(minimal_set(&computational_basis(d), &l).is_ok());
            }
        }
    }

    #[test]
    fn mub_pair_examples() {
        let one = mub_pair(1).unwrap();
        assert_eq!(one.states().len(), 4);
        let two = mub_pair(2).unwrap();
        assert_eq!(two.states().len(), 8);
        for set in [&one, &two] {
            let d = set.dim();
            for a in &set.states()[..d] {
                for b in &set.states()[d..] {
                    let o = a.matrix().trace_product(b.matrix()).re;
                    assert!((o - 1.0 / d as f64).abs() < 1e-10);
                }
            }
            assert!(is_totally_rotating(set));
            assert!(set.validate().is_ok());
        }
        for n in 3..=5 {
            assert!(mub_pair(n).unwrap().validate().is_ok());
        }
        assert!(mub_pair(0).is_err());
    }

    #[test]
    fn set_json_round_trip_and_rejection() {
        let set = pure_set(&random_basis(3, 4)).unwrap();
        let back = ReducedStateSet::from_json(&set.to_json().unwrap()).unwrap();
        assert_eq!(back.kind(), SetKind::PureSet);
        assert!((back.states()[3].matrix() - set.states()[3].matrix()).max_norm() < 1e-15);

        let min = minimal_set(&computational_basis(2), &[0.75, 0.25]).unwrap();
        let json = min.to_json().unwrap();
        assert!(json.contains("warnings"));
        assert!(ReducedStateSet::from_json(&json).is_ok());

        assert!(ReducedStateSet::from_json("{}").is_err());
        let bad = json.replace("\"d\": 2", "\"d\": 3");
        assert!(ReducedStateSet::from_json(&bad).is_err());
    }
}
