//! Dynamical maps (unitary or Kraus), named target gates, and the random
//! ensembles used by the experiment harness.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    ginibre, gram_schmidt_unitary, herm_expm, hermitize, kron, ComplexMatrix, C64, ZERO,
};
use crate::states::DensityOperator;

/// Tolerance on U†U = I for unitary channels.
pub const UNITARY_TOL: f64 = 1e-10;
/// Tolerance on Σ E_k†E_k = I for Kraus channels.
pub const KRAUS_TOL: f64 = 1e-8;
/// Tolerance on U†U = I for named target gates.
pub const GATE_TOL: f64 = 1e-12;

pub const DEFAULT_SCALE_MAX: f64 = 0.5;
pub const DEFAULT_BASIS_TILT: f64 = 0.01;
pub const DEFAULT_PHASE_SPREAD: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub enum ChannelRep {
    Unitary(ComplexMatrix),
    Kraus(Vec<ComplexMatrix>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantumChannel {
    rep: ChannelRep,
    d: usize,
}

impl QuantumChannel {
    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::InvalidShape("unitary must be square".into()));
        }
        let violation = u.unitarity_violation();
        if violation > UNITARY_TOL {
            return Err(Error::NotUnitary { violation });
        }
        Ok(Self {
            d: u.rows(),
            rep: ChannelRep::Unitary(u),
        })
    }

    pub fn kraus(ops: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = ops.first() else {
            return Err(Error::InvalidShape("empty Kraus list".into()));
        };
        let d = first.rows();
        if ops.iter().any(|e| e.rows() != d || e.cols() != d) {
            return Err(Error::InvalidShape("Kraus operators must all be d x d".into()));
        }
        let sum = ops
            .iter()
            .fold(ComplexMatrix::zeros(d, d), |acc, e| &acc + &(&e.adjoint() * e));
        let violation = (&sum - &ComplexMatrix::identity(d)).max_norm();
        if violation > KRAUS_TOL {
            return Err(Error::NotTracePreserving { violation });
        }
        Ok(Self {
            d,
            rep: ChannelRep::Kraus(ops),
        })
    }

    pub fn identity(d: usize) -> Self {
        Self {
            d,
            rep: ChannelRep::Unitary(ComplexMatrix::identity(d)),
        }
    }

    /// ρ ↦ (1−p)ρ + p·I/d, written with the d² Weyl operators X^a Z^b.
    pub fn depolarizing(d: usize, p: f64) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidDimension("depolarizing channel needs d >= 1".into()));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(format!("depolarizing probability {p} outside [0,1]")));
        }
        let dd = d as f64;
        let mut ops = Vec::with_capacity(d * d);
        for a in 0..d {
            for b in 0..d {
                let weight = if a == 0 && b == 0 {
                    (1.0 - p + p / (dd * dd)).sqrt()
                } else {
                    p.sqrt() / dd
                };
                ops.push(weyl(d, a, b).scale_real(weight));
            }
        }
        Self::kraus(ops)
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn rep(&self) -> &ChannelRep {
        &self.rep
    }

    pub fn is_unitary_rep(&self) -> bool {
        matches!(self.rep, ChannelRep::Unitary(_))
    }

    /// The operators {E_k}; a unitary channel has the single operator U.
    pub fn kraus_operators(&self) -> Vec<ComplexMatrix> {
        match &self.rep {
            ChannelRep::Unitary(u) => vec![u.clone()],
            ChannelRep::Kraus(ops) => ops.clone(),
        }
    }

    /// D(ρ) as a raw operator, without the state checks.
    pub(crate) fn apply_matrix(&self, rho: &ComplexMatrix) -> ComplexMatrix {
        match &self.rep {
            ChannelRep::Unitary(u) => &(u * rho) * &u.adjoint(),
            ChannelRep::Kraus(ops) => ops.iter().fold(ComplexMatrix::zeros(self.d, self.d), |acc, e| {
                &acc + &(&(e * rho) * &e.adjoint())
            }),
        }
    }

    pub fn apply(&self, rho: &DensityOperator) -> Result<DensityOperator> {
        if rho.dim() != self.d {
            return Err(Error::InvalidDimension(format!(
                "channel on d={} applied to a d={} state",
                self.d,
                rho.dim()
            )));
        }
        let out = self.apply_matrix(rho.matrix());
        if !out.is_finite() {
            return Err(Error::Internal("channel output is not finite".into()));
        }
        Ok(DensityOperator::from_trusted(out))
    }

    /// Choi operator Σ_ij |i⟩⟨j| ⊗ D(|i⟩⟨j|), index (i·d + a).
    pub fn choi_matrix(&self) -> ComplexMatrix {
        let d = self.d;
        let mut choi = ComplexMatrix::zeros(d * d, d * d);
        for e in self.kraus_operators() {
            // Column j of E is D's action on |j⟩; vec in (input, output) order.
            let v: Vec<C64> = (0..d * d).map(|r| e[(r % d, r / d)]).collect();
            choi = &choi + &ComplexMatrix::outer(&v, &v);
        }
        choi
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&ChannelJson::from(self))?)
    }

    /// Parses and validates a channel from its JSON form.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ChannelJson = serde_json::from_str(text)?;
        raw.try_into()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum RepTag {
    Unitary,
    Kraus,
}

#[derive(Serialize, Deserialize)]
struct ChannelJson {
    rep: RepTag,
    d: usize,
    matrices: Vec<ComplexMatrix>,
}

impl From<&QuantumChannel> for ChannelJson {
    fn from(ch: &QuantumChannel) -> Self {
        let (rep, matrices) = match &ch.rep {
            ChannelRep::Unitary(u) => (RepTag::Unitary, vec![u.clone()]),
            ChannelRep::Kraus(ops) => (RepTag::Kraus, ops.clone()),
        };
        Self { rep, d: ch.d, matrices }
    }
}

impl TryFrom<ChannelJson> for QuantumChannel {
    type Error = Error;
    fn try_from(raw: ChannelJson) -> Result<Self> {
        if raw.matrices.iter().any(|m| m.rows() != raw.d || m.cols() != raw.d) {
            return Err(Error::InvalidDimension(format!("matrices do not match declared d={}", raw.d)));
        }
        match raw.rep {
            RepTag::Unitary => {
                let [u]: [ComplexMatrix; 1] = raw
                    .matrices
                    .try_into()
                    .map_err(|_| Error::Parse("unitary channel needs exactly one matrix".into()))?;
                QuantumChannel::unitary(u)
            }
            RepTag::Kraus => QuantumChannel::kraus(raw.matrices),
        }
    }
}

/// X^a Z^b with X|j⟩ = |j+1 mod d⟩ and Z|j⟩ = ω^j|j⟩.
fn weyl(d: usize, a: usize, b: usize) -> ComplexMatrix {
    let omega = |k: usize| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / d as f64);
    ComplexMatrix::from_fn(d, d, |i, j| if i == (j + a) % d { omega((b * j) % d) } else { ZERO })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GateName {
    Identity(usize),
    Cnot,
    Toffoli,
}

impl GateName {
    /// Parses a CLI gate name; `identity` takes its width from `n_qubits`.
    pub fn parse(name: &str, n_qubits: usize) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "identity" | "id" => Ok(GateName::Identity(n_qubits)),
            "cnot" => Ok(GateName::Cnot),
            "toffoli" => Ok(GateName::Toffoli),
            other => Err(Error::InvalidConfig(format!("unknown gate '{other}'"))),
        }
    }

    pub fn n_qubits(self) -> usize {
        match self {
            GateName::Identity(n) => n,
            GateName::Cnot => 2,
            GateName::Toffoli => 3,
        }
    }
}

impl fmt::Display for GateName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GateName::Identity(_) => write!(f, "identity"),
            GateName::Cnot => write!(f, "cnot"),
            GateName::Toffoli => write!(f, "toffoli"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TargetGate {
    name: String,
    matrix: ComplexMatrix,
}

impl TargetGate {
    pub fn new(name: impl Into<String>, matrix: ComplexMatrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::InvalidShape("gate must be square".into()));
        }
        let violation = matrix.unitarity_violation();
        if violation > GATE_TOL {
            return Err(Error::NotUnitary { violation });
        }
        Ok(Self {
            name: name.into(),
            matrix,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    /// The same gate as a unitary channel.
    pub fn as_channel(&self) -> QuantumChannel {
        QuantumChannel {
            d: self.dim(),
            rep: ChannelRep::Unitary(self.matrix.clone()),
        }
    }

    /// e^{iφ}·O, physically the same gate.
    pub fn with_global_phase(&self, phi: f64) -> Self {
        Self {
            name: self.name.clone(),
            matrix: self.matrix.scale(C64::from_polar(1.0, phi)),
        }
    }
}

/// Computational-basis matrix of a named gate.
pub fn gate(name: GateName) -> TargetGate {
    let (d, perm): (usize, Vec<usize>) = match name {
        GateName::Identity(n) => {
            let d = 1 << n;
            (d, (0..d).collect())
        }
        // |10⟩ ↔ |11⟩
        GateName::Cnot => (4, vec![0, 1, 3, 2]),
        // |110⟩ ↔ |111⟩
        GateName::Toffoli => (8, vec![0, 1, 2, 3, 4, 5, 7, 6]),
    };
    let m = ComplexMatrix::from_fn(d, d, |i, j| if perm[j] == i { C64::new(1.0, 0.0) } else { ZERO });
    TargetGate {
        name: name.to_string(),
        matrix: m,
    }
}

/// Uniform draw on (0, max].
fn draw_scale<R: Rng + ?Sized>(max: f64, rng: &mut R) -> f64 {
    max * (1.0 - rng.random::<f64>())
}

/// Haar-random unitary: Ginibre matrix orthonormalized by Gram-Schmidt.
pub fn random_unitary_haar<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Result<QuantumChannel> {
    if d < 2 {
        return Err(Error::InvalidDimension("random unitaries need d >= 2".into()));
    }
    loop {
        match gram_schmidt_unitary(&ginibre(d, rng)?) {
            Ok(u) => return QuantumChannel::unitary(u),
            Err(Error::DegenerateInput(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}

/// exp(−i·s·H) for a hermitized Ginibre H and s uniform on (0, scale_max].
pub fn randomized_unitary<R: Rng + ?Sized>(d: usize, scale_max: f64, rng: &mut R) -> Result<QuantumChannel> {
    check_positive("scale_max", scale_max)?;
    let h = hermitize(&ginibre(d, rng)?)?;
    let s = draw_scale(scale_max, rng);
    QuantumChannel::unitary(herm_expm(&h, s)?)
}

/// U = V·diag(e^{iθ_k})·V† with θ_k uniform on (0, phase_spread] and
/// V = exp(−i·basis_tilt·H) a small rotation away from the computational basis.
pub fn randomized_unitary_near_basis<R: Rng + ?Sized>(
    d: usize,
    phase_spread: f64,
    basis_tilt: f64,
    rng: &mut R,
) -> Result<QuantumChannel> {
    check_positive("phase_spread", phase_spread)?;
    if !(basis_tilt >= 0.0 && basis_tilt.is_finite()) {
        return Err(Error::InvalidConfig(format!("basis_tilt must be >= 0, got {basis_tilt}")));
    }
    let v = herm_expm(&hermitize(&ginibre(d, rng)?)?, basis_tilt)?;
    let phases: Vec<C64> = (0..d)
        .map(|_| C64::from_polar(1.0, draw_scale(phase_spread, rng)))
        .collect();
    let vd = ComplexMatrix::from_fn(d, d, |i, j| v[(i, j)] * phases[j]);
    QuantumChannel::unitary(&vd * &v.adjoint())
}

/// Where the target gate sits relative to the random system-bath evolution.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MapOrder {
    /// U_tot = (O ⊗ I)·exp(−isH)
    #[default]
    NoiseThenTarget,
    /// U_tot = exp(−isH)·(O ⊗ I)
    TargetThenNoise,
}

impl FromStr for MapOrder {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise-then-target" => Ok(MapOrder::NoiseThenTarget),
            "target-then-noise" => Ok(MapOrder::TargetThenNoise),
            other => Err(Error::InvalidConfig(format!("unknown map order '{other}'"))),
        }
    }
}

/// The system-bath unitary behind [`random_dynamical_map`], with the bath
/// as the second tensor factor.
pub fn random_system_bath_unitary<R: Rng + ?Sized>(
    target: &TargetGate,
    scale_max: f64,
    order: MapOrder,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    check_positive("scale_max", scale_max)?;
    let d = target.dim();
    if !d.is_power_of_two() || d < 2 {
        return Err(Error::InvalidDimension(format!("target dimension {d} is not 2^N")));
    }
    let h = hermitize(&ginibre(d * d, rng)?)?;
    let s = draw_scale(scale_max, rng);
    let noise = herm_expm(&h, s)?;
    let lifted = kron(target.matrix(), &ComplexMatrix::identity(d));
    Ok(match order {
        MapOrder::NoiseThenTarget => &lifted * &noise,
        MapOrder::TargetThenNoise => &noise * &lifted,
    })
}

/// Random open-system map: a random system+bath unitary combined with O ⊗ I,
/// the bath (as many qubits as the system) starting in |0…0⟩ and traced out.
pub fn random_dynamical_map<R: Rng + ?Sized>(
    target: &TargetGate,
    scale_max: f64,
    order: MapOrder,
    rng: &mut R,
) -> Result<QuantumChannel> {
    let d = target.dim();
    let u_tot = random_system_bath_unitary(target, scale_max, order, rng)?;
    kraus_from_stinespring(&u_tot, d, d).map_err(|e| match e {
        Error::NotTracePreserving { violation } => {
            Error::Internal(format!("random map lost trace preservation ({violation:e})"))
        }
        other => other,
    })
}

/// E_k = ⟨k|U_tot|0⟩_bath, system index first.
pub fn kraus_from_stinespring(u_tot: &ComplexMatrix, d_sys: usize, d_bath: usize) -> Result<QuantumChannel> {
    let n = d_sys * d_bath;
    if d_sys == 0 || d_bath == 0 || u_tot.rows() != n || u_tot.cols() != n {
        return Err(Error::InvalidShape(format!(
            "{}x{} operator does not act on a {d_sys}x{d_bath} space",
            u_tot.rows(),
            u_tot.cols()
        )));
    }
    let violation = u_tot.unitarity_violation();
    if violation > UNITARY_TOL {
        return Err(Error::NotUnitary { violation });
    }
    let ops = (0..d_bath)
        .map(|k| ComplexMatrix::from_fn(d_sys, d_sys, |i, j| u_tot[(i * d_bath + k, j * d_bath)]))
        .collect();
    QuantumChannel::kraus(ops)
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{name} must be positive, got {x}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eig_hermitian, partial_trace, SeedStream, Subsystem};

    fn diag_state(p: &[f64]) -> DensityOperator {
        let diag: Vec<C64> = p.iter().map(|&x| C64::new(x, 0.0)).collect();
        DensityOperator::new(ComplexMatrix::from_diag(&diag)).unwrap()
    }

    fn random_state(d: usize, seed: u64) -> DensityOperator {
        let g = ginibre(d, &mut SeedStream::new(seed, 77).rng()).unwrap();
        let m = &g * &g.adjoint();
        let tr = m.trace().re;
        DensityOperator::new(m.scale_real(1.0 / tr)).unwrap()
    }

    #[test]
    fn identity_and_pauli_x() {
        let rho = random_state(3, 1);
        let out = QuantumChannel::identity(3).apply(&rho).unwrap();
        assert!((out.matrix() - rho.matrix()).max_norm() < 1e-15);

        let x = QuantumChannel::unitary(ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).unwrap()).unwrap();
        let out = x.apply(&diag_state(&[1.0, 0.0])).unwrap();
        assert!((out.matrix() - diag_state(&[0.0, 1.0]).matrix()).max_norm() < 1e-15);

        assert!(matches!(x.apply(&random_state(3, 2)), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn full_depolarizing_maps_to_maximally_mixed() {
        for d in [2, 3, 4, 8] {
            let ch = QuantumChannel::depolarizing(d, 1.0).unwrap();
            let out = ch.apply(&random_state(d, d as u64)).unwrap();
            assert!((out.matrix() - DensityOperator::maximally_mixed(d).matrix()).max_norm() < 1e-12);
        }
    }

    #[test]
    fn constructors_validate() {
        let not_unitary = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(QuantumChannel::unitary(not_unitary.clone()), Err(Error::NotUnitary { .. })));
        assert!(matches!(
            QuantumChannel::kraus(vec![not_unitary]),
            Err(Error::NotTracePreserving { .. })
        ));
        assert!(QuantumChannel::kraus(vec![]).is_err());
    }

    #[test]
    fn named_gates() {
        let cnot = gate(GateName::Cnot);
        let expected = ComplexMatrix::from_real(
            4,
            4,
            &[1., 0., 0., 0., 0., 1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0.],
        )
        .unwrap();
        assert_eq!(cnot.matrix(), &expected);

        let toffoli = gate(GateName::Toffoli);
        for j in 0..8 {
            let image = match j {
                6 => 7,
                7 => 6,
                other => other,
            };
            for i in 0..8 {
                let v = if i == image { 1.0 } else { 0.0 };
                assert_eq!(toffoli.matrix()[(i, j)], C64::new(v, 0.0));
            }
        }
        assert_eq!(gate(GateName::Identity(2)).matrix(), &ComplexMatrix::identity(4));
        assert_eq!(GateName::parse("CNOT", 5).unwrap(), GateName::Cnot);
        assert_eq!(GateName::parse("identity", 3).unwrap().n_qubits(), 3);
        assert!(GateName::parse("swap", 2).is_err());
    }

    #[test]
    fn haar_unitaries_are_unitary_and_reproducible() {
        let a = random_unitary_haar(4, &mut SeedStream::new(3, 0).rng()).unwrap();
        let b = random_unitary_haar(4, &mut SeedStream::new(3, 0).rng()).unwrap();
        assert_eq!(a, b);
        let ChannelRep::Unitary(u) = a.rep() else { panic!() };
        assert!(u.unitarity_violation() < 1e-12);
        assert!(random_unitary_haar(1, &mut SeedStream::new(3, 0).rng()).is_err());
    }

    #[test]
    fn randomized_unitary_vanishes_with_scale() {
        let mut rng = SeedStream::new(4, 0).rng();
        let ch = randomized_unitary(4, 1e-12, &mut rng).unwrap();
        let ChannelRep::Unitary(u) = ch.rep() else { panic!() };
        assert!((u - &ComplexMatrix::identity(4)).max_norm() < 1e-10);
        let ch = randomized_unitary(4, 2.0, &mut rng).unwrap();
        let ChannelRep::Unitary(u) = ch.rep() else { panic!() };
        assert!(u.unitarity_violation() < 1e-10);
        assert!(randomized_unitary(4, 0.0, &mut rng).is_err());
    }

    #[test]
    fn untilted_near_basis_unitary_is_diagonal() {
        let ch = randomized_unitary_near_basis(4, 0.5, 0.0, &mut SeedStream::new(5, 0).rng()).unwrap();
        let ChannelRep::Unitary(u) = ch.rep() else { panic!() };
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(u[(i, j)].norm() < 1e-15);
                }
            }
        }
        let tilted = randomized_unitary_near_basis(4, 0.5, 0.01, &mut SeedStream::new(5, 0).rng()).unwrap();
        let ChannelRep::Unitary(t) = tilted.rep() else { panic!() };
        assert!(t.unitarity_violation() < 1e-10);
        assert!((t - u).max_norm() > 0.0);
    }

    #[test]
    fn stinespring_product_and_swap() {
        let u_sys = match random_unitary_haar(2, &mut SeedStream::new(6, 0).rng()).unwrap().rep() {
            ChannelRep::Unitary(u) => u.clone(),
            _ => unreachable!(),
        };
        let ch = kraus_from_stinespring(&kron(&u_sys, &ComplexMatrix::identity(3)), 2, 3).unwrap();
        let ops = ch.kraus_operators();
        assert_eq!(ops.len(), 3);
        assert!((&ops[0] - &u_sys).max_norm() < 1e-15);
        assert!(ops[1].max_norm() == 0.0 && ops[2].max_norm() == 0.0);

        let swap = ComplexMatrix::from_real(
            4,
            4,
            &[1., 0., 0., 0., 0., 0., 1., 0., 0., 1., 0., 0., 0., 0., 0., 1.],
        )
        .unwrap();
        let ch = kraus_from_stinespring(&swap, 2, 2).unwrap();
        let ground = diag_state(&[1.0, 0.0]);
        for seed in 0..4 {
            let out = ch.apply(&random_state(2, seed)).unwrap();
            assert!((out.matrix() - ground.matrix()).max_norm() < 1e-14);
        }

        let bad = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.0, 1.0]).unwrap();
        assert!(matches!(kraus_from_stinespring(&bad, 2, 1), Err(Error::NotUnitary { .. })));
        assert!(kraus_from_stinespring(&swap, 2, 3).is_err());
    }

    #[test]
    fn random_stinespring_completeness() {
        let target = gate(GateName::Cnot);
        let u = random_system_bath_unitary(&target, 1.0, MapOrder::NoiseThenTarget, &mut SeedStream::new(8, 0).rng())
            .unwrap();
        let ch = kraus_from_stinespring(&u, 4, 4).unwrap();
        let sum = ch
            .kraus_operators()
            .iter()
            .fold(ComplexMatrix::zeros(4, 4), |acc, e| &acc + &(&e.adjoint() * e));
        assert!((&sum - &ComplexMatrix::identity(4)).max_norm() < 1e-10);
    }

    #[test]
    fn dynamical_map_matches_explicit_dilation() {
        let target = gate(GateName::Cnot);
        for order in [MapOrder::NoiseThenTarget, MapOrder::TargetThenNoise] {
            let seed = SeedStream::new(11, 3);
            let ch = random_dynamical_map(&target, 0.5, order, &mut seed.rng()).unwrap();
            let u_tot = random_system_bath_unitary(&target, 0.5, order, &mut seed.rng()).unwrap();
            let bath = diag_state(&[1.0, 0.0, 0.0, 0.0]);
            for s in 0..3 {
                let rho = random_state(4, 40 + s);
                let joint = kron(rho.matrix(), bath.matrix());
                let evolved = &(&u_tot * &joint) * &u_tot.adjoint();
                let reduced = partial_trace(&evolved, 4, 4, Subsystem::A).unwrap();
                let direct = ch.apply(&rho).unwrap();
                assert!((direct.matrix() - &reduced).max_norm() < 1e-12);
            }
        }
    }

    #[test]
    fn dynamical_map_approaches_target_as_scale_vanishes() {
        let target = gate(GateName::Cnot);
        let target_choi = target.as_channel().choi_matrix();
        let mut last = f64::INFINITY;
        for scale in [1.0, 0.1, 0.01, 0.001, 1e-6] {
            // Same Ginibre draw and uniform variate: only the scale changes.
            let ch = random_dynamical_map(&target, scale, MapOrder::NoiseThenTarget, &mut SeedStream::new(2, 2).rng())
                .unwrap();
            let dist = (&ch.choi_matrix() - &target_choi).max_norm();
            assert!(dist < last, "distance {dist} not below {last}");
            last = dist;
        }
        assert!(last < 1e-5);
    }

    #[test]
    fn apply_preserves_trace_hermiticity_positivity() {
        let target = gate(GateName::Cnot);
        let mut rng = SeedStream::new(21, 0).rng();
        for k in 0..200u64 {
            let ch = if k % 2 == 0 {
                random_dynamical_map(&target, 0.5, MapOrder::NoiseThenTarget, &mut rng).unwrap()
            } else {
                random_unitary_haar(4, &mut rng).unwrap()
            };
            let rho = random_state(4, 1000 + k);
            let out = ch.apply(&rho).unwrap();
            assert!((out.matrix().trace().re - 1.0).abs() < 1e-10);
            assert!(out.matrix().hermiticity_violation() < 1e-10);
            let (w, _) = eig_hermitian(out.matrix()).unwrap();
            assert!(w[0] > -1e-8);
            if ch.is_unitary_rep() {
                assert!((out.purity() - rho.purity()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn channel_json_round_trip() {
        let ch = QuantumChannel::depolarizing(2, 0.3).unwrap();
        let back = QuantumChannel::from_json(&ch.to_json().unwrap()).unwrap();
        assert_eq!(back, ch);
        let u = gate(GateName::Cnot).as_channel();
        let json = u.to_json().unwrap();
        assert!(json.contains("\"unitary\""));
        assert_eq!(QuantumChannel::from_json(&json).unwrap(), u);

        assert!(QuantumChannel::from_json(r#"{"rep":"unitary","d":2,"matrices":[]}"#).is_err());
        assert!(QuantumChannel::from_json(r#"{"rep":"kraus","d":1,"matrices":[[[[2,0]]]]}"#).is_err());
        assert!(QuantumChannel::from_json(r#"{"rep":"kraus","d":2,"matrices":[[[[1,0]]]]}"#).is_err());
    }
}
