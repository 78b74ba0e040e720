//! Exact two-qubit linear algebra and the Born-rule oracle for the singlet
//! experiment. Everything downstream (model audits, CHSH, joint-table
//! constructions) treats this module as ground truth.
//!
//! Basis ordering is fixed as (++, +-, -+, --) so state vectors are
//! bit-reproducible. In-plane analyzer angles map to unit vectors via
//! n = (sin φ, 0, cos φ), i.e. angles are measured from z inside the x-z
//! plane; general 3D directions are supported as well.

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::angles::wrap_angle;
use crate::error::{Error, Result};

/// Tolerance for identities that hold exactly in real arithmetic.
pub const EXACT_TOL: f64 = 1e-12;

const C0: Complex64 = Complex64::new(0.0, 0.0);
const C1: Complex64 = Complex64::new(1.0, 0.0);

/// A measurement outcome, exactly ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i8 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn sign(self) -> f64 {
        f64::from(self.value())
    }

    pub fn flipped(self) -> Outcome {
        match self {
            Outcome::Plus => Outcome::Minus,
            Outcome::Minus => Outcome::Plus,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", self.value())
    }
}

/// An analyzer direction: either a planar angle measured from z in the x-z
/// plane, or a general 3D unit vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Setting {
    PlaneAngle(f64),
    UnitVector([f64; 3]),
}

impl Setting {
    /// Planar setting, wrapped to [0, 2π).
    pub fn plane(phi: f64) -> Setting {
        Setting::PlaneAngle(wrap_angle(phi))
    }

    /// General direction; must already be a unit vector within 1e-12.
    pub fn unit_vector(x: f64, y: f64, z: f64) -> Result<Setting> {
        let norm_sq = x * x + y * y + z * z;
        if (norm_sq - 1.0).abs() > EXACT_TOL {
            return Err(Error::NotUnitVector { norm_sq });
        }
        Ok(Setting::UnitVector([x, y, z]))
    }

    pub fn z() -> Setting {
        Setting::UnitVector([0.0, 0.0, 1.0])
    }

    pub fn x() -> Setting {
        Setting::UnitVector([1.0, 0.0, 0.0])
    }

    /// The direction as a 3-vector.
    pub fn direction(&self) -> [f64; 3] {
        match *self {
            Setting::PlaneAngle(phi) => [phi.sin(), 0.0, phi.cos()],
            Setting::UnitVector(v) => v,
        }
    }

    /// The in-plane angle, if the direction lies in the x-z plane.
    pub fn plane_angle(&self) -> Option<f64> {
        match *self {
            Setting::PlaneAngle(phi) => Some(phi),
            Setting::UnitVector([x, y, z]) => {
                if y.abs() <= EXACT_TOL {
                    Some(wrap_angle(x.atan2(z)))
                } else {
                    None
                }
            }
        }
    }

    pub fn dot(&self, other: &Setting) -> f64 {
        let a = self.direction();
        let b = other.direction();
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Setting::PlaneAngle(phi) => write!(f, "phi={phi}"),
            Setting::UnitVector([x, y, z]) => write!(f, "n=({x},{y},{z})"),
        }
    }
}

/// 2×2 complex matrix: one-qubit operators.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2 {
    pub e: [[Complex64; 2]; 2],
}

impl Matrix2 {
    pub fn identity() -> Matrix2 {
        Matrix2 {
            e: [[C1, C0], [C0, C1]],
        }
    }

    pub fn pauli_x() -> Matrix2 {
        Matrix2 {
            e: [[C0, C1], [C1, C0]],
        }
    }

    pub fn pauli_y() -> Matrix2 {
        Matrix2 {
            e: [
                [C0, Complex64::new(0.0, -1.0)],
                [Complex64::new(0.0, 1.0), C0],
            ],
        }
    }

    pub fn pauli_z() -> Matrix2 {
        Matrix2 {
            e: [[C1, C0], [C0, Complex64::new(-1.0, 0.0)]],
        }
    }

    pub fn mul(&self, other: &Matrix2) -> Matrix2 {
        let mut out = [[C0; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..2).map(|k| self.e[i][k] * other.e[k][j]).sum();
            }
        }
        Matrix2 { e: out }
    }
}

/// Spin operator n·σ along the given direction. Hermitian, traceless,
/// eigenvalues ±1.
pub fn pauli_along(s: &Setting) -> Matrix2 {
    let [nx, ny, nz] = s.direction();
    Matrix2 {
        e: [
            [Complex64::new(nz, 0.0), Complex64::new(nx, -ny)],
            [Complex64::new(nx, ny), Complex64::new(-nz, 0.0)],
        ],
    }
}

/// Projector onto the ±1 eigenspace of n·σ: (I + α n·σ)/2.
pub fn spin_projector(s: &Setting, outcome: Outcome) -> Matrix2 {
    let p = pauli_along(s);
    let alpha = outcome.sign();
    let mut e = [[C0; 2]; 2];
    for (i, row) in e.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            let id = if i == j { C1 } else { C0 };
            *cell = (id + alpha * p.e[i][j]) * 0.5;
        }
    }
    Matrix2 { e }
}

/// 4×4 complex matrix: two-qubit operators.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix4 {
    pub e: [[Complex64; 4]; 4],
}

impl Matrix4 {
    pub fn zero() -> Matrix4 {
        Matrix4 { e: [[C0; 4]; 4] }
    }

    pub fn identity() -> Matrix4 {
        let mut m = Matrix4::zero();
        for i in 0..4 {
            m.e[i][i] = C1;
        }
        m
    }

    /// Kronecker product; the first factor acts on Alice's qubit.
    pub fn kron(a: &Matrix2, b: &Matrix2) -> Matrix4 {
        let mut m = Matrix4::zero();
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    for l in 0..2 {
                        m.e[2 * i + k][2 * j + l] = a.e[i][j] * b.e[k][l];
                    }
                }
            }
        }
        m
    }

    pub fn mul(&self, other: &Matrix4) -> Matrix4 {
        let mut out = Matrix4::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.e[i][j] = (0..4).map(|k| self.e[i][k] * other.e[k][j]).sum();
            }
        }
        out
    }

    pub fn sub(&self, other: &Matrix4) -> Matrix4 {
        let mut out = Matrix4::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.e[i][j] = self.e[i][j] - other.e[i][j];
            }
        }
        out
    }

    pub fn add(&self, other: &Matrix4) -> Matrix4 {
        let mut out = Matrix4::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.e[i][j] = self.e[i][j] + other.e[i][j];
            }
        }
        out
    }

    pub fn adjoint(&self) -> Matrix4 {
        let mut out = Matrix4::zero();
        for i in 0..4 {
            for j in 0..4 {
                out.e[i][j] = self.e[j][i].conj();
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.e
            .iter()
            .flatten()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entry of |O - O†|.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                dev = dev.max((self.e[i][j] - self.e[j][i].conj()).norm());
            }
        }
        dev
    }

    /// Largest entry of |O² - I|.
    pub fn involution_deviation(&self) -> f64 {
        let sq = self.mul(self);
        let mut dev: f64 = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                let id = if i == j { C1 } else { C0 };
                dev = dev.max((sq.e[i][j] - id).norm());
            }
        }
        dev
    }

    pub fn apply(&self, amps: &[Complex64; 4]) -> [Complex64; 4] {
        let mut out = [C0; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|j| self.e[i][j] * amps[j]).sum();
        }
        out
    }

    /// ⟨ψ|O|ψ⟩, real part (callers pass Hermitian operators).
    pub fn expectation(&self, psi: &TwoQubitState) -> f64 {
        let v = self.apply(&psi.amps);
        psi.amps
            .iter()
            .zip(v.iter())
            .map(|(a, b)| (a.conj() * b).re)
            .sum()
    }
}

/// Commutator O_A·O_B − O_B·O_A.
pub fn commutator(oa: &Matrix4, ob: &Matrix4) -> Matrix4 {
    oa.mul(ob).sub(&ob.mul(oa))
}

/// A normalized two-qubit state in the (++, +-, -+, --) basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoQubitState {
    amps: [Complex64; 4],
}

impl TwoQubitState {
    pub fn new(amps: [Complex64; 4]) -> Result<TwoQubitState> {
        let norm_sq: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sq - 1.0).abs() > EXACT_TOL {
            return Err(Error::NotNormalized { norm_sq });
        }
        Ok(TwoQubitState { amps })
    }

    /// The singlet: (|+z,-z⟩ − |-z,+z⟩)/√2, amplitudes (0, 1/√2, −1/√2, 0).
    pub fn singlet() -> TwoQubitState {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        TwoQubitState {
            amps: [
                C0,
                Complex64::new(r, 0.0),
                Complex64::new(-r, 0.0),
                C0,
            ],
        }
    }

    /// Product state from two one-qubit amplitude pairs.
    pub fn product(q1: [Complex64; 2], q2: [Complex64; 2]) -> Result<TwoQubitState> {
        TwoQubitState::new([
            q1[0] * q2[0],
            q1[0] * q2[1],
            q1[1] * q2[0],
            q1[1] * q2[1],
        ])
    }

    /// Product of z-eigenstates, e.g. |+z⟩|−z⟩.
    pub fn z_product(a: Outcome, b: Outcome) -> TwoQubitState {
        let up = [C1, C0];
        let down = [C0, C1];
        let pick = |o: Outcome| if o == Outcome::Plus { up } else { down };
        TwoQubitState::product(pick(a), pick(b)).expect("z eigenstates are normalized")
    }

    pub fn amplitudes(&self) -> &[Complex64; 4] {
        &self.amps
    }

    /// Basis index of the (α, β) component.
    pub fn index_of(a: Outcome, b: Outcome) -> usize {
        let ai = if a == Outcome::Plus { 0 } else { 1 };
        let bi = if b == Outcome::Plus { 0 } else { 1 };
        2 * ai + bi
    }

    pub fn amplitude(&self, a: Outcome, b: Outcome) -> Complex64 {
        self.amps[Self::index_of(a, b)]
    }

    pub fn norm_sq(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Joint Born probability P(α, β | n1, n2, ψ) = ⟨ψ| P_α(n1) ⊗ P_β(n2) |ψ⟩.
pub fn born_joint(
    psi: &TwoQubitState,
    s1: &Setting,
    s2: &Setting,
    a: Outcome,
    b: Outcome,
) -> f64 {
    let p1 = spin_projector(s1, a);
    let p2 = spin_projector(s2, b);
    let m = Matrix4::kron(&p1, &p2);
    m.expectation(psi).max(0.0)
}

/// Alice's Born marginal Σ_β P(α, β | n1, n2, ψ).
pub fn born_marginal_alice(psi: &TwoQubitState, s1: &Setting, s2: &Setting, a: Outcome) -> f64 {
    Outcome::BOTH
        .iter()
        .map(|&b| born_joint(psi, s1, s2, a, b))
        .sum()
}

/// Bob's Born marginal Σ_α P(α, β | n1, n2, ψ).
pub fn born_marginal_bob(psi: &TwoQubitState, s1: &Setting, s2: &Setting, b: Outcome) -> f64 {
    Outcome::BOTH
        .iter()
        .map(|&a| born_joint(psi, s1, s2, a, b))
        .sum()
}

/// Correlation E(n1, n2) = Σ αβ P(α, β | n1, n2, ψ).
pub fn correlation(psi: &TwoQubitState, s1: &Setting, s2: &Setting) -> f64 {
    let mut e = 0.0;
    for a in Outcome::BOTH {
        for b in Outcome::BOTH {
            e += a.sign() * b.sign() * born_joint(psi, s1, s2, a, b);
        }
    }
    e
}

/// Residual norms of (σ_k⊗I + I⊗σ_k)|ψ⟩ for k = x, y, z. All three vanish
/// exactly on the singlet (total spin zero along every axis).
#[derive(Debug, Clone, Serialize)]
pub struct AnticorrelationReport {
    pub residual_x: f64,
    pub residual_y: f64,
    pub residual_z: f64,
}

impl AnticorrelationReport {
    pub fn max_residual(&self) -> f64 {
        self.residual_x.max(self.residual_y).max(self.residual_z)
    }
}

pub fn check_anticorrelation_operator(psi: &TwoQubitState) -> AnticorrelationReport {
    let id = Matrix2::identity();
    let residual = |sigma: Matrix2| -> f64 {
        let total = Matrix4::kron(&sigma, &id).add(&Matrix4::kron(&id, &sigma));
        let v = total.apply(psi.amplitudes());
        v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    };
    AnticorrelationReport {
        residual_x: residual(Matrix2::pauli_x()),
        residual_y: residual(Matrix2::pauli_y()),
        residual_z: residual(Matrix2::pauli_z()),
    }
}

/// One-step unitary kick |ψ'⟩ = e^{−i·dt·O_B}|ψ⟩ for a Hermitian involution
/// O_B, using the exact identity e^{−i·dt·O} = cos(dt)·I − i·sin(dt)·O.
pub fn local_unitary_kick(psi: &TwoQubitState, ob: &Matrix4, dt: f64) -> Result<TwoQubitState> {
    let herm = ob.hermiticity_deviation();
    if herm > EXACT_TOL {
        return Err(Error::NonHermitian { deviation: herm });
    }
    let invol = ob.involution_deviation();
    if invol > EXACT_TOL {
        return Err(Error::NotInvolution { deviation: invol });
    }
    let (c, s) = (dt.cos(), dt.sin());
    let phase = Complex64::new(0.0, -s);
    let mut u = Matrix4::zero();
    for i in 0..4 {
        for j in 0..4 {
            let id = if i == j { C1 } else { C0 };
            u.e[i][j] = c * id + phase * ob.e[i][j];
        }
    }
    TwoQubitState::new(u.apply(psi.amplitudes()))
}

/// Quantum nonsignaling witness: Alice's marginal must not move when Bob
/// swaps his setting from `s2` to `s2_alt`.
#[derive(Debug, Clone, Serialize)]
pub struct NonsignalingReport {
    pub max_deviation: f64,
    /// Alice's marginal P(α | n1) for α = +1 (at `s2`).
    pub alice_marginal_plus: f64,
}

pub fn check_nonsignaling_quantum(
    psi: &TwoQubitState,
    s1: &Setting,
    s2: &Setting,
    s2_alt: &Setting,
) -> NonsignalingReport {
    let mut max_dev: f64 = 0.0;
    for a in Outcome::BOTH {
        let m = born_marginal_alice(psi, s1, s2, a);
        let m_alt = born_marginal_alice(psi, s1, s2_alt, a);
        max_dev = max_dev.max((m - m_alt).abs());
    }
    NonsignalingReport {
        max_deviation: max_dev,
        alice_marginal_plus: born_marginal_alice(psi, s1, s2, Outcome::Plus),
    }
}

/// Max nonsignaling deviation over all (φ1, φ2, φ2') triples of a planar
/// angle grid. Data-parallel when the `parallel` feature is on.
pub fn nonsignaling_grid_max(psi: &TwoQubitState, angles: &[f64]) -> f64 {
    let n = angles.len();
    crate::par::indexed_map(n * n * n, |idx| nonsignaling_at(psi, angles, idx))
        .into_iter()
        .fold(0.0, f64::max)
}

/// Sequential twin of [`nonsignaling_grid_max`], kept for benchmarking the
/// rayon speedup.
pub fn nonsignaling_grid_max_seq(psi: &TwoQubitState, angles: &[f64]) -> f64 {
    let n = angles.len();
    crate::par::indexed_map_seq(n * n * n, |idx| nonsignaling_at(psi, angles, idx))
        .into_iter()
        .fold(0.0, f64::max)
}

fn nonsignaling_at(psi: &TwoQubitState, angles: &[f64], idx: usize) -> f64 {
    let n = angles.len();
    let s1 = Setting::plane(angles[idx / (n * n)]);
    let s2 = Setting::plane(angles[(idx / n) % n]);
    let s2_alt = Setting::plane(angles[idx % n]);
    check_nonsignaling_quantum(psi, &s1, &s2, &s2_alt).max_deviation
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};

    /// Independent Born oracle: build the product eigenvector
    /// |α_{n1}⟩ ⊗ |β_{n2}⟩ from half-angle formulas and project.
    fn born_by_projection(psi: &TwoQubitState, phi1: f64, phi2: f64, a: Outcome, b: Outcome) -> f64 {
        fn eigvec(phi: f64, o: Outcome) -> [Complex64; 2] {
            let (c, s) = ((phi / 2.0).cos(), (phi / 2.0).sin());
            match o {
                Outcome::Plus => [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
                Outcome::Minus => [Complex64::new(-s, 0.0), Complex64::new(c, 0.0)],
            }
        }
        let v1 = eigvec(phi1, a);
        let v2 = eigvec(phi2, b);
        let prod = [v1[0] * v2[0], v1[0] * v2[1], v1[1] * v2[0], v1[1] * v2[1]];
        let amp: Complex64 = prod
            .iter()
            .zip(psi.amplitudes().iter())
            .map(|(p, q)| p.conj() * q)
            .sum();
        amp.norm_sqr()
    }

    #[test]
    fn singlet_amplitudes() {
        let psi = TwoQubitState::singlet();
        assert_abs_diff_eq!(psi.norm_sq(), 1.0, epsilon = 1e-15);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(psi.amplitude(Outcome::Plus, Outcome::Minus).re, r);
        assert_abs_diff_eq!(psi.amplitude(Outcome::Minus, Outcome::Plus).re, -r);
        assert_eq!(psi.amplitude(Outcome::Plus, Outcome::Plus), C0);
        assert_eq!(psi.amplitude(Outcome::Minus, Outcome::Minus), C0);
    }

    #[test]
    fn state_constructor_rejects_unnormalized() {
        let amps = [C1, C1, C0, C0];
        assert!(matches!(
            TwoQubitState::new(amps),
            Err(Error::NotNormalized { .. })
        ));
    }

    #[test]
    fn pauli_along_axes() {
        let z = pauli_along(&Setting::z());
        assert_eq!(z.e[0][0], C1);
        assert_eq!(z.e[1][1], Complex64::new(-1.0, 0.0));
        assert_eq!(z.e[0][1], C0);

        // plane angle π/2 is the x axis
        let x = pauli_along(&Setting::plane(FRAC_PI_2));
        assert_abs_diff_eq!(x.e[0][1].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.e[1][0].re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.e[0][0].re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn pauli_along_squares_to_identity() {
        for &phi in &[0.0, 0.37, 1.9, 4.2] {
            let p = pauli_along(&Setting::plane(phi));
            let sq = p.mul(&p);
            assert_abs_diff_eq!(sq.e[0][0].re, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(sq.e[1][1].re, 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(sq.e[0][1].norm(), 0.0, epsilon = 1e-14);
        }
        let tilted = Setting::unit_vector(0.6, 0.48, 0.64).unwrap();
        let p = pauli_along(&tilted);
        let sq = p.mul(&p);
        assert_abs_diff_eq!(sq.e[0][0].re, 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(sq.e[1][0].norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn born_equal_settings_anticorrelated() {
        let psi = TwoQubitState::singlet();
        let z = Setting::z();
        assert_abs_diff_eq!(
            born_joint(&psi, &z, &z, Outcome::Plus, Outcome::Minus),
            0.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            born_joint(&psi, &z, &z, Outcome::Plus, Outcome::Plus),
            0.0,
            epsilon = 1e-15
        );
    }

    #[test]
    fn born_quarter_turn_matches_projection_oracle() {
        let psi = TwoQubitState::singlet();
        let s1 = Setting::plane(0.0);
        let s2 = Setting::plane(FRAC_PI_2);
        let p = born_joint(&psi, &s1, &s2, Outcome::Plus, Outcome::Plus);
        assert_abs_diff_eq!(p, 0.25, epsilon = 1e-12);
        // cross-check every outcome pair against the half-angle projection
        for a in Outcome::BOTH {
            for b in Outcome::BOTH {
                let expect = born_by_projection(&psi, 0.0, FRAC_PI_2, a, b);
                assert_abs_diff_eq!(
                    born_joint(&psi, &s1, &s2, a, b),
                    expect,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn born_sums_to_one() {
        let psi = TwoQubitState::singlet();
        for &(p1, p2) in &[(0.0, 0.0), (0.3, 2.2), (5.1, 1.0)] {
            let s1 = Setting::plane(p1);
            let s2 = Setting::plane(p2);
            let total: f64 = Outcome::BOTH
                .iter()
                .flat_map(|&a| Outcome::BOTH.iter().map(move |&b| (a, b)))
                .map(|(a, b)| born_joint(&psi, &s1, &s2, a, b))
                .sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn correlation_values() {
        let psi = TwoQubitState::singlet();
        let z = Setting::z();
        assert_abs_diff_eq!(correlation(&psi, &z, &z), -1.0, epsilon = 1e-12);

        // antipodal in-plane settings are perfectly correlated
        let s1 = Setting::plane(0.3);
        let s2 = Setting::plane(0.3 + PI);
        assert_abs_diff_eq!(correlation(&psi, &s1, &s2), 1.0, epsilon = 1e-12);

        // Δ = π/3: E = −cos(π/3) = −1/2
        let s2 = Setting::plane(FRAC_PI_3);
        assert_abs_diff_eq!(
            correlation(&psi, &Setting::plane(0.0), &s2),
            -0.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn correlation_is_minus_dot_product() {
        let psi = TwoQubitState::singlet();
        let s1 = Setting::unit_vector(0.6, 0.48, 0.64).unwrap();
        let s2 = Setting::unit_vector(0.0, 0.8, -0.6).unwrap();
        assert_abs_diff_eq!(correlation(&psi, &s1, &s2), -s1.dot(&s2), epsilon = 1e-12);
    }

    #[test]
    fn anticorrelation_residuals() {
        let report = check_anticorrelation_operator(&TwoQubitState::singlet());
        assert!(report.max_residual() <= 1e-12, "{report:?}");

        // |+z⟩|+z⟩: (σ_z⊗I + I⊗σ_z)|++⟩ = 2|++⟩, residual norm 2
        let up_up = TwoQubitState::z_product(Outcome::Plus, Outcome::Plus);
        let report = check_anticorrelation_operator(&up_up);
        assert_abs_diff_eq!(report.residual_z, 2.0, epsilon = 1e-12);

        // a global phase changes nothing
        let gamma = Complex64::from_polar(1.0, 0.77);
        let mut amps = *TwoQubitState::singlet().amplitudes();
        for a in amps.iter_mut() {
            *a *= gamma;
        }
        let phased = TwoQubitState::new(amps).unwrap();
        let rp = check_anticorrelation_operator(&phased);
        let r0 = check_anticorrelation_operator(&TwoQubitState::singlet());
        assert_abs_diff_eq!(rp.residual_x, r0.residual_x, epsilon = 1e-12);
        assert_abs_diff_eq!(rp.residual_z, r0.residual_z, epsilon = 1e-12);
    }

    #[test]
    fn commutator_cases() {
        let id = Matrix2::identity();
        let za = Matrix4::kron(&Matrix2::pauli_z(), &id);
        let xb = Matrix4::kron(&id, &Matrix2::pauli_x());
        assert_abs_diff_eq!(commutator(&za, &xb).frobenius_norm(), 0.0, epsilon = 1e-14);

        // same-side non-commuting pair: [σ_z⊗I, σ_x⊗I] = 2i σ_y⊗I, norm 4
        let xa = Matrix4::kron(&Matrix2::pauli_x(), &id);
        assert_abs_diff_eq!(commutator(&za, &xa).frobenius_norm(), 4.0, epsilon = 1e-12);

        assert_abs_diff_eq!(commutator(&za, &za).frobenius_norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn kick_at_zero_is_identity() {
        let psi = TwoQubitState::singlet();
        let ob = Matrix4::kron(&Matrix2::identity(), &Matrix2::pauli_x());
        let kicked = local_unitary_kick(&psi, &ob, 0.0).unwrap();
        for i in 0..4 {
            assert_abs_diff_eq!(
                (kicked.amplitudes()[i] - psi.amplitudes()[i]).norm(),
                0.0,
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn kick_by_remote_operator_preserves_local_expectation() {
        let psi = TwoQubitState::singlet();
        let oa = Matrix4::kron(&Matrix2::pauli_z(), &Matrix2::identity());
        let ob = Matrix4::kron(&Matrix2::identity(), &Matrix2::pauli_x());
        let before = oa.expectation(&psi);
        for &dt in &[0.1, 0.7, 2.9] {
            let kicked = local_unitary_kick(&psi, &ob, dt).unwrap();
            assert_abs_diff_eq!(kicked.norm_sq(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(oa.expectation(&kicked), before, epsilon = 1e-12);
        }
    }

    #[test]
    fn kick_by_noncommuting_operator_moves_expectation() {
        // |+z⟩|−z⟩ under O_B = σ_x⊗I: ⟨σ_z⊗I⟩ goes 1 → cos(2·dt), 0 at dt = π/4
        let psi = TwoQubitState::z_product(Outcome::Plus, Outcome::Minus);
        let oa = Matrix4::kron(&Matrix2::pauli_z(), &Matrix2::identity());
        let ob = Matrix4::kron(&Matrix2::pauli_x(), &Matrix2::identity());
        assert_abs_diff_eq!(oa.expectation(&psi), 1.0, epsilon = 1e-15);
        let kicked = local_unitary_kick(&psi, &ob, PI / 4.0).unwrap();
        assert_abs_diff_eq!(oa.expectation(&kicked), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn kick_rejects_bad_operators() {
        let psi = TwoQubitState::singlet();
        let mut skew = Matrix4::identity();
        skew.e[0][1] = Complex64::new(0.0, 1.0);
        assert!(matches!(
            local_unitary_kick(&psi, &skew, 0.5),
            Err(Error::NonHermitian { .. })
        ));

        // Hermitian but not an involution: diag(2, 1, 1, 1)
        let mut stretched = Matrix4::identity();
        stretched.e[0][0] = Complex64::new(2.0, 0.0);
        assert!(matches!(
            local_unitary_kick(&psi, &stretched, 0.5),
            Err(Error::NotInvolution { .. })
        ));
    }

    #[test]
    fn nonsignaling_single_triples() {
        let psi = TwoQubitState::singlet();
        let s1 = Setting::plane(0.4);
        let s2 = Setting::plane(1.1);
        let s2_alt = Setting::plane(2.8);
        let report = check_nonsignaling_quantum(&psi, &s1, &s2, &s2_alt);
        assert!(report.max_deviation <= 1e-12);
        assert_abs_diff_eq!(report.alice_marginal_plus, 0.5, epsilon = 1e-12);

        // identical settings: deviation exactly zero
        let report = check_nonsignaling_quantum(&psi, &s1, &s2, &s2);
        assert_eq!(report.max_deviation, 0.0);
    }

    #[test]
    fn nonsignaling_small_grid() {
        let psi = TwoQubitState::singlet();
        let angles: Vec<f64> = (0..6).map(|i| i as f64 * TAU / 6.0).collect();
        assert!(nonsignaling_grid_max(&psi, &angles) <= 1e-12);
        assert!(nonsignaling_grid_max_seq(&psi, &angles) <= 1e-12);
    }
}
