//! Beable models of the singlet experiment.
//!
//! A model is a density over beables ω = (λ, θ1, θ2, state) built from the
//! analyzer settings, plus an outcome kernel P(α, β | ω, n1, n2, ψ). The
//! experiment's joint probability is the mass-weighted kernel sum over the
//! density's support. Factorized kernels additionally expose per-party
//! factors with kernel = kernel1·kernel2.
//!
//! Dirac deltas are represented as finite weighted atoms; the one continuous
//! density (the local contrast model) is a uniform quadrature grid over
//! λ ∈ [0, 2π). Atom angles are affine expressions of the settings with
//! rational coefficients, so densities are exact and comparable across
//! settings without sampling.

use std::fmt;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};

use crate::angles::AngleExpr;
use crate::error::{Error, Result};
use crate::quantum::{born_joint, Outcome, Setting, TwoQubitState, EXACT_TOL};

/// Atoms lighter than this are excluded from per-atom checks (support is
/// quantified over ρ(ω) ≠ 0).
pub const SUPPORT_THRESHOLD: f64 = 1e-12;

/// Tolerance for atom angle equality modulo 2π.
pub const ATOM_MATCH_TOL: f64 = 1e-9;

/// Default quadrature resolution for grid densities.
pub const DEFAULT_GRID_CELLS: usize = 720;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelForm {
    Factorized,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub const BOTH: [Party; 2] = [Party::Alice, Party::Bob];

    pub fn label(self) -> &'static str {
        match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        }
    }
}

/// One weighted point of a delta-mixture density.
#[derive(Debug, Clone, PartialEq)]
pub struct BeableAtom {
    pub weight: f64,
    pub theta1: f64,
    pub theta2: f64,
    pub lambda: Option<f64>,
    pub state_label: Option<TwoQubitState>,
}

impl BeableAtom {
    pub fn angles(weight: f64, theta1: f64, theta2: f64) -> BeableAtom {
        BeableAtom {
            weight,
            theta1,
            theta2,
            lambda: None,
            state_label: None,
        }
    }
}

/// A (possibly setting-dependent) beable density: a finite delta mixture or
/// a uniform quadrature grid over λ ∈ [0, 2π).
#[derive(Debug, Clone, PartialEq)]
pub enum BeableDensity {
    Atoms(Vec<BeableAtom>),
    Grid { cells: usize },
}

impl BeableDensity {
    pub fn total_mass(&self) -> f64 {
        match self {
            BeableDensity::Atoms(atoms) => atoms.iter().map(|a| a.weight).sum(),
            // uniform grid is normalized by construction
            BeableDensity::Grid { .. } => 1.0,
        }
    }

    /// Materialize the support: atoms with weight ≥ [`SUPPORT_THRESHOLD`].
    /// Grid cells become atoms at cell centers with θ1 = θ2 = λ.
    pub fn support_atoms(&self) -> Vec<BeableAtom> {
        match self {
            BeableDensity::Atoms(atoms) => atoms
                .iter()
                .filter(|a| a.weight >= SUPPORT_THRESHOLD)
                .cloned()
                .collect(),
            BeableDensity::Grid { cells } => {
                let n = *cells;
                let w = 1.0 / n as f64;
                (0..n)
                    .map(|i| {
                        let lambda = (i as f64 + 0.5) * std::f64::consts::TAU / n as f64;
                        BeableAtom {
                            weight: w,
                            theta1: lambda,
                            theta2: lambda,
                            lambda: Some(lambda),
                            state_label: None,
                        }
                    })
                    .collect()
            }
        }
    }
}

/// Per-atom local conditional mean values (Ā, B̄), both in [−1, 1].
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ConditionalMeans {
    pub a_bar: f64,
    pub b_bar: f64,
}

/// Declarative atom: exact rational weight and angle expressions evaluated
/// at the settings.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomSpec {
    pub weight: Rational64,
    pub theta1: AngleExpr,
    pub theta2: AngleExpr,
}

/// How a model builds its density from the settings.
#[derive(Debug, Clone, PartialEq)]
pub enum DensitySpec {
    /// A single unit-weight atom labeled with the prepared state.
    StateAtom,
    /// Finite delta mixture from angle expressions.
    Atoms(Vec<AtomSpec>),
    /// Setting-independent uniform grid over λ.
    UniformGrid { cells: usize },
}

impl DensitySpec {
    /// True when the built density cannot depend on the settings.
    pub fn is_setting_free(&self) -> bool {
        match self {
            DensitySpec::StateAtom | DensitySpec::UniformGrid { .. } => true,
            DensitySpec::Atoms(atoms) => atoms
                .iter()
                .all(|a| a.theta1.is_setting_free() && a.theta2.is_setting_free()),
        }
    }
}

/// Named outcome-kernel presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelPreset {
    /// Factorized (1 + outcome·cos(φ_i − θ_i))/2 response.
    CosineResponse,
    /// Factorized deterministic ±sign(cos(φ_i − θ_i)) response, with Bob
    /// anticorrelated.
    SignResponse,
    /// Joint Born-rule kernel on the atom's labeled state (falls back to
    /// the prepared state when the atom carries no label).
    Born,
}

impl KernelPreset {
    pub fn form(self) -> KernelForm {
        match self {
            KernelPreset::CosineResponse | KernelPreset::SignResponse => KernelForm::Factorized,
            KernelPreset::Born => KernelForm::Joint,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelPreset::CosineResponse => "cosine-response",
            KernelPreset::SignResponse => "sign-response",
            KernelPreset::Born => "born",
        }
    }
}

/// A beable model: density builder plus outcome kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct BeableModel {
    name: String,
    density: DensitySpec,
    kernel: KernelPreset,
    printed_sign: bool,
}

impl BeableModel {
    pub fn new(name: impl Into<String>, density: DensitySpec, kernel: KernelPreset) -> BeableModel {
        BeableModel {
            name: name.into(),
            density,
            kernel,
            printed_sign: false,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kernel_form(&self) -> KernelForm {
        self.kernel.form()
    }

    pub fn kernel_preset(&self) -> KernelPreset {
        self.kernel
    }

    pub fn density_spec(&self) -> &DensitySpec {
        &self.density
    }

    pub fn is_density_setting_free(&self) -> bool {
        self.density.is_setting_free()
    }

    pub fn printed_sign(&self) -> bool {
        self.printed_sign
    }

    /// Comparison variant that flips Bob's response sign, reproducing the
    /// correlated (1 + αβ cos Δ)/4 joint instead of the anticorrelated one.
    pub fn with_printed_sign(mut self) -> BeableModel {
        self.printed_sign = true;
        self.name.push_str("[printed-sign]");
        self
    }

    /// Build the density for the given settings.
    pub fn density(
        &self,
        s1: &Setting,
        s2: &Setting,
        psi: &TwoQubitState,
    ) -> Result<BeableDensity> {
        match &self.density {
            DensitySpec::StateAtom => Ok(BeableDensity::Atoms(vec![BeableAtom {
                weight: 1.0,
                theta1: 0.0,
                theta2: 0.0,
                lambda: None,
                state_label: Some(psi.clone()),
            }])),
            DensitySpec::UniformGrid { cells } => Ok(BeableDensity::Grid { cells: *cells }),
            DensitySpec::Atoms(specs) => {
                let (phi1, phi2) = self.plane_angles(s1, s2)?;
                Ok(BeableDensity::Atoms(
                    specs
                        .iter()
                        .map(|spec| {
                            BeableAtom::angles(
                                rational_f64(spec.weight),
                                spec.theta1.eval(phi1, phi2),
                                spec.theta2.eval(phi1, phi2),
                            )
                        })
                        .collect(),
                ))
            }
        }
    }

    fn plane_angles(&self, s1: &Setting, s2: &Setting) -> Result<(f64, f64)> {
        let err = || Error::NonPlanarSetting {
            model: self.name.clone(),
        };
        Ok((
            s1.plane_angle().ok_or_else(err)?,
            s2.plane_angle().ok_or_else(err)?,
        ))
    }

    /// Per-party kernel factor; defined only for factorized kernels.
    pub fn kernel_factor(
        &self,
        atom: &BeableAtom,
        party: Party,
        local: &Setting,
        _psi: &TwoQubitState,
        out: Outcome,
    ) -> Result<f64> {
        let phi = local.plane_angle().ok_or_else(|| Error::NonPlanarSetting {
            model: self.name.clone(),
        })?;
        let theta = match party {
            Party::Alice => atom.theta1,
            Party::Bob => atom.theta2,
        };
        // the printed-sign comparison flag flips Bob's response
        let sign = if party == Party::Bob && self.printed_sign {
            -out.sign()
        } else {
            out.sign()
        };
        match self.kernel {
            KernelPreset::CosineResponse => Ok((1.0 + sign * (phi - theta).cos()) / 2.0),
            KernelPreset::SignResponse => {
                let response = match party {
                    Party::Alice => sign_of_cos(phi - theta),
                    Party::Bob => -sign_of_cos(phi - theta),
                };
                Ok(if response == sign { 1.0 } else { 0.0 })
            }
            KernelPreset::Born => Err(Error::JointKernel {
                model: self.name.clone(),
            }),
        }
    }

    /// Joint kernel P(α, β | ω, n1, n2, ψ). For factorized kernels this is
    /// exactly kernel1 × kernel2.
    pub fn kernel_joint(
        &self,
        atom: &BeableAtom,
        s1: &Setting,
        s2: &Setting,
        psi: &TwoQubitState,
        a: Outcome,
        b: Outcome,
    ) -> Result<f64> {
        match self.kernel.form() {
            KernelForm::Factorized => {
                let k1 = self.kernel_factor(atom, Party::Alice, s1, psi, a)?;
                let k2 = self.kernel_factor(atom, Party::Bob, s2, psi, b)?;
                Ok(k1 * k2)
            }
            KernelForm::Joint => {
                let state = atom.state_label.as_ref().unwrap_or(psi);
                Ok(born_joint(state, s1, s2, a, b))
            }
        }
    }

    /// One party's outcome probability at a fixed beable,
    /// Σ_other kernel(α, β). Defined for both kernel forms.
    pub fn party_marginal(
        &self,
        atom: &BeableAtom,
        party: Party,
        s1: &Setting,
        s2: &Setting,
        psi: &TwoQubitState,
        out: Outcome,
    ) -> Result<f64> {
        match self.kernel.form() {
            KernelForm::Factorized => {
                let local = match party {
                    Party::Alice => s1,
                    Party::Bob => s2,
                };
                self.kernel_factor(atom, party, local, psi, out)
            }
            KernelForm::Joint => {
                let mut p = 0.0;
                for other in Outcome::BOTH {
                    let (a, b) = match party {
                        Party::Alice => (out, other),
                        Party::Bob => (other, out),
                    };
                    p += self.kernel_joint(atom, s1, s2, psi, a, b)?;
                }
                Ok(p)
            }
        }
    }

    /// Model joint probability: mass-weighted kernel sum over the density.
    pub fn joint(
        &self,
        s1: &Setting,
        s2: &Setting,
        psi: &TwoQubitState,
        a: Outcome,
        b: Outcome,
    ) -> Result<f64> {
        let density = self.density(s1, s2, psi)?;
        let mass = density.total_mass();
        if (mass - 1.0).abs() > EXACT_TOL {
            return Err(Error::MalformedModel {
                model: self.name.clone(),
                reason: format!("density mass {mass} is not 1"),
            });
        }
        let mut p = 0.0;
        for atom in density.support_atoms() {
            p += atom.weight * self.kernel_joint(&atom, s1, s2, psi, a, b)?;
        }
        Ok(p)
    }

    /// All four joint probabilities in one density pass, indexed by
    /// [`TwoQubitState::index_of`].
    pub fn joint_table(
        &self,
        s1: &Setting,
        s2: &Setting,
        psi: &TwoQubitState,
    ) -> Result<[f64; 4]> {
        let density = self.density(s1, s2, psi)?;
        let mass = density.total_mass();
        if (mass - 1.0).abs() > EXACT_TOL {
            return Err(Error::MalformedModel {
                model: self.name.clone(),
                reason: format!("density mass {mass} is not 1"),
            });
        }
        let mut table = [0.0; 4];
        for atom in density.support_atoms() {
            for a in Outcome::BOTH {
                for b in Outcome::BOTH {
                    table[TwoQubitState::index_of(a, b)] +=
                        atom.weight * self.kernel_joint(&atom, s1, s2, psi, a, b)?;
                }
            }
        }
        Ok(table)
    }

    /// Model correlation E = Σ αβ P(α, β).
    pub fn correlation(&self, s1: &Setting, s2: &Setting, psi: &TwoQubitState) -> Result<f64> {
        let table = self.joint_table(s1, s2, psi)?;
        let mut e = 0.0;
        for a in Outcome::BOTH {
            for b in Outcome::BOTH {
                e += a.sign() * b.sign() * table[TwoQubitState::index_of(a, b)];
            }
        }
        Ok(e)
    }

    /// Local conditional mean values Ā, B̄ at a fixed beable.
    pub fn conditional_means(
        &self,
        atom: &BeableAtom,
        s1: &Setting,
        s2: &Setting,
        psi: &TwoQubitState,
    ) -> Result<ConditionalMeans> {
        let mean = |party: Party| -> Result<f64> {
            let mut m = 0.0;
            for out in Outcome::BOTH {
                m += out.sign() * self.party_marginal(atom, party, s1, s2, psi, out)?;
            }
            Ok(m)
        };
        Ok(ConditionalMeans {
            a_bar: mean(Party::Alice)?,
            b_bar: mean(Party::Bob)?,
        })
    }
}

impl fmt::Display for BeableModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name, self.kernel.name())
    }
}

fn rational_f64(r: Rational64) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn sign_of_cos(angle: f64) -> f64 {
    if angle.cos() >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

fn half(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

/// Ontic state-vector model: a single delta atom at the prepared state,
/// Born-rule joint kernel.
pub fn beltrametti_bugajski() -> BeableModel {
    BeableModel::new(
        "beltrametti-bugajski",
        DensitySpec::StateAtom,
        KernelPreset::Born,
    )
}

/// Angular delta-pair model: two atoms of weight ½ pinned to Alice's
/// analyzer, θ2 = θ1 + π, cosine response.
pub fn scully() -> BeableModel {
    BeableModel::new(
        "scully",
        DensitySpec::Atoms(vec![
            AtomSpec {
                weight: half(1, 2),
                theta1: AngleExpr::phi1_plus_pi(0),
                theta2: AngleExpr::phi1_plus_pi(1),
            },
            AtomSpec {
                weight: half(1, 2),
                theta1: AngleExpr::phi1_plus_pi(1),
                theta2: AngleExpr::phi1_plus_pi(0),
            },
        ]),
        KernelPreset::CosineResponse,
    )
}

/// Symmetric four-atom variant of the angular model: θ1 pinned to
/// φ1, φ1+π, φ2−π, φ2 with weight ¼ each and θ2 = θ1 + π.
pub fn argaman_dilorenzo() -> BeableModel {
    let atom = |theta1: AngleExpr, theta2: AngleExpr| AtomSpec {
        weight: half(1, 4),
        theta1,
        theta2,
    };
    BeableModel::new(
        "argaman-dilorenzo",
        DensitySpec::Atoms(vec![
            atom(AngleExpr::phi1_plus_pi(0), AngleExpr::phi1_plus_pi(1)),
            atom(AngleExpr::phi1_plus_pi(1), AngleExpr::phi1_plus_pi(0)),
            atom(AngleExpr::phi2_plus_pi(-1), AngleExpr::phi2_plus_pi(0)),
            atom(AngleExpr::phi2_plus_pi(0), AngleExpr::phi2_plus_pi(1)),
        ]),
        KernelPreset::CosineResponse,
    )
}

/// Local deterministic contrast model: uniform λ grid, sign responses.
/// Locally causal by construction, so it cannot reproduce the cosine.
pub fn sawtooth_local() -> BeableModel {
    BeableModel::new(
        "sawtooth",
        DensitySpec::UniformGrid {
            cells: DEFAULT_GRID_CELLS,
        },
        KernelPreset::SignResponse,
    )
}

pub const BUILTIN_NAMES: [&str; 4] = [
    "beltrametti-bugajski",
    "scully",
    "argaman-dilorenzo",
    "sawtooth",
];

/// Look up a built-in model by name.
pub fn builtin(name: &str) -> Option<BeableModel> {
    match name {
        "beltrametti-bugajski" => Some(beltrametti_bugajski()),
        "scully" => Some(scully()),
        "argaman-dilorenzo" => Some(argaman_dilorenzo()),
        "sawtooth" => Some(sawtooth_local()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn singlet() -> TwoQubitState {
        TwoQubitState::singlet()
    }

    #[test]
    fn bb_density_is_one_labeled_atom() {
        let model = beltrametti_bugajski();
        for &(p1, p2) in &[(0.0, 0.0), (0.4, 2.0), (3.0, 5.5)] {
            let d = model
                .density(&Setting::plane(p1), &Setting::plane(p2), &singlet())
                .unwrap();
            let atoms = d.support_atoms();
            assert_eq!(atoms.len(), 1);
            assert_eq!(atoms[0].weight, 1.0);
            assert!(atoms[0].state_label.is_some());
        }
    }

    #[test]
    fn bb_joint_equals_born_exactly() {
        let model = beltrametti_bugajski();
        let psi = singlet();
        for &(p1, p2) in &[(0.0, 0.0), (0.3, 1.2), (4.4, 0.9)] {
            let s1 = Setting::plane(p1);
            let s2 = Setting::plane(p2);
            for a in Outcome::BOTH {
                for b in Outcome::BOTH {
                    let lhs = model.joint(&s1, &s2, &psi, a, b).unwrap();
                    let rhs = born_joint(&psi, &s1, &s2, a, b);
                    assert_eq!(lhs, rhs, "single unit atom must reproduce the oracle bit-for-bit");
                }
            }
        }
    }

    #[test]
    fn bb_kernel_normalized_per_atom() {
        let model = beltrametti_bugajski();
        let psi = singlet();
        let s1 = Setting::plane(0.7);
        let s2 = Setting::plane(2.1);
        let atom = model.density(&s1, &s2, &psi).unwrap().support_atoms()[0].clone();
        let total: f64 = Outcome::BOTH
            .iter()
            .flat_map(|&a| Outcome::BOTH.iter().map(move |&b| (a, b)))
            .map(|(a, b)| model.kernel_joint(&atom, &s1, &s2, &psi, a, b).unwrap())
            .sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn scully_response_plugin_values() {
        let model = scully();
        let psi = singlet();
        let phi1 = 0.9;
        let s1 = Setting::plane(phi1);
        let aligned = BeableAtom::angles(0.5, phi1, phi1 + PI);
        let opposed = BeableAtom::angles(0.5, phi1 + PI, phi1);
        assert_abs_diff_eq!(
            model
                .kernel_factor(&aligned, Party::Alice, &s1, &psi, Outcome::Plus)
                .unwrap(),
            1.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            model
                .kernel_factor(&opposed, Party::Alice, &s1, &psi, Outcome::Plus)
                .unwrap(),
            0.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn scully_joint_frozen_value() {
        // two-atom weighted sum by hand:
        // ½·1·(1−cos(π/3))/2 + ½·0·(…) = (1 − 1/2)/4 = 1/8
        let model = scully();
        let psi = singlet();
        let p = model
            .joint(
                &Setting::plane(0.0),
                &Setting::plane(FRAC_PI_3),
                &psi,
                Outcome::Plus,
                Outcome::Plus,
            )
            .unwrap();
        assert_abs_diff_eq!(p, 0.125, epsilon = 1e-12);
    }

    #[test]
    fn scully_equal_settings_anticorrelated() {
        let model = scully();
        let psi = singlet();
        for &phi in &[0.0, 0.5, 2.0, 5.9] {
            let s = Setting::plane(phi);
            for a in Outcome::BOTH {
                assert_abs_diff_eq!(
                    model.joint(&s, &s, &psi, a, a).unwrap(),
                    0.0,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn scully_matches_anticorrelated_cosine_form() {
        let model = scully();
        let psi = singlet();
        for i in 0..12 {
            for j in 0..12 {
                let phi1 = i as f64 * PI / 6.0;
                let phi2 = j as f64 * PI / 6.0;
                let s1 = Setting::plane(phi1);
                let s2 = Setting::plane(phi2);
                for a in Outcome::BOTH {
                    for b in Outcome::BOTH {
                        let expect =
                            (1.0 - a.sign() * b.sign() * (phi1 - phi2).cos()) / 4.0;
                        assert_abs_diff_eq!(
                            model.joint(&s1, &s2, &psi, a, b).unwrap(),
                            expect,
                            epsilon = 1e-12
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn printed_sign_variant_flips_the_correlation() {
        let model = scully().with_printed_sign();
        assert!(model.printed_sign());
        let psi = singlet();
        let s1 = Setting::plane(0.0);
        let s2 = Setting::plane(FRAC_PI_3);
        for a in Outcome::BOTH {
            for b in Outcome::BOTH {
                let expect = (1.0 + a.sign() * b.sign() * FRAC_PI_3.cos()) / 4.0;
                assert_abs_diff_eq!(
                    model.joint(&s1, &s2, &psi, a, b).unwrap(),
                    expect,
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn argaman_dilorenzo_mass_and_oracle_agreement() {
        let model = argaman_dilorenzo();
        let psi = singlet();
        for i in 0..10 {
            for j in 0..10 {
                let phi1 = i as f64 * PI / 5.0;
                let phi2 = j as f64 * PI / 5.0;
                let s1 = Setting::plane(phi1);
                let s2 = Setting::plane(phi2);
                let d = model.density(&s1, &s2, &psi).unwrap();
                assert_abs_diff_eq!(d.total_mass(), 1.0, epsilon = 1e-12);
                for a in Outcome::BOTH {
                    for b in Outcome::BOTH {
                        assert_abs_diff_eq!(
                            model.joint(&s1, &s2, &psi, a, b).unwrap(),
                            born_joint(&psi, &s1, &s2, a, b),
                            epsilon = 1e-12
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn argaman_dilorenzo_atoms_collapse_pairwise_at_equal_settings() {
        let model = argaman_dilorenzo();
        let psi = singlet();
        let s = Setting::plane(1.3);
        let atoms = model.density(&s, &s, &psi).unwrap().support_atoms();
        assert_eq!(atoms.len(), 4);
        // slots (0, 3) and (1, 2) carry the same beable values
        assert_abs_diff_eq!(atoms[0].theta1, atoms[3].theta1, epsilon = 1e-12);
        assert_abs_diff_eq!(atoms[0].theta2, atoms[3].theta2, epsilon = 1e-12);
        assert_abs_diff_eq!(atoms[1].theta1, atoms[2].theta1, epsilon = 1e-12);
        assert_abs_diff_eq!(atoms[1].theta2, atoms[2].theta2, epsilon = 1e-12);
        assert_abs_diff_eq!(
            crate::angles::angle_difference(atoms[0].theta1, atoms[1].theta1).abs(),
            PI,
            epsilon = 1e-12
        );
    }

    #[test]
    fn sawtooth_correlations() {
        let model = sawtooth_local();
        let psi = singlet();
        let e0 = model
            .correlation(&Setting::plane(0.3), &Setting::plane(0.3), &psi)
            .unwrap();
        assert_abs_diff_eq!(e0, -1.0, epsilon = 1e-12);
        let e_quarter = model
            .correlation(&Setting::plane(0.0), &Setting::plane(FRAC_PI_2), &psi)
            .unwrap();
        assert_abs_diff_eq!(e_quarter, 0.0, epsilon = 1e-12);
        assert!(model.is_density_setting_free());
    }

    #[test]
    fn factorized_kernel_is_exact_product() {
        let psi = singlet();
        for model in [scully(), argaman_dilorenzo(), sawtooth_local()] {
            let s1 = Setting::plane(0.8);
            let s2 = Setting::plane(2.6);
            for atom in model.density(&s1, &s2, &psi).unwrap().support_atoms().iter().take(8) {
                for a in Outcome::BOTH {
                    for b in Outcome::BOTH {
                        let k1 = model
                            .kernel_factor(atom, Party::Alice, &s1, &psi, a)
                            .unwrap();
                        let k2 = model.kernel_factor(atom, Party::Bob, &s2, &psi, b).unwrap();
                        let joint = model.kernel_joint(atom, &s1, &s2, &psi, a, b).unwrap();
                        assert_eq!(joint, k1 * k2);
                    }
                }
            }
        }
    }

    #[test]
    fn joint_kernel_has_no_per_party_factor() {
        let model = beltrametti_bugajski();
        let psi = singlet();
        let s = Setting::plane(0.0);
        let atom = model.density(&s, &s, &psi).unwrap().support_atoms()[0].clone();
        assert!(matches!(
            model.kernel_factor(&atom, Party::Alice, &s, &psi, Outcome::Plus),
            Err(Error::JointKernel { .. })
        ));
    }

    #[test]
    fn malformed_density_mass_is_rejected() {
        let broken = BeableModel::new(
            "broken",
            DensitySpec::Atoms(vec![AtomSpec {
                weight: half(1, 3),
                theta1: AngleExpr::phi1_plus_pi(0),
                theta2: AngleExpr::phi1_plus_pi(1),
            }]),
            KernelPreset::CosineResponse,
        );
        let s = Setting::plane(0.0);
        assert!(matches!(
            broken.joint(&s, &s, &singlet(), Outcome::Plus, Outcome::Minus),
            Err(Error::MalformedModel { .. })
        ));
    }

    #[test]
    fn conditional_means_plugin_values() {
        let model = scully();
        let psi = singlet();
        let phi1 = 0.4;
        let s1 = Setting::plane(phi1);
        let s2 = Setting::plane(1.9);

        let pinned = BeableAtom::angles(0.5, phi1, phi1 + PI);
        let means = model.conditional_means(&pinned, &s1, &s2, &psi).unwrap();
        assert_abs_diff_eq!(means.a_bar, 1.0, epsilon = 1e-12);

        // synthetic atom a quarter turn off: Ā = cos(π/2) = 0
        let quarter = BeableAtom::angles(1.0, phi1 + FRAC_PI_2, phi1);
        let means = model.conditional_means(&quarter, &s1, &s2, &psi).unwrap();
        assert_abs_diff_eq!(means.a_bar, 0.0, epsilon = 1e-12);

        for &t1 in &[0.0, 0.7, 2.2, 4.0] {
            let atom = BeableAtom::angles(1.0, t1, t1 + 1.0);
            let m = model.conditional_means(&atom, &s1, &s2, &psi).unwrap();
            assert!(m.a_bar.abs() <= 1.0 + 1e-12);
            assert!(m.b_bar.abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn builtin_lookup() {
        for name in BUILTIN_NAMES {
            let model = builtin(name).unwrap();
            assert_eq!(model.name(), name);
        }
        assert!(builtin("nonsense").is_none());
    }
}
