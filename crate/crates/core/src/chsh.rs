//! Four-setting CHSH evaluation for models and for the Born oracle.
//!
//! S = E(a,b) − E(a,b') + E(a',b) + E(a',b'). Locally causal models are
//! bounded by |S| ≤ 2; the singlet reaches 2√2 at the optimal frame.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use num_rational::Rational64;

use crate::angles::AngleExpr;
use crate::error::Result;
use crate::model::{AtomSpec, BeableModel, DensitySpec, KernelPreset};
use crate::par;
use crate::quantum::{correlation, Setting, TwoQubitState};

/// Quantum maximum |S| for the singlet.
pub const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

/// The four analyzer settings of a CHSH run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChshSpec {
    pub a: Setting,
    pub a_prime: Setting,
    pub b: Setting,
    pub b_prime: Setting,
}

impl ChshSpec {
    pub fn planar(a: f64, a_prime: f64, b: f64, b_prime: f64) -> ChshSpec {
        ChshSpec {
            a: Setting::plane(a),
            a_prime: Setting::plane(a_prime),
            b: Setting::plane(b),
            b_prime: Setting::plane(b_prime),
        }
    }

    /// The frame (0, π/2, π/4, 3π/4) where the singlet attains 2√2.
    pub fn optimal() -> ChshSpec {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
        ChshSpec::planar(0.0, FRAC_PI_2, FRAC_PI_4, 3.0 * PI / 4.0)
    }

    /// All four settings equal (degenerate frame).
    pub fn degenerate(phi: f64) -> ChshSpec {
        ChshSpec::planar(phi, phi, phi, phi)
    }

    /// The four (Alice, Bob) setting pairs with their CHSH signs.
    pub fn signed_pairs(&self) -> [(Setting, Setting, f64); 4] {
        [
            (self.a, self.b, 1.0),
            (self.a, self.b_prime, -1.0),
            (self.a_prime, self.b, 1.0),
            (self.a_prime, self.b_prime, 1.0),
        ]
    }
}

/// S for the Born oracle.
pub fn chsh_quantum(psi: &TwoQubitState, spec: &ChshSpec) -> f64 {
    spec.signed_pairs()
        .iter()
        .map(|(s1, s2, sign)| sign * correlation(psi, s1, s2))
        .sum()
}

/// S from a beable model's correlations.
pub fn chsh_model(model: &BeableModel, psi: &TwoQubitState, spec: &ChshSpec) -> Result<f64> {
    let mut s = 0.0;
    for (s1, s2, sign) in spec.signed_pairs() {
        s += sign * model.correlation(&s1, &s2, psi)?;
    }
    Ok(s)
}

/// Uniformly random planar CHSH frame.
pub fn random_planar_spec<R: Rng>(rng: &mut R) -> ChshSpec {
    let mut angle = || rng.random_range(0.0..std::f64::consts::TAU);
    ChshSpec::planar(angle(), angle(), angle(), angle())
}

/// Result of a random-frame scan.
#[derive(Debug, Clone, Serialize)]
pub struct ChshScan {
    pub samples: usize,
    pub seed: u64,
    pub max_abs_s: f64,
    pub argmax: ChshSpec,
}

/// Max |S| for the oracle over `samples` seeded random planar frames.
pub fn max_quantum_chsh_random(psi: &TwoQubitState, samples: usize, seed: u64) -> ChshScan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<ChshSpec> = (0..samples).map(|_| random_planar_spec(&mut rng)).collect();
    let values = par::indexed_map(specs.len(), |i| chsh_quantum(psi, &specs[i]).abs());
    let (mut max_abs, mut arg) = (0.0f64, ChshSpec::optimal());
    for (i, &v) in values.iter().enumerate() {
        if v > max_abs {
            max_abs = v;
            arg = specs[i];
        }
    }
    ChshScan {
        samples,
        seed,
        max_abs_s: max_abs,
        argmax: arg,
    }
}

/// Sequential twin of [`max_quantum_chsh_random`] for benchmarking.
pub fn max_quantum_chsh_random_seq(psi: &TwoQubitState, samples: usize, seed: u64) -> ChshScan {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let specs: Vec<ChshSpec> = (0..samples).map(|_| random_planar_spec(&mut rng)).collect();
    let values = par::indexed_map_seq(specs.len(), |i| chsh_quantum(psi, &specs[i]).abs());
    let (mut max_abs, mut arg) = (0.0f64, ChshSpec::optimal());
    for (i, &v) in values.iter().enumerate() {
        if v > max_abs {
            max_abs = v;
            arg = specs[i];
        }
    }
    ChshScan {
        samples,
        seed,
        max_abs_s: max_abs,
        argmax: arg,
    }
}

/// Random model whose density ignores the settings: constant rational-π
/// atoms with a factorized response kernel. Such a model passes outcome,
/// parameter and measurement independence by construction.
pub fn random_setting_free_model<R: Rng>(rng: &mut R) -> BeableModel {
    let n_atoms = rng.random_range(1..=4usize);
    let raw: Vec<i64> = (0..n_atoms).map(|_| rng.random_range(1..=5i64)).collect();
    let total: i64 = raw.iter().sum();
    let constant = |rng: &mut R| {
        let q = rng.random_range(1..=8i64);
        let p = rng.random_range(0..2 * q);
        AngleExpr {
            k: Rational64::new(p, q),
            ..AngleExpr::ZERO
        }
    };
    let atoms = raw
        .into_iter()
        .map(|wi| AtomSpec {
            weight: Rational64::new(wi, total),
            theta1: constant(rng),
            theta2: constant(rng),
        })
        .collect();
    let kernel = if rng.random_bool(0.5) {
        KernelPreset::CosineResponse
    } else {
        KernelPreset::SignResponse
    };
    BeableModel::new(
        format!("random-setting-free-{n_atoms}"),
        DensitySpec::Atoms(atoms),
        kernel,
    )
}

/// Max |S| over seeded random locally-causal models × random frames.
pub fn max_local_model_chsh_random(
    psi: &TwoQubitState,
    models: usize,
    specs_per_model: usize,
    seed: u64,
) -> Result<ChshScan> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(models * specs_per_model);
    for _ in 0..models {
        let model = random_setting_free_model(&mut rng);
        for _ in 0..specs_per_model {
            cases.push((model.clone(), random_planar_spec(&mut rng)));
        }
    }
    let values = par::indexed_map(cases.len(), |i| {
        let (model, spec) = &cases[i];
        chsh_model(model, psi, spec).map(f64::abs)
    });
    let (mut max_abs, mut arg) = (0.0f64, ChshSpec::optimal());
    for (i, v) in values.into_iter().enumerate() {
        let v = v?;
        if v > max_abs {
            max_abs = v;
            arg = cases[i].1;
        }
    }
    Ok(ChshScan {
        samples: models * specs_per_model,
        seed,
        max_abs_s: max_abs,
        argmax: arg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sawtooth_local, scully};
    use approx::assert_abs_diff_eq;

    #[test]
    fn quantum_optimal_frame_reaches_tsirelson() {
        let psi = TwoQubitState::singlet();
        let s = chsh_quantum(&psi, &ChshSpec::optimal());
        assert_abs_diff_eq!(s.abs(), TSIRELSON, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_frame_gives_two() {
        let psi = TwoQubitState::singlet();
        let s = chsh_quantum(&psi, &ChshSpec::degenerate(0.7));
        assert_abs_diff_eq!(s.abs(), 2.0, epsilon = 1e-12);
        let s = chsh_model(&scully(), &psi, &ChshSpec::degenerate(1.1)).unwrap();
        assert_abs_diff_eq!(s.abs(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn scully_tracks_the_quantum_value() {
        let psi = TwoQubitState::singlet();
        let s = chsh_model(&scully(), &psi, &ChshSpec::optimal()).unwrap();
        assert_abs_diff_eq!(s, -TSIRELSON, epsilon = 1e-12);
    }

    #[test]
    fn sawtooth_caps_at_two() {
        let psi = TwoQubitState::singlet();
        let s = chsh_model(&sawtooth_local(), &psi, &ChshSpec::optimal()).unwrap();
        assert_abs_diff_eq!(s.abs(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn product_state_stays_classical() {
        let psi = TwoQubitState::z_product(
            crate::quantum::Outcome::Plus,
            crate::quantum::Outcome::Plus,
        );
        let scan = max_quantum_chsh_random(&psi, 2000, 3);
        assert!(scan.max_abs_s <= 2.0 + 1e-9, "got {}", scan.max_abs_s);
    }

    #[test]
    fn random_scan_is_seed_deterministic_and_bounded() {
        let psi = TwoQubitState::singlet();
        let one = max_quantum_chsh_random(&psi, 3000, 42);
        let two = max_quantum_chsh_random(&psi, 3000, 42);
        assert_eq!(one.max_abs_s, two.max_abs_s);
        assert!(one.max_abs_s <= TSIRELSON + 1e-9);
        let seq = max_quantum_chsh_random_seq(&psi, 3000, 42);
        assert_eq!(one.max_abs_s, seq.max_abs_s);
    }

    #[test]
    fn setting_free_models_respect_the_classical_bound() {
        let psi = TwoQubitState::singlet();
        let scan = max_local_model_chsh_random(&psi, 20, 50, 5).unwrap();
        assert!(scan.max_abs_s <= 2.0 + 1e-9, "got {}", scan.max_abs_s);
    }
}
