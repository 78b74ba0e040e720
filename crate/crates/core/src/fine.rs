//! Joint distributions over all four CHSH observables for factorizable,
//! setting-independent models,
//!
//! ```text
//! P(A1, A2, B1, B2) = Σ_ω w(ω) · P(A1|ω) P(A2|ω) P(B1|ω) P(B2|ω)
//! ```
//!
//! and marginal-consistency checks. The pairwise statistics any such table
//! produces are exactly its marginals, which forces |S| ≤ 2; the quantum
//! singlet needs 2√2, so no table of this form can reproduce its pairwise
//! predictions — the marginal check certifies that with a concrete
//! deviation.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::chsh::ChshSpec;
use crate::error::{Error, Result};
use crate::model::{BeableModel, KernelForm, Party, ATOM_MATCH_TOL};
use crate::par;
use crate::quantum::{born_joint, Outcome, Setting, TwoQubitState};

const OUT: [Outcome; 2] = Outcome::BOTH;

/// 16-entry joint table over (A1, A2, B1, B2) ∈ {±1}⁴ with its CHSH frame.
/// Index: 8·i(A1) + 4·i(A2) + 2·i(B1) + i(B2), with i(+1)=0, i(−1)=1.
#[derive(Debug, Clone, Serialize)]
pub struct FineJoint {
    pub spec: ChshSpec,
    pub table: [f64; 16],
}

fn idx4(a1: usize, a2: usize, b1: usize, b2: usize) -> usize {
    8 * a1 + 4 * a2 + 2 * b1 + b2
}

impl FineJoint {
    pub fn total(&self) -> f64 {
        self.table.iter().sum()
    }

    /// Outcome values (A1, A2, B1, B2) at a table index.
    pub fn outcomes_at(idx: usize) -> (i8, i8, i8, i8) {
        let v = |bit: usize| if (idx >> bit) & 1 == 0 { 1 } else { -1 };
        (v(3), v(2), v(1), v(0))
    }

    /// Pairwise marginal P(A_i, B_j), 4 entries indexed like
    /// [`TwoQubitState::index_of`]. `i`, `j` ∈ {0, 1} pick (a, a') / (b, b').
    pub fn pairwise(&self, i: usize, j: usize) -> [f64; 4] {
        let mut out = [0.0; 4];
        for a1 in 0..2 {
            for a2 in 0..2 {
                for b1 in 0..2 {
                    for b2 in 0..2 {
                        let ai = if i == 0 { a1 } else { a2 };
                        let bj = if j == 0 { b1 } else { b2 };
                        out[2 * ai + bj] += self.table[idx4(a1, a2, b1, b2)];
                    }
                }
            }
        }
        out
    }

    /// Same-party marginal P(A1, A2) — the object quantum mechanics refuses
    /// to define for incompatible observables.
    pub fn same_party_alice(&self) -> [f64; 4] {
        let mut out = [0.0; 4];
        for a1 in 0..2 {
            for a2 in 0..2 {
                for b1 in 0..2 {
                    for b2 in 0..2 {
                        out[2 * a1 + a2] += self.table[idx4(a1, a2, b1, b2)];
                    }
                }
            }
        }
        out
    }

    pub fn correlation(&self, i: usize, j: usize) -> f64 {
        let p = self.pairwise(i, j);
        p[0] - p[1] - p[2] + p[3]
    }

    /// S from this table's own pairwise marginals.
    pub fn chsh(&self) -> f64 {
        self.correlation(0, 0) - self.correlation(0, 1)
            + self.correlation(1, 0)
            + self.correlation(1, 1)
    }

    /// Build directly from per-atom weights and response probabilities
    /// (pA1, pA2, pB1, pB2 = probability of outcome +1).
    pub fn from_responses(spec: ChshSpec, atoms: &[(f64, [f64; 4])]) -> FineJoint {
        let mut table = [0.0; 16];
        for (weight, p) in atoms {
            let prob = |r: f64, idx: usize| if idx == 0 { r } else { 1.0 - r };
            for a1 in 0..2 {
                for a2 in 0..2 {
                    for b1 in 0..2 {
                        for b2 in 0..2 {
                            table[idx4(a1, a2, b1, b2)] += weight
                                * prob(p[0], a1)
                                * prob(p[1], a2)
                                * prob(p[2], b1)
                                * prob(p[3], b2);
                        }
                    }
                }
            }
        }
        FineJoint { spec, table }
    }
}

/// Construct the four-observable joint for a factorized model whose density
/// is reusable across the frame's four setting pairs. Models violating
/// measurement independence (or carrying a joint kernel) are the theorem's
/// excluded hypotheses and are rejected, not skipped.
pub fn fine_joint_from_model(
    model: &BeableModel,
    psi: &TwoQubitState,
    spec: &ChshSpec,
) -> Result<FineJoint> {
    if model.kernel_form() != KernelForm::Factorized {
        return Err(Error::IneligibleModel {
            model: model.name().to_string(),
            reason: "joint kernel: per-observable response probabilities are undefined".into(),
        });
    }
    let pairs = [
        (spec.a, spec.b),
        (spec.a, spec.b_prime),
        (spec.a_prime, spec.b),
        (spec.a_prime, spec.b_prime),
    ];
    let base = model.density(&pairs[0].0, &pairs[0].1, psi)?;
    if !model.is_density_setting_free() {
        for (s1, s2) in &pairs[1..] {
            let other = model.density(s1, s2, psi)?;
            let agree = crate::audit::density_distance(&base, &other)
                .map(|(d, _, _)| d <= ATOM_MATCH_TOL)
                .unwrap_or(false);
            if !agree {
                return Err(Error::IneligibleModel {
                    model: model.name().to_string(),
                    reason: "measurement independence violated: density is not reusable across the four settings".into(),
                });
            }
        }
    }

    let mut atoms = Vec::new();
    for atom in base.support_atoms() {
        let response = |setting: &Setting, party: Party| -> Result<f64> {
            model.kernel_factor(&atom, party, setting, psi, Outcome::Plus)
        };
        atoms.push((
            atom.weight,
            [
                response(&spec.a, Party::Alice)?,
                response(&spec.a_prime, Party::Alice)?,
                response(&spec.b, Party::Bob)?,
                response(&spec.b_prime, Party::Bob)?,
            ],
        ));
    }
    Ok(FineJoint::from_responses(*spec, &atoms))
}

/// Pairwise target tables to check a [`FineJoint`]'s marginals against.
#[derive(Debug, Clone, Serialize)]
pub struct PairwiseTargets {
    pub label: String,
    /// `tables[i][j]` = 4-outcome table for (A_{i+1}, B_{j+1}).
    pub tables: [[[f64; 4]; 2]; 2],
    pub same_party_alice: Option<[f64; 4]>,
}

impl PairwiseTargets {
    pub fn from_model(
        model: &BeableModel,
        psi: &TwoQubitState,
        spec: &ChshSpec,
    ) -> Result<PairwiseTargets> {
        let mut tables = [[[0.0; 4]; 2]; 2];
        let alice = [spec.a, spec.a_prime];
        let bob = [spec.b, spec.b_prime];
        for (i, s1) in alice.iter().enumerate() {
            for (j, s2) in bob.iter().enumerate() {
                tables[i][j] = model.joint_table(s1, s2, psi)?;
            }
        }
        Ok(PairwiseTargets {
            label: format!("model:{}", model.name()),
            tables,
            same_party_alice: None,
        })
    }

    pub fn from_quantum(psi: &TwoQubitState, spec: &ChshSpec) -> PairwiseTargets {
        let mut tables = [[[0.0; 4]; 2]; 2];
        let alice = [spec.a, spec.a_prime];
        let bob = [spec.b, spec.b_prime];
        for (i, s1) in alice.iter().enumerate() {
            for (j, s2) in bob.iter().enumerate() {
                for a in OUT {
                    for b in OUT {
                        tables[i][j][TwoQubitState::index_of(a, b)] =
                            born_joint(psi, s1, s2, a, b);
                    }
                }
            }
        }
        PairwiseTargets {
            label: "quantum".into(),
            tables,
            same_party_alice: None,
        }
    }

    pub fn from_fine(fj: &FineJoint) -> PairwiseTargets {
        let mut tables = [[[0.0; 4]; 2]; 2];
        for (i, row) in tables.iter_mut().enumerate() {
            for (j, t) in row.iter_mut().enumerate() {
                *t = fj.pairwise(i, j);
            }
        }
        PairwiseTargets {
            label: "fine-marginals".into(),
            tables,
            same_party_alice: Some(fj.same_party_alice()),
        }
    }
}

/// Marginal-consistency report: per-table total-variation distances between
/// the joint's marginals and the targets.
#[derive(Debug, Clone, Serialize)]
pub struct FineMarginalReport {
    pub target: String,
    /// Max total-variation distance over the compared tables.
    pub max_deviation: f64,
    pub worst_table: String,
    pub per_table: Vec<(String, f64)>,
}

fn total_variation(p: &[f64; 4], q: &[f64; 4]) -> f64 {
    p.iter().zip(q.iter()).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0
}

/// Compare the four pairwise marginals (and the same-party marginal when the
/// target defines one) against target tables.
pub fn fine_marginal_check(fj: &FineJoint, targets: &PairwiseTargets) -> FineMarginalReport {
    let names = [["A1,B1", "A1,B2"], ["A2,B1", "A2,B2"]];
    let mut per_table = Vec::new();
    for i in 0..2 {
        for j in 0..2 {
            let tv = total_variation(&fj.pairwise(i, j), &targets.tables[i][j]);
            per_table.push((names[i][j].to_string(), tv));
        }
    }
    if let Some(target) = &targets.same_party_alice {
        per_table.push((
            "A1,A2".to_string(),
            total_variation(&fj.same_party_alice(), target),
        ));
    }
    let (worst_table, max_deviation) = per_table
        .iter()
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(n, d)| (n.clone(), *d))
        .expect("at least four tables compared");
    FineMarginalReport {
        target: targets.label.clone(),
        max_deviation,
        worst_table,
        per_table,
    }
}

/// Result of the |S| ≤ 2 bound sweep over random four-observable tables.
#[derive(Debug, Clone, Serialize)]
pub struct FineBoundReport {
    pub samples: usize,
    pub seed: u64,
    pub max_abs_s: f64,
    pub bound: f64,
    pub all_within_bound: bool,
}

/// Sample random tables of the factorizable form — random response
/// probabilities over random setting-independent densities — and take the
/// max |S| from their marginals. Algebra says it never exceeds 2.
pub fn chsh_bound_property(samples: usize, seed: u64) -> FineBoundReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases: Vec<Vec<(f64, [f64; 4])>> = Vec::with_capacity(samples);
    for _ in 0..samples {
        let n = rng.random_range(1..=6usize);
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        cases.push(
            raw.into_iter()
                .map(|w| {
                    (
                        w / total,
                        [
                            rng.random_range(0.0..=1.0),
                            rng.random_range(0.0..=1.0),
                            rng.random_range(0.0..=1.0),
                            rng.random_range(0.0..=1.0),
                        ],
                    )
                })
                .collect(),
        );
    }
    let spec = ChshSpec::optimal();
    let values = par::indexed_map(cases.len(), |i| {
        FineJoint::from_responses(spec, &cases[i]).chsh().abs()
    });
    let max_abs_s = values.into_iter().fold(0.0, f64::max);
    let bound = 2.0;
    FineBoundReport {
        samples,
        seed,
        max_abs_s,
        bound,
        all_within_bound: max_abs_s <= bound + 1e-9,
    }
}

/// Exhaustive max |S| over the 16 deterministic single-atom response
/// combinations: exactly 2, attained at extremal tables.
pub fn deterministic_extremal_chsh() -> f64 {
    let spec = ChshSpec::optimal();
    let mut max_abs: f64 = 0.0;
    for combo in 0..16usize {
        let bit = |k: usize| ((combo >> k) & 1) as f64;
        let fj = FineJoint::from_responses(
            spec,
            &[(1.0, [bit(0), bit(1), bit(2), bit(3)])],
        );
        max_abs = max_abs.max(fj.chsh().abs());
    }
    max_abs
}
