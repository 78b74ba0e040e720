//! Checkers for the three local-causality axioms, the perfect-correlation
//! support constraints, derived determinism, and factorization — each
//! returning a deviation and concrete witnesses, not just a boolean.
//!
//! The three axioms are audited per beable in the density's support:
//!
//! - outcome independence: one party's conditional outcome probability may
//!   not depend on the other party's outcome, P(α|β,ω,n1,n2) = P(α|ω,n1,n2);
//! - parameter independence: each party's outcome distribution at a fixed
//!   beable — marginal, and conditioned on the other wing's outcome — may
//!   not move when the remote setting is varied;
//! - measurement independence: the density itself may not depend on the
//!   settings; atoms are matched across setting pairs by construction slot,
//!   falling back to nearest-angle matching.
//!
//! Factorized kernels satisfy the first two by construction (their per-party
//! factors read only the local setting and the beable), so those checks
//! short-circuit with deviation exactly zero; joint kernels are swept
//! numerically over the settings grid.

use std::f64::consts::{PI, TAU};

use rand::Rng;

use num_rational::Rational64;
use serde::Serialize;

use crate::angles::angle_difference;
use crate::error::{Error, Result};
use crate::model::{
    AtomSpec, BeableAtom, BeableDensity, BeableModel, DensitySpec, KernelForm, KernelPreset,
    Party, SUPPORT_THRESHOLD,
};
use crate::par;
use crate::quantum::{
    born_joint, born_marginal_alice, born_marginal_bob, Outcome, Setting, TwoQubitState,
};
use crate::angles::AngleExpr;

/// Default planar grid step: π/18, i.e. 36 settings per party.
pub const DEFAULT_GRID_STEP: f64 = PI / 18.0;

/// Condition identifiers used in reports.
pub mod condition {
    pub const OUTCOME_INDEPENDENCE: &str = "outcome-independence";
    pub const PARAMETER_INDEPENDENCE: &str = "parameter-independence";
    pub const MEASUREMENT_INDEPENDENCE: &str = "measurement-independence";
    pub const EPR_SUPPORT: &str = "epr-support";
    pub const DETERMINISM: &str = "determinism-on-support";
    pub const BOUNDED_MEANS: &str = "bounded-means";
    pub const ORACLE_AGREEMENT: &str = "oracle-agreement";
    pub const STATE_FACTORIZATION: &str = "state-factorization";
}

/// A planar settings grid: angles 0, step, 2·step, … covering [0, 2π).
#[derive(Debug, Clone)]
pub struct SettingsGrid {
    angles: Vec<f64>,
    spec: String,
}

impl SettingsGrid {
    /// Grid from a step that must divide 2π within 1e-12.
    pub fn planar(step: f64) -> Result<SettingsGrid> {
        if !step.is_finite() || step <= 0.0 {
            return Err(Error::InvalidGridStep { step });
        }
        let n = (TAU / step).round();
        if n < 1.0 || (n * step - TAU).abs() > 1e-12 {
            return Err(Error::InvalidGridStep { step });
        }
        let n = n as usize;
        Ok(SettingsGrid {
            angles: (0..n).map(|i| i as f64 * step).collect(),
            spec: format!("planar[step={step},n={n}]"),
        })
    }

    pub fn default_planar() -> SettingsGrid {
        SettingsGrid::planar(DEFAULT_GRID_STEP).expect("π/18 divides 2π")
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn spec(&self) -> &str {
        &self.spec
    }

    fn pair(&self, idx: usize) -> (f64, f64) {
        let n = self.angles.len();
        (self.angles[idx / n], self.angles[idx % n])
    }

    fn pair_count(&self) -> usize {
        self.angles.len() * self.angles.len()
    }
}

/// Tolerances for the audit family.
#[derive(Debug, Clone, Copy)]
pub struct AuditOptions {
    /// Exact-identity tolerance (probability deviations, oracle agreement).
    pub tolerance: f64,
    /// Determinism: conditionals must sit in {0, 1} within this.
    pub determinism_tolerance: f64,
    /// Atom matching modulo 2π for measurement independence.
    pub atom_match_tolerance: f64,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            tolerance: 1e-12,
            determinism_tolerance: 1e-9,
            atom_match_tolerance: crate::model::ATOM_MATCH_TOL,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Violated,
    NotApplicable,
}

/// One concrete worst-case evidence row.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub phi1: f64,
    pub phi2: f64,
    pub atom: Option<usize>,
    pub outcomes: Option<(i8, i8)>,
    pub lhs: f64,
    pub rhs: f64,
    pub deviation: f64,
    pub note: String,
}

/// Structured pass/fail-with-evidence record for one condition.
#[derive(Debug, Clone, Serialize)]
pub struct AuditReport {
    pub condition: String,
    pub verdict: Verdict,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub witnesses: Vec<Witness>,
    pub grid_spec: String,
    /// Zero-probability conditionings encountered and skipped.
    pub skipped: usize,
    pub note: Option<String>,
}

impl AuditReport {
    fn from_sweep(
        condition: &str,
        tolerance: f64,
        grid_spec: String,
        max_deviation: f64,
        mut witnesses: Vec<Witness>,
        skipped: usize,
        note: Option<String>,
    ) -> AuditReport {
        let verdict = if max_deviation <= tolerance {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        if verdict == Verdict::Holds {
            witnesses.clear();
        } else {
            witnesses.retain(|w| w.deviation > tolerance);
            witnesses.truncate(10);
        }
        AuditReport {
            condition: condition.to_string(),
            verdict,
            max_deviation,
            tolerance,
            witnesses,
            grid_spec,
            skipped,
            note,
        }
    }

    fn structural(condition: &str, tolerance: f64, grid_spec: String, note: &str) -> AuditReport {
        AuditReport {
            condition: condition.to_string(),
            verdict: Verdict::Holds,
            max_deviation: 0.0,
            tolerance,
            witnesses: Vec::new(),
            grid_spec,
            skipped: 0,
            note: Some(note.to_string()),
        }
    }
}

/// Per-sweep-cell result, merged deterministically afterwards.
struct CellResult {
    max_dev: f64,
    witness: Option<Witness>,
    skipped: usize,
}

impl CellResult {
    fn empty() -> CellResult {
        CellResult {
            max_dev: 0.0,
            witness: None,
            skipped: 0,
        }
    }

    fn record(&mut self, deviation: f64, witness: impl FnOnce() -> Witness) {
        if deviation > self.max_dev || self.witness.is_none() {
            self.max_dev = self.max_dev.max(deviation);
            if deviation > 0.0 || self.witness.is_none() {
                let mut w = witness();
                w.deviation = deviation;
                self.witness = Some(w);
            }
        }
    }
}

/// Merge parallel cell results: max deviation, top-10 witnesses (stable by
/// deviation, then sweep order), total skipped.
fn merge_cells(cells: Vec<Result<CellResult>>) -> Result<(f64, Vec<Witness>, usize)> {
    let mut max_dev: f64 = 0.0;
    let mut skipped = 0usize;
    let mut witnesses: Vec<Witness> = Vec::new();
    for cell in cells {
        let cell = cell?;
        max_dev = max_dev.max(cell.max_dev);
        skipped += cell.skipped;
        if let Some(w) = cell.witness {
            witnesses.push(w);
        }
    }
    witnesses.sort_by(|a, b| b.deviation.total_cmp(&a.deviation));
    witnesses.truncate(10);
    Ok((max_dev, witnesses, skipped))
}

fn witness(phi1: f64, phi2: f64) -> Witness {
    Witness {
        phi1,
        phi2,
        atom: None,
        outcomes: None,
        lhs: 0.0,
        rhs: 0.0,
        deviation: 0.0,
        note: String::new(),
    }
}

/// Outcome independence: P(α|β,ω,n1,n2) must equal the β-free marginal
/// P(α|ω,n1,n2) on every support atom.
pub fn check_outcome_independence(
    model: &BeableModel,
    psi: &TwoQubitState,
    grid: &SettingsGrid,
    opts: &AuditOptions,
) -> Result<AuditReport> {
    if model.kernel_form() == KernelForm::Factorized {
        return Ok(AuditReport::structural(
            condition::OUTCOME_INDEPENDENCE,
            opts.tolerance,
            grid.spec().to_string(),
            "factorized kernel: conditioning on the other outcome cancels exactly",
        ));
    }
    let cells = par::indexed_map(grid.pair_count(), |idx| -> Result<CellResult> {
        let (phi1, phi2) = grid.pair(idx);
        let s1 = Setting::plane(phi1);
        let s2 = Setting::plane(phi2);
        let mut cell = CellResult::empty();
        for (ai, atom) in model.density(&s1, &s2, psi)?.support_atoms().iter().enumerate() {
            let mut k = [[0.0; 2]; 2];
            for (i, a) in Outcome::BOTH.iter().enumerate() {
                for (j, b) in Outcome::BOTH.iter().enumerate() {
                    k[i][j] = model.kernel_joint(atom, &s1, &s2, psi, *a, *b)?;
                }
            }
            for (j, b) in Outcome::BOTH.iter().enumerate() {
                let p_b = k[0][j] + k[1][j];
                if p_b <= SUPPORT_THRESHOLD {
                    cell.skipped += 1;
                    continue;
                }
                for (i, a) in Outcome::BOTH.iter().enumerate() {
                    let conditional = k[i][j] / p_b;
                    let marginal = k[i][0] + k[i][1];
                    let dev = (conditional - marginal).abs();
                    cell.record(dev, || {
                        let mut w = witness(phi1, phi2);
                        w.atom = Some(ai);
                        w.outcomes = Some((a.value(), b.value()));
                        w.lhs = conditional;
                        w.rhs = marginal;
                        w.note = "P(α|β,ω) vs P(α|ω)".into();
                        w
                    });
                }
            }
        }
        Ok(cell)
    });
    let (max_dev, witnesses, skipped) = merge_cells(cells)?;
    Ok(AuditReport::from_sweep(
        condition::OUTCOME_INDEPENDENCE,
        opts.tolerance,
        grid.spec().to_string(),
        max_dev,
        witnesses,
        skipped,
        None,
    ))
}

/// Parameter independence: at a fixed beable, each party's outcome
/// distribution (marginal and conditioned on the other wing's outcome) must
/// not move when the remote setting is varied.
pub fn check_parameter_independence(
    model: &BeableModel,
    psi: &TwoQubitState,
    grid: &SettingsGrid,
    opts: &AuditOptions,
) -> Result<AuditReport> {
    if model.kernel_form() == KernelForm::Factorized {
        return Ok(AuditReport::structural(
            condition::PARAMETER_INDEPENDENCE,
            opts.tolerance,
            grid.spec().to_string(),
            "factorized kernel reads only the local setting and the beable",
        ));
    }
    let angles = grid.angles().to_vec();
    let cells = par::indexed_map(grid.pair_count(), |idx| -> Result<CellResult> {
        let (phi1, phi2) = grid.pair(idx);
        let s1 = Setting::plane(phi1);
        let s2 = Setting::plane(phi2);
        let mut cell = CellResult::empty();
        for (ai, atom) in model.density(&s1, &s2, psi)?.support_atoms().iter().enumerate() {
            let base = kernel_table(model, atom, &s1, &s2, psi)?;
            for &remote in &angles {
                // vary Alice's setting: Bob's distributions must stand still
                let varied = kernel_table(model, atom, &Setting::plane(remote), &s2, psi)?;
                compare_party(
                    &base, &varied, Party::Bob, remote, ai, phi1, phi2, &mut cell,
                );
                // vary Bob's setting: Alice's distributions must stand still
                let varied = kernel_table(model, atom, &s1, &Setting::plane(remote), psi)?;
                compare_party(
                    &base, &varied, Party::Alice, remote, ai, phi1, phi2, &mut cell,
                );
            }
        }
        Ok(cell)
    });
    let (max_dev, witnesses, skipped) = merge_cells(cells)?;
    Ok(AuditReport::from_sweep(
        condition::PARAMETER_INDEPENDENCE,
        opts.tolerance,
        grid.spec().to_string(),
        max_dev,
        witnesses,
        skipped,
        None,
    ))
}

fn kernel_table(
    model: &BeableModel,
    atom: &BeableAtom,
    s1: &Setting,
    s2: &Setting,
    psi: &TwoQubitState,
) -> Result<[[f64; 2]; 2]> {
    let mut k = [[0.0; 2]; 2];
    for (i, a) in Outcome::BOTH.iter().enumerate() {
        for (j, b) in Outcome::BOTH.iter().enumerate() {
            k[i][j] = model.kernel_joint(atom, s1, s2, psi, *a, *b)?;
        }
    }
    Ok(k)
}

#[allow(clippy::too_many_arguments)]
fn compare_party(
    base: &[[f64; 2]; 2],
    varied: &[[f64; 2]; 2],
    party: Party,
    remote: f64,
    atom_index: usize,
    phi1: f64,
    phi2: f64,
    cell: &mut CellResult,
) {
    // probability of `out` for `party`, optionally conditioned on the other
    // wing's outcome index
    let prob = |k: &[[f64; 2]; 2], out: usize, given: Option<usize>| -> Option<f64> {
        match (party, given) {
            (Party::Bob, None) => Some(k[0][out] + k[1][out]),
            (Party::Alice, None) => Some(k[out][0] + k[out][1]),
            (Party::Bob, Some(a)) => {
                let p_a = k[a][0] + k[a][1];
                (p_a > SUPPORT_THRESHOLD).then(|| k[a][out] / p_a)
            }
            (Party::Alice, Some(b)) => {
                let p_b = k[0][b] + k[1][b];
                (p_b > SUPPORT_THRESHOLD).then(|| k[out][b] / p_b)
            }
        }
    };
    for out in 0..2 {
        for given in [None, Some(0), Some(1)] {
            let (lhs, rhs) = match (prob(base, out, given), prob(varied, out, given)) {
                (Some(l), Some(r)) => (l, r),
                _ => {
                    cell.skipped += 1;
                    continue;
                }
            };
            let dev = (lhs - rhs).abs();
            cell.record(dev, || {
                let mut w = witness(phi1, phi2);
                w.atom = Some(atom_index);
                w.lhs = lhs;
                w.rhs = rhs;
                w.note = match given {
                    None => format!(
                        "{} marginal when remote setting moves to {remote}",
                        party.label()
                    ),
                    Some(g) => format!(
                        "{} conditional on other outcome {:+} when remote setting moves to {remote}",
                        party.label(),
                        if g == 0 { 1 } else { -1 },
                    ),
                };
                w
            });
        }
    }
}

/// Measurement independence: the density may not depend on the settings.
/// Atom multisets are compared across all grid pairs against the first pair,
/// slot-by-slot with a nearest-atom fallback.
pub fn check_measurement_independence(
    model: &BeableModel,
    psi: &TwoQubitState,
    grid: &SettingsGrid,
    opts: &AuditOptions,
) -> Result<AuditReport> {
    if model.is_density_setting_free() {
        return Ok(AuditReport::structural(
            condition::MEASUREMENT_INDEPENDENCE,
            opts.atom_match_tolerance,
            grid.spec().to_string(),
            "density builder ignores the settings",
        ));
    }
    let base_angle = grid.angles()[0];
    let s_base = Setting::plane(base_angle);
    let base = model.density(&s_base, &s_base, psi)?;
    let cells = par::indexed_map(grid.pair_count(), |idx| -> Result<CellResult> {
        let (phi1, phi2) = grid.pair(idx);
        let s1 = Setting::plane(phi1);
        let s2 = Setting::plane(phi2);
        let here = model.density(&s1, &s2, psi)?;
        let mut cell = CellResult::empty();
        match density_distance(&base, &here) {
            Some((dev, slot, detail)) => cell.record(dev, || {
                let mut w = witness(phi1, phi2);
                w.atom = Some(slot);
                w.note = format!(
                    "density at ({base_angle},{base_angle}) vs ({phi1},{phi2}): {detail}"
                );
                w
            }),
            None => {
                // representation mismatch: counted, reported as not-applicable
                cell.skipped += 1;
            }
        }
        Ok(cell)
    });
    let (max_dev, witnesses, skipped) = merge_cells(cells)?;
    if skipped > 0 {
        return Ok(AuditReport {
            condition: condition::MEASUREMENT_INDEPENDENCE.to_string(),
            verdict: Verdict::NotApplicable,
            max_deviation: f64::NAN,
            tolerance: opts.atom_match_tolerance,
            witnesses: Vec::new(),
            grid_spec: grid.spec().to_string(),
            skipped,
            note: Some("densities switch representation across settings".to_string()),
        });
    }
    Ok(AuditReport::from_sweep(
        condition::MEASUREMENT_INDEPENDENCE,
        opts.atom_match_tolerance,
        grid.spec().to_string(),
        max_dev,
        witnesses,
        skipped,
        None,
    ))
}

/// Distance between two densities: max over slots of the atom distance,
/// falling back per-atom to the nearest counterpart when slots disagree.
/// `None` when the representations are not comparable.
pub(crate) fn density_distance(a: &BeableDensity, b: &BeableDensity) -> Option<(f64, usize, String)> {
    match (a, b) {
        (BeableDensity::Grid { cells: ca }, BeableDensity::Grid { cells: cb }) => {
            if ca == cb {
                Some((0.0, 0, "identical grids".into()))
            } else {
                Some((f64::MAX, 0, format!("grid resolution {ca} vs {cb}")))
            }
        }
        (BeableDensity::Atoms(xs), BeableDensity::Atoms(ys)) => {
            if xs.len() != ys.len() {
                return Some((
                    f64::MAX,
                    0,
                    format!("atom count {} vs {}", xs.len(), ys.len()),
                ));
            }
            let mut worst = (0.0f64, 0usize, String::new());
            for (i, x) in xs.iter().enumerate() {
                let slot = atom_distance(x, &ys[i]);
                let nearest = ys
                    .iter()
                    .map(|y| atom_distance(x, y))
                    .fold(f64::MAX, f64::min);
                let d = slot.min(nearest);
                if d > worst.0 {
                    worst = (
                        d,
                        i,
                        format!(
                            "atom {i} moved (slot distance {slot}, nearest {nearest})"
                        ),
                    );
                }
            }
            Some(worst)
        }
        _ => None,
    }
}

fn atom_distance(a: &BeableAtom, b: &BeableAtom) -> f64 {
    let mut d = angle_difference(a.theta1, b.theta1)
        .abs()
        .max(angle_difference(a.theta2, b.theta2).abs());
    d = d.max((a.weight - b.weight).abs());
    if let (Some(la), Some(lb)) = (a.lambda, b.lambda) {
        d = d.max(angle_difference(la, lb).abs());
    }
    d
}

/// Support constraints from perfect anticorrelation: at equal settings the
/// same-outcome product P1(α|ω,n)·P2(α|ω,n) must vanish on every support
/// atom (joint kernels audited via P(α,α|ω,n,n)).
pub fn check_epr_support_constraints(
    model: &BeableModel,
    psi: &TwoQubitState,
    grid: &SettingsGrid,
    opts: &AuditOptions,
) -> Result<AuditReport> {
    let angles = grid.angles().to_vec();
    let cells = par::indexed_map(angles.len(), |i| -> Result<CellResult> {
        let phi = angles[i];
        let s = Setting::plane(phi);
        let mut cell = CellResult::empty();
        for (ai, atom) in model.density(&s, &s, psi)?.support_atoms().iter().enumerate() {
            for a in Outcome::BOTH {
                let product = match model.kernel_form() {
                    KernelForm::Factorized => {
                        model.kernel_factor(atom, Party::Alice, &s, psi, a)?
                            * model.kernel_factor(atom, Party::Bob, &s, psi, a)?
                    }
                    KernelForm::Joint => model.kernel_joint(atom, &s, &s, psi, a, a)?,
                };
                cell.record(product, || {
                    let mut w = witness(phi, phi);
                    w.atom = Some(ai);
                    w.outcomes = Some((a.value(), a.value()));
                    w.lhs = product;
                    w.rhs = 0.0;
                    w.note = "same-outcome product at equal settings".into();
                    w
                });
            }
        }
        Ok(cell)
    });
    let (max_dev, witnesses, skipped) = merge_cells(cells)?;
    Ok(AuditReport::from_sweep(
        condition::EPR_SUPPORT,
        opts.tolerance,
        grid.spec().to_string(),
        max_dev,
        witnesses,
        skipped,
        None,
    ))
}

/// Derived determinism: on every support atom, each party's conditional
/// outcome probabilities must sit in {0, 1}. With `equal_settings_only` the
/// sweep is restricted to n1 = n2, the regime the perfect-correlation
/// derivation governs.
pub fn check_determinism_on_support(
    model: &BeableModel,
    psi: &TwoQubitState,
    grid: &SettingsGrid,
    opts: &AuditOptions,
    equal_settings_only: bool,
) -> Result<AuditReport> {
    let pairs: Vec<(f64, f64)> = if equal_settings_only {
        grid.angles().iter().map(|&p| (p, p)).collect()
    } else {
        (0..grid.pair_count()).map(|i| grid.pair(i)).collect()
    };
    let cells = par::indexed_map(pairs.len(), |i| -> Result<CellResult> {
        let (phi1, phi2) = pairs[i];
        let s1 = Setting::plane(phi1);
        let s2 = Setting::plane(phi2);
        let mut cell = CellResult::empty();
        for (ai, atom) in model.density(&s1, &s2, psi)?.support_atoms().iter().enumerate() {
            for party in Party::BOTH {
                let p = model.party_marginal(atom, party, &s1, &s2, psi, Outcome::Plus)?;
                let dev = p.min((1.0 - p).abs()).abs();
                cell.record(dev, || {
                    let mut w = witness(phi1, phi2);
                    w.atom = Some(ai);
                    w.lhs = p;
                    w.rhs = p.round().clamp(0.0, 1.0);
                    w.note = format!("{} conditional not in {{0,1}}", party.label());
                    w
                });
            }
        }
        Ok(cell)
    });
    let (max_dev, witnesses, skipped) = merge_cells(cells)?;
    let note = equal_settings_only.then(|| "restricted to equal settings".to_string());
    Ok(AuditReport::from_sweep(
        condition::DETERMINISM,
        opts.determinism_tolerance,
        grid.spec().to_string(),
        max_dev,
        witnesses,
        skipped,
        note,
    ))
}

/// Local conditional means must stay inside [−1, 1] on every support atom.
pub fn check_bounded_means(
    model: &BeableModel,
    psi: &TwoQubitState,
    grid: &SettingsGrid,
    opts: &AuditOptions,
) -> Result<AuditReport> {
    let cells = par::indexed_map(grid.pair_count(), |idx| -> Result<CellResult> {
        let (phi1, phi2) = grid.pair(idx);
        let s1 = Setting::plane(phi1);
        let s2 = Setting::plane(phi2);
        let mut cell = CellResult::empty();
        for (ai, atom) in model.density(&s1, &s2, psi)?.support_atoms().iter().enumerate() {
            let means = model.conditional_means(atom, &s1, &s2, psi)?;
            let dev = (means.a_bar.abs() - 1.0).max(means.b_bar.abs() - 1.0).max(0.0);
            cell.record(dev, || {
                let mut w = witness(phi1, phi2);
                w.atom = Some(ai);
                w.lhs = means.a_bar;
                w.rhs = means.b_bar;
                w.note = "conditional means (Ā, B̄)".into();
                w
            });
        }
        Ok(cell)
    });
    let (max_dev, witnesses, skipped) = merge_cells(cells)?;
    Ok(AuditReport::from_sweep(
        condition::BOUNDED_MEANS,
        opts.tolerance,
        grid.spec().to_string(),
        max_dev,
        witnesses,
        skipped,
        None,
    ))
}

/// Model-vs-oracle agreement: the model's joint table against the Born rule
/// over the whole grid.
pub fn check_oracle_agreement(
    model: &BeableModel,
    psi: &TwoQubitState,
    grid: &SettingsGrid,
    opts: &AuditOptions,
) -> Result<AuditReport> {
    let cells = par::indexed_map(grid.pair_count(), |idx| -> Result<CellResult> {
        let (phi1, phi2) = grid.pair(idx);
        let s1 = Setting::plane(phi1);
        let s2 = Setting::plane(phi2);
        let table = model.joint_table(&s1, &s2, psi)?;
        let mut cell = CellResult::empty();
        for a in Outcome::BOTH {
            for b in Outcome::BOTH {
                let lhs = table[TwoQubitState::index_of(a, b)];
                let rhs = born_joint(psi, &s1, &s2, a, b);
                let dev = (lhs - rhs).abs();
                cell.record(dev, || {
                    let mut w = witness(phi1, phi2);
                    w.outcomes = Some((a.value(), b.value()));
                    w.lhs = lhs;
                    w.rhs = rhs;
                    w.note = "model joint vs Born joint".into();
                    w
                });
            }
        }
        Ok(cell)
    });
    let (max_dev, witnesses, skipped) = merge_cells(cells)?;
    Ok(AuditReport::from_sweep(
        condition::ORACLE_AGREEMENT,
        opts.tolerance,
        grid.spec().to_string(),
        max_dev,
        witnesses,
        skipped,
        None,
    ))
}

/// Naive state-level factorization P(α,β) = P(α|n1)·P(β|n2): compares the
/// Born joint against the product of its own marginals. Entangled states
/// fail this with concrete witnesses.
pub fn check_state_factorization(
    psi: &TwoQubitState,
    grid: &SettingsGrid,
    opts: &AuditOptions,
) -> AuditReport {
    let cells = par::indexed_map(grid.pair_count(), |idx| -> Result<CellResult> {
        let (phi1, phi2) = grid.pair(idx);
        let s1 = Setting::plane(phi1);
        let s2 = Setting::plane(phi2);
        let mut cell = CellResult::empty();
        for a in Outcome::BOTH {
            for b in Outcome::BOTH {
                let joint = born_joint(psi, &s1, &s2, a, b);
                let product = born_marginal_alice(psi, &s1, &s2, a)
                    * born_marginal_bob(psi, &s1, &s2, b);
                let dev = (joint - product).abs();
                cell.record(dev, || {
                    let mut w = witness(phi1, phi2);
                    w.outcomes = Some((a.value(), b.value()));
                    w.lhs = joint;
                    w.rhs = product;
                    w.note = "Born joint vs product of its own marginals".into();
                    w
                });
            }
        }
        Ok(cell)
    });
    let (max_dev, witnesses, skipped) =
        merge_cells(cells).expect("state factorization sweep cannot fail");
    AuditReport::from_sweep(
        condition::STATE_FACTORIZATION,
        opts.tolerance,
        grid.spec().to_string(),
        max_dev,
        witnesses,
        skipped,
        None,
    )
}

/// Run the whole audit family on one model.
pub fn full_audit(
    model: &BeableModel,
    psi: &TwoQubitState,
    grid: &SettingsGrid,
    opts: &AuditOptions,
) -> Result<Vec<AuditReport>> {
    Ok(vec![
        check_outcome_independence(model, psi, grid, opts)?,
        check_parameter_independence(model, psi, grid, opts)?,
        check_measurement_independence(model, psi, grid, opts)?,
        check_epr_support_constraints(model, psi, grid, opts)?,
        check_determinism_on_support(model, psi, grid, opts, true)?,
        check_bounded_means(model, psi, grid, opts)?,
        check_oracle_agreement(model, psi, grid, opts)?,
    ])
}

/// The verdict matrix the built-in models are expected to produce.
pub fn expected_verdicts(model_name: &str) -> Option<&'static [(&'static str, Verdict)]> {
    use condition::*;
    use Verdict::*;
    match model_name {
        "beltrametti-bugajski" => Some(&[
            (OUTCOME_INDEPENDENCE, Violated),
            (PARAMETER_INDEPENDENCE, Violated),
            (MEASUREMENT_INDEPENDENCE, Holds),
            (EPR_SUPPORT, Holds),
            (DETERMINISM, Violated),
            (BOUNDED_MEANS, Holds),
            (ORACLE_AGREEMENT, Holds),
        ]),
        "scully" | "argaman-dilorenzo" => Some(&[
            (OUTCOME_INDEPENDENCE, Holds),
            (PARAMETER_INDEPENDENCE, Holds),
            (MEASUREMENT_INDEPENDENCE, Violated),
            (EPR_SUPPORT, Holds),
            (DETERMINISM, Holds),
            (BOUNDED_MEANS, Holds),
            (ORACLE_AGREEMENT, Holds),
        ]),
        "sawtooth" => Some(&[
            (OUTCOME_INDEPENDENCE, Holds),
            (PARAMETER_INDEPENDENCE, Holds),
            (MEASUREMENT_INDEPENDENCE, Holds),
            (EPR_SUPPORT, Holds),
            (DETERMINISM, Holds),
            (BOUNDED_MEANS, Holds),
            (ORACLE_AGREEMENT, Violated),
        ]),
        _ => None,
    }
}

/// Random factorized cosine-response model: 1–4 atoms pinned to Alice's
/// analyzer with rational-π offsets, θ2 = θ1 + π, exact rational weights.
/// With `anticorrelated`, offsets are multiples of π so the model reproduces
/// the equal-settings anticorrelation; otherwise offsets are generic and the
/// model generally does not.
pub fn random_factorized_model<R: Rng>(rng: &mut R, anticorrelated: bool) -> BeableModel {
    let n_atoms = rng.random_range(1..=4usize);
    let raw: Vec<i64> = (0..n_atoms).map(|_| rng.random_range(1..=5i64)).collect();
    let total: i64 = raw.iter().sum();
    let atoms = raw
        .into_iter()
        .map(|wi| {
            let offset = if anticorrelated {
                Rational64::from_integer(rng.random_range(0..=1i64))
            } else {
                let q = rng.random_range(1..=6i64);
                let p = rng.random_range(0..2 * q);
                Rational64::new(p, q)
            };
            let theta1 = AngleExpr {
                c1: Rational64::from_integer(1),
                k: offset,
                ..AngleExpr::ZERO
            };
            let theta2 = AngleExpr {
                c1: Rational64::from_integer(1),
                k: offset + Rational64::from_integer(1),
                ..AngleExpr::ZERO
            };
            AtomSpec {
                weight: Rational64::new(wi, total),
                theta1,
                theta2,
            }
        })
        .collect();
    BeableModel::new(
        format!("random-pinned-{n_atoms}"),
        DensitySpec::Atoms(atoms),
        KernelPreset::CosineResponse,
    )
}

/// Does the model reproduce P(α, α | n, n) = 0 at every grid angle?
pub fn reproduces_equal_setting_anticorrelation(
    model: &BeableModel,
    psi: &TwoQubitState,
    grid: &SettingsGrid,
    tol: f64,
) -> Result<bool> {
    for &phi in grid.angles() {
        let s = Setting::plane(phi);
        for a in Outcome::BOTH {
            if model.joint(&s, &s, psi, a, a)? > tol {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{argaman_dilorenzo, beltrametti_bugajski, sawtooth_local, scully};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coarse_grid() -> SettingsGrid {
        SettingsGrid::planar(PI / 6.0).unwrap()
    }

    fn report_for<'a>(reports: &'a [AuditReport], name: &str) -> &'a AuditReport {
        reports
            .iter()
            .find(|r| r.condition == name)
            .unwrap_or_else(|| panic!("no report for {name}"))
    }

    #[test]
    fn grid_step_must_divide_tau() {
        assert!(SettingsGrid::planar(PI / 18.0).is_ok());
        assert_eq!(SettingsGrid::default_planar().len(), 36);
        assert!(matches!(
            SettingsGrid::planar(1.0),
            Err(Error::InvalidGridStep { .. })
        ));
        assert!(SettingsGrid::planar(-0.1).is_err());
    }

    #[test]
    fn factorized_models_pass_oi_pi_with_zero_deviation() {
        let psi = TwoQubitState::singlet();
        let grid = coarse_grid();
        let opts = AuditOptions::default();
        for model in [scully(), argaman_dilorenzo(), sawtooth_local()] {
            let oi = check_outcome_independence(&model, &psi, &grid, &opts).unwrap();
            assert_eq!(oi.verdict, Verdict::Holds, "{}", model.name());
            assert_eq!(oi.max_deviation, 0.0);
            let pi = check_parameter_independence(&model, &psi, &grid, &opts).unwrap();
            assert_eq!(pi.verdict, Verdict::Holds);
            assert_eq!(pi.max_deviation, 0.0);
        }
    }

    #[test]
    fn bb_violates_oi_and_pi_but_keeps_mi() {
        let psi = TwoQubitState::singlet();
        let grid = coarse_grid();
        let opts = AuditOptions::default();
        let model = beltrametti_bugajski();

        let oi = check_outcome_independence(&model, &psi, &grid, &opts).unwrap();
        assert_eq!(oi.verdict, Verdict::Violated);
        assert!(oi.max_deviation > 0.4, "got {}", oi.max_deviation);
        assert!(!oi.witnesses.is_empty());

        let pi = check_parameter_independence(&model, &psi, &grid, &opts).unwrap();
        assert_eq!(pi.verdict, Verdict::Violated);
        assert!(!pi.witnesses.is_empty());

        let mi = check_measurement_independence(&model, &psi, &grid, &opts).unwrap();
        assert_eq!(mi.verdict, Verdict::Holds);
        assert_eq!(mi.max_deviation, 0.0);
    }

    #[test]
    fn pinned_densities_violate_mi() {
        let psi = TwoQubitState::singlet();
        let grid = coarse_grid();
        let opts = AuditOptions::default();
        for model in [scully(), argaman_dilorenzo()] {
            let mi = check_measurement_independence(&model, &psi, &grid, &opts).unwrap();
            assert_eq!(mi.verdict, Verdict::Violated, "{}", model.name());
            assert!(!mi.witnesses.is_empty());
        }
        let mi =
            check_measurement_independence(&sawtooth_local(), &psi, &grid, &opts).unwrap();
        assert_eq!(mi.verdict, Verdict::Holds);
        assert_eq!(mi.max_deviation, 0.0);
    }

    #[test]
    fn epr_support_holds_for_builtins_and_catches_flat_responses() {
        let psi = TwoQubitState::singlet();
        let grid = coarse_grid();
        let opts = AuditOptions::default();
        for model in [
            beltrametti_bugajski(),
            scully(),
            argaman_dilorenzo(),
            sawtooth_local(),
        ] {
            let r = check_epr_support_constraints(&model, &psi, &grid, &opts).unwrap();
            assert_eq!(r.verdict, Verdict::Holds, "{}", model.name());
        }

        // quarter-turn pinning makes both responses flat ½ → product ¼
        let flat = BeableModel::new(
            "flat-half",
            DensitySpec::Atoms(vec![AtomSpec {
                weight: Rational64::from_integer(1),
                theta1: "phi1 + 1/2 pi".parse().unwrap(),
                theta2: "phi2 + 1/2 pi".parse().unwrap(),
            }]),
            KernelPreset::CosineResponse,
        );
        let r = check_epr_support_constraints(&flat, &psi, &grid, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        assert!((r.max_deviation - 0.25).abs() < 1e-12);
    }

    #[test]
    fn determinism_verdicts() {
        let psi = TwoQubitState::singlet();
        let grid = coarse_grid();
        let opts = AuditOptions::default();

        let r = check_determinism_on_support(&scully(), &psi, &grid, &opts, true).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);

        let r =
            check_determinism_on_support(&beltrametti_bugajski(), &psi, &grid, &opts, true)
                .unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        assert!((r.max_deviation - 0.5).abs() < 1e-12);

        // unequal settings: Bob's response is generally not deterministic
        let r = check_determinism_on_support(&scully(), &psi, &grid, &opts, false).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        let w = &r.witnesses[0];
        assert!(w.note.contains("bob"), "worst witness: {w:?}");
    }

    #[test]
    fn full_audit_matrix() {
        let psi = TwoQubitState::singlet();
        let grid = coarse_grid();
        let opts = AuditOptions::default();
        for name in crate::model::BUILTIN_NAMES {
            let model = crate::model::builtin(name).unwrap();
            let reports = full_audit(&model, &psi, &grid, &opts).unwrap();
            for (cond, expected) in expected_verdicts(name).unwrap() {
                let got = report_for(&reports, cond).verdict;
                assert_eq!(got, *expected, "{name}: {cond}");
            }
        }
    }

    #[test]
    fn state_factorization_fails_for_singlet_and_holds_for_products() {
        let grid = coarse_grid();
        let opts = AuditOptions::default();
        let r = check_state_factorization(&TwoQubitState::singlet(), &grid, &opts);
        assert_eq!(r.verdict, Verdict::Violated);
        assert!(r.max_deviation >= 0.25 - 1e-12);
        assert!(!r.witnesses.is_empty());

        let product = TwoQubitState::z_product(Outcome::Plus, Outcome::Minus);
        let r = check_state_factorization(&product, &grid, &opts);
        assert_eq!(r.verdict, Verdict::Holds);
    }

    #[test]
    fn random_anticorrelated_models_are_deterministic_on_support() {
        let psi = TwoQubitState::singlet();
        let grid = coarse_grid();
        let opts = AuditOptions::default();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut passing = 0usize;
        for i in 0..40 {
            let model = random_factorized_model(&mut rng, i % 2 == 0);
            if !reproduces_equal_setting_anticorrelation(&model, &psi, &grid, 1e-9).unwrap() {
                continue;
            }
            passing += 1;
            let r = check_determinism_on_support(&model, &psi, &grid, &opts, true).unwrap();
            assert_eq!(r.verdict, Verdict::Holds, "{}", model.name());
        }
        assert!(passing >= 10, "only {passing} generated models passed the filter");
    }

    #[test]
    fn generic_offsets_fail_the_anticorrelation_filter() {
        let psi = TwoQubitState::singlet();
        let grid = coarse_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut rejected = 0usize;
        for _ in 0..20 {
            let model = random_factorized_model(&mut rng, false);
            if !reproduces_equal_setting_anticorrelation(&model, &psi, &grid, 1e-9).unwrap() {
                rejected += 1;
            }
        }
        assert!(rejected >= 15, "only {rejected} of 20 were rejected");
    }

    #[test]
    fn witnesses_capped_at_ten() {
        let psi = TwoQubitState::singlet();
        let grid = SettingsGrid::default_planar();
        let opts = AuditOptions::default();
        let r = check_oracle_agreement(&sawtooth_local(), &psi, &grid, &opts).unwrap();
        assert_eq!(r.verdict, Verdict::Violated);
        assert!(r.witnesses.len() <= 10);
        assert!(!r.witnesses.is_empty());
        // witnesses are sorted worst-first
        for pair in r.witnesses.windows(2) {
            assert!(pair[0].deviation >= pair[1].deviation);
        }
    }
}
