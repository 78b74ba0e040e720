//! Report assembly and serialization (JSON and CSV). All output is
//! deterministic: fixed field order, shortest-round-trip float formatting,
//! no hash-map iteration anywhere on the write path.

use serde::Serialize;

use crate::audit::{
    check_oracle_agreement, expected_verdicts, full_audit, AuditOptions, AuditReport,
    SettingsGrid, Verdict,
};
use crate::chsh::ChshSpec;
use crate::error::Result;
use crate::fine::FineJoint;
use crate::model::{BeableModel, KernelPreset};
use crate::quantum::{born_joint, correlation, Outcome, Setting, TwoQubitState};

/// Comparison of the derived anticorrelated joint against the correlated
/// variant obtained by flipping Bob's response sign. The derived form is the
/// one consistent with the oracle; the flipped ("printed") form is kept in
/// reports to document the discrepancy.
#[derive(Debug, Clone, Serialize)]
pub struct PrintedSignNote {
    pub derived_form: String,
    pub printed_form: String,
    pub derived_max_deviation_from_oracle: f64,
    pub printed_max_deviation_from_oracle: f64,
}

/// One full audit run over a model.
#[derive(Debug, Clone, Serialize)]
pub struct AuditRun {
    pub model_name: String,
    pub seed: u64,
    pub grid_spec: String,
    pub reports: Vec<AuditReport>,
    /// Conditions whose verdict differs from the declared expectation for
    /// this model (empty when nothing is declared).
    pub expectation_mismatches: Vec<String>,
    pub printed_sign: Option<PrintedSignNote>,
}

/// Run the audit family and assemble the run report.
pub fn run_audit(
    model: &BeableModel,
    psi: &TwoQubitState,
    grid: &SettingsGrid,
    opts: &AuditOptions,
    seed: u64,
) -> Result<AuditRun> {
    let reports = full_audit(model, psi, grid, opts)?;

    let mut mismatches = Vec::new();
    if let Some(expected) = expected_verdicts(model.name()) {
        for (cond, want) in expected {
            if let Some(got) = reports.iter().find(|r| r.condition == *cond) {
                if got.verdict != *want {
                    mismatches.push(cond.to_string());
                }
            }
        }
    }

    let printed_sign = if model.kernel_preset() == KernelPreset::CosineResponse
        && !model.printed_sign()
    {
        let derived = check_oracle_agreement(model, psi, grid, opts)?;
        let flipped = model.clone().with_printed_sign();
        let printed = check_oracle_agreement(&flipped, psi, grid, opts)?;
        Some(PrintedSignNote {
            derived_form: "(1 - ab cos(phi1 - phi2))/4".into(),
            printed_form: "(1 + ab cos(phi1 - phi2))/4".into(),
            derived_max_deviation_from_oracle: derived.max_deviation,
            printed_max_deviation_from_oracle: printed.max_deviation,
        })
    } else {
        None
    };

    Ok(AuditRun {
        model_name: model.name().to_string(),
        seed,
        grid_spec: grid.spec().to_string(),
        reports,
        expectation_mismatches: mismatches,
        printed_sign,
    })
}

pub fn verdict_str(v: Verdict) -> &'static str {
    match v {
        Verdict::Holds => "holds",
        Verdict::Violated => "violated",
        Verdict::NotApplicable => "not-applicable",
    }
}

/// JSON document for an audit run.
pub fn audit_json(run: &AuditRun) -> String {
    let mut s = serde_json::to_string_pretty(run).expect("audit run serializes");
    s.push('\n');
    s
}

/// CSV summary: model × condition → verdict.
pub fn audit_csv(run: &AuditRun) -> String {
    let mut out = String::from("model,condition,verdict,max_deviation,tolerance\n");
    for r in &run.reports {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            run.model_name,
            r.condition,
            verdict_str(r.verdict),
            r.max_deviation,
            r.tolerance
        ));
    }
    out
}

/// One row of the correlation table E(Δ).
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationRow {
    pub delta_radians: f64,
    pub e_model: f64,
    pub e_quantum: f64,
    pub abs_difference: f64,
}

/// E(Δ) for model and oracle, Δ running over the grid angles
/// (Alice fixed at 0, Bob at Δ).
pub fn correlation_table(
    model: &BeableModel,
    psi: &TwoQubitState,
    grid: &SettingsGrid,
) -> Result<Vec<CorrelationRow>> {
    let alice = Setting::plane(0.0);
    grid.angles()
        .iter()
        .map(|&delta| {
            let bob = Setting::plane(delta);
            let e_model = model.correlation(&alice, &bob, psi)?;
            let e_quantum = correlation(psi, &alice, &bob);
            Ok(CorrelationRow {
                delta_radians: delta,
                e_model,
                e_quantum,
                abs_difference: (e_model - e_quantum).abs(),
            })
        })
        .collect()
}

pub fn correlation_csv(rows: &[CorrelationRow]) -> String {
    let mut out = String::from("delta_radians,E_model,E_quantum,abs_difference\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.delta_radians, r.e_model, r.e_quantum, r.abs_difference
        ));
    }
    out
}

pub fn correlation_json(model_name: &str, rows: &[CorrelationRow]) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        model_name: &'a str,
        rows: &'a [CorrelationRow],
    }
    let mut s = serde_json::to_string_pretty(&Doc {
        model_name,
        rows,
    })
    .expect("correlation table serializes");
    s.push('\n');
    s
}

/// One CHSH evaluation row.
#[derive(Debug, Clone, Serialize)]
pub struct ChshRow {
    pub source: String,
    pub a: f64,
    pub a_prime: f64,
    pub b: f64,
    pub b_prime: f64,
    pub s: f64,
}

impl ChshRow {
    pub fn new(source: impl Into<String>, spec: &ChshSpec, s: f64) -> ChshRow {
        let angle = |st: &Setting| st.plane_angle().unwrap_or(f64::NAN);
        ChshRow {
            source: source.into(),
            a: angle(&spec.a),
            a_prime: angle(&spec.a_prime),
            b: angle(&spec.b),
            b_prime: angle(&spec.b_prime),
            s,
        }
    }
}

pub fn chsh_csv(rows: &[ChshRow]) -> String {
    let mut out = String::from("source,a,a_prime,b,b_prime,S\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.source, r.a, r.a_prime, r.b, r.b_prime, r.s
        ));
    }
    out
}

pub fn chsh_json(rows: &[ChshRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("chsh rows serialize");
    s.push('\n');
    s
}

/// JSON document for a fine-construction run: the table plus both marginal
/// checks.
pub fn fine_json(
    model_name: &str,
    fj: &FineJoint,
    vs_model: &crate::fine::FineMarginalReport,
    vs_quantum: &crate::fine::FineMarginalReport,
) -> String {
    #[derive(Serialize)]
    struct Doc<'a> {
        model_name: &'a str,
        fine_joint: &'a FineJoint,
        marginals_vs_model: &'a crate::fine::FineMarginalReport,
        marginals_vs_quantum: &'a crate::fine::FineMarginalReport,
    }
    let mut s = serde_json::to_string_pretty(&Doc {
        model_name,
        fine_joint: fj,
        marginals_vs_model: vs_model,
        marginals_vs_quantum: vs_quantum,
    })
    .expect("fine doc serializes");
    s.push('\n');
    s
}

/// 16-row CSV of a four-observable joint table.
pub fn fine_csv(fj: &FineJoint) -> String {
    let mut out = String::from("A1,A2,B1,B2,probability\n");
    for (idx, p) in fj.table.iter().enumerate() {
        let (a1, a2, b1, b2) = FineJoint::outcomes_at(idx);
        out.push_str(&format!("{a1:+},{a2:+},{b1:+},{b2:+},{p}\n"));
    }
    out
}

/// Oracle joint-probability dump over the grid.
#[derive(Debug, Clone, Serialize)]
pub struct QuantumRow {
    pub phi1: f64,
    pub phi2: f64,
    pub a: i8,
    pub b: i8,
    pub probability: f64,
}

pub fn quantum_table(psi: &TwoQubitState, grid: &SettingsGrid) -> Vec<QuantumRow> {
    let mut rows = Vec::new();
    for &phi1 in grid.angles() {
        for &phi2 in grid.angles() {
            let s1 = Setting::plane(phi1);
            let s2 = Setting::plane(phi2);
            for a in Outcome::BOTH {
                for b in Outcome::BOTH {
                    rows.push(QuantumRow {
                        phi1,
                        phi2,
                        a: a.value(),
                        b: b.value(),
                        probability: born_joint(psi, &s1, &s2, a, b),
                    });
                }
            }
        }
    }
    rows
}

pub fn quantum_csv(rows: &[QuantumRow]) -> String {
    let mut out = String::from("phi1,phi2,a,b,probability\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{:+},{:+},{}\n",
            r.phi1, r.phi2, r.a, r.b, r.probability
        ));
    }
    out
}

pub fn quantum_json(rows: &[QuantumRow]) -> String {
    let mut s = serde_json::to_string_pretty(rows).expect("quantum rows serialize");
    s.push('\n');
    s
}
