//! Sensitivity of the optimal allocation to the utility weights.
//!
//! Three routes to the same 6x7 matrix of partials `d(decision)/d(gamma_i)`:
//!
//! - [`analytic_jacobian`] differentiates the closed-form solution directly;
//! - [`tabulated_jacobian`] evaluates the reference table of derivative
//!   formulas the model ships with, transcribed verbatim. It disagrees with
//!   the analytic route in seven cells, and is kept unfixed so the
//!   disagreement stays reproducible;
//! - [`finite_difference_jacobian`] central-differences the closed-form
//!   solver and adjudicates between the other two.
//!
//! [`verify_claims`] turns the model's qualitative predictions (signs and
//! equalities of matrix cells) into executable checks, and
//! [`discrepancy_report`] compares all three matrices cell by cell.

use crate::error::Error;
use crate::model::{
    utility_weight_sum, validate, Decision, EconomyParams, PreferenceWeights, Weight,
};
use std::fmt;

/// Default relative step for central finite differences.
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Absolute threshold below which a matrix entry counts as zero when
/// deriving a [`SignPattern`]. Exact zeros come from structurally absent
/// terms, not cancellation.
pub const SIGN_ZERO_TOL: f64 = 1e-12;

/// A cell is flagged as discrepant when
/// `|analytic - tabulated| > DISCREPANCY_TOL * max(1, |analytic|)`.
pub const DISCREPANCY_TOL: f64 = 1e-8;

/// 6x7 matrix of partial derivatives of decisions with respect to weights,
/// rows ordered `c, n, e, p, s, q`, columns `gamma1..gamma7`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityMatrix {
    entries: [[f64; 7]; 6],
    /// Shorthand `w / S^2` shared by most cells.
    beta: f64,
}

impl SensitivityMatrix {
    pub fn from_entries(entries: [[f64; 7]; 6], beta: f64) -> Self {
        Self { entries, beta }
    }

    pub fn get(&self, decision: Decision, weight: Weight) -> f64 {
        self.entries[decision.row()][weight.col()]
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn entries(&self) -> &[[f64; 7]; 6] {
        &self.entries
    }
}

/// Sign of a matrix entry under the [`SIGN_ZERO_TOL`] zero threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(value: f64) -> Self {
        if value.abs() <= SIGN_ZERO_TOL {
            Sign::Zero
        } else if value > 0.0 {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn glyph(self) -> char {
        match self {
            Sign::Negative => '-',
            Sign::Zero => '0',
            Sign::Positive => '+',
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.glyph())
    }
}

/// Elementwise sign of a sensitivity matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SignPattern {
    pub signs: [[Sign; 7]; 6],
}

impl SignPattern {
    pub fn get(&self, decision: Decision, weight: Weight) -> Sign {
        self.signs[decision.row()][weight.col()]
    }
}

/// Elementwise sign with `|x| <= SIGN_ZERO_TOL` mapping to zero.
pub fn sign_pattern(matrix: &SensitivityMatrix) -> SignPattern {
    let mut signs = [[Sign::Zero; 7]; 6];
    for d in Decision::ALL {
        for w in Weight::ALL {
            signs[d.row()][w.col()] = Sign::of(matrix.get(d, w));
        }
    }
    SignPattern { signs }
}

/// Exact partial derivatives of the closed forms.
///
/// With `S` the utility weight sum, `a = gamma2 + gamma5 - gamma3` and
/// `beta = w / S^2`:
///
/// - spending rows `x in {c, s, p, q}` with own weight `g_x`:
///   `dx/dg_x = w (S - g_x) / S^2`, `dx/dgamma3 = 0`, and
///   `dx/dg_j = -g_x beta` for every other column;
/// - fertility row: `dn/dgamma2 = dn/dgamma5 = (S - a) / (tau S^2)`,
///   `dn/dgamma3 = -1 / (tau S)`, `dn/dg_j = -a / (tau S^2)` otherwise;
/// - education row: `de/dgamma3 = w tau (gamma2 + gamma5) / a^2`,
///   `de/dgamma2 = de/dgamma5 = -gamma3 w tau / a^2`, zero otherwise.
pub fn analytic_jacobian(
    prefs: &PreferenceWeights,
    econ: &EconomyParams,
) -> Result<SensitivityMatrix, Error> {
    let class = validate(prefs, econ)?;
    if !class.is_interior() {
        return Err(Error::NotInterior(class));
    }
    let s = utility_weight_sum(prefs).0;
    let a = class.margin;
    let w = econ.wage;
    let tau = econ.tau;
    let beta = w / (s * s);

    let mut entries = [[0.0; 7]; 6];

    // Spending rows: one shared off-diagonal value per row keeps the
    // symmetry of impacts exact.
    for d in [
        Decision::Consumption,
        Decision::Savings,
        Decision::Health,
        Decision::Pension,
    ] {
        let own = d.own_weight();
        let g_x = prefs.weight(own);
        let cross = -(g_x * w) / (s * s);
        for col in Weight::ALL {
            entries[d.row()][col.col()] = if col == own {
                w * (s - g_x) / (s * s)
            } else if col == Weight::Education {
                0.0
            } else {
                cross
            };
        }
    }

    // Fertility row: the four non-child columns share one expression, so
    // their equality is exact rather than approximate.
    let n_own = (s - a) / (tau * s * s);
    let n_cross = -a / (tau * s * s);
    for col in Weight::ALL {
        entries[Decision::Children.row()][col.col()] = match col {
            Weight::Children | Weight::FutureEarnings => n_own,
            Weight::Education => -1.0 / (tau * s),
            _ => n_cross,
        };
    }

    // Education row.
    let e_own = w * tau * (prefs.gamma2 + prefs.gamma5) / (a * a);
    let e_cross = -(prefs.gamma3 * w * tau) / (a * a);
    for col in Weight::ALL {
        entries[Decision::Education.row()][col.col()] = match col {
            Weight::Education => e_own,
            Weight::Children | Weight::FutureEarnings => e_cross,
            _ => 0.0,
        };
    }

    Ok(SensitivityMatrix { entries, beta })
}

/// The reference tabulation of the same derivatives, evaluated verbatim.
///
/// It differs from [`analytic_jacobian`] in exactly seven cells: the four
/// own-weight spending diagonals read `(S - (g_x + gamma3)) beta`, the
/// `(n, gamma2)` and `(n, gamma5)` cells read `(S - (gamma2 + gamma5)) /
/// (tau S^2)`, and `(e, gamma3)` reads `w tau (1 + gamma3) / a^2`. The
/// transcription is deliberately not corrected; see [`discrepancy_report`].
pub fn tabulated_jacobian(
    prefs: &PreferenceWeights,
    econ: &EconomyParams,
) -> Result<SensitivityMatrix, Error> {
    let class = validate(prefs, econ)?;
    if !class.is_interior() {
        return Err(Error::NotInterior(class));
    }
    let s = utility_weight_sum(prefs).0;
    let a = class.margin;
    let w = econ.wage;
    let tau = econ.tau;
    let beta = w / (s * s);

    let mut entries = [[0.0; 7]; 6];

    for d in [
        Decision::Consumption,
        Decision::Savings,
        Decision::Health,
        Decision::Pension,
    ] {
        let own = d.own_weight();
        let g_x = prefs.weight(own);
        let cross = -(beta * g_x);
        for col in Weight::ALL {
            entries[d.row()][col.col()] = if col == own {
                (s - (g_x + prefs.gamma3)) * beta
            } else if col == Weight::Education {
                0.0
            } else {
                cross
            };
        }
    }

    let n_own = (s - (prefs.gamma2 + prefs.gamma5)) / (tau * s * s);
    let n_cross = -a / (tau * s * s);
    for col in Weight::ALL {
        entries[Decision::Children.row()][col.col()] = match col {
            Weight::Children | Weight::FutureEarnings => n_own,
            Weight::Education => -1.0 / (tau * s),
            _ => n_cross,
        };
    }

    let e_own = w * tau * (1.0 + prefs.gamma3) / (a * a);
    let e_cross = -(w * prefs.gamma3 * tau) / (a * a);
    for col in Weight::ALL {
        entries[Decision::Education.row()][col.col()] = match col {
            Weight::Education => e_own,
            Weight::Children | Weight::FutureEarnings => e_cross,
            _ => 0.0,
        };
    }

    Ok(SensitivityMatrix { entries, beta })
}

/// Central finite differences of the closed-form solver. Columns whose
/// perturbed instance leaves the admissible Interior region are marked
/// unavailable instead of aborting the whole matrix.
#[derive(Debug, Clone)]
pub struct FdJacobian {
    cells: [[Option<f64>; 7]; 6],
    /// Reason the column is unavailable, per weight, if any.
    column_errors: [Option<String>; 7],
    step: f64,
}

impl FdJacobian {
    pub fn get(&self, decision: Decision, weight: Weight) -> Option<f64> {
        self.cells[decision.row()][weight.col()]
    }

    pub fn column_error(&self, weight: Weight) -> Option<&str> {
        self.column_errors[weight.col()].as_deref()
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn fully_available(&self) -> bool {
        self.column_errors.iter().all(|e| e.is_none())
    }
}

/// Central differences of the closed form in each weight, with per-weight
/// absolute step `h * max(1, |gamma_i|)`.
///
/// The base instance must be admissible and Interior. Probe points relax
/// the discount cap (a weight of exactly 1 can still be differenced both
/// ways) but keep positivity and the Interior margin; a column whose probe
/// violates those is marked unavailable rather than failing the matrix.
pub fn finite_difference_jacobian(
    prefs: &PreferenceWeights,
    econ: &EconomyParams,
    rel_step: f64,
) -> Result<FdJacobian, Error> {
    if !rel_step.is_finite() || rel_step <= 0.0 {
        return Err(Error::InvalidStep { value: rel_step });
    }
    let class = validate(prefs, econ)?;
    if !class.is_interior() {
        return Err(Error::NotInterior(class));
    }

    let mut cells = [[None; 7]; 6];
    let mut column_errors: [Option<String>; 7] = Default::default();

    for w in Weight::ALL {
        let g = prefs.weight(w);
        let h = rel_step * g.abs().max(1.0);
        let plus = crate::model::solve_probe(&prefs.with_weight(w, g + h), econ);
        let minus = crate::model::solve_probe(&prefs.with_weight(w, g - h), econ);
        match (plus, minus) {
            (Ok(hi), Ok(lo)) => {
                for d in Decision::ALL {
                    cells[d.row()][w.col()] =
                        Some((hi.decision(d) - lo.decision(d)) / (2.0 * h));
                }
            }
            (Err(e), _) | (_, Err(e)) => {
                column_errors[w.col()] = Some(e.to_string());
            }
        }
    }

    Ok(FdJacobian {
        cells,
        column_errors,
        step: rel_step,
    })
}

/// Identifier for one executable claim about the sensitivity matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClaimId {
    /// Raising any weight raises the decision it multiplies.
    OwnWeightRaisesOwnDecision,
    /// The education weight leaves c, s, p and q untouched.
    EducationWeightNeutralElsewhere,
    /// Education spending depends only on gamma2, gamma3 and gamma5.
    EducationDependsOnlyOnChildWeights,
    /// dn/dgamma1 = dn/dgamma4 = dn/dgamma6, all negative.
    EqualFertilityTradeoff,
    /// A higher pension weight lowers consumption, health spending and
    /// fertility.
    PensionWeightCrowdsOutSpending,
    /// A higher pension weight lowers savings.
    PensionWeightCrowdsOutSavings,
    /// A higher education weight lowers fertility.
    EducationWeightLowersFertility,
    /// A higher child-quantity weight lowers per-child education spending.
    ChildWeightLowersEducation,
    /// A higher future-earnings weight lowers c, s, p and q and raises n.
    FutureEarningsShiftTowardChildren,
}

impl ClaimId {
    pub const ALL: [ClaimId; 9] = [
        ClaimId::OwnWeightRaisesOwnDecision,
        ClaimId::EducationWeightNeutralElsewhere,
        ClaimId::EducationDependsOnlyOnChildWeights,
        ClaimId::EqualFertilityTradeoff,
        ClaimId::PensionWeightCrowdsOutSpending,
        ClaimId::PensionWeightCrowdsOutSavings,
        ClaimId::EducationWeightLowersFertility,
        ClaimId::ChildWeightLowersEducation,
        ClaimId::FutureEarningsShiftTowardChildren,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ClaimId::OwnWeightRaisesOwnDecision => "own_weight_raises_own_decision",
            ClaimId::EducationWeightNeutralElsewhere => "education_weight_neutral_elsewhere",
            ClaimId::EducationDependsOnlyOnChildWeights => {
                "education_depends_only_on_child_weights"
            }
            ClaimId::EqualFertilityTradeoff => "equal_fertility_tradeoff",
            ClaimId::PensionWeightCrowdsOutSpending => "pension_weight_crowds_out_spending",
            ClaimId::PensionWeightCrowdsOutSavings => "pension_weight_crowds_out_savings",
            ClaimId::EducationWeightLowersFertility => "education_weight_lowers_fertility",
            ClaimId::ChildWeightLowersEducation => "child_weight_lowers_education",
            ClaimId::FutureEarningsShiftTowardChildren => "future_earnings_shift_toward_children",
        }
    }
}

/// One verdict with the matrix cells that justify it.
#[derive(Debug, Clone)]
pub struct ClaimCheck {
    pub id: ClaimId,
    pub passed: bool,
    /// Named witness values backing the verdict.
    pub witnesses: Vec<(String, f64)>,
}

/// Verdicts for all nine structural claims, each reproducible from the
/// analytic matrix alone.
#[derive(Debug, Clone)]
pub struct ClaimReport {
    pub checks: Vec<ClaimCheck>,
}

impl ClaimReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, id: ClaimId) -> &ClaimCheck {
        self.checks
            .iter()
            .find(|c| c.id == id)
            .expect("all claims present")
    }
}

fn witness(decision: Decision, weight: Weight, value: f64) -> (String, f64) {
    (format!("d{}/d{}", decision.symbol(), weight.key()), value)
}

/// Evaluates all nine sign/equality claims on the analytic matrix.
pub fn verify_claims(
    prefs: &PreferenceWeights,
    econ: &EconomyParams,
) -> Result<ClaimReport, Error> {
    let m = analytic_jacobian(prefs, econ)?;
    let mut checks = Vec::with_capacity(ClaimId::ALL.len());

    for id in ClaimId::ALL {
        let mut witnesses = Vec::new();
        let passed = match id {
            ClaimId::OwnWeightRaisesOwnDecision => {
                let mut ok = true;
                for d in Decision::ALL {
                    let v = m.get(d, d.own_weight());
                    witnesses.push(witness(d, d.own_weight(), v));
                    ok &= v > 0.0;
                }
                ok
            }
            ClaimId::EducationWeightNeutralElsewhere => {
                let mut ok = true;
                for d in [
                    Decision::Consumption,
                    Decision::Savings,
                    Decision::Health,
                    Decision::Pension,
                ] {
                    let v = m.get(d, Weight::Education);
                    witnesses.push(witness(d, Weight::Education, v));
                    ok &= v.abs() <= SIGN_ZERO_TOL;
                }
                ok
            }
            ClaimId::EducationDependsOnlyOnChildWeights => {
                let mut ok = true;
                for w in [
                    Weight::Consumption,
                    Weight::Health,
                    Weight::Savings,
                    Weight::Pension,
                ] {
                    let v = m.get(Decision::Education, w);
                    witnesses.push(witness(Decision::Education, w, v));
                    ok &= v.abs() <= SIGN_ZERO_TOL;
                }
                ok
            }
            ClaimId::EqualFertilityTradeoff => {
                let v1 = m.get(Decision::Children, Weight::Consumption);
                let v4 = m.get(Decision::Children, Weight::Health);
                let v6 = m.get(Decision::Children, Weight::Savings);
                witnesses.push(witness(Decision::Children, Weight::Consumption, v1));
                witnesses.push(witness(Decision::Children, Weight::Health, v4));
                witnesses.push(witness(Decision::Children, Weight::Savings, v6));
                // equality is exact, not within tolerance
                v1 == v4 && v4 == v6 && v1 < 0.0
            }
            ClaimId::PensionWeightCrowdsOutSpending => {
                let mut ok = true;
                for d in [Decision::Consumption, Decision::Health, Decision::Children] {
                    let v = m.get(d, Weight::Pension);
                    witnesses.push(witness(d, Weight::Pension, v));
                    ok &= v < 0.0;
                }
                ok
            }
            ClaimId::PensionWeightCrowdsOutSavings => {
                let v = m.get(Decision::Savings, Weight::Pension);
                witnesses.push(witness(Decision::Savings, Weight::Pension, v));
                v < 0.0
            }
            ClaimId::EducationWeightLowersFertility => {
                let v = m.get(Decision::Children, Weight::Education);
                witnesses.push(witness(Decision::Children, Weight::Education, v));
                v < 0.0
            }
            ClaimId::ChildWeightLowersEducation => {
                let v = m.get(Decision::Education, Weight::Children);
                witnesses.push(witness(Decision::Education, Weight::Children, v));
                v < 0.0
            }
            ClaimId::FutureEarningsShiftTowardChildren => {
                let mut ok = true;
                for d in [
                    Decision::Consumption,
                    Decision::Savings,
                    Decision::Health,
                    Decision::Pension,
                ] {
                    let v = m.get(d, Weight::FutureEarnings);
                    witnesses.push(witness(d, Weight::FutureEarnings, v));
                    ok &= v < 0.0;
                }
                let vn = m.get(Decision::Children, Weight::FutureEarnings);
                witnesses.push(witness(Decision::Children, Weight::FutureEarnings, vn));
                ok && vn > 0.0
            }
        };
        checks.push(ClaimCheck {
            id,
            passed,
            witnesses,
        });
    }

    Ok(ClaimReport { checks })
}

/// Which formula the finite-difference value supports in a flagged cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Adjudication {
    SupportsAnalytic,
    SupportsTabulated,
    Inconclusive,
    Unavailable,
}

impl fmt::Display for Adjudication {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Adjudication::SupportsAnalytic => f.write_str("fd supports analytic"),
            Adjudication::SupportsTabulated => f.write_str("fd supports tabulated"),
            Adjudication::Inconclusive => f.write_str("fd inconclusive"),
            Adjudication::Unavailable => f.write_str("fd unavailable"),
        }
    }
}

/// One cell of the three-way comparison.
#[derive(Debug, Clone)]
pub struct DiscrepancyCell {
    pub decision: Decision,
    pub weight: Weight,
    pub analytic: f64,
    pub tabulated: f64,
    pub finite_difference: Option<f64>,
    /// `|analytic - tabulated|`.
    pub deviation: f64,
    pub flagged: bool,
    pub adjudication: Adjudication,
}

/// Cell-by-cell audit of the tabulated formulas against the analytic
/// derivatives, with finite differences as referee.
#[derive(Debug, Clone)]
pub struct DiscrepancyReport {
    pub cells: Vec<DiscrepancyCell>,
}

impl DiscrepancyReport {
    pub fn flagged(&self) -> impl Iterator<Item = &DiscrepancyCell> {
        self.cells.iter().filter(|c| c.flagged)
    }

    pub fn flagged_count(&self) -> usize {
        self.flagged().count()
    }

    pub fn cell(&self, decision: Decision, weight: Weight) -> &DiscrepancyCell {
        &self.cells[decision.row() * 7 + weight.col()]
    }
}

/// Three-way comparison with the default finite-difference step.
pub fn discrepancy_report(
    prefs: &PreferenceWeights,
    econ: &EconomyParams,
) -> Result<DiscrepancyReport, Error> {
    discrepancy_report_with_step(prefs, econ, DEFAULT_FD_STEP)
}

/// Three-way comparison with an explicit finite-difference step.
pub fn discrepancy_report_with_step(
    prefs: &PreferenceWeights,
    econ: &EconomyParams,
    fd_step: f64,
) -> Result<DiscrepancyReport, Error> {
    let analytic = analytic_jacobian(prefs, econ)?;
    let tabulated = tabulated_jacobian(prefs, econ)?;
    let fd = finite_difference_jacobian(prefs, econ, fd_step)?;

    let mut cells = Vec::with_capacity(42);
    for d in Decision::ALL {
        for w in Weight::ALL {
            let a = analytic.get(d, w);
            let t = tabulated.get(d, w);
            let f = fd.get(d, w);
            let deviation = (a - t).abs();
            let flagged = deviation > DISCREPANCY_TOL * a.abs().max(1.0);
            let adjudication = match f {
                None => Adjudication::Unavailable,
                Some(fv) => {
                    let to_analytic = (fv - a).abs();
                    let to_tabulated = (fv - t).abs();
                    if to_analytic < to_tabulated {
                        Adjudication::SupportsAnalytic
                    } else if to_tabulated < to_analytic {
                        Adjudication::SupportsTabulated
                    } else {
                        Adjudication::Inconclusive
                    }
                }
            };
            cells.push(DiscrepancyCell {
                decision: d,
                weight: w,
                analytic: a,
                tabulated: t,
                finite_difference: f,
                deviation,
                flagged,
                adjudication,
            });
        }
    }
    Ok(DiscrepancyReport { cells })
}
