//! Core allocation model: utility weights, economy parameters, regime
//! classification, the closed-form optimal allocation, utility evaluation,
//! and the budget identity.
//!
//! A household with wage `w` chooses consumption `c`, savings `s`, health
//! spending `p`, pension premiums `q`, a (continuous) number of children `n`
//! and per-child education spending `e`, maximizing a weighted sum of
//! logarithms subject to the linear budget
//! `w * (1 - tau * n) = c + s + e * n + p + q`.
//!
//! Everything here is a pure function of its inputs; values are `Copy` and
//! safe to share across threads.

use crate::error::Error;
use std::fmt;

/// Relative tolerance for the budget identity: an allocation is on budget
/// when `|residual| <= BUDGET_TOL_REL * w`.
pub const BUDGET_TOL_REL: f64 = 1e-10;

/// Absolute tolerance below which the quantity-quality margin
/// `gamma2 + gamma5 - gamma3` counts as zero (the Singular regime).
pub const MARGIN_TOL_ABS: f64 = 1e-12;

/// The seven utility weights.
///
/// `gamma1..gamma4` are plain positive weights; `gamma5..gamma7` discount
/// next-period terms and must lie in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreferenceWeights {
    /// Weight on current consumption `c`.
    pub gamma1: f64,
    /// Weight on the number of children `n`.
    pub gamma2: f64,
    /// Weight on per-child education spending `e`.
    pub gamma3: f64,
    /// Weight on health spending `p`.
    pub gamma4: f64,
    /// Discount weight on the children's future earnings `n * w_next`.
    pub gamma5: f64,
    /// Discount weight on gross savings returns `R * s`.
    pub gamma6: f64,
    /// Discount weight on gross pension returns `Rp * q`.
    pub gamma7: f64,
}

impl PreferenceWeights {
    /// All seven weights set to the same value.
    pub fn uniform(value: f64) -> Self {
        Self {
            gamma1: value,
            gamma2: value,
            gamma3: value,
            gamma4: value,
            gamma5: value,
            gamma6: value,
            gamma7: value,
        }
    }

    pub fn weight(&self, which: Weight) -> f64 {
        match which {
            Weight::Consumption => self.gamma1,
            Weight::Children => self.gamma2,
            Weight::Education => self.gamma3,
            Weight::Health => self.gamma4,
            Weight::FutureEarnings => self.gamma5,
            Weight::Savings => self.gamma6,
            Weight::Pension => self.gamma7,
        }
    }

    /// Copy with one weight replaced.
    pub fn with_weight(&self, which: Weight, value: f64) -> Self {
        let mut out = *self;
        match which {
            Weight::Consumption => out.gamma1 = value,
            Weight::Children => out.gamma2 = value,
            Weight::Education => out.gamma3 = value,
            Weight::Health => out.gamma4 = value,
            Weight::FutureEarnings => out.gamma5 = value,
            Weight::Savings => out.gamma6 = value,
            Weight::Pension => out.gamma7 = value,
        }
        out
    }

    /// Copy with every weight multiplied by `k`.
    pub fn scaled(&self, k: f64) -> Self {
        Self {
            gamma1: self.gamma1 * k,
            gamma2: self.gamma2 * k,
            gamma3: self.gamma3 * k,
            gamma4: self.gamma4 * k,
            gamma5: self.gamma5 * k,
            gamma6: self.gamma6 * k,
            gamma7: self.gamma7 * k,
        }
    }

    /// Quantity-quality margin `gamma2 + gamma5 - gamma3`. Positive in the
    /// Interior regime, zero in the Singular one, negative in the Corner one.
    pub fn margin(&self) -> f64 {
        self.gamma2 + self.gamma5 - self.gamma3
    }
}

/// Identifies one of the seven utility weights. Order matches the config
/// keys `gamma1..gamma7` and the sensitivity-matrix columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weight {
    Consumption,
    Children,
    Education,
    Health,
    FutureEarnings,
    Savings,
    Pension,
}

impl Weight {
    pub const ALL: [Weight; 7] = [
        Weight::Consumption,
        Weight::Children,
        Weight::Education,
        Weight::Health,
        Weight::FutureEarnings,
        Weight::Savings,
        Weight::Pension,
    ];

    /// Column index in the 6x7 sensitivity matrix (0 for gamma1 .. 6 for gamma7).
    pub fn col(self) -> usize {
        match self {
            Weight::Consumption => 0,
            Weight::Children => 1,
            Weight::Education => 2,
            Weight::Health => 3,
            Weight::FutureEarnings => 4,
            Weight::Savings => 5,
            Weight::Pension => 6,
        }
    }

    /// Config-file key (`gamma1`..`gamma7`).
    pub fn key(self) -> &'static str {
        match self {
            Weight::Consumption => "gamma1",
            Weight::Children => "gamma2",
            Weight::Education => "gamma3",
            Weight::Health => "gamma4",
            Weight::FutureEarnings => "gamma5",
            Weight::Savings => "gamma6",
            Weight::Pension => "gamma7",
        }
    }

    /// Whether the weight is a discount factor constrained to (0, 1].
    pub fn is_discount(self) -> bool {
        matches!(
            self,
            Weight::FutureEarnings | Weight::Savings | Weight::Pension
        )
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// Wage, per-child cost, and the next-period prices that enter utility.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EconomyParams {
    /// Current-period wage `w`.
    pub wage: f64,
    /// Fixed time/expense cost per child, as a fraction of the wage.
    pub tau: f64,
    /// Children's wage next period (`w_next`).
    pub wage_next: f64,
    /// Gross interest rate on savings (`R_next`).
    pub interest: f64,
    /// Gross interest rate on pension premiums (`Rp_next`).
    pub pension_interest: f64,
}

/// One of the six decision variables. Order matches the sensitivity-matrix
/// rows: `c, n, e, p, s, q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Consumption,
    Children,
    Education,
    Health,
    Savings,
    Pension,
}

impl Decision {
    pub const ALL: [Decision; 6] = [
        Decision::Consumption,
        Decision::Children,
        Decision::Education,
        Decision::Health,
        Decision::Savings,
        Decision::Pension,
    ];

    /// Row index in the 6x7 sensitivity matrix.
    pub fn row(self) -> usize {
        match self {
            Decision::Consumption => 0,
            Decision::Children => 1,
            Decision::Education => 2,
            Decision::Health => 3,
            Decision::Savings => 4,
            Decision::Pension => 5,
        }
    }

    /// Single-letter symbol used in tables and CSV columns.
    pub fn symbol(self) -> &'static str {
        match self {
            Decision::Consumption => "c",
            Decision::Children => "n",
            Decision::Education => "e",
            Decision::Health => "p",
            Decision::Savings => "s",
            Decision::Pension => "q",
        }
    }

    /// The weight that multiplies this decision's own log term.
    pub fn own_weight(self) -> Weight {
        match self {
            Decision::Consumption => Weight::Consumption,
            Decision::Children => Weight::Children,
            Decision::Education => Weight::Education,
            Decision::Health => Weight::Health,
            Decision::Savings => Weight::Savings,
            Decision::Pension => Weight::Pension,
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// The six optimal decision levels. All are strictly positive for an
/// interior optimum; `children` is continuous.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Allocation {
    /// Consumption `c`.
    pub consumption: f64,
    /// Savings `s`.
    pub savings: f64,
    /// Health spending `p`.
    pub health: f64,
    /// Pension premiums `q`.
    pub pension: f64,
    /// Number of children `n`.
    pub children: f64,
    /// Education spending per child `e`.
    pub education: f64,
}

impl Allocation {
    pub fn decision(&self, which: Decision) -> f64 {
        match which {
            Decision::Consumption => self.consumption,
            Decision::Children => self.children,
            Decision::Education => self.education,
            Decision::Health => self.health,
            Decision::Savings => self.savings,
            Decision::Pension => self.pension,
        }
    }

    /// True when every component is strictly positive.
    pub fn is_strictly_positive(&self) -> bool {
        Decision::ALL.iter().all(|&d| self.decision(d) > 0.0)
    }
}

/// Solution regime implied by the quantity-quality margin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `gamma2 + gamma5 > gamma3`: all six decisions strictly positive.
    Interior,
    /// `gamma3 > gamma2 + gamma5`: fertility is driven to zero and no
    /// closed-form allocation exists for the remaining variables.
    Corner,
    /// `gamma3 = gamma2 + gamma5`: the education denominator vanishes.
    Singular,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Interior => f.write_str("Interior"),
            Regime::Corner => f.write_str("Corner"),
            Regime::Singular => f.write_str("Singular"),
        }
    }
}

/// Outcome of [`validate`]: the regime together with the margin that
/// determined it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeClassification {
    pub regime: Regime,
    /// `gamma2 + gamma5 - gamma3`.
    pub margin: f64,
}

impl RegimeClassification {
    pub fn is_interior(&self) -> bool {
        self.regime == Regime::Interior
    }
}

/// Sum of all utility weights except the education weight `gamma3`; the
/// common denominator of the closed-form shares.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityWeightSum(pub f64);

/// Sum of all weights excluding `gamma3`.
pub fn utility_weight_sum(prefs: &PreferenceWeights) -> UtilityWeightSum {
    UtilityWeightSum(
        prefs.gamma1 + prefs.gamma2 + prefs.gamma4 + prefs.gamma5 + prefs.gamma6 + prefs.gamma7,
    )
}

fn check_positive(name: &'static str, value: f64) -> Result<(), Error> {
    if !value.is_finite() {
        return Err(Error::NotFinite { name, value });
    }
    if value <= 0.0 {
        return Err(Error::NonPositiveParameter { name, value });
    }
    Ok(())
}

fn check_positivity(prefs: &PreferenceWeights, econ: &EconomyParams) -> Result<(), Error> {
    for which in Weight::ALL {
        check_positive(which.key(), prefs.weight(which))?;
    }
    check_positive("w", econ.wage)?;
    check_positive("tau", econ.tau)?;
    check_positive("w_next", econ.wage_next)?;
    check_positive("R_next", econ.interest)?;
    check_positive("Rp_next", econ.pension_interest)?;
    Ok(())
}

fn classify_margin(margin: f64) -> Regime {
    if margin.abs() <= MARGIN_TOL_ABS {
        Regime::Singular
    } else if margin > 0.0 {
        Regime::Interior
    } else {
        Regime::Corner
    }
}

/// Checks admissibility of a model instance and classifies its regime.
///
/// Admissibility requires every weight and economy parameter to be finite
/// and strictly positive, and the discount weights `gamma5..gamma7` to be
/// at most 1. Inadmissible instances are errors; admissible ones are
/// classified as Interior, Corner or Singular by the sign of the
/// quantity-quality margin (zero within [`MARGIN_TOL_ABS`]).
pub fn validate(
    prefs: &PreferenceWeights,
    econ: &EconomyParams,
) -> Result<RegimeClassification, Error> {
    check_positivity(prefs, econ)?;
    for which in Weight::ALL {
        let value = prefs.weight(which);
        if which.is_discount() && value > 1.0 {
            return Err(Error::DiscountOutOfRange {
                name: which.key(),
                value,
            });
        }
    }
    let margin = prefs.margin();
    Ok(RegimeClassification {
        regime: classify_margin(margin),
        margin,
    })
}

/// The closed-form optimal allocation for an Interior instance:
///
/// ```text
/// c = gamma1 w / S      s = gamma6 w / S      p = gamma4 w / S
/// q = gamma7 w / S      n = (gamma2 + gamma5 - gamma3) / (tau S)
/// e = gamma3 w tau / (gamma2 + gamma5 - gamma3)
/// ```
///
/// where `S` is the [`utility_weight_sum`]. Corner and Singular instances
/// are refused with [`Error::NotInterior`]; no corner allocation is
/// invented. The returned allocation satisfies the budget identity and
/// leaves strictly positive net income `1 - tau * n`.
pub fn solve_closed_form(
    prefs: &PreferenceWeights,
    econ: &EconomyParams,
) -> Result<Allocation, Error> {
    let class = validate(prefs, econ)?;
    if !class.is_interior() {
        return Err(Error::NotInterior(class));
    }
    closed_form(prefs, econ, class.margin)
}

/// Closed form for derivative probes: positivity and the Interior margin
/// are still required, but a discount weight may step above 1. The closed
/// forms are smooth there, so central differences taken at admissible
/// instances on the (0, 1] boundary stay well defined.
pub(crate) fn solve_probe(
    prefs: &PreferenceWeights,
    econ: &EconomyParams,
) -> Result<Allocation, Error> {
    check_positivity(prefs, econ)?;
    let margin = prefs.margin();
    let regime = classify_margin(margin);
    if regime != Regime::Interior {
        return Err(Error::NotInterior(RegimeClassification { regime, margin }));
    }
    closed_form(prefs, econ, margin)
}

fn closed_form(
    prefs: &PreferenceWeights,
    econ: &EconomyParams,
    margin: f64,
) -> Result<Allocation, Error> {
    let sum = utility_weight_sum(prefs).0;
    let alloc = Allocation {
        consumption: prefs.gamma1 * econ.wage / sum,
        savings: prefs.gamma6 * econ.wage / sum,
        health: prefs.gamma4 * econ.wage / sum,
        pension: prefs.gamma7 * econ.wage / sum,
        children: margin / (econ.tau * sum),
        education: prefs.gamma3 * econ.wage * econ.tau / margin,
    };
    // tau * n = margin / S < 1 holds for every admissible instance; the
    // guard stays because the contract promises it post-solve.
    let share = 1.0 - econ.tau * alloc.children;
    if share <= 0.0 {
        return Err(Error::NetIncomeNonPositive { share });
    }
    Ok(alloc)
}

fn log_term(term: &'static str, value: f64) -> Result<f64, Error> {
    if !value.is_finite() || value <= 0.0 {
        return Err(Error::NonPositiveArgument { term, value });
    }
    Ok(value.ln())
}

/// Lifetime utility of an allocation:
///
/// ```text
/// u = gamma1 ln c + gamma2 ln n + gamma3 ln e + gamma4 ln p
///   + gamma5 ln(n w_next) + gamma6 ln(R s) + gamma7 ln(Rp q)
/// ```
pub fn evaluate_utility(
    alloc: &Allocation,
    prefs: &PreferenceWeights,
    econ: &EconomyParams,
) -> Result<f64, Error> {
    Ok(prefs.gamma1 * log_term("c", alloc.consumption)?
        + prefs.gamma2 * log_term("n", alloc.children)?
        + prefs.gamma3 * log_term("e", alloc.education)?
        + prefs.gamma4 * log_term("p", alloc.health)?
        + prefs.gamma5 * log_term("n*w_next", alloc.children * econ.wage_next)?
        + prefs.gamma6 * log_term("R_next*s", econ.interest * alloc.savings)?
        + prefs.gamma7 * log_term("Rp_next*q", econ.pension_interest * alloc.pension)?)
}

/// Budget residual `w (1 - tau n) - (c + s + e n + p + q)`.
///
/// Zero means exactly on budget, positive means slack.
pub fn budget_residual(alloc: &Allocation, econ: &EconomyParams) -> f64 {
    econ.wage * (1.0 - econ.tau * alloc.children)
        - (alloc.consumption
            + alloc.savings
            + alloc.education * alloc.children
            + alloc.health
            + alloc.pension)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_ones() -> (PreferenceWeights, EconomyParams) {
        (
            PreferenceWeights::uniform(1.0),
            EconomyParams {
                wage: 1.0,
                tau: 0.1,
                wage_next: 1.0,
                interest: 1.0,
                pension_interest: 1.0,
            },
        )
    }

    fn rel_err(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
    }

    #[test]
    fn all_ones_is_interior_with_unit_margin() {
        let (prefs, econ) = all_ones();
        let class = validate(&prefs, &econ).unwrap();
        assert_eq!(class.regime, Regime::Interior);
        assert_eq!(class.margin, 1.0);
    }

    #[test]
    fn heavy_education_weight_is_corner() {
        let (mut prefs, econ) = all_ones();
        prefs.gamma2 = 0.5;
        prefs.gamma5 = 0.5;
        prefs.gamma3 = 2.0;
        let class = validate(&prefs, &econ).unwrap();
        assert_eq!(class.regime, Regime::Corner);
        assert_eq!(class.margin, -1.0);
    }

    #[test]
    fn balanced_education_weight_is_singular() {
        let (mut prefs, econ) = all_ones();
        prefs.gamma2 = 0.5;
        prefs.gamma5 = 0.5;
        prefs.gamma3 = 1.0;
        let class = validate(&prefs, &econ).unwrap();
        assert_eq!(class.regime, Regime::Singular);
        assert_eq!(class.margin, 0.0);
    }

    #[test]
    fn non_positive_parameters_are_rejected_by_name() {
        let (prefs, econ) = all_ones();
        let bad = prefs.with_weight(Weight::Health, 0.0);
        match validate(&bad, &econ).unwrap_err() {
            Error::NonPositiveParameter { name, .. } => assert_eq!(name, "gamma4"),
            other => panic!("unexpected error: {other}"),
        }
        let mut bad_econ = econ;
        bad_econ.tau = -0.1;
        match validate(&prefs, &bad_econ).unwrap_err() {
            Error::NonPositiveParameter { name, .. } => assert_eq!(name, "tau"),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn discount_weights_above_one_are_rejected() {
        let (prefs, econ) = all_ones();
        let bad = prefs.with_weight(Weight::Savings, 1.5);
        match validate(&bad, &econ).unwrap_err() {
            Error::DiscountOutOfRange { name, value } => {
                assert_eq!(name, "gamma6");
                assert_eq!(value, 1.5);
            }
            other => panic!("unexpected error: {other}"),
        }
        // exactly 1 is admissible
        let edge = prefs.with_weight(Weight::Savings, 1.0);
        assert!(validate(&edge, &econ).is_ok());
    }

    #[test]
    fn nan_parameters_are_rejected() {
        let (prefs, econ) = all_ones();
        let bad = prefs.with_weight(Weight::Consumption, f64::NAN);
        assert!(matches!(
            validate(&bad, &econ).unwrap_err(),
            Error::NotFinite { name: "gamma1", .. }
        ));
    }

    #[test]
    fn weight_sum_excludes_education() {
        let (prefs, _) = all_ones();
        assert_eq!(utility_weight_sum(&prefs).0, 6.0);

        let mut p = prefs;
        p.gamma3 = 0.5;
        assert_eq!(utility_weight_sum(&p).0, 6.0);

        let p = PreferenceWeights {
            gamma1: 2.0,
            gamma2: 1.0,
            gamma3: 9.0,
            gamma4: 1.0,
            gamma5: 0.5,
            gamma6: 0.5,
            gamma7: 1.0,
        };
        assert_eq!(utility_weight_sum(&p).0, 6.0);
    }

    #[test]
    fn closed_form_all_ones() {
        let (prefs, econ) = all_ones();
        let alloc = solve_closed_form(&prefs, &econ).unwrap();
        assert!(rel_err(alloc.consumption, 1.0 / 6.0) < 1e-12);
        assert!(rel_err(alloc.savings, 1.0 / 6.0) < 1e-12);
        assert!(rel_err(alloc.health, 1.0 / 6.0) < 1e-12);
        assert!(rel_err(alloc.pension, 1.0 / 6.0) < 1e-12);
        assert!(rel_err(alloc.children, 5.0 / 3.0) < 1e-12);
        assert!(rel_err(alloc.education, 0.1) < 1e-12);
        let residual = budget_residual(&alloc, &econ);
        assert!(residual.abs() <= BUDGET_TOL_REL * econ.wage);
    }

    #[test]
    fn closed_form_low_education_weight() {
        let (mut prefs, econ) = all_ones();
        prefs.gamma3 = 0.5;
        let alloc = solve_closed_form(&prefs, &econ).unwrap();
        assert!(rel_err(alloc.consumption, 1.0 / 6.0) < 1e-12);
        assert!(rel_err(alloc.children, 2.5) < 1e-12);
        assert!(rel_err(alloc.education, 0.5 * 0.1 / 1.5) < 1e-12);
    }

    #[test]
    fn doubling_wage_scales_spending_but_not_fertility() {
        let (prefs, econ) = all_ones();
        let base = solve_closed_form(&prefs, &econ).unwrap();
        let mut rich = econ;
        rich.wage = 2.0;
        let scaled = solve_closed_form(&prefs, &rich).unwrap();
        assert_eq!(scaled.consumption, 2.0 * base.consumption);
        assert_eq!(scaled.savings, 2.0 * base.savings);
        assert_eq!(scaled.health, 2.0 * base.health);
        assert_eq!(scaled.pension, 2.0 * base.pension);
        assert_eq!(scaled.education, 2.0 * base.education);
        assert_eq!(scaled.children, base.children);
    }

    #[test]
    fn corner_and_singular_refused_by_solver() {
        let (mut prefs, econ) = all_ones();
        prefs.gamma2 = 0.5;
        prefs.gamma5 = 0.5;
        prefs.gamma3 = 2.0;
        match solve_closed_form(&prefs, &econ).unwrap_err() {
            Error::NotInterior(class) => assert_eq!(class.regime, Regime::Corner),
            other => panic!("unexpected error: {other}"),
        }
        prefs.gamma3 = 1.0;
        match solve_closed_form(&prefs, &econ).unwrap_err() {
            Error::NotInterior(class) => assert_eq!(class.regime, Regime::Singular),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn utility_at_all_ones_closed_form() {
        let (prefs, econ) = all_ones();
        let alloc = solve_closed_form(&prefs, &econ).unwrap();
        let u = evaluate_utility(&alloc, &prefs, &econ).unwrap();
        // 4 ln(1/6) + 2 ln(5/3) + ln(1/10)
        assert!(rel_err(u, -8.447971722374284) < 1e-12);
    }

    #[test]
    fn scaling_future_wage_shifts_utility_by_gamma5_log_k() {
        let (prefs, econ) = all_ones();
        let alloc = solve_closed_form(&prefs, &econ).unwrap();
        let u0 = evaluate_utility(&alloc, &prefs, &econ).unwrap();
        for k in [0.5, 3.0, 10.0] {
            let mut scaled = econ;
            scaled.wage_next = econ.wage_next * k;
            let u1 = evaluate_utility(&alloc, &prefs, &scaled).unwrap();
            assert!((u1 - u0 - prefs.gamma5 * k.ln()).abs() < 1e-12);
        }
    }

    #[test]
    fn non_positive_components_fail_utility() {
        let (prefs, econ) = all_ones();
        let mut alloc = solve_closed_form(&prefs, &econ).unwrap();
        alloc.savings = 0.0;
        assert!(matches!(
            evaluate_utility(&alloc, &prefs, &econ).unwrap_err(),
            Error::NonPositiveArgument { term: "R_next*s", .. }
        ));
    }

    #[test]
    fn budget_residual_is_linear_in_overspend() {
        let (prefs, econ) = all_ones();
        let alloc = solve_closed_form(&prefs, &econ).unwrap();
        let base = budget_residual(&alloc, &econ);
        let mut over = alloc;
        over.consumption += 0.1;
        let moved = budget_residual(&over, &econ);
        assert!((moved - (base - 0.1)).abs() < 1e-12);
    }
}
