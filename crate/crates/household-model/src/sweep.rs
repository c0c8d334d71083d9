//! Parameter sweeps and named scenarios over the closed-form solution,
//! with monotonicity verdicts and a byte-stable CSV export.

use crate::error::Error;
use crate::model::{
    budget_residual, evaluate_utility, solve_closed_form, validate, Allocation, Decision,
    EconomyParams, PreferenceWeights, Weight,
};
use crate::sensitivity::analytic_jacobian;
use std::fmt;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

/// Tolerance for classifying consecutive sweep values as tied. The closed
/// forms are smooth, so ties outside expected-constant columns indicate a
/// bug.
pub const MONOTONICITY_TOL: f64 = 1e-12;

/// Exact CSV header emitted by [`write_csv`].
pub const CSV_HEADER: &str = "param,value,c,s,p,q,n,e,utility,regime";

/// Parameter swept over a grid: one of the seven weights, the per-child
/// cost `tau`, or the wage `w`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Weight(Weight),
    ChildCost,
    Wage,
}

impl SweepParameter {
    /// Config-style key, used in the CSV `param` column.
    pub fn key(self) -> &'static str {
        match self {
            SweepParameter::Weight(w) => w.key(),
            SweepParameter::ChildCost => "tau",
            SweepParameter::Wage => "w",
        }
    }

    /// Parses a key as accepted by the CLI `--param` flag.
    pub fn parse(key: &str) -> Option<Self> {
        match key {
            "tau" => Some(SweepParameter::ChildCost),
            "w" => Some(SweepParameter::Wage),
            other => Weight::ALL
                .iter()
                .find(|w| w.key() == other)
                .map(|&w| SweepParameter::Weight(w)),
        }
    }

    fn apply(
        self,
        prefs: &PreferenceWeights,
        econ: &EconomyParams,
        value: f64,
    ) -> (PreferenceWeights, EconomyParams) {
        match self {
            SweepParameter::Weight(w) => (prefs.with_weight(w, value), *econ),
            SweepParameter::ChildCost => {
                let mut e = *econ;
                e.tau = value;
                (*prefs, e)
            }
            SweepParameter::Wage => {
                let mut e = *econ;
                e.wage = value;
                (*prefs, e)
            }
        }
    }
}

impl fmt::Display for SweepParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

/// A sweep request: base instance, swept parameter, grid, and which
/// analytic sensitivities to record alongside each solved row.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub prefs: PreferenceWeights,
    pub econ: EconomyParams,
    pub parameter: SweepParameter,
    /// Strictly increasing, strictly positive grid values.
    pub grid: Vec<f64>,
    /// Jacobian cells evaluated at every solved grid point.
    pub track: Vec<(Decision, Weight)>,
}

/// Solved grid point.
#[derive(Debug, Clone)]
pub struct SolvedPoint {
    pub allocation: Allocation,
    pub utility: f64,
    /// Values of the tracked Jacobian cells, parallel to `SweepSpec::track`.
    pub sensitivities: Vec<f64>,
}

/// Outcome at one grid point; regime errors are recorded, never dropped.
#[derive(Debug, Clone)]
pub enum PointOutcome {
    Solved(SolvedPoint),
    /// Short stable tag: `Corner`, `Singular`, or an error tag.
    Skipped { tag: String },
}

#[derive(Debug, Clone)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: PointOutcome,
}

impl SweepRow {
    pub fn solved(&self) -> Option<&SolvedPoint> {
        match &self.outcome {
            PointOutcome::Solved(p) => Some(p),
            PointOutcome::Skipped { .. } => None,
        }
    }
}

/// Direction of a column across the solved rows of a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
    Constant,
    NonMonotonic,
    /// Fewer than two solved rows.
    Insufficient,
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Trend::Increasing => f.write_str("increasing"),
            Trend::Decreasing => f.write_str("decreasing"),
            Trend::Constant => f.write_str("constant"),
            Trend::NonMonotonic => f.write_str("non-monotonic"),
            Trend::Insufficient => f.write_str("insufficient data"),
        }
    }
}

/// Column of the sweep output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Decision(Decision),
    Utility,
}

impl Column {
    pub const ALL: [Column; 7] = [
        Column::Decision(Decision::Consumption),
        Column::Decision(Decision::Savings),
        Column::Decision(Decision::Health),
        Column::Decision(Decision::Pension),
        Column::Decision(Decision::Children),
        Column::Decision(Decision::Education),
        Column::Utility,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Column::Decision(d) => d.symbol(),
            Column::Utility => "utility",
        }
    }

    fn extract(self, point: &SolvedPoint) -> f64 {
        match self {
            Column::Decision(d) => point.allocation.decision(d),
            Column::Utility => point.utility,
        }
    }
}

/// Observed trend, expected trend (where the closed forms pin one down),
/// and range of one column.
#[derive(Debug, Clone, Copy)]
pub struct ColumnSummary {
    pub column: Column,
    pub observed: Trend,
    pub expected: Option<Trend>,
    /// Minimum over solved rows; NaN when no row solved.
    pub min: f64,
    /// Maximum over solved rows; NaN when no row solved.
    pub max: f64,
}

impl ColumnSummary {
    /// A summary contradicts its expectation only when both sides are
    /// informative.
    pub fn holds(&self) -> bool {
        match (self.expected, self.observed) {
            (None, _) | (_, Trend::Insufficient) => true,
            (Some(expected), observed) => expected == observed,
        }
    }
}

/// Full sweep outcome: rows in grid order plus per-column summaries.
#[derive(Debug, Clone)]
pub struct ScenarioResult {
    pub parameter: SweepParameter,
    pub rows: Vec<SweepRow>,
    pub summaries: Vec<ColumnSummary>,
}

impl ScenarioResult {
    pub fn verdicts_hold(&self) -> bool {
        self.summaries.iter().all(ColumnSummary::holds)
    }

    pub fn solved_count(&self) -> usize {
        self.rows.iter().filter(|r| r.solved().is_some()).count()
    }

    pub fn summary(&self, column: Column) -> &ColumnSummary {
        self.summaries
            .iter()
            .find(|s| s.column == column)
            .expect("all columns summarized")
    }
}

/// Expected direction of a column under the swept parameter, derived from
/// the structure of the closed forms (signs do not depend on the instance).
pub fn expected_trend(parameter: SweepParameter, column: Column) -> Option<Trend> {
    let decision = match column {
        Column::Utility => return None,
        Column::Decision(d) => d,
    };
    Some(match parameter {
        SweepParameter::Wage => match decision {
            // n = (gamma2 + gamma5 - gamma3) / (tau S) has no wage term
            Decision::Children => Trend::Constant,
            _ => Trend::Increasing,
        },
        SweepParameter::ChildCost => match decision {
            Decision::Children => Trend::Decreasing,
            Decision::Education => Trend::Increasing,
            _ => Trend::Constant,
        },
        SweepParameter::Weight(w) => match decision {
            Decision::Children => match w {
                Weight::Children | Weight::FutureEarnings => Trend::Increasing,
                _ => Trend::Decreasing,
            },
            Decision::Education => match w {
                Weight::Education => Trend::Increasing,
                Weight::Children | Weight::FutureEarnings => Trend::Decreasing,
                _ => Trend::Constant,
            },
            spending => {
                if w == spending.own_weight() {
                    Trend::Increasing
                } else if w == Weight::Education {
                    Trend::Constant
                } else {
                    Trend::Decreasing
                }
            }
        },
    })
}

fn classify_trend(values: &[f64]) -> Trend {
    if values.len() < 2 {
        return Trend::Insufficient;
    }
    let mut strictly_up = true;
    let mut strictly_down = true;
    let mut all_tied = true;
    for pair in values.windows(2) {
        let tol = MONOTONICITY_TOL * pair[0].abs().max(pair[1].abs()).max(1.0);
        let diff = pair[1] - pair[0];
        if diff > tol {
            strictly_down = false;
            all_tied = false;
        } else if diff < -tol {
            strictly_up = false;
            all_tied = false;
        } else {
            strictly_up = false;
            strictly_down = false;
        }
    }
    if all_tied {
        Trend::Constant
    } else if strictly_up {
        Trend::Increasing
    } else if strictly_down {
        Trend::Decreasing
    } else {
        Trend::NonMonotonic
    }
}

/// Evaluates the closed form over the grid, recording regime errors as
/// skipped rows instead of aborting.
pub fn run_sweep(spec: &SweepSpec) -> Result<ScenarioResult, Error> {
    if spec.grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if !spec.grid[0].is_finite() || spec.grid[0] <= 0.0 {
        return Err(Error::GridNotIncreasing { index: 0 });
    }
    for i in 1..spec.grid.len() {
        if !spec.grid[i].is_finite() || spec.grid[i] <= spec.grid[i - 1] {
            return Err(Error::GridNotIncreasing { index: i });
        }
    }
    let base_class = validate(&spec.prefs, &spec.econ)?;
    if !base_class.is_interior() {
        return Err(Error::BaseNotInterior(base_class));
    }

    let rows: Vec<SweepRow> = spec
        .grid
        .iter()
        .map(|&value| {
            let (prefs, econ) = spec.parameter.apply(&spec.prefs, &spec.econ, value);
            let outcome = match solve_point(&prefs, &econ, &spec.track) {
                Ok(point) => PointOutcome::Solved(point),
                Err(e) => PointOutcome::Skipped { tag: e.tag() },
            };
            SweepRow { value, outcome }
        })
        .collect();

    let summaries = Column::ALL
        .iter()
        .map(|&column| {
            let values: Vec<f64> = rows
                .iter()
                .filter_map(|r| r.solved())
                .map(|p| column.extract(p))
                .collect();
            let observed = classify_trend(&values);
            let (min, max) = values.iter().fold((f64::NAN, f64::NAN), |(lo, hi), &v| {
                (v.min(lo.min(v)), v.max(hi.max(v)))
            });
            ColumnSummary {
                column,
                observed,
                expected: expected_trend(spec.parameter, column),
                min,
                max,
            }
        })
        .collect();

    Ok(ScenarioResult {
        parameter: spec.parameter,
        rows,
        summaries,
    })
}

fn solve_point(
    prefs: &PreferenceWeights,
    econ: &EconomyParams,
    track: &[(Decision, Weight)],
) -> Result<SolvedPoint, Error> {
    let allocation = solve_closed_form(prefs, econ)?;
    let utility = evaluate_utility(&allocation, prefs, econ)?;
    let sensitivities = if track.is_empty() {
        Vec::new()
    } else {
        let jacobian = analytic_jacobian(prefs, econ)?;
        track.iter().map(|&(d, w)| jacobian.get(d, w)).collect()
    };
    debug_assert!(budget_residual(&allocation, econ).abs() <= 1e-10 * econ.wage);
    Ok(SolvedPoint {
        allocation,
        utility,
        sensitivities,
    })
}

/// Pension crowd-out: sweeps the pension weight `gamma7` and records the
/// analytic `ds/dgamma7` at every point. Expected verdicts: s, c, p and n
/// decreasing, q increasing.
pub fn crowd_out_analysis(
    prefs: &PreferenceWeights,
    econ: &EconomyParams,
    grid: Vec<f64>,
) -> Result<ScenarioResult, Error> {
    run_sweep(&SweepSpec {
        prefs: *prefs,
        econ: *econ,
        parameter: SweepParameter::Weight(Weight::Pension),
        grid,
        track: vec![(Decision::Savings, Weight::Pension)],
    })
}

/// Which child weight traces the quantity-quality frontier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrontierAxis {
    /// Sweep the child-quantity weight `gamma2`.
    ChildWeight,
    /// Sweep the education weight `gamma3`.
    EducationWeight,
}

/// Quantity-quality frontier: the traced `(n, e)` pairs as the child
/// quantity or education weight varies. Expected verdicts: sweeping
/// `gamma3` moves n down and e up; sweeping `gamma2` does the opposite.
pub fn quantity_quality_frontier(
    prefs: &PreferenceWeights,
    econ: &EconomyParams,
    axis: FrontierAxis,
    grid: Vec<f64>,
) -> Result<ScenarioResult, Error> {
    let weight = match axis {
        FrontierAxis::ChildWeight => Weight::Children,
        FrontierAxis::EducationWeight => Weight::Education,
    };
    run_sweep(&SweepSpec {
        prefs: *prefs,
        econ: *econ,
        parameter: SweepParameter::Weight(weight),
        grid,
        track: vec![
            (Decision::Children, weight),
            (Decision::Education, weight),
        ],
    })
}

/// Future-earnings reallocation: sweeps `gamma5` within its admissible
/// range `(0, 1]`. Grid points above 1 are rejected up front. Expected
/// verdicts: c, s, p, q and e decreasing, n increasing.
pub fn future_earnings_scenario(
    prefs: &PreferenceWeights,
    econ: &EconomyParams,
    grid: Vec<f64>,
) -> Result<ScenarioResult, Error> {
    if let Some(&value) = grid.iter().find(|&&v| v > 1.0) {
        return Err(Error::DiscountOutOfRange {
            name: "gamma5",
            value,
        });
    }
    run_sweep(&SweepSpec {
        prefs: *prefs,
        econ: *econ,
        parameter: SweepParameter::Weight(Weight::FutureEarnings),
        grid,
        track: vec![(Decision::Children, Weight::FutureEarnings)],
    })
}

/// Writes the sweep as CSV: header `param,value,c,s,p,q,n,e,utility,regime`,
/// one row per grid point in grid order, full-precision shortest round-trip
/// floats, LF line endings. Skipped points keep their decision columns
/// empty and carry the regime/error tag. Byte-identical across runs for
/// identical inputs.
pub fn write_csv<W: Write>(result: &ScenarioResult, out: &mut W) -> io::Result<()> {
    out.write_all(CSV_HEADER.as_bytes())?;
    out.write_all(b"\n")?;
    let key = result.parameter.key();
    for row in &result.rows {
        let fields: Vec<String> = match &row.outcome {
            PointOutcome::Solved(point) => {
                let a = &point.allocation;
                vec![
                    key.to_string(),
                    format!("{}", row.value),
                    format!("{}", a.consumption),
                    format!("{}", a.savings),
                    format!("{}", a.health),
                    format!("{}", a.pension),
                    format!("{}", a.children),
                    format!("{}", a.education),
                    format!("{}", point.utility),
                    "Interior".to_string(),
                ]
            }
            PointOutcome::Skipped { tag } => {
                let mut fields = vec![key.to_string(), format!("{}", row.value)];
                fields.extend(std::iter::repeat_with(String::new).take(7));
                fields.push(tag.clone());
                fields
            }
        };
        out.write_all(fields.join(",").as_bytes())?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

/// [`write_csv`] to a file path.
pub fn export_csv(result: &ScenarioResult, path: &Path) -> Result<(), Error> {
    let mut file = BufWriter::new(File::create(path)?);
    write_csv(result, &mut file)?;
    file.flush()?;
    Ok(())
}
