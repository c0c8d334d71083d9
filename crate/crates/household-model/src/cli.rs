//! Command implementations behind the `household-model` binary.
//!
//! Each command returns its stdout, stderr and exit code so the printed
//! output stays testable and byte-stable. Exit codes are part of the
//! interface: 0 success, 1 usage/parse error, 2 non-interior regime,
//! 3 verification failure, 4 monotonicity-verdict mismatch.

use crate::config::ModelConfig;
use crate::error::Error;
use crate::model::{
    budget_residual, evaluate_utility, solve_closed_form, validate, Decision, Regime, Weight,
};
use crate::oracle::{self, cross_validate, cross_validate_perturbed, CrossValidation};
use crate::sample::interior_instances;
use crate::sensitivity::{
    discrepancy_report_with_step, sign_pattern, tabulated_jacobian, verify_claims,
    analytic_jacobian, SensitivityMatrix, DISCREPANCY_TOL,
};
use crate::sweep::{
    crowd_out_analysis, export_csv, future_earnings_scenario, quantity_quality_frontier,
    run_sweep, FrontierAxis, ScenarioResult, SweepParameter, SweepSpec, Trend,
};
use std::fmt::Write as _;
use std::path::PathBuf;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NOT_INTERIOR: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;
pub const EXIT_VERDICT_MISMATCH: i32 = 4;

/// Captured command outcome.
#[derive(Debug, Clone)]
pub struct CmdResult {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

impl CmdResult {
    fn ok(stdout: String) -> Self {
        CmdResult {
            stdout,
            stderr: String::new(),
            code: EXIT_OK,
        }
    }

    fn fail(code: i32, message: String) -> Self {
        CmdResult {
            stdout: String::new(),
            stderr: format!("error: {message}\n"),
            code,
        }
    }
}

fn exit_code_for(error: &Error) -> i32 {
    match error {
        Error::NotInterior(_) | Error::BaseNotInterior(_) => EXIT_NOT_INTERIOR,
        _ => EXIT_USAGE,
    }
}

/// Six-significant-digit rendering for human-readable output. CSV output
/// keeps full precision; this is for tables only.
pub fn sig6(value: f64) -> String {
    if value == 0.0 {
        return "0".to_string();
    }
    let rounded: f64 = format!("{value:.5e}").parse().expect("valid float");
    format!("{rounded}")
}

fn sci(value: f64) -> String {
    format!("{value:.3e}")
}

/// `solve`: print the closed-form allocation, utility, regime and budget
/// residual.
pub fn cmd_solve(cfg: &ModelConfig) -> CmdResult {
    let class = match validate(&cfg.prefs, &cfg.econ) {
        Ok(class) => class,
        Err(e) => return CmdResult::fail(EXIT_USAGE, e.to_string()),
    };
    if class.regime != Regime::Interior {
        return CmdResult::fail(
            EXIT_NOT_INTERIOR,
            format!(
                "regime {} (margin = {}): no interior closed-form allocation exists; \
                 an Interior instance needs gamma2 + gamma5 > gamma3",
                class.regime,
                sig6(class.margin)
            ),
        );
    }
    let alloc = match solve_closed_form(&cfg.prefs, &cfg.econ) {
        Ok(a) => a,
        Err(e) => return CmdResult::fail(exit_code_for(&e), e.to_string()),
    };
    let utility = match evaluate_utility(&alloc, &cfg.prefs, &cfg.econ) {
        Ok(u) => u,
        Err(e) => return CmdResult::fail(EXIT_USAGE, e.to_string()),
    };
    let residual = budget_residual(&alloc, &cfg.econ);
    let within = residual.abs() <= cfg.budget_tol * cfg.econ.wage;

    let mut out = String::new();
    let _ = writeln!(out, "regime: {} (margin = {})", class.regime, sig6(class.margin));
    let _ = writeln!(out, "allocation:");
    let labels = [
        (Decision::Consumption, "consumption"),
        (Decision::Savings, "savings"),
        (Decision::Health, "health"),
        (Decision::Pension, "pension"),
        (Decision::Children, "children"),
        (Decision::Education, "education per child"),
    ];
    for (decision, label) in labels {
        let _ = writeln!(
            out,
            "  {} {:<21} = {}",
            decision.symbol(),
            format!("({label})"),
            sig6(alloc.decision(decision))
        );
    }
    let _ = writeln!(out, "utility = {}", sig6(utility));
    let _ = writeln!(
        out,
        "budget residual = {} (|residual| <= {:e} * w: {})",
        sci(residual),
        cfg.budget_tol,
        if within { "yes" } else { "no" }
    );
    CmdResult::ok(out)
}

fn matrix_table(title: &str, matrix: &SensitivityMatrix) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{title}:");
    let mut header = String::from("     ");
    for w in Weight::ALL {
        let _ = write!(header, "{:>13}", w.key());
    }
    let _ = writeln!(out, "{header}");
    for d in Decision::ALL {
        let mut line = format!("  {:<3}", d.symbol());
        for w in Weight::ALL {
            let _ = write!(line, "{:>13}", sig6(matrix.get(d, w)));
        }
        let _ = writeln!(out, "{line}");
    }
    out
}

/// `statics`: print the analytic sensitivity matrix; optionally the
/// tabulated reference matrix with its discrepancy report (`--table1`) and
/// the sign pattern with the claim checks (`--signs`).
pub fn cmd_statics(cfg: &ModelConfig, table1: bool, signs: bool) -> CmdResult {
    let analytic = match analytic_jacobian(&cfg.prefs, &cfg.econ) {
        Ok(m) => m,
        Err(e) => return CmdResult::fail(exit_code_for(&e), e.to_string()),
    };

    let mut out = String::new();
    out.push_str(&matrix_table(
        "analytic sensitivity matrix d(decision)/d(weight)",
        &analytic,
    ));
    let _ = writeln!(out, "beta = w/S^2 = {}", sig6(analytic.beta()));

    if table1 {
        let tabulated = match tabulated_jacobian(&cfg.prefs, &cfg.econ) {
            Ok(m) => m,
            Err(e) => return CmdResult::fail(exit_code_for(&e), e.to_string()),
        };
        out.push('\n');
        out.push_str(&matrix_table("tabulated reference matrix", &tabulated));
        let report = match discrepancy_report_with_step(&cfg.prefs, &cfg.econ, cfg.fd_step) {
            Ok(r) => r,
            Err(e) => return CmdResult::fail(exit_code_for(&e), e.to_string()),
        };
        out.push('\n');
        let _ = writeln!(
            out,
            "discrepancy report (flag when |analytic - tabulated| > {DISCREPANCY_TOL:e} * max(1, |analytic|)):"
        );
        for cell in report.flagged() {
            let fd = cell
                .finite_difference
                .map(sig6)
                .unwrap_or_else(|| "unavailable".to_string());
            let _ = writeln!(
                out,
                "  ({}, {}): analytic {}, tabulated {}, fd {}, |diff| {}, {}",
                cell.decision.symbol(),
                cell.weight.key(),
                sig6(cell.analytic),
                sig6(cell.tabulated),
                fd,
                sig6(cell.deviation),
                cell.adjudication
            );
        }
        let flagged = report.flagged_count();
        let _ = writeln!(
            out,
            "flagged {flagged} of 42 cells; the remaining {} agree within the threshold",
            42 - flagged
        );
    }

    if signs {
        let pattern = sign_pattern(&analytic);
        out.push('\n');
        let _ = writeln!(out, "sign pattern:");
        let mut header = String::from("     ");
        for w in Weight::ALL {
            let _ = write!(header, "{:>8}", w.key());
        }
        let _ = writeln!(out, "{header}");
        for d in Decision::ALL {
            let mut line = format!("  {:<3}", d.symbol());
            for w in Weight::ALL {
                let _ = write!(line, "{:>8}", pattern.get(d, w).glyph());
            }
            let _ = writeln!(out, "{line}");
        }
        let report = match verify_claims(&cfg.prefs, &cfg.econ) {
            Ok(r) => r,
            Err(e) => return CmdResult::fail(exit_code_for(&e), e.to_string()),
        };
        out.push('\n');
        let _ = writeln!(out, "claims:");
        for check in &report.checks {
            let witnesses: Vec<String> = check
                .witnesses
                .iter()
                .map(|(label, value)| format!("{label} = {}", sig6(*value)))
                .collect();
            let _ = writeln!(
                out,
                "  {}: {} [{}]",
                check.id.name(),
                if check.passed { "PASS" } else { "FAIL" },
                witnesses.join(", ")
            );
        }
        let passed = report.checks.iter().filter(|c| c.passed).count();
        let _ = writeln!(out, "claims passed: {passed}/{}", report.checks.len());
    }

    CmdResult::ok(out)
}

fn report_line(label: &str, report: &CrossValidation) -> String {
    format!(
        "{label}: {} (component gap {}, utility gap {}, residual closed {} / oracle {}, {} sweeps)\n",
        if report.passed { "PASS" } else { "FAIL" },
        sci(report.max_component_gap),
        sci(report.utility_gap),
        sci(report.closed_form_residual),
        sci(report.oracle_residual),
        report.oracle.iterations
    )
}

/// `verify`: cross-validate the closed form against the numerical
/// maximizer on the config instance plus `seeds` sampled instances.
pub fn cmd_verify(cfg: &ModelConfig, seeds: usize, seed_base: u64, corrupt: bool) -> CmdResult {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "cross-validation: tol {:e}, max_iter {}, seed base {seed_base}, seeded instances {seeds}",
        oracle::DEFAULT_TOL,
        oracle::DEFAULT_MAX_ITER
    );

    let config_report = if corrupt {
        cross_validate_perturbed(&cfg.prefs, &cfg.econ, oracle::DEFAULT_TOL, 1e-2)
    } else {
        cross_validate(&cfg.prefs, &cfg.econ, oracle::DEFAULT_TOL)
    };
    let config_report = match config_report {
        Ok(r) => r,
        Err(e) => return CmdResult::fail(exit_code_for(&e), e.to_string()),
    };
    out.push_str(&report_line("config instance", &config_report));

    let mut all_passed = config_report.passed;
    let mut max_gap = config_report.max_component_gap;
    let mut max_utility_gap = config_report.utility_gap;
    let mut max_residual = config_report
        .closed_form_residual
        .max(config_report.oracle_residual);
    let mut failures = 0usize;

    for (index, (prefs, econ)) in interior_instances(seed_base, seeds).iter().enumerate() {
        let report = match cross_validate(prefs, econ, oracle::DEFAULT_TOL) {
            Ok(r) => r,
            Err(e) => return CmdResult::fail(exit_code_for(&e), e.to_string()),
        };
        max_gap = max_gap.max(report.max_component_gap);
        max_utility_gap = max_utility_gap.max(report.utility_gap);
        max_residual = max_residual
            .max(report.closed_form_residual)
            .max(report.oracle_residual);
        if !report.passed {
            all_passed = false;
            failures += 1;
            out.push_str(&report_line(&format!("instance {index}"), &report));
        }
    }

    if seeds > 0 {
        let _ = writeln!(out, "seeded instances: {} of {seeds} PASS", seeds - failures);
    }
    let _ = writeln!(out, "max component gap = {}", sci(max_gap));
    let _ = writeln!(out, "max utility gap   = {}", sci(max_utility_gap));
    let _ = writeln!(out, "max foc residual  = {}", sci(max_residual));
    let _ = writeln!(out, "result: {}", if all_passed { "PASS" } else { "FAIL" });

    CmdResult {
        stdout: out,
        stderr: String::new(),
        code: if all_passed { EXIT_OK } else { EXIT_VERIFY_FAILED },
    }
}

/// Named sweep scenarios accepted by `sweep --scenario`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    CrowdOut,
    QqFrontier,
    FutureEarnings,
}

impl Scenario {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "crowd_out" => Some(Scenario::CrowdOut),
            "qq_frontier" => Some(Scenario::QqFrontier),
            "future_earnings" => Some(Scenario::FutureEarnings),
            _ => None,
        }
    }
}

/// Flags of the `sweep` command after string parsing.
#[derive(Debug, Clone, Default)]
pub struct SweepOptions {
    pub scenario: Option<Scenario>,
    pub param: Option<SweepParameter>,
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub steps: Option<usize>,
    pub out: Option<PathBuf>,
}

fn linspace(from: f64, to: f64, steps: usize) -> Vec<f64> {
    (0..steps)
        .map(|i| from + (to - from) * i as f64 / (steps - 1) as f64)
        .collect()
}

fn resolve_range(
    opts: &SweepOptions,
    default: Option<(f64, f64, usize)>,
) -> Result<Vec<f64>, String> {
    let given = [opts.from.is_some(), opts.to.is_some(), opts.steps.is_some()];
    let grid = if given.iter().all(|&g| g) {
        (opts.from.unwrap(), opts.to.unwrap(), opts.steps.unwrap())
    } else if given.iter().any(|&g| g) {
        return Err("--from, --to and --steps must be given together".to_string());
    } else if let Some(default) = default {
        default
    } else {
        return Err("--from, --to and --steps are required without --scenario".to_string());
    };
    let (from, to, steps) = grid;
    if steps < 2 {
        return Err(format!("--steps must be at least 2, got {steps}"));
    }
    if !from.is_finite() || from <= 0.0 {
        return Err(format!("--from must be strictly positive, got {from}"));
    }
    if !to.is_finite() || to <= from {
        return Err(format!("--to must exceed --from, got {from}..{to}"));
    }
    Ok(linspace(from, to, steps))
}

/// `sweep`: evaluate a parameter grid or a named scenario, optionally
/// export CSV, print monotonicity verdicts, and exit 4 on any verdict that
/// contradicts the expected sign structure.
pub fn cmd_sweep(cfg: &ModelConfig, opts: &SweepOptions) -> CmdResult {
    let run = match opts.scenario {
        Some(Scenario::CrowdOut) => {
            if opts.param.is_some() && opts.param != Some(SweepParameter::Weight(Weight::Pension)) {
                return CmdResult::fail(
                    EXIT_USAGE,
                    "scenario crowd_out sweeps gamma7; drop --param or pass gamma7".to_string(),
                );
            }
            match resolve_range(opts, Some((0.2, 1.0, 9))) {
                Ok(grid) => crowd_out_analysis(&cfg.prefs, &cfg.econ, grid),
                Err(msg) => return CmdResult::fail(EXIT_USAGE, msg),
            }
        }
        Some(Scenario::QqFrontier) => {
            let axis = match opts.param {
                None | Some(SweepParameter::Weight(Weight::Education)) => {
                    FrontierAxis::EducationWeight
                }
                Some(SweepParameter::Weight(Weight::Children)) => FrontierAxis::ChildWeight,
                Some(_) => {
                    return CmdResult::fail(
                        EXIT_USAGE,
                        "scenario qq_frontier sweeps gamma3 (default) or gamma2".to_string(),
                    )
                }
            };
            let reach = cfg.prefs.gamma2 + cfg.prefs.gamma5;
            let default = match axis {
                FrontierAxis::EducationWeight => (0.1 * reach, 0.9 * reach, 9),
                FrontierAxis::ChildWeight => (0.5, 2.0, 9),
            };
            match resolve_range(opts, Some(default)) {
                Ok(grid) => quantity_quality_frontier(&cfg.prefs, &cfg.econ, axis, grid),
                Err(msg) => return CmdResult::fail(EXIT_USAGE, msg),
            }
        }
        Some(Scenario::FutureEarnings) => {
            if opts.param.is_some()
                && opts.param != Some(SweepParameter::Weight(Weight::FutureEarnings))
            {
                return CmdResult::fail(
                    EXIT_USAGE,
                    "scenario future_earnings sweeps gamma5; drop --param or pass gamma5"
                        .to_string(),
                );
            }
            match resolve_range(opts, Some((0.2, 1.0, 9))) {
                Ok(grid) => future_earnings_scenario(&cfg.prefs, &cfg.econ, grid),
                Err(msg) => return CmdResult::fail(EXIT_USAGE, msg),
            }
        }
        None => {
            let parameter = match opts.param {
                Some(p) => p,
                None => {
                    return CmdResult::fail(
                        EXIT_USAGE,
                        "--param or --scenario is required".to_string(),
                    )
                }
            };
            match resolve_range(opts, None) {
                Ok(grid) => run_sweep(&SweepSpec {
                    prefs: cfg.prefs,
                    econ: cfg.econ,
                    parameter,
                    grid,
                    track: vec![],
                }),
                Err(msg) => return CmdResult::fail(EXIT_USAGE, msg),
            }
        }
    };

    let result = match run {
        Ok(r) => r,
        Err(e) => return CmdResult::fail(exit_code_for(&e), e.to_string()),
    };

    let mut out = String::new();
    out.push_str(&render_sweep(&result));

    if let Some(path) = &opts.out {
        if let Err(e) = export_csv(&result, path) {
            return CmdResult::fail(EXIT_USAGE, format!("{}: {e}", path.display()));
        }
        let _ = writeln!(out, "wrote {}", path.display());
    }

    let code = if result.verdicts_hold() {
        EXIT_OK
    } else {
        EXIT_VERDICT_MISMATCH
    };
    CmdResult {
        stdout: out,
        stderr: String::new(),
        code,
    }
}

fn render_sweep(result: &ScenarioResult) -> String {
    let mut out = String::new();
    let first = result.rows.first().map(|r| r.value).unwrap_or(f64::NAN);
    let last = result.rows.last().map(|r| r.value).unwrap_or(f64::NAN);
    let skipped = result.rows.len() - result.solved_count();
    let _ = writeln!(
        out,
        "sweep {}: {} grid points in [{first}, {last}], {} solved, {skipped} skipped",
        result.parameter.key(),
        result.rows.len(),
        result.solved_count()
    );
    let _ = writeln!(out, "verdicts:");
    for summary in &result.summaries {
        let mark = match (summary.expected, summary.observed) {
            (None, _) => String::new(),
            (Some(_), Trend::Insufficient) => " (too few solved rows to judge)".to_string(),
            (Some(expected), observed) if expected == observed => " ✓".to_string(),
            (Some(expected), _) => format!(" ✗ (expected {expected})"),
        };
        let _ = writeln!(
            out,
            "  {}: {}{}",
            summary.column.label(),
            summary.observed,
            mark
        );
    }
    out
}

/// Renders a sweep summary identical to what `cmd_sweep` prints; exposed
/// for tests.
pub fn render_sweep_summary(result: &ScenarioResult) -> String {
    render_sweep(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PreferenceWeights;

    fn all_ones_config() -> ModelConfig {
        ModelConfig {
            prefs: PreferenceWeights::uniform(1.0),
            econ: crate::model::EconomyParams {
                wage: 1.0,
                tau: 0.1,
                wage_next: 1.0,
                interest: 1.0,
                pension_interest: 1.0,
            },
            budget_tol: 1e-10,
            fd_step: 1e-6,
        }
    }

    #[test]
    fn sig6_rounds_to_six_significant_digits() {
        assert_eq!(sig6(1.0 / 6.0), "0.166667");
        assert_eq!(sig6(5.0 / 3.0), "1.66667");
        assert_eq!(sig6(0.1), "0.1");
        assert_eq!(sig6(-8.447971722374284), "-8.44797");
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(5.0 / 36.0), "0.138889");
    }

    #[test]
    fn solve_prints_the_allocation_and_exits_zero() {
        let result = cmd_solve(&all_ones_config());
        assert_eq!(result.code, EXIT_OK);
        assert!(result.stdout.contains("regime: Interior"));
        assert!(result.stdout.contains("1.66667"));
        assert!(result.stdout.contains("= 0.1"));
        assert!(result.stdout.contains("utility = -8.44797"));
    }

    #[test]
    fn solve_names_the_corner_regime_and_exits_two() {
        let mut cfg = all_ones_config();
        cfg.prefs.gamma2 = 0.5;
        cfg.prefs.gamma5 = 0.5;
        cfg.prefs.gamma3 = 2.0;
        let result = cmd_solve(&cfg);
        assert_eq!(result.code, EXIT_NOT_INTERIOR);
        assert!(result.stderr.contains("Corner"));
    }

    #[test]
    fn statics_all_flags_pass_on_all_ones() {
        let result = cmd_statics(&all_ones_config(), true, true);
        assert_eq!(result.code, EXIT_OK);
        assert!(result.stdout.contains("analytic sensitivity matrix"));
        assert!(result.stdout.contains("tabulated reference matrix"));
        assert!(result.stdout.contains("flagged 6 of 42 cells"));
        assert!(result.stdout.contains("claims passed: 9/9"));
    }

    #[test]
    fn verify_config_instance_only() {
        let result = cmd_verify(&all_ones_config(), 0, 42, false);
        assert_eq!(result.code, EXIT_OK);
        assert!(result.stdout.contains("config instance: PASS"));
        assert!(result.stdout.contains("result: PASS"));
    }

    #[test]
    fn corrupted_verify_exits_three() {
        let result = cmd_verify(&all_ones_config(), 0, 42, true);
        assert_eq!(result.code, EXIT_VERIFY_FAILED);
        assert!(result.stdout.contains("result: FAIL"));
    }

    #[test]
    fn sweep_requires_complete_range_flags() {
        let cfg = all_ones_config();
        let opts = SweepOptions {
            param: Some(SweepParameter::Weight(Weight::Pension)),
            from: Some(1.0),
            ..Default::default()
        };
        let result = cmd_sweep(&cfg, &opts);
        assert_eq!(result.code, EXIT_USAGE);
    }

    #[test]
    fn sweep_rejects_single_step_grids() {
        let cfg = all_ones_config();
        let opts = SweepOptions {
            param: Some(SweepParameter::Weight(Weight::Pension)),
            from: Some(0.5),
            to: Some(1.0),
            steps: Some(1),
            ..Default::default()
        };
        let result = cmd_sweep(&cfg, &opts);
        assert_eq!(result.code, EXIT_USAGE);
        assert!(result.stderr.contains("--steps"));
    }

    #[test]
    fn crowd_out_scenario_defaults_report_expected_verdicts() {
        let cfg = all_ones_config();
        let opts = SweepOptions {
            scenario: Some(Scenario::CrowdOut),
            ..Default::default()
        };
        let result = cmd_sweep(&cfg, &opts);
        assert_eq!(result.code, EXIT_OK, "stderr: {}", result.stderr);
        assert!(result.stdout.contains("s: decreasing ✓"));
        assert!(result.stdout.contains("c: decreasing ✓"));
        assert!(result.stdout.contains("p: decreasing ✓"));
        assert!(result.stdout.contains("n: decreasing ✓"));
        assert!(result.stdout.contains("q: increasing ✓"));
    }

    #[test]
    fn sweep_across_the_margin_reports_skips_and_exits_zero() {
        let cfg = all_ones_config();
        let opts = SweepOptions {
            param: Some(SweepParameter::Weight(Weight::Education)),
            from: Some(1.5),
            to: Some(2.5),
            steps: Some(5),
            ..Default::default()
        };
        let result = cmd_sweep(&cfg, &opts);
        assert_eq!(result.code, EXIT_OK, "stderr: {}", result.stderr);
        assert!(result.stdout.contains("skipped"));
    }

    #[test]
    fn corner_base_sweep_exits_two() {
        let mut cfg = all_ones_config();
        cfg.prefs.gamma3 = 3.0;
        let opts = SweepOptions {
            scenario: Some(Scenario::CrowdOut),
            ..Default::default()
        };
        let result = cmd_sweep(&cfg, &opts);
        assert_eq!(result.code, EXIT_NOT_INTERIOR);
    }
}
