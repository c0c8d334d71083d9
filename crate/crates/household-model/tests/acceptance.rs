//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`
//! to see the lines for passing criteria too.

use household_model::error::Error;
use household_model::model::{
    budget_residual, evaluate_utility, solve_closed_form, Decision, EconomyParams,
    PreferenceWeights, Regime, Weight,
};
use household_model::oracle::{foc_residuals, maximize_numerically, DEFAULT_MAX_ITER};
use household_model::sample::interior_instances;
use household_model::sensitivity::{
    discrepancy_report, finite_difference_jacobian, verify_claims, Adjudication,
    analytic_jacobian,
};
use household_model::sweep::{run_sweep, PointOutcome, SweepParameter, SweepSpec};
use std::process::Command;
use std::time::{Duration, Instant};

const SEED: u64 = 42;

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
fn criterion_1_closed_form_reproduction() {
    let (prefs, econ) = all_ones();
    let start = Instant::now();
    let alloc = solve_closed_form(&prefs, &econ).unwrap();
    let elapsed = start.elapsed();

    for (value, expected) in [
        (alloc.consumption, 1.0 / 6.0),
        (alloc.savings, 1.0 / 6.0),
        (alloc.health, 1.0 / 6.0),
        (alloc.pension, 1.0 / 6.0),
        (alloc.children, 5.0 / 3.0),
        (alloc.education, 0.1),
    ] {
        assert!(rel_err(value, expected) <= 1e-12, "{value} vs {expected}");
    }
    assert!(budget_residual(&alloc, &econ).abs() <= 1e-10);
    assert!(elapsed < Duration::from_millis(1), "solve took {elapsed:?}");
    println!(
        "ACCEPTANCE PASS: criterion 1: closed-form reproduction (all-ones instance, {elapsed:?})"
    );
}

#[test]
fn criterion_2_oracle_equivalence() {
    let start = Instant::now();
    let instances = interior_instances(SEED, 100);
    let mut max_gap: f64 = 0.0;
    let mut max_utility_gap: f64 = 0.0;
    let mut max_residual: f64 = 0.0;
    for (prefs, econ) in &instances {
        let closed = solve_closed_form(prefs, econ).unwrap();
        let closed_utility = evaluate_utility(&closed, prefs, econ).unwrap();
        let residual = foc_residuals(&closed, prefs, econ).unwrap().max_abs();
        assert!(residual <= 1e-9, "closed-form residual {residual}");
        max_residual = max_residual.max(residual);

        let oracle = maximize_numerically(prefs, econ, 1e-10, DEFAULT_MAX_ITER).unwrap();
        assert!(oracle.converged);
        for d in Decision::ALL {
            let gap = rel_err(oracle.allocation.decision(d), closed.decision(d));
            assert!(
                gap <= 1e-4,
                "component {} gap {gap} (oracle {} vs closed {})",
                d.symbol(),
                oracle.allocation.decision(d),
                closed.decision(d)
            );
            max_gap = max_gap.max(gap);
        }
        let utility_gap = (oracle.utility - closed_utility).abs() / closed_utility.abs().max(1.0);
        assert!(utility_gap <= 1e-10, "utility gap {utility_gap}");
        max_utility_gap = max_utility_gap.max(utility_gap);
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(10), "oracle run took {elapsed:?}");
    println!(
        "ACCEPTANCE PASS: criterion 2: oracle equivalence over 100 instances \
         (max component gap {max_gap:.2e}, max utility gap {max_utility_gap:.2e}, \
         max closed-form residual {max_residual:.2e}, {elapsed:?})"
    );
}

#[test]
fn criterion_3_jacobian_correctness() {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (prefs, econ) in interior_instances(SEED, 100) {
        let analytic = analytic_jacobian(&prefs, &econ).unwrap();
        let fd = finite_difference_jacobian(&prefs, &econ, 1e-6).unwrap();
        assert!(fd.fully_available());
        for d in Decision::ALL {
            for w in Weight::ALL {
                let a = analytic.get(d, w);
                let f = fd.get(d, w).unwrap();
                let gap = (a - f).abs() / a.abs().max(1e-12);
                assert!(
                    gap <= 1e-5,
                    "cell ({}, {}): analytic {a} vs fd {f}",
                    d.symbol(),
                    w.key()
                );
                worst = worst.max(gap);
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(5), "jacobian run took {elapsed:?}");
    println!(
        "ACCEPTANCE PASS: criterion 3: analytic jacobian matches finite differences \
         on 42 cells x 100 instances (worst gap {worst:.2e}, {elapsed:?})"
    );
}

#[test]
fn criterion_4_theorem_suite() {
    for (prefs, econ) in interior_instances(SEED, 100) {
        let report = verify_claims(&prefs, &econ).unwrap();
        for check in &report.checks {
            assert!(check.passed, "claim {} failed on a sampled instance", check.id.name());
        }
        let m = analytic_jacobian(&prefs, &econ).unwrap();
        let v1 = m.get(Decision::Children, Weight::Consumption);
        let v4 = m.get(Decision::Children, Weight::Health);
        let v6 = m.get(Decision::Children, Weight::Savings);
        assert_eq!(v1.to_bits(), v4.to_bits());
        assert_eq!(v4.to_bits(), v6.to_bits());
    }
    println!(
        "ACCEPTANCE PASS: criterion 4: all nine claim groups hold on 100 instances \
         with the fertility-tradeoff equality exact"
    );
}

#[test]
fn criterion_5_tabulated_matrix_audit() {
    let (mut prefs, econ) = all_ones();
    prefs.gamma3 = 0.5;
    let report = discrepancy_report(&prefs, &econ).unwrap();

    let mut flagged: Vec<(Decision, Weight)> =
        report.flagged().map(|c| (c.decision, c.weight)).collect();
    flagged.sort_by_key(|(d, w)| (d.row(), w.col()));
    let mut expected = vec![
        (Decision::Consumption, Weight::Consumption),
        (Decision::Health, Weight::Health),
        (Decision::Savings, Weight::Savings),
        (Decision::Pension, Weight::Pension),
        (Decision::Children, Weight::Children),
        (Decision::Children, Weight::FutureEarnings),
        (Decision::Education, Weight::Education),
    ];
    expected.sort_by_key(|(d, w)| (d.row(), w.col()));
    assert_eq!(flagged, expected, "flagged cells differ from the expected seven");

    for cell in report.flagged() {
        assert_eq!(
            cell.adjudication,
            Adjudication::SupportsAnalytic,
            "cell ({}, {})",
            cell.decision.symbol(),
            cell.weight.key()
        );
    }
    let mut agreeing = 0;
    for cell in report.cells.iter().filter(|c| !c.flagged) {
        assert!(cell.deviation <= 1e-8 * cell.analytic.abs().max(1.0));
        agreeing += 1;
    }
    assert_eq!(agreeing, 35);
    println!(
        "ACCEPTANCE PASS: criterion 5: tabulated-matrix audit flags exactly the seven \
         known cells and finite differences side with the analytic values"
    );
}

#[test]
fn criterion_6_regime_handling() {
    let (mut prefs, econ) = all_ones();
    prefs.gamma2 = 0.5;
    prefs.gamma5 = 0.5;

    prefs.gamma3 = 2.0;
    match solve_closed_form(&prefs, &econ).unwrap_err() {
        Error::NotInterior(class) => {
            assert_eq!(class.regime, Regime::Corner);
            assert!(class.margin < 0.0);
        }
        other => panic!("expected NotInterior, got {other}"),
    }

    prefs.gamma3 = 1.0;
    match solve_closed_form(&prefs, &econ).unwrap_err() {
        Error::NotInterior(class) => assert_eq!(class.regime, Regime::Singular),
        other => panic!("expected NotInterior, got {other}"),
    }

    let (prefs, econ) = all_ones();
    let result = run_sweep(&SweepSpec {
        prefs,
        econ,
        parameter: SweepParameter::Weight(Weight::Education),
        grid: vec![1.6, 1.8, 2.0, 2.2, 2.4],
        track: vec![],
    })
    .unwrap();
    assert_eq!(result.rows.len(), 5);
    let tags: Vec<Option<String>> = result
        .rows
        .iter()
        .map(|r| match &r.outcome {
            PointOutcome::Solved(_) => None,
            PointOutcome::Skipped { tag } => Some(tag.clone()),
        })
        .collect();
    assert_eq!(tags[0], None);
    assert_eq!(tags[1], None);
    assert_eq!(tags[2].as_deref(), Some("Singular"));
    assert_eq!(tags[3].as_deref(), Some("Corner"));
    assert_eq!(tags[4].as_deref(), Some("Corner"));
    println!(
        "ACCEPTANCE PASS: criterion 6: Corner/Singular instances refused with the right \
         classification and boundary-crossing sweeps record skips"
    );
}

#[test]
fn criterion_7_invariance_properties() {
    // Bases keep discount weights at or below 0.1 so a 10x scale stays
    // admissible.
    let mut bases: Vec<(PreferenceWeights, EconomyParams)> = vec![(
        PreferenceWeights {
            gamma1: 1.3,
            gamma2: 0.9,
            gamma3: 0.4,
            gamma4: 0.7,
            gamma5: 0.08,
            gamma6: 0.1,
            gamma7: 0.06,
        },
        EconomyParams {
            wage: 2.0,
            tau: 0.15,
            wage_next: 1.0,
            interest: 1.1,
            pension_interest: 1.05,
        },
    )];
    for (mut prefs, econ) in interior_instances(SEED, 40) {
        prefs.gamma5 *= 0.1;
        prefs.gamma6 *= 0.1;
        prefs.gamma7 *= 0.1;
        if prefs.margin() >= 0.05 {
            bases.push((prefs, econ));
        }
    }
    assert!(bases.len() >= 10, "need enough scale-safe bases, got {}", bases.len());

    for (prefs, econ) in &bases {
        let base = solve_closed_form(prefs, econ).unwrap();
        for k in [0.5, 2.0, 10.0] {
            let scaled = solve_closed_form(&prefs.scaled(k), econ).unwrap();
            for d in Decision::ALL {
                assert!(
                    rel_err(scaled.decision(d), base.decision(d)) <= 1e-12,
                    "scale {k}, {}: {} vs {}",
                    d.symbol(),
                    scaled.decision(d),
                    base.decision(d)
                );
            }
        }
        for k in [0.5, 2.0, 10.0] {
            let mut richer = *econ;
            richer.wage = econ.wage * k;
            let scaled = solve_closed_form(prefs, &richer).unwrap();
            for d in [
                Decision::Consumption,
                Decision::Savings,
                Decision::Health,
                Decision::Pension,
                Decision::Education,
            ] {
                assert!(rel_err(scaled.decision(d), k * base.decision(d)) <= 1e-12);
            }
            assert!(rel_err(scaled.children, base.children) <= 1e-12);
        }
    }
    println!(
        "ACCEPTANCE PASS: criterion 7: allocation invariant under uniform weight scaling \
         (k in {{0.5, 2, 10}}) and linear in the wage with fertility unchanged ({} bases)",
        bases.len()
    );
}

#[test]
fn criterion_8_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("all_ones.cfg");
    std::fs::write(
        &config_path,
        "gamma1 = 1\ngamma2 = 1\ngamma3 = 1\ngamma4 = 1\ngamma5 = 1\ngamma6 = 1\ngamma7 = 1\n\
         w = 1\ntau = 0.1\nw_next = 1\nR_next = 1\nRp_next = 1\n",
    )
    .unwrap();

    let run = |csv_name: &str| {
        let csv_path = dir.path().join(csv_name);
        let output = Command::new(env!("CARGO_BIN_EXE_household-model"))
            .arg("sweep")
            .arg(&config_path)
            .args(["--scenario", "crowd_out", "--out"])
            .arg(&csv_path)
            .output()
            .unwrap();
        (output, std::fs::read(&csv_path).unwrap())
    };

    let (first_output, first_csv) = run("a.csv");
    let (second_output, second_csv) = run("b.csv");

    assert_eq!(first_output.status.code(), Some(0));
    assert_eq!(second_output.status.code(), Some(0));
    assert_eq!(first_csv, second_csv, "CSV bytes differ between runs");

    let stdout = String::from_utf8(first_output.stdout.clone()).unwrap();
    for verdict in [
        "s: decreasing ✓",
        "c: decreasing ✓",
        "p: decreasing ✓",
        "n: decreasing ✓",
        "q: increasing ✓",
    ] {
        assert!(stdout.contains(verdict), "missing verdict {verdict:?} in:\n{stdout}");
    }
    // stdout differs only in the --out path; the sweep body is identical
    let body = |out: &[u8]| {
        String::from_utf8(out.to_vec())
            .unwrap()
            .lines()
            .filter(|l| !l.starts_with("wrote "))
            .collect::<Vec<_>>()
            .join("\n")
    };
    assert_eq!(body(&first_output.stdout), body(&second_output.stdout));
    println!(
        "ACCEPTANCE PASS: criterion 8: crowd-out sweep CSV byte-identical across runs \
         with the expected verdicts and exit 0"
    );
}
