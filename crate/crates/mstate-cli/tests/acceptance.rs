//! The acceptance gate: nine numbered criteria covering the whole engine,
//! each printed as a single `[PASS]`/`[FAIL]` line with its headline
//! numbers. A criterion failure never hides the others; everything runs,
//! then the test asserts that the failure list is empty.
//!
//! 1. Round-trip residuals: estimated surfaces → rates → re-solved forward
//!    equations reproduce the surfaces to 1e−9 on all three shipped models.
//! 2. Analytic one-dimensional limit of the two-state model, with an O(h)
//!    order check under grid halving.
//! 3. Analytic second moment and endowment variance of the two-state model.
//! 4. Dual-path second moment: direct four-block evaluation versus the
//!    squared-specification route, 1e−9 relative on all three models.
//! 5. Path-wise squaring identity on random paths and random payment
//!    specifications, 1e−10 relative.
//! 6. Exact count-level identities of the estimated surfaces and the
//!    pivot-anchored counting processes, at several ensemble sizes.
//! 7. Free-policy valuation against the Monte Carlo oracle under both
//!    conditioning schemes, plus the ρ ≡ 1 degeneration to plain reserves.
//! 8. Non-Markov discrimination: duration buckets separate reserves by more
//!    than five combined standard errors, and the as-if-Markov value is the
//!    frequency-weighted bucket mean.
//! 9. Byte-identical artifacts across strict-determinism CLI reruns.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mstate::{
    conditional_variance, estimate_moment_surfaces, eval_cashflow_1d, eval_cashflow_2d,
    example_config, expected_2d, expected_future_1d, expected_past_1d, free_policy_prospective,
    free_policy_retrospective, mc_conditional_mean, path_payout_free_policy, path_payout_future,
    second_moment_future, simulate_ensemble, solve, square_cashflow,
    transition_rates, Cell, CashflowSpec1D, ConditioningScheme, Depth, DiscountCurve,
    IntensityModel, Measure1D, PayoutSide, QuadBlocks, RateFn, RateSystem, TimeGrid,
};

type Criterion = fn() -> Result<String, String>;

#[test]
fn acceptance() {
    let criteria: [(&str, Criterion); 9] = [
        ("1 round-trip residuals on all shipped models", c1_round_trip),
        ("2 analytic one-dimensional limit", c2_analytic_1d),
        ("3 analytic second moment and variance", c3_analytic_second_moment),
        ("4 dual-path second moment", c4_dual_path),
        ("5 path-wise squaring identity", c5_pathwise_squaring),
        ("6 exact count-level identities", c6_exact_identities),
        ("7 free-policy valuation against the oracle", c7_free_policy),
        ("8 non-Markov discrimination by duration", c8_duration_discrimination),
        ("9 byte-identical deterministic reruns", c9_determinism),
    ];
    let mut failures = Vec::new();
    for (name, f) in criteria {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panicked".into());
            Err(format!("panicked: {msg}"))
        });
        let dt = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("[PASS] criterion {name} ({dt:.1}s) — {detail}"),
            Err(msg) => {
                println!("[FAIL] criterion {name} ({dt:.1}s) — {msg}");
                failures.push(format!("criterion {name}: {msg}"));
            }
        }
    }
    assert!(
        failures.is_empty(),
        "acceptance failures:\n{}",
        failures.join("\n")
    );
}

fn rel_err(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs().max(1.0)
}

/// Criterion 1 — simulate each shipped model at full scale, estimate every
/// observed as-if-Markov cell, derive rates, re-solve the forward equations
/// and compare the solved surfaces with the estimated ones in sup norm.
fn c1_round_trip() -> Result<String, String> {
    let start = Instant::now();
    let mut worst_p1 = 0.0f64;
    let mut worst_p2 = 0.0f64;
    for name in ["two_state", "disability", "free_policy"] {
        let resolved = example_config(name)
            .and_then(|c| c.resolve())
            .map_err(|e| format!("{name}: {e}"))?;
        let paths = simulate_ensemble(
            &resolved.model,
            &resolved.grid,
            resolved.n_paths,
            resolved.seed,
            2,
        )
        .map_err(|e| format!("{name}: {e}"))?;
        for (cell, _) in resolved.scheme.observed_cells(&paths, &resolved.grid) {
            let surfaces = estimate_moment_surfaces(
                &paths,
                &resolved.scheme,
                cell,
                &resolved.grid,
                resolved.space.label(cell.state),
                resolved.space.len(),
                Depth::Joint,
            )
            .map_err(|e| format!("{name}: {e}"))?;
            let rates = transition_rates(&surfaces).map_err(|e| format!("{name}: {e}"))?;
            let mut initial = vec![0.0; resolved.space.len()];
            initial[cell.state] = 1.0;
            let solved = solve(&rates, &initial, true).map_err(|e| format!("{name}: {e}"))?;
            let res = mstate::residual_and_consistency(&solved, &surfaces)
                .map_err(|e| format!("{name}: {e}"))?;
            worst_p1 = worst_p1.max(res.sup_p1);
            worst_p2 = worst_p2.max(res.sup_p2.ok_or("missing joint residual")?);
        }
    }
    let dt = start.elapsed().as_secs_f64();
    if worst_p1 > 1e-9 || worst_p2 > 1e-9 {
        return Err(format!(
            "sup residuals p1 = {worst_p1:.3e}, p2 = {worst_p2:.3e} exceed 1e-9"
        ));
    }
    if dt > 300.0 {
        return Err(format!("runtime {dt:.0}s exceeds the 5-minute budget"));
    }
    Ok(format!(
        "sup residuals p1 = {worst_p1:.3e}, p2 = {worst_p2:.3e} over 3 models, all cells"
    ))
}

/// Hand-built forward rate system of the two-state model with constant
/// hazard `mu`: the analytic cumulative rate lumped onto the grid.
fn two_state_rates(mu: f64, grid: &TimeGrid) -> RateSystem {
    let len = grid.len();
    let h = grid.step();
    let n = 2;
    let mut dl1 = vec![0.0; n * n * len];
    for m in 1..len {
        dl1[(0 * n + 1) * len + m] = mu * h;
        dl1[(0 * n + 0) * len + m] = -mu * h;
    }
    RateSystem::from_parts(n, len, grid.pivot_index(), dl1, QuadBlocks::empty(n, len))
        .expect("valid analytic rate system")
}

/// Term-insurance reserve of the two-state model on a given grid, solved
/// from the analytic rates.
fn two_state_v_plus(mu: f64, r: f64, grid: &TimeGrid) -> f64 {
    let rates = two_state_rates(mu, grid);
    let solved = solve(&rates, &[1.0, 0.0], false).expect("solvable");
    let spec = CashflowSpec1D::new(2, grid.len())
        .with_transition_const(0, 1, 1.0)
        .expect("valid spec");
    let discount = DiscountCurve::flat(grid, r);
    expected_future_1d(&spec, &solved, &rates, &discount).expect("valuable")
}

/// Criterion 2 — against the closed forms of the two-state model:
/// survival `e^{-mu T}` and term-insurance reserve
/// `mu/(mu+r) (1 - e^{-(mu+r)T})`, plus an O(h) order check.
fn c2_analytic_1d() -> Result<String, String> {
    const MU: f64 = 0.1;
    const R: f64 = 0.03;
    const T: f64 = 10.0;

    let grid = TimeGrid::new(T, 0.001, 0.0).map_err(|e| e.to_string())?;
    let rates = two_state_rates(MU, &grid);
    let solved = solve(&rates, &[1.0, 0.0], false).map_err(|e| e.to_string())?;
    let p_active = solved.p1(0, grid.len() - 1);
    let p_exact = (-MU * T).exp();
    if (p_active - p_exact).abs() > 5e-4 {
        return Err(format!(
            "P_active(T) = {p_active:.8} vs e^(-1) = {p_exact:.8}, |diff| > 5e-4"
        ));
    }

    let v = two_state_v_plus(MU, R, &grid);
    let v_exact = MU / (MU + R) * (1.0 - (-(MU + R) * T).exp());
    let v_rel = (v - v_exact).abs() / v_exact;
    if v_rel > 1e-3 {
        return Err(format!(
            "term V+ = {v:.8} vs analytic {v_exact:.8}, relative {v_rel:.2e} > 1e-3"
        ));
    }

    // O(h): halving the step should halve the error.
    let errors: Vec<f64> = [0.04, 0.02, 0.01]
        .iter()
        .map(|&h| {
            let g = TimeGrid::new(T, h, 0.0).expect("grid");
            (two_state_v_plus(MU, R, &g) - v_exact).abs()
        })
        .collect();
    let r1 = errors[0] / errors[1];
    let r2 = errors[1] / errors[2];
    if !(1.7..=2.3).contains(&r1) || !(1.7..=2.3).contains(&r2) {
        return Err(format!(
            "error ratios under halving: {r1:.3}, {r2:.3} (expected near 2)"
        ));
    }
    Ok(format!(
        "P error {:.2e}, V+ relative {v_rel:.2e}, halving ratios {r1:.2}/{r2:.2}",
        (p_active - p_exact).abs()
    ))
}

/// Criterion 3 — second moment of the term insurance and variance of the
/// pure endowment against closed forms, from a simulated ensemble.
fn c3_analytic_second_moment() -> Result<String, String> {
    const MU: f64 = 0.1;
    const R: f64 = 0.03;
    const T: f64 = 10.0;
    const N: usize = 200_000;

    let grid = TimeGrid::new(T, 0.01, 0.0).map_err(|e| e.to_string())?;
    let model = IntensityModel::new(2, 0)
        .and_then(|m| m.with_rate(0, 1, RateFn::Constant { value: MU }))
        .map_err(|e| e.to_string())?;
    let paths = simulate_ensemble(&model, &grid, N, 314_159, 2).map_err(|e| e.to_string())?;
    let scheme = ConditioningScheme::AsIfMarkov;
    let cell = Cell { state: 0, bucket: None };
    let surfaces = estimate_moment_surfaces(&paths, &scheme, cell, &grid, "active", 2, Depth::Joint)
        .map_err(|e| e.to_string())?;
    let rates = transition_rates(&surfaces).map_err(|e| e.to_string())?;
    let solved = solve(&rates, &[1.0, 0.0], true).map_err(|e| e.to_string())?;

    // Term insurance: S+ against mu/(mu+2r) (1 - e^{-(mu+2r)T}).
    let term = CashflowSpec1D::new(2, grid.len())
        .with_transition_const(0, 1, 1.0)
        .map_err(|e| e.to_string())?;
    let discount = DiscountCurve::flat(&grid, R);
    let s_plus = second_moment_future(&term, &solved, &rates, &discount)
        .map_err(|e| e.to_string())?;
    let s_exact = MU / (MU + 2.0 * R) * (1.0 - (-(MU + 2.0 * R) * T).exp());
    let conv = grid.conventions();
    let o_sq = mc_conditional_mean(&paths, &scheme, cell, &grid, "active", |_, p| {
        let y = path_payout_future(p, &term, &discount, &conv);
        Ok(y * y)
    })
    .map_err(|e| e.to_string())?;
    let s_tol = 1e-3 * s_exact + 3.0 * o_sq.se;
    if (s_plus - s_exact).abs() > s_tol {
        return Err(format!(
            "S+ = {s_plus:.6} vs analytic {s_exact:.6}, |diff| = {:.2e} > {s_tol:.2e}",
            (s_plus - s_exact).abs()
        ));
    }

    // Pure endowment, undiscounted: variance of the survival indicator is
    // p(1-p) with p = e^{-mu T}.
    let mut atom = Measure1D::zeros(grid.len());
    atom.add_atom(grid.len() - 1, 1.0);
    let endow = CashflowSpec1D::new(2, grid.len())
        .with_sojourn(0, atom)
        .map_err(|e| e.to_string())?;
    let flat = DiscountCurve::flat(&grid, 0.0);
    let dec = conditional_variance(&endow, &solved, &rates, &flat).map_err(|e| e.to_string())?;
    let p = (-MU * T).exp();
    let var_exact = p * (1.0 - p);
    let o_v = mc_conditional_mean(&paths, &scheme, cell, &grid, "active", |_, pa| {
        Ok(path_payout_future(pa, &endow, &flat, &conv))
    })
    .map_err(|e| e.to_string())?;
    // Delta-method bound: Var = S - V^2 inherits se_S + 2|V| se_V.
    let var_se = o_sq.se.max(o_v.se) + 2.0 * o_v.mean.abs() * o_v.se;
    let var_tol = 1e-3 * var_exact + 3.0 * var_se;
    if (dec.variance - var_exact).abs() > var_tol {
        return Err(format!(
            "endowment variance {0:.6} vs p(1-p) = {var_exact:.6}, |diff| = {1:.2e} > {var_tol:.2e}",
            dec.variance,
            (dec.variance - var_exact).abs()
        ));
    }
    Ok(format!(
        "S+ off by {:.2e} (tol {s_tol:.1e}), endowment variance off by {:.2e} (tol {var_tol:.1e})",
        (s_plus - s_exact).abs(),
        (dec.variance - var_exact).abs()
    ))
}

/// Criterion 4 — the two implementations of the second moment (direct
/// four-block evaluation vs the squared two-dimensional specification)
/// agree to 1e−9 relative on every shipped model.
fn c4_dual_path() -> Result<String, String> {
    let mut worst = 0.0f64;
    for name in ["two_state", "disability", "free_policy"] {
        let mut cfg = example_config(name).map_err(|e| e.to_string())?;
        cfg.ensemble.n_paths = 20_000;
        let resolved = cfg.resolve().map_err(|e| format!("{name}: {e}"))?;
        let paths = simulate_ensemble(
            &resolved.model,
            &resolved.grid,
            resolved.n_paths,
            resolved.seed,
            2,
        )
        .map_err(|e| format!("{name}: {e}"))?;
        let initial_state = resolved.model.initial_state();
        let cell = Cell { state: initial_state, bucket: None };
        let surfaces = estimate_moment_surfaces(
            &paths,
            &resolved.scheme,
            cell,
            &resolved.grid,
            resolved.space.label(initial_state),
            resolved.space.len(),
            Depth::Joint,
        )
        .map_err(|e| format!("{name}: {e}"))?;
        let rates = transition_rates(&surfaces).map_err(|e| format!("{name}: {e}"))?;
        let mut initial = vec![0.0; resolved.space.len()];
        initial[initial_state] = 1.0;
        let solved = solve(&rates, &initial, true).map_err(|e| format!("{name}: {e}"))?;

        // The free-policy example ships no plain specification; exercise the
        // dual path there with an ad-hoc one over its four states.
        let specs: Vec<CashflowSpec1D> = if resolved.specs.is_empty() {
            let len = resolved.grid.len();
            let mut b0 = Measure1D::from_rate(&resolved.grid, |_| -0.05);
            b0.add_atom(len - 1, 1.0);
            let mut b2 = Measure1D::zeros(len);
            b2.add_atom(len - 1, 1.0);
            vec![CashflowSpec1D::new(4, len)
                .with_sojourn(0, b0)
                .and_then(|s| s.with_sojourn(2, b2))
                .and_then(|s| s.with_transition_const(0, 1, 0.6))
                .and_then(|s| s.with_transition_const(2, 3, 0.6))
                .map_err(|e| format!("{name}: {e}"))?]
        } else {
            resolved.specs.iter().map(|(_, s)| s.clone()).collect()
        };
        for spec in &specs {
            let direct = second_moment_future(spec, &solved, &rates, &resolved.discount)
                .map_err(|e| format!("{name}: {e}"))?;
            let squared = square_cashflow(spec, &resolved.discount, &resolved.grid)
                .and_then(|sq| expected_2d(&sq, &solved, &rates))
                .map_err(|e| format!("{name}: {e}"))?;
            worst = worst.max(rel_err(direct, squared));
        }
    }
    if worst > 1e-9 {
        return Err(format!("worst relative disagreement {worst:.3e} > 1e-9"));
    }
    Ok(format!("worst relative disagreement {worst:.3e}"))
}

/// Criterion 5 — `(Y+)²` along every path: evaluating the squared
/// two-dimensional specification equals squaring the one-dimensional
/// payout, to 1e−10 relative, over random paths × random specifications.
fn c5_pathwise_squaring() -> Result<String, String> {
    let grid = TimeGrid::new(2.0, 0.05, 1.0).map_err(|e| e.to_string())?;
    let len = grid.len();
    let model = IntensityModel::new(3, 0)
        .and_then(|m| m.with_rate(0, 1, RateFn::Constant { value: 0.4 }))
        .and_then(|m| {
            m.with_rate(1, 0, RateFn::DurationExp { base: 0.1, amp: 0.5, decay: 1.0 })
        })
        .and_then(|m| m.with_rate(0, 2, RateFn::Constant { value: 0.15 }))
        .and_then(|m| m.with_rate(1, 2, RateFn::DurationLinear { base: 0.1, slope: 0.2 }))
        .map_err(|e| e.to_string())?;
    let paths = simulate_ensemble(&model, &grid, 1000, 777, 2).map_err(|e| e.to_string())?;
    let discount = DiscountCurve::flat(&grid, 0.05);

    let mut rng = ChaCha8Rng::seed_from_u64(20_250_815);
    let mut worst = 0.0f64;
    let mut checked = 0usize;
    for _ in 0..20 {
        let mut spec = CashflowSpec1D::new(3, len);
        for i in 0..3 {
            let mut b = Measure1D::zeros(len);
            for _ in 0..3 {
                b.add_atom(rng.gen_range(0..len), rng.gen_range(-2.0..2.0));
            }
            spec = spec.with_sojourn(i, b).map_err(|e| e.to_string())?;
        }
        for i in 0..3 {
            for j in 0..3 {
                if i != j && rng.gen_bool(0.7) {
                    let v: Vec<f64> = (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect();
                    spec = spec.with_transition(i, j, v).map_err(|e| e.to_string())?;
                }
            }
        }
        let sq = square_cashflow(&spec, &discount, &grid).map_err(|e| e.to_string())?;
        for path in &paths {
            let y = eval_cashflow_1d(&spec, path, &discount, &grid, PayoutSide::Future);
            let y2 = eval_cashflow_2d(&sq, path, &grid);
            let err = (y2 - y * y).abs() / (y * y).max(1.0);
            worst = worst.max(err);
            checked += 1;
        }
    }
    if worst > 1e-10 {
        return Err(format!(
            "worst relative squaring defect {worst:.3e} > 1e-10 over {checked} evaluations"
        ));
    }
    Ok(format!(
        "worst relative squaring defect {worst:.3e} over {checked} evaluations"
    ))
}

/// Criterion 6 — exact identities, checked as exact float equality (all
/// quantities are integer counts): surface normalization, marginalization,
/// diagonal restriction, path-wise indicator reconstruction from the
/// counting processes, and the diagonal-completion row/column identities.
fn c6_exact_identities() -> Result<String, String> {
    let cfg = example_config("disability").map_err(|e| e.to_string())?;
    let resolved = cfg.resolve().map_err(|e| e.to_string())?;
    let grid = &resolved.grid;
    let n = resolved.space.len();
    let len = grid.len();
    let p = grid.pivot_index();

    for ensemble_size in [1usize, 37, 2000] {
        let paths = simulate_ensemble(&resolved.model, grid, ensemble_size, 4242, 2)
            .map_err(|e| e.to_string())?;
        for (cell, n_cell) in resolved.scheme.observed_cells(&paths, grid) {
            let surfaces = estimate_moment_surfaces(
                &paths,
                &resolved.scheme,
                cell,
                grid,
                resolved.space.label(cell.state),
                n,
                Depth::Joint,
            )
            .map_err(|e| e.to_string())?;
            let nc = n_cell as f64;
            for m in 0..len {
                let total: f64 = (0..n).map(|i| surfaces.occupation_count(i, m)).sum();
                if total != nc {
                    return Err(format!(
                        "sum_i occ(i, {m}) = {total} != {nc} at n = {ensemble_size}"
                    ));
                }
            }
            for i in 0..n {
                for m in 0..len {
                    if surfaces.joint_occupation_count(i, i, m, m)
                        != surfaces.occupation_count(i, m)
                    {
                        return Err(format!(
                            "P_ii(t,t) != P_i(t) at i = {i}, m = {m}, n = {ensemble_size}"
                        ));
                    }
                }
            }
            // Normalization and marginalization of the joint surface over
            // the full grid square.
            for m1 in 0..len {
                for m2 in 0..len {
                    let mut grand = 0.0;
                    for i in 0..n {
                        let mut row = 0.0;
                        for k in 0..n {
                            row += surfaces.joint_occupation_count(i, k, m1, m2);
                        }
                        if row != surfaces.occupation_count(i, m1) {
                            return Err(format!(
                                "sum_k P_ik({m1},{m2}) != P_i({m1}) at i = {i}, n = {ensemble_size}"
                            ));
                        }
                        grand += row;
                    }
                    if grand != nc {
                        return Err(format!(
                            "sum_ik P_ik({m1},{m2}) = {grand} != {nc} at n = {ensemble_size}"
                        ));
                    }
                }
            }
        }
    }

    // Path-wise reconstruction: indicators from pivot-anchored counting
    // processes, and the diagonal row/column completion identities.
    let paths = simulate_ensemble(&resolved.model, grid, 200, 910_910, 2)
        .map_err(|e| e.to_string())?;
    let conv = grid.conventions();
    for path in &paths {
        let counts = mstate::counting_processes(path, n, &conv);
        for i in 0..n {
            let at_pivot = (path.state_at(p) == i) as i64;
            for r in 0..len {
                let indicator = (path.state_at(r) == i) as i64;
                let reconstructed = if r <= p {
                    // Backward link: departures-and-arrivals bookkeeping
                    // over (r, pivot], diagonal included.
                    at_pivot + (0..n).map(|j| counts.count(i, j, p) - counts.count(i, j, r)).sum::<i64>()
                } else {
                    at_pivot + (0..n).map(|j| counts.count(j, i, r) - counts.count(j, i, p)).sum::<i64>()
                };
                if reconstructed != indicator {
                    return Err(format!(
                        "link reconstruction failed at state {i}, index {r}: {reconstructed} != {indicator}"
                    ));
                }
            }
        }
        for m in 1..len {
            for i in 0..n {
                let d_ii = counts.count(i, i, m) - counts.count(i, i, m - 1);
                let expected = if m > p {
                    -(0..n)
                        .filter(|&j| j != i)
                        .map(|j| counts.count(i, j, m) - counts.count(i, j, m - 1))
                        .sum::<i64>()
                } else {
                    -(0..n)
                        .filter(|&j| j != i)
                        .map(|j| counts.count(j, i, m) - counts.count(j, i, m - 1))
                        .sum::<i64>()
                };
                if d_ii != expected {
                    return Err(format!(
                        "diagonal completion identity failed at state {i}, index {m}"
                    ));
                }
            }
        }
    }
    Ok("normalization, marginalization, diagonal and link identities exact at n = 1, 37, 2000".into())
}

/// Criterion 7 — free-policy reserves against the Monte Carlo oracle over a
/// shared 100k ensemble, under as-if-Markov and state-plus-duration
/// conditioning, plus the ρ ≡ 1 degeneration to the plain reserves.
fn c7_free_policy() -> Result<String, String> {
    let mut cfg = example_config("free_policy").map_err(|e| e.to_string())?;
    cfg.ensemble.n_paths = 100_000;
    let resolved = cfg.resolve().map_err(|e| e.to_string())?;
    let fp = resolved.free_policy.as_ref().expect("free-policy spec");
    let grid = &resolved.grid;
    let n = resolved.space.len();
    let paths = simulate_ensemble(&resolved.model, grid, resolved.n_paths, resolved.seed, 2)
        .map_err(|e| e.to_string())?;

    let schemes = [
        ConditioningScheme::AsIfMarkov,
        ConditioningScheme::StateDuration { edges: vec![2.5] },
    ];
    let mut worst_z = 0.0f64;
    let mut cells_checked = 0usize;
    for scheme in &schemes {
        for (cell, _) in scheme.observed_cells(&paths, grid) {
            let state_label = resolved.space.label(cell.state);
            let surfaces =
                estimate_moment_surfaces(&paths, scheme, cell, grid, state_label, n, Depth::Joint)
                    .map_err(|e| e.to_string())?;
            let rates = transition_rates(&surfaces).map_err(|e| e.to_string())?;
            let mut initial = vec![0.0; n];
            initial[cell.state] = 1.0;
            let solved = solve(&rates, &initial, true).map_err(|e| e.to_string())?;
            let v_plus =
                free_policy_prospective(fp, &resolved.space, &solved, &rates, &resolved.discount)
                    .map_err(|e| e.to_string())?;
            let v_minus =
                free_policy_retrospective(fp, &resolved.space, &solved, &rates, &resolved.discount)
                    .map_err(|e| e.to_string())?;
            for (value, side, tag) in
                [(v_plus, PayoutSide::Future, "V+"), (v_minus, PayoutSide::Past, "V-")]
            {
                let oracle = mc_conditional_mean(&paths, scheme, cell, grid, state_label, |i, pa| {
                    path_payout_free_policy(
                        i,
                        pa,
                        fp,
                        &resolved.space,
                        &resolved.discount,
                        grid,
                        side,
                    )
                })
                .map_err(|e| e.to_string())?;
                let cmp = mstate::compare(value, &oracle, 3.0, 0.0);
                if !cmp.pass {
                    return Err(format!(
                        "{tag} in cell {} = {value:.6} vs oracle {:.6} (se {:.2e}): outside 3 SE",
                        cell.label(state_label),
                        oracle.mean,
                        oracle.se
                    ));
                }
                if cmp.z.is_finite() {
                    worst_z = worst_z.max(cmp.z.abs());
                }
            }
            cells_checked += 1;
        }
    }

    // ρ ≡ 1: the scaling disappears, so the free-policy valuation must
    // coincide with the plain reserve of the unscaled payments.
    let mut cfg1 = example_config("free_policy").map_err(|e| e.to_string())?;
    cfg1.ensemble.n_paths = 100_000;
    cfg1.free_policy.as_mut().expect("free-policy section").rho[0].factor =
        RateFn::Constant { value: 1.0 };
    let resolved1 = cfg1.resolve().map_err(|e| e.to_string())?;
    let fp1 = resolved1.free_policy.as_ref().expect("free-policy spec");
    let mut merged = CashflowSpec1D::new(n, grid.len());
    for i in 0..n {
        merged = merged.with_sojourn(i, fp1.sojourn(i).clone()).map_err(|e| e.to_string())?;
    }
    for i in 0..n {
        for j in 0..n {
            if let Some(b) = fp1.transition_payment(i, j) {
                merged = merged.with_transition(i, j, b.to_vec()).map_err(|e| e.to_string())?;
            }
        }
    }
    let cell = Cell { state: resolved.model.initial_state(), bucket: None };
    let surfaces = estimate_moment_surfaces(
        &paths,
        &ConditioningScheme::AsIfMarkov,
        cell,
        grid,
        resolved.space.label(cell.state),
        n,
        Depth::Joint,
    )
    .map_err(|e| e.to_string())?;
    let rates = transition_rates(&surfaces).map_err(|e| e.to_string())?;
    let mut initial = vec![0.0; n];
    initial[cell.state] = 1.0;
    let solved = solve(&rates, &initial, true).map_err(|e| e.to_string())?;
    let fp_plus =
        free_policy_prospective(fp1, &resolved.space, &solved, &rates, &resolved.discount)
            .map_err(|e| e.to_string())?;
    let fp_minus =
        free_policy_retrospective(fp1, &resolved.space, &solved, &rates, &resolved.discount)
            .map_err(|e| e.to_string())?;
    let plain_plus = expected_future_1d(&merged, &solved, &rates, &resolved.discount)
        .map_err(|e| e.to_string())?;
    let plain_minus = expected_past_1d(&merged, &solved, &rates, &resolved.discount)
        .map_err(|e| e.to_string())?;
    let d_plus = rel_err(fp_plus, plain_plus);
    let d_minus = rel_err(fp_minus, plain_minus);
    if d_plus > 1e-9 || d_minus > 1e-9 {
        return Err(format!(
            "rho = 1 degeneration: V+ off by {d_plus:.3e}, V- off by {d_minus:.3e} (> 1e-9)"
        ));
    }
    Ok(format!(
        "{cells_checked} cells within 3 SE (worst |z| = {worst_z:.2e}), rho=1 degeneration off by {:.1e}/{:.1e}",
        d_plus, d_minus
    ))
}

/// Criterion 8 — duration buckets of the disabled state carry genuinely
/// different reserves (the recovery intensity decays with duration), and
/// the as-if-Markov value is their frequency-weighted mean.
fn c8_duration_discrimination() -> Result<String, String> {
    let mut cfg = example_config("disability").map_err(|e| e.to_string())?;
    cfg.ensemble.n_paths = 100_000;
    let resolved = cfg.resolve().map_err(|e| e.to_string())?;
    let grid = &resolved.grid;
    let n = resolved.space.len();
    let disabled = resolved.space.index_of("disabled").map_err(|e| e.to_string())?;
    let annuity = &resolved.specs[0].1;
    let paths = simulate_ensemble(&resolved.model, grid, resolved.n_paths, resolved.seed, 2)
        .map_err(|e| e.to_string())?;
    let conv = grid.conventions();

    let value_and_oracle = |scheme: &ConditioningScheme,
                            cell: Cell|
     -> Result<(f64, f64, f64, usize), String> {
        let state_label = resolved.space.label(cell.state);
        let surfaces =
            estimate_moment_surfaces(&paths, scheme, cell, grid, state_label, n, Depth::Marginal)
                .map_err(|e| e.to_string())?;
        let rates = transition_rates(&surfaces).map_err(|e| e.to_string())?;
        let mut initial = vec![0.0; n];
        initial[cell.state] = 1.0;
        let solved = solve(&rates, &initial, false).map_err(|e| e.to_string())?;
        let v = expected_future_1d(annuity, &solved, &rates, &resolved.discount)
            .map_err(|e| e.to_string())?;
        let oracle = mc_conditional_mean(&paths, scheme, cell, grid, state_label, |_, pa| {
            Ok(path_payout_future(pa, annuity, &resolved.discount, &conv))
        })
        .map_err(|e| e.to_string())?;
        Ok((v, oracle.mean, oracle.se, oracle.n))
    };

    let buckets = ConditioningScheme::StateDuration { edges: vec![1.0] };
    let (v0, _, se0, n0) = value_and_oracle(&buckets, Cell { state: disabled, bucket: Some(0) })?;
    let (v1, _, se1, n1) = value_and_oracle(&buckets, Cell { state: disabled, bucket: Some(1) })?;
    let combined = (se0 * se0 + se1 * se1).sqrt();
    let separation = (v0 - v1).abs() / combined;
    if separation <= 5.0 {
        return Err(format!(
            "bucket reserves {v0:.4} / {v1:.4} separated by only {separation:.1} combined SE"
        ));
    }

    let markov = ConditioningScheme::AsIfMarkov;
    let (vm, _, se_m, _) = value_and_oracle(&markov, Cell { state: disabled, bucket: None })?;
    let w0 = n0 as f64 / (n0 + n1) as f64;
    let w1 = n1 as f64 / (n0 + n1) as f64;
    let mixture = w0 * v0 + w1 * v1;
    let mix_se = ((w0 * se0).powi(2) + (w1 * se1).powi(2)).sqrt().max(se_m);
    if (vm - mixture).abs() > 3.0 * mix_se {
        return Err(format!(
            "as-if-Markov reserve {vm:.4} vs bucket mixture {mixture:.4}: outside 3 SE ({mix_se:.2e})"
        ));
    }
    let lo = v0.min(v1) - 3.0 * combined;
    let hi = v0.max(v1) + 3.0 * combined;
    if vm < lo || vm > hi {
        return Err(format!(
            "as-if-Markov reserve {vm:.4} outside the bucket hull [{lo:.4}, {hi:.4}]"
        ));
    }
    Ok(format!(
        "buckets {v0:.4} vs {v1:.4} ({separation:.0} combined SE apart), mixture matches to {:.1e}",
        (vm - mixture).abs()
    ))
}

/// Criterion 9 — two strict-determinism CLI invocations write byte-identical
/// artifacts, and the thread count does not change them either.
fn c9_determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut cfg = example_config("two_state").map_err(|e| e.to_string())?;
    cfg.ensemble.n_paths = 5_000;
    cfg.grid = mstate::config::GridConfig { t_max: 4.0, step: 0.05, pivot: 2.0 };
    cfg.cashflows[1].sojourn[0].atoms[0].t = 4.0;
    let cfg_path = dir.path().join("config.json");
    std::fs::write(&cfg_path, cfg.to_json().map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;

    let exe = env!("CARGO_BIN_EXE_mstate");
    let run = |out: &str, extra: &[&str]| -> Result<Vec<u8>, String> {
        let out_dir = dir.path().join(out);
        let mut cmd = Command::new(exe);
        cmd.arg("all")
            .arg("--config")
            .arg(&cfg_path)
            .arg("--out")
            .arg(&out_dir)
            .args(extra);
        let output = cmd.output().map_err(|e| e.to_string())?;
        if !output.status.success() {
            return Err(format!(
                "CLI run failed (status {:?}): {}",
                output.status.code(),
                String::from_utf8_lossy(&output.stderr)
            ));
        }
        std::fs::read(out_dir.join("report.csv")).map_err(|e| e.to_string())
    };
    let a = run("a", &["--strict-determinism"])?;
    let b = run("b", &["--strict-determinism"])?;
    let c = run("c", &["--threads", "4"])?;
    if a != b {
        return Err("strict-determinism reruns wrote different report.csv bytes".into());
    }
    if a != c {
        return Err("thread count changed report.csv bytes".into());
    }
    let checks_a = std::fs::read(dir.path().join("a/checks.json")).map_err(|e| e.to_string())?;
    let checks_b = std::fs::read(dir.path().join("b/checks.json")).map_err(|e| e.to_string())?;
    if checks_a != checks_b {
        return Err("strict-determinism reruns wrote different checks.json bytes".into());
    }
    Ok(format!(
        "report.csv identical across reruns and thread counts ({} bytes)",
        a.len()
    ))
}
