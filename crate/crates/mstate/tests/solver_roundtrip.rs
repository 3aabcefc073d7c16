//! Round-trip regression at realistic scale: estimated rates re-solved must
//! reproduce the estimated surfaces everywhere on the grid square, not just
//! where valuations read them.
//!
//! The hard case is a model with re-entry (recovery) conditioned on a cell:
//! paths that visited a rare state on the backward side of the pivot leave
//! one- and two-path occupation counts there, the estimated rate atoms reach
//! magnitude one, and the outward sweeps then amplify any seed error
//! multiplicatively. With plain f64 sweeps the residual on this model's
//! initial-state cell reached order one at the far corner of the grid
//! square; the compensated sweeps keep it at the representation floor.

use mstate::*;

#[test]
fn recovery_model_round_trips_at_scale() {
    let cfg = example_config("disability").unwrap();
    let resolved = cfg.resolve().unwrap();
    let grid = &resolved.grid;
    let n = resolved.space.len();
    let paths =
        simulate_ensemble(&resolved.model, grid, resolved.n_paths, resolved.seed, 1).unwrap();
    let scheme = ConditioningScheme::AsIfMarkov;
    let cell = Cell { state: resolved.model.initial_state(), bucket: None };
    let s = estimate_moment_surfaces(&paths, &scheme, cell, grid, "active", n, Depth::Joint)
        .unwrap();
    let rates = transition_rates(&s).unwrap();
    let mut initial = vec![0.0; n];
    initial[cell.state] = 1.0;
    let solved = solve(&rates, &initial, true).unwrap();

    let res = residual_and_consistency(&solved, &s).unwrap();
    assert!(res.sup_p1 <= 1e-12, "marginal residual {}", res.sup_p1);
    assert!(res.sup_p2.unwrap() <= 1e-12, "joint residual {}", res.sup_p2.unwrap());

    // The properties the amplification destroyed first: equal-time
    // off-diagonal degeneracy and the product form of the pivot row/column.
    let len = grid.len();
    let p = grid.pivot_index();
    for i in 0..n {
        for k in 0..n {
            for m in 0..len {
                if i != k {
                    let d = solved.p2(i, k, m, m).abs();
                    assert!(d <= 1e-13, "P_{i}{k}({m},{m}) = {d:e}");
                }
                let row = (solved.p2(i, k, m, p) - initial[k] * solved.p1(i, m)).abs();
                let col = (solved.p2(i, k, p, m) - initial[i] * solved.p1(k, m)).abs();
                assert!(row <= 1e-13 && col <= 1e-13, "pivot seeds at ({i},{k},{m})");
            }
        }
    }
}

#[test]
fn duration_bucket_cells_round_trip() {
    let mut cfg = example_config("disability").unwrap();
    cfg.ensemble.n_paths = 8_000;
    cfg.conditioning = mstate::config::ConditioningConfig::StateDuration { edges: vec![1.0] };
    let resolved = cfg.resolve().unwrap();
    let grid = &resolved.grid;
    let n = resolved.space.len();
    let paths =
        simulate_ensemble(&resolved.model, grid, resolved.n_paths, resolved.seed, 1).unwrap();
    for (cell, n_cell) in resolved.scheme.observed_cells(&paths, grid) {
        let label = cell.label(resolved.space.label(cell.state));
        let s = estimate_moment_surfaces(
            &paths,
            &resolved.scheme,
            cell,
            grid,
            &label,
            n,
            Depth::Joint,
        )
        .unwrap();
        let rates = transition_rates(&s).unwrap();
        let mut initial = vec![0.0; n];
        initial[cell.state] = 1.0;
        let solved = solve(&rates, &initial, true).unwrap();
        let res = residual_and_consistency(&solved, &s).unwrap();
        assert!(
            res.sup_p1 <= 1e-12 && res.sup_p2.unwrap() <= 1e-12,
            "cell {label} (n = {n_cell}): residuals {} / {}",
            res.sup_p1,
            res.sup_p2.unwrap()
        );
    }
}
