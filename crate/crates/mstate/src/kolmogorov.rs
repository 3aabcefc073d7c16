//! Generalized Kolmogorov forward equations on the grid.
//!
//! Given pivot-relative transition rates, the occupation probabilities solve
//! a forward integral equation *away from the pivot in both directions*: an
//! ascending explicit sweep after the pivot and a descending explicit sweep
//! before it (the backward-side atom is evaluated at the already-known level,
//! so no implicit solve is needed). The two-dimensional surfaces solve the
//! corresponding equation per quadrant of the grid square around the pivot,
//! seeded on the pivot row and column by products of one-dimensional
//! solutions, each quadrant swept outward from the pivot corner.
//!
//! The discretization mirrors the rate definition index for index: the
//! update multiplies the occupation value at exactly the one-sided evaluation
//! index that the estimator divided by. Solving from estimated rates
//! therefore reproduces the estimated surfaces to floating-point error,
//! which [`residual_and_consistency`] measures.
//!
//! The sweeps carry double-double values internally: thinly occupied regions
//! produce estimated rate atoms of magnitude one, and the outward recursions
//! feed every cell through the rate atoms of all later cells, so plain f64
//! arithmetic can amplify its own rounding multiplicatively — order-one error
//! at the far corners of a large grid square is realistic. Compensated
//! arithmetic pushes the seeds low enough that the amplified error stays
//! negligible.

use crate::compensated::Dd;
use crate::error::{Error, Result};
use crate::estimate::{MomentSurfaces, ProbabilitySurfaces, RateSystem};

/// Solved probability surfaces (same layout as estimated ones).
pub type SolvedProbabilities = ProbabilitySurfaces;

fn validate_initial(initial: &[f64], n_states: usize) -> Result<()> {
    if initial.len() != n_states {
        return Err(Error::DimensionMismatch(format!(
            "initial distribution has {} entries for {} states",
            initial.len(),
            n_states
        )));
    }
    if initial.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::InvalidConfig {
            field: "initial".into(),
            message: "initial distribution entries must be non-negative and finite".into(),
        });
    }
    let sum: f64 = initial.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig {
            field: "initial".into(),
            message: format!("initial distribution sums to {sum}, expected 1"),
        });
    }
    Ok(())
}

/// Solve the one-dimensional forward equation from the distribution at the
/// pivot. Returns the occupation surface flattened as `[i·len + m]`.
pub fn solve_forward_1d(rates: &RateSystem, initial: &[f64]) -> Result<Vec<f64>> {
    Ok(solve_1d_dd(rates, initial)?.into_iter().map(Dd::value).collect())
}

/// The one-dimensional sweep at working (double-double) precision.
fn solve_1d_dd(rates: &RateSystem, initial: &[f64]) -> Result<Vec<Dd>> {
    let n = rates.n_states();
    let len = rates.len();
    let p = rates.pivot();
    validate_initial(initial, n)?;
    let mut p1 = vec![Dd::ZERO; n * len];
    for i in 0..n {
        p1[i * len + p] = Dd::from_f64(initial[i]);
    }
    // Ascending sweep after the pivot: the integrand reads the left
    // neighbour, the rate pair is (source j → target i).
    for m in (p + 1)..len {
        for i in 0..n {
            let mut v = p1[i * len + (m - 1)];
            for j in 0..n {
                let r = rates.dl1_dd(j, i, m);
                if r.hi != 0.0 || r.lo != 0.0 {
                    v = v.add(p1[j * len + (m - 1)].mul(r));
                }
            }
            p1[i * len + m] = v;
        }
    }
    // Descending sweep before the pivot: the window (t_m, s] gains the atom
    // at t_{m+1}, whose integrand reads the already-known level there; the
    // rate pair is (target i → source j) — rates run backward in time.
    for m in (0..p).rev() {
        for i in 0..n {
            let mut v = p1[i * len + (m + 1)];
            for j in 0..n {
                let r = rates.dl1_dd(i, j, m + 1);
                if r.hi != 0.0 || r.lo != 0.0 {
                    v = v.add(p1[j * len + (m + 1)].mul(r));
                }
            }
            p1[i * len + m] = v;
        }
    }
    Ok(p1)
}

/// Solve the two-dimensional forward equation given the one-dimensional
/// surface `p1` (flattened `[i·len + m]`) and the pivot distribution.
/// Returns one dense plane per ordered state pair.
///
/// The given marginal is validated for consistency; the pivot row and column
/// that seed the quadrants are re-resolved internally at working precision,
/// since rounding on that boundary would otherwise seed the amplification
/// the compensated sweep exists to avoid.
pub fn solve_forward_2d(
    rates: &RateSystem,
    p1: &[f64],
    initial: &[f64],
) -> Result<Vec<Box<[f64]>>> {
    let n = rates.n_states();
    let len = rates.len();
    let p = rates.pivot();
    validate_initial(initial, n)?;
    if p1.len() != n * len {
        return Err(Error::DimensionMismatch(
            "one-dimensional surface does not match the rate system".into(),
        ));
    }
    for i in 0..n {
        if (p1[i * len + p] - initial[i]).abs() > 1e-12 {
            return Err(Error::InconsistentEnsemble(
                "one-dimensional surface disagrees with the pivot distribution".into(),
            ));
        }
    }
    let p1_dd = solve_1d_dd(rates, initial)?;
    let n_pairs = n * n;
    let mut planes: Vec<Box<[Dd]>> =
        (0..n_pairs).map(|_| vec![Dd::ZERO; len * len].into_boxed_slice()).collect();

    // Pivot row and column: P_ik(t1, s) = I_k(s)·P_i(t1) and
    // P_ik(s, t2) = I_i(s)·P_k(t2).
    for i in 0..n {
        for k in 0..n {
            let plane = &mut planes[i * n + k];
            for m1 in 0..len {
                plane[m1 * len + p] = p1_dd[i * len + m1].mul(Dd::from_f64(initial[k]));
            }
            for m2 in 0..len {
                plane[p * len + m2] = p1_dd[k * len + m2].mul(Dd::from_f64(initial[i]));
            }
        }
    }

    // The four quadrants, each swept outward from the pivot corner. Per
    // quadrant the rate block of target pair (i,k) against source pair (j,l)
    // swaps a coordinate's pair exactly when that coordinate runs backward,
    // and the block is read at the cell whose atom the enlarged window gains.
    #[derive(Clone, Copy)]
    enum Coord {
        Fwd,
        Bwd,
    }
    let sweep = |planes: &mut Vec<Box<[Dd]>>, c1: Coord, c2: Coord| {
        // Resolve the rate block (with its compensation block) for every
        // (target, source) once per quadrant.
        let mut table: Vec<Option<(&[f64], Option<&[f64]>)>> = vec![None; n_pairs * n_pairs];
        for i in 0..n {
            for k in 0..n {
                for j in 0..n {
                    for l in 0..n {
                        let row = match c1 {
                            Coord::Fwd => j * n + i,
                            Coord::Bwd => i * n + j,
                        };
                        let col = match c2 {
                            Coord::Fwd => l * n + k,
                            Coord::Bwd => k * n + l,
                        };
                        table[(i * n + k) * n_pairs + (j * n + l)] =
                            rates.dl2_block_dd(row, col);
                    }
                }
            }
        }
        let a_range: Vec<usize> = match c1 {
            Coord::Fwd => ((p + 1)..len).collect(),
            Coord::Bwd => (0..p).rev().collect(),
        };
        let b_range: Vec<usize> = match c2 {
            Coord::Fwd => ((p + 1)..len).collect(),
            Coord::Bwd => (0..p).rev().collect(),
        };
        let mut source_vals = vec![Dd::ZERO; n_pairs];
        for &a in &a_range {
            // Neighbour indices toward the pivot and the rate-cell index.
            let (a_in, ra) = match c1 {
                Coord::Fwd => (a - 1, a),
                Coord::Bwd => (a + 1, a + 1),
            };
            for &b in &b_range {
                let (b_in, rb) = match c2 {
                    Coord::Fwd => (b - 1, b),
                    Coord::Bwd => (b + 1, b + 1),
                };
                let rate_cell = ra * len + rb;
                let corner = a_in * len + b_in;
                for (src, v) in source_vals.iter_mut().enumerate() {
                    *v = planes[src][corner];
                }
                for tgt in 0..n_pairs {
                    let mut acc = planes[tgt][a_in * len + b]
                        .add(planes[tgt][a * len + b_in])
                        .sub(planes[tgt][corner]);
                    let row = &table[tgt * n_pairs..(tgt + 1) * n_pairs];
                    for (src, &pv) in source_vals.iter().enumerate() {
                        if let Some((hi, lo)) = row[src] {
                            let r =
                                Dd { hi: hi[rate_cell], lo: lo.map_or(0.0, |b| b[rate_cell]) };
                            if r.hi != 0.0 || r.lo != 0.0 {
                                acc = acc.add(pv.mul(r));
                            }
                        }
                    }
                    planes[tgt][a * len + b] = acc;
                }
            }
        }
    };

    sweep(&mut planes, Coord::Fwd, Coord::Fwd);
    sweep(&mut planes, Coord::Fwd, Coord::Bwd);
    sweep(&mut planes, Coord::Bwd, Coord::Fwd);
    sweep(&mut planes, Coord::Bwd, Coord::Bwd);
    Ok(planes
        .into_iter()
        .map(|plane| plane.iter().map(|d| d.value()).collect::<Vec<_>>().into_boxed_slice())
        .collect())
}

/// Solve both levels, returning probability surfaces (joint planes only when
/// requested).
pub fn solve(rates: &RateSystem, initial: &[f64], with_joint: bool) -> Result<SolvedProbabilities> {
    let p1 = solve_forward_1d(rates, initial)?;
    let p2 = if with_joint {
        Some(solve_forward_2d(rates, &p1, initial)?)
    } else {
        None
    };
    Ok(ProbabilitySurfaces {
        n_states: rates.n_states(),
        len: rates.len(),
        pivot: rates.pivot(),
        p1,
        p2,
    })
}

/// Sup-norm residuals between solved surfaces and the estimated surfaces the
/// rates came from, plus conservation defects of the solved surfaces.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Residuals {
    /// `sup_{i,m} |P_i^solved − P_i^estimated|`.
    pub sup_p1: f64,
    /// `sup_{i,k,m1,m2} |P_ik^solved − P_ik^estimated|`, when both carry
    /// joint surfaces.
    pub sup_p2: Option<f64>,
    /// `sup_m |Σ_i P_i(t_m) − 1|` of the solved surface.
    pub conservation_p1: f64,
    /// `sup_{m1,m2} |Σ_ik P_ik − 1|` of the solved surface, when present.
    pub conservation_p2: Option<f64>,
}

/// Compare a solved surface against the estimated one it should reproduce.
pub fn residual_and_consistency(
    solved: &SolvedProbabilities,
    surfaces: &MomentSurfaces,
) -> Result<Residuals> {
    if solved.n_states() != surfaces.n_states()
        || solved.len() != surfaces.len()
        || solved.pivot() != surfaces.pivot()
    {
        return Err(Error::InconsistentEnsemble(
            "solved and estimated surfaces disagree on states, grid or pivot".into(),
        ));
    }
    let n = solved.n_states();
    let len = solved.len();
    let n_cell = surfaces.n_cell() as f64;

    let mut sup_p1 = 0.0f64;
    for i in 0..n {
        for m in 0..len {
            let d = (solved.p1(i, m) - surfaces.occupation_count(i, m) / n_cell).abs();
            sup_p1 = sup_p1.max(d);
        }
    }
    let mut conservation_p1 = 0.0f64;
    for m in 0..len {
        let s: f64 = (0..n).map(|i| solved.p1(i, m)).sum();
        conservation_p1 = conservation_p1.max((s - 1.0).abs());
    }

    let (sup_p2, conservation_p2) = if solved.has_joint() && surfaces.has_joint() {
        let mut sup = 0.0f64;
        let mut cons = vec![0.0f64; len * len];
        for i in 0..n {
            for k in 0..n {
                let plane = solved.p2_plane(i, k).expect("joint plane present");
                for m1 in 0..len {
                    for m2 in 0..len {
                        let v = plane[m1 * len + m2];
                        let d =
                            (v - surfaces.joint_occupation_count(i, k, m1, m2) / n_cell).abs();
                        sup = sup.max(d);
                        cons[m1 * len + m2] += v;
                    }
                }
            }
        }
        let cmax = cons.iter().fold(0.0f64, |acc, &s| acc.max((s - 1.0).abs()));
        (Some(sup), Some(cmax))
    } else {
        (None, None)
    };

    Ok(Residuals { sup_p1, sup_p2, conservation_p1, conservation_p2 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::QuadBlocks;
    use crate::estimate::RateSystem;

    /// Two states, constant forward hazard: rates built by hand, pivot 0.
    #[test]
    fn constant_hazard_decays_geometrically() {
        let n = 2;
        let len = 6;
        let mut dl1 = vec![0.0f64; n * n * len];
        let lam = 0.1;
        for m in 1..len {
            dl1[(0 * n + 1) * len + m] = lam;
            dl1[(0 * n + 0) * len + m] = -lam;
        }
        let rates =
            RateSystem::from_parts(n, len, 0, dl1, QuadBlocks::empty(n, len)).unwrap();
        let p1 = solve_forward_1d(&rates, &[1.0, 0.0]).unwrap();
        for m in 0..len {
            let expect = (1.0 - lam).powi(m as i32);
            assert!((p1[m] - expect).abs() < 1e-12);
            assert!((p1[len + m] - (1.0 - expect)).abs() < 1e-12);
        }
    }

    /// Conservation holds exactly when diagonal rates complete the rows.
    #[test]
    fn conservation_is_exact_with_completed_diagonals() {
        let n = 2;
        let len = 9;
        let p = 4;
        let mut dl1 = vec![0.0f64; n * n * len];
        for m in 1..len {
            if m > p {
                dl1[(0 * n + 1) * len + m] = 0.07;
                dl1[(0 * n + 0) * len + m] = -0.07;
            } else {
                // Backward rates: column sums vanish.
                dl1[(0 * n + 1) * len + m] = 0.03;
                dl1[(1 * n + 1) * len + m] = -0.03;
            }
        }
        let rates =
            RateSystem::from_parts(n, len, p, dl1, QuadBlocks::empty(n, len)).unwrap();
        let p1 = solve_forward_1d(&rates, &[0.6, 0.4]).unwrap();
        for m in 0..len {
            let s = p1[m] + p1[len + m];
            assert!((s - 1.0).abs() < 1e-14, "m={m}: sum {s}");
        }
    }
}
