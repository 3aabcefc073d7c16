//! Reserves, second moments and conditional variances.
//!
//! Every operator here is an explicit functional of occupation surfaces and
//! transition rates — no expectations are simulated. The prospective reserve
//! integrates discounted payments against `P_i(u^−)·Λ_ij(du)` after the
//! pivot; the retrospective reserve accumulates payments before it, with the
//! transition block read at the *destination* occupation `P_j(u)` because the
//! rates run backward there. Second moments integrate two-dimensional payment
//! specifications against the joint surfaces, with occupation indicators at
//! interior times expanded through the link equations into pivot indicators
//! plus jump-count integrals — which is why the two-dimensional rates enter.
//!
//! When surfaces and rates come from one estimated ensemble, each operator
//! reproduces the corresponding empirical conditional mean exactly (to
//! floating-point rounding): the rate denominators cancel against the
//! occupation factors cell by cell. This identity is the backbone of the
//! oracle comparisons in the test suite.

use serde::Serialize;

use crate::cashflow::{CashflowSpec1D, CashflowSpec2D, FreePolicySpec, Weight2D};
use crate::error::{Error, Result};
use crate::estimate::{ProbabilitySurfaces, RateSystem};
use crate::grid::StateSpace;
use crate::simulate::DiscountCurve;

/// First and second conditional moments of the prospective payout, and the
/// conditional variance they imply.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceDecomposition {
    pub v_plus: f64,
    pub s_plus: f64,
    pub variance: f64,
}

/// Valuation results of one conditioning cell for one payment specification.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValuationReport {
    pub label: String,
    pub spec: String,
    pub n_cell: usize,
    pub v_plus: f64,
    pub v_minus: f64,
    pub s_plus: Option<f64>,
    pub variance: Option<f64>,
}

fn check_dims(
    surfaces: &ProbabilitySurfaces,
    rates: &RateSystem,
    spec_len: usize,
    spec_states: usize,
) -> Result<()> {
    if surfaces.n_states() != rates.n_states()
        || surfaces.len() != rates.len()
        || surfaces.pivot() != rates.pivot()
    {
        return Err(Error::InconsistentEnsemble(
            "surfaces and rates disagree on states, grid or pivot".into(),
        ));
    }
    if spec_len != surfaces.len() || spec_states != surfaces.n_states() {
        return Err(Error::DimensionMismatch(
            "payment specification does not match the surfaces' grid or state space".into(),
        ));
    }
    Ok(())
}

/// Occupation factor `P̃_ij(u^±)` of the one-dimensional transition block:
/// source state at the left neighbour after the pivot, destination state at
/// the point itself at or before it.
fn ptil1(s: &ProbabilitySurfaces, i: usize, j: usize, m: usize) -> f64 {
    if m > s.pivot() {
        s.p1(i, m - 1)
    } else {
        s.p1(j, m)
    }
}

/// Resolve one coordinate of a joint occupation factor: the pair `(a, b)`
/// contributes its source `a` at the left neighbour on the forward side and
/// its destination `b` at the point on the backward side.
fn side_state_index(a: usize, b: usize, m: usize, pivot: usize) -> (usize, usize) {
    if m > pivot {
        (a, m - 1)
    } else {
        (b, m)
    }
}

/// Prospective reserve `V⁺`: discounted payments in `(s, T]`.
pub fn expected_future_1d(
    spec: &CashflowSpec1D,
    surfaces: &ProbabilitySurfaces,
    rates: &RateSystem,
    discount: &DiscountCurve,
) -> Result<f64> {
    check_dims(surfaces, rates, spec.len(), spec.n_states())?;
    let p = surfaces.pivot();
    let len = surfaces.len();
    let w = discount.weights(p);
    let mut acc = 0.0;
    for (i, b) in spec.sojourn().iter().enumerate() {
        for (m, v) in b.iter_nonzero() {
            if m > p {
                acc += w[m] * surfaces.p1(i, m - 1) * v;
            }
        }
    }
    for (i, j, b) in spec.transition_pairs() {
        for m in (p + 1)..len {
            let dl = rates.dl1(i, j, m);
            if dl != 0.0 {
                acc += w[m] * b[m] * surfaces.p1(i, m - 1) * dl;
            }
        }
    }
    Ok(acc)
}

/// Retrospective accumulation `V⁻`: payments in `[0, s]`, valued at the
/// pivot. The transition block reads the destination occupation at the
/// payment time because the rates run backward before the pivot.
pub fn expected_past_1d(
    spec: &CashflowSpec1D,
    surfaces: &ProbabilitySurfaces,
    rates: &RateSystem,
    discount: &DiscountCurve,
) -> Result<f64> {
    check_dims(surfaces, rates, spec.len(), spec.n_states())?;
    let p = surfaces.pivot();
    let w = discount.weights(p);
    let mut acc = 0.0;
    for (i, b) in spec.sojourn().iter().enumerate() {
        for (m, v) in b.iter_nonzero() {
            if m <= p {
                acc += w[m] * surfaces.p1(i, m.saturating_sub(1)) * v;
            }
        }
    }
    for (i, j, b) in spec.transition_pairs() {
        for m in 1..=p {
            let dl = rates.dl1(i, j, m);
            if dl != 0.0 {
                acc += w[m] * b[m] * surfaces.p1(j, m) * dl;
            }
        }
    }
    Ok(acc)
}

/// The linked part of a sojourn ⊗ transition block: the contribution of the
/// indicator's jump-count expansion between the payment time and the pivot.
///
/// `atoms` carries `(m1, coefficient)` with the `u1` weight already folded
/// in; `f2` weights the transition coordinate `u2`. For payment times at or
/// before the pivot the expansion runs over arrivals `N_i·(du3)` on
/// `[u1, s]`; after the pivot over departures `N_·i(du3)` on `(s, u1)`.
fn linked_mixed_sum(
    s: &ProbabilitySurfaces,
    rates: &RateSystem,
    k: usize,
    l: usize,
    i: usize,
    atoms: &[(usize, f64)],
    f2: &[f64],
) -> f64 {
    let n = s.n_states();
    let len = s.len();
    let p = s.pivot();
    let has_backward = atoms.iter().any(|&(m1, _)| m1 <= p);
    let has_forward = atoms.iter().any(|&(m1, _)| m1 > p);
    let mut acc = 0.0;
    let mut row = vec![0.0f64; len];
    for j in 0..n {
        if has_backward {
            // Block ((k,l), (i,j)): the backward link of I_i uses N_ij.
            if let Some(block) = rates.dl2().get(k * n + l, i * n + j) {
                // row[m3] = Σ_{m2} f2[m2]·P̃((k,l)@m2, j@m3)·ΔΛ2(m2, m3).
                for v in row.iter_mut() {
                    *v = 0.0;
                }
                for m2 in 1..len {
                    let f = f2[m2];
                    if f == 0.0 {
                        continue;
                    }
                    let (rs, ri) = side_state_index(k, l, m2, p);
                    let base = m2 * len;
                    for m3 in 1..=p {
                        let dl = block[base + m3];
                        if dl != 0.0 {
                            row[m3] += f * s.p2(rs, j, ri, m3) * dl;
                        }
                    }
                }
                // Suffix sums: S[m1] = Σ_{m3 = max(m1,1) .. p} row[m3].
                let mut suffix = vec![0.0f64; p + 2];
                for m3 in (1..=p).rev() {
                    suffix[m3] = suffix[m3 + 1] + row[m3];
                }
                suffix[0] = suffix[1];
                for &(m1, coeff) in atoms {
                    if m1 <= p {
                        acc += coeff * suffix[m1];
                    }
                }
            }
        }
        if has_forward {
            // Block ((k,l), (j,i)): the forward link of I_i uses N_ji.
            if let Some(block) = rates.dl2().get(k * n + l, j * n + i) {
                for v in row.iter_mut() {
                    *v = 0.0;
                }
                for m2 in 1..len {
                    let f = f2[m2];
                    if f == 0.0 {
                        continue;
                    }
                    let (rs, ri) = side_state_index(k, l, m2, p);
                    let base = m2 * len;
                    for m3 in (p + 1)..len {
                        let dl = block[base + m3];
                        if dl != 0.0 {
                            row[m3] += f * s.p2(rs, j, ri, m3 - 1) * dl;
                        }
                    }
                }
                // Prefix sums: PF[m1] = Σ_{m3 = p+1 .. m1−1} row[m3].
                let mut prefix = vec![0.0f64; len + 1];
                for m3 in (p + 1)..len {
                    prefix[m3 + 1] = prefix[m3] + row[m3];
                }
                for &(m1, coeff) in atoms {
                    if m1 > p {
                        acc += coeff * prefix[m1];
                    }
                }
            }
        }
    }
    acc
}

/// The transition ⊗ transition sum
/// `Σ_{m1,m2} f1(m1)·f2(m2)·P̃_ijkl(m1^±, m2^±)·ΔΛ_ijkl(m1, m2)`.
fn double_transition_sum(
    s: &ProbabilitySurfaces,
    rates: &RateSystem,
    i: usize,
    j: usize,
    k: usize,
    l: usize,
    f1: &[f64],
    f2: &[f64],
) -> f64 {
    let n = s.n_states();
    let len = s.len();
    let p = s.pivot();
    let Some(block) = rates.dl2().get(i * n + j, k * n + l) else {
        return 0.0;
    };
    let mut acc = 0.0;
    for m1 in 1..len {
        let a = f1[m1];
        if a == 0.0 {
            continue;
        }
        let (rs, ri) = side_state_index(i, j, m1, p);
        let base = m1 * len;
        for m2 in 1..len {
            let dl = block[base + m2];
            if dl == 0.0 {
                continue;
            }
            let b = f2[m2];
            if b == 0.0 {
                continue;
            }
            let (cs, ci) = side_state_index(k, l, m2, p);
            acc += a * b * s.p2(rs, cs, ri, ci) * dl;
        }
    }
    acc
}

/// Expected value of a two-dimensional payment specification under the
/// cell's conditional law. Discounting, if intended, must be folded into the
/// specification's measures and weights.
pub fn expected_2d(
    spec: &CashflowSpec2D,
    surfaces: &ProbabilitySurfaces,
    rates: &RateSystem,
) -> Result<f64> {
    check_dims(surfaces, rates, spec.len(), spec.n_states())?;
    let has_blocks = spec.sojourn_pairs().next().is_some()
        || !spec.mixed().is_empty()
        || spec.double().next().is_some();
    if has_blocks && !surfaces.has_joint() {
        return Err(Error::InconsistentEnsemble(
            "two-dimensional valuation needs joint occupation surfaces".into(),
        ));
    }
    let p = surfaces.pivot();
    let len = surfaces.len();
    let mut acc = 0.0;

    // Sojourn ⊗ sojourn: joint occupation at true left limits.
    for ((i, j), meas) in spec.sojourn_pairs() {
        for (m1, m2, v) in meas.iter_nonzero() {
            acc += surfaces.p2(i, j, m1.saturating_sub(1), m2.saturating_sub(1)) * v;
        }
    }

    // Sojourn ⊗ transition blocks.
    for term in spec.mixed() {
        match &term.weight {
            Weight2D::Separable { f1, f2 } => {
                // Pivot-indicator part: I_i(s) · (Σ atoms) · (Σ rate column).
                let fi = surfaces.p1(term.i, p);
                if fi != 0.0 {
                    let a_sum: f64 =
                        term.base.iter_nonzero().map(|(m1, v)| v * f1[m1]).sum();
                    if a_sum != 0.0 {
                        let mut col = 0.0;
                        for m2 in 1..len {
                            let f = f2[m2];
                            if f == 0.0 {
                                continue;
                            }
                            let dl = rates.dl1(term.k, term.l, m2);
                            if dl != 0.0 {
                                col += f * ptil1(surfaces, term.k, term.l, m2) * dl;
                            }
                        }
                        acc += fi * a_sum * col;
                    }
                }
                // Linked part: the jump-count expansion of the indicator.
                let atoms: Vec<(usize, f64)> =
                    term.base.iter_nonzero().map(|(m1, v)| (m1, v * f1[m1])).collect();
                if !atoms.is_empty() {
                    acc +=
                        linked_mixed_sum(surfaces, rates, term.k, term.l, term.i, &atoms, f2);
                }
            }
            Weight2D::Dense { .. } => {
                // Direct evaluation; only viable for sparse bases (tests).
                let fi = surfaces.p1(term.i, p);
                let n = surfaces.n_states();
                for (m1, v) in term.base.iter_nonzero() {
                    for m2 in 1..len {
                        let wgt = term.weight.at(m1, m2);
                        if wgt == 0.0 {
                            continue;
                        }
                        let dl = rates.dl1(term.k, term.l, m2);
                        if fi != 0.0 && dl != 0.0 {
                            acc += fi * v * wgt * ptil1(surfaces, term.k, term.l, m2) * dl;
                        }
                        let (rs, ri) = side_state_index(term.k, term.l, m2, p);
                        for j in 0..n {
                            if m1 <= p {
                                if let Some(block) =
                                    rates.dl2().get(term.k * n + term.l, term.i * n + j)
                                {
                                    for m3 in m1.max(1)..=p {
                                        let dl2 = block[m2 * len + m3];
                                        if dl2 != 0.0 {
                                            acc += v
                                                * wgt
                                                * surfaces.p2(rs, j, ri, m3)
                                                * dl2;
                                        }
                                    }
                                }
                            } else if let Some(block) =
                                rates.dl2().get(term.k * n + term.l, j * n + term.i)
                            {
                                for m3 in (p + 1)..m1 {
                                    let dl2 = block[m2 * len + m3];
                                    if dl2 != 0.0 {
                                        acc +=
                                            v * wgt * surfaces.p2(rs, j, ri, m3 - 1) * dl2;
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    // Transition ⊗ transition blocks.
    for ((i, j, k, l), weight) in spec.double() {
        match weight {
            Weight2D::Separable { f1, f2 } => {
                acc += double_transition_sum(surfaces, rates, i, j, k, l, f1, f2);
            }
            Weight2D::Dense { .. } => {
                let n = surfaces.n_states();
                if let Some(block) = rates.dl2().get(i * n + j, k * n + l) {
                    for m1 in 1..len {
                        let (rs, ri) = side_state_index(i, j, m1, p);
                        for m2 in 1..len {
                            let dl = block[m1 * len + m2];
                            if dl == 0.0 {
                                continue;
                            }
                            let wgt = weight.at(m1, m2);
                            if wgt != 0.0 {
                                let (cs, ci) = side_state_index(k, l, m2, p);
                                acc += wgt * surfaces.p2(rs, cs, ri, ci) * dl;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(acc)
}

/// Second conditional moment `S⁺ = E[(Y⁺)² | cell]` of the discounted
/// prospective payout, computed directly from the four second-order blocks
/// with binomial weights `(1, 2, 2, 1)`.
pub fn second_moment_future(
    spec: &CashflowSpec1D,
    surfaces: &ProbabilitySurfaces,
    rates: &RateSystem,
    discount: &DiscountCurve,
) -> Result<f64> {
    check_dims(surfaces, rates, spec.len(), spec.n_states())?;
    if !surfaces.has_joint() {
        return Err(Error::InconsistentEnsemble(
            "second moments need joint occupation surfaces".into(),
        ));
    }
    let p = surfaces.pivot();
    let len = surfaces.len();
    let w = discount.weights(p);
    // Future-masked weights restrict every block to (s, T]².
    let wf: Vec<f64> =
        w.iter().enumerate().map(|(m, &v)| if m > p { v } else { 0.0 }).collect();

    // Sojourn ⊗ sojourn.
    let mut t1 = 0.0;
    for (i, bi) in spec.sojourn().iter().enumerate() {
        for (m1, v1) in bi.iter_nonzero() {
            if m1 <= p {
                continue;
            }
            for (j, bj) in spec.sojourn().iter().enumerate() {
                for (m2, v2) in bj.iter_nonzero() {
                    if m2 > p {
                        t1 += wf[m1] * wf[m2] * v1 * v2 * surfaces.p2(i, j, m1 - 1, m2 - 1);
                    }
                }
            }
        }
    }

    // Sojourn ⊗ transition, pivot-indicator part.
    let mut t2 = 0.0;
    {
        let mut rate_col = 0.0;
        for (k, l, b) in spec.transition_pairs() {
            for m2 in (p + 1)..len {
                let dl = rates.dl1(k, l, m2);
                if dl != 0.0 {
                    rate_col += wf[m2] * b[m2] * surfaces.p1(k, m2 - 1) * dl;
                }
            }
        }
        for (i, bi) in spec.sojourn().iter().enumerate() {
            let fi = surfaces.p1(i, p);
            if fi == 0.0 {
                continue;
            }
            let a_sum: f64 = bi
                .iter_nonzero()
                .filter(|&(m1, _)| m1 > p)
                .map(|(m1, v)| wf[m1] * v)
                .sum();
            t2 += fi * a_sum * rate_col;
        }
    }

    // Sojourn ⊗ transition, linked part.
    let mut t3 = 0.0;
    for (i, bi) in spec.sojourn().iter().enumerate() {
        let atoms: Vec<(usize, f64)> = bi
            .iter_nonzero()
            .filter(|&(m1, _)| m1 > p)
            .map(|(m1, v)| (m1, wf[m1] * v))
            .collect();
        if atoms.is_empty() {
            continue;
        }
        for (k, l, b) in spec.transition_pairs() {
            let f2: Vec<f64> = (0..len).map(|m| wf[m] * b[m]).collect();
            t3 += linked_mixed_sum(surfaces, rates, k, l, i, &atoms, &f2);
        }
    }

    // Transition ⊗ transition.
    let mut t4 = 0.0;
    for (i, j, bij) in spec.transition_pairs() {
        let f1: Vec<f64> = (0..len).map(|m| wf[m] * bij[m]).collect();
        for (k, l, bkl) in spec.transition_pairs() {
            let f2: Vec<f64> = (0..len).map(|m| wf[m] * bkl[m]).collect();
            t4 += double_transition_sum(surfaces, rates, i, j, k, l, &f1, &f2);
        }
    }

    Ok(t1 + 2.0 * t2 + 2.0 * t3 + t4)
}

/// First two conditional moments and the conditional variance
/// `Var = S⁺ − (V⁺)²`. Small negative values (within `1e−6·max(1, |S⁺|)`)
/// are clamped to zero; larger ones indicate inconsistent inputs and fail.
pub fn conditional_variance(
    spec: &CashflowSpec1D,
    surfaces: &ProbabilitySurfaces,
    rates: &RateSystem,
    discount: &DiscountCurve,
) -> Result<VarianceDecomposition> {
    let v_plus = expected_future_1d(spec, surfaces, rates, discount)?;
    let s_plus = second_moment_future(spec, surfaces, rates, discount)?;
    let raw = s_plus - v_plus * v_plus;
    let tolerance = 1e-6 * s_plus.abs().max(1.0);
    if raw < -tolerance {
        return Err(Error::NegativeVariance { variance: raw, tolerance });
    }
    Ok(VarianceDecomposition { v_plus, s_plus, variance: raw.max(0.0) })
}

/// Prospective free-policy reserve: scheme payments after the pivot plus
/// exercise-scaled underlying payments, expanded into pivot-indicator,
/// linked and double-transition blocks.
pub fn free_policy_prospective(
    fp: &FreePolicySpec,
    space: &StateSpace,
    surfaces: &ProbabilitySurfaces,
    rates: &RateSystem,
    discount: &DiscountCurve,
) -> Result<f64> {
    fp.validate(space)?;
    check_dims(surfaces, rates, fp.len(), fp.n_states())?;
    if !surfaces.has_joint() {
        return Err(Error::InconsistentEnsemble(
            "free-policy valuation needs joint occupation surfaces".into(),
        ));
    }
    let n = fp.n_states();
    let p = surfaces.pivot();
    let len = surfaces.len();
    let w = discount.weights(p);
    let mut acc = 0.0;

    // Unscaled scheme payments after the pivot.
    for i in 0..n {
        if !space.is_scheme(i) {
            continue;
        }
        for (m, v) in fp.sojourn(i).iter_nonzero() {
            if m > p {
                acc += w[m] * surfaces.p1(i, m - 1) * v;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j || !space.is_scheme(i) || !space.is_scheme(j) {
                continue;
            }
            if let Some(c) = fp.transition_payment(i, j) {
                for m in (p + 1)..len {
                    let dl = rates.dl1(i, j, m);
                    if dl != 0.0 {
                        acc += w[m] * c[m] * surfaces.p1(i, m - 1) * dl;
                    }
                }
            }
        }
    }

    // Scaled underlying payments against each exercise transition.
    for (k, l, rho) in fp.rho_pairs() {
        // Shared rate column Σ_{m2} ρ(m2)·P̃_kl(m2^±)·ΔΛ_kl(m2), both sides.
        let mut rate_col = 0.0;
        for m2 in 1..len {
            let dl = rates.dl1(k, l, m2);
            if dl != 0.0 {
                rate_col += rho[m2] * ptil1(surfaces, k, l, m2) * dl;
            }
        }
        for i in 0..n {
            if !space.is_underlying(i) {
                continue;
            }
            let atoms: Vec<(usize, f64)> = fp
                .sojourn(i)
                .iter_nonzero()
                .filter(|&(m1, _)| m1 > p)
                .map(|(m1, v)| (m1, w[m1] * v))
                .collect();
            if atoms.is_empty() {
                continue;
            }
            let fi = surfaces.p1(i, p);
            if fi != 0.0 {
                let a_sum: f64 = atoms.iter().map(|&(_, v)| v).sum();
                acc += fi * a_sum * rate_col;
            }
            acc += linked_mixed_sum(surfaces, rates, k, l, i, &atoms, rho);
        }
        for i in 0..n {
            for j in 0..n {
                if i == j || !space.is_underlying(i) || !space.is_underlying(j) {
                    continue;
                }
                if let Some(c) = fp.transition_payment(i, j) {
                    let f1: Vec<f64> = (0..len)
                        .map(|m| if m > p { w[m] * c[m] } else { 0.0 })
                        .collect();
                    acc +=
                        double_transition_sum(surfaces, rates, i, j, k, l, &f1, rho);
                }
            }
        }
    }
    Ok(acc)
}

/// Retrospective free-policy accumulation: the same five blocks over
/// `[0, s]`, with backward-side occupation factors.
pub fn free_policy_retrospective(
    fp: &FreePolicySpec,
    space: &StateSpace,
    surfaces: &ProbabilitySurfaces,
    rates: &RateSystem,
    discount: &DiscountCurve,
) -> Result<f64> {
    fp.validate(space)?;
    check_dims(surfaces, rates, fp.len(), fp.n_states())?;
    if !surfaces.has_joint() {
        return Err(Error::InconsistentEnsemble(
            "free-policy valuation needs joint occupation surfaces".into(),
        ));
    }
    let n = fp.n_states();
    let p = surfaces.pivot();
    let len = surfaces.len();
    let w = discount.weights(p);
    let mut acc = 0.0;

    for i in 0..n {
        if !space.is_scheme(i) {
            continue;
        }
        for (m, v) in fp.sojourn(i).iter_nonzero() {
            if m <= p {
                acc += w[m] * surfaces.p1(i, m.saturating_sub(1)) * v;
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j || !space.is_scheme(i) || !space.is_scheme(j) {
                continue;
            }
            if let Some(c) = fp.transition_payment(i, j) {
                for m in 1..=p {
                    let dl = rates.dl1(i, j, m);
                    if dl != 0.0 {
                        acc += w[m] * c[m] * surfaces.p1(j, m) * dl;
                    }
                }
            }
        }
    }

    for (k, l, rho) in fp.rho_pairs() {
        let mut rate_col = 0.0;
        for m2 in 1..len {
            let dl = rates.dl1(k, l, m2);
            if dl != 0.0 {
                rate_col += rho[m2] * ptil1(surfaces, k, l, m2) * dl;
            }
        }
        for i in 0..n {
            if !space.is_underlying(i) {
                continue;
            }
            let atoms: Vec<(usize, f64)> = fp
                .sojourn(i)
                .iter_nonzero()
                .filter(|&(m1, _)| m1 <= p)
                .map(|(m1, v)| (m1, w[m1] * v))
                .collect();
            if atoms.is_empty() {
                continue;
            }
            let fi = surfaces.p1(i, p);
            if fi != 0.0 {
                let a_sum: f64 = atoms.iter().map(|&(_, v)| v).sum();
                acc += fi * a_sum * rate_col;
            }
            acc += linked_mixed_sum(surfaces, rates, k, l, i, &atoms, rho);
        }
        for i in 0..n {
            for j in 0..n {
                if i == j || !space.is_underlying(i) || !space.is_underlying(j) {
                    continue;
                }
                if let Some(c) = fp.transition_payment(i, j) {
                    let f1: Vec<f64> = (0..len)
                        .map(|m| if m >= 1 && m <= p { w[m] * c[m] } else { 0.0 })
                        .collect();
                    acc +=
                        double_transition_sum(surfaces, rates, i, j, k, l, &f1, rho);
                }
            }
        }
    }
    Ok(acc)
}
