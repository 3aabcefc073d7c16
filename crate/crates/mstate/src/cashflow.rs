//! Payment specifications in one and two time dimensions.
//!
//! A one-dimensional specification is the classical payment stream of a
//! multi-state contract: a sojourn payment measure `B_i` per state (paid while
//! the contract occupies `i`, read at left limits) and a transition payment
//! function `b_ij` per ordered pair (paid at jumps `i → j`).
//!
//! A two-dimensional specification describes payments indexed by *pairs* of
//! times, which is what squared payouts and exercise-scaled products live in:
//!
//! * sojourn ⊗ sojourn: a measure `A_ij(du1, du2)` paid when the contract is
//!   in `i` at `u1^−` and in `j` at `u2^−`;
//! * sojourn ⊗ transition: a base measure `A_i(du1)` against jumps `k → l` at
//!   `u2`, weighted by a surface `a_ikl(u1, u2)`;
//! * transition ⊗ transition: jump pairs `(i→j, k→l)` weighted by
//!   `a_ijkl(u1, u2)`.
//!
//! [`square_cashflow`] turns a 1D specification into the 2D specification of
//! its squared discounted prospective payout, with weights `(1, 2, 1)` on the
//! three blocks — the cross term carries the 2 of the binomial square, the
//! pure blocks are full squares. [`build_free_policy_cashflow`] expands a
//! free-policy product into its unscaled-plus-scaled representation.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grid::{StateSpace, TimeGrid};
use crate::measure::{Measure1D, Measure2D};
use crate::simulate::{
    path_payout_2d, path_payout_future, path_payout_past, DiscountCurve, Path, PayoutSide,
};

/// One-dimensional payment specification on a grid with `len` points.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CashflowSpec1D {
    n_states: usize,
    len: usize,
    sojourn: Vec<Measure1D>,
    /// Grid-sampled transition payments, flattened per ordered pair.
    transition: Vec<Option<Box<[f64]>>>,
}

impl CashflowSpec1D {
    /// Empty specification.
    pub fn new(n_states: usize, len: usize) -> Self {
        Self {
            n_states,
            len,
            sojourn: vec![Measure1D::zeros(len); n_states],
            transition: (0..n_states * n_states).map(|_| None).collect(),
        }
    }

    /// Number of states.
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.len
    }

    /// True when no grid points are covered.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Replace the sojourn payment measure of state `i`.
    pub fn with_sojourn(mut self, i: usize, b: Measure1D) -> Result<Self> {
        if b.len() != self.len {
            return Err(Error::DimensionMismatch(format!(
                "sojourn measure for state {i} has {} atoms, grid has {} points",
                b.len(),
                self.len
            )));
        }
        self.sojourn[i] = b;
        Ok(self)
    }

    /// Declare the transition payment samples `b_ij(t_m)` for `i ≠ j`.
    pub fn with_transition(mut self, i: usize, j: usize, samples: Vec<f64>) -> Result<Self> {
        if i == j || i >= self.n_states || j >= self.n_states {
            return Err(Error::InvalidConfig {
                field: "cashflow.transition".into(),
                message: format!("invalid transition pair {i}->{j}"),
            });
        }
        if samples.len() != self.len {
            return Err(Error::DimensionMismatch(format!(
                "transition payment {i}->{j} has {} samples, grid has {} points",
                samples.len(),
                self.len
            )));
        }
        self.transition[i * self.n_states + j] = Some(samples.into_boxed_slice());
        Ok(self)
    }

    /// Constant transition payment.
    pub fn with_transition_const(self, i: usize, j: usize, value: f64) -> Result<Self> {
        let len = self.len;
        self.with_transition(i, j, vec![value; len])
    }

    /// Sojourn payment measures, indexed by state.
    pub fn sojourn(&self) -> &[Measure1D] {
        &self.sojourn
    }

    /// Transition payment samples for `i → j`, if declared.
    pub fn transition_payment(&self, i: usize, j: usize) -> Option<&[f64]> {
        self.transition[i * self.n_states + j].as_deref()
    }

    /// Iterate declared transition payments as `(i, j, samples)`.
    pub fn transition_pairs(&self) -> impl Iterator<Item = (usize, usize, &[f64])> + '_ {
        self.transition.iter().enumerate().filter_map(move |(idx, t)| {
            t.as_deref().map(|s| (idx / self.n_states, idx % self.n_states, s))
        })
    }
}

/// A weight surface on the grid square, kept separable when it is one —
/// squared payouts and exercise scalings always are, and separability is what
/// the fast second-moment accumulations exploit.
#[derive(Debug, Clone, PartialEq)]
pub enum Weight2D {
    /// `a(u1, u2) = f1(u1)·f2(u2)`.
    Separable { f1: Vec<f64>, f2: Vec<f64> },
    /// Arbitrary grid surface, row-major `values[m1·n + m2]`.
    Dense { n: usize, values: Vec<f64> },
}

impl Weight2D {
    /// Evaluate at cell `(m1, m2)`.
    pub fn at(&self, m1: usize, m2: usize) -> f64 {
        match self {
            Weight2D::Separable { f1, f2 } => f1[m1] * f2[m2],
            Weight2D::Dense { n, values } => values[m1 * n + m2],
        }
    }
}

/// One sojourn ⊗ transition block of a 2D specification: base measure
/// `A_i(du1)` read in state `i` at `u1^−`, against jumps `k → l` at `u2`,
/// with weight `a(u1, u2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedTerm {
    pub i: usize,
    pub k: usize,
    pub l: usize,
    pub base: Measure1D,
    pub weight: Weight2D,
}

/// Two-dimensional payment specification.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CashflowSpec2D {
    n_states: usize,
    len: usize,
    sojourn2: BTreeMap<(usize, usize), Measure2D>,
    mixed: Vec<MixedTerm>,
    double: BTreeMap<(usize, usize, usize, usize), Weight2D>,
}

impl CashflowSpec2D {
    /// Empty specification.
    pub fn new(n_states: usize, len: usize) -> Self {
        Self { n_states, len, ..Default::default() }
    }

    /// Number of states.
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Number of grid points per coordinate.
    pub fn len(&self) -> usize {
        self.len
    }

    /// True when no grid points are covered.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Add (accumulate) a sojourn ⊗ sojourn measure for the state pair.
    pub fn add_sojourn_pair(&mut self, i: usize, j: usize, m: Measure2D) {
        match self.sojourn2.entry((i, j)) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(m);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                for (m1, m2, v) in m.iter_nonzero() {
                    e.get_mut().add_atom(m1, m2, v);
                }
            }
        }
    }

    /// Add a sojourn ⊗ transition block.
    pub fn add_mixed(&mut self, term: MixedTerm) {
        self.mixed.push(term);
    }

    /// Declare the weight of the transition ⊗ transition block `(i→j, k→l)`.
    pub fn add_double(&mut self, i: usize, j: usize, k: usize, l: usize, w: Weight2D) {
        self.double.insert((i, j, k, l), w);
    }

    /// Iterate sojourn ⊗ sojourn blocks as `((i, j), measure)`.
    pub fn sojourn_pairs(&self) -> impl Iterator<Item = ((usize, usize), &Measure2D)> + '_ {
        self.sojourn2.iter().map(|(&k, v)| (k, v))
    }

    /// The sojourn ⊗ transition blocks.
    pub fn mixed(&self) -> &[MixedTerm] {
        &self.mixed
    }

    /// Iterate transition ⊗ transition blocks as `((i, j, k, l), weight)`.
    pub fn double(&self) -> impl Iterator<Item = ((usize, usize, usize, usize), &Weight2D)> + '_ {
        self.double.iter().map(|(&k, v)| (k, v))
    }
}

/// Evaluate a 1D specification along a path: the discounted payout of the
/// requested side, valued at the pivot.
pub fn eval_cashflow_1d(
    spec: &CashflowSpec1D,
    path: &Path,
    discount: &DiscountCurve,
    grid: &TimeGrid,
    side: PayoutSide,
) -> f64 {
    let conv = grid.conventions();
    match side {
        PayoutSide::Future => path_payout_future(path, spec, discount, &conv),
        PayoutSide::Past => path_payout_past(path, spec, discount, &conv),
    }
}

/// Evaluate a 2D specification along a path (discounting, if any, is part of
/// the specification's weights and measures).
pub fn eval_cashflow_2d(spec: &CashflowSpec2D, path: &Path, grid: &TimeGrid) -> f64 {
    path_payout_2d(path, spec, &grid.conventions())
}

/// The 2D specification of the squared discounted prospective payout
/// `(Y⁺)²` of a 1D specification.
///
/// All three blocks are restricted to `(s, T]²` by zeroing the pivot-relative
/// weight `w(t) = κ(s)/κ(t)` at indices at or before the pivot; the cross
/// block carries the binomial factor 2, the pure blocks are full squares.
pub fn square_cashflow(
    spec: &CashflowSpec1D,
    discount: &DiscountCurve,
    grid: &TimeGrid,
) -> Result<CashflowSpec2D> {
    if discount.len() != grid.len() || spec.len() != grid.len() {
        return Err(Error::DimensionMismatch(
            "square_cashflow: spec, discount and grid must share the grid length".into(),
        ));
    }
    let conv = grid.conventions();
    let p = conv.pivot();
    let w = discount.weights(p);
    // Future-masked weights: zero at and before the pivot.
    let wf: Vec<f64> = w.iter().enumerate().map(|(m, &v)| if m > p { v } else { 0.0 }).collect();

    let mut out = CashflowSpec2D::new(spec.n_states(), spec.len());

    // Discounted, future-masked sojourn measures.
    let masked: Vec<Measure1D> =
        spec.sojourn().iter().map(|b| b.scaled_by(|m| wf[m])).collect();
    for (i, bi) in masked.iter().enumerate() {
        if bi.is_zero() {
            continue;
        }
        for (j, bj) in masked.iter().enumerate() {
            if bj.is_zero() {
                continue;
            }
            out.add_sojourn_pair(i, j, Measure2D::product(bi, bj));
        }
    }

    // Cross blocks: 2 · w(u1)B_i(du1) · w(u2)b_kl(u2)Λ-side. The base keeps
    // the raw (already future-masked, discounted) atoms; the u2 factor folds
    // the 2, the weight and the payment samples.
    for (i, bi) in masked.iter().enumerate() {
        if bi.is_zero() {
            continue;
        }
        for (k, l, b) in spec.transition_pairs() {
            let f2: Vec<f64> = (0..spec.len()).map(|m| 2.0 * wf[m] * b[m]).collect();
            out.add_mixed(MixedTerm {
                i,
                k,
                l,
                base: bi.clone(),
                weight: Weight2D::Separable { f1: vec![1.0; spec.len()], f2 },
            });
        }
    }

    // Transition ⊗ transition blocks, full square.
    for (i, j, bij) in spec.transition_pairs() {
        let f1: Vec<f64> = (0..spec.len()).map(|m| wf[m] * bij[m]).collect();
        for (k, l, bkl) in spec.transition_pairs() {
            let f2: Vec<f64> = (0..spec.len()).map(|m| wf[m] * bkl[m]).collect();
            out.add_double(i, j, k, l, Weight2D::Separable { f1: f1.clone(), f2 });
        }
    }
    Ok(out)
}

/// A free-policy product: scheme payments, underlying payments and the
/// conversion factor applied to underlying payments after exercise.
///
/// States are partitioned into a scheme block S0 (where the contract starts)
/// and an underlying block S1 (entered through the exercise transition).
/// Sojourn payments `C_i` are declared for states of both blocks; transition
/// payments only within a block. The factor `ρ(u, k, l)` scales all payments
/// of the underlying block when exercise happened at time `u` through the
/// transition `k → l`.
#[derive(Debug, Clone, PartialEq)]
pub struct FreePolicySpec {
    n_states: usize,
    len: usize,
    sojourn: Vec<Measure1D>,
    transition: Vec<Option<Box<[f64]>>>,
    rho: BTreeMap<(usize, usize), Vec<f64>>,
}

impl FreePolicySpec {
    /// Empty specification.
    pub fn new(n_states: usize, len: usize) -> Self {
        Self {
            n_states,
            len,
            sojourn: vec![Measure1D::zeros(len); n_states],
            transition: (0..n_states * n_states).map(|_| None).collect(),
            rho: BTreeMap::new(),
        }
    }

    /// Number of states.
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.len
    }

    /// True when no grid points are covered.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Replace the sojourn payment measure of state `i`.
    pub fn with_sojourn(mut self, i: usize, c: Measure1D) -> Result<Self> {
        if c.len() != self.len {
            return Err(Error::DimensionMismatch(format!(
                "free-policy sojourn measure for state {i} has {} atoms, grid has {} points",
                c.len(),
                self.len
            )));
        }
        self.sojourn[i] = c;
        Ok(self)
    }

    /// Declare transition payment samples for `i → j`.
    pub fn with_transition(mut self, i: usize, j: usize, samples: Vec<f64>) -> Result<Self> {
        if i == j || i >= self.n_states || j >= self.n_states || samples.len() != self.len {
            return Err(Error::InvalidConfig {
                field: "free_policy.transition".into(),
                message: format!("invalid transition payment {i}->{j}"),
            });
        }
        self.transition[i * self.n_states + j] = Some(samples.into_boxed_slice());
        Ok(self)
    }

    /// Constant transition payment.
    pub fn with_transition_const(self, i: usize, j: usize, value: f64) -> Result<Self> {
        let len = self.len;
        self.with_transition(i, j, vec![value; len])
    }

    /// Declare the conversion factor samples `ρ(t_m, k, l)` for the exercise
    /// transition `k → l`.
    pub fn with_rho(mut self, k: usize, l: usize, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != self.len {
            return Err(Error::DimensionMismatch(format!(
                "rho for {k}->{l} has {} samples, grid has {} points",
                samples.len(),
                self.len
            )));
        }
        self.rho.insert((k, l), samples);
        Ok(self)
    }

    /// Sojourn measure of state `i`.
    pub fn sojourn(&self, i: usize) -> &Measure1D {
        &self.sojourn[i]
    }

    /// Transition payment samples for `i → j`, if declared.
    pub fn transition_payment(&self, i: usize, j: usize) -> Option<&[f64]> {
        self.transition[i * self.n_states + j].as_deref()
    }

    /// Conversion factor samples for the exercise transition `k → l`.
    pub fn rho(&self, k: usize, l: usize) -> Option<&[f64]> {
        self.rho.get(&(k, l)).map(|v| v.as_slice())
    }

    /// Iterate declared exercise transitions as `(k, l, samples)`.
    pub fn rho_pairs(&self) -> impl Iterator<Item = (usize, usize, &[f64])> + '_ {
        self.rho.iter().map(|(&(k, l), v)| (k, l, v.as_slice()))
    }

    /// Validate the specification against a partitioned state space: both
    /// blocks non-empty, transition payments within blocks only (a payment on
    /// an exercise transition would be a lump sum exactly at the exercise
    /// time, which the representation cannot carry), conversion factors on
    /// scheme → underlying pairs only.
    pub fn validate(&self, space: &StateSpace) -> Result<()> {
        if !space.has_partition() {
            return Err(Error::InvalidConfig {
                field: "state_space".into(),
                message: "free-policy products need a scheme/underlying partition".into(),
            });
        }
        if space.len() != self.n_states {
            return Err(Error::DimensionMismatch(
                "free-policy spec and state space disagree on the number of states".into(),
            ));
        }
        for (idx, t) in self.transition.iter().enumerate() {
            if t.as_ref().map_or(true, |s| s.iter().all(|&v| v == 0.0)) {
                continue;
            }
            let (i, j) = (idx / self.n_states, idx % self.n_states);
            if space.is_scheme(i) != space.is_scheme(j) {
                return Err(Error::PaymentOnExerciseTransition {
                    from: space.label(i).to_string(),
                    to: space.label(j).to_string(),
                });
            }
        }
        for (&(k, l), _) in &self.rho {
            if !space.is_scheme(k) || !space.is_underlying(l) {
                return Err(Error::InvalidConfig {
                    field: "free_policy.rho".into(),
                    message: format!(
                        "conversion factor declared for {}->{}, which is not a scheme → \
                         underlying transition",
                        space.label(k),
                        space.label(l)
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Expand a free-policy product into its product representation: a 1D part
/// (unscaled scheme payments) and a 2D part (underlying payments against the
/// exercise transition, weighted by the conversion factor).
///
/// The returned parts carry no discounting and no window restriction; the
/// valuation operators apply both. Along any path, (1D part) + (2D part)
/// reproduces the scaled payout exactly.
pub fn build_free_policy_cashflow(
    fp: &FreePolicySpec,
    space: &StateSpace,
) -> Result<(CashflowSpec1D, CashflowSpec2D)> {
    fp.validate(space)?;
    let n = fp.n_states();
    let len = fp.len();

    let mut part1 = CashflowSpec1D::new(n, len);
    for i in 0..n {
        if space.is_scheme(i) {
            part1 = part1.with_sojourn(i, fp.sojourn(i).clone())?;
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i != j && space.is_scheme(i) && space.is_scheme(j) {
                if let Some(c) = fp.transition_payment(i, j) {
                    part1 = part1.with_transition(i, j, c.to_vec())?;
                }
            }
        }
    }

    let mut part2 = CashflowSpec2D::new(n, len);
    let ones = vec![1.0; len];
    for (k, l, rho) in fp.rho_pairs() {
        for i in 0..n {
            if !space.is_underlying(i) || fp.sojourn(i).is_zero() {
                continue;
            }
            part2.add_mixed(MixedTerm {
                i,
                k,
                l,
                base: fp.sojourn(i).clone(),
                weight: Weight2D::Separable { f1: ones.clone(), f2: rho.to_vec() },
            });
        }
        for i in 0..n {
            for j in 0..n {
                if i == j || !space.is_underlying(i) || !space.is_underlying(j) {
                    continue;
                }
                if let Some(c) = fp.transition_payment(i, j) {
                    part2.add_double(
                        i,
                        j,
                        k,
                        l,
                        Weight2D::Separable { f1: c.to_vec(), f2: rho.to_vec() },
                    );
                }
            }
        }
    }
    Ok((part1, part2))
}
