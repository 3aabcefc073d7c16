//! Path simulation, counting processes and path-wise payouts.
//!
//! Paths are simulated by one-step thinning on the valuation grid itself: in
//! each step a single uniform draw is partitioned according to the one-step
//! jump probabilities `λ_ij(t, d)·h`, so at most one jump happens per step and
//! every jump lands exactly on a grid point. Intensities may depend on time
//! and on the duration since the last jump, which is what makes the resulting
//! process non-Markov in its state label alone.
//!
//! A [`Path`] is stored run-length encoded (segment starts plus states); all
//! evaluation is done by iterating its jumps and the sparse atoms of the
//! payment specification, never by materializing a dense state vector.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cashflow::{CashflowSpec1D, CashflowSpec2D, FreePolicySpec};
use crate::error::{Error, Result};
use crate::grid::{PivotConventions, StateSpace, TimeGrid};

/// A transition intensity as a function of time and of duration since the
/// last jump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateFn {
    /// `λ(t, d) = value`.
    Constant { value: f64 },
    /// `λ(t, d) = intercept + slope·t`.
    TimeLinear { intercept: f64, slope: f64 },
    /// `λ(t, d) = base + amp·exp(−decay·d)`: duration dependence, the
    /// non-Markov ingredient.
    DurationExp { base: f64, amp: f64, decay: f64 },
    /// `λ(t, d) = base + slope·d`: linearly duration-dependent.
    DurationLinear { base: f64, slope: f64 },
    /// `λ(t, d) = value·1{open < t ≤ close}`: a gated constant intensity,
    /// e.g. an exercise option that closes before the horizon.
    TimeWindow { value: f64, open: f64, close: f64 },
}

impl RateFn {
    /// Evaluate at time `t` and duration `d`.
    pub fn eval(&self, t: f64, d: f64) -> f64 {
        match *self {
            RateFn::Constant { value } => value,
            RateFn::TimeLinear { intercept, slope } => intercept + slope * t,
            RateFn::DurationExp { base, amp, decay } => base + amp * (-decay * d).exp(),
            RateFn::DurationLinear { base, slope } => base + slope * d,
            RateFn::TimeWindow { value, open, close } => {
                if t > open && t <= close {
                    value
                } else {
                    0.0
                }
            }
        }
    }

    /// True when the value depends on duration.
    pub fn duration_dependent(&self) -> bool {
        matches!(self, RateFn::DurationExp { .. } | RateFn::DurationLinear { .. })
    }
}

/// A multi-state intensity model: per ordered state pair an optional
/// intensity, plus the deterministic initial state.
#[derive(Debug, Clone)]
pub struct IntensityModel {
    n_states: usize,
    initial: usize,
    /// Adjacency: for each source state the list of `(target, rate)`.
    out: Vec<Vec<(usize, RateFn)>>,
}

impl IntensityModel {
    /// Empty model on `n_states` states starting in `initial`.
    pub fn new(n_states: usize, initial: usize) -> Result<Self> {
        if initial >= n_states {
            return Err(Error::InvalidConfig {
                field: "model.initial_state".into(),
                message: format!("initial state {initial} out of range for {n_states} states"),
            });
        }
        Ok(Self { n_states, initial, out: vec![Vec::new(); n_states] })
    }

    /// Declare the intensity of the transition `from → to`.
    pub fn with_rate(mut self, from: usize, to: usize, rate: RateFn) -> Result<Self> {
        if from >= self.n_states || to >= self.n_states || from == to {
            return Err(Error::InvalidConfig {
                field: "model.intensities".into(),
                message: format!("invalid transition {from}->{to}"),
            });
        }
        if self.out[from].iter().any(|&(t, _)| t == to) {
            return Err(Error::InvalidConfig {
                field: "model.intensities".into(),
                message: format!("duplicate intensity for {from}->{to}"),
            });
        }
        self.out[from].push((to, rate));
        Ok(self)
    }

    /// Number of states.
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Deterministic initial state.
    pub fn initial_state(&self) -> usize {
        self.initial
    }

    /// Intensity of `from → to` at `(t, d)`; zero when undeclared.
    pub fn rate(&self, from: usize, to: usize, t: f64, d: f64) -> f64 {
        self.out[from]
            .iter()
            .find(|&&(tgt, _)| tgt == to)
            .map_or(0.0, |(_, r)| r.eval(t, d))
    }

    /// Outgoing transitions of a state.
    pub fn transitions_from(&self, from: usize) -> &[(usize, RateFn)] {
        &self.out[from]
    }

    /// All declared `(from, to)` pairs.
    pub fn declared_pairs(&self) -> Vec<(usize, usize)> {
        let mut v = Vec::new();
        for (from, outs) in self.out.iter().enumerate() {
            for &(to, _) in outs {
                v.push((from, to));
            }
        }
        v
    }
}

/// A simulated path, run-length encoded: segment start indices and states.
/// The last segment extends to the end of the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    /// `(start_index, state)` per visited sojourn, starting at index 0.
    segments: Vec<(u32, u8)>,
}

/// A single jump of a path: it happens *at* grid index `index`, i.e. the path
/// occupies `from` on `[.., index)` and `to` from `index` on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Jump {
    pub index: usize,
    pub from: usize,
    pub to: usize,
}

impl Path {
    /// Build from raw segments (used by the simulator and the CSV reader).
    pub fn from_segments(segments: Vec<(u32, u8)>) -> Result<Self> {
        if segments.is_empty() || segments[0].0 != 0 {
            return Err(Error::InconsistentEnsemble(
                "path segments must start at index 0".into(),
            ));
        }
        for w in segments.windows(2) {
            if w[1].0 <= w[0].0 {
                return Err(Error::InconsistentEnsemble(
                    "path segment starts must be strictly increasing".into(),
                ));
            }
            if w[1].1 == w[0].1 {
                return Err(Error::InconsistentEnsemble(
                    "consecutive path segments must change state".into(),
                ));
            }
        }
        Ok(Self { segments })
    }

    /// Raw segments.
    pub fn segments(&self) -> &[(u32, u8)] {
        &self.segments
    }

    /// State occupied at grid index `m`.
    pub fn state_at(&self, m: usize) -> usize {
        let pos = self.segments.partition_point(|&(start, _)| start as usize <= m);
        self.segments[pos - 1].1 as usize
    }

    /// Iterate the jumps of the path in time order.
    pub fn jumps(&self) -> impl Iterator<Item = Jump> + '_ {
        self.segments.windows(2).map(|w| Jump {
            index: w[1].0 as usize,
            from: w[0].1 as usize,
            to: w[1].1 as usize,
        })
    }

    /// Number of jumps.
    pub fn n_jumps(&self) -> usize {
        self.segments.len() - 1
    }

    /// Grid index at which the most recent jump at or before `m` happened
    /// (0 when still in the initial sojourn): `m` minus this is the duration.
    pub fn last_jump_index_at(&self, m: usize) -> usize {
        let pos = self.segments.partition_point(|&(start, _)| start as usize <= m);
        self.segments[pos - 1].0 as usize
    }

    /// First jump from the scheme block into the underlying block, if any:
    /// the exercise time and transition of a free-policy path.
    pub fn exercise(&self, space: &StateSpace) -> Option<Jump> {
        self.jumps()
            .find(|j| space.is_scheme(j.from) && space.is_underlying(j.to))
    }
}

/// Simulate one path on `grid` with the per-path RNG `rng`.
///
/// In each step the total jump probability `Σ_j λ_ij(t_{m−1}, d)·h` must stay
/// at or below one; otherwise the single-draw scheme is invalid and an error
/// is returned.
pub fn simulate_path(model: &IntensityModel, grid: &TimeGrid, rng: &mut impl Rng) -> Result<Path> {
    let h = grid.step();
    let mut segments: Vec<(u32, u8)> = vec![(0, model.initial as u8)];
    let mut state = model.initial;
    let mut dur_steps: usize = 0;
    let mut probs: Vec<(usize, f64)> = Vec::with_capacity(model.n_states);

    for m in 1..=grid.n_steps() {
        let t_prev = grid.time(m - 1);
        let d = dur_steps as f64 * h;
        probs.clear();
        let mut total = 0.0;
        for &(to, ref rate) in &model.out[state] {
            let p = rate.eval(t_prev, d) * h;
            if p < 0.0 {
                return Err(Error::InvalidConfig {
                    field: "model.intensities".into(),
                    message: format!(
                        "negative intensity for {state}->{to} at t={t_prev}, duration {d}"
                    ),
                });
            }
            total += p;
            probs.push((to, total));
        }
        if total > 1.0 {
            return Err(Error::StepProbabilityOverflow { t: t_prev, duration: d, prob: total });
        }
        let u: f64 = rng.gen();
        if u < total {
            let &(to, _) = probs.iter().find(|&&(_, c)| u < c).expect("u < total");
            segments.push((m as u32, to as u8));
            state = to;
            dur_steps = 0;
        } else {
            dur_steps += 1;
        }
    }
    Ok(Path { segments })
}

/// Simulate `n_paths` paths deterministically: path `k` uses a ChaCha stream
/// seeded with `base_seed + k`, so the ensemble is reproducible path by path
/// and independent of the number of worker threads.
pub fn simulate_ensemble(
    model: &IntensityModel,
    grid: &TimeGrid,
    n_paths: usize,
    base_seed: u64,
    threads: usize,
) -> Result<Vec<Path>> {
    let threads = threads.max(1).min(n_paths.max(1));
    let chunk = n_paths.div_ceil(threads);
    let mut results: Vec<Result<Vec<Path>>> = Vec::new();
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for c in 0..threads {
            let lo = c * chunk;
            let hi = ((c + 1) * chunk).min(n_paths);
            if lo >= hi {
                break;
            }
            handles.push(scope.spawn(move || -> Result<Vec<Path>> {
                let mut out = Vec::with_capacity(hi - lo);
                for k in lo..hi {
                    let mut rng = ChaCha8Rng::seed_from_u64(base_seed.wrapping_add(k as u64));
                    out.push(simulate_path(model, grid, &mut rng)?);
                }
                Ok(out)
            }));
        }
        for h in handles {
            results.push(h.join().expect("simulation worker panicked"));
        }
    });
    let mut paths = Vec::with_capacity(n_paths);
    for r in results {
        paths.extend(r?);
    }
    Ok(paths)
}

/// Counting processes of a single path under the diagonal completion.
///
/// Off-diagonal entries are the usual jump counters `N_ij`. Diagonal entries
/// are defined relative to the pivot so that the link equations hold exactly:
/// after the pivot `N_ii` decreases by one for every jump *out of* `i`;
/// at or before the pivot it decreases by one for every jump *into* `i`,
/// and `N_ii(s) = 0`.
#[derive(Debug, Clone)]
pub struct CountingMatrices {
    n_states: usize,
    len: usize,
    /// Cumulative counts, flattened `[(i·nz + j)·len + m]`.
    counts: Vec<i64>,
}

impl CountingMatrices {
    /// Cumulative count `N_ij(t_m)`.
    pub fn count(&self, i: usize, j: usize, m: usize) -> i64 {
        self.counts[(i * self.n_states + j) * self.len + m]
    }

    /// Number of states.
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    /// Number of grid points.
    pub fn len(&self) -> usize {
        self.len
    }

    /// Non-empty by construction; kept for clippy symmetry.
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

/// Assemble the counting processes of one path on a grid with conventions
/// `conv` (test and diagnostics helper; the estimator accumulates the same
/// increments directly).
pub fn counting_processes(path: &Path, n_states: usize, conv: &PivotConventions) -> CountingMatrices {
    let len = conv.last() + 1;
    let mut inc = vec![0i64; n_states * n_states * len];
    let p = conv.pivot();
    for j in path.jumps() {
        let m = j.index;
        inc[(j.from * n_states + j.to) * len + m] += 1;
        if m > p {
            // Departure from `from` after the pivot.
            inc[(j.from * n_states + j.from) * len + m] -= 1;
        } else {
            // Arrival into `to` at or before the pivot.
            inc[(j.to * n_states + j.to) * len + m] -= 1;
        }
    }
    // Cumulate forward from the pivot and backward from it so that
    // N_ij(s) holds the retrospective level for off-diagonals and zero on the
    // diagonal: before the pivot the *increments* are what the backward link
    // equation consumes, so we store N_ij(t_m) = Σ_{r ≤ m} increments for
    // off-diagonals (the plain counter) and, for diagonals, the backward
    // cumulative Σ_{r > m, r ≤ p} (−increments) so that N_ii decreases when
    // moving *back* from the pivot, matching N_ii(s) = 0.
    let mut counts = vec![0i64; n_states * n_states * len];
    for i in 0..n_states {
        for j in 0..n_states {
            let base = (i * n_states + j) * len;
            if i != j {
                let mut acc = 0;
                for m in 0..len {
                    acc += inc[base + m];
                    counts[base + m] = acc;
                }
            } else {
                // Diagonal: zero at the pivot, cumulated outward on each side.
                let mut acc = 0;
                for m in (p + 1)..len {
                    acc += inc[base + m];
                    counts[base + m] = acc;
                }
                acc = 0;
                for m in (0..=p).rev() {
                    counts[base + m] = acc;
                    if m > 0 {
                        // The increment recorded at m belongs to the window
                        // (t_{m−1}, t_m]; moving left past it removes it.
                        acc -= inc[base + m];
                    }
                }
            }
        }
    }
    CountingMatrices { n_states, len, counts }
}

/// Positive discount factors `κ(t_m)` on the grid; present values at the
/// pivot use the weights `w(t) = κ(s)/κ(t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscountCurve {
    kappa: Vec<f64>,
}

impl DiscountCurve {
    /// Constant short rate `r`: `κ(t) = exp(r·t)`.
    pub fn flat(grid: &TimeGrid, r: f64) -> Self {
        Self { kappa: (0..grid.len()).map(|m| (r * grid.time(m)).exp()).collect() }
    }

    /// Explicit factors, validated strictly positive.
    pub fn from_values(kappa: Vec<f64>) -> Result<Self> {
        if let Some(idx) = kappa.iter().position(|&k| !(k > 0.0) || !k.is_finite()) {
            return Err(Error::NonPositiveDiscount { index: idx });
        }
        Ok(Self { kappa })
    }

    /// Number of grid points covered.
    pub fn len(&self) -> usize {
        self.kappa.len()
    }

    /// True when no factors are stored.
    pub fn is_empty(&self) -> bool {
        self.kappa.is_empty()
    }

    /// Factor `κ(t_m)`.
    pub fn kappa(&self, m: usize) -> f64 {
        self.kappa[m]
    }

    /// Pivot-relative weights `w(t_m) = κ(t_p)/κ(t_m)`.
    pub fn weights(&self, pivot: usize) -> Vec<f64> {
        let ks = self.kappa[pivot];
        self.kappa.iter().map(|&k| ks / k).collect()
    }
}

/// Discounted prospective payout `Y⁺` of one path: payments in `(s, T]`,
/// valued at the pivot.
pub fn path_payout_future(
    path: &Path,
    spec: &CashflowSpec1D,
    discount: &DiscountCurve,
    conv: &PivotConventions,
) -> f64 {
    let w = discount.weights(conv.pivot());
    let p = conv.pivot();
    let mut acc = 0.0;
    for (i, b) in spec.sojourn().iter().enumerate() {
        for (m, v) in b.iter_nonzero() {
            if m > p && path.state_at(m - 1) == i {
                acc += w[m] * v;
            }
        }
    }
    for j in path.jumps() {
        if j.index > p {
            if let Some(b) = spec.transition_payment(j.from, j.to) {
                acc += w[j.index] * b[j.index];
            }
        }
    }
    acc
}

/// Discounted retrospective payout `Y⁻` of one path: payments in `[0, s]`,
/// valued at the pivot (accumulated, since `w > 1` there).
pub fn path_payout_past(
    path: &Path,
    spec: &CashflowSpec1D,
    discount: &DiscountCurve,
    conv: &PivotConventions,
) -> f64 {
    let w = discount.weights(conv.pivot());
    let p = conv.pivot();
    let mut acc = 0.0;
    for (i, b) in spec.sojourn().iter().enumerate() {
        for (m, v) in b.iter_nonzero() {
            if m <= p && path.state_at(conv.left_index(m)) == i {
                acc += w[m] * v;
            }
        }
    }
    for j in path.jumps() {
        if j.index <= p {
            if let Some(b) = spec.transition_payment(j.from, j.to) {
                acc += w[j.index] * b[j.index];
            }
        }
    }
    acc
}

/// Payout of a two-dimensional payment specification along one path: the
/// double integral of the spec's measures against the path's indicator and
/// counting processes. Used as the path-wise oracle for squared payouts and
/// second moments.
pub fn path_payout_2d(
    path: &Path,
    spec: &CashflowSpec2D,
    conv: &PivotConventions,
) -> f64 {
    let mut acc = 0.0;
    // Sojourn ⊗ sojourn atoms, both coordinates read at true left limits.
    for ((i, j), meas) in spec.sojourn_pairs() {
        for (m1, m2, v) in meas.iter_nonzero() {
            if path.state_at(conv.left_index(m1)) == i && path.state_at(conv.left_index(m2)) == j {
                acc += v;
            }
        }
    }
    // Sojourn ⊗ transition terms.
    for term in spec.mixed() {
        for (m1, v1) in term.base.iter_nonzero() {
            if path.state_at(conv.left_index(m1)) != term.i {
                continue;
            }
            for j in path.jumps() {
                if j.from == term.k && j.to == term.l {
                    acc += v1 * term.weight.at(m1, j.index);
                }
            }
        }
    }
    // Transition ⊗ transition terms.
    for ((i, jj, k, l), weight) in spec.double() {
        for j1 in path.jumps() {
            if j1.from != i || j1.to != jj {
                continue;
            }
            for j2 in path.jumps() {
                if j2.from == k && j2.to == l {
                    acc += weight.at(j1.index, j2.index);
                }
            }
        }
    }
    acc
}

/// Which side of the pivot a free-policy payout covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayoutSide {
    /// Payments in `(s, T]`.
    Future,
    /// Payments in `[0, s]`.
    Past,
}

/// Discounted payout of a free-policy product along one path, evaluated
/// directly from its scaled-payment representation: scheme payments run
/// unscaled until the exercise jump, underlying payments thereafter carry the
/// conversion factor `ρ(τ, k, l)` of the realized exercise.
///
/// A sojourn atom of the *entered* underlying state falling exactly on the
/// exercise time is ambiguous: the left-limit convention drops it, while a
/// schedule "paying from exercise on" would include it. Such paths are
/// rejected with [`Error::CollisionAtExercise`].
pub fn path_payout_free_policy(
    path_index: usize,
    path: &Path,
    fp: &FreePolicySpec,
    space: &StateSpace,
    discount: &DiscountCurve,
    grid: &TimeGrid,
    side: PayoutSide,
) -> Result<f64> {
    let conv = grid.conventions();
    let w = discount.weights(conv.pivot());
    let p = conv.pivot();
    let ex = path.exercise(space);
    if let Some(j) = ex {
        if fp.sojourn(j.to).atom(j.index) != 0.0 {
            return Err(Error::CollisionAtExercise { path: path_index, t: grid.time(j.index) });
        }
    }
    // The conversion factor is a function of the exercise time and transition.
    let rho_val = match ex {
        Some(j) => fp.rho(j.from, j.to).map_or(1.0, |r| r[j.index]),
        None => 1.0,
    };
    let in_window = |m: usize| match side {
        PayoutSide::Future => m > p,
        PayoutSide::Past => m <= p,
    };
    let mut acc = 0.0;
    for i in 0..space.len() {
        for (m, v) in fp.sojourn(i).iter_nonzero() {
            if in_window(m) && path.state_at(conv.left_index(m)) == i {
                let f = if space.is_underlying(i) { rho_val } else { 1.0 };
                acc += w[m] * f * v;
            }
        }
    }
    for j in path.jumps() {
        if in_window(j.index) {
            if let Some(c) = fp.transition_payment(j.from, j.to) {
                let f = if space.is_underlying(j.from) { rho_val } else { 1.0 };
                acc += w[j.index] * f * c[j.index];
            }
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> (IntensityModel, TimeGrid) {
        let model = IntensityModel::new(2, 0)
            .unwrap()
            .with_rate(0, 1, RateFn::Constant { value: 0.1 })
            .unwrap();
        let grid = TimeGrid::new(10.0, 0.02, 0.0).unwrap();
        (model, grid)
    }

    #[test]
    fn paths_are_reproducible_per_seed() {
        let (model, grid) = two_state();
        let a = simulate_ensemble(&model, &grid, 50, 7, 1).unwrap();
        let b = simulate_ensemble(&model, &grid, 50, 7, 4).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn step_probability_overflow_is_detected() {
        let model = IntensityModel::new(2, 0)
            .unwrap()
            .with_rate(0, 1, RateFn::Constant { value: 60.0 })
            .unwrap();
        let grid = TimeGrid::new(1.0, 0.02, 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            simulate_path(&model, &grid, &mut rng),
            Err(Error::StepProbabilityOverflow { .. })
        ));
    }

    #[test]
    fn state_at_and_jumps_agree() {
        let path = Path::from_segments(vec![(0, 0), (3, 1), (7, 0)]).unwrap();
        assert_eq!(path.state_at(0), 0);
        assert_eq!(path.state_at(2), 0);
        assert_eq!(path.state_at(3), 1);
        assert_eq!(path.state_at(6), 1);
        assert_eq!(path.state_at(7), 0);
        assert_eq!(path.state_at(100), 0);
        let jumps: Vec<_> = path.jumps().collect();
        assert_eq!(jumps.len(), 2);
        assert_eq!(jumps[0], Jump { index: 3, from: 0, to: 1 });
        assert_eq!(jumps[1], Jump { index: 7, from: 1, to: 0 });
    }

    #[test]
    fn duration_resets_at_jumps() {
        let path = Path::from_segments(vec![(0, 0), (3, 1)]).unwrap();
        assert_eq!(path.last_jump_index_at(2), 0);
        assert_eq!(path.last_jump_index_at(3), 3);
        assert_eq!(path.last_jump_index_at(5), 3);
    }

    #[test]
    fn diagonal_counts_vanish_at_pivot() {
        let grid = TimeGrid::new(1.0, 0.1, 0.5).unwrap();
        let conv = grid.conventions();
        let path = Path::from_segments(vec![(0, 0), (2, 1), (8, 0)]).unwrap();
        let n = counting_processes(&path, 2, &conv);
        assert_eq!(n.count(0, 0, conv.pivot()), 0);
        assert_eq!(n.count(1, 1, conv.pivot()), 0);
        // Jump into 1 at m=2 (≤ pivot): arrival decrement on the diagonal of 1,
        // visible when moving back across m=2.
        assert_eq!(n.count(1, 1, 1), 1);
        // Jump out of 1 at m=8 (> pivot): departure decrement on diagonal of 1.
        assert_eq!(n.count(1, 1, 8), -1);
        assert_eq!(n.count(0, 1, 10), 1);
        assert_eq!(n.count(1, 0, 10), 1);
    }
}
