//! State space, time grid and pivot conventions.
//!
//! Everything downstream works on a uniform grid `0 = t_0 < t_1 < … < t_M = T`
//! together with a distinguished *pivot* index `p` with `t_p = s`, the time the
//! valuation conditions on. Retrospective quantities live on indices `≤ p`,
//! prospective quantities on indices `> p`, and the two families of integral
//! equations meet at the pivot. The conventions collected in
//! [`PivotConventions`] are the single source of truth for
//!
//! * the one-sided evaluation index `u^±` (left limit after the pivot, the
//!   point itself at or before it), and
//! * the two-sided window `((s,t]]`, which reads `(s,t]` for `t > s` and
//!   `(t,s]` for `t ≤ s` (empty at `t = s`).
//!
//! Keeping these in one place lets the rate estimator and the forward solver
//! use literally the same index arithmetic, which is what makes the
//! estimate → solve round trip exact.

use crate::error::{Error, Result};

/// Relative tolerance used when checking that times sit on the grid.
const GRID_SNAP_TOL: f64 = 1e-9;

/// A finite, ordered set of state labels, optionally split into scheme states
/// (where payments are specified) and underlying states (reached only through
/// an exercise transition, as in free-policy conversion).
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpace {
    labels: Vec<String>,
    /// For each state: `true` if it belongs to the scheme block S0. `None`
    /// when no partition is declared (plain models).
    scheme_mask: Option<Vec<bool>>,
}

impl StateSpace {
    /// Build a plain state space from labels. Labels must be unique.
    pub fn new<S: Into<String>>(labels: Vec<S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        Self::validate_labels(&labels)?;
        Ok(Self { labels, scheme_mask: None })
    }

    /// Build a partitioned state space. `scheme` lists the labels of the
    /// scheme block S0; every other label belongs to the underlying block S1.
    pub fn with_partition<S: Into<String>>(labels: Vec<S>, scheme: &[&str]) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        Self::validate_labels(&labels)?;
        let mut mask = vec![false; labels.len()];
        for name in scheme {
            let idx = labels
                .iter()
                .position(|l| l == name)
                .ok_or_else(|| Error::UnknownState((*name).to_string()))?;
            mask[idx] = true;
        }
        if mask.iter().all(|&b| b) || mask.iter().all(|&b| !b) {
            return Err(Error::InvalidConfig {
                field: "state_space.scheme_states".into(),
                message: "partition must leave both blocks non-empty".into(),
            });
        }
        Ok(Self { labels, scheme_mask: Some(mask) })
    }

    fn validate_labels(labels: &[String]) -> Result<()> {
        if labels.len() < 2 {
            return Err(Error::InvalidConfig {
                field: "state_space.labels".into(),
                message: "need at least two states".into(),
            });
        }
        for (k, l) in labels.iter().enumerate() {
            if labels[..k].contains(l) {
                return Err(Error::InvalidConfig {
                    field: "state_space.labels".into(),
                    message: format!("duplicate label `{l}`"),
                });
            }
        }
        Ok(())
    }

    /// Number of states.
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    /// True when the space is empty (never, after validation; kept for clippy).
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Label of state `i`.
    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    /// All labels in order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Index of the state carrying `label`.
    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownState(label.to_string()))
    }

    /// Whether a scheme/underlying partition is declared.
    pub fn has_partition(&self) -> bool {
        self.scheme_mask.is_some()
    }

    /// True if state `i` belongs to the scheme block S0. Without a declared
    /// partition every state is a scheme state.
    pub fn is_scheme(&self, i: usize) -> bool {
        self.scheme_mask.as_ref().map_or(true, |m| m[i])
    }

    /// True if state `i` belongs to the underlying block S1.
    pub fn is_underlying(&self, i: usize) -> bool {
        self.scheme_mask.as_ref().map_or(false, |m| !m[i])
    }

    /// Indices of the scheme block S0.
    pub fn scheme_states(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_scheme(i)).collect()
    }

    /// Indices of the underlying block S1.
    pub fn underlying_states(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.is_underlying(i)).collect()
    }
}

/// Uniform time grid on `[0, T]` with a pivot sitting exactly on a grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_max: f64,
    step: f64,
    /// Number of steps `M`; the grid has `M + 1` points.
    n_steps: usize,
    /// Index `p` of the pivot: `t_p = s`.
    pivot_index: usize,
}

impl TimeGrid {
    /// Build the grid for horizon `t_max`, step `step` and pivot time `s`.
    /// Both `t_max` and `s` must be (numerically) integer multiples of `step`.
    pub fn new(t_max: f64, step: f64, s: f64) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() {
            return Err(Error::InvalidConfig {
                field: "grid.step".into(),
                message: format!("step must be positive and finite, got {step}"),
            });
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::InvalidConfig {
                field: "grid.t_max".into(),
                message: format!("horizon must be positive and finite, got {t_max}"),
            });
        }
        let n_steps = (t_max / step).round() as usize;
        if n_steps == 0 || (n_steps as f64 * step - t_max).abs() > GRID_SNAP_TOL * t_max.max(1.0) {
            return Err(Error::InvalidConfig {
                field: "grid.t_max".into(),
                message: format!("horizon {t_max} is not a multiple of step {step}"),
            });
        }
        if !(0.0..=t_max).contains(&s) {
            return Err(Error::InvalidConfig {
                field: "grid.pivot".into(),
                message: format!("pivot {s} outside [0, {t_max}]"),
            });
        }
        let pivot_index = (s / step).round() as usize;
        if (pivot_index as f64 * step - s).abs() > GRID_SNAP_TOL * t_max.max(1.0) {
            return Err(Error::PivotOffGrid { pivot: s, step, t_max });
        }
        Ok(Self { t_max, step, n_steps, pivot_index })
    }

    /// Horizon `T`.
    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Step size `h`.
    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of steps `M`.
    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    /// Number of grid points `M + 1`.
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    /// Grids are never empty; kept for clippy symmetry.
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Pivot index `p`.
    pub fn pivot_index(&self) -> usize {
        self.pivot_index
    }

    /// Pivot time `s = t_p`.
    pub fn pivot_time(&self) -> f64 {
        self.time(self.pivot_index)
    }

    /// Time of grid point `m`.
    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.step
    }

    /// Nearest grid index to `t`, failing when `t` is off-grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let m = (t / self.step).round();
        let idx = m as usize;
        if m < 0.0
            || idx > self.n_steps
            || (m * self.step - t).abs() > GRID_SNAP_TOL * self.t_max.max(1.0)
        {
            return Err(Error::InvalidConfig {
                field: "time".into(),
                message: format!("t={t} is not a grid point (step {})", self.step),
            });
        }
        Ok(idx)
    }

    /// The pivot conventions induced by this grid.
    pub fn conventions(&self) -> PivotConventions {
        PivotConventions { pivot: self.pivot_index, n_steps: self.n_steps }
    }
}

/// Index arithmetic for the one-sided conventions around the pivot.
///
/// For a grid function sampled at the points, the evaluation index of `f(u^±)`
/// at grid index `m` is `m − 1` strictly after the pivot (left limit) and `m`
/// at or before it (the point itself). The two-sided window `((s,t]]` becomes
/// the index range `p+1..=m` after the pivot and `m+1..=p` before it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PivotConventions {
    pivot: usize,
    n_steps: usize,
}

impl PivotConventions {
    /// Pivot index `p`.
    pub fn pivot(&self) -> usize {
        self.pivot
    }

    /// Last grid index `M`.
    pub fn last(&self) -> usize {
        self.n_steps
    }

    /// True when index `m` lies strictly after the pivot.
    pub fn is_forward(&self, m: usize) -> bool {
        m > self.pivot
    }

    /// Evaluation index of `f(u^±)` at grid index `m`: the left neighbour
    /// after the pivot, the point itself at or before it.
    pub fn side_index(&self, m: usize) -> usize {
        if m > self.pivot {
            m - 1
        } else {
            m
        }
    }

    /// Evaluation index of a true left limit `f(u^−)`, with `f(0^−) = f(0)`.
    pub fn left_index(&self, m: usize) -> usize {
        m.saturating_sub(1)
    }

    /// Index range realizing the two-sided window `((s, t_m]]`: atoms strictly
    /// between the pivot and `m`, inclusive on the far end. Empty at `m = p`.
    pub fn window(&self, m: usize) -> std::ops::RangeInclusive<usize> {
        if m > self.pivot {
            self.pivot + 1..=m
        } else {
            // For m == pivot this is p+1..=p, the empty range.
            m + 1..=self.pivot
        }
    }

    /// Index range of all prospective atoms `(s, T]`.
    pub fn forward_window(&self) -> std::ops::RangeInclusive<usize> {
        self.window(self.n_steps)
    }

    /// Index range of all retrospective atoms `(0, s]` (atoms cannot sit at
    /// index 0 because jumps land on strictly positive grid points).
    pub fn backward_window(&self) -> std::ops::RangeInclusive<usize> {
        if self.pivot == 0 {
            1..=0 // empty
        } else {
            1..=self.pivot
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_off_grid_pivot() {
        assert!(TimeGrid::new(10.0, 0.02, 5.0).is_ok());
        assert!(matches!(
            TimeGrid::new(10.0, 0.02, 5.003),
            Err(Error::PivotOffGrid { .. })
        ));
    }

    #[test]
    fn grid_rejects_bad_horizon() {
        assert!(TimeGrid::new(10.01, 0.02, 0.0).is_err());
        assert!(TimeGrid::new(-1.0, 0.02, 0.0).is_err());
        assert!(TimeGrid::new(10.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn side_index_matches_one_sided_convention() {
        let g = TimeGrid::new(1.0, 0.25, 0.5).unwrap();
        let c = g.conventions();
        assert_eq!(c.pivot(), 2);
        // At or before the pivot: the point itself.
        assert_eq!(c.side_index(0), 0);
        assert_eq!(c.side_index(2), 2);
        // Strictly after: the left neighbour.
        assert_eq!(c.side_index(3), 2);
        assert_eq!(c.side_index(4), 3);
    }

    #[test]
    fn window_is_empty_exactly_at_pivot() {
        let g = TimeGrid::new(1.0, 0.25, 0.5).unwrap();
        let c = g.conventions();
        assert_eq!(c.window(4).collect::<Vec<_>>(), vec![3, 4]);
        assert_eq!(c.window(0).collect::<Vec<_>>(), vec![1, 2]);
        assert!(c.window(2).next().is_none());
    }

    #[test]
    fn partition_blocks_are_disjoint_and_cover() {
        let sp =
            StateSpace::with_partition(vec!["a0", "d0", "a1", "d1"], &["a0", "d0"]).unwrap();
        assert_eq!(sp.scheme_states(), vec![0, 1]);
        assert_eq!(sp.underlying_states(), vec![2, 3]);
        assert!(sp.is_scheme(0) && !sp.is_underlying(0));
        assert!(sp.is_underlying(3) && !sp.is_scheme(3));
    }

    #[test]
    fn partition_must_be_proper() {
        assert!(StateSpace::with_partition(vec!["a", "b"], &["a", "b"]).is_err());
        assert!(StateSpace::with_partition(vec!["a", "b"], &[]).is_err());
    }
}
