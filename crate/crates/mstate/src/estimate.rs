//! Estimation of moment surfaces and transition rates from simulated paths.
//!
//! Conditionally on the information available at the pivot — the state alone
//! (*as-if-Markov*) or the state together with a duration bucket — the
//! estimator accumulates, over the paths of one conditioning cell,
//!
//! * occupation counts `Σ I_i(t_m)` and `Σ I_i(t_{m1})·I_k(t_{m2})`, and
//! * jump-count increments `Σ ΔN_ij(t_m)` and `Σ ΔN_ij(t_{m1})·ΔN_kl(t_{m2})`
//!   under the pivot-relative diagonal completion (after the pivot the
//!   diagonal counts departures with a minus sign, at or before it arrivals),
//!
//! all as exact integers carried in `f64`. Transition rates are the count
//! ratios `ΔΛ = ΔQ / occupation`, with the occupation read at the one-sided
//! evaluation index of each coordinate (left neighbour after the pivot, the
//! point itself before). Cells with zero occupation and zero jump mass get a
//! zero rate, mirroring the `1{P > 0}` convention of the continuous-time
//! definition.
//!
//! Because rates are ratios of the very counts the solver multiplies back,
//! solving the forward equations from estimated rates reproduces the
//! estimated occupation surfaces exactly; this round trip is the pipeline's
//! main self-check.

use std::collections::BTreeMap;

use crate::compensated::Dd;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::simulate::Path;

/// How paths are grouped at the pivot.
#[derive(Debug, Clone, PartialEq)]
pub enum ConditioningScheme {
    /// Condition on the state at the pivot only.
    AsIfMarkov,
    /// Condition on the state and on the duration since the last jump,
    /// bucketed by the given ascending edges: bucket 0 is `[0, e_0)`,
    /// bucket `k` is `[e_{k-1}, e_k)`, the last bucket is `[e_last, ∞)`.
    StateDuration { edges: Vec<f64> },
}

/// A conditioning cell: the pivot state, plus a duration bucket under
/// state-duration conditioning.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Cell {
    pub state: usize,
    pub bucket: Option<usize>,
}

impl Cell {
    /// Stable textual form: the state label, with `#bucket` appended under
    /// state-duration conditioning.
    pub fn label(&self, state_label: &str) -> String {
        match self.bucket {
            None => state_label.to_string(),
            Some(b) => format!("{state_label}#{b}"),
        }
    }
}

impl ConditioningScheme {
    /// Validate bucket edges: ascending, positive, finite.
    pub fn validate(&self) -> Result<()> {
        if let ConditioningScheme::StateDuration { edges } = self {
            if edges.is_empty() {
                return Err(Error::InvalidConfig {
                    field: "conditioning.edges".into(),
                    message: "state-duration conditioning needs at least one edge".into(),
                });
            }
            for w in edges.windows(2) {
                if !(w[0] < w[1]) {
                    return Err(Error::InvalidConfig {
                        field: "conditioning.edges".into(),
                        message: "bucket edges must be strictly increasing".into(),
                    });
                }
            }
            if edges.iter().any(|&e| !(e > 0.0) || !e.is_finite()) {
                return Err(Error::InvalidConfig {
                    field: "conditioning.edges".into(),
                    message: "bucket edges must be positive and finite".into(),
                });
            }
        }
        Ok(())
    }

    /// The cell a path falls into at the pivot.
    pub fn cell_of(&self, path: &Path, grid: &TimeGrid) -> Cell {
        let p = grid.pivot_index();
        let state = path.state_at(p);
        match self {
            ConditioningScheme::AsIfMarkov => Cell { state, bucket: None },
            ConditioningScheme::StateDuration { edges } => {
                let dur = (p - path.last_jump_index_at(p)) as f64 * grid.step();
                let bucket = edges.partition_point(|&e| e <= dur);
                Cell { state, bucket: Some(bucket) }
            }
        }
    }

    /// All cells observed in an ensemble, with their path counts, in stable
    /// order.
    pub fn observed_cells(&self, paths: &[Path], grid: &TimeGrid) -> Vec<(Cell, usize)> {
        let mut counts: BTreeMap<Cell, usize> = BTreeMap::new();
        for path in paths {
            *counts.entry(self.cell_of(path, grid)).or_insert(0) += 1;
        }
        counts.into_iter().collect()
    }
}

/// Whether joint (two-time) surfaces are accumulated alongside the marginal
/// ones. Joint surfaces cost `O((M+1)²)` memory per touched pair of
/// transitions; marginal-only estimation is linear in the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Depth {
    Marginal,
    Joint,
}

/// Lazily allocated dense blocks over the grid square, keyed by an ordered
/// pair of ordered state pairs `((i,j), (k,l))`. Blocks not touched by any
/// path read as zero without being stored.
#[derive(Debug, Clone)]
pub struct QuadBlocks {
    n_states: usize,
    len: usize,
    blocks: Vec<Option<Box<[f64]>>>,
}

impl QuadBlocks {
    /// No blocks allocated.
    pub fn empty(n_states: usize, len: usize) -> Self {
        let n_pairs = n_states * n_states;
        Self { n_states, len, blocks: (0..n_pairs * n_pairs).map(|_| None).collect() }
    }

    fn slot(&self, pair1: usize, pair2: usize) -> usize {
        pair1 * self.n_states * self.n_states + pair2
    }

    /// The block for `((i,j),(k,l))` given as pair indices, if present.
    pub fn get(&self, pair1: usize, pair2: usize) -> Option<&[f64]> {
        self.blocks[self.slot(pair1, pair2)].as_deref()
    }

    /// The block, allocating it zeroed on first touch.
    pub fn get_or_insert(&mut self, pair1: usize, pair2: usize) -> &mut [f64] {
        let slot = self.slot(pair1, pair2);
        self.blocks[slot].get_or_insert_with(|| {
            vec![0.0; self.len * self.len].into_boxed_slice()
        })
    }

    /// Value at `((i,j),(k,l))`, cell `(m1, m2)`; zero when absent.
    pub fn value(&self, pair1: usize, pair2: usize, m1: usize, m2: usize) -> f64 {
        self.get(pair1, pair2).map_or(0.0, |b| b[m1 * self.len + m2])
    }

    /// Iterate present blocks as `(pair1, pair2, block)`.
    pub fn iter_present(&self) -> impl Iterator<Item = (usize, usize, &[f64])> + '_ {
        let n_pairs = self.n_states * self.n_states;
        self.blocks
            .iter()
            .enumerate()
            .filter_map(move |(slot, b)| {
                b.as_deref().map(|b| (slot / n_pairs, slot % n_pairs, b))
            })
    }

    /// Number of grid points per coordinate.
    pub fn len(&self) -> usize {
        self.len
    }

    /// True when no block is allocated.
    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(Option::is_none)
    }

    /// Number of states.
    pub fn n_states(&self) -> usize {
        self.n_states
    }
}

/// Raw conditional moment surfaces of one conditioning cell: exact counts,
/// not yet divided by the cell size.
#[derive(Debug, Clone)]
pub struct MomentSurfaces {
    n_states: usize,
    len: usize,
    pivot: usize,
    cell: Cell,
    n_cell: usize,
    /// Occupation counts `Σ I_i(t_m)`, flattened `[i·len + m]`.
    occ1: Vec<f64>,
    /// Jump-count increments `Σ ΔN_ij(t_m)` with diagonal completion,
    /// flattened `[(i·n + j)·len + m]`.
    dq1: Vec<f64>,
    /// Joint occupation counts `Σ I_i(t_{m1})·I_k(t_{m2})`, one dense plane
    /// per ordered state pair; `None` under marginal-only estimation.
    occ2: Option<Vec<Box<[f64]>>>,
    /// Joint jump-count increments `Σ ΔN_ij(t_{m1})·ΔN_kl(t_{m2})`.
    dq2: Option<QuadBlocks>,
}

impl MomentSurfaces {
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

    /// Pivot index.
    pub fn pivot(&self) -> usize {
        self.pivot
    }

    /// The conditioning cell.
    pub fn cell(&self) -> Cell {
        self.cell
    }

    /// Number of paths in the cell.
    pub fn n_cell(&self) -> usize {
        self.n_cell
    }

    /// Whether joint surfaces were accumulated.
    pub fn has_joint(&self) -> bool {
        self.occ2.is_some()
    }

    /// Occupation count `Σ I_i(t_m)`.
    pub fn occupation_count(&self, i: usize, m: usize) -> f64 {
        self.occ1[i * self.len + m]
    }

    /// Jump-count increment `Σ ΔN_ij((t_{m−1}, t_m])`.
    pub fn jump_count(&self, i: usize, j: usize, m: usize) -> f64 {
        self.dq1[(i * self.n_states + j) * self.len + m]
    }

    /// Joint occupation count `Σ I_i(t_{m1})·I_k(t_{m2})`.
    pub fn joint_occupation_count(&self, i: usize, k: usize, m1: usize, m2: usize) -> f64 {
        match &self.occ2 {
            Some(planes) => planes[i * self.n_states + k][m1 * self.len + m2],
            None => 0.0,
        }
    }

    /// The joint jump-count blocks, when accumulated.
    pub fn joint_jump_counts(&self) -> Option<&QuadBlocks> {
        self.dq2.as_ref()
    }

    /// Estimated occupation probability `P_i(t_m)`.
    pub fn p1(&self, i: usize, m: usize) -> f64 {
        self.occupation_count(i, m) / self.n_cell as f64
    }

    /// Estimated joint occupation probability `P_ik(t_{m1}, t_{m2})`.
    pub fn p2(&self, i: usize, k: usize, m1: usize, m2: usize) -> f64 {
        self.joint_occupation_count(i, k, m1, m2) / self.n_cell as f64
    }

    /// Normalized probability surfaces (copies the counts).
    pub fn probabilities(&self) -> ProbabilitySurfaces {
        let n = self.n_cell as f64;
        let p1 = self.occ1.iter().map(|&c| c / n).collect();
        let p2 = self.occ2.as_ref().map(|planes| {
            planes
                .iter()
                .map(|pl| pl.iter().map(|&c| c / n).collect::<Vec<f64>>().into_boxed_slice())
                .collect()
        });
        ProbabilitySurfaces { n_states: self.n_states, len: self.len, pivot: self.pivot, p1, p2 }
    }
}

/// Occupation probability surfaces — estimated (normalized counts) or solved
/// (from the forward equations). `p1` is flattened `[i·len + m]`; `p2`, when
/// present, holds one dense plane per ordered state pair.
#[derive(Debug, Clone)]
pub struct ProbabilitySurfaces {
    pub(crate) n_states: usize,
    pub(crate) len: usize,
    pub(crate) pivot: usize,
    pub(crate) p1: Vec<f64>,
    pub(crate) p2: Option<Vec<Box<[f64]>>>,
}

impl ProbabilitySurfaces {
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

    /// Pivot index.
    pub fn pivot(&self) -> usize {
        self.pivot
    }

    /// Occupation probability `P_i(t_m)`.
    pub fn p1(&self, i: usize, m: usize) -> f64 {
        self.p1[i * self.len + m]
    }

    /// Joint occupation probability `P_ik(t_{m1}, t_{m2})`; zero without
    /// joint surfaces.
    pub fn p2(&self, i: usize, k: usize, m1: usize, m2: usize) -> f64 {
        match &self.p2 {
            Some(planes) => planes[i * self.n_states + k][m1 * self.len + m2],
            None => 0.0,
        }
    }

    /// Whether joint surfaces are present.
    pub fn has_joint(&self) -> bool {
        self.p2.is_some()
    }

    /// The dense plane of the pair `(i, k)`, when present.
    pub fn p2_plane(&self, i: usize, k: usize) -> Option<&[f64]> {
        self.p2.as_ref().map(|planes| &*planes[i * self.n_states + k])
    }
}

/// One diagonal-completed jump event of a path: grid index, ordered state
/// pair (as pair index), and sign.
#[derive(Debug, Clone, Copy)]
struct JumpEvent {
    m: u32,
    pair: u32,
    sign: f64,
}

fn jump_events(path: &Path, n_states: usize, pivot: usize, out: &mut Vec<JumpEvent>) {
    out.clear();
    for j in path.jumps() {
        out.push(JumpEvent {
            m: j.index as u32,
            pair: (j.from * n_states + j.to) as u32,
            sign: 1.0,
        });
        let diag = if j.index > pivot {
            j.from * n_states + j.from // departure, after the pivot
        } else {
            j.to * n_states + j.to // arrival, at or before the pivot
        };
        out.push(JumpEvent { m: j.index as u32, pair: diag as u32, sign: -1.0 });
    }
}

/// Segment list of a path as half-open index ranges `[a, b)` with states.
fn segment_ranges(path: &Path, len: usize) -> Vec<(usize, usize, usize)> {
    let segs = path.segments();
    let mut out = Vec::with_capacity(segs.len());
    for (k, &(start, state)) in segs.iter().enumerate() {
        let end = segs.get(k + 1).map_or(len, |&(s, _)| s as usize);
        out.push((start as usize, end, state as usize));
    }
    out
}

/// Accumulate the conditional moment surfaces of one conditioning cell.
///
/// Fails with [`Error::EmptyCell`] when no path matches the cell.
pub fn estimate_moment_surfaces(
    paths: &[Path],
    scheme: &ConditioningScheme,
    cell: Cell,
    grid: &TimeGrid,
    state_label: &str,
    n_states: usize,
    depth: Depth,
) -> Result<MomentSurfaces> {
    scheme.validate()?;
    let len = grid.len();
    let pivot = grid.pivot_index();
    let n_pairs = n_states * n_states;

    // Difference-array accumulators: one extra slot so segment ends can be
    // marked without bounds juggling.
    let mut occ1_diff = vec![0.0f64; n_states * (len + 1)];
    let mut dq1 = vec![0.0f64; n_pairs * len];
    let mut occ2_diff: Option<Vec<Box<[f64]>>> = match depth {
        Depth::Joint => {
            Some((0..n_pairs).map(|_| vec![0.0; (len + 1) * (len + 1)].into_boxed_slice()).collect())
        }
        Depth::Marginal => None,
    };
    let mut dq2 = match depth {
        Depth::Joint => Some(QuadBlocks::empty(n_states, len)),
        Depth::Marginal => None,
    };

    let mut n_cell = 0usize;
    let mut events: Vec<JumpEvent> = Vec::new();
    for path in paths {
        if scheme.cell_of(path, grid) != cell {
            continue;
        }
        n_cell += 1;
        let ranges = segment_ranges(path, len);
        for &(a, b, state) in &ranges {
            occ1_diff[state * (len + 1) + a] += 1.0;
            occ1_diff[state * (len + 1) + b] -= 1.0;
        }
        jump_events(path, n_states, pivot, &mut events);
        for e in &events {
            dq1[e.pair as usize * len + e.m as usize] += e.sign;
        }
        if let Some(planes) = occ2_diff.as_mut() {
            let w = len + 1;
            for &(a1, b1, s1) in &ranges {
                for &(a2, b2, s2) in &ranges {
                    let plane = &mut planes[s1 * n_states + s2];
                    plane[a1 * w + a2] += 1.0;
                    plane[a1 * w + b2] -= 1.0;
                    plane[b1 * w + a2] -= 1.0;
                    plane[b1 * w + b2] += 1.0;
                }
            }
        }
        if let Some(blocks) = dq2.as_mut() {
            for e1 in &events {
                for e2 in &events {
                    let block = blocks.get_or_insert(e1.pair as usize, e2.pair as usize);
                    block[e1.m as usize * len + e2.m as usize] += e1.sign * e2.sign;
                }
            }
        }
    }

    if n_cell == 0 {
        return Err(Error::EmptyCell { label: cell.label(state_label) });
    }

    // Resolve the difference arrays into plain counts.
    let mut occ1 = vec![0.0f64; n_states * len];
    for i in 0..n_states {
        let mut acc = 0.0;
        for m in 0..len {
            acc += occ1_diff[i * (len + 1) + m];
            occ1[i * len + m] = acc;
        }
    }
    let occ2 = occ2_diff.map(|planes| {
        planes
            .into_iter()
            .map(|plane| {
                let w = len + 1;
                let mut out = vec![0.0f64; len * len].into_boxed_slice();
                // Row-wise prefix, then column-wise, dropping the guard band.
                for m1 in 0..len {
                    let mut acc = 0.0;
                    for m2 in 0..len {
                        acc += plane[m1 * w + m2];
                        out[m1 * len + m2] = acc;
                    }
                }
                for m2 in 0..len {
                    let mut acc = 0.0;
                    for m1 in 0..len {
                        acc += out[m1 * len + m2];
                        out[m1 * len + m2] = acc;
                    }
                }
                out
            })
            .collect()
    });

    Ok(MomentSurfaces {
        n_states,
        len,
        pivot,
        cell,
        n_cell,
        occ1,
        dq1,
        occ2,
        dq2,
    })
}

/// Pivot-relative transition rates: the integrators of the forward equations.
///
/// `dl1` holds the one-dimensional rate increments `ΔΛ_ij(t_m)` (forward for
/// `m > p`, backward for `m ≤ p`, diagonals completed); `dl2` the
/// two-dimensional increments `ΔΛ_ijkl(t_{m1}, t_{m2})` per quadrant.
#[derive(Debug, Clone)]
pub struct RateSystem {
    n_states: usize,
    len: usize,
    pivot: usize,
    /// Flattened `[(i·n + j)·len + m]`.
    dl1: Vec<f64>,
    dl2: QuadBlocks,
    /// Compensation terms: the rounding remainders of the count ratios, so
    /// the solver can consume each rate atom at double-double precision.
    /// Empty/absent blocks read as zero (exact rates, e.g. analytic parts).
    dl1_lo: Vec<f64>,
    dl2_lo: QuadBlocks,
}

impl RateSystem {
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

    /// Pivot index.
    pub fn pivot(&self) -> usize {
        self.pivot
    }

    /// Rate increment `ΔΛ_ij(t_m)`.
    pub fn dl1(&self, i: usize, j: usize, m: usize) -> f64 {
        self.dl1[(i * self.n_states + j) * self.len + m]
    }

    /// The two-dimensional rate blocks.
    pub fn dl2(&self) -> &QuadBlocks {
        &self.dl2
    }

    /// Rate increment `ΔΛ_ijkl(t_{m1}, t_{m2})` (zero when the block is absent).
    pub fn dl2_value(&self, i: usize, j: usize, k: usize, l: usize, m1: usize, m2: usize) -> f64 {
        let n = self.n_states;
        self.dl2.value(i * n + j, k * n + l, m1, m2)
    }

    /// One-dimensional rate atom at double-double precision.
    pub(crate) fn dl1_dd(&self, i: usize, j: usize, m: usize) -> Dd {
        let idx = (i * self.n_states + j) * self.len + m;
        Dd { hi: self.dl1[idx], lo: self.dl1_lo.get(idx).copied().unwrap_or(0.0) }
    }

    /// Two-dimensional rate block with its compensation block, by pair keys.
    pub(crate) fn dl2_block_dd(
        &self,
        pair1: usize,
        pair2: usize,
    ) -> Option<(&[f64], Option<&[f64]>)> {
        self.dl2.get(pair1, pair2).map(|hi| (hi, self.dl2_lo.get(pair1, pair2)))
    }

    /// Assemble a rate system from explicit parts (analytic constructions).
    /// The given atoms are taken as exact: no compensation terms.
    pub fn from_parts(
        n_states: usize,
        len: usize,
        pivot: usize,
        dl1: Vec<f64>,
        dl2: QuadBlocks,
    ) -> Result<Self> {
        if dl1.len() != n_states * n_states * len
            || dl2.len() != len
            || dl2.n_states() != n_states
        {
            return Err(Error::DimensionMismatch(
                "rate system parts disagree on grid or state dimensions".into(),
            ));
        }
        let dl2_lo = QuadBlocks::empty(n_states, len);
        Ok(Self { n_states, len, pivot, dl1, dl2, dl1_lo: Vec::new(), dl2_lo })
    }
}

/// One-dimensional rates from estimated surfaces: `ΔΛ_ij(t_m)` as the ratio
/// of the jump-count increment to the occupation count at the one-sided
/// evaluation index (source state and left neighbour after the pivot,
/// destination state and the point itself at or before it).
pub fn transition_rates_1d(surfaces: &MomentSurfaces) -> Result<Vec<f64>> {
    rates_1d_parts(surfaces).map(|(hi, _)| hi)
}

/// One-dimensional rate atoms with their compensation terms.
fn rates_1d_parts(surfaces: &MomentSurfaces) -> Result<(Vec<f64>, Vec<f64>)> {
    let n = surfaces.n_states();
    let len = surfaces.len();
    let p = surfaces.pivot();
    let mut dl1 = vec![0.0f64; n * n * len];
    let mut dl1_lo = vec![0.0f64; n * n * len];
    for i in 0..n {
        for j in 0..n {
            for m in 1..len {
                let dq = surfaces.jump_count(i, j, m);
                let denom = if m > p {
                    surfaces.occupation_count(i, m - 1)
                } else {
                    surfaces.occupation_count(j, m)
                };
                if denom > 0.0 {
                    let r = Dd::ratio(dq, denom);
                    dl1[(i * n + j) * len + m] = r.hi;
                    dl1_lo[(i * n + j) * len + m] = r.lo;
                } else if dq != 0.0 {
                    return Err(Error::InconsistentEnsemble(format!(
                        "jump mass for {i}->{j} at index {m} without supporting occupation"
                    )));
                }
            }
        }
    }
    Ok((dl1, dl1_lo))
}

/// Two-dimensional rates from estimated surfaces: per quadrant, the ratio of
/// the joint jump-count increment to the joint occupation count at the
/// one-sided evaluation indices, with the first/second pair contributing its
/// source state on the forward side of the respective coordinate and its
/// destination state on the backward side.
pub fn transition_rates_2d(surfaces: &MomentSurfaces) -> Result<QuadBlocks> {
    rates_2d_parts(surfaces).map(|(hi, _)| hi)
}

/// Two-dimensional rate blocks with their compensation blocks.
fn rates_2d_parts(surfaces: &MomentSurfaces) -> Result<(QuadBlocks, QuadBlocks)> {
    let n = surfaces.n_states();
    let len = surfaces.len();
    let p = surfaces.pivot();
    let dq2 = surfaces
        .joint_jump_counts()
        .ok_or_else(|| Error::InconsistentEnsemble("joint surfaces were not accumulated".into()))?;
    let mut dl2 = QuadBlocks::empty(n, len);
    let mut dl2_lo = QuadBlocks::empty(n, len);
    for (pair1, pair2, block) in dq2.iter_present() {
        let (i, j) = (pair1 / n, pair1 % n);
        let (k, l) = (pair2 / n, pair2 % n);
        let out = dl2.get_or_insert(pair1, pair2);
        let mut lo = vec![0.0f64; len * len];
        for m1 in 1..len {
            let (row_state, row_idx) = if m1 > p { (i, m1 - 1) } else { (j, m1) };
            for m2 in 1..len {
                let dq = block[m1 * len + m2];
                if dq == 0.0 {
                    continue;
                }
                let (col_state, col_idx) = if m2 > p { (k, m2 - 1) } else { (l, m2) };
                let denom = surfaces.joint_occupation_count(row_state, col_state, row_idx, col_idx);
                if denom > 0.0 {
                    let r = Dd::ratio(dq, denom);
                    out[m1 * len + m2] = r.hi;
                    lo[m1 * len + m2] = r.lo;
                } else {
                    return Err(Error::InconsistentEnsemble(format!(
                        "joint jump mass for ({i}->{j}, {k}->{l}) at ({m1}, {m2}) without \
                         supporting joint occupation"
                    )));
                }
            }
        }
        dl2_lo.get_or_insert(pair1, pair2).copy_from_slice(&lo);
    }
    Ok((dl2, dl2_lo))
}

/// Full rate system from estimated surfaces (2D rates only when joint
/// surfaces were accumulated).
pub fn transition_rates(surfaces: &MomentSurfaces) -> Result<RateSystem> {
    let n = surfaces.n_states();
    let len = surfaces.len();
    let (dl1, dl1_lo) = rates_1d_parts(surfaces)?;
    let (dl2, dl2_lo) = if surfaces.has_joint() {
        rates_2d_parts(surfaces)?
    } else {
        (QuadBlocks::empty(n, len), QuadBlocks::empty(n, len))
    };
    Ok(RateSystem { n_states: n, len, pivot: surfaces.pivot(), dl1, dl2, dl1_lo, dl2_lo })
}
