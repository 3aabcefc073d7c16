//! Signed point measures on the time grid.
//!
//! Payment streams, counting processes and transition rates all enter the
//! integral equations as Lebesgue–Stieltjes integrators. On a uniform grid a
//! finite signed measure is just its collection of atoms at grid points:
//! absolutely continuous parts are lumped into the right endpoint of each step
//! (`∫_(t_{m-1}, t_m] b du ≈ b(t_m)·h`), point masses sit where they are.
//!
//! [`Measure1D`] stores one atom per grid point densely. [`Measure2D`] stores
//! only non-zero cells, sorted; product measures of sparse payment streams
//! stay sparse, and every consumer iterates atoms rather than scanning the
//! full `(M+1)²` rectangle.

use std::collections::BTreeMap;

use crate::grid::TimeGrid;

/// A signed measure on grid points `t_0.. t_M`, stored as dense atoms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Measure1D {
    atoms: Vec<f64>,
}

impl Measure1D {
    /// The zero measure on a grid with `len` points.
    pub fn zeros(len: usize) -> Self {
        Self { atoms: vec![0.0; len] }
    }

    /// Wrap an explicit atom vector.
    pub fn from_atoms(atoms: Vec<f64>) -> Self {
        Self { atoms }
    }

    /// Lump a rate (density) `f(t)` into right-endpoint atoms: the atom at
    /// `t_m` is `f(t_m)·h` for `m ≥ 1`, nothing at `t_0`.
    pub fn from_rate(grid: &TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let mut atoms = vec![0.0; grid.len()];
        for (m, a) in atoms.iter_mut().enumerate().skip(1) {
            *a = f(grid.time(m)) * grid.step();
        }
        Self { atoms }
    }

    /// Number of grid points covered.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    /// True when the support vector is empty.
    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Atom at grid index `m`.
    pub fn atom(&self, m: usize) -> f64 {
        self.atoms[m]
    }

    /// Add `v` to the atom at grid index `m`.
    pub fn add_atom(&mut self, m: usize, v: f64) {
        self.atoms[m] += v;
    }

    /// All atoms as a slice.
    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    /// Iterate `(index, atom)` over non-zero atoms.
    pub fn iter_nonzero(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.atoms.iter().copied().enumerate().filter(|&(_, v)| v != 0.0)
    }

    /// True when every atom vanishes.
    pub fn is_zero(&self) -> bool {
        self.atoms.iter().all(|&v| v == 0.0)
    }

    /// Distribution function `F(t_m) = Σ_{r ≤ m} atom(r)`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.atoms
            .iter()
            .map(|&v| {
                acc += v;
                acc
            })
            .collect()
    }

    /// Recover a measure from its distribution function (inverse of
    /// [`cumulative`](Self::cumulative); the atom at `t_0` is `F(t_0)`).
    pub fn from_cumulative(cum: &[f64]) -> Self {
        let mut atoms = Vec::with_capacity(cum.len());
        let mut prev = 0.0;
        for &c in cum {
            atoms.push(c - prev);
            prev = c;
        }
        Self { atoms }
    }

    /// Total mass `F(T)`.
    pub fn total(&self) -> f64 {
        self.atoms.iter().sum()
    }

    /// Pointwise scaling by a grid function, returning a new measure.
    pub fn scaled_by(&self, w: impl Fn(usize) -> f64) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .enumerate()
                .map(|(m, &v)| w(m) * v)
                .collect(),
        }
    }
}

/// Integrate a grid function against a 1D measure over an index window:
/// `Σ_{m ∈ window} f(m) · μ({t_m})`.
pub fn integrate_1d(
    measure: &Measure1D,
    window: impl IntoIterator<Item = usize>,
    f: impl Fn(usize) -> f64,
) -> f64 {
    let mut acc = 0.0;
    for m in window {
        let a = measure.atom(m);
        if a != 0.0 {
            acc += f(m) * a;
        }
    }
    acc
}

/// A signed measure on the grid square, stored sparsely as sorted cells.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Measure2D {
    cells: BTreeMap<(u32, u32), f64>,
}

impl Measure2D {
    /// The zero measure.
    pub fn new() -> Self {
        Self::default()
    }

    /// Add `v` to the atom at cell `(m1, m2)`.
    pub fn add_atom(&mut self, m1: usize, m2: usize, v: f64) {
        if v != 0.0 {
            *self.cells.entry((m1 as u32, m2 as u32)).or_insert(0.0) += v;
        }
    }

    /// Atom at cell `(m1, m2)`.
    pub fn atom(&self, m1: usize, m2: usize) -> f64 {
        self.cells.get(&(m1 as u32, m2 as u32)).copied().unwrap_or(0.0)
    }

    /// Product measure `a ⊗ b`, keeping only non-zero cells.
    pub fn product(a: &Measure1D, b: &Measure1D) -> Self {
        let mut out = Self::new();
        for (m1, v1) in a.iter_nonzero() {
            for (m2, v2) in b.iter_nonzero() {
                out.add_atom(m1, m2, v1 * v2);
            }
        }
        out
    }

    /// Iterate `(m1, m2, atom)` over non-zero cells in lexicographic order.
    pub fn iter_nonzero(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.cells
            .iter()
            .filter(|&(_, &v)| v != 0.0)
            .map(|(&(m1, m2), &v)| (m1 as usize, m2 as usize, v))
    }

    /// Number of stored cells.
    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    /// Total mass.
    pub fn total(&self) -> f64 {
        self.cells.values().sum()
    }

    /// True when every stored cell vanishes.
    pub fn is_zero(&self) -> bool {
        self.cells.values().all(|&v| v == 0.0)
    }
}

/// Integrate a grid function against a 2D measure over an index rectangle:
/// `Σ_{(m1,m2) ∈ r1 × r2} f(m1, m2) · μ({(t_{m1}, t_{m2})})`.
pub fn integrate_2d(
    measure: &Measure2D,
    r1: std::ops::RangeInclusive<usize>,
    r2: std::ops::RangeInclusive<usize>,
    f: impl Fn(usize, usize) -> f64,
) -> f64 {
    let mut acc = 0.0;
    for (m1, m2, v) in measure.iter_nonzero() {
        if r1.contains(&m1) && r2.contains(&m2) {
            acc += f(m1, m2) * v;
        }
    }
    acc
}
