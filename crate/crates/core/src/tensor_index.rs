//! Full and sparse tensor-product level-pair sets and the flattening of
//! tensor-product detail bases into contiguous degree-of-freedom maps.

use ndarray::{Array1, Array2, ArrayView1};

use crate::hierarchy::SpaceKind;

/// Selection rule for the active level pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TensorMode {
    /// All pairs 0 ≤ ℓ, ℓ′ ≤ L.
    Full,
    /// Pairs with ℓ + ℓ′ ≤ L.
    Sparse,
}

/// The active (ℓ, ℓ′) pairs for a given resolution, in lexicographic order
/// so that flattened coefficient files are reproducible across runs.
#[derive(Debug, Clone)]
pub struct LevelPairSet {
    max_level: u32,
    mode: TensorMode,
    pairs: Vec<(u32, u32)>,
}

pub fn build_level_pairs(max_level: u32, mode: TensorMode) -> LevelPairSet {
    let mut pairs = Vec::new();
    for l in 0..=max_level {
        let limit = match mode {
            TensorMode::Full => max_level,
            TensorMode::Sparse => max_level - l,
        };
        for lp in 0..=limit {
            pairs.push((l, lp));
        }
    }
    LevelPairSet { max_level, mode, pairs }
}

impl LevelPairSet {
    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn mode(&self) -> TensorMode {
        self.mode
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, pair: (u32, u32)) -> bool {
        match self.mode {
            TensorMode::Full => pair.0 <= self.max_level && pair.1 <= self.max_level,
            TensorMode::Sparse => pair.0 + pair.1 <= self.max_level,
        }
    }
}

/// One active block W_{ℓ} ⊗ W_{ℓ′} inside the flattened enumeration.
/// Entries are laid out row-major: local index = i·dims.1 + j.
#[derive(Debug, Clone, Copy)]
pub struct TensorBlock {
    pub levels: (u32, u32),
    pub dims: (usize, usize),
    pub offset: usize,
}

impl TensorBlock {
    pub fn len(&self) -> usize {
        self.dims.0 * self.dims.1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Flattened enumeration of the active tensor-product detail basis.
#[derive(Debug, Clone)]
pub struct TensorDofMap {
    kinds: (SpaceKind, SpaceKind),
    max_level: u32,
    mode: TensorMode,
    blocks: Vec<TensorBlock>,
    total: usize,
}

pub fn build_dof_map(kinds: (SpaceKind, SpaceKind), pairs: &LevelPairSet) -> TensorDofMap {
    let mut blocks = Vec::with_capacity(pairs.len());
    let mut offset = 0;
    for &(l, lp) in pairs.pairs() {
        let dims = (kinds.0.detail_dimension(l), kinds.1.detail_dimension(lp));
        blocks.push(TensorBlock { levels: (l, lp), dims, offset });
        offset += dims.0 * dims.1;
    }
    TensorDofMap {
        kinds,
        max_level: pairs.max_level(),
        mode: pairs.mode(),
        blocks,
        total: offset,
    }
}

impl TensorDofMap {
    pub fn kinds(&self) -> (SpaceKind, SpaceKind) {
        self.kinds
    }

    pub fn max_level(&self) -> u32 {
        self.max_level
    }

    pub fn mode(&self) -> TensorMode {
        self.mode
    }

    pub fn blocks(&self) -> &[TensorBlock] {
        &self.blocks
    }

    pub fn total(&self) -> usize {
        self.total
    }

    /// Dimensions of the full 1D detail enumerations at max level.
    pub fn full_dims(&self) -> (usize, usize) {
        (
            self.kinds.0.dimension(self.max_level),
            self.kinds.1.dimension(self.max_level),
        )
    }

    /// Scatter a flat coefficient vector into the full detail grid
    /// (rows: first factor, cols: second), zero outside the active blocks.
    pub fn scatter(&self, x: ArrayView1<f64>) -> Array2<f64> {
        debug_assert_eq!(x.len(), self.total);
        let mut full = Array2::zeros(self.full_dims());
        for block in &self.blocks {
            let row0 = self.kinds.0.detail_offset(block.levels.0);
            let col0 = self.kinds.1.detail_offset(block.levels.1);
            for i in 0..block.dims.0 {
                for j in 0..block.dims.1 {
                    full[[row0 + i, col0 + j]] = x[block.offset + i * block.dims.1 + j];
                }
            }
        }
        full
    }

    /// Restrict a full detail grid back to the active blocks.
    pub fn gather(&self, full: &Array2<f64>) -> Array1<f64> {
        debug_assert_eq!(full.dim(), self.full_dims());
        let mut out = Array1::zeros(self.total);
        for block in &self.blocks {
            let row0 = self.kinds.0.detail_offset(block.levels.0);
            let col0 = self.kinds.1.detail_offset(block.levels.1);
            for i in 0..block.dims.0 {
                for j in 0..block.dims.1 {
                    out[block.offset + i * block.dims.1 + j] = full[[row0 + i, col0 + j]];
                }
            }
        }
        out
    }
}

/// One row of the degree-of-freedom growth table.
#[derive(Debug, Clone, Copy)]
pub struct DofBoundRow {
    pub level: u32,
    pub dim_sparse: usize,
    pub dim_full: usize,
    /// dim_sparse / (L · 2^L), the quantity bounded by the sparse estimate.
    pub ratio: f64,
}

/// Sparse/full dimension table over L = 1..max_level for inspecting the
/// O(L 2^L) bound against the O(4^L) full growth.
pub fn verify_dof_bound(kinds: (SpaceKind, SpaceKind), max_level: u32) -> Vec<DofBoundRow> {
    (1..=max_level)
        .map(|level| {
            let sparse = build_dof_map(kinds, &build_level_pairs(level, TensorMode::Sparse));
            let full = build_dof_map(kinds, &build_level_pairs(level, TensorMode::Full));
            DofBoundRow {
                level,
                dim_sparse: sparse.total(),
                dim_full: full.total(),
                ratio: sparse.total() as f64 / (level as f64 * (1u64 << level) as f64),
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hierarchy::SpaceKind::*;

    #[test]
    fn sparse_pairs_at_level_two() {
        let set = build_level_pairs(2, TensorMode::Sparse);
        assert_eq!(
            set.pairs(),
            &[(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (2, 0)]
        );
    }

    #[test]
    fn full_pairs_at_level_one() {
        assert_eq!(build_level_pairs(1, TensorMode::Full).len(), 4);
    }

    #[test]
    fn sparse_count_is_triangular() {
        for l in 0..=10u32 {
            let expect = ((l + 1) * (l + 2) / 2) as usize;
            assert_eq!(build_level_pairs(l, TensorMode::Sparse).len(), expect);
        }
    }

    #[test]
    fn sparse_set_is_contained_in_full_set() {
        for l in 0..=6u32 {
            let sparse = build_level_pairs(l, TensorMode::Sparse);
            let full = build_level_pairs(l, TensorMode::Full);
            assert!(sparse.pairs().iter().all(|&p| full.contains(p)));
            let ds = build_dof_map((PiecewiseConstant, PeriodicHat), &sparse).total();
            let df = build_dof_map((PiecewiseConstant, PeriodicHat), &full).total();
            assert!(ds <= df);
            if l == 0 {
                assert_eq!(ds, df);
            } else {
                assert!(ds < df);
            }
        }
    }

    #[test]
    fn dof_totals_match_hand_enumeration() {
        let sparse = build_level_pairs(3, TensorMode::Sparse);
        let map = build_dof_map((PiecewiseConstant, PeriodicHat), &sparse);
        assert_eq!(map.total(), 12);

        let full = build_level_pairs(3, TensorMode::Full);
        let map = build_dof_map((PiecewiseConstant, PeriodicHat), &full);
        assert_eq!(map.total(), 56);

        // the hat families are empty at level 0, so the first nonempty
        // hat-hat block (1,1) enters the sparse set at L = 2
        let sparse1 = build_level_pairs(1, TensorMode::Sparse);
        let map = build_dof_map((DirichletHat, DirichletHat), &sparse1);
        assert_eq!(map.total(), 0);
        let sparse2 = build_level_pairs(2, TensorMode::Sparse);
        let map = build_dof_map((DirichletHat, DirichletHat), &sparse2);
        assert_eq!(map.total(), 1);
    }

    #[test]
    fn offsets_increase_and_cover_the_range() {
        let map = build_dof_map(
            (PiecewiseConstant, PeriodicHat),
            &build_level_pairs(4, TensorMode::Sparse),
        );
        let nonempty: Vec<_> = map.blocks().iter().filter(|b| !b.is_empty()).collect();
        for pair in nonempty.windows(2) {
            assert!(pair[0].offset < pair[1].offset);
            assert_eq!(pair[0].offset + pair[0].len(), pair[1].offset);
        }
        let last = nonempty.last().unwrap();
        assert_eq!(last.offset + last.len(), map.total());
    }

    #[test]
    fn scatter_gather_roundtrip() {
        let map = build_dof_map(
            (PiecewiseConstant, PeriodicHat),
            &build_level_pairs(3, TensorMode::Sparse),
        );
        let x = ndarray::Array1::from_iter((0..map.total()).map(|i| i as f64 + 1.0));
        let full = map.scatter(x.view());
        let back = map.gather(&full);
        assert_eq!(x, back);
        // everything outside the active blocks stays zero
        let filled: f64 = full.iter().map(|v| v.abs()).sum();
        assert_eq!(filled, x.iter().sum::<f64>());
    }

    #[test]
    fn dof_ratios_stay_bounded() {
        let rows = verify_dof_bound((PiecewiseConstant, PeriodicHat), 8);
        let at2 = rows.iter().find(|r| r.level == 2).unwrap().ratio;
        for row in rows.iter().filter(|r| r.level >= 2) {
            assert!(
                row.ratio <= at2 * 1.5,
                "ratio {} at L={} exceeds bound",
                row.ratio,
                row.level
            );
        }
        // full dims grow like 4^L
        for pair in rows.windows(2).skip(3) {
            let growth = pair[1].dim_full as f64 / pair[0].dim_full as f64;
            assert!((growth - 4.0).abs() < 0.25, "full growth {growth}");
        }
        let last = rows.last().unwrap();
        assert!((last.dim_sparse as f64) / (last.dim_full as f64) < 0.05);
    }
}
