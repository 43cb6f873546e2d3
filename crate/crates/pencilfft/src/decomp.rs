//! Pencil topologies: balanced 1D index distribution with an exact inverse,
//! rank grids, and rectangular block intersection between two topologies.

use crate::error::{Error, Result};

/// Balanced distribution of `n` consecutive indices over `p` ranks.
///
/// Baseline B = n div p per rank; the R = n mod p leftover indices are spread
/// over the rank range in R groups of S = p div r ranks so that consecutive
/// ranks never accumulate all the surplus. Counts differ by at most one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Dist1d {
    n: usize,
    p: usize,
}

impl Dist1d {
    pub fn new(n: usize, p: usize) -> Result<Self> {
        if p == 0 || p > n {
            return Err(Error::OverDecomposed { axis: 0, extent: n, ranks: p });
        }
        Ok(Self { n, p })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn ranks(&self) -> usize {
        self.p
    }

    /// First global index owned by rank `r`; `start(p) == n`.
    pub fn start(&self, r: usize) -> usize {
        debug_assert!(r <= self.p);
        let b = self.n / self.p;
        let rem = self.n % self.p;
        if rem == 0 {
            return r * b;
        }
        let s = self.p / rem;
        r * b + (r / s).min(rem)
    }

    pub fn count(&self, r: usize) -> usize {
        self.start(r + 1) - self.start(r)
    }

    /// Owning rank of global index `i`; exact inverse of `start`/`count`.
    pub fn rank_of(&self, i: usize) -> Result<usize> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange { index: i, extent: self.n });
        }
        let b = self.n / self.p;
        let rem = self.n % self.p;
        if rem == 0 {
            return Ok(i / b);
        }
        let s = self.p / rem;
        // group of S ranks holding S*B+1 indices, leftover ranks hold B each
        let g = (i / (s * b + 1)).min(rem);
        let i_local = i - g * (s * b + 1);
        let mut r_local = i_local / b;
        if g < rem {
            r_local = r_local.min(s - 1);
        }
        Ok(g * s + r_local)
    }
}

/// Data distribution for one pencil orientation: the `axis` direction is
/// fully rank-local, the other two are split over a 2D rank grid.
///
/// Local memory is laid out with the pencil axis fastest, then the lower of
/// the remaining axes, then the higher. Elements hold `nf` consecutive f64
/// slots (1 real, 2 interleaved complex).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Topology {
    axis: usize,
    global: [usize; 3],
    grid: [usize; 3],
    dists: [Dist1d; 3],
    nf: usize,
}

/// Factor p = a*b with |a - b| minimal, a <= b.
fn most_square_factors(p: usize) -> (usize, usize) {
    let mut a = (p as f64).sqrt() as usize;
    while a > 1 && p % a != 0 {
        a -= 1;
    }
    (a.max(1), p / a.max(1))
}

impl Topology {
    /// Build a pencil topology over `global` element extents with `p` ranks.
    ///
    /// The rank grid over the two non-pencil axes is the most-square
    /// factorization of `p`, with the larger factor on the axis cyclically
    /// following the pencil axis. Successive pencil orientations then split
    /// different axes, so every switch is a genuine exchange.
    pub fn new(axis: usize, global: [usize; 3], p: usize, nf: usize) -> Result<Self> {
        assert!(axis < 3);
        assert!(nf == 1 || nf == 2);
        let (lo, hi) = other_axes(axis);
        let (p_small, p_large) = most_square_factors(p);
        let next = (axis + 1) % 3;
        let mut grid = [1usize; 3];
        grid[next] = p_large;
        grid[if next == lo { hi } else { lo }] = p_small;
        for d in [lo, hi] {
            if grid[d] > global[d] {
                return Err(Error::OverDecomposed { axis: d, extent: global[d], ranks: grid[d] });
            }
        }
        let dists = [
            Dist1d::new(global[0], grid[0])?,
            Dist1d::new(global[1], grid[1])?,
            Dist1d::new(global[2], grid[2])?,
        ];
        Ok(Self { axis, global, grid, dists, nf })
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn global(&self) -> [usize; 3] {
        self.global
    }

    pub fn grid(&self) -> [usize; 3] {
        self.grid
    }

    pub fn nf(&self) -> usize {
        self.nf
    }

    pub fn nranks(&self) -> usize {
        self.grid.iter().product()
    }

    /// Grid coordinates of `rank`; the lower non-pencil axis varies fastest.
    pub fn rank_coords(&self, rank: usize) -> [usize; 3] {
        let (lo, hi) = other_axes(self.axis);
        let mut c = [0usize; 3];
        c[lo] = rank % self.grid[lo];
        c[hi] = rank / self.grid[lo];
        c
    }

    pub fn rank_at(&self, coords: [usize; 3]) -> usize {
        let (lo, hi) = other_axes(self.axis);
        coords[lo] + self.grid[lo] * coords[hi]
    }

    pub fn local_origin(&self, rank: usize) -> [usize; 3] {
        let c = self.rank_coords(rank);
        [
            self.dists[0].start(c[0]),
            self.dists[1].start(c[1]),
            self.dists[2].start(c[2]),
        ]
    }

    pub fn local_shape(&self, rank: usize) -> [usize; 3] {
        let c = self.rank_coords(rank);
        [
            self.dists[0].count(c[0]),
            self.dists[1].count(c[1]),
            self.dists[2].count(c[2]),
        ]
    }

    /// Rank owning the element at `idx`.
    pub fn owner_of(&self, idx: [usize; 3]) -> Result<usize> {
        let (lo, hi) = other_axes(self.axis);
        if idx[self.axis] >= self.global[self.axis] {
            return Err(Error::IndexOutOfRange { index: idx[self.axis], extent: self.global[self.axis] });
        }
        let mut c = [0usize; 3];
        c[lo] = self.dists[lo].rank_of(idx[lo])?;
        c[hi] = self.dists[hi].rank_of(idx[hi])?;
        Ok(self.rank_at(c))
    }

    /// Axes ordered fastest to slowest in the rank-local buffer.
    pub fn axis_order(&self) -> [usize; 3] {
        let (lo, hi) = other_axes(self.axis);
        [self.axis, lo, hi]
    }

    /// Per-axis strides of the rank-local buffer, in f64 slots.
    pub fn local_strides(&self, rank: usize) -> [usize; 3] {
        let shape = self.local_shape(rank);
        let order = self.axis_order();
        let mut strides = [0usize; 3];
        strides[order[0]] = self.nf;
        strides[order[1]] = self.nf * shape[order[0]];
        strides[order[2]] = self.nf * shape[order[0]] * shape[order[1]];
        strides
    }

    /// f64 slots needed for the rank-local buffer.
    pub fn local_len(&self, rank: usize) -> usize {
        self.local_shape(rank).iter().product::<usize>() * self.nf
    }

    pub fn max_local_len(&self) -> usize {
        (0..self.nranks()).map(|r| self.local_len(r)).max().unwrap()
    }
}

fn other_axes(axis: usize) -> (usize, usize) {
    match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    }
}

/// One rectangular transfer between a rank of the source topology and a rank
/// of the destination topology. Origins are global element indices in each
/// topology's own frame; `shape` counts elements.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BlockTransfer {
    pub src_rank: usize,
    pub dst_rank: usize,
    pub src_origin: [usize; 3],
    pub dst_origin: [usize; 3],
    pub shape: [usize; 3],
}

impl BlockTransfer {
    pub fn volume(&self) -> usize {
        self.shape.iter().product()
    }
}

/// All rectangular intersections between the rank-local regions of `src` and
/// `dst` over their common index box.
///
/// The common box along axis d covers indices c in
/// [0, min(src_extent - src_base, dst_extent - dst_base)), mapping to source
/// index c + src_base[d] and destination index c + dst_base[d]. Growth and
/// shrink switches of the unbounded stages pass nonzero bases; equal-extent
/// switches pass zeros. Every common index lands in exactly one transfer.
/// Deterministic order: (dst_rank, src_rank, dst_origin).
pub fn intersect_blocks(
    src: &Topology,
    dst: &Topology,
    src_base: [usize; 3],
    dst_base: [usize; 3],
) -> Result<Vec<BlockTransfer>> {
    if src.nf() != dst.nf() {
        return Err(Error::TopologyMismatch(format!(
            "element widths differ: {} vs {}",
            src.nf(),
            dst.nf()
        )));
    }
    let mut common = [0usize; 3];
    for d in 0..3 {
        if src_base[d] > src.global[d] || dst_base[d] > dst.global[d] {
            return Err(Error::TopologyMismatch(format!(
                "axis {d}: base exceeds extent"
            )));
        }
        common[d] = (src.global[d] - src_base[d]).min(dst.global[d] - dst_base[d]);
        if common[d] == 0 {
            return Err(Error::TopologyMismatch(format!(
                "axis {d}: empty common extent"
            )));
        }
    }

    let mut blocks = Vec::new();
    for dst_rank in 0..dst.nranks() {
        let d_org = dst.local_origin(dst_rank);
        let d_shape = dst.local_shape(dst_rank);
        // clip the destination region to the common box, in common coordinates
        let mut c_lo = [0usize; 3];
        let mut c_hi = [0usize; 3];
        let mut empty = false;
        for d in 0..3 {
            c_lo[d] = d_org[d].saturating_sub(dst_base[d]);
            c_hi[d] = (d_org[d] + d_shape[d]).saturating_sub(dst_base[d]).min(common[d]);
            if c_lo[d] >= c_hi[d] {
                empty = true;
            }
        }
        if empty {
            continue;
        }
        for src_rank in 0..src.nranks() {
            let s_org = src.local_origin(src_rank);
            let s_shape = src.local_shape(src_rank);
            let mut lo = [0usize; 3];
            let mut hi = [0usize; 3];
            let mut overlap = true;
            for d in 0..3 {
                lo[d] = c_lo[d].max(s_org[d].saturating_sub(src_base[d]));
                hi[d] = c_hi[d].min((s_org[d] + s_shape[d]).saturating_sub(src_base[d]));
                if lo[d] >= hi[d] {
                    overlap = false;
                }
            }
            if !overlap {
                continue;
            }
            blocks.push(BlockTransfer {
                src_rank,
                dst_rank,
                src_origin: [lo[0] + src_base[0], lo[1] + src_base[1], lo[2] + src_base[2]],
                dst_origin: [lo[0] + dst_base[0], lo[1] + dst_base[1], lo[2] + dst_base[2]],
                shape: [hi[0] - lo[0], hi[1] - lo[1], hi[2] - lo[2]],
            });
        }
    }
    blocks.sort_by_key(|b| (b.dst_rank, b.src_rank, b.dst_origin));
    Ok(blocks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn start_indices_spread_remainder() {
        // 32 over 7: B=4, R=4, S=1
        let d = Dist1d::new(32, 7).unwrap();
        let starts: Vec<usize> = (0..7).map(|r| d.start(r)).collect();
        assert_eq!(starts, [0, 5, 10, 15, 20, 24, 28]);
        let counts: Vec<usize> = (0..7).map(|r| d.count(r)).collect();
        assert_eq!(counts, [5, 5, 5, 5, 4, 4, 4]);

        // 32 over 6: B=5, R=2, S=3
        let d = Dist1d::new(32, 6).unwrap();
        let starts: Vec<usize> = (0..6).map(|r| d.start(r)).collect();
        assert_eq!(starts, [0, 5, 10, 16, 21, 26]);

        // uniform case
        let d = Dist1d::new(32, 8).unwrap();
        assert_eq!(d.start(3), 12);
    }

    #[test]
    fn rank_of_matches_worked_examples() {
        let d = Dist1d::new(32, 7).unwrap();
        assert_eq!(d.rank_of(14).unwrap(), 2);
        assert_eq!(d.rank_of(27).unwrap(), 5);
        assert_eq!(d.rank_of(0).unwrap(), 0);
        assert!(d.rank_of(32).is_err());
    }

    #[test]
    fn rank_of_inverts_start_exhaustively() {
        for n in 1..=128usize {
            for p in 1..=n {
                let d = Dist1d::new(n, p).unwrap();
                assert_eq!(d.start(p), n, "n={n} p={p}");
                let mut counts = Vec::with_capacity(p);
                for r in 0..p {
                    let c = d.count(r);
                    counts.push(c);
                    for j in 0..c {
                        assert_eq!(d.rank_of(d.start(r) + j).unwrap(), r, "n={n} p={p} r={r} j={j}");
                    }
                }
                let max = *counts.iter().max().unwrap();
                let min = *counts.iter().min().unwrap();
                assert!(max - min <= 1, "n={n} p={p} counts={counts:?}");
                assert_eq!(counts.iter().sum::<usize>(), n);
            }
        }
    }

    #[test]
    fn over_decomposition_rejected() {
        assert!(Dist1d::new(4, 5).is_err());
        assert!(Dist1d::new(4, 0).is_err());
        assert!(Topology::new(0, [4, 4, 4], 25, 1).is_err());
    }

    #[test]
    fn square_rank_grid() {
        let t = Topology::new(0, [64, 64, 64], 4, 1).unwrap();
        assert_eq!(t.grid(), [1, 2, 2]);
        assert_eq!(t.local_shape(0), [64, 32, 32]);
        for r in 0..4 {
            assert_eq!(t.local_shape(r), [64, 32, 32]);
        }
    }

    #[test]
    fn prime_rank_count_splits_one_axis() {
        // 7 = 1*7, larger factor on the axis after the pencil axis (z here)
        let t = Topology::new(1, [33, 33, 33], 7, 1).unwrap();
        assert_eq!(t.grid(), [1, 1, 7]);
        let counts: Vec<usize> = (0..7).map(|r| t.local_shape(r)[2]).collect();
        assert_eq!(counts, [5, 5, 5, 5, 5, 4, 4]);
        for r in 0..7 {
            let s = t.local_shape(r);
            assert_eq!(s[0], 33);
            assert_eq!(s[1], 33);
        }
    }

    #[test]
    fn single_rank_owns_all() {
        let t = Topology::new(2, [96, 96, 96], 1, 1).unwrap();
        assert_eq!(t.local_shape(0), [96, 96, 96]);
        assert_eq!(t.local_origin(0), [0, 0, 0]);
    }

    #[test]
    fn owner_round_trip() {
        let t = Topology::new(0, [9, 12, 7], 6, 1).unwrap();
        for r in 0..t.nranks() {
            let org = t.local_origin(r);
            let shape = t.local_shape(r);
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    let idx = [org[0], org[1] + j, org[2] + k];
                    assert_eq!(t.owner_of(idx).unwrap(), r);
                }
            }
        }
    }

    #[test]
    fn strides_follow_axis_order() {
        let t = Topology::new(1, [8, 16, 4], 1, 2).unwrap();
        assert_eq!(t.axis_order(), [1, 0, 2]);
        let s = t.local_strides(0);
        // pencil axis fastest, complex elements two slots wide
        assert_eq!(s[1], 2);
        assert_eq!(s[0], 2 * 16);
        assert_eq!(s[2], 2 * 16 * 8);
        assert_eq!(t.local_len(0), 2 * 8 * 16 * 4);
    }

    #[test]
    fn identity_switch_is_one_block_per_rank() {
        let t = Topology::new(0, [8, 8, 8], 4, 1).unwrap();
        let blocks = intersect_blocks(&t, &t, [0; 3], [0; 3]).unwrap();
        assert_eq!(blocks.len(), 4);
        for b in &blocks {
            assert_eq!(b.src_rank, b.dst_rank);
            assert_eq!(b.src_origin, b.dst_origin);
            assert_eq!(b.volume(), 8 * 4 * 4);
        }
    }

    #[test]
    fn two_rank_transpose_blocks() {
        let x = Topology::new(0, [8, 8, 8], 2, 1).unwrap();
        let y = Topology::new(1, [8, 8, 8], 2, 1).unwrap();
        let blocks = intersect_blocks(&x, &y, [0; 3], [0; 3]).unwrap();
        assert_eq!(blocks.len(), 4);
        for b in &blocks {
            assert_eq!(b.shape, [8, 4, 4]);
        }
        let vol: usize = blocks.iter().map(|b| b.volume()).sum();
        assert_eq!(vol, 8 * 8 * 8);
    }

    #[test]
    fn blocks_partition_common_box() {
        for &p in &[2usize, 3, 5, 7] {
            let src = Topology::new(0, [9, 11, 13], p, 1).unwrap();
            let dst = Topology::new(2, [9, 11, 13], p, 1).unwrap();
            let blocks = intersect_blocks(&src, &dst, [0; 3], [0; 3]).unwrap();
            let vol: usize = blocks.iter().map(|b| b.volume()).sum();
            assert_eq!(vol, 9 * 11 * 13, "p={p}");

            // exact cover: every index hit exactly once
            let mut hits = vec![0u8; 9 * 11 * 13];
            for b in &blocks {
                for i in 0..b.shape[0] {
                    for j in 0..b.shape[1] {
                        for k in 0..b.shape[2] {
                            let g = [b.src_origin[0] + i, b.src_origin[1] + j, b.src_origin[2] + k];
                            hits[(g[0] * 11 + g[1]) * 13 + g[2]] += 1;
                            // both frames agree when bases are zero
                            assert_eq!(src.owner_of(g).unwrap(), b.src_rank);
                            assert_eq!(dst.owner_of(g).unwrap(), b.dst_rank);
                        }
                    }
                }
            }
            assert!(hits.iter().all(|&h| h == 1), "p={p}");
        }
    }

    #[test]
    fn growth_switch_respects_bases() {
        // user region of 5 samples lands at indices 4..9 of a 9-sample line
        let src = Topology::new(0, [5, 6, 6], 2, 1).unwrap();
        let dst = Topology::new(1, [9, 6, 6], 2, 1).unwrap();
        let blocks = intersect_blocks(&src, &dst, [0; 3], [4, 0, 0]).unwrap();
        let vol: usize = blocks.iter().map(|b| b.volume()).sum();
        assert_eq!(vol, 5 * 6 * 6);
        for b in &blocks {
            assert_eq!(b.dst_origin[0], b.src_origin[0] + 4);
            assert!(b.src_origin[0] + b.shape[0] <= 5);
        }
    }

    #[test]
    fn block_order_deterministic() {
        let src = Topology::new(0, [8, 9, 10], 4, 1).unwrap();
        let dst = Topology::new(1, [8, 9, 10], 4, 1).unwrap();
        let a = intersect_blocks(&src, &dst, [0; 3], [0; 3]).unwrap();
        let b = intersect_blocks(&src, &dst, [0; 3], [0; 3]).unwrap();
        assert_eq!(a, b);
        let keys: Vec<_> = a.iter().map(|b| (b.dst_rank, b.src_rank, b.dst_origin)).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn factorization_is_most_square() {
        assert_eq!(most_square_factors(1), (1, 1));
        assert_eq!(most_square_factors(4), (2, 2));
        assert_eq!(most_square_factors(6), (2, 3));
        assert_eq!(most_square_factors(7), (1, 7));
        assert_eq!(most_square_factors(12), (3, 4));
        assert_eq!(most_square_factors(36), (6, 6));
    }
}
