// Copyright 2026 The hoctree Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

//! Space-filling curve primitives: 2D Hilbert and 3D Morton codes, plus the
//! decomposition of a cell rectangle into Hilbert index ranges.
//!
//! Hilbert orientation: the traversal starts at `(0, 0)` and the order-1 visit
//! sequence is `(0,0) -> (0,1) -> (1,1) -> (1,0)`. Aligned `2^k x 2^k` blocks
//! occupy contiguous index runs, and the top `2 * d` bits of an order-`n`
//! index are the order-`d` index of the enclosing block.
//!
//! Morton layout: one `(t, y, x)` bit triplet per level, most significant
//! level first, `x` in the least significant position of each triplet.

use alloc::vec::Vec;

/// Deepest supported curve order / tree depth.
pub const MAX_ORDER: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum CurveError {
    #[error("curve order {0} outside 1..={MAX_ORDER}")]
    OrderOutOfRange(u32),
    #[error("depth {0} exceeds {MAX_ORDER}")]
    DepthOutOfRange(u32),
    #[error("cell coordinate {coord} does not fit in {bits} bits")]
    CoordinateOutOfRange { coord: u32, bits: u32 },
    #[error("curve index {value} out of range at order/depth {order}")]
    IndexOutOfRange { value: u64, order: u32 },
    #[error("empty or inverted cell rectangle")]
    EmptyRect,
}

fn check_order(order: u32) -> Result<(), CurveError> {
    if (1..=MAX_ORDER).contains(&order) {
        Ok(())
    } else {
        Err(CurveError::OrderOutOfRange(order))
    }
}

fn check_coord(coord: u32, bits: u32) -> Result<(), CurveError> {
    if bits < 32 && coord >> bits != 0 {
        Err(CurveError::CoordinateOutOfRange { coord, bits })
    } else {
        Ok(())
    }
}

/// Quantized position of an octree cube: per-axis cell indices at `depth`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CellCoord {
    cx: u32,
    cy: u32,
    ct: u32,
    depth: u8,
}

impl CellCoord {
    pub const ROOT: CellCoord = CellCoord { cx: 0, cy: 0, ct: 0, depth: 0 };

    pub fn new(cx: u32, cy: u32, ct: u32, depth: u32) -> Result<Self, CurveError> {
        if depth > MAX_ORDER {
            return Err(CurveError::DepthOutOfRange(depth));
        }
        for c in [cx, cy, ct] {
            check_coord(c, depth)?;
        }
        Ok(CellCoord { cx, cy, ct, depth: depth as u8 })
    }

    pub fn cx(&self) -> u32 {
        self.cx
    }

    pub fn cy(&self) -> u32 {
        self.cy
    }

    pub fn ct(&self) -> u32 {
        self.ct
    }

    pub fn depth(&self) -> u32 {
        u32::from(self.depth)
    }

    /// The enclosing cell at a shallower `depth`.
    pub fn ancestor(&self, depth: u32) -> CellCoord {
        debug_assert!(depth <= self.depth());
        let shift = self.depth() - depth;
        CellCoord { cx: self.cx >> shift, cy: self.cy >> shift, ct: self.ct >> shift, depth: depth as u8 }
    }

    /// Child cube in octant `octant` (bit 2 = t, bit 1 = y, bit 0 = x).
    pub fn child(&self, octant: u8) -> CellCoord {
        debug_assert!(octant < 8 && self.depth() < MAX_ORDER);
        let o = u32::from(octant);
        CellCoord {
            cx: (self.cx << 1) | (o & 1),
            cy: (self.cy << 1) | ((o >> 1) & 1),
            ct: (self.ct << 1) | ((o >> 2) & 1),
            depth: self.depth + 1,
        }
    }

    /// Octant of this cell inside its parent.
    pub fn octant(&self) -> u8 {
        (((self.ct & 1) << 2) | ((self.cy & 1) << 1) | (self.cx & 1)) as u8
    }
}

/// Position along the Hilbert traversal of a `2^order x 2^order` grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HilbertIndex {
    value: u64,
    order: u32,
}

impl HilbertIndex {
    pub fn new(value: u64, order: u32) -> Result<Self, CurveError> {
        check_order(order)?;
        if value >> (2 * order) != 0 {
            return Err(CurveError::IndexOutOfRange { value, order });
        }
        Ok(HilbertIndex { value, order })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn order(&self) -> u32 {
        self.order
    }
}

/// Bit-interleaved `(t, y, x)` key of a [`CellCoord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MortonKey {
    value: u64,
    depth: u8,
}

impl MortonKey {
    pub fn new(value: u64, depth: u32) -> Result<Self, CurveError> {
        if depth > MAX_ORDER {
            return Err(CurveError::DepthOutOfRange(depth));
        }
        if value >> (3 * depth) != 0 {
            return Err(CurveError::IndexOutOfRange { value, order: depth });
        }
        Ok(MortonKey { value, depth: depth as u8 })
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn depth(&self) -> u32 {
        u32::from(self.depth)
    }
}

/// Inclusive run of Hilbert index values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct HilbertRange {
    pub lo: u64,
    pub hi: u64,
}

impl HilbertRange {
    pub fn new(lo: u64, hi: u64) -> Self {
        debug_assert!(lo <= hi);
        HilbertRange { lo, hi }
    }

    pub fn len(&self) -> u64 {
        self.hi - self.lo + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, h: u64) -> bool {
        self.lo <= h && h <= self.hi
    }

    pub fn overlaps(&self, other: &HilbertRange) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Inclusive rectangle of grid cells `[x_lo..=x_hi] x [y_lo..=y_hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CellRect {
    pub x_lo: u32,
    pub x_hi: u32,
    pub y_lo: u32,
    pub y_hi: u32,
}

impl CellRect {
    pub fn new(x_lo: u32, x_hi: u32, y_lo: u32, y_hi: u32) -> Self {
        CellRect { x_lo, x_hi, y_lo, y_hi }
    }

    fn validate(&self, order: u32) -> Result<(), CurveError> {
        check_order(order)?;
        if self.x_lo > self.x_hi || self.y_lo > self.y_hi {
            return Err(CurveError::EmptyRect);
        }
        check_coord(self.x_hi, order)?;
        check_coord(self.y_hi, order)
    }
}

/// Hilbert position of cell `(cx, cy)` on the order-`order` grid.
pub fn hilbert_encode(cx: u32, cy: u32, order: u32) -> Result<HilbertIndex, CurveError> {
    check_order(order)?;
    check_coord(cx, order)?;
    check_coord(cy, order)?;
    Ok(HilbertIndex { value: hilbert_encode_unchecked(cx, cy, order), order })
}

pub(crate) fn hilbert_encode_unchecked(cx: u32, cy: u32, order: u32) -> u64 {
    let n = 1u32 << order;
    let (mut x, mut y) = (cx, cy);
    let mut d = 0u64;
    let mut s = n >> 1;
    while s > 0 {
        let rx = u32::from(x & s != 0);
        let ry = u32::from(y & s != 0);
        d += u64::from(s) * u64::from(s) * u64::from((3 * rx) ^ ry);
        if ry == 0 {
            if rx == 1 {
                x = n - 1 - x;
                y = n - 1 - y;
            }
            core::mem::swap(&mut x, &mut y);
        }
        s >>= 1;
    }
    d
}

/// Inverse of [`hilbert_encode`].
pub fn hilbert_decode(h: u64, order: u32) -> Result<(u32, u32), CurveError> {
    let h = HilbertIndex::new(h, order)?;
    let mut t = h.value;
    let (mut x, mut y) = (0u32, 0u32);
    let mut s = 1u32;
    while s < (1u32 << order) {
        let rx = (1 & (t / 2)) as u32;
        let ry = (1 & (t ^ u64::from(rx))) as u32;
        if ry == 0 {
            if rx == 1 {
                x = s - 1 - x;
                y = s - 1 - y;
            }
            core::mem::swap(&mut x, &mut y);
        }
        x += s * rx;
        y += s * ry;
        t /= 4;
        s <<= 1;
    }
    Ok((x, y))
}

/// Every Hilbert index inside `rect`, ascending. Enumerates cell by cell, so
/// cost is proportional to the rectangle area; see [`hilbert_ranges`] for the
/// run-length form used by queries.
pub fn get_hilbert_values(rect: CellRect, order: u32) -> Result<Vec<u64>, CurveError> {
    rect.validate(order)?;
    let mut out = Vec::with_capacity(((rect.x_hi - rect.x_lo + 1) as usize) * ((rect.y_hi - rect.y_lo + 1) as usize));
    for cy in rect.y_lo..=rect.y_hi {
        for cx in rect.x_lo..=rect.x_hi {
            out.push(hilbert_encode_unchecked(cx, cy, order));
        }
    }
    out.sort_unstable();
    Ok(out)
}

/// Maximal contiguous runs of `values`, ascending. Duplicates are tolerated.
pub fn coalesce_regions(values: &[u64]) -> Vec<HilbertRange> {
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut out: Vec<HilbertRange> = Vec::new();
    for v in sorted {
        match out.last_mut() {
            Some(last) if last.hi + 1 == v => last.hi = v,
            _ => out.push(HilbertRange::new(v, v)),
        }
    }
    out
}

// Quadrant digit -> (x bit, y bit) in the block's local frame.
const DIGIT_BITS: [(u32, u32); 4] = [(0, 0), (0, 1), (1, 1), (1, 0)];

/// Same answer as `coalesce_regions(&get_hilbert_values(rect, order)?)`, but
/// computed by descending the quadrant hierarchy in curve order and emitting
/// whole blocks that fall inside the rectangle.
pub fn hilbert_ranges(rect: CellRect, order: u32) -> Result<Vec<HilbertRange>, CurveError> {
    rect.validate(order)?;
    let mut out = Vec::new();
    descend(&rect, order, 0, 0, 0, 0, false, false, &mut out);
    Ok(out)
}

// A block is identified by its level, its Hilbert prefix and its origin; its
// local frame relative to the grid is a combination of an x/y transpose and a
// reflection of both axes (the two commute).
#[allow(clippy::too_many_arguments)]
fn descend(rect: &CellRect, order: u32, level: u32, prefix: u64, x0: u32, y0: u32, swap: bool, invert: bool, out: &mut Vec<HilbertRange>) {
    let side = 1u32 << (order - level);
    let (x1, y1) = (x0 + (side - 1), y0 + (side - 1));
    if x1 < rect.x_lo || x0 > rect.x_hi || y1 < rect.y_lo || y0 > rect.y_hi {
        return;
    }
    if rect.x_lo <= x0 && x1 <= rect.x_hi && rect.y_lo <= y0 && y1 <= rect.y_hi {
        let shift = 2 * (order - level);
        let lo = prefix << shift;
        let hi = lo + ((1u64 << shift) - 1);
        match out.last_mut() {
            Some(last) if last.hi + 1 == lo => last.hi = hi,
            _ => out.push(HilbertRange::new(lo, hi)),
        }
        return;
    }
    let half = side >> 1;
    for (digit, &(lx, ly)) in DIGIT_BITS.iter().enumerate() {
        let (mut ax, mut ay) = if invert { (lx ^ 1, ly ^ 1) } else { (lx, ly) };
        if swap {
            core::mem::swap(&mut ax, &mut ay);
        }
        let (child_swap, child_invert) = match digit {
            0 => (!swap, invert),
            3 => (!swap, !invert),
            _ => (swap, invert),
        };
        descend(rect, order, level + 1, (prefix << 2) | digit as u64, x0 + ax * half, y0 + ay * half, child_swap, child_invert, out);
    }
}

/// Interleaves the `(t, y, x)` bits of `c`.
pub fn morton3_encode(c: CellCoord) -> MortonKey {
    let value = spread3(c.cx) | (spread3(c.cy) << 1) | (spread3(c.ct) << 2);
    MortonKey { value, depth: c.depth }
}

/// Checked variant of [`morton3_encode`] taking raw coordinates.
pub fn morton3_encode_coords(cx: u32, cy: u32, ct: u32, depth: u32) -> Result<MortonKey, CurveError> {
    Ok(morton3_encode(CellCoord::new(cx, cy, ct, depth)?))
}

/// Inverse of [`morton3_encode`].
pub fn morton3_decode(k: MortonKey) -> CellCoord {
    CellCoord { cx: compact3(k.value), cy: compact3(k.value >> 1), ct: compact3(k.value >> 2), depth: k.depth }
}

// Spreads the low 21 bits of `v` so bit i lands at bit 3i.
fn spread3(v: u32) -> u64 {
    let mut x = u64::from(v) & 0x1f_ffff;
    x = (x | (x << 32)) & 0x001f_0000_0000_ffff;
    x = (x | (x << 16)) & 0x001f_0000_ff00_00ff;
    x = (x | (x << 8)) & 0x100f_00f0_0f00_f00f;
    x = (x | (x << 4)) & 0x10c3_0c30_c30c_30c3;
    x = (x | (x << 2)) & 0x1249_2492_4924_9249;
    x
}

fn compact3(v: u64) -> u32 {
    let mut x = v & 0x1249_2492_4924_9249;
    x = (x | (x >> 2)) & 0x10c3_0c30_c30c_30c3;
    x = (x | (x >> 4)) & 0x100f_00f0_0f00_f00f;
    x = (x | (x >> 8)) & 0x001f_0000_ff00_00ff;
    x = (x | (x >> 16)) & 0x001f_0000_0000_ffff;
    x = (x | (x >> 32)) & 0x1f_ffff;
    x as u32
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    // Reference curve built by explicit recursive rotate/reflect of the
    // previous order's cell sequence.
    fn reference_curve(order: u32) -> Vec<(u32, u32)> {
        let mut cells = vec![(0u32, 0u32)];
        for k in 0..order {
            let s = 1u32 << k;
            let mut next = Vec::with_capacity(cells.len() * 4);
            next.extend(cells.iter().map(|&(x, y)| (y, x)));
            next.extend(cells.iter().map(|&(x, y)| (x, y + s)));
            next.extend(cells.iter().map(|&(x, y)| (x + s, y + s)));
            next.extend(cells.iter().map(|&(x, y)| (2 * s - 1 - y, s - 1 - x)));
            cells = next;
        }
        cells
    }

    // Per-level hand interleave, most significant level first.
    fn reference_morton(cx: u32, cy: u32, ct: u32, depth: u32) -> u64 {
        let mut v = 0u64;
        for level in (0..depth).rev() {
            let triplet = (((ct >> level) & 1) << 2) | (((cy >> level) & 1) << 1) | ((cx >> level) & 1);
            v = (v << 3) | u64::from(triplet);
        }
        v
    }

    #[test]
    fn order_one_table() {
        assert_eq!(hilbert_encode(0, 0, 1).unwrap().value(), 0);
        assert_eq!(hilbert_encode(0, 1, 1).unwrap().value(), 1);
        assert_eq!(hilbert_encode(1, 1, 1).unwrap().value(), 2);
        assert_eq!(hilbert_encode(1, 0, 1).unwrap().value(), 3);
        assert_eq!(hilbert_encode(0, 0, 8).unwrap().value(), 0);
        assert_eq!(hilbert_decode(0, 1).unwrap(), (0, 0));
        assert_eq!(hilbert_decode(3, 1).unwrap(), (1, 0));
    }

    #[test]
    fn encode_matches_reference_construction() {
        for order in 1..=6 {
            for (pos, &(x, y)) in reference_curve(order).iter().enumerate() {
                assert_eq!(hilbert_encode(x, y, order).unwrap().value(), pos as u64, "order {order} cell ({x},{y})");
            }
        }
    }

    #[test]
    fn block_prefix_property() {
        let order = 6;
        for y in 0..64u32 {
            for x in 0..64u32 {
                let h = hilbert_encode_unchecked(x, y, order);
                for d in 1..order {
                    let k = order - d;
                    assert_eq!(h >> (2 * k), hilbert_encode_unchecked(x >> k, y >> k, d));
                }
            }
        }
    }

    #[test]
    fn domain_errors() {
        assert_eq!(hilbert_encode(2, 0, 1), Err(CurveError::CoordinateOutOfRange { coord: 2, bits: 1 }));
        assert_eq!(hilbert_encode(0, 0, 0), Err(CurveError::OrderOutOfRange(0)));
        assert_eq!(hilbert_encode(0, 0, 17), Err(CurveError::OrderOutOfRange(17)));
        assert!(matches!(hilbert_decode(4, 1), Err(CurveError::IndexOutOfRange { .. })));
        assert_eq!(get_hilbert_values(CellRect::new(1, 0, 0, 0), 2), Err(CurveError::EmptyRect));
        assert!(get_hilbert_values(CellRect::new(0, 4, 0, 0), 2).is_err());
        assert!(CellCoord::new(2, 0, 0, 1).is_err());
        assert!(MortonKey::new(8, 1).is_err());
        assert!(morton3_encode_coords(0, 0, 0, 17).is_err());
    }

    #[test]
    fn hilbert_values_examples() {
        assert_eq!(get_hilbert_values(CellRect::new(0, 1, 0, 1), 1).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(get_hilbert_values(CellRect::new(1, 1, 0, 0), 1).unwrap(), vec![3]);
        // 2x1 rectangle at order 2: cells (1,2) and (2,2).
        let rect = CellRect::new(1, 2, 2, 2);
        let mut expected: Vec<u64> =
            reference_curve(2).iter().enumerate().filter(|(_, &(x, y))| (1..=2).contains(&x) && y == 2).map(|(i, _)| i as u64).collect();
        expected.sort_unstable();
        assert_eq!(expected, vec![7, 8]);
        assert_eq!(get_hilbert_values(rect, 2).unwrap(), expected);
    }

    #[test]
    fn coalesce_examples() {
        assert!(coalesce_regions(&[]).is_empty());
        assert_eq!(coalesce_regions(&[0, 1, 2, 3]), vec![HilbertRange::new(0, 3)]);
        assert_eq!(coalesce_regions(&[5, 1, 2]), vec![HilbertRange::new(1, 2), HilbertRange::new(5, 5)]);
    }

    #[test]
    fn ranges_match_enumeration_exhaustively_small() {
        let order = 4;
        let n = 1u32 << order;
        for x_lo in 0..n {
            for x_hi in x_lo..n {
                for (y_lo, y_hi) in [(0, n - 1), (3, 3), (2, 9), (5, 15)] {
                    let rect = CellRect::new(x_lo, x_hi, y_lo, y_hi);
                    let slow = coalesce_regions(&get_hilbert_values(rect, order).unwrap());
                    assert_eq!(hilbert_ranges(rect, order).unwrap(), slow, "{rect:?}");
                }
            }
        }
    }

    #[test]
    fn morton_examples() {
        assert_eq!(morton3_encode_coords(0, 0, 0, 1).unwrap().value(), 0);
        assert_eq!(morton3_encode_coords(1, 1, 1, 1).unwrap().value(), 7);
        assert_eq!(morton3_encode_coords(1, 0, 0, 1).unwrap().value(), 1);
        assert_eq!(morton3_encode_coords(0, 1, 0, 1).unwrap().value(), 2);
        assert_eq!(morton3_encode_coords(0, 0, 1, 1).unwrap().value(), 4);
        let c = morton3_decode(MortonKey::new(0, 3).unwrap());
        assert_eq!((c.cx(), c.cy(), c.ct(), c.depth()), (0, 0, 0, 3));
        let c = morton3_decode(MortonKey::new(7, 1).unwrap());
        assert_eq!((c.cx(), c.cy(), c.ct()), (1, 1, 1));
    }

    #[test]
    fn morton_matches_hand_interleave() {
        let samples = [(0u32, 0u32, 0u32), (1, 2, 3), (65535, 0, 65535), (12345, 54321, 999), (65535, 65535, 65535)];
        for &(x, y, t) in &samples {
            assert_eq!(morton3_encode_coords(x, y, t, 16).unwrap().value(), reference_morton(x, y, t, 16));
        }
    }

    #[test]
    fn child_and_octant_agree_with_morton() {
        let parent = CellCoord::new(3, 1, 2, 2).unwrap();
        for o in 0..8u8 {
            let c = parent.child(o);
            assert_eq!(c.octant(), o);
            assert_eq!(c.ancestor(2), parent);
            assert_eq!(morton3_encode(c).value() & 7, u64::from(o));
            assert_eq!(morton3_encode(c).value() >> 3, morton3_encode(parent).value());
        }
    }

    proptest::proptest! {
        #[test]
        fn ranges_match_enumeration(x_lo in 0u32..64, w in 0u32..64, y_lo in 0u32..64, h in 0u32..64) {
            let rect = CellRect::new(x_lo, (x_lo + w).min(63), y_lo, (y_lo + h).min(63));
            let slow = coalesce_regions(&get_hilbert_values(rect, 6).unwrap());
            proptest::prop_assert_eq!(hilbert_ranges(rect, 6).unwrap(), slow);
        }

        #[test]
        fn coalesce_is_exact_and_maximal(mut values in proptest::collection::vec(0u64..200, 0..80)) {
            let ranges = coalesce_regions(&values);
            values.sort_unstable();
            values.dedup();
            let expanded: Vec<u64> = ranges.iter().flat_map(|r| r.lo..=r.hi).collect();
            proptest::prop_assert_eq!(expanded, values);
            for pair in ranges.windows(2) {
                proptest::prop_assert!(pair[0].hi + 1 < pair[1].lo);
            }
        }
    }
}
