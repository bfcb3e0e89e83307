//! Boustrophedon and rectangular-spiral coverage paths with budget-fitted
//! spacing.

use crate::geometry::Region;

pub type Cell = (usize, usize);

/// Corner of a region a coverage path starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corner {
    TopLeft,
    TopRight,
    BottomLeft,
    BottomRight,
}

impl Corner {
    pub const ALL: [Corner; 4] = [
        Corner::TopLeft,
        Corner::TopRight,
        Corner::BottomLeft,
        Corner::BottomRight,
    ];

    pub fn cell(self, r: Region) -> Cell {
        let (xl, xr, yt, yb) = (r.x0, r.x1 - 1, r.y0, r.y1 - 1);
        match self {
            Corner::TopLeft => (xl, yt),
            Corner::TopRight => (xr, yt),
            Corner::BottomLeft => (xl, yb),
            Corner::BottomRight => (xr, yb),
        }
    }

    /// The corner closest to `from` in moves; ties resolve in `ALL` order.
    pub fn nearest(r: Region, from: Cell) -> Corner {
        Corner::ALL
            .into_iter()
            .min_by_key(|c| chebyshev(from, c.cell(r)))
            .expect("four corners")
    }

    /// Maps local coordinates (origin at this corner) into the region.
    fn place(self, r: Region, (u, v): Cell) -> Cell {
        let x = match self {
            Corner::TopLeft | Corner::BottomLeft => r.x0 + u,
            Corner::TopRight | Corner::BottomRight => r.x1 - 1 - u,
        };
        let y = match self {
            Corner::TopLeft | Corner::TopRight => r.y0 + v,
            Corner::BottomLeft | Corner::BottomRight => r.y1 - 1 - v,
        };
        (x, y)
    }
}

/// Moves needed to travel between two cells with king moves.
pub fn chebyshev(a: Cell, b: Cell) -> usize {
    a.0.abs_diff(b.0).max(a.1.abs_diff(b.1))
}

/// Straight king-move path from `from` to `to`, excluding `from`.
pub fn travel(from: Cell, to: Cell) -> Vec<Cell> {
    let mut cur = from;
    let mut out = Vec::with_capacity(chebyshev(from, to));
    while cur != to {
        let step = |a: usize, b: usize| match b.cmp(&a) {
            std::cmp::Ordering::Greater => a + 1,
            std::cmp::Ordering::Less => a - 1,
            std::cmp::Ordering::Equal => a,
        };
        cur = (step(cur.0, to.0), step(cur.1, to.1));
        out.push(cur);
    }
    out
}

/// Number of sweep rows of a lawnmower with row spacing `spacing`.
pub fn lawnmower_rows(region: Region, spacing: usize) -> usize {
    if region.is_empty() {
        0
    } else {
        (region.height() - 1) / spacing + 1
    }
}

/// Exact move count of [`lawnmower_path`].
pub fn lawnmower_length(region: Region, spacing: usize) -> usize {
    let rows = lawnmower_rows(region, spacing);
    if rows == 0 {
        return 0;
    }
    rows * (region.width() - 1) + (rows - 1) * spacing
}

/// Back-and-forth sweep along x with rows `spacing` cells apart, starting
/// at `corner`. Returns every visited cell, starting cell included.
pub fn lawnmower_path(region: Region, spacing: usize, corner: Corner) -> Vec<Cell> {
    assert!(spacing >= 1, "spacing must be >= 1");
    let mut path = Vec::new();
    if region.is_empty() {
        return path;
    }
    let (w, h) = (region.width(), region.height());
    let mut v = 0;
    let mut rightward = true;
    loop {
        let row = (0..w).map(|u| if rightward { u } else { w - 1 - u });
        if path.is_empty() {
            path.extend(row.map(|u| (u, v)));
        } else {
            // Previous row ended at the column this row starts on.
            let u = if rightward { 0 } else { w - 1 };
            for dv in 1..=spacing {
                path.push((u, v - spacing + dv));
            }
            path.extend(row.skip(1).map(|u| (u, v)));
        }
        if v + spacing > h - 1 {
            break;
        }
        v += spacing;
        rightward = !rightward;
    }
    path.into_iter().map(|c| corner.place(region, c)).collect()
}

/// Inward rectangular spiral with rings `spacing` cells apart, starting at
/// `corner`. The first ring traces the region border; the spiral ends when
/// no further ring fits.
pub fn spiral_path(region: Region, spacing: usize, corner: Corner) -> Vec<Cell> {
    let vertices = spiral_vertices(region, spacing);
    let mut path = Vec::new();
    if let Some(&first) = vertices.first() {
        path.push(first);
        for pair in vertices.windows(2) {
            path.extend(travel(pair[0], pair[1]));
        }
    }
    path.into_iter().map(|c| corner.place(region, c)).collect()
}

/// Turning points of the spiral in local coordinates. Consecutive vertices
/// share a row or a column.
fn spiral_vertices(region: Region, spacing: usize) -> Vec<Cell> {
    assert!(spacing >= 1, "spacing must be >= 1");
    if region.is_empty() {
        return Vec::new();
    }
    // Local inclusive bounds.
    let (mut l, mut r, mut t, mut b) = (0usize, region.width() - 1, 0usize, region.height() - 1);
    let mut v = vec![(0usize, 0usize)];
    let goto = |v: &mut Vec<Cell>, to: Cell| {
        if *v.last().expect("non-empty") != to {
            v.push(to);
        }
    };
    loop {
        // Top edge, left to right.
        goto(&mut v, (r, t));
        if t == b {
            break;
        }
        // Right edge, down.
        goto(&mut v, (r, b));
        if l == r {
            break;
        }
        // Bottom edge, right to left.
        goto(&mut v, (l, b));
        let inner_fits = r >= spacing
            && b >= spacing
            && l + spacing <= r - spacing
            && t + spacing <= b - spacing;
        if !inner_fits {
            // Close the loop just below the start and stop.
            if b > t + 1 {
                goto(&mut v, (l, t + 1));
            }
            break;
        }
        // Left edge, up to the next ring's top row.
        goto(&mut v, (l, t + spacing));
        l += spacing;
        r -= spacing;
        t += spacing;
        b -= spacing;
    }
    v
}

/// Exact move count of [`spiral_path`].
pub fn spiral_length(region: Region, spacing: usize) -> usize {
    spiral_vertices(region, spacing)
        .windows(2)
        .map(|p| chebyshev(p[0], p[1]))
        .sum()
}

/// Smallest spacing in `1..=max_spacing` whose path length fits `budget`
/// moves. Falls back to `max_spacing` when none fits; the boolean reports
/// whether the returned spacing fits.
///
/// Path length is not monotone in spacing (a wider spacing can keep the
/// same row count and lengthen the row transitions), so every candidate is
/// checked in increasing order.
pub fn fit_spacing(max_spacing: usize, budget: usize, length: impl Fn(usize) -> usize) -> (usize, bool) {
    let max_spacing = max_spacing.max(1);
    (1..=max_spacing)
        .find(|&s| length(s) <= budget)
        .map_or((max_spacing, false), |s| (s, true))
}

/// Largest useful spacing for a region: beyond it the path no longer
/// changes.
pub fn max_spacing(region: Region) -> usize {
    region.width().max(region.height()).max(1)
}
