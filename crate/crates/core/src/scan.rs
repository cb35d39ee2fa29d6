//! View subset scanning orders.
//!
//! The view grid is partitioned into ordered subsets following one of four
//! prediction patterns: Circular-2, Circular-4, Hierarchical-2 and
//! Hierarchical-4. Within a subset, views spiral clockwise outward from the
//! grid center in rings of non-decreasing Chebyshev radius; the extreme grid
//! corners always land in the final subset. The canonical 9x9 coordinate
//! tables are frozen in [`tables`] (version [`tables::TABLE_VERSION`]); other
//! odd grid sizes use the same generalized construction.

use crate::error::{Error, Result};
use crate::lightfield::ViewCoord;

pub mod tables;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanKind {
    C2,
    C4,
    H2,
    H4,
}

impl ScanKind {
    pub const ALL: [ScanKind; 4] = [ScanKind::C2, ScanKind::C4, ScanKind::H2, ScanKind::H4];

    pub fn subset_count(&self) -> usize {
        match self {
            ScanKind::C2 | ScanKind::H2 => 2,
            ScanKind::C4 | ScanKind::H4 => 4,
        }
    }

    pub fn code(&self) -> u8 {
        match self {
            ScanKind::C2 => 0,
            ScanKind::C4 => 1,
            ScanKind::H2 => 2,
            ScanKind::H4 => 3,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ScanKind::C2),
            1 => Some(ScanKind::C4),
            2 => Some(ScanKind::H2),
            3 => Some(ScanKind::H4),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScanKind::C2 => "c2",
            ScanKind::C4 => "c4",
            ScanKind::H2 => "h2",
            ScanKind::H4 => "h4",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "c2" => Some(ScanKind::C2),
            "c4" => Some(ScanKind::C4),
            "h2" => Some(ScanKind::H2),
            "h4" => Some(ScanKind::H4),
            _ => None,
        }
    }
}

impl std::fmt::Display for ScanKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One scanning order: pairwise-disjoint ordered subsets covering the grid.
#[derive(Debug, Clone)]
pub struct ScanOrder {
    pub kind: ScanKind,
    pub grid: usize,
    pub subsets: Vec<Vec<ViewCoord>>,
}

impl ScanOrder {
    pub fn subset_sizes(&self) -> Vec<usize> {
        self.subsets.iter().map(Vec::len).collect()
    }

    /// Maximum Chebyshev radius per subset; the layer pad budget.
    pub fn subset_pad(&self, subset: usize) -> usize {
        self.subsets[subset]
            .iter()
            .map(|c| c.radius() as usize)
            .max()
            .unwrap_or(0)
    }
}

/// Clockwise traversal of the Chebyshev ring of radius `r`, starting at the
/// top-center cell (-r, 0) and ending at (-r, -1).
fn ring_coords(r: i32) -> Vec<ViewCoord> {
    assert!(r >= 1);
    let mut out = Vec::with_capacity(8 * r as usize);
    for t in 0..=r {
        out.push(ViewCoord::new(-r, t));
    }
    for s in (-r + 1)..=r {
        out.push(ViewCoord::new(s, r));
    }
    for t in (-r..r).rev() {
        out.push(ViewCoord::new(r, t));
    }
    for s in (-r..r).rev() {
        out.push(ViewCoord::new(s, -r));
    }
    for t in (-r + 1)..0 {
        out.push(ViewCoord::new(-r, t));
    }
    out
}

fn rings(from: i32, to: i32) -> Vec<ViewCoord> {
    let mut out = Vec::new();
    for r in from..=to {
        out.extend(ring_coords(r));
    }
    out
}

/// Ring-1 cells on the diagonals, clockwise from north.
fn ring1_diagonals() -> Vec<ViewCoord> {
    ring_coords(1)
        .into_iter()
        .filter(|c| c.s != 0 && c.t != 0)
        .collect()
}

/// Ring-1 cells on the axes, clockwise from north.
fn ring1_axes() -> Vec<ViewCoord> {
    ring_coords(1)
        .into_iter()
        .filter(|c| c.s == 0 || c.t == 0)
        .collect()
}

/// Ring-`r` cells within distance 1 of an axis, in ring order. These trace a
/// rasterized circle of radius ~r and chain with Chebyshev steps of 2.
fn ring_near_axis(r: i32) -> Vec<ViewCoord> {
    ring_coords(r)
        .into_iter()
        .filter(|c| (c.s.abs() == r && c.t.abs() == 1) || (c.t.abs() == r && c.s.abs() == 1))
        .collect()
}

fn center() -> ViewCoord {
    ViewCoord::new(0, 0)
}

/// Partitions a `grid` x `grid` view grid according to `kind`.
///
/// Circular-2/Hierarchical-2 accept odd grids >= 5; the 4-subset patterns
/// need odd grids >= 9. Output is deterministic. For `grid == 9` the frozen
/// canonical tables are returned.
pub fn partition_views(grid: usize, kind: ScanKind) -> Result<ScanOrder> {
    if grid.is_multiple_of(2) || grid < 5 {
        return Err(Error::UnsupportedGrid(grid));
    }
    let radius = ((grid - 1) / 2) as i32;
    let half = radius / 2;
    let subsets: Vec<Vec<ViewCoord>> = match kind {
        ScanKind::H2 => {
            let mut s1 = vec![center()];
            s1.extend(rings(1, half));
            vec![s1, rings(half + 1, radius)]
        }
        ScanKind::C2 => {
            let mut s2 = vec![center()];
            s2.extend(rings(half + 1, radius));
            vec![rings(1, half), s2]
        }
        ScanKind::H4 => {
            if radius < 4 {
                return Err(Error::UnsupportedGrid(grid));
            }
            let mut s2 = vec![center()];
            s2.extend(ring1_axes());
            vec![
                ring1_diagonals(),
                s2,
                rings(2, half),
                rings(half + 1, radius),
            ]
        }
        ScanKind::C4 => {
            // the near-axis circle of subset 3 only chains with Chebyshev
            // steps <= 2 while its ring radius is 3, i.e. grids 9 and 11
            if !(4..=5).contains(&radius) {
                return Err(Error::UnsupportedGrid(grid));
            }
            let mut s3 = ring1_axes();
            s3.extend(ring_near_axis(half + 1));
            let mut s4 = vec![center()];
            let near: std::collections::HashSet<ViewCoord> =
                ring_near_axis(half + 1).into_iter().collect();
            s4.extend(
                ring_coords(half + 1)
                    .into_iter()
                    .filter(|c| !near.contains(c)),
            );
            s4.extend(rings(half + 2, radius));
            vec![ring1_diagonals(), rings(2, half), s3, s4]
        }
    };
    Ok(ScanOrder {
        kind,
        grid,
        subsets,
    })
}
