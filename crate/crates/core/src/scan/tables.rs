//! Frozen canonical 9x9 scanning-order tables.
//!
//! One table per pattern; each subset lists (s, t) view coordinates in
//! coding order. These are the versioned fixture tables the rest of the
//! crate treats as canonical; the generator in the parent module must
//! reproduce them exactly (checked by test).

use super::ScanKind;

pub const TABLE_VERSION: u32 = 1;

const C2_S1: [(i32, i32); 24] = [
    (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-2, 0), (-2, 1),
    (-2, 2), (-1, 2), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (2, -1), (2, -2), (1, -2),
    (0, -2), (-1, -2), (-2, -2), (-2, -1),
];
const C2_S2: [(i32, i32); 57] = [
    (0, 0), (-3, 0), (-3, 1), (-3, 2), (-3, 3), (-2, 3), (-1, 3), (0, 3), (1, 3), (2, 3),
    (3, 3), (3, 2), (3, 1), (3, 0), (3, -1), (3, -2), (3, -3), (2, -3), (1, -3), (0, -3),
    (-1, -3), (-2, -3), (-3, -3), (-3, -2), (-3, -1), (-4, 0), (-4, 1), (-4, 2), (-4, 3),
    (-4, 4), (-3, 4), (-2, 4), (-1, 4), (0, 4), (1, 4), (2, 4), (3, 4), (4, 4), (4, 3), (4, 2),
    (4, 1), (4, 0), (4, -1), (4, -2), (4, -3), (4, -4), (3, -4), (2, -4), (1, -4), (0, -4),
    (-1, -4), (-2, -4), (-3, -4), (-4, -4), (-4, -3), (-4, -2), (-4, -1),
];

const C4_S1: [(i32, i32); 4] = [
    (-1, 1), (1, 1), (1, -1), (-1, -1),
];
const C4_S2: [(i32, i32); 16] = [
    (-2, 0), (-2, 1), (-2, 2), (-1, 2), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (2, -1),
    (2, -2), (1, -2), (0, -2), (-1, -2), (-2, -2), (-2, -1),
];
const C4_S3: [(i32, i32); 12] = [
    (-1, 0), (0, 1), (1, 0), (0, -1), (-3, 1), (-1, 3), (1, 3), (3, 1), (3, -1), (1, -3),
    (-1, -3), (-3, -1),
];
const C4_S4: [(i32, i32); 49] = [
    (0, 0), (-3, 0), (-3, 2), (-3, 3), (-2, 3), (0, 3), (2, 3), (3, 3), (3, 2), (3, 0),
    (3, -2), (3, -3), (2, -3), (0, -3), (-2, -3), (-3, -3), (-3, -2), (-4, 0), (-4, 1),
    (-4, 2), (-4, 3), (-4, 4), (-3, 4), (-2, 4), (-1, 4), (0, 4), (1, 4), (2, 4), (3, 4),
    (4, 4), (4, 3), (4, 2), (4, 1), (4, 0), (4, -1), (4, -2), (4, -3), (4, -4), (3, -4),
    (2, -4), (1, -4), (0, -4), (-1, -4), (-2, -4), (-3, -4), (-4, -4), (-4, -3), (-4, -2),
    (-4, -1),
];

const H2_S1: [(i32, i32); 25] = [
    (0, 0), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-2, 0),
    (-2, 1), (-2, 2), (-1, 2), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (2, -1), (2, -2),
    (1, -2), (0, -2), (-1, -2), (-2, -2), (-2, -1),
];
const H2_S2: [(i32, i32); 56] = [
    (-3, 0), (-3, 1), (-3, 2), (-3, 3), (-2, 3), (-1, 3), (0, 3), (1, 3), (2, 3), (3, 3),
    (3, 2), (3, 1), (3, 0), (3, -1), (3, -2), (3, -3), (2, -3), (1, -3), (0, -3), (-1, -3),
    (-2, -3), (-3, -3), (-3, -2), (-3, -1), (-4, 0), (-4, 1), (-4, 2), (-4, 3), (-4, 4),
    (-3, 4), (-2, 4), (-1, 4), (0, 4), (1, 4), (2, 4), (3, 4), (4, 4), (4, 3), (4, 2), (4, 1),
    (4, 0), (4, -1), (4, -2), (4, -3), (4, -4), (3, -4), (2, -4), (1, -4), (0, -4), (-1, -4),
    (-2, -4), (-3, -4), (-4, -4), (-4, -3), (-4, -2), (-4, -1),
];

const H4_S1: [(i32, i32); 4] = [
    (-1, 1), (1, 1), (1, -1), (-1, -1),
];
const H4_S2: [(i32, i32); 5] = [
    (0, 0), (-1, 0), (0, 1), (1, 0), (0, -1),
];
const H4_S3: [(i32, i32); 16] = [
    (-2, 0), (-2, 1), (-2, 2), (-1, 2), (0, 2), (1, 2), (2, 2), (2, 1), (2, 0), (2, -1),
    (2, -2), (1, -2), (0, -2), (-1, -2), (-2, -2), (-2, -1),
];
const H4_S4: [(i32, i32); 56] = [
    (-3, 0), (-3, 1), (-3, 2), (-3, 3), (-2, 3), (-1, 3), (0, 3), (1, 3), (2, 3), (3, 3),
    (3, 2), (3, 1), (3, 0), (3, -1), (3, -2), (3, -3), (2, -3), (1, -3), (0, -3), (-1, -3),
    (-2, -3), (-3, -3), (-3, -2), (-3, -1), (-4, 0), (-4, 1), (-4, 2), (-4, 3), (-4, 4),
    (-3, 4), (-2, 4), (-1, 4), (0, 4), (1, 4), (2, 4), (3, 4), (4, 4), (4, 3), (4, 2), (4, 1),
    (4, 0), (4, -1), (4, -2), (4, -3), (4, -4), (3, -4), (2, -4), (1, -4), (0, -4), (-1, -4),
    (-2, -4), (-3, -4), (-4, -4), (-4, -3), (-4, -2), (-4, -1),
];

pub fn canonical_9x9(kind: ScanKind) -> &'static [&'static [(i32, i32)]] {
    match kind {
        ScanKind::C2 => &[&C2_S1, &C2_S2],
        ScanKind::C4 => &[&C4_S1, &C4_S2, &C4_S3, &C4_S4],
        ScanKind::H2 => &[&H2_S1, &H2_S2],
        ScanKind::H4 => &[&H4_S1, &H4_S2, &H4_S3, &H4_S4],
    }
}
