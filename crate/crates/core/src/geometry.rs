//! 19-cell wrap-around hexagonal layout and the deterministic per-cell user grid.
//!
//! Cells sit on a triangular lattice with neighbor spacing sqrt(3) * cell_radius,
//! so each cell's Voronoi region is a regular hexagon with circumradius
//! cell_radius. Border effects are removed by treating the 19-cell cluster as a
//! torus: distances are minimized over the cluster's six translation vectors
//! plus the zero vector.

use thiserror::Error;

/// Cells in the cluster. The cluster is a center cell plus two hexagonal rings.
pub const CELL_COUNT: usize = 19;
/// User locations per cell.
pub const GRID_POINTS_PER_CELL: usize = 64;

/// Fraction of the apothem by which remapped grid points are pulled inside the
/// hexagon boundary, so every point is strictly interior.
const GRID_INSET: f64 = 0.02;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("cell index {0} out of range (layout has {CELL_COUNT} cells)")]
    InvalidCell(usize),
}

#[derive(Debug, Clone)]
pub struct HexLayout {
    /// Cell centers in km; index 0 is the cluster center, rings follow in
    /// angular order.
    pub cell_centers: Vec<[f64; 2]>,
    /// Hexagon circumradius (center to vertex) in km.
    pub cell_radius: f64,
    /// Zero vector plus the six cluster translations, in km. Minimizing over
    /// these implements the toroidal wrap.
    pub wrap_images: Vec<[f64; 2]>,
}

#[derive(Debug, Clone)]
pub struct UserGrid {
    pub points: Vec<[f64; 2]>,
    pub owner_cell: usize,
}

impl HexLayout {
    pub fn cells(&self) -> std::ops::Range<usize> {
        0..self.cell_centers.len()
    }
}

/// Builds the 19-cell cluster with wrap-around translations.
pub fn build_layout(cell_radius: f64) -> HexLayout {
    assert!(
        cell_radius > 0.0 && cell_radius.is_finite(),
        "cell_radius must be positive"
    );
    let s = 3.0_f64.sqrt() * cell_radius; // neighbor center spacing
    let a1 = [s, 0.0];
    let a2 = [0.5 * s, 0.75_f64.sqrt() * s];

    // Axial coordinates (q, r) within hex distance 2 of the origin: 19 cells.
    let mut axial: Vec<(i32, i32)> = Vec::with_capacity(CELL_COUNT);
    for q in -2i32..=2 {
        for r in -2i32..=2 {
            if (q + r).abs() <= 2 {
                axial.push((q, r));
            }
        }
    }
    debug_assert_eq!(axial.len(), CELL_COUNT);
    // Ring first, then angle: keeps index 0 at the center and the ordering
    // reproducible.
    let ring = |&(q, r): &(i32, i32)| (q.abs() + r.abs() + (q + r).abs()) / 2;
    axial.sort_by(|p, o| {
        let (rp, ro) = (ring(p), ring(o));
        if rp != ro {
            return rp.cmp(&ro);
        }
        let ang = |&(q, r): &(i32, i32)| {
            let x = q as f64 * a1[0] + r as f64 * a2[0];
            let y = q as f64 * a1[1] + r as f64 * a2[1];
            y.atan2(x)
        };
        ang(p).partial_cmp(&ang(o)).unwrap()
    });
    let cell_centers = axial
        .iter()
        .map(|&(q, r)| {
            [
                q as f64 * a1[0] + r as f64 * a2[0],
                q as f64 * a1[1] + r as f64 * a2[1],
            ]
        })
        .collect();

    // A 19-cell cluster tiles the plane when shifted by 3*a1 + 2*a2 and its
    // 60-degree rotations (19 = 3*3 + 3*2 + 2*2). The six shifts come in
    // negated pairs, which keeps the wrapped metric symmetric.
    let shift = |q: f64, r: f64| [q * a1[0] + r * a2[0], q * a1[1] + r * a2[1]];
    let d1 = shift(3.0, 2.0);
    let d2 = shift(-2.0, 5.0);
    let d3 = shift(-5.0, 3.0);
    let wrap_images = vec![
        [0.0, 0.0],
        d1,
        [-d1[0], -d1[1]],
        d2,
        [-d2[0], -d2[1]],
        d3,
        [-d3[0], -d3[1]],
    ];

    HexLayout {
        cell_centers,
        cell_radius,
        wrap_images,
    }
}

/// Minimum Euclidean distance between `a` and `b` over all wrap images.
pub fn wrapped_distance(layout: &HexLayout, a: [f64; 2], b: [f64; 2]) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    layout
        .wrap_images
        .iter()
        .map(|im| (dx + im[0]).hypot(dy + im[1]))
        .fold(f64::INFINITY, f64::min)
}

/// Largest projection of `p` onto the three hexagon face normals. `p` lies
/// inside the hexagon iff this does not exceed the apothem.
fn hex_projection(p: [f64; 2]) -> f64 {
    let half_sqrt3 = 0.75_f64.sqrt();
    let p0 = p[0].abs();
    let p1 = (0.5 * p[0] + half_sqrt3 * p[1]).abs();
    let p2 = (-0.5 * p[0] + half_sqrt3 * p[1]).abs();
    p0.max(p1).max(p2)
}

/// Deterministic 64-point user grid for one cell.
///
/// An 8x8 cell-centered lattice spans the hexagon's bounding box; the lattice
/// points that land outside the hexagon are pulled radially onto a slightly
/// inset boundary, so exactly 64 distinct strictly-interior points remain.
pub fn user_grid(layout: &HexLayout, cell: usize) -> Result<UserGrid, GeometryError> {
    let center = *layout
        .cell_centers
        .get(cell)
        .ok_or(GeometryError::InvalidCell(cell))?;
    let r = layout.cell_radius;
    let apothem = 0.75_f64.sqrt() * r;
    let mut points = Vec::with_capacity(GRID_POINTS_PER_CELL);
    for i in 0..8 {
        for j in 0..8 {
            let x = 2.0 * apothem * ((i as f64 + 0.5) / 8.0 - 0.5);
            let y = 2.0 * r * ((j as f64 + 0.5) / 8.0 - 0.5);
            let mut p = [x, y];
            let proj = hex_projection(p);
            if proj > apothem {
                let t = (1.0 - GRID_INSET) * apothem / proj;
                p = [x * t, y * t];
            }
            points.push([p[0] + center[0], p[1] + center[1]]);
        }
    }
    Ok(UserGrid {
        points,
        owner_cell: cell,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nineteen_cells_at_lattice_spacing() {
        let layout = build_layout(1.0);
        assert_eq!(layout.cell_centers.len(), CELL_COUNT);
        let spacing = 3.0_f64.sqrt();
        let mut min_pair = f64::INFINITY;
        for i in 0..CELL_COUNT {
            for k in (i + 1)..CELL_COUNT {
                let a = layout.cell_centers[i];
                let b = layout.cell_centers[k];
                min_pair = min_pair.min((a[0] - b[0]).hypot(a[1] - b[1]));
            }
        }
        assert!((min_pair - spacing).abs() < 1e-12);
        // Every non-center cell has a neighbor at exactly the lattice spacing.
        for i in 1..CELL_COUNT {
            let a = layout.cell_centers[i];
            let nearest = (0..CELL_COUNT)
                .filter(|&k| k != i)
                .map(|k| {
                    let b = layout.cell_centers[k];
                    (a[0] - b[0]).hypot(a[1] - b[1])
                })
                .fold(f64::INFINITY, f64::min);
            assert!((nearest - spacing).abs() < 1e-12);
        }
    }

    #[test]
    fn center_cell_is_index_zero() {
        let layout = build_layout(1.0);
        assert_eq!(layout.cell_centers[0], [0.0, 0.0]);
        assert_eq!(
            wrapped_distance(&layout, layout.cell_centers[0], layout.cell_centers[0]),
            0.0
        );
    }

    #[test]
    fn wrap_images_are_cluster_translations() {
        let layout = build_layout(1.0);
        assert_eq!(layout.wrap_images.len(), 7);
        assert_eq!(layout.wrap_images[0], [0.0, 0.0]);
        // Shift magnitude for a 19-cell cluster is sqrt(19) * spacing.
        let expected = (19.0_f64 * 3.0).sqrt();
        for im in &layout.wrap_images[1..] {
            assert!((im[0].hypot(im[1]) - expected).abs() < 1e-12);
        }
        // Closed under negation, which makes the metric symmetric.
        for im in &layout.wrap_images {
            let neg = [-im[0], -im[1]];
            assert!(layout
                .wrap_images
                .iter()
                .any(|o| (o[0] - neg[0]).abs() < 1e-12 && (o[1] - neg[1]).abs() < 1e-12));
        }
    }

    #[test]
    fn adjacent_centers_wrap_to_lattice_spacing() {
        let layout = build_layout(1.0);
        let d = wrapped_distance(&layout, layout.cell_centers[0], layout.cell_centers[1]);
        assert!((d - 3.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn antipodal_edge_centers_match_image_scan() {
        let layout = build_layout(1.0);
        // Most distant pair of ring-2 centers by direct distance.
        let (mut a, mut b, mut direct) = ([0.0; 2], [0.0; 2], 0.0);
        for i in 0..CELL_COUNT {
            for k in (i + 1)..CELL_COUNT {
                let (p, q) = (layout.cell_centers[i], layout.cell_centers[k]);
                let d = (p[0] - q[0]).hypot(p[1] - q[1]);
                if d > direct {
                    direct = d;
                    a = p;
                    b = q;
                }
            }
        }
        // Independent scan over the seven images.
        let mut scan = f64::INFINITY;
        for im in &layout.wrap_images {
            let d = (a[0] - b[0] + im[0]).hypot(a[1] - b[1] + im[1]);
            scan = scan.min(d);
        }
        let d = wrapped_distance(&layout, a, b);
        assert_eq!(d, scan);
        assert!(d < direct, "wrap must shorten the longest direct pair");
    }

    #[test]
    fn radius_two_scales_all_wrapped_distances() {
        let one = build_layout(1.0);
        let two = build_layout(2.0);
        for i in 0..CELL_COUNT {
            for k in 0..CELL_COUNT {
                let d1 = wrapped_distance(&one, one.cell_centers[i], one.cell_centers[k]);
                let d2 = wrapped_distance(&two, two.cell_centers[i], two.cell_centers[k]);
                assert!((d2 - 2.0 * d1).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn grid_has_64_interior_points_within_radius() {
        let layout = build_layout(1.0);
        let grid = user_grid(&layout, 0).unwrap();
        assert_eq!(grid.points.len(), GRID_POINTS_PER_CELL);
        let apothem = 0.75_f64.sqrt();
        for p in &grid.points {
            assert!(hex_projection(*p) < apothem, "point outside hexagon: {p:?}");
            assert!(p[0].hypot(p[1]) < 1.0);
        }
    }

    #[test]
    fn grids_translate_and_stay_distinct() {
        let layout = build_layout(1.0);
        let base = user_grid(&layout, 0).unwrap();
        let mut seen: Vec<[u64; 2]> = Vec::new();
        for cell in layout.cells() {
            let grid = user_grid(&layout, cell).unwrap();
            let c = layout.cell_centers[cell];
            for (p, q) in grid.points.iter().zip(&base.points) {
                assert!((p[0] - (q[0] + c[0])).abs() < 1e-12);
                assert!((p[1] - (q[1] + c[1])).abs() < 1e-12);
                seen.push([p[0].to_bits(), p[1].to_bits()]);
            }
        }
        seen.sort_unstable();
        seen.dedup();
        assert_eq!(seen.len(), CELL_COUNT * GRID_POINTS_PER_CELL);
    }

    #[test]
    fn serving_cell_is_nearest_under_wrap() {
        let layout = build_layout(1.0);
        for cell in layout.cells() {
            let grid = user_grid(&layout, cell).unwrap();
            for p in &grid.points {
                let own = wrapped_distance(&layout, *p, layout.cell_centers[cell]);
                for other in layout.cells() {
                    if other != cell {
                        let d = wrapped_distance(&layout, *p, layout.cell_centers[other]);
                        assert!(own < d, "point {p:?} closer to cell {other} than {cell}");
                    }
                }
            }
        }
    }

    #[test]
    fn invalid_cell_is_rejected() {
        let layout = build_layout(1.0);
        assert_eq!(
            user_grid(&layout, CELL_COUNT).unwrap_err(),
            GeometryError::InvalidCell(CELL_COUNT)
        );
    }
}
