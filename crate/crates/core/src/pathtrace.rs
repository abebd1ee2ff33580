//! Straight Tx-Rx paths through a region grid.
//!
//! [`cell_crossings`] walks the segment cell by cell (Amanatides-Woo style)
//! and yields the exact parametric interval spent in each cell.
//! [`trace_path`] folds those into maximal same-type runs, drops the first
//! `d0` meters, and returns the [`PathMatrix`]. [`like_term_coefficients`]
//! then collapses the ordered runs into one weight per region type.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::raster::RegionGrid;

/// The portion `[t_enter, t_exit]` of a segment (parametrized over `[0, 1]`)
/// lying in cell `(col, row)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellCrossing {
    pub col: usize,
    pub row: usize,
    pub t_enter: f64,
    pub t_exit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub type_id: u16,
    /// Meters.
    pub length: f64,
}

/// Regions crossed by one Tx-Rx line, in order from the transmitter.
///
/// The first `d0` meters form the close-in region, recorded only by its type
/// (`tx_type`). `segments` are maximal same-type runs after it, so
/// `d0 + sum(lengths) == total_distance`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathMatrix {
    pub d0: f64,
    pub tx_type: u16,
    pub segments: Vec<Segment>,
    pub total_distance: f64,
}

impl PathMatrix {
    /// Number of regions intersected beyond the close-in region.
    pub fn num_regions(&self) -> usize {
        self.segments.len()
    }

    /// Total length per region type, close-in region excluded.
    pub fn type_lengths(&self, num_types: usize) -> Vec<f64> {
        let mut out = vec![0.0; num_types];
        for s in &self.segments {
            out[usize::from(s.type_id)] += s.length;
        }
        out
    }
}

/// Per-type weights `D_i` of the path loss exponents for one path.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    /// dB per unit exponent, indexed by region type.
    pub coeffs: Vec<f64>,
    pub total_distance: f64,
    pub d0: f64,
}

impl CoefficientVector {
    pub fn num_types(&self) -> usize {
        self.coeffs.len()
    }

    /// `10 log10(total / d0)`, which the coefficients sum to.
    pub fn log_distance_db(&self) -> f64 {
        10.0 * (self.total_distance / self.d0).log10()
    }
}

/// Cells visited by the segment `a -> b`, with entry/exit parameters.
///
/// Cells crossed for zero length are skipped. Passing exactly through a
/// corner advances both axes at once, so the diagonal neighbours get nothing.
pub fn cell_crossings(grid: &RegionGrid, a: Point, b: Point) -> Result<Vec<CellCrossing>> {
    let (mut col, mut row) = grid.cell_of(a)?;
    grid.cell_of(b)?;
    let mpp = grid.meters_per_pixel();
    let origin = [a.x / mpp, a.y / mpp];
    let dir = [(b.x - a.x) / mpp, (b.y - a.y) / mpp];

    // Parameter at which the line reaches the next boundary along an axis;
    // computed from the boundary index each time so no error accumulates.
    let boundary_t = |axis: usize, cell: usize| -> f64 {
        let d = dir[axis];
        if d > 0.0 {
            (cell as f64 + 1.0 - origin[axis]) / d
        } else if d < 0.0 {
            (cell as f64 - origin[axis]) / d
        } else {
            f64::INFINITY
        }
    };
    let step = |axis: usize, cell: usize| -> Option<usize> {
        if dir[axis] > 0.0 {
            Some(cell + 1)
        } else {
            cell.checked_sub(1)
        }
    };

    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        let tx = boundary_t(0, col);
        let ty = boundary_t(1, row);
        let t_next = tx.min(ty).min(1.0);
        if t_next > t {
            out.push(CellCrossing {
                col,
                row,
                t_enter: t,
                t_exit: t_next,
            });
            t = t_next;
        }
        if t_next >= 1.0 {
            break;
        }
        let next_col = if tx <= ty { step(0, col) } else { Some(col) };
        let next_row = if ty <= tx { step(1, row) } else { Some(row) };
        match (next_col, next_row) {
            (Some(c), Some(r)) if c < grid.width() && r < grid.height() => {
                col = c;
                row = r;
            }
            // Rounding pushed us past the map edge just before b.
            _ => {
                match out.last_mut() {
                    Some(last) => last.t_exit = 1.0,
                    None => out.push(CellCrossing {
                        col,
                        row,
                        t_enter: 0.0,
                        t_exit: 1.0,
                    }),
                }
                break;
            }
        }
    }
    Ok(out)
}

/// Builds the path matrix for the straight line `tx -> rx`.
pub fn trace_path(grid: &RegionGrid, tx: Point, rx: Point, d0: f64) -> Result<PathMatrix> {
    if !(d0.is_finite() && d0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "close-in distance must be positive, got {d0}"
        )));
    }
    let tx_type = grid.label_at(tx)?;
    grid.cell_of(rx)?;
    let total = tx.distance(&rx);
    if total == 0.0 {
        return Err(Error::InvalidInput("transmitter and receiver coincide".into()));
    }
    if d0 >= total {
        return Err(Error::WithinCloseIn {
            distance: total,
            d0,
        });
    }

    // Maximal same-type runs as (type, t_start, t_end).
    let mut runs: Vec<(u16, f64, f64)> = Vec::new();
    for c in cell_crossings(grid, tx, rx)? {
        let label = grid.label(c.col, c.row);
        match runs.last_mut() {
            Some(run) if run.0 == label => run.2 = c.t_exit,
            _ => runs.push((label, c.t_enter, c.t_exit)),
        }
    }

    let mut segments = Vec::with_capacity(runs.len());
    let last = runs.len() - 1;
    for (i, &(type_id, t0, t1)) in runs.iter().enumerate() {
        let start = (t0 * total).max(d0);
        let end = if i == last { total } else { t1 * total };
        if end > start {
            segments.push(Segment {
                type_id,
                length: end - start,
            });
        }
    }
    Ok(PathMatrix {
        d0,
        tx_type,
        segments,
        total_distance: total,
    })
}

/// Combines like terms: each segment `a` adds `10 log10(cum_a / cum_{a-1})`
/// to its type, where `cum_a` is the distance from Tx to the end of segment
/// `a` and `cum_0 = d0`.
pub fn like_term_coefficients(path: &PathMatrix, num_types: usize) -> Result<CoefficientVector> {
    if !(path.d0.is_finite() && path.d0 > 0.0) {
        return Err(Error::InvalidInput(format!(
            "close-in distance must be positive, got {}",
            path.d0
        )));
    }
    let mut coeffs = vec![0.0; num_types];
    let mut cum = path.d0;
    for s in &path.segments {
        let idx = usize::from(s.type_id);
        if idx >= num_types {
            return Err(Error::InvalidInput(format!(
                "segment type {idx} not below region type count {num_types}"
            )));
        }
        let next = cum + s.length;
        coeffs[idx] += 10.0 * (next / cum).log10();
        cum = next;
    }
    Ok(CoefficientVector {
        coeffs,
        total_distance: path.total_distance,
        d0: path.d0,
    })
}

/// `like_term_coefficients(trace_path(..))` against the grid's type count.
pub fn path_coefficients(
    grid: &RegionGrid,
    tx: Point,
    rx: Point,
    d0: f64,
) -> Result<CoefficientVector> {
    like_term_coefficients(&trace_path(grid, tx, rx, d0)?, grid.num_types())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn split_grid() -> RegionGrid {
        // x < 5 m is type 0, the rest type 1
        let labels = (0..12 * 3).map(|i| u16::from(i % 12 >= 5)).collect();
        RegionGrid::new(12, 3, 1.0, 2, labels).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1.0)
    }

    #[test]
    fn uniform_grid_single_segment() {
        let grid = RegionGrid::uniform(200, 200, 1.0).unwrap();
        let p = trace_path(&grid, Point::new(10.0, 10.0), Point::new(70.0, 90.0), 1.0).unwrap();
        assert_eq!(p.segments.len(), 1);
        assert!(close(p.segments[0].length, 99.0));
        assert!(close(p.total_distance, 100.0));
    }

    #[test]
    fn axis_aligned_boundary() {
        let p = trace_path(&split_grid(), Point::new(0.5, 0.5), Point::new(10.5, 0.5), 0.5).unwrap();
        assert_eq!(p.tx_type, 0);
        assert_eq!(p.segments.len(), 2);
        assert_eq!(p.segments[0].type_id, 0);
        assert!(close(p.segments[0].length, 4.0));
        assert_eq!(p.segments[1].type_id, 1);
        assert!(close(p.segments[1].length, 5.5));
        assert!(close(p.total_distance, 10.0));
    }

    #[test]
    fn close_in_straddling_boundary_keeps_remainder() {
        let p = trace_path(&split_grid(), Point::new(0.5, 0.5), Point::new(10.5, 0.5), 6.0).unwrap();
        assert_eq!(p.segments.len(), 1);
        assert_eq!(p.segments[0].type_id, 1);
        assert!(close(p.segments[0].length, 4.0));
    }

    #[test]
    fn leftward_trace_mirrors_rightward() {
        let grid = split_grid();
        let p = trace_path(&grid, Point::new(10.5, 1.5), Point::new(0.5, 1.5), 0.5).unwrap();
        assert_eq!(p.tx_type, 1);
        assert_eq!(p.segments.len(), 2);
        assert!(close(p.segments[0].length, 5.0));
        assert!(close(p.segments[1].length, 4.5));
    }

    #[test]
    fn exact_corner_passes_diagonally() {
        let labels = vec![0, 1, 1, 0];
        let grid = RegionGrid::new(2, 2, 1.0, 2, labels).unwrap();
        let cells = cell_crossings(&grid, Point::new(0.5, 0.5), Point::new(1.5, 1.5)).unwrap();
        assert_eq!(cells.len(), 2);
        assert_eq!((cells[0].col, cells[0].row), (0, 0));
        assert_eq!((cells[1].col, cells[1].row), (1, 1));
        let p = trace_path(&grid, Point::new(0.5, 0.5), Point::new(1.5, 1.5), 0.1).unwrap();
        assert_eq!(p.segments.len(), 1);
        assert!(close(p.segments[0].length + 0.1, 2f64.sqrt()));
    }

    #[test]
    fn start_on_grid_line_moving_backwards() {
        let grid = split_grid();
        // x = 5 belongs to cell 5 (type 1), but the line leaves it immediately
        let cells = cell_crossings(&grid, Point::new(5.0, 0.5), Point::new(1.0, 0.5)).unwrap();
        assert_eq!(cells[0].col, 4);
        let p = trace_path(&grid, Point::new(5.0, 0.5), Point::new(1.0, 0.5), 1.0).unwrap();
        assert_eq!(p.tx_type, 1);
        assert_eq!(p.segments, vec![Segment { type_id: 0, length: 3.0 }]);
    }

    #[test]
    fn precondition_errors() {
        let grid = split_grid();
        let a = Point::new(0.5, 0.5);
        assert!(matches!(
            trace_path(&grid, a, Point::new(1.0, 0.5), 0.5),
            Err(Error::WithinCloseIn { .. })
        ));
        assert!(matches!(
            trace_path(&grid, a, Point::new(0.7, 0.5), 0.5),
            Err(Error::WithinCloseIn { .. })
        ));
        assert!(trace_path(&grid, a, a, 0.5).is_err());
        assert!(matches!(
            trace_path(&grid, a, Point::new(12.0, 0.5), 0.5),
            Err(Error::OutOfBounds { .. })
        ));
        assert!(trace_path(&grid, a, Point::new(5.0, 0.5), 0.0).is_err());
    }

    fn path(d0: f64, segs: &[(u16, f64)]) -> PathMatrix {
        let segments: Vec<Segment> = segs
            .iter()
            .map(|&(type_id, length)| Segment { type_id, length })
            .collect();
        let total = d0 + segments.iter().map(|s| s.length).sum::<f64>();
        PathMatrix {
            d0,
            tx_type: segs[0].0,
            segments,
            total_distance: total,
        }
    }

    #[test]
    fn coefficient_examples() {
        let c = like_term_coefficients(&path(1.0, &[(0, 99.0)]), 1).unwrap();
        assert!(close(c.coeffs[0], 20.0));

        let c = like_term_coefficients(&path(1.0, &[(0, 9.0), (1, 90.0)]), 3).unwrap();
        assert!(close(c.coeffs[0], 10.0));
        assert!(close(c.coeffs[1], 10.0));
        assert_eq!(c.coeffs[2], 0.0);

        // 50-digit reference values
        let c = like_term_coefficients(&path(1.0, &[(0, 9.0), (1, 40.0), (0, 50.0)]), 2).unwrap();
        assert!(close(c.coeffs[0], 13.010_299_956_639_812));
        assert!(close(c.coeffs[1], 6.989_700_043_360_188));
        assert!(close(c.coeffs.iter().sum(), 20.0));
    }

    #[test]
    fn coefficient_errors() {
        assert!(like_term_coefficients(&path(1.0, &[(3, 9.0)]), 3).is_err());
        let mut p = path(1.0, &[(0, 9.0)]);
        p.d0 = 0.0;
        assert!(like_term_coefficients(&p, 1).is_err());
    }

    #[test]
    fn subdividing_a_segment_changes_nothing() {
        let whole = like_term_coefficients(&path(2.0, &[(0, 30.0), (1, 12.0)]), 2).unwrap();
        let split =
            like_term_coefficients(&path(2.0, &[(0, 10.0), (0, 20.0), (1, 5.0), (1, 7.0)]), 2)
                .unwrap();
        for (a, b) in whole.coeffs.iter().zip(&split.coeffs) {
            assert!(close(*a, *b));
        }
    }
}
