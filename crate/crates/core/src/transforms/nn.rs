//! Exact nearest-neighbor search over a static point set using a uniform grid.

use nalgebra::Point3;

use crate::geometry::Aabb;

#[derive(Debug, Clone)]
pub struct PointGrid {
    points: Vec<Point3<f64>>,
    origin: Point3<f64>,
    cell: f64,
    dims: [i64; 3],
    /// CSR layout: points of cell `c` are `items[starts[c]..starts[c + 1]]`.
    starts: Vec<usize>,
    items: Vec<usize>,
}

impl PointGrid {
    /// Returns `None` for an empty point set.
    pub fn new(points: Vec<Point3<f64>>) -> Option<Self> {
        let bbox = Aabb::from_points(&points)?;
        let n = points.len() as f64;
        let extent = bbox.extent().max();
        let cell = if extent > 0.0 { (extent / n.cbrt()).max(extent * 1e-6) } else { 1.0 };
        let dims = [0, 1, 2].map(|k| ((bbox.extent()[k] / cell).floor() as i64 + 1).max(1));
        let mut grid = Self {
            points,
            origin: bbox.min,
            cell,
            dims,
            starts: Vec::new(),
            items: Vec::new(),
        };
        let ncells = (dims[0] * dims[1] * dims[2]) as usize;
        let cell_of: Vec<usize> = grid.points.iter().map(|p| grid.flat(grid.cell_coords(p))).collect();
        let mut counts = vec![0usize; ncells + 1];
        for &c in &cell_of {
            counts[c + 1] += 1;
        }
        for c in 0..ncells {
            counts[c + 1] += counts[c];
        }
        let mut cursor = counts.clone();
        let mut items = vec![0usize; grid.points.len()];
        for (i, &c) in cell_of.iter().enumerate() {
            items[cursor[c]] = i;
            cursor[c] += 1;
        }
        grid.starts = counts;
        grid.items = items;
        Some(grid)
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    fn cell_coords(&self, p: &Point3<f64>) -> [i64; 3] {
        [0, 1, 2].map(|k| ((p[k] - self.origin[k]) / self.cell).floor() as i64)
    }

    fn clamp_coords(&self, c: [i64; 3]) -> [i64; 3] {
        [0, 1, 2].map(|k| c[k].clamp(0, self.dims[k] - 1))
    }

    fn flat(&self, c: [i64; 3]) -> usize {
        let c = self.clamp_coords(c);
        (c[0] + self.dims[0] * (c[1] + self.dims[1] * c[2])) as usize
    }

    /// Index and squared distance of the nearest stored point. Equal
    /// distances resolve to the lower index.
    pub fn nearest(&self, p: &Point3<f64>) -> (usize, f64) {
        let home = self.cell_coords(p);
        // Rings closer than the grid itself hold no cells.
        let start_ring = (0..3)
            .map(|k| {
                if home[k] < 0 {
                    -home[k]
                } else if home[k] >= self.dims[k] {
                    home[k] - self.dims[k] + 1
                } else {
                    0
                }
            })
            .max()
            .unwrap_or(0);
        let max_ring = (0..3)
            .map(|k| (home[k]).abs().max((self.dims[k] - 1 - home[k]).abs()))
            .max()
            .unwrap_or(0);

        let mut best = (usize::MAX, f64::INFINITY);
        for ring in start_ring..=max_ring {
            self.visit_ring(home, ring, |i| {
                let d2 = (self.points[i] - p).norm_squared();
                if d2 < best.1 || (d2 == best.1 && i < best.0) {
                    best = (i, d2);
                }
            });
            // Anything in later rings is at least `ring` whole cells away.
            let bound = ring as f64 * self.cell;
            if best.0 != usize::MAX && best.1 <= bound * bound {
                break;
            }
        }
        best
    }

    fn visit_ring(&self, home: [i64; 3], ring: i64, mut f: impl FnMut(usize)) {
        let lo = [0, 1, 2].map(|k| (home[k] - ring).max(0));
        let hi = [0, 1, 2].map(|k| (home[k] + ring).min(self.dims[k] - 1));
        for z in lo[2]..=hi[2] {
            for y in lo[1]..=hi[1] {
                for x in lo[0]..=hi[0] {
                    let on_shell = (x - home[0]).abs() == ring
                        || (y - home[1]).abs() == ring
                        || (z - home[2]).abs() == ring;
                    if !on_shell {
                        continue;
                    }
                    let c = (x + self.dims[0] * (y + self.dims[1] * z)) as usize;
                    for &i in &self.items[self.starts[c]..self.starts[c + 1]] {
                        f(i);
                    }
                }
            }
        }
    }
}
