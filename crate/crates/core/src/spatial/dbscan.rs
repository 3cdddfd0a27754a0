//! Density-based clustering over planar points with a uniform-grid range
//! query. With `min_points = 1` every point is a core point and the clusters
//! are the connected components of the `eps`-neighbourhood graph.

use std::collections::HashMap;

use super::Point;

struct Grid {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl Grid {
    fn new(points: &[Point], cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(Self::key(cell, *p)).or_default().push(i);
        }
        Grid { cell, buckets }
    }

    fn key(cell: f64, p: Point) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    fn neighbours(&self, points: &[Point], idx: usize, eps: f64, out: &mut Vec<usize>) {
        out.clear();
        let p = points[idx];
        let (cx, cy) = Self::key(self.cell, p);
        let eps2 = eps * eps;
        for gx in cx - 1..=cx + 1 {
            for gy in cy - 1..=cy + 1 {
                if let Some(bucket) = self.buckets.get(&(gx, gy)) {
                    out.extend(bucket.iter().copied().filter(|&j| points[j].dist2(p) <= eps2));
                }
            }
        }
    }
}

/// Returns one label per point: `Some(cluster)` or `None` for noise.
/// Cluster numbers follow the order in which clusters were discovered.
pub fn dbscan(points: &[Point], eps: f64, min_points: usize) -> Vec<Option<usize>> {
    assert!(eps > 0.0, "eps must be positive");
    let grid = Grid::new(points, eps);
    let mut labels: Vec<Option<usize>> = vec![None; points.len()];
    let mut visited = vec![false; points.len()];
    let mut nbrs = Vec::new();
    let mut queue = Vec::new();
    let mut next = 0;

    for start in 0..points.len() {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        grid.neighbours(points, start, eps, &mut nbrs);
        if nbrs.len() < min_points {
            continue;
        }
        let cluster = next;
        next += 1;
        labels[start] = Some(cluster);
        queue.clear();
        queue.extend(nbrs.iter().copied());
        while let Some(q) = queue.pop() {
            if labels[q].is_none() {
                labels[q] = Some(cluster);
            }
            if visited[q] {
                continue;
            }
            visited[q] = true;
            grid.neighbours(points, q, eps, &mut nbrs);
            if nbrs.len() >= min_points {
                queue.extend(nbrs.iter().copied().filter(|&j| !visited[j] || labels[j].is_none()));
            }
        }
    }
    labels
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    /// Canonical form of a partition: sorted list of sorted member lists.
    fn partition(labels: &[Option<usize>]) -> Vec<Vec<usize>> {
        let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
        for (i, l) in labels.iter().enumerate() {
            groups.entry(l.expect("no noise with min_points=1")).or_default().push(i);
        }
        let mut out: Vec<_> = groups.into_values().collect();
        out.sort();
        out
    }

    /// Brute-force connected components of the eps graph.
    fn components(points: &[Point], eps: f64) -> Vec<Vec<usize>> {
        let n = points.len();
        let mut comp: Vec<usize> = (0..n).collect();
        fn find(c: &mut [usize], i: usize) -> usize {
            if c[i] != i {
                let r = find(c, c[i]);
                c[i] = r;
            }
            c[i]
        }
        for i in 0..n {
            for j in 0..n {
                if points[i].dist(points[j]) <= eps {
                    let (a, b) = (find(&mut comp, i), find(&mut comp, j));
                    comp[a] = b;
                }
            }
        }
        let labels: Vec<Option<usize>> = (0..n).map(|i| Some(find(&mut comp, i))).collect();
        partition(&labels)
    }

    #[test]
    fn noise_with_higher_density_requirement() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(2.0, 0.0), Point::new(50.0, 0.0)];
        let labels = dbscan(&pts, 1.5, 3);
        assert_eq!(labels[0], labels[1]);
        assert_eq!(labels[1], labels[2]);
        assert!(labels[0].is_some());
        assert_eq!(labels[3], None);
    }

    proptest! {
        #[test]
        fn min_one_equals_connected_components(
            raw in prop::collection::vec((0.0f64..2000.0, 0.0f64..2000.0), 1..60),
            eps in 10.0f64..400.0,
        ) {
            let pts: Vec<Point> = raw.iter().map(|&(x, y)| Point::new(x, y)).collect();
            prop_assert_eq!(partition(&dbscan(&pts, eps, 1)), components(&pts, eps));
        }

        #[test]
        fn cluster_count_non_increasing_in_eps(
            raw in prop::collection::vec((0.0f64..2000.0, 0.0f64..2000.0), 1..60),
            a in 10.0f64..300.0,
            b in 10.0f64..300.0,
        ) {
            let pts: Vec<Point> = raw.iter().map(|&(x, y)| Point::new(x, y)).collect();
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(partition(&dbscan(&pts, hi, 1)).len() <= partition(&dbscan(&pts, lo, 1)).len());
        }
    }
}
