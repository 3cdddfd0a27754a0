//! Voronoi cells clipped to a boundary polygon.
//!
//! Each cell is built independently by intersecting the boundary with the
//! half-planes `|p - s_i| <= |p - s_j|`, visiting other sites in increasing
//! distance and stopping once no remaining site can cut the current cell.
//! The boundary must be convex for the cells to tile it exactly.

use rayon::prelude::*;

use super::{Point, Polygon};
use crate::error::{Error, Result};

const DUPLICATE_EPS: f64 = 1e-6;

pub fn voronoi_cells(sites: &[Point], boundary: &Polygon) -> Result<Vec<Polygon>> {
    if sites.is_empty() {
        return Err(Error::InvalidArgument("Voronoi needs at least one site".into()));
    }
    if boundary.is_empty() || !boundary.holes.is_empty() {
        return Err(Error::Geometry("boundary must be a non-empty polygon without holes".into()));
    }
    let labels = super::dbscan(sites, DUPLICATE_EPS, 1);
    let mut seen = vec![false; sites.len()];
    for (i, l) in labels.iter().enumerate() {
        let l = l.expect("min_points = 1 leaves no noise");
        if std::mem::replace(&mut seen[l], true) {
            return Err(Error::DuplicateSite { x: sites[i].x, y: sites[i].y });
        }
    }
    if let Some(s) = sites.iter().find(|s| !boundary.contains(**s)) {
        return Err(Error::Geometry(format!("site ({:.1}, {:.1}) lies outside the boundary", s.x, s.y)));
    }

    Ok((0..sites.len()).into_par_iter().map(|i| cell(i, sites, boundary)).collect())
}

fn cell(i: usize, sites: &[Point], boundary: &Polygon) -> Polygon {
    let s = sites[i];
    let mut others: Vec<(f64, usize)> = sites
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(j, p)| (p.dist2(s), j))
        .collect();
    others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut poly = boundary.clone();
    let mut reach2 = max_dist2(&poly, s);
    for (d2, j) in others {
        // a bisector lies at half the site distance; beyond 2*reach it misses the cell
        if d2 > 4.0 * reach2 {
            break;
        }
        let t = sites[j];
        let normal = Point::new(t.x - s.x, t.y - s.y);
        let offset = (t.x * t.x + t.y * t.y - s.x * s.x - s.y * s.y) / 2.0;
        poly = poly.clip_half_plane(normal, offset);
        if poly.exterior.is_empty() {
            break;
        }
        reach2 = max_dist2(&poly, s);
    }
    poly
}

fn max_dist2(poly: &Polygon, s: Point) -> f64 {
    poly.exterior.iter().map(|p| p.dist2(s)).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn square() -> Polygon {
        Polygon::rect(Point::new(-1000.0, -1000.0), Point::new(1000.0, 1000.0))
    }

    #[test]
    fn single_site_gets_whole_boundary() {
        let cells = voronoi_cells(&[Point::new(10.0, 20.0)], &square()).unwrap();
        assert_eq!(cells[0].area(), square().area());
    }

    #[test]
    fn two_sites_split_by_bisector() {
        let cells = voronoi_cells(&[Point::new(-500.0, 0.0), Point::new(500.0, 0.0)], &square()).unwrap();
        assert!((cells[0].area() - 2_000_000.0).abs() < 1e-6);
        let b = cells[0].bounds();
        assert!((b.max.x - 0.0).abs() < 1e-9);
        assert!(cells[1].contains(Point::new(0.0, 300.0)));
        assert!(!cells[1].contains(Point::new(-1.0, 300.0)));
    }

    #[test]
    fn duplicate_sites_rejected() {
        let err = voronoi_cells(&[Point::new(1.0, 1.0), Point::new(1.0, 1.0)], &square()).unwrap_err();
        assert!(matches!(err, Error::DuplicateSite { .. }));
    }

    #[test]
    fn site_outside_boundary_rejected() {
        assert!(voronoi_cells(&[Point::new(5000.0, 0.0)], &square()).is_err());
    }

    #[test]
    fn random_sites_own_their_cells_and_tile_the_disc() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let boundary = Polygon::circle(Point::default(), 5000.0, 96);
        let sites: Vec<Point> = (0..50)
            .map(|_| loop {
                let p = Point::new(rng.random_range(-5000.0..5000.0), rng.random_range(-5000.0..5000.0));
                if boundary.contains(p) {
                    break p;
                }
            })
            .collect();
        let cells = voronoi_cells(&sites, &boundary).unwrap();
        for (s, c) in sites.iter().zip(&cells) {
            assert!(c.contains(*s));
        }
        let total: f64 = cells.iter().map(Polygon::area).sum();
        assert!((total - boundary.area()).abs() / boundary.area() < 1e-9);
    }
}
