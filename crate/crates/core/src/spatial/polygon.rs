use std::fmt::Write as _;

use super::Point;

const EDGE_EPS: f64 = 1e-7;

/// Planar polygon in projected meters. Rings are stored open (the first
/// vertex is not repeated at the end).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Polygon {
    pub exterior: Vec<Point>,
    pub holes: Vec<Vec<Point>>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub min: Point,
    pub max: Point,
}

impl Rect {
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.min.x - EDGE_EPS
            && p.x <= self.max.x + EDGE_EPS
            && p.y >= self.min.y - EDGE_EPS
            && p.y <= self.max.y + EDGE_EPS
    }
}

fn signed_area(ring: &[Point]) -> f64 {
    let n = ring.len();
    if n < 3 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        s += a.x * b.y - b.x * a.y;
    }
    s / 2.0
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    if len2 == 0.0 {
        return p.dist(a) <= EDGE_EPS;
    }
    let t = ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2;
    let t = t.clamp(0.0, 1.0);
    p.dist(Point::new(a.x + t * dx, a.y + t * dy)) <= EDGE_EPS
}

fn ring_on_boundary(ring: &[Point], p: Point) -> bool {
    let n = ring.len();
    (0..n).any(|i| on_segment(p, ring[i], ring[(i + 1) % n]))
}

/// Even-odd crossing test; the boundary itself is not handled here.
fn ring_crossings(ring: &[Point], p: Point) -> bool {
    let n = ring.len();
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (ring[i], ring[j]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
            if p.x < x {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn segments_cross(a: Point, b: Point, c: Point, d: Point) -> bool {
    let orient = |p: Point, q: Point, r: Point| (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

impl Polygon {
    pub fn new(exterior: Vec<Point>) -> Self {
        Polygon {
            exterior,
            holes: Vec::new(),
        }
    }

    /// Regular `n`-gon inscribed in a circle.
    pub fn circle(center: Point, radius: f64, n: usize) -> Self {
        let ring = (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / n as f64;
                Point::new(center.x + radius * t.cos(), center.y + radius * t.sin())
            })
            .collect();
        Polygon::new(ring)
    }

    pub fn rect(min: Point, max: Point) -> Self {
        Polygon::new(vec![min, Point::new(max.x, min.y), max, Point::new(min.x, max.y)])
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.exterior).abs() - self.holes.iter().map(|h| signed_area(h).abs()).sum::<f64>()
    }

    pub fn is_empty(&self) -> bool {
        self.exterior.len() < 3 || self.area() <= 0.0
    }

    pub fn bounds(&self) -> Rect {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.exterior {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        Rect { min, max }
    }

    /// Point containment with points on an edge counted as inside.
    pub fn contains(&self, p: Point) -> bool {
        if self.exterior.len() < 3 {
            return false;
        }
        if ring_on_boundary(&self.exterior, p) || self.holes.iter().any(|h| ring_on_boundary(h, p)) {
            return true;
        }
        ring_crossings(&self.exterior, p) && !self.holes.iter().any(|h| ring_crossings(h, p))
    }

    /// True when no two non-adjacent edges of any ring properly intersect.
    pub fn is_simple(&self) -> bool {
        std::iter::once(&self.exterior).chain(&self.holes).all(|ring| {
            let n = ring.len();
            if n < 3 {
                return false;
            }
            for i in 0..n {
                for j in i + 2..n {
                    if i == 0 && j == n - 1 {
                        continue;
                    }
                    if segments_cross(ring[i], ring[(i + 1) % n], ring[j], ring[(j + 1) % n]) {
                        return false;
                    }
                }
            }
            true
        })
    }

    /// Keeps the part of the exterior ring with `normal · p <= offset`
    /// (Sutherland–Hodgman against one half-plane).
    pub fn clip_half_plane(&self, normal: Point, offset: f64) -> Polygon {
        let side = |p: Point| normal.x * p.x + normal.y * p.y - offset;
        let ring = &self.exterior;
        let n = ring.len();
        let mut out = Vec::with_capacity(n + 2);
        for i in 0..n {
            let cur = ring[i];
            let next = ring[(i + 1) % n];
            let (sc, sn) = (side(cur), side(next));
            if sc <= 0.0 {
                out.push(cur);
            }
            if (sc < 0.0 && sn > 0.0) || (sc > 0.0 && sn < 0.0) {
                let t = sc / (sc - sn);
                out.push(Point::new(cur.x + t * (next.x - cur.x), cur.y + t * (next.y - cur.y)));
            }
        }
        Polygon::new(out)
    }

    pub fn to_wkt(&self) -> String {
        let mut s = String::from("POLYGON (");
        for (k, ring) in std::iter::once(&self.exterior).chain(&self.holes).enumerate() {
            if k > 0 {
                s.push_str(", ");
            }
            s.push('(');
            for (i, p) in ring.iter().chain(ring.first()).enumerate() {
                if i > 0 {
                    s.push_str(", ");
                }
                let _ = write!(s, "{:.3} {:.3}", p.x, p.y);
            }
            s.push(')');
        }
        s.push(')');
        s
    }
}
