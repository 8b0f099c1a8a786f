use crate::geometry::Airfoil;

/// Points with consecutive duplicates removed (including a last point equal
/// to the first).
pub(crate) fn distinct_loop(points: &[(f64, f64)]) -> Vec<(f64, f64)> {
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(points.len());
    for &p in points {
        if out.last().is_none_or(|q| !coincident(*q, p)) {
            out.push(p);
        }
    }
    while out.len() > 1 && coincident(out[0], out[out.len() - 1]) {
        out.pop();
    }
    out
}

fn coincident(a: (f64, f64), b: (f64, f64)) -> bool {
    (a.0 - b.0).abs() <= 1e-12 && (a.1 - b.1).abs() <= 1e-12
}

fn cross(o: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - o.0) * (b.1 - o.1) - (a.1 - o.1) * (b.0 - o.0)
}

/// Strict crossing: each segment's endpoints lie strictly on opposite sides
/// of the other's supporting line.
fn properly_intersect(p1: (f64, f64), p2: (f64, f64), q1: (f64, f64), q2: (f64, f64)) -> bool {
    let d1 = cross(q1, q2, p1);
    let d2 = cross(q1, q2, p2);
    let d3 = cross(p1, p2, q1);
    let d4 = cross(p1, p2, q2);
    d1 * d2 < 0.0 && d3 * d4 < 0.0
}

/// Whether any two non-adjacent edges of the closed polygon cross.
pub fn self_intersects(airfoil: &Airfoil) -> bool {
    polygon_self_intersects(&airfoil.points())
}

pub(crate) fn polygon_self_intersects(points: &[(f64, f64)]) -> bool {
    let pts = distinct_loop(points);
    let m = pts.len();
    if m < 4 {
        return false;
    }
    let edge = |i: usize| (pts[i], pts[(i + 1) % m]);
    for i in 0..m {
        let (a1, a2) = edge(i);
        let (lo_x, hi_x) = (a1.0.min(a2.0), a1.0.max(a2.0));
        let (lo_y, hi_y) = (a1.1.min(a2.1), a1.1.max(a2.1));
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            let (b1, b2) = edge(j);
            if b1.0.max(b2.0) < lo_x
                || b1.0.min(b2.0) > hi_x
                || b1.1.max(b2.1) < lo_y
                || b1.1.min(b2.1) > hi_y
            {
                continue;
            }
            if properly_intersect(a1, a2, b1, b2) {
                return true;
            }
        }
    }
    false
}
