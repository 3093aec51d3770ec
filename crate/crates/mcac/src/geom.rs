//! Plane-geometry helpers for closed polylines: area, resampling, Hausdorff
//! distance, point-in-polygon, and signed distance fields.

pub type Point = [f64; 2];

/// Signed area by the shoelace formula (positive for counterclockwise).
pub fn signed_area(pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut s = 0.0;
    for i in 0..n {
        let [x0, y0] = pts[i];
        let [x1, y1] = pts[(i + 1) % n];
        s += x0 * y1 - x1 * y0;
    }
    0.5 * s
}

pub fn polygon_area(pts: &[Point]) -> f64 {
    signed_area(pts).abs()
}

pub fn polyline_length(pts: &[Point]) -> f64 {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let [x0, y0] = pts[i];
            let [x1, y1] = pts[(i + 1) % n];
            ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt()
        })
        .sum()
}

/// Resample a closed polyline to `n` points equally spaced in arc length.
pub fn resample_closed(pts: &[Point], n: usize) -> Vec<Point> {
    assert!(pts.len() >= 3 && n >= 3);
    let m = pts.len();
    let mut cum = Vec::with_capacity(m + 1);
    cum.push(0.0);
    for i in 0..m {
        let [x0, y0] = pts[i];
        let [x1, y1] = pts[(i + 1) % m];
        let d = ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
        cum.push(cum[i] + d);
    }
    let total = cum[m];
    let mut out = Vec::with_capacity(n);
    let mut seg = 0usize;
    for k in 0..n {
        let target = total * k as f64 / n as f64;
        while seg + 1 < m && cum[seg + 1] < target {
            seg += 1;
        }
        let d0 = cum[seg];
        let d1 = cum[seg + 1];
        let t = if d1 > d0 { (target - d0) / (d1 - d0) } else { 0.0 };
        let [x0, y0] = pts[seg];
        let [x1, y1] = pts[(seg + 1) % m];
        out.push([x0 + t * (x1 - x0), y0 + t * (y1 - y0)]);
    }
    out
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// One-sided Hausdorff: max over `a` of the distance to point set `b`.
fn hausdorff_one_sided(a: &[Point], b: &[Point]) -> f64 {
    let mut worst = 0.0f64;
    for &p in a {
        let mut best = f64::INFINITY;
        for &q in b {
            let d = dist2(p, q);
            if d < best {
                best = d;
            }
        }
        if best > worst {
            worst = best;
        }
    }
    worst.sqrt()
}

/// Symmetric Hausdorff distance between two point sets.
pub fn hausdorff(a: &[Point], b: &[Point]) -> f64 {
    hausdorff_one_sided(a, b).max(hausdorff_one_sided(b, a))
}

/// Even-odd point-in-polygon test for a closed polyline.
pub fn point_in_polygon(p: Point, pts: &[Point]) -> bool {
    let n = pts.len();
    let mut inside = false;
    let [px, py] = p;
    for i in 0..n {
        let [x0, y0] = pts[i];
        let [x1, y1] = pts[(i + 1) % n];
        if (y0 > py) != (y1 > py) {
            let xcross = x0 + (py - y0) / (y1 - y0) * (x1 - x0);
            if px < xcross {
                inside = !inside;
            }
        }
    }
    inside
}

/// Unsigned distance from `p` to the closed polyline.
pub fn distance_to_polyline(p: Point, pts: &[Point]) -> f64 {
    let n = pts.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let abx = b[0] - a[0];
        let aby = b[1] - a[1];
        let apx = p[0] - a[0];
        let apy = p[1] - a[1];
        let len2 = abx * abx + aby * aby;
        let t = if len2 > 0.0 {
            ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let dx = apx - t * abx;
        let dy = apy - t * aby;
        let d = dx * dx + dy * dy;
        if d < best {
            best = d;
        }
    }
    best.sqrt()
}

/// Signed distance to a closed polyline: negative inside.
pub fn signed_distance(p: Point, pts: &[Point]) -> f64 {
    let d = distance_to_polyline(p, pts);
    if point_in_polygon(p, pts) {
        -d
    } else {
        d
    }
}

/// Curvature of the circle through three consecutive points (unsigned).
pub fn three_point_curvature(a: Point, b: Point, c: Point) -> f64 {
    let la = dist2(b, c).sqrt();
    let lb = dist2(a, c).sqrt();
    let lc = dist2(a, b).sqrt();
    let cross = (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0]);
    let area2 = cross.abs();
    if la * lb * lc == 0.0 {
        return 0.0;
    }
    2.0 * area2 / (la * lb * lc)
}
