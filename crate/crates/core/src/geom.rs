//! Small fixed-size vector helpers.
//!
//! Points are stored as `[f64; 3]` for both planar and spatial problems; planar
//! code ignores (and keeps at zero) the third coordinate.

pub type Point = [f64; 3];

pub const ORIGIN: Point = [0.0; 3];

#[inline]
pub fn pt2(x: f64, y: f64) -> Point {
    [x, y, 0.0]
}

/// Pads a slice of up to three coordinates into a [`Point`].
pub fn from_slice(xs: &[f64]) -> Point {
    let mut p = ORIGIN;
    for (dst, src) in p.iter_mut().zip(xs) {
        *dst = *src;
    }
    p
}

#[inline]
pub fn add(a: Point, b: Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

#[inline]
pub fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

#[inline]
pub fn scale(a: Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

#[inline]
pub fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[inline]
pub fn cross(a: Point, b: Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[inline]
pub fn cross2(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let len2 = dot(ab, ab);
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = (dot(sub(p, a), ab) / len2).clamp(0.0, 1.0);
    dist(p, add(a, scale(ab, t)))
}

/// Closest point on triangle `abc` to `p` (Ericson, Real-Time Collision Detection 5.1.5).
pub fn closest_point_on_triangle(p: Point, a: Point, b: Point, c: Point) -> Point {
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(ab, ap);
    let d2 = dot(ac, ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return a;
    }
    let bp = sub(p, b);
    let d3 = dot(ab, bp);
    let d4 = dot(ac, bp);
    if d3 >= 0.0 && d4 <= d3 {
        return b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return add(a, scale(ab, v));
    }
    let cp = sub(p, c);
    let d5 = dot(ab, cp);
    let d6 = dot(ac, cp);
    if d6 >= 0.0 && d5 <= d6 {
        return c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return add(a, scale(ac, w));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return add(b, scale(sub(c, b), w));
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    add(a, add(scale(ab, v), scale(ac, w)))
}

pub fn point_triangle_distance(p: Point, a: Point, b: Point, c: Point) -> f64 {
    dist(p, closest_point_on_triangle(p, a, b, c))
}

/// Whether the closed segment `ab` meets the closed axis-aligned box `[lo, hi]` (planar).
pub fn segment_meets_box2(a: Point, b: Point, lo: Point, hi: Point) -> bool {
    // Liang–Barsky clipping.
    let d = sub(b, a);
    let mut t0 = 0.0f64;
    let mut t1 = 1.0f64;
    for axis in 0..2 {
        if d[axis] == 0.0 {
            if a[axis] < lo[axis] || a[axis] > hi[axis] {
                return false;
            }
            continue;
        }
        let inv = 1.0 / d[axis];
        let mut ta = (lo[axis] - a[axis]) * inv;
        let mut tb = (hi[axis] - a[axis]) * inv;
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return false;
        }
    }
    true
}

/// Separating-axis test between a triangle and a closed axis-aligned box.
pub fn triangle_meets_box3(tri: [Point; 3], lo: Point, hi: Point) -> bool {
    let center = scale(add(lo, hi), 0.5);
    let half = scale(sub(hi, lo), 0.5);
    let v = [sub(tri[0], center), sub(tri[1], center), sub(tri[2], center)];
    let e = [sub(v[1], v[0]), sub(v[2], v[1]), sub(v[0], v[2])];
    let axes_unit = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

    let separated = |axis: Point| -> bool {
        let p = [dot(v[0], axis), dot(v[1], axis), dot(v[2], axis)];
        let r = half[0] * axis[0].abs() + half[1] * axis[1].abs() + half[2] * axis[2].abs();
        let min = p[0].min(p[1]).min(p[2]);
        let max = p[0].max(p[1]).max(p[2]);
        min > r || max < -r
    };

    for ei in &e {
        for u in &axes_unit {
            let axis = cross(*u, *ei);
            if dot(axis, axis) > 0.0 && separated(axis) {
                return false;
            }
        }
    }
    for u in &axes_unit {
        if separated(*u) {
            return false;
        }
    }
    let n = cross(e[0], e[1]);
    !(dot(n, n) > 0.0 && separated(n))
}

/// Whether the open segments `ab` and `cd` properly intersect or overlap (planar).
pub fn segments_intersect2(a: Point, b: Point, c: Point, d: Point) -> bool {
    let o1 = cross2(sub(b, a), sub(c, a));
    let o2 = cross2(sub(b, a), sub(d, a));
    let o3 = cross2(sub(d, c), sub(a, c));
    let o4 = cross2(sub(d, c), sub(b, c));
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    let on_segment = |p: Point, q: Point, r: Point| {
        r[0] >= p[0].min(q[0]) && r[0] <= p[0].max(q[0]) && r[1] >= p[1].min(q[1]) && r[1] <= p[1].max(q[1])
    };
    (o1 == 0.0 && on_segment(a, b, c) && c != a && c != b)
        || (o2 == 0.0 && on_segment(a, b, d) && d != a && d != b)
        || (o3 == 0.0 && on_segment(c, d, a) && a != c && a != d)
        || (o4 == 0.0 && on_segment(c, d, b) && b != c && b != d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn segment_distance() {
        let d = point_segment_distance(pt2(0.5, 1.0), pt2(0.0, 0.0), pt2(1.0, 0.0));
        assert_eq!(d, 1.0);
        let d = point_segment_distance(pt2(2.0, 0.0), pt2(0.0, 0.0), pt2(1.0, 0.0));
        assert_eq!(d, 1.0);
    }

    #[test]
    fn triangle_distance_regions() {
        let (a, b, c) = ([0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]);
        assert!((point_triangle_distance([0.2, 0.2, 2.0], a, b, c) - 2.0).abs() < 1e-15);
        assert!((point_triangle_distance([-1.0, -1.0, 0.0], a, b, c) - 2f64.sqrt()).abs() < 1e-15);
        assert!((point_triangle_distance([1.0, 1.0, 0.0], a, b, c) - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn box_overlap_tests() {
        let lo = [0.0, 0.0, 0.0];
        let hi = [1.0, 1.0, 1.0];
        assert!(segment_meets_box2(pt2(-1.0, 0.5), pt2(2.0, 0.5), lo, hi));
        assert!(!segment_meets_box2(pt2(-1.0, 1.5), pt2(2.0, 1.6), lo, hi));
        assert!(triangle_meets_box3([[0.5, 0.5, -1.0], [0.5, 0.5, 2.0], [2.0, 2.0, 0.5]], lo, hi));
        assert!(!triangle_meets_box3([[2.0, 0.0, 0.0], [3.0, 0.0, 0.0], [2.0, 1.0, 0.0]], lo, hi));
    }

    #[test]
    fn crossing_segments() {
        assert!(segments_intersect2(pt2(0.0, 0.0), pt2(1.0, 1.0), pt2(0.0, 1.0), pt2(1.0, 0.0)));
        assert!(!segments_intersect2(pt2(0.0, 0.0), pt2(1.0, 0.0), pt2(1.0, 0.0), pt2(2.0, 1.0)));
    }
}
