//! Planar collision primitives: points, segments and capsules.

use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Self) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Self) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Self) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// A closed segment. `a == b` is allowed and behaves as a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment2 {
    pub a: Point2,
    pub b: Point2,
}

impl Segment2 {
    pub const fn new(a: Point2, b: Point2) -> Self {
        Self { a, b }
    }

    /// Closest point on the segment to `p`.
    pub fn closest_point(&self, p: Point2) -> Point2 {
        let ab = self.b - self.a;
        let len2 = ab.norm_squared();
        if len2 == 0.0 {
            return self.a;
        }
        let t = ((p - self.a).dot(ab) / len2).clamp(0.0, 1.0);
        self.a + ab * t
    }

    pub fn point_distance(&self, p: Point2) -> f64 {
        p.distance(self.closest_point(p))
    }
}

/// A segment swept by a disc.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Capsule2 {
    pub axis: Segment2,
    pub radius: f64,
}

impl Capsule2 {
    pub const fn new(a: Point2, b: Point2, radius: f64) -> Self {
        Self {
            axis: Segment2::new(a, b),
            radius,
        }
    }

    /// Same axis, radius grown by `margin`.
    pub fn inflated(&self, margin: f64) -> Self {
        Self {
            axis: self.axis,
            radius: self.radius + margin,
        }
    }
}

fn orientation(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

/// True when the segments cross at a single interior point of both.
fn properly_cross(s1: &Segment2, s2: &Segment2) -> bool {
    let d1 = orientation(s2.a, s2.b, s1.a);
    let d2 = orientation(s2.a, s2.b, s1.b);
    let d3 = orientation(s1.a, s1.b, s2.a);
    let d4 = orientation(s1.a, s1.b, s2.b);
    ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
}

/// Minimum Euclidean distance between two closed segments.
///
/// In the plane, non-crossing segments attain their minimum distance at an
/// endpoint of one of them, so the result is either zero (proper crossing)
/// or the smallest of four point-to-segment distances. Touching and
/// collinear-overlap cases fall out of the endpoint distances.
pub fn segment_segment_distance(s1: &Segment2, s2: &Segment2) -> f64 {
    if properly_cross(s1, s2) {
        return 0.0;
    }
    s2.point_distance(s1.a)
        .min(s2.point_distance(s1.b))
        .min(s1.point_distance(s2.a))
        .min(s1.point_distance(s2.b))
}

/// Touching capsules (distance exactly equal to the radius sum) collide.
pub fn capsules_collide(c1: &Capsule2, c2: &Capsule2) -> bool {
    segment_segment_distance(&c1.axis, &c2.axis) <= c1.radius + c2.radius
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> Segment2 {
        Segment2::new(Point2::new(ax, ay), Point2::new(bx, by))
    }

    #[test]
    fn parallel_unit_offset() {
        let d = segment_segment_distance(&seg(0.0, 0.0, 1.0, 0.0), &seg(0.0, 1.0, 1.0, 1.0));
        assert_eq!(d, 1.0);
    }

    #[test]
    fn crossing_is_zero() {
        let d = segment_segment_distance(&seg(0.0, 0.0, 1.0, 0.0), &seg(0.5, -1.0, 0.5, 1.0));
        assert_eq!(d, 0.0);
    }

    #[test]
    fn degenerate_segments_are_points() {
        let p = seg(0.0, 0.0, 0.0, 0.0);
        let q = seg(3.0, 4.0, 3.0, 4.0);
        assert_eq!(segment_segment_distance(&p, &q), 5.0);
        let line = seg(-1.0, 1.0, 1.0, 1.0);
        assert_eq!(segment_segment_distance(&p, &line), 1.0);
    }

    #[test]
    fn collinear_overlap_and_touching() {
        assert_eq!(
            segment_segment_distance(&seg(0.0, 0.0, 2.0, 0.0), &seg(1.0, 0.0, 3.0, 0.0)),
            0.0
        );
        // T-junction: endpoint lies on the other segment
        assert_eq!(
            segment_segment_distance(&seg(0.0, 0.0, 2.0, 0.0), &seg(1.0, 0.0, 1.0, 3.0)),
            0.0
        );
        assert_eq!(
            segment_segment_distance(&seg(0.0, 0.0, 1.0, 0.0), &seg(2.0, 0.0, 3.0, 0.0)),
            1.0
        );
    }

    #[test]
    fn capsule_cases() {
        let a = Capsule2::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), 0.3);
        let b = Capsule2::new(Point2::new(0.0, 1.0), Point2::new(1.0, 1.0), 0.3);
        assert!(!capsules_collide(&a, &b));
        assert!(capsules_collide(&a, &a));
        let c = Capsule2::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), 0.5);
        let d = Capsule2::new(Point2::new(0.0, 1.0), Point2::new(1.0, 1.0), 0.5);
        assert!(capsules_collide(&c, &d), "touching counts as collision");
        assert!(capsules_collide(&a.inflated(0.2), &b.inflated(0.2)));
    }

    fn arb_seg() -> impl Strategy<Value = Segment2> {
        (-2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64, -2.0..2.0f64)
            .prop_map(|(a, b, c, d)| seg(a, b, c, d))
    }

    proptest! {
        #[test]
        fn distance_symmetric_nonnegative(s1 in arb_seg(), s2 in arb_seg()) {
            let d12 = segment_segment_distance(&s1, &s2);
            let d21 = segment_segment_distance(&s2, &s1);
            prop_assert!(d12 >= 0.0);
            prop_assert!((d12 - d21).abs() < 1e-12);
        }

        #[test]
        fn distance_bounded_by_endpoint_pairs(s1 in arb_seg(), s2 in arb_seg()) {
            let d = segment_segment_distance(&s1, &s2);
            for p in [s1.a, s1.b] {
                for q in [s2.a, s2.b] {
                    prop_assert!(d <= p.distance(q) + 1e-12);
                }
            }
        }

        #[test]
        fn collide_symmetric(s1 in arb_seg(), s2 in arb_seg(), r1 in 0.01..0.5f64, r2 in 0.01..0.5f64) {
            let c1 = Capsule2 { axis: s1, radius: r1 };
            let c2 = Capsule2 { axis: s2, radius: r2 };
            prop_assert_eq!(capsules_collide(&c1, &c2), capsules_collide(&c2, &c1));
        }

        #[test]
        fn constructed_crossings_are_zero(cx in -1.0..1.0f64, cy in -1.0..1.0f64,
                                           t1 in 0.05..1.0f64, t2 in 0.05..1.0f64,
                                           a1 in 0.0..3.0f64, da in 0.2..2.9f64) {
            // two segments through a common point c with different directions
            let u = Point2::new(a1.cos(), a1.sin());
            let v = Point2::new((a1 + da).cos(), (a1 + da).sin());
            let c = Point2::new(cx, cy);
            let s1 = Segment2::new(c - u * t1, c + u * t2);
            let s2 = Segment2::new(c - v * t2, c + v * t1);
            prop_assert!(segment_segment_distance(&s1, &s2) < 1e-12);
            // shift s2 off along the normal of s1 by a known amount with
            // s2 parallel to s1: distance equals the shift
            let n = Point2::new(-u.y, u.x);
            let s3 = Segment2::new(s1.a + n * 0.3, s1.b + n * 0.3);
            prop_assert!((segment_segment_distance(&s1, &s3) - 0.3).abs() < 1e-9);
        }
    }
}
