//! Planar primitives in the ego frame (x forward, y left, meters).

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Consecutive polyline vertices closer than this are rejected.
pub const MIN_SEGMENT_LENGTH: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    pub fn distance_sq(self, other: Point2) -> f64 {
        let d = self - other;
        d.dot(d)
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        Point2::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
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

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Point2::new(x, y)
    }
}

impl From<Point2> for [f64; 2] {
    fn from(p: Point2) -> Self {
        [p.x, p.y]
    }
}

/// An ordered list of at least two finite points with no repeated
/// consecutive vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    points: Vec<Point2>,
}

impl Polyline {
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::Geometry(format!(
                "polyline needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::Geometry(format!("point {i} is not finite")));
        }
        if let Some(i) = points
            .windows(2)
            .position(|w| w[0].distance(w[1]) <= MIN_SEGMENT_LENGTH)
        {
            return Err(Error::Geometry(format!(
                "points {i} and {} coincide",
                i + 1
            )));
        }
        Ok(Polyline { points })
    }

    pub fn from_xy(coords: &[(f64, f64)]) -> Result<Self> {
        Self::new(coords.iter().map(|&(x, y)| Point2::new(x, y)).collect())
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point2> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    /// Always false; kept for clippy's `len_without_is_empty`.
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> Point2 {
        self.points[0]
    }

    pub fn last(&self) -> Point2 {
        self.points[self.points.len() - 1]
    }

    pub fn segments(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        self.points.windows(2).map(|w| (w[0], w[1]))
    }

    pub fn length(&self) -> f64 {
        self.segments().map(|(a, b)| a.distance(b)).sum()
    }

    pub fn reversed(&self) -> Polyline {
        let mut points = self.points.clone();
        points.reverse();
        Polyline { points }
    }

    /// Applies a rigid transform. Segment lengths are preserved, so the
    /// result stays valid.
    pub fn transformed(&self, t: &RigidTransform) -> Polyline {
        Polyline {
            points: self.points.iter().map(|&p| t.apply(p)).collect(),
        }
    }

    pub fn translated(&self, offset: Point2) -> Polyline {
        Polyline {
            points: self.points.iter().map(|&p| p + offset).collect(),
        }
    }
}

/// Axis-aligned window `[x_min, x_max] × [y_min, y_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Extent {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Extent {
    /// Extended SD map range, ±100 m × ±50 m.
    pub const SD_RANGE: Extent = Extent::new(-100.0, 100.0, -50.0, 50.0);
    /// BEV perception range, ±50 m × ±25 m.
    pub const PERCEPTION: Extent = Extent::new(-50.0, 50.0, -25.0, 25.0);

    pub const fn new(x_min: f64, x_max: f64, y_min: f64, y_max: f64) -> Self {
        Extent {
            x_min,
            x_max,
            y_min,
            y_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.x_min, self.x_max, self.y_min, self.y_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.x_min >= self.x_max || self.y_min >= self.y_max {
            return Err(Error::Config(format!(
                "extent {self:?} is not well-ordered"
            )));
        }
        Ok(())
    }

    pub fn width_x(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn width_y(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn expanded(&self, margin: f64) -> Extent {
        Extent::new(
            self.x_min - margin,
            self.x_max + margin,
            self.y_min - margin,
            self.y_max + margin,
        )
    }

    pub fn translated(&self, offset: Point2) -> Extent {
        Extent::new(
            self.x_min + offset.x,
            self.x_max + offset.x,
            self.y_min + offset.y,
            self.y_max + offset.y,
        )
    }
}

/// Rotation about the origin followed by a translation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    pub angle_rad: f64,
    pub translation: Point2,
}

impl RigidTransform {
    pub const IDENTITY: RigidTransform = RigidTransform {
        angle_rad: 0.0,
        translation: Point2::ORIGIN,
    };

    pub fn new(angle_rad: f64, translation: Point2) -> Self {
        RigidTransform {
            angle_rad,
            translation,
        }
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        let (s, c) = self.angle_rad.sin_cos();
        Point2::new(
            c * p.x - s * p.y + self.translation.x,
            s * p.x + c * p.y + self.translation.y,
        )
    }
}

/// Squared distance from `p` to the closed segment `[a, b]`.
///
/// The clamped parameter snaps to the exact endpoint, so pixels whose
/// nearest point is a shared vertex see bit-identical distances to both
/// adjoining segments.
pub fn point_segment_distance_sq(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len_sq = ab.dot(ab);
    if len_sq == 0.0 {
        return p.distance_sq(a);
    }
    let t = (p - a).dot(ab) / len_sq;
    let closest = if t <= 0.0 {
        a
    } else if t >= 1.0 {
        b
    } else {
        a + ab * t
    };
    p.distance_sq(closest)
}

const INSIDE: u8 = 0;
const LEFT: u8 = 1;
const RIGHT: u8 = 2;
const BOTTOM: u8 = 4;
const TOP: u8 = 8;

fn outcode(p: Point2, e: &Extent) -> u8 {
    let mut code = INSIDE;
    if p.x < e.x_min {
        code |= LEFT;
    } else if p.x > e.x_max {
        code |= RIGHT;
    }
    if p.y < e.y_min {
        code |= BOTTOM;
    } else if p.y > e.y_max {
        code |= TOP;
    }
    code
}

/// Cohen–Sutherland clipping of `[a, b]` against `window`. Returns `None`
/// when the segment lies entirely outside.
pub fn clip_segment(mut a: Point2, mut b: Point2, window: &Extent) -> Option<(Point2, Point2)> {
    let mut code_a = outcode(a, window);
    let mut code_b = outcode(b, window);
    loop {
        if code_a | code_b == INSIDE {
            return Some((a, b));
        }
        if code_a & code_b != INSIDE {
            return None;
        }
        let out = if code_a != INSIDE { code_a } else { code_b };
        let p = if out & TOP != 0 {
            Point2::new(
                a.x + (b.x - a.x) * (window.y_max - a.y) / (b.y - a.y),
                window.y_max,
            )
        } else if out & BOTTOM != 0 {
            Point2::new(
                a.x + (b.x - a.x) * (window.y_min - a.y) / (b.y - a.y),
                window.y_min,
            )
        } else if out & RIGHT != 0 {
            Point2::new(
                window.x_max,
                a.y + (b.y - a.y) * (window.x_max - a.x) / (b.x - a.x),
            )
        } else {
            Point2::new(
                window.x_min,
                a.y + (b.y - a.y) * (window.x_min - a.x) / (b.x - a.x),
            )
        };
        if out == code_a {
            a = p;
            code_a = outcode(a, window);
        } else {
            b = p;
            code_b = outcode(b, window);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polyline_rejects_degenerate_input() {
        assert!(Polyline::from_xy(&[(0.0, 0.0)]).is_err());
        assert!(Polyline::from_xy(&[(0.0, 0.0), (0.0, 0.0)]).is_err());
        assert!(Polyline::from_xy(&[(0.0, 0.0), (f64::NAN, 1.0)]).is_err());
        assert!(Polyline::from_xy(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0)]).is_err());
        assert!(Polyline::from_xy(&[(0.0, 0.0), (1.0, 0.0), (0.0, 0.0)]).is_ok());
    }

    #[test]
    fn segment_distance_cases() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(10.0, 0.0);
        assert_eq!(point_segment_distance_sq(Point2::new(5.0, 3.0), a, b), 9.0);
        assert_eq!(
            point_segment_distance_sq(Point2::new(-3.0, 4.0), a, b),
            25.0
        );
        assert_eq!(
            point_segment_distance_sq(Point2::new(13.0, 4.0), a, b),
            25.0
        );
    }

    #[test]
    fn clipping() {
        let w = Extent::new(-1.0, 1.0, -1.0, 1.0);
        let (a, b) = clip_segment(Point2::new(-5.0, 0.0), Point2::new(5.0, 0.0), &w).unwrap();
        assert_eq!((a, b), (Point2::new(-1.0, 0.0), Point2::new(1.0, 0.0)));
        assert!(clip_segment(Point2::new(-5.0, 2.0), Point2::new(5.0, 2.0), &w).is_none());
        assert!(clip_segment(Point2::new(3.0, 0.0), Point2::new(0.0, 3.0), &w).is_none());
        // Grazing the corner still counts.
        let (a, b) = clip_segment(Point2::new(2.0, 0.0), Point2::new(0.0, 2.0), &w).unwrap();
        assert!(a.distance(Point2::new(1.0, 1.0)) < 1e-12 && b.distance(a) < 1e-12);
        let (a, b) = clip_segment(Point2::new(0.0, 0.0), Point2::new(0.5, 0.5), &w).unwrap();
        assert_eq!((a, b), (Point2::new(0.0, 0.0), Point2::new(0.5, 0.5)));
        let (a, b) = clip_segment(Point2::new(-2.0, -2.0), Point2::new(2.0, 2.0), &w).unwrap();
        assert!((a.x + 1.0).abs() < 1e-12 && (a.y + 1.0).abs() < 1e-12);
        assert!((b.x - 1.0).abs() < 1e-12 && (b.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rigid_transform_preserves_distance() {
        let t = RigidTransform::new(0.7, Point2::new(3.0, -2.0));
        let p = Point2::new(1.0, 2.0);
        let q = Point2::new(-4.0, 0.5);
        assert!((t.apply(p).distance(t.apply(q)) - p.distance(q)).abs() < 1e-12);
        let r = RigidTransform::new(std::f64::consts::FRAC_PI_2, Point2::ORIGIN);
        let out = r.apply(Point2::new(1.0, 0.0));
        assert!(out.x.abs() < 1e-15 && (out.y - 1.0).abs() < 1e-15);
    }
}
