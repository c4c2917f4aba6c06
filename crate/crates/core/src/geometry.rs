//! Planar points, circles and the smallest enclosing circle.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T: Real> Point<T> {
    pub fn new(x: T, y: T) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Self) -> T {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(self, other: Self, t: T) -> Self {
        Self::new(self.x + (other.x - self.x) * t, self.y + (other.y - self.y) * t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Circle<T> {
    pub center: Point<T>,
    pub radius: T,
}

impl<T: Real> Circle<T> {
    pub fn new(center: Point<T>, radius: T) -> Self {
        Self { center, radius }
    }

    /// Boundary inclusive.
    pub fn contains(&self, p: Point<T>) -> bool {
        p.dist(self.center) <= self.radius
    }

    fn contains_eps(&self, p: Point<T>) -> bool {
        let eps = T::lit(1e-9) * (T::one() + self.radius);
        p.dist(self.center) <= self.radius + eps
    }

    pub fn diametric(a: Point<T>, b: Point<T>) -> Self {
        let center = a.lerp(b, T::lit(0.5));
        Self::new(center, a.dist(b) / T::lit(2.0))
    }

    /// Circle through three points, `None` when they are collinear.
    pub fn circumscribed(a: Point<T>, b: Point<T>, c: Point<T>) -> Option<Self> {
        let (bx, by) = (b.x - a.x, b.y - a.y);
        let (cx, cy) = (c.x - a.x, c.y - a.y);
        let d = T::lit(2.0) * (bx * cy - by * cx);
        if d.abs() <= T::epsilon() * (bx.abs() + by.abs() + cx.abs() + cy.abs()).powi(2) {
            return None;
        }
        let b2 = bx * bx + by * by;
        let c2 = cx * cx + cy * cy;
        let ux = (cy * b2 - by * c2) / d;
        let uy = (bx * c2 - cx * b2) / d;
        let center = Point::new(a.x + ux, a.y + uy);
        Some(Self::new(center, ux.hypot(uy)))
    }
}

/// Smallest circle containing every point, by randomized incremental construction.
///
/// The shuffle uses a fixed internal seed so repeated calls return the same circle.
pub fn smallest_enclosing_circle<T: Real>(points: &[Point<T>]) -> Result<Circle<T>> {
    ensure!(!points.is_empty(), InsufficientData, "enclosing circle of an empty point set");
    ensure!(
        points.iter().all(|p| p.x.is_finite() && p.y.is_finite()),
        NonFinite,
        "point coordinates must be finite"
    );
    let mut pts = points.to_vec();
    pts.shuffle(&mut ChaCha8Rng::seed_from_u64(0x5eed_c1c1e));

    let mut circle = Circle::new(pts[0], T::zero());
    for i in 1..pts.len() {
        if circle.contains_eps(pts[i]) {
            continue;
        }
        circle = Circle::new(pts[i], T::zero());
        for j in 0..i {
            if circle.contains_eps(pts[j]) {
                continue;
            }
            circle = Circle::diametric(pts[i], pts[j]);
            for k in 0..j {
                if circle.contains_eps(pts[k]) {
                    continue;
                }
                circle = Circle::circumscribed(pts[i], pts[j], pts[k])
                    .unwrap_or_else(|| widest_pair(pts[i], pts[j], pts[k]));
            }
        }
    }
    Ok(circle)
}

fn widest_pair<T: Real>(a: Point<T>, b: Point<T>, c: Point<T>) -> Circle<T> {
    [Circle::diametric(a, b), Circle::diametric(a, c), Circle::diametric(b, c)]
        .into_iter()
        .max_by(|p, q| p.radius.partial_cmp(&q.radius).unwrap())
        .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Point<f64> {
        Point::new(x, y)
    }

    #[test]
    fn diametric_pair() {
        let c = smallest_enclosing_circle(&[p(0.0, 0.0), p(2.0, 0.0)]).unwrap();
        assert!((c.center.x - 1.0).abs() < 1e-12 && c.center.y.abs() < 1e-12);
        assert!((c.radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn third_point_on_boundary() {
        let c = smallest_enclosing_circle(&[p(0.0, 0.0), p(2.0, 0.0), p(1.0, 1.0)]).unwrap();
        assert!((c.center.x - 1.0).abs() < 1e-12 && c.center.y.abs() < 1e-12);
        assert!((c.radius - 1.0).abs() < 1e-12);
    }

    #[test]
    fn singleton_and_empty() {
        let c = smallest_enclosing_circle(&[p(3.0, 4.0)]).unwrap();
        assert_eq!(c.radius, 0.0);
        assert!(smallest_enclosing_circle::<f64>(&[]).is_err());
    }

    #[test]
    fn collinear_triple() {
        let c = smallest_enclosing_circle(&[p(0.0, 0.0), p(1.0, 0.0), p(4.0, 0.0)]).unwrap();
        assert!((c.radius - 2.0).abs() < 1e-12);
    }

    #[test]
    fn works_in_f32() {
        let pts = [Point::new(0.0f32, 0.0), Point::new(0.0, 2.0)];
        let c = smallest_enclosing_circle(&pts).unwrap();
        assert!((c.radius - 1.0).abs() < 1e-6);
    }
}
