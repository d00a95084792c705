//! Closed convex sets with exact Euclidean projections.

use serde::{Deserialize, Serialize};

use crate::{check_dim, serde_la, Error, Result, Vector};

/// Normals with norm at or below this are treated as zero.
pub const DEGENERATE_NORMAL: f64 = 1e-14;

/// A nonempty closed convex subset of ℝⁿ from a fixed catalog.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvexSet {
    WholeSpace {
        n: usize,
    },
    Box {
        #[serde(with = "serde_la::vector")]
        lo: Vector,
        #[serde(with = "serde_la::vector")]
        hi: Vector,
    },
    Ball {
        #[serde(with = "serde_la::vector")]
        center: Vector,
        radius: f64,
    },
    /// `{y : <normal, y - anchor> <= 0}`.
    Halfspace {
        #[serde(with = "serde_la::vector")]
        normal: Vector,
        #[serde(with = "serde_la::vector")]
        anchor: Vector,
    },
    /// `{y : <normal, y> = offset}`.
    AffineHyperplane {
        #[serde(with = "serde_la::vector")]
        normal: Vector,
        offset: f64,
    },
}

impl ConvexSet {
    pub fn whole_space(n: usize) -> Self {
        ConvexSet::WholeSpace { n }
    }

    pub fn cube(n: usize, lo: f64, hi: f64) -> Self {
        ConvexSet::Box {
            lo: Vector::from_element(n, lo),
            hi: Vector::from_element(n, hi),
        }
    }

    pub fn ball(center: Vector, radius: f64) -> Self {
        ConvexSet::Ball { center, radius }
    }

    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::WholeSpace { n } => *n,
            ConvexSet::Box { lo, .. } => lo.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Halfspace { normal, .. } => normal.len(),
            ConvexSet::AffineHyperplane { normal, .. } => normal.len(),
        }
    }

    /// Checks that the description is well formed and the set is nonempty.
    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::Config("set dimension must be at least 1".into()));
        }
        match self {
            ConvexSet::WholeSpace { .. } => Ok(()),
            ConvexSet::Box { lo, hi } => {
                check_dim(lo.len(), hi.len())?;
                if lo.iter().chain(hi.iter()).any(|v| v.is_nan()) {
                    return Err(Error::Config("box bounds contain NaN".into()));
                }
                if lo.iter().zip(hi.iter()).any(|(l, h)| l > h) {
                    return Err(Error::Config("box has lo > hi".into()));
                }
                Ok(())
            }
            ConvexSet::Ball { center, radius } => {
                crate::check_finite("ball center", center)?;
                if !(radius.is_finite() && *radius >= 0.0) {
                    return Err(Error::Config(format!("invalid ball radius {radius}")));
                }
                Ok(())
            }
            ConvexSet::Halfspace { normal, anchor } => {
                check_dim(normal.len(), anchor.len())?;
                crate::check_finite("halfspace normal", normal)?;
                crate::check_finite("halfspace anchor", anchor)
            }
            ConvexSet::AffineHyperplane { normal, offset } => {
                crate::check_finite("hyperplane normal", normal)?;
                if normal.norm() <= DEGENERATE_NORMAL || !offset.is_finite() {
                    return Err(Error::Config("hyperplane needs a nonzero normal".into()));
                }
                Ok(())
            }
        }
    }

    /// Euclidean projection onto the set.
    pub fn project(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.dim(), x.len())?;
        Ok(match self {
            ConvexSet::WholeSpace { .. } => x.clone(),
            ConvexSet::Box { lo, hi } => Vector::from_iterator(
                x.len(),
                x.iter()
                    .zip(lo.iter().zip(hi.iter()))
                    .map(|(v, (l, h))| v.max(*l).min(*h)),
            ),
            ConvexSet::Ball { center, radius } => {
                let d = x - center;
                let dist = d.norm();
                if dist <= *radius {
                    x.clone()
                } else {
                    center + d * (*radius / dist)
                }
            }
            ConvexSet::Halfspace { normal, anchor } => {
                let nn = normal.norm_squared();
                if nn.sqrt() <= DEGENERATE_NORMAL {
                    x.clone()
                } else {
                    let excess = normal.dot(x) - normal.dot(anchor);
                    x - normal * (excess.max(0.0) / nn)
                }
            }
            ConvexSet::AffineHyperplane { normal, offset } => {
                let gap = normal.dot(x) - offset;
                x - normal * (gap / normal.norm_squared())
            }
        })
    }

    pub fn distance(&self, x: &Vector) -> Result<f64> {
        Ok((self.project(x)? - x).norm())
    }

    pub fn contains(&self, x: &Vector, tol: f64) -> Result<bool> {
        Ok(self.distance(x)? <= tol)
    }

    /// Axis-aligned bounding box, when the set is bounded.
    pub fn bounding_box(&self) -> Option<(Vector, Vector)> {
        match self {
            ConvexSet::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            ConvexSet::Ball { center, radius } => Some((
                center.add_scalar(-radius),
                center.add_scalar(*radius),
            )),
            _ => None,
        }
    }

    /// Analytic containment test `self ⊆ other` for bounded `self`.
    ///
    /// Boxes are checked through their extreme points, balls through their
    /// farthest point along each constraint. Returns `None` when the pair is
    /// not covered.
    pub fn is_subset_of(&self, other: &ConvexSet, tol: f64) -> Option<bool> {
        if let ConvexSet::WholeSpace { .. } = other {
            return Some(true);
        }
        match (self, other) {
            (ConvexSet::Box { lo, hi }, ConvexSet::Box { lo: olo, hi: ohi }) => Some(
                (0..lo.len()).all(|j| lo[j] >= olo[j] - tol && hi[j] <= ohi[j] + tol),
            ),
            (ConvexSet::Box { lo, hi }, ConvexSet::Ball { center, radius }) => {
                // farthest corner from the center
                let far2: f64 = (0..lo.len())
                    .map(|j| {
                        let a = (lo[j] - center[j]).abs();
                        let b = (hi[j] - center[j]).abs();
                        a.max(b).powi(2)
                    })
                    .sum();
                Some(far2.sqrt() <= radius + tol)
            }
            (ConvexSet::Ball { center, radius }, ConvexSet::Ball { center: oc, radius: or }) => {
                Some((center - oc).norm() + radius <= or + tol)
            }
            (ConvexSet::Ball { center, radius }, ConvexSet::Box { lo, hi }) => Some(
                (0..center.len())
                    .all(|j| center[j] - radius >= lo[j] - tol && center[j] + radius <= hi[j] + tol),
            ),
            _ => None,
        }
    }
}

/// Halfspace `{y : <normal, y - anchor> <= 0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Halfspace {
    pub normal: Vector,
    pub anchor: Vector,
}

impl Halfspace {
    pub fn new(normal: Vector, anchor: Vector) -> Result<Self> {
        check_dim(normal.len(), anchor.len())?;
        Ok(Halfspace { normal, anchor })
    }

    /// A zero normal makes the halfspace the whole space.
    pub fn is_degenerate(&self) -> bool {
        self.normal.norm() <= DEGENERATE_NORMAL
    }

    /// Signed violation `<normal, y - anchor>`; positive outside.
    pub fn violation(&self, y: &Vector) -> f64 {
        self.normal.dot(&(y - &self.anchor))
    }

    pub fn contains(&self, y: &Vector, tol: f64) -> bool {
        self.is_degenerate() || self.violation(y) <= tol
    }

    /// Projects `z` onto the halfspace. Points already inside, and every
    /// point when the normal is degenerate, are returned unchanged.
    pub fn project(&self, z: &Vector) -> Result<Vector> {
        check_dim(self.normal.len(), z.len())?;
        if self.is_degenerate() {
            return Ok(z.clone());
        }
        let gap = self.violation(z);
        if gap <= 0.0 {
            return Ok(z.clone());
        }
        Ok(z - &self.normal * (gap / self.normal.norm_squared()))
    }

    pub fn to_set(&self) -> ConvexSet {
        ConvexSet::Halfspace {
            normal: self.normal.clone(),
            anchor: self.anchor.clone(),
        }
    }
}

/// Projection onto `set`; free-function form of [`ConvexSet::project`].
pub fn project(set: &ConvexSet, x: &Vector) -> Result<Vector> {
    set.project(x)
}

/// Projection onto a halfspace; free-function form of [`Halfspace::project`].
pub fn project_halfspace(h: &Halfspace, z: &Vector) -> Result<Vector> {
    h.project(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::dvector;

    fn grid_nearest_on_circle(c: &Vector, r: f64, x: &Vector, steps: usize) -> Vector {
        let mut best = c.clone();
        let mut best_d = f64::INFINITY;
        for s in 0..steps {
            let t = 2.0 * std::f64::consts::PI * s as f64 / steps as f64;
            let p = c + dvector![r * t.cos(), r * t.sin()];
            let d = (&p - x).norm();
            if d < best_d {
                best_d = d;
                best = p;
            }
        }
        best
    }

    #[test]
    fn box_clamps() {
        let b = ConvexSet::cube(2, 0.0, 1.0);
        assert_eq!(b.project(&dvector![2.0, -1.0]).unwrap(), dvector![1.0, 0.0]);
    }

    #[test]
    fn ball_interior_is_fixed() {
        let b = ConvexSet::ball(dvector![0.0, 0.0], 2.0);
        assert_eq!(b.project(&dvector![0.0, 1.0]).unwrap(), dvector![0.0, 1.0]);
    }

    #[test]
    fn ball_offset_center_matches_grid_search() {
        let c = dvector![1.0, 1.0];
        let x = dvector![3.0, 1.0];
        let oracle = grid_nearest_on_circle(&c, 1.0, &x, 36_000);
        assert_abs_diff_eq!(oracle, dvector![2.0, 1.0], epsilon = 1e-6);
        let b = ConvexSet::ball(c, 1.0);
        assert_abs_diff_eq!(b.project(&x).unwrap(), dvector![2.0, 1.0], epsilon = 1e-15);
    }

    #[test]
    fn halfspace_examples() {
        let h = Halfspace::new(dvector![1.0, 0.0], dvector![0.0, 0.0]).unwrap();
        assert_eq!(h.project(&dvector![2.0, 3.0]).unwrap(), dvector![0.0, 3.0]);
        assert_eq!(h.project(&dvector![-1.0, 5.0]).unwrap(), dvector![-1.0, 5.0]);
    }

    #[test]
    fn halfspace_displacement_matches_boundary_grid() {
        // boundary line x + y = 1, parametrized as (1 - t, t)
        let h = Halfspace::new(dvector![1.0, 1.0], dvector![1.0, 0.0]).unwrap();
        let z = dvector![2.0, 1.0];
        let mut best = (f64::INFINITY, dvector![0.0, 0.0]);
        for s in -20_000..=20_000 {
            let t = s as f64 * 1e-4;
            let p = dvector![1.0 - t, t];
            let d = (&p - &z).norm();
            if d < best.0 {
                best = (d, p);
            }
        }
        assert_abs_diff_eq!(best.1, dvector![1.0, 0.0], epsilon = 1e-4);
        assert_abs_diff_eq!(h.project(&z).unwrap(), dvector![1.0, 0.0], epsilon = 1e-15);
    }

    #[test]
    fn degenerate_halfspace_is_whole_space() {
        let h = Halfspace::new(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap();
        assert!(h.is_degenerate());
        assert_eq!(h.project(&dvector![5.0, -5.0]).unwrap(), dvector![5.0, -5.0]);
        let as_set = h.to_set();
        assert_eq!(as_set.project(&dvector![5.0, -5.0]).unwrap(), dvector![5.0, -5.0]);
    }

    #[test]
    fn hyperplane_projection_lands_on_plane() {
        let s = ConvexSet::AffineHyperplane {
            normal: dvector![3.0, 4.0],
            offset: 5.0,
        };
        let p = s.project(&dvector![0.0, 0.0]).unwrap();
        assert_abs_diff_eq!(p, dvector![0.6, 0.8], epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_sets() {
        assert!(ConvexSet::Box { lo: dvector![1.0], hi: dvector![0.0] }.validate().is_err());
        assert!(ConvexSet::ball(dvector![0.0], -1.0).validate().is_err());
        assert!(ConvexSet::AffineHyperplane { normal: dvector![0.0], offset: 1.0 }
            .validate()
            .is_err());
        assert!(ConvexSet::whole_space(0).validate().is_err());
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let b = ConvexSet::cube(2, 0.0, 1.0);
        assert!(matches!(
            b.project(&dvector![1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn subset_checks() {
        let x = ConvexSet::cube(2, -1.0, 1.0);
        assert_eq!(x.is_subset_of(&ConvexSet::ball(dvector![0.0, 0.0], 1.5), 0.0), Some(true));
        assert_eq!(x.is_subset_of(&ConvexSet::ball(dvector![0.0, 0.0], 1.4), 0.0), Some(false));
        assert_eq!(x.is_subset_of(&ConvexSet::cube(2, -2.0, 2.0), 0.0), Some(true));
    }

    #[test]
    fn serializes_with_kind_tag() {
        let b = ConvexSet::cube(2, -1.0, 1.0);
        let s = serde_json::to_string(&b).unwrap();
        assert_eq!(s, r#"{"kind":"box","lo":[-1.0,-1.0],"hi":[1.0,1.0]}"#);
        let back: ConvexSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, b);
    }
}
