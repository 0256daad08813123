//! Rotated array frames and element placement.
//!
//! All angles are radians. A direction is parameterised by an elevation
//! `theta` (measured from the horizontal plane) and an azimuth `phi`
//! (measured from the x axis), so that
//! `k(theta, phi) = [cos(theta)cos(phi), cos(theta)sin(phi), sin(theta)]`.
//! The RIS centre is the origin of the global frame.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = Vector3<f64>;

/// Unit vector pointing along elevation `theta`, azimuth `phi`.
pub fn direction(theta: f64, phi: f64) -> Point {
    Vector3::new(
        theta.cos() * phi.cos(),
        theta.cos() * phi.sin(),
        theta.sin(),
    )
}

/// Elevation and azimuth of `v`. The azimuth is wrapped into `[0, 2pi)`.
pub fn angles_of(v: &Point) -> (f64, f64) {
    let r = v.norm();
    let theta = (v.z / r).clamp(-1.0, 1.0).asin();
    let mut phi = v.y.atan2(v.x);
    if phi < 0.0 {
        phi += TAU;
    }
    (theta, phi)
}

/// Rotation of a planar array: the elevation `alpha` and azimuth `beta` of
/// its normal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orientation {
    pub alpha: f64,
    pub beta: f64,
}

impl Orientation {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(-FRAC_PI_2..=FRAC_PI_2).contains(&alpha) || !(0.0..=TAU).contains(&beta) {
            return Err(Error::InvalidArgument(format!(
                "orientation ({alpha}, {beta}) outside [-pi/2, pi/2] x [0, 2pi]"
            )));
        }
        Ok(Self { alpha, beta })
    }

    pub const IDENTITY: Orientation = Orientation {
        alpha: 0.0,
        beta: 0.0,
    };

    /// Orientation whose normal points along `v`.
    pub fn facing(v: &Point) -> Self {
        let (alpha, beta) = angles_of(v);
        Self { alpha, beta }
    }

    pub fn normal(&self) -> Point {
        direction(self.alpha, self.beta)
    }
}

/// Admissible rotation range of the RIS.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationBox {
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub beta_min: f64,
    pub beta_max: f64,
}

impl RotationBox {
    pub fn new(alpha_min: f64, alpha_max: f64, beta_min: f64, beta_max: f64) -> Result<Self> {
        let ordered = alpha_min <= alpha_max && beta_min <= beta_max;
        let inside = alpha_min >= -FRAC_PI_2 && alpha_max <= FRAC_PI_2 && beta_min >= 0.0 && beta_max <= TAU;
        if !ordered || !inside {
            return Err(Error::InvalidArgument(format!(
                "rotation box alpha [{alpha_min}, {alpha_max}], beta [{beta_min}, {beta_max}] is not well ordered"
            )));
        }
        Ok(Self {
            alpha_min,
            alpha_max,
            beta_min,
            beta_max,
        })
    }

    pub fn contains(&self, o: &Orientation) -> bool {
        (self.alpha_min..=self.alpha_max).contains(&o.alpha)
            && (self.beta_min..=self.beta_max).contains(&o.beta)
    }

    pub fn clamp(&self, o: &Orientation) -> Orientation {
        // Azimuths are compared on the circle, so wrap to the branch nearest
        // the box centre before clamping.
        let centre = 0.5 * (self.beta_min + self.beta_max);
        let mut beta = o.beta;
        while beta - centre > PI {
            beta -= TAU;
        }
        while centre - beta > PI {
            beta += TAU;
        }
        Orientation {
            alpha: o.alpha.clamp(self.alpha_min, self.alpha_max),
            beta: beta.clamp(self.beta_min, self.beta_max),
        }
    }

    pub fn lower(&self) -> [f64; 2] {
        [self.alpha_min, self.beta_min]
    }

    pub fn upper(&self) -> [f64; 2] {
        [self.alpha_max, self.beta_max]
    }
}

/// Normal and in-plane axes of a rotated array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Basis {
    pub normal: Point,
    pub horizontal: Point,
    pub vertical: Point,
}

pub fn rotated_basis(o: &Orientation) -> Basis {
    let (sa, ca) = o.alpha.sin_cos();
    let (sb, cb) = o.beta.sin_cos();
    Basis {
        normal: Vector3::new(ca * cb, ca * sb, sa),
        horizontal: Vector3::new(-sb, cb, 0.0),
        vertical: Vector3::new(-sa * cb, -sa * sb, ca),
    }
}

/// Element grid of a uniform planar array, as in-plane offsets
/// `(r_h, r_v)` in metres.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayLayout {
    pub n_h: usize,
    pub n_v: usize,
    pub spacing: f64,
    pub offsets: Vec<(f64, f64)>,
}

impl ArrayLayout {
    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }
}

/// Offsets of an `n_h x n_v` grid, element `m` (1-based) placed at column
/// `floor((m-1)/n_v)` and row `m - floor((m-1)/n_v) n_v`.
///
/// The horizontal offsets are centred. The vertical ones are shifted one
/// spacing upwards with respect to a centred grid (rows run from
/// `(1 - (n_v - 1)/2) d` to `(n_v + 1)/2 d`); channels built from the same
/// offsets stay consistent.
pub fn element_offsets(n_h: usize, n_v: usize, spacing: f64) -> Result<ArrayLayout> {
    if n_h == 0 || n_v == 0 {
        return Err(Error::InvalidArgument(format!(
            "array needs at least one element per axis, got {n_h} x {n_v}"
        )));
    }
    if !(spacing > 0.0) || !spacing.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "element spacing must be positive, got {spacing}"
        )));
    }
    let h_shift = (n_h as f64 - 1.0) / 2.0;
    let v_shift = (n_v as f64 - 1.0) / 2.0;
    let offsets = (1..=n_h * n_v)
        .map(|m| {
            let col = (m - 1) / n_v;
            let row = m - col * n_v;
            (
                (col as f64 - h_shift) * spacing,
                (row as f64 - v_shift) * spacing,
            )
        })
        .collect();
    Ok(ArrayLayout {
        n_h,
        n_v,
        spacing,
        offsets,
    })
}

/// Global positions of the elements of `layout` rotated by `o` and
/// translated to `center`.
pub fn place_elements(layout: &ArrayLayout, o: &Orientation, center: &Point) -> Vec<Point> {
    let basis = rotated_basis(o);
    layout
        .offsets
        .iter()
        .map(|&(rh, rv)| basis.horizontal * rh + basis.vertical * rv + center)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: &Point, b: &Point) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn identity_rotation() {
        let b = rotated_basis(&Orientation::IDENTITY);
        assert!(close(&b.normal, &Vector3::x()));
        assert!(close(&b.horizontal, &Vector3::y()));
        assert!(close(&b.vertical, &Vector3::z()));
    }

    #[test]
    fn tilted_up() {
        let b = rotated_basis(&Orientation::new(FRAC_PI_2, 0.0).unwrap());
        assert!(close(&b.normal, &Vector3::z()));
        assert!(close(&b.horizontal, &Vector3::y()));
        assert!(close(&b.vertical, &Vector3::new(-1.0, 0.0, 0.0)));
    }

    #[test]
    fn offsets_two_by_two() {
        let d = 0.0625;
        let l = element_offsets(2, 2, d).unwrap();
        assert_eq!(l.len(), 4);
        let (h1, v1) = l.offsets[0];
        assert!((h1 + 0.5 * d).abs() < 1e-15 && (v1 - 0.5 * d).abs() < 1e-15);
        let (h4, v4) = l.offsets[3];
        assert!((h4 - 0.5 * d).abs() < 1e-15 && (v4 - 1.5 * d).abs() < 1e-15);
    }

    #[test]
    fn offsets_single_element() {
        // m = 1: r_v = (1 - 0 - 0) d.
        let l = element_offsets(1, 1, 2.0).unwrap();
        assert_eq!(l.offsets, vec![(0.0, 2.0)]);
    }

    #[test]
    fn zero_counts_rejected() {
        assert!(element_offsets(0, 3, 1.0).is_err());
        assert!(element_offsets(3, 0, 1.0).is_err());
        assert!(element_offsets(3, 3, 0.0).is_err());
    }

    #[test]
    fn place_single_offset_identity() {
        let layout = ArrayLayout {
            n_h: 1,
            n_v: 1,
            spacing: 1.0,
            offsets: vec![(0.0, 0.5)],
        };
        let p = place_elements(&layout, &Orientation::IDENTITY, &Point::zeros());
        assert!(close(&p[0], &Vector3::new(0.0, 0.0, 0.5)));
    }

    #[test]
    fn clamp_wraps_azimuth() {
        let b = RotationBox::new(-1.0, 0.0, 1.5, 2.5).unwrap();
        let o = b.clamp(&Orientation { alpha: 0.3, beta: 2.0 });
        assert_eq!(o, Orientation { alpha: 0.0, beta: 2.0 });
        let far = b.clamp(&Orientation { alpha: -0.5, beta: TAU - 0.1 });
        assert_eq!(far.beta, 1.5);
    }

    #[test]
    fn angles_roundtrip() {
        let v = direction(-0.4, 2.1);
        let (t, p) = angles_of(&v);
        assert!((t + 0.4).abs() < 1e-12 && (p - 2.1).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn basis_is_orthonormal(alpha in -FRAC_PI_2..FRAC_PI_2, beta in 0.0..TAU) {
            let b = rotated_basis(&Orientation { alpha, beta });
            for v in [b.normal, b.horizontal, b.vertical] {
                prop_assert!((v.norm() - 1.0).abs() < 1e-12);
            }
            prop_assert!(b.normal.dot(&b.horizontal).abs() < 1e-12);
            prop_assert!(b.normal.dot(&b.vertical).abs() < 1e-12);
            prop_assert!(b.horizontal.dot(&b.vertical).abs() < 1e-12);
        }

        #[test]
        fn elements_lie_in_rotated_plane(
            alpha in -FRAC_PI_2..FRAC_PI_2,
            beta in 0.0..TAU,
            n_h in 1usize..6,
            n_v in 1usize..6,
            cx in -5.0..5.0f64,
        ) {
            let o = Orientation { alpha, beta };
            let centre = Vector3::new(cx, 1.0, -2.0);
            let layout = element_offsets(n_h, n_v, 0.05).unwrap();
            let pts = place_elements(&layout, &o, &centre);
            prop_assert_eq!(pts.len(), n_h * n_v);
            let n = o.normal();
            for p in &pts {
                prop_assert!((p - centre).dot(&n).abs() < 1e-12);
            }
            let flat = place_elements(&layout, &Orientation::IDENTITY, &Point::zeros());
            for i in 0..pts.len() {
                for j in 0..i {
                    let d0 = (flat[i] - flat[j]).norm();
                    let d1 = (pts[i] - pts[j]).norm();
                    prop_assert!((d0 - d1).abs() < 1e-12);
                }
            }
        }
    }
}
