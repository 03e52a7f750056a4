//! One-parameter and two-dimensional subgroups of `SL~(2,R)`.
//!
//! The hyperbolic plane is the unit disc with metric `|dz| / (1 - |z|^2)`, of
//! curvature `-4`, so that `Pi: SL~(2,R) -> H^2(-4)` is a Riemannian
//! submersion for `lambda = (1, 1, 1)`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{su11, Geometry, GroupPoint, LieVector};

/// Default relative tolerance for the parabolic case.
pub const PARABOLIC_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Character {
    Elliptic,
    Parabolic,
    Hyperbolic,
}

/// Character of the subgroup generated by `a E_1 + b E_2 + c E_3`, by the sign
/// of `a^2 + b^2 - c^2` relative to `a^2 + b^2 + c^2`.
pub fn classify_character(v: &LieVector, tol: f64) -> Result<Character> {
    if v.is_zero() {
        return Err(Error::InvalidArgument("character of the zero vector".into()));
    }
    let [a, b, c] = [v.0.x, v.0.y, v.0.z];
    let d = a * a + b * b - c * c;
    let scale = a * a + b * b + c * c;
    Ok(if d.abs() <= tol * scale {
        Character::Parabolic
    } else if d < 0.0 {
        Character::Elliptic
    } else {
        Character::Hyperbolic
    })
}

/// `Ad_g v`: velocity of the conjugate subgroup `g Gamma g^{-1}`.
pub fn conjugate(g: &GroupPoint, v: &LieVector) -> Result<LieVector> {
    if g.geometry != Geometry::SlTwoTilde {
        return Err(Error::GeometryMismatch {
            expected: Geometry::SlTwoTilde,
            found: g.geometry,
        });
    }
    Ok(LieVector(su11::adjoint(&g.coords, &v.0)))
}

/// `<F, E_3>` at `x`, for `F` the right invariant field with seed `v` and the
/// metric `lambda`.
pub fn right_field_vertical_component(lambda: &[f64; 3], v: &LieVector, x: &GroupPoint) -> f64 {
    lambda[2] * su11::adjoint_inverse(&x.coords, &v.0).z
}

/// Parabolic and hyperbolic generators of the subgroup `H^2_theta`, in the
/// basis `(E_1, E_2, E_3)`.
pub fn subgroup_generators(theta: f64) -> (LieVector, LieVector) {
    let (s, c) = theta.sin_cos();
    (LieVector::new(-s, c, 1.0), LieVector::new(c, s, 0.0))
}

/// Constant left invariant Gauss map of `H^2_theta` in the orthonormal frame
/// `lambda_i^{-1/2} E_i`, oriented so that the third component is negative.
pub fn subgroup_gauss_value(lambda: &[f64; 3], theta: f64) -> Result<Vector3<f64>> {
    if lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda:?}")));
    }
    let [l1, l2, l3] = *lambda;
    let (s, c) = theta.sin_cos();
    let v = Vector3::new(-(l2 * l3).sqrt() * s, (l1 * l3).sqrt() * c, -(l1 * l2).sqrt());
    Ok(v / (l2 * l3 * s * s + l1 * l3 * c * c + l1 * l2).sqrt())
}

/// The curve `Upsilon`: `subgroup_gauss_value` at `theta_k = 2 pi k / n`.
pub fn upsilon_curve(lambda: &[f64; 3], n_samples: usize) -> Result<Vec<(f64, Vector3<f64>)>> {
    if n_samples < 8 {
        return Err(Error::InvalidArgument(format!("need at least 8 samples, got {n_samples}")));
    }
    (0..n_samples)
        .map(|k| {
            let theta = 2.0 * PI * k as f64 / n_samples as f64;
            Ok((theta, subgroup_gauss_value(lambda, theta)?))
        })
        .collect()
}

fn segment_distance(p0: &Vector3<f64>, p1: &Vector3<f64>, q0: &Vector3<f64>, q1: &Vector3<f64>) -> f64 {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let (a, e, f) = (d1.dot(&d1), d2.dot(&d2), d2.dot(&r));
    let c = d1.dot(&r);
    let b = d1.dot(&d2);
    let denom = a * e - b * b;
    let mut s = if denom > 1e-300 { ((b * f - c * e) / denom).clamp(0.0, 1.0) } else { 0.0 };
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    ((p0 + d1 * s) - (q0 + d2 * t)).norm()
}

/// Smallest distance between non-adjacent edges of a closed polygon; the
/// polygon is simple at its resolution when this is positive.
pub fn polygon_separation(points: &[Vector3<f64>]) -> f64 {
    let n = points.len();
    let mut best = f64::INFINITY;
    for i in 0..n {
        for j in (i + 2)..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let d = segment_distance(&points[i], &points[(i + 1) % n], &points[j], &points[(j + 1) % n]);
            best = best.min(d);
        }
    }
    best
}

/// `Pi(g)`: the image of the disc origin under the Moebius map of `g`.
pub fn project_pi(g: &GroupPoint) -> Result<Complex64> {
    if g.geometry != Geometry::SlTwoTilde {
        return Err(Error::GeometryMismatch {
            expected: Geometry::SlTwoTilde,
            found: g.geometry,
        });
    }
    Ok(g.disc() * Complex64::from_polar(1.0, g.theta()))
}

/// Conformal factor of `H^2(-4)` at `z`.
pub fn disc_conformal_factor(z: Complex64) -> f64 {
    1.0 / (1.0 - z.norm_sqr())
}

/// Group law of `R x_1 R`.
pub fn model_r_rtimes_r(p: (f64, f64), q: (f64, f64)) -> (f64, f64) {
    (p.0 + p.1.exp() * q.0, p.1 + q.1)
}
