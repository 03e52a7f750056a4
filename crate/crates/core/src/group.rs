//! Group kernel: points, multiplication, inversion, matrix exponentials and
//! one-parameter subgroups.
//!
//! Coordinates by geometry:
//!
//! - `Semidirect`: `(x, y, z)` with `(p1, z1) * (p2, z2) = (p1 + e^{z1 A} p2, z1 + z2)`.
//! - `SlTwoTilde`: `(Re w, Im w, theta)` for the Moebius map
//!   `zeta -> e^{i theta} (zeta + w) / (1 + conj(w) zeta)` of the unit disc,
//!   with `theta` lifted to `R`. This is a global chart of the universal cover.
//! - `Product`: `(x, y, t)` with `(x, y)` exponential coordinates of
//!   `M^2(kappa)` at a base point. Product spaces are not groups here; only
//!   their Riemannian structure is used.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Discriminant magnitude below which [`expm2`] uses the nilpotent branch.
pub const EXPM_NILPOTENT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Geometry {
    Semidirect,
    SlTwoTilde,
    Product,
}

/// Which three-dimensional homogeneous space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum SpaceSpec {
    /// `R^2 x_A R` with its canonical left invariant metric.
    #[serde(rename = "semidirect")]
    Semidirect {
        #[serde(rename = "A")]
        a: [[f64; 2]; 2],
    },
    /// `SL~(2,R)` with `<E_i, E_j> = lambda_i delta_ij`.
    #[serde(rename = "sl2")]
    SlTwoTilde { lambda: [f64; 3] },
    /// Riemannian product `M^2(kappa) x R`.
    #[serde(rename = "product")]
    Product { kappa: f64 },
}

impl SpaceSpec {
    pub fn semidirect(a: f64, b: f64, c: f64, d: f64) -> Self {
        SpaceSpec::Semidirect {
            a: [[a, b], [c, d]],
        }
    }

    pub fn sl2(l1: f64, l2: f64, l3: f64) -> Self {
        SpaceSpec::SlTwoTilde {
            lambda: [l1, l2, l3],
        }
    }

    pub fn product(kappa: f64) -> Self {
        SpaceSpec::Product { kappa }
    }

    pub fn geometry(&self) -> Geometry {
        match self {
            SpaceSpec::Semidirect { .. } => Geometry::Semidirect,
            SpaceSpec::SlTwoTilde { .. } => Geometry::SlTwoTilde,
            SpaceSpec::Product { .. } => Geometry::Product,
        }
    }

    /// The matrix `A` of a semidirect product.
    pub fn matrix_a(&self) -> Option<Matrix2<f64>> {
        match self {
            SpaceSpec::Semidirect { a } => Some(Matrix2::new(a[0][0], a[0][1], a[1][0], a[1][1])),
            _ => None,
        }
    }

    pub fn lambdas(&self) -> Option<[f64; 3]> {
        match self {
            SpaceSpec::SlTwoTilde { lambda } => Some(*lambda),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SpaceSpec::Semidirect { a } => {
                if a.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(Error::NonFinite("matrix A"));
                }
            }
            SpaceSpec::SlTwoTilde { lambda } => {
                if lambda.iter().any(|l| !l.is_finite()) {
                    return Err(Error::NonFinite("lambda"));
                }
                if lambda.iter().any(|&l| l <= 0.0) {
                    return Err(Error::InvalidArgument(format!(
                        "lambda must be positive, got {lambda:?}"
                    )));
                }
            }
            SpaceSpec::Product { kappa } => {
                if !kappa.is_finite() {
                    return Err(Error::NonFinite("kappa"));
                }
            }
        }
        Ok(())
    }

    pub fn identity(&self) -> GroupPoint {
        GroupPoint::new(self.geometry(), Vector3::zeros())
    }

    pub(crate) fn check(&self, p: &GroupPoint) -> Result<()> {
        if p.geometry != self.geometry() {
            return Err(Error::GeometryMismatch {
                expected: self.geometry(),
                found: p.geometry,
            });
        }
        if !p.coords.iter().all(|c| c.is_finite()) {
            return Err(Error::NonFinite("point coordinates"));
        }
        if p.geometry == Geometry::SlTwoTilde && p.coords.x.hypot(p.coords.y) >= 1.0 {
            return Err(Error::InvalidArgument(format!(
                "disc coordinate |w| = {} is not < 1",
                p.coords.x.hypot(p.coords.y)
            )));
        }
        Ok(())
    }
}

/// A point given by its coordinates plus the geometry they refer to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupPoint {
    pub geometry: Geometry,
    pub coords: Vector3<f64>,
}

impl GroupPoint {
    pub fn new(geometry: Geometry, coords: Vector3<f64>) -> Self {
        Self { geometry, coords }
    }

    pub fn semidirect(x: f64, y: f64, z: f64) -> Self {
        Self::new(Geometry::Semidirect, Vector3::new(x, y, z))
    }

    pub fn sl2(w: Complex64, theta: f64) -> Self {
        Self::new(Geometry::SlTwoTilde, Vector3::new(w.re, w.im, theta))
    }

    pub fn product(x: f64, y: f64, t: f64) -> Self {
        Self::new(Geometry::Product, Vector3::new(x, y, t))
    }

    /// Disc coordinate of an `SL~(2,R)` point.
    pub fn disc(&self) -> Complex64 {
        Complex64::new(self.coords.x, self.coords.y)
    }

    pub fn theta(&self) -> f64 {
        self.coords.z
    }
}

/// Components of a vector of the Lie algebra in the basis `(d_x, d_y, d_z)_e`
/// (semidirect) or `(E_1, E_2, E_3)_e` (`SL~(2,R)`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LieVector(pub Vector3<f64>);

impl LieVector {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self(Vector3::new(a, b, c))
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&x| x == 0.0)
    }
}

/// `e^{zA}` in closed form.
///
/// Writing `zA = mu I + N` with `N` trace free, `N^2 = delta I` and
/// `e^{zA} = e^mu (C I + S N)` where `(C, S)` is `(cosh, sinh/.)` for
/// `delta > 0`, `(cos, sin/.)` for `delta < 0` and a Taylor polynomial when
/// `|delta| < EXPM_NILPOTENT_TOL`.
pub fn expm2(a: &Matrix2<f64>, z: f64) -> Result<Matrix2<f64>> {
    if !z.is_finite() || a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("expm2 input"));
    }
    let b = a * z;
    let mu = 0.5 * b.trace();
    let n = b - Matrix2::identity() * mu;
    let delta = n[(0, 0)] * n[(0, 0)] + n[(0, 1)] * n[(1, 0)];
    let (c, s) = cosh_sinhc(delta);
    Ok((Matrix2::identity() * c + n * s) * mu.exp())
}

/// `(cosh sqrt(d), sinh sqrt(d) / sqrt(d))` continued analytically to `d <= 0`.
pub(crate) fn cosh_sinhc(delta: f64) -> (f64, f64) {
    if delta.abs() < EXPM_NILPOTENT_TOL {
        (
            1.0 + delta / 2.0 + delta * delta / 24.0,
            1.0 + delta / 6.0 + delta * delta / 120.0,
        )
    } else if delta > 0.0 {
        let r = delta.sqrt();
        (r.cosh(), r.sinh() / r)
    } else {
        let r = (-delta).sqrt();
        (r.cos(), r.sin() / r)
    }
}

/// Group product `g * h`.
pub fn multiply(spec: &SpaceSpec, g: &GroupPoint, h: &GroupPoint) -> Result<GroupPoint> {
    spec.check(g)?;
    spec.check(h)?;
    match spec {
        SpaceSpec::Semidirect { .. } => {
            let a = spec.matrix_a().unwrap();
            let e = expm2(&a, g.coords.z)?;
            let p = Vector2::new(g.coords.x, g.coords.y) + e * Vector2::new(h.coords.x, h.coords.y);
            Ok(GroupPoint::semidirect(p.x, p.y, g.coords.z + h.coords.z))
        }
        SpaceSpec::SlTwoTilde { .. } => Ok(su11::compose(g, h)),
        SpaceSpec::Product { .. } => Err(Error::Unsupported(
            "product spaces carry no group structure".into(),
        )),
    }
}

pub fn inverse(spec: &SpaceSpec, g: &GroupPoint) -> Result<GroupPoint> {
    spec.check(g)?;
    match spec {
        SpaceSpec::Semidirect { .. } => {
            let a = spec.matrix_a().unwrap();
            let e = expm2(&a, -g.coords.z)?;
            let p = -(e * Vector2::new(g.coords.x, g.coords.y));
            Ok(GroupPoint::semidirect(p.x, p.y, -g.coords.z))
        }
        SpaceSpec::SlTwoTilde { .. } => {
            let w = g.disc();
            let th = g.theta();
            let winv = -w * Complex64::from_polar(1.0, th);
            Ok(GroupPoint::sl2(winv, -th))
        }
        SpaceSpec::Product { .. } => Err(Error::Unsupported(
            "product spaces carry no group structure".into(),
        )),
    }
}

/// The one-parameter subgroup `Gamma` with `Gamma'(0) = v`, evaluated at `t`.
pub fn one_param_subgroup(spec: &SpaceSpec, v: &LieVector, t: f64) -> Result<GroupPoint> {
    if v.is_zero() {
        return Err(Error::InvalidArgument(
            "one-parameter subgroup of the zero vector".into(),
        ));
    }
    if !t.is_finite() || v.0.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("one_param_subgroup input"));
    }
    match spec {
        SpaceSpec::Semidirect { .. } => {
            // exp of the augmented generator [[v3 A, (v1, v2)], [0, 0]] carries
            // int_0^t e^{s v3 A} ds (v1, v2) in its last column.
            let a = spec.matrix_a().unwrap() * v.0.z;
            let gen = Matrix3::new(
                a[(0, 0)],
                a[(0, 1)],
                v.0.x,
                a[(1, 0)],
                a[(1, 1)],
                v.0.y,
                0.0,
                0.0,
                0.0,
            );
            let e = (gen * t).exp();
            Ok(GroupPoint::semidirect(e[(0, 2)], e[(1, 2)], v.0.z * t))
        }
        SpaceSpec::SlTwoTilde { .. } => Ok(su11::exp_point(&v.0, t)),
        SpaceSpec::Product { .. } => Err(Error::Unsupported(
            "product spaces carry no group structure".into(),
        )),
    }
}

/// `SU(1,1)` model of `SL~(2,R)`.
///
/// The Lie algebra isomorphism `sl(2,R) -> su(1,1)` is `X -> P X P^{-1}` with
/// `P = [[1, i], [1, -i]]`; it sends `a E_1 + b E_2 + c E_3` to
/// `[[i c, a + i b], [a - i b, -i c]]`, so `exp(t E_3)` acts on the disc as the
/// rotation by `2t`.
pub mod su11 {
    use super::*;

    pub type CMat = Matrix2<Complex64>;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Algebra element for components `(a, b, c)` in `(E_1, E_2, E_3)`.
    pub fn algebra(v: &Vector3<f64>) -> CMat {
        CMat::new(c(0.0, v.z), c(v.x, v.y), c(v.x, -v.y), c(0.0, -v.z))
    }

    /// Inverse of [`algebra`] (imaginary trace part discarded).
    pub fn components(x: &CMat) -> Vector3<f64> {
        let beta = (x[(0, 1)] + x[(1, 0)].conj()) * 0.5;
        let alpha = 0.5 * (x[(0, 0)].im - x[(1, 1)].im);
        Vector3::new(beta.re, beta.im, alpha)
    }

    /// `SU(1,1)` matrix of the point `(w, theta)`.
    pub fn matrix(p: &Vector3<f64>) -> CMat {
        let w = c(p.x, p.y);
        let scale = 1.0 / (1.0 - w.norm_sqr()).sqrt();
        let u = Complex64::from_polar(scale, 0.5 * p.z);
        CMat::new(u, u * w, u.conj() * w.conj(), u.conj())
    }

    pub fn inverse_matrix(m: &CMat) -> CMat {
        CMat::new(m[(1, 1)], -m[(0, 1)], -m[(1, 0)], m[(0, 0)])
    }

    /// Projection to `SL(2,R)`.
    pub fn to_real(p: &Vector3<f64>) -> Matrix2<f64> {
        let m = matrix(p);
        let pm = CMat::new(c(1.0, 0.0), c(0.0, 1.0), c(1.0, 0.0), c(0.0, -1.0));
        let pinv = CMat::new(c(0.5, 0.0), c(0.5, 0.0), c(0.0, -0.5), c(0.0, 0.5));
        let r = pinv * m * pm;
        Matrix2::new(r[(0, 0)].re, r[(0, 1)].re, r[(1, 0)].re, r[(1, 1)].re)
    }

    pub(crate) fn compose(g: &GroupPoint, h: &GroupPoint) -> GroupPoint {
        let m = matrix(&g.coords) * matrix(&h.coords);
        let w = m[(0, 1)] / m[(0, 0)];
        // 1 + w1 conj(w2) e^{-i theta2} has positive real part, so its
        // principal argument is the continuous lift.
        let corr = Complex64::new(1.0, 0.0)
            + g.disc() * h.disc().conj() * Complex64::from_polar(1.0, -h.theta());
        GroupPoint::sl2(w, g.theta() + h.theta() + 2.0 * corr.arg())
    }

    /// `exp(t X)` as a point, with the winding lifted continuously from `t = 0`.
    pub(crate) fn exp_point(v: &Vector3<f64>, t: f64) -> GroupPoint {
        let alpha = v.z;
        let beta = c(v.x, v.y);
        let disc = beta.norm_sqr() - alpha * alpha;
        let (ch, sh) = cosh_sinhc(disc * t * t);
        let s = sh * t;
        let p = c(ch, alpha * s);
        let q = beta * s;
        let w = q / p;
        let half = if disc < -EXPM_NILPOTENT_TOL {
            let omega = (-disc).sqrt();
            lifted_arg(omega * t, alpha / omega)
        } else {
            p.arg()
        };
        GroupPoint::sl2(w, 2.0 * half)
    }

    /// Continuous argument of `cos(phi) + i k sin(phi)` along `phi` from 0.
    fn lifted_arg(phi: f64, k: f64) -> f64 {
        let wind = ((phi - phi.sin().atan2(phi.cos())) / (2.0 * PI)).round();
        let base = (k.abs() * phi.sin()).atan2(phi.cos()) + 2.0 * PI * wind;
        base * k.signum()
    }

    /// Coordinate velocity -> components in `(E_1, E_2, E_3)` of the left
    /// trivialisation `g^{-1} dg`.
    pub fn left_trivialization(p: &Vector3<f64>) -> Matrix3<f64> {
        let w = c(p.x, p.y);
        let scale = 1.0 / (1.0 - w.norm_sqr()).sqrt();
        let s3 = scale * scale * scale;
        let u = Complex64::from_polar(1.0, 0.5 * p.z);
        let n = CMat::new(u, u * w, u.conj() * w.conj(), u.conj());
        let minv = inverse_matrix(&matrix(p));
        let d_re = n * c(s3 * p.x, 0.0)
            + CMat::new(c(0.0, 0.0), u, u.conj(), c(0.0, 0.0)) * c(scale, 0.0);
        let d_im = n * c(s3 * p.y, 0.0)
            + CMat::new(c(0.0, 0.0), u * c(0.0, 1.0), u.conj() * c(0.0, -1.0), c(0.0, 0.0))
                * c(scale, 0.0);
        let d_th = CMat::new(
            u * c(0.0, 0.5),
            u * w * c(0.0, 0.5),
            u.conj() * w.conj() * c(0.0, -0.5),
            u.conj() * c(0.0, -0.5),
        ) * c(scale, 0.0);
        let cols = [d_re, d_im, d_th].map(|d| components(&(minv * d)));
        Matrix3::from_columns(&cols)
    }

    /// `Ad_{g^{-1}} X` in `(E_1, E_2, E_3)` components.
    pub fn adjoint_inverse(p: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
        let m = matrix(p);
        components(&(inverse_matrix(&m) * algebra(v) * m))
    }

    /// `Ad_g X` in `(E_1, E_2, E_3)` components.
    pub fn adjoint(p: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
        let m = matrix(p);
        components(&(m * algebra(v) * inverse_matrix(&m)))
    }
}
