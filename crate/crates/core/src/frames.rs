//! Orthonormal frames, metric, connection and curvature.
//!
//! Every space carries a global orthonormal frame `{e_1, e_2, e_3}`:
//!
//! - semidirect products: the left invariant frame `E_i` (columns of
//!   `diag(e^{zA}, 1)`), orthonormal for the canonical metric;
//! - `SL~(2,R)`: `e_i = lambda_i^{-1/2} E_i`;
//! - `M^2(kappa) x R`: the symmetric square root frame of the exponential
//!   chart on `M^2(kappa)` plus `d_t`. This frame is not left invariant;
//!   structure constants are evaluated pointwise.
//!
//! Tensors are stored in frame components. `Structure` is `c[i][j][k] = c^k_ij`
//! with `[e_i, e_j] = sum_k c^k_ij e_k`; `Connection` is
//! `g[i][j][k] = <nabla_{e_i} e_j, e_k>`.

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{expm2, multiply, one_param_subgroup, su11, GroupPoint, LieVector, SpaceSpec};

pub type Tensor3 = [[[f64; 3]; 3]; 3];
pub type Structure = Tensor3;
pub type Connection = Tensor3;

/// Step of the centered differences used by derivative checks.
pub const FD_STEP: f64 = 1e-5;

/// A tangent vector: base point plus components in the orthonormal frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentVector {
    pub base: GroupPoint,
    pub comps: Vector3<f64>,
}

/// `(sin sqrt(x)) / sqrt(x)`, continued to `x <= 0`.
fn sinc_k(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        1.0 - x / 6.0 + x * x / 120.0 - x * x * x / 5040.0
    } else if x > 0.0 {
        let r = x.sqrt();
        r.sin() / r
    } else {
        let r = (-x).sqrt();
        r.sinh() / r
    }
}

/// `(1 - sinc_k(x)) / x`.
fn one_minus_sinc_over_x(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        1.0 / 6.0 - x / 120.0 + x * x / 5040.0 - x * x * x / 362880.0
    } else {
        (1.0 - sinc_k(x)) / x
    }
}

/// Derivative of [`sinc_k`].
fn sinc_k_prime(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        -1.0 / 6.0 + x / 60.0 - x * x / 1680.0 + x * x * x / 90720.0 - x.powi(4) / 7983360.0
    } else if x > 0.0 {
        let r = x.sqrt();
        (r * r.cos() - r.sin()) / (2.0 * r * r * r)
    } else {
        let r = (-x).sqrt();
        -(r * r.cosh() - r.sinh()) / (2.0 * r * r * r)
    }
}

/// Derivative of [`one_minus_sinc_over_x`].
fn one_minus_sinc_over_x_prime(x: f64) -> f64 {
    if x.abs() < 1e-2 {
        -1.0 / 120.0 + x / 2520.0 - x * x / 120960.0 + x * x * x / 9979200.0 - x.powi(4) / 1245404160.0
    } else {
        (-sinc_k_prime(x) * x - (1.0 - sinc_k(x))) / (x * x)
    }
}

/// Derivative of the product coframe along `dir`, in closed form.
fn product_coframe_derivative(kappa: f64, p: &Vector3<f64>, dir: &Vector3<f64>) -> Result<Matrix3<f64>> {
    let (x, h) = product_horizontal(kappa, p)?;
    let d = Vector2::new(dir.x, dir.y);
    let dx = 2.0 * kappa * h.dot(&d);
    let w = kappa * one_minus_sinc_over_x(x);
    let dm = Matrix2::identity() * (sinc_k_prime(x) * dx)
        + h * h.transpose() * (kappa * one_minus_sinc_over_x_prime(x) * dx)
        + (d * h.transpose() + h * d.transpose()) * w;
    let mut m = block(&dm);
    m[(2, 2)] = 0.0;
    Ok(m)
}

fn product_horizontal(kappa: f64, p: &Vector3<f64>) -> Result<(f64, Vector2<f64>)> {
    let h = Vector2::new(p.x, p.y);
    let x = kappa * h.norm_squared();
    if kappa > 0.0 && x.sqrt() >= std::f64::consts::PI {
        return Err(Error::InvalidArgument(format!(
            "point beyond the cut locus of the exponential chart (rho = {})",
            h.norm()
        )));
    }
    Ok((x, h))
}

/// Matrix whose rows express the orthonormal coframe in coordinates:
/// `comps = coframe * coordinate_velocity`.
pub fn coframe(spec: &SpaceSpec, p: &GroupPoint) -> Result<Matrix3<f64>> {
    spec.check(p)?;
    match spec {
        SpaceSpec::Semidirect { .. } => {
            let e = expm2(&spec.matrix_a().unwrap(), -p.coords.z)?;
            Ok(block(&e))
        }
        SpaceSpec::SlTwoTilde { lambda } => {
            let l = su11::left_trivialization(&p.coords);
            let s = Matrix3::from_diagonal(&Vector3::from(*lambda).map(f64::sqrt));
            Ok(s * l)
        }
        SpaceSpec::Product { kappa } => {
            let (x, h) = product_horizontal(*kappa, &p.coords)?;
            let s = sinc_k(x);
            // sqrt(m) I + (1 - sqrt(m)) h h^T / rho^2 with sqrt(m) = sn(rho)/rho
            let w = kappa * one_minus_sinc_over_x(x);
            let m = Matrix2::identity() * s + h * h.transpose() * w;
            Ok(block(&m))
        }
    }
}

/// Matrix whose columns are the orthonormal frame vectors in coordinates.
pub fn frame(spec: &SpaceSpec, p: &GroupPoint) -> Result<Matrix3<f64>> {
    spec.check(p)?;
    match spec {
        SpaceSpec::Semidirect { .. } => {
            let e = expm2(&spec.matrix_a().unwrap(), p.coords.z)?;
            Ok(block(&e))
        }
        SpaceSpec::SlTwoTilde { .. } => coframe(spec, p)?
            .try_inverse()
            .ok_or(Error::NonFinite("SL~(2,R) coframe inversion")),
        SpaceSpec::Product { kappa } => {
            let (x, h) = product_horizontal(*kappa, &p.coords)?;
            let s = sinc_k(x);
            let w = -kappa * one_minus_sinc_over_x(x) / s;
            let m = Matrix2::identity() / s + h * h.transpose() * w;
            Ok(block(&m))
        }
    }
}

fn block(m: &Matrix2<f64>) -> Matrix3<f64> {
    Matrix3::new(
        m[(0, 0)],
        m[(0, 1)],
        0.0,
        m[(1, 0)],
        m[(1, 1)],
        0.0,
        0.0,
        0.0,
        1.0,
    )
}

/// Five-point derivative of a matrix valued map along `dir`.
fn directional_derivative<F>(f: F, p: &GroupPoint, dir: &Vector3<f64>, h: f64) -> Result<Matrix3<f64>>
where
    F: Fn(&GroupPoint) -> Result<Matrix3<f64>>,
{
    let at = |s: f64| f(&GroupPoint::new(p.geometry, p.coords + dir * s));
    Ok((at(-2.0 * h)? - at(2.0 * h)? + (at(h)? - at(-h)?) * 8.0) / (12.0 * h))
}

/// Derivative of [`coframe`] along the coordinate vector `dir`.
pub fn coframe_derivative(spec: &SpaceSpec, p: &GroupPoint, dir: &Vector3<f64>) -> Result<Matrix3<f64>> {
    match spec {
        SpaceSpec::Semidirect { .. } => {
            let a = spec.matrix_a().unwrap();
            let e = expm2(&a, -p.coords.z)?;
            let d = -(a * e) * dir.z;
            let mut m = block(&d);
            m[(2, 2)] = 0.0;
            Ok(m)
        }
        SpaceSpec::Product { kappa } => {
            spec.check(p)?;
            product_coframe_derivative(*kappa, &p.coords, dir)
        }
        _ => directional_derivative(|q| coframe(spec, q), p, dir, 1e-3),
    }
}

/// Metric coefficients in coordinates.
///
/// For semidirect products this is the closed form in terms of the entries
/// `a_ij(-z)` of `e^{-zA}`; otherwise `J^T J` for the coframe `J`.
pub fn metric_tensor(spec: &SpaceSpec, p: &GroupPoint) -> Result<Matrix3<f64>> {
    spec.check(p)?;
    match spec {
        SpaceSpec::Semidirect { .. } => {
            let m = expm2(&spec.matrix_a().unwrap(), -p.coords.z)?;
            let (a11, a12, a21, a22) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
            let gxy = a11 * a12 + a21 * a22;
            Ok(Matrix3::new(
                a11 * a11 + a21 * a21,
                gxy,
                0.0,
                gxy,
                a12 * a12 + a22 * a22,
                0.0,
                0.0,
                0.0,
                1.0,
            ))
        }
        _ => {
            let j = coframe(spec, p)?;
            Ok(j.transpose() * j)
        }
    }
}

/// Metric as the Gram matrix of the frame: `(F^{-1})^T F^{-1}` with `F` the
/// frame matrix inverted numerically. Independent of [`metric_tensor`].
pub fn metric_gram(spec: &SpaceSpec, p: &GroupPoint) -> Result<Matrix3<f64>> {
    let f = frame(spec, p)?;
    let inv = f
        .try_inverse()
        .ok_or(Error::NonFinite("frame inversion"))?;
    Ok(inv.transpose() * inv)
}

/// Squared length of a coordinate vector.
pub fn norm_sq(spec: &SpaceSpec, p: &GroupPoint, v: &Vector3<f64>) -> Result<f64> {
    Ok((coframe(spec, p)? * v).norm_squared())
}

/// Left invariant fields `E_i` (not normalised) and right invariant fields
/// `F_i` with seeds the coordinate basis at the identity, in coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameFields {
    pub e: [Vector3<f64>; 3],
    pub f: [Vector3<f64>; 3],
}

pub fn frame_fields(spec: &SpaceSpec, p: &GroupPoint) -> Result<FrameFields> {
    spec.check(p)?;
    let e = match spec {
        SpaceSpec::Semidirect { .. } => frame(spec, p)?,
        SpaceSpec::SlTwoTilde { .. } => su11::left_trivialization(&p.coords)
            .try_inverse()
            .ok_or(Error::NonFinite("SL~(2,R) trivialization"))?,
        SpaceSpec::Product { .. } => {
            return Err(Error::Unsupported(
                "left/right invariant fields of a product space".into(),
            ))
        }
    };
    let f = [0, 1, 2].map(|i| {
        VectorField::RightInvariant(LieVector(Vector3::ith(i, 1.0)))
            .eval(spec, p)
            .unwrap()
    });
    Ok(FrameFields {
        e: [e.column(0).into(), e.column(1).into(), e.column(2).into()],
        f,
    })
}

/// True when the frame is left invariant, so structure constants and the
/// connection do not depend on the point.
pub fn is_left_invariant(spec: &SpaceSpec) -> bool {
    !matches!(spec, SpaceSpec::Product { .. })
}

/// Structure constants of the orthonormal frame at `p`.
pub fn structure(spec: &SpaceSpec, p: &GroupPoint) -> Result<Structure> {
    let mut c = [[[0.0; 3]; 3]; 3];
    match spec {
        SpaceSpec::Semidirect { a } => {
            let [[a, b], [cc, d]] = *a;
            set_antisym(&mut c, 2, 0, [a, cc, 0.0]);
            set_antisym(&mut c, 2, 1, [b, d, 0.0]);
        }
        SpaceSpec::SlTwoTilde { lambda } => {
            let s = lambda.map(f64::sqrt);
            set_antisym(&mut c, 0, 1, [0.0, 0.0, -2.0 * s[2] / (s[0] * s[1])]);
            set_antisym(&mut c, 1, 2, [2.0 * s[0] / (s[1] * s[2]), 0.0, 0.0]);
            set_antisym(&mut c, 2, 0, [0.0, 2.0 * s[1] / (s[2] * s[0]), 0.0]);
        }
        SpaceSpec::Product { .. } => {
            let f = frame(spec, p)?;
            let cols: Vec<Vector3<f64>> = (0..3).map(|i| f.column(i).into()).collect();
            let dj = cols
                .iter()
                .map(|d| coframe_derivative(spec, p, d))
                .collect::<Result<Vec<_>>>()?;
            for i in 0..3 {
                for k in (i + 1)..3 {
                    // J [e_i, e_k] = J (D_{e_i} e_k - D_{e_k} e_i) with D e = -F (DJ) e
                    let comps = dj[k] * cols[i] - dj[i] * cols[k];
                    set_antisym(&mut c, i, k, [comps.x, comps.y, comps.z]);
                }
            }
        }
    }
    Ok(c)
}

fn set_antisym(c: &mut Structure, i: usize, j: usize, v: [f64; 3]) {
    c[i][j] = v;
    c[j][i] = v.map(|x| -x);
}

/// Levi-Civita connection from the Koszul formula in an orthonormal frame.
pub fn connection_from(c: &Structure) -> Connection {
    let mut g = [[[0.0; 3]; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                g[i][j][k] = 0.5 * (c[i][j][k] - c[j][k][i] + c[k][i][j]);
            }
        }
    }
    g
}

pub fn connection_coeffs(spec: &SpaceSpec, p: &GroupPoint) -> Result<Connection> {
    Ok(connection_from(&structure(spec, p)?))
}

/// `nabla_u v` for fields with constant frame components `u`, `v`.
pub fn covariant(g: &Connection, u: &Vector3<f64>, v: &Vector3<f64>) -> Vector3<f64> {
    let mut out = Vector3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let w = u[i] * v[j];
            if w != 0.0 {
                for k in 0..3 {
                    out[k] += w * g[i][j][k];
                }
            }
        }
    }
    out
}

/// Ricci tensor in the orthonormal frame, and scalar curvature.
pub fn ricci(spec: &SpaceSpec, p: &GroupPoint) -> Result<(Matrix3<f64>, f64)> {
    spec.check(p)?;
    if let SpaceSpec::Product { kappa } = spec {
        // horizontal frame of a Riemannian product with a surface of curvature kappa
        let r = Matrix3::from_diagonal(&Vector3::new(*kappa, *kappa, 0.0));
        return Ok((r, 2.0 * kappa));
    }
    let c = structure(spec, p)?;
    let g = connection_from(&c);
    Ok(ricci_from(&c, &g))
}

/// Ricci tensor of a frame with constant structure constants.
pub fn ricci_from(c: &Structure, g: &Connection) -> (Matrix3<f64>, f64) {
    // R^l_ijk = <R(e_i, e_j) e_k, e_l>, Ric_jk = sum_i R^i_ijk
    let mut ric = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let l = i;
                let mut r = 0.0;
                for m in 0..3 {
                    r += g[j][k][m] * g[i][m][l] - g[i][k][m] * g[j][m][l] - c[i][j][m] * g[m][k][l];
                }
                ric[(j, k)] += r;
            }
        }
    }
    let scal = ric.trace();
    (ric, scal)
}

/// Killing and test vector fields.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum VectorField {
    /// Right invariant field with the given seed at the identity; its flow is
    /// left translation by the one-parameter subgroup of the seed.
    RightInvariant(LieVector),
    /// The orthonormal frame field `e_i` (`i` in `0..3`).
    LeftInvariant(usize),
    /// Infinitesimal rotation about the distinguished axis of a rotational space.
    Rotation,
    /// `d_z` (semidirect), `d_t` (product).
    Vertical,
    Combination(Vec<(f64, VectorField)>),
}

impl VectorField {
    /// Value at `p` in coordinates.
    pub fn eval(&self, spec: &SpaceSpec, p: &GroupPoint) -> Result<Vector3<f64>> {
        spec.check(p)?;
        let q = &p.coords;
        match self {
            VectorField::RightInvariant(v) => match spec {
                SpaceSpec::Semidirect { .. } => {
                    let a = spec.matrix_a().unwrap();
                    let h = a * Vector2::new(q.x, q.y) * v.0.z;
                    Ok(Vector3::new(v.0.x + h.x, v.0.y + h.y, v.0.z))
                }
                SpaceSpec::SlTwoTilde { .. } => {
                    let comps = su11::adjoint_inverse(q, &v.0);
                    let e = su11::left_trivialization(q)
                        .try_inverse()
                        .ok_or(Error::NonFinite("SL~(2,R) trivialization"))?;
                    Ok(e * comps)
                }
                SpaceSpec::Product { .. } => Err(Error::Unsupported(
                    "right invariant fields on a product space".into(),
                )),
            },
            VectorField::LeftInvariant(i) => {
                if *i > 2 {
                    return Err(Error::InvalidArgument(format!("frame index {i}")));
                }
                Ok(frame(spec, p)?.column(*i).into())
            }
            VectorField::Rotation => match rotation_kind(spec)? {
                RotationKind::Planar | RotationKind::Disc => Ok(Vector3::new(-q.y, q.x, 0.0)),
                RotationKind::Heisenberg(b) => Ok(Vector3::new(
                    0.5 * b * (q.y * q.y - q.z * q.z),
                    -q.z,
                    q.y,
                )),
            },
            VectorField::Vertical => match spec {
                SpaceSpec::SlTwoTilde { .. } => Err(Error::Unsupported(
                    "vertical field on SL~(2,R); use RightInvariant(E_3)".into(),
                )),
                _ => Ok(Vector3::z()),
            },
            VectorField::Combination(terms) => {
                let mut out = Vector3::zeros();
                for (w, f) in terms {
                    out += f.eval(spec, p)? * *w;
                }
                Ok(out)
            }
        }
    }

    /// Coordinate Jacobian `DK` at `p`.
    pub fn jacobian(&self, spec: &SpaceSpec, p: &GroupPoint) -> Result<Matrix3<f64>> {
        if let (VectorField::RightInvariant(v), SpaceSpec::Semidirect { .. }) = (self, spec) {
            let a = spec.matrix_a().unwrap() * v.0.z;
            let mut m = block(&a);
            m[(2, 2)] = 0.0;
            return Ok(m);
        }
        if let VectorField::Rotation = self {
            let q = &p.coords;
            return Ok(match rotation_kind(spec)? {
                RotationKind::Planar | RotationKind::Disc => {
                    Matrix3::new(0.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
                }
                RotationKind::Heisenberg(b) => {
                    Matrix3::new(0.0, b * q.y, -b * q.z, 0.0, 0.0, -1.0, 0.0, 1.0, 0.0)
                }
            });
        }
        if let VectorField::Vertical = self {
            self.eval(spec, p)?;
            return Ok(Matrix3::zeros());
        }
        let h = 1e-4;
        let mut m = Matrix3::zeros();
        for i in 0..3 {
            let d = Vector3::ith(i, 1.0);
            let at = |s: f64| self.eval(spec, &GroupPoint::new(p.geometry, p.coords + d * s));
            let col = (at(-2.0 * h)? - at(2.0 * h)? + (at(h)? - at(-h)?) * 8.0) / (12.0 * h);
            m.set_column(i, &col);
        }
        Ok(m)
    }

    /// Flow of the field for time `t` starting at `p`.
    pub fn flow(&self, spec: &SpaceSpec, p: &GroupPoint, t: f64) -> Result<GroupPoint> {
        spec.check(p)?;
        let q = &p.coords;
        match self {
            VectorField::RightInvariant(v) => {
                if v.is_zero() {
                    return Ok(*p);
                }
                multiply(spec, &one_param_subgroup(spec, v, t)?, p)
            }
            VectorField::Rotation => {
                let (c, s) = (t.cos(), t.sin());
                let out = match rotation_kind(spec)? {
                    RotationKind::Planar | RotationKind::Disc => {
                        Vector3::new(c * q.x - s * q.y, s * q.x + c * q.y, q.z)
                    }
                    RotationKind::Heisenberg(b) => {
                        let (y, z) = (c * q.y - s * q.z, s * q.y + c * q.z);
                        let inv = q.x - 0.5 * b * q.y * q.z;
                        Vector3::new(inv + 0.5 * b * y * z, y, z)
                    }
                };
                Ok(GroupPoint::new(p.geometry, out))
            }
            VectorField::Vertical => {
                self.eval(spec, p)?;
                Ok(GroupPoint::new(p.geometry, q + Vector3::z() * t))
            }
            _ => Err(Error::Unsupported(format!("closed form flow of {self:?}"))),
        }
    }
}

/// How a rotationally symmetric space rotates about its axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RotationKind {
    /// Rotation of `(x, y)`; the axis is the `z` (or `t`) line.
    Planar,
    /// `SL~(2,R)` with `lambda_1 = lambda_2`: `w -> e^{i a} w`.
    Disc,
    /// `A = [[0, b], [0, 0]]`: rotation of `(y, z)` preserving `x - b y z / 2`;
    /// the axis is the `x` line.
    Heisenberg(f64),
}

pub fn rotation_kind(spec: &SpaceSpec) -> Result<RotationKind> {
    const TOL: f64 = 1e-12;
    match spec {
        SpaceSpec::Semidirect { a } => {
            let [[a, b], [c, d]] = *a;
            if (a - d).abs() < TOL && (b + c).abs() < TOL {
                Ok(RotationKind::Planar)
            } else if a.abs() < TOL && c.abs() < TOL && d.abs() < TOL {
                Ok(RotationKind::Heisenberg(b))
            } else {
                Err(Error::Unsupported(format!(
                    "A = {:?} has no rotational symmetry",
                    [[a, b], [c, d]]
                )))
            }
        }
        SpaceSpec::SlTwoTilde { lambda } => {
            if (lambda[0] - lambda[1]).abs() <= TOL * lambda[0] {
                Ok(RotationKind::Disc)
            } else {
                Err(Error::Unsupported(format!(
                    "lambda = {lambda:?} has lambda_1 != lambda_2"
                )))
            }
        }
        SpaceSpec::Product { .. } => Ok(RotationKind::Planar),
    }
}

/// `max_{i,j} |<nabla_{e_i} K, e_j> + <nabla_{e_j} K, e_i>|` by centered
/// differences; zero exactly when `K` is Killing.
pub fn killing_residual(spec: &SpaceSpec, k: &VectorField, p: &GroupPoint) -> Result<f64> {
    let f = frame(spec, p)?;
    let g = connection_coeffs(spec, p)?;
    let comps = |q: &GroupPoint| -> Result<Vector3<f64>> { Ok(coframe(spec, q)? * k.eval(spec, q)?) };
    let kp = comps(p)?;
    // m[(i, j)] = <nabla_{e_i} K, e_j>
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        let d: Vector3<f64> = f.column(i).into();
        let plus = comps(&GroupPoint::new(p.geometry, p.coords + d * FD_STEP))?;
        let minus = comps(&GroupPoint::new(p.geometry, p.coords - d * FD_STEP))?;
        let mut row = (plus - minus) / (2.0 * FD_STEP);
        row += covariant(&g, &Vector3::ith(i, 1.0), &kp);
        m.set_row(i, &row.transpose());
    }
    Ok((m + m.transpose()).amax())
}

/// Sampled geodesic.
#[derive(Debug, Clone)]
pub struct Geodesic {
    pub t: Vec<f64>,
    pub points: Vec<GroupPoint>,
    /// Velocity in frame components.
    pub velocity: Vec<Vector3<f64>>,
}

fn geodesic_rhs(spec: &SpaceSpec, x: &Vector3<f64>, v: &Vector3<f64>, geom: crate::Geometry) -> Result<(Vector3<f64>, Vector3<f64>)> {
    let p = GroupPoint::new(geom, *x);
    let f = frame(spec, &p)?;
    let g = connection_coeffs(spec, &p)?;
    Ok((f * v, -covariant(&g, v, v)))
}

/// Geodesic from `v.base` with initial velocity `v` for time `t_max`, by
/// classical RK4 on the point and the frame components of the velocity.
pub fn geodesic(spec: &SpaceSpec, v: &TangentVector, t_max: f64, n_steps: usize) -> Result<Geodesic> {
    if n_steps < 2 {
        return Err(Error::InvalidArgument("geodesic needs at least 2 steps".into()));
    }
    if !(v.comps.norm() > 0.0) || !t_max.is_finite() {
        return Err(Error::InvalidArgument("geodesic needs a nonzero finite velocity".into()));
    }
    spec.check(&v.base)?;
    let geom = v.base.geometry;
    let h = t_max / n_steps as f64;
    let mut x = v.base.coords;
    let mut w = v.comps;
    let mut out = Geodesic {
        t: vec![0.0],
        points: vec![v.base],
        velocity: vec![w],
    };
    for n in 1..=n_steps {
        let (k1x, k1v) = geodesic_rhs(spec, &x, &w, geom)?;
        let (k2x, k2v) = geodesic_rhs(spec, &(x + k1x * (h / 2.0)), &(w + k1v * (h / 2.0)), geom)?;
        let (k3x, k3v) = geodesic_rhs(spec, &(x + k2x * (h / 2.0)), &(w + k2v * (h / 2.0)), geom)?;
        let (k4x, k4v) = geodesic_rhs(spec, &(x + k3x * h), &(w + k3v * h), geom)?;
        x += (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0);
        w += (k1v + k2v * 2.0 + k3v * 2.0 + k4v) * (h / 6.0);
        out.t.push(n as f64 * h);
        out.points.push(GroupPoint::new(geom, x));
        out.velocity.push(w);
    }
    Ok(out)
}
