//! Constant mean curvature surfaces built from profile curves.
//!
//! A surface invariant under a Killing field `K` is `f(s, t) = Phi_t(beta(s))`
//! where `Phi` is the flow of `K` and `beta` lies in a coordinate plane (the
//! slice). The profile is parametrised by Euclidean arclength in slice
//! coordinates, `beta' = cos(phi) a + sin(phi) b`, and the mean curvature of
//! `f` is affine in the turning rate `phi'`, so prescribing `H` gives a first
//! order ODE for `(x, y, phi)`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frames::{self, RotationKind, VectorField};
use crate::group::{inverse, multiply, one_param_subgroup, GroupPoint, LieVector, SpaceSpec};
use crate::ode::{self, Control, Options, Trajectory};
use crate::subgroups::polygon_separation;
use crate::surface::{fields_from_jet, Ambient, Immersion, Jet, NodeFields, Topology};

/// Axis-orthogonality tolerance for a rotational profile to count as closed.
pub const CLOSURE_TOL: f64 = 1e-6;

/// The coordinate plane `origin + x a + y b` holding a profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Slice {
    pub origin: Vector3<f64>,
    pub a: Vector3<f64>,
    pub b: Vector3<f64>,
}

impl Slice {
    /// The plane `z = 0` of a semidirect product.
    pub fn horizontal() -> Self {
        Self { origin: Vector3::zeros(), a: Vector3::x(), b: Vector3::y() }
    }

    pub fn coords(&self, x: f64, y: f64) -> Vector3<f64> {
        self.origin + self.a * x + self.b * y
    }

    fn tangent(&self, phi: f64) -> Vector3<f64> {
        self.a * phi.cos() + self.b * phi.sin()
    }

    fn turn(&self, phi: f64) -> Vector3<f64> {
        self.b * phi.cos() - self.a * phi.sin()
    }
}

/// A profile sample: slice position, heading and turning rate `phi'`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileState {
    pub s: f64,
    pub x: f64,
    pub y: f64,
    pub phi: f64,
    pub kappa: f64,
}

type StateFn = dyn Fn(f64) -> Result<ProfileState> + Send + Sync;

/// Profile curve of a `K`-invariant surface.
#[derive(Clone)]
pub struct ProfileCurve {
    pub spec: SpaceSpec,
    pub killing: VectorField,
    pub slice: Slice,
    /// Sign applied to `T_s x T_t`.
    pub orientation: f64,
    pub s_range: (f64, f64),
    /// The profile is a closed loop of period `s_range.1 - s_range.0`.
    pub periodic: bool,
    state: Arc<StateFn>,
}

impl std::fmt::Debug for ProfileCurve {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProfileCurve")
            .field("killing", &self.killing)
            .field("slice", &self.slice)
            .field("orientation", &self.orientation)
            .field("s_range", &self.s_range)
            .field("periodic", &self.periodic)
            .finish()
    }
}

impl ProfileCurve {
    /// A profile given in closed form by `s -> (x, y, phi, phi')`.
    pub fn explicit<F>(spec: &SpaceSpec, killing: VectorField, slice: Slice, orientation: f64, s_range: (f64, f64), periodic: bool, f: F) -> Self
    where
        F: Fn(f64) -> (f64, f64, f64, f64) + Send + Sync + 'static,
    {
        let state = move |s: f64| {
            let (x, y, phi, kappa) = f(s);
            Ok(ProfileState { s, x, y, phi, kappa })
        };
        Self { spec: spec.clone(), killing, slice, orientation, s_range, periodic, state: Arc::new(state) }
    }

    pub fn state(&self, s: f64) -> Result<ProfileState> {
        (self.state)(s)
    }

    /// `n + 1` equally spaced samples over `s_range`.
    pub fn samples(&self, n: usize) -> Result<Vec<ProfileState>> {
        let (a, b) = self.s_range;
        (0..=n).map(|i| self.state(a + (b - a) * i as f64 / n as f64)).collect()
    }

    pub fn point(&self, s: f64) -> Result<GroupPoint> {
        let st = self.state(s)?;
        Ok(GroupPoint::new(self.spec.geometry(), self.slice.coords(st.x, st.y)))
    }

    /// Jet of `f` at `(s, 0)` with `u = s`, `v = t`.
    pub fn jet(&self, s: f64) -> Result<Jet> {
        let st = self.state(s)?;
        jet_at(&self.spec, &self.killing, &self.slice, st.x, st.y, st.phi, st.kappa)
    }

    /// Surface data at `(s, t)`.
    pub fn fields(&self, amb: &Ambient, s: f64, t: f64) -> Result<NodeFields> {
        let f = fields_from_jet(amb, &self.jet(s)?, self.orientation, (s, t))?;
        transport(&self.spec, &self.killing, &f, t)
    }
}

fn jet_at(spec: &SpaceSpec, k: &VectorField, slice: &Slice, x: f64, y: f64, phi: f64, kappa: f64) -> Result<Jet> {
    let p = GroupPoint::new(spec.geometry(), slice.coords(x, y));
    let fu = slice.tangent(phi);
    let kv = k.eval(spec, &p)?;
    let dk = k.jacobian(spec, &p)?;
    Ok(Jet { p, fu, fv: kv, fuu: slice.turn(phi) * kappa, fuv: dk * fu, fvv: dk * kv })
}

/// Coordinate Jacobian of the flow of `k` for time `t`.
fn flow_jacobian(spec: &SpaceSpec, k: &VectorField, p: &GroupPoint, t: f64) -> Result<Matrix3<f64>> {
    let h = 1e-4;
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        let d = Vector3::ith(i, 1.0);
        let at = |s: f64| -> Result<Vector3<f64>> { Ok(k.flow(spec, &GroupPoint::new(p.geometry, p.coords + d * s), t)?.coords) };
        let col = (at(-2.0 * h)? - at(2.0 * h)? + (at(h)? - at(-h)?) * 8.0) / (12.0 * h);
        m.set_column(i, &col);
    }
    Ok(m)
}

/// Moves surface data at `p` to `Phi_t(p)`. Curvatures are invariant; frame
/// components are pushed forward (and are unchanged by left translations).
fn transport(spec: &SpaceSpec, k: &VectorField, f: &NodeFields, t: f64) -> Result<NodeFields> {
    if t == 0.0 {
        return Ok(*f);
    }
    let q = k.flow(spec, &f.point, t)?;
    let mut out = *f;
    out.point = q;
    if matches!(k, VectorField::RightInvariant(_)) && frames::is_left_invariant(spec) {
        return Ok(out);
    }
    let m = frames::coframe(spec, &q)? * flow_jacobian(spec, k, &f.point, t)? * frames::frame(spec, &f.point)?;
    out.tu = m * f.tu;
    out.tv = m * f.tv;
    out.normal = (m * f.normal).normalize();
    Ok(out)
}

/// `f(s, t) = Phi_t(beta(s))` with `u = t` and `v = s`; a closed profile gives
/// a cylinder periodic in `v`.
pub fn killing_cylinder(profile: &ProfileCurve, t_range: (f64, f64), grid: (usize, usize)) -> Result<Immersion> {
    let spec = profile.spec.clone();
    let amb = Ambient::new(&spec)?;
    let (s0, s1) = profile.s_range;
    for i in 0..16 {
        let s = s0 + (s1 - s0) * i as f64 / 15.0;
        let p = profile.point(s)?;
        if profile.killing.eval(&spec, &p)?.norm() == 0.0 {
            return Err(Error::InvalidArgument(format!("Killing field vanishes on the profile at s = {s}")));
        }
        // errors when the profile is tangent to an orbit
        profile.fields(&amb, s, 0.0)?;
    }
    let topology = if profile.periodic { Topology::Cylinder } else { Topology::Plane };
    let pr = profile.clone();
    Immersion::from_fields(
        move |amb: &Ambient, u, v| pr.fields(amb, v, u),
        topology,
        t_range,
        profile.s_range,
        grid,
        -profile.orientation,
    )
}

/// Mean curvature functional of a profile: `H` is affine in `phi'`.
#[derive(Clone)]
struct Functional {
    amb: Arc<Ambient>,
    k: VectorField,
    slice: Slice,
    h: f64,
    orientation: f64,
}

impl Functional {
    fn new(spec: &SpaceSpec, k: &VectorField, slice: &Slice, h: f64, orientation: f64) -> Result<Self> {
        if !h.is_finite() {
            return Err(Error::NonFinite("target mean curvature"));
        }
        if orientation.abs() != 1.0 {
            return Err(Error::InvalidArgument("orientation must be +1 or -1".into()));
        }
        Ok(Self { amb: Arc::new(Ambient::new(spec)?), k: k.clone(), slice: *slice, h, orientation })
    }

    fn spec(&self) -> &SpaceSpec {
        &self.amb.spec
    }

    /// Turning rate giving mean curvature `h`, and the data at `phi' = 0`.
    fn solve(&self, x: f64, y: f64, phi: f64) -> Result<(f64, NodeFields)> {
        let jet = jet_at(self.spec(), &self.k, &self.slice, x, y, phi, 0.0)?;
        let f = fields_from_jet(&self.amb, &jet, self.orientation, (x, y))?;
        let j = frames::coframe(self.spec(), &jet.p)?;
        let inv = f.first.try_inverse().ok_or(Error::NonFinite("first fundamental form"))?;
        let c = 0.5 * inv[(0, 0)] * (j * self.slice.turn(phi)).dot(&f.normal);
        if !(c.abs() > 1e-14) {
            return Err(Error::DegenerateChart { u: x, v: y, det: c });
        }
        Ok(((self.h - f.h) / c, f))
    }

    fn curve(&self, traj: Arc<Trajectory>, s_range: (f64, f64), periodic: bool) -> ProfileCurve {
        let fun = self.clone();
        let (lo, hi) = (traj.segments[0].t0, traj.t_end());
        let state = move |s: f64| {
            let y = traj.eval(s.clamp(lo, hi)).ok_or(Error::InvalidArgument(format!("s = {s} outside the profile")))?;
            let (kappa, _) = fun.solve(y[0], y[1], y[2])?;
            Ok(ProfileState { s, x: y[0], y: y[1], phi: y[2], kappa })
        };
        ProfileCurve {
            spec: self.spec().clone(),
            killing: self.k.clone(),
            slice: self.slice,
            orientation: self.orientation,
            s_range,
            periodic,
            state: Arc::new(state),
        }
    }
}

/// State `(x, y, phi, area)`; `area` accumulates `sqrt(det I)` per unit `t`.
fn profile_rhs(fun: &Functional) -> impl FnMut(f64, &[f64], &mut [f64]) -> Result<()> + '_ {
    move |_, y, dy| {
        let (kappa, f) = fun.solve(y[0], y[1], y[2])?;
        dy[0] = y[2].cos();
        dy[1] = y[2].sin();
        dy[2] = kappa;
        dy[3] = f.first.determinant().sqrt();
        Ok(())
    }
}

fn profile_options(h_max: f64) -> Options {
    Options { rtol: 1e-11, atol: 1e-13, h0: 1e-4, h_max, max_steps: 200_000 }
}

/// Starting data and length of a profile integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shoot {
    pub x: f64,
    pub y: f64,
    pub phi: f64,
    pub length: f64,
    pub orientation: f64,
}

/// Integrates the profile whose invariant surface has mean curvature `h`.
pub fn solve_profile_cmc(spec: &SpaceSpec, k: &VectorField, h: f64, slice: &Slice, shoot: &Shoot) -> Result<ProfileCurve> {
    if !(shoot.length > 0.0) {
        return Err(Error::InvalidArgument("profile length must be positive".into()));
    }
    let fun = Functional::new(spec, k, slice, h, shoot.orientation)?;
    let traj = ode::integrate(
        profile_rhs(&fun),
        0.0,
        &[shoot.x, shoot.y, shoot.phi, 0.0],
        shoot.length,
        &profile_options(shoot.length / 16.0),
        |_| Ok(Control::Continue),
    )?;
    Ok(fun.curve(Arc::new(traj), (0.0, shoot.length), false))
}

/// A closed profile loop and how well it closes.
#[derive(Debug, Clone)]
pub struct ProfileLoop {
    pub profile: ProfileCurve,
    /// Start `(x0, 0)` on the `a` axis with heading `pi/2`.
    pub x0: f64,
    pub period: f64,
    pub closure_gap: f64,
}

fn wrap(a: f64) -> f64 {
    (a + PI).rem_euclid(2.0 * PI) - PI
}

/// Closed profile symmetric under the reflections of the slice in both
/// axes: shoots from `(x0, 0)` with heading `pi/2` and requires the curve to
/// cross the `b` axis perpendicularly, bisecting on `x0` over a scan of
/// `x_range`.
pub fn symmetric_loop(spec: &SpaceSpec, k: &VectorField, h: f64, slice: &Slice, orientation: f64, x_range: (f64, f64)) -> Result<ProfileLoop> {
    let fun = Functional::new(spec, k, slice, h, orientation)?;
    let s_max = 50.0 / (h.abs() + 0.1);
    let opts = profile_options(0.05);
    let quarter = |x0: f64| -> Option<f64> {
        let traj = ode::integrate(profile_rhs(&fun), 0.0, &[x0, 0.0, PI / 2.0, 0.0], s_max, &opts, |seg| {
            Ok(if seg.end()[0] < 0.0 { Control::Stop } else { Control::Continue })
        })
        .ok()?;
        if !traj.stopped {
            return None;
        }
        let seg = traj.segments.last().unwrap();
        let s = ode::bisect(|s| seg.eval(s)[0], seg.t0, seg.t1(), 80);
        Some(wrap(seg.eval(s)[2] - PI))
    };
    if !(x_range.0 > 0.0 && x_range.1 > x_range.0) {
        return Err(Error::InvalidArgument(format!("bad start range {x_range:?}")));
    }
    // geometric scan: loop sizes range over orders of magnitude
    let n = 96;
    let ratio = (x_range.1 / x_range.0).powf(1.0 / n as f64);
    let xs: Vec<f64> = (0..=n).map(|i| x_range.0 * ratio.powi(i as i32)).collect();
    let gs: Vec<Option<f64>> = xs.par_iter().map(|&x| quarter(x)).collect();
    let bracket = (0..n).find_map(|i| match (gs[i], gs[i + 1]) {
        (Some(a), Some(b)) if a * b <= 0.0 && (a - b).abs() < 1.5 => Some((xs[i], xs[i + 1])),
        _ => None,
    });
    let (lo, hi) = bracket.ok_or_else(|| Error::NoClosure {
        h,
        reason: format!("no symmetric loop for x0 in [{}, {}]", x_range.0, x_range.1),
    })?;
    let x0 = ode::bisect(|x| quarter(x).unwrap_or(f64::NAN), lo, hi, 60);
    // the full loop, integrated honestly
    let mut below = false;
    let traj = ode::integrate(profile_rhs(&fun), 0.0, &[x0, 0.0, PI / 2.0, 0.0], 8.0 * s_max, &opts, |seg| {
        let y = seg.end()[1];
        if y < 0.0 {
            below = true;
        }
        Ok(if below && y >= 0.0 { Control::Stop } else { Control::Continue })
    })?;
    if !traj.stopped {
        return Err(Error::NoClosure { h, reason: "loop did not return to the start line".into() });
    }
    let seg = traj.segments.last().unwrap();
    let period = ode::bisect(|s| seg.eval(s)[1], seg.t0, seg.t1(), 80);
    let end = seg.eval(period);
    let closure_gap = (end[0] - x0).abs() + end[1].abs() + wrap(end[2] - PI / 2.0).abs();
    Ok(ProfileLoop { profile: fun.curve(Arc::new(traj), (0.0, period), true), x0, period, closure_gap })
}

/// A rotational constant mean curvature sphere, or the open profile when
/// shooting did not close.
#[derive(Debug, Clone)]
pub struct SphereSolution {
    pub h: f64,
    pub profile: ProfileCurve,
    /// Area of the rotational surface (of the open piece when not closed).
    pub area: f64,
    pub poles: [GroupPoint; 2],
    pub closed: bool,
    pub closure_residual: f64,
    /// Profile length from pole to pole.
    pub length: f64,
    /// Why the profile is open.
    pub reason: Option<String>,
}

impl SphereSolution {
    pub fn require_closed(&self) -> Result<&Self> {
        if self.closed {
            Ok(self)
        } else {
            Err(Error::NoClosure {
                h: self.h,
                reason: self.reason.clone().unwrap_or_else(|| format!("closure residual {:e}", self.closure_residual)),
            })
        }
    }

    /// The sphere as an immersion: `u` runs along the profile from pole to
    /// pole, `v` is the rotation angle.
    pub fn immersion(&self, grid: (usize, usize)) -> Result<Immersion> {
        self.require_closed()?;
        let pr = self.profile.clone();
        Immersion::from_fields(
            move |amb: &Ambient, u, v| pr.fields(amb, u, v),
            Topology::Sphere,
            (0.0, self.length),
            (0.0, 2.0 * PI),
            grid,
            self.profile.orientation,
        )
    }
}

/// Slice holding meridians: `a` is radial, `b` points along the axis.
pub fn meridian_slice(kind: RotationKind) -> Slice {
    match kind {
        RotationKind::Planar | RotationKind::Disc => Slice { origin: Vector3::zeros(), a: Vector3::x(), b: Vector3::z() },
        RotationKind::Heisenberg(_) => Slice { origin: Vector3::zeros(), a: Vector3::y(), b: Vector3::x() },
    }
}

/// Turning rate at the axis making the surface smooth there: the fixed
/// point of `kappa -> phi'(eps, kappa eps^2 / 2, kappa eps)`.
fn axis_curvature(fun: &Functional, eps: f64) -> Result<f64> {
    let g = |k: f64| -> Result<f64> { Ok(fun.solve(eps, 0.5 * k * eps * eps, k * eps)?.0 - k) };
    let (mut k0, mut k1) = (fun.h, fun.h + 0.5);
    let (mut g0, mut g1) = (g(k0)?, g(k1)?);
    for _ in 0..60 {
        if g1 == g0 {
            break;
        }
        let k2 = k1 - g1 * (k1 - k0) / (g1 - g0);
        (k0, g0) = (k1, g1);
        k1 = k2;
        g1 = g(k1)?;
        if (k1 - k0).abs() < 1e-14 * (1.0 + k1.abs()) {
            return Ok(k1);
        }
    }
    if g1.abs() < 1e-10 {
        return Ok(k1);
    }
    Err(Error::NoConvergence { what: "regular start at the axis".into(), residual: g1 })
}

/// Shoots a meridian from the axis point at the slice origin and integrates
/// until it returns to the axis. Closure is judged by the angle between the
/// profile and the axis direction, extrapolated to the axis from the
/// distances `r` and `2r` (the angle is odd in the distance for a smooth
/// pole).
pub fn solve_rotational_sphere(spec: &SpaceSpec, h: f64) -> Result<SphereSolution> {
    let kind = frames::rotation_kind(spec)?;
    if !(h >= 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument(format!("mean curvature {h} must be finite and >= 0")));
    }
    let slice = meridian_slice(kind);
    let k = VectorField::Rotation;
    let fun = Functional::new(spec, &k, &slice, h, 1.0)?;
    let scale = 1.0 / h.max(1.0);
    let eps = 1e-4 * scale;
    let r_close = 1e-3 * scale;
    let s_max = 50.0 / (h + 0.1);
    let g = spec.geometry();

    let kappa0 = axis_curvature(&fun, eps)?;
    let (_, f0) = fun.solve(eps, 0.5 * kappa0 * eps * eps, kappa0 * eps)?;
    let cap0 = PI * f0.tv.norm_squared();
    let radius = |y: &[f64]| -> Result<f64> {
        let p = GroupPoint::new(g, slice.coords(y[0], y[1]));
        Ok((frames::coframe(spec, &p)? * k.eval(spec, &p)?).norm())
    };
    let mut last_r = f64::NAN;
    let result = ode::integrate(
        profile_rhs(&fun),
        eps,
        &[eps, 0.5 * kappa0 * eps * eps, kappa0 * eps, 0.0],
        s_max,
        &profile_options(0.1 * scale.max(0.1)),
        |seg| {
            let y = seg.end();
            if !y.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite("profile state"));
            }
            last_r = radius(&y)?;
            Ok(if seg.t1() > 20.0 * r_close && last_r < r_close { Control::Stop } else { Control::Continue })
        },
    );
    let open = |traj: Option<Trajectory>, reason: String| -> Result<SphereSolution> {
        let traj = match traj {
            Some(t) if !t.segments.is_empty() => t,
            _ => ode::integrate(profile_rhs(&fun), eps, &[eps, 0.5 * kappa0 * eps * eps, kappa0 * eps, 0.0], 2.0 * eps, &profile_options(eps), |_| Ok(Control::Continue))?,
        };
        let end = traj.t_end();
        let y = traj.eval(end).unwrap();
        Ok(SphereSolution {
            h,
            area: 2.0 * PI * y[3] + cap0,
            poles: [GroupPoint::new(g, slice.origin), GroupPoint::new(g, slice.coords(y[0], y[1]))],
            closed: false,
            closure_residual: f64::INFINITY,
            length: end,
            reason: Some(reason),
            profile: fun.curve(Arc::new(traj), (0.0, end), false),
        })
    };
    let traj = match result {
        Ok(t) => t,
        Err(e) => return open(None, format!("integration failed: {e}")),
    };
    if !traj.stopped {
        let y = traj.eval(traj.t_end()).unwrap();
        let reason = format!(
            "no return to the axis within arclength {s_max:.3}; final distance to the axis {:.3e}",
            radius(&y)?
        );
        return open(Some(traj), reason);
    }

    // locate |K| = r and |K| = 2r on the way into the axis
    let locate = |target: f64| -> Result<f64> {
        for seg in traj.segments.iter().rev() {
            let r0 = radius(seg.start())?;
            let r1 = radius(&seg.end())?;
            if r0 >= target && r1 <= target {
                let mut fail = None;
                let s = ode::bisect(
                    |s| match radius(&seg.eval(s)) {
                        Ok(r) => r - target,
                        Err(e) => {
                            fail = Some(e);
                            0.0
                        }
                    },
                    seg.t0,
                    seg.t1(),
                    80,
                );
                return fail.map_or(Ok(s), Err);
            }
        }
        Err(Error::NoConvergence { what: "axis approach".into(), residual: target })
    };
    let defect = |s: f64| -> Result<f64> {
        let y = traj.eval(s).unwrap();
        let p = GroupPoint::new(g, slice.coords(y[0], y[1]));
        let j = frames::coframe(spec, &p)?;
        let t = j * slice.tangent(y[2]);
        let b = j * slice.b;
        Ok(t.dot(&b) / (t.norm() * b.norm()))
    };
    let (r1, r2) = (r_close, 2.0 * r_close);
    let s1 = locate(r1)?;
    let s2 = locate(r2)?;
    let closure_residual = (2.0 * defect(s1)? - defect(s2)?).abs();
    let length = s1 + r1 * (s1 - s2) / (r2 - r1);
    let y1 = traj.eval(s1).unwrap();
    let pole = slice.coords(y1[0] + (length - s1) * y1[2].cos(), y1[1] + (length - s1) * y1[2].sin());
    let closed = closure_residual < CLOSURE_TOL;
    Ok(SphereSolution {
        h,
        area: 2.0 * PI * y1[3] + cap0 + PI * r1 * r1,
        poles: [GroupPoint::new(g, slice.origin), GroupPoint::new(g, pole)],
        closed,
        closure_residual,
        length,
        reason: (!closed).then(|| format!("profile meets the axis at an angle (residual {closure_residual:.3e})")),
        profile: fun.curve(Arc::new(traj), (0.0, length), false),
    })
}

/// One row of an area sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub h: f64,
    pub closed: bool,
    pub area: f64,
    pub closure_residual: f64,
}

/// Rotational spheres for each `H`, in parallel, rows sorted by `H`. Shooting
/// failures become open rows; invalid input is an error.
pub fn area_sweep(spec: &SpaceSpec, hs: &[f64]) -> Result<Vec<SweepRow>> {
    frames::rotation_kind(spec)?;
    if let Some(h) = hs.iter().find(|h| !(**h >= 0.0) || !h.is_finite()) {
        return Err(Error::InvalidArgument(format!("mean curvature {h} must be finite and >= 0")));
    }
    let mut rows: Vec<SweepRow> = hs
        .par_iter()
        .map(|&h| match solve_rotational_sphere(spec, h) {
            Ok(s) => SweepRow { h, closed: s.closed, area: if s.closed { s.area } else { f64::NAN }, closure_residual: s.closure_residual },
            Err(_) => SweepRow { h, closed: false, area: f64::NAN, closure_residual: f64::INFINITY },
        })
        .collect();
    rows.sort_by(|a, b| a.h.total_cmp(&b.h));
    Ok(rows)
}

/// `H(X)` where it is known in closed form: `trace(A)/2` for semidirect
/// products, `sqrt(-kappa)/2` for `H^2(kappa) x R`, zero for `S^2 x R`.
pub fn critical_mean_curvature(spec: &SpaceSpec) -> Option<f64> {
    match spec {
        SpaceSpec::Semidirect { .. } => Some(0.5 * spec.matrix_a().unwrap().trace().abs()),
        SpaceSpec::Product { kappa } => Some(0.5 * (-kappa).max(0.0).sqrt()),
        SpaceSpec::SlTwoTilde { .. } => None,
    }
}

/// Midpoint of the arc of `p Gamma` joining `p` to `q`, where `Gamma` is the
/// one-parameter subgroup of `gamma`.
pub fn center_between(spec: &SpaceSpec, p: &GroupPoint, q: &GroupPoint, gamma: &LieVector) -> Result<GroupPoint> {
    if gamma.is_zero() {
        return Err(Error::InvalidArgument("zero axis direction".into()));
    }
    if let SpaceSpec::Product { .. } = spec {
        let d = q.coords - p.coords;
        if d.xy().norm() > 1e-6 || gamma.0.xy().norm() > 0.0 {
            return Err(Error::InvalidArgument("poles are not on a common vertical line".into()));
        }
        return Ok(GroupPoint::new(p.geometry, p.coords + d * 0.5));
    }
    let d = multiply(spec, &inverse(spec, p)?, q)?;
    // parameter along Gamma from the dominant coordinate, then verify
    let at = |t: f64| one_param_subgroup(spec, gamma, t).map(|g| g.coords);
    let slope = (at(1e-3)? - at(-1e-3)?) / 2e-3;
    let i = slope.iamax();
    let f = |t: f64| -> Result<f64> { Ok(at(t)?[i] - d.coords[i]) };
    let mut t = d.coords[i] / slope[i];
    for _ in 0..50 {
        let r = f(t)?;
        let step = r / ((f(t + 1e-6)? - f(t - 1e-6)?) / 2e-6);
        t -= step;
        if step.abs() < 1e-14 * (1.0 + t.abs()) {
            break;
        }
    }
    let miss = (at(t)? - d.coords).norm();
    if miss > 1e-6 * (1.0 + d.coords.norm()) {
        return Err(Error::InvalidArgument(format!("poles are not on a common Gamma coset (miss {miss:.3e})")));
    }
    multiply(spec, p, &one_param_subgroup(spec, gamma, 0.5 * t)?)
}

/// Center of a closed rotational sphere: the midpoint between its poles
/// along the axis. The poles are checked to have normal `+-Gamma'(0)`.
pub fn center_of_symmetry(spec: &SpaceSpec, sphere: &SphereSolution, gamma: &LieVector) -> Result<GroupPoint> {
    sphere.require_closed()?;
    let amb = Ambient::new(spec)?;
    let (s0, s1) = sphere.profile.s_range;
    let ds = 1e-3 * (s1 - s0);
    for s in [s0 + ds, s1 - ds] {
        let f = sphere.profile.fields(&amb, s, 0.0)?;
        let axis = frames::coframe(spec, &f.point)? * sphere.profile.slice.b;
        let align = f.normal.dot(&axis.normalize()).abs();
        if align < 0.99 {
            return Err(Error::NoConvergence { what: "pole search".into(), residual: 1.0 - align });
        }
    }
    center_between(spec, &sphere.poles[0], &sphere.poles[1], gamma)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaussVerdict {
    /// Constant Gauss map: the surface is a two-dimensional subgroup coset.
    Constant,
    Closed { embedded: bool },
    Open,
}

#[derive(Debug, Clone)]
pub struct GaussCurve {
    pub s: Vec<f64>,
    pub points: Vec<Vector3<f64>>,
    pub closure_gap: f64,
    pub min_speed: f64,
    pub separation: f64,
    pub verdict: GaussVerdict,
}

/// Left invariant Gauss map along one profile period (`v` direction of an
/// immersion built by [`killing_cylinder`]), with `n` segments.
pub fn gauss_curve(spec: &SpaceSpec, imm: &Immersion, n: usize) -> Result<GaussCurve> {
    if !frames::is_left_invariant(spec) {
        return Err(Error::Unsupported("left invariant Gauss map of a product space".into()));
    }
    if n < 8 {
        return Err(Error::InvalidArgument("at least 8 samples".into()));
    }
    let amb = Ambient::new(spec)?;
    let (v0, v1) = imm.v_range;
    let u = imm.u_range.0;
    let s: Vec<f64> = (0..=n).map(|i| v0 + (v1 - v0) * i as f64 / n as f64).collect();
    let points = s.par_iter().map(|&v| Ok(imm.fields(&amb, u, v)?.normal)).collect::<Result<Vec<_>>>()?;
    let spread = points.iter().map(|p| (p - points[0]).norm()).fold(0.0, f64::max);
    let closure_gap = (points[n] - points[0]).norm();
    let ds = (v1 - v0) / n as f64;
    let min_speed = points.windows(2).map(|w| (w[1] - w[0]).norm() / ds).fold(f64::INFINITY, f64::min);
    let separation = polygon_separation(&points[..n]);
    let verdict = if spread < 1e-9 {
        GaussVerdict::Constant
    } else if closure_gap < 1e-5 && min_speed > 1e-8 {
        GaussVerdict::Closed { embedded: separation > 0.0 }
    } else {
        GaussVerdict::Open
    };
    Ok(GaussCurve { s, points, closure_gap, min_speed, separation, verdict })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn euclid() -> SpaceSpec {
        SpaceSpec::semidirect(0.0, 0.0, 0.0, 0.0)
    }

    fn unit_circle(spec: &SpaceSpec, orientation: f64) -> ProfileCurve {
        ProfileCurve::explicit(spec, VectorField::Vertical, Slice::horizontal(), orientation, (0.0, 2.0 * PI), true, |s| {
            (s.cos(), s.sin(), s + PI / 2.0, 1.0)
        })
    }

    #[test]
    fn euclidean_cylinder_from_circle() {
        let spec = euclid();
        let imm = killing_cylinder(&unit_circle(&spec, -1.0), (0.0, 1.0), (8, 16)).unwrap();
        let amb = Ambient::new(&spec).unwrap();
        for (u, v) in [(0.0, 0.0), (0.5, 1.0), (1.0, 4.0)] {
            let f = imm.fields(&amb, u, v).unwrap();
            assert!((f.h - 0.5).abs() < 1e-12);
            let k = frames::coframe(&spec, &f.point).unwrap() * Vector3::z();
            assert!(f.normal.dot(&k).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_circle_has_radius_one_over_two_h() {
        let spec = euclid();
        for h in [0.5, 1.0, 2.0] {
            let shoot = Shoot { x: 0.0, y: 0.0, phi: 0.0, length: 2.0, orientation: 1.0 };
            let pr = solve_profile_cmc(&spec, &VectorField::Vertical, h, &Slice::horizontal(), &shoot).unwrap();
            for st in pr.samples(20).unwrap() {
                assert!((st.kappa.abs() - 2.0 * h).abs() < 1e-9, "{st:?}");
            }
        }
    }

    #[test]
    fn minimal_profile_is_straight() {
        let spec = euclid();
        let shoot = Shoot { x: 1.0, y: 0.0, phi: 0.3, length: 3.0, orientation: 1.0 };
        let pr = solve_profile_cmc(&spec, &VectorField::Vertical, 0.0, &Slice::horizontal(), &shoot).unwrap();
        let end = pr.state(3.0).unwrap();
        assert!((end.phi - 0.3).abs() < 1e-12);
        assert!((end.x - 1.0 - 3.0 * 0.3f64.cos()).abs() < 1e-9);
    }

    #[test]
    fn invariant_surface_is_invariant() {
        // Sol, K = F_3, a generic profile in z = 0
        let spec = SpaceSpec::semidirect(1.0, 0.0, 0.0, -1.0);
        let k = VectorField::RightInvariant(LieVector::new(0.0, 0.0, 1.0));
        let shoot = Shoot { x: 1.0, y: 0.0, phi: 1.5, length: 1.0, orientation: 1.0 };
        let pr = solve_profile_cmc(&spec, &k, 0.3, &Slice::horizontal(), &shoot).unwrap();
        let imm = killing_cylinder(&pr, (-1.0, 1.0), (8, 8)).unwrap();
        let amb = Ambient::new(&spec).unwrap();
        for v in [0.1, 0.5, 0.9] {
            let hs: Vec<f64> = [-1.0, 0.0, 0.7].iter().map(|&u| imm.fields(&amb, u, v).unwrap().h).collect();
            for h in &hs {
                assert!((h - 0.3).abs() < 1e-8);
            }
            let f = imm.fields(&amb, 0.7, v).unwrap();
            let kc = frames::coframe(&spec, &f.point).unwrap() * k.eval(&spec, &f.point).unwrap();
            assert!(f.normal.dot(&kc).abs() < 1e-8);
        }
    }

    #[test]
    fn euclidean_spheres() {
        for h in [0.5, 1.0, 2.0] {
            let s = solve_rotational_sphere(&euclid(), h).unwrap();
            assert!(s.closed, "{s:?}");
            let exact = 4.0 * PI / (h * h);
            assert!(((s.area - exact) / exact).abs() < 1e-4, "H={h} area={}", s.area);
            assert!((s.poles[1].coords.z - 2.0 / h).abs() < 1e-6);
            let c = center_of_symmetry(&euclid(), &s, &LieVector::new(0.0, 0.0, 1.0)).unwrap();
            assert!((c.coords - Vector3::new(0.0, 0.0, 1.0 / h)).norm() < 1e-6);
        }
    }

    #[test]
    fn euclidean_plane_does_not_close() {
        let s = solve_rotational_sphere(&euclid(), 0.0).unwrap();
        assert!(!s.closed);
        assert!(s.require_closed().is_err());
    }

    #[test]
    fn slice_of_s2_times_r() {
        let spec = SpaceSpec::product(1.0);
        let s = solve_rotational_sphere(&spec, 0.0).unwrap();
        assert!(s.closed, "{s:?}");
        assert!((s.area - 4.0 * PI).abs() < 1e-6, "{}", s.area);
        assert!((s.length - PI).abs() < 1e-6);
    }

    #[test]
    fn h2xr_threshold_sides() {
        let spec = SpaceSpec::product(-1.0);
        assert!(solve_rotational_sphere(&spec, 1.0).unwrap().closed);
        assert!(!solve_rotational_sphere(&spec, 0.4).unwrap().closed);
    }

    #[test]
    fn rotation_rejected_without_symmetry() {
        let sol = SpaceSpec::semidirect(1.0, 0.0, 0.0, -1.0);
        assert!(solve_rotational_sphere(&sol, 1.0).is_err());
        assert!(area_sweep(&sol, &[1.0]).is_err());
        assert!(solve_rotational_sphere(&euclid(), -1.0).is_err());
    }

    #[test]
    fn sweep_is_sorted_and_decreasing() {
        let rows = area_sweep(&euclid(), &[2.0, 0.5, 1.0]).unwrap();
        let hs: Vec<f64> = rows.iter().map(|r| r.h).collect();
        assert_eq!(hs, vec![0.5, 1.0, 2.0]);
        assert!(rows.windows(2).all(|w| w[1].area < w[0].area));
    }

    #[test]
    fn gauss_curve_verdicts() {
        let spec = euclid();
        let imm = killing_cylinder(&unit_circle(&spec, -1.0), (0.0, 1.0), (8, 16)).unwrap();
        let gc = gauss_curve(&spec, &imm, 128).unwrap();
        assert_eq!(gc.verdict, GaussVerdict::Closed { embedded: true });
        assert!(gc.points.iter().all(|p| p.z.abs() < 1e-12));

        let sol = SpaceSpec::semidirect(1.0, 0.0, 0.0, -1.0);
        let leaf = ProfileCurve::explicit(
            &sol,
            VectorField::RightInvariant(LieVector::new(1.0, 0.0, 0.0)),
            Slice { origin: Vector3::zeros(), a: Vector3::y(), b: Vector3::z() },
            1.0,
            (-1.0, 1.0),
            false,
            |s| (s, 0.0, 0.0, 0.0),
        );
        let imm = killing_cylinder(&leaf, (-1.0, 1.0), (8, 8)).unwrap();
        assert_eq!(gauss_curve(&sol, &imm, 32).unwrap().verdict, GaussVerdict::Constant);
    }

    #[test]
    fn critical_values() {
        assert_eq!(critical_mean_curvature(&SpaceSpec::product(-1.0)), Some(0.5));
        assert_eq!(critical_mean_curvature(&SpaceSpec::semidirect(1.0, 0.0, 0.0, 1.0)), Some(1.0));
        assert_eq!(critical_mean_curvature(&SpaceSpec::sl2(1.0, 1.0, 1.0)), None);
    }
}
