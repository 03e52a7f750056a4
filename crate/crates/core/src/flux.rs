//! Discrete CMC flux `Flux(M, alpha, K) = int_alpha <K, eta> + n H int_beta <K, N>`.
//!
//! `alpha` is a closed curve on the surface `M` with conormal `eta`; `beta`
//! is a cap with `partial beta = alpha`. Both are discretised on exact
//! parametrisations (not on polygons), so that the two integrals are
//! consistent: lengths and areas come from derivatives of the maps.

use std::collections::HashMap;

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frames::{self, VectorField};
use crate::group::{GroupPoint, SpaceSpec};
use crate::surface::{Ambient, Immersion};

/// Allowed deviation of `|eta|`, `|N|` from 1.
pub const UNIT_TOL: f64 = 1e-6;

/// A closed curve: vertices, and per segment the midpoint, length and unit
/// conormal (frame components at the midpoint).
#[derive(Debug, Clone, PartialEq)]
pub struct CurveChain {
    pub points: Vec<GroupPoint>,
    pub mids: Vec<GroupPoint>,
    pub lengths: Vec<f64>,
    pub eta: Vec<Vector3<f64>>,
    /// Mean curvature of the surface at the midpoints, when known.
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Face {
    /// Vertex indices (3 or 4, counter-clockwise in parameter space).
    pub corners: Vec<usize>,
    /// Quadrature point, unit normal in frame components, and area.
    pub point: GroupPoint,
    pub normal: Vector3<f64>,
    pub area: f64,
}

/// A discrete 2-chain; `boundary` lists the vertices of its boundary cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct CapChain {
    pub vertices: Vec<GroupPoint>,
    pub faces: Vec<Face>,
    pub boundary: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct FluxInput {
    pub alpha: CurveChain,
    pub beta: CapChain,
    pub h: f64,
    pub k: VectorField,
    /// Ambient dimension minus one.
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxTerms {
    pub line: f64,
    pub cap: f64,
    pub total: f64,
}

fn k_comps(spec: &SpaceSpec, k: &VectorField, p: &GroupPoint) -> Result<Vector3<f64>> {
    Ok(frames::coframe(spec, p)? * k.eval(spec, p)?)
}

/// Five-point derivative of a coordinate curve.
fn curve_derivative<F: Fn(f64) -> Result<Vector3<f64>>>(f: &F, t: f64, h: f64) -> Result<Vector3<f64>> {
    Ok((f(t - 2.0 * h)? - f(t + 2.0 * h)? + (f(t + h)? - f(t - h)?) * 8.0) / (12.0 * h))
}

impl CurveChain {
    /// The closed curve `tau -> f(path(tau))`, `tau` in `[0, 1)`, on an
    /// immersion, with `n` segments. The conormal is `side * N x T`.
    pub fn on_surface<P>(spec: &SpaceSpec, imm: &Immersion, path: P, n: usize, side: f64) -> Result<Self>
    where
        P: Fn(f64) -> (f64, f64) + Sync,
    {
        if n < 3 {
            return Err(Error::InvalidArgument("a closed curve needs at least 3 segments".into()));
        }
        if side.abs() != 1.0 {
            return Err(Error::InvalidArgument("side must be +1 or -1".into()));
        }
        let amb = Ambient::new(spec)?;
        let dt = 1.0 / n as f64;
        let points = (0..n)
            .into_par_iter()
            .map(|i| {
                let (u, v) = path(i as f64 * dt);
                Ok(imm.fields(&amb, u, v)?.point)
            })
            .collect::<Result<Vec<_>>>()?;
        let segs = (0..n)
            .into_par_iter()
            .map(|i| {
                let t = (i as f64 + 0.5) * dt;
                let (u, v) = path(t);
                let f = imm.fields(&amb, u, v)?;
                let h = 1e-4 * dt;
                let (u1, v1) = path(t + h);
                let (u0, v0) = path(t - h);
                let tangent = f.tu * ((u1 - u0) / (2.0 * h)) + f.tv * ((v1 - v0) / (2.0 * h));
                let speed = tangent.norm();
                let eta = f.normal.cross(&(tangent / speed)) * side;
                Ok((f.point, speed * dt, eta, f.h))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            points,
            mids: segs.iter().map(|s| s.0).collect(),
            lengths: segs.iter().map(|s| s.1).collect(),
            eta: segs.iter().map(|s| s.2).collect(),
            h: segs.iter().map(|s| s.3).collect(),
        })
    }

    /// The same curve traversed backwards, with the opposite conormal.
    pub fn reversed(&self) -> Self {
        let n = self.points.len();
        let mut points: Vec<GroupPoint> = self.points.iter().rev().copied().collect();
        // segment i of the reversal runs from old vertex n-i to old n-i-1
        points.rotate_right(1);
        Self {
            points,
            mids: (0..n).map(|i| self.mids[n - 1 - i]).collect(),
            lengths: (0..n).map(|i| self.lengths[n - 1 - i]).collect(),
            eta: (0..n).map(|i| -self.eta[n - 1 - i]).collect(),
            h: self.h.iter().rev().copied().collect(),
        }
    }
}

impl CapChain {
    /// Cone from `apex` over the closed coordinate curve `alpha(tau)`,
    /// `tau` in `[0, 1)`: `P(tau, r) = apex + r (alpha(tau) - apex)` with
    /// `n` boundary segments and `m` rings. Each cell is integrated at its
    /// parametric center with the exact area element.
    pub fn cone<A>(spec: &SpaceSpec, alpha: A, apex: &GroupPoint, n: usize, m: usize) -> Result<Self>
    where
        A: Fn(f64) -> Result<GroupPoint> + Sync,
    {
        if n < 3 || m < 1 {
            return Err(Error::InvalidArgument("cap needs n >= 3 segments and m >= 1 rings".into()));
        }
        let g = apex.geometry;
        let c = |t: f64| alpha(t).map(|p| p.coords);
        let at = |t: f64, r: f64| -> Result<Vector3<f64>> { Ok(apex.coords + (c(t)? - apex.coords) * r) };
        let (dt, dr) = (1.0 / n as f64, 1.0 / m as f64);
        let vid = |ring: usize, i: usize| if ring == 0 { 0 } else { 1 + (ring - 1) * n + i % n };
        let mut vertices = vec![*apex];
        for ring in 1..=m {
            for i in 0..n {
                vertices.push(GroupPoint::new(g, at(i as f64 * dt, ring as f64 * dr)?));
            }
        }
        let cells: Vec<(usize, usize)> = (0..m).flat_map(|ring| (0..n).map(move |i| (ring, i))).collect();
        let faces = cells
            .par_iter()
            .map(|&(ring, i)| {
                let t = (i as f64 + 0.5) * dt;
                let r = (ring as f64 + 0.5) * dr;
                let p = GroupPoint::new(g, at(t, r)?);
                let j = frames::coframe(spec, &p)?;
                let pt = curve_derivative(&c, t, 1e-3 * dt)? * r;
                let pr = c(t)? - apex.coords;
                let w = (j * pt).cross(&(j * pr));
                let corners = if ring == 0 {
                    vec![0, vid(1, i + 1), vid(1, i)]
                } else {
                    vec![vid(ring, i), vid(ring, i + 1), vid(ring + 1, i + 1), vid(ring + 1, i)]
                };
                Ok(Face { corners, point: p, normal: w.normalize(), area: w.norm() * dt * dr })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { vertices, faces, boundary: (0..n).map(|i| vid(m, i)).collect() })
    }

    /// Cone over the vertices of a curve chain, apex at the coordinate
    /// centroid of the curve.
    pub fn cone_over<A>(spec: &SpaceSpec, alpha: A, curve: &CurveChain, m: usize) -> Result<Self>
    where
        A: Fn(f64) -> Result<GroupPoint> + Sync,
    {
        let n = curve.points.len();
        let centroid = curve.points.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n as f64;
        Self::cone(spec, alpha, &GroupPoint::new(curve.points[0].geometry, centroid), n, m)
    }

    pub fn flipped(&self) -> Self {
        let mut out = self.clone();
        for f in &mut out.faces {
            f.normal = -f.normal;
            f.corners.reverse();
        }
        out
    }
}

/// Edges used by exactly one face must form the cycle `boundary`.
fn check_boundary(beta: &CapChain) -> Result<()> {
    let mut count: HashMap<(usize, usize), i32> = HashMap::new();
    for f in &beta.faces {
        let k = f.corners.len();
        for e in 0..k {
            let (a, b) = (f.corners[e], f.corners[(e + 1) % k]);
            if a != b {
                *count.entry((a.min(b), a.max(b))).or_default() += 1;
            }
        }
    }
    let mut open: Vec<(usize, usize)> = count.into_iter().filter(|(_, c)| *c == 1).map(|(e, _)| e).collect();
    open.sort_unstable();
    let n = beta.boundary.len();
    let mut cycle: Vec<(usize, usize)> = (0..n)
        .map(|i| {
            let (a, b) = (beta.boundary[i], beta.boundary[(i + 1) % n]);
            (a.min(b), a.max(b))
        })
        .collect();
    cycle.sort_unstable();
    if open != cycle {
        return Err(Error::BoundaryMismatch(format!(
            "cap boundary has {} free edges, expected the {n}-cycle",
            open.len()
        )));
    }
    Ok(())
}

/// Sum of `<N, eta>` over the cap faces touching `alpha`.
fn cap_alignment(alpha: &CurveChain, beta: &CapChain) -> f64 {
    let on_boundary: HashMap<usize, usize> = beta.boundary.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let mut align = 0.0;
    for f in &beta.faces {
        if let Some(&i) = f.corners.iter().find_map(|c| on_boundary.get(c)) {
            align += f.normal.dot(&alpha.eta[i]);
        }
    }
    align
}

/// `int_alpha <K, eta> + n H int_beta <K, N>` by the midpoint rule on
/// segments and one point per face. The cap normal is flipped if needed so
/// that `<N, eta> <= 0` along `alpha`.
pub fn cmc_flux(spec: &SpaceSpec, input: &FluxInput) -> Result<FluxTerms> {
    let FluxInput { alpha, beta, h, k, n } = input;
    let ns = alpha.points.len();
    if alpha.mids.len() != ns || alpha.lengths.len() != ns || alpha.eta.len() != ns {
        return Err(Error::InvalidArgument("inconsistent curve chain".into()));
    }
    if beta.boundary.len() != ns {
        return Err(Error::BoundaryMismatch(format!(
            "cap boundary has {} vertices, curve has {ns}",
            beta.boundary.len()
        )));
    }
    for (i, p) in alpha.points.iter().enumerate() {
        let q = &beta.vertices[beta.boundary[i]];
        if (p.coords - q.coords).norm() > 1e-9 * (1.0 + p.coords.norm()) {
            return Err(Error::BoundaryMismatch(format!("cap boundary vertex {i} is not on the curve")));
        }
    }
    check_boundary(beta)?;
    for e in &alpha.eta {
        if (e.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnit { what: "conormal", norm: e.norm() });
        }
    }
    for f in &beta.faces {
        if (f.normal.norm() - 1.0).abs() > UNIT_TOL {
            return Err(Error::NonUnit { what: "cap normal", norm: f.normal.norm() });
        }
    }
    for p in alpha.mids.iter().step_by((ns / 4).max(1)) {
        let r = frames::killing_residual(spec, k, p)?;
        if r > 1e-4 {
            return Err(Error::NotKilling(r));
        }
    }

    // fixed summation order for reproducibility
    let line_terms = (0..ns)
        .into_par_iter()
        .map(|i| Ok(k_comps(spec, k, &alpha.mids[i])?.dot(&alpha.eta[i]) * alpha.lengths[i]))
        .collect::<Result<Vec<f64>>>()?;
    let line: f64 = line_terms.iter().sum();
    let cap_terms = beta
        .faces
        .par_iter()
        .map(|f| Ok(k_comps(spec, k, &f.point)?.dot(&f.normal) * f.area))
        .collect::<Result<Vec<f64>>>()?;
    let mut cap: f64 = cap_terms.iter().sum();

    if cap_alignment(alpha, beta) > 0.0 {
        cap = -cap;
    }
    let cap = *n as f64 * h * cap;
    Ok(FluxTerms { line, cap, total: line + cap })
}

/// Fluxes of two homologous curves on a surface and their gap. Caps are
/// built independently over each curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomologyCheck {
    pub flux1: f64,
    pub flux2: f64,
    pub gap: f64,
}

/// The curves are `tau -> imm(path_i(tau))`, each winding once around the
/// periodic direction `v` of a cylinder, so that they cobound a band.
///
/// `H` is read off the surface along each curve. The cap normal chosen by
/// [`cmc_flux`] orients `M' + beta` consistently with the surface normal
/// only on one side of the curve; on the other the sign of `H` is flipped.
pub fn homology_invariance_check<P1, P2>(spec: &SpaceSpec, imm: &Immersion, k: &VectorField, path1: P1, path2: P2, n: usize) -> Result<HomologyCheck>
where
    P1: Fn(f64) -> (f64, f64) + Sync,
    P2: Fn(f64) -> (f64, f64) + Sync,
{
    if imm.topology != crate::surface::Topology::Cylinder {
        return Err(Error::BoundaryMismatch("homology check needs a cylinder".into()));
    }
    let period = imm.v_range.1 - imm.v_range.0;
    let amb = Ambient::new(spec)?;
    let flux = |path: &(dyn Fn(f64) -> (f64, f64) + Sync), which: usize| -> Result<f64> {
        let wind = (path(1.0).1 - path(0.0).1) / period;
        let closed_u = (path(1.0).0 - path(0.0).0).abs();
        if (wind - 1.0).abs() > 1e-9 || closed_u > 1e-12 {
            return Err(Error::BoundaryMismatch(format!(
                "curve {which} does not wind once around the cylinder (winding {wind})"
            )));
        }
        let alpha = CurveChain::on_surface(spec, imm, path, n, 1.0)?;
        let curve = |t: f64| {
            let (u, v) = path(t);
            imm.fields(&amb, u, v).map(|f| f.point)
        };
        let beta = CapChain::cone_over(spec, curve, &alpha, (n / 4).max(8))?;
        let h = alpha.h.iter().sum::<f64>() / n as f64;
        // with side = +1 the cap normal is consistent exactly when it is flipped
        let h = if cap_alignment(&alpha, &beta) > 0.0 { h } else { -h };
        Ok(cmc_flux(spec, &FluxInput { alpha, beta, h, k: k.clone(), n: 2 })?.total)
    };
    let flux1 = flux(&path1, 1)?;
    let flux2 = flux(&path2, 2)?;
    Ok(HomologyCheck { flux1, flux2, gap: (flux1 - flux2).abs() })
}
