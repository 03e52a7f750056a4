//! Immersed surfaces: fundamental forms, mean curvature, the left invariant
//! Gauss map and the stability operator `L = Delta + |sigma|^2 + Ric(N, N)`.
//!
//! Conventions: `N = o * (T_u x T_v) / |T_u x T_v|` in frame components with
//! `o` the orientation sign; `sigma(X, Y) = <nabla_X Y, N>`, so the round
//! sphere with inward normal has `H = +1` and a leaf of `R^2 x_A R` oriented
//! by `E_3` has `H = trace(A) / 2`.

use std::sync::Arc;

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::frames::{self, covariant, Connection, VectorField};
use crate::group::{GroupPoint, SpaceSpec};
use crate::spectral::{self, Spectrum, TriMesh};

/// Threshold on `det I` below which a chart is degenerate.
pub const DEGENERATE_DET: f64 = 1e-14;

/// Ambient space with the point independent tensors cached.
#[derive(Debug, Clone)]
pub struct Ambient {
    pub spec: SpaceSpec,
    conn: Option<Connection>,
    ric: Option<Matrix3<f64>>,
}

impl Ambient {
    pub fn new(spec: &SpaceSpec) -> Result<Self> {
        spec.validate()?;
        let (conn, ric) = if frames::is_left_invariant(spec) {
            let e = spec.identity();
            (Some(frames::connection_coeffs(spec, &e)?), Some(frames::ricci(spec, &e)?.0))
        } else {
            (None, None)
        };
        Ok(Self { spec: spec.clone(), conn, ric })
    }

    pub fn connection(&self, p: &GroupPoint) -> Result<Connection> {
        match self.conn {
            Some(c) => Ok(c),
            None => frames::connection_coeffs(&self.spec, p),
        }
    }

    pub fn ricci(&self, p: &GroupPoint) -> Result<Matrix3<f64>> {
        match self.ric {
            Some(r) => Ok(r),
            None => Ok(frames::ricci(&self.spec, p)?.0),
        }
    }
}

/// Second order jet of a parametrisation, in coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub p: GroupPoint,
    pub fu: Vector3<f64>,
    pub fv: Vector3<f64>,
    pub fuu: Vector3<f64>,
    pub fuv: Vector3<f64>,
    pub fvv: Vector3<f64>,
}

/// Geometric data of a surface at one parameter value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeFields {
    pub point: GroupPoint,
    /// Tangent vectors in frame components.
    pub tu: Vector3<f64>,
    pub tv: Vector3<f64>,
    pub first: Matrix2<f64>,
    pub second: Matrix2<f64>,
    /// Unit normal in frame components; for left invariant frames this is
    /// the left invariant Gauss map.
    pub normal: Vector3<f64>,
    pub h: f64,
    pub sigma_sq: f64,
    pub ric_nn: f64,
}

impl NodeFields {
    /// Potential of the stability operator.
    pub fn q(&self) -> f64 {
        self.sigma_sq + self.ric_nn
    }
}

/// Fundamental forms and curvatures from a jet.
pub fn fields_from_jet(amb: &Ambient, jet: &Jet, orientation: f64, at: (f64, f64)) -> Result<NodeFields> {
    let spec = &amb.spec;
    let p = &jet.p;
    let j = frames::coframe(spec, p)?;
    let tu = j * jet.fu;
    let tv = j * jet.fv;
    let first = Matrix2::new(tu.dot(&tu), tu.dot(&tv), tu.dot(&tv), tv.dot(&tv));
    let det = first.determinant();
    if !(det > DEGENERATE_DET) {
        return Err(Error::DegenerateChart { u: at.0, v: at.1, det });
    }
    let normal = tu.cross(&tv).normalize() * orientation;
    let g = amb.connection(p)?;
    let dju = frames::coframe_derivative(spec, p, &jet.fu)?;
    let djv = frames::coframe_derivative(spec, p, &jet.fv)?;
    let nabla = |fij: &Vector3<f64>, dji: &Matrix3<f64>, fj: &Vector3<f64>, ti: &Vector3<f64>, tj: &Vector3<f64>| {
        j * fij + dji * fj + covariant(&g, ti, tj)
    };
    let s_uu = nabla(&jet.fuu, &dju, &jet.fu, &tu, &tu).dot(&normal);
    let s_vv = nabla(&jet.fvv, &djv, &jet.fv, &tv, &tv).dot(&normal);
    let s_uv = nabla(&jet.fuv, &dju, &jet.fv, &tu, &tv).dot(&normal);
    let s_vu = nabla(&jet.fuv, &djv, &jet.fu, &tv, &tu).dot(&normal);
    let second = Matrix2::new(s_uu, 0.5 * (s_uv + s_vu), 0.5 * (s_uv + s_vu), s_vv);
    let w = first.try_inverse().ok_or(Error::DegenerateChart { u: at.0, v: at.1, det })? * second;
    let ric = amb.ricci(p)?;
    Ok(NodeFields {
        point: *p,
        tu,
        tv,
        first,
        second,
        normal,
        h: 0.5 * w.trace(),
        sigma_sq: (w * w).trace(),
        ric_nn: normal.dot(&(ric * normal)),
    })
}

type ChartFn = dyn Fn(f64, f64) -> Result<GroupPoint> + Send + Sync;
type JetFn = dyn Fn(f64, f64) -> Result<Jet> + Send + Sync;
type FieldFn = dyn Fn(&Ambient, f64, f64) -> Result<NodeFields> + Send + Sync;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// `u` runs between two poles that are collapsed to single vertices,
    /// `v` is periodic.
    Sphere,
    /// `v` periodic, Dirichlet boundary at both ends of `u`.
    Cylinder,
    /// Dirichlet boundary on the whole rectangle.
    Plane,
}

#[derive(Clone)]
enum Source {
    Jets(Arc<JetFn>),
    Fields(Arc<FieldFn>),
}

/// A parametrised surface on a rectangle, sampled on an `nu x nv` grid.
#[derive(Clone)]
pub struct Immersion {
    source: Source,
    pub topology: Topology,
    pub u_range: (f64, f64),
    pub v_range: (f64, f64),
    pub grid: (usize, usize),
    /// Sign applied to `T_u x T_v`.
    pub orientation: f64,
}

impl std::fmt::Debug for Immersion {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Immersion")
            .field("topology", &self.topology)
            .field("u_range", &self.u_range)
            .field("v_range", &self.v_range)
            .field("grid", &self.grid)
            .field("orientation", &self.orientation)
            .finish()
    }
}

/// Jet of a chart by fourth order central differences with step `h`.
pub fn chart_jet(chart: &ChartFn, u: f64, v: f64, h: f64) -> Result<Jet> {
    const W: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
    const W2: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
    let mut grid = [[Vector3::zeros(); 5]; 5];
    let mut geometry = None;
    for (a, row) in grid.iter_mut().enumerate() {
        for (b, x) in row.iter_mut().enumerate() {
            if a != 2 && b != 2 && (W[a] == 0.0 || W[b] == 0.0) {
                continue;
            }
            let p = chart(u + (a as f64 - 2.0) * h, v + (b as f64 - 2.0) * h)?;
            geometry = Some(p.geometry);
            *x = p.coords;
        }
    }
    let mut jet = Jet {
        p: GroupPoint::new(geometry.unwrap(), grid[2][2]),
        fu: Vector3::zeros(),
        fv: Vector3::zeros(),
        fuu: Vector3::zeros(),
        fuv: Vector3::zeros(),
        fvv: Vector3::zeros(),
    };
    for k in 0..5 {
        jet.fu += grid[k][2] * (W[k] / (12.0 * h));
        jet.fv += grid[2][k] * (W[k] / (12.0 * h));
        jet.fuu += grid[k][2] * (W2[k] / (12.0 * h * h));
        jet.fvv += grid[2][k] * (W2[k] / (12.0 * h * h));
        for l in 0..5 {
            if W[k] != 0.0 && W[l] != 0.0 {
                jet.fuv += grid[k][l] * (W[k] * W[l] / (144.0 * h * h));
            }
        }
    }
    Ok(jet)
}

impl Immersion {
    /// Surface given by a chart; jets are taken by finite differences.
    pub fn from_chart<F>(chart: F, topology: Topology, u_range: (f64, f64), v_range: (f64, f64), grid: (usize, usize), orientation: f64) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<GroupPoint> + Send + Sync + 'static,
    {
        let chart: Arc<ChartFn> = Arc::new(chart);
        let jets = move |u: f64, v: f64| chart_jet(chart.as_ref(), u, v, 1e-3);
        Self::from_jets(jets, topology, u_range, v_range, grid, orientation)
    }

    pub fn from_jets<F>(jets: F, topology: Topology, u_range: (f64, f64), v_range: (f64, f64), grid: (usize, usize), orientation: f64) -> Result<Self>
    where
        F: Fn(f64, f64) -> Result<Jet> + Send + Sync + 'static,
    {
        Self::new(Source::Jets(Arc::new(jets)), topology, u_range, v_range, grid, orientation)
    }

    /// Surface given directly by its geometric data; `orientation` is then
    /// only recorded, the provider is responsible for applying it.
    pub fn from_fields<F>(fields: F, topology: Topology, u_range: (f64, f64), v_range: (f64, f64), grid: (usize, usize), orientation: f64) -> Result<Self>
    where
        F: Fn(&Ambient, f64, f64) -> Result<NodeFields> + Send + Sync + 'static,
    {
        Self::new(Source::Fields(Arc::new(fields)), topology, u_range, v_range, grid, orientation)
    }

    fn new(source: Source, topology: Topology, u_range: (f64, f64), v_range: (f64, f64), grid: (usize, usize), orientation: f64) -> Result<Self> {
        if grid.0 < 8 || grid.1 < 8 {
            return Err(Error::InvalidArgument(format!("grid {}x{} is below 8x8", grid.0, grid.1)));
        }
        if !(u_range.1 > u_range.0) || !(v_range.1 > v_range.0) {
            return Err(Error::InvalidArgument("empty parameter rectangle".into()));
        }
        if orientation.abs() != 1.0 {
            return Err(Error::InvalidArgument("orientation must be +1 or -1".into()));
        }
        Ok(Self { source, topology, u_range, v_range, grid, orientation })
    }

    pub fn with_grid(&self, nu: usize, nv: usize) -> Result<Self> {
        Self::new(self.source.clone(), self.topology, self.u_range, self.v_range, (nu, nv), self.orientation)
    }

    /// The same surface with the opposite normal.
    pub fn flipped(&self) -> Self {
        let mut out = self.clone();
        out.orientation = -self.orientation;
        if let Source::Fields(f) = &self.source {
            let f = f.clone();
            out.source = Source::Fields(Arc::new(move |amb: &Ambient, u, v| {
                let mut n = f(amb, u, v)?;
                n.normal = -n.normal;
                n.second = -n.second;
                n.h = -n.h;
                Ok(n)
            }));
        }
        out
    }

    pub fn fields(&self, amb: &Ambient, u: f64, v: f64) -> Result<NodeFields> {
        match &self.source {
            Source::Jets(j) => fields_from_jet(amb, &j(u, v)?, self.orientation, (u, v)),
            Source::Fields(f) => f(amb, u, v),
        }
    }

    pub fn jet(&self, u: f64, v: f64) -> Option<Result<Jet>> {
        match &self.source {
            Source::Jets(j) => Some(j(u, v)),
            Source::Fields(_) => None,
        }
    }

    pub fn du(&self) -> f64 {
        (self.u_range.1 - self.u_range.0) / self.grid.0 as f64
    }

    pub fn dv(&self) -> f64 {
        (self.v_range.1 - self.v_range.0) / self.grid.1 as f64
    }

    pub fn u_at(&self, i: usize) -> f64 {
        self.u_range.0 + i as f64 * self.du()
    }

    pub fn v_at(&self, j: usize) -> f64 {
        self.v_range.0 + j as f64 * self.dv()
    }

    /// Number of distinct `v` samples per row.
    pub fn n_columns(&self) -> usize {
        match self.topology {
            Topology::Plane => self.grid.1 + 1,
            _ => self.grid.1,
        }
    }

    /// Rows `i` whose nodes are evaluated (poles of a sphere are not).
    pub fn computed_rows(&self) -> std::ops::Range<usize> {
        match self.topology {
            Topology::Sphere => 1..self.grid.0,
            _ => 0..self.grid.0 + 1,
        }
    }

    /// Samples all evaluated nodes, in parallel over nodes.
    pub fn sample(&self, spec: &SpaceSpec) -> Result<SampledSurface> {
        let amb = Ambient::new(spec)?;
        let rows: Vec<usize> = self.computed_rows().collect();
        let nc = self.n_columns();
        let flat: Vec<Result<NodeFields>> = rows
            .par_iter()
            .flat_map_iter(|&i| (0..nc).map(move |j| (i, j)))
            .map(|(i, j)| self.fields(&amb, self.u_at(i), self.v_at(j)))
            .collect();
        let mut nodes = Vec::with_capacity(flat.len());
        for r in flat {
            nodes.push(r?);
        }
        let poles = if self.topology == Topology::Sphere {
            let row = |r: usize| &nodes[r * nc..(r + 1) * nc];
            let nr = rows.len();
            Some([pole_data(row(0), row(1)), pole_data(row(nr - 1), row(nr - 2))])
        } else {
            None
        };
        Ok(SampledSurface {
            topology: self.topology,
            orientation: self.orientation,
            first_row: rows[0],
            n_rows: rows.len(),
            n_cols: nc,
            du: self.du(),
            dv: self.dv(),
            nodes,
            poles,
        })
    }
}

/// Pole values extrapolated from the two nearest rows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleData {
    pub first: Matrix2<f64>,
    pub q: f64,
    pub normal: Vector3<f64>,
    pub h: f64,
}

fn pole_data(r1: &[NodeFields], r2: &[NodeFields]) -> PoleData {
    let n = r1.len() as f64;
    let avg = |r: &[NodeFields], f: &dyn Fn(&NodeFields) -> f64| r.iter().map(f).sum::<f64>() / n;
    let ex = |f: &dyn Fn(&NodeFields) -> f64| (4.0 * avg(r1, f) - avg(r2, f)) / 3.0;
    let mut first = Matrix2::zeros();
    for a in 0..2 {
        for b in 0..2 {
            first[(a, b)] = ex(&|x: &NodeFields| x.first[(a, b)]);
        }
    }
    let normal = Vector3::new(
        ex(&|x: &NodeFields| x.normal.x),
        ex(&|x: &NodeFields| x.normal.y),
        ex(&|x: &NodeFields| x.normal.z),
    );
    PoleData {
        first,
        q: ex(&|x: &NodeFields| x.q()),
        normal: normal.normalize(),
        h: ex(&|x: &NodeFields| x.h),
    }
}

/// Evaluated grid of an immersion.
#[derive(Debug, Clone)]
pub struct SampledSurface {
    pub topology: Topology,
    pub orientation: f64,
    /// Grid row index of the first stored row.
    pub first_row: usize,
    pub n_rows: usize,
    pub n_cols: usize,
    pub du: f64,
    pub dv: f64,
    /// Row-major nodes of the stored rows.
    pub nodes: Vec<NodeFields>,
    /// South (`u` minimal) and north pole of a sphere.
    pub poles: Option<[PoleData; 2]>,
}

impl SampledSurface {
    pub fn node(&self, r: usize, c: usize) -> &NodeFields {
        &self.nodes[r * self.n_cols + c]
    }

    /// Vertices in mesh order (stored rows, then poles), and triangles.
    pub fn mesh(&self) -> TriMesh {
        let (nr, nc) = (self.n_rows, self.n_cols);
        let periodic = self.topology != Topology::Plane;
        let n_grid = nr * nc;
        let mut first: Vec<Matrix2<f64>> = self.nodes.iter().map(|n| n.first).collect();
        let mut q: Vec<f64> = self.nodes.iter().map(NodeFields::q).collect();
        let mut dirichlet = vec![false; n_grid];
        match self.topology {
            Topology::Sphere => {
                for p in self.poles.as_ref().unwrap() {
                    first.push(p.first);
                    q.push(p.q);
                    dirichlet.push(false);
                }
            }
            Topology::Cylinder => {
                for c in 0..nc {
                    dirichlet[c] = true;
                    dirichlet[(nr - 1) * nc + c] = true;
                }
            }
            Topology::Plane => {
                for r in 0..nr {
                    for c in 0..nc {
                        if r == 0 || r == nr - 1 || c == 0 || c == nc - 1 {
                            dirichlet[r * nc + c] = true;
                        }
                    }
                }
            }
        }
        let idx = |r: usize, c: usize| r * nc + c;
        let (du, dv) = (self.du, self.dv);
        let len = |a: usize, b: usize, d: Vector2<f64>| -> f64 {
            let g = (first[a] + first[b]) * 0.5;
            (d.transpose() * g * d)[(0, 0)].max(0.0).sqrt()
        };
        let mut tris = Vec::new();
        let mut lens = Vec::new();
        let mut push = |t: [usize; 3], l: [f64; 3]| {
            tris.push(t);
            lens.push(l);
        };
        let cols = if periodic { nc } else { nc - 1 };
        for r in 0..nr - 1 {
            for c in 0..cols {
                let c1 = (c + 1) % nc;
                let (a, b, cc, d) = (idx(r, c), idx(r + 1, c), idx(r + 1, c1), idx(r, c1));
                // split along a -- cc; lengths are opposite to each corner
                let ab = len(a, b, Vector2::new(du, 0.0));
                let bc = len(b, cc, Vector2::new(0.0, dv));
                let ac = len(a, cc, Vector2::new(du, dv));
                let cd = len(cc, d, Vector2::new(du, 0.0));
                let da = len(d, a, Vector2::new(0.0, dv));
                push([a, b, cc], [bc, ac, ab]);
                push([a, cc, d], [cd, da, ac]);
            }
        }
        if self.topology == Topology::Sphere {
            let (s, n) = (n_grid, n_grid + 1);
            for c in 0..nc {
                let c1 = (c + 1) % nc;
                let (a, b) = (idx(0, c), idx(0, c1));
                let sa = len(s, a, Vector2::new(du, 0.0));
                let sb = len(s, b, Vector2::new(du, 0.0));
                let ab = len(a, b, Vector2::new(0.0, dv));
                push([s, a, b], [ab, sb, sa]);
                let (a, b) = (idx(nr - 1, c), idx(nr - 1, c1));
                let na = len(n, a, Vector2::new(du, 0.0));
                let nb = len(n, b, Vector2::new(du, 0.0));
                let ab = len(a, b, Vector2::new(0.0, dv));
                push([n, b, a], [ab, na, nb]);
            }
        }
        TriMesh { n_vertices: first.len(), triangles: tris, edge_len: lens, q, dirichlet }
    }

    /// Unit normals (frame components) in mesh vertex order.
    pub fn mesh_normals(&self) -> Vec<Vector3<f64>> {
        let mut out: Vec<_> = self.nodes.iter().map(|n| n.normal).collect();
        if let Some(p) = &self.poles {
            out.extend(p.iter().map(|p| p.normal));
        }
        out
    }
}

/// Lowest `k` eigenvalues of `-L` with index and nullity.
pub fn stability_spectrum(spec: &SpaceSpec, imm: &Immersion, k: usize, nullity_tol: f64) -> Result<Spectrum> {
    let s = imm.sample(spec)?;
    spectral::lowest_eigenvalues(&s.mesh(), k, nullity_tol)
}

/// Left invariant Gauss map at `(u, v)`.
pub fn left_gauss_map(spec: &SpaceSpec, imm: &Immersion, u: f64, v: f64) -> Result<Vector3<f64>> {
    if !frames::is_left_invariant(spec) {
        return Err(Error::Unsupported("left invariant Gauss map of a product space".into()));
    }
    let amb = Ambient::new(spec)?;
    Ok(imm.fields(&amb, u, v)?.normal)
}

/// Degree of the Gauss map of a sampled closed surface, from the signed
/// solid angles of the image triangles.
pub fn gauss_map_degree(s: &SampledSurface) -> f64 {
    let g = s.mesh_normals();
    let mesh = s.mesh();
    let total: f64 = mesh
        .triangles
        .iter()
        .map(|t| solid_angle(&g[t[0]], &g[t[1]], &g[t[2]]))
        .sum();
    s.orientation * total / (4.0 * std::f64::consts::PI)
}

/// Signed solid angle of the spherical triangle `(a, b, c)` (Van Oosterom–Strackee).
pub fn solid_angle(a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> f64 {
    let num = a.dot(&b.cross(c));
    let den = 1.0 + a.dot(b) + b.dot(c) + c.dot(a);
    2.0 * num.atan2(den)
}

/// Minimum over a sampled surface of the Jacobian sign of the Gauss map.
pub fn gauss_jacobian_signs(s: &SampledSurface) -> (usize, usize) {
    let g = s.mesh_normals();
    let mesh = s.mesh();
    let mut pos = 0;
    let mut neg = 0;
    for t in &mesh.triangles {
        let a = s.orientation * g[t[0]].dot(&(g[t[1]] - g[t[0]]).cross(&(g[t[2]] - g[t[0]])));
        if a > 0.0 {
            pos += 1;
        } else {
            neg += 1;
        }
    }
    (pos, neg)
}

/// Jacobi function `u = <N, K>` at the evaluated nodes, and the pole values.
pub fn jacobi_function(spec: &SpaceSpec, s: &SampledSurface, k: &VectorField) -> Result<Vec<f64>> {
    for node in s.nodes.iter().step_by((s.nodes.len() / 10).max(1)).take(10) {
        let r = frames::killing_residual(spec, k, &node.point)?;
        if r > 1e-4 {
            return Err(Error::NotKilling(r));
        }
    }
    let mut out = Vec::with_capacity(s.nodes.len() + 2);
    for n in &s.nodes {
        let kc = frames::coframe(spec, &n.point)? * k.eval(spec, &n.point)?;
        out.push(n.normal.dot(&kc));
    }
    if s.poles.is_some() {
        // extrapolate like the other pole data
        let nc = s.n_cols;
        let row_avg = |r: usize| out[r * nc..(r + 1) * nc].iter().sum::<f64>() / nc as f64;
        let south = (4.0 * row_avg(0) - row_avg(1)) / 3.0;
        let north = (4.0 * row_avg(s.n_rows - 1) - row_avg(s.n_rows - 2)) / 3.0;
        out.push(south);
        out.push(north);
    }
    Ok(out)
}

/// Max of `|L u|` over vertices at least two rows away from poles and
/// boundaries.
pub fn jacobi_residual(s: &SampledSurface, u: &[f64]) -> f64 {
    let mesh = s.mesh();
    let lu = spectral::apply_operator(&mesh, u);
    let mut worst: f64 = 0.0;
    for r in 2..s.n_rows.saturating_sub(2) {
        for c in 0..s.n_cols {
            if s.topology == Topology::Plane && (c < 2 || c + 2 >= s.n_cols) {
                continue;
            }
            worst = worst.max(lu[r * s.n_cols + c].abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::multiply;
    use crate::LieVector;
    use std::f64::consts::PI;

    fn euclid() -> SpaceSpec {
        SpaceSpec::semidirect(0.0, 0.0, 0.0, 0.0)
    }

    pub(crate) fn unit_sphere(grid: (usize, usize)) -> Immersion {
        Immersion::from_chart(
            |u, v| Ok(GroupPoint::semidirect(u.sin() * v.cos(), u.sin() * v.sin(), u.cos())),
            Topology::Sphere,
            (0.0, PI),
            (0.0, 2.0 * PI),
            grid,
            -1.0,
        )
        .unwrap()
    }

    #[test]
    fn round_sphere_fields() {
        let s = unit_sphere((16, 32)).sample(&euclid()).unwrap();
        for n in &s.nodes {
            assert!((n.h - 1.0).abs() < 1e-5);
            assert!((n.sigma_sq - 2.0).abs() < 1e-5);
            assert!((n.normal + n.point.coords).amax() < 1e-8);
        }
    }

    #[test]
    fn leaf_and_plane() {
        let spec = SpaceSpec::semidirect(0.7, -0.4, 1.1, 0.2);
        let leaf = Immersion::from_chart(|u, v| Ok(GroupPoint::semidirect(u, v, 0.0)), Topology::Plane, (-1.0, 1.0), (-1.0, 1.0), (8, 8), 1.0).unwrap();
        let amb = Ambient::new(&spec).unwrap();
        let n = leaf.fields(&amb, 0.3, -0.2).unwrap();
        assert!((n.h - 0.45).abs() < 1e-8);
        assert!((n.normal - Vector3::z()).amax() < 1e-12);

        let plane = Immersion::from_chart(|u, v| Ok(GroupPoint::semidirect(u, 0.0, v)), Topology::Plane, (-1.0, 1.0), (-1.0, 1.0), (8, 8), 1.0).unwrap();
        let n = plane.fields(&Ambient::new(&euclid()).unwrap(), 0.2, 0.1).unwrap();
        assert!(n.h.abs() < 1e-10 && n.second.amax() < 1e-10);
    }

    #[test]
    fn orientation_flip_negates_everything() {
        let spec = SpaceSpec::semidirect(1.0, 0.0, 0.0, -1.0);
        let chart = |u: f64, v: f64| Ok(GroupPoint::semidirect(u, v, 0.3 * u * u - 0.2 * u * v));
        let a = Immersion::from_chart(chart, Topology::Plane, (-1.0, 1.0), (-1.0, 1.0), (8, 8), 1.0).unwrap();
        let b = a.flipped();
        let amb = Ambient::new(&spec).unwrap();
        let (x, y) = (a.fields(&amb, 0.4, 0.1).unwrap(), b.fields(&amb, 0.4, 0.1).unwrap());
        assert!((x.h + y.h).abs() < 1e-14);
        assert!((x.normal + y.normal).amax() < 1e-14);
        assert!((x.second + y.second).amax() < 1e-14);
        assert!((x.q() - y.q()).abs() < 1e-12);
    }

    #[test]
    fn mean_curvature_converges_at_second_order() {
        // coarse differentiation of the chart to expose the rate
        let spec = euclid();
        let amb = Ambient::new(&spec).unwrap();
        let chart = |u: f64, v: f64| Ok(GroupPoint::semidirect(u.sin() * v.cos(), u.sin() * v.sin(), u.cos()));
        let err = |h: f64| {
            let jet = chart_jet(&chart, 1.0, 0.5, h).unwrap();
            (fields_from_jet(&amb, &jet, -1.0, (1.0, 0.5)).unwrap().h - 1.0).abs()
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e1 / e2 > 3.9, "{e1} {e2}");
    }

    #[test]
    fn gauss_map_is_left_invariant() {
        let spec = SpaceSpec::semidirect(0.3, -1.2, 2.0, 0.7);
        let chart = |u: f64, v: f64| Ok(GroupPoint::semidirect(u, v, 0.3 * (u * v).sin()));
        let a = GroupPoint::semidirect(0.5, -1.0, 0.4);
        let sp = spec.clone();
        let moved = move |u: f64, v: f64| multiply(&sp, &a, &chart(u, v)?);
        let f = Immersion::from_chart(chart, Topology::Plane, (-1.0, 1.0), (-1.0, 1.0), (8, 8), 1.0).unwrap();
        let g = Immersion::from_chart(moved, Topology::Plane, (-1.0, 1.0), (-1.0, 1.0), (8, 8), 1.0).unwrap();
        for (u, v) in [(0.1, 0.2), (-0.5, 0.7)] {
            let x = left_gauss_map(&spec, &f, u, v).unwrap();
            let y = left_gauss_map(&spec, &g, u, v).unwrap();
            assert!((x - y).amax() < 1e-9);
        }
    }

    #[test]
    fn sl2_subgroup_gauss_values() {
        let lambda = [0.5, 2.0, 1.3];
        let spec = SpaceSpec::sl2(lambda[0], lambda[1], lambda[2]);
        for theta in [0.0, 1.0, 2.5, 4.0] {
            let (vp, vh) = crate::subgroups::subgroup_generators(theta);
            let sp = spec.clone();
            let chart = move |s: f64, t: f64| {
                multiply(&sp, &crate::group::one_param_subgroup(&sp, &vp, s)?, &crate::group::one_param_subgroup(&sp, &vh, t)?)
            };
            let imm = Immersion::from_chart(chart, Topology::Plane, (-1.0, 1.0), (-1.0, 1.0), (8, 8), 1.0).unwrap();
            let expected = crate::subgroups::subgroup_gauss_value(&lambda, theta).unwrap();
            for (s, t) in [(0.0, 0.0), (0.4, -0.3), (-0.7, 0.8)] {
                let g = left_gauss_map(&spec, &imm, s, t).unwrap();
                let g = if g.z > 0.0 { -g } else { g };
                assert!((g - expected).amax() < 1e-6, "{theta}: {g} vs {expected}");
            }
            // the subgroup is minimal (only the constancy of G is asserted here)
            let _ = LieVector::new(0.0, 0.0, 1.0);
        }
    }

    #[test]
    fn sphere_gauss_degree_and_spectrum() {
        let s = unit_sphere((16, 32)).sample(&euclid()).unwrap();
        assert!((gauss_map_degree(&s) - 1.0).abs() < 1e-9);
        let (pos, neg) = gauss_jacobian_signs(&s);
        assert_eq!(neg, 0, "{pos}");
    }

    #[test]
    fn jacobi_function_on_round_sphere() {
        let k = VectorField::RightInvariant(LieVector::new(0.0, 0.0, 1.0));
        let spec = euclid();
        let res = |n: usize| {
            let s = unit_sphere((n, 2 * n)).sample(&spec).unwrap();
            let u = jacobi_function(&spec, &s, &k).unwrap();
            for (node, x) in s.nodes.iter().zip(&u) {
                assert!((x + node.point.coords.z).abs() < 1e-8);
            }
            jacobi_residual(&s, &u)
        };
        let (r1, r2) = (res(16), res(32));
        let ratio = r1 / r2;
        assert!((3.0..=6.0).contains(&ratio), "{r1} {r2} {ratio}");
    }

    #[test]
    fn non_killing_field_rejected() {
        let spec = SpaceSpec::semidirect(1.0, 0.0, 0.0, 1.0);
        let s = Immersion::from_chart(|u, v| Ok(GroupPoint::semidirect(u, v, 0.0)), Topology::Plane, (-1.0, 1.0), (-1.0, 1.0), (8, 8), 1.0)
            .unwrap()
            .sample(&spec)
            .unwrap();
        assert!(matches!(jacobi_function(&spec, &s, &VectorField::LeftInvariant(0)), Err(Error::NotKilling(_))));
        let u = jacobi_function(&spec, &s, &VectorField::RightInvariant(LieVector::new(1.0, 0.0, 0.0))).unwrap();
        assert!(u.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn round_sphere_index_and_nullity() {
        let t = std::time::Instant::now();
        let s = stability_spectrum(&euclid(), &unit_sphere((64, 128)), 8, spectral::NULLITY_TOL).unwrap();
        eprintln!("{:?} in {:?}", s.eigenvalues, t.elapsed());
        assert_eq!((s.index, s.nullity), (1, 3));
        assert!((s.eigenvalues[0] + 2.0).abs() < 0.05);
    }
}
