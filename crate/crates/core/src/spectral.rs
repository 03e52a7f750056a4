//! Discrete stability operator on triangle meshes given by intrinsic edge
//! lengths, and its lowest eigenvalues.
//!
//! `-L = -Delta - q` is discretised with the cotangent stiffness matrix `K`
//! and the lumped (barycentric) mass `M`, giving `(K - M q) x = lambda M x`.
//! The pencil is shifted to be positive definite, factored as a banded
//! Cholesky after reverse Cuthill–McKee ordering, and the lowest eigenpairs
//! are found by subspace iteration with Rayleigh–Ritz projection.

use std::collections::{BTreeMap, VecDeque};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default half-width of the band of eigenvalues counted as nullity.
pub const NULLITY_TOL: f64 = 0.05;

#[derive(Debug, Clone)]
pub struct TriMesh {
    pub n_vertices: usize,
    pub triangles: Vec<[usize; 3]>,
    /// `edge_len[t][k]` is the length of the edge opposite corner `k`.
    pub edge_len: Vec<[f64; 3]>,
    /// Potential `q = |sigma|^2 + Ric(N, N)` per vertex.
    pub q: Vec<f64>,
    /// Vertices where the eigenfunctions vanish.
    pub dirichlet: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    pub index: usize,
    pub nullity: usize,
    pub nullity_tol: f64,
}

/// Stiffness triplets and lumped masses.
fn assemble(mesh: &TriMesh) -> Result<(BTreeMap<(usize, usize), f64>, Vec<f64>)> {
    let mut k: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut m = vec![0.0; mesh.n_vertices];
    for (t, l) in mesh.triangles.iter().zip(&mesh.edge_len) {
        let area = heron(l);
        if !(area > 0.0) {
            return Err(Error::DegenerateChart { u: f64::NAN, v: f64::NAN, det: area });
        }
        for c in 0..3 {
            m[t[c]] += area / 3.0;
            let (i, j) = (t[(c + 1) % 3], t[(c + 2) % 3]);
            let (li, lj, lc) = (l[(c + 1) % 3], l[(c + 2) % 3], l[c]);
            let w = 0.5 * (li * li + lj * lj - lc * lc) / (4.0 * area);
            *k.entry((i, i)).or_default() += w;
            *k.entry((j, j)).or_default() += w;
            *k.entry((i, j)).or_default() -= w;
            *k.entry((j, i)).or_default() -= w;
        }
    }
    let asym = k
        .iter()
        .map(|(&(i, j), &v)| (v - k.get(&(j, i)).copied().unwrap_or(0.0)).abs())
        .fold(0.0, f64::max);
    if asym > 1e-12 {
        return Err(Error::NonSymmetric(asym));
    }
    Ok((k, m))
}

/// Triangle area from its side lengths (Kahan's stable form).
fn heron(l: &[f64; 3]) -> f64 {
    let mut s = *l;
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let [a, b, c] = s;
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    0.25 * p.max(0.0).sqrt()
}

/// `L u = -M^{-1} K u + q u` at every vertex.
pub fn apply_operator(mesh: &TriMesh, u: &[f64]) -> Vec<f64> {
    let (k, m) = assemble(mesh).expect("mesh assembly");
    let mut out: Vec<f64> = (0..mesh.n_vertices).map(|i| mesh.q[i] * u[i]).collect();
    for (&(i, j), &v) in &k {
        out[i] -= v * u[j] / m[i];
    }
    out
}

/// Reverse Cuthill–McKee ordering of the free vertices.
fn rcm(n: usize, adj: &[Vec<usize>]) -> Vec<usize> {
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    let bfs = |start: usize, seen: &mut Vec<bool>, out: &mut Vec<usize>| {
        let mut q = VecDeque::from([start]);
        seen[start] = true;
        while let Some(v) = q.pop_front() {
            out.push(v);
            let mut nb: Vec<usize> = adj[v].iter().copied().filter(|&w| !seen[w]).collect();
            nb.sort_by_key(|&w| (adj[w].len(), w));
            for w in nb {
                seen[w] = true;
                q.push_back(w);
            }
        }
    };
    for root in 0..n {
        if seen[root] {
            continue;
        }
        // pseudo-peripheral start: last vertex of a BFS from the root
        let mut probe = Vec::new();
        let mut tmp = seen.clone();
        bfs(root, &mut tmp, &mut probe);
        let start = *probe.last().unwrap();
        bfs(start, &mut seen, &mut order);
    }
    order.reverse();
    order
}

/// Symmetric positive definite band matrix, lower part stored by diagonals.
struct Band {
    n: usize,
    b: usize,
    a: Vec<f64>,
}

impl Band {
    fn new(n: usize, b: usize) -> Self {
        Self { n, b, a: vec![0.0; n * (b + 1)] }
    }

    fn at(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.a[i * (self.b + 1) + (i - j)]
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i * (self.b + 1) + (i - j)]
    }

    fn cholesky(&mut self) -> Result<()> {
        let b = self.b;
        for i in 0..self.n {
            let lo = i.saturating_sub(b);
            for j in lo..=i {
                let kmin = lo.max(j.saturating_sub(b));
                let mut s = self.get(i, j);
                for k in kmin..j {
                    s -= self.get(i, k) * self.get(j, k);
                }
                if i == j {
                    if !(s > 0.0) {
                        return Err(Error::NoConvergence { what: "Cholesky of the shifted operator".into(), residual: s });
                    }
                    *self.at(i, i) = s.sqrt();
                } else {
                    *self.at(i, j) = s / self.get(j, j);
                }
            }
        }
        Ok(())
    }

    fn solve(&self, x: &mut [f64]) {
        let b = self.b;
        for i in 0..self.n {
            let mut s = x[i];
            for k in i.saturating_sub(b)..i {
                s -= self.get(i, k) * x[k];
            }
            x[i] = s / self.get(i, i);
        }
        for i in (0..self.n).rev() {
            let mut s = x[i];
            for k in (i + 1)..(i + b + 1).min(self.n) {
                s -= self.get(k, i) * x[k];
            }
            x[i] = s / self.get(i, i);
        }
    }
}

/// Lowest `k` eigenvalues of `-L` on the free vertices of the mesh.
pub fn lowest_eigenvalues(mesh: &TriMesh, k: usize, nullity_tol: f64) -> Result<Spectrum> {
    if k == 0 || !(nullity_tol > 0.0) {
        return Err(Error::InvalidArgument("need k > 0 and a positive nullity tolerance".into()));
    }
    let (kmat, mass) = assemble(mesh)?;
    let free: Vec<usize> = (0..mesh.n_vertices).filter(|&i| !mesh.dirichlet[i]).collect();
    let n = free.len();
    if k > n {
        return Err(Error::InvalidArgument(format!("{k} eigenvalues requested from {n} unknowns")));
    }
    let mut local = vec![usize::MAX; mesh.n_vertices];
    for (a, &i) in free.iter().enumerate() {
        local[i] = a;
    }
    let mut adj = vec![Vec::new(); n];
    for &(i, j) in kmat.keys() {
        if i != j && local[i] != usize::MAX && local[j] != usize::MAX {
            adj[local[i]].push(local[j]);
        }
    }
    let order = rcm(n, &adj);
    let mut pos = vec![0; n];
    for (p, &a) in order.iter().enumerate() {
        pos[a] = p;
    }
    let perm = |i: usize| pos[local[i]];
    let mut bw = 0;
    for &(i, j) in kmat.keys() {
        if local[i] != usize::MAX && local[j] != usize::MAX {
            bw = bw.max(perm(i).abs_diff(perm(j)));
        }
    }
    let qmax = free.iter().map(|&i| mesh.q[i]).fold(f64::NEG_INFINITY, f64::max);
    let sigma = -qmax - 1.0;
    let mut m = vec![0.0; n];
    let mut band = Band::new(n, bw);
    for &i in &free {
        let p = perm(i);
        m[p] = mass[i];
        *band.at(p, p) += -(mesh.q[i] + sigma) * mass[i];
    }
    for (&(i, j), &v) in &kmat {
        if local[i] == usize::MAX || local[j] == usize::MAX {
            continue;
        }
        let (a, b) = (perm(i), perm(j));
        if a >= b {
            *band.at(a, b) += v;
        }
    }
    band.cholesky()?;
    let sqrt_m: Vec<f64> = m.iter().map(|x| x.sqrt()).collect();

    // S = M^{1/2} B^{-1} M^{1/2}; its largest eigenvalues are 1 / (lambda - sigma)
    let p = (2 * k).max(k + 8).min(n);
    let apply = |x: &[f64]| -> Vec<f64> {
        let mut y: Vec<f64> = x.iter().zip(&sqrt_m).map(|(a, b)| a * b).collect();
        band.solve(&mut y);
        y.iter_mut().zip(&sqrt_m).for_each(|(a, b)| *a *= b);
        y
    };
    let mut x = DMatrix::from_fn(n, p, |i, j| {
        let s = ((i * 7919 + j * 104729) as f64 * 12.9898).sin() * 43758.5453;
        s - s.floor() - 0.5
    });
    x = orthonormalize(x);
    let mut prev = vec![f64::INFINITY; k];
    let mut nu = Vec::new();
    for _ in 0..2000 {
        let mut y = DMatrix::zeros(n, p);
        for j in 0..p {
            let col: Vec<f64> = x.column(j).iter().copied().collect();
            y.set_column(j, &nalgebra::DVector::from_vec(apply(&col)));
        }
        let ap = y.transpose() * &x;
        let ap = (&ap + ap.transpose()) * 0.5;
        let bp = y.transpose() * &y;
        let l = bp.clone().cholesky().ok_or(Error::NoConvergence { what: "subspace Gram matrix".into(), residual: f64::NAN })?;
        let linv = l.l().try_inverse().unwrap();
        let c = &linv * ap * linv.transpose();
        let c = (&c + c.transpose()) * 0.5;
        let eig = SymmetricEigen::new(c);
        let mut idx: Vec<usize> = (0..p).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
        let v = DMatrix::from_fn(p, p, |i, j| eig.eigenvectors[(i, idx[j])]);
        nu = idx.iter().map(|&i| eig.eigenvalues[i]).collect::<Vec<_>>();
        x = y * linv.transpose() * v;
        let change = (0..k).map(|i| (nu[i] - prev[i]).abs() / nu[i].abs().max(1e-300)).fold(0.0, f64::max);
        prev.copy_from_slice(&nu[..k]);
        if change < 1e-12 {
            let eigenvalues: Vec<f64> = nu[..k].iter().map(|v| sigma + v).collect();
            return Ok(Spectrum {
                index: eigenvalues.iter().filter(|&&l| l < -nullity_tol).count(),
                nullity: eigenvalues.iter().filter(|&&l| l.abs() <= nullity_tol).count(),
                eigenvalues,
                nullity_tol,
            });
        }
    }
    Err(Error::NoConvergence { what: "subspace iteration".into(), residual: nu.first().copied().unwrap_or(f64::NAN) })
}

fn orthonormalize(x: DMatrix<f64>) -> DMatrix<f64> {
    x.qr().q()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Unit square `[0, 1]^2`, `n x n` cells split along the diagonal.
    fn square(n: usize, q: f64) -> TriMesh {
        let h = 1.0 / n as f64;
        let idx = |i: usize, j: usize| i * (n + 1) + j;
        let d = h * 2f64.sqrt();
        let mut triangles = Vec::new();
        let mut edge_len = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let (a, b, c, e) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                triangles.push([a, b, c]);
                edge_len.push([h, d, h]);
                triangles.push([a, c, e]);
                edge_len.push([h, h, d]);
            }
        }
        let nv = (n + 1) * (n + 1);
        let dirichlet = (0..nv).map(|v| {
            let (i, j) = (v / (n + 1), v % (n + 1));
            i == 0 || j == 0 || i == n || j == n
        });
        TriMesh { n_vertices: nv, triangles, edge_len, q: vec![q; nv], dirichlet: dirichlet.collect() }
    }

    #[test]
    fn dirichlet_square() {
        let s = lowest_eigenvalues(&square(40, 0.0), 4, NULLITY_TOL).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        let exact = [2.0 * pi2, 5.0 * pi2, 5.0 * pi2, 8.0 * pi2];
        for (l, e) in s.eigenvalues.iter().zip(exact) {
            assert!((l / e - 1.0).abs() < 0.02, "{l} vs {e}");
        }
        assert!(s.eigenvalues.iter().all(|&l| l > 0.0));
        assert_eq!((s.index, s.nullity), (0, 0));
    }

    #[test]
    fn potential_shifts_spectrum() {
        let a = lowest_eigenvalues(&square(20, 0.0), 3, NULLITY_TOL).unwrap();
        let b = lowest_eigenvalues(&square(20, 3.0), 3, NULLITY_TOL).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - 3.0 - y).abs() < 1e-8);
        }
    }

    #[test]
    fn band_cholesky_solves() {
        let n = 30;
        let mut band = Band::new(n, 2);
        let mut dense = DMatrix::zeros(n, n);
        for i in 0..n {
            for d in 0..=2.min(i) {
                let v = if d == 0 { 6.0 } else { -1.0 / d as f64 };
                *band.at(i, i - d) = v;
                dense[(i, i - d)] = v;
                dense[(i - d, i)] = v;
            }
        }
        band.cholesky().unwrap();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = rhs.clone();
        band.solve(&mut x);
        let r = dense * nalgebra::DVector::from_vec(x) - nalgebra::DVector::from_vec(rhs);
        assert!(r.amax() < 1e-13);
    }

    #[test]
    fn heron_is_stable() {
        assert!((heron(&[3.0, 4.0, 5.0]) - 6.0).abs() < 1e-14);
        assert!(heron(&[1.0, 1.0, 2.0]).abs() < 1e-14);
    }
}
