//! Parameter sets as face decompositions.
//!
//! For a polyhedron `S` the bound needs, per face dimension `j`, the
//! coefficient `g_j = Σ_{faces F of dim j} |F|_j · σ̂(F)`, where `σ̂(F)` is the
//! normalized solid angle of the normal cone of `S` at `F` (fraction of the
//! unit sphere of the normal space). `σ̂ = 1` for the interior.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{precondition, Error, Result};
use crate::mc::substream;

/// Largest ambient dimension accepted for H-polytopes.
pub const MAX_POLYTOPE_DIM: usize = 6;
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeometryKind {
    Point,
    Rectangle,
    HPolytope,
    SphereSurface,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaceDecomposition {
    /// Ambient dimension.
    pub d: usize,
    /// Largest nonempty face dimension.
    pub d0: usize,
    /// `g_0, …, g_{d0}`.
    pub g: Vec<f64>,
    /// Monte Carlo standard error of each `g_j` (zero when exact).
    pub g_stderr: Vec<f64>,
    /// Regularity parameter `κ(S)`; `0` for convex sets.
    pub kappa: f64,
    pub kind: GeometryKind,
}

impl FaceDecomposition {
    /// A single point in `R^d`: `g = (1)`.
    pub fn point(d: usize) -> Self {
        Self {
            d,
            d0: 0,
            g: vec![1.0],
            g_stderr: vec![0.0],
            kappa: 0.0,
            kind: GeometryKind::Point,
        }
    }

    /// Unit sphere `S^{d−1} ⊂ R^d`: only `g_{d−1}` (the surface area) is
    /// nonzero. `κ = 1/2`, because the distance from `s` to the tangent
    /// plane at `t` is `‖t − s‖²/2`. Bounds for spheres use their own formula,
    /// see [`crate::bounds::sphere_pbar`].
    pub fn sphere_surface(d: usize) -> Result<Self> {
        if d < 2 {
            return precondition("sphere_surface needs d >= 2");
        }
        let mut g = vec![0.0; d];
        g[d - 1] = sphere_area(d);
        Ok(Self {
            d,
            d0: d - 1,
            g,
            g_stderr: vec![0.0; d],
            kappa: 0.5,
            kind: GeometryKind::SphereSurface,
        })
    }

    pub fn is_convex(&self) -> bool {
        self.kind != GeometryKind::SphereSurface
    }
}

/// Surface area of the unit sphere in `R^d`, `2π^{d/2}/Γ(d/2)`.
pub fn sphere_area(d: usize) -> f64 {
    let h = d as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / crate::special::gamma_fn(h)
}

/// Box `Π [0, L_i]`: `g_j` is the elementary symmetric polynomial `e_j(L)`.
///
/// A `j`-face spanned by coordinates `I` has normal cone an orthant of
/// dimension `d − j`, so `σ̂ = 2^{−(d−j)}`, and it has `2^{d−j}` parallel copies.
pub fn rectangle_faces(sides: &[f64]) -> Result<FaceDecomposition> {
    if sides.is_empty() {
        return precondition("rectangle needs at least one side");
    }
    if let Some(s) = sides.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return precondition(format!("rectangle sides must be positive, got {s}"));
    }
    let d = sides.len();
    let mut e = vec![0.0; d + 1];
    e[0] = 1.0;
    for (k, &s) in sides.iter().enumerate() {
        for j in (1..=k + 1).rev() {
            e[j] += s * e[j - 1];
        }
    }
    Ok(FaceDecomposition {
        d,
        d0: d,
        g: e,
        g_stderr: vec![0.0; d + 1],
        kappa: 0.0,
        kind: GeometryKind::Rectangle,
    })
}

/// Closed halfspace `normal · x ≤ offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn combinations(m: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > m {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if idx[i] < m - k + i {
                break;
            }
            if i == 0 {
                return out;
            }
        }
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Orthonormal basis of `span(vectors)` by modified Gram–Schmidt, dropping
/// directions whose residual norm is below `tol`.
fn orthonormal_basis(vectors: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
            }
        }
        let norm = dot(&w, &w).sqrt();
        if norm > tol {
            basis.push(w.into_iter().map(|x| x / norm).collect());
        }
    }
    basis
}

fn project_out(w: &mut [f64], basis: &[Vec<f64>]) {
    for q in basis {
        let c = dot(w, q);
        w.iter_mut().zip(q).for_each(|(wi, qi)| *wi -= c * qi);
    }
}

struct Face {
    vertices: Vec<usize>,
    dim: usize,
    basis: Vec<Vec<f64>>,
}

struct Polytope {
    d: usize,
    vertices: Vec<Vec<f64>>,
    faces: Vec<Face>,
    scale: f64,
}

fn build_polytope(halfspaces: &[Halfspace]) -> Result<Polytope> {
    if halfspaces.is_empty() {
        return Err(Error::InvalidGeometry("no halfspaces".into()));
    }
    let d = halfspaces[0].normal.len();
    if d == 0 || d > MAX_POLYTOPE_DIM {
        return Err(Error::InvalidGeometry(format!(
            "dimension {d} outside 1..={MAX_POLYTOPE_DIM}"
        )));
    }
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::with_capacity(halfspaces.len());
    for h in halfspaces {
        if h.normal.len() != d {
            return Err(Error::InvalidGeometry("halfspace normals differ in dimension".into()));
        }
        let norm = dot(&h.normal, &h.normal).sqrt();
        if !(norm > 0.0 && norm.is_finite() && h.offset.is_finite()) {
            return Err(Error::InvalidGeometry("halfspace normal must be finite and nonzero".into()));
        }
        rows.push((h.normal.iter().map(|x| x / norm).collect(), h.offset / norm));
    }
    let m = rows.len();
    let scale = rows.iter().fold(1.0f64, |s, (_, b)| s.max(b.abs()));
    let tol = RANK_TOL * scale;

    // vertices: feasible solutions of every nonsingular d × d active system
    let mut vertices: Vec<Vec<f64>> = Vec::new();
    for combo in combinations(m, d) {
        let a = DMatrix::from_fn(d, d, |i, j| rows[combo[i]].0[j]);
        let sv = a.clone().svd(false, false).singular_values;
        if sv.min() <= RANK_TOL {
            continue;
        }
        let b = DVector::from_fn(d, |i, _| rows[combo[i]].1);
        let Some(x) = a.lu().solve(&b) else { continue };
        let x: Vec<f64> = x.iter().copied().collect();
        if rows.iter().any(|(n, off)| dot(n, &x) > off + tol) {
            continue;
        }
        let dup = vertices.iter().any(|v| {
            v.iter().zip(&x).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt() <= tol
        });
        if !dup {
            vertices.push(x);
        }
    }
    if vertices.is_empty() {
        return Err(Error::InvalidGeometry("polytope is empty or has no vertices".into()));
    }
    let active: Vec<BTreeSet<usize>> = vertices
        .iter()
        .map(|v| (0..m).filter(|&i| (dot(&rows[i].0, v) - rows[i].1).abs() <= tol).collect())
        .collect();

    // bounded iff no edge leaving a vertex is an infinite ray
    for (v, act) in vertices.iter().zip(&active) {
        let act: Vec<usize> = act.iter().copied().collect();
        for sub in combinations(act.len(), d - 1) {
            let normals: Vec<Vec<f64>> = sub.iter().map(|&i| rows[act[i]].0.clone()).collect();
            let nb = orthonormal_basis(&normals, RANK_TOL);
            if nb.len() != d - 1 {
                continue;
            }
            // direction orthogonal to the d − 1 normals
            let mut y = None;
            for e in 0..d {
                let mut w = vec![0.0; d];
                w[e] = 1.0;
                project_out(&mut w, &nb);
                let nrm = dot(&w, &w).sqrt();
                if nrm > 1e-3 {
                    y = Some(w.into_iter().map(|x| x / nrm).collect::<Vec<f64>>());
                    break;
                }
            }
            let Some(y) = y else { continue };
            for sign in [1.0, -1.0] {
                let dir: Vec<f64> = y.iter().map(|x| sign * x).collect();
                if rows.iter().all(|(n, _)| dot(n, &dir) <= RANK_TOL) {
                    return Err(Error::InvalidGeometry(format!(
                        "polytope is unbounded along {dir:?} from vertex {v:?}"
                    )));
                }
            }
        }
    }

    // faces: vertex sets cut out by active-constraint subsets of size ≤ d
    let mut vertex_sets: BTreeSet<Vec<usize>> = BTreeSet::new();
    vertex_sets.insert((0..vertices.len()).collect());
    for act in &active {
        let act: Vec<usize> = act.iter().copied().collect();
        for k in 1..=d.min(act.len()) {
            for sub in combinations(act.len(), k) {
                let cons: Vec<usize> = sub.iter().map(|&i| act[i]).collect();
                let set: Vec<usize> = (0..vertices.len())
                    .filter(|&u| cons.iter().all(|c| active[u].contains(c)))
                    .collect();
                vertex_sets.insert(set);
            }
        }
    }
    let mut faces: Vec<Face> = vertex_sets
        .into_iter()
        .map(|set| {
            let v0 = &vertices[set[0]];
            let diffs: Vec<Vec<f64>> = set[1..]
                .iter()
                .map(|&u| vertices[u].iter().zip(v0).map(|(p, q)| p - q).collect())
                .collect();
            let basis = orthonormal_basis(&diffs, tol);
            Face {
                dim: basis.len(),
                vertices: set,
                basis,
            }
        })
        .collect();
    faces.sort_by(|a, b| a.dim.cmp(&b.dim).then_with(|| a.vertices.cmp(&b.vertices)));
    if faces.last().map(|f| f.dim) != Some(d) {
        return Err(Error::InvalidGeometry("polytope is not full dimensional".into()));
    }
    Ok(Polytope {
        d,
        vertices,
        faces,
        scale,
    })
}

impl Polytope {
    fn centroid(&self, face: &Face) -> Vec<f64> {
        let mut c = vec![0.0; self.d];
        for &u in &face.vertices {
            c.iter_mut().zip(&self.vertices[u]).for_each(|(ci, vi)| *ci += vi);
        }
        let k = face.vertices.len() as f64;
        c.iter_mut().for_each(|ci| *ci /= k);
        c
    }

    /// `j`-dimensional measure of every face, by pyramids over facets.
    fn measures(&self) -> Vec<f64> {
        let mut meas = vec![0.0; self.faces.len()];
        for (i, f) in self.faces.iter().enumerate() {
            if f.dim == 0 {
                meas[i] = 1.0;
                continue;
            }
            let c = self.centroid(f);
            let mut total = 0.0;
            for (k, g) in self.faces.iter().enumerate() {
                if g.dim + 1 != f.dim || !g.vertices.iter().all(|u| f.vertices.contains(u)) {
                    continue;
                }
                let mut w: Vec<f64> = c.iter().zip(&self.vertices[g.vertices[0]]).map(|(p, q)| p - q).collect();
                project_out(&mut w, &g.basis);
                total += dot(&w, &w).sqrt() * meas[k];
            }
            meas[i] = total / f.dim as f64;
        }
        meas
    }

    /// Fraction of Gaussian directions in the normal space of `face` that
    /// are maximized over the polytope on `face`.
    fn normal_cone_fraction(&self, face: &Face, reps: usize, seed: u64, stream: u64) -> f64 {
        let mut rng = substream(seed, stream);
        let v_f = &self.vertices[face.vertices[0]];
        let mut hits = 0usize;
        let mut z = vec![0.0; self.d];
        for _ in 0..reps {
            for zi in z.iter_mut() {
                *zi = rng.sample(StandardNormal);
            }
            project_out(&mut z, &face.basis);
            let base = dot(&z, v_f);
            let tol = 1e-12 * dot(&z, &z).sqrt() * self.scale;
            if self.vertices.iter().all(|u| dot(&z, u) <= base + tol) {
                hits += 1;
            }
        }
        hits as f64 / reps as f64
    }
}

/// `g_j` for a bounded full-dimensional H-polytope `{x : a_i·x ≤ b_i}`.
///
/// Faces are found by enumerating active-constraint subsets; face measures
/// are exact; normal-cone solid angles are Monte Carlo estimates with `reps`
/// Gaussian directions per face (one substream per face).
pub fn polytope_g_coeffs(halfspaces: &[Halfspace], reps: usize, seed: u64) -> Result<FaceDecomposition> {
    if reps < 2 {
        return precondition("polytope_g_coeffs needs reps >= 2");
    }
    let poly = build_polytope(halfspaces)?;
    let d = poly.d;
    let meas = poly.measures();
    let fractions: Vec<f64> = poly
        .faces
        .par_iter()
        .enumerate()
        .map(|(i, f)| {
            if f.dim == d {
                1.0
            } else {
                poly.normal_cone_fraction(f, reps, seed, i as u64)
            }
        })
        .collect();
    let mut g = vec![0.0; d + 1];
    let mut var = vec![0.0; d + 1];
    for ((f, m), p) in poly.faces.iter().zip(&meas).zip(&fractions) {
        g[f.dim] += m * p;
        if f.dim < d {
            var[f.dim] += m * m * p * (1.0 - p) / reps as f64;
        }
    }
    Ok(FaceDecomposition {
        d,
        d0: d,
        g,
        g_stderr: var.into_iter().map(f64::sqrt).collect(),
        kappa: 0.0,
        kind: GeometryKind::HPolytope,
    })
}

/// `κ(S)` for the union of two unit segments from the origin at angle `θ`.
///
/// Always `+∞`: points on one segment approach the vertex from outside the
/// cone of the other, see [`angle_boundary_kappa_ratio`].
pub fn kappa_of_angle_boundary(theta: f64) -> Result<f64> {
    if !(theta > 0.0 && theta < std::f64::consts::PI) {
        return precondition(format!("angle must lie in (0, π), got {theta}"));
    }
    Ok(f64::INFINITY)
}

/// A point on the two-segment set: `segment ∈ {0, 1}`, distance `r ∈ [0, 1]`
/// from the shared vertex. Segment 0 points along `e_1`, segment 1 along
/// `(cos θ, sin θ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnglePoint {
    pub segment: usize,
    pub r: f64,
}

fn dist_to_ray(w: [f64; 2], e: [f64; 2]) -> f64 {
    let c = w[0] * e[0] + w[1] * e[1];
    if c >= 0.0 {
        (w[0] - c * e[0]).hypot(w[1] - c * e[1])
    } else {
        w[0].hypot(w[1])
    }
}

/// `dist(t − s, C_t)/‖t − s‖²` for the two-segment set, where `C_t` is the
/// cone of directions from `t` into the set's local tangent structure.
pub fn angle_boundary_kappa_ratio(theta: f64, t: AnglePoint, s: AnglePoint) -> Result<f64> {
    kappa_of_angle_boundary(theta)?;
    let dir = |seg: usize| -> [f64; 2] {
        if seg == 0 {
            [1.0, 0.0]
        } else {
            [theta.cos(), theta.sin()]
        }
    };
    let pos = |p: AnglePoint| -> [f64; 2] {
        let e = dir(p.segment);
        [p.r * e[0], p.r * e[1]]
    };
    for p in [t, s] {
        if p.segment > 1 || !(0.0..=1.0).contains(&p.r) {
            return precondition("angle point needs segment 0 or 1 and r in [0, 1]");
        }
    }
    let (pt, ps) = (pos(t), pos(s));
    let w = [pt[0] - ps[0], pt[1] - ps[1]];
    let n2 = w[0] * w[0] + w[1] * w[1];
    if n2 == 0.0 {
        return precondition("s and t must differ");
    }
    let e = dir(t.segment);
    let dist = if t.r == 0.0 {
        // vertex: cone generated by −e_0 and −e_θ
        let (p, q) = (dir(0), dir(1));
        let m = [-w[0], -w[1]];
        let det = p[0] * q[1] - p[1] * q[0];
        let alpha = (m[0] * q[1] - m[1] * q[0]) / det;
        let beta = (p[0] * m[1] - p[1] * m[0]) / det;
        if alpha >= 0.0 && beta >= 0.0 {
            0.0
        } else {
            dist_to_ray(w, [-p[0], -p[1]]).min(dist_to_ray(w, [-q[0], -q[1]]))
        }
    } else if t.r == 1.0 {
        dist_to_ray(w, e)
    } else {
        let c = w[0] * e[0] + w[1] * e[1];
        (w[0] - c * e[0]).hypot(w[1] - c * e[1])
    };
    Ok(dist / n2)
}
