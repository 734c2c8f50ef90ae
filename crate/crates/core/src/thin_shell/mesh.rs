use std::collections::HashMap;

use crate::error::{MagError, Result};
use crate::geometry::{Surface, SurfacePoint};
use crate::vec3::{add, cross, dot, norm, normalize, scale, sub, Vec3};

/// Triangulation of a parametric surface. Vertices lie exactly on the
/// surface and carry its analytic frame; triangles are oriented so that
/// their flat normals point outward.
#[derive(Debug, Clone)]
pub struct SurfaceMesh {
    pub surface: Surface,
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
    /// Analytic frame (normal, curvatures, principal directions) per vertex.
    pub frames: Vec<SurfacePoint>,
    /// Barycentric vertex areas (a third of each incident triangle).
    pub vertex_area: Vec<f64>,
}

impl SurfaceMesh {
    /// Icosphere for a sphere (`level` midpoint subdivisions of the
    /// icosahedron), or a `5 2^level` by proportional `(theta, phi)` grid
    /// for a torus.
    pub fn new(surface: Surface, level: u32) -> Result<Self> {
        surface.validate()?;
        if level > 8 {
            return Err(MagError::Config(format!("mesh level {level} is too fine (max 8)")));
        }
        let (vertices, triangles) = match surface {
            Surface::Sphere { center, radius } => icosphere(center, radius, level),
            Surface::Torus { major, minor, .. } => {
                let nt = 5 << level;
                let np = ((nt as f64) * major / minor).round().max(3.0) as usize;
                torus_grid(&surface, nt, np)
            }
        };
        Ok(Self::assemble(surface, vertices, triangles))
    }

    fn assemble(surface: Surface, vertices: Vec<Vec3>, mut triangles: Vec<[usize; 3]>) -> Self {
        let frames: Vec<SurfacePoint> = vertices.iter().map(|&v| surface.project(v)).collect();
        for t in triangles.iter_mut() {
            let c = centroid(&vertices, t);
            let n = surface.project(c).normal;
            if dot(flat_normal(&vertices, t), n) < 0.0 {
                t.swap(1, 2);
            }
        }
        let mut vertex_area = vec![0.0; vertices.len()];
        for t in &triangles {
            let a = triangle_area(&vertices, t);
            for &v in t {
                vertex_area[v] += a / 3.0;
            }
        }
        SurfaceMesh { surface, vertices, triangles, frames, vertex_area }
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Sum of flat triangle areas.
    pub fn area(&self) -> f64 {
        self.triangles.iter().map(|t| triangle_area(&self.vertices, t)).sum()
    }

    /// Every edge is shared by exactly two triangles with opposite orientation.
    pub fn is_closed_oriented(&self) -> bool {
        let mut edges: HashMap<(usize, usize), i32> = HashMap::new();
        for t in &self.triangles {
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let (key, s) = if a < b { ((a, b), 1) } else { ((b, a), -1) };
                let e = edges.entry(key).or_insert(0);
                *e += s * 10 + 1;
            }
        }
        // one use in each direction gives 10 + 1 - 10 + 1 = 2
        edges.values().all(|&v| v == 2)
    }

    /// Area, centroid frame and P1 basis gradients of triangle `i`.
    pub(crate) fn element(&self, i: usize) -> Element {
        let t = &self.triangles[i];
        let p = [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]];
        let nrm = cross(sub(p[1], p[0]), sub(p[2], p[0]));
        let twice = norm(nrm);
        let unit = scale(nrm, 1.0 / twice);
        let mut grads = [[0.0; 3]; 3];
        for k in 0..3 {
            // edge opposite vertex k, counter-clockwise
            let e = sub(p[(k + 2) % 3], p[(k + 1) % 3]);
            grads[k] = scale(cross(unit, e), 1.0 / twice);
        }
        let c = scale(add(add(p[0], p[1]), p[2]), 1.0 / 3.0);
        Element { vertices: *t, area: 0.5 * twice, grads, frame: self.surface.project(c) }
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }
}

pub(crate) struct Element {
    pub vertices: [usize; 3],
    pub area: f64,
    pub grads: [Vec3; 3],
    pub frame: SurfacePoint,
}

impl Element {
    /// Gradient (rows: components of `f`) of the linear interpolant of
    /// vertex values; differences against the first vertex keep constants exact.
    pub fn gradient(&self, f: impl Fn(usize) -> Vec3) -> [Vec3; 3] {
        let v0 = f(self.vertices[0]);
        let mut g = [[0.0; 3]; 3];
        for k in 1..3 {
            let v = sub(f(self.vertices[k]), v0);
            for c in 0..3 {
                for d in 0..3 {
                    g[c][d] += v[c] * self.grads[k][d];
                }
            }
        }
        g
    }
}

fn centroid(v: &[Vec3], t: &[usize; 3]) -> Vec3 {
    scale(add(add(v[t[0]], v[t[1]]), v[t[2]]), 1.0 / 3.0)
}

fn flat_normal(v: &[Vec3], t: &[usize; 3]) -> Vec3 {
    cross(sub(v[t[1]], v[t[0]]), sub(v[t[2]], v[t[0]]))
}

fn triangle_area(v: &[Vec3], t: &[usize; 3]) -> f64 {
    0.5 * norm(flat_normal(v, t))
}

fn icosphere(center: Vec3, radius: f64, level: u32) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    let p = (1.0 + 5f64.sqrt()) / 2.0;
    let mut unit: Vec<Vec3> = [
        [-1.0, p, 0.0],
        [1.0, p, 0.0],
        [-1.0, -p, 0.0],
        [1.0, -p, 0.0],
        [0.0, -1.0, p],
        [0.0, 1.0, p],
        [0.0, -1.0, -p],
        [0.0, 1.0, -p],
        [p, 0.0, -1.0],
        [p, 0.0, 1.0],
        [-p, 0.0, -1.0],
        [-p, 0.0, 1.0],
    ]
    .iter()
    .map(|&v| normalize(v))
    .collect();
    let mut tris: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..level {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, unit: &mut Vec<Vec3>| {
            let key = (a.min(b), a.max(b));
            *mid.entry(key).or_insert_with(|| {
                unit.push(normalize(add(unit[a], unit[b])));
                unit.len() - 1
            })
        };
        let mut next = Vec::with_capacity(tris.len() * 4);
        for &[a, b, c] in &tris {
            let ab = midpoint(a, b, &mut unit);
            let bc = midpoint(b, c, &mut unit);
            let ca = midpoint(c, a, &mut unit);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        tris = next;
    }
    let verts = unit.iter().map(|&u| add(center, scale(u, radius))).collect();
    (verts, tris)
}

fn torus_grid(surface: &Surface, nt: usize, np: usize) -> (Vec<Vec3>, Vec<[usize; 3]>) {
    use std::f64::consts::TAU;
    let mut verts = Vec::with_capacity(nt * np);
    for j in 0..np {
        for i in 0..nt {
            let (theta, phi) = (TAU * i as f64 / nt as f64, TAU * j as f64 / np as f64);
            verts.push(surface.torus_point(theta, phi).position);
        }
    }
    let id = |i: usize, j: usize| (j % np) * nt + (i % nt);
    let mut tris = Vec::with_capacity(2 * nt * np);
    for j in 0..np {
        for i in 0..nt {
            tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    (verts, tris)
}
