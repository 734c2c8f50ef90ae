//! Thin shells `Omega_eps = { xi + eps t n(xi) : xi in S, |t| < 1 }` around a
//! parametric surface: metric factors of the shell coordinates, the scaled
//! Dirichlet energy, the limit surface functional
//! `F(m) = int_S |grad_S m|^2 + (m.n)^2`, the recovery potentials that
//! bracket the stray energy, and the `eps -> 0` study driver.
//!
//! Energies are normalized per unit thickness: the 3D exchange and stray
//! energies of the shell are divided by `eps`.

mod mesh;

pub use mesh::SurfaceMesh;

use serde::{Deserialize, Serialize};

use crate::error::{MagError, Result};
use crate::geometry::{Geometry, Surface, SurfacePoint};
use crate::grid::{build_mask, DomainMask, EdgeField, GridSpec, ScalarField, VectorField};
use crate::magnetostatics::{functional_v, functional_w, solve_scalar_potential, SolverConfig};
use crate::vec3::{cross, dot, norm, sub, Vec3};

/// Minimum number of cells across the shell thickness `2 eps`.
pub const MIN_CELLS_ACROSS: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricFactors {
    pub sqrt_g: f64,
    pub h: [f64; 2],
}

/// Jacobian `|1 + 2 eps t H + eps^2 t^2 G|` and gradient scalings
/// `1 / (1 + eps t k_i)` of the shell map at `(xi, t)`.
pub fn metric_factors(p: &SurfacePoint, t: f64, eps: f64) -> Result<MetricFactors> {
    if !(t.abs() <= 1.0 + 1e-12) {
        return Err(MagError::Config(format!("shell coordinate t = {t} outside [-1, 1]")));
    }
    let kmax = p.kappa[0].abs().max(p.kappa[1].abs());
    if !(eps > 0.0) || eps * kmax >= 1.0 {
        return Err(MagError::TubularCondition { thickness: eps, radius: 1.0 / kmax });
    }
    let s = eps * t;
    Ok(MetricFactors {
        sqrt_g: (1.0 + 2.0 * s * p.mean_curvature() + s * s * p.gaussian_curvature()).abs(),
        h: [1.0 / (1.0 + s * p.kappa[0]), 1.0 / (1.0 + s * p.kappa[1])],
    })
}

/// Gauss-Legendre nodes and weights on (-1, 1).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, z);
            let dz = p / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, z);
        x[n - 1 - i] = z;
        w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, z);
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    (p1, n as f64 * (z * p1 - p0) / (z * z - 1.0))
}

/// Differentiation matrix of the polynomial interpolant through `x`.
fn differentiation_matrix(x: &[f64]) -> Vec<Vec<f64>> {
    let n = x.len();
    let lam: Vec<f64> = (0..n)
        .map(|l| 1.0 / (0..n).filter(|&j| j != l).map(|j| x[l] - x[j]).product::<f64>())
        .collect();
    let mut d = vec![vec![0.0; n]; n];
    for k in 0..n {
        let mut diag = 0.0;
        for l in 0..n {
            if l != k {
                d[k][l] = lam[l] / lam[k] / (x[k] - x[l]);
                diag -= d[k][l];
            }
        }
        d[k][k] = diag;
    }
    d
}

/// Unit field sampled at `(vertex, t_k)` for Gauss-Legendre nodes `t_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShellField {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    /// Vertex-major: sample `(v, k)` at `v * nodes.len() + k`.
    pub m: Vec<Vec3>,
}

impl ShellField {
    pub fn from_fn(mesh: &SurfaceMesh, n_nodes: usize, mut f: impl FnMut(&SurfacePoint, f64) -> Vec3) -> Result<Self> {
        if n_nodes < 2 {
            return Err(MagError::Config(format!("need at least 2 thickness nodes, got {n_nodes}")));
        }
        let (nodes, weights) = gauss_legendre(n_nodes);
        let mut m = Vec::with_capacity(mesh.num_vertices() * n_nodes);
        for fr in &mesh.frames {
            for &t in &nodes {
                m.push(f(fr, t));
            }
        }
        let field = ShellField { nodes, weights, m };
        field.check(mesh)?;
        Ok(field)
    }

    /// `m(xi, t) = m0(xi)`.
    pub fn t_independent(mesh: &SurfaceMesh, m0: &[Vec3], n_nodes: usize) -> Result<Self> {
        if m0.len() != mesh.num_vertices() {
            return Err(MagError::Invalid(format!("{} vertex values for {} vertices", m0.len(), mesh.num_vertices())));
        }
        let mut v = 0;
        let mut count = 0;
        Self::from_fn(mesh, n_nodes, |_, _| {
            let out = m0[v];
            count += 1;
            if count == n_nodes {
                count = 0;
                v += 1;
            }
            out
        })
    }

    fn check(&self, mesh: &SurfaceMesh) -> Result<()> {
        if self.nodes.len() < 2 {
            return Err(MagError::Config("need at least 2 thickness nodes".into()));
        }
        if self.m.len() != mesh.num_vertices() * self.nodes.len() {
            return Err(MagError::Invalid("shell field does not match the mesh".into()));
        }
        check_unit(&self.m)
    }

    fn at(&self, v: usize, k: usize) -> Vec3 {
        self.m[v * self.nodes.len() + k]
    }
}

fn check_unit(m: &[Vec3]) -> Result<()> {
    match m.iter().enumerate().map(|(i, &v)| (i, (norm(v) - 1.0).abs())).find(|&(_, d)| !(d <= 1e-12)) {
        Some((i, deviation)) => Err(MagError::Invalid(format!("sample {i} is not a unit vector (deviation {deviation:.3e})"))),
        None => Ok(()),
    }
}

/// `1/2 int_M sum_i |h_i d_{tau_i} m|^2 sqrt_g + 1/(2 eps^2) int_M |d_t m|^2 sqrt_g`
/// with `M = S x (-1, 1)`: P1 tangential derivatives with the metric taken
/// at triangle centroids, and polynomial differentiation across the nodes.
pub fn shell_dirichlet_energy(m: &ShellField, mesh: &SurfaceMesh, eps: f64) -> Result<f64> {
    m.check(mesh)?;
    let nt = m.nodes.len();
    let mut tangential = 0.0;
    for i in 0..mesh.num_triangles() {
        let el = mesh.element(i);
        for k in 0..nt {
            let mf = metric_factors(&el.frame, m.nodes[k], eps)?;
            let g = el.gradient(|v| m.at(v, k));
            let mut s = 0.0;
            for j in 0..2 {
                let tau = el.frame.tau[j];
                let d: f64 = (0..3).map(|c| dot(g[c], tau).powi(2)).sum();
                s += mf.h[j] * mf.h[j] * d;
            }
            tangential += el.area * m.weights[k] * mf.sqrt_g * s;
        }
    }
    let dm = differentiation_matrix(&m.nodes);
    let mut normal = 0.0;
    for (v, fr) in mesh.frames.iter().enumerate() {
        for k in 0..nt {
            // rows of the matrix sum to zero: difference form keeps constants exact
            let mk = m.at(v, k);
            let mut d = [0.0; 3];
            for l in 0..nt {
                let ml = m.at(v, l);
                for c in 0..3 {
                    d[c] += dm[k][l] * (ml[c] - mk[c]);
                }
            }
            let sg = metric_factors(fr, m.nodes[k], eps)?.sqrt_g;
            normal += mesh.vertex_area[v] * m.weights[k] * sg * dot(d, d);
        }
    }
    Ok(0.5 * tangential + 0.5 * normal / (eps * eps))
}

/// Limit functional `int_S |grad_S m0|^2 + (m0.n)^2` of a vertex field: P1
/// Dirichlet energy on the flat triangles plus the anisotropy with the
/// exact vertex normals and barycentric vertex areas (so tangential fields
/// give exactly zero).
pub fn limit_energy(m0: &[Vec3], mesh: &SurfaceMesh) -> Result<f64> {
    let (d, a) = limit_energy_parts(m0, mesh)?;
    Ok(d + a)
}

/// `(int |grad_S m0|^2, int (m0.n)^2)`.
pub fn limit_energy_parts(m0: &[Vec3], mesh: &SurfaceMesh) -> Result<(f64, f64)> {
    if m0.len() != mesh.num_vertices() {
        return Err(MagError::Invalid(format!("{} vertex values for {} vertices", m0.len(), mesh.num_vertices())));
    }
    check_unit(m0)?;
    let mut dir = 0.0;
    for i in 0..mesh.num_triangles() {
        let el = mesh.element(i);
        let g = el.gradient(|v| m0[v]);
        dir += el.area * g.iter().map(|r| dot(*r, *r)).sum::<f64>();
    }
    let ani = mesh.frames.iter().zip(&mesh.vertex_area).zip(m0).map(|((fr, a), m)| a * dot(*m, fr.normal).powi(2)).sum();
    Ok((dir, ani))
}

/// Surface magnetizations given in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceField {
    Uniform(Vec3),
    /// `m0 = n` (hedgehog on a sphere).
    Normal,
    /// Unit azimuthal direction around the z axis through the surface
    /// center; tangential on a torus of revolution (undefined on the axis,
    /// where `e_x` is used).
    Azimuthal,
}

impl SurfaceField {
    pub fn validate(&self) -> Result<()> {
        match self {
            SurfaceField::Uniform(v) if (norm(*v) - 1.0).abs() > 1e-12 => {
                Err(MagError::Config(format!("uniform surface field must be a unit vector, got {v:?}")))
            }
            _ => Ok(()),
        }
    }

    pub fn at(&self, p: &SurfacePoint, center: Vec3) -> Vec3 {
        match *self {
            SurfaceField::Uniform(v) => v,
            SurfaceField::Normal => p.normal,
            SurfaceField::Azimuthal => {
                let d = sub(p.position, center);
                let rho = (d[0] * d[0] + d[1] * d[1]).sqrt();
                if rho > 1e-12 {
                    [-d[1] / rho, d[0] / rho, 0.0]
                } else {
                    [1.0, 0.0, 0.0]
                }
            }
        }
    }

    /// Samples at the mesh vertices.
    pub fn on_mesh(&self, mesh: &SurfaceMesh) -> Vec<Vec3> {
        let c = mesh.surface.center();
        mesh.frames.iter().map(|p| self.at(p, c)).collect()
    }
}

/// Thickness profile of the recovery potentials: `t` on the shell, linear
/// decay to zero at `|t| = delta / eps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EtaProfile {
    pub eps: f64,
    pub delta: f64,
}

impl EtaProfile {
    pub fn new(eps: f64, delta: f64) -> Result<Self> {
        if !(eps > 0.0 && delta > eps && delta.is_finite()) {
            return Err(MagError::Config(format!("profile needs 0 < eps < delta, got eps = {eps}, delta = {delta}")));
        }
        Ok(EtaProfile { eps, delta })
    }

    /// Extended half-thickness in shell units, `delta / eps`.
    pub fn reach(&self) -> f64 {
        self.delta / self.eps
    }

    pub fn eval(&self, t: f64) -> f64 {
        let a = t.abs();
        if a < 1.0 {
            t
        } else if a < self.reach() {
            t.signum() * (self.delta - self.eps * a) / (self.delta - self.eps)
        } else {
            0.0
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let a = t.abs();
        if a < 1.0 {
            1.0
        } else if a < self.reach() {
            -self.eps / (self.delta - self.eps)
        } else {
            0.0
        }
    }

    /// `1 + eps / (delta - eps)`: `int (eta')^2 dt` over the extended
    /// interval, relative to its value 2 on `(-1, 1)`.
    pub fn tail_factor(&self) -> f64 {
        1.0 + self.eps / (self.delta - self.eps)
    }
}

/// Scalar `eta_eps(t)` for free-standing use.
pub fn eta_profile(t: f64, eps: f64, delta: f64) -> Result<f64> {
    Ok(EtaProfile::new(eps, delta)?.eval(t))
}

fn check_reach(surface: &Surface, delta: f64) -> Result<()> {
    let r = surface.min_curvature_radius();
    if delta >= r {
        return Err(MagError::TubularCondition { thickness: delta, radius: r });
    }
    Ok(())
}

/// `u_eps(x) = eps eta(d/eps) (m0.n)(pi x)` at cell centers, `d` the signed distance.
pub fn recovery_scalar_potential(m0: &SurfaceField, surface: &Surface, eta: &EtaProfile, grid: &GridSpec) -> Result<ScalarField> {
    check_reach(surface, eta.delta)?;
    let c = surface.center();
    Ok(ScalarField::from_fn(grid, |x| {
        let t = surface.signed_distance(x) / eta.eps;
        let e = eta.eval(t);
        if e == 0.0 {
            return 0.0;
        }
        let p = surface.project(x);
        eta.eps * e * dot(m0.at(&p, c), p.normal)
    }))
}

/// `a*_eps(x) = eps eta(d/eps) (m0 x n)(pi x)` on edges.
pub fn recovery_vector_potential(m0: &SurfaceField, surface: &Surface, eta: &EtaProfile, grid: &GridSpec) -> Result<EdgeField> {
    check_reach(surface, eta.delta)?;
    let c = surface.center();
    Ok(EdgeField::from_fn(grid, |x| {
        let t = surface.signed_distance(x) / eta.eps;
        let e = eta.eval(t);
        if e == 0.0 {
            return [0.0; 3];
        }
        let p = surface.project(x);
        let v = cross(m0.at(&p, c), p.normal);
        [eta.eps * e * v[0], eta.eps * e * v[1], eta.eps * e * v[2]]
    }))
}

/// How the 3D grid spacing follows the shell thickness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridPolicy {
    /// Same spacing for every eps.
    Fixed { h: f64 },
    /// `h = 2 eps / cells`: a fixed number of cells across the thickness.
    CellsAcross { cells: f64 },
}

impl GridPolicy {
    pub fn spacing(&self, eps: f64) -> f64 {
        match *self {
            GridPolicy::Fixed { h } => h,
            GridPolicy::CellsAcross { cells } => 2.0 * eps / cells,
        }
    }
}

/// How the recovery reach `delta` follows eps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaPolicy {
    Fixed { delta: f64 },
    Proportional { factor: f64 },
}

impl DeltaPolicy {
    pub fn delta(&self, eps: f64) -> f64 {
        match *self {
            DeltaPolicy::Fixed { delta } => delta,
            DeltaPolicy::Proportional { factor } => factor * eps,
        }
    }
}

/// Padded grid around the shell of half-thickness `eps`.
pub fn shell_grid(surface: &Surface, eps: f64, h: f64, pad_ratio: f64) -> Result<GridSpec> {
    GridSpec::around(&Geometry::Shell { surface: *surface, half_thickness: eps }, h, pad_ratio)
}

/// Shell mask and the face samples of `m0 o pi` on `|d| < eps`.
pub fn shell_magnetization(m0: &SurfaceField, surface: &Surface, eps: f64, grid: &GridSpec) -> Result<(DomainMask, VectorField)> {
    m0.validate()?;
    let cells = 2.0 * eps / grid.h;
    if cells < MIN_CELLS_ACROSS - 1e-9 {
        return Err(MagError::UnderResolved { cells, required: MIN_CELLS_ACROSS });
    }
    let mask = build_mask(&Geometry::Shell { surface: *surface, half_thickness: eps }, grid)?;
    let c = surface.center();
    let mf = VectorField::from_fn(grid, |x| {
        if surface.signed_distance(x).abs() < eps {
            m0.at(&surface.project(x), c)
        } else {
            [0.0; 3]
        }
    });
    Ok((mask, mf))
}

/// Stray energy of the shell per unit thickness, `E_s / eps`, with `m0`
/// extended constantly along normals.
pub fn shell_stray_energy_scaled(m0: &SurfaceField, surface: &Surface, eps: f64, grid: &GridSpec, cfg: &SolverConfig) -> Result<f64> {
    let (mask, mf) = shell_magnetization(m0, surface, eps, grid)?;
    Ok(solve_scalar_potential(&mf, &mask, cfg)?.energy / eps)
}

/// Scaled stray energy with its recovery-potential bracket
/// `W(m, u_eps)/eps <= E_s/eps <= V(m, a*_eps)/eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StrayBracket {
    pub eps: f64,
    pub delta: f64,
    pub lower: f64,
    pub stray_scaled: f64,
    pub upper: f64,
    pub iterations: usize,
}

pub fn stray_bracket(m0: &SurfaceField, surface: &Surface, eps: f64, delta: f64, grid: &GridSpec, cfg: &SolverConfig) -> Result<StrayBracket> {
    let eta = EtaProfile::new(eps, delta)?;
    let (mask, mf) = shell_magnetization(m0, surface, eps, grid)?;
    let sol = solve_scalar_potential(&mf, &mask, cfg)?;
    let u = recovery_scalar_potential(m0, surface, &eta, grid)?;
    let a = recovery_vector_potential(m0, surface, &eta, grid)?;
    Ok(StrayBracket {
        eps,
        delta,
        lower: functional_w(&mf, &u)? / eps,
        stray_scaled: sol.energy / eps,
        upper: functional_v(&mf, &a)? / eps,
        iterations: sol.iterations,
    })
}

/// Settings of [`convergence_study`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub grid: GridPolicy,
    pub delta: DeltaPolicy,
    /// Refinement level of the surface mesh for the surface terms.
    pub mesh_level: u32,
    /// Thickness quadrature nodes.
    pub t_nodes: usize,
    /// Padding of the 3D grids (the shell's far field is weak, so less
    /// padding than for solid bodies suffices).
    pub pad_ratio: f64,
    /// Rows computed concurrently.
    pub threads: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            grid: GridPolicy::CellsAcross { cells: 4.0 },
            delta: DeltaPolicy::Fixed { delta: 0.75 },
            mesh_level: 4,
            t_nodes: 4,
            pad_ratio: 0.5,
            threads: 1,
        }
    }
}

/// One `eps` of the study. `total = exchange + stray_scaled` approximates
/// the limit `F(m0)`; `gap = |total - limit|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudyRow {
    pub eps: f64,
    pub exchange: f64,
    pub stray_scaled: f64,
    pub total: f64,
    pub limit: f64,
    pub gap: f64,
    pub lower: f64,
    pub upper: f64,
    pub delta: f64,
    pub h: f64,
}

/// Shell energies of the t-independent extension of `m0` along a
/// decreasing list of thicknesses.
pub fn convergence_study(
    surface: &Surface,
    m0: &SurfaceField,
    eps_list: &[f64],
    study: &StudyConfig,
    cfg: &SolverConfig,
) -> Result<Vec<StudyRow>> {
    surface.validate()?;
    m0.validate()?;
    cfg.validate()?;
    if eps_list.windows(2).any(|w| !(w[1] < w[0])) || eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(MagError::Config("eps list must be positive and strictly decreasing".into()));
    }
    if eps_list.is_empty() {
        return Ok(Vec::new());
    }
    let mesh = SurfaceMesh::new(*surface, study.mesh_level)?;
    let m_vertices = m0.on_mesh(&mesh);
    let limit = limit_energy(&m_vertices, &mesh)?;
    let shell_m = ShellField::t_independent(&mesh, &m_vertices, study.t_nodes)?;

    let row = |eps: f64| -> Result<StudyRow> {
        let exchange = shell_dirichlet_energy(&shell_m, &mesh, eps)?;
        let h = study.grid.spacing(eps);
        let grid = shell_grid(surface, eps, h, study.pad_ratio)?;
        let b = stray_bracket(m0, surface, eps, study.delta.delta(eps), &grid, cfg)?;
        let total = exchange + b.stray_scaled;
        Ok(StudyRow {
            eps,
            exchange,
            stray_scaled: b.stray_scaled,
            total,
            limit,
            gap: (total - limit).abs(),
            lower: b.lower,
            upper: b.upper,
            delta: b.delta,
            h,
        })
    };

    let threads = study.threads.max(1).min(eps_list.len());
    if threads == 1 {
        return eps_list.iter().map(|&e| row(e)).collect();
    }
    let mut out: Vec<Option<Result<StudyRow>>> = vec![None; eps_list.len()];
    let next = std::sync::atomic::AtomicUsize::new(0);
    let slots = std::sync::Mutex::new(&mut out);
    std::thread::scope(|s| {
        for _ in 0..threads {
            s.spawn(|| loop {
                let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                if i >= eps_list.len() {
                    break;
                }
                let r = row(eps_list[i]);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    out.into_iter().map(|r| r.expect("every row computed")).collect()
}

#[cfg(test)]
mod tests;
