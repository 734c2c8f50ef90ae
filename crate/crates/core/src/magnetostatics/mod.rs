//! Stray-field energy of a magnetization through three variational
//! principles on the staggered grid:
//!
//! * maximize `W(m, u) = <grad u, m> - 1/2 |grad u|^2` over cell potentials,
//! * minimize `V_curl(m, a) = 1/2 |curl a - m|^2` over divergence-free edge potentials,
//! * minimize `V(m, a) = 1/2 |D a|^2 + 1/2 |m|^2 - <m, curl a>` over all edge potentials.
//!
//! Because the discrete complex is exact on the padded box, all three optima
//! coincide up to solver tolerance, and the Helmholtz split
//! `m = curl a + grad u` is orthogonal.

mod dense;

use serde::{Deserialize, Serialize};

use crate::cg::conjugate_gradient;
use crate::error::{MagError, Result};
use crate::geometry::Geometry;
use crate::grid::{
    apply_cell_laplacian, apply_edge_laplacian, apply_node_laplacian, build_mask, curl, curl_faces,
    curl_faces_k, curl_k, div, div_edges, div_edges_flat, dot_slices, full_gradient_norm_sq_edges,
    grad, sub_grad_nodes_flat, DomainMask, EdgeField, GridSpec, Loc, ScalarField, VectorField,
};
use dense::BandCholesky;

/// Largest system the dense oracle will factor.
pub const DENSE_UNKNOWN_CAP: usize = 32768;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Iterative,
    /// Banded Cholesky on the assembled Poisson matrix. Only the scalar
    /// potential has a dense path; vector potentials always iterate.
    DenseOracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative residual tolerance.
    pub tol: f64,
    pub max_iter: usize,
    /// Distance from the body's bounding box to the Dirichlet layer, in body diameters.
    pub pad_ratio: f64,
    pub backend: Backend,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: 1e-8, max_iter: 20_000, pad_ratio: 1.0, backend: Backend::Iterative }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol <= 1e-2) {
            return Err(MagError::Config(format!("tol must lie in (0, 1e-2], got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(MagError::Config("max_iter must be at least 1".into()));
        }
        if !(self.pad_ratio >= 0.0 && self.pad_ratio.is_finite()) {
            return Err(MagError::Config(format!("pad_ratio must be finite and >= 0, got {}", self.pad_ratio)));
        }
        Ok(())
    }

    /// What "equal within solver tolerance" means for derived quantities.
    pub fn agreement_tol(&self) -> f64 {
        (10.0 * self.tol).max(1e-10)
    }
}

/// Result of the scalar-potential solve.
#[derive(Debug, Clone)]
pub struct StrayFieldSolution {
    pub u: ScalarField,
    /// `h = -grad u`.
    pub h: VectorField,
    /// `b = h + m`.
    pub b: VectorField,
    /// `1/2 |h|^2`.
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Result of either vector-potential solve.
#[derive(Debug, Clone)]
pub struct VectorPotentialSolution {
    pub a: EdgeField,
    pub curl_a: VectorField,
    /// `|div a|` (node divergence).
    pub div_norm: f64,
    /// Value of `V` or `V_curl` at the returned potential.
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Magnetization must be finite and vanish on faces that touch only padding cells.
fn check_support(m: &VectorField, mask: &DomainMask) -> Result<()> {
    let g = *m.grid();
    if g != *mask.grid() {
        return Err(MagError::GridMismatch);
    }
    if !m.is_finite() {
        return Err(MagError::Invalid("magnetization has non-finite entries".into()));
    }
    for d in 0..3 {
        let lay = g.layout(Loc::Face(d));
        let vals = m.comp(d);
        let mut bad = None;
        lay.for_each_active(|idx, flat| {
            if bad.is_none() && vals[flat] != 0.0 {
                let mut lo = idx;
                lo[d] -= 1;
                if !g.in_domain(idx) && !g.in_domain(lo) {
                    bad = Some(idx);
                }
            }
        });
        if let Some(idx) = bad {
            return Err(MagError::SupportViolation(format!("component {d} nonzero at padding face {idx:?}")));
        }
    }
    Ok(())
}

/// Solves the weak Poisson problem `<grad u, grad phi> = <m, grad phi>`.
pub fn solve_scalar_potential(m: &VectorField, mask: &DomainMask, cfg: &SolverConfig) -> Result<StrayFieldSolution> {
    solve_scalar_potential_from(m, mask, None, cfg)
}

/// [`solve_scalar_potential`] with an optional initial guess for the
/// iterative backend.
pub fn solve_scalar_potential_from(
    m: &VectorField,
    mask: &DomainMask,
    u0: Option<&ScalarField>,
    cfg: &SolverConfig,
) -> Result<StrayFieldSolution> {
    cfg.validate()?;
    check_support(m, mask)?;
    let g = *m.grid();
    let mut rhs = div(m);
    rhs.scale(-1.0);
    let (u, residual, iterations) = match cfg.backend {
        Backend::Iterative => {
            let mut x = match u0 {
                Some(u0) if u0.grid() == &g => u0.data().to_vec(),
                Some(_) => return Err(MagError::GridMismatch),
                None => vec![0.0; rhs.data().len()],
            };
            let out = conjugate_gradient(
                |p, q| apply_cell_laplacian(&g, p, q),
                rhs.data(),
                &mut x,
                cfg.tol,
                cfg.max_iter,
                None,
            )?;
            (ScalarField::from_raw(&g, x), out.residual, out.iterations)
        }
        Backend::DenseOracle => {
            let (u, res) = dense_cell_solve(&g, &rhs)?;
            (u, res, 1)
        }
    };
    let mut h = grad(&u);
    h.scale(-1.0);
    let mut b = h.clone();
    b.axpy(1.0, m)?;
    let energy = 0.5 * h.norm_sq();
    Ok(StrayFieldSolution { u, h, b, energy, residual, iterations })
}

/// Assembles `-div grad` on the active cells and solves it directly.
fn dense_cell_solve(g: &GridSpec, rhs: &ScalarField) -> Result<(ScalarField, f64)> {
    let lay = g.layout(Loc::Cell);
    let unknowns = lay.active_count();
    if unknowns > DENSE_UNKNOWN_CAP {
        return Err(MagError::DenseTooLarge { unknowns, cap: DENSE_UNKNOWN_CAP });
    }
    let m2 = lay.hi[2] - lay.lo[2] + 1;
    let m1 = lay.hi[1] - lay.lo[1] + 1;
    let plane = m1 * m2;
    let inv_h2 = 1.0 / (g.h * g.h);
    let entry = |i: usize, j: usize| {
        let d = i - j;
        if d == 0 {
            6.0 * inv_h2
        } else if (d == 1 && i % m2 != 0) || (d == m2 && (i / m2) % m1 != 0) || d == plane {
            -inv_h2
        } else {
            0.0
        }
    };
    let chol = BandCholesky::factor(unknowns, plane, entry)?;
    let mut x = Vec::with_capacity(unknowns);
    lay.for_each_active(|_, flat| x.push(rhs.data()[flat]));
    chol.solve(&mut x);
    let mut u = ScalarField::zeros(g);
    let mut it = x.iter();
    lay.for_each_active(|_, flat| u.data_mut()[flat] = *it.next().unwrap());

    let mut q = vec![0.0; u.data().len()];
    apply_cell_laplacian(g, u.data(), &mut q);
    let r: Vec<f64> = q.iter().zip(rhs.data()).map(|(a, b)| a - b).collect();
    let bn = rhs.norm();
    let residual = if bn > 0.0 { (dot_slices(&r, &r) * g.cell_volume()).sqrt() / bn } else { 0.0 };
    Ok((u, residual))
}

/// `W(m, u) = <grad u, m> - 1/2 |grad u|^2`.
pub fn functional_w(m: &VectorField, u: &ScalarField) -> Result<f64> {
    let gu = grad(u);
    Ok(gu.inner(m)? - 0.5 * gu.norm_sq())
}

/// `V(m, a) = 1/2 |D a|^2 + 1/2 |m|^2 - <m, curl a>`.
pub fn functional_v(m: &VectorField, a: &EdgeField) -> Result<f64> {
    let ca = curl(a);
    Ok(0.5 * full_gradient_norm_sq_edges(a) + 0.5 * m.norm_sq() - m.inner(&ca)?)
}

/// `V_curl(m, a) = 1/2 |curl a - m|^2`.
pub fn functional_v_curl(m: &VectorField, a: &EdgeField) -> Result<f64> {
    let mut ca = curl(a);
    ca.axpy(-1.0, m)?;
    Ok(0.5 * ca.norm_sq())
}

fn vector_solution(a: EdgeField, energy: f64, residual: f64, iterations: usize) -> VectorPotentialSolution {
    let curl_a = curl(&a);
    let div_norm = div_edges(&a).norm();
    VectorPotentialSolution { a, curl_a, div_norm, energy, residual, iterations }
}

/// Minimizes `V` over all edge potentials: `D^T D a = curl^T m`.
pub fn solve_vector_potential_unconstrained(
    m: &VectorField,
    mask: &DomainMask,
    cfg: &SolverConfig,
) -> Result<VectorPotentialSolution> {
    solve_vector_potential_unconstrained_from(m, mask, None, cfg)
}

/// [`solve_vector_potential_unconstrained`] with an optional initial guess.
pub fn solve_vector_potential_unconstrained_from(
    m: &VectorField,
    mask: &DomainMask,
    a0: Option<&EdgeField>,
    cfg: &SolverConfig,
) -> Result<VectorPotentialSolution> {
    cfg.validate()?;
    check_support(m, mask)?;
    let g = *m.grid();
    let rhs = curl_faces(m).to_flat();
    let mut x = match a0 {
        Some(a0) if a0.grid() == &g => a0.to_flat(),
        Some(_) => return Err(MagError::GridMismatch),
        None => vec![0.0; rhs.len()],
    };
    let out = conjugate_gradient(|p, q| apply_edge_laplacian(&g, p, q), &rhs, &mut x, cfg.tol, cfg.max_iter, None)?;
    let a = EdgeField::from_flat(&g, &x);
    let energy = functional_v(m, &a)?;
    Ok(vector_solution(a, energy, out.residual, out.iterations))
}

/// Minimizes `V_curl` over divergence-free edge potentials, starting from zero.
pub fn solve_vector_potential_gauged(m: &VectorField, mask: &DomainMask, cfg: &SolverConfig) -> Result<VectorPotentialSolution> {
    solve_vector_potential_gauged_from(m, mask, &EdgeField::zeros(m.grid()), cfg)
}

/// Projected CG for `curl^T curl a = curl^T m` on `{div a = 0}`. The start
/// `a0` is projected first; every residual is projected again, which keeps
/// the iterates in the gauge subspace.
pub fn solve_vector_potential_gauged_from(
    m: &VectorField,
    mask: &DomainMask,
    a0: &EdgeField,
    cfg: &SolverConfig,
) -> Result<VectorPotentialSolution> {
    cfg.validate()?;
    check_support(m, mask)?;
    if a0.grid() != m.grid() {
        return Err(MagError::GridMismatch);
    }
    let g = *m.grid();
    let rhs = curl_faces(m).to_flat();
    let mut x = a0.to_flat();

    let mut faces = vec![0.0; VectorField::flat_len(&g)];
    let apply = |p: &[f64], q: &mut [f64]| {
        curl_k(&g, p, &mut faces);
        curl_faces_k(&g, &faces, q);
    };
    // residual divergence far below the solve tolerance needs no correction
    let floor = 1e-3 * cfg.tol * dot_slices(&rhs, &rhs).sqrt();
    let mut projector = GaugeProjector::new(&g, cfg.max_iter, floor);
    let mut project = |v: &mut [f64]| projector.apply(v);
    let out = conjugate_gradient(apply, &rhs, &mut x, cfg.tol, cfg.max_iter, Some(&mut project))?;
    projector.apply(&mut x);
    if let Some(e) = projector.failure.take() {
        return Err(e);
    }
    let a = EdgeField::from_flat(&g, &x);
    let energy = functional_v_curl(m, &a)?;
    Ok(vector_solution(a, energy, out.residual, out.iterations))
}

/// Orthogonal projection onto discretely divergence-free edge fields,
/// `P v = v - G (G^T G)^+ G^T v` with `G` the node gradient.
struct GaugeProjector {
    grid: GridSpec,
    div: Vec<f64>,
    phi: Vec<f64>,
    active: Vec<usize>,
    max_iter: usize,
    /// Absolute size of `h G^T v` that is negligible for the current solve.
    floor: f64,
    failure: Option<MagError>,
}

impl GaugeProjector {
    /// Relative size of `h G^T v` below which `v` counts as divergence-free.
    const SKIP: f64 = 1e-13;
    const INNER_TOL: f64 = 1e-12;

    fn new(g: &GridSpec, max_iter: usize, floor: f64) -> Self {
        let lay = g.layout(Loc::Node);
        let mut active = Vec::with_capacity(lay.active_count());
        lay.for_each_active(|_, flat| active.push(flat));
        GaugeProjector {
            grid: *g,
            div: vec![0.0; lay.len()],
            phi: vec![0.0; lay.len()],
            active,
            max_iter,
            floor,
            failure: None,
        }
    }

    fn apply(&mut self, v: &mut [f64]) {
        let g = self.grid;
        div_edges_flat(&g, v, &mut self.div);
        // G^T v = -div v
        self.div.iter_mut().for_each(|x| *x = -*x);
        let dn = dot_slices(&self.div, &self.div).sqrt();
        let vn = dot_slices(v, v).sqrt();
        if dn * g.h <= (Self::SKIP * vn).max(self.floor) {
            return;
        }
        self.phi.iter_mut().for_each(|x| *x = 0.0);
        let active = &self.active;
        let mut demean = |w: &mut [f64]| {
            let mean = active.iter().map(|&i| w[i]).sum::<f64>() / active.len() as f64;
            active.iter().for_each(|&i| w[i] -= mean);
        };
        let res = conjugate_gradient(
            |p, q| apply_node_laplacian(&g, p, q),
            &self.div,
            &mut self.phi,
            Self::INNER_TOL,
            self.max_iter,
            Some(&mut demean),
        );
        if let Err(e) = res {
            self.failure.get_or_insert(e);
        }
        sub_grad_nodes_flat(&g, &self.phi, v);
    }
}

/// The stray-field operator `H: m -> h_m`.
pub fn stray_field(m: &VectorField, mask: &DomainMask, cfg: &SolverConfig) -> Result<VectorField> {
    Ok(solve_scalar_potential(m, mask, cfg)?.h)
}

/// Reciprocity diagnostics for a pair of magnetizations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReciprocityCheck {
    /// `|<H m, m'> - <m, H m'>| / (|m| |m'|)`.
    pub gap: f64,
    /// `<h_m, h_m'>`.
    pub h_h: f64,
    /// `-<m, h_m'>`.
    pub m_h: f64,
    /// `-<h_m, m'>`.
    pub h_m: f64,
}

pub fn reciprocity_check(m: &VectorField, m2: &VectorField, mask: &DomainMask, cfg: &SolverConfig) -> Result<ReciprocityCheck> {
    let h1 = stray_field(m, mask, cfg)?;
    let h2 = stray_field(m2, mask, cfg)?;
    let a = h1.inner(m2)?;
    let b = m.inner(&h2)?;
    let scale = m.norm() * m2.norm();
    let gap = if scale > 0.0 { (a - b).abs() / scale } else { 0.0 };
    Ok(ReciprocityCheck { gap, h_h: h1.inner(&h2)?, m_h: -b, h_m: -a })
}

pub fn reciprocity_gap(m: &VectorField, m2: &VectorField, mask: &DomainMask, cfg: &SolverConfig) -> Result<f64> {
    Ok(reciprocity_check(m, m2, mask, cfg)?.gap)
}

/// `2 E_s(m) / |m|^2`, which lies in `[0, 1]`.
pub fn rayleigh_quotient(m: &VectorField, mask: &DomainMask, cfg: &SolverConfig) -> Result<f64> {
    let n2 = m.norm_sq();
    if n2 == 0.0 {
        return Err(MagError::ZeroInput);
    }
    Ok(2.0 * solve_scalar_potential(m, mask, cfg)?.energy / n2)
}

/// Helmholtz split diagnostics of `m = curl a + grad u`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HelmholtzCheck {
    /// `|m - curl a - grad u| / |m|`.
    pub residual: f64,
    /// `|1/2 |m|^2 - E_s - 1/2 |curl a|^2| / |m|^2`.
    pub orthogonality_defect: f64,
}

pub fn helmholtz_residual(m: &VectorField, su: &StrayFieldSolution, sa: &VectorPotentialSolution) -> Result<HelmholtzCheck> {
    if su.h.grid() != m.grid() || sa.curl_a.grid() != m.grid() {
        return Err(MagError::GridMismatch);
    }
    let m2 = m.norm_sq();
    if m2 == 0.0 {
        return Ok(HelmholtzCheck { residual: 0.0, orthogonality_defect: 0.0 });
    }
    // grad u = -h
    let mut r = m.clone();
    r.axpy(-1.0, &sa.curl_a)?;
    r.axpy(1.0, &su.h)?;
    let defect = (0.5 * m2 - su.energy - 0.5 * sa.curl_a.norm_sq()).abs() / m2;
    Ok(HelmholtzCheck { residual: r.norm() / m2.sqrt(), orthogonality_defect: defect })
}

/// Demagnetizing tensor of a body: column `j` is the average over the body
/// of `-H(e_j chi)`. The indicator is sampled at face centers so that every
/// face inside the body carries the full unit flux.
pub fn demag_tensor(geom: &Geometry, grid: &GridSpec, cfg: &SolverConfig) -> Result<[[f64; 3]; 3]> {
    let mask = build_mask(geom, grid)?;
    let inside: [Vec<usize>; 3] = [0, 1, 2].map(|d| {
        let lay = grid.layout(Loc::Face(d));
        let mut v = Vec::new();
        lay.for_each_active(|idx, flat| {
            if geom.contains(grid.position(Loc::Face(d), idx)) {
                v.push(flat);
            }
        });
        v
    });
    if inside.iter().any(|v| v.is_empty()) {
        return Err(MagError::Invalid("body is not resolved by the grid".into()));
    }
    let mut n = [[0.0; 3]; 3];
    for j in 0..3 {
        let mut m = VectorField::zeros(grid);
        for &f in &inside[j] {
            m.comp_mut(j)[f] = 1.0;
        }
        let h = stray_field(&m, &mask, cfg)?;
        for i in 0..3 {
            let s: f64 = inside[i].iter().map(|&f| h.comp(i)[f]).sum();
            n[i][j] = -s / inside[i].len() as f64;
        }
    }
    Ok(n)
}

/// Stray-field energy from the dense direct solver.
pub fn dense_oracle_energy(m: &VectorField, mask: &DomainMask) -> Result<f64> {
    let cfg = SolverConfig { backend: Backend::DenseOracle, ..SolverConfig::default() };
    Ok(solve_scalar_potential(m, mask, &cfg)?.energy)
}
