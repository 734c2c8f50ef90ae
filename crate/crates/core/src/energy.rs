//! Dimensionless micromagnetic energy
//!
//! `E(m) = 1/2 int |grad m|^2 + Q/2 int (1 - (m.e)^2) - int h_a.m + E_s(m)`
//!
//! for a cell-centered unit magnetization `m` on a domain mask. Lengths are
//! in exchange lengths and energies in units of `2 A l_ex`; with `mu0`, `A`,
//! `K`, `Ms` in SI units, `l_ex = sqrt(2A / (mu0 Ms^2))`, `Q = 2K / (mu0 Ms^2)`
//! and an SI field `H_a` enters as `h_a = H_a / Ms`.
//!
//! The stray term averages `m` onto faces (`A m`) and solves the scalar
//! potential problem; its value is reported as `W(A m, u)`, which agrees
//! with `1/2 |grad u|^2` at the exact potential and is insensitive (to
//! second order) to the solver residual.

use crate::error::{MagError, Result};
use crate::grid::{cells_from_faces, faces_from_cells, CellVectorField, DomainMask, Loc, ScalarField};
use crate::magnetostatics::{functional_w, solve_scalar_potential_from, SolverConfig};
use crate::vec3::{dot, norm, Vec3};

/// Which terms enter the energy and the effective field.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnergyTerms {
    pub exchange: bool,
    pub anisotropy: bool,
    pub zeeman: bool,
    pub stray: bool,
}

impl Default for EnergyTerms {
    fn default() -> Self {
        EnergyTerms { exchange: true, anisotropy: true, zeeman: true, stray: true }
    }
}

impl EnergyTerms {
    pub fn only_exchange() -> Self {
        EnergyTerms { exchange: true, anisotropy: false, zeeman: false, stray: false }
    }
    pub fn only_anisotropy() -> Self {
        EnergyTerms { exchange: false, anisotropy: true, zeeman: false, stray: false }
    }
    pub fn only_zeeman() -> Self {
        EnergyTerms { exchange: false, anisotropy: false, zeeman: true, stray: false }
    }
    pub fn only_stray() -> Self {
        EnergyTerms { exchange: false, anisotropy: false, zeeman: false, stray: true }
    }
}

/// Applied field, uniform or given per cell.
#[derive(Debug, Clone, PartialEq)]
pub enum AppliedField {
    Uniform(Vec3),
    PerCell(CellVectorField),
}

impl AppliedField {
    #[inline]
    fn at(&self, flat: usize) -> Vec3 {
        match self {
            AppliedField::Uniform(h) => *h,
            AppliedField::PerCell(f) => f.at_flat(flat),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterialParams {
    /// Quality factor `Q = 2K / (mu0 Ms^2)`.
    pub q: f64,
    pub easy_axis: Vec3,
    pub h_applied: AppliedField,
    pub terms: EnergyTerms,
}

impl Default for MaterialParams {
    fn default() -> Self {
        MaterialParams {
            q: 0.0,
            easy_axis: [0.0, 0.0, 1.0],
            h_applied: AppliedField::Uniform([0.0; 3]),
            terms: EnergyTerms::default(),
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.q >= 0.0 && self.q.is_finite()) {
            return Err(MagError::Config(format!("Q must be finite and nonnegative, got {}", self.q)));
        }
        if (norm(self.easy_axis) - 1.0).abs() > 1e-12 {
            return Err(MagError::Config(format!("easy axis must be a unit vector, got {:?}", self.easy_axis)));
        }
        match &self.h_applied {
            AppliedField::Uniform(h) if h.iter().all(|v| v.is_finite()) => Ok(()),
            AppliedField::PerCell(f) if f.is_finite() => Ok(()),
            _ => Err(MagError::Config("applied field must be finite".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EnergyBreakdown {
    pub exchange: f64,
    pub anisotropy: f64,
    pub zeeman: f64,
    pub stray: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    fn summed(mut self) -> Self {
        self.total = self.exchange + self.anisotropy + self.zeeman + self.stray;
        self
    }
}

/// Tolerance on `| |m| - 1 |` for mask cells.
pub const UNIT_NORM_TOL: f64 = 1e-12;

/// `|m| = 1` on the mask and `m = 0` elsewhere; reports the worst cell.
pub fn check_unit_norm(m: &CellVectorField, mask: &DomainMask) -> Result<()> {
    if m.grid() != mask.grid() {
        return Err(MagError::GridMismatch);
    }
    let lay = m.layout(0);
    let mut worst = (0.0f64, 0usize);
    for flat in 0..lay.len() {
        let v = m.at_flat(flat);
        let dev = if mask.contains_flat(flat) {
            (norm(v) - 1.0).abs()
        } else if v != [0.0; 3] {
            return Err(MagError::SupportViolation(format!("m nonzero outside the mask at cell {:?}", lay.unindex(flat))));
        } else {
            0.0
        };
        if !(dev <= worst.0) {
            worst = (dev, flat);
        }
    }
    if !(worst.0 <= UNIT_NORM_TOL) {
        return Err(MagError::NotUnitNorm { cell: lay.unindex(worst.1), deviation: worst.0 });
    }
    Ok(())
}

/// Sum over mask cells of `f(flat, m)`, in index order.
fn sum_mask(m: &CellVectorField, mask: &DomainMask, mut f: impl FnMut(usize, Vec3) -> f64) -> f64 {
    mask.cells().iter().enumerate().filter(|(_, &c)| c).map(|(flat, _)| f(flat, m.at_flat(flat))).sum()
}

/// `1/2 sum |m_i - m_j|^2 h` over face-adjacent pairs of mask cells.
fn exchange_raw(m: &CellVectorField, mask: &DomainMask) -> f64 {
    let st = m.layout(0).strides();
    let s = sum_mask(m, mask, |flat, mi| {
        let mut acc = 0.0;
        for &sd in &st {
            let nb = flat + sd;
            if mask.contains_flat(nb) {
                let mj = m.at_flat(nb);
                acc += (0..3).map(|c| (mi[c] - mj[c]).powi(2)).sum::<f64>();
            }
        }
        acc
    });
    0.5 * s * m.grid().h
}

fn anisotropy_raw(m: &CellVectorField, p: &MaterialParams, mask: &DomainMask) -> f64 {
    0.5 * p.q * sum_mask(m, mask, |_, v| 1.0 - dot(v, p.easy_axis).powi(2)) * m.grid().cell_volume()
}

fn zeeman_raw(m: &CellVectorField, p: &MaterialParams, mask: &DomainMask) -> f64 {
    -sum_mask(m, mask, |flat, v| dot(p.h_applied.at(flat), v)) * m.grid().cell_volume()
}

/// Exchange energy; differences across the mask boundary are not counted.
pub fn exchange_energy(m: &CellVectorField, mask: &DomainMask) -> Result<f64> {
    check_unit_norm(m, mask)?;
    Ok(exchange_raw(m, mask))
}

/// Uniaxial anisotropy `Q/2 sum (1 - (m.e)^2) h^3`.
pub fn anisotropy_energy(m: &CellVectorField, params: &MaterialParams, mask: &DomainMask) -> Result<f64> {
    params.validate()?;
    check_unit_norm(m, mask)?;
    Ok(anisotropy_raw(m, params, mask))
}

/// Zeeman energy `-sum h_a.m h^3`.
pub fn zeeman_energy(m: &CellVectorField, params: &MaterialParams, mask: &DomainMask) -> Result<f64> {
    params.validate()?;
    check_unit_norm(m, mask)?;
    Ok(zeeman_raw(m, params, mask))
}

/// Energy and (optionally) effective field, with the stray potential
/// returned for warm starts.
#[derive(Debug, Clone)]
pub(crate) struct Evaluation {
    pub breakdown: EnergyBreakdown,
    pub field: Option<CellVectorField>,
    pub potential: Option<ScalarField>,
}

/// Evaluation without the unit-norm check (the minimizers renormalize themselves).
pub(crate) fn evaluate(
    m: &CellVectorField,
    p: &MaterialParams,
    mask: &DomainMask,
    cfg: &SolverConfig,
    warm: Option<&ScalarField>,
    want_field: bool,
) -> Result<Evaluation> {
    let t = p.terms;
    let mut e = EnergyBreakdown::default();
    if t.exchange {
        e.exchange = exchange_raw(m, mask);
    }
    if t.anisotropy {
        e.anisotropy = anisotropy_raw(m, p, mask);
    }
    if t.zeeman {
        e.zeeman = zeeman_raw(m, p, mask);
    }
    let mut potential = None;
    let mut stray_field = None;
    if t.stray && !mask.is_empty() {
        let mf = faces_from_cells(m);
        let sol = solve_scalar_potential_from(&mf, mask, warm, cfg)?;
        e.stray = functional_w(&mf, &sol.u)?;
        if want_field {
            stray_field = Some(cells_from_faces(&sol.h));
        }
        potential = Some(sol.u);
    }
    let field = want_field.then(|| local_field(m, p, mask, stray_field.as_ref()));
    Ok(Evaluation { breakdown: e.summed(), field, potential })
}

/// `-dE/dm / h^3` for the local terms plus an optional precomputed stray part.
pub(crate) fn local_field(
    m: &CellVectorField,
    p: &MaterialParams,
    mask: &DomainMask,
    stray: Option<&CellVectorField>,
) -> CellVectorField {
    let t = p.terms;
    let g = *m.grid();
    let st = m.layout(0).strides();
    let inv_h2 = 1.0 / (g.h * g.h);
    let e = p.easy_axis;
    let mut out = CellVectorField::zeros(&g);
    for (flat, _) in mask.cells().iter().enumerate().filter(|(_, &c)| c) {
        let mi = m.at_flat(flat);
        let mut f = [0.0; 3];
        if t.exchange {
            for &sd in &st {
                for nb in [flat + sd, flat - sd] {
                    if mask.contains_flat(nb) {
                        let mj = m.at_flat(nb);
                        for c in 0..3 {
                            f[c] += (mj[c] - mi[c]) * inv_h2;
                        }
                    }
                }
            }
        }
        if t.anisotropy {
            let me = p.q * dot(mi, e);
            for c in 0..3 {
                f[c] += me * e[c];
            }
        }
        if t.zeeman {
            let ha = p.h_applied.at(flat);
            for c in 0..3 {
                f[c] += ha[c];
            }
        }
        if let Some(s) = stray {
            let hs = s.at_flat(flat);
            for c in 0..3 {
                f[c] += hs[c];
            }
        }
        out.set_flat(flat, f);
    }
    out
}

/// Stray-field energy of a cell magnetization.
pub fn stray_energy(m: &CellVectorField, mask: &DomainMask, cfg: &SolverConfig) -> Result<f64> {
    check_unit_norm(m, mask)?;
    let p = MaterialParams { terms: EnergyTerms::only_stray(), ..MaterialParams::default() };
    Ok(evaluate(m, &p, mask, cfg, None, false)?.breakdown.stray)
}

/// All enabled energy terms.
pub fn total_energy(m: &CellVectorField, params: &MaterialParams, mask: &DomainMask, cfg: &SolverConfig) -> Result<EnergyBreakdown> {
    params.validate()?;
    check_unit_norm(m, mask)?;
    Ok(evaluate(m, params, mask, cfg, None, false)?.breakdown)
}

/// Effective field `-dE/dm` per unit cell volume (zero outside the mask).
pub fn effective_field(m: &CellVectorField, params: &MaterialParams, mask: &DomainMask, cfg: &SolverConfig) -> Result<CellVectorField> {
    params.validate()?;
    check_unit_norm(m, mask)?;
    Ok(evaluate(m, params, mask, cfg, None, true)?.field.expect("field requested"))
}

/// Uniform magnetization `dir` on the mask.
pub fn uniform_on_mask(mask: &DomainMask, dir: Vec3) -> CellVectorField {
    let mut m = CellVectorField::zeros(mask.grid());
    for flat in mask.flat_indices() {
        m.set_flat(flat, dir);
    }
    m
}

/// Number of mask cells with all six face neighbours in the mask.
pub fn interior_cell_count(mask: &DomainMask) -> usize {
    let st = mask.grid().layout(Loc::Cell).strides();
    mask.flat_indices()
        .into_iter()
        .filter(|&f| st.iter().all(|&s| mask.contains_flat(f + s) && mask.contains_flat(f - s)))
        .count()
}
