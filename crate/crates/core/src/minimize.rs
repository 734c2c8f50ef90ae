//! Energy minimization over unit cell magnetizations.
//!
//! Both drivers take projected gradient steps `m <- normalize(m + tau t)`
//! where `t = (I - m m^T) h_eff` is the tangential effective field. The
//! trial step is a Barzilai-Borwein estimate, cut back by Armijo
//! backtracking so that every accepted step lowers the energy.

use crate::energy::{check_unit_norm, evaluate, local_field, EnergyTerms, MaterialParams};
use crate::error::{MagError, Result};
use crate::grid::{cells_from_faces, faces_from_cells, full_gradient_norm_sq_edges, CellVectorField, DomainMask, EdgeField, ScalarField, VectorField};
use crate::kernel_fields::random_masked_cells;
use crate::magnetostatics::{solve_vector_potential_unconstrained_from, SolverConfig};
use crate::vec3::{dot, normalize};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Reduced energy: the stray field is recomputed from `m` at every trial.
    ProjectedGradient,
    /// Alternating exact vector-potential solves and `m`-steps at fixed `a`.
    JointAlternating,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinimizeConfig {
    pub method: Method,
    /// First trial step.
    pub step: f64,
    /// Backtracking factor in (0, 1).
    pub backtrack: f64,
    /// Stop once `|(I - m m^T) h_eff|` (L2, cell-volume weighted) falls below this.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub max_backtracks: usize,
    /// Seed for [`random_initial`].
    pub seed: u64,
}

impl Default for MinimizeConfig {
    fn default() -> Self {
        MinimizeConfig {
            method: Method::ProjectedGradient,
            step: 1e-2,
            backtrack: 0.5,
            grad_tol: 1e-6,
            max_iter: 5000,
            max_backtracks: 40,
            seed: 0,
        }
    }
}

impl MinimizeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(MagError::Config(format!("step must be positive, got {}", self.step)));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(MagError::Config(format!("backtracking factor must lie in (0, 1), got {}", self.backtrack)));
        }
        if !(self.grad_tol > 0.0) {
            return Err(MagError::Config(format!("grad_tol must be positive, got {}", self.grad_tol)));
        }
        if self.max_backtracks == 0 {
            return Err(MagError::Config("max_backtracks must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MinimizeReport {
    /// Accepted `m`-steps.
    pub iterations: usize,
    /// Energy before the first step and after each accepted one.
    pub energy_trace: Vec<f64>,
    pub final_grad_norm: f64,
    pub converged: bool,
}

/// Seeded uniform-on-sphere start on the mask.
pub fn random_initial(mask: &DomainMask, cfg: &MinimizeConfig) -> CellVectorField {
    random_masked_cells(cfg.seed, mask, true)
}

/// Armijo sufficient-decrease constant.
const ARMIJO: f64 = 1e-4;
const MIN_STEP: f64 = 1e-14;
const MAX_STEP: f64 = 1e4;

fn tangential(m: &CellVectorField, field: &CellVectorField, cells: &[usize]) -> (CellVectorField, f64) {
    let mut t = CellVectorField::zeros(m.grid());
    for &f in cells {
        let mi = m.at_flat(f);
        let hi = field.at_flat(f);
        let s = dot(mi, hi);
        t.set_flat(f, [hi[0] - s * mi[0], hi[1] - s * mi[1], hi[2] - s * mi[2]]);
    }
    let n2 = t.norm_sq();
    (t, n2)
}

fn retract(m: &CellVectorField, t: &CellVectorField, tau: f64, cells: &[usize]) -> CellVectorField {
    let mut out = CellVectorField::zeros(m.grid());
    for &f in cells {
        let (a, d) = (m.at_flat(f), t.at_flat(f));
        out.set_flat(f, normalize([a[0] + tau * d[0], a[1] + tau * d[1], a[2] + tau * d[2]]));
    }
    out
}

/// Barzilai-Borwein step from the last accepted move, or the grown previous step.
fn next_step(prev: &Option<(CellVectorField, CellVectorField)>, m: &CellVectorField, t: &CellVectorField, tau: f64, cfg: &MinimizeConfig) -> f64 {
    let bb = prev.as_ref().and_then(|(m_old, t_old)| {
        let mut s = m.clone();
        s.axpy(-1.0, m_old).ok()?;
        let mut y = t_old.clone();
        y.axpy(-1.0, t).ok()?;
        let sy = s.inner(&y).ok()?;
        (sy > 0.0).then(|| s.norm_sq() / sy)
    });
    bb.unwrap_or(tau / cfg.backtrack).clamp(MIN_STEP, MAX_STEP)
}

enum Step<X> {
    Accepted { m: CellVectorField, energy: f64, aux: X, tau: f64 },
    Stalled,
}

/// Backtracking from `tau` until Armijo holds.
fn line_search<X>(
    m: &CellVectorField,
    energy: f64,
    t: &CellVectorField,
    t2: f64,
    mut tau: f64,
    cells: &[usize],
    cfg: &MinimizeConfig,
    mut eval: impl FnMut(&CellVectorField) -> Result<(f64, X)>,
) -> Result<Step<X>> {
    // room for rounding in the energy evaluation itself
    let slack = (1e-14 * energy.abs()).min(1e-13);
    let first = tau;
    for _ in 0..=cfg.max_backtracks {
        let trial = retract(m, t, tau, cells);
        let (e, aux) = eval(&trial)?;
        if e <= energy - ARMIJO * tau * t2 + slack {
            return Ok(Step::Accepted { m: trial, energy: e, aux, tau });
        }
        tau *= cfg.backtrack;
    }
    // expected decrease is already at rounding level: nothing more to gain
    if first * t2 <= 1e-12 * (1.0 + energy.abs()) {
        return Ok(Step::Stalled);
    }
    Err(MagError::NoDescent { backtracks: cfg.max_backtracks, step: tau / cfg.backtrack })
}

fn prepare(m0: &CellVectorField, params: &MaterialParams, mask: &DomainMask, mcfg: &MinimizeConfig, scfg: &SolverConfig) -> Result<()> {
    mcfg.validate()?;
    params.validate()?;
    scfg.validate()?;
    check_unit_norm(m0, mask)
}

fn empty_report() -> MinimizeReport {
    MinimizeReport { iterations: 0, energy_trace: vec![0.0], final_grad_norm: 0.0, converged: true }
}

/// Projected gradient descent on the full energy.
pub fn minimize_m(
    m0: &CellVectorField,
    params: &MaterialParams,
    mask: &DomainMask,
    mcfg: &MinimizeConfig,
    scfg: &SolverConfig,
) -> Result<(CellVectorField, MinimizeReport)> {
    prepare(m0, params, mask, mcfg, scfg)?;
    if mask.is_empty() {
        return Ok((m0.clone(), empty_report()));
    }
    let cells = mask.flat_indices();
    let eval = |m: &CellVectorField, warm: Option<&ScalarField>| -> Result<(f64, (CellVectorField, Option<ScalarField>))> {
        let ev = evaluate(m, params, mask, scfg, warm, true)?;
        Ok((ev.breakdown.total, (ev.field.expect("field requested"), ev.potential)))
    };

    let mut m = m0.clone();
    let (mut energy, (mut field, mut potential)) = eval(&m, None)?;
    let mut trace = vec![energy];
    let mut tau = mcfg.step;
    let mut prev = None;
    let mut iterations = 0;
    loop {
        let (t, t2) = tangential(&m, &field, &cells);
        let gnorm = t2.sqrt();
        if gnorm <= mcfg.grad_tol || iterations >= mcfg.max_iter {
            let converged = gnorm <= mcfg.grad_tol;
            return Ok((m, MinimizeReport { iterations, energy_trace: trace, final_grad_norm: gnorm, converged }));
        }
        let trial_tau = next_step(&prev, &m, &t, tau, mcfg);
        let warm = potential.clone();
        match line_search(&m, energy, &t, t2, trial_tau, &cells, mcfg, |x| eval(x, warm.as_ref()))? {
            Step::Accepted { m: m_new, energy: e, aux, tau: used } => {
                prev = Some((std::mem::replace(&mut m, m_new), t));
                energy = e;
                (field, potential) = aux;
                tau = used;
                trace.push(energy);
                iterations += 1;
            }
            Step::Stalled => {
                return Ok((m, MinimizeReport { iterations, energy_trace: trace, final_grad_norm: gnorm, converged: false }));
            }
        }
    }
}

/// The vector-potential half of the joint functional at fixed `a`:
/// `V(A m, a) = c_a + 1/2 |A m|^2 - <A m, curl a>` with `c_a = 1/2 |D a|^2`.
struct FixedPotential {
    curl_a: VectorField,
    c_a: f64,
}

impl FixedPotential {
    fn value(&self, mf: &VectorField) -> Result<f64> {
        Ok(self.c_a + 0.5 * mf.norm_sq() - mf.inner(&self.curl_a)?)
    }

    /// `A^T (curl a - A m)`.
    fn field(&self, mf: &VectorField) -> Result<CellVectorField> {
        let mut r = self.curl_a.clone();
        r.axpy(-1.0, mf)?;
        Ok(cells_from_faces(&r))
    }
}

/// Alternating minimization of `G(m, a) = E_local(m) + V(A m, a)`: an exact
/// (warm-started) solve in `a`, then one projected gradient step in `m` with
/// `a` held fixed. `G` is recorded after each `a`-step, where it equals the
/// reduced energy of `m`.
pub fn minimize_joint(
    m0: &CellVectorField,
    a0: &EdgeField,
    params: &MaterialParams,
    mask: &DomainMask,
    mcfg: &MinimizeConfig,
    scfg: &SolverConfig,
) -> Result<(CellVectorField, EdgeField, MinimizeReport)> {
    prepare(m0, params, mask, mcfg, scfg)?;
    if a0.grid() != m0.grid() {
        return Err(MagError::GridMismatch);
    }
    if mask.is_empty() {
        return Ok((m0.clone(), EdgeField::zeros(m0.grid()), empty_report()));
    }
    let cells = mask.flat_indices();
    let local = MaterialParams { terms: EnergyTerms { stray: false, ..params.terms }, ..params.clone() };
    let local_energy = |m: &CellVectorField| -> Result<f64> { Ok(evaluate(m, &local, mask, scfg, None, false)?.breakdown.total) };
    let stray = params.terms.stray;

    let mut m = m0.clone();
    let mut a = a0.clone();
    let mut trace = Vec::new();
    let mut tau = mcfg.step;
    let mut prev = None;
    let mut iterations = 0;
    loop {
        // a-step
        let mf = faces_from_cells(&m);
        let fixed = if stray {
            let sol = solve_vector_potential_unconstrained_from(&mf, mask, Some(&a), scfg)?;
            let c_a = 0.5 * full_gradient_norm_sq_edges(&sol.a);
            a = sol.a;
            FixedPotential { curl_a: sol.curl_a, c_a }
        } else {
            FixedPotential { curl_a: VectorField::zeros(m.grid()), c_a: 0.0 }
        };
        let g_of = |m: &CellVectorField, mf: &VectorField| -> Result<f64> {
            Ok(local_energy(m)? + if stray { fixed.value(mf)? } else { 0.0 })
        };
        let energy = g_of(&m, &mf)?;
        trace.push(energy);
        let stray_field = if stray { Some(fixed.field(&mf)?) } else { None };
        let field = local_field(&m, params, mask, stray_field.as_ref());
        let (t, t2) = tangential(&m, &field, &cells);
        let gnorm = t2.sqrt();
        if gnorm <= mcfg.grad_tol || iterations >= mcfg.max_iter {
            let converged = gnorm <= mcfg.grad_tol;
            return Ok((m, a, MinimizeReport { iterations, energy_trace: trace, final_grad_norm: gnorm, converged }));
        }

        // m-step at fixed a
        let trial_tau = next_step(&prev, &m, &t, tau, mcfg);
        let step = line_search(&m, energy, &t, t2, trial_tau, &cells, mcfg, |x| Ok((g_of(x, &faces_from_cells(x))?, ())))?;
        match step {
            Step::Accepted { m: m_new, tau: used, .. } => {
                prev = Some((std::mem::replace(&mut m, m_new), t));
                tau = used;
                iterations += 1;
            }
            Step::Stalled => {
                return Ok((m, a, MinimizeReport { iterations, energy_trace: trace, final_grad_norm: gnorm, converged: false }));
            }
        }
    }
}
