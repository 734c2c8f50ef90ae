use magnetovar_core::energy::{total_energy, uniform_on_mask};
use magnetovar_core::grid::{build_mask, cells_from_faces, faces_from_cells, EdgeField, Loc, VectorField};
use magnetovar_core::kernel_fields::random_masked;
use magnetovar_core::magnetostatics::{dense_oracle_energy, demag_tensor, solve_scalar_potential, stray_field, Backend};
use magnetovar_core::minimize::{minimize_joint, minimize_m, random_initial, Method};
use magnetovar_core::thin_shell::convergence_study;
use magnetovar_core::vec3::normalize;

use crate::config::{thread_cap, InitialKey, RunConfig};
use crate::error::CliError;
use crate::output::{num, vtk_cells, Outputs, Table};
use crate::validate;

pub fn validate(cfg: &RunConfig, seed: u64, out: &mut Outputs) -> Result<(), CliError> {
    let checks = validate::run(cfg, seed)?;
    out.write("validate.csv", validate::table(&checks).as_str())?;
    let failed: Vec<&str> =
        checks.iter().filter(|c| c.status == validate::Status::Fail).map(|c| c.name.as_str()).collect();
    for c in &checks {
        log::info!("{:<28} {:>12.3e}  {:?}", c.name, c.value, c.status);
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(failed.join(", ")))
    }
}

pub fn demag(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let (geom, grid) = cfg.body_grid()?;
    let scfg = cfg.solver()?;
    let n = demag_tensor(&geom, &grid, &scfg)?;
    let trace = n[0][0] + n[1][1] + n[2][2];
    let mut t = Table::new(&["row", "n_x", "n_y", "n_z", "trace"]);
    for (i, axis) in ["x", "y", "z"].iter().enumerate() {
        t.row(&[axis.to_string(), num(n[i][0]), num(n[i][1]), num(n[i][2]), num(trace)]);
    }
    out.write("demag.csv", t.as_str())?;
    if cfg.output.vtk {
        let mask = build_mask(&geom, &grid)?;
        let m = faces_from_cells(&uniform_on_mask(&mask, [0.0, 0.0, 1.0]));
        let h = stray_field(&m, &mask, &scfg)?;
        out.write("stray_field_z.vtk", &vtk_cells("h", &cells_from_faces(&h), &mask))?;
    }
    Ok(())
}

pub fn solve(cfg: &RunConfig, seed: u64, out: &mut Outputs) -> Result<(), CliError> {
    let (geom, grid) = cfg.body_grid()?;
    let scfg = cfg.solver()?;
    let params = cfg.material()?;
    let mcfg = cfg.minimizer(seed)?;
    let mask = build_mask(&geom, &grid)?;
    let m0 = match cfg.minimize.initial {
        InitialKey::Random => random_initial(&mask, &mcfg),
        InitialKey::Uniform => {
            let d = cfg.minimize.direction;
            if !d.iter().all(|v| v.is_finite()) || d == [0.0; 3] {
                return Err(CliError::Config("minimize.direction must be a nonzero finite vector".into()));
            }
            uniform_on_mask(&mask, normalize(d))
        }
    };
    let (m, report) = match mcfg.method {
        Method::ProjectedGradient => minimize_m(&m0, &params, &mask, &mcfg, &scfg)?,
        Method::JointAlternating => {
            let (m, _, r) = minimize_joint(&m0, &EdgeField::zeros(&grid), &params, &mask, &mcfg, &scfg)?;
            (m, r)
        }
    };
    if !report.converged {
        return Err(CliError::NotConverged(format!(
            "minimizer stopped after {} iterations with gradient norm {:.3e} (target {:.3e})",
            report.iterations, report.final_grad_norm, mcfg.grad_tol
        )));
    }
    let e = total_energy(&m, &params, &mask, &scfg)?;

    let mut trace = Table::new(&["iteration", "energy"]);
    for (i, v) in report.energy_trace.iter().enumerate() {
        trace.row(&[i.to_string(), num(*v)]);
    }
    out.write("energy_trace.csv", trace.as_str())?;
    let mut s = Table::new(&[
        "exchange",
        "anisotropy",
        "zeeman",
        "stray",
        "total",
        "volume",
        "iterations",
        "final_grad_norm",
    ]);
    s.row(&[
        num(e.exchange),
        num(e.anisotropy),
        num(e.zeeman),
        num(e.stray),
        num(e.total),
        num(mask.volume()),
        report.iterations.to_string(),
        num(report.final_grad_norm),
    ]);
    out.write("energy.csv", s.as_str())?;
    if cfg.output.vtk {
        out.write("magnetization.vtk", &vtk_cells("m", &m, &mask))?;
    }
    Ok(())
}

pub fn shell_study(cfg: &RunConfig, out: &mut Outputs) -> Result<(), CliError> {
    let surface = cfg.surface()?;
    let m0 = cfg.surface_field()?;
    let scfg = cfg.solver()?;
    let eps = &cfg.shell.eps_list;
    let threads = thread_cap()?.min(eps.len().max(1));
    let study = cfg.study(threads)?;
    let rows = convergence_study(&surface, &m0, eps, &study, &scfg)?;

    let mut t = Table::new(&["eps", "exchange", "stray_scaled", "total", "limit", "gap"]);
    let mut b = Table::new(&["eps", "delta", "h", "lower", "stray_scaled", "upper"]);
    for r in &rows {
        t.row(&[num(r.eps), num(r.exchange), num(r.stray_scaled), num(r.total), num(r.limit), num(r.gap)]);
        b.row(&[num(r.eps), num(r.delta), num(r.h), num(r.lower), num(r.stray_scaled), num(r.upper)]);
    }
    out.write("shell_study.csv", t.as_str())?;
    out.write("shell_bounds.csv", b.as_str())?;
    Ok(())
}

/// Dense direct vs iterative stray energies on the configured body: the
/// face-sampled uniform magnetization, then seeded random ones.
pub fn oracle(cfg: &RunConfig, seed: u64, out: &mut Outputs) -> Result<(), CliError> {
    let (geom, grid) = cfg.body_grid()?;
    let mut scfg = cfg.solver()?;
    scfg.backend = Backend::Iterative;
    let mask = build_mask(&geom, &grid)?;
    let rel_tol = cfg.oracle.rel_tol;
    if !(rel_tol > 0.0) {
        return Err(CliError::Config(format!("oracle.rel_tol must be positive, got {rel_tol}")));
    }

    let mut cases: Vec<(String, VectorField)> = Vec::new();
    let mut uniform = VectorField::zeros(&grid);
    let lay = grid.layout(Loc::Face(2));
    lay.for_each_active(|idx, flat| {
        if geom.contains(grid.position(Loc::Face(2), idx)) {
            uniform.comp_mut(2)[flat] = 1.0;
        }
    });
    cases.push(("uniform_z".into(), uniform));
    for k in 0..cfg.oracle.cases {
        cases.push((format!("random_{k}"), random_masked(seed.wrapping_add(k as u64), &mask, &grid, true)?));
    }

    let mut t = Table::new(&["case", "dense", "iterative", "rel_gap", "status"]);
    let mut failed = Vec::new();
    for (name, m) in &cases {
        let d = dense_oracle_energy(m, &mask)?;
        let i = solve_scalar_potential(m, &mask, &scfg)?.energy;
        let gap = if d != 0.0 { (d - i).abs() / d.abs() } else { (d - i).abs() };
        let ok = gap <= rel_tol;
        if !ok {
            failed.push(name.clone());
        }
        t.row(&[name.clone(), num(d), num(i), num(gap), if ok { "pass" } else { "fail" }.into()]);
    }
    out.write("oracle.csv", t.as_str())?;
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Validation(format!("dense and iterative energies disagree for {}", failed.join(", "))))
    }
}
