//! Acceptance suite: one pass/fail line per criterion. Runs without the
//! libtest harness so the report is always printed; exits nonzero if any
//! criterion fails.

use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use magnetovar_core::energy::{effective_field, total_energy, uniform_on_mask, AppliedField, EnergyTerms, MaterialParams};
use magnetovar_core::geometry::{Geometry, Surface};
use magnetovar_core::grid::{build_mask, CellVectorField, DomainMask, EdgeField, GridSpec, Loc, ScalarField, VectorField};
use magnetovar_core::kernel_fields::{
    gradient_bump, random_masked, random_masked_cells, solenoidal_bump, FieldKind, Generator, TestFieldSpec,
};
use magnetovar_core::magnetostatics::{
    demag_tensor, dense_oracle_energy, functional_v, functional_w, helmholtz_residual, rayleigh_quotient,
    reciprocity_gap, solve_scalar_potential, solve_vector_potential_gauged, solve_vector_potential_unconstrained,
    Backend, SolverConfig,
};
use magnetovar_core::minimize::{minimize_joint, minimize_m, random_initial, MinimizeConfig};
use magnetovar_core::thin_shell::{convergence_study, limit_energy, StudyConfig, SurfaceField, SurfaceMesh};
use magnetovar_core::vec3::{dot, normalize};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn ball(cells: usize, pad_ratio: f64) -> (GridSpec, DomainMask) {
    let geom = Geometry::ball(1.0);
    let g = GridSpec::around(&geom, 2.0 / cells as f64, pad_ratio).unwrap();
    let mask = build_mask(&geom, &g).unwrap();
    (g, mask)
}

fn tol(t: f64) -> SolverConfig {
    SolverConfig { tol: t, ..SolverConfig::default() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn monotone(trace: &[f64]) -> bool {
    trace.windows(2).all(|w| w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0))
}

/// Per-case diagnostics shared by criteria 1, 3 and 7.
struct Case {
    three_way: f64,
    gauge: f64,
    helmholtz: f64,
}

fn principle_cases() -> (Vec<Case>, Duration) {
    let start = Instant::now();
    let (g, mask) = ball(24, 1.0);
    let cfg = tol(1e-8);
    let cases = (0..20)
        .map(|k| {
            let m = random_masked(100 + k, &mask, &g, true).unwrap();
            let su = solve_scalar_potential(&m, &mask, &cfg).unwrap();
            let sg = solve_vector_potential_gauged(&m, &mask, &cfg).unwrap();
            let sa = solve_vector_potential_unconstrained(&m, &mask, &cfg).unwrap();
            let e = [su.energy, sg.energy, sa.energy];
            let hi = e.iter().cloned().fold(f64::MIN, f64::max);
            let lo = e.iter().cloned().fold(f64::MAX, f64::min);
            Case {
                three_way: (hi - lo) / hi,
                gauge: sa.div_norm / sa.curl_a.norm(),
                helmholtz: helmholtz_residual(&m, &su, &sa).unwrap().orthogonality_defect,
            }
        })
        .collect();
    (cases, start.elapsed())
}

fn criterion_1(cases: &[Case], elapsed: Duration) -> Outcome {
    let worst = cases.iter().map(|c| c.three_way).fold(0.0, f64::max);
    let pass = worst <= 1e-5 && elapsed <= Duration::from_secs(300);
    outcome(pass, format!("max pairwise gap {worst:.2e} (<= 1e-5) over {} cases in {:.0?} (<= 5 min)", cases.len(), elapsed))
}

fn criterion_2() -> Outcome {
    let (g, mask) = ball(12, 0.5);
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = f64::NEG_INFINITY;
    for k in 0..10u64 {
        let m = random_masked(200 + k, &mask, &g, k % 2 == 0).unwrap();
        let e = dense_oracle_energy(&m, &mask).unwrap();
        // near-optimal trials probe the sandwich hardest
        let su = solve_scalar_potential(&m, &mask, &tol(1e-10)).unwrap();
        let sa = solve_vector_potential_unconstrained(&m, &mask, &tol(1e-10)).unwrap();
        let s = 10f64.powi(-(k as i32) / 2);
        let mut u = ScalarField::from_fn(&g, |_| rng.gen_range(-1.0..1.0));
        u.scale(s);
        let mut a = EdgeField::from_fn(&g, |_| [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)]);
        a.scale(s);
        if k >= 2 {
            u.axpy(1.0, &su.u).unwrap();
            a.axpy(1.0, &sa.a).unwrap();
        }
        let w = functional_w(&m, &u).unwrap();
        let v = functional_v(&m, &a).unwrap();
        worst = worst.max(w - e).max(e - v);
    }
    outcome(worst <= 1e-10, format!("largest violation {worst:.2e} (<= 1e-10) over 10 triples"))
}

fn criterion_3(cases: &[Case]) -> Outcome {
    let worst = cases.iter().map(|c| c.gauge).fold(0.0, f64::max);
    outcome(worst <= 1e-6, format!("max |div a|/|curl a| = {worst:.2e} (<= 1e-6)"))
}

fn uniform_z_faces(geom: &Geometry, g: &GridSpec) -> VectorField {
    let mut m = VectorField::zeros(g);
    g.layout(Loc::Face(2)).for_each_active(|idx, flat| {
        if geom.contains(g.position(Loc::Face(2), idx)) {
            m.comp_mut(2)[flat] = 1.0;
        }
    });
    m
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let geom = Geometry::ball(1.0);
    let (g, mask) = ball(64, 1.0);
    let m = uniform_z_faces(&geom, &g);
    // |Omega_h| is the volume carried by the sampled magnetization
    let ratio = solve_scalar_potential(&m, &mask, &tol(1e-8)).unwrap().energy / m.norm_sq();
    let err = ratio * 6.0 - 1.0;

    let (g12, mask12) = ball(12, 0.5);
    let m12 = uniform_z_faces(&geom, &g12);
    let dense = dense_oracle_energy(&m12, &mask12).unwrap();
    let it = solve_scalar_potential(&m12, &mask12, &tol(1e-10)).unwrap().energy;
    let gap = rel(it, dense);
    let elapsed = start.elapsed();
    let pass = err.abs() <= 0.02 && gap <= 1e-6 && elapsed <= Duration::from_secs(120);
    outcome(
        pass,
        format!(
            "E_s/|Omega_h| = {ratio:.5} ({:+.2}% vs 1/6, need 2%); dense/iterative gap {gap:.1e} (<= 1e-6); {:.0?} (<= 2 min)",
            100.0 * err,
            elapsed
        ),
    )
}

fn criterion_5() -> Outcome {
    let cfg = tol(1e-8);
    let sphere = Geometry::ball(1.0);
    let n = demag_tensor(&sphere, &GridSpec::around(&sphere, 0.1, 2.0).unwrap(), &cfg).unwrap();
    let sd: Vec<f64> = (0..3).map(|i| n[i][i]).collect();
    let st: f64 = sd.iter().sum();
    let spheroid = Geometry::Ellipsoid { center: [0.0; 3], semi_axes: [2.0, 1.0, 1.0] };
    let p = demag_tensor(&spheroid, &GridSpec::around(&spheroid, 0.1, 1.0).unwrap(), &cfg).unwrap();
    let pd: Vec<f64> = (0..3).map(|i| p[i][i]).collect();
    let pt: f64 = pd.iter().sum();
    // elliptic-integral values for semi-axes 2:1:1
    let exact = [0.173563997534, 0.413218001233, 0.413218001233];
    let sphere_ok = sd.iter().all(|&d| rel(d, 1.0 / 3.0) <= 0.02) && rel(st, 1.0) <= 0.02;
    let spheroid_ok = (0..3).all(|i| rel(pd[i], exact[i]) <= 0.05) && rel(pt, 1.0) <= 0.02;
    outcome(
        sphere_ok && spheroid_ok,
        format!(
            "sphere diag {:.4}/{:.4}/{:.4} trace {st:.4}; spheroid {:.4} ({:+.1}%) {:.4} ({:+.1}%) trace {pt:.4}",
            sd[0],
            sd[1],
            sd[2],
            pd[0],
            100.0 * (pd[0] / exact[0] - 1.0),
            pd[1],
            100.0 * (pd[1] / exact[1] - 1.0)
        ),
    )
}

fn criterion_6() -> Outcome {
    let (g12, mask12) = ball(12, 0.5);
    let dense = SolverConfig { backend: Backend::DenseOracle, ..SolverConfig::default() };
    let dense_gap = (0..10u64)
        .map(|k| {
            let a = random_masked(300 + 2 * k, &mask12, &g12, false).unwrap();
            let b = random_masked(301 + 2 * k, &mask12, &g12, false).unwrap();
            reciprocity_gap(&a, &b, &mask12, &dense).unwrap()
        })
        .fold(0.0, f64::max);
    let (g24, mask24) = ball(24, 0.5);
    let it = tol(1e-10);
    let iter_gap = (0..10u64)
        .map(|k| {
            let a = random_masked(400 + 2 * k, &mask24, &g24, true).unwrap();
            let b = random_masked(401 + 2 * k, &mask24, &g24, false).unwrap();
            reciprocity_gap(&a, &b, &mask24, &it).unwrap()
        })
        .fold(0.0, f64::max);

    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for k in 0..100u64 {
        let q = rayleigh_quotient(&random_masked(500 + k, &mask24, &g24, k % 2 == 0).unwrap(), &mask24, &it).unwrap();
        lo = lo.min(q);
        hi = hi.max(q);
    }

    // bumps on a grid with h = 1/24
    let geom = Geometry::ball(1.0);
    let g = GridSpec::around(&geom, 1.0 / 24.0, 0.25).unwrap();
    let mask = build_mask(&geom, &g).unwrap();
    let mut grad_min = f64::INFINITY;
    let mut sol_max = f64::NEG_INFINITY;
    let gens = [
        Generator::Constant([0.0, 0.0, 1.0]),
        Generator::Constant([0.3, -0.5, 1.0]),
        Generator::Linear { s: [[1.0, 0.2, 0.0], [0.2, -0.5, 0.0], [0.0, 0.0, 0.3]], b: [0.0, 0.0, 1.0] },
    ];
    for (k, xi) in gens.into_iter().enumerate() {
        let c = [0.1 * k as f64, -0.05 * k as f64, 0.0];
        let spec = TestFieldSpec { xi, center: c, r0: 0.8, ..Default::default() };
        sol_max = sol_max.max(rayleigh_quotient(&solenoidal_bump(&spec, &g).unwrap(), &mask, &it).unwrap());
        let spec = TestFieldSpec { kind: FieldKind::GradientBump, center: c, r0: 0.8, sigma: 0.2 + 0.1 * k as f64, ..Default::default() };
        grad_min = grad_min.min(rayleigh_quotient(&gradient_bump(&spec, &g).unwrap(), &mask, &it).unwrap());
    }

    let pass = dense_gap <= 1e-10
        && iter_gap <= 1e-6
        && lo >= -1e-6
        && hi <= 1.0 + 1e-6
        && grad_min >= 1.0 - 1e-4
        && sol_max <= 1e-4;
    outcome(
        pass,
        format!(
            "reciprocity dense {dense_gap:.1e} iterative {iter_gap:.1e}; RQ range [{lo:.3}, {hi:.3}] over 100; gradient bumps >= {grad_min:.6}; solenoidal bumps <= {sol_max:.1e}"
        ),
    )
}

fn criterion_7(cases: &[Case]) -> Outcome {
    let worst = cases.iter().map(|c| c.helmholtz).fold(0.0, f64::max);
    outcome(worst <= 1e-5, format!("max orthogonality defect {worst:.2e} (<= 1e-5)"))
}

fn criterion_8() -> Outcome {
    let (g, mask) = ball(10, 1.0);
    let m = random_masked_cells(800, &mask, true);
    let p = MaterialParams {
        q: 0.7,
        easy_axis: normalize([1.0, 1.0, 0.5]),
        h_applied: AppliedField::Uniform([0.2, -0.1, 0.3]),
        terms: EnergyTerms::default(),
    };
    let cfg = tol(1e-11);
    let field = effective_field(&m, &p, &mask, &cfg).unwrap();
    let energy_along = |dm: &CellVectorField, t: f64| {
        let mut mt = CellVectorField::zeros(&g);
        for f in mask.flat_indices() {
            let (a, d) = (m.at_flat(f), dm.at_flat(f));
            mt.set_flat(f, normalize([a[0] + t * d[0], a[1] + t * d[1], a[2] + t * d[2]]));
        }
        total_energy(&mt, &p, &mask, &cfg).unwrap().total
    };
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut worst, mut worst_ratio) = (0.0f64, f64::INFINITY);
    for _ in 0..20 {
        let mut dm = CellVectorField::zeros(&g);
        for f in mask.flat_indices() {
            let mi = m.at_flat(f);
            let r = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
            let s = dot(r, mi);
            dm.set_flat(f, [r[0] - s * mi[0], r[1] - s * mi[1], r[2] - s * mi[2]]);
        }
        let predicted = -field.inner(&dm).unwrap();
        let fd = |t: f64| (energy_along(&dm, t) - energy_along(&dm, -t)) / (2.0 * t);
        let (e1, e2) = ((fd(1e-3) - predicted).abs(), (fd(5e-4) - predicted).abs());
        worst = worst.max(e2 / predicted.abs());
        worst_ratio = worst_ratio.min(e1 / e2);
    }
    outcome(
        worst <= 1e-5 && worst_ratio >= 3.0,
        format!("max relative error {worst:.2e} (<= 1e-5); smallest error ratio under t-halving {worst_ratio:.2} (>= 3, quadratic = 4)"),
    )
}

fn criteria_9_10() -> (Outcome, Outcome) {
    let start = Instant::now();
    let four_thirds = 4.0 * PI / 3.0;
    let surface = Surface::unit_sphere();
    let ez = SurfaceField::Uniform([0.0, 0.0, 1.0]);
    let eps = [0.2, 0.1, 0.05];
    let rows = convergence_study(&surface, &ez, &eps, &StudyConfig::default(), &tol(1e-8)).unwrap();
    let gaps: Vec<f64> = rows.iter().map(|r| (r.stray_scaled - four_thirds).abs() / four_thirds).collect();
    let decreasing = gaps.windows(2).all(|w| w[1] < w[0]);
    let mesh = SurfaceMesh::new(surface, 4).unwrap();
    let f_ez = limit_energy(&ez.on_mesh(&mesh), &mesh).unwrap();
    let f_hh = limit_energy(&SurfaceField::Normal.on_mesh(&mesh), &mesh).unwrap();
    let elapsed = start.elapsed();
    let pass9 = decreasing
        && gaps[2] <= 0.25
        && rel(f_ez, four_thirds) <= 0.01
        && rel(f_hh, 12.0 * PI) <= 0.02
        && elapsed <= Duration::from_secs(1200);
    let c9 = outcome(
        pass9,
        format!(
            "scaled stray {:.4}/{:.4}/{:.4}, gaps {:.2}%/{:.2}%/{:.2}% (decreasing, final <= 25%); F(e_z) {f_ez:.4} ({:+.2}%), F(n) {f_hh:.3} ({:+.2}%); {:.0?}",
            rows[0].stray_scaled,
            rows[1].stray_scaled,
            rows[2].stray_scaled,
            100.0 * gaps[0],
            100.0 * gaps[1],
            100.0 * gaps[2],
            100.0 * (f_ez / four_thirds - 1.0),
            100.0 * (f_hh / (12.0 * PI) - 1.0),
            elapsed
        ),
    );
    let ordered = rows.iter().all(|r| r.lower <= r.stray_scaled && r.stray_scaled <= r.upper);
    let last = rows[2];
    let (lo, hi) = (last.lower / four_thirds - 1.0, last.upper / four_thirds - 1.0);
    let c10 = outcome(
        ordered && lo.abs() <= 0.3 && hi.abs() <= 0.3,
        format!(
            "lower <= scaled <= upper at every eps: {ordered}; at eps = 0.05 lower {:+.1}% upper {:+.1}% (within 30%, delta = {})",
            100.0 * lo,
            100.0 * hi,
            last.delta
        ),
    );
    (c9, c10)
}

fn criterion_11() -> Outcome {
    let (_, mask) = ball(16, 1.0);
    let scfg = tol(1e-8);
    let vol = mask.volume();
    let mut traces_ok = true;

    let h = [0.3, 0.0, 0.4];
    let pz = MaterialParams { h_applied: AppliedField::Uniform(h), terms: EnergyTerms::only_zeeman(), ..Default::default() };
    let mcfg = MinimizeConfig { grad_tol: 1e-10, seed: 11, ..Default::default() };
    let (_, rz) = minimize_m(&random_initial(&mask, &mcfg), &pz, &mask, &mcfg, &scfg).unwrap();
    traces_ok &= monotone(&rz.energy_trace);
    let ez = *rz.energy_trace.last().unwrap();
    let zeeman_err = rel(ez, -0.5 * vol);

    let q = 0.8;
    let pa = MaterialParams { q, easy_axis: normalize([1.0, -1.0, 1.0]), terms: EnergyTerms::only_anisotropy(), ..Default::default() };
    let (_, ra) = minimize_m(&random_initial(&mask, &mcfg), &pa, &mask, &mcfg, &scfg).unwrap();
    traces_ok &= monotone(&ra.energy_trace);
    // minimum 0, measured against the term's scale Q|Omega|/2
    let aniso_err = ra.energy_trace.last().unwrap().abs() / (0.5 * q * vol);

    let g = *mask.grid();
    let mut m0 = uniform_on_mask(&mask, [0.0, 0.0, 1.0]);
    for f in mask.flat_indices() {
        let x = g.cell_center(m0.layout(0).unindex(f));
        m0.set_flat(f, normalize([0.3 * x[1], -0.2 * x[0] * x[2], 1.0]));
    }
    let p = MaterialParams { terms: EnergyTerms { anisotropy: false, zeeman: false, ..Default::default() }, ..Default::default() };
    let mcfg = MinimizeConfig { grad_tol: 1e-5, ..Default::default() };
    let (_, r) = minimize_m(&m0, &p, &mask, &mcfg, &scfg).unwrap();
    let (_, _, j) = minimize_joint(&m0, &EdgeField::zeros(&g), &p, &mask, &mcfg, &scfg).unwrap();
    traces_ok &= monotone(&r.energy_trace) && monotone(&j.energy_trace);
    let (er, ej) = (*r.energy_trace.last().unwrap(), *j.energy_trace.last().unwrap());
    let joint_gap = rel(ej, er);

    let converged = rz.converged && ra.converged && r.converged && j.converged;
    outcome(
        zeeman_err <= 1e-6 && aniso_err <= 1e-6 && joint_gap <= 1e-4 && traces_ok && converged,
        format!(
            "Zeeman rel err {zeeman_err:.1e}, anisotropy {aniso_err:.1e} (<= 1e-6); joint vs reduced {joint_gap:.1e} (<= 1e-4); traces monotone: {traces_ok}"
        ),
    )
}

fn criterion_12() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/validate.toml");
    let mut codes = Vec::new();
    let mut slowest = Duration::ZERO;
    for run in ["a", "b"] {
        let start = Instant::now();
        let status = Command::new(env!("CARGO_BIN_EXE_magnetovar"))
            .env("RUST_LOG", "error")
            .args(["validate", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(tmp.path().join(run))
            .status()
            .unwrap();
        slowest = slowest.max(start.elapsed());
        codes.push(status.code());
    }
    let read = |r: &str| std::fs::read(tmp.path().join(r).join("validate.csv")).unwrap_or_default();
    let identical = !read("a").is_empty() && read("a") == read("b");
    outcome(
        codes.iter().all(|c| *c == Some(0)) && slowest <= Duration::from_secs(60) && identical,
        format!("exit codes {codes:?}, slowest run {slowest:.1?} (<= 60 s), identical CSVs: {identical}"),
    )
}

const TITLES: [&str; 12] = [
    "three-way stray-energy agreement",
    "duality sandwich",
    "Coulomb gauge emergence",
    "uniform sphere and dense oracle",
    "demagnetizing tensors",
    "reciprocity and operator bounds",
    "Helmholtz orthogonality",
    "effective field vs central differences",
    "thin-shell limit",
    "recovery-bound certificate",
    "minimization sanity",
    "validate command",
];

fn main() {
    // other libtest flags (--nocapture, filters) are accepted and ignored
    if std::env::args().any(|a| a == "--list") {
        for i in 1..=TITLES.len() {
            println!("criterion_{i}: test");
        }
        return;
    }
    let mut results: Vec<(u32, &str, bool)> = Vec::new();
    let mut report = |id: u32, f: &mut dyn FnMut() -> Outcome| {
        let title = TITLES[id as usize - 1];
        let start = Instant::now();
        let o = catch_unwind(AssertUnwindSafe(f))
            .unwrap_or_else(|_| outcome(false, "panicked".into()));
        println!(
            "criterion {id:>2} {} {title}: {} [{:.1?}]",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail,
            start.elapsed()
        );
        results.push((id, title, o.pass));
    };

    let shared = catch_unwind(principle_cases).ok();
    let missing = || outcome(false, "shared cases panicked".into());
    report(1, &mut || match &shared {
        Some((c, t)) => criterion_1(c, *t),
        None => missing(),
    });
    report(2, &mut criterion_2);
    report(3, &mut || match &shared {
        Some((c, _)) => criterion_3(c),
        None => missing(),
    });
    report(4, &mut criterion_4);
    report(5, &mut criterion_5);
    report(6, &mut criterion_6);
    report(7, &mut || match &shared {
        Some((c, _)) => criterion_7(c),
        None => missing(),
    });
    report(8, &mut criterion_8);
    let shell = catch_unwind(criteria_9_10).ok();
    let mut shell_parts = shell.map(|(a, b)| (Some(a), Some(b))).unwrap_or((None, None));
    report(9, &mut || shell_parts.0.take().unwrap_or_else(|| outcome(false, "panicked".into())));
    report(10, &mut || shell_parts.1.take().unwrap_or_else(|| outcome(false, "panicked".into())));
    report(11, &mut criterion_11);
    report(12, &mut criterion_12);

    let failed: Vec<u32> = results.iter().filter(|r| !r.2).map(|r| r.0).collect();
    println!("acceptance: {} of {} criteria pass", results.len() - failed.len(), results.len());
    if !failed.is_empty() {
        println!("failing criteria: {failed:?}");
        std::process::exit(1);
    }
}
