use super::*;
use std::f64::consts::PI;

fn sphere_mesh(level: u32) -> SurfaceMesh {
    SurfaceMesh::new(Surface::unit_sphere(), level).unwrap()
}

fn torus() -> Surface {
    Surface::Torus { center: [0.0; 3], major: 1.0, minor: 0.4 }
}

#[test]
fn meshes_are_closed_and_area_converges() {
    for level in 0..4 {
        let m = sphere_mesh(level);
        assert!(m.is_closed_oriented());
        assert_eq!(m.num_vertices(), 10 * 4usize.pow(level) + 2);
    }
    let m = sphere_mesh(4);
    assert!((m.area() - 4.0 * PI).abs() / (4.0 * PI) < 2e-3, "{}", m.area());
    let va: f64 = m.vertex_area.iter().sum();
    assert!((va - m.area()).abs() < 1e-12);
    let t = SurfaceMesh::new(torus(), 3).unwrap();
    assert!(t.is_closed_oriented());
    let exact = torus().area();
    assert!((t.area() - exact).abs() / exact < 5e-3, "{}", t.area());
    for fr in &t.frames {
        assert!((norm(fr.normal) - 1.0).abs() < 1e-14);
    }
}

#[test]
fn metric_factor_closed_forms() {
    let s = Surface::unit_sphere();
    let p = s.project([0.3, -0.2, 0.9]);
    let eps = 0.1;
    for t in [-1.0, -0.3, 0.0, 0.7, 1.0] {
        let mf = metric_factors(&p, t, eps).unwrap();
        assert!((mf.sqrt_g - (1.0 + eps * t).powi(2)).abs() < 1e-15);
        for h in mf.h {
            assert!((h - 1.0 / (1.0 + eps * t)).abs() < 1e-15);
        }
    }
    let flat = SurfacePoint { position: [0.0; 3], normal: [0.0, 0.0, 1.0], kappa: [0.0; 2], tau: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]] };
    assert_eq!(metric_factors(&flat, 0.8, 0.5).unwrap(), MetricFactors { sqrt_g: 1.0, h: [1.0; 2] });
    let q = torus().torus_point(0.4, 1.0);
    assert_eq!(metric_factors(&q, 0.0, 0.2).unwrap(), MetricFactors { sqrt_g: 1.0, h: [1.0; 2] });
    assert!(matches!(metric_factors(&q, 0.5, 0.5), Err(MagError::TubularCondition { .. })));
    assert!(metric_factors(&q, 1.5, 0.1).is_err());
}

#[test]
fn gauss_legendre_integrates_polynomials() {
    for n in 2..7 {
        let (x, w) = gauss_legendre(n);
        for p in 0..2 * n {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p as i32)).sum();
            let exact = if p % 2 == 1 { 0.0 } else { 2.0 / (p as f64 + 1.0) };
            assert!((q - exact).abs() < 1e-13, "n={n} p={p}");
        }
        let d = differentiation_matrix(&x);
        for k in 0..n {
            let p = (n - 1) as i32;
            let dq: f64 = (0..n).map(|l| d[k][l] * x[l].powi(p)).sum();
            assert!((dq - p as f64 * x[k].powi(p - 1)).abs() < 1e-12);
        }
    }
}

#[test]
fn limit_energy_on_the_unit_sphere() {
    let m = sphere_mesh(4);
    let ez = SurfaceField::Uniform([0.0, 0.0, 1.0]).on_mesh(&m);
    let f = limit_energy(&ez, &m).unwrap();
    assert!((f - 4.0 * PI / 3.0).abs() / (4.0 * PI / 3.0) < 0.01, "{f}");
    let hedgehog = SurfaceField::Normal.on_mesh(&m);
    let f = limit_energy(&hedgehog, &m).unwrap();
    assert!((f - 12.0 * PI).abs() / (12.0 * PI) < 0.02, "{f}");
}

#[test]
fn tangential_field_on_torus_has_no_anisotropy() {
    let m = SurfaceMesh::new(torus(), 2).unwrap();
    let az = SurfaceField::Azimuthal.on_mesh(&m);
    let (_, ani) = limit_energy_parts(&az, &m).unwrap();
    assert!(ani < 1e-26, "{ani}");
}

#[test]
fn shell_dirichlet_energy_limits() {
    let m = sphere_mesh(3);
    let ez = SurfaceField::Uniform([0.0, 0.0, 1.0]).on_mesh(&m);
    let f = ShellField::t_independent(&m, &ez, 4).unwrap();
    assert_eq!(shell_dirichlet_energy(&f, &m, 0.1).unwrap(), 0.0);

    // on the unit sphere h_i^2 sqrt_g = 1, so t-independent fields see no eps at all
    let hh = SurfaceField::Normal.on_mesh(&m);
    let f = ShellField::t_independent(&m, &hh, 4).unwrap();
    let (dir, _) = limit_energy_parts(&hh, &m).unwrap();
    for eps in [0.2, 0.1, 0.05] {
        assert!((shell_dirichlet_energy(&f, &m, eps).unwrap() - dir).abs() < 1e-3 * dir);
    }
    // on a torus the metric enters at O(eps^2)
    let tm = SurfaceMesh::new(torus(), 2).unwrap();
    let az = SurfaceField::Azimuthal.on_mesh(&tm);
    let f = ShellField::t_independent(&tm, &az, 4).unwrap();
    let (dir, _) = limit_energy_parts(&az, &tm).unwrap();
    let gaps: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&e| (shell_dirichlet_energy(&f, &tm, e).unwrap() - dir).abs()).collect();
    assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2] && gaps[2] < 1e-2 * dir, "{gaps:?}");

    // t-only dependence: energy grows like 1/eps^2
    let tf = ShellField::from_fn(&m, 4, |_, t| [(0.5 * t).sin(), 0.0, (0.5 * t).cos()]).unwrap();
    let (a, b) = (shell_dirichlet_energy(&tf, &m, 0.1).unwrap(), shell_dirichlet_energy(&tf, &m, 0.05).unwrap());
    assert!((b / a - 4.0).abs() < 0.1, "{}", b / a);
    assert!(ShellField::from_fn(&m, 1, |_, _| [0.0, 0.0, 1.0]).is_err());
}

#[test]
fn eta_profile_values() {
    let e = EtaProfile::new(0.1, 0.4).unwrap();
    assert_eq!(e.eval(0.0), 0.0);
    assert_eq!(e.eval(1.0), 1.0);
    assert_eq!(e.eval(-1.0), -1.0);
    assert_eq!(e.eval(4.0), 0.0);
    assert_eq!(e.eval(-7.0), 0.0);
    assert!(e.eval(2.5).abs() <= 1.0);
    assert!(EtaProfile::new(0.2, 0.2).is_err());
    // int (eta')^2 over the extended interval = 2 (1 + eps / (delta - eps))
    let n = 200_000;
    let r = e.reach();
    let dt = 2.0 * r / n as f64;
    let integral: f64 = (0..n).map(|i| e.derivative(-r + (i as f64 + 0.5) * dt).powi(2) * dt).sum();
    assert!((integral - 2.0 * e.tail_factor()).abs() < 1e-3, "{integral}");
}

#[test]
fn recovery_potentials_vanish_where_expected() {
    let s = Surface::unit_sphere();
    let g = shell_grid(&s, 0.2, 0.1, 0.5).unwrap();
    let eta = EtaProfile::new(0.2, 0.5).unwrap();
    let a = recovery_vector_potential(&SurfaceField::Normal, &s, &eta, &g).unwrap();
    assert_eq!(a.max_abs(), 0.0);
    let u = recovery_scalar_potential(&SurfaceField::Normal, &s, &eta, &g).unwrap();
    assert!((u.max_abs() - 0.2).abs() < 0.05);
    assert!(matches!(recovery_scalar_potential(&SurfaceField::Normal, &s, &EtaProfile::new(0.2, 1.2).unwrap(), &g), Err(MagError::TubularCondition { .. })));
}

#[test]
fn under_resolved_shell_is_rejected() {
    let s = Surface::unit_sphere();
    let g = shell_grid(&s, 0.05, 0.05, 0.25).unwrap();
    let r = shell_stray_energy_scaled(&SurfaceField::Uniform([0.0, 0.0, 1.0]), &s, 0.05, &g, &SolverConfig::default());
    assert!(matches!(r, Err(MagError::UnderResolved { .. })));
}

#[test]
fn coarse_bracket_holds() {
    let s = Surface::unit_sphere();
    let eps = 0.2;
    let g = shell_grid(&s, eps, 2.0 * eps / 3.0, 0.5).unwrap();
    let b = stray_bracket(&SurfaceField::Uniform([0.0, 0.0, 1.0]), &s, eps, 0.5, &g, &SolverConfig::default()).unwrap();
    assert!(b.lower <= b.stray_scaled + 1e-10 && b.stray_scaled <= b.upper + 1e-10, "{b:?}");
}

#[test]
fn study_handles_trivial_inputs() {
    let s = Surface::unit_sphere();
    let m0 = SurfaceField::Uniform([0.0, 0.0, 1.0]);
    assert!(convergence_study(&s, &m0, &[], &StudyConfig::default(), &SolverConfig::default()).unwrap().is_empty());
    assert!(convergence_study(&s, &m0, &[0.1, 0.2], &StudyConfig::default(), &SolverConfig::default()).is_err());
}

#[test]
fn limit_energy_converges_quadratically_in_mesh_size() {
    let f = |l: u32| {
        let m = sphere_mesh(l);
        limit_energy(&SurfaceField::Normal.on_mesh(&m), &m).unwrap()
    };
    let v: Vec<f64> = (2..6).map(f).collect();
    for w in v.windows(3) {
        let (a, b) = ((w[0] - w[1]).abs(), (w[1] - w[2]).abs());
        assert!(a <= 4.0 * b && a >= 3.0 * b, "{v:?}");
    }
}
