//! Analytic test magnetizations: compactly supported solenoidal bumps
//! `rho(|x|) (xi(x) x x)`, discrete gradients of smooth bumps, and seeded
//! random fields on a mask.

use crate::error::{MagError, Result};
use crate::grid::{faces_from_cells, grad, CellVectorField, DomainMask, GridSpec, ScalarField, VectorField};
use crate::vec3::{cross, norm, sub, Vec3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, UnitBall, UnitSphere};
use serde::{Deserialize, Serialize};

/// Curl-free generator `xi`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Constant(Vec3),
    /// `xi(x) = S x + b`, the gradient of `x.Sx/2 + b.x`; `S` must be symmetric.
    Linear { s: [[f64; 3]; 3], b: Vec3 },
}

impl Generator {
    fn validate(&self) -> Result<()> {
        if let Generator::Linear { s, .. } = self {
            for i in 0..3 {
                for j in 0..i {
                    if (s[i][j] - s[j][i]).abs() > 1e-14 * (1.0 + s[i][j].abs()) {
                        return Err(MagError::Config("linear generator matrix must be symmetric (curl-free)".into()));
                    }
                }
            }
        }
        Ok(())
    }

    fn at(&self, x: Vec3) -> Vec3 {
        match self {
            Generator::Constant(c) => *c,
            Generator::Linear { s, b } => {
                let mut v = *b;
                for i in 0..3 {
                    v[i] += s[i][0] * x[0] + s[i][1] * x[1] + s[i][2] * x[2];
                }
                v
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldKind {
    SolenoidalBump,
    GradientBump,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFieldSpec {
    pub kind: FieldKind,
    pub center: Vec3,
    /// Support radius; the cutoff is 1 on `[0, r0/2]` and 0 beyond `r0`.
    pub r0: f64,
    pub xi: Generator,
    /// Width of the Gaussian in [`gradient_bump`].
    pub sigma: f64,
    pub amplitude: f64,
    pub seed: u64,
    /// Unit vectors per cell for random fields.
    pub unit: bool,
}

impl Default for TestFieldSpec {
    fn default() -> Self {
        TestFieldSpec {
            kind: FieldKind::SolenoidalBump,
            center: [0.0; 3],
            r0: 1.0,
            xi: Generator::Constant([0.0, 0.0, 1.0]),
            sigma: 0.4,
            amplitude: 1.0,
            seed: 0,
            unit: true,
        }
    }
}

/// Quintic smoothstep cutoff: 1 for `r <= r0/2`, 0 for `r >= r0`, C2 in between.
pub fn cutoff(r: f64, r0: f64) -> f64 {
    let s = ((r - 0.5 * r0) / (0.5 * r0)).clamp(0.0, 1.0);
    1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

fn check_support(spec: &TestFieldSpec, grid: &GridSpec) -> Result<()> {
    if !(spec.r0 > 0.0 && spec.r0.is_finite()) {
        return Err(MagError::Config(format!("bump radius must be positive, got {}", spec.r0)));
    }
    grid.validate()?;
    for d in 0..3 {
        let lo = grid.origin[d];
        let hi = lo + grid.n[d] as f64 * grid.h;
        if spec.center[d] - spec.r0 < lo || spec.center[d] + spec.r0 > hi {
            return Err(MagError::SupportViolation(format!(
                "bump of radius {} at {:?} leaves the unpadded region on axis {d}",
                spec.r0, spec.center
            )));
        }
    }
    Ok(())
}

/// Samples `rho(|x - c|) (xi(x - c) x (x - c))` at face centers. The
/// continuum field is divergence free; the sampled one up to `O(h^2)`.
pub fn solenoidal_bump(spec: &TestFieldSpec, grid: &GridSpec) -> Result<VectorField> {
    check_support(spec, grid)?;
    spec.xi.validate()?;
    Ok(VectorField::from_fn(grid, |x| {
        let y = sub(x, spec.center);
        let r = cutoff(norm(y), spec.r0) * spec.amplitude;
        let v = cross(spec.xi.at(y), y);
        [r * v[0], r * v[1], r * v[2]]
    }))
}

/// Discrete gradient of `v = amplitude exp(-|x-c|^2 / 2 sigma^2) rho(|x-c|)`
/// sampled at cell centers, so that the stray field is exactly `-m`.
pub fn gradient_bump(spec: &TestFieldSpec, grid: &GridSpec) -> Result<VectorField> {
    check_support(spec, grid)?;
    if !(spec.sigma > 0.0) {
        return Err(MagError::Config(format!("sigma must be positive, got {}", spec.sigma)));
    }
    let v = ScalarField::from_fn(grid, |x| {
        let r = norm(sub(x, spec.center));
        spec.amplitude * (-0.5 * r * r / (spec.sigma * spec.sigma)).exp() * cutoff(r, spec.r0)
    });
    Ok(grad(&v))
}

/// Seeded random cell vectors on the mask (zero elsewhere); unit length
/// when `unit`, otherwise uniform in the unit ball.
pub fn random_masked_cells(seed: u64, mask: &DomainMask, unit: bool) -> CellVectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = CellVectorField::zeros(mask.grid());
    for flat in mask.flat_indices() {
        let v: [f64; 3] = if unit { UnitSphere.sample(&mut rng) } else { UnitBall.sample(&mut rng) };
        m.set_flat(flat, v);
    }
    m
}

/// [`random_masked_cells`] averaged onto faces.
pub fn random_masked(seed: u64, mask: &DomainMask, grid: &GridSpec, unit: bool) -> Result<VectorField> {
    if grid != mask.grid() {
        return Err(MagError::GridMismatch);
    }
    Ok(faces_from_cells(&random_masked_cells(seed, mask, unit)))
}

/// Builds the field described by `spec`.
pub fn build_field(spec: &TestFieldSpec, mask: &DomainMask) -> Result<VectorField> {
    let g = mask.grid();
    match spec.kind {
        FieldKind::SolenoidalBump => solenoidal_bump(spec, g),
        FieldKind::GradientBump => gradient_bump(spec, g),
        FieldKind::Random => random_masked(spec.seed, mask, g, spec.unit),
    }
}

/// `alpha a + beta b`.
pub fn combine(alpha: f64, a: &VectorField, beta: f64, b: &VectorField) -> Result<VectorField> {
    let mut out = a.clone();
    out.scale(alpha);
    out.axpy(beta, b)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Geometry;
    use crate::grid::{build_mask, div};
    use crate::magnetostatics::{rayleigh_quotient, solve_scalar_potential, SolverConfig};

    fn grid(n: usize) -> GridSpec {
        GridSpec::new([n; 3], 2.4 / n as f64, [-1.2; 3], 2).unwrap()
    }

    fn cfg() -> SolverConfig {
        SolverConfig { tol: 1e-10, ..Default::default() }
    }

    #[test]
    fn cutoff_profile() {
        assert_eq!(cutoff(0.0, 1.0), 1.0);
        assert_eq!(cutoff(0.5, 1.0), 1.0);
        assert_eq!(cutoff(1.0, 1.0), 0.0);
        assert_eq!(cutoff(3.0, 1.0), 0.0);
        assert!((cutoff(0.75, 1.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn solenoidal_divergence_is_second_order() {
        let spec = TestFieldSpec { xi: Generator::Constant([0.3, -0.5, 1.0]), ..Default::default() };
        let ratio = |n: usize| {
            let m = solenoidal_bump(&spec, &grid(n)).unwrap();
            div(&m).norm() / m.norm()
        };
        let (c, f) = (ratio(16), ratio(32));
        assert!(c / f > 3.2, "{c} {f}");
    }

    #[test]
    fn zero_generators_give_zero_fields() {
        let g = grid(8);
        let spec = TestFieldSpec { xi: Generator::Constant([0.0; 3]), ..Default::default() };
        assert_eq!(solenoidal_bump(&spec, &g).unwrap().max_abs(), 0.0);
        let spec = TestFieldSpec { amplitude: 0.0, ..Default::default() };
        assert_eq!(gradient_bump(&spec, &g).unwrap().max_abs(), 0.0);
        let mask = DomainMask::empty(&g);
        assert_eq!(random_masked(3, &mask, &g, true).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn asymmetric_linear_generator_is_rejected() {
        let s = [[0.0, 1.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 0.0]];
        let spec = TestFieldSpec { xi: Generator::Linear { s, b: [0.0; 3] }, ..Default::default() };
        assert!(matches!(solenoidal_bump(&spec, &grid(8)), Err(MagError::Config(_))));
    }

    #[test]
    fn support_overflow_is_an_error() {
        let spec = TestFieldSpec { r0: 1.5, ..Default::default() };
        assert!(matches!(solenoidal_bump(&spec, &grid(8)), Err(MagError::SupportViolation(_))));
    }

    #[test]
    fn bumps_sit_at_the_ends_of_the_spectrum() {
        let g = grid(24);
        let mask = build_mask(&Geometry::ball(1.0), &g).unwrap();
        let sol = solenoidal_bump(&TestFieldSpec { xi: Generator::Linear { s: [[1.0, 0.2, 0.0], [0.2, -0.5, 0.0], [0.0, 0.0, 0.3]], b: [0.0, 0.0, 1.0] }, ..Default::default() }, &g).unwrap();
        assert!(rayleigh_quotient(&sol, &mask, &cfg()).unwrap() <= 1e-4);
        let gb = gradient_bump(&TestFieldSpec { kind: FieldKind::GradientBump, ..Default::default() }, &g).unwrap();
        assert!(rayleigh_quotient(&gb, &mask, &cfg()).unwrap() >= 1.0 - 1e-4);
        let s = solve_scalar_potential(&gb, &mask, &cfg()).unwrap();
        let mut d = s.h.clone();
        d.axpy(1.0, &gb).unwrap();
        assert!(d.norm() <= 1e-4 * gb.norm());

        // mixtures: only the gradient part carries stray energy
        let mix = combine(0.7, &gb, 1.3, &sol).unwrap();
        let e = solve_scalar_potential(&mix, &mask, &cfg()).unwrap().energy;
        let expect = 0.5 * 0.49 * gb.norm_sq();
        assert!((e - expect).abs() <= 1e-3 * expect, "{e} {expect}");
    }

    #[test]
    fn random_fields_are_reproducible() {
        let g = grid(12);
        let mask = build_mask(&Geometry::ball(1.0), &g).unwrap();
        let a = random_masked_cells(7, &mask, true);
        assert_eq!(a, random_masked_cells(7, &mask, true));
        let b = random_masked_cells(8, &mask, true);
        let differing = mask.flat_indices().into_iter().filter(|&f| a.at_flat(f) != b.at_flat(f)).count();
        assert!(differing as f64 >= 0.99 * mask.count() as f64);
        for f in mask.flat_indices() {
            assert!((norm(a.at_flat(f)) - 1.0).abs() < 1e-14);
        }
        let c = random_masked_cells(7, &mask, false);
        assert!(mask.flat_indices().into_iter().all(|f| norm(c.at_flat(f)) <= 1.0));
    }
}
