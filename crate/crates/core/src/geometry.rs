//! Analytic shapes: solid bodies for domain masks and parametric closed
//! surfaces for thin shells.
//!
//! Surfaces carry their exact differential geometry (normal, principal
//! curvatures and directions) so that shell metric factors never depend on
//! mesh-based curvature estimates.

use serde::{Deserialize, Serialize};

use crate::error::{MagError, Result};
use crate::vec3::{add, cross, dot, norm, normalize, scale, sub, Vec3};

/// A smooth closed surface given in closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Surface {
    Sphere { center: Vec3, radius: f64 },
    /// Torus of revolution around the z axis through `center`.
    Torus { center: Vec3, major: f64, minor: f64 },
}

/// Local frame of a surface at a point: outward normal, principal
/// curvatures and the matching unit principal directions.
///
/// Curvatures follow the convention that the parallel surface at signed
/// distance `s` has area element `(1 + s k1)(1 + s k2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub position: Vec3,
    pub normal: Vec3,
    pub kappa: [f64; 2],
    pub tau: [Vec3; 2],
}

impl SurfacePoint {
    pub fn mean_curvature(&self) -> f64 {
        0.5 * (self.kappa[0] + self.kappa[1])
    }

    pub fn gaussian_curvature(&self) -> f64 {
        self.kappa[0] * self.kappa[1]
    }
}

impl Surface {
    pub fn unit_sphere() -> Self {
        Surface::Sphere { center: [0.0; 3], radius: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Surface::Sphere { radius, .. } if radius > 0.0 => Ok(()),
            Surface::Torus { major, minor, .. } if minor > 0.0 && major > minor => Ok(()),
            _ => Err(MagError::Config(format!("degenerate surface {self:?}"))),
        }
    }

    /// Smallest radius of curvature over the whole surface.
    pub fn min_curvature_radius(&self) -> f64 {
        match *self {
            Surface::Sphere { radius, .. } => radius,
            Surface::Torus { major, minor, .. } => minor.min(major - minor),
        }
    }

    pub fn area(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Surface::Sphere { radius, .. } => 4.0 * PI * radius * radius,
            Surface::Torus { major, minor, .. } => 4.0 * PI * PI * major * minor,
        }
    }

    /// Half-width of an axis-aligned box around `center()` containing the surface.
    pub fn half_extent(&self) -> Vec3 {
        match *self {
            Surface::Sphere { radius, .. } => [radius; 3],
            Surface::Torus { major, minor, .. } => [major + minor, major + minor, minor],
        }
    }

    pub fn center(&self) -> Vec3 {
        match *self {
            Surface::Sphere { center, .. } | Surface::Torus { center, .. } => center,
        }
    }

    /// Signed distance, positive on the side the normal points to.
    pub fn signed_distance(&self, x: Vec3) -> f64 {
        match *self {
            Surface::Sphere { center, radius } => norm(sub(x, center)) - radius,
            Surface::Torus { center, major, minor } => {
                let d = sub(x, center);
                let rho = (d[0] * d[0] + d[1] * d[1]).sqrt();
                ((rho - major).powi(2) + d[2] * d[2]).sqrt() - minor
            }
        }
    }

    /// Frame at the closest surface point to `x`. Points on the symmetry
    /// set (sphere center, torus axis or core circle) get an arbitrary but
    /// fixed choice.
    pub fn project(&self, x: Vec3) -> SurfacePoint {
        match *self {
            Surface::Sphere { center, radius } => {
                let d = sub(x, center);
                let r = norm(d);
                let n = if r > 0.0 { scale(d, 1.0 / r) } else { [0.0, 0.0, 1.0] };
                let (t1, t2) = tangent_basis(n);
                SurfacePoint {
                    position: add(center, scale(n, radius)),
                    normal: n,
                    kappa: [1.0 / radius; 2],
                    tau: [t1, t2],
                }
            }
            Surface::Torus { center, .. } => {
                let d = sub(x, center);
                let phi = d[1].atan2(d[0]);
                let rho = (d[0] * d[0] + d[1] * d[1]).sqrt();
                let theta = d[2].atan2(rho - self.torus_radii().0);
                self.torus_point(theta, phi)
            }
        }
    }

    fn torus_radii(&self) -> (f64, f64) {
        match *self {
            Surface::Torus { major, minor, .. } => (major, minor),
            Surface::Sphere { radius, .. } => (0.0, radius),
        }
    }

    /// Torus frame at tube angle `theta` and azimuth `phi`.
    pub fn torus_point(&self, theta: f64, phi: f64) -> SurfacePoint {
        let (major, minor) = self.torus_radii();
        let c = self.center();
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        let ring = major + minor * ct;
        let normal = [ct * cp, ct * sp, st];
        SurfacePoint {
            position: add(c, [ring * cp, ring * sp, minor * st]),
            normal,
            kappa: [1.0 / minor, ct / ring],
            tau: [[-st * cp, -st * sp, ct], [-sp, cp, 0.0]],
        }
    }
}

/// Orthonormal pair spanning the plane orthogonal to the unit vector `n`.
pub fn tangent_basis(n: Vec3) -> (Vec3, Vec3) {
    let helper = if n[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let t1 = normalize(sub(helper, scale(n, dot(helper, n))));
    let t2 = cross(n, t1);
    (t1, t2)
}

/// Solid shapes used to build domain masks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Geometry {
    Box { center: Vec3, half_extents: Vec3 },
    Ellipsoid { center: Vec3, semi_axes: Vec3 },
    /// Tubular neighbourhood `{ |dist(x, S)| < half_thickness }`.
    Shell { surface: Surface, half_thickness: f64 },
}

impl Geometry {
    pub fn ball(radius: f64) -> Self {
        Geometry::Ellipsoid { center: [0.0; 3], semi_axes: [radius; 3] }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Geometry::Box { half_extents: e, .. } | Geometry::Ellipsoid { semi_axes: e, .. } => {
                if e.iter().all(|&v| v > 0.0 && v.is_finite()) {
                    Ok(())
                } else {
                    Err(MagError::Config(format!("size parameters must be positive: {e:?}")))
                }
            }
            Geometry::Shell { surface, half_thickness } => {
                surface.validate()?;
                if !(half_thickness > 0.0) {
                    return Err(MagError::Config("shell half-thickness must be positive".into()));
                }
                let radius = surface.min_curvature_radius();
                if half_thickness >= radius {
                    return Err(MagError::TubularCondition { thickness: half_thickness, radius });
                }
                Ok(())
            }
        }
    }

    pub fn contains(&self, x: Vec3) -> bool {
        match *self {
            Geometry::Box { center, half_extents } => {
                (0..3).all(|d| (x[d] - center[d]).abs() < half_extents[d])
            }
            Geometry::Ellipsoid { center, semi_axes } => {
                let s: f64 = (0..3).map(|d| ((x[d] - center[d]) / semi_axes[d]).powi(2)).sum();
                s < 1.0
            }
            Geometry::Shell { surface, half_thickness } => {
                surface.signed_distance(x).abs() < half_thickness
            }
        }
    }

    pub fn center(&self) -> Vec3 {
        match *self {
            Geometry::Box { center, .. } | Geometry::Ellipsoid { center, .. } => center,
            Geometry::Shell { surface, .. } => surface.center(),
        }
    }

    pub fn half_extent(&self) -> Vec3 {
        match *self {
            Geometry::Box { half_extents, .. } => half_extents,
            Geometry::Ellipsoid { semi_axes, .. } => semi_axes,
            Geometry::Shell { surface, half_thickness } => {
                let e = surface.half_extent();
                [e[0] + half_thickness, e[1] + half_thickness, e[2] + half_thickness]
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        let e = self.half_extent();
        match *self {
            Geometry::Box { .. } => 2.0 * norm(e),
            _ => 2.0 * e.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Analytic volume.
    pub fn volume(&self) -> f64 {
        use std::f64::consts::PI;
        match *self {
            Geometry::Box { half_extents: e, .. } => 8.0 * e[0] * e[1] * e[2],
            Geometry::Ellipsoid { semi_axes: a, .. } => 4.0 / 3.0 * PI * a[0] * a[1] * a[2],
            Geometry::Shell { surface, half_thickness: eps } => match surface {
                Surface::Sphere { radius, .. } => {
                    4.0 / 3.0 * PI * ((radius + eps).powi(3) - (radius - eps).powi(3))
                }
                Surface::Torus { major, minor, .. } => {
                    2.0 * PI * PI * major * ((minor + eps).powi(2) - (minor - eps).powi(2))
                }
            },
        }
    }
}
