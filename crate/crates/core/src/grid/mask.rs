use super::{GridSpec, Loc, ScalarField};
use crate::error::{MagError, Result};
use crate::geometry::Geometry;
use crate::vec3::Vec3;

/// Cell indicator of the magnetic body. Padding cells are always outside.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainMask {
    grid: GridSpec,
    cells: Vec<bool>,
    count: usize,
}

impl DomainMask {
    /// Mask of the cells of the unpadded region whose centers satisfy `inside`.
    pub fn from_predicate(grid: &GridSpec, mut inside: impl FnMut(Vec3) -> bool) -> Self {
        let lay = grid.layout(Loc::Cell);
        let mut cells = vec![false; lay.len()];
        let mut count = 0;
        lay.for_each_active(|idx, flat| {
            if grid.in_domain(idx) && inside(grid.cell_center(idx)) {
                cells[flat] = true;
                count += 1;
            }
        });
        DomainMask { grid: *grid, cells, count }
    }

    pub fn empty(grid: &GridSpec) -> Self {
        Self::from_predicate(grid, |_| false)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// `count * h^3`.
    pub fn volume(&self) -> f64 {
        self.count as f64 * self.grid.cell_volume()
    }

    #[inline]
    pub fn contains_flat(&self, flat: usize) -> bool {
        self.cells[flat]
    }

    pub fn contains(&self, idx: [usize; 3]) -> bool {
        let lay = self.grid.layout(Loc::Cell);
        if (0..3).any(|d| idx[d] >= lay.shape[d]) {
            return false;
        }
        self.cells[lay.index(idx[0], idx[1], idx[2])]
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    /// Flat indices of the mask cells in lexicographic order.
    pub fn flat_indices(&self) -> Vec<usize> {
        self.cells.iter().enumerate().filter(|(_, &c)| c).map(|(i, _)| i).collect()
    }

    pub fn indicator(&self) -> ScalarField {
        let data = self.cells.iter().map(|&c| if c { 1.0 } else { 0.0 }).collect();
        ScalarField::from_raw(&self.grid, data)
    }
}

/// Cell-center mask of `geom`; fails if the geometry's bounding box leaves
/// the unpadded region.
pub fn build_mask(geom: &Geometry, grid: &GridSpec) -> Result<DomainMask> {
    geom.validate()?;
    grid.validate()?;
    let c = geom.center();
    let e = geom.half_extent();
    let slack = 1e-9 * grid.h;
    for d in 0..3 {
        let lo = grid.origin[d];
        let hi = lo + grid.n[d] as f64 * grid.h;
        if c[d] - e[d] < lo - slack || c[d] + e[d] > hi + slack {
            return Err(MagError::GeometryOutsideGrid(format!(
                "axis {d}: body spans [{:.6}, {:.6}], region is [{lo:.6}, {hi:.6}]",
                c[d] - e[d],
                c[d] + e[d]
            )));
        }
    }
    Ok(DomainMask::from_predicate(grid, |x| geom.contains(x)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Surface;
    use std::f64::consts::PI;

    #[test]
    fn ball_volume_close_to_analytic() {
        let g = GridSpec::new([32; 3], 0.125, [-2.0; 3], 2).unwrap();
        let mask = build_mask(&Geometry::ball(1.0), &g).unwrap();
        let exact = 4.0 / 3.0 * PI;
        assert!((mask.volume() - exact).abs() / exact < 0.02, "{}", mask.volume());
        assert_eq!(mask.volume(), mask.count() as f64 * g.cell_volume());
        let ind = mask.indicator();
        assert!((ind.inner(&ind).unwrap() - mask.volume()).abs() < 1e-12);
    }

    #[test]
    fn aligned_box_is_exact() {
        let g = GridSpec::new([8; 3], 0.25, [-1.0; 3], 1).unwrap();
        let geom = Geometry::Box { center: [0.0; 3], half_extents: [0.5, 0.75, 1.0] };
        let mask = build_mask(&geom, &g).unwrap();
        assert_eq!(mask.count(), 4 * 6 * 8);
        assert!((mask.volume() - 1.0 * 1.5 * 2.0).abs() < 1e-12);
    }

    #[test]
    fn thin_sphere_shell_volume() {
        let g = GridSpec::new([96; 3], 2.4 / 96.0, [-1.2; 3], 1).unwrap();
        let geom = Geometry::Shell { surface: Surface::unit_sphere(), half_thickness: 0.1 };
        let mask = build_mask(&geom, &g).unwrap();
        let first_order = 4.0 * PI * 0.2;
        assert!((mask.volume() - first_order).abs() / first_order < 0.05, "{}", mask.volume());
    }

    #[test]
    fn padding_is_never_inside() {
        let g = GridSpec::new([4; 3], 1.0, [-2.0; 3], 2).unwrap();
        let geom = Geometry::Box { center: [0.0; 3], half_extents: [2.0; 3] };
        let mask = build_mask(&geom, &g).unwrap();
        assert_eq!(mask.count(), 64);
        assert!(!mask.contains([1, 3, 3]));
        assert!(mask.contains([2, 2, 2]));
    }

    #[test]
    fn oversized_geometry_is_rejected() {
        let g = GridSpec::new([8; 3], 0.125, [-0.5; 3], 2).unwrap();
        let err = build_mask(&Geometry::ball(1.0), &g).unwrap_err();
        assert!(matches!(err, MagError::GeometryOutsideGrid(_)));
    }

    #[test]
    fn tubular_condition_is_checked() {
        let g = GridSpec::new([8; 3], 0.5, [-2.0; 3], 1).unwrap();
        let geom = Geometry::Shell { surface: Surface::unit_sphere(), half_thickness: 1.5 };
        assert!(matches!(build_mask(&geom, &g), Err(MagError::TubularCondition { .. })));
    }
}
