//! Uniform staggered Cartesian grid.
//!
//! Degrees of freedom live on the four kinds of locations of a cubical
//! complex: cell centers (scalar potentials), faces (fluxes: magnetization,
//! fields), edges (vector potentials) and nodes (gauge potentials). The
//! padded grid has `n + 2 * pad` cells per axis; the outermost cell layer is
//! the homogeneous Dirichlet layer for cell scalars, so the *active* complex
//! is the one of the inner box of cells `1..=N-2`.
//!
//! Along an axis a location is either cell-type (active indices `1..=N-2`)
//! or node-type (active indices `1..=N-1`). Every operator reads inactive
//! entries as zero and writes only active entries, which makes
//! grad/div and curl/curl-transpose exact adjoints and keeps
//! `div curl = 0`, `curl grad = 0` at rounding level.

mod fields;
mod mask;
mod ops;

pub(crate) use fields::dot_slices;
pub(crate) use ops::{curl_faces_k, curl_k, div_edges_flat, sub_grad_nodes_flat};
pub use fields::{CellVectorField, EdgeField, NodeField, ScalarField, VectorField};
pub use mask::{build_mask, DomainMask};
pub use ops::{
    apply_cell_laplacian, apply_edge_laplacian, apply_node_laplacian, cells_from_faces, curl,
    curl_faces, curl_faces_into, curl_into, div, div_edges, faces_from_cells, full_gradient_norm_sq_edges,
    full_gradient_norm_sq_faces, grad, grad_nodes,
};

use serde::{Deserialize, Serialize};

use crate::error::{MagError, Result};
use crate::geometry::Geometry;
use crate::vec3::Vec3;

/// Grid geometry. `n` counts cells of the unpadded region whose lower
/// corner sits at `origin`; `pad` empty cells are added on every side.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: [usize; 3],
    pub h: f64,
    pub origin: Vec3,
    pub pad: usize,
}

impl GridSpec {
    pub fn new(n: [usize; 3], h: f64, origin: Vec3, pad: usize) -> Result<Self> {
        let g = GridSpec { n, h, origin, pad };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(MagError::Config(format!("grid spacing must be positive, got {}", self.h)));
        }
        if self.n.iter().any(|&c| c < 2) {
            return Err(MagError::Config(format!("need at least 2 cells per axis, got {:?}", self.n)));
        }
        if self.origin.iter().any(|v| !v.is_finite()) {
            return Err(MagError::Config("grid origin must be finite".into()));
        }
        Ok(())
    }

    /// Smallest grid with spacing `h` whose unpadded region contains the
    /// bounding box of `geom` (centered on it), padded so that the Dirichlet
    /// layer lies at least `pad_ratio * diameter` away from that box.
    pub fn around(geom: &Geometry, h: f64, pad_ratio: f64) -> Result<Self> {
        geom.validate()?;
        if !(pad_ratio >= 0.0) {
            return Err(MagError::Config(format!("pad_ratio must be nonnegative, got {pad_ratio}")));
        }
        let c = geom.center();
        let e = geom.half_extent();
        let mut n = [0usize; 3];
        let mut origin = [0.0; 3];
        for d in 0..3 {
            // even cell count keeps the body centered on a node
            let cells = (2.0 * e[d] / h - 1e-9).ceil().max(2.0) as usize;
            n[d] = cells + cells % 2;
            origin[d] = c[d] - 0.5 * n[d] as f64 * h;
        }
        let pad = ((pad_ratio * geom.diameter() / h + 0.5 - 1e-9).ceil() as usize).max(1);
        GridSpec::new(n, h, origin, pad)
    }

    /// Total cells per axis, padding included.
    pub fn dims(&self) -> [usize; 3] {
        [self.n[0] + 2 * self.pad, self.n[1] + 2 * self.pad, self.n[2] + 2 * self.pad]
    }

    pub fn num_cells(&self) -> usize {
        let d = self.dims();
        d[0] * d[1] * d[2]
    }

    pub fn cell_volume(&self) -> f64 {
        self.h * self.h * self.h
    }

    pub fn layout(&self, loc: Loc) -> Layout {
        Layout::new(self.dims(), loc)
    }

    /// Physical position of index `(i, j, k)` of location kind `loc`.
    pub fn position(&self, loc: Loc, idx: [usize; 3]) -> Vec3 {
        let mut x = [0.0; 3];
        for d in 0..3 {
            let off = if loc.node_type(d) { 0.0 } else { 0.5 };
            x[d] = self.origin[d] + (idx[d] as f64 - self.pad as f64 + off) * self.h;
        }
        x
    }

    pub fn cell_center(&self, idx: [usize; 3]) -> Vec3 {
        self.position(Loc::Cell, idx)
    }

    /// Whether cell `idx` belongs to the unpadded region.
    pub fn in_domain(&self, idx: [usize; 3]) -> bool {
        (0..3).all(|d| idx[d] >= self.pad && idx[d] < self.pad + self.n[d])
    }

    pub fn same_as(&self, other: &GridSpec) -> bool {
        self == other
    }
}

/// Location kind of a degree of freedom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Loc {
    Cell,
    Node,
    Face(usize),
    Edge(usize),
}

impl Loc {
    /// True if the location sits on grid planes (not cell midplanes) along `axis`.
    pub fn node_type(self, axis: usize) -> bool {
        match self {
            Loc::Cell => false,
            Loc::Node => true,
            Loc::Face(a) => a == axis,
            Loc::Edge(a) => a != axis,
        }
    }
}

/// Array shape and active index box of one location kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Layout {
    pub shape: [usize; 3],
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl Layout {
    pub fn new(dims: [usize; 3], loc: Loc) -> Self {
        let mut shape = [0; 3];
        let mut hi = [0; 3];
        for d in 0..3 {
            let nt = loc.node_type(d);
            shape[d] = dims[d] + nt as usize;
            hi[d] = if nt { dims[d] - 1 } else { dims[d] - 2 };
        }
        Layout { shape, lo: [1; 3], hi }
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.shape[1] + j) * self.shape[2] + k
    }

    #[inline]
    pub fn strides(&self) -> [usize; 3] {
        [self.shape[1] * self.shape[2], self.shape[2], 1]
    }

    pub fn is_active(&self, idx: [usize; 3]) -> bool {
        (0..3).all(|d| idx[d] >= self.lo[d] && idx[d] <= self.hi[d])
    }

    pub fn unindex(&self, flat: usize) -> [usize; 3] {
        let k = flat % self.shape[2];
        let j = (flat / self.shape[2]) % self.shape[1];
        let i = flat / (self.shape[1] * self.shape[2]);
        [i, j, k]
    }

    /// Calls `f([i, j, k], flat_index)` for every active entry in
    /// lexicographic order.
    #[inline]
    pub fn for_each_active(&self, mut f: impl FnMut([usize; 3], usize)) {
        for i in self.lo[0]..=self.hi[0] {
            for j in self.lo[1]..=self.hi[1] {
                let base = self.index(i, j, 0);
                for k in self.lo[2]..=self.hi[2] {
                    f([i, j, k], base + k);
                }
            }
        }
    }

    pub fn active_count(&self) -> usize {
        (0..3).map(|d| self.hi[d] + 1 - self.lo[d]).product()
    }
}
