use super::{GridSpec, Layout, Loc};
use crate::error::{MagError, Result};
use crate::vec3::Vec3;

/// Fixed-order dot product. Four interleaved partial sums keep the loop
/// vectorizable while staying deterministic for a given length.
#[inline]
pub(crate) fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let o = 4 * c;
        acc[0] += a[o] * b[o];
        acc[1] += a[o + 1] * b[o + 1];
        acc[2] += a[o + 2] * b[o + 2];
        acc[3] += a[o + 3] * b[o + 3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for o in 4 * chunks..a.len() {
        s += a[o] * b[o];
    }
    s
}

macro_rules! scalar_like {
    ($name:ident, $loc:expr, $doc:literal) => {
        #[doc = $doc]
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            grid: GridSpec,
            data: Vec<f64>,
        }

        impl $name {
            pub fn zeros(grid: &GridSpec) -> Self {
                let len = grid.layout($loc).len();
                $name { grid: *grid, data: vec![0.0; len] }
            }

            /// Samples `f` at the active positions; inactive entries stay zero.
            pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(Vec3) -> f64) -> Self {
                let mut out = Self::zeros(grid);
                let lay = grid.layout($loc);
                lay.for_each_active(|idx, flat| out.data[flat] = f(grid.position($loc, idx)));
                out
            }

            pub fn layout(&self) -> Layout {
                self.grid.layout($loc)
            }

            pub fn grid(&self) -> &GridSpec {
                &self.grid
            }

            pub fn data(&self) -> &[f64] {
                &self.data
            }

            pub fn data_mut(&mut self) -> &mut [f64] {
                &mut self.data
            }

            pub fn get(&self, idx: [usize; 3]) -> f64 {
                self.data[self.layout().index(idx[0], idx[1], idx[2])]
            }

            pub fn set(&mut self, idx: [usize; 3], v: f64) {
                let lay = self.layout();
                self.data[lay.index(idx[0], idx[1], idx[2])] = v;
            }

            /// L2 inner product with cell-volume weight.
            pub fn inner(&self, other: &Self) -> Result<f64> {
                if self.grid != other.grid {
                    return Err(MagError::GridMismatch);
                }
                Ok(dot_slices(&self.data, &other.data) * self.grid.cell_volume())
            }

            pub fn norm_sq(&self) -> f64 {
                dot_slices(&self.data, &self.data) * self.grid.cell_volume()
            }

            pub fn norm(&self) -> f64 {
                self.norm_sq().sqrt()
            }

            pub fn max_abs(&self) -> f64 {
                self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
            }

            pub fn scale(&mut self, s: f64) {
                self.data.iter_mut().for_each(|v| *v *= s);
            }

            /// `self += s * other`.
            pub fn axpy(&mut self, s: f64, other: &Self) -> Result<()> {
                if self.grid != other.grid {
                    return Err(MagError::GridMismatch);
                }
                self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += s * b);
                Ok(())
            }

            pub fn is_finite(&self) -> bool {
                self.data.iter().all(|v| v.is_finite())
            }

            #[allow(dead_code)]
            pub(crate) fn from_raw(grid: &GridSpec, data: Vec<f64>) -> Self {
                debug_assert_eq!(data.len(), grid.layout($loc).len());
                $name { grid: *grid, data }
            }

        }
    };
}

macro_rules! vector_like {
    ($name:ident, $loc:expr, $doc:literal) => {
        #[doc = $doc]
        ///
        /// The three components are stored back to back in one buffer.
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name {
            grid: GridSpec,
            data: Vec<f64>,
            offs: [usize; 4],
        }

        impl $name {
            fn offsets(grid: &GridSpec) -> [usize; 4] {
                let l = [0, 1, 2].map(|d| grid.layout($loc(d)).len());
                [0, l[0], l[0] + l[1], l[0] + l[1] + l[2]]
            }

            pub fn zeros(grid: &GridSpec) -> Self {
                let offs = Self::offsets(grid);
                $name { grid: *grid, data: vec![0.0; offs[3]], offs }
            }

            /// Samples component `d` of `f` at the active positions of component `d`.
            pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(Vec3) -> Vec3) -> Self {
                let mut out = Self::zeros(grid);
                for d in 0..3 {
                    let lay = grid.layout($loc(d));
                    let comp = out.comp_mut(d);
                    lay.for_each_active(|idx, flat| comp[flat] = f(grid.position($loc(d), idx))[d]);
                }
                out
            }

            pub fn layout(&self, d: usize) -> Layout {
                self.grid.layout($loc(d))
            }

            pub fn grid(&self) -> &GridSpec {
                &self.grid
            }

            pub fn comp(&self, d: usize) -> &[f64] {
                &self.data[self.offs[d]..self.offs[d + 1]]
            }

            pub fn comp_mut(&mut self, d: usize) -> &mut [f64] {
                &mut self.data[self.offs[d]..self.offs[d + 1]]
            }

            pub fn get(&self, d: usize, idx: [usize; 3]) -> f64 {
                self.comp(d)[self.layout(d).index(idx[0], idx[1], idx[2])]
            }

            pub fn set(&mut self, d: usize, idx: [usize; 3], v: f64) {
                let flat = self.layout(d).index(idx[0], idx[1], idx[2]);
                self.comp_mut(d)[flat] = v;
            }

            /// L2 inner product with cell-volume weight.
            pub fn inner(&self, other: &Self) -> Result<f64> {
                if self.grid != other.grid {
                    return Err(MagError::GridMismatch);
                }
                Ok(dot_slices(&self.data, &other.data) * self.grid.cell_volume())
            }

            pub fn norm_sq(&self) -> f64 {
                dot_slices(&self.data, &self.data) * self.grid.cell_volume()
            }

            pub fn norm(&self) -> f64 {
                self.norm_sq().sqrt()
            }

            pub fn max_abs(&self) -> f64 {
                self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
            }

            pub fn scale(&mut self, s: f64) {
                self.data.iter_mut().for_each(|v| *v *= s);
            }

            /// `self += s * other`.
            pub fn axpy(&mut self, s: f64, other: &Self) -> Result<()> {
                if self.grid != other.grid {
                    return Err(MagError::GridMismatch);
                }
                self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += s * b);
                Ok(())
            }

            pub fn is_finite(&self) -> bool {
                self.data.iter().all(|v| v.is_finite())
            }

            /// All three components back to back.
            pub fn as_flat(&self) -> &[f64] {
                &self.data
            }

            pub fn as_flat_mut(&mut self) -> &mut [f64] {
                &mut self.data
            }

            pub fn to_flat(&self) -> Vec<f64> {
                self.data.clone()
            }

            pub fn from_flat(grid: &GridSpec, flat: &[f64]) -> Self {
                let mut out = Self::zeros(grid);
                out.data.copy_from_slice(flat);
                out
            }

            pub fn flat_len(grid: &GridSpec) -> usize {
                Self::offsets(grid)[3]
            }
        }
    };
}

scalar_like!(
    ScalarField,
    Loc::Cell,
    "Cell-centered scalar (potential `u`); the outermost cell layer is held at zero."
);
scalar_like!(NodeField, Loc::Node, "Node-centered scalar (gauge potentials, `div a`).");
vector_like!(VectorField, Loc::Face, "Face-centered (MAC) vector field: component `d` lives on faces normal to axis `d`.");
vector_like!(EdgeField, Loc::Edge, "Edge-centered vector field: component `d` lives on edges parallel to axis `d`.");
vector_like!(
    CellVectorField,
    cell_loc,
    "Cell-centered vector field; the natural home of a unit magnetization sampled per cell."
);

fn cell_loc(_d: usize) -> Loc {
    Loc::Cell
}

impl CellVectorField {
    /// Vector stored at cell `idx`.
    pub fn at(&self, idx: [usize; 3]) -> Vec3 {
        self.at_flat(self.layout(0).index(idx[0], idx[1], idx[2]))
    }

    #[inline]
    pub fn at_flat(&self, flat: usize) -> Vec3 {
        let n = self.offs[1];
        [self.data[flat], self.data[n + flat], self.data[2 * n + flat]]
    }

    #[inline]
    pub fn set_flat(&mut self, flat: usize, v: Vec3) {
        let n = self.offs[1];
        self.data[flat] = v[0];
        self.data[n + flat] = v[1];
        self.data[2 * n + flat] = v[2];
    }
}
