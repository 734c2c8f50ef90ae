//! Discrete grad/div/curl on the staggered complex and the fused
//! Laplacians used by the iterative solvers.
//!
//! Kernels work on flat buffers (vector fields: three component blocks back
//! to back) and sweep contiguous k-rows of the active box so the inner loops
//! vectorize. All positions read by a kernel exist in the padded arrays; the
//! ones outside the active box hold zeros.

use super::{CellVectorField, EdgeField, GridSpec, Layout, Loc, NodeField, ScalarField, VectorField};

const CYCLIC: [(usize, usize, usize); 3] = [(0, 1, 2), (1, 2, 0), (2, 0, 1)];

/// Calls `f(i, j, start, len)` for each active k-row of `lay`; `start` is
/// the flat index of the row's first active entry.
#[inline]
fn for_rows(lay: &Layout, mut f: impl FnMut(usize, usize, usize, usize)) {
    let len = lay.hi[2] + 1 - lay.lo[2];
    for i in lay.lo[0]..=lay.hi[0] {
        for j in lay.lo[1]..=lay.hi[1] {
            f(i, j, lay.index(i, j, lay.lo[2]), len);
        }
    }
}

/// Visits every index in the box `lo..=hi` of `lay`.
#[inline]
fn for_each_in(lay: &Layout, lo: [usize; 3], hi: [usize; 3], mut f: impl FnMut([usize; 3], usize)) {
    if (0..3).any(|d| lo[d] > hi[d]) {
        return;
    }
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            let base = lay.index(i, j, 0);
            for k in lo[2]..=hi[2] {
                f([i, j, k], base + k);
            }
        }
    }
}

fn layouts(g: &GridSpec, loc: fn(usize) -> Loc) -> ([Layout; 3], [usize; 3]) {
    let l = [0, 1, 2].map(|d| g.layout(loc(d)));
    (l, [0, l[0].len(), l[0].len() + l[1].len()])
}

/// `out` (faces) = grad `u` (cells).
pub(crate) fn grad_k(g: &GridSpec, u: &[f64], out: &mut [f64]) {
    let inv_h = 1.0 / g.h;
    let cl = g.layout(Loc::Cell);
    let cs = cl.strides();
    let (fl, fo) = layouts(g, Loc::Face);
    for d in 0..3 {
        for_rows(&fl[d], |i, j, f0, len| {
            let c0 = cl.index(i, j, 1);
            let hi = &u[c0..c0 + len];
            let lo = &u[c0 - cs[d]..c0 - cs[d] + len];
            let dst = &mut out[fo[d] + f0..fo[d] + f0 + len];
            for t in 0..len {
                dst[t] = (hi[t] - lo[t]) * inv_h;
            }
        });
    }
}

/// `out` (cells) = div `v` (faces).
pub(crate) fn div_k(g: &GridSpec, v: &[f64], out: &mut [f64]) {
    let inv_h = 1.0 / g.h;
    let cl = g.layout(Loc::Cell);
    let (fl, fo) = layouts(g, Loc::Face);
    for_rows(&cl, |i, j, c0, len| {
        let dst = &mut out[c0..c0 + len];
        dst.iter_mut().for_each(|x| *x = 0.0);
        for d in 0..3 {
            let f = fo[d] + fl[d].index(i, j, 1);
            let sd = fl[d].strides()[d];
            let lo = &v[f..f + len];
            let hi = &v[f + sd..f + sd + len];
            for t in 0..len {
                dst[t] += hi[t] - lo[t];
            }
        }
        dst.iter_mut().for_each(|x| *x *= inv_h);
    });
}

/// `out` (faces) = curl `a` (edges), forward differences.
pub(crate) fn curl_k(g: &GridSpec, a: &[f64], out: &mut [f64]) {
    let inv_h = 1.0 / g.h;
    let (el, eo) = layouts(g, Loc::Edge);
    let (fl, fo) = layouts(g, Loc::Face);
    for &(ca, cb, cc) in &CYCLIC {
        let sb_c = el[cc].strides()[cb];
        let sc_b = el[cb].strides()[cc];
        for_rows(&fl[ca], |i, j, f0, len| {
            let pc = eo[cc] + el[cc].index(i, j, 1);
            let pb = eo[cb] + el[cb].index(i, j, 1);
            let c_hi = &a[pc + sb_c..pc + sb_c + len];
            let c_lo = &a[pc..pc + len];
            let b_hi = &a[pb + sc_b..pb + sc_b + len];
            let b_lo = &a[pb..pb + len];
            let dst = &mut out[fo[ca] + f0..fo[ca] + f0 + len];
            for t in 0..len {
                dst[t] = (c_hi[t] - c_lo[t] - b_hi[t] + b_lo[t]) * inv_h;
            }
        });
    }
}

/// `out` (edges) = curl^T `v` (faces), backward differences.
pub(crate) fn curl_faces_k(g: &GridSpec, v: &[f64], out: &mut [f64]) {
    let inv_h = 1.0 / g.h;
    let (el, eo) = layouts(g, Loc::Edge);
    let (fl, fo) = layouts(g, Loc::Face);
    for &(ca, cb, cc) in &CYCLIC {
        let sa_b = fl[cb].strides()[ca];
        let sb_a = fl[ca].strides()[cb];
        for_rows(&el[cc], |i, j, e0, len| {
            let pb = fo[cb] + fl[cb].index(i, j, 1);
            let pa = fo[ca] + fl[ca].index(i, j, 1);
            let b_hi = &v[pb..pb + len];
            let b_lo = &v[pb - sa_b..pb - sa_b + len];
            let a_hi = &v[pa..pa + len];
            let a_lo = &v[pa - sb_a..pa - sb_a + len];
            let dst = &mut out[eo[cc] + e0..eo[cc] + e0 + len];
            for t in 0..len {
                dst[t] = (b_hi[t] - b_lo[t] - a_hi[t] + a_lo[t]) * inv_h;
            }
        });
    }
}

/// `out` (edges) += `s` * grad `phi` (nodes).
pub(crate) fn grad_nodes_acc(g: &GridSpec, phi: &[f64], out: &mut [f64], s: f64) {
    let f = s / g.h;
    let nl = g.layout(Loc::Node);
    let ns = nl.strides();
    let (el, eo) = layouts(g, Loc::Edge);
    for d in 0..3 {
        for_rows(&el[d], |i, j, e0, len| {
            let p = nl.index(i, j, 1);
            let lo = &phi[p..p + len];
            let hi = &phi[p + ns[d]..p + ns[d] + len];
            let dst = &mut out[eo[d] + e0..eo[d] + e0 + len];
            for t in 0..len {
                dst[t] += f * (hi[t] - lo[t]);
            }
        });
    }
}

/// `out` (nodes) = div `a` (edges).
pub(crate) fn div_edges_k(g: &GridSpec, a: &[f64], out: &mut [f64]) {
    let inv_h = 1.0 / g.h;
    let nl = g.layout(Loc::Node);
    let (el, eo) = layouts(g, Loc::Edge);
    for_rows(&nl, |i, j, n0, len| {
        let dst = &mut out[n0..n0 + len];
        dst.iter_mut().for_each(|x| *x = 0.0);
        for d in 0..3 {
            let p = eo[d] + el[d].index(i, j, 1);
            let sd = el[d].strides()[d];
            let hi = &a[p..p + len];
            let lo = &a[p - sd..p - sd + len];
            for t in 0..len {
                dst[t] += hi[t] - lo[t];
            }
        }
        dst.iter_mut().for_each(|x| *x *= inv_h);
    });
}

/// Face gradient of a cell scalar; cells outside the active box read as zero.
pub fn grad(u: &ScalarField) -> VectorField {
    let mut out = VectorField::zeros(u.grid());
    grad_k(u.grid(), u.data(), out.as_flat_mut());
    out
}

/// Cell divergence of a face field (active cells only).
pub fn div(v: &VectorField) -> ScalarField {
    let mut out = ScalarField::zeros(v.grid());
    div_k(v.grid(), v.as_flat(), out.data_mut());
    out
}

/// Curl from edges to faces: `(curl a)_a = d_b a_c - d_c a_b` with forward differences.
pub fn curl(a: &EdgeField) -> VectorField {
    let mut out = VectorField::zeros(a.grid());
    curl_into(a, &mut out);
    out
}

/// [`curl`] into a preallocated field (only active entries are written).
pub fn curl_into(a: &EdgeField, out: &mut VectorField) {
    curl_k(a.grid(), a.as_flat(), out.as_flat_mut());
}

/// Curl from faces to edges; the exact transpose of [`curl`] (backward differences).
pub fn curl_faces(v: &VectorField) -> EdgeField {
    let mut out = EdgeField::zeros(v.grid());
    curl_faces_into(v, &mut out);
    out
}

/// [`curl_faces`] into a preallocated field (only active entries are written).
pub fn curl_faces_into(v: &VectorField, out: &mut EdgeField) {
    curl_faces_k(v.grid(), v.as_flat(), out.as_flat_mut());
}

/// Edge gradient of a node scalar.
pub fn grad_nodes(phi: &NodeField) -> EdgeField {
    let mut out = EdgeField::zeros(phi.grid());
    grad_nodes_acc(phi.grid(), phi.data(), out.as_flat_mut(), 1.0);
    out
}

/// Node divergence of an edge field; equals `-grad_nodes^T`.
pub fn div_edges(a: &EdgeField) -> NodeField {
    let mut out = NodeField::zeros(a.grid());
    div_edges_k(a.grid(), a.as_flat(), out.data_mut());
    out
}

/// Averages cell vectors onto faces: face value = mean of its two cells.
pub fn faces_from_cells(m: &CellVectorField) -> VectorField {
    let g = *m.grid();
    let cl = g.layout(Loc::Cell);
    let cs = cl.strides();
    let (fl, _) = layouts(&g, Loc::Face);
    let mut out = VectorField::zeros(&g);
    for d in 0..3 {
        let src = m.comp(d);
        let dst_all = out.comp_mut(d);
        for_rows(&fl[d], |i, j, f0, len| {
            let c = cl.index(i, j, 1);
            let hi = &src[c..c + len];
            let lo = &src[c - cs[d]..c - cs[d] + len];
            let dst = &mut dst_all[f0..f0 + len];
            for t in 0..len {
                dst[t] = 0.5 * (hi[t] + lo[t]);
            }
        });
    }
    out
}

/// Transpose of [`faces_from_cells`] restricted to active cells.
pub fn cells_from_faces(v: &VectorField) -> CellVectorField {
    let g = *v.grid();
    let cl = g.layout(Loc::Cell);
    let (fl, _) = layouts(&g, Loc::Face);
    let mut out = CellVectorField::zeros(&g);
    for d in 0..3 {
        let sd = fl[d].strides()[d];
        let src = v.comp(d);
        let dst_all = out.comp_mut(d);
        for_rows(&cl, |i, j, c0, len| {
            let f = fl[d].index(i, j, 1);
            let lo = &src[f..f + len];
            let hi = &src[f + sd..f + sd + len];
            let dst = &mut dst_all[c0..c0 + len];
            for t in 0..len {
                dst[t] = 0.5 * (lo[t] + hi[t]);
            }
        });
    }
    out
}

/// `a -= grad_nodes(phi)` on a flat edge buffer.
pub(crate) fn sub_grad_nodes_flat(grid: &GridSpec, phi: &[f64], a: &mut [f64]) {
    grad_nodes_acc(grid, phi, a, -1.0);
}

/// Node divergence of an edge field stored flat.
pub(crate) fn div_edges_flat(grid: &GridSpec, a: &[f64], out: &mut [f64]) {
    div_edges_k(grid, a, out);
}

/// `out = -div(grad u)` on active cells (homogeneous Dirichlet layer).
pub fn apply_cell_laplacian(grid: &GridSpec, u: &[f64], out: &mut [f64]) {
    let lay = grid.layout(Loc::Cell);
    let [sx, sy, _] = lay.strides();
    let inv_h2 = 1.0 / (grid.h * grid.h);
    for_rows(&lay, |_, _, c0, len| {
        let c = &u[c0..c0 + len];
        let km = &u[c0 - 1..c0 - 1 + len];
        let kp = &u[c0 + 1..c0 + 1 + len];
        let jm = &u[c0 - sy..c0 - sy + len];
        let jp = &u[c0 + sy..c0 + sy + len];
        let im = &u[c0 - sx..c0 - sx + len];
        let ip = &u[c0 + sx..c0 + sx + len];
        let dst = &mut out[c0..c0 + len];
        for t in 0..len {
            dst[t] = (6.0 * c[t] - km[t] - kp[t] - jm[t] - jp[t] - im[t] - ip[t]) * inv_h2;
        }
    });
}

/// Row kernel shared by the edge and node Laplacians. The four in-plane
/// neighbour rows are given as start offsets; a missing (Neumann) neighbour
/// is passed as the row itself so its difference vanishes. Along k the
/// closure is Dirichlet (zero ghosts) or Neumann.
#[inline]
fn laplacian_row(x: &[f64], p0: usize, len: usize, nb: [usize; 4], k_dirichlet: bool, scale: f64, dst: &mut [f64]) {
    let c = &x[p0..p0 + len];
    let n0 = &x[nb[0]..nb[0] + len];
    let n1 = &x[nb[1]..nb[1] + len];
    let n2 = &x[nb[2]..nb[2] + len];
    let n3 = &x[nb[3]..nb[3] + len];
    let km = &x[p0 - 1..p0 - 1 + len];
    let kp = &x[p0 + 1..p0 + 1 + len];
    let dst = &mut dst[..len];
    for t in 0..len {
        dst[t] = (6.0 * c[t] - n0[t] - n1[t] - n2[t] - n3[t] - km[t] - kp[t]) * scale;
    }
    if !k_dirichlet {
        dst[0] -= (c[0] - km[0]) * scale;
        dst[len - 1] -= (c[len - 1] - kp[len - 1]) * scale;
    }
}

/// Start offsets of the in-plane (axes 0 and 1) neighbour rows of row
/// `(i, j)`: along `dirichlet_axis` both neighbours always count, along other
/// axes a neighbour outside the active box is replaced by the row itself.
fn row_neighbours(lay: &Layout, i: usize, j: usize, p0: usize, dirichlet_axis: Option<usize>) -> [usize; 4] {
    let st = lay.strides();
    let idx = [i, j];
    let mut nb = [p0; 4];
    for b in 0..2 {
        let dir = dirichlet_axis == Some(b);
        if dir || idx[b] > lay.lo[b] {
            nb[2 * b] = p0 - st[b];
        }
        if dir || idx[b] < lay.hi[b] {
            nb[2 * b + 1] = p0 + st[b];
        }
    }
    nb
}

/// `out = D^T D a` for a flat edge field: per component a Dirichlet second
/// difference along its own axis and Neumann second differences across it.
/// Equals `curl^T curl + grad_nodes grad_nodes^T`.
pub fn apply_edge_laplacian(grid: &GridSpec, a: &[f64], out: &mut [f64]) {
    let inv_h2 = 1.0 / (grid.h * grid.h);
    let (el, eo) = layouts(grid, Loc::Edge);
    for d in 0..3 {
        let len_d = el[d].len();
        let x = &a[eo[d]..eo[d] + len_d];
        let y = &mut out[eo[d]..eo[d] + len_d];
        for_rows(&el[d], |i, j, p0, len| {
            let nb = row_neighbours(&el[d], i, j, p0, Some(d));
            laplacian_row(x, p0, len, nb, d == 2, inv_h2, &mut y[p0..]);
        });
    }
}

/// `out = grad_nodes^T grad_nodes phi` (pure Neumann node Laplacian).
pub fn apply_node_laplacian(grid: &GridSpec, phi: &[f64], out: &mut [f64]) {
    let lay = grid.layout(Loc::Node);
    let inv_h2 = 1.0 / (grid.h * grid.h);
    for_rows(&lay, |i, j, p0, len| {
        let nb = row_neighbours(&lay, i, j, p0, None);
        laplacian_row(phi, p0, len, nb, false, inv_h2, &mut out[p0..]);
    });
}

/// `||D a||^2` for an edge field, with the same boundary closure as
/// [`apply_edge_laplacian`].
pub fn full_gradient_norm_sq_edges(a: &EdgeField) -> f64 {
    let g = *a.grid();
    let dims = g.dims();
    let mut total = 0.0;
    for d in 0..3 {
        let lay = g.layout(Loc::Edge(d));
        let st = lay.strides();
        let x = a.comp(d);
        for b in 0..3 {
            let (mut lo, mut hi) = (lay.lo, lay.hi);
            let mut acc = 0.0;
            if b == d {
                // differences centered on nodes 1..=N-1 along the edge axis
                lo[b] = 1;
                hi[b] = dims[b] - 1;
                for_each_in(&lay, lo, hi, |_, p| {
                    let v = x[p] - x[p - st[b]];
                    acc += v * v;
                });
            } else {
                lo[b] = 1;
                hi[b] = dims[b] - 2;
                for_each_in(&lay, lo, hi, |_, p| {
                    let v = x[p + st[b]] - x[p];
                    acc += v * v;
                });
            }
            total += acc;
        }
    }
    total * g.h
}

/// `||D v||^2` for a face field: normal differences at cells, tangential
/// differences at edge positions with zero ghosts.
pub fn full_gradient_norm_sq_faces(v: &VectorField) -> f64 {
    let g = *v.grid();
    let dims = g.dims();
    let mut total = 0.0;
    for d in 0..3 {
        let lay = g.layout(Loc::Face(d));
        let st = lay.strides();
        let x = v.comp(d);
        for b in 0..3 {
            let (mut lo, mut hi) = (lay.lo, lay.hi);
            let mut acc = 0.0;
            if b == d {
                lo[b] = 1;
                hi[b] = dims[b] - 2;
                for_each_in(&lay, lo, hi, |_, p| {
                    let w = x[p + st[b]] - x[p];
                    acc += w * w;
                });
            } else {
                lo[b] = 1;
                hi[b] = dims[b] - 1;
                for_each_in(&lay, lo, hi, |_, p| {
                    let w = x[p] - x[p - st[b]];
                    acc += w * w;
                });
            }
            total += acc;
        }
    }
    total * g.h
}
