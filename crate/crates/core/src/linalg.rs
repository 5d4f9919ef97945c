//! Dense linear-algebra helpers shared by the analysis routines.
//!
//! Everything here works on small dense matrices (problem dimensions are
//! tens, not thousands). Subspaces are represented by matrices whose columns
//! form an orthonormal basis; the empty subspace is a `dim x 0` matrix.

use nalgebra::{DMatrix, DVector};

/// Right null space of `m`, returned as orthonormal columns.
///
/// Singular values below `tol * max(1, sigma_max)` are treated as zero.
pub(crate) fn null_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let ncols = m.ncols();
    if ncols == 0 {
        return DMatrix::zeros(0, 0);
    }
    // Pad with zero rows so the thin SVD carries all right singular vectors.
    let work = if m.nrows() >= ncols {
        m.clone()
    } else {
        let mut padded = DMatrix::zeros(ncols, ncols);
        padded.view_mut((0, 0), (m.nrows(), ncols)).copy_from(m);
        padded
    };
    let svd = work.svd(false, true);
    let v_t = svd.v_t.expect("SVD with v_t requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cut = tol * sigma_max.max(1.0);
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for i in 0..v_t.nrows() {
        let s = if i < svd.singular_values.len() {
            svd.singular_values[i]
        } else {
            0.0
        };
        if s <= cut {
            cols.push(v_t.row(i).transpose());
        }
    }
    basis_from_columns(ncols, &cols)
}

/// Orthonormalize a set of column vectors (modified Gram-Schmidt).
pub(crate) fn basis_from_columns(dim: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    let mut kept: Vec<DVector<f64>> = Vec::new();
    for c in cols {
        let mut v = c.clone();
        for b in &kept {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let n = v.norm();
        if n > 1e-12 {
            kept.push(v / n);
        }
    }
    let mut out = DMatrix::zeros(dim, kept.len());
    for (j, b) in kept.iter().enumerate() {
        out.set_column(j, b);
    }
    out
}

/// Orthogonal projector `B B^T` onto the span of the (orthonormal) basis.
pub(crate) fn projector_onto(basis: &DMatrix<f64>) -> DMatrix<f64> {
    if basis.ncols() == 0 {
        return DMatrix::zeros(basis.nrows(), basis.nrows());
    }
    basis * basis.transpose()
}

/// Intersection of two subspaces given by orthonormal bases.
pub(crate) fn intersect(a: &DMatrix<f64>, b: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let dim = a.nrows();
    let pa = DMatrix::identity(dim, dim) - projector_onto(a);
    let pb = DMatrix::identity(dim, dim) - projector_onto(b);
    let mut stacked = DMatrix::zeros(2 * dim, dim);
    stacked.view_mut((0, 0), (dim, dim)).copy_from(&pa);
    stacked.view_mut((dim, 0), (dim, dim)).copy_from(&pb);
    null_space(&stacked, tol)
}

/// Maximal `m`-invariant subspace contained in the span of `start`.
///
/// Iterates W_{k+1} = W_k ∩ m^{-1} W_k until the dimension is stationary.
/// This is the unobservable-subspace construction written on subspaces.
pub(crate) fn invariant_subspace_within(
    start: &DMatrix<f64>,
    m: &DMatrix<f64>,
    tol: f64,
) -> DMatrix<f64> {
    let dim = m.nrows();
    let mut w = start.clone();
    loop {
        if w.ncols() == 0 {
            return w;
        }
        let p_out = DMatrix::identity(dim, dim) - projector_onto(&w);
        let mut stacked = DMatrix::zeros(2 * dim, dim);
        stacked.view_mut((0, 0), (dim, dim)).copy_from(&p_out);
        stacked.view_mut((dim, 0), (dim, dim)).copy_from(&(&p_out * m));
        let next = null_space(&stacked, tol);
        if next.ncols() == w.ncols() {
            return next;
        }
        w = next;
    }
}

/// Restriction `B^T M B` of `m` to the subspace spanned by `basis`.
pub(crate) fn restrict(m: &DMatrix<f64>, basis: &DMatrix<f64>) -> DMatrix<f64> {
    basis.transpose() * m * basis
}

pub(crate) fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 {
        return 0.0;
    }
    m.clone()
        .complex_eigenvalues()
        .iter()
        .map(|c| c.norm())
        .fold(0.0, f64::max)
}

/// Complex eigenvalues sorted by (re, im) for deterministic reports.
pub(crate) fn sorted_eigenvalues(m: &DMatrix<f64>) -> Vec<(f64, f64)> {
    let mut eig: Vec<(f64, f64)> = m
        .clone()
        .complex_eigenvalues()
        .iter()
        .map(|c| (c.re, c.im))
        .collect();
    eig.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap()
            .then(a.1.partial_cmp(&b.1).unwrap())
    });
    eig
}

/// An invariant rotation plane of a skew-symmetric matrix.
///
/// `v`, `u` are orthonormal with `M v = omega u` and `M u = -omega v`, so
/// `exp(tM)` acts on the plane as a rotation at angular rate `omega`.
#[derive(Debug, Clone)]
pub(crate) struct SkewPlane {
    pub omega: f64,
    pub v: DVector<f64>,
    pub u: DVector<f64>,
}

/// Decompose a skew-symmetric matrix into rotation planes (omega > tol).
///
/// Eigenvectors of the symmetric PSD matrix M^T M with eigenvalue omega^2
/// span the invariant planes; each plane is peeled off greedily so repeated
/// frequencies yield orthogonal planes.
pub(crate) fn skew_planes(m: &DMatrix<f64>, tol: f64) -> Vec<SkewPlane> {
    let dim = m.nrows();
    if dim == 0 {
        return Vec::new();
    }
    let gram = m.transpose() * m;
    let sym = nalgebra::SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&i, &j| {
        sym.eigenvalues[j]
            .partial_cmp(&sym.eigenvalues[i])
            .unwrap()
            .then(i.cmp(&j))
    });
    let mut planes: Vec<SkewPlane> = Vec::new();
    for idx in order {
        let lam = sym.eigenvalues[idx];
        if lam <= tol * tol {
            continue;
        }
        let omega = lam.sqrt();
        let mut v: DVector<f64> = sym.eigenvectors.column(idx).into();
        // Remove components already captured by chosen planes.
        for p in &planes {
            let a = p.v.dot(&v);
            let b = p.u.dot(&v);
            v -= &p.v * a + &p.u * b;
        }
        let n = v.norm();
        if n < 0.5 {
            continue; // the pair partner of an already chosen plane
        }
        v /= n;
        let u = m * &v / omega;
        planes.push(SkewPlane { omega, v, u });
    }
    planes
}

/// Apply `exp(t M) w` for skew-symmetric `M` via its plane decomposition.
///
/// Exact up to the eigendecomposition: the kernel component is fixed and each
/// plane component rotates rigidly, so the map is an isometry by construction.
pub(crate) fn skew_exp_apply(planes: &[SkewPlane], t: f64, w: &DVector<f64>) -> DVector<f64> {
    let mut fixed = w.clone();
    let mut rotated = DVector::zeros(w.len());
    for p in planes {
        let cv = p.v.dot(w);
        let cu = p.u.dot(w);
        fixed -= &p.v * cv + &p.u * cu;
        let (s, c) = (p.omega * t).sin_cos();
        rotated += &p.v * (cv * c - cu * s) + &p.u * (cv * s + cu * c);
    }
    fixed + rotated
}

/// Taylor-series matrix exponential applied to a vector. Test oracle only;
/// kept here so integration tests can reach it.
pub fn series_exp_apply(m: &DMatrix<f64>, t: f64, w: &DVector<f64>) -> DVector<f64> {
    let mut term = w.clone();
    let mut sum = w.clone();
    for k in 1..200 {
        term = m * &term * (t / k as f64);
        sum += &term;
        if term.norm() < 1e-18 * (1.0 + sum.norm()) {
            break;
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rot3() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -1.0, 0.0])
    }

    #[test]
    fn null_space_of_rotation_block() {
        let ns = null_space(&rot3(), 1e-10);
        assert_eq!(ns.ncols(), 1);
        assert!((ns.column(0)[0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_handles_wide_matrices() {
        // 1x3 row: kernel is 2-dimensional.
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.ncols(), 2);
        for j in 0..2 {
            let col: DVector<f64> = ns.column(j).into();
            assert!((&m * &col).norm() < 1e-10);
        }
    }

    #[test]
    fn invariant_subspace_iteration_empties() {
        // Example-like: start = span{e1, e2}, M maps e2 -> e0 + e1, so the
        // fixed point of the iteration is trivial.
        let m = DMatrix::from_row_slice(
            3,
            3,
            &[0.0, 0.0, 1.0, 0.0, 0.0, 1.0, -1.0, -1.0, 0.0],
        );
        let start = basis_from_columns(
            3,
            &[
                DVector::from_row_slice(&[0.0, 1.0, 0.0]),
                DVector::from_row_slice(&[0.0, 0.0, 1.0]),
            ],
        );
        let w = invariant_subspace_within(&start, &m, 1e-10);
        assert_eq!(w.ncols(), 0);
    }

    #[test]
    fn skew_planes_recover_rotation() {
        let planes = skew_planes(&rot3(), 1e-10);
        assert_eq!(planes.len(), 1);
        assert!((planes[0].omega - 1.0).abs() < 1e-12);
        // exp(tM) matches the series oracle.
        let w = DVector::from_row_slice(&[0.3, 1.0, -0.5]);
        let a = skew_exp_apply(&planes, 1.0, &w);
        let b = series_exp_apply(&rot3(), 1.0, &w);
        assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn skew_exp_is_isometry() {
        let planes = skew_planes(&rot3(), 1e-10);
        let w = DVector::from_row_slice(&[0.1, -2.0, 0.7]);
        for k in 0..10 {
            let t = 0.37 * k as f64;
            assert!((skew_exp_apply(&planes, t, &w).norm() - w.norm()).abs() < 1e-12);
        }
    }
}
