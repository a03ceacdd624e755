//! Small dense complex-matrix helpers shared across modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;

/// Horizontal concatenation. Panics on row mismatch (callers validate).
pub fn hstack(parts: &[&CMat]) -> CMat {
    assert!(!parts.is_empty());
    let rows = parts[0].nrows();
    let cols: usize = parts.iter().map(|p| p.ncols()).sum();
    let mut out = CMat::zeros(rows, cols);
    let mut c = 0;
    for p in parts {
        assert_eq!(p.nrows(), rows, "hstack: row mismatch");
        out.view_mut((0, c), (rows, p.ncols())).copy_from(*p);
        c += p.ncols();
    }
    out
}

/// Singular values in descending order.
pub fn singular_values(a: &CMat) -> Vec<f64> {
    let mut sv: Vec<f64> = a.clone().svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Orthonormal basis of the column space, keeping directions with singular
/// value above `max(r,c) * sigma_max * eps`.
pub fn column_space_basis(a: &CMat) -> CMat {
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("svd requested u");
    let sv = &svd.singular_values;
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    let cut = smax * (a.nrows().max(a.ncols()) as f64) * f64::EPSILON;
    let keep: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] > cut).collect();
    let mut basis = CMat::zeros(a.nrows(), keep.len());
    for (j, &i) in keep.iter().enumerate() {
        basis.set_column(j, &u.column(i));
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hstack_preserves_blocks() {
        let a = CMat::from_element(2, 1, Complex64::new(1.0, 0.0));
        let b = CMat::from_element(2, 2, Complex64::new(0.0, 1.0));
        let s = hstack(&[&a, &b]);
        assert_eq!(s.nrows(), 2);
        assert_eq!(s.ncols(), 3);
        assert_eq!(s[(0, 0)], Complex64::new(1.0, 0.0));
        assert_eq!(s[(1, 2)], Complex64::new(0.0, 1.0));
    }

    #[test]
    fn basis_of_zero_matrix_is_empty() {
        let z = CMat::zeros(3, 2);
        assert_eq!(column_space_basis(&z).ncols(), 0);
    }
}
