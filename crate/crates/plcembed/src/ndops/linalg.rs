//! Dense matrix products on flat slices, in the three orientations the layer
//! backwards need. All variants accumulate (`out +=`), matching gradient
//! accumulation semantics; callers zero `out` when they want a plain product.
//!
//! Loop orders are chosen so the innermost loop runs over contiguous memory.

use crate::scalar::Scalar;

/// out[m×n] += a[m×k] · b[k×n]
pub fn matmul_nn<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let out_row = &mut out[i * n..(i + 1) * n];
        for (kk, &a_ik) in a_row.iter().enumerate() {
            let b_row = &b[kk * n..(kk + 1) * n];
            for j in 0..n {
                out_row[j] += a_ik * b_row[j];
            }
        }
    }
}

/// out[m×n] += aᵀ · b, with a[k×m], b[k×n]
pub fn matmul_tn<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), k * m);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for kk in 0..k {
        let a_row = &a[kk * m..(kk + 1) * m];
        let b_row = &b[kk * n..(kk + 1) * n];
        for (i, &a_ki) in a_row.iter().enumerate() {
            let out_row = &mut out[i * n..(i + 1) * n];
            for j in 0..n {
                out_row[j] += a_ki * b_row[j];
            }
        }
    }
}

/// out[m×n] += a · bᵀ, with a[m×k], b[n×k]
pub fn matmul_nt<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize, out: &mut [T]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(out.len(), m * n);
    for i in 0..m {
        let a_row = &a[i * k..(i + 1) * k];
        let out_row = &mut out[i * n..(i + 1) * n];
        for j in 0..n {
            let b_row = &b[j * k..(j + 1) * k];
            let mut acc = T::zero();
            for kk in 0..k {
                acc += a_row[kk] * b_row[kk];
            }
            out_row[j] += acc;
        }
    }
}

/// y += alpha · x
pub fn axpy<T: Scalar>(alpha: T, x: &[T], y: &mut [T]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x.iter()) {
        *yi += alpha * xi;
    }
}

/// Dot product of two equal-length slices.
pub fn dot<T: Scalar>(x: &[T], y: &[T]) -> T {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y.iter()).map(|(&a, &b)| a * b).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use rand::Rng;

    fn naive(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                for kk in 0..k {
                    out[i * n + j] += a[i * k + kk] * b[kk * n + j];
                }
            }
        }
        out
    }

    fn transpose(a: &[f64], rows: usize, cols: usize) -> Vec<f64> {
        let mut t = vec![0.0; a.len()];
        for i in 0..rows {
            for j in 0..cols {
                t[j * rows + i] = a[i * cols + j];
            }
        }
        t
    }

    #[test]
    fn all_orientations_match_the_naive_product() {
        let mut rng = substream(11, "linalg-test", 0);
        for case in 0..20u64 {
            let m = 1 + (case as usize % 5);
            let k = 1 + (case as usize % 7);
            let n = 1 + (case as usize % 4);
            let a: Vec<f64> = (0..m * k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let b: Vec<f64> = (0..k * n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let want = naive(&a, &b, m, k, n);

            let mut got = vec![0.0; m * n];
            matmul_nn(&a, &b, m, k, n, &mut got);
            assert_eq!(got, want);

            let mut got = vec![0.0; m * n];
            matmul_tn(&transpose(&a, m, k), &b, m, k, n, &mut got);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12);
            }

            let mut got = vec![0.0; m * n];
            matmul_nt(&a, &transpose(&b, k, n), m, k, n, &mut got);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn products_accumulate_instead_of_overwriting() {
        let a = [1.0, 2.0];
        let b = [3.0, 4.0];
        let mut out = vec![10.0];
        matmul_nn(&a, &b, 1, 2, 1, &mut out);
        assert_eq!(out, vec![10.0 + 11.0]);
    }
}
