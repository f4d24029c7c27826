use ndarray::{ArrayView1, ArrayView2};

#[inline]
pub(crate) fn sq_euclidean(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn euclidean(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    sq_euclidean(a, b).sqrt()
}

/// Full symmetric Euclidean distance matrix, row-major `n * n`.
pub(crate) fn pairwise(x: ArrayView2<f64>) -> Vec<f64> {
    let n = x.nrows();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = euclidean(x.row(i), x.row(j));
            out[i * n + j] = d;
            out[j * n + i] = d;
        }
    }
    out
}
