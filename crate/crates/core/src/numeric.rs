//! Small numerical helpers shared by the estimators.

/// Neumaier-compensated running sum. Additions happen in call order, so a
/// fixed iteration order gives bit-stable totals.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.compensation
    }
}

pub fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = CompensatedSum::new();
    for v in values {
        acc.add(v);
    }
    acc.total()
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    compensated_sum(values.iter().copied()) / values.len() as f64
}

/// Row-major `c[m×n] = a[m×k] · b[n×k]ᵀ`.
pub fn matmul_transposed(a: &[f64], b: &[f64], m: usize, k: usize, n: usize, c: &mut [f64]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), n * k);
    debug_assert_eq!(c.len(), m * n);
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        c.fill(0.0);
        return;
    }
    // SAFETY: the slices are exactly m×k, n×k and m×n; strides describe
    // row-major `a`, `b` read as its transpose, and row-major `c`.
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            1,
            k as isize,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Index of the nearest center for every row (squared Euclidean distance),
/// processed in fixed-size blocks through the dot-product kernel.
pub fn nearest_centers(rows: &[f64], centers: &[f64], dim: usize) -> Vec<usize> {
    const BLOCK: usize = 512;
    let count = rows.len() / dim;
    let k = centers.len() / dim;
    let center_norms: Vec<f64> = centers
        .chunks_exact(dim)
        .map(|c| c.iter().map(|v| v * v).sum())
        .collect();
    let mut out = Vec::with_capacity(count);
    let mut dots = vec![0.0; BLOCK * k];
    for block in rows.chunks(BLOCK * dim) {
        let m = block.len() / dim;
        let dots = &mut dots[..m * k];
        matmul_transposed(block, centers, m, dim, k, dots);
        for row in dots.chunks_exact(k) {
            // ‖x‖² is constant per row and drops out of the argmin.
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (j, (&dot, &norm)) in row.iter().zip(&center_norms).enumerate() {
                let d = norm - 2.0 * dot;
                if d < best_d {
                    best_d = d;
                    best = j;
                }
            }
            out.push(best);
        }
    }
    out
}

/// Index of the most similar center by dot product (cosine when both sides
/// are unit-norm).
pub fn max_dot_centers(rows: &[f64], centers: &[f64], dim: usize) -> Vec<usize> {
    const BLOCK: usize = 512;
    let k = centers.len() / dim;
    let mut out = Vec::with_capacity(rows.len() / dim);
    let mut dots = vec![0.0; BLOCK * k];
    for block in rows.chunks(BLOCK * dim) {
        let m = block.len() / dim;
        let dots = &mut dots[..m * k];
        matmul_transposed(block, centers, m, dim, k, dots);
        for row in dots.chunks_exact(k) {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            out.push(best);
        }
    }
    out
}
