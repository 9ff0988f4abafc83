//! Blocked single-precision matrix product with double-precision accumulation.
//!
//! `C = A·B (+ bias)` where `A` is `m×k`, `B` is `k×n`, all row-major.
//! Every output element is the sum `Σ_k a[i,k]·b[k,j]` accumulated in `f64`
//! in ascending `k`. Products of two `f32` values are exact in `f64`, so
//! fused and unfused multiply-add give the same result and the vectorized
//! variants below are bit-identical to the portable one.

use alloc::vec;

/// Bias added (in `f64`) to the accumulated sum before rounding to `f32`.
#[derive(Debug, Clone, Copy)]
pub enum Bias<'a> {
    None,
    /// One value per output row (`len == m`).
    PerRow(&'a [f32]),
    /// One value per output column (`len == n`).
    PerCol(&'a [f32]),
}

impl Bias<'_> {
    #[inline(always)]
    fn at(&self, i: usize, j: usize) -> f64 {
        match self {
            Bias::None => 0.0,
            Bias::PerRow(b) => b[i] as f64,
            Bias::PerCol(b) => b[j] as f64,
        }
    }
}

/// Computes `out = a·b + bias`. Panics on inconsistent slice lengths.
pub fn gemm(a: &[f32], b: &[f32], m: usize, k: usize, n: usize, bias: Bias<'_>, out: &mut [f32]) {
    assert_eq!(a.len(), m * k, "gemm: lhs length");
    assert_eq!(b.len(), k * n, "gemm: rhs length");
    assert_eq!(out.len(), m * n, "gemm: output length");
    match bias {
        Bias::PerRow(v) => assert_eq!(v.len(), m, "gemm: row bias length"),
        Bias::PerCol(v) => assert_eq!(v.len(), n, "gemm: column bias length"),
        Bias::None => {}
    }
    dispatch(a, b, m, k, n, bias, out);
}

#[cfg(all(target_arch = "x86_64", any(feature = "std", test)))]
fn dispatch(a: &[f32], b: &[f32], m: usize, k: usize, n: usize, bias: Bias<'_>, out: &mut [f32]) {
    if std::is_x86_feature_detected!("avx512f") {
        // SAFETY: the required CPU features were detected at runtime.
        unsafe { gemm_avx512(a, b, m, k, n, bias, out) }
    } else if std::is_x86_feature_detected!("avx2") && std::is_x86_feature_detected!("fma") {
        // SAFETY: as above.
        unsafe { gemm_avx2(a, b, m, k, n, bias, out) }
    } else {
        gemm_packed::<4, 8>(a, b, m, k, n, bias, out, tile_portable::<4, 8>)
    }
}

#[cfg(not(all(target_arch = "x86_64", any(feature = "std", test))))]
fn dispatch(a: &[f32], b: &[f32], m: usize, k: usize, n: usize, bias: Bias<'_>, out: &mut [f32]) {
    gemm_packed::<4, 8>(a, b, m, k, n, bias, out, tile_portable::<4, 8>)
}

#[cfg(all(target_arch = "x86_64", any(feature = "std", test)))]
#[target_feature(enable = "avx512f")]
unsafe fn gemm_avx512(a: &[f32], b: &[f32], m: usize, k: usize, n: usize, bias: Bias<'_>, out: &mut [f32]) {
    gemm_packed::<6, 16>(a, b, m, k, n, bias, out, |at, bp| unsafe { x86::tile_avx512(at, bp) })
}

#[cfg(all(target_arch = "x86_64", any(feature = "std", test)))]
#[target_feature(enable = "avx2,fma")]
unsafe fn gemm_avx2(a: &[f32], b: &[f32], m: usize, k: usize, n: usize, bias: Bias<'_>, out: &mut [f32]) {
    gemm_packed::<6, 8>(a, b, m, k, n, bias, out, |at, bp| unsafe { x86::tile_avx2(at, bp) })
}

/// `MR×NR` tile of `Σ_k at[k][r]·bp[k][c]`, ascending `k`, from operands
/// packed as `[k][MR]` and `[k][NR]`.
fn tile_portable<const MR: usize, const NR: usize>(at: &[f64], bp: &[f64]) -> [[f64; NR]; MR] {
    let mut acc = [[0.0f64; NR]; MR];
    for (av, bv) in at.chunks_exact(MR).zip(bp.chunks_exact(NR)) {
        for r in 0..MR {
            for c in 0..NR {
                acc[r][c] += av[r] * bv[c];
            }
        }
    }
    acc
}

#[cfg(all(target_arch = "x86_64", any(feature = "std", test)))]
mod x86 {
    use core::arch::x86_64::*;

    /// 6×16 tile in twelve `zmm` accumulators. The fused multiply-add is
    /// exact here because each product of widened `f32` fits in `f64`.
    #[target_feature(enable = "avx512f")]
    pub(super) unsafe fn tile_avx512(at: &[f64], bp: &[f64]) -> [[f64; 16]; 6] {
        let k = bp.len() / 16;
        debug_assert_eq!(at.len(), 6 * k);
        let (a, b) = (at.as_ptr(), bp.as_ptr());
        let mut c = [_mm512_setzero_pd(); 12];
        for kk in 0..k {
            // SAFETY: kk < k and both slices hold k packed rows.
            let (b0, b1) = unsafe { (_mm512_loadu_pd(b.add(kk * 16)), _mm512_loadu_pd(b.add(kk * 16 + 8))) };
            let ar = unsafe { a.add(kk * 6) };
            macro_rules! row {
                ($r:literal) => {{
                    let x = _mm512_set1_pd(unsafe { *ar.add($r) });
                    c[2 * $r] = _mm512_fmadd_pd(x, b0, c[2 * $r]);
                    c[2 * $r + 1] = _mm512_fmadd_pd(x, b1, c[2 * $r + 1]);
                }};
            }
            row!(0);
            row!(1);
            row!(2);
            row!(3);
            row!(4);
            row!(5);
        }
        let mut out = [[0.0f64; 16]; 6];
        for (r, row) in out.iter_mut().enumerate() {
            // SAFETY: each output row holds exactly two vectors.
            unsafe {
                _mm512_storeu_pd(row.as_mut_ptr(), c[2 * r]);
                _mm512_storeu_pd(row.as_mut_ptr().add(8), c[2 * r + 1]);
            }
        }
        out
    }

    /// 6×8 tile in twelve `ymm` accumulators.
    #[target_feature(enable = "avx2,fma")]
    pub(super) unsafe fn tile_avx2(at: &[f64], bp: &[f64]) -> [[f64; 8]; 6] {
        let k = bp.len() / 8;
        debug_assert_eq!(at.len(), 6 * k);
        let (a, b) = (at.as_ptr(), bp.as_ptr());
        let mut c = [_mm256_setzero_pd(); 12];
        for kk in 0..k {
            // SAFETY: kk < k and both slices hold k packed rows.
            let (b0, b1) = unsafe { (_mm256_loadu_pd(b.add(kk * 8)), _mm256_loadu_pd(b.add(kk * 8 + 4))) };
            let ar = unsafe { a.add(kk * 6) };
            macro_rules! row {
                ($r:literal) => {{
                    let x = _mm256_set1_pd(unsafe { *ar.add($r) });
                    c[2 * $r] = _mm256_fmadd_pd(x, b0, c[2 * $r]);
                    c[2 * $r + 1] = _mm256_fmadd_pd(x, b1, c[2 * $r + 1]);
                }};
            }
            row!(0);
            row!(1);
            row!(2);
            row!(3);
            row!(4);
            row!(5);
        }
        let mut out = [[0.0f64; 8]; 6];
        for (r, row) in out.iter_mut().enumerate() {
            // SAFETY: each output row holds exactly two vectors.
            unsafe {
                _mm256_storeu_pd(row.as_mut_ptr(), c[2 * r]);
                _mm256_storeu_pd(row.as_mut_ptr().add(4), c[2 * r + 1]);
            }
        }
        out
    }
}

/// Drives a tile kernel over the whole product. Rows of `a` are widened and
/// interleaved into `[k][MR]` tiles once; each `k×NR` column panel of `b`
/// is widened once and reused across all row tiles. Ragged edges are
/// zero-padded and the padding is never written back.
#[inline(always)]
#[allow(clippy::too_many_arguments)]
fn gemm_packed<const MR: usize, const NR: usize>(
    a: &[f32],
    b: &[f32],
    m: usize,
    k: usize,
    n: usize,
    bias: Bias<'_>,
    out: &mut [f32],
    tile: impl Fn(&[f64], &[f64]) -> [[f64; NR]; MR],
) {
    if m == 0 || n == 0 {
        return;
    }
    let tiles = m.div_ceil(MR);
    let mut ap = vec![0.0f64; tiles * MR * k];
    for i in 0..m {
        let (t, r) = (i / MR, i % MR);
        for kk in 0..k {
            ap[(t * k + kk) * MR + r] = a[i * k + kk] as f64;
        }
    }
    let mut bp = vec![0.0f64; k * NR];
    for j0 in (0..n).step_by(NR) {
        let w = NR.min(n - j0);
        for kk in 0..k {
            let src = &b[kk * n + j0..kk * n + j0 + w];
            let dst = &mut bp[kk * NR..kk * NR + NR];
            for (d, s) in dst.iter_mut().zip(src) {
                *d = *s as f64;
            }
            dst[w..].fill(0.0);
        }
        for t in 0..tiles {
            let acc = tile(&ap[t * k * MR..(t + 1) * k * MR], &bp);
            let i0 = t * MR;
            for (r, acc_row) in acc.iter().enumerate().take(m - i0) {
                let row = &mut out[(i0 + r) * n + j0..(i0 + r) * n + j0 + w];
                for (c, o) in row.iter_mut().enumerate() {
                    *o = (acc_row[c] + bias.at(i0 + r, j0 + c)) as f32;
                }
            }
        }
    }
}

/// Dot product of two `f32` slices accumulated in `f64`, ascending index.
#[inline]
pub fn dot(a: &[f32], b: &[f32]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        acc += *x as f64 * *y as f64;
    }
    acc
}
