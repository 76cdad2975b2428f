//! FFT machinery shared by the QFT and the coefficient extraction.
//!
//! A quaternion `q = a + b j` with `a = q0 + i q1`, `b = q2 + i q3` is stored
//! as the complex pair `P = a + i b`, `M = a - i b`. Left multiplication by an
//! i-plane number `z` maps `(P, M) -> (zP, zM)`; right multiplication by a
//! j-plane number `r + js` maps `(P, M) -> (P (r+is), M (r-is))`. A two-sided
//! kernel `e^{iφ} q e^{jψ}` therefore becomes `P e^{i(φ+ψ)}`, `M e^{i(φ-ψ)}`,
//! i.e. two ordinary complex transforms with the sign of the j-axes flipped
//! for `M`.

use rayon::prelude::*;
use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::quaternion::{cis_turns, Quaternion};

#[inline]
pub(crate) fn split(q: Quaternion) -> (Complex64, Complex64) {
    (Complex64::new(q.q0 - q.q3, q.q1 + q.q2), Complex64::new(q.q0 + q.q3, q.q1 - q.q2))
}

#[inline]
pub(crate) fn merge(p: Complex64, m: Complex64) -> Quaternion {
    // a = (P + M)/2, b = -i (P - M)/2
    let a = (p + m) * 0.5;
    let d = (p - m) * 0.5;
    Quaternion::new(a.re, a.im, d.im, -d.re)
}

pub(crate) fn split_all(data: &[Quaternion]) -> (Vec<Complex64>, Vec<Complex64>) {
    data.par_iter().map(|&q| split(q)).unzip()
}

pub(crate) fn merge_all(p: &[Complex64], m: &[Complex64]) -> Vec<Quaternion> {
    p.par_iter().zip(m.par_iter()).map(|(&p, &m)| merge(p, m)).collect()
}

/// Sample positions of one axis: input `t_k = t0 + k dt`, output
/// `s_l = s0 + l ds`, with `n dt ds = 1` so the kernel reduces to a DFT.
#[derive(Clone, Copy, Debug)]
pub(crate) struct AxisMap {
    pub t0: f64,
    pub dt: f64,
    pub s0: f64,
    pub ds: f64,
}

/// `Y_l = Σ_k X_k exp(sign · 2πi t_k s_l)` along `axis` of a row-major array,
/// for every line of that axis. `sign` is `-1` or `+1`.
pub(crate) fn transform_axis(data: &mut [Complex64], shape: &[usize], axis: usize, map: AxisMap, sign: f64) {
    let n = shape[axis];
    debug_assert!(((n as f64) * map.dt * map.ds - 1.0).abs() < 1e-9);
    let stride: usize = shape[axis + 1..].iter().product();
    let outer: usize = shape[..axis].iter().product();
    let lines = outer * stride;

    let direction = if sign < 0.0 { FftDirection::Forward } else { FftDirection::Inverse };
    let fft = FftPlanner::<f64>::new().plan_fft(n, direction);

    let pre: Vec<Complex64> = (0..n).map(|k| cis_turns(sign * (k as f64) * map.dt * map.s0)).collect();
    let post: Vec<Complex64> = (0..n).map(|l| cis_turns(sign * map.t0 * (map.s0 + (l as f64) * map.ds))).collect();

    let run = |buf: &mut [Complex64], scratch: &mut Vec<Complex64>| {
        for (x, w) in buf.iter_mut().zip(&pre) {
            *x *= w;
        }
        fft.process_with_scratch(buf, scratch);
        for (x, w) in buf.iter_mut().zip(&post) {
            *x *= w;
        }
    };
    let scratch_len = fft.get_inplace_scratch_len();

    if stride == 1 {
        data.par_chunks_mut(n)
            .for_each_init(|| vec![Complex64::default(); scratch_len], |scratch, line| run(line, scratch));
        return;
    }

    // Gather strided lines into contiguous buffers, transform, scatter back.
    let mut gathered = vec![Complex64::default(); lines * n];
    gathered.par_chunks_mut(n).enumerate().for_each(|(line, buf)| {
        let (o, s) = (line / stride, line % stride);
        let base = o * n * stride + s;
        for (k, x) in buf.iter_mut().enumerate() {
            *x = data[base + k * stride];
        }
    });
    gathered
        .par_chunks_mut(n)
        .for_each_init(|| vec![Complex64::default(); scratch_len], |scratch, line| run(line, scratch));
    for (line, buf) in gathered.chunks(n).enumerate() {
        let (o, s) = (line / stride, line % stride);
        let base = o * n * stride + s;
        for (k, x) in buf.iter().enumerate() {
            data[base + k * stride] = *x;
        }
    }
}

/// Deterministic compensated sum (Neumaier) of an ordered sequence.
pub(crate) fn neumaier_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut c = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

pub(crate) fn neumaier_sum_q<I: IntoIterator<Item = Quaternion>>(values: I) -> Quaternion {
    let v: Vec<Quaternion> = values.into_iter().collect();
    Quaternion::new(
        neumaier_sum(v.iter().map(|q| q.q0)),
        neumaier_sum(v.iter().map(|q| q.q1)),
        neumaier_sum(v.iter().map(|q| q.q2)),
        neumaier_sum(v.iter().map(|q| q.q3)),
    )
}
