//! Unnormalized 2-D FFT over `Array2<Complex64>` built from rustfft row passes.

use ndarray::{Array2, Axis};
use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

fn transform_axis(data: &mut Array2<Complex64>, axis: Axis, direction: FftDirection) {
    let len = data.len_of(axis);
    let fft = FftPlanner::new().plan_fft(len, direction);
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    for mut lane in data.lanes_mut(axis) {
        buf.iter_mut().zip(lane.iter()).for_each(|(b, &x)| *b = x);
        fft.process_with_scratch(&mut buf, &mut scratch);
        lane.iter_mut().zip(buf.iter()).for_each(|(x, &b)| *x = b);
    }
}

/// `X[r, t] = sum_{k,l} x[k, l] exp(-2 pi i (k r / K + l t / L))`.
pub fn fft2(data: &mut Array2<Complex64>) {
    transform_axis(data, Axis(1), FftDirection::Forward);
    transform_axis(data, Axis(0), FftDirection::Forward);
}

/// Inverse of [`fft2`] without the `1 / (K L)` factor.
pub fn ifft2_unnormalized(data: &mut Array2<Complex64>) {
    transform_axis(data, Axis(1), FftDirection::Inverse);
    transform_axis(data, Axis(0), FftDirection::Inverse);
}

/// Signed frequency index of FFT bin `k` of an `n`-point transform, in `[-n/2, n/2)`.
pub fn signed_index(k: usize, n: usize) -> i64 {
    if k < n.div_ceil(2) {
        k as i64
    } else {
        k as i64 - n as i64
    }
}
