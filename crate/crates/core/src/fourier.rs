// SPDX-License-Identifier: Apache-2.0

//! Normalised discrete Fourier transform on `Z_N`:
//! `hat a(xi) = E_n a(n) e(-n xi / N)`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::arith::rational_phase;

/// Fourier coefficients `hat a(0), ..., hat a(N-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum(pub Vec<Complex64>);

impl Spectrum {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.0
    }

    /// `sum_xi |hat a(xi)|^p`
    pub fn power_sum(&self, p: f64) -> f64 {
        pairwise_sum_by(&self.0, |z| z.norm().powf(p))
    }
}

/// Forward/inverse transforms for a fixed length, reusable across signals.
pub struct DftPlan {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl DftPlan {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self { len, forward: planner.plan_fft_forward(len), inverse: planner.plan_fft_inverse(len) }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// In-place normalised forward transform.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "signal length does not match plan");
        self.forward.process(buf);
        let scale = 1.0 / self.len as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
    }

    /// In-place inverse: `a(n) = sum_xi hat a(xi) e(n xi / N)`.
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        assert_eq!(buf.len(), self.len, "signal length does not match plan");
        self.inverse.process(buf);
    }

    pub fn forward(&self, signal: &[Complex64]) -> Spectrum {
        let mut buf = signal.to_vec();
        self.forward_in_place(&mut buf);
        Spectrum(buf)
    }
}

/// Fast normalised DFT for any length (prime lengths go through Bluestein
/// or Rader inside `rustfft`).
pub fn dft(signal: &[Complex64]) -> Spectrum {
    if signal.is_empty() {
        return Spectrum(Vec::new());
    }
    DftPlan::new(signal.len()).forward(signal)
}

/// Direct `O(N^2)` evaluation of the definition, with the phase `n xi mod N`
/// reduced exactly in integers.
pub fn dft_direct(signal: &[Complex64]) -> Spectrum {
    let n = signal.len();
    let inv = 1.0 / n as f64;
    Spectrum(
        (0..n)
            .map(|xi| {
                let terms: Vec<Complex64> = signal
                    .iter()
                    .enumerate()
                    .map(|(m, a)| a * rational_phase(-((m * xi % n) as i128), n as u64))
                    .collect();
                pairwise_sum(&terms) * inv
            })
            .collect(),
    )
}

/// Inverse of [`dft`].
pub fn idft(spectrum: &Spectrum) -> Vec<Complex64> {
    if spectrum.is_empty() {
        return Vec::new();
    }
    let mut buf = spectrum.0.clone();
    DftPlan::new(buf.len()).inverse_in_place(&mut buf);
    buf
}

/// Normalised cyclic convolution `(a * b)(n) = E_m a(m) b(n - m)`.
pub fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.len(), b.len(), "convolution needs equal lengths");
    let plan = DftPlan::new(a.len());
    let ha = plan.forward(a);
    let hb = plan.forward(b);
    let mut prod: Vec<Complex64> = ha.0.iter().zip(&hb.0).map(|(x, y)| x * y).collect();
    plan.inverse_in_place(&mut prod);
    prod
}

/// Direct `O(N^2)` convolution.
pub fn convolve_direct(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    assert_eq!(a.len(), b.len(), "convolution needs equal lengths");
    let n = a.len();
    (0..n)
        .map(|x| {
            let terms: Vec<Complex64> = (0..n).map(|m| a[m] * b[(x + n - m) % n]).collect();
            pairwise_sum(&terms) / n as f64
        })
        .collect()
}

/// Pairwise (cascade) summation; fixed order, so results are reproducible.
pub fn pairwise_sum(xs: &[Complex64]) -> Complex64 {
    if xs.len() <= 16 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

pub fn pairwise_sum_by<T>(xs: &[T], f: impl Fn(&T) -> f64 + Copy) -> f64 {
    if xs.len() <= 16 {
        return xs.iter().map(f).sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum_by(&xs[..mid], f) + pairwise_sum_by(&xs[mid..], f)
}

pub fn pairwise_sum_f64(xs: &[f64]) -> f64 {
    pairwise_sum_by(xs, |x| *x)
}

/// Samples uniform on the closed unit disc.
pub fn random_disc_signal<R: rand::Rng>(n: usize, rng: &mut R) -> Vec<Complex64> {
    (0..n)
        .map(|_| Complex64::from_polar(rng.gen::<f64>().sqrt(), rng.gen::<f64>() * std::f64::consts::TAU))
        .collect()
}
