//! Chirp-z transform (Bluestein): `y_m = Σ_j a_j e^{-iθ jm}` for arbitrary
//! real `θ`, evaluated with three FFTs of a padded power-of-two length.
//! Used to sample Fourier integrals on a uniform frequency grid that is not
//! the FFT dual grid.

use std::sync::Arc;

use rustfft::{Fft, FftPlanner};

use crate::grid::C64;

pub struct Czt {
    n_in: usize,
    n_out: usize,
    chirp_in: Vec<C64>,
    chirp_out: Vec<C64>,
    kernel_hat: Vec<C64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Czt {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Czt")
            .field("n_in", &self.n_in)
            .field("n_out", &self.n_out)
            .finish()
    }
}

/// `e^{-iθ n²/2}`, with `n²` formed in integer arithmetic.
fn chirp(theta: f64, n: i64) -> C64 {
    let q = (n * n) as f64;
    C64::from_polar(1.0, -0.5 * theta * q)
}

impl Czt {
    pub fn new(n_in: usize, n_out: usize, theta: f64) -> Self {
        let size = (n_in + n_out - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(size);
        let inv = planner.plan_fft_inverse(size);

        let chirp_in = (0..n_in as i64).map(|j| chirp(theta, j)).collect();
        let chirp_out = (0..n_out as i64).map(|m| chirp(theta, m)).collect();

        let mut kernel = vec![C64::new(0.0, 0.0); size];
        for m in 0..n_out {
            kernel[m] = chirp(theta, m as i64).conj();
        }
        for j in 1..n_in {
            kernel[size - j] = chirp(theta, j as i64).conj();
        }
        fwd.process(&mut kernel);
        let s = 1.0 / size as f64;
        kernel.iter_mut().for_each(|v| *v *= s);

        Czt {
            n_in,
            n_out,
            chirp_in,
            chirp_out,
            kernel_hat: kernel,
            fwd,
            inv,
        }
    }

    pub fn apply(&self, a: &[C64]) -> Vec<C64> {
        assert_eq!(a.len(), self.n_in, "chirp-z input length");
        let size = self.kernel_hat.len();
        let mut buf = vec![C64::new(0.0, 0.0); size];
        for ((b, x), c) in buf.iter_mut().zip(a).zip(&self.chirp_in) {
            *b = x * c;
        }
        self.fwd.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b *= k;
        }
        self.inv.process(&mut buf);
        buf.truncate(self.n_out);
        for (b, c) in buf.iter_mut().zip(&self.chirp_out) {
            *b *= c;
        }
        buf
    }
}
