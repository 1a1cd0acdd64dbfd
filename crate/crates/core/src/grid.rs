//! Periodic box `[-L, L)` with `n` uniform nodes, its dual frequencies, and
//! the scalar and ℂ²-valued field containers.
//!
//! FFT contract: `fft` is the unnormalized forward transform
//! `F_j = Σ_m f(x_m) e^{-2πi jm/n}` and `ifft` divides by `n`. Frequencies
//! are in standard FFT order with spacing `π/L`, so `∂x` is multiplication by
//! `i k_j` and Parseval reads `∫|f|² dx ≈ (dx/n) Σ_j |F_j|²`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlannerScalar};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub struct Grid {
    n: usize,
    half_width: f64,
    dx: f64,
    x: Vec<f64>,
    k: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("half_width", &self.half_width)
            .field("dx", &self.dx)
            .finish()
    }
}

impl Grid {
    pub fn new(n: usize, half_width: f64) -> Result<Arc<Grid>> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::param("grid.n", format!("{n} is not a power of two >= 16")));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::param("grid.L", format!("{half_width} must be positive")));
        }
        let dx = 2.0 * half_width / n as f64;
        let x = (0..n).map(|j| -half_width + j as f64 * dx).collect();
        let dk = std::f64::consts::PI / half_width;
        let k = (0..n)
            .map(|j| {
                let j = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
                j * dk
            })
            .collect();
        // Scalar plans: identical bits on every CPU, and a smaller systematic norm
        // gain per roundtrip than the SIMD paths.
        let mut planner = FftPlannerScalar::new();
        Ok(Arc::new(Grid {
            n,
            half_width,
            dx,
            x,
            k,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn k(&self) -> &[f64] {
        &self.k
    }

    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI / self.dx
    }

    pub fn same_as(&self, other: &Grid) -> bool {
        std::ptr::eq(self, other) || (self.n == other.n && self.half_width == other.half_width)
    }

    pub fn fft(&self, buf: &mut [C64]) {
        self.fwd.process(buf);
    }

    pub fn ifft(&self, buf: &mut [C64]) {
        self.inv.process(buf);
        let s = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|v| *v *= s);
    }

    pub fn fft_with_scratch(&self, buf: &mut [C64], scratch: &mut [C64]) {
        self.fwd.process_with_scratch(buf, scratch);
    }

    /// Unnormalized inverse; the caller folds `1/n` into its multiplier.
    pub fn ifft_raw_with_scratch(&self, buf: &mut [C64], scratch: &mut [C64]) {
        self.inv.process_with_scratch(buf, scratch);
    }

    pub fn scratch_len(&self) -> usize {
        self.fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len())
    }

    /// Index of the node closest to `x`, periodically.
    pub fn nearest_index(&self, x: f64) -> usize {
        let r = (x + self.half_width).rem_euclid(2.0 * self.half_width) / self.dx;
        (r.round() as usize) % self.n
    }
}

fn check(a: &Grid, b: &Grid) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

#[derive(Clone, Debug)]
pub struct ComplexField {
    pub grid: Arc<Grid>,
    pub values: Vec<C64>,
}

impl ComplexField {
    pub fn zeros(grid: &Arc<Grid>) -> Self {
        ComplexField {
            grid: grid.clone(),
            values: vec![C64::new(0.0, 0.0); grid.n()],
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> C64) -> Self {
        ComplexField {
            grid: grid.clone(),
            values: grid.x().iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn from_real_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    pub fn from_values(grid: &Arc<Grid>, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n() {
            return Err(Error::GridMismatch);
        }
        Ok(ComplexField {
            grid: grid.clone(),
            values,
        })
    }

    pub fn map(&self, f: impl Fn(f64, C64) -> C64) -> Self {
        let values = self
            .grid
            .x()
            .iter()
            .zip(&self.values)
            .map(|(&x, &v)| f(x, v))
            .collect();
        ComplexField {
            grid: self.grid.clone(),
            values,
        }
    }

    pub fn zip_with(&self, other: &ComplexField, f: impl Fn(C64, C64) -> C64) -> Result<Self> {
        check(&self.grid, &other.grid)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(ComplexField {
            grid: self.grid.clone(),
            values,
        })
    }

    pub fn conj(&self) -> Self {
        self.map(|_, v| v.conj())
    }

    pub fn scale(&self, c: C64) -> Self {
        self.map(|_, v| v * c)
    }

    pub fn norm_l2(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.grid.dx()).sqrt()
    }

    pub fn norm_linf(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    /// `‖f‖_{H¹}² = ‖f‖² + ‖f'‖²`.
    pub fn norm_h1(&self) -> f64 {
        let d = derivative(self, 1);
        (self.norm_l2().powi(2) + d.norm_l2().powi(2)).sqrt()
    }

    pub fn integral(&self) -> C64 {
        self.values.iter().sum::<C64>() * self.grid.dx()
    }

    pub fn spectrum(&self) -> Vec<C64> {
        let mut buf = self.values.clone();
        self.grid.fft(&mut buf);
        buf
    }

    /// Fourier-shift interpolation: returns `g(x) = f(x + s)` (periodic).
    pub fn shifted(&self, s: f64) -> Self {
        let g = &self.grid;
        let mut buf = self.spectrum();
        let nyq = g.n() / 2;
        for (j, (b, &k)) in buf.iter_mut().zip(g.k()).enumerate() {
            let ph = k * s;
            *b *= if j == nyq {
                C64::new(ph.cos(), 0.0)
            } else {
                C64::from_polar(1.0, ph)
            };
        }
        g.ifft(&mut buf);
        ComplexField {
            grid: g.clone(),
            values: buf,
        }
    }
}

/// Multiplication by `(ik)^order` in Fourier space. Odd orders drop the
/// Nyquist mode so real fields stay real.
pub fn derivative(f: &ComplexField, order: u32) -> ComplexField {
    let g = &f.grid;
    let mut buf = f.spectrum();
    let nyq = g.n() / 2;
    for (j, (b, &k)) in buf.iter_mut().zip(g.k()).enumerate() {
        if j == nyq && order % 2 == 1 {
            *b = C64::new(0.0, 0.0);
        } else {
            *b *= (I * k).powu(order);
        }
    }
    g.ifft(&mut buf);
    ComplexField {
        grid: g.clone(),
        values: buf,
    }
}

pub fn spectral_derivative(f: &ComplexField, order: u32) -> Result<ComplexField> {
    if order != 1 && order != 2 {
        return Err(Error::param("order", format!("{order} not in {{1, 2}}")));
    }
    Ok(derivative(f, order))
}

/// `⟨f, g⟩ = ∫ f ḡ dx` by the periodic trapezoid rule.
pub fn inner_product_scalar(f: &ComplexField, g: &ComplexField) -> Result<C64> {
    check(&f.grid, &g.grid)?;
    Ok(dot(&f.values, &g.values) * f.grid.dx())
}

pub(crate) fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y.conj()).sum()
}

/// `(dx/n) Σ |F_j|²`, the Fourier side of Parseval for this grid's FFT.
pub fn parseval_spectral(f: &ComplexField) -> f64 {
    let g = &f.grid;
    f.spectrum().iter().map(|v| v.norm_sqr()).sum::<f64>() * g.dx() / g.n() as f64
}

#[derive(Clone, Debug)]
pub struct VectorField {
    pub grid: Arc<Grid>,
    pub first: Vec<C64>,
    pub second: Vec<C64>,
}

impl VectorField {
    pub fn new(first: ComplexField, second: ComplexField) -> Result<Self> {
        check(&first.grid, &second.grid)?;
        Ok(VectorField {
            grid: first.grid,
            first: first.values,
            second: second.values,
        })
    }

    pub fn zeros(grid: &Arc<Grid>) -> Self {
        let z = vec![C64::new(0.0, 0.0); grid.n()];
        VectorField {
            grid: grid.clone(),
            first: z.clone(),
            second: z,
        }
    }

    /// The J-invariant pair `(u, ū)`.
    pub fn from_scalar(u: &ComplexField) -> Self {
        VectorField {
            grid: u.grid.clone(),
            first: u.values.clone(),
            second: u.values.iter().map(|v| v.conj()).collect(),
        }
    }

    pub fn from_fn(grid: &Arc<Grid>, f: impl Fn(f64) -> (C64, C64)) -> Self {
        let (first, second) = grid.x().iter().map(|&x| f(x)).unzip();
        VectorField {
            grid: grid.clone(),
            first,
            second,
        }
    }

    pub fn first_field(&self) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.first.clone(),
        }
    }

    pub fn second_field(&self) -> ComplexField {
        ComplexField {
            grid: self.grid.clone(),
            values: self.second.clone(),
        }
    }

    pub fn map(&self, f: impl Fn(f64, C64, C64) -> (C64, C64)) -> Self {
        let (first, second) = self
            .grid
            .x()
            .iter()
            .zip(self.first.iter().zip(&self.second))
            .map(|(&x, (&a, &b))| f(x, a, b))
            .unzip();
        VectorField {
            grid: self.grid.clone(),
            first,
            second,
        }
    }

    pub fn zip_with(
        &self,
        other: &VectorField,
        f: impl Fn(C64, C64) -> C64,
    ) -> Result<VectorField> {
        check(&self.grid, &other.grid)?;
        let z = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(&p, &q)| f(p, q)).collect();
        Ok(VectorField {
            grid: self.grid.clone(),
            first: z(&self.first, &other.first),
            second: z(&self.second, &other.second),
        })
    }

    pub fn add(&self, other: &VectorField) -> Result<VectorField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &VectorField) -> Result<VectorField> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: C64) -> VectorField {
        self.map(|_, a, b| (a * c, b * c))
    }

    pub fn axpy(&mut self, c: C64, other: &VectorField) -> Result<()> {
        check(&self.grid, &other.grid)?;
        for (a, b) in self.first.iter_mut().zip(&other.first) {
            *a += c * b;
        }
        for (a, b) in self.second.iter_mut().zip(&other.second) {
            *a += c * b;
        }
        Ok(())
    }

    pub fn sigma1(&self) -> VectorField {
        VectorField {
            grid: self.grid.clone(),
            first: self.second.clone(),
            second: self.first.clone(),
        }
    }

    pub fn sigma2(&self) -> VectorField {
        self.map(|_, a, b| (-I * b, I * a))
    }

    pub fn sigma3(&self) -> VectorField {
        self.map(|_, a, b| (a, -b))
    }

    pub fn derivative(&self, order: u32) -> VectorField {
        VectorField {
            grid: self.grid.clone(),
            first: derivative(&self.first_field(), order).values,
            second: derivative(&self.second_field(), order).values,
        }
    }

    pub fn norm_l2(&self) -> f64 {
        let s: f64 = self
            .first
            .iter()
            .chain(&self.second)
            .map(|v| v.norm_sqr())
            .sum();
        (s * self.grid.dx()).sqrt()
    }

    pub fn norm_linf(&self) -> f64 {
        self.first
            .iter()
            .chain(&self.second)
            .fold(0.0, |m, v| m.max(v.norm()))
    }

    /// Sup-norm restricted to `|x| < window`.
    pub fn norm_linf_within(&self, window: f64) -> f64 {
        self.grid
            .x()
            .iter()
            .enumerate()
            .filter(|(_, x)| x.abs() < window)
            .fold(0.0, |m, (j, _)| {
                m.max(self.first[j].norm()).max(self.second[j].norm())
            })
    }
}

pub fn inner_product_vector(u: &VectorField, v: &VectorField) -> Result<C64> {
    check(&u.grid, &v.grid)?;
    Ok((dot(&u.first, &v.first) + dot(&u.second, &v.second)) * u.grid.dx())
}

/// `max_j |second(x_j) − conj(first(x_j))|`.
#[allow(non_snake_case)]
pub fn check_J_invariance(u: &VectorField) -> f64 {
    u.first
        .iter()
        .zip(&u.second)
        .fold(0.0, |m, (a, b)| m.max((b - a.conj()).norm()))
}
