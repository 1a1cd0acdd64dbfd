//! Distorted Fourier transform of `H(ω)` built on the closed-form
//! generalized eigenfunctions
//!
//! ```text
//! Ψ₁(x,ξ) = (2π)^{-1/2} (ξ + i√ω tanh(√ω x))² / (|ξ| − i√ω)² e^{ixξ}
//! Ψ₂(x,ξ) = (2π)^{-1/2} ω sech²(√ω x)      / (|ξ| − i√ω)² e^{ixξ}
//! ```
//!
//! with `Ψ₊ = (Ψ₁, Ψ₂)`, `Ψ₋ = (Ψ₂, Ψ₁)` and `f̃± = ⟨F, σ₃Ψ±⟩`.
//!
//! Expanding the squares reduces every pairing to a handful of flat Fourier
//! integrals `∫ w(x) e^{∓ixξ} dx` of the field times `tanh^m`, `sech²`.
//! Those are sampled on the uniform ξ-grid with a chirp-z transform; the
//! per-ξ direct sum is kept as an oracle.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use crate::czt::Czt;
use crate::error::{Error, Result};
use crate::grid::{C64, Grid, VectorField, I};

#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyGrid {
    nodes: Vec<f64>,
    xi_max: f64,
    dxi: f64,
}

impl FrequencyGrid {
    /// `n_xi` uniform nodes on `[-Ξ, Ξ]`; `n_xi` odd so that `ξ = 0` is a node.
    pub fn new(n_xi: usize, xi_max: f64) -> Result<Arc<Self>> {
        if n_xi < 3 || n_xi % 2 == 0 {
            return Err(Error::param("frozen.n_xi", format!("{n_xi} must be odd and >= 3")));
        }
        if !(xi_max > 0.0) {
            return Err(Error::param("frozen.xi_max", format!("{xi_max} must be positive")));
        }
        let h = (n_xi / 2) as f64;
        let dxi = xi_max / h;
        let nodes = (0..n_xi)
            .map(|m| (m as f64 - h) / h * xi_max)
            .collect();
        Ok(Arc::new(FrequencyGrid { nodes, xi_max, dxi }))
    }

    /// `Ξ = 12√ω̲`, 2049 nodes.
    pub fn default_for(omega_bar: f64) -> Arc<Self> {
        Self::new(2049, 12.0 * omega_bar.sqrt()).expect("valid default grid")
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn xi_max(&self) -> f64 {
        self.xi_max
    }

    pub fn dxi(&self) -> f64 {
        self.dxi
    }

    /// Index of `−ξ_m`.
    pub fn mirror(&self, m: usize) -> usize {
        self.nodes.len() - 1 - m
    }

    pub fn zero_index(&self) -> usize {
        self.nodes.len() / 2
    }

    /// Trapezoid weights including `dξ`.
    pub fn weights(&self) -> Vec<f64> {
        let n = self.nodes.len();
        (0..n)
            .map(|m| if m == 0 || m == n - 1 { 0.5 * self.dxi } else { self.dxi })
            .collect()
    }

    pub fn integrate(&self, v: &[C64]) -> C64 {
        self.weights().iter().zip(v).map(|(w, f)| f * *w).sum()
    }
}

fn inv_sqrt_2pi() -> f64 {
    1.0 / (2.0 * PI).sqrt()
}

/// `(m₁, m₂)` so that `Ψ_j = (2π)^{-1/2} e^{ixξ} m_j`.
pub fn m_symbols(omega: f64, x: f64, xi: f64) -> (C64, C64) {
    let s = omega.sqrt();
    let u = s * x;
    let d = (C64::new(xi.abs(), -s)).powu(2);
    let t = u.tanh();
    let sech2 = 1.0 - t * t;
    ((C64::new(xi, s * t)).powu(2) / d, C64::new(omega * sech2, 0.0) / d)
}

pub fn psi_basis(omega: f64, x: f64, xi: f64) -> (C64, C64) {
    let (m1, m2) = m_symbols(omega, x, xi);
    let e = C64::from_polar(inv_sqrt_2pi(), x * xi);
    (e * m1, e * m2)
}

/// `r(ξ) = (|ξ| − i√ω)² / (|ξ| + i√ω)²`.
pub fn scattering_factor(omega: f64, xi: f64) -> C64 {
    let s = omega.sqrt();
    (C64::new(xi.abs(), -s) / C64::new(xi.abs(), s)).powu(2)
}

#[derive(Clone, Debug)]
pub struct DistortedSpectrum {
    pub omega_bar: f64,
    pub fgrid: Arc<FrequencyGrid>,
    pub plus: Vec<C64>,
    pub minus: Vec<C64>,
    pub warning: Option<String>,
}

impl DistortedSpectrum {
    pub fn zeros(omega_bar: f64, fgrid: &Arc<FrequencyGrid>) -> Self {
        let z = vec![C64::new(0.0, 0.0); fgrid.len()];
        DistortedSpectrum {
            omega_bar,
            fgrid: fgrid.clone(),
            plus: z.clone(),
            minus: z,
            warning: None,
        }
    }

    /// `max_ξ |f̃₋(ξ) + r(ξ) conj(f̃₊(−ξ))|`; zero for spectra of J-invariant fields.
    pub fn conjugation_defect(&self) -> f64 {
        let g = &self.fgrid;
        g.nodes()
            .iter()
            .enumerate()
            .map(|(m, &xi)| {
                let r = scattering_factor(self.omega_bar, xi);
                (self.minus[m] + r * self.plus[g.mirror(m)].conj()).norm()
            })
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.plus
            .iter()
            .chain(&self.minus)
            .fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn sub(&self, other: &DistortedSpectrum) -> DistortedSpectrum {
        let d = |a: &[C64], b: &[C64]| a.iter().zip(b).map(|(x, y)| x - y).collect();
        DistortedSpectrum {
            omega_bar: self.omega_bar,
            fgrid: self.fgrid.clone(),
            plus: d(&self.plus, &other.plus),
            minus: d(&self.minus, &other.minus),
            warning: None,
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "xi,re_fplus,im_fplus,re_fminus,im_fminus")?;
        for (m, xi) in self.fgrid.nodes().iter().enumerate() {
            let (p, q) = (self.plus[m], self.minus[m]);
            writeln!(
                w,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                xi, p.re, p.im, q.re, q.im
            )?;
        }
        Ok(())
    }
}

/// `f̃₊ ↦ e^{it(ξ²+ω)} f̃₊`, `f̃₋ ↦ e^{-it(ξ²+ω)} f̃₋`.
pub fn propagate_spectrum(s: &DistortedSpectrum, t: f64) -> DistortedSpectrum {
    let w = s.omega_bar;
    let nodes = s.fgrid.nodes();
    DistortedSpectrum {
        omega_bar: w,
        fgrid: s.fgrid.clone(),
        plus: s
            .plus
            .iter()
            .zip(nodes)
            .map(|(v, xi)| v * C64::from_polar(1.0, t * (xi * xi + w)))
            .collect(),
        minus: s
            .minus
            .iter()
            .zip(nodes)
            .map(|(v, xi)| v * C64::from_polar(1.0, -t * (xi * xi + w)))
            .collect(),
        warning: s.warning.clone(),
    }
}

/// Transform tables for one `(ω̲, x-grid, ξ-grid)` triple.
#[derive(Debug)]
pub struct DistortedFourier {
    pub omega: f64,
    pub grid: Arc<Grid>,
    pub fgrid: Arc<FrequencyGrid>,
    tanh: Vec<f64>,
    sech2: Vec<f64>,
    to_xi: Czt,
    to_x: Czt,
    pre_xi: Vec<C64>,
    post_xi: Vec<C64>,
    pre_x: Vec<C64>,
    post_x: Vec<C64>,
}

impl DistortedFourier {
    pub fn new(omega: f64, grid: &Arc<Grid>, fgrid: &Arc<FrequencyGrid>) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::param("omega_bar", format!("{omega} must be positive")));
        }
        let s = omega.sqrt();
        let x = grid.x();
        let xi = fgrid.nodes();
        let (dx, dxi) = (grid.dx(), fgrid.dxi());
        let (x0, xi0) = (x[0], xi[0]);
        let theta = dx * dxi;
        let tanh: Vec<f64> = x.iter().map(|&x| (s * x).tanh()).collect();
        let sech2 = tanh.iter().map(|t| 1.0 - t * t).collect();
        Ok(DistortedFourier {
            omega,
            grid: grid.clone(),
            fgrid: fgrid.clone(),
            tanh,
            sech2,
            to_xi: Czt::new(x.len(), xi.len(), theta),
            to_x: Czt::new(xi.len(), x.len(), -theta),
            pre_xi: (0..x.len()).map(|j| C64::from_polar(1.0, -(j as f64) * dx * xi0)).collect(),
            post_xi: xi.iter().map(|&k| C64::from_polar(dx, -x0 * k)).collect(),
            pre_x: (0..xi.len()).map(|m| C64::from_polar(1.0, m as f64 * dxi * x0)).collect(),
            post_x: x.iter().map(|&y| C64::from_polar(1.0, y * xi0)).collect(),
        })
    }

    /// `∫ w(x) e^{-ixξ} dx` on the ξ-grid.
    fn ft(&self, w: impl Iterator<Item = C64>) -> Vec<C64> {
        let a: Vec<C64> = w.zip(&self.pre_xi).map(|(v, p)| v * p).collect();
        let mut y = self.to_xi.apply(&a);
        y.iter_mut().zip(&self.post_xi).for_each(|(v, p)| *v *= p);
        y
    }

    /// `Σ_m c_m e^{ix ξ_m}` on the x-grid (weights already folded into `c`).
    fn ift(&self, c: impl Iterator<Item = C64>) -> Vec<C64> {
        let a: Vec<C64> = c.zip(&self.pre_x).map(|(v, p)| v * p).collect();
        let mut y = self.to_x.apply(&a);
        y.iter_mut().zip(&self.post_x).for_each(|(v, p)| *v *= p);
        y
    }

    fn weighted<'a>(&'a self, f: &'a [C64], w: &'a [f64]) -> impl Iterator<Item = C64> + 'a {
        f.iter().zip(w).map(|(v, w)| v * w)
    }

    fn powers(&self, f: &[C64]) -> [Vec<C64>; 3] {
        let t = &self.tanh;
        [
            self.ft(f.iter().copied()),
            self.ft(self.weighted(f, t)),
            self.ft(f.iter().zip(t).map(|(v, t)| v * (t * t))),
        ]
    }

    fn boundary_warning(&self, u: &VectorField) -> Option<String> {
        let edge = 0.9 * self.grid.half_width();
        let tail = self
            .grid
            .x()
            .iter()
            .enumerate()
            .filter(|(_, x)| x.abs() > edge)
            .fold(0.0f64, |m, (j, _)| m.max(u.first[j].norm()).max(u.second[j].norm()));
        (tail > 1e-8).then(|| format!("field not decayed near boundary (max {tail:.2e})"))
    }

    fn check(&self, u: &VectorField) -> Result<()> {
        if self.grid.same_as(&u.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    pub fn forward(&self, u: &VectorField) -> Result<DistortedSpectrum> {
        self.check(u)?;
        let (w, s) = (self.omega, self.omega.sqrt());
        let [a0, a1, a2] = self.powers(&u.first);
        let [d0, d1, d2] = self.powers(&u.second);
        let c = inv_sqrt_2pi();
        let mut plus = Vec::with_capacity(self.fgrid.len());
        let mut minus = Vec::with_capacity(self.fgrid.len());
        for (m, &xi) in self.fgrid.nodes().iter().enumerate() {
            let pre = c / C64::new(xi.abs(), s).powu(2);
            // ∫f₁ sech² = A₀ − A₂, ∫f₂ sech² = D₀ − D₂
            let b = d0[m] - d2[m];
            let cc = a0[m] - a2[m];
            plus.push(pre * (xi * xi * a0[m] - 2.0 * I * xi * s * a1[m] - w * a2[m] - w * b));
            minus.push(pre * (w * cc - xi * xi * d0[m] + 2.0 * I * xi * s * d1[m] + w * d2[m]));
        }
        Ok(DistortedSpectrum {
            omega_bar: self.omega,
            fgrid: self.fgrid.clone(),
            plus,
            minus,
            warning: self.boundary_warning(u),
        })
    }

    /// `(f̃₊(ξ), f̃₋(ξ))` by direct summation against the basis.
    pub fn forward_direct_at(&self, u: &VectorField, xi: f64) -> Result<(C64, C64)> {
        self.check(u)?;
        let mut p = C64::new(0.0, 0.0);
        let mut q = C64::new(0.0, 0.0);
        for (j, &x) in self.grid.x().iter().enumerate() {
            let (y1, y2) = psi_basis(self.omega, x, xi);
            let (f1, f2) = (u.first[j], u.second[j]);
            p += f1 * y1.conj() - f2 * y2.conj();
            q += f1 * y2.conj() - f2 * y1.conj();
        }
        let dx = self.grid.dx();
        Ok((p * dx, q * dx))
    }

    /// `∫ f̃₊Ψ₊ dξ − ∫ f̃₋Ψ₋ dξ`, which equals `P_e F` for `F` with spectrum `S`.
    pub fn inverse(&self, spec: &DistortedSpectrum) -> Result<VectorField> {
        if spec.fgrid.as_ref() != self.fgrid.as_ref() {
            return Err(Error::GridMismatch);
        }
        let (w, s) = (self.omega, self.omega.sqrt());
        let wts = self.fgrid.weights();
        let nodes = self.fgrid.nodes();
        let scaled = |v: &[C64], k: i32| -> Vec<C64> {
            self.ift(v.iter().zip(nodes).zip(&wts).map(|((f, &xi), &h)| {
                f * h * xi.powi(k) / C64::new(xi.abs(), -s).powu(2)
            }))
        };
        let e: Vec<Vec<C64>> = (0..3).map(|k| scaled(&spec.plus, k)).collect();
        let g: Vec<Vec<C64>> = (0..3).map(|k| scaled(&spec.minus, k)).collect();
        let c = inv_sqrt_2pi();
        let n = self.grid.n();
        let mut first = Vec::with_capacity(n);
        let mut second = Vec::with_capacity(n);
        for j in 0..n {
            let (t, q) = (self.tanh[j], self.sech2[j]);
            let a = e[2][j] + 2.0 * I * s * t * e[1][j] - w * t * t * e[0][j];
            let b = g[2][j] + 2.0 * I * s * t * g[1][j] - w * t * t * g[0][j];
            first.push(c * (a - w * q * g[0][j]));
            second.push(c * (w * q * e[0][j] - b));
        }
        Ok(VectorField {
            grid: self.grid.clone(),
            first,
            second,
        })
    }

    /// `L₊ = 2⟨f₂, Ψ₂⟩` (`sign > 0`) or `L₋ = 2⟨f₁, Ψ₂⟩`, so that
    /// `F̃±[σ₃F] = ±F̃±[F] + L±`.
    pub fn correction_l(&self, u: &VectorField, sign: i32) -> Result<Vec<C64>> {
        self.check(u)?;
        let s = self.omega.sqrt();
        let f = if sign > 0 { &u.second } else { &u.first };
        let b = self.ft(self.weighted(f, &self.sech2));
        let c = 2.0 * self.omega * inv_sqrt_2pi();
        Ok(self
            .fgrid
            .nodes()
            .iter()
            .zip(b)
            .map(|(&xi, v)| c * v / C64::new(xi.abs(), s).powu(2))
            .collect())
    }

    /// `K±` such that `F̃±[∂xF] = iξ F̃±[F] + K±[F]`: minus the pairings of
    /// `(f₁, f₂)` against `(2π)^{-1/2} e^{ixξ} ∂x m` (the sign is fixed by the
    /// integration by parts).
    pub fn correction_k(&self, u: &VectorField, sign: i32) -> Result<Vec<C64>> {
        self.check(u)?;
        let (w, s) = (self.omega, self.omega.sqrt());
        let (fa, fb) = if sign > 0 {
            (&u.first, &u.second)
        } else {
            (&u.second, &u.first)
        };
        let ts: Vec<f64> = self.tanh.iter().zip(&self.sech2).map(|(t, q)| t * q).collect();
        // pairing against ∂x m₁ uses the field in the Ψ₁ slot, ∂x m₂ the Ψ₂ slot
        let m1_q = self.ft(self.weighted(fa, &self.sech2));
        let m1_tq = self.ft(self.weighted(fa, &ts));
        let m2_tq = self.ft(self.weighted(fb, &ts));
        let c = inv_sqrt_2pi();
        let sgn = if sign > 0 { 1.0 } else { -1.0 };
        Ok(self
            .fgrid
            .nodes()
            .iter()
            .enumerate()
            .map(|(m, &xi)| {
                let d = C64::new(xi.abs(), s).powu(2);
                let with_m1 = -2.0 * I * w * (xi * m1_q[m] - I * s * m1_tq[m]) / d;
                let with_m2 = -2.0 * w * s * m2_tq[m] / d;
                -c * sgn * (with_m1 - with_m2)
            })
            .collect())
    }
}

pub fn dft_forward(
    u: &VectorField,
    omega_bar: f64,
    fgrid: &Arc<FrequencyGrid>,
) -> Result<DistortedSpectrum> {
    DistortedFourier::new(omega_bar, &u.grid, fgrid)?.forward(u)
}

pub fn dft_inverse(spec: &DistortedSpectrum, grid: &Arc<Grid>) -> Result<VectorField> {
    DistortedFourier::new(spec.omega_bar, grid, &spec.fgrid)?.inverse(spec)
}

pub fn correction_l(
    u: &VectorField,
    omega: f64,
    fgrid: &Arc<FrequencyGrid>,
    sign: i32,
) -> Result<Vec<C64>> {
    DistortedFourier::new(omega, &u.grid, fgrid)?.correction_l(u, sign)
}

pub fn correction_k(
    u: &VectorField,
    omega: f64,
    fgrid: &Arc<FrequencyGrid>,
    sign: i32,
) -> Result<Vec<C64>> {
    DistortedFourier::new(omega, &u.grid, fgrid)?.correction_k(u, sign)
}
