//! Ground state `φ_ω = √(2ω) sech(√ω x)`, the four-parameter solitary-wave
//! family and the conserved functionals M, P, E.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{derivative, C64, ComplexField, Grid};

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolitonParams {
    pub omega: f64,
    pub gamma: f64,
    pub p: f64,
    pub sigma: f64,
}

impl SolitonParams {
    pub fn new(omega: f64, gamma: f64, p: f64, sigma: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::param("omega", format!("{omega} must be positive")));
        }
        Ok(SolitonParams {
            omega,
            gamma,
            p,
            sigma,
        })
    }

    pub fn at_rest(omega: f64) -> Self {
        SolitonParams {
            omega,
            gamma: 0.0,
            p: 0.0,
            sigma: 0.0,
        }
    }
}

/// Pointwise profile functions of `φ_ω` and its ω-derivatives.
pub mod profile {
    use super::SQRT2;

    fn sech(u: f64) -> f64 {
        1.0 / u.cosh()
    }

    pub fn phi(omega: f64, x: f64) -> f64 {
        let s = omega.sqrt();
        SQRT2 * s * sech(s * x)
    }

    pub fn dphi_dx(omega: f64, x: f64) -> f64 {
        let s = omega.sqrt();
        let u = s * x;
        -SQRT2 * s * s * sech(u) * u.tanh()
    }

    /// `φ'' = ωφ − φ³`.
    pub fn d2phi_dx2(omega: f64, x: f64) -> f64 {
        let f = phi(omega, x);
        omega * f - f * f * f
    }

    pub fn dphi_domega(omega: f64, x: f64) -> f64 {
        let s = omega.sqrt();
        let u = s * x;
        let (sh, th) = (sech(u), u.tanh());
        sh / (SQRT2 * s) - x / SQRT2 * sh * th
    }

    pub fn d2phi_domega2(omega: f64, x: f64) -> f64 {
        let s = omega.sqrt();
        let u = s * x;
        let (sh, th) = (sech(u), u.tanh());
        (-sh / (2.0 * s * s * s)
            - x * sh * th / (2.0 * s * s)
            - x * x * sh * (2.0 * sh * sh - 1.0) / (2.0 * s))
            / SQRT2
    }

    pub fn dx_dphi_domega(omega: f64, x: f64) -> f64 {
        let s = omega.sqrt();
        let u = s * x;
        let (sh, th) = (sech(u), u.tanh());
        -SQRT2 * sh * th - x * s / SQRT2 * sh * (2.0 * sh * sh - 1.0)
    }
}

pub fn ground_state(omega: f64, grid: &Arc<Grid>) -> Result<ComplexField> {
    if !(omega > 0.0) {
        return Err(Error::param("omega", format!("{omega} must be positive")));
    }
    Ok(ComplexField::from_real_fn(grid, |x| profile::phi(omega, x)))
}

pub fn ground_state_domega(omega: f64, grid: &Arc<Grid>) -> ComplexField {
    ComplexField::from_real_fn(grid, |x| profile::dphi_domega(omega, x))
}

/// Periodic representative of `y` in `[-L, L)`.
pub fn wrap(y: f64, half_width: f64) -> f64 {
    (y + half_width).rem_euclid(2.0 * half_width) - half_width
}

#[derive(Clone, Debug)]
pub struct WaveSample {
    pub field: ComplexField,
    pub warning: Option<String>,
}

/// `e^{ipx} e^{i(ω−p²)t} e^{iγ} φ_ω(x − 2pt − σ)`, translated periodically.
/// The boost phase is taken continuous across the soliton core, so the seam
/// of the periodic box sits where `φ_ω` is negligible.
pub fn solitary_wave(params: &SolitonParams, t: f64, grid: &Arc<Grid>) -> Result<WaveSample> {
    let SolitonParams {
        omega,
        gamma,
        p,
        sigma,
    } = SolitonParams::new(params.omega, params.gamma, params.p, params.sigma)?;
    let l = grid.half_width();
    let center = 2.0 * p * t + sigma;
    let phase0 = (omega - p * p) * t + gamma;
    let field = ComplexField::from_fn(grid, |x| {
        let y = wrap(x - center, l);
        C64::from_polar(profile::phi(omega, y), p * (y + center) + phase0)
    });
    let width = 1.0 / omega.sqrt();
    let c = wrap(center, l);
    let warning = (l - c.abs() < 5.0 * width).then(|| {
        format!("soliton center {c:.3} within five widths of the boundary ±{l}")
    });
    Ok(WaveSample { field, warning })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conserved {
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
}

pub fn conserved_quantities(psi: &ComplexField) -> Conserved {
    let dx = psi.grid.dx();
    let d = derivative(psi, 1);
    let mut m = 0.0;
    let mut pm = 0.0;
    let mut e = 0.0;
    for (v, dv) in psi.values.iter().zip(&d.values) {
        let a = v.norm_sqr();
        m += a;
        pm += (dv * v.conj()).im;
        e += 0.5 * dv.norm_sqr() - 0.25 * a * a;
    }
    Conserved {
        mass: 0.5 * m * dx,
        momentum: 0.5 * pm * dx,
        energy: e * dx,
    }
}
