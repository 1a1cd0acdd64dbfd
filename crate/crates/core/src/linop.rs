//! The linearized operator
//!
//! ```text
//! H(ω) = [ -∂² + ω − 2φ²      −φ²       ]
//!        [      φ²         ∂² − ω + 2φ² ]
//! ```
//!
//! its generalized kernel `Y₁..Y₄`, the threshold resonances `Φ±`, and the
//! discrete/essential projections built from the symplectic pairings
//! `⟨·, σ₂ Y_j⟩`.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{dot, C64, Grid, VectorField, I};
use crate::soliton::profile;

#[derive(Clone, Debug)]
pub struct LinearizedOperator {
    pub omega: f64,
    pub grid: Arc<Grid>,
    phi2: Vec<f64>,
}

impl LinearizedOperator {
    pub fn new(omega: f64, grid: &Arc<Grid>) -> Result<Self> {
        if !(omega > 0.0) {
            return Err(Error::param("omega", format!("{omega} must be positive")));
        }
        let phi2 = grid
            .x()
            .iter()
            .map(|&x| profile::phi(omega, x).powi(2))
            .collect();
        Ok(LinearizedOperator {
            omega,
            grid: grid.clone(),
            phi2,
        })
    }

    pub fn apply(&self, u: &VectorField) -> Result<VectorField> {
        if !self.grid.same_as(&u.grid) {
            return Err(Error::GridMismatch);
        }
        let w = self.omega;
        let d2 = u.derivative(2);
        let n = self.grid.n();
        let mut first = Vec::with_capacity(n);
        let mut second = Vec::with_capacity(n);
        for j in 0..n {
            let (a, b, q) = (u.first[j], u.second[j], self.phi2[j]);
            first.push(-d2.first[j] + w * a - 2.0 * q * a - q * b);
            second.push(d2.second[j] - w * b + q * a + 2.0 * q * b);
        }
        Ok(VectorField {
            grid: self.grid.clone(),
            first,
            second,
        })
    }
}

pub fn apply_h(op: &LinearizedOperator, u: &VectorField) -> Result<VectorField> {
    op.apply(u)
}

fn pair(grid: &Arc<Grid>, f: impl Fn(f64) -> C64, g: impl Fn(f64) -> C64) -> VectorField {
    VectorField::from_fn(grid, |x| (f(x), g(x)))
}

fn check_index(j: usize) -> Result<()> {
    if (1..=4).contains(&j) {
        Ok(())
    } else {
        Err(Error::param("j", format!("{j} not in 1..=4")))
    }
}

/// `Y₁ = (iφ, −iφ)`, `Y₂ = (∂_ωφ, ∂_ωφ)`, `Y₃ = (φ', φ')`, `Y₄ = (ixφ, −ixφ)`.
pub fn eigenfunction_y(omega: f64, j: usize, grid: &Arc<Grid>) -> Result<VectorField> {
    check_index(j)?;
    let w = omega;
    let re = |v: f64| C64::new(v, 0.0);
    Ok(match j {
        1 => pair(grid, |x| I * profile::phi(w, x), |x| -I * profile::phi(w, x)),
        2 => pair(grid, |x| re(profile::dphi_domega(w, x)), |x| re(profile::dphi_domega(w, x))),
        3 => pair(grid, |x| re(profile::dphi_dx(w, x)), |x| re(profile::dphi_dx(w, x))),
        _ => pair(grid, |x| I * x * profile::phi(w, x), |x| -I * x * profile::phi(w, x)),
    })
}

/// `∂_ω Y_j`, analytic.
pub fn eigenfunction_y_domega(omega: f64, j: usize, grid: &Arc<Grid>) -> Result<VectorField> {
    check_index(j)?;
    let w = omega;
    let re = |v: f64| C64::new(v, 0.0);
    Ok(match j {
        1 => pair(grid, |x| I * profile::dphi_domega(w, x), |x| -I * profile::dphi_domega(w, x)),
        2 => pair(grid, |x| re(profile::d2phi_domega2(w, x)), |x| re(profile::d2phi_domega2(w, x))),
        3 => pair(grid, |x| re(profile::dx_dphi_domega(w, x)), |x| re(profile::dx_dphi_domega(w, x))),
        _ => pair(
            grid,
            |x| I * x * profile::dphi_domega(w, x),
            |x| -I * x * profile::dphi_domega(w, x),
        ),
    })
}

/// `∂_x Y_j`, analytic.
pub fn eigenfunction_y_dx(omega: f64, j: usize, grid: &Arc<Grid>) -> Result<VectorField> {
    check_index(j)?;
    let w = omega;
    let re = |v: f64| C64::new(v, 0.0);
    let x_phi = |x: f64| profile::phi(w, x) + x * profile::dphi_dx(w, x);
    Ok(match j {
        1 => pair(grid, |x| I * profile::dphi_dx(w, x), |x| -I * profile::dphi_dx(w, x)),
        2 => pair(grid, |x| re(profile::dx_dphi_domega(w, x)), |x| re(profile::dx_dphi_domega(w, x))),
        3 => pair(grid, |x| re(profile::d2phi_dx2(w, x)), |x| re(profile::d2phi_dx2(w, x))),
        _ => pair(grid, |x| I * x_phi(x), |x| -I * x_phi(x)),
    })
}

/// Components `(Φ₁, Φ₂) = (tanh², −sech²)(√ω x)/√(2π)` of `Φ₊`.
pub fn resonance_components(omega: f64, x: f64) -> (f64, f64) {
    let t = (omega.sqrt() * x).tanh();
    let c = 1.0 / (2.0 * PI).sqrt();
    (c * t * t, -c * (1.0 - t * t))
}

/// `Φ₊` for `sign > 0`, `Φ₋ = σ₁Φ₊` otherwise.
pub fn resonance_phi(omega: f64, sign: i32, grid: &Arc<Grid>) -> VectorField {
    let plus = VectorField::from_fn(grid, |x| {
        let (a, b) = resonance_components(omega, x);
        (C64::new(a, 0.0), C64::new(b, 0.0))
    });
    if sign > 0 {
        plus
    } else {
        plus.sigma1()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiscreteCoefficients {
    pub d: [C64; 4],
}

impl DiscreteCoefficients {
    pub fn max_abs(&self) -> f64 {
        self.d.iter().fold(0.0, |m, v| m.max(v.norm()))
    }
}

/// Cached kernel data for repeated projections at fixed `ω`.
#[derive(Clone, Debug)]
pub struct Projector {
    pub omega: f64,
    pub grid: Arc<Grid>,
    y: [VectorField; 4],
    sigma2_y: [VectorField; 4],
    denom: [C64; 4],
}

/// Partner index in the quotient formulas: `d₁` pairs with `Y₂`, etc.
const PARTNER: [usize; 4] = [1, 0, 3, 2];

impl Projector {
    pub fn new(omega: f64, grid: &Arc<Grid>) -> Result<Self> {
        let y: [VectorField; 4] = std::array::from_fn(|j| eigenfunction_y(omega, j + 1, grid).unwrap());
        let sigma2_y: [VectorField; 4] = std::array::from_fn(|j| y[j].sigma2());
        let mut denom = [C64::new(0.0, 0.0); 4];
        for j in 0..4 {
            let v = pairing(&y[j], &sigma2_y[PARTNER[j]]);
            if v.norm() < 1e-12 {
                return Err(Error::Singular(format!("pairing for d{} vanishes", j + 1)));
            }
            denom[j] = v;
        }
        Ok(Projector {
            omega,
            grid: grid.clone(),
            y,
            sigma2_y,
            denom,
        })
    }

    pub fn y(&self, j: usize) -> &VectorField {
        &self.y[j - 1]
    }

    pub fn sigma2_y(&self, j: usize) -> &VectorField {
        &self.sigma2_y[j - 1]
    }

    /// `⟨U, σ₂ Y_j⟩` for `j = 1..4`.
    pub fn symplectic_pairings(&self, u: &VectorField) -> Result<[C64; 4]> {
        if !self.grid.same_as(&u.grid) {
            return Err(Error::GridMismatch);
        }
        Ok(std::array::from_fn(|j| pairing(u, &self.sigma2_y[j])))
    }

    pub fn coefficients(&self, u: &VectorField) -> Result<DiscreteCoefficients> {
        let s = self.symplectic_pairings(u)?;
        Ok(DiscreteCoefficients {
            d: std::array::from_fn(|j| s[PARTNER[j]] / self.denom[j]),
        })
    }

    pub fn discrete(&self, u: &VectorField) -> Result<(DiscreteCoefficients, VectorField)> {
        let c = self.coefficients(u)?;
        let mut out = VectorField::zeros(&self.grid);
        for j in 0..4 {
            out.axpy(c.d[j], &self.y[j])?;
        }
        Ok((c, out))
    }

    pub fn essential(&self, u: &VectorField) -> Result<VectorField> {
        let (_, pd) = self.discrete(u)?;
        u.sub(&pd)
    }
}

fn pairing(u: &VectorField, v: &VectorField) -> C64 {
    (dot(&u.first, &v.first) + dot(&u.second, &v.second)) * u.grid.dx()
}

pub fn project_discrete(u: &VectorField, omega: f64) -> Result<(DiscreteCoefficients, VectorField)> {
    Projector::new(omega, &u.grid)?.discrete(u)
}

pub fn project_essential(u: &VectorField, omega: f64) -> Result<VectorField> {
    Projector::new(omega, &u.grid)?.essential(u)
}

/// `c_ω = 2 ω^{-1/2}`.
pub fn c_omega(omega: f64) -> f64 {
    2.0 / omega.sqrt()
}

/// Sup-norm of the residual of `H Φ = λ Φ` restricted to `|x| < window`.
pub fn eigen_residual(
    op: &LinearizedOperator,
    u: &VectorField,
    lambda: C64,
    rhs: &VectorField,
    window: f64,
) -> Result<f64> {
    let hu = op.apply(u)?;
    let r = hu.zip_with(rhs, |a, b| a - lambda * b)?;
    Ok(r.norm_linf_within(window))
}
