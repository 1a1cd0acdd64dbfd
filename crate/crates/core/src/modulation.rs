//! Modulated decomposition
//!
//! ```text
//! ψ(t,x) = e^{ip(x−σ)} e^{iγ} (φ_ω(x−σ) + u(t, x−σ))
//! ```
//!
//! with the four orthogonality conditions `⟨U, σ₂Y_{j,ω}⟩ = 0`, the
//! modulation ODE system `𝕄 ẋ = ⟨iN(U), σ₂Y_j⟩`, and the renormalized
//! radiation `V = e^{i(p−p̲)yσ₃} U` with its phases `θ₁, θ₂`.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{Matrix4, Vector4};

use crate::error::{Error, Result};
use crate::grid::{derivative, inner_product_vector, C64, ComplexField, Grid, VectorField, I};
use crate::linop::{c_omega, eigenfunction_y, eigenfunction_y_domega, eigenfunction_y_dx};
use crate::series::{self, fmt17, TimeSeries};
use crate::soliton::{profile, SolitonParams};
use crate::solver::Trajectory;

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            tol: 1e-10,
            max_iter: 50,
            max_halvings: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModulationState {
    pub t: f64,
    pub params: SolitonParams,
    /// Radiation `(u, ū)` in the moving frame `y = x − σ`.
    pub u: VectorField,
    /// `max_j |⟨U, σ₂Y_j⟩|`.
    pub newton_residual: f64,
    pub orthogonality: [f64; 4],
    pub iterations: usize,
}

/// `e^{−ipy−iγ} ψ(y+σ)`; the radiation is this minus `φ_ω`.
fn frame(psi: &ComplexField, q: &SolitonParams) -> ComplexField {
    psi.shifted(q.sigma)
        .map(|y, v| v * C64::from_polar(1.0, -q.p * y - q.gamma))
}

/// Radiation profile `u(y)` of `ψ` relative to the given parameters.
pub fn radiation(psi: &ComplexField, q: &SolitonParams) -> ComplexField {
    frame(psi, q).map(|y, w| w - profile::phi(q.omega, y))
}

/// Test functions for the real form of the four pairings:
/// `⟨U,σ₂Y_j⟩ = −2∫P_j(u) g_j`, `P = (Re, Im, Im, Re)`, `g = (φ, ∂_ωφ, φ', yφ)`.
fn test_functions(omega: f64, y: f64) -> [f64; 4] {
    [
        profile::phi(omega, y),
        profile::dphi_domega(omega, y),
        profile::dphi_dx(omega, y),
        y * profile::phi(omega, y),
    ]
}

fn test_functions_domega(omega: f64, y: f64) -> [f64; 4] {
    [
        profile::dphi_domega(omega, y),
        profile::d2phi_domega2(omega, y),
        profile::dx_dphi_domega(omega, y),
        y * profile::dphi_domega(omega, y),
    ]
}

fn part(j: usize, v: C64) -> f64 {
    if j == 0 || j == 3 {
        v.re
    } else {
        v.im
    }
}

/// The four real pairings `⟨U, σ₂Y_{j,ω}⟩` of `U = (u, ū)`.
pub fn orthogonality(u: &ComplexField, omega: f64) -> [f64; 4] {
    let mut r = [0.0; 4];
    for (&y, &v) in u.grid.x().iter().zip(&u.values) {
        let g = test_functions(omega, y);
        for j in 0..4 {
            r[j] += part(j, v) * g[j];
        }
    }
    r.map(|s| -2.0 * s * u.grid.dx())
}

fn max_abs(r: &[f64; 4]) -> f64 {
    r.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Damped Newton solve of the orthogonality conditions for `(ω, γ, p, σ)`.
/// The Jacobian is analytic: with `w = e^{−ipy−iγ}ψ(y+σ)`,
/// `∂_γu = −iw`, `∂_pu = −iyw`, `∂_σu = e^{−ipy−iγ}ψ'(y+σ)`, `∂_ωu = −∂_ωφ`,
/// plus the ω-dependence of the test functions.
pub fn fit_parameters(
    psi: &ComplexField,
    seed: &SolitonParams,
    opts: &FitOptions,
) -> Result<ModulationState> {
    let mut q = SolitonParams::new(seed.omega, seed.gamma, seed.p, seed.sigma)?;
    let dpsi = derivative(psi, 1);
    let g = psi.grid.clone();
    let dx = g.dx();

    let mut u = radiation(psi, &q);
    let mut r = orthogonality(&u, q.omega);
    let mut res = max_abs(&r);
    let mut it = 0;
    while res >= opts.tol {
        if it == opts.max_iter {
            return Err(Error::NewtonFailed {
                iterations: it,
                residual: res,
            });
        }
        it += 1;

        let w = frame(psi, &q);
        let dw = frame(&dpsi, &q);
        let mut jac = Matrix4::<f64>::zeros();
        for (k, &y) in g.x().iter().enumerate() {
            let gj = test_functions(q.omega, y);
            let gw = test_functions_domega(q.omega, y);
            let d_omega = C64::new(-profile::dphi_domega(q.omega, y), 0.0);
            let cols = [d_omega, -I * w.values[k], -I * y * w.values[k], dw.values[k]];
            for j in 0..4 {
                for (c, dv) in cols.iter().enumerate() {
                    jac[(j, c)] += part(j, *dv) * gj[j];
                }
                jac[(j, 0)] += part(j, u.values[k]) * gw[j];
            }
        }
        jac *= -2.0 * dx;
        let step = jac
            .lu()
            .solve(&-Vector4::from(r))
            .ok_or(Error::NewtonFailed {
                iterations: it,
                residual: res,
            })?;

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let trial = SolitonParams {
                omega: q.omega + lambda * step[0],
                gamma: q.gamma + lambda * step[1],
                p: q.p + lambda * step[2],
                sigma: q.sigma + lambda * step[3],
            };
            if trial.omega > 0.0 && trial.omega.is_finite() {
                let ut = radiation(psi, &trial);
                let rt = orthogonality(&ut, trial.omega);
                let rest = max_abs(&rt);
                if rest.is_finite() && rest < res {
                    accepted = Some((trial, ut, rt, rest));
                    break;
                }
            }
            lambda *= 0.5;
        }
        match accepted {
            Some((tq, tu, tr, tres)) => {
                q = tq;
                u = tu;
                r = tr;
                res = tres;
            }
            None => {
                return Err(Error::NewtonFailed {
                    iterations: it,
                    residual: res,
                })
            }
        }
    }
    Ok(ModulationState {
        t: 0.0,
        params: q,
        u: VectorField::from_scalar(&u),
        newton_residual: res,
        orthogonality: r,
        iterations: it,
    })
}

#[derive(Clone, Debug)]
pub struct TrackFailure {
    pub t: f64,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct ModulationSeries {
    pub states: Vec<ModulationState>,
    pub failure: Option<TrackFailure>,
}

impl ModulationSeries {
    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn omega(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.params.omega).collect()
    }

    pub fn gamma(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.params.gamma).collect()
    }

    pub fn p(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.params.p).collect()
    }

    pub fn sigma(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.params.sigma).collect()
    }

    pub fn last(&self) -> Option<&ModulationState> {
        self.states.last()
    }

    /// CSV with θ taken relative to the given frozen parameters.
    pub fn write_csv<W: Write>(&self, mut w: W, omega_bar: f64, p_bar: f64) -> Result<()> {
        let rn = renormalize(self, omega_bar, p_bar)?;
        writeln!(
            w,
            "t,omega,gamma,p,sigma,theta1,theta2,newton_residual,orth1,orth2,orth3,orth4"
        )?;
        for (k, s) in self.states.iter().enumerate() {
            let q = &s.params;
            let mut row = vec![s.t, q.omega, q.gamma, q.p, q.sigma];
            row.extend([rn.theta1[k], rn.theta2[k], s.newton_residual]);
            row.extend(s.orthogonality);
            let line: Vec<String> = row.into_iter().map(fmt17).collect();
            writeln!(w, "{}", line.join(","))?;
        }
        Ok(())
    }
}

/// Fit every frame of a trajectory, seeding each fit with the previous
/// parameters advanced along the free soliton flow `γ̇ = p² + ω`, `σ̇ = 2p`.
pub fn track(traj: &Trajectory, seed: &SolitonParams, opts: &FitOptions) -> ModulationSeries {
    let mut states: Vec<ModulationState> = Vec::with_capacity(traj.times.len());
    let mut failure = None;
    for (&t, psi) in traj.times.iter().zip(&traj.snapshots) {
        let guess = match states.last() {
            None => *seed,
            Some(prev) => {
                let q = prev.params;
                let dt = t - prev.t;
                SolitonParams {
                    gamma: q.gamma + (q.p * q.p + q.omega) * dt,
                    sigma: q.sigma + 2.0 * q.p * dt,
                    ..q
                }
            }
        };
        match fit_parameters(psi, &guess, opts) {
            Ok(mut s) => {
                s.t = t;
                states.push(s);
            }
            Err(e) => {
                failure = Some(TrackFailure {
                    t,
                    reason: e.to_string(),
                });
                break;
            }
        }
    }
    ModulationSeries { states, failure }
}

fn pairing(u: &VectorField, v: &VectorField) -> C64 {
    inner_product_vector(u, v).expect("fields share a grid")
}

/// `𝕄₁(ω)`.
pub fn m1(omega: f64) -> Matrix4<C64> {
    let c = C64::new(c_omega(omega), 0.0);
    let m = C64::new(4.0 * omega.sqrt(), 0.0);
    let z = C64::new(0.0, 0.0);
    Matrix4::new(z, c, z, z, c, z, z, z, z, z, z, -m, z, z, m, z)
}

/// `𝕄 = 𝕄₁(ω) + 𝕄₂(U, ω)`; row `j` of `𝕄₂` pairs `U` against
/// `σ₁Y_j`, `σ₂∂_ωY_j`, `−σ₂∂_yY_j`, `yσ₁Y_j`.
pub fn assemble_m(u: &VectorField, omega: f64) -> Result<Matrix4<C64>> {
    let g = &u.grid;
    let mut m = m1(omega);
    for j in 1..=4 {
        let y = eigenfunction_y(omega, j, g)?;
        let tests = [
            y.sigma1(),
            eigenfunction_y_domega(omega, j, g)?.sigma2(),
            eigenfunction_y_dx(omega, j, g)?.sigma2().scale(C64::new(-1.0, 0.0)),
            y.sigma1().map(|x, a, b| (x * a, x * b)),
        ];
        for (c, t) in tests.iter().enumerate() {
            m[(j - 1, c)] += pairing(u, t);
        }
    }
    Ok(m)
}

pub fn condition_number(m: &Matrix4<C64>) -> f64 {
    let s = m.svd(false, false).singular_values;
    s.max() / s.min()
}

pub fn operator_norm(m: &Matrix4<C64>) -> f64 {
    m.svd(false, false).singular_values.max()
}

/// Quadratic part `Q_ω(U) = (−φ(u₁² + 2u₁u₂), φ(u₂² + 2u₁u₂))`.
pub fn nonlinearity_q(u: &VectorField, omega: f64) -> VectorField {
    u.map(|y, a, b| {
        let f = profile::phi(omega, y);
        (-f * (a * a + 2.0 * a * b), f * (b * b + 2.0 * a * b))
    })
}

/// Cubic part `C(U) = (−u₁u₂u₁, u₂u₁u₂)`.
pub fn nonlinearity_c(u: &VectorField) -> VectorField {
    u.map(|_, a, b| (-a * b * a, b * a * b))
}

pub fn nonlinearity_n(u: &VectorField, omega: f64) -> VectorField {
    nonlinearity_q(u, omega)
        .add(&nonlinearity_c(u))
        .expect("same grid")
}

/// Right-hand side `(⟨iN(U), σ₂Y_j⟩)_j`.
pub fn modulation_rhs(u: &VectorField, omega: f64) -> Result<[C64; 4]> {
    let n = nonlinearity_n(u, omega).scale(I);
    let mut out = [C64::new(0.0, 0.0); 4];
    for (j, o) in out.iter_mut().enumerate() {
        *o = pairing(&n, &eigenfunction_y(omega, j + 1, &u.grid)?.sigma2());
    }
    Ok(out)
}

/// Finite-difference parameter derivatives along a series.
#[derive(Clone, Debug)]
pub struct ParameterRates {
    pub t: Vec<f64>,
    pub omega_dot: Vec<f64>,
    pub gamma_dot: Vec<f64>,
    pub p_dot: Vec<f64>,
    pub sigma_dot: Vec<f64>,
}

pub fn parameter_rates(series: &ModulationSeries) -> ParameterRates {
    let t = series.times();
    ParameterRates {
        omega_dot: series::derivative(&t, &series.omega()),
        gamma_dot: series::derivative(&t, &series.gamma()),
        p_dot: series::derivative(&t, &series.p()),
        sigma_dot: series::derivative(&t, &series.sigma()),
        t,
    }
}

/// Residual `max_j |(𝕄ẋ − ⟨iN(U),σ₂Y_j⟩)_j|` at interior samples, with
/// parameter derivatives by centered differences at the stored cadence.
/// Columns: `residual`, `rhs` (size of the right-hand side).
pub fn verify_modulation_odes(series: &ModulationSeries) -> Result<TimeSeries> {
    let n = series.states.len();
    if n < 3 {
        return Err(Error::param("series", "need at least three samples"));
    }
    let rates = parameter_rates(series);
    let mut out = TimeSeries::new("modulation_ode_residual", &["residual", "rhs"]);
    for k in 1..n - 1 {
        let s = &series.states[k];
        let q = &s.params;
        let xdot = Vector4::new(
            C64::new(rates.gamma_dot[k] + q.p * q.p - q.omega - q.p * rates.sigma_dot[k], 0.0),
            C64::new(rates.omega_dot[k], 0.0),
            C64::new(rates.sigma_dot[k] - 2.0 * q.p, 0.0),
            C64::new(rates.p_dot[k], 0.0),
        );
        let lhs = assemble_m(&s.u, q.omega)? * xdot;
        let rhs = modulation_rhs(&s.u, q.omega)?;
        let mut res: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for j in 0..4 {
            res = res.max((lhs[j] - rhs[j]).norm());
            scale = scale.max(rhs[j].norm());
        }
        out.push(s.t, vec![res, scale])?;
    }
    Ok(out)
}

/// Renormalized radiation and phases relative to frozen `(ω̲, p̲)`.
#[derive(Clone, Debug)]
pub struct Renormalized {
    pub omega_bar: f64,
    pub p_bar: f64,
    pub t: Vec<f64>,
    pub v: Vec<VectorField>,
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
    pub theta1_dot: Vec<f64>,
    pub theta2_dot: Vec<f64>,
    /// `θ̇₁` through the closed identity `γ̇ − p̲² − ω̲ − p̲θ̇₂`.
    pub theta1_dot_identity: Vec<f64>,
    /// `θ̇₂` through `σ̇ − 2p̲`.
    pub theta2_dot_identity: Vec<f64>,
}

impl Renormalized {
    /// Largest disagreement between the displayed θ̇ formulas and the identities.
    pub fn identity_defect(&self) -> f64 {
        let d1 = self.theta1_dot.iter().zip(&self.theta1_dot_identity);
        let d2 = self.theta2_dot.iter().zip(&self.theta2_dot_identity);
        d1.chain(d2).fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

/// `V = e^{i(p−p̲)yσ₃} U`, i.e. `(e^{i(p−p̲)y}u, e^{−i(p−p̲)y}ū)`.
pub fn gauge(u: &VectorField, p: f64, p_bar: f64) -> VectorField {
    let dp = p - p_bar;
    u.map(|y, a, b| {
        let e = C64::from_polar(1.0, dp * y);
        (e * a, e.conj() * b)
    })
}

pub fn renormalize(series: &ModulationSeries, omega_bar: f64, p_bar: f64) -> Result<Renormalized> {
    if !(omega_bar > 0.0) {
        return Err(Error::param("omega_bar", format!("{omega_bar} must be positive")));
    }
    if series.states.is_empty() {
        return Err(Error::param("series", "empty"));
    }
    let rates = parameter_rates(series);
    let n = series.states.len();
    let mut theta1_dot = Vec::with_capacity(n);
    let mut theta2_dot = Vec::with_capacity(n);
    let mut id1 = Vec::with_capacity(n);
    let mut id2 = Vec::with_capacity(n);
    for (k, s) in series.states.iter().enumerate() {
        let SolitonParams { omega, p, .. } = s.params;
        let (gd, sd) = (rates.gamma_dot[k], rates.sigma_dot[k]);
        let dp = p - p_bar;
        theta1_dot.push(omega - omega_bar + (sd - 2.0 * p_bar) * dp - dp * dp + (gd + p * p - omega - p * sd));
        theta2_dot.push(sd - 2.0 * p_bar);
        id2.push(sd - 2.0 * p_bar);
        id1.push(gd - p_bar * p_bar - omega_bar - p_bar * id2[k]);
    }
    let t = rates.t;
    Ok(Renormalized {
        omega_bar,
        p_bar,
        v: series
            .states
            .iter()
            .map(|s| gauge(&s.u, s.params.p, p_bar))
            .collect(),
        theta1: series::cumulative_trapezoid(&t, &theta1_dot),
        theta2: series::cumulative_trapezoid(&t, &theta2_dot),
        t,
        theta1_dot,
        theta2_dot,
        theta1_dot_identity: id1,
        theta2_dot_identity: id2,
    })
}

/// Grid of the stored radiation fields.
pub fn series_grid(series: &ModulationSeries) -> Option<Arc<Grid>> {
    series.states.first().map(|s| s.u.grid.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::check_J_invariance;
    use crate::soliton::solitary_wave;
    use crate::solver::{evolve, EvolveOptions};

    fn grid() -> Arc<Grid> {
        Grid::new(2048, 40.0).unwrap()
    }

    fn bump(g: &Arc<Grid>, eps: f64) -> ComplexField {
        ComplexField::from_fn(g, |x| C64::new(eps * (-(x - 0.5) * (x - 0.5) / 2.0).exp(), 0.3 * eps * (-x * x).exp()))
    }

    #[test]
    fn exact_soliton_is_recovered() {
        let g = grid();
        let prm = SolitonParams::new(1.2, 0.3, 0.15, -1.0).unwrap();
        let t = 0.7;
        let psi = solitary_wave(&prm, t, &g).unwrap().field;
        let expect = SolitonParams {
            gamma: prm.gamma + prm.p * (2.0 * prm.p * t + prm.sigma) + (prm.omega - prm.p * prm.p) * t,
            sigma: prm.sigma + 2.0 * prm.p * t,
            ..prm
        };
        let seed = SolitonParams {
            omega: 1.1,
            gamma: expect.gamma + 0.05,
            p: 0.1,
            sigma: expect.sigma - 0.1,
        };
        let s = fit_parameters(&psi, &seed, &FitOptions::default()).unwrap();
        let q = s.params;
        for (a, b) in [(q.omega, expect.omega), (q.gamma, expect.gamma), (q.p, expect.p), (q.sigma, expect.sigma)] {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
        assert!(s.u.norm_linf() < 1e-9);
    }

    #[test]
    fn perturbed_soliton_fits_within_tolerance() {
        let g = grid();
        let eps = 0.01;
        let phi = solitary_wave(&SolitonParams::at_rest(1.0), 0.0, &g).unwrap().field;
        let psi = phi.zip_with(&bump(&g, eps), |a, b| a + b).unwrap();
        let s = fit_parameters(&psi, &SolitonParams::at_rest(1.0), &FitOptions::default()).unwrap();
        assert!(s.newton_residual < 1e-10);
        assert!(s.orthogonality.iter().all(|r| r.abs() < 1e-10));
        let h1 = s.u.first_field().norm_h1();
        assert!(h1 < 5.0 * eps && h1 > 0.1 * eps, "{h1}");
        assert!(check_J_invariance(&s.u) < 1e-15);

        // basin: displaced seeds land on the same fixed point
        for (dg, ds) in [(0.1, 0.1), (-0.1, 0.1), (0.1, -0.1)] {
            let seed = SolitonParams {
                gamma: dg,
                sigma: ds,
                ..SolitonParams::at_rest(1.0)
            };
            let o = fit_parameters(&psi, &seed, &FitOptions::default()).unwrap().params;
            let q = s.params;
            let d = (o.omega - q.omega).abs() + (o.gamma - q.gamma).abs() + (o.p - q.p).abs() + (o.sigma - q.sigma).abs();
            assert!(d < 1e-9, "{d}");
        }
    }

    #[test]
    fn newton_failure_is_reported() {
        let g = grid();
        let psi = ComplexField::zeros(&g);
        let opts = FitOptions {
            max_iter: 3,
            ..FitOptions::default()
        };
        match fit_parameters(&psi, &SolitonParams::at_rest(1.0), &opts) {
            Err(Error::NewtonFailed { residual, .. }) => assert!(residual > 0.0),
            other => panic!("expected failure, got {other:?}"),
        }
    }

    #[test]
    fn matrix_structure() {
        let g = grid();
        let m = assemble_m(&VectorField::zeros(&g), 1.0).unwrap();
        let expect = [
            [0.0, 2.0, 0.0, 0.0],
            [2.0, 0.0, 0.0, 0.0],
            [0.0, 0.0, 0.0, -4.0],
            [0.0, 0.0, 4.0, 0.0],
        ];
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(m[(i, j)], C64::new(expect[i][j], 0.0));
            }
        }
        assert!((condition_number(&m) - 2.0).abs() < 1e-12);

        let u = VectorField::from_scalar(&bump(&g, 1.0));
        let u = u.scale(C64::new(0.05 / u.first_field().norm_h1(), 0.0));
        let full = assemble_m(&u, 1.0).unwrap();
        let m2 = full - m1(1.0);
        assert!(operator_norm(&m2) < 1.0);
        assert!(operator_norm(&m2) > 0.0);
        assert!(condition_number(&full) < 100.0);
        // J-invariant U makes every pairing real
        assert!(m2.iter().all(|v| v.im.abs() < 1e-14));
    }

    #[test]
    fn nonlinearity_structure() {
        let g = grid();
        let z = nonlinearity_n(&VectorField::zeros(&g), 1.0);
        assert_eq!(z.norm_linf(), 0.0);
        let u = VectorField::from_scalar(&bump(&g, 0.3));
        let n = nonlinearity_n(&u, 1.0);
        // N(U) has the form (a, −ā), so iN(U) is J-invariant
        assert!(check_J_invariance(&n.scale(I)) < 1e-12);
        let two = u.scale(C64::new(2.0, 0.0));
        let q1 = nonlinearity_q(&u, 1.0);
        let q2 = nonlinearity_q(&two, 1.0);
        let c1 = nonlinearity_c(&u);
        let c2 = nonlinearity_c(&two);
        assert!(q2.sub(&q1.scale(C64::new(4.0, 0.0))).unwrap().norm_linf() < 1e-12);
        assert!(c2.sub(&c1.scale(C64::new(8.0, 0.0))).unwrap().norm_linf() < 1e-12);
        // direct pointwise formula for the first slot
        let x = g.x();
        for k in (0..g.n()).step_by(97) {
            let a = u.first[k];
            let f = profile::phi(1.0, x[k]);
            let want = -f * (a * a + 2.0 * a * a.conj()) - a * a * a.conj();
            assert!((n.first[k] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn pure_soliton_track_follows_free_flow() {
        let g = grid();
        let prm = SolitonParams::new(1.0, 0.2, 0.1, 0.0).unwrap();
        let psi0 = solitary_wave(&prm, 0.0, &g).unwrap().field;
        let opts = EvolveOptions {
            dt: 2e-3,
            t_final: 4.0,
            store_every: 0.25,
            ..EvolveOptions::default()
        };
        let traj = evolve(&psi0, &opts).unwrap();
        let seed = SolitonParams {
            gamma: prm.gamma + prm.p * prm.sigma,
            ..prm
        };
        let series = track(&traj, &seed, &FitOptions::default());
        assert!(series.failure.is_none());
        let rates = parameter_rates(&series);
        for k in 0..series.states.len() {
            let q = series.states[k].params;
            assert!(rates.omega_dot[k].abs() < 1e-6);
            assert!(rates.p_dot[k].abs() < 1e-6);
            assert!((rates.sigma_dot[k] - 2.0 * q.p).abs() < 1e-6);
            assert!((rates.gamma_dot[k] - q.p * q.p - q.omega).abs() < 1e-6);
        }
        let res = verify_modulation_odes(&series).unwrap();
        assert!(res.column("residual").unwrap().iter().all(|r| *r < 1e-6));

        let rn = renormalize(&series, 1.0, 0.1).unwrap();
        assert!(rn.identity_defect() < 1e-10);
        for (v, s) in rn.v.iter().zip(&series.states) {
            assert!(v.sub(&s.u).unwrap().norm_linf() < 1e-15);
        }
        let sd = series::derivative(&rn.t, &series.sigma());
        let want = series::cumulative_trapezoid(&rn.t, &sd.iter().map(|v| v - 0.2).collect::<Vec<_>>());
        for (a, b) in rn.theta2.iter().zip(&want) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn gauge_is_unimodular() {
        let g = grid();
        let u = VectorField::from_scalar(&bump(&g, 0.2));
        let v = gauge(&u, 0.37, -0.1);
        for k in 0..g.n() {
            assert!((v.first[k].norm() - u.first[k].norm()).abs() < 1e-15);
            assert!((v.second[k].norm() - u.second[k].norm()).abs() < 1e-15);
        }
        assert!(check_J_invariance(&v) < 1e-15);
    }

    #[test]
    fn perturbed_run_satisfies_the_modulation_odes() {
        let g = grid();
        let eps = 0.05;
        let phi = solitary_wave(&SolitonParams::at_rest(1.0), 0.0, &g).unwrap().field;
        let psi0 = phi.zip_with(&bump(&g, eps), |a, b| a + b).unwrap();
        let opts = EvolveOptions {
            dt: 1e-3,
            t_final: 3.0,
            store_every: 0.05,
            ..EvolveOptions::default()
        };
        let traj = evolve(&psi0, &opts).unwrap();
        let series = track(&traj, &SolitonParams::at_rest(1.0), &FitOptions::default());
        assert!(series.failure.is_none());

        let coarse = ModulationSeries {
            states: series.states.iter().step_by(2).cloned().collect(),
            failure: None,
        };
        let max_in = |s: &TimeSeries| {
            s.t.iter()
                .zip(s.values())
                .filter(|(t, _)| **t >= 1.0 && **t <= 2.0)
                .fold(0.0f64, |m, (_, r)| m.max(r))
        };
        let fine = max_in(&verify_modulation_odes(&series).unwrap());
        let rough = max_in(&verify_modulation_odes(&coarse).unwrap());
        let ratio = rough / fine;
        assert!(ratio > 3.0 && ratio < 5.0, "refinement ratio {ratio} ({rough} / {fine})");

        // a single corrupted γ sample is detected
        let mut bad = series.clone();
        bad.states[30].params.gamma += 1e-3;
        let worst = verify_modulation_odes(&bad).unwrap().values().into_iter().fold(0.0f64, f64::max);
        assert!(worst > 100.0 * fine, "{worst} vs {fine}");
    }
}
