//! Asymptotic objects extracted from simulation data: low-frequency
//! amplitudes, local remainder, scattering profiles, the asymptotic field and
//! power-law fits of decay rates.

use std::f64::consts::PI;
use std::sync::Arc;

use crate::dft::{m_symbols, propagate_spectrum, DistortedFourier, DistortedSpectrum, FrequencyGrid};
use crate::error::{Error, Result};
use crate::grid::{C64, ComplexField, Grid, VectorField};
use crate::identities::FrakQ;
use crate::linop::{resonance_components, Projector};
use crate::modulation::Renormalized;
use crate::series::{self, TimeSeries};

use rayon::prelude::*;

/// Smooth even cutoff: 1 on `|ξ| ≤ 1`, 0 on `|ξ| ≥ 2`.
pub fn chi0(xi: f64) -> f64 {
    let a = xi.abs();
    if a <= 1.0 {
        return 1.0;
    }
    if a >= 2.0 {
        return 0.0;
    }
    let g = |s: f64| if s > 0.0 { (-1.0 / s).exp() } else { 0.0 };
    let (l, r) = (g(2.0 - a), g(a - 1.0));
    l / (l + r)
}

/// Distorted spectra `F̃±[V(t)]` of the renormalized radiation, frame by frame.
/// These are the raw transforms; the profiles are `propagate_spectrum(·, t)`.
#[derive(Clone, Debug)]
pub struct SpectrumSeries {
    pub omega_bar: f64,
    pub t: Vec<f64>,
    pub raw: Vec<DistortedSpectrum>,
}

impl SpectrumSeries {
    pub fn from_renormalized(renorm: &Renormalized, fgrid: &Arc<FrequencyGrid>) -> Result<Self> {
        let grid = renorm
            .v
            .first()
            .map(|v| v.grid.clone())
            .ok_or_else(|| Error::param("series", "empty"))?;
        let tf = DistortedFourier::new(renorm.omega_bar, &grid, fgrid)?;
        let raw = renorm.v.par_iter().map(|v| tf.forward(v)).collect::<Result<Vec<_>>>()?;
        Ok(SpectrumSeries {
            omega_bar: renorm.omega_bar,
            t: renorm.t.clone(),
            raw,
        })
    }

    pub fn fgrid(&self) -> &Arc<FrequencyGrid> {
        &self.raw[0].fgrid
    }

    /// Profile `f̃±(t_k)`.
    pub fn profile(&self, k: usize) -> DistortedSpectrum {
        propagate_spectrum(&self.raw[k], self.t[k])
    }

    /// Largest conjugation defect over all frames.
    pub fn max_conjugation_defect(&self) -> f64 {
        self.raw.iter().fold(0.0, |m, s| m.max(s.conjugation_defect()))
    }

    pub fn sup_norms(&self) -> TimeSeries {
        TimeSeries::scalar("spectrum_sup", self.t.clone(), self.raw.iter().map(|s| s.sup_norm()).collect())
    }
}

/// Complex amplitudes `h₁(t), h₂(t)` and their phase-filtered companions.
#[derive(Clone, Debug)]
pub struct Amplitudes {
    pub t: Vec<f64>,
    pub h1: Vec<C64>,
    pub h2: Vec<C64>,
    /// `∂t(e^{itω̲}h₁)`.
    pub dh1: Vec<C64>,
    /// `∂t(e^{−itω̲}h₂)`.
    pub dh2: Vec<C64>,
}

impl Amplitudes {
    pub fn to_series(&self) -> TimeSeries {
        let mut s = TimeSeries::new(
            "amplitudes_h",
            &["re_h1", "im_h1", "re_h2", "im_h2", "abs_h1", "abs_h2", "abs_dh1", "abs_dh2"],
        );
        for k in 0..self.t.len() {
            let (a, b) = (self.h1[k], self.h2[k]);
            let row = vec![a.re, a.im, b.re, b.im, a.norm(), b.norm(), self.dh1[k].norm(), self.dh2[k].norm()];
            s.push(self.t[k], row).expect("strictly increasing times");
        }
        s
    }
}

fn complex_derivative(t: &[f64], z: &[C64]) -> Vec<C64> {
    let re: Vec<f64> = z.iter().map(|v| v.re).collect();
    let im: Vec<f64> = z.iter().map(|v| v.im).collect();
    series::derivative(t, &re)
        .into_iter()
        .zip(series::derivative(t, &im))
        .map(|(a, b)| C64::new(a, b))
        .collect()
}

/// Since `f̃₊(t) = e^{it(ξ²+ω̲)}F̃₊[V(t)]`, the oscillatory weights cancel and
/// `h₁ = ∫χ₀ F̃₊[V(t)] dξ`, `h₂ = ∫χ₀ F̃₋[V(t)] dξ`.
pub fn amplitudes_h(spec: &SpectrumSeries) -> Amplitudes {
    let fg = spec.fgrid();
    let w: Vec<f64> = fg.weights().iter().zip(fg.nodes()).map(|(w, &x)| w * chi0(x)).collect();
    let quad = |v: &[C64]| -> C64 { v.iter().zip(&w).map(|(f, w)| f * *w).sum() };
    let h1: Vec<C64> = spec.raw.iter().map(|s| quad(&s.plus)).collect();
    let h2: Vec<C64> = spec.raw.iter().map(|s| quad(&s.minus)).collect();
    let wb = spec.omega_bar;
    let f1: Vec<C64> = h1.iter().zip(&spec.t).map(|(h, t)| h * C64::from_polar(1.0, t * wb)).collect();
    let f2: Vec<C64> = h2.iter().zip(&spec.t).map(|(h, t)| h * C64::from_polar(1.0, -t * wb)).collect();
    Amplitudes {
        t: spec.t.clone(),
        dh1: complex_derivative(&spec.t, &f1),
        dh2: complex_derivative(&spec.t, &f2),
        h1,
        h2,
    }
}

/// `R_v = v_e − h₁Φ₁ + h₂Φ₂`, `R_v̄ = v̄_e − h₁Φ₂ + h₂Φ₁` where `(v_e, v̄_e)` are
/// the components of `P̲_e V`.
#[allow(non_snake_case)]
pub fn remainder_R(
    v_e: &VectorField,
    h1: C64,
    h2: C64,
    omega_bar: f64,
) -> (ComplexField, ComplexField) {
    let r = v_e.map(|y, a, b| {
        let (p1, p2) = resonance_components(omega_bar, y);
        (a - h1 * p1 + h2 * p2, b - h1 * p2 + h2 * p1)
    });
    (r.first_field(), r.second_field())
}

/// `max_y ⟨y⟩^{−2}(|R_v| + |R_v̄|)`.
pub fn weighted_local_norm(rv: &ComplexField, rvb: &ComplexField) -> f64 {
    rv.grid
        .x()
        .iter()
        .zip(rv.values.iter().zip(&rvb.values))
        .fold(0.0, |m, (y, (a, b))| m.max((a.norm() + b.norm()) / (1.0 + y * y)))
}

/// Weighted remainder norm and discrete coefficients of `V(t)` relative to `ω̲`.
pub fn local_decay_series(renorm: &Renormalized, amps: &Amplitudes) -> Result<(TimeSeries, TimeSeries)> {
    let grid = renorm
        .v
        .first()
        .map(|v| v.grid.clone())
        .ok_or_else(|| Error::param("series", "empty"))?;
    let proj = Projector::new(renorm.omega_bar, &grid)?;
    let mut rem = TimeSeries::new("remainder_local", &["value"]);
    let mut disc = TimeSeries::new("discrete_coefficients", &["value", "d1", "d2", "d3", "d4"]);
    for (k, v) in renorm.v.iter().enumerate() {
        let (c, pd) = proj.discrete(v)?;
        let ve = v.sub(&pd)?;
        let (rv, rvb) = remainder_R(&ve, amps.h1[k], amps.h2[k], renorm.omega_bar);
        rem.push(renorm.t[k], vec![weighted_local_norm(&rv, &rvb)])?;
        let mut row = vec![c.max_abs()];
        row.extend(c.d.iter().map(|d| d.norm()));
        disc.push(renorm.t[k], row)?;
    }
    Ok((rem, disc))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DecayFit {
    pub name: String,
    pub t_min: f64,
    pub t_max: f64,
    pub slope: f64,
    pub stderr: f64,
    pub predicted: f64,
    /// Accepted slopes `[lo, hi]`.
    pub band: (f64, f64),
    pub pass: bool,
}

/// Least-squares slope of `log q` against `log t` over the window, using the
/// first column of the series.
pub fn decay_slope(
    s: &TimeSeries,
    window: (f64, f64),
    predicted: f64,
    band: (f64, f64),
) -> Result<DecayFit> {
    let (t0, t1) = window;
    if !(t0 > 0.0 && t0 < t1) {
        return Err(Error::param("window", format!("[{t0}, {t1}] is not a positive interval")));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (t, q) in s.t.iter().zip(s.values()) {
        if *t < t0 || *t > t1 {
            continue;
        }
        if !(q > 0.0) {
            return Err(Error::NonPositiveSample { t: *t });
        }
        xs.push(t.ln());
        ys.push(q.ln());
    }
    let n = xs.len();
    if n < 3 {
        return Err(Error::param("window", format!("only {n} samples in [{t0}, {t1}]")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    let stderr = (sse / (nf - 2.0) / sxx).sqrt();
    Ok(DecayFit {
        name: s.name.clone(),
        t_min: t0,
        t_max: t1,
        slope,
        stderr,
        predicted,
        band,
        pass: slope >= band.0 && slope <= band.1,
    })
}

/// Running supremum from the right, `sup_{s ≥ t} q(s)` over the stored samples.
/// Turns an oscillating magnitude into a monotone envelope with the same rate.
pub fn tail_envelope(s: &TimeSeries) -> TimeSeries {
    let v = s.values();
    let mut env = vec![0.0; v.len()];
    let mut m = f64::NEG_INFINITY;
    for k in (0..v.len()).rev() {
        m = m.max(v[k]);
        env[k] = m;
    }
    TimeSeries::scalar(&s.name, s.t.clone(), env)
}

pub fn write_summary<W: std::io::Write>(fits: &[DecayFit], mut w: W) -> std::io::Result<()> {
    writeln!(w, "quantity,slope,stderr,predicted,pass")?;
    for f in fits {
        writeln!(
            w,
            "{},{},{},{},{}",
            f.name,
            series::fmt17(f.slope),
            series::fmt17(f.stderr),
            series::fmt17(f.predicted),
            f.pass
        )?;
    }
    Ok(())
}

/// `Λ±(t_k, ξ) = ½∫₁^{t_k} |f̃±(s, ξ)|² ds/s`, trapezoid in `log s`; zero
/// before `t = 1`.
fn log_phase(spec: &SpectrumSeries, minus: bool) -> Vec<Vec<f64>> {
    let n = spec.fgrid().len();
    let mut acc = vec![0.0; n];
    let mut out = Vec::with_capacity(spec.t.len());
    let mut prev: Option<(f64, &[C64])> = None;
    for (t, s) in spec.t.iter().zip(&spec.raw) {
        let f: &[C64] = if minus { &s.minus } else { &s.plus };
        if *t >= 1.0 {
            if let Some((tp, fp)) = prev {
                let h = t.ln() - tp.max(1.0).ln();
                for m in 0..n {
                    acc[m] += 0.25 * h * (f[m].norm_sqr() + fp[m].norm_sqr());
                }
            }
            prev = Some((*t, f));
        } else {
            prev = Some((1.0, f));
        }
        out.push(acc.clone());
    }
    out
}

/// `W±(t_k, ·)` at every stored frame.
#[derive(Clone, Debug)]
pub struct ProfileHistory {
    pub fgrid: Arc<FrequencyGrid>,
    pub t: Vec<f64>,
    pub w_plus: Vec<Vec<C64>>,
    pub w_minus: Vec<Vec<C64>>,
}

impl ProfileHistory {
    /// `W₊ = e^{−iΛ₊}e^{iθ₁}e^{−iθ₂ξ}f̃₊`, `W₋ = e^{iΛ₋}e^{−iθ₁}e^{−iθ₂ξ}f̃₋`.
    pub fn new(spec: &SpectrumSeries, renorm: &Renormalized) -> Result<Self> {
        if spec.t != renorm.t {
            return Err(Error::param("theta_series", "times differ from the spectrum series"));
        }
        let lp = log_phase(spec, false);
        let lm = log_phase(spec, true);
        let nodes = spec.fgrid().nodes();
        let mut w_plus = Vec::with_capacity(spec.t.len());
        let mut w_minus = Vec::with_capacity(spec.t.len());
        for k in 0..spec.t.len() {
            let f = spec.profile(k);
            let (th1, th2) = (renorm.theta1[k], renorm.theta2[k]);
            w_plus.push(
                (0..nodes.len())
                    .map(|m| f.plus[m] * C64::from_polar(1.0, -lp[k][m] + th1 - th2 * nodes[m]))
                    .collect(),
            );
            w_minus.push(
                (0..nodes.len())
                    .map(|m| f.minus[m] * C64::from_polar(1.0, lm[k][m] - th1 - th2 * nodes[m]))
                    .collect(),
            );
        }
        Ok(ProfileHistory {
            fgrid: spec.fgrid().clone(),
            t: spec.t.clone(),
            w_plus,
            w_minus,
        })
    }

    pub fn index_of(&self, t: f64) -> usize {
        self.t
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))
            .map(|(k, _)| k)
            .unwrap_or(0)
    }

    /// `max_ξ max(|W₊(t_a) − W₊(t_b)|, |W₋(t_a) − W₋(t_b)|)` at the frames nearest `t_a, t_b`.
    pub fn difference(&self, ta: f64, tb: f64) -> f64 {
        let (a, b) = (self.index_of(ta), self.index_of(tb));
        let d = |x: &[C64], y: &[C64]| x.iter().zip(y).fold(0.0f64, |m, (p, q)| m.max((p - q).norm()));
        d(&self.w_plus[a], &self.w_plus[b]).max(d(&self.w_minus[a], &self.w_minus[b]))
    }
}

#[derive(Clone, Debug)]
pub struct ScatteringProfile {
    pub omega_bar: f64,
    pub fgrid: Arc<FrequencyGrid>,
    pub w_plus: Vec<C64>,
    pub w_minus: Vec<C64>,
    pub extraction_times: Vec<f64>,
    /// Largest sup-norm change across the extraction times.
    pub stability: f64,
    pub tolerance: f64,
    pub flagged: bool,
}

impl ScatteringProfile {
    pub fn zeros(omega_bar: f64, fgrid: &Arc<FrequencyGrid>) -> Self {
        let z = vec![C64::new(0.0, 0.0); fgrid.len()];
        ScatteringProfile {
            omega_bar,
            fgrid: fgrid.clone(),
            w_plus: z.clone(),
            w_minus: z,
            extraction_times: Vec::new(),
            stability: 0.0,
            tolerance: 0.0,
            flagged: false,
        }
    }

    /// `max_ξ |W₋(ξ) + r(ξ) conj(W₊(−ξ))|`.
    pub fn conjugation_defect(&self) -> f64 {
        let s = DistortedSpectrum {
            omega_bar: self.omega_bar,
            fgrid: self.fgrid.clone(),
            plus: self.w_plus.clone(),
            minus: self.w_minus.clone(),
            warning: None,
        };
        s.conjugation_defect()
    }

    pub fn sup(&self) -> (f64, f64) {
        let s = |v: &[C64]| v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        (s(&self.w_plus), s(&self.w_minus))
    }

    /// Linear interpolation in `ξ`; the flag reports clamping at the grid ends.
    fn sample(v: &[C64], fg: &FrequencyGrid, xi: f64) -> (C64, bool) {
        let nodes = fg.nodes();
        let n = nodes.len();
        if xi <= nodes[0] {
            return (v[0], xi < nodes[0]);
        }
        if xi >= nodes[n - 1] {
            return (v[n - 1], xi > nodes[n - 1]);
        }
        let s = (xi - nodes[0]) / fg.dxi();
        let m = (s.floor() as usize).min(n - 2);
        let a = s - m as f64;
        (v[m] * (1.0 - a) + v[m + 1] * a, false)
    }

    pub fn w_plus_at(&self, xi: f64) -> (C64, bool) {
        Self::sample(&self.w_plus, &self.fgrid, xi)
    }

    pub fn w_minus_at(&self, xi: f64) -> (C64, bool) {
        Self::sample(&self.w_minus, &self.fgrid, xi)
    }
}

/// Profile at the last frame; stability is measured over the last three frames.
#[allow(non_snake_case)]
pub fn extract_W(spec: &SpectrumSeries, renorm: &Renormalized, tolerance: f64) -> Result<ScatteringProfile> {
    let n = spec.t.len();
    if n < 3 {
        return Err(Error::param("series", format!("{n} frames, need at least 3")));
    }
    let (t0, t1) = (spec.t[0].max(1e-300), spec.t[n - 1]);
    if t1 < 10.0 * t0.max(1.0) {
        return Err(Error::param("series", format!("[{t0}, {t1}] spans less than a decade")));
    }
    let hist = ProfileHistory::new(spec, renorm)?;
    let last = n - 1;
    let times: Vec<f64> = spec.t[n - 3..].to_vec();
    let stability = times
        .iter()
        .map(|&ta| hist.difference(ta, times[2]))
        .fold(0.0, f64::max);
    Ok(ScatteringProfile {
        omega_bar: spec.omega_bar,
        fgrid: hist.fgrid.clone(),
        w_plus: hist.w_plus[last].clone(),
        w_minus: hist.w_minus[last].clone(),
        extraction_times: times,
        stability,
        tolerance,
        flagged: !(stability <= tolerance),
    })
}

/// Frame quantities entering `u∞` at time `t`.
#[derive(Clone, Copy, Debug)]
pub struct FrameState {
    pub t: f64,
    pub p: f64,
    pub theta1: f64,
    pub theta2: f64,
}

#[derive(Clone, Debug)]
pub struct AsymptoticField {
    pub field: ComplexField,
    /// Some `ξ* = y/2t` fell outside the extraction grid.
    pub clamped: bool,
}

/// Leading-order field in the soliton frame `y = x − σ(t)`, `ξ* = y/2t`:
///
/// `u∞ = (2t)^{−½}[e^{iΩ}e^{(i/2)log t|W₊(ξ*)|²}W₊(ξ*)m₁(y,ξ*)
///       − e^{i(2(p∞−p)y − Ω)}e^{−(i/2)log t|W₋(−ξ*)|²}W₋(−ξ*)m₂(y,−ξ*)]`
///
/// with `Ω = −π/4 + (p∞−p)y − tω∞ + tξ*² − θ₁ + θ₂ξ*`. The log phase is
/// `Λ± ≈ ½ log t |W±|²`, matching the extraction in [`extract_W`].
pub fn asymptotic_field(
    grid: &Arc<Grid>,
    w: &ScatteringProfile,
    state: FrameState,
    omega_inf: f64,
    p_inf: f64,
) -> Result<AsymptoticField> {
    let FrameState { t, p, theta1, theta2 } = state;
    if !(t >= 1.0) {
        return Err(Error::param("t", format!("{t} must be at least 1")));
    }
    let lt = t.ln();
    let amp = (2.0 * t).sqrt().recip();
    let mut clamped = false;
    let mut values = Vec::with_capacity(grid.n());
    for &y in grid.x() {
        let xs = y / (2.0 * t);
        let (wp, c1) = w.w_plus_at(xs);
        let (wm, c2) = w.w_minus_at(-xs);
        clamped |= c1 || c2;
        let (m1, _) = m_symbols(omega_inf, y, xs);
        let (_, m2) = m_symbols(omega_inf, y, -xs);
        let gauge = (p_inf - p) * y;
        let omega = -PI / 4.0 + gauge - t * omega_inf + t * xs * xs - theta1 + theta2 * xs;
        let a = C64::from_polar(1.0, omega + 0.5 * lt * wp.norm_sqr()) * wp * m1;
        let b = C64::from_polar(1.0, 2.0 * gauge - omega - 0.5 * lt * wm.norm_sqr()) * wm * m2;
        values.push(amp * (a - b));
    }
    Ok(AsymptoticField {
        field: ComplexField::from_values(grid, values)?,
        clamped,
    })
}

/// `B̃(t_k, ξ)` on the frequency grid of the spectra.
#[derive(Clone, Debug)]
pub struct NormalForm {
    pub t: Vec<f64>,
    pub xi: Vec<f64>,
    pub values: Vec<Vec<C64>>,
}

impl NormalForm {
    /// `sup_ξ ⟨ξ⟩²|B̃(t, ξ)|` per frame.
    pub fn weighted_sup(&self) -> TimeSeries {
        let v = self
            .values
            .iter()
            .map(|row| {
                row.iter()
                    .zip(&self.xi)
                    .fold(0.0f64, |m, (b, x)| m.max((1.0 + x * x) * b.norm()))
            })
            .collect();
        TimeSeries::scalar("normal_form_B", self.t.clone(), v)
    }
}

/// `B̃ = e^{it(ξ²−ω̲)}(e^{itω̲}h₁)²𝔮₁ + e^{it(ξ²+ω̲)}(e^{itω̲}h₁)(e^{−itω̲}h₂)𝔮₂
///      + e^{it(ξ²+3ω̲)}(e^{−itω̲}h₂)²𝔮₃`.
#[allow(non_snake_case)]
pub fn normal_form_B(amps: &Amplitudes, q: &FrakQ, omega_bar: f64) -> NormalForm {
    let w = omega_bar;
    let values = amps
        .t
        .iter()
        .enumerate()
        .map(|(k, &t)| {
            let a = amps.h1[k] * C64::from_polar(1.0, t * w);
            let b = amps.h2[k] * C64::from_polar(1.0, -t * w);
            q.xi
                .iter()
                .enumerate()
                .map(|(m, &xi)| {
                    let e = |s: f64| C64::from_polar(1.0, t * (xi * xi + s * w));
                    e(-1.0) * a * a * q.q1[m] + e(1.0) * a * b * q.q2[m] + e(3.0) * b * b * q.q3[m]
                })
                .collect()
        })
        .collect();
    NormalForm {
        t: amps.t.clone(),
        xi: q.xi.clone(),
        values,
    }
}

/// `sup |m₁| + sup |m₂|`-type constant for the envelope bound of `u∞`:
/// the largest `|m₁(y, ξ)|` and `|m₂(y, ξ)|` over the sampled `(y, ξ)`.
pub fn symbol_sup(omega: f64, ys: &[f64], xis: &[f64]) -> (f64, f64) {
    let mut s = (0.0f64, 0.0f64);
    for &y in ys {
        for &xi in xis {
            let (a, b) = m_symbols(omega, y, xi);
            s = (s.0.max(a.norm()), s.1.max(b.norm()));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi0_is_smooth_partition() {
        assert_eq!(chi0(0.5), 1.0);
        assert_eq!(chi0(-1.0), 1.0);
        assert_eq!(chi0(2.0), 0.0);
        assert!((chi0(1.5) - 0.5).abs() < 1e-15);
        assert!((chi0(1.3) - chi0(-1.3)).abs() < 1e-15);
        let mut prev = 1.0;
        for k in 0..=100 {
            let v = chi0(1.0 + k as f64 / 100.0);
            assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
            prev = v;
        }
        // all derivatives vanish at the seams: near 1 the deficit is below any power
        assert!(1.0 - chi0(1.02) < 1e-15);
    }

    #[test]
    fn exact_power_law_fits_exactly() {
        let t: Vec<f64> = (1..=160).map(|k| 0.5 * k as f64).collect();
        let v = t.iter().map(|t| 0.3 * t.powf(-0.5)).collect();
        let fit = decay_slope(&TimeSeries::scalar("q", t, v), (10.0, 80.0), -0.5, (-0.65, -0.35)).unwrap();
        assert!((fit.slope + 0.5).abs() < 1e-12, "{}", fit.slope);
        assert!(fit.stderr < 1e-12 && fit.pass);
    }

    #[test]
    fn oscillatory_contamination_stays_in_band() {
        let t: Vec<f64> = (1..=160).map(|k| 0.5 * k as f64).collect();
        let v = t.iter().map(|t| t.powf(-0.5) * (1.0 + 0.2 * t.sin())).collect();
        let fit = decay_slope(&TimeSeries::scalar("q", t, v), (10.0, 80.0), -0.5, (-0.55, -0.45)).unwrap();
        assert!((fit.slope + 0.5).abs() < 0.05, "{}", fit.slope);
    }

    #[test]
    fn nonpositive_samples_are_rejected() {
        let t = vec![1.0, 2.0, 3.0, 4.0];
        let s = TimeSeries::scalar("q", t, vec![1.0, 0.5, 0.0, 0.2]);
        assert!(matches!(
            decay_slope(&s, (1.0, 4.0), -0.5, (-1.0, 0.0)),
            Err(Error::NonPositiveSample { t }) if t == 3.0
        ));
    }

    #[test]
    fn envelope_is_monotone() {
        let t: Vec<f64> = (1..50).map(|k| k as f64).collect();
        let v: Vec<f64> = t.iter().map(|t| (t.sin().abs() + 0.1) / t).collect();
        let e = tail_envelope(&TimeSeries::scalar("q", t, v.clone())).values();
        for k in 1..e.len() {
            assert!(e[k] <= e[k - 1] && e[k - 1] >= v[k - 1]);
        }
    }

    #[test]
    fn remainder_reconstructs_exactly() {
        let grid = Grid::new(1024, 30.0).unwrap();
        let w = 1.3;
        let ve = VectorField::from_fn(&grid, |x| {
            let a = C64::new((-x * x / 5.0).exp(), 0.3 * x * (-x * x / 4.0).exp());
            (a, a.conj())
        });
        let (h1, h2) = (C64::new(0.2, -0.1), C64::new(-0.05, 0.3));
        let (rv, rvb) = remainder_R(&ve, h1, h2, w);
        for (j, &y) in grid.x().iter().enumerate() {
            let (p1, p2) = resonance_components(w, y);
            let back1 = h1 * p1 - h2 * p2 + rv.values[j];
            let back2 = h1 * p2 - h2 * p1 + rvb.values[j];
            assert!((back1 - ve.first[j]).norm() < 1e-12);
            assert!((back2 - ve.second[j]).norm() < 1e-12);
        }
        let (z1, z2) = remainder_R(&VectorField::zeros(&grid), C64::new(0.0, 0.0), C64::new(0.0, 0.0), w);
        assert_eq!(z1.norm_linf() + z2.norm_linf(), 0.0);
    }

    #[test]
    fn zero_profile_gives_zero_field() {
        let grid = Grid::new(512, 40.0).unwrap();
        let fg = FrequencyGrid::new(201, 6.0).unwrap();
        let w = ScatteringProfile::zeros(1.0, &fg);
        let st = FrameState { t: 5.0, p: 0.0, theta1: 0.3, theta2: 0.1 };
        let u = asymptotic_field(&grid, &w, st, 1.0, 0.0).unwrap();
        assert_eq!(u.field.norm_linf(), 0.0);
        assert!(!u.clamped);
    }

    /// Free Schrödinger check of the stationary-phase normalization: far from
    /// the core `m₁ → 1`, so a Gaussian profile evolved exactly by the
    /// `e^{−itξ²}` flow must match the first term of `u∞` at large `t`.
    #[test]
    fn stationary_phase_matches_free_flow() {
        let t = 400.0;
        let a = 0.7;
        let b = 2.0; // |ξ| ≥ 1.5 keeps the window away from the core
        let g = |xi: f64| C64::new((-(xi - b) * (xi - b) / (2.0 * a * a)).exp(), 0.0);
        // ∫ e^{−itξ²}e^{iyξ}(2π)^{-½}g(ξ)dξ in closed form for a Gaussian
        let exact = |y: f64| {
            let alpha = C64::new(1.0 / (2.0 * a * a), t);
            let beta = C64::new(b / (a * a), y);
            let c = -b * b / (2.0 * a * a);
            (PI / alpha).sqrt() * (beta * beta / (4.0 * alpha) + c).exp() / (2.0 * PI).sqrt()
        };
        for &xs in &[1.6, 2.0, 2.4] {
            let y = 2.0 * t * xs;
            let approx = (2.0 * t).sqrt().recip() * C64::from_polar(1.0, -PI / 4.0 + t * xs * xs) * g(xs);
            let e = exact(y);
            assert!((approx - e).norm() < 2e-3 * e.norm().max(1e-3), "{approx} vs {e}");
        }
    }

    #[test]
    fn normal_form_vanishes_without_amplitudes_and_is_quadratic() {
        let q = FrakQ {
            xi: vec![-1.0, 0.0, 1.0],
            q1: vec![C64::new(1.0, 0.0); 3],
            q2: vec![C64::new(0.5, 0.2); 3],
            q3: vec![C64::new(-0.3, 0.1); 3],
        };
        let mk = |s: f64| Amplitudes {
            t: vec![1.0, 2.0],
            h1: vec![C64::new(0.1 * s, 0.02 * s); 2],
            h2: vec![C64::new(-0.03 * s, 0.05 * s); 2],
            dh1: vec![C64::new(0.0, 0.0); 2],
            dh2: vec![C64::new(0.0, 0.0); 2],
        };
        assert_eq!(normal_form_B(&mk(0.0), &q, 1.0).weighted_sup().values(), vec![0.0, 0.0]);
        let b1 = normal_form_B(&mk(1.0), &q, 1.0).weighted_sup().values();
        let b2 = normal_form_B(&mk(2.0), &q, 1.0).weighted_sup().values();
        for (x, y) in b1.iter().zip(&b2) {
            assert!((y / x - 4.0).abs() < 1e-12);
        }
    }
}
