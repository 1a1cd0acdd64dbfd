//! End-to-end pipelines behind the command-line surface.

use std::sync::Arc;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::asymptotics::{
    self, amplitudes_h, asymptotic_field, decay_slope, extract_W, local_decay_series, normal_form_B, tail_envelope,
    Amplitudes, DecayFit, FrameState, ProfileHistory, ScatteringProfile, SpectrumSeries,
};
use crate::config::ExperimentConfig;
use crate::dft::{DistortedFourier, FrequencyGrid};
use crate::error::{Error, Result};
use crate::grid::{C64, Grid, VectorField};
use crate::identities::{self, frakq_coefficients, IdentityReport};
use crate::linop::Projector;
use crate::modulation::{self, renormalize, FitOptions, ModulationSeries, Renormalized};
use crate::series::TimeSeries;
use crate::solver::{evolve, EvolveOptions, Trajectory};

pub fn evolve_options(cfg: &ExperimentConfig) -> EvolveOptions {
    EvolveOptions {
        dt: cfg.dt,
        t_final: cfg.t_final,
        store_every: cfg.store_every,
        scheme: cfg.scheme,
        boundary_threshold: cfg.boundary_monitor,
    }
}

pub fn simulate(cfg: &ExperimentConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let grid = cfg.grid()?;
    evolve(&cfg.initial_field(&grid)?, &evolve_options(cfg))
}

/// Mass, momentum, energy and boundary mass at every stored frame.
pub fn conserved_series(traj: &Trajectory) -> TimeSeries {
    let mut s = TimeSeries::new("conserved", &["mass", "momentum", "energy", "boundary_mass"]);
    for m in &traj.monitor {
        let c = m.conserved;
        s.push(m.t, vec![c.mass, c.momentum, c.energy, m.boundary_mass])
            .expect("monitor times increase");
    }
    s
}

/// Modulation fit of every frame; a Newton failure anywhere is an error.
pub fn fit_modulation(cfg: &ExperimentConfig, traj: &Trajectory) -> Result<ModulationSeries> {
    let opts = FitOptions {
        tol: cfg.newton_tol,
        ..FitOptions::default()
    };
    let series = modulation::track(traj, &cfg.soliton, &opts);
    match &series.failure {
        None => Ok(series),
        Some(f) => Err(Error::TrackingFailed {
            t: f.t,
            reason: f.reason.clone(),
        }),
    }
}

/// The fixed identity suite plus cubic-symbol checks on a seeded random lattice.
pub fn verify_identities(omega: f64, seed: u64) -> Vec<IdentityReport> {
    let mut out = identities::run_all(omega);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<[f64; 4]> = (0..64)
        .map(|_| std::array::from_fn(|_| rng.random_range(-3.0..3.0)))
        .collect();
    out.extend(identities::cubic_symbol_checks(&pts).into_iter().map(|mut r| {
        r.name.push_str("_random");
        r
    }));
    out
}

/// Roundtrip checks of the distorted transform on the configured grid:
/// annihilation of the generalized kernel, the conjugation relation, and
/// `inverse ∘ forward = P_e` on a Gaussian J-invariant field.
pub fn verify_dft(cfg: &ExperimentConfig) -> Result<Vec<IdentityReport>> {
    let w = cfg.soliton.omega;
    let grid = cfg.grid()?;
    let fgrid = FrequencyGrid::new(cfg.n_xi, cfg.xi_max * w.sqrt())?;
    let tf = DistortedFourier::new(w, &grid, &fgrid)?;
    let proj = Projector::new(w, &grid)?;
    let report = |name: &str, lattice: usize, rel: f64, abs: f64, pass: bool| IdentityReport {
        name: name.to_string(),
        lattice,
        max_rel_err: rel,
        max_abs_err: abs,
        pass,
    };
    let mut out = Vec::new();

    let mut kernel = 0.0f64;
    for j in 1..=4 {
        kernel = kernel.max(tf.forward(proj.y(j))?.sup_norm());
    }
    out.push(report("dft_annihilates_kernel", 4, kernel, kernel, kernel < 1e-6));

    let u = gaussian_test_field(&grid);
    let spec = tf.forward(&u)?;
    let conj = spec.conjugation_defect();
    out.push(report("dft_conjugation", fgrid.len(), conj, conj, conj < 1e-8));

    let pe = proj.essential(&u)?;
    let back = tf.inverse(&spec)?;
    let abs = back.sub(&pe)?.norm_l2();
    let rel = abs / pe.norm_l2();
    out.push(report("dft_roundtrip", grid.n(), rel, abs, rel < 1e-4));
    Ok(out)
}

/// `(g, ḡ)` with `g = e^{−y²/4}(1 + 0.3iy) + 0.2e^{−(y−2)²}`.
pub fn gaussian_test_field(grid: &Arc<Grid>) -> VectorField {
    VectorField::from_fn(grid, |y| {
        let g = C64::new(1.0, 0.3 * y) * (-y * y / 4.0).exp() + 0.2 * (-(y - 2.0) * (y - 2.0)).exp();
        (g, g.conj())
    })
}

/// Every quantity the decay report derives from one run.
#[derive(Clone, Debug)]
pub struct DecayAnalysis {
    pub omega_bar: f64,
    pub p_bar: f64,
    pub clean_until: f64,
    pub modulation: ModulationSeries,
    pub renorm: Renormalized,
    pub spectra: SpectrumSeries,
    pub amplitudes: Amplitudes,
    pub history: ProfileHistory,
    pub profile: ScatteringProfile,
    /// Named series, each with the fitted quantity in its first column.
    pub series: Vec<TimeSeries>,
    pub fits: Vec<DecayFit>,
    /// `(name, value, bound, pass)` for the non-slope checks.
    pub checks: Vec<(String, f64, f64, bool)>,
}

impl DecayAnalysis {
    pub fn fit(&self, name: &str) -> Option<&DecayFit> {
        self.fits.iter().find(|f| f.name == name)
    }

    pub fn check(&self, name: &str) -> Option<&(String, f64, f64, bool)> {
        self.checks.iter().find(|c| c.0 == name)
    }

    pub fn series(&self, name: &str) -> Option<&TimeSeries> {
        self.series.iter().find(|s| s.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.fits.iter().all(|f| f.pass) && self.checks.iter().all(|c| c.3)
    }
}

fn scalar(name: &str, t: &[f64], v: Vec<f64>) -> TimeSeries {
    TimeSeries::scalar(name, t.to_vec(), v)
}

fn window_in(t_min: f64, t_max: f64, clean: f64) -> (f64, f64) {
    (t_min, t_max.min(clean))
}

/// Stability band for `W±` between `t_a` and `t_b`: `ε²·t_a^{−0.05}`
/// scaled by the peak of `|W|` relative to `ε`.
pub fn w_stability_band(eps: f64, t_a: f64, w_sup: f64) -> f64 {
    (eps * eps).max(eps * w_sup) * t_a.powf(-0.05)
}

/// Runs every harness diagnostic on a simulated trajectory. The frozen
/// parameters are the terminal fitted values `(ω(T), p(T))`.
pub fn decay_report(cfg: &ExperimentConfig, traj: &Trajectory) -> Result<DecayAnalysis> {
    let modulation = fit_modulation(cfg, traj)?;
    let last = modulation.last().ok_or_else(|| Error::param("series", "empty"))?;
    let (omega_bar, p_bar) = (last.params.omega, last.params.p);
    let t_end = last.t;
    let clean = traj.clean_until();
    let renorm = renormalize(&modulation, omega_bar, p_bar)?;
    let fgrid = FrequencyGrid::new(cfg.n_xi, cfg.xi_max * omega_bar.sqrt())?;
    let spectra = SpectrumSeries::from_renormalized(&renorm, &fgrid)?;
    let amps = amplitudes_h(&spectra);
    let history = ProfileHistory::new(&spectra, &renorm)?;
    let eps = cfg.perturbation.amplitude;
    let t = renorm.t.clone();

    let mut series = Vec::new();
    let u_linf: Vec<f64> = modulation.states.iter().map(|s| s.u.first.iter().fold(0.0f64, |m, v| m.max(v.norm()))).collect();
    series.push(scalar("u_Linf", &t, u_linf));
    let drift = |v: Vec<f64>| -> Vec<f64> {
        let end = *v.last().unwrap();
        v.iter().map(|x| (x - end).abs()).collect()
    };
    series.push(tail_envelope(&scalar("omega_drift", &t, drift(modulation.omega()))));
    series.push(tail_envelope(&scalar("p_drift", &t, drift(modulation.p()))));
    series.push(scalar("h1", &t, amps.h1.iter().map(|h| h.norm()).collect()));
    series.push(scalar("h2", &t, amps.h2.iter().map(|h| h.norm()).collect()));
    series.push(scalar("dh1_filtered", &t, amps.dh1.iter().map(|h| h.norm()).collect()));
    series.push(scalar("dh2_filtered", &t, amps.dh2.iter().map(|h| h.norm()).collect()));
    let (mut rem, mut disc) = local_decay_series(&renorm, &amps)?;
    rem.name = "remainder_local".into();
    disc.name = "discrete".into();
    series.push(rem);
    series.push(disc);

    let q = frakq_coefficients(omega_bar, fgrid.nodes());
    let mut b = normal_form_B(&amps, &q, omega_bar).weighted_sup();
    b.name = "normal_form_B".into();
    series.push(b);

    // scattering profile and asymptotic field
    let (ta, tb) = (40.0f64.min(t_end / 2.0), t_end);
    let w_sup_last = {
        let k = history.t.len() - 1;
        let s = |v: &[C64]| v.iter().fold(0.0f64, |m, z| m.max(z.norm()));
        s(&history.w_plus[k]).max(s(&history.w_minus[k]))
    };
    let band = w_stability_band(eps, ta, w_sup_last);
    let profile = extract_W(&spectra, &renorm, band)?;
    let rows = modulation
        .states
        .par_iter()
        .enumerate()
        .filter(|(_, s)| s.t >= 1.0)
        .map(|(k, s)| {
            let st = FrameState {
                t: s.t,
                p: s.params.p,
                theta1: renorm.theta1[k],
                theta2: renorm.theta2[k],
            };
            let ua = asymptotic_field(&s.u.grid, &profile, st, omega_bar, p_bar)?;
            let d = s.u.first_field().zip_with(&ua.field, |a, b| a - b)?;
            Ok((s.t, vec![d.norm_linf(), ua.field.norm_linf(), if ua.clamped { 1.0 } else { 0.0 }]))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut diff = TimeSeries::new("u_minus_uinf", &["value", "uinf_Linf", "clamped"]);
    for (t, row) in rows {
        diff.push(t, row)?;
    }
    series.push(diff);
    let spec_sup = spectra.sup_norms();
    series.push(spec_sup.clone());

    let std_band = |p: f64| (p - 0.15, p + 0.15);
    let fits = vec![
        decay_slope(series_named(&series, "u_Linf"), window_in(10.0, t_end, clean), -0.5, (-0.65, -0.35))?,
        decay_slope(series_named(&series, "omega_drift"), window_in(10.0, t_end / 2.0, clean), -1.0, (f64::NEG_INFINITY, -0.6))?,
        decay_slope(series_named(&series, "p_drift"), window_in(10.0, t_end / 2.0, clean), -1.0, (f64::NEG_INFINITY, -0.6))?,
        decay_slope(series_named(&series, "h1"), window_in(10.0, 60.0, clean), -0.5, std_band(-0.5))?,
        decay_slope(series_named(&series, "h2"), window_in(10.0, 60.0, clean), -0.5, std_band(-0.5))?,
        decay_slope(series_named(&series, "dh1_filtered"), window_in(10.0, t_end, clean), -1.0, (f64::NEG_INFINITY, -0.8))?,
        decay_slope(series_named(&series, "dh2_filtered"), window_in(10.0, t_end, clean), -1.0, (f64::NEG_INFINITY, -0.8))?,
        decay_slope(series_named(&series, "remainder_local"), window_in(10.0, t_end, clean), -1.0, (f64::NEG_INFINITY, -0.8))?,
        decay_slope(series_named(&series, "discrete"), window_in(10.0, t_end, clean), -1.5, (f64::NEG_INFINITY, -1.1))?,
        decay_slope(series_named(&series, "normal_form_B"), window_in(10.0, t_end, clean), -1.0, (f64::NEG_INFINITY, -0.8))?,
        decay_slope(series_named(&series, "u_minus_uinf"), window_in(20.0, t_end, clean), -0.6, (f64::NEG_INFINITY, -0.55))?,
    ];

    let mut checks = Vec::new();
    let conj = spectra.max_conjugation_defect();
    checks.push(("conjugation_all_frames".to_string(), conj, 1e-8, conj < 1e-8));
    let stab = history.difference(ta, tb);
    checks.push(("w_stability".to_string(), stab, band, stab <= band));
    let wc = profile.conjugation_defect();
    checks.push(("w_conjugation".to_string(), wc, 1e-3, wc < 1e-3));
    let k1 = history.index_of(1.0);
    let sup1 = spec_sup.values()[k1];
    let sup_max = spec_sup
        .t
        .iter()
        .zip(spec_sup.values())
        .filter(|(t, _)| **t >= 1.0 && **t <= clean)
        .fold(0.0f64, |m, (_, v)| m.max(v));
    checks.push(("spectrum_sup_bound".to_string(), sup_max, 3.0 * sup1, sup_max <= 3.0 * sup1));

    Ok(DecayAnalysis {
        omega_bar,
        p_bar,
        clean_until: clean,
        modulation,
        renorm,
        spectra,
        amplitudes: amps,
        history,
        profile,
        series,
        fits,
        checks,
    })
}

fn series_named<'a>(series: &'a [TimeSeries], name: &str) -> &'a TimeSeries {
    series.iter().find(|s| s.name == name).expect("series produced above")
}

pub use asymptotics::write_summary;
