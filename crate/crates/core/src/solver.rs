//! Split-step Fourier integration of `i ψ_t + ψ_xx + |ψ|²ψ = 0`.
//!
//! Both substeps are exact: the linear flow is the Fourier multiplier
//! `e^{-i k² dt}` and the nonlinear flow is the pointwise phase
//! `e^{i dt |ψ|²}` (|ψ| is frozen along it). Consecutive nonlinear half
//! steps are merged, so a run of `N` Strang steps costs `N + 1` phase
//! rotations.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{C64, ComplexField, Grid};
use crate::soliton::{conserved_quantities, Conserved};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Second-order Strang splitting.
    Strang,
    /// Fourth-order triple-jump composition of Strang steps.
    Composite4,
}

impl Scheme {
    fn weights(self) -> &'static [f64] {
        const CBRT2: f64 = 1.259_921_049_894_873_2;
        const W1: f64 = 1.0 / (2.0 - CBRT2);
        const W0: f64 = -CBRT2 / (2.0 - CBRT2);
        match self {
            Scheme::Strang => &[1.0],
            Scheme::Composite4 => &[W1, W0, W1],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Strang => "strang",
            Scheme::Composite4 => "composite4",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "strang" => Ok(Scheme::Strang),
            "composite4" => Ok(Scheme::Composite4),
            _ => Err(Error::param("scheme", format!("unknown scheme `{s}`"))),
        }
    }
}

/// Reusable stepping workspace for one grid and step size.
pub struct Propagator {
    grid: Arc<Grid>,
    subs: Vec<(f64, Vec<C64>)>,
    scratch: Vec<C64>,
}

impl Propagator {
    pub fn new(grid: &Arc<Grid>, dt: f64, scheme: Scheme) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::param("dt", format!("{dt} must be positive")));
        }
        let inv_n = 1.0 / grid.n() as f64;
        let subs = scheme
            .weights()
            .iter()
            .map(|w| {
                let h = w * dt;
                let mult = grid
                    .k()
                    .iter()
                    .map(|k| C64::from_polar(inv_n, -k * k * h))
                    .collect();
                (h, mult)
            })
            .collect();
        Ok(Propagator {
            grid: grid.clone(),
            subs,
            scratch: vec![C64::new(0.0, 0.0); grid.scratch_len()],
        })
    }

    fn nonlinear(psi: &mut [C64], h: f64) {
        for v in psi.iter_mut() {
            let (s, c) = (h * v.norm_sqr()).sin_cos();
            *v *= C64::new(c, s);
        }
    }

    fn linear(&mut self, psi: &mut [C64], sub: usize) {
        self.grid.fft_with_scratch(psi, &mut self.scratch);
        for (v, m) in psi.iter_mut().zip(&self.subs[sub].1) {
            *v *= m;
        }
        self.grid.ifft_raw_with_scratch(psi, &mut self.scratch);
    }

    /// Advance `steps` full steps in place.
    pub fn advance(&mut self, psi: &mut [C64], steps: usize) -> Result<()> {
        let mut pending = 0.0;
        for _ in 0..steps {
            for sub in 0..self.subs.len() {
                let h = self.subs[sub].0;
                pending += 0.5 * h;
                Self::nonlinear(psi, pending);
                self.linear(psi, sub);
                pending = 0.5 * h;
            }
        }
        if pending != 0.0 {
            Self::nonlinear(psi, pending);
        }
        if psi.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::NonFinite("solution blew up during time stepping".into()));
        }
        Ok(())
    }
}

/// One Strang step: half nonlinear phase, exact linear flow, half phase.
pub fn step_strang(psi: &ComplexField, dt: f64) -> Result<ComplexField> {
    let mut p = Propagator::new(&psi.grid, dt, Scheme::Strang)?;
    let mut out = psi.clone();
    p.advance(&mut out.values, 1)?;
    Ok(out)
}

/// Only the nonlinear substep `ψ ↦ e^{i h |ψ|²} ψ`.
pub fn nonlinear_substep(psi: &ComplexField, h: f64) -> ComplexField {
    let mut out = psi.clone();
    Propagator::nonlinear(&mut out.values, h);
    out
}

#[derive(Clone, Copy, Debug)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_final: f64,
    /// Time between stored frames; rounded to a whole number of steps.
    pub store_every: f64,
    pub scheme: Scheme,
    /// Boundary-mass flag level relative to `M(0)`.
    pub boundary_threshold: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            dt: 1e-3,
            t_final: 1.0,
            store_every: 0.5,
            scheme: Scheme::Composite4,
            boundary_threshold: 1e-6,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct MonitorRecord {
    pub t: f64,
    pub conserved: Conserved,
    pub boundary_mass: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<ComplexField>,
    pub monitor: Vec<MonitorRecord>,
    pub dt: f64,
}

impl Trajectory {
    pub fn grid(&self) -> &Arc<Grid> {
        &self.snapshots[0].grid
    }

    /// Last stored time before the boundary monitor first tripped.
    pub fn clean_until(&self) -> f64 {
        let mut last = self.times[0];
        for m in &self.monitor {
            if m.flagged {
                break;
            }
            last = m.t;
        }
        last
    }

    pub fn max_boundary_mass(&self) -> f64 {
        self.monitor.iter().fold(0.0, |a, m| a.max(m.boundary_mass))
    }
}

/// `∫_{|x| > 0.9 L} |ψ|² dx`.
pub fn boundary_mass(psi: &ComplexField) -> f64 {
    let g = &psi.grid;
    let edge = 0.9 * g.half_width();
    g.x()
        .iter()
        .zip(&psi.values)
        .filter(|(x, _)| x.abs() > edge)
        .map(|(_, v)| v.norm_sqr())
        .sum::<f64>()
        * g.dx()
}

pub fn evolve(psi0: &ComplexField, opts: &EvolveOptions) -> Result<Trajectory> {
    if !(opts.t_final > 0.0) {
        return Err(Error::param("T", format!("{} must be positive", opts.t_final)));
    }
    let per_store = ((opts.store_every / opts.dt).round() as usize).max(1);
    let total = (opts.t_final / opts.dt).round() as usize;
    let mut prop = Propagator::new(&psi0.grid, opts.dt, opts.scheme)?;
    let m0 = conserved_quantities(psi0).mass;
    let level = opts.boundary_threshold * m0;

    let record = |t: f64, psi: &ComplexField| {
        let b = boundary_mass(psi);
        MonitorRecord {
            t,
            conserved: conserved_quantities(psi),
            boundary_mass: b,
            flagged: b > level,
        }
    };

    let mut traj = Trajectory {
        times: vec![0.0],
        snapshots: vec![psi0.clone()],
        monitor: vec![record(0.0, psi0)],
        dt: opts.dt,
    };
    let mut psi = psi0.clone();
    let mut done = 0;
    while done < total {
        let n = per_store.min(total - done);
        prop.advance(&mut psi.values, n)?;
        done += n;
        let t = done as f64 * opts.dt;
        traj.monitor.push(record(t, &psi));
        traj.times.push(t);
        traj.snapshots.push(psi.clone());
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::soliton::{ground_state, solitary_wave, SolitonParams};

    fn grid() -> Arc<Grid> {
        Grid::new(4096, 40.0).unwrap()
    }

    fn max_diff(a: &ComplexField, b: &ComplexField) -> f64 {
        a.zip_with(b, |x, y| x - y).unwrap().norm_linf()
    }

    #[test]
    fn nonlinear_substep_preserves_modulus() {
        let g = Grid::new(64, 5.0).unwrap();
        let f = ComplexField::from_fn(&g, |x| C64::new(x.sin() + 1.0, x));
        let h = nonlinear_substep(&f, 0.37);
        for (a, b) in f.values.iter().zip(&h.values) {
            assert!((a.norm() - b.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn plane_wave_is_exact() {
        let g = Grid::new(64, 10.0).unwrap();
        let k = 3.0 * std::f64::consts::PI / g.half_width();
        let a = 0.7;
        let psi = ComplexField::from_fn(&g, |x| C64::from_polar(a, k * x));
        let mut p = Propagator::new(&g, 1e-2, Scheme::Strang).unwrap();
        let mut v = psi.clone();
        p.advance(&mut v.values, 100).unwrap();
        let exact = psi.scale(C64::from_polar(1.0, (a * a - k * k) * 1.0));
        assert!(max_diff(&v, &exact) < 1e-10);
    }

    #[test]
    fn soliton_to_t1() {
        let g = grid();
        let phi = ground_state(1.0, &g).unwrap();
        let opts = EvolveOptions {
            dt: 1e-3,
            t_final: 1.0,
            store_every: 1.0,
            scheme: Scheme::Composite4,
            boundary_threshold: 1e-6,
        };
        let tr = evolve(&phi, &opts).unwrap();
        let exact = phi.scale(C64::from_polar(1.0, 1.0));
        let err = max_diff(tr.snapshots.last().unwrap(), &exact);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn moving_soliton_matches_family() {
        let g = grid();
        let prm = SolitonParams::new(1.2, 0.3, 0.25, -1.0).unwrap();
        let w0 = solitary_wave(&prm, 0.0, &g).unwrap().field;
        let mut p = Propagator::new(&g, 1e-3, Scheme::Composite4).unwrap();
        let mut v = w0.clone();
        p.advance(&mut v.values, 500).unwrap();
        let w1 = solitary_wave(&prm, 0.5, &g).unwrap().field;
        assert!(max_diff(&v, &w1) < 1e-7);
    }

    #[test]
    fn zero_data_stays_zero() {
        let g = Grid::new(256, 20.0).unwrap();
        let z = ComplexField::zeros(&g);
        let opts = EvolveOptions {
            t_final: 1.0,
            store_every: 0.5,
            dt: 1e-2,
            ..Default::default()
        };
        let tr = evolve(&z, &opts).unwrap();
        assert_eq!(tr.times.len(), 3);
        assert!(tr.snapshots.iter().all(|s| s.norm_linf() == 0.0));
    }

    #[test]
    fn strang_is_second_order() {
        let g = Grid::new(1024, 30.0).unwrap();
        let psi0 = ComplexField::from_fn(&g, |x| {
            C64::new(2f64.sqrt() / x.cosh() + 0.2 * (-(x - 1.0).powi(2)).exp(), 0.0)
        });
        let run = |dt: f64| {
            let mut p = Propagator::new(&g, dt, Scheme::Strang).unwrap();
            let mut v = psi0.clone();
            p.advance(&mut v.values, (1.0 / dt).round() as usize).unwrap();
            v
        };
        let reference = run(0.01 / 8.0);
        let e1 = max_diff(&run(0.01), &reference);
        let e2 = max_diff(&run(0.005), &reference);
        let ratio = e1 / e2;
        assert!((3.3..5.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn bad_dt_rejected() {
        let g = Grid::new(64, 5.0).unwrap();
        assert!(Propagator::new(&g, 0.0, Scheme::Strang).is_err());
        assert!("rk4".parse::<Scheme>().is_err());
    }
}
