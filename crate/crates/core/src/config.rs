//! Experiment configuration: flat `section.key = value` text, one assignment
//! per line, `#` starts a comment. Unknown keys are rejected.

use std::collections::BTreeSet;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::{C64, ComplexField, Grid};
use crate::soliton::{profile, wrap, SolitonParams};
use crate::solver::Scheme;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PerturbationKind {
    Gaussian,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub amplitude: f64,
    pub width: f64,
    pub center: f64,
    pub phase: f64,
}

impl Perturbation {
    /// `u₀(y) = ε e^{i·phase} exp(−((y − center)/width)²)`.
    pub fn profile(&self, y: f64) -> C64 {
        match self.kind {
            PerturbationKind::None => C64::new(0.0, 0.0),
            PerturbationKind::Gaussian => {
                let s = (y - self.center) / self.width;
                C64::from_polar(self.amplitude * (-s * s).exp(), self.phase)
            }
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.kind == PerturbationKind::None || self.amplitude == 0.0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    /// Half-width of the periodic box `[−L, L)`.
    pub half_width: f64,
    pub dt: f64,
    pub t_final: f64,
    pub store_every: f64,
    pub scheme: Scheme,
    pub soliton: SolitonParams,
    pub perturbation: Perturbation,
    pub xi_max: f64,
    pub n_xi: usize,
    pub newton_tol: f64,
    pub boundary_monitor: f64,
    pub seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 8192,
            half_width: 200.0,
            dt: 1e-3,
            t_final: 80.0,
            store_every: 0.5,
            scheme: Scheme::Composite4,
            soliton: SolitonParams::at_rest(1.0),
            perturbation: Perturbation {
                kind: PerturbationKind::Gaussian,
                amplitude: 0.05,
                width: 6.0,
                center: 1.5,
                phase: std::f64::consts::FRAC_PI_2,
            },
            xi_max: 12.0,
            n_xi: 2049,
            newton_tol: 1e-10,
            boundary_monitor: 1e-6,
            seed: 0,
        }
    }
}

const KEYS: &[&str] = &[
    "grid.n",
    "grid.L",
    "time.dt",
    "time.T",
    "time.store_every",
    "time.scheme",
    "soliton.omega0",
    "soliton.gamma0",
    "soliton.p0",
    "soliton.sigma0",
    "perturbation.kind",
    "perturbation.amplitude",
    "perturbation.width",
    "perturbation.center",
    "perturbation.phase",
    "frozen.xi_max",
    "frozen.n_xi",
    "tolerances.newton",
    "tolerances.boundary_monitor",
    "seed",
];

fn parse_value<T: FromStr>(key: &str, raw: &str) -> Result<T> {
    raw.parse()
        .map_err(|_| Error::config(key, format!("cannot parse `{raw}`")))
}

impl ExperimentConfig {
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        let mut seen = BTreeSet::new();
        let (mut omega, mut gamma, mut p, mut sigma) = (c.soliton.omega, c.soliton.gamma, c.soliton.p, c.soliton.sigma);
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}", lineno + 1), format!("expected `key = value`, got `{line}`")))?;
            let (key, value) = (key.trim(), value.trim());
            if !KEYS.contains(&key) {
                return Err(Error::config(key, "unknown key"));
            }
            if !seen.insert(key.to_string()) {
                return Err(Error::config(key, "assigned twice"));
            }
            match key {
                "grid.n" => c.n = parse_value(key, value)?,
                "grid.L" => c.half_width = parse_value(key, value)?,
                "time.dt" => c.dt = parse_value(key, value)?,
                "time.T" => c.t_final = parse_value(key, value)?,
                "time.store_every" => c.store_every = parse_value(key, value)?,
                "time.scheme" => {
                    c.scheme = match value {
                        "strang" => Scheme::Strang,
                        "composite4" => Scheme::Composite4,
                        _ => return Err(Error::config(key, format!("`{value}` is not strang or composite4"))),
                    }
                }
                "soliton.omega0" => omega = parse_value(key, value)?,
                "soliton.gamma0" => gamma = parse_value(key, value)?,
                "soliton.p0" => p = parse_value(key, value)?,
                "soliton.sigma0" => sigma = parse_value(key, value)?,
                "perturbation.kind" => {
                    c.perturbation.kind = match value {
                        "gaussian" => PerturbationKind::Gaussian,
                        "none" => PerturbationKind::None,
                        _ => return Err(Error::config(key, format!("`{value}` is not gaussian or none"))),
                    }
                }
                "perturbation.amplitude" => c.perturbation.amplitude = parse_value(key, value)?,
                "perturbation.width" => c.perturbation.width = parse_value(key, value)?,
                "perturbation.center" => c.perturbation.center = parse_value(key, value)?,
                "perturbation.phase" => c.perturbation.phase = parse_value(key, value)?,
                "frozen.xi_max" => c.xi_max = parse_value(key, value)?,
                "frozen.n_xi" => c.n_xi = parse_value(key, value)?,
                "tolerances.newton" => c.newton_tol = parse_value(key, value)?,
                "tolerances.boundary_monitor" => c.boundary_monitor = parse_value(key, value)?,
                "seed" => c.seed = parse_value(key, value)?,
                _ => unreachable!("key list and match arms agree"),
            }
        }
        c.soliton = SolitonParams::new(omega, gamma, p, sigma)
            .map_err(|e| Error::config("soliton.omega0", e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::config(key, format!("{v} must be positive")))
            }
        };
        if !self.n.is_power_of_two() || self.n < 16 {
            return Err(Error::config("grid.n", format!("{} is not a power of two >= 16", self.n)));
        }
        positive("grid.L", self.half_width)?;
        positive("time.dt", self.dt)?;
        if !(self.t_final >= 0.0) {
            return Err(Error::config("time.T", format!("{} must be nonnegative", self.t_final)));
        }
        positive("time.store_every", self.store_every)?;
        if self.store_every < self.dt {
            return Err(Error::config("time.store_every", "shorter than one time step"));
        }
        positive("soliton.omega0", self.soliton.omega)?;
        if !(self.perturbation.amplitude >= 0.0) {
            return Err(Error::config("perturbation.amplitude", "must be nonnegative"));
        }
        if self.perturbation.kind == PerturbationKind::Gaussian {
            positive("perturbation.width", self.perturbation.width)?;
        }
        positive("frozen.xi_max", self.xi_max)?;
        if self.n_xi < 3 || self.n_xi % 2 == 0 {
            return Err(Error::config("frozen.n_xi", format!("{} must be odd and >= 3", self.n_xi)));
        }
        positive("tolerances.newton", self.newton_tol)?;
        positive("tolerances.boundary_monitor", self.boundary_monitor)?;
        Ok(())
    }

    pub fn grid(&self) -> Result<Arc<Grid>> {
        Grid::new(self.n, self.half_width)
    }

    /// `ψ₀(x) = e^{ip₀(x−σ₀)}e^{iγ₀}(φ_{ω₀}(x−σ₀) + u₀(x−σ₀))`.
    pub fn initial_field(&self, grid: &Arc<Grid>) -> Result<ComplexField> {
        self.validate()?;
        let SolitonParams { omega, gamma, p, sigma } = self.soliton;
        Ok(ComplexField::from_fn(grid, |x| {
            let y = wrap(x - sigma, grid.half_width());
            C64::from_polar(1.0, p * y + gamma) * (profile::phi(omega, y) + self.perturbation.profile(y))
        }))
    }

    /// Same config with the perturbation removed.
    pub fn control(&self) -> Self {
        let mut c = self.clone();
        c.perturbation.kind = PerturbationKind::None;
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(ExperimentConfig::parse_str("# nothing\n\n").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn reference_file_matches_defaults() {
        let text = include_str!("../../../configs/reference.conf");
        assert_eq!(ExperimentConfig::parse_str(text).unwrap(), ExperimentConfig::default());
        let control = ExperimentConfig::parse_str(include_str!("../../../configs/control.conf")).unwrap();
        assert!(control.perturbation.is_trivial());
    }

    #[test]
    fn rejects_bad_grid_size_by_name() {
        let e = ExperimentConfig::parse_str("grid.n = 1000").unwrap_err();
        assert!(matches!(&e, Error::Config { key, .. } if key == "grid.n"), "{e}");
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        let e = ExperimentConfig::parse_str("grid.m = 4").unwrap_err();
        assert!(matches!(&e, Error::Config { key, .. } if key == "grid.m"));
        let e = ExperimentConfig::parse_str("seed = 1\nseed = 2").unwrap_err();
        assert!(matches!(&e, Error::Config { key, .. } if key == "seed"));
        let e = ExperimentConfig::parse_str("time.dt = fast").unwrap_err();
        assert!(matches!(&e, Error::Config { key, .. } if key == "time.dt"));
        let e = ExperimentConfig::parse_str("soliton.omega0 = -1").unwrap_err();
        assert!(matches!(&e, Error::Config { key, .. } if key == "soliton.omega0"));
    }

    #[test]
    fn parses_all_keys() {
        let text = "grid.n = 4096 # comment\ngrid.L = 80\ntime.dt = 2e-3\ntime.T = 5\n\
                    time.store_every = 0.25\ntime.scheme = strang\nsoliton.omega0 = 2\n\
                    soliton.gamma0 = 0.1\nsoliton.p0 = 0.2\nsoliton.sigma0 = -1\n\
                    perturbation.kind = none\nperturbation.amplitude = 0\nperturbation.width = 3\n\
                    perturbation.center = 1\nperturbation.phase = 0.5\nfrozen.xi_max = 10\n\
                    frozen.n_xi = 1025\ntolerances.newton = 1e-9\ntolerances.boundary_monitor = 1e-5\nseed = 7";
        let c = ExperimentConfig::parse_str(text).unwrap();
        assert_eq!((c.n, c.half_width, c.scheme, c.n_xi, c.seed), (4096, 80.0, Scheme::Strang, 1025, 7));
        assert_eq!(c.soliton, SolitonParams::new(2.0, 0.1, 0.2, -1.0).unwrap());
        assert!(c.perturbation.is_trivial());
    }

    #[test]
    fn zero_amplitude_initial_data_is_the_soliton() {
        let mut c = ExperimentConfig::parse_str("grid.n = 1024\ngrid.L = 40\nperturbation.amplitude = 0").unwrap();
        c.soliton = SolitonParams::new(1.5, 0.3, 0.4, 2.0).unwrap();
        let g = c.grid().unwrap();
        let a = c.initial_field(&g).unwrap();
        // same wave with the phase convention e^{ipx}: γ shifts by −pσ
        let q = SolitonParams::new(1.5, 0.3 - 0.4 * 2.0, 0.4, 2.0).unwrap();
        let b = crate::soliton::solitary_wave(&q, 0.0, &g).unwrap().field;
        let d = a.zip_with(&b, |x, y| x - y).unwrap();
        assert!(d.norm_linf() < 1e-14);
    }
}
