//! Config file schema, problem families and flag overrides.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use stostab::fields::{Rule1D, Rule2D};
use stostab::sde::{Scheme, SdeConfig};
use stostab::torus_vp::HomogeneousDiffusion;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Subcommand {
    Solve,
    Converge,
    Simulate,
    Gradflow,
    Torus,
}

impl Subcommand {
    pub fn name(self) -> &'static str {
        match self {
            Subcommand::Solve => "solve",
            Subcommand::Converge => "converge",
            Subcommand::Simulate => "simulate",
            Subcommand::Gradflow => "gradflow",
            Subcommand::Torus => "torus",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Quadrature,
    Fd,
}

/// On-disk config. Every table rejects unknown keys.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub subcommand: Option<Subcommand>,
    pub family: Option<String>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub problem: ProblemSection,
    #[serde(default)]
    pub numerics: NumericsSection,
    #[serde(default)]
    pub sde: SdeSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub drift: Option<Rule1D>,
    pub gamma: Option<Rule1D>,
    pub potential: Option<Rule1D>,
    pub stream: Option<Rule2D>,
    pub constant_field: Option<[f64; 2]>,
    pub diffusion: Option<HomogeneousDiffusion>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NumericsSection {
    pub eps: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub delta: Option<f64>,
    pub solver: Option<SolverChoice>,
    pub l1_tol: Option<f64>,
    pub probe: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeSection {
    pub dt: Option<f64>,
    pub n_steps: Option<u64>,
    pub burn_in: Option<u64>,
    pub n_trajectories: Option<usize>,
    pub bins: Option<usize>,
    pub scheme: Option<Scheme>,
}

/// Command-line overrides; `None` leaves the file value (or default) alone.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct Overrides {
    /// TOML config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Named problem family (see `stostab families`).
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated noise levels.
    #[arg(long, value_delimiter = ',')]
    pub eps: Option<Vec<f64>>,
    /// Grid points (per axis on the torus).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, value_enum)]
    pub solver: Option<SolverChoice>,
    /// L1 tolerance for `simulate`.
    #[arg(long)]
    pub l1_tol: Option<f64>,
    /// Also run the Monte Carlo probe in `torus`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub probe: Option<bool>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub n_steps: Option<u64>,
    #[arg(long)]
    pub burn_in: Option<u64>,
    #[arg(long)]
    pub n_trajectories: Option<usize>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long, value_enum)]
    pub scheme: Option<SchemeArg>,
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum SchemeArg {
    Heun,
    EulerMaruyama,
    ItoCorrected,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::Heun => Scheme::StratonovichHeun,
            SchemeArg::EulerMaruyama => Scheme::EulerMaruyama,
            SchemeArg::ItoCorrected => Scheme::ItoCorrectedEuler,
        }
    }
}

/// A registered problem. Fields left `None` do not apply to the family.
#[derive(Clone, Debug, Default)]
struct Family {
    drift: Option<Rule1D>,
    gamma: Option<Rule1D>,
    potential: Option<Rule1D>,
    stream: Option<Rule2D>,
    constant_field: Option<[f64; 2]>,
}

pub const FAMILIES: &[(&str, &str)] = &[
    ("sine-drift", "h = 2 + sin(2 pi x), Gamma = 1"),
    ("sine-drift-cos-gamma", "h = 2 + sin(2 pi x), Gamma = 1 + 0.5 cos(2 pi x)"),
    ("rotation", "h = 1, Gamma = 1"),
    ("noise-only", "h = 0, Gamma = 1 + 0.5 cos(2 pi x)"),
    ("cosine-well", "H = 1 - cos(2 pi x)"),
    ("double-well", "H = 1 - cos(4 pi x)"),
    ("flat-potential", "H = 0"),
    ("cellular", "psi = sin(2 pi x) sin(2 pi y)"),
    ("irrational", "h = (1, sqrt 2)"),
    ("still", "h = 0 on the torus"),
];

fn family(name: &str) -> Result<Family> {
    let sin_drift = Rule1D::Sin {
        offset: 2.0,
        amplitude: 1.0,
        k: 1,
    };
    let one = Rule1D::Constant { value: 1.0 };
    let cos_gamma = Rule1D::Cos {
        offset: 1.0,
        amplitude: 0.5,
        k: 1,
    };
    let well = |k| Rule1D::Cos {
        offset: 1.0,
        amplitude: -1.0,
        k,
    };
    Ok(match name {
        "sine-drift" => Family {
            drift: Some(sin_drift),
            gamma: Some(one),
            ..Default::default()
        },
        "sine-drift-cos-gamma" => Family {
            drift: Some(sin_drift),
            gamma: Some(cos_gamma),
            ..Default::default()
        },
        "rotation" => Family {
            drift: Some(one.clone()),
            gamma: Some(one),
            ..Default::default()
        },
        "noise-only" => Family {
            drift: Some(Rule1D::Constant { value: 0.0 }),
            gamma: Some(cos_gamma),
            ..Default::default()
        },
        "cosine-well" => Family {
            potential: Some(well(1)),
            ..Default::default()
        },
        "double-well" => Family {
            potential: Some(well(2)),
            ..Default::default()
        },
        "flat-potential" => Family {
            potential: Some(Rule1D::Constant { value: 0.0 }),
            ..Default::default()
        },
        "cellular" => Family {
            stream: Some(Rule2D::SinSin {
                amplitude: 1.0,
                kx: 1,
                ky: 1,
            }),
            ..Default::default()
        },
        "irrational" => Family {
            constant_field: Some([1.0, std::f64::consts::SQRT_2]),
            ..Default::default()
        },
        "still" => Family {
            constant_field: Some([0.0, 0.0]),
            ..Default::default()
        },
        other => bail!(
            "unknown family {other:?}; known: {}",
            FAMILIES.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
        ),
    })
}

/// Fully resolved experiment, echoed into the manifest.
#[derive(Clone, Debug, Serialize)]
pub struct ExperimentConfig {
    pub subcommand: Subcommand,
    pub family: Option<String>,
    pub out: PathBuf,
    pub seed: u64,
    pub drift: Option<Rule1D>,
    pub gamma: Option<Rule1D>,
    pub potential: Option<Rule1D>,
    pub stream: Option<Rule2D>,
    pub constant_field: Option<[f64; 2]>,
    pub diffusion: Option<HomogeneousDiffusion>,
    pub eps: Vec<f64>,
    pub n: usize,
    pub delta: Option<f64>,
    pub solver: Option<SolverChoice>,
    pub l1_tol: Option<f64>,
    pub probe: bool,
    pub scheme: Option<Scheme>,
    pub sde: Option<SdeConfig>,
}

pub fn load_file(path: &Path) -> Result<FileConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

/// Merges defaults, the family, the file and the flags, then validates.
pub fn resolve(sub: Subcommand, ov: &Overrides) -> Result<ExperimentConfig> {
    let file = match &ov.config {
        Some(p) => load_file(p)?,
        None => FileConfig::default(),
    };
    if let Some(s) = file.subcommand {
        if s != sub {
            bail!("config is for `{}`, not `{}`", s.name(), sub.name());
        }
    }
    let family_name = ov.family.clone().or(file.family.clone()).or_else(|| {
        Some(
            match sub {
                Subcommand::Solve | Subcommand::Converge | Subcommand::Simulate => "sine-drift",
                Subcommand::Gradflow => "cosine-well",
                Subcommand::Torus => "cellular",
            }
            .to_string(),
        )
    });
    let fam = match &family_name {
        Some(name) => family(name)?,
        None => Family::default(),
    };
    let p = file.problem;
    let num = file.numerics;
    let s = file.sde;

    let (default_eps, default_n): (&[f64], usize) = match sub {
        Subcommand::Solve => (&[0.1], 512),
        Subcommand::Converge => (&[0.2, 0.1, 0.05, 0.02, 0.01], 512),
        Subcommand::Simulate => (&[0.1], 512),
        Subcommand::Gradflow => (&[0.4, 0.2, 0.1, 0.05], 1024),
        Subcommand::Torus => (&[0.2, 0.1, 0.05], 64),
    };
    let out = ov
        .out
        .clone()
        .or(file.out)
        .unwrap_or_else(|| PathBuf::from(format!("stostab-{}", sub.name())));
    let seed = ov.seed.or(file.seed).unwrap_or(0);
    let eps = ov.eps.clone().or(num.eps).unwrap_or_else(|| default_eps.to_vec());
    let n = ov.n.or(num.n).unwrap_or(default_n);

    // an explicit torus field replaces the family's field entirely
    let (stream, constant_field) = if p.stream.is_some() || p.constant_field.is_some() {
        (p.stream, p.constant_field)
    } else {
        (fam.stream, fam.constant_field)
    };
    let mut cfg = ExperimentConfig {
        subcommand: sub,
        family: family_name,
        out,
        seed,
        drift: p.drift.or(fam.drift),
        gamma: p.gamma.or(fam.gamma),
        potential: p.potential.or(fam.potential),
        stream,
        constant_field,
        diffusion: p.diffusion,
        eps,
        n,
        delta: None,
        solver: None,
        l1_tol: None,
        probe: false,
        scheme: None,
        sde: None,
    };

    if cfg.eps.is_empty() {
        bail!("eps list is empty");
    }
    match sub {
        Subcommand::Solve | Subcommand::Converge | Subcommand::Simulate => {
            let drift = cfg.drift.as_ref().context("this experiment needs problem.drift")?;
            drift.validate().context("problem.drift")?;
            let gamma = cfg.gamma.get_or_insert(Rule1D::Constant { value: 1.0 });
            gamma.validate().context("problem.gamma")?;
            let allow_zero = sub == Subcommand::Simulate;
            check_eps_list(&cfg.eps, allow_zero)?;
            if sub == Subcommand::Converge {
                if cfg.eps.len() < 3 {
                    bail!("converge needs at least 3 eps values");
                }
                if cfg.eps.windows(2).any(|w| !(w[1] < w[0])) {
                    bail!("converge eps values must be strictly decreasing");
                }
            }
            if sub == Subcommand::Solve {
                cfg.solver = Some(ov.solver.or(num.solver).unwrap_or(SolverChoice::Quadrature));
            }
            if sub == Subcommand::Simulate {
                let tol = ov.l1_tol.or(num.l1_tol).unwrap_or(0.05);
                if !(tol > 0.0) {
                    bail!("l1_tol must be positive");
                }
                cfg.l1_tol = Some(tol);
                cfg.scheme = Some(ov.scheme.map(Scheme::from).or(s.scheme).unwrap_or(Scheme::StratonovichHeun));
                cfg.sde = Some(sde_config(ov, &s, seed, 64)?);
            }
        }
        Subcommand::Gradflow => {
            let pot = cfg.potential.as_ref().context("gradflow needs problem.potential")?;
            pot.validate().context("problem.potential")?;
            check_eps_list(&cfg.eps, false)?;
            let delta = ov.delta.or(num.delta).unwrap_or(0.25);
            if !(delta > 0.0 && delta < 0.5) {
                bail!("delta must lie in (0, 1/2), got {delta}");
            }
            cfg.delta = Some(delta);
        }
        Subcommand::Torus => {
            if cfg.stream.is_some() == cfg.constant_field.is_some() {
                bail!("torus needs exactly one of problem.stream and problem.constant_field");
            }
            check_eps_list(&cfg.eps, false)?;
            let g = cfg.diffusion.get_or_insert(HomogeneousDiffusion::identity());
            g.validate().context("problem.diffusion")?;
            cfg.probe = ov.probe.or(num.probe).unwrap_or(false);
            if cfg.probe {
                cfg.sde = Some(sde_config(ov, &s, seed, 32)?);
            }
        }
    }
    if sub == Subcommand::Torus {
        stostab::fields::Grid2D::new(cfg.n).context("numerics.n")?;
    } else {
        stostab::fields::Grid1D::new(cfg.n).context("numerics.n")?;
    }
    if cfg.solver == Some(SolverChoice::Fd) && cfg.n < stostab::circle_fpe::FD_MIN_POINTS {
        bail!("the FD solver needs n >= {}", stostab::circle_fpe::FD_MIN_POINTS);
    }
    Ok(cfg)
}

fn check_eps_list(eps: &[f64], allow_zero: bool) -> Result<()> {
    for &e in eps {
        let ok = e.is_finite() && (e > 0.0 || (allow_zero && e == 0.0));
        if !ok {
            bail!("invalid eps {e}");
        }
    }
    Ok(())
}

fn sde_config(ov: &Overrides, s: &SdeSection, seed: u64, default_bins: usize) -> Result<SdeConfig> {
    let n_steps = ov.n_steps.or(s.n_steps).unwrap_or(1_000_000);
    let cfg = SdeConfig {
        dt: ov.dt.or(s.dt).unwrap_or(1e-3),
        n_steps,
        burn_in: ov.burn_in.or(s.burn_in).unwrap_or(n_steps / 10),
        n_trajectories: ov.n_trajectories.or(s.n_trajectories).unwrap_or(16),
        seed,
        bins: ov.bins.or(s.bins).unwrap_or(default_bins),
    };
    cfg.validate().context("sde section")?;
    Ok(cfg)
}
