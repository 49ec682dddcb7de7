//! Shared plumbing: output/seed resolution, chart and solver construction
//! from config keys, and the one-line-per-check console format.

use crate::config::Config;
use crate::RunArgs;
use anyhow::{bail, Context, Result};
use crpslab::chart::BaseChart;
use crpslab::estimates::EstimateReport;
use crpslab::hamiltonian::{Hamiltonian, Perturbation, TemporalProfile};
use crpslab::solver::{GmresParams, NewtonParams};
use std::path::PathBuf;

pub struct RunContext {
    pub config: Config,
    pub out_dir: PathBuf,
    pub seed: u64,
}

impl RunContext {
    pub fn new(name: &'static str, args: &RunArgs) -> Result<Self> {
        let config = Config::load(&args.config)?;
        let out_dir = match &args.out {
            Some(p) => p.clone(),
            None => PathBuf::from(config.str_or("out", &format!("runs/{name}"))),
        };
        std::fs::create_dir_all(&out_dir)
            .with_context(|| format!("creating output directory {}", out_dir.display()))?;
        let seed = match args.seed {
            Some(s) => s,
            None => config.u64_opt("seed")?.unwrap_or(0),
        };
        Ok(RunContext {
            config,
            out_dir,
            seed,
        })
    }

    pub fn out_path(&self, file: &str) -> PathBuf {
        self.out_dir.join(file)
    }

    pub fn write_text(&self, file: &str, content: &str) -> Result<()> {
        let path = self.out_path(file);
        std::fs::write(&path, content)
            .with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}

pub fn parse_chart(cfg: &Config) -> Result<BaseChart> {
    let n = cfg.usize_or("n", 1)?;
    if n == 0 {
        bail!("config key `n` must be positive");
    }
    match cfg.str_or("chart", "flat").as_str() {
        "flat" => Ok(BaseChart::FlatTorus { n }),
        "ball" => Ok(BaseChart::ComplexHyperbolic { n }),
        other => bail!("config key `chart`: `{other}` is not `flat` or `ball`"),
    }
}

/// Hamiltonian from `amplitude`, `tau`, and `profile` (`auto` switches the
/// plateau on exactly when a perturbation is present).
pub fn parse_hamiltonian(cfg: &Config, chart: BaseChart) -> Result<Hamiltonian> {
    let amplitude = cfg.f64_or("amplitude", 0.0)?;
    let tau = cfg.f64_or("tau", 2.0)?;
    let perturbation = if amplitude != 0.0 {
        Some(Perturbation::standard(chart.n(), amplitude))
    } else {
        None
    };
    let profile = match cfg.str_or("profile", "auto").as_str() {
        "static" => TemporalProfile::Static,
        "plateau" => TemporalProfile::Plateau { tau },
        "auto" => {
            if perturbation.is_some() {
                TemporalProfile::Plateau { tau }
            } else {
                TemporalProfile::Static
            }
        }
        other => bail!("config key `profile`: `{other}` is not `static`, `plateau`, or `auto`"),
    };
    Ok(Hamiltonian {
        chart,
        perturbation,
        profile,
    })
}

pub fn parse_newton(cfg: &Config) -> Result<NewtonParams> {
    let defaults = NewtonParams::default();
    let gmres_defaults = GmresParams::default();
    Ok(NewtonParams {
        residual_tol: cfg.f64_or("newton_tol", defaults.residual_tol)?,
        max_iterations: cfg.usize_or("newton_max_iterations", defaults.max_iterations)?,
        gmres: GmresParams {
            rel_tol: cfg.f64_or("gmres_tol", gmres_defaults.rel_tol)?,
            restart: cfg.usize_or("gmres_restart", gmres_defaults.restart)?,
            max_outer: cfg.usize_or("gmres_max_outer", gmres_defaults.max_outer)?,
        },
        max_backtracks: defaults.max_backtracks,
    })
}

pub fn print_reports(reports: &[EstimateReport]) {
    for r in reports {
        let verdict = if r.pass { "PASS" } else { "FAIL" };
        println!(
            "[{verdict}] {}: {:.6e} ≤ {:.6e}  (slack {:.3e})",
            r.name, r.left, r.right, r.slack
        );
    }
}
