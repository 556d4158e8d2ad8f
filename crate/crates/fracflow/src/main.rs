use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use fracflow::harness::config::ScenarioConfig;
use fracflow::harness::io;
use fracflow::harness::run::{alpha_search, build_setup, resolve_alpha, run, symbol_params};
use fracflow::harness::study::{study_csv, time_grid_study};
use fracflow::monolithic::solve_monolithic;
use fracflow::symbol::{alpha_scan, FreqBox};
use fracflow::Error;

/// Compressible Darcy flow through a fractured porous medium: monolithic
/// reference solver and global-in-time domain decomposition methods.
#[derive(Parser)]
#[command(name = "fracflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Scenario configuration file (INI-style; see README for the schema).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output] dir).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed (overrides [method] seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for the two subdomain sweeps (1 = sequential).
    #[arg(long)]
    threads: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<ScenarioConfig, Error> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::parse_file(path)?,
            None => ScenarioConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.out_dir = Some(out.clone());
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(threads) = self.threads {
            cfg.threads = threads;
        }
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its artifacts.
    Solve(Common),
    /// Solve the monolithic problem on a fine conforming grid and save it as
    /// a portable reference file.
    Reference {
        #[command(flatten)]
        common: Common,
        /// Output file for the reference solution.
        #[arg(long)]
        file: PathBuf,
        /// Number of time slabs for the reference (conforming).
        #[arg(long, default_value_t = 2000)]
        slabs: usize,
    },
    /// Optimize the Robin parameter for the scenario and print it.
    OptimizeAlpha(Common),
    /// Emit an (alpha, max convergence factor) scan as CSV.
    AlphaScan {
        #[command(flatten)]
        common: Common,
        /// Number of scan points.
        #[arg(long, default_value_t = 64)]
        points: usize,
        /// Output file (stdout when omitted).
        #[arg(long)]
        file: Option<PathBuf>,
    },
    /// Run the three-time-grids-by-three-methods comparison study.
    TimeGridStudy {
        #[command(flatten)]
        common: Common,
        /// Coarse slab count.
        #[arg(long, default_value_t = 100)]
        coarse: usize,
        /// Fine slab count (multiple of the coarse one).
        #[arg(long, default_value_t = 500)]
        fine: usize,
        /// Reference slab count (multiple of the fine one).
        #[arg(long, default_value_t = 2000)]
        reference: usize,
    },
}

fn main() -> ExitCode {
    match dispatch() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracflow: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch() -> Result<(), Error> {
    match Cli::parse().command {
        Command::Solve(common) => {
            let cfg = common.load()?;
            let art = run(&cfg)?;
            println!(
                "method={} iterations={} converged={} err_p={:.3e} err_u={:.3e} err_p_frac={:.3e} wall={:.2}s{}",
                cfg.method.name(),
                art.iterations,
                art.converged,
                art.report.err_p_matrix,
                art.report.err_u_matrix,
                art.report.err_p_fracture,
                art.wall_seconds,
                art.alpha.map(|a| format!(" alpha={a:.6e}")).unwrap_or_default(),
            );
            if !art.converged {
                return Err(Error::NoConvergence(format!(
                    "{} stopped after {} iterations",
                    cfg.method.name(),
                    art.iterations
                )));
            }
            Ok(())
        }
        Command::Reference {
            common,
            file,
            slabs,
        } => {
            let mut cfg = common.load()?;
            cfg.method = fracflow::harness::config::Method::Monolithic;
            cfg.error_to_zero = false;
            cfg.m_sub = slabs;
            cfg.m_frac = slabs;
            let setup = build_setup(&cfg)?;
            let sol = solve_monolithic(&setup.coupled_problem())?;
            io::write_reference(&file, &sol, &setup.domain)?;
            println!("reference with {slabs} slabs written to {}", file.display());
            Ok(())
        }
        Command::OptimizeAlpha(common) => {
            let cfg = common.load()?;
            let setup = build_setup(&cfg)?;
            let alpha = resolve_alpha(
                &ScenarioConfig {
                    alpha: fracflow::harness::config::AlphaMode::Optimized,
                    method: fracflow::harness::config::Method::GtoGmres,
                    ..cfg.clone()
                },
                &setup,
            )?;
            let p = symbol_params(&cfg, alpha);
            let hy = setup.domain.frac.hy;
            let l = setup.domain.ny() as f64 * hy;
            let dt = setup.grid_sub.dt().max(setup.grid_frac.dt());
            let b = FreqBox::from_discretization(l, hy, cfg.t_final, dt)?;
            let rho = fracflow::symbol::max_rho_on_box(&p, &b);
            println!("alpha = {alpha:.12e}  max|rho_f| = {rho:.6e}");
            Ok(())
        }
        Command::AlphaScan {
            common,
            points,
            file,
        } => {
            let cfg = common.load()?;
            let setup = build_setup(&cfg)?;
            let p = symbol_params(&cfg, 0.0);
            let hy = setup.domain.frac.hy;
            let l = setup.domain.ny() as f64 * hy;
            let dt = setup.grid_sub.dt().max(setup.grid_frac.dt());
            let b = FreqBox::from_discretization(l, hy, cfg.t_final, dt)?;
            let mut search = alpha_search(&cfg, &p, l, hy);
            search.scan_points = points;
            let mut csv = String::from("alpha,max_rho\n");
            for (a, r) in alpha_scan(&p, &b, &search) {
                csv.push_str(&format!("{a:e},{r:e}\n"));
            }
            match file {
                Some(path) => std::fs::write(path, csv)?,
                None => print!("{csv}"),
            }
            Ok(())
        }
        Command::TimeGridStudy {
            common,
            coarse,
            fine,
            reference,
        } => {
            let cfg = common.load()?;
            let out = time_grid_study(&cfg, coarse, fine, reference)?;
            let csv = study_csv(&out.rows);
            if let Some(dir) = &cfg.out_dir {
                std::fs::create_dir_all(dir)?;
                std::fs::write(dir.join("time_grid_study.csv"), &csv)?;
            }
            print!("{csv}");
            Ok(())
        }
    }
}
