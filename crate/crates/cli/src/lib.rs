//! Command-line front end: runs, metric extraction and SVG frames.

pub mod args;
pub mod error;
pub mod measure;
pub mod render;
pub mod runner;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::Parser;
use pilus_core::world::presets;

use args::{Cli, Command};
pub use error::{CliError, EXIT_CONFIG, EXIT_IO, EXIT_OK, EXIT_RUNTIME};

/// Parse `argv`, execute, and return the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("pilus: {e}");
            e.exit_code()
        }
    }
}

/// Print a line, ignoring a closed stdout such as `pilus presets | head`.
macro_rules! say {
    ($($t:tt)*) => {{
        let _ = writeln!(std::io::stdout().lock(), $($t)*);
    }};
}

pub fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run(args) => {
            let out = runner::cmd_run(&args)?;
            say!("{}", out.dir.display());
            for (name, stats) in &out.summary.stats {
                if let Some(s) = stats {
                    say!("  {name}: {:.4} ± {:.4} (n={})", s.mean, s.std, s.n);
                }
            }
            Ok(())
        }
        Command::Metrics(args) => {
            let out = match &args.out {
                Some(dir) => dir.clone(),
                None => args.files[0].parent().map(PathBuf::from).unwrap_or_default(),
            };
            for path in measure::write_metrics(&args.files, &args.metrics, args.bins, &out)? {
                say!("{}", path.display());
            }
            Ok(())
        }
        Command::Render(args) => {
            let options = render::RenderOptions {
                palette: render::Palette::default().with_overrides(&args.colors)?,
                vectors: args.vectors,
                bins: args.bins.unwrap_or(measure::DEFAULT_BINS),
                every: args.every as usize,
            };
            let out = args.out.clone().unwrap_or_else(|| {
                let mut name = args.file.clone().into_os_string();
                name.push(".frames");
                PathBuf::from(name)
            });
            let frames = render::render_file(&args.file, &out, &options)?;
            say!("{} frames in {}", frames.len(), out.display());
            Ok(())
        }
        Command::Presets => {
            for name in presets::LAYOUTS {
                say!("{name}\tlayout");
            }
            for name in presets::EXPERIMENTS {
                say!("{name}\texperiment");
            }
            Ok(())
        }
        Command::DumpConfig(source) => {
            let config = runner::load_config(&source)?;
            runner::resolve(&config)?;
            let _ = write!(std::io::stdout().lock(), "{}", config.to_toml());
            Ok(())
        }
    }
}
