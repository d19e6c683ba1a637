//! Command-line options and the key = value config file they override.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::CliError;

#[derive(Debug, Parser)]
#[command(name = "sbmclique", version, about = "Clique-count community recovery experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an SBM graph and write it as an edge list
    Gen(Opts),
    /// Evaluate the clique statistic S_ij on a graph file
    Stat(Opts),
    /// Recover communities from a graph file by median of means
    Recover(Opts),
    /// Run the verification suites and report pass/fail per check
    Verify(Opts),
    /// Clustering error across a lambda grid, as CSV
    Sweep(Opts),
    /// Templates, Gram matrix, correlation checks and correlation bound
    Ld(Opts),
    /// Evaluate every threshold and condition at one parameter point
    Regime(Opts),
}

#[derive(Debug, Clone, Default, Args)]
pub struct Opts {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long = "L")]
    pub l: Option<usize>,
    #[arg(long = "D")]
    pub d: Option<usize>,
    #[arg(long)]
    pub cs: Option<f64>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// start:stop:steps, inclusive, evenly spaced
    #[arg(long)]
    pub grid: Option<String>,
    /// key = value file; flags given on the command line win
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// edge-list input
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// labels file: written by `gen`, read by `recover` to score the result
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// same, diff or none: conditioning of nodes 0 and 1 in `gen`
    #[arg(long)]
    pub condition: Option<String>,
    #[arg(long)]
    pub i: Option<usize>,
    #[arg(long)]
    pub j: Option<usize>,
    #[arg(long)]
    pub rho: Option<f64>,
    /// negative control for `verify`: perturb the named check's formula
    #[arg(long)]
    pub corrupt: Option<String>,
}

fn parse<T: std::str::FromStr>(key: &str, v: &str, line: usize) -> Result<T, CliError> {
    v.parse().map_err(|_| CliError::Usage(format!("config line {line}: bad value `{v}` for `{key}`")))
}

impl Opts {
    /// Fills unset options from the config file, if one was given.
    pub fn resolve(mut self) -> Result<Self, CliError> {
        if let Some(path) = self.config.clone() {
            let text = std::fs::read_to_string(&path)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
            self.merge_config(&text)?;
        }
        Ok(self)
    }

    pub fn merge_config(&mut self, text: &str) -> Result<(), CliError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let (key, v) = body
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| CliError::Usage(format!("config line {line}: expected key = value")))?;
            macro_rules! fill {
                ($field:ident) => {
                    if self.$field.is_none() {
                        self.$field = Some(parse(key, v, line)?);
                    }
                };
            }
            match key {
                "n" => fill!(n),
                "K" => fill!(k),
                "q" => fill!(q),
                "lambda" => fill!(lambda),
                "m" => fill!(m),
                "L" => fill!(l),
                "D" => fill!(d),
                "cs" => fill!(cs),
                "reps" => fill!(reps),
                "seed" => fill!(seed),
                "out" => fill!(out),
                "grid" => fill!(grid),
                "graph" => fill!(graph),
                "truth" => fill!(truth),
                "condition" => fill!(condition),
                "i" => fill!(i),
                "j" => fill!(j),
                "rho" => fill!(rho),
                "corrupt" => fill!(corrupt),
                _ => return Err(CliError::Usage(format!("config line {line}: unknown key `{key}`"))),
            }
        }
        Ok(())
    }
}

pub fn need<T: Copy>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
}

pub fn need_path<'a>(v: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    v.as_deref().ok_or_else(|| CliError::Usage(format!("missing --{flag}")))
}

/// `start:stop:steps` → `steps` evenly spaced values including both ends.
pub fn parse_grid(s: &str) -> Result<Vec<f64>, CliError> {
    let bad = || CliError::Usage(format!("bad grid `{s}`, expected start:stop:steps"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let stop: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    let steps: usize = parts[2].trim().parse().map_err(|_| bad())?;
    if steps == 0 || !start.is_finite() || !stop.is_finite() {
        return Err(bad());
    }
    if steps == 1 {
        return Ok(vec![start]);
    }
    Ok((0..steps).map(|i| start + (stop - start) * i as f64 / (steps - 1) as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_win_over_config() {
        let mut o = Opts { n: Some(50), ..Default::default() };
        o.merge_config("n = 10\nK=3 # comment\n\nq = 0.25\ngrid = 0:1:3\n").unwrap();
        assert_eq!((o.n, o.k, o.q), (Some(50), Some(3), Some(0.25)));
        assert_eq!(o.grid.as_deref(), Some("0:1:3"));
    }

    #[test]
    fn config_errors_name_the_line() {
        let mut o = Opts::default();
        let e = o.merge_config("n = 5\nbogus = 1\n").unwrap_err();
        assert!(e.to_string().contains("line 2"));
        assert!(Opts::default().merge_config("q = abc").is_err());
        assert!(Opts::default().merge_config("just text").is_err());
    }

    #[test]
    fn grids() {
        assert_eq!(parse_grid("0:1:5").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(parse_grid("0.3:0.9:1").unwrap(), vec![0.3]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }
}
