use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use wishart_hgm::dist::{l1_density_khatri, null_constantine, null_venables};
use wishart_hgm::hgm::{integrate_cdf, AbsErr, IntegratorConfig, ProblemSpec};
use wishart_hgm::oracle::empirical_max_root_cdf;
use wishart_hgm::Error;

/// Distribution of the extreme roots of W1 W2^-1 by the holonomic gradient method.
///
/// Every option can also be set through an environment variable named
/// HGM_<OPTION>, e.g. HGM_RELERR=1e-12.
#[derive(Parser, Debug)]
#[command(name = "hgm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Pr(l1 < x) for W1 ~ W(n1, diag beta), W2 ~ W(n2, I).
    P2wishart(Common),
    /// Pr(lm > x), the upper tail of the smallest root.
    Minroot(Common),
    /// Pr(l1 < x) when all beta are equal (beta defaults to 1).
    Null(Common),
    /// Density of l1 as a 3F2 series.
    Density(Common),
    /// p2wishart together with a Monte Carlo estimate at every grid point.
    McCheck(McArgs),
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Dimension.
    #[arg(long, env = "HGM_M")]
    m: usize,
    /// Population eigenvalues of W1, comma separated.
    #[arg(long, env = "HGM_BETA", value_delimiter = ',', num_args = 1..)]
    beta: Vec<f64>,
    #[arg(long, env = "HGM_N1")]
    n1: f64,
    #[arg(long, env = "HGM_N2")]
    n2: f64,
    /// Last evaluation point.
    #[arg(long, env = "HGM_Q")]
    q: f64,
    /// First evaluation point and starting point of the integration.
    #[arg(long, env = "HGM_Q0", default_value_t = 0.3)]
    q0: f64,
    /// Absolute tolerance; chosen from the initial series when omitted.
    #[arg(long, env = "HGM_ABSERR")]
    abserr: Option<f64>,
    #[arg(long, env = "HGM_RELERR", default_value_t = 1e-10)]
    relerr: f64,
    /// Shorthand for --abserr a --relerr r.
    #[arg(long, value_name = "A,R", value_delimiter = ',', conflicts_with_all = ["abserr", "relerr"])]
    err: Option<Vec<f64>>,
    #[arg(long, env = "HGM_SERIES_ERROR", default_value_t = 1e-5)]
    series_error: f64,
    #[arg(long, env = "HGM_MAX_DEGREE", default_value_t = 200)]
    max_degree: usize,
    #[arg(long, env = "HGM_GRID_POINTS", default_value_t = 100)]
    grid_points: usize,
    /// Evenly spaced grid instead of the geometric default.
    #[arg(long)]
    linear: bool,
    /// CSV destination; stdout when omitted.
    #[arg(long, env = "HGM_OUT")]
    out: Option<PathBuf>,
    /// Also write a gnuplot script for the CSV to this path (requires --out).
    #[arg(long)]
    gnuplot: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct McArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, env = "HGM_SEED", default_value_t = 2024)]
    seed: u64,
    #[arg(long, env = "HGM_N_SAMPLES", default_value_t = 200_000)]
    n_samples: usize,
}

impl Common {
    fn validate(&self) -> anyhow::Result<()> {
        if !(self.q0 > 0.0 && self.q > self.q0 && self.q.is_finite()) {
            bail!(Error::Parameter(format!("need q > q0 > 0, got q0 = {}, q = {}", self.q0, self.q)));
        }
        if self.grid_points < 2 {
            bail!(Error::Parameter(format!("grid_points must be at least 2, got {}", self.grid_points)));
        }
        if self.err.as_ref().is_some_and(|e| e.len() != 2) {
            bail!(Error::Parameter("--err takes exactly two values, abserr,relerr".into()));
        }
        if self.gnuplot.is_some() && self.out.is_none() {
            bail!(Error::Parameter("--gnuplot needs --out".into()));
        }
        Ok(())
    }

    fn spec(&self) -> anyhow::Result<ProblemSpec> {
        Ok(ProblemSpec::new(self.m, self.n1, self.n2, self.beta.clone())?)
    }

    fn config(&self) -> IntegratorConfig {
        let (abs, rel) = match &self.err {
            Some(v) => (Some(v[0]), v[1]),
            None => (self.abserr, self.relerr),
        };
        IntegratorConfig {
            q0: self.q0,
            series_error: self.series_error,
            abs_err: abs.map_or(AbsErr::Auto, AbsErr::Fixed),
            rel_err: rel,
            max_degree: self.max_degree,
            ..IntegratorConfig::default()
        }
    }

    fn grid(&self) -> Vec<f64> {
        let n = self.grid_points;
        let mut xs: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / (n - 1) as f64;
                if self.linear {
                    self.q0 + t * (self.q - self.q0)
                } else {
                    self.q0 * (self.q / self.q0).powf(t)
                }
            })
            .collect();
        xs[0] = self.q0;
        xs[n - 1] = self.q;
        xs
    }
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<f64>>,
}

fn report(warnings: &[wishart_hgm::hgm::Warning]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn p2wishart(c: &Common) -> anyhow::Result<Table> {
    let spec = c.spec()?;
    let xs = c.grid();
    let curve = integrate_cdf(&spec, &c.config(), &xs)?;
    report(&curve.warnings);
    eprintln!(
        "x0 = {}, Pr(x0) = {:e}, degree = {}, abserr = {:e}, steps = {} ({} rejected)",
        curve.x0,
        curve.initial_probability,
        curve.truncation_degree,
        curve.abs_err,
        curve.accepted_steps,
        curve.rejected_steps
    );
    Ok(Table {
        header: vec!["x", "prob"],
        rows: curve.points.iter().map(|p| vec![p.x, p.probability]).collect(),
    })
}

fn minroot(c: &Common) -> anyhow::Result<Table> {
    let spec = c.spec()?.swapped();
    let xs = c.grid();
    let inverted: Vec<f64> = xs.iter().rev().map(|x| 1.0 / x).collect();
    let curve = integrate_cdf(&spec, &c.config(), &inverted)?;
    report(&curve.warnings);
    let probs: Vec<f64> = curve.points.iter().rev().map(|p| p.probability).collect();
    Ok(Table {
        header: vec!["x", "prob"],
        rows: xs.iter().zip(probs).map(|(&x, p)| vec![x, p]).collect(),
    })
}

fn null(c: &Common) -> anyhow::Result<Table> {
    let scale = match c.beta.split_first() {
        None => 1.0,
        Some((&b, rest)) => {
            if c.beta.len() != c.m || rest.iter().any(|&v| v != b) || !(b > 0.0) {
                bail!(Error::Parameter(format!(
                    "null needs {} equal positive beta values, got {:?}",
                    c.m, c.beta
                )));
            }
            b
        }
    };
    let cfg = c.config();
    let integral = |v: f64| v.fract() == 0.0 && v >= 0.0 && v <= u32::MAX as f64;
    let polynomial = integral(c.n1)
        && integral(c.n2)
        && c.n2 >= c.m as f64 + 1.0
        && (c.n2 as u64 - c.m as u64 - 1) % 2 == 0
        && c.n1 >= c.m as f64;
    let rows = c
        .grid()
        .into_iter()
        .map(|x| {
            let p = if polynomial {
                null_venables(c.m, c.n1 as u32, c.n2 as u32, x / scale)?
            } else {
                null_constantine(c.m, c.n1, c.n2, x / scale, &cfg)?
            };
            Ok(vec![x, p])
        })
        .collect::<wishart_hgm::Result<_>>()?;
    Ok(Table {
        header: vec!["x", "prob"],
        rows,
    })
}

fn density(c: &Common) -> anyhow::Result<Table> {
    let spec = c.spec()?;
    let cfg = c.config();
    let rows = c
        .grid()
        .into_iter()
        .map(|x| {
            let d = l1_density_khatri(&spec, x, &cfg)?;
            if !d.series.converged {
                return Err(Error::SeriesNotConverged {
                    degree: d.series.truncation_degree,
                });
            }
            Ok(vec![x, d.value])
        })
        .collect::<wishart_hgm::Result<_>>()?;
    Ok(Table {
        header: vec!["x", "density"],
        rows,
    })
}

fn mc_check(a: &McArgs) -> anyhow::Result<Table> {
    let mut table = p2wishart(&a.common)?;
    let xs: Vec<f64> = table.rows.iter().map(|r| r[0]).collect();
    let mc = empirical_max_root_cdf(&a.common.spec()?, &xs, a.n_samples, a.seed)?;
    let mut outside = 0;
    for (row, est) in table.rows.iter_mut().zip(&mc) {
        if !est.contains(row[1], 3.0) {
            outside += 1;
        }
        row.extend([est.probability, est.standard_error]);
    }
    eprintln!(
        "{outside} of {} points differ from Monte Carlo by more than 3 standard errors (N = {}, seed = {})",
        xs.len(),
        a.n_samples,
        a.seed
    );
    table.header.extend(["mc_prob", "mc_se"]);
    Ok(table)
}

fn write_csv<W: Write>(mut w: W, table: &Table) -> io::Result<()> {
    writeln!(w, "{}", table.header.join(","))?;
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", cells.join(","))?;
    }
    w.flush()
}

fn write_gnuplot(path: &Path, data: &Path, table: &Table, logscale: bool) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "set datafile separator ','")?;
    writeln!(w, "set key autotitle columnhead")?;
    writeln!(w, "set xlabel 'x'")?;
    writeln!(w, "set ylabel '{}'", table.header[1])?;
    if logscale {
        writeln!(w, "set logscale x")?;
    }
    let file = data.display().to_string().replace('\'', "''");
    let mut plots = vec![format!("'{file}' using 1:2 with lines")];
    if table.header.len() > 3 {
        plots.push(format!("'{file}' using 1:3:4 with yerrorbars"));
    }
    writeln!(w, "plot {}", plots.join(", "))?;
    w.flush()
}

fn run(cli: &Cli) -> anyhow::Result<()> {
    let common = match &cli.command {
        Command::P2wishart(c) | Command::Minroot(c) | Command::Null(c) | Command::Density(c) => c,
        Command::McCheck(a) => &a.common,
    };
    common.validate()?;
    let table = match &cli.command {
        Command::P2wishart(c) => p2wishart(c)?,
        Command::Minroot(c) => minroot(c)?,
        Command::Null(c) => null(c)?,
        Command::Density(c) => density(c)?,
        Command::McCheck(a) => mc_check(a)?,
    };
    match &common.out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
            write_csv(BufWriter::new(f), &table)?;
        }
        None => write_csv(io::stdout().lock(), &table)?,
    }
    if let (Some(script), Some(data)) = (&common.gnuplot, &common.out) {
        write_gnuplot(script, data, &table, !common.linear)
            .with_context(|| format!("cannot write {}", script.display()))?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Parameter(_) | Error::Domain(_)) => 2,
        Some(Error::Initialization(_)) => 3,
        Some(Error::DiagonalSingularity { .. }) => 5,
        Some(_) => 4,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            if matches!(err.downcast_ref::<Error>(), Some(Error::DiagonalSingularity { .. })) {
                eprintln!("hint: equal beta values are the null case; use `hgm null`");
            }
            ExitCode::from(exit_code(&err))
        }
    }
}
