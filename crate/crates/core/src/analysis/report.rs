use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::metrics::ErrorReport;
use super::probe::SelectorProbeResult;
use super::rates::RateFit;
use super::rollout::Trajectory;
use crate::Result;

pub const ERRORS_HEADER: &str = "problem,method,t,rel_l2,mse";
pub const RATES_HEADER: &str = "iteration,E_n";
pub const PROBES_HEADER: &str = "problem,kappa_hat,n_samples";

pub fn write_errors_csv<W: Write>(reports: &[ErrorReport], mut w: W) -> Result<()> {
    writeln!(w, "{ERRORS_HEADER}")?;
    for r in reports {
        for row in &r.rows {
            writeln!(w, "{},{},{:e},{:e},{:e}", r.problem, r.method, row.t, row.rel_l2, row.mse)?;
        }
    }
    Ok(())
}

pub fn write_rates_csv<W: Write>(fits: &[RateFit], mut w: W) -> Result<()> {
    writeln!(w, "{RATES_HEADER}")?;
    for f in fits {
        for (n, e) in f.e_n.iter().enumerate() {
            writeln!(w, "{n},{e:e}")?;
        }
    }
    Ok(())
}

pub fn write_probes_csv<W: Write>(probes: &[SelectorProbeResult], mut w: W) -> Result<()> {
    writeln!(w, "{PROBES_HEADER}")?;
    for p in probes {
        writeln!(w, "{},{:e},{}", p.problem, p.kappa_hat, p.n_samples)?;
    }
    Ok(())
}

/// Columns `path_id,step,t,x0,..,x{d-1}`.
pub fn write_trajectories_csv<W: Write>(paths: &[Trajectory], mut w: W) -> Result<()> {
    let d = paths.first().map_or(0, |p| p.dim);
    let xs: Vec<String> = (0..d).map(|i| format!("x{i}")).collect();
    writeln!(w, "path_id,step,t{}{}", if d > 0 { "," } else { "" }, xs.join(","))?;
    for p in paths {
        for (k, t) in p.t.iter().enumerate() {
            let x: Vec<String> = p.state(k).iter().map(|v| format!("{v:e}")).collect();
            writeln!(w, "{},{k},{t:e},{}", p.path_id, x.join(","))?;
        }
    }
    Ok(())
}

/// Writes `errors.csv`, `rates.csv`, `probes.csv` and `summary.txt` into `dir`.
pub fn emit_report(dir: &Path, errors: &[ErrorReport], rates: &[RateFit], probes: &[SelectorProbeResult]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let open = |name: &str| -> Result<(PathBuf, BufWriter<File>)> {
        let p = dir.join(name);
        Ok((p.clone(), BufWriter::new(File::create(p)?)))
    };
    let mut written = Vec::new();
    let (p, mut w) = open("errors.csv")?;
    write_errors_csv(errors, &mut w)?;
    w.flush()?;
    written.push(p);
    let (p, mut w) = open("rates.csv")?;
    write_rates_csv(rates, &mut w)?;
    w.flush()?;
    written.push(p);
    let (p, mut w) = open("probes.csv")?;
    write_probes_csv(probes, &mut w)?;
    w.flush()?;
    written.push(p);
    let (p, mut w) = open("summary.txt")?;
    for r in errors {
        let worst = r.rows.iter().map(|x| x.rel_l2).fold(0.0, f64::max);
        writeln!(w, "errors {} {} on {}: {} slices, max rel_l2 {worst:e}", r.problem, r.method, r.grid, r.rows.len())?;
    }
    for f in rates {
        writeln!(w, "rate: {} iterations, slope {:e}, rho {:e}, r2 {:e}", f.e_n.len(), f.slope, f.rho(), f.r_squared)?;
    }
    for pr in probes {
        writeln!(w, "probe {}: kappa_hat {:e} over {} samples", pr.problem, pr.kappa_hat, pr.n_samples)?;
    }
    w.flush()?;
    written.push(p);
    Ok(written)
}
