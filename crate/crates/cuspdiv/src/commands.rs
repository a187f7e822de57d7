//! Subcommand drivers. Each writes its primary table to `stdout` and, when
//! an output directory is configured, the full file set there.

use std::io::Write;
use std::path::{Path, PathBuf};

use cuspdiv_core::certificate::certificate_curve;
use cuspdiv_core::oracle::{sweep_report, sweep_row};
use cuspdiv_core::rhs::make_rhs;
use cuspdiv_core::DomainSpec;
use rayon::prelude::*;

use crate::config::{Command, Settings};
use crate::error::{io_err, CliError, CliResult};
use crate::formats::{
    analyze_row, curve_points, write_csv, write_csv_file, write_json_file, write_tsv_file, CertificateDoc, OracleDoc,
    OracleRow,
};
use crate::selftest::{self, SelftestOptions};

pub const THREADS_ENV: &str = "CUSPDIV_THREADS";

/// Pool sized by `CUSPDIV_THREADS` when set.
pub fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::config(format!("thread pool: {e}")))
}

fn out_dir(settings: &Settings) -> CliResult<Option<&Path>> {
    match &settings.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(io_err(dir))?;
            Ok(Some(dir.as_path()))
        }
        None => Ok(None),
    }
}

fn join(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

pub fn execute<W: Write>(settings: &Settings, stdout: &mut W) -> CliResult<()> {
    match settings.command {
        Command::Analyze => analyze(settings, stdout),
        Command::Certificate => certificate(settings, stdout),
        Command::Oracle => oracle(settings, stdout),
        Command::Selftest => run_selftest(settings, stdout),
    }
}

fn analyze<W: Write>(settings: &Settings, stdout: &mut W) -> CliResult<()> {
    let rows: Vec<_> = settings.alphas.iter().map(|&a| analyze_row(&settings.params, a)).collect();
    write_csv(&rows, &mut *stdout)?;
    if let Some(dir) = out_dir(settings)? {
        write_csv_file(&rows, &join(dir, "analyze.csv"))?;
    }
    Ok(())
}

fn certificate<W: Write>(settings: &Settings, stdout: &mut W) -> CliResult<()> {
    let rhs = make_rhs(&DomainSpec::new(settings.params), settings.alphas[0])?;
    let curve = certificate_curve(&rhs, settings.params.p(), &settings.eps_grid)?;
    let points = curve_points(&curve);
    write_csv(&points, &mut *stdout)?;
    if let Some(dir) = out_dir(settings)? {
        write_csv_file(&points, &join(dir, "certificate.csv"))?;
        write_tsv_file(&points, &join(dir, "certificate.tsv"))?;
        write_json_file(&CertificateDoc::from(&curve), &join(dir, "certificate.json"))?;
    }
    Ok(())
}

fn oracle<W: Write>(settings: &Settings, stdout: &mut W) -> CliResult<()> {
    let domain = DomainSpec::new(settings.params);
    let alpha = settings.alphas[0];
    let pool = thread_pool()?;
    // rows come back in eps order whatever the scheduling
    let rows = pool.install(|| {
        settings
            .eps_grid
            .par_iter()
            .map(|&eps| sweep_row(&domain, alpha, eps, &settings.h_rule, &settings.solver))
            .collect::<cuspdiv_core::Result<Vec<_>>>()
    })?;
    let report = sweep_report(alpha, rows);
    let table: Vec<OracleRow> = report.rows.iter().map(OracleRow::from).collect();
    write_csv(&table, &mut *stdout)?;
    if let Some(dir) = out_dir(settings)? {
        write_csv_file(&table, &join(dir, "oracle.csv"))?;
        write_json_file(&OracleDoc::new(&settings.params, &report), &join(dir, "oracle.json"))?;
    }
    Ok(())
}

fn run_selftest<W: Write>(settings: &Settings, stdout: &mut W) -> CliResult<()> {
    let report = selftest::run(&SelftestOptions {
        seed: settings.seed,
        mc_samples: settings.mc_samples,
        kp_scale: settings.kp_scale,
    });
    serde_json::to_writer_pretty(&mut *stdout, &report)?;
    writeln!(stdout).map_err(io_err("<stdout>"))?;
    if let Some(dir) = out_dir(settings)? {
        write_json_file(&report, &join(dir, "selftest.json"))?;
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::SelftestFailed {
            failed: report.failures(),
            total: report.checks.len(),
        })
    }
}
