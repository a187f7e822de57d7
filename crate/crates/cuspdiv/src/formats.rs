//! Output schemas and writers. Floats are written in shortest round-trip
//! form, so identical runs give byte-identical files.

use std::io::Write;
use std::path::Path;

use cuspdiv_core::analytic::{report, Divergence, Family, FamilyParams};
use cuspdiv_core::certificate::CertificateCurve;
use cuspdiv_core::oracle::{SweepReport, SweepRow};
use cuspdiv_core::{CurveModel, RhsSpec, Verdict};
use serde::Serialize;

use crate::error::{io_err, CliResult};

/// JSON description of a domain family.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DomainDoc {
    pub family: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<f64>,
    #[serde(rename = "N")]
    pub n: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub p: f64,
}

impl From<&FamilyParams> for DomainDoc {
    fn from(params: &FamilyParams) -> Self {
        let (family, m, r) = match params.family() {
            Family::PolyCusp2D { m } => ("poly2d", Some(m), None),
            Family::PolyCuspND { m, .. } => ("polyNd", Some(m), None),
            Family::LogCusp2D { r } => ("log2d", None, Some(r)),
        };
        DomainDoc {
            family,
            m,
            n: params.dim(),
            r,
            p: params.p(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhsDoc {
    pub alpha: f64,
    pub coef: f64,
    pub cap_constant: f64,
    pub cut: f64,
}

impl From<&RhsSpec> for RhsDoc {
    fn from(rhs: &RhsSpec) -> Self {
        RhsDoc {
            alpha: rhs.alpha(),
            coef: rhs.coef(),
            cap_constant: rhs.cap_constant(),
            cut: rhs.domain().cut(),
        }
    }
}

/// One line of `analyze` output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyzeRow {
    pub family: &'static str,
    pub m: Option<f64>,
    #[serde(rename = "N")]
    pub n: u32,
    pub r: Option<f64>,
    pub p: f64,
    pub alpha: f64,
    pub t1: f64,
    pub t2: f64,
    pub classification: &'static str,
    /// Power-law rate of `LB(eps)`, when the growth is a pure power.
    pub beta: Option<f64>,
    /// `power`, `log`, `log-power`, `log-log`, or `none`.
    pub growth: &'static str,
    pub growth_exponent: Option<f64>,
}

pub fn analyze_row(params: &FamilyParams, alpha: f64) -> AnalyzeRow {
    let doc = DomainDoc::from(params);
    let rep = report(params, alpha);
    let (beta, growth, growth_exponent) = match rep.divergence {
        Some(Divergence::Power { beta }) => (Some(beta), "power", Some(beta)),
        Some(Divergence::Logarithmic) => (None, "log", Some(1.0)),
        Some(Divergence::LogPower { exponent }) => (None, "log-power", Some(exponent)),
        Some(Divergence::DoubleLogarithmic) => (None, "log-log", Some(1.0)),
        Some(Divergence::Convergent) | None => (None, "none", None),
    };
    AnalyzeRow {
        family: doc.family,
        m: doc.m,
        n: doc.n,
        r: doc.r,
        p: doc.p,
        alpha,
        t1: rep.thresholds.t1,
        t2: rep.thresholds.t2,
        classification: rep.classification.as_str(),
        beta,
        growth,
        growth_exponent,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurvePoint {
    pub epsilon: f64,
    pub lower_bound: f64,
}

pub fn curve_points(curve: &CertificateCurve) -> Vec<CurvePoint> {
    curve
        .eps_grid
        .iter()
        .zip(&curve.lb_values)
        .map(|(&epsilon, &lower_bound)| CurvePoint { epsilon, lower_bound })
        .collect()
}

/// JSON sidecar of a certificate run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertificateDoc {
    pub domain: DomainDoc,
    pub rhs: RhsDoc,
    pub p: f64,
    pub classification: &'static str,
    pub verdict: &'static str,
    /// Limit of `LB(eps)` for a convergent verdict.
    pub limit: Option<f64>,
    pub fitted_rate: Option<f64>,
    pub fit_rms_residual: Option<f64>,
    pub model: &'static str,
    pub model_parameter: Option<f64>,
    pub power_residual: f64,
    pub log_residual: f64,
    pub last_relative_change: f64,
    pub points: Vec<CurvePoint>,
}

impl From<&CertificateCurve> for CertificateDoc {
    fn from(c: &CertificateCurve) -> Self {
        let params = c.rhs.domain().params();
        let (verdict, limit) = match c.verdict {
            Verdict::Diverges(_) => ("diverges", None),
            Verdict::Converges { limit } => ("converges", Some(limit)),
        };
        let (model, model_parameter) = match c.model {
            CurveModel::Power { exponent } => ("power", Some(exponent)),
            CurveModel::Logarithmic { slope } => ("logarithmic", Some(slope)),
            CurveModel::Flat => ("flat", None),
        };
        CertificateDoc {
            domain: DomainDoc::from(params),
            rhs: RhsDoc::from(&c.rhs),
            p: c.p,
            classification: report(params, c.rhs.alpha()).classification.as_str(),
            verdict,
            limit,
            fitted_rate: c.fitted_rate.map(|f| f.rate),
            fit_rms_residual: c.fitted_rate.map(|f| f.rms_residual),
            model,
            model_parameter,
            power_residual: c.power_residual,
            log_residual: c.log_residual,
            last_relative_change: c.last_relative_change,
            points: curve_points(c),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub eps: f64,
    pub h: f64,
    pub cells: usize,
    pub gradient_norm: f64,
    pub lb_sqrt: f64,
    pub ratio: f64,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub div_residual: f64,
}

impl From<&SweepRow> for OracleRow {
    fn from(r: &SweepRow) -> Self {
        OracleRow {
            eps: r.eps,
            h: r.h,
            cells: r.cells,
            gradient_norm: r.gradient_norm,
            lb_sqrt: r.lb_sqrt,
            ratio: r.ratio,
            outer_iterations: r.outer_iterations,
            inner_iterations: r.inner_iterations,
            div_residual: r.div_residual,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleDoc {
    pub domain: DomainDoc,
    pub alpha: f64,
    pub classification: &'static str,
    /// Slope of `ln gradient_norm` against `ln eps`.
    pub growth_slope: Option<f64>,
    pub growth_rms_residual: Option<f64>,
    pub rows: Vec<OracleRow>,
}

impl OracleDoc {
    pub fn new(params: &FamilyParams, rep: &SweepReport) -> Self {
        OracleDoc {
            domain: DomainDoc::from(params),
            alpha: rep.alpha,
            classification: report(params, rep.alpha).classification.as_str(),
            growth_slope: rep.growth_fit.map(|f| f.slope),
            growth_rms_residual: rep.growth_fit.map(|f| f.rms_residual),
            rows: rep.rows.iter().map(OracleRow::from).collect(),
        }
    }
}

fn write_delimited<T: Serialize, W: Write>(rows: &[T], out: W, delimiter: u8) -> CliResult<()> {
    let mut w = csv::WriterBuilder::new().delimiter(delimiter).from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_csv<T: Serialize, W: Write>(rows: &[T], out: W) -> CliResult<()> {
    write_delimited(rows, out, b',')
}

pub fn write_tsv<T: Serialize, W: Write>(rows: &[T], out: W) -> CliResult<()> {
    write_delimited(rows, out, b'\t')
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> CliResult<String> {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

fn create(path: &Path) -> CliResult<std::io::BufWriter<std::fs::File>> {
    Ok(std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err(path))?))
}

pub fn write_csv_file<T: Serialize>(rows: &[T], path: &Path) -> CliResult<()> {
    write_csv(rows, create(path)?)
}

pub fn write_tsv_file<T: Serialize>(rows: &[T], path: &Path) -> CliResult<()> {
    write_tsv(rows, create(path)?)
}

pub fn write_json_file<T: Serialize>(doc: &T, path: &Path) -> CliResult<()> {
    let mut f = create(path)?;
    serde_json::to_writer_pretty(&mut f, doc)?;
    f.write_all(b"\n").map_err(io_err(path))?;
    f.flush().map_err(io_err(path))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analyze_rows() {
        let row = analyze_row(&FamilyParams::poly2d(2.0, 2.0).unwrap(), -1.25);
        assert_eq!((row.t1, row.t2, row.beta), (-1.5, -0.5, Some(1.5)));
        assert_eq!(row.classification, "CertifiedNonexistence");
        let text = csv_string(&[row]).unwrap();
        assert_eq!(
            text,
            "family,m,N,r,p,alpha,t1,t2,classification,beta,growth,growth_exponent\n\
             poly2d,2.0,2,,2.0,-1.25,-1.5,-0.5,CertifiedNonexistence,1.5,power,1.5\n"
        );
        let log = analyze_row(&FamilyParams::log2d(1.5, 2.0).unwrap(), 0.5);
        assert_eq!(log.family, "log2d");
        assert_eq!(log.m, None);
    }
}
