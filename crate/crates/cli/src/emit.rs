//! CSV and JSON emission. Reals use the shortest decimal that round-trips,
//! formatted by serde_json for both formats; non-finite or missing values are an
//! empty CSV field and JSON `null`.

use std::io::{self, Write};

use radshoot_core::shooting::{DomainInfo, SampleStatus, TCurve};
use radshoot_core::solver::{SolutionRecord, SweepTable};
use radshoot_core::spectrum::EigenResult;
use serde::Serialize;

use crate::args::Format;

pub const CURVE_HEADER: [&str; 5] = ["lambda", "T", "Tprime", "Tsecond", "status"];
pub const SOLUTIONS_HEADER: [&str; 8] = ["lambda", "class", "u1", "du1", "bc_res0", "bc_res1", "ode_res", "zeros"];
pub const SWEEP_HEADER: [&str; 8] = [
    "param", "count", "n_neg", "n_sign", "n_pos", "lambda0", "a_min", "lambda1",
];
pub const EIGEN_HEADER: [&str; 5] = ["lambda1", "phi1", "dphi1", "interior_zero_count", "boundary_residual"];

pub fn real(v: f64) -> String {
    if v.is_finite() {
        serde_json::to_string(&v).expect("finite reals always serialize")
    } else {
        String::new()
    }
}

fn opt_real(v: Option<f64>) -> String {
    v.map(real).unwrap_or_default()
}

fn opt_count(v: Option<usize>) -> String {
    v.map(|c| c.to_string()).unwrap_or_default()
}

fn csv_error(e: csv::Error) -> io::Error {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => e,
        other => io::Error::other(format!("{other:?}")),
    }
}

fn write_csv<W: Write>(out: W, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header).map_err(csv_error)?;
    for row in rows {
        w.write_record(&row).map_err(csv_error)?;
    }
    w.flush()
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(mut out: W, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")
}

pub fn status_str(s: SampleStatus) -> &'static str {
    match s {
        SampleStatus::Defined => "defined",
        SampleStatus::AtPole => "at_pole",
        SampleStatus::Escaped => "escaped",
        SampleStatus::Failed => "failed",
    }
}

#[derive(Serialize)]
struct CurveRow {
    lambda: f64,
    #[serde(rename = "T")]
    t: Option<f64>,
    #[serde(rename = "Tprime")]
    t_prime: Option<f64>,
    #[serde(rename = "Tsecond")]
    t_second: Option<f64>,
    status: &'static str,
}

#[derive(Serialize)]
struct AMinPoint {
    lambda_min: f64,
    a_min: f64,
}

#[derive(Serialize)]
struct CurveDoc<'a> {
    domain: &'a DomainInfo,
    a_min: Option<AMinPoint>,
    samples: Vec<CurveRow>,
}

pub fn emit_curve<W: Write>(curve: &TCurve, format: Format, out: W) -> io::Result<()> {
    let rows = curve.samples.iter().map(|s| CurveRow {
        lambda: s.lambda,
        t: s.t,
        t_prime: s.t_prime,
        t_second: s.t_second,
        status: status_str(s.status),
    });
    match format {
        Format::Csv => write_csv(
            out,
            &CURVE_HEADER,
            rows.map(|r| {
                vec![
                    real(r.lambda),
                    opt_real(r.t),
                    opt_real(r.t_prime),
                    opt_real(r.t_second),
                    r.status.to_string(),
                ]
            }),
        ),
        Format::Json => write_json(
            out,
            &CurveDoc {
                domain: &curve.domain,
                a_min: curve
                    .a_min_point
                    .map(|(lambda_min, a_min)| AMinPoint { lambda_min, a_min }),
                samples: rows.collect(),
            },
        ),
    }
}

pub fn emit_solutions<W: Write>(records: &[SolutionRecord], format: Format, out: W) -> io::Result<()> {
    match format {
        Format::Csv => write_csv(
            out,
            &SOLUTIONS_HEADER,
            records.iter().map(|r| {
                vec![
                    real(r.lambda),
                    r.sign_class.as_str().to_string(),
                    real(r.u1),
                    real(r.du1),
                    real(r.bc_residuals[0]),
                    real(r.bc_residuals[1]),
                    real(r.ode_residual),
                    r.zero_locations.iter().map(|&z| real(z)).collect::<Vec<_>>().join(";"),
                ]
            }),
        ),
        Format::Json => write_json(out, records),
    }
}

pub fn emit_sweep<W: Write>(table: &SweepTable, format: Format, out: W) -> io::Result<()> {
    match format {
        Format::Csv => write_csv(
            out,
            &SWEEP_HEADER,
            table.rows.iter().map(|r| {
                vec![
                    real(r.param),
                    opt_count(r.count),
                    opt_count(r.n_neg),
                    opt_count(r.n_sign),
                    opt_count(r.n_pos),
                    opt_real(r.lambda0),
                    opt_real(r.a_min),
                    opt_real(r.lambda1),
                ]
            }),
        ),
        Format::Json => write_json(out, table),
    }
}

pub fn emit_eigen<W: Write>(eigen: &EigenResult, format: Format, out: W) -> io::Result<()> {
    match format {
        Format::Csv => write_csv(
            out,
            &EIGEN_HEADER,
            [vec![
                real(eigen.lambda1),
                real(eigen.phi1),
                real(eigen.dphi1),
                eigen.interior_zero_count.to_string(),
                real(eigen.boundary_residual),
            ]],
        ),
        Format::Json => write_json(out, eigen),
    }
}
