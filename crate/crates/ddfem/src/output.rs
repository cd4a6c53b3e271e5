//! CSV output. Failed levels are written as rows of `NaN`.

use std::io::Write;
use std::path::Path;

use ddfem_core::postprocess::{FieldSlopes, Slope};

use crate::drivers::{CookRow, StretchRow, Study};

pub const STUDY_HEADER: [&str; 7] = ["level", "h", "err_u", "err_K", "err_P_hdiv", "err_p", "err_u_corr"];
pub const SLOPES_HEADER: [&str; 3] = ["field", "fitted", "last"];
pub const COOK_HEADER: [&str; 5] = ["n", "f", "ux_A", "uy_A", "newton_iters_total"];
pub const STRETCH_HEADER: [&str; 12] = [
    "mesh",
    "u",
    "norm_u",
    "norm_K",
    "norm_P",
    "norm_p",
    "J_min",
    "J_q1",
    "J_median",
    "J_q3",
    "J_max",
    "J_neg_count",
];

fn num(v: f64) -> String {
    format!("{v:?}")
}

fn opt(v: Option<f64>) -> String {
    num(v.unwrap_or(f64::NAN))
}

pub fn write_study<W: Write>(out: W, study: &Study) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STUDY_HEADER)?;
    for row in &study.rows {
        let e = row.errors;
        w.write_record([
            row.level.to_string(),
            num(row.h),
            opt(e.map(|e| e.u)),
            opt(e.map(|e| e.k)),
            opt(e.map(|e| e.stress_hdiv)),
            opt(e.map(|e| e.p)),
            opt(e.and_then(|e| e.u_corr)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn slope(s: Slope) -> String {
    match s {
        Slope::Rate(r) => num(r),
        Slope::Exact => "exact".into(),
    }
}

/// Least-squares and last-interval slopes per field.
pub fn write_slopes<W: Write>(out: W, study: &Study) -> csv::Result<()> {
    let r = &study.report;
    let fields: [(&str, Option<FieldSlopes>); 5] = [
        ("u", r.u),
        ("K", r.k),
        ("P_hdiv", r.stress_hdiv),
        ("p", r.p),
        ("u_corr", r.u_corr),
    ];
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SLOPES_HEADER)?;
    for (name, s) in fields {
        let (fitted, last) = s.map_or((num(f64::NAN), num(f64::NAN)), |s| (slope(s.fitted), slope(s.last)));
        w.write_record([name.to_string(), fitted, last])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_cook<W: Write>(out: W, rows: &[CookRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(COOK_HEADER)?;
    for row in rows {
        w.write_record([
            row.n.to_string(),
            num(row.f),
            opt(row.tip.map(|t| t[0])),
            opt(row.tip.map(|t| t[1])),
            row.iterations.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_stretch<W: Write>(out: W, rows: &[StretchRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STRETCH_HEADER)?;
    for row in rows {
        let norm = |i: usize| opt(row.norms.map(|n| n[i]));
        let stat = |f: fn(&ddfem_core::postprocess::JacobianStats) -> f64| opt(row.stats.as_ref().map(f));
        w.write_record([
            row.mesh.clone(),
            num(row.u),
            norm(0),
            norm(1),
            norm(2),
            norm(3),
            stat(|s| s.min),
            stat(|s| s.q1),
            stat(|s| s.median),
            stat(|s| s.q3),
            stat(|s| s.max),
            row.stats.map_or_else(|| num(f64::NAN), |s| s.negative.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes through `f` into `path`, creating parent directories.
pub fn write_file(path: &Path, f: impl FnOnce(std::fs::File) -> csv::Result<()>) -> Result<(), csv::Error> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    f(std::fs::File::create(path)?)
}
