//! CSV reports derived from trial history: convergence series and
//! two-parameter response surfaces.

use std::fs;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::paramspace::{ParamSpace, ParamValue};
use crate::session::{history_dir, median, TrialRecord};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("history is empty")]
    EmptyHistory,
    #[error("unknown parameter `{0}`")]
    UnknownParam(String),
    #[error("surface axes must differ, got `{0}` twice")]
    IdenticalAxes(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub iteration: u64,
    pub aggregate_s: Option<f64>,
    pub best_so_far_s: Option<f64>,
}

/// One row per trial with the running minimum of successful aggregates.
pub fn convergence_series(history: &[TrialRecord]) -> Result<Vec<ConvergenceRow>, ReportError> {
    if history.is_empty() {
        return Err(ReportError::EmptyHistory);
    }
    let mut best: Option<f64> = None;
    Ok(history
        .iter()
        .map(|r| {
            if let Some(a) = r.aggregate_s {
                best = Some(best.map_or(a, |b| b.min(a)));
            }
            ConvergenceRow {
                iteration: r.trial_id,
                aggregate_s: r.aggregate_s,
                best_so_far_s: best,
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCell {
    pub x: ParamValue,
    pub y: ParamValue,
    pub median_s: f64,
    pub n: usize,
}

/// Median aggregate per observed `(px, py)` pair over successful trials,
/// sorted by `px` then `py`.
pub fn surface_table(
    history: &[TrialRecord],
    space: &ParamSpace,
    px: &str,
    py: &str,
) -> Result<Vec<SurfaceCell>, ReportError> {
    if px == py {
        return Err(ReportError::IdenticalAxes(px.into()));
    }
    let sx = space.spec(px).ok_or_else(|| ReportError::UnknownParam(px.into()))?;
    let sy = space.spec(py).ok_or_else(|| ReportError::UnknownParam(py.into()))?;

    let mut obs: Vec<((f64, f64), &ParamValue, &ParamValue, f64)> = history
        .iter()
        .filter_map(|r| {
            let a = r.aggregate_s?;
            let (x, y) = (r.point.get(px)?, r.point.get(py)?);
            Some(((sx.sort_key(x), sy.sort_key(y)), x, y, a))
        })
        .collect();
    obs.sort_by(|a, b| a.0 .0.total_cmp(&b.0 .0).then(a.0 .1.total_cmp(&b.0 .1)));

    let mut cells = Vec::new();
    for group in obs.chunk_by(|a, b| a.1 == b.1 && a.2 == b.2) {
        let values: Vec<f64> = group.iter().map(|o| o.3).collect();
        cells.push(SurfaceCell {
            x: group[0].1.clone(),
            y: group[0].2.clone(),
            median_s: median(&values).expect("nonempty group"),
            n: values.len(),
        });
    }
    Ok(cells)
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv(path: &Path, header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), ReportError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let io = |e: csv::Error| std::io::Error::other(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    fs::create_dir_all(path.parent().expect("file in a directory"))?;
    fs::write(path, bytes)?;
    Ok(())
}

/// Writes `history/convergence.csv` and returns its path.
pub fn write_convergence(root: &Path, history: &[TrialRecord]) -> Result<PathBuf, ReportError> {
    let rows = convergence_series(history)?;
    let path = history_dir(root).join("convergence.csv");
    write_csv(
        &path,
        &["iteration", "aggregate_s", "best_so_far_s"].map(String::from),
        rows.iter()
            .map(|r| vec![r.iteration.to_string(), opt(r.aggregate_s), opt(r.best_so_far_s)]),
    )?;
    Ok(path)
}

/// Writes `history/surface_<px>_<py>.csv` and returns its path.
pub fn write_surface(
    root: &Path,
    history: &[TrialRecord],
    space: &ParamSpace,
    px: &str,
    py: &str,
) -> Result<PathBuf, ReportError> {
    let cells = surface_table(history, space, px, py)?;
    let path = history_dir(root).join(format!("surface_{px}_{py}.csv"));
    write_csv(
        &path,
        &[px, py, "median_s", "n"].map(String::from),
        cells
            .iter()
            .map(|c| vec![c.x.to_string(), c.y.to_string(), c.median_s.to_string(), c.n.to_string()]),
    )?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::executor::{TrialResult, TrialStatus};
    use crate::paramspace::{parse_param_file, TrialPoint};
    use chrono::Utc;

    fn rec(id: u64, x: i64, y: i64, agg: Option<f64>) -> TrialRecord {
        let p = TrialPoint::new().with("x", ParamValue::Int(x)).with("y", ParamValue::Int(y));
        let result = match agg {
            Some(a) => TrialResult::success(vec![a]),
            None => TrialResult::with_status(TrialStatus::Failed, vec![]),
        };
        TrialRecord::new(id, p, result, "grid", Utc::now())
    }

    fn aggs(v: &[Option<f64>]) -> Vec<TrialRecord> {
        v.iter().enumerate().map(|(i, a)| rec(i as u64 + 1, 1, 1, *a)).collect()
    }

    #[test]
    fn running_minimum() {
        let rows = convergence_series(&aggs(&[Some(175.0), Some(150.0), Some(160.0), Some(140.0)])).unwrap();
        let best: Vec<_> = rows.iter().map(|r| r.best_so_far_s.unwrap()).collect();
        assert_eq!(best, vec![175.0, 150.0, 150.0, 140.0]);
    }

    #[test]
    fn failed_rows() {
        let rows = convergence_series(&aggs(&[None, Some(90.0)])).unwrap();
        assert_eq!((rows[0].aggregate_s, rows[0].best_so_far_s), (None, None));
        assert_eq!(rows[1].best_so_far_s, Some(90.0));
        let one = convergence_series(&aggs(&[Some(3.0)])).unwrap();
        assert_eq!(one.len(), 1);
        assert!(matches!(convergence_series(&[]), Err(ReportError::EmptyHistory)));
    }

    fn space() -> ParamSpace {
        parse_param_file("x int min=1 max=10 step=1\ny int min=1 max=10 step=1\nz int min=1 max=3 step=1\n").unwrap()
    }

    #[test]
    fn surface_groups_and_sorts() {
        let h = vec![
            rec(1, 2, 1, Some(100.0)),
            rec(2, 1, 5, Some(50.0)),
            rec(3, 2, 1, Some(120.0)),
            rec(4, 2, 1, Some(110.0)),
            rec(5, 1, 5, None),
            rec(6, 10, 1, Some(7.0)),
        ];
        let cells = surface_table(&h, &space(), "x", "y").unwrap();
        assert_eq!(cells.len(), 3);
        assert_eq!((cells[0].x.clone(), cells[0].n), (ParamValue::Int(1), 1));
        assert_eq!((cells[1].median_s, cells[1].n), (110.0, 3));
        assert_eq!(cells[2].x, ParamValue::Int(10));
    }

    #[test]
    fn surface_validation() {
        assert!(matches!(surface_table(&[], &space(), "x", "x"), Err(ReportError::IdenticalAxes(_))));
        assert!(matches!(surface_table(&[], &space(), "x", "q"), Err(ReportError::UnknownParam(_))));
    }

    #[test]
    fn files_are_reproducible() {
        let d = tempfile::tempdir().unwrap();
        let h = vec![rec(1, 2, 1, Some(100.0)), rec(2, 1, 5, None)];
        let p = write_convergence(d.path(), &h).unwrap();
        let first = fs::read(&p).unwrap();
        assert_eq!(String::from_utf8(first.clone()).unwrap(), "iteration,aggregate_s,best_so_far_s\n1,100,100\n2,,100\n");
        write_convergence(d.path(), &h).unwrap();
        assert_eq!(fs::read(&p).unwrap(), first);
        let s = write_surface(d.path(), &h, &space(), "x", "y").unwrap();
        assert!(s.ends_with("surface_x_y.csv"));
        assert_eq!(fs::read_to_string(s).unwrap(), "x,y,median_s,n\n2,1,100,1\n");
    }
}
