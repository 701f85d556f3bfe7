use std::io::Write;
use std::path::Path;

use super::{HarnessError, RecordRow, RowKind};

/// Cross-seed mean and population standard deviation per time step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct AggregateCurve {
    pub t: Vec<u64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Trailing mean over `window` values; the first entries average over the
/// shorter prefix available.
pub fn rolling_mean(values: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(values.len());
    let mut sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        sum += v;
        if i >= window {
            sum -= values[i - window];
        }
        out.push(sum / (i + 1).min(window) as f64);
    }
    out
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregate one row kind across records.
///
/// Evaluation rows must share an identical time grid and are not smoothed.
/// Train rows are smoothed per record with `window`, then sampled on the
/// first record's grid by taking each record's latest value at or before
/// each time; grid points before some record has data are dropped.
pub fn aggregate(records: &[Vec<RecordRow>], kind: RowKind, window: usize) -> Result<AggregateCurve, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::Config("nothing to aggregate".into()));
    }
    let series: Vec<(Vec<u64>, Vec<f64>)> = records
        .iter()
        .map(|rows| {
            let (t, v): (Vec<u64>, Vec<f64>) =
                rows.iter().filter(|r| r.kind == kind).map(|r| (r.t, r.episodic_return)).unzip();
            match kind {
                RowKind::Train => {
                    let smoothed = rolling_mean(&v, window);
                    (t, smoothed)
                }
                RowKind::Eval => (t, v),
            }
        })
        .collect();

    let grid = series[0].0.clone();
    let mut curve = AggregateCurve::default();
    match kind {
        RowKind::Eval => {
            if let Some((i, _)) = series.iter().enumerate().find(|(_, (t, _))| *t != grid) {
                return Err(HarnessError::Misaligned(format!("record {i} differs from record 0")));
            }
            for (j, &t) in grid.iter().enumerate() {
                let column: Vec<f64> = series.iter().map(|(_, v)| v[j]).collect();
                let (m, s) = mean_std(&column);
                curve.t.push(t);
                curve.mean.push(m);
                curve.std.push(s);
            }
        }
        RowKind::Train => {
            for &t in &grid {
                let column: Option<Vec<f64>> = series
                    .iter()
                    .map(|(ts, vs)| {
                        let k = ts.partition_point(|&x| x <= t);
                        (k > 0).then(|| vs[k - 1])
                    })
                    .collect();
                if let Some(column) = column {
                    let (m, s) = mean_std(&column);
                    curve.t.push(t);
                    curve.mean.push(m);
                    curve.std.push(s);
                }
            }
        }
    }
    Ok(curve)
}

/// CSV with header `t,mean,std`.
pub fn write_csv(path: impl AsRef<Path>, curve: &AggregateCurve) -> Result<(), HarnessError> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "t,mean,std")?;
    for i in 0..curve.t.len() {
        writeln!(out, "{},{},{}", curve.t[i], curve.mean[i], curve.std[i])?;
    }
    out.flush()?;
    Ok(())
}
