//! CSV readers and writers for pools and results.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::data::LabeledExample;
use crate::engine::{BoundaryResult, ExperimentResult, ReplayPool, ReplayRow, SweepResult};
use crate::error::{Error, Result};

fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        v.to_string()
    }
}

fn feature_headers(prefix: &str, dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("{prefix}{i}")).collect()
}

/// `experiment,mechanism,strategy,correction,run,step,auc,train_size`
pub fn write_curves<W: Write>(out: W, results: &[&ExperimentResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "experiment", "mechanism", "strategy", "correction", "run", "step", "auc", "train_size",
    ])?;
    for r in results {
        let m = &r.meta;
        for c in &r.curves {
            for (&(step, auc), &(_, size)) in c.auc_by_step.iter().zip(&c.training_size_by_step) {
                w.write_record([
                    m.label.as_str(),
                    &m.mechanism,
                    &m.strategy,
                    &m.correction,
                    &c.run_id.to_string(),
                    &step.to_string(),
                    &num(auc),
                    &size.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `experiment,step,mean_auc,lo95,hi95,runs`
pub fn write_aggregate<W: Write>(out: W, results: &[&ExperimentResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["experiment", "step", "mean_auc", "lo95", "hi95", "runs"])?;
    for r in results {
        for p in r.aggregate.iter().flatten() {
            w.write_record([
                r.meta.label.clone(),
                p.step.to_string(),
                num(p.mean),
                num(p.lo95),
                num(p.hi95),
                p.runs.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `run,step,pool_index,x0..,responded,informativeness,response_q`; an
/// empty `response_q` means no response estimate was used.
pub fn write_query_log<W: Write>(out: W, result: &ExperimentResult) -> Result<()> {
    let dim = result
        .query_log
        .iter()
        .flat_map(|q| q.records.first())
        .map(|r| r.features.len())
        .next()
        .unwrap_or(2);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["run".to_string(), "step".into(), "pool_index".into()];
    header.extend(feature_headers("x", dim));
    header.extend(["responded".into(), "informativeness".into(), "response_q".into()]);
    w.write_record(&header)?;
    for log in &result.query_log {
        for q in &log.records {
            let mut row = vec![log.run.to_string(), q.step.to_string(), q.pool_index.to_string()];
            row.extend(q.features.iter().map(|v| num(*v)));
            row.push((q.responded as u8).to_string());
            row.push(num(q.informativeness));
            row.push(num(q.response_quantile));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `x0..,label`
pub fn write_examples<W: Write>(out: W, examples: &[LabeledExample]) -> Result<()> {
    let dim = examples.first().map_or(0, |e| e.features.len());
    let mut w = csv::Writer::from_writer(out);
    let mut header = feature_headers("x", dim);
    header.push("label".into());
    w.write_record(&header)?;
    for e in examples {
        let mut row: Vec<String> = e.features.iter().map(|v| num(*v)).collect();
        row.push(e.label.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `fraction,threshold,w0..,bias,auc,single_class`
pub fn write_boundary<W: Write>(out: W, results: &[BoundaryResult]) -> Result<()> {
    let dim = results
        .iter()
        .find_map(|r| r.weights.as_ref().map(|w| w.len() - 1))
        .unwrap_or(2);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["fraction".to_string(), "threshold".into()];
    header.extend(feature_headers("w", dim));
    header.extend(["bias".into(), "auc".into(), "single_class".into()]);
    w.write_record(&header)?;
    for r in results {
        let mut row = vec![num(r.fraction), num(r.threshold)];
        match &r.weights {
            Some(ws) => row.extend(ws.iter().map(|v| num(*v))),
            None => row.extend(std::iter::repeat_n(String::new(), dim + 1)),
        }
        row.push(r.auc.map(num).unwrap_or_default());
        row.push(r.single_class.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `p_low,p_high,region_fraction,marginal_rate,step,mcar_mean,mar_mean,gap,gap_lo95,gap_hi95`
/// at the final step of each grid point.
pub fn write_sweep_summary<W: Write>(out: W, sweep: &SweepResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "p_low", "p_high", "region_fraction", "marginal_rate", "step", "mcar_mean", "mar_mean", "gap",
        "gap_lo95", "gap_hi95",
    ])?;
    for p in &sweep.points {
        let Some(last) = p.mcar.final_point() else { continue };
        let mar = p.mar.at_step(last.step).map_or(f64::NAN, |a| a.mean);
        let (gap, lo, hi) = p.gap(last.step).unwrap_or((f64::NAN, f64::NAN, f64::NAN));
        w.write_record([
            num(p.p_low),
            num(p.p_high),
            num(p.region_fraction),
            num(p.marginal_rate()),
            last.step.to_string(),
            num(last.mean),
            num(mar),
            num(gap),
            num(lo),
            num(hi),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `x0..,label,response`; the label is blank for rows without a response.
pub fn write_replay_pool<W: Write>(out: W, pool: &ReplayPool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = feature_headers("x", pool.dim());
    header.extend(["label".into(), "response".into()]);
    w.write_record(&header)?;
    for r in pool.rows() {
        let mut row: Vec<String> = r.features.iter().map(|v| num(*v)).collect();
        row.push(r.label.map(|l| l.to_string()).unwrap_or_default());
        row.push(r.response.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a replay pool. Row numbers in errors count data rows from 1.
pub fn read_replay_pool<R: Read>(input: R) -> Result<ReplayPool> {
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let header = reader.headers()?.clone();
    let cols: Vec<&str> = header.iter().collect();
    let d = cols.len().saturating_sub(2);
    let expected: Vec<String> = feature_headers("x", d).into_iter().chain(["label".into(), "response".into()]).collect();
    if d == 0 || cols != expected {
        return Err(Error::Ingestion {
            row: 0,
            message: format!("header must be `{}`", expected.join(",")),
        });
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let fail = |message: String| Error::Ingestion { row, message };
        let record = record.map_err(|e| fail(e.to_string()))?;
        let features = (0..d)
            .map(|j| {
                record[j]
                    .parse::<f64>()
                    .map_err(|_| fail(format!("x{j} = `{}` is not a number", &record[j])))
            })
            .collect::<Result<Vec<_>>>()?;
        let response = match &record[d + 1] {
            "0" => 0,
            "1" => 1,
            other => return Err(fail(format!("response `{other}` is not 0 or 1"))),
        };
        let label = match &record[d] {
            "" => None,
            "0" => Some(0),
            "1" => Some(1),
            other => return Err(fail(format!("label `{other}` is not 0 or 1"))),
        };
        rows.push(ReplayRow { features, label, response });
    }
    ReplayPool::new(rows)
}

pub fn load_replay_pool(path: &Path) -> Result<ReplayPool> {
    let file = File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    read_replay_pool(file)
}

/// Creates `path` (and its parent directories) and runs `write` on it.
pub fn write_file<F>(path: &Path, write: F) -> Result<()>
where
    F: FnOnce(&mut std::io::BufWriter<File>) -> Result<()>,
{
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))?;
    }
    let file = File::create(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let mut out = std::io::BufWriter::new(file);
    write(&mut out)?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::synthetic_replay_pool;
    use crate::dgp::DgpId;

    #[test]
    fn replay_pool_round_trip() {
        let pool = synthetic_replay_pool(DgpId::Synthetic2, 300, 0.01, 0.3, 1).unwrap();
        let mut buf = Vec::new();
        write_replay_pool(&mut buf, &pool).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x0,x1,label,response\n"));
        assert_eq!(read_replay_pool(buf.as_slice()).unwrap(), pool);
    }

    #[test]
    fn malformed_rows_carry_row_numbers() {
        let cases = [
            ("x0,x1,label,response\n1,2,1,1\n3,oops,0,1\n", 2),
            ("x0,x1,label,response\n1,2,,1\n", 1),
            ("x0,x1,label,response\n1,2,1,1\n1,2,0,1\n1,2,,2\n", 3),
            ("x0,x1,label,response\n1,2,1\n", 1),
            ("a,b,label,response\n1,2,1,1\n", 0),
        ];
        for (text, row) in cases {
            match read_replay_pool(text.as_bytes()) {
                Err(Error::Ingestion { row: r, .. }) => assert_eq!(r, row, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn missing_label_allowed_without_response() {
        let pool = read_replay_pool("x0,label,response\n0.5,,0\n1.5,1,1\n".as_bytes()).unwrap();
        assert_eq!(pool.rows()[0].label, None);
        assert_eq!(pool.dim(), 1);
    }

    #[test]
    fn examples_writer_header() {
        let ex = vec![LabeledExample { features: vec![0.5, -1.0], label: 1 }];
        let mut buf = Vec::new();
        write_examples(&mut buf, &ex).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "x0,x1,label\n0.5,-1,1\n");
    }
}
