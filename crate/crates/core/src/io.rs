//! Plain-text formats: CSV tables for value tables, densities, partitions and
//! sweeps, and the JSON payoff report. Numbers are written with 12
//! significant digits so reruns are byte-identical.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::densities::{GridDensity1D, Shape};
use crate::error::{Error, Result};
use crate::grid;
use crate::persuasion::{PartitionMeasures, Policy, ReceiverPartition, ValueTable};
use crate::statics::SweepRecord;

/// Round to 12 significant digits and print the shortest decimal that reads
/// back to the rounded value.
pub fn fmt12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    // avoid "-0"
    if rounded == 0.0 {
        return "0".into();
    }
    rounded.to_string()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt12).unwrap_or_default()
}

fn write_rows<W: Write>(w: W, header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(header)?;
    for r in rows {
        out.write_record(&r)?;
    }
    out.flush().map_err(|e| Error::Parse(format!("writing csv: {e}")))?;
    Ok(())
}

fn read_rows<R: Read, T: for<'de> Deserialize<'de>>(r: R, header: &[&str]) -> Result<Vec<T>> {
    let mut rd = csv::Reader::from_reader(r);
    let found: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
    if found != header {
        return Err(Error::Parse(format!("expected csv header {header:?}, found {found:?}")));
    }
    rd.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Check that a column is the uniform grid on [0, 1] of its length.
fn check_uniform(xs: &[f64], name: &str) -> Result<()> {
    let nodes = grid::uniform_nodes(xs.len().max(2));
    if xs.len() < 2 || xs.iter().zip(&nodes).any(|(a, b)| (a - b).abs() > 1e-9) {
        return Err(Error::Parse(format!("column {name} is not a uniform grid on [0, 1]")));
    }
    Ok(())
}

/// `mu,v,h`
pub fn write_value_table_csv<W: Write>(vt: &ValueTable, w: W) -> Result<()> {
    let rows = (0..vt.len()).map(|i| vec![fmt12(vt.mu()[i]), fmt12(vt.v()[i]), fmt12(vt.h()[i])]);
    write_rows(w, &["mu", "v", "h"], rows)
}

pub fn read_value_table_csv<R: Read>(r: R) -> Result<ValueTable> {
    let rows: Vec<(f64, f64, f64)> = read_rows(r, &["mu", "v", "h"])?;
    check_uniform(&rows.iter().map(|r| r.0).collect::<Vec<_>>(), "mu")?;
    ValueTable::from_parts(rows.iter().map(|r| r.1).collect(), rows.iter().map(|r| r.2).collect())
}

/// `x,value`
pub fn write_density_csv<W: Write>(d: &GridDensity1D, w: W) -> Result<()> {
    let rows = d.nodes().into_iter().zip(d.values()).map(|(x, v)| vec![fmt12(x), fmt12(*v)]);
    write_rows(w, &["x", "value"], rows)
}

pub fn read_density_csv<R: Read>(r: R) -> Result<GridDensity1D> {
    let rows: Vec<(f64, f64)> = read_rows(r, &["x", "value"])?;
    check_uniform(&rows.iter().map(|r| r.0).collect::<Vec<_>>(), "x")?;
    GridDensity1D::new(rows.iter().map(|r| r.1).collect())
}

/// Threshold table of a partition.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionTable {
    pub c: Vec<f64>,
    pub p_lo: Vec<f64>,
    pub p_hi: Vec<f64>,
}

impl From<&ReceiverPartition> for PartitionTable {
    fn from(p: &ReceiverPartition) -> Self {
        Self { c: p.c().to_vec(), p_lo: p.p_lo().to_vec(), p_hi: p.p_hi().to_vec() }
    }
}

/// `c,p_lo,p_hi`
pub fn write_partition_csv<W: Write>(p: &PartitionTable, w: W) -> Result<()> {
    let rows = (0..p.c.len()).map(|i| vec![fmt12(p.c[i]), fmt12(p.p_lo[i]), fmt12(p.p_hi[i])]);
    write_rows(w, &["c", "p_lo", "p_hi"], rows)
}

pub fn read_partition_csv<R: Read>(r: R) -> Result<PartitionTable> {
    let rows: Vec<(f64, f64, f64)> = read_rows(r, &["c", "p_lo", "p_hi"])?;
    Ok(PartitionTable {
        c: rows.iter().map(|r| r.0).collect(),
        p_lo: rows.iter().map(|r| r.1).collect(),
        p_hi: rows.iter().map(|r| r.2).collect(),
    })
}

/// `param,mu_hat,sigma0,sigma1,value,shape`; an absent `mu_hat` is an empty field.
pub fn write_sweep_csv<W: Write>(records: &[SweepRecord], w: W) -> Result<()> {
    let rows = records.iter().map(|r| {
        vec![
            fmt12(r.param),
            fmt_opt(r.mu_hat),
            fmt12(r.sigma0),
            fmt12(r.sigma1),
            fmt12(r.value),
            r.shape.as_str().to_string(),
        ]
    });
    write_rows(w, &["param", "mu_hat", "sigma0", "sigma1", "value", "shape"], rows)
}

pub fn read_sweep_csv<R: Read>(r: R) -> Result<Vec<SweepRecord>> {
    #[derive(Deserialize)]
    struct Row {
        param: f64,
        mu_hat: Option<f64>,
        sigma0: f64,
        sigma1: f64,
        value: f64,
        shape: String,
    }
    let rows: Vec<Row> = read_rows(r, &["param", "mu_hat", "sigma0", "sigma1", "value", "shape"])?;
    rows.into_iter()
        .map(|r| {
            Ok(SweepRecord {
                param: r.param,
                mu_hat: r.mu_hat,
                sigma0: r.sigma0,
                sigma1: r.sigma1,
                value: r.value,
                shape: Shape::parse(&r.shape)?,
            })
        })
        .collect()
}

/// Payoff of a policy with the partition behind it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PayoffReport {
    pub sigma0: f64,
    pub sigma1: f64,
    pub payoff: f64,
    pub measures: PartitionMeasures,
}

impl PayoffReport {
    pub fn new(policy: &Policy, payoff: f64, measures: PartitionMeasures) -> Self {
        Self { sigma0: policy.sigma0, sigma1: policy.sigma1, payoff, measures }
    }
}

/// Serialize to JSON with every float rounded to 12 significant digits.
pub fn to_json_rounded<T: Serialize>(value: &T) -> Result<serde_json::Value> {
    fn round(v: serde_json::Value) -> serde_json::Value {
        use serde_json::Value;
        match v {
            Value::Number(n) if n.is_f64() => {
                let x = n.as_f64().unwrap();
                let r: f64 = fmt12(x).parse().unwrap_or(x);
                serde_json::Number::from_f64(r).map(Value::Number).unwrap_or(Value::Null)
            }
            Value::Array(a) => Value::Array(a.into_iter().map(round).collect()),
            Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round(v))).collect()),
            other => other,
        }
    }
    Ok(round(serde_json::to_value(value)?))
}
