//! CSV layouts shared by the run and fit commands.
//!
//! Every CSV starts with one comment line
//! `# config_hash=<hex> dim=<D> extent=<L> replicas=<n>` followed by the header.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use entropic::observables::{CFunctionPoint, EntropyCurve};

use crate::CliError;

pub const POINTS_HEADER: [&str; 7] = ["x", "l", "beta", "c_value", "stat_err", "sys_err", "direction"];
pub const ENTROPY_HEADER: [&str; 3] = ["l", "S", "err"];

#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub config_hash: String,
    pub dim: usize,
    pub extent: usize,
    pub replicas: usize,
}

impl Meta {
    fn line(&self) -> String {
        format!(
            "# config_hash={} dim={} extent={} replicas={}\n",
            self.config_hash, self.dim, self.extent, self.replicas
        )
    }

    fn parse(line: &str, origin: &str) -> Result<Self, CliError> {
        let bad = |m: &str| CliError::Config(format!("{origin}:1: {m}"));
        let body = line
            .strip_prefix('#')
            .ok_or_else(|| bad("missing '# config_hash=...' line"))?;
        let (mut hash, mut dim, mut extent, mut replicas) = (None, None, None, None);
        for item in body.split_whitespace() {
            let (k, v) = item.split_once('=').ok_or_else(|| bad("malformed metadata"))?;
            let num = || v.parse::<usize>().map_err(|_| bad(&format!("bad value for {k}")));
            match k {
                "config_hash" => hash = Some(v.to_string()),
                "dim" => dim = Some(num()?),
                "extent" => extent = Some(num()?),
                "replicas" => replicas = Some(num()?),
                _ => {}
            }
        }
        match (hash, dim, extent, replicas) {
            (Some(config_hash), Some(dim), Some(extent), Some(replicas)) => Ok(Meta {
                config_hash,
                dim,
                extent,
                replicas,
            }),
            _ => Err(bad("metadata needs config_hash, dim, extent and replicas")),
        }
    }
}

/// One row of points.csv.
#[derive(Debug, Clone, PartialEq)]
pub struct PointRow {
    pub x: f64,
    pub l: usize,
    pub beta: f64,
    pub c_value: f64,
    pub stat_err: f64,
    pub sys_err: f64,
    pub direction: String,
}

impl From<&CFunctionPoint> for PointRow {
    fn from(p: &CFunctionPoint) -> Self {
        Self {
            x: p.x,
            l: p.l,
            beta: p.beta,
            c_value: p.c_value,
            stat_err: p.stat_err,
            sys_err: p.sys_err,
            direction: p.source.as_str().to_string(),
        }
    }
}

fn write_csv(path: &Path, meta: &Meta, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
    let mut buf = meta.line().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(&r).map_err(csv_err)?;
        }
        w.flush()?;
    }
    std::fs::File::create(path)?.write_all(&buf)?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Failed(format!("csv: {e}"))
}

pub fn write_points(path: &Path, meta: &Meta, rows: &[PointRow]) -> Result<(), CliError> {
    let rows = rows
        .iter()
        .map(|r| {
            vec![
                r.x.to_string(),
                r.l.to_string(),
                r.beta.to_string(),
                r.c_value.to_string(),
                r.stat_err.to_string(),
                r.sys_err.to_string(),
                r.direction.clone(),
            ]
        })
        .collect();
    write_csv(path, meta, &POINTS_HEADER, rows)
}

pub fn write_entropy(path: &Path, meta: &Meta, curve: &EntropyCurve) -> Result<(), CliError> {
    let rows = curve
        .points
        .iter()
        .map(|p| vec![p.l.to_string(), p.s.to_string(), p.err.to_string()])
        .collect();
    write_csv(path, meta, &ENTROPY_HEADER, rows)
}

pub fn write_table(path: &Path, meta: &Meta, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
    write_csv(path, meta, header, rows)
}

/// Contents of a CSV produced by this tool.
#[derive(Debug, Clone)]
pub enum Table {
    Points(Vec<PointRow>),
    /// `(l, S, err)` rows.
    Entropy(Vec<(usize, f64, f64)>),
}

/// Reads points.csv or entropy.csv, reporting schema errors with line numbers.
pub fn read_table(path: &Path) -> Result<(Meta, Table), CliError> {
    let origin = path.display().to_string();
    let file = std::fs::File::open(path).map_err(|e| CliError::Config(format!("cannot read {origin}: {e}")))?;
    let mut reader = BufReader::new(file);
    let mut first = String::new();
    reader.read_line(&mut first)?;
    let meta = Meta::parse(first.trim_end(), &origin)?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| CliError::Config(format!("{origin}:2: {e}")))?
        .clone();
    let header: Vec<&str> = header.iter().collect();
    let at = |rec: &csv::StringRecord| rec.position().map_or(0, |p| p.line()) + 1;
    let field = |rec: &csv::StringRecord, i: usize, name: &str| -> Result<String, CliError> {
        rec.get(i)
            .map(str::to_string)
            .ok_or_else(|| CliError::Config(format!("{origin}:{}: missing column '{name}'", at(rec))))
    };
    let num = |rec: &csv::StringRecord, i: usize, name: &str| -> Result<f64, CliError> {
        let s = field(rec, i, name)?;
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::Config(format!("{origin}:{}: column '{name}' is not a number: '{s}'", at(rec))))
    };
    let int = |rec: &csv::StringRecord, i: usize, name: &str| -> Result<usize, CliError> {
        let s = field(rec, i, name)?;
        s.trim()
            .parse::<usize>()
            .map_err(|_| CliError::Config(format!("{origin}:{}: column '{name}' is not an integer: '{s}'", at(rec))))
    };
    let records = |rdr: &mut csv::Reader<BufReader<std::fs::File>>| -> Result<Vec<csv::StringRecord>, CliError> {
        rdr.records()
            .map(|r| r.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line()) + 1;
                CliError::Config(format!("{origin}:{line}: {e}"))
            }))
            .collect()
    };
    if header == POINTS_HEADER {
        let mut rows = Vec::new();
        for rec in records(&mut rdr)? {
            let direction = field(&rec, 6, "direction")?;
            if !matches!(direction.as_str(), "direct" | "reverse" | "combined") {
                return Err(CliError::Config(format!(
                    "{origin}:{}: unknown direction '{direction}'",
                    at(&rec)
                )));
            }
            rows.push(PointRow {
                x: num(&rec, 0, "x")?,
                l: int(&rec, 1, "l")?,
                beta: num(&rec, 2, "beta")?,
                c_value: num(&rec, 3, "c_value")?,
                stat_err: num(&rec, 4, "stat_err")?,
                sys_err: num(&rec, 5, "sys_err")?,
                direction,
            });
        }
        Ok((meta, Table::Points(rows)))
    } else if header == ENTROPY_HEADER {
        let mut rows = Vec::new();
        for rec in records(&mut rdr)? {
            rows.push((int(&rec, 0, "l")?, num(&rec, 1, "S")?, num(&rec, 2, "err")?));
        }
        Ok((meta, Table::Entropy(rows)))
    } else {
        let mut expected = String::new();
        let _ = write!(expected, "'{}' or '{}'", POINTS_HEADER.join(","), ENTROPY_HEADER.join(","));
        Err(CliError::Config(format!(
            "{origin}:2: unrecognised header '{}', expected {expected}",
            header.join(",")
        )))
    }
}
