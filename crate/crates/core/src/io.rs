//! Dataset and curve serialization: CSV for exchange, a compact binary cache
//! for large cohorts.

use std::io::{Read, Write};

use crate::curve::AccelCurve;
use crate::error::{Error, Result};
use crate::scm::{CohortRecord, Dataset};

pub const DATASET_HEADER: [&str; 8] = ["u0", "u1", "l", "a", "t0", "ta", "t_obs", "d"];

const MAGIC: &[u8; 4] = b"AFTD";
const VERSION: u32 = 1;
const FLAG_CONFOUNDER: u32 = 1;

pub fn write_dataset_csv<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DATASET_HEADER)?;
    for r in &dataset.records {
        w.write_record([
            r.u0.to_string(),
            r.u1.to_string(),
            r.l.map(|l| l.to_string()).unwrap_or_default(),
            r.a.to_string(),
            r.t0.to_string(),
            r.ta.to_string(),
            r.t_obs.to_string(),
            (r.d as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(input: R) -> Result<Dataset> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != DATASET_HEADER {
        return Err(Error::Format(format!("unexpected header {header:?}")));
    }
    let num = |s: &str, line: usize| -> Result<f64> {
        s.parse::<f64>().map_err(|e| Error::Format(format!("record {line}: {e}")))
    };
    let mut records = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let l = if row[2].is_empty() { None } else { Some(num(&row[2], line)?) };
        let a = match &row[3] {
            "0" => 0,
            "1" => 1,
            other => return Err(Error::Format(format!("record {line}: treatment must be 0 or 1, got {other:?}"))),
        };
        let d = match &row[7] {
            "0" => false,
            "1" => true,
            other => return Err(Error::Format(format!("record {line}: event flag must be 0 or 1, got {other:?}"))),
        };
        records.push(CohortRecord {
            u0: num(&row[0], line)?,
            u1: num(&row[1], line)?,
            l,
            a,
            t0: num(&row[4], line)?,
            ta: num(&row[5], line)?,
            t_obs: num(&row[6], line)?,
            d,
        });
    }
    Ok(Dataset::new(records))
}

/// Binary layout: `AFTD`, version, flags, record count (u64), then per record
/// `u0 u1 [l] t0 ta t_obs` as f64 and one byte `a | d << 1`, all little-endian.
pub fn write_dataset_binary<W: Write>(dataset: &Dataset, mut out: W) -> Result<()> {
    let with_l = dataset.has_confounder();
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(if with_l { FLAG_CONFOUNDER } else { 0 }).to_le_bytes())?;
    out.write_all(&(dataset.len() as u64).to_le_bytes())?;
    for r in &dataset.records {
        let mut fields = vec![r.u0, r.u1];
        if with_l {
            fields.push(r.l.unwrap());
        }
        fields.extend([r.t0, r.ta, r.t_obs]);
        for f in fields {
            out.write_all(&f.to_le_bytes())?;
        }
        out.write_all(&[r.a | (r.d as u8) << 1])?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset_binary<R: Read>(mut input: R) -> Result<Dataset> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("not a dataset cache (bad magic)".into()));
    }
    let mut u32buf = [0u8; 4];
    input.read_exact(&mut u32buf)?;
    let version = u32::from_le_bytes(u32buf);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported cache version {version}")));
    }
    input.read_exact(&mut u32buf)?;
    let with_l = u32::from_le_bytes(u32buf) & FLAG_CONFOUNDER != 0;
    let mut u64buf = [0u8; 8];
    input.read_exact(&mut u64buf)?;
    let n = u64::from_le_bytes(u64buf) as usize;
    let width = if with_l { 6 } else { 5 } * 8 + 1;
    let mut buf = vec![0u8; width];
    let mut records = Vec::with_capacity(n.min(1 << 24));
    for _ in 0..n {
        input.read_exact(&mut buf)?;
        let f = |k: usize| f64::from_le_bytes(buf[8 * k..8 * k + 8].try_into().unwrap());
        let (l, off) = if with_l { (Some(f(2)), 3) } else { (None, 2) };
        let flag = buf[width - 1];
        if flag > 3 {
            return Err(Error::Format(format!("bad flag byte {flag}")));
        }
        records.push(CohortRecord {
            u0: f(0),
            u1: f(1),
            l,
            a: flag & 1,
            t0: f(off),
            ta: f(off + 1),
            t_obs: f(off + 2),
            d: flag & 2 != 0,
        });
    }
    Ok(Dataset::new(records))
}

/// One row per gridpoint: `t, treated_cdf, estimate, lo, hi, identified`.
/// Missing entries are written as empty fields.
pub fn write_curve_csv<W: Write>(curve: &AccelCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "treated_cdf", "estimate", "lo", "hi", "identified"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for p in &curve.points {
        w.write_record([
            if p.t.is_finite() { p.t.to_string() } else { String::new() },
            p.treated_cdf.to_string(),
            opt(p.value),
            opt(p.band.map(|b| b.0)),
            opt(p.band.map(|b| b.1)),
            (p.value.is_some() as u8).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
