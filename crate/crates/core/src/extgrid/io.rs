//! Text forms of a [`GridFn`]: CSV with header `x,value` and a JSON array of
//! `{"x": .., "value": ..}` records. Infinite values are written `inf`/`-inf`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::{ExtReal, Grid1D, GridFn};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Sample {
    x: f64,
    value: ExtReal,
}

#[derive(Debug, Deserialize)]
struct CsvSample {
    x: f64,
    value: String,
}

fn samples(f: &GridFn) -> impl Iterator<Item = Sample> + '_ {
    f.grid()
        .points()
        .zip(f.values())
        .map(|(x, &value)| Sample { x, value })
}

pub fn write_csv<W: Write>(f: &GridFn, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "value"])?;
    for s in samples(f) {
        out.write_record([s.x.to_string(), s.value.to_string()])?;
    }
    out.flush()?;
    Ok(())
}

pub fn to_csv_string(f: &GridFn) -> String {
    let mut buf = Vec::new();
    write_csv(f, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn to_json_string(f: &GridFn) -> String {
    let rows: Vec<Sample> = samples(f).collect();
    serde_json::to_string_pretty(&rows).expect("samples always serialize")
}

pub fn read_csv<R: Read>(r: R) -> Result<GridFn> {
    let mut rdr = csv::Reader::from_reader(r);
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for row in rdr.deserialize::<CsvSample>() {
        let row = row?;
        xs.push(row.x);
        vs.push(row.value.parse::<ExtReal>()?);
    }
    assemble(xs, vs)
}

pub fn read_json<R: Read>(r: R) -> Result<GridFn> {
    let rows: Vec<Sample> = serde_json::from_reader(r)?;
    let (xs, vs) = rows.into_iter().map(|s| (s.x, s.value)).unzip();
    assemble(xs, vs)
}

/// Rebuilds the grid from the `x` column, which must be uniform.
fn assemble(xs: Vec<f64>, values: Vec<ExtReal>) -> Result<GridFn> {
    let (Some(&lo), Some(&hi)) = (xs.first(), xs.last()) else {
        return Err(Error::Parse("no samples".into()));
    };
    let grid = Grid1D::new(lo, hi, xs.len())?;
    let tol = 1e-9 * grid.spacing();
    for (i, &x) in xs.iter().enumerate() {
        if (x - grid.point(i)).abs() > tol {
            return Err(Error::InvalidGrid(format!(
                "x column is not uniform at row {i} ({x})"
            )));
        }
    }
    GridFn::new_allow_neg_inf(grid, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> GridFn {
        let g = Grid1D::symmetric(1.0, 5).unwrap();
        GridFn::from_fn(g, |x| if x > 0.6 { f64::INFINITY } else { x * x / 3.0 }).unwrap()
    }

    #[test]
    fn csv_round_trip() {
        let f = sample();
        let text = to_csv_string(&f);
        assert!(text.starts_with("x,value\n"));
        assert!(text.trim_end().ends_with("1,inf"));
        assert_eq!(read_csv(text.as_bytes()).unwrap(), f);
    }

    #[test]
    fn json_round_trip() {
        let f = sample();
        let text = to_json_string(&f);
        assert!(text.contains("\"value\": \"inf\""));
        assert_eq!(read_json(text.as_bytes()).unwrap(), f);
    }

    #[test]
    fn uneven_x_is_rejected() {
        let text = "x,value\n0,1\n0.3,1\n1,1\n";
        assert!(read_csv(text.as_bytes()).is_err());
    }
}
