//! CSV emitters for the evaluation reports and a reader for checking them.
//!
//! Floats are written with Rust's shortest round-trip formatting, so
//! identical numbers always give identical bytes.

use crate::error::{Error, Result};
use crate::linalg::C64;

fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:e}")
    }
}

/// `index,value,cumulative_fraction` for POD eigenvalues or HSVs.
pub fn values_csv(values: &[f64]) -> String {
    let total: f64 = values.iter().sum();
    let mut acc = 0.0;
    let mut s = String::from("index,value,cumulative_fraction\n");
    for (k, v) in values.iter().enumerate() {
        acc += v;
        s.push_str(&format!("{},{},{}\n", k + 1, num(*v), num(acc / total)));
    }
    s
}

/// Wide table: first column `key`, then one column per labelled series.
pub fn series_csv(key: &str, x: &[f64], series: &[(String, Vec<f64>)]) -> String {
    let mut s = String::from(key);
    for (label, _) in series {
        s.push(',');
        s.push_str(label);
    }
    s.push('\n');
    for (k, xv) in x.iter().enumerate() {
        s.push_str(&num(*xv));
        for (_, v) in series {
            s.push(',');
            s.push_str(&num(v[k]));
        }
        s.push('\n');
    }
    s
}

/// `omega,<system>...` with `σ_max` per system.
pub fn freq_response_csv(omegas: &[f64], series: &[(String, Vec<f64>)]) -> String {
    series_csv("omega", omegas, series)
}

/// `t,<system>...` energy histories.
pub fn energy_csv(times: &[f64], series: &[(String, Vec<f64>)]) -> String {
    series_csv("t", times, series)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub family: String,
    pub output_rank: usize,
    pub rank: usize,
    pub two_norm: f64,
    pub hinf: f64,
    pub lower: f64,
    pub upper: f64,
}

pub fn error_norms_csv(rows: &[ErrorRow]) -> String {
    let mut s = String::from("family,output_rank,rank,two_norm,hinf,lower,upper\n");
    for r in rows {
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.family,
            r.output_rank,
            r.rank,
            num(r.two_norm),
            num(r.hinf),
            num(r.lower),
            num(r.upper)
        ));
    }
    s
}

/// `re,im,system` eigenvalue listing.
pub fn spectrum_csv(sets: &[(String, Vec<C64>)]) -> String {
    let mut s = String::from("re,im,system\n");
    for (label, eigs) in sets {
        for z in eigs {
            s.push_str(&format!("{},{},{}\n", num(z.re), num(z.im), label));
        }
    }
    s
}

/// `pair,rank,T` subspace traces.
pub fn trace_csv(rows: &[(String, usize, f64)]) -> String {
    let mut s = String::from("pair,rank,T\n");
    for (pair, r, t) in rows {
        s.push_str(&format!("{pair},{r},{}\n", num(*t)));
    }
    s
}

/// Parsed CSV with a header row.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.is_empty());
        let header: Vec<String> = lines
            .next()
            .ok_or_else(|| Error::Format("empty CSV".into()))?
            .split(',')
            .map(str::to_string)
            .collect();
        let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
        if rows.iter().any(|r| r.len() != header.len()) {
            return Err(Error::Format("ragged CSV".into()));
        }
        Ok(Table { header, rows })
    }

    pub fn col(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Format(format!("CSV has no column '{name}'")))
    }

    pub fn floats(&self, name: &str) -> Result<Vec<f64>> {
        let c = self.col(name)?;
        self.rows
            .iter()
            .map(|r| r[c].parse().map_err(|_| Error::Format(format!("bad number '{}' in column {name}", r[c]))))
            .collect()
    }

    /// Rows whose `key` column equals `value`.
    pub fn filter(&self, key: &str, value: &str) -> Result<Table> {
        let c = self.col(key)?;
        Ok(Table { header: self.header.clone(), rows: self.rows.iter().filter(|r| r[c] == value).cloned().collect() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    #[test]
    fn values_table() {
        let s = values_csv(&[3.0, 1.0]);
        assert_eq!(s, "index,value,cumulative_fraction\n1,3e0,7.5e-1\n2,1e0,1e0\n");
        let t = Table::parse(&s).unwrap();
        assert_eq!(t.floats("cumulative_fraction").unwrap(), vec![0.75, 1.0]);
    }

    #[test]
    fn floats_round_trip_exactly() {
        let x = [0.1 + 0.2, std::f64::consts::PI, 1e-300];
        let s = freq_response_csv(&x, &[("full".into(), x.to_vec())]);
        let t = Table::parse(&s).unwrap();
        assert_eq!(t.floats("full").unwrap(), x.to_vec());
        assert_eq!(t.floats("omega").unwrap(), x.to_vec());
    }

    #[test]
    fn other_tables() {
        let s = spectrum_csv(&[("full".into(), vec![c64(-0.1, 0.5)])]);
        assert_eq!(Table::parse(&s).unwrap().filter("system", "full").unwrap().rows.len(), 1);
        let e = error_norms_csv(&[ErrorRow { family: "pod".into(), output_rank: 4, rank: 2, two_norm: 0.5, hinf: f64::NAN, lower: 1.0, upper: 2.0 }]);
        assert!(e.ends_with("pod,4,2,5e-1,nan,1e0,2e0\n"));
        assert!(trace_csv(&[("pod:bpod".into(), 3, 2.99)]).contains("pod:bpod,3,2.99e0"));
        assert!(Table::parse("a,b\n1\n").is_err());
    }
}
