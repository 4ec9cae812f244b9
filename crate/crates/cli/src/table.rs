//! Consolidation of build reports into one table.

use anyhow::{bail, Result};
use serde_json::Value;

#[derive(Debug, PartialEq)]
pub struct Row {
    pub source: String,
    pub k: u64,
    pub n: u64,
    pub method: String,
    /// ReLU-equivalent neurons (two and three layers) or widest layer (deep).
    pub size: u64,
    pub bound: u64,
    pub margin: Option<f64>,
    pub verified: bool,
}

impl Row {
    pub fn ok(&self) -> bool {
        self.verified && self.size <= self.bound
    }
}

fn uint(v: &Value, key: &str) -> Option<u64> {
    v.get(key).and_then(Value::as_u64)
}

/// Reads one report object written by `build2`, `build3` or `deep`.
pub fn row(source: &str, v: &Value) -> Result<Row> {
    let (Some(k), Some(n)) = (uint(v, "K"), uint(v, "N")) else {
        bail!("{source}: report lacks K or N");
    };
    let verified = v.pointer("/verify/pass").and_then(Value::as_bool).unwrap_or(false);
    let margin = v.get("margin").and_then(Value::as_f64);
    let (method, size, bound) = if let Some(width) = uint(v, "max_width") {
        let Some(bound) = v.pointer("/bound/construction").and_then(Value::as_u64) else {
            bail!("{source}: deep report lacks bound.construction");
        };
        (format!("deep(L={})", uint(v, "L").unwrap_or(0)), width, bound)
    } else {
        let size = uint(v, "relu_count").or_else(|| uint(v, "neurons"));
        let (Some(size), Some(bound)) = (size, uint(v, "bound")) else {
            bail!("{source}: report lacks a neuron count or bound");
        };
        let method = v.get("method").and_then(Value::as_str).unwrap_or("?").to_string();
        (method, size, bound)
    };
    Ok(Row { source: source.into(), k, n, method, size, bound, margin, verified })
}

pub const HEADER: [&str; 9] = ["source", "K", "N", "method", "relu_count", "bound", "margin", "verified", "status"];

fn cells(r: &Row) -> [String; 9] {
    [
        r.source.clone(),
        r.k.to_string(),
        r.n.to_string(),
        r.method.clone(),
        r.size.to_string(),
        r.bound.to_string(),
        r.margin.map_or_else(String::new, |m| format!("{m}")),
        r.verified.to_string(),
        if r.ok() { "ok".into() } else { "FLAGGED".into() },
    ]
}

pub fn text(rows: &[Row]) -> String {
    let body: Vec<[String; 9]> = rows.iter().map(cells).collect();
    let mut widths = HEADER.map(str::len);
    for r in &body {
        for (w, c) in widths.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cols: &[String]| {
        cols.iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(&HEADER.map(String::from)) + "\n";
    for r in &body {
        out += &line(r);
        out.push('\n');
    }
    out
}

pub fn csv(rows: &[Row]) -> String {
    let mut out = HEADER.join(",") + "\n";
    for r in rows {
        out += &cells(r).join(",");
        out.push('\n');
    }
    out
}
