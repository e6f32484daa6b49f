//! Chain files: `#`-prefixed metadata, a column header, then one CSV row
//! per chain state. Floats are printed with the shortest representation
//! that parses back to the same bits, so round trips are exact.

use super::ChainResult;
use crate::error::{Error, Result};
use ndarray::Array2;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

pub const CHAIN_MAGIC: &str = "# fdnn chain v1";

/// Write a chain together with caller metadata (forward-map name, seeds,
/// checkpoint digest and the like). Caller pairs land after the standard
/// fields, in the given order. Columns are `step, xi_1..xi_d,
/// log_posterior, accepted`.
pub fn write_chain(path: &Path, chain: &ChainResult, meta: &[(String, String)]) -> Result<()> {
    let name = path.display().to_string();
    let file = File::create(path).map_err(|e| Error::io(&name, e))?;
    let mut w = BufWriter::new(file);
    let dim = chain.dim();
    let mut header = String::new();
    header.push_str(CHAIN_MAGIC);
    header.push('\n');
    header.push_str(&format!("# dim = {dim}\n"));
    header.push_str(&format!("# rows = {}\n", chain.states.nrows()));
    header.push_str(&format!("# burn_in = {}\n", chain.burn_in));
    for (k, v) in meta {
        header.push_str(&format!("# {k} = {v}\n"));
    }
    header.push_str("step");
    for j in 1..=dim {
        header.push_str(&format!(",xi_{j}"));
    }
    header.push_str(",log_posterior,accepted\n");
    w.write_all(header.as_bytes()).map_err(|e| Error::io(&name, e))?;

    let mut line = String::new();
    for (step, row) in chain.states.rows().into_iter().enumerate() {
        line.clear();
        line.push_str(&step.to_string());
        for v in row.iter() {
            line.push(',');
            line.push_str(&v.to_string());
        }
        line.push(',');
        line.push_str(&chain.log_posts[step].to_string());
        line.push(',');
        line.push(if chain.accepted[step] { '1' } else { '0' });
        line.push('\n');
        w.write_all(line.as_bytes()).map_err(|e| Error::io(&name, e))?;
    }
    w.flush().map_err(|e| Error::io(&name, e))?;
    Ok(())
}

/// Read a chain file back; returns the chain and all metadata pairs in
/// file order (standard fields included).
pub fn read_chain(path: &Path) -> Result<(ChainResult, Vec<(String, String)>)> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(&name, e))?;
    let mut r = BufReader::new(file);
    let mut line = String::new();
    let mut lineno = 1usize;
    r.read_line(&mut line).map_err(|e| Error::io(&name, e))?;
    if line.trim_end() != CHAIN_MAGIC {
        return Err(Error::parse(&name, 1, format!("bad magic line {:?}", line.trim_end())));
    }

    let mut meta: Vec<(String, String)> = Vec::new();
    loop {
        line.clear();
        lineno += 1;
        let n = r.read_line(&mut line).map_err(|e| Error::io(&name, e))?;
        if n == 0 {
            return Err(Error::parse(&name, lineno, "file ends before the column header"));
        }
        let trimmed = line.trim_end();
        if let Some(rest) = trimmed.strip_prefix("# ") {
            let (k, v) = rest.split_once(" = ").ok_or_else(|| {
                Error::parse(&name, lineno, format!("expected `# key = value`, got {trimmed:?}"))
            })?;
            meta.push((k.to_string(), v.to_string()));
        } else if trimmed.starts_with("step") {
            break;
        } else {
            return Err(Error::parse(&name, lineno, format!("unexpected line {trimmed:?}")));
        }
    }

    let lookup = |key: &str| -> Result<&str> {
        meta.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| Error::parse(&name, lineno, format!("missing metadata `{key}`")))
    };
    let dim: usize = lookup("dim")?
        .parse()
        .map_err(|_| Error::parse(&name, lineno, "bad dim"))?;
    let rows: usize = lookup("rows")?
        .parse()
        .map_err(|_| Error::parse(&name, lineno, "bad rows"))?;
    let burn_in: usize = lookup("burn_in")?
        .parse()
        .map_err(|_| Error::parse(&name, lineno, "bad burn_in"))?;

    let mut states = Array2::zeros((rows, dim));
    let mut log_posts = Vec::with_capacity(rows);
    let mut accepted = Vec::with_capacity(rows);
    for step in 0..rows {
        line.clear();
        lineno += 1;
        let n = r.read_line(&mut line).map_err(|e| Error::io(&name, e))?;
        if n == 0 {
            return Err(Error::parse(
                &name,
                lineno,
                format!("file ends at row {step} of {rows}"),
            ));
        }
        let mut parts = line.trim_end().split(',');
        let idx: usize = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse(&name, lineno, "bad step index"))?;
        if idx != step {
            return Err(Error::parse(
                &name,
                lineno,
                format!("step index {idx} out of order, expected {step}"),
            ));
        }
        for j in 0..dim {
            let v: f64 = parts
                .next()
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(&name, lineno, format!("bad value in column {j}")))?;
            states[[step, j]] = v;
        }
        let lp: f64 = parts
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| Error::parse(&name, lineno, "bad log posterior"))?;
        let flag = match parts.next() {
            Some("1") => true,
            Some("0") => false,
            _ => return Err(Error::parse(&name, lineno, "bad accept flag")),
        };
        if parts.next().is_some() {
            return Err(Error::parse(&name, lineno, "trailing fields"));
        }
        log_posts.push(lp);
        accepted.push(flag);
    }

    // Wall time is deliberately not persisted: files must hash identically
    // across reruns with the same seeds.
    Ok((ChainResult { states, log_posts, accepted, burn_in, seconds: 0.0 }, meta))
}
