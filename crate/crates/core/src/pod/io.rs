//! Snapshot and basis files: text header, then a raw little-endian f64
//! payload. Round trips are bit exact.
//!
//! Snapshot payload order: parameter rows (each sample contiguous), then
//! the snapshot matrix column-major (each solution contiguous). Basis
//! payload order: basis matrix column-major, then all singular values.

use super::{PodBasis, SnapshotSet};
use crate::error::{Error, Result};
use ndarray::Array2;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const SNAPSHOT_MAGIC: &str = "fdnn snapshots v1";
pub const BASIS_MAGIC: &str = "fdnn pod basis v1";

pub fn write_snapshots(path: &Path, set: &SnapshotSet) -> Result<()> {
    set.check()?;
    let name = path.display().to_string();
    let file = File::create(path).map_err(|e| Error::io(&name, e))?;
    let mut w = BufWriter::new(file);
    let bounds = set
        .bounds
        .iter()
        .flat_map(|(lo, hi)| [lo.to_string(), hi.to_string()])
        .collect::<Vec<_>>()
        .join(" ");
    let header = format!(
        "{SNAPSHOT_MAGIC}\nn_dof = {}\ncount = {}\nparam_dim = {}\ngrid_interior = {}\n\
         bounds = {bounds}\nseed = {}\nend\n",
        set.n_dof(),
        set.count(),
        set.parameters.ncols(),
        set.grid_interior,
        set.seed
    );
    w.write_all(header.as_bytes()).map_err(|e| Error::io(&name, e))?;
    for row in set.parameters.rows() {
        for v in row.iter() {
            w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(&name, e))?;
        }
    }
    for col in set.snapshots.columns() {
        for v in col.iter() {
            w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(&name, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(&name, e))?;
    Ok(())
}

pub fn read_snapshots(path: &Path) -> Result<SnapshotSet> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(&name, e))?;
    let mut r = BufReader::new(file);
    let (fields, lineno) = read_header(&mut r, &name, SNAPSHOT_MAGIC)?;
    let get = |key: &str| field(&fields, key, &name, lineno);

    let n_dof: usize = parse(get("n_dof")?, &name)?;
    let count: usize = parse(get("count")?, &name)?;
    let param_dim: usize = parse(get("param_dim")?, &name)?;
    let grid_interior: usize = parse(get("grid_interior")?, &name)?;
    let seed: u64 = parse(get("seed")?, &name)?;
    let bounds_raw = get("bounds")?;
    let flat: Vec<f64> = bounds_raw
        .1
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| Error::parse(&name, bounds_raw.0, format!("bad bound {t:?}")))
        })
        .collect::<Result<_>>()?;
    if flat.len() != 2 * param_dim {
        return Err(Error::parse(
            &name,
            bounds_raw.0,
            format!("{} bound values for {param_dim} parameters", flat.len()),
        ));
    }
    let bounds: Vec<(f64, f64)> = flat.chunks_exact(2).map(|c| (c[0], c[1])).collect();

    let expected = (count * param_dim + n_dof * count) * 8;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload).map_err(|e| Error::io(&name, e))?;
    if payload.len() != expected {
        return Err(Error::parse(
            &name,
            lineno,
            format!("payload has {} bytes, expected {expected}", payload.len()),
        ));
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));

    let mut parameters = Array2::zeros((count, param_dim));
    for mut row in parameters.rows_mut() {
        for v in row.iter_mut() {
            *v = values.next().expect("length checked");
        }
    }
    let mut snapshots = Array2::zeros((n_dof, count));
    for mut col in snapshots.columns_mut() {
        for v in col.iter_mut() {
            *v = values.next().expect("length checked");
        }
    }
    let set = SnapshotSet {
        parameters,
        snapshots,
        grid_interior,
        bounds,
        seed,
    };
    set.check()?;
    Ok(set)
}

pub fn write_basis(path: &Path, basis: &PodBasis) -> Result<()> {
    let name = path.display().to_string();
    let file = File::create(path).map_err(|e| Error::io(&name, e))?;
    let mut w = BufWriter::new(file);
    let header = format!(
        "{BASIS_MAGIC}\nn_dof = {}\nmodes = {}\nsingular_count = {}\ngrid_interior = {}\nend\n",
        basis.n_dof(),
        basis.modes(),
        basis.singular_values.len(),
        basis.grid_interior
    );
    w.write_all(header.as_bytes()).map_err(|e| Error::io(&name, e))?;
    for col in basis.basis.columns() {
        for v in col.iter() {
            w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(&name, e))?;
        }
    }
    for v in &basis.singular_values {
        w.write_all(&v.to_le_bytes()).map_err(|e| Error::io(&name, e))?;
    }
    w.flush().map_err(|e| Error::io(&name, e))?;
    Ok(())
}

pub fn read_basis(path: &Path) -> Result<PodBasis> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(&name, e))?;
    let mut r = BufReader::new(file);
    let (fields, lineno) = read_header(&mut r, &name, BASIS_MAGIC)?;
    let get = |key: &str| field(&fields, key, &name, lineno);

    let n_dof: usize = parse(get("n_dof")?, &name)?;
    let modes: usize = parse(get("modes")?, &name)?;
    let singular_count: usize = parse(get("singular_count")?, &name)?;
    let grid_interior: usize = parse(get("grid_interior")?, &name)?;

    let expected = (n_dof * modes + singular_count) * 8;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload).map_err(|e| Error::io(&name, e))?;
    if payload.len() != expected {
        return Err(Error::parse(
            &name,
            lineno,
            format!("payload has {} bytes, expected {expected}", payload.len()),
        ));
    }
    let mut values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")));
    let mut basis_m = Array2::zeros((n_dof, modes));
    for mut col in basis_m.columns_mut() {
        for v in col.iter_mut() {
            *v = values.next().expect("length checked");
        }
    }
    let singular_values: Vec<f64> = (0..singular_count)
        .map(|_| values.next().expect("length checked"))
        .collect();
    Ok(PodBasis {
        basis: basis_m,
        singular_values,
        grid_interior,
    })
}

type Fields = std::collections::BTreeMap<String, (usize, String)>;

fn read_header(r: &mut BufReader<File>, name: &str, magic: &str) -> Result<(Fields, usize)> {
    let mut line = String::new();
    let mut lineno = 1;
    r.read_line(&mut line).map_err(|e| Error::io(name, e))?;
    if line.trim_end() != magic {
        return Err(Error::parse(name, 1, format!("bad magic line {:?}", line.trim_end())));
    }
    let mut fields = Fields::new();
    loop {
        line.clear();
        lineno += 1;
        let n = r.read_line(&mut line).map_err(|e| Error::io(name, e))?;
        if n == 0 {
            return Err(Error::parse(name, lineno, "unexpected end of header"));
        }
        let trimmed = line.trim_end();
        if trimmed == "end" {
            return Ok((fields, lineno));
        }
        let (key, value) = trimmed.split_once(" = ").ok_or_else(|| {
            Error::parse(name, lineno, format!("expected `key = value`, got {trimmed:?}"))
        })?;
        fields.insert(key.to_string(), (lineno, value.to_string()));
    }
}

fn field<'a>(fields: &'a Fields, key: &str, name: &str, lineno: usize) -> Result<(usize, &'a str)> {
    fields
        .get(key)
        .map(|(ln, v)| (*ln, v.as_str()))
        .ok_or_else(|| Error::parse(name, lineno, format!("missing header field `{key}`")))
}

fn parse<T: std::str::FromStr>(pair: (usize, &str), name: &str) -> Result<T> {
    pair.1
        .parse()
        .map_err(|_| Error::parse(name, pair.0, format!("bad value {:?}", pair.1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn sample_set() -> SnapshotSet {
        SnapshotSet {
            parameters: Array2::from_shape_fn((4, 2), |(i, j)| i as f64 + 0.25 * j as f64),
            snapshots: Array2::from_shape_fn((9, 4), |(i, j)| (i * 4 + j) as f64 * 0.5 - 3.0),
            grid_interior: 3,
            bounds: vec![(0.01, 10.0), (0.01, 10.0)],
            seed: 77,
        }
    }

    #[test]
    fn snapshot_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snaps.bin");
        let set = sample_set();
        write_snapshots(&path, &set).unwrap();
        let loaded = read_snapshots(&path).unwrap();
        assert_eq!(set, loaded);
        let again = dir.path().join("snaps2.bin");
        write_snapshots(&again, &loaded).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
    }

    #[test]
    fn basis_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("basis.bin");
        let set = sample_set();
        let basis = super::super::pod_of_matrix(&set.snapshots, 2, 3).unwrap();
        write_basis(&path, &basis).unwrap();
        let loaded = read_basis(&path).unwrap();
        assert_eq!(basis, loaded);
    }

    #[test]
    fn truncation_is_reported_with_byte_counts() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snaps.bin");
        write_snapshots(&path, &sample_set()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 1]).unwrap();
        let err = read_snapshots(&path).unwrap_err().to_string();
        assert!(err.contains("expected"), "{err}");
    }

    #[test]
    fn dimension_lies_in_header_are_caught() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("snaps.bin");
        write_snapshots(&path, &sample_set()).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        let needle = b"count = 4";
        let at = bytes
            .windows(needle.len())
            .position(|w| w == needle)
            .expect("header field present");
        bytes[at + needle.len() - 1] = b'5';
        std::fs::write(&path, &bytes).unwrap();
        assert!(read_snapshots(&path).is_err());
    }
}
