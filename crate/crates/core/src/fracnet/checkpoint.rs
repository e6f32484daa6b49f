//! Checkpoint file: a small text header followed by the raw parameter
//! payload, so round trips are bit exact.
//!
//! Layout after the `end` line: for each layer in order, the weight matrix
//! row-major then its bias (the final layer has none), every value a
//! little-endian f64.

use super::{NetConfig, Theta};
use crate::error::{Error, Result};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

pub const CHECKPOINT_MAGIC: &str = "fdnn checkpoint v1";

/// Trained parameters plus everything needed to rebuild their config.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: NetConfig,
    pub seed: u64,
    pub theta: Theta,
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<()> {
    ckpt.config.validate()?;
    ckpt.theta.check_dims(&ckpt.config)?;
    let file = File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    let mut w = BufWriter::new(file);
    let c = &ckpt.config;
    let header = format!(
        "{CHECKPOINT_MAGIC}\n\
         depth = {}\nwidth = {}\ninput_dim = {}\noutput_dim = {}\n\
         gamma = {}\nstep = {}\nhorizon = {}\nepsilon = {}\nridge = {}\nseed = {}\nend\n",
        c.depth, c.width, c.input_dim, c.output_dim, c.gamma, c.step(), c.horizon, c.epsilon,
        c.ridge, ckpt.seed
    );
    let io_err = |e| Error::io(path.display().to_string(), e);
    w.write_all(header.as_bytes()).map_err(io_err)?;
    for layer in 0..c.depth {
        for v in ckpt.theta.weights[layer].iter() {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
        if layer < c.depth - 1 {
            for v in ckpt.theta.biases[layer].iter() {
                w.write_all(&v.to_le_bytes()).map_err(io_err)?;
            }
        }
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let name = path.display().to_string();
    let file = File::open(path).map_err(|e| Error::io(&name, e))?;
    let mut r = BufReader::new(file);

    let mut line = String::new();
    let mut lineno = 0;
    let next_line = |r: &mut BufReader<File>, line: &mut String, lineno: &mut usize| -> Result<()> {
        line.clear();
        *lineno += 1;
        let n = r.read_line(line).map_err(|e| Error::io(&name, e))?;
        if n == 0 {
            return Err(Error::parse(&name, *lineno, "unexpected end of header"));
        }
        while line.ends_with('\n') || line.ends_with('\r') {
            line.pop();
        }
        Ok(())
    };

    next_line(&mut r, &mut line, &mut lineno)?;
    if line != CHECKPOINT_MAGIC {
        return Err(Error::parse(&name, lineno, format!("bad magic line {line:?}")));
    }

    let mut fields = std::collections::BTreeMap::new();
    loop {
        next_line(&mut r, &mut line, &mut lineno)?;
        if line == "end" {
            break;
        }
        let (key, value) = line.split_once(" = ").ok_or_else(|| {
            Error::parse(&name, lineno, format!("expected `key = value`, got {line:?}"))
        })?;
        fields.insert(key.to_string(), (value.to_string(), lineno));
    }

    let take = |key: &str| -> Result<(String, usize)> {
        fields
            .get(key)
            .cloned()
            .ok_or_else(|| Error::parse(&name, lineno, format!("missing header field `{key}`")))
    };
    let parse_usize = |key: &str| -> Result<usize> {
        let (v, ln) = take(key)?;
        v.parse().map_err(|_| Error::parse(&name, ln, format!("bad integer for `{key}`: {v:?}")))
    };
    let parse_f64 = |key: &str| -> Result<f64> {
        let (v, ln) = take(key)?;
        v.parse().map_err(|_| Error::parse(&name, ln, format!("bad float for `{key}`: {v:?}")))
    };
    let parse_u64 = |key: &str| -> Result<u64> {
        let (v, ln) = take(key)?;
        v.parse().map_err(|_| Error::parse(&name, ln, format!("bad integer for `{key}`: {v:?}")))
    };

    let config = NetConfig {
        depth: parse_usize("depth")?,
        width: parse_usize("width")?,
        input_dim: parse_usize("input_dim")?,
        output_dim: parse_usize("output_dim")?,
        gamma: parse_f64("gamma")?,
        horizon: parse_f64("horizon")?,
        epsilon: parse_f64("epsilon")?,
        ridge: parse_f64("ridge")?,
    };
    config.validate()?;
    let step = parse_f64("step")?;
    if (step - config.step()).abs() > 1e-12 * config.step() {
        return Err(Error::parse(
            &name,
            lineno,
            format!("step {step} is inconsistent with horizon/(depth-1) = {}", config.step()),
        ));
    }
    let seed = parse_u64("seed")?;

    let mut payload = Vec::new();
    r.read_to_end(&mut payload).map_err(|e| Error::io(&name, e))?;
    let expected = config.dof() * 8;
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
    let mut theta = Theta::zeros(&config)?;
    for layer in 0..config.depth {
        for v in theta.weights[layer].iter_mut() {
            *v = values.next().expect("length checked");
        }
        if layer < config.depth - 1 {
            for v in theta.biases[layer].iter_mut() {
                *v = values.next().expect("length checked");
            }
        }
    }
    if !theta.is_finite() {
        return Err(Error::NonFinite("checkpoint payload".into()));
    }
    Ok(Checkpoint { config, seed, theta })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let config = NetConfig {
            depth: 4,
            width: 5,
            input_dim: 2,
            output_dim: 3,
            gamma: 0.5,
            horizon: 1.0,
            epsilon: 0.1,
            ridge: 1e-6,
        };
        let theta = Theta::init(&config, 99).unwrap();
        Checkpoint { config, seed: 99, theta }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let ckpt = sample();
        save_checkpoint(&path, &ckpt).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(ckpt, loaded);

        let again = dir.path().join("net2.ckpt");
        save_checkpoint(&again, &loaded).unwrap();
        let a = std::fs::read(&path).unwrap();
        let b = std::fs::read(&again).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        save_checkpoint(&path, &sample()).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 8]).unwrap();
        let err = load_checkpoint(&path).unwrap_err();
        assert!(err.to_string().contains("payload"), "{err}");
    }

    #[test]
    fn malformed_header_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "{CHECKPOINT_MAGIC}").unwrap();
        writeln!(f, "depth 4").unwrap();
        drop(f);
        let err = load_checkpoint(&path).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn wrong_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.ckpt");
        std::fs::write(&path, "something else\n").unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
