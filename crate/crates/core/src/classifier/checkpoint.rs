use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::mlp::{Mlp, OutputMode};
use super::TrainHyper;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

const MAGIC: &str = "egonet-mlp 1";

fn push_matrix<T: Scalar>(out: &mut String, name: &str, data: &[T], cols: usize) {
    let rows = data.len() / cols.max(1);
    let _ = writeln!(out, "{name} {rows} {cols}");
    for r in 0..rows {
        for (j, v) in data[r * cols..(r + 1) * cols].iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v:e}");
        }
        out.push('\n');
    }
}

/// Plain-text checkpoint: a header with dimensions, output mode and the
/// training hyperparameters, then `w1`, `b1`, `w2`, `b2` in row-major order.
/// Values use the shortest representation that parses back exactly.
pub fn save_checkpoint<T: Scalar>(m: &Mlp<T>, hyper: &TrainHyper, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "dims {} {} {}", m.input_dim, m.hidden, m.outputs);
    let _ = writeln!(out, "mode {}", m.mode);
    let _ = writeln!(
        out,
        "hyper {}",
        serde_json::to_string(hyper).expect("hyper serializes")
    );
    push_matrix(&mut out, "w1", &m.w1, m.hidden);
    push_matrix(&mut out, "b1", &m.b1, m.hidden);
    push_matrix(&mut out, "w2", &m.w2, m.outputs);
    push_matrix(&mut out, "b2", &m.b2, m.outputs);
    fs::write(path, out).map_err(Error::io(path))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(Mlp<T>, TrainHyper)> {
    let corrupt = |msg: String| Error::CorruptFile { path: path.to_owned(), msg };
    let text = fs::read_to_string(path).map_err(Error::io(path))?;
    let mut lines = text.lines();
    let mut next = |what: &str| lines.next().ok_or_else(|| corrupt(format!("truncated before {what}")));

    if next("magic")? != MAGIC {
        return Err(corrupt("not a classifier checkpoint".into()));
    }
    let dims: Vec<usize> = next("dims")?
        .strip_prefix("dims ")
        .ok_or_else(|| corrupt("missing dims".into()))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| corrupt(format!("bad dim `{t}`"))))
        .collect::<Result<_>>()?;
    let [input_dim, hidden, outputs] = dims[..] else {
        return Err(corrupt("dims needs three values".into()));
    };
    let mode: OutputMode = next("mode")?
        .strip_prefix("mode ")
        .ok_or_else(|| corrupt("missing mode".into()))?
        .parse()?;
    let hyper: TrainHyper = serde_json::from_str(
        next("hyper")?.strip_prefix("hyper ").ok_or_else(|| corrupt("missing hyper".into()))?,
    )
    .map_err(|e| corrupt(e.to_string()))?;

    let mut read_matrix = |name: &str, rows: usize, cols: usize| -> Result<Vec<T>> {
        let header = next(name)?;
        if header != format!("{name} {rows} {cols}") {
            return Err(corrupt(format!("expected `{name} {rows} {cols}`, found `{header}`")));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let line = next(name)?;
            let before = data.len();
            for t in line.split_whitespace() {
                data.push(t.parse::<T>().map_err(|_| corrupt(format!("{name}: bad value `{t}`")))?);
            }
            if data.len() - before != cols {
                return Err(corrupt(format!("{name}: row has wrong length")));
            }
        }
        Ok(data)
    };
    let w1 = read_matrix("w1", input_dim, hidden)?;
    let b1 = read_matrix("b1", 1, hidden)?;
    let w2 = read_matrix("w2", hidden, outputs)?;
    let b2 = read_matrix("b2", 1, outputs)?;
    Ok((Mlp { input_dim, hidden, outputs, mode, w1, b1, w2, b2 }, hyper))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        let m = Mlp::<f32>::new(7, 5, 3, OutputMode::Sigmoid, 3);
        let hyper = TrainHyper { batch_size: Some(32), threshold: Some(0.3), ..Default::default() };
        save_checkpoint(&m, &hyper, &p).unwrap();
        let (back, h) = load_checkpoint::<f32>(&p).unwrap();
        assert_eq!(back, m);
        assert_eq!(h, hyper);

        let m64 = Mlp::<f64>::new(3, 2, 2, OutputMode::Softmax, 9);
        save_checkpoint(&m64, &hyper, &p).unwrap();
        assert_eq!(load_checkpoint::<f64>(&p).unwrap().0, m64);
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        let m = Mlp::<f64>::new(3, 2, 2, OutputMode::Softmax, 9);
        save_checkpoint(&m, &TrainHyper::default(), &p).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let cut: String = text.lines().take(8).collect::<Vec<_>>().join("\n");
        fs::write(&p, cut).unwrap();
        assert!(matches!(load_checkpoint::<f64>(&p), Err(Error::CorruptFile { .. })));
    }
}
