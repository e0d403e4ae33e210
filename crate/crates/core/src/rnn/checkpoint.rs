//! Versioned text checkpoint:
//!
//! ```text
//! pmimo-lstm-checkpoint v1
//! memory_length=10
//! input_size=4
//! hidden_sizes=32,32
//! dropout=0.2
//! learning_rate=0.001
//! tensor layer0.w 128 4
//! <rows of comma-separated values, 17 significant digits>
//! ...
//! end
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{LstmConfig, PmimoLstm};
use crate::error::{Error, Result};

const MAGIC: &str = "pmimo-lstm-checkpoint v1";

pub fn write_checkpoint(model: &PmimoLstm) -> String {
    let cfg = &model.config;
    let mut out = String::new();
    let hidden: Vec<String> = cfg.hidden_sizes.iter().map(usize::to_string).collect();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "memory_length={}", cfg.memory_length);
    let _ = writeln!(out, "input_size={}", cfg.input_size);
    let _ = writeln!(out, "hidden_sizes={}", hidden.join(","));
    let _ = writeln!(out, "dropout={:.16e}", cfg.dropout);
    let _ = writeln!(out, "learning_rate={:.16e}", cfg.learning_rate);
    for ((name, data), (rows, cols)) in model.tensors().into_iter().zip(model.tensor_shapes()) {
        let _ = writeln!(out, "tensor {name} {rows} {cols}");
        for row in data.chunks(cols.max(1)) {
            let vals: Vec<String> = row.iter().map(|v| format!("{v:.16e}")).collect();
            let _ = writeln!(out, "{}", vals.join(","));
        }
    }
    out.push_str("end\n");
    out
}

pub fn read_checkpoint(text: &str, origin: &Path) -> Result<PmimoLstm> {
    let err = |line: usize, msg: String| Error::parse(origin, line, msg);
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, l)) if l == MAGIC => {}
        other => {
            return Err(err(1, format!("expected `{MAGIC}`, found {:?}", other.map(|o| o.1))));
        }
    }
    let mut kv = |key: &str| -> Result<String> {
        let (n, line) = lines.next().ok_or_else(|| err(0, format!("missing {key}")))?;
        line.strip_prefix(key)
            .and_then(|r| r.strip_prefix('='))
            .map(str::to_string)
            .ok_or_else(|| err(n, format!("expected `{key}=`")))
    };
    let num = |s: String, what: &str| -> Result<f64> {
        s.parse().map_err(|_| err(0, format!("bad {what} `{s}`")))
    };
    let memory_length = num(kv("memory_length")?, "memory_length")? as usize;
    let input_size = num(kv("input_size")?, "input_size")? as usize;
    let hidden = kv("hidden_sizes")?;
    let hidden_sizes = if hidden.is_empty() {
        vec![]
    } else {
        hidden
            .split(',')
            .map(|h| h.parse().map_err(|_| err(0, format!("bad hidden size `{h}`"))))
            .collect::<Result<Vec<usize>>>()?
    };
    let dropout = num(kv("dropout")?, "dropout")?;
    let learning_rate = num(kv("learning_rate")?, "learning_rate")?;
    let mut model = PmimoLstm::zeros(LstmConfig {
        memory_length,
        input_size,
        hidden_sizes,
        dropout,
        learning_rate,
    })?;

    let expected: Vec<(String, (usize, usize))> = model
        .tensors()
        .into_iter()
        .map(|(n, _)| n)
        .zip(model.tensor_shapes())
        .collect();
    let mut values: Vec<Vec<f64>> = Vec::with_capacity(expected.len());
    for (name, (rows, cols)) in &expected {
        let (n, header) = lines.next().ok_or_else(|| err(0, format!("missing tensor {name}")))?;
        let want = format!("tensor {name} {rows} {cols}");
        if header != want {
            return Err(err(n, format!("expected `{want}`, found `{header}`")));
        }
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..*rows {
            let (n, row) = lines.next().ok_or_else(|| err(0, format!("truncated tensor {name}")))?;
            let parsed = row
                .split(',')
                .map(|v| v.parse::<f64>().map_err(|_| err(n, format!("bad value `{v}`"))))
                .collect::<Result<Vec<_>>>()?;
            if parsed.len() != *cols {
                return Err(err(n, format!("expected {cols} values, found {}", parsed.len())));
            }
            data.extend(parsed);
        }
        values.push(data);
    }
    match lines.next() {
        Some((_, "end")) => {}
        other => return Err(err(0, format!("expected `end`, found {:?}", other.map(|o| o.1)))),
    }
    for (dst, src) in model.tensors_mut().into_iter().zip(values) {
        dst.copy_from_slice(&src);
    }
    Ok(model)
}

pub fn save_checkpoint(model: &PmimoLstm, path: &Path) -> Result<()> {
    std::fs::write(path, write_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<PmimoLstm> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(&text, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = LstmConfig {
            memory_length: 4,
            input_size: 3,
            hidden_sizes: vec![5, 2],
            dropout: 0.2,
            learning_rate: 1e-3,
        };
        let model = PmimoLstm::new(cfg, &mut rng).unwrap();
        let text = write_checkpoint(&model);
        let back = read_checkpoint(&text, Path::new("mem")).unwrap();
        assert_eq!(model, back);
    }

    #[test]
    fn rejects_bad_magic() {
        assert!(read_checkpoint("nope\n", Path::new("mem")).is_err());
    }
}
