//! Text checkpoint container.
//!
//! ```text
//! n2n-sdf-checkpoint 1
//! meta <key> <value...>          (zero or more)
//! encoding_levels <L>
//! activation <tanh|softplus>
//! layers <count>
//! layer <out> <in>
//! <in weights of row 0> ... one row per line, row-major
//! <out biases>
//! ```
//!
//! Values are written with Rust's shortest round-trip float formatting, so a
//! reload is bit-exact.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ndarray::{Array1, Array2};

use super::{Activation, Dense, NeuralSdf};
use crate::error::{Error, Result};

const MAGIC: &str = "n2n-sdf-checkpoint 1";

pub fn write_checkpoint(field: &NeuralSdf, meta: &BTreeMap<String, String>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MAGIC}");
    for (k, v) in meta {
        let _ = writeln!(s, "meta {k} {}", v.replace('\n', " "));
    }
    let _ = writeln!(s, "encoding_levels {}", field.encoding_levels());
    let _ = writeln!(s, "activation {}", field.activation());
    let _ = writeln!(s, "layers {}", field.layers().len());
    for layer in field.layers() {
        let _ = writeln!(s, "layer {} {}", layer.outputs(), layer.inputs());
        for row in layer.weight.rows() {
            push_values(&mut s, row.iter());
        }
        push_values(&mut s, layer.bias.iter());
    }
    s
}

fn push_values<'a>(s: &mut String, values: impl Iterator<Item = &'a f64>) {
    let mut first = true;
    for v in values {
        if !first {
            s.push(' ');
        }
        first = false;
        let _ = write!(s, "{v:?}");
    }
    s.push('\n');
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => Err(self.err("unexpected end of checkpoint")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Parse {
            path: None,
            line: self.line,
            msg: msg.into(),
        }
    }

    fn keyed(&mut self, key: &str) -> Result<&'a str> {
        let l = self.next()?;
        l.strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected `{key}`")))
    }

    fn numbers<T: std::str::FromStr>(&self, text: &str, expect: usize) -> Result<Vec<T>> {
        let v = text
            .split_whitespace()
            .map(|t| t.parse::<T>().map_err(|_| self.err(format!("bad number `{t}`"))))
            .collect::<Result<Vec<T>>>()?;
        if v.len() != expect {
            return Err(self.err(format!("expected {expect} values, got {}", v.len())));
        }
        Ok(v)
    }
}

/// Parses a checkpoint, returning the field and its metadata.
pub fn read_checkpoint(text: &str) -> Result<(NeuralSdf, BTreeMap<String, String>)> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    if lines.next()? != MAGIC {
        return Err(lines.err("not an n2n-sdf checkpoint"));
    }
    let mut meta = BTreeMap::new();
    let mut line = lines.next()?;
    while let Some(rest) = line.strip_prefix("meta ") {
        let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
        meta.insert(k.to_string(), v.to_string());
        line = lines.next()?;
    }
    let levels: usize = line
        .strip_prefix("encoding_levels ")
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| lines.err("expected `encoding_levels`"))?;
    let activation: Activation = lines
        .keyed("activation")?
        .parse()
        .map_err(|e: Error| lines.err(e.to_string()))?;
    let count_text = lines.keyed("layers")?;
    let count: usize = lines.numbers(count_text, 1)?[0];
    let mut layers = Vec::with_capacity(count);
    for _ in 0..count {
        let dims_text = lines.keyed("layer")?;
        let dims: Vec<usize> = lines.numbers(dims_text, 2)?;
        let (out, inp) = (dims[0], dims[1]);
        let mut w = Vec::with_capacity(out * inp);
        for _ in 0..out {
            let row = lines.next()?;
            w.extend(lines.numbers::<f64>(row, inp)?);
        }
        let bias_text = lines.next()?;
        let b = lines.numbers::<f64>(bias_text, out)?;
        layers.push(Dense {
            weight: Array2::from_shape_vec((out, inp), w).expect("sized above"),
            bias: Array1::from_vec(b),
        });
    }
    let field = NeuralSdf::from_layers(levels, activation, layers)?;
    Ok((field, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Architecture;

    #[test]
    fn bit_exact_round_trip() {
        let field = NeuralSdf::new(&Architecture::default(), 12);
        let mut meta = BTreeMap::new();
        meta.insert("seed".to_string(), "12".to_string());
        meta.insert("config_hash".to_string(), "abc123".to_string());
        let text = write_checkpoint(&field, &meta);
        let (back, meta_back) = read_checkpoint(&text).unwrap();
        assert_eq!(meta_back, meta);
        assert!(field.params().zip(back.params()).all(|(a, b)| a.to_bits() == b.to_bits()));
        assert_eq!(write_checkpoint(&back, &meta_back), text);
    }

    #[test]
    fn truncated_checkpoint_fails() {
        let field = NeuralSdf::new(&Architecture::default(), 1);
        let text = write_checkpoint(&field, &BTreeMap::new());
        let cut: String = text.lines().take(20).collect::<Vec<_>>().join("\n");
        assert!(read_checkpoint(&cut).is_err());
        assert!(read_checkpoint("hello\n").is_err());
    }
}
