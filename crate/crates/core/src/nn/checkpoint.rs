//! Text checkpoint format.
//!
//! ```text
//! mlp <layer count> <output activation>
//! layer <out> <in>
//! <row-major weights, one row per line>
//! <biases>
//! ...
//! ```
//!
//! Values are written in shortest round-trip form, so reading a checkpoint
//! back reproduces every parameter bit for bit.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2};

use super::{Activation, Dense, Mlp, NnError};

fn join(values: impl Iterator<Item = f64>) -> String {
    let mut line = String::new();
    for (i, v) in values.enumerate() {
        if i > 0 {
            line.push(' ');
        }
        write!(line, "{v:?}").unwrap();
    }
    line
}

impl Mlp {
    pub fn to_text(&self) -> String {
        let mut out = format!("mlp {} {}\n", self.layers().len(), self.output_activation().name());
        for layer in self.layers() {
            writeln!(out, "layer {} {}", layer.outputs(), layer.inputs()).unwrap();
            for row in layer.weight.rows() {
                out.push_str(&join(row.iter().copied()));
                out.push('\n');
            }
            out.push_str(&join(layer.bias.iter().copied()));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, NnError> {
        let bad = |msg: &str| NnError::Checkpoint(msg.to_string());
        let mut lines = text.lines();
        let header: Vec<&str> = lines.next().ok_or_else(|| bad("empty"))?.split_whitespace().collect();
        if header.len() != 3 || header[0] != "mlp" {
            return Err(bad("missing `mlp` header"));
        }
        let count: usize = header[1].parse().map_err(|_| bad("bad layer count"))?;
        let output = Activation::from_name(header[2]).ok_or_else(|| bad("unknown activation"))?;

        let parse_row = |line: Option<&str>, n: usize| -> Result<Vec<f64>, NnError> {
            let line = line.ok_or_else(|| bad("truncated"))?;
            let row = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| NnError::Checkpoint(format!("bad value: {e}")))?;
            if row.len() != n {
                return Err(NnError::Checkpoint(format!("expected {n} values, found {}", row.len())));
            }
            Ok(row)
        };

        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let dims: Vec<&str> = lines.next().ok_or_else(|| bad("truncated"))?.split_whitespace().collect();
            if dims.len() != 3 || dims[0] != "layer" {
                return Err(bad("missing `layer` line"));
            }
            let rows: usize = dims[1].parse().map_err(|_| bad("bad layer shape"))?;
            let cols: usize = dims[2].parse().map_err(|_| bad("bad layer shape"))?;
            let mut flat = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                flat.extend(parse_row(lines.next(), cols)?);
            }
            let weight = Array2::from_shape_vec((rows, cols), flat).map_err(|_| bad("bad layer shape"))?;
            let bias = Array1::from(parse_row(lines.next(), rows)?);
            layers.push(Dense { weight, bias });
        }
        Mlp::from_layers(layers, output)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), NnError> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, NnError> {
        Mlp::from_text(&std::fs::read_to_string(path)?)
    }
}
