//! Plain-text model files.
//!
//! ```text
//! courtside-net 1
//! input 2
//! layer 16 relu 0.3 0.0001
//! layer 1 sigmoid 0.3 0.0001
//! weights 0
//! <16 lines of 2 values>
//! bias 0
//! <16 values>
//! weights 1
//! ...
//! ```

use std::io::{BufRead, Write};

use super::{Dense, LayerSpec, NetError, Network};

const MAGIC: &str = "courtside-net 1";

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(" ")
}

pub fn save_network<W: Write>(net: &Network, mut w: W) -> Result<(), NetError> {
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "input {}", net.input_dim())?;
    for l in net.layers() {
        let s = l.spec;
        writeln!(w, "layer {} {} {} {}", s.units, s.activation, s.dropout_rate, s.l2_lambda)?;
    }
    for (i, l) in net.layers().iter().enumerate() {
        writeln!(w, "weights {i}")?;
        for row in l.weights.chunks_exact(l.inputs) {
            writeln!(w, "{}", join(row))?;
        }
        writeln!(w, "bias {i}")?;
        writeln!(w, "{}", join(&l.bias))?;
    }
    Ok(())
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn next(&mut self) -> Result<String, NetError> {
        self.line += 1;
        match self.inner.next() {
            Some(l) => Ok(l?.trim().to_string()),
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, message: impl Into<String>) -> NetError {
        NetError::Parse {
            line: self.line,
            message: message.into(),
        }
    }

    fn numbers(&mut self, expected: usize) -> Result<Vec<f64>, NetError> {
        let text = self.next()?;
        let values = text
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| self.err(format!("bad number: {e}")))?;
        if values.len() != expected {
            return Err(self.err(format!("expected {expected} values, found {}", values.len())));
        }
        Ok(values)
    }

    fn keyword(&mut self, word: &str) -> Result<Vec<String>, NetError> {
        let text = self.next()?;
        let mut parts = text.split_whitespace();
        if parts.next() != Some(word) {
            return Err(self.err(format!("expected `{word}`")));
        }
        Ok(parts.map(String::from).collect())
    }
}

pub fn load_network<R: BufRead>(reader: R) -> Result<Network, NetError> {
    let mut lines = Lines {
        inner: reader.lines(),
        line: 0,
    };
    if lines.next()? != MAGIC {
        return Err(lines.err("not a courtside network file"));
    }
    let input: usize = lines.keyword("input")?
        .first()
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| lines.err("bad input width"))?;

    let mut specs = Vec::new();
    loop {
        let text = lines.next()?;
        let parts: Vec<&str> = text.split_whitespace().collect();
        match parts.as_slice() {
            ["layer", units, act, rate, l2] => {
                let parsed = (|| {
                    Some(LayerSpec {
                        units: units.parse().ok()?,
                        activation: act.parse().ok()?,
                        dropout_rate: rate.parse().ok()?,
                        l2_lambda: l2.parse().ok()?,
                    })
                })();
                specs.push(parsed.ok_or_else(|| lines.err("bad layer line"))?);
            }
            ["weights", "0"] if !specs.is_empty() => break,
            _ => return Err(lines.err("expected `layer` or `weights 0`")),
        }
    }

    let mut layers = Vec::with_capacity(specs.len());
    let mut inputs = input;
    for (i, spec) in specs.into_iter().enumerate() {
        if i > 0 {
            lines.keyword("weights")?;
        }
        let mut weights = Vec::with_capacity(spec.units * inputs);
        for _ in 0..spec.units {
            weights.extend(lines.numbers(inputs)?);
        }
        lines.keyword("bias")?;
        let bias = lines.numbers(spec.units)?;
        layers.push(Dense {
            spec,
            inputs,
            weights,
            bias,
        });
        inputs = spec.units;
    }
    Network::from_layers(input, layers)
}
