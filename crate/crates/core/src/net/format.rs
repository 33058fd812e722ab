//! Plain-text networks, one layer per line:
//! `layer <activation> <noise-family> <noise-param> <rows> <cols> <weights row-major> <biases>`.

use std::fmt::Write as _;

use super::{ActivationKind, LayerParams, Network, NoiseSpec};
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

pub fn parse_network(text: &str) -> Result<Network> {
    let mut layers = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks[0] != "layer" || toks.len() < 6 {
            return Err(parse_err(line, "expected `layer <activation> <noise> <param> <rows> <cols> ...`"));
        }
        let activation: ActivationKind = toks[1].parse().map_err(|e: Error| parse_err(line, e.to_string()))?;
        let param: f64 = toks[3]
            .parse()
            .map_err(|_| parse_err(line, format!("invalid noise parameter `{}`", toks[3])))?;
        let noise = match toks[2] {
            "none" => NoiseSpec::None,
            "uniform" => NoiseSpec::Uniform { width: param },
            "gaussian" => NoiseSpec::Gaussian { std: param },
            other => return Err(parse_err(line, format!("unknown noise family `{other}`"))),
        };
        let rows: usize = toks[4]
            .parse()
            .map_err(|_| parse_err(line, format!("invalid row count `{}`", toks[4])))?;
        let cols: usize = toks[5]
            .parse()
            .map_err(|_| parse_err(line, format!("invalid column count `{}`", toks[5])))?;
        let values = toks[6..]
            .iter()
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|_| parse_err(line, format!("invalid number `{t}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != rows * cols + cols {
            return Err(parse_err(
                line,
                format!("expected {} numbers, found {}", rows * cols + cols, values.len()),
            ));
        }
        let weights = values[..rows * cols].chunks(cols).map(|c| c.to_vec()).collect();
        let biases = values[rows * cols..].to_vec();
        let layer = LayerParams::new(weights, biases, activation, noise)
            .map_err(|e| parse_err(line, e.to_string()))?;
        layers.push(layer);
    }
    Network::new(layers).map_err(|e| parse_err(0, e.to_string()))
}

pub fn to_network_text(net: &Network) -> String {
    let mut s = String::new();
    for l in net.layers() {
        write!(
            s,
            "layer {} {} {} {}",
            l.activation,
            l.noise,
            l.input_width(),
            l.output_width()
        )
        .unwrap();
        for v in l.weights.iter().flatten().chain(&l.biases) {
            write!(s, " {v}").unwrap();
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "layer relu none 0 1 2 1 1 -1.5 -1.75\nlayer identity gaussian 0.1 2 1 1 -1 0\n";
        let net = parse_network(text).unwrap();
        assert_eq!(net.layers().len(), 2);
        assert_eq!(net.layers()[1].noise, NoiseSpec::Gaussian { std: 0.1 });
        assert_eq!(parse_network(&to_network_text(&net)).unwrap(), net);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "layer relu none 0 1 1 1 0\nlayer relu none 0 1 1 1\n";
        assert!(matches!(parse_network(text), Err(Error::Parse { line: 2, .. })));
        let text = "# c\nlayer swish none 0 1 1 1 0\n";
        assert!(matches!(parse_network(text), Err(Error::Parse { line: 2, .. })));
    }
}
