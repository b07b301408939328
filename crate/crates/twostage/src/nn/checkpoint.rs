//! Versioned text checkpoints for an actor-critic pair.
//!
//! Floats are written with Rust's shortest round-trip formatting, so a
//! save/load cycle reproduces every parameter bit-for-bit. The reader is
//! strict: unknown versions and malformed records are errors, with line
//! numbers where that helps.

use std::fs;
use std::path::Path;

use thiserror::Error;

use super::gaussian::GaussianPolicy;
use super::mlp::{MlpParams, MlpSpec};

const FORMAT_TAG: &str = "twostage-checkpoint";
const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported checkpoint header `{0}`")]
    UnsupportedVersion(String),
    #[error("checkpoint line {line}: {message}")]
    Format { line: usize, message: String },
}

/// Everything needed to resume or evaluate a trained agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub policy: GaussianPolicy,
    pub value: MlpParams,
}

pub fn save_checkpoint(path: &Path, checkpoint: &Checkpoint) -> Result<(), CheckpointError> {
    let mut out = String::new();
    out.push_str(&format!("{FORMAT_TAG} v{FORMAT_VERSION}\n"));
    write_spec(&mut out, "policy.spec", &checkpoint.policy.mean_net.spec);
    write_floats(&mut out, "policy.log_std", &checkpoint.policy.log_std);
    write_layers(&mut out, "policy", &checkpoint.policy.mean_net);
    write_spec(&mut out, "value.spec", &checkpoint.value.spec);
    write_layers(&mut out, "value", &checkpoint.value);
    fs::write(path, out)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| format_err(1, "empty checkpoint"))?;
    if header != format!("{FORMAT_TAG} v{FORMAT_VERSION}") {
        return Err(CheckpointError::UnsupportedVersion(header.to_string()));
    }

    let policy_spec = read_spec(&mut lines, "policy.spec")?;
    let log_std = read_floats(&mut lines, "policy.log_std")?;
    if log_std.len() != policy_spec.output_dim() {
        return Err(format_err(
            0,
            &format!(
                "log_std has {} entries, policy outputs {}",
                log_std.len(),
                policy_spec.output_dim()
            ),
        ));
    }
    let mean_net = read_layers(&mut lines, "policy", &policy_spec)?;
    let value_spec = read_spec(&mut lines, "value.spec")?;
    let value = read_layers(&mut lines, "value", &value_spec)?;

    Ok(Checkpoint {
        policy: GaussianPolicy { mean_net, log_std },
        value,
    })
}

fn write_spec(out: &mut String, key: &str, spec: &MlpSpec) {
    out.push_str(key);
    out.push(':');
    for n in &spec.layer_sizes {
        out.push_str(&format!(" {n}"));
    }
    out.push('\n');
}

fn write_floats(out: &mut String, key: &str, values: &[f64]) {
    out.push_str(key);
    out.push(':');
    for v in values {
        out.push_str(&format!(" {v}"));
    }
    out.push('\n');
}

fn write_layers(out: &mut String, prefix: &str, net: &MlpParams) {
    for (i, layer) in net.layers.iter().enumerate() {
        write_floats(out, &format!("{prefix}.layer{i}.weights"), &layer.weights);
        write_floats(out, &format!("{prefix}.layer{i}.biases"), &layer.biases);
    }
}

fn format_err(line: usize, message: &str) -> CheckpointError {
    CheckpointError::Format {
        line,
        message: message.to_string(),
    }
}

type Lines<'a> = std::iter::Enumerate<std::str::Lines<'a>>;

fn read_keyed_line<'a>(lines: &mut Lines<'a>, key: &str) -> Result<(usize, &'a str), CheckpointError> {
    let (idx, line) = lines
        .next()
        .ok_or_else(|| format_err(0, &format!("missing record `{key}`")))?;
    let line_no = idx + 1;
    let rest = line
        .strip_prefix(key)
        .and_then(|r| r.strip_prefix(':'))
        .ok_or_else(|| format_err(line_no, &format!("expected record `{key}`")))?;
    Ok((line_no, rest))
}

fn read_spec(lines: &mut Lines, key: &str) -> Result<MlpSpec, CheckpointError> {
    let (line_no, rest) = read_keyed_line(lines, key)?;
    let sizes: Result<Vec<usize>, _> = rest.split_whitespace().map(str::parse).collect();
    let sizes = sizes.map_err(|e| format_err(line_no, &format!("bad layer size: {e}")))?;
    MlpSpec::new(sizes).map_err(|e| format_err(line_no, &e.to_string()))
}

fn read_floats(lines: &mut Lines, key: &str) -> Result<Vec<f64>, CheckpointError> {
    let (line_no, rest) = read_keyed_line(lines, key)?;
    rest.split_whitespace()
        .map(|tok| {
            tok.parse::<f64>()
                .map_err(|e| format_err(line_no, &format!("bad float `{tok}`: {e}")))
        })
        .collect()
}

fn read_layers(lines: &mut Lines, prefix: &str, spec: &MlpSpec) -> Result<MlpParams, CheckpointError> {
    let mut net = MlpParams::init(spec, 0);
    for i in 0..spec.num_layers() {
        let weights = read_floats(lines, &format!("{prefix}.layer{i}.weights"))?;
        let biases = read_floats(lines, &format!("{prefix}.layer{i}.biases"))?;
        let (out_dim, in_dim) = (spec.layer_sizes[i + 1], spec.layer_sizes[i]);
        if weights.len() != out_dim * in_dim {
            return Err(format_err(
                0,
                &format!(
                    "{prefix}.layer{i}.weights has {} values, expected {}",
                    weights.len(),
                    out_dim * in_dim
                ),
            ));
        }
        if biases.len() != out_dim {
            return Err(format_err(
                0,
                &format!(
                    "{prefix}.layer{i}.biases has {} values, expected {}",
                    biases.len(),
                    out_dim
                ),
            ));
        }
        net.layers[i].weights = weights;
        net.layers[i].biases = biases;
    }
    Ok(net)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn arbitrary_checkpoint(seed: u64) -> Checkpoint {
        let policy_spec = MlpSpec::new(vec![7, 16, 16, 3]).unwrap();
        let value_spec = MlpSpec::new(vec![7, 16, 16, 1]).unwrap();
        let mut policy = GaussianPolicy::new(MlpParams::init(&policy_spec, seed), -1.0);
        // Make the values less tidy than fresh init output.
        policy.log_std = vec![-1.0, 0.123456789012345, -4.99];
        Checkpoint {
            policy,
            value: MlpParams::init(&value_spec, seed.wrapping_add(1)),
        }
    }

    fn all_bits(c: &Checkpoint) -> Vec<u64> {
        let mut bits = Vec::new();
        for l in c.policy.mean_net.layers.iter().chain(&c.value.layers) {
            bits.extend(l.weights.iter().map(|w| w.to_bits()));
            bits.extend(l.biases.iter().map(|b| b.to_bits()));
        }
        bits.extend(c.policy.log_std.iter().map(|v| v.to_bits()));
        bits
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("agent.ckpt");
        let original = arbitrary_checkpoint(99);
        save_checkpoint(&path, &original).unwrap();
        let loaded = load_checkpoint(&path).unwrap();
        assert_eq!(all_bits(&original), all_bits(&loaded));
        assert_eq!(original.policy.mean_net.spec, loaded.policy.mean_net.spec);
    }

    #[test]
    fn unknown_version_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("agent.ckpt");
        std::fs::write(&path, "twostage-checkpoint v999\n").unwrap();
        match load_checkpoint(&path) {
            Err(CheckpointError::UnsupportedVersion(v)) => {
                assert!(v.contains("v999"));
            }
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn malformed_float_reports_line() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("agent.ckpt");
        let original = arbitrary_checkpoint(3);
        save_checkpoint(&path, &original).unwrap();
        let mangled = std::fs::read_to_string(&path)
            .unwrap()
            .replacen("policy.log_std:", "policy.log_std: oops", 1);
        std::fs::write(&path, mangled).unwrap();
        match load_checkpoint(&path) {
            Err(CheckpointError::Format { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("oops"));
            }
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn truncated_file_is_an_error() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("agent.ckpt");
        let original = arbitrary_checkpoint(5);
        save_checkpoint(&path, &original).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let cut: String = text.lines().take(4).map(|l| format!("{l}\n")).collect();
        std::fs::write(&path, cut).unwrap();
        assert!(load_checkpoint(&path).is_err());
    }
}
