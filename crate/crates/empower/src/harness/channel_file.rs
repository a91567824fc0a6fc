//! Plain-text game description for the standalone `channel` subcommand.
//!
//! The format is line-oriented with an explicit dimensions header, `#`
//! comments, and whitespace-separated numbers:
//!
//! ```text
//! # two coupled scalar agents
//! agents 2
//! state_dim 1
//! input_cols 2 2
//! output_dims 1 1
//! budgets 1.0 2.0
//! tolerance 1e-6
//! max_sweeps 200
//! sensor 0
//! 1
//! noise 0
//! 0.01
//! block 0 0
//! 1 0.5
//! block 0 1
//! 0.2 0
//! ...
//! ```
//!
//! Every `sensor k` is `output_dims[k] × state_dim`, every `noise k` is
//! `output_dims[k] × output_dims[k]`, and every `block n m` is
//! `state_dim × input_cols[m]`, one matrix row per line. All sensors, noises,
//! and N×N blocks must be present.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::channel::{NoiseCovariance, PowerBudget};
use crate::error::{Error, Result};
use crate::game::{GameConfig, SensitivityMatrix, SensorMatrix};

fn fail(line: usize, message: impl Into<String>) -> Error {
    Error::ChannelFileFormat {
        line,
        message: message.into(),
    }
}

struct Lines<'a> {
    tokens: Vec<(usize, Vec<&'a str>)>,
    cursor: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let tokens = text
            .lines()
            .enumerate()
            .filter_map(|(i, raw)| {
                let body = raw.split('#').next().unwrap_or("").trim();
                if body.is_empty() {
                    None
                } else {
                    Some((i + 1, body.split_whitespace().collect()))
                }
            })
            .collect();
        Lines { tokens, cursor: 0 }
    }

    fn next(&mut self) -> Option<&(usize, Vec<&'a str>)> {
        let item = self.tokens.get(self.cursor);
        if item.is_some() {
            self.cursor += 1;
        }
        item
    }
}

fn parse_values<T: std::str::FromStr>(line: usize, tokens: &[&str]) -> Result<Vec<T>> {
    tokens
        .iter()
        .map(|t| {
            t.parse::<T>()
                .map_err(|_| fail(line, format!("cannot parse {t:?}")))
        })
        .collect()
}

fn read_matrix(lines: &mut Lines, rows: usize, cols: usize, what: &str) -> Result<DMatrix<f64>> {
    let mut m = DMatrix::zeros(rows, cols);
    for r in 0..rows {
        let (line, tokens) = lines
            .next()
            .ok_or_else(|| fail(0, format!("{what}: missing row {r}")))?
            .clone();
        let values: Vec<f64> = parse_values(line, &tokens)?;
        if values.len() != cols {
            return Err(fail(
                line,
                format!("{what}: row {r} has {} values, expected {cols}", values.len()),
            ));
        }
        for (c, v) in values.into_iter().enumerate() {
            m[(r, c)] = v;
        }
    }
    Ok(m)
}

/// Parses a channel file into the sensitivity blocks and the game config.
pub fn read_channel_file(path: &Path) -> Result<(SensitivityMatrix, GameConfig)> {
    let text = std::fs::read_to_string(path)?;
    parse_channel_text(&text)
}

pub(crate) fn parse_channel_text(text: &str) -> Result<(SensitivityMatrix, GameConfig)> {
    let mut lines = Lines::new(text);

    let mut agents = None;
    let mut state_dim = None;
    let mut input_cols: Option<Vec<usize>> = None;
    let mut output_dims: Option<Vec<usize>> = None;
    let mut budgets: Option<Vec<f64>> = None;
    let mut tolerance = 1e-6;
    let mut max_sweeps = 200usize;
    let mut sensors: Vec<Option<SensorMatrix>> = Vec::new();
    let mut noises: Vec<Option<NoiseCovariance>> = Vec::new();
    let mut blocks: Vec<Vec<Option<DMatrix<f64>>>> = Vec::new();

    while let Some((line, tokens)) = lines.next().cloned() {
        let keyword = tokens[0];
        let args = &tokens[1..];
        match keyword {
            "agents" => {
                let v: Vec<usize> = parse_values(line, args)?;
                let n = *v.first().ok_or_else(|| fail(line, "agents needs a count"))?;
                if n == 0 {
                    return Err(fail(line, "agents must be ≥ 1"));
                }
                agents = Some(n);
                sensors = vec![None; n];
                noises = vec![None; n];
                blocks = (0..n).map(|_| vec![None; n]).collect();
            }
            "state_dim" => {
                let v: Vec<usize> = parse_values(line, args)?;
                state_dim = Some(*v.first().ok_or_else(|| fail(line, "state_dim needs a value"))?);
            }
            "input_cols" => {
                input_cols = Some(parse_values(line, args)?);
            }
            "output_dims" => {
                output_dims = Some(parse_values(line, args)?);
            }
            "budgets" => {
                budgets = Some(parse_values(line, args)?);
            }
            "tolerance" => {
                let v: Vec<f64> = parse_values(line, args)?;
                tolerance = *v.first().ok_or_else(|| fail(line, "tolerance needs a value"))?;
            }
            "max_sweeps" => {
                let v: Vec<usize> = parse_values(line, args)?;
                max_sweeps = *v.first().ok_or_else(|| fail(line, "max_sweeps needs a value"))?;
            }
            "sensor" | "noise" | "block" => {
                let n = agents.ok_or_else(|| fail(line, "dimensions header must come first"))?;
                let d_x = state_dim.ok_or_else(|| fail(line, "state_dim must come first"))?;
                let cols = input_cols
                    .as_ref()
                    .ok_or_else(|| fail(line, "input_cols must come first"))?;
                let outs = output_dims
                    .as_ref()
                    .ok_or_else(|| fail(line, "output_dims must come first"))?;
                if cols.len() != n || outs.len() != n {
                    return Err(fail(line, "per-agent dimension lists must have `agents` entries"));
                }
                let idx: Vec<usize> = parse_values(line, args)?;
                match keyword {
                    "sensor" => {
                        let a = *idx.first().ok_or_else(|| fail(line, "sensor needs an agent"))?;
                        if a >= n {
                            return Err(fail(line, format!("sensor agent {a} out of range")));
                        }
                        let m = read_matrix(&mut lines, outs[a], d_x, "sensor")?;
                        sensors[a] = Some(SensorMatrix::new(m)?);
                    }
                    "noise" => {
                        let a = *idx.first().ok_or_else(|| fail(line, "noise needs an agent"))?;
                        if a >= n {
                            return Err(fail(line, format!("noise agent {a} out of range")));
                        }
                        let m = read_matrix(&mut lines, outs[a], outs[a], "noise")?;
                        noises[a] = Some(NoiseCovariance::new(m)?);
                    }
                    _ => {
                        if idx.len() < 2 {
                            return Err(fail(line, "block needs two agent indices"));
                        }
                        let (bn, bm) = (idx[0], idx[1]);
                        if bn >= n || bm >= n {
                            return Err(fail(line, format!("block ({bn},{bm}) out of range")));
                        }
                        blocks[bn][bm] = Some(read_matrix(&mut lines, d_x, cols[bm], "block")?);
                    }
                }
            }
            other => return Err(fail(line, format!("unknown keyword {other:?}"))),
        }
    }

    let n = agents.ok_or_else(|| fail(0, "missing `agents`"))?;
    let budgets = budgets.ok_or_else(|| fail(0, "missing `budgets`"))?;
    if budgets.len() != n {
        return Err(fail(0, format!("{} budgets for {n} agents", budgets.len())));
    }
    let sensors: Vec<SensorMatrix> = sensors
        .into_iter()
        .enumerate()
        .map(|(a, s)| s.ok_or_else(|| fail(0, format!("missing `sensor {a}`"))))
        .collect::<Result<_>>()?;
    let noises: Vec<NoiseCovariance> = noises
        .into_iter()
        .enumerate()
        .map(|(a, s)| s.ok_or_else(|| fail(0, format!("missing `noise {a}`"))))
        .collect::<Result<_>>()?;
    let blocks: Vec<Vec<DMatrix<f64>>> = blocks
        .into_iter()
        .enumerate()
        .map(|(bn, row)| {
            row.into_iter()
                .enumerate()
                .map(|(bm, b)| b.ok_or_else(|| fail(0, format!("missing `block {bn} {bm}`"))))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;

    let sensitivity = SensitivityMatrix::new(blocks)?;
    let config = GameConfig::new(
        budgets
            .into_iter()
            .map(PowerBudget::new)
            .collect::<Result<_>>()?,
        noises,
        sensors,
        tolerance,
        max_sweeps,
    )?;
    Ok((sensitivity, config))
}

fn push_matrix(out: &mut String, m: &DMatrix<f64>) {
    for r in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|c| format!("{}", m[(r, c)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

/// Serializes a game description in the channel-file format.
pub fn write_channel_file(
    path: &Path,
    sensitivity: &SensitivityMatrix,
    config: &GameConfig,
) -> Result<()> {
    let n = sensitivity.num_agents();
    let mut out = String::new();
    let _ = writeln!(out, "agents {n}");
    let _ = writeln!(out, "state_dim {}", sensitivity.state_dim());
    let cols: Vec<String> = (0..n).map(|m| sensitivity.input_cols(m).to_string()).collect();
    let _ = writeln!(out, "input_cols {}", cols.join(" "));
    let outs: Vec<String> = config
        .sensors
        .iter()
        .map(|s| s.output_dim().to_string())
        .collect();
    let _ = writeln!(out, "output_dims {}", outs.join(" "));
    let budgets: Vec<String> = config.budgets.iter().map(|b| format!("{}", b.value())).collect();
    let _ = writeln!(out, "budgets {}", budgets.join(" "));
    let _ = writeln!(out, "tolerance {}", config.tolerance);
    let _ = writeln!(out, "max_sweeps {}", config.max_sweeps);
    for (a, sensor) in config.sensors.iter().enumerate() {
        let _ = writeln!(out, "sensor {a}");
        push_matrix(&mut out, sensor.matrix());
    }
    for (a, noise) in config.sensor_noise.iter().enumerate() {
        let _ = writeln!(out, "noise {a}");
        push_matrix(&mut out, noise.matrix());
    }
    for bn in 0..n {
        for bm in 0..n {
            let _ = writeln!(out, "block {bn} {bm}");
            push_matrix(&mut out, sensitivity.block(bn, bm));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}
