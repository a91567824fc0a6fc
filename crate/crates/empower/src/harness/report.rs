//! Delimited-text outputs: metric series, heatmap tables, trajectories,
//! histograms, snapshots, key-value metadata, and plot scripts that render
//! the study figures from those files.
//!
//! Numbers are written with Rust's shortest round-trip float formatting, so
//! identical runs produce byte-identical files. Wall-clock information never
//! enters data files; it lives in the metadata file under `wall_time_ms`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::control::EpisodeRecord;
use crate::env::flock::HeadingHistogram;
use crate::error::{Error, Result};
use crate::game::EmpowermentReport;

use super::{FlockStudy, MetricSeries, Snapshot, SweepCell, SweepTable};

fn fmt(v: f64) -> String {
    format!("{v}")
}

fn writer(path: &Path) -> Result<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(io_err)
}

fn io_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::InvalidConfig(format!("csv error: {other:?}")),
    }
}

/// Writes `time, mean_empowerment, order_parameter` rows.
pub fn write_metric_series(path: &Path, series: &MetricSeries) -> Result<()> {
    if series.is_empty() {
        return Err(Error::EmptyInput("metric series has no rows"));
    }
    let mut w = writer(path)?;
    w.write_record(["time", "mean_empowerment", "order_parameter"])
        .map_err(io_err)?;
    for i in 0..series.len() {
        w.write_record([
            fmt(series.time[i]),
            fmt(series.mean_empowerment[i]),
            fmt(series.order_parameter[i]),
        ])
        .map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one row per sweep cell, keyed by the torque pair.
pub fn write_sweep_table(path: &Path, table: &SweepTable) -> Result<()> {
    if table.cells.is_empty() {
        return Err(Error::EmptyInput("sweep table has no cells"));
    }
    let mut w = writer(path)?;
    let mut header = vec!["tau_left".to_string(), "tau_right".to_string(), "outcome".into()];
    for a in 0..table.agents {
        header.push(format!("empowerment_final_{a}"));
    }
    for a in 0..table.agents {
        header.push(format!("empowerment_mean_{a}"));
    }
    header.push("error".into());
    w.write_record(&header).map_err(io_err)?;
    for cell in &table.cells {
        let mut row = vec![
            fmt(cell.tau_left),
            fmt(cell.tau_right),
            cell.outcome.map(|o| o.to_string()).unwrap_or_default(),
        ];
        for a in 0..table.agents {
            row.push(fmt(cell.final_empowerment[a]));
        }
        for a in 0..table.agents {
            row.push(fmt(cell.mean_empowerment[a]));
        }
        row.push(cell.error.clone().unwrap_or_default());
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a sweep table back from its CSV form.
pub fn read_sweep_table(path: &Path) -> Result<SweepTable> {
    let mut r = csv::Reader::from_path(path).map_err(io_err)?;
    let header = r.headers().map_err(io_err)?.clone();
    let agents = header
        .iter()
        .filter(|h| h.starts_with("empowerment_final_"))
        .count();
    let mut cells = Vec::new();
    for record in r.records() {
        let record = record.map_err(io_err)?;
        let get = |i: usize| -> Result<f64> {
            record
                .get(i)
                .ok_or_else(|| Error::InvalidConfig("short sweep row".into()))?
                .parse()
                .map_err(|e| Error::InvalidConfig(format!("bad float in sweep row: {e}")))
        };
        let outcome_str = record.get(2).unwrap_or_default();
        let outcome = if outcome_str.is_empty() {
            None
        } else {
            Some(outcome_str.parse()?)
        };
        let final_empowerment = (0..agents).map(|a| get(3 + a)).collect::<Result<_>>()?;
        let mean_empowerment = (0..agents)
            .map(|a| get(3 + agents + a))
            .collect::<Result<_>>()?;
        let error_str = record.get(3 + 2 * agents).unwrap_or_default();
        cells.push(SweepCell {
            tau_left: get(0)?,
            tau_right: get(1)?,
            outcome,
            final_empowerment,
            mean_empowerment,
            error: (!error_str.is_empty()).then(|| error_str.to_string()),
        });
    }
    Ok(SweepTable { cells, agents })
}

/// One row per timestep: time, per-agent state and action components,
/// per-agent empowerment, and the game diagnostics.
pub fn write_trajectory(path: &Path, episode: &EpisodeRecord) -> Result<()> {
    let first = episode
        .steps
        .first()
        .ok_or(Error::EmptyInput("episode has no steps"))?;
    let agents = first.state.num_agents();
    let d_x = first.state.state_dim();
    let d_u = first.action.action_dim();

    let mut w = writer(path)?;
    let mut header = vec!["time".to_string()];
    for a in 0..agents {
        for i in 0..d_x {
            header.push(format!("state_{a}_{i}"));
        }
    }
    for a in 0..agents {
        for i in 0..d_u {
            header.push(format!("action_{a}_{i}"));
        }
    }
    for a in 0..agents {
        header.push(format!("empowerment_{a}"));
    }
    header.extend(["sweeps".into(), "converged".into(), "residual".into()]);
    w.write_record(&header).map_err(io_err)?;

    for step in &episode.steps {
        let mut row = vec![fmt(step.time)];
        for a in 0..agents {
            for i in 0..d_x {
                row.push(fmt(step.state.agent(a)[i]));
            }
        }
        for a in 0..agents {
            for i in 0..d_u {
                row.push(fmt(step.action.agent(a)[i]));
            }
        }
        for a in 0..agents {
            row.push(fmt(step.empowerment[a]));
        }
        row.push(step.sweeps_used.to_string());
        row.push(step.converged.to_string());
        row.push(fmt(step.residual));
        w.write_record(&row).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Histogram rows: `bin_center, count`.
pub fn write_histogram(path: &Path, hist: &HeadingHistogram) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["bin_center", "count"]).map_err(io_err)?;
    for (c, n) in hist.centers.iter().zip(&hist.counts) {
        w.write_record([fmt(*c), n.to_string()]).map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Snapshot rows: `agent, x, y, heading`.
pub fn write_snapshot(path: &Path, snapshot: &Snapshot) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["agent", "x", "y", "heading"]).map_err(io_err)?;
    for (i, (x, y, t)) in snapshot.agents.iter().enumerate() {
        w.write_record([i.to_string(), fmt(*x), fmt(*y), fmt(*t)])
            .map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Stable-order `key = value` metadata file.
pub fn write_metadata(path: &Path, entries: &[(String, String)]) -> Result<()> {
    let mut out = fs::File::create(path)?;
    for (k, v) in entries {
        writeln!(out, "{k} = {v}")?;
    }
    Ok(())
}

/// Per-agent empowerment and diagnostics of a standalone game solve.
pub fn write_game_report(path: &Path, report: &EmpowermentReport) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["agent", "empowerment", "covariance_trace"])
        .map_err(io_err)?;
    for (a, (e, cov)) in report
        .empowerment
        .iter()
        .zip(&report.covariances)
        .enumerate()
    {
        w.write_record([a.to_string(), fmt(*e), fmt(cov.trace())])
            .map_err(io_err)?;
    }
    w.flush()?;
    Ok(())
}

/// What a run hands to [`emit_report`].
pub enum ReportBundle<'a> {
    Sweep(&'a SweepTable),
    Flock(&'a FlockStudy),
    Episode(&'a EpisodeRecord),
    Game(&'a EmpowermentReport),
}

/// Writes a bundle's data files into `out_dir` (created if missing) plus a
/// metadata file, and optionally plot scripts. Returns the paths written.
pub fn emit_report(
    out_dir: &Path,
    bundle: &ReportBundle,
    metadata: &[(String, String)],
    plot_scripts: bool,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &dyn Fn(&Path) -> Result<()>| -> Result<()> {
        let path = out_dir.join(name);
        f(&path)?;
        written.push(path);
        Ok(())
    };

    match bundle {
        ReportBundle::Sweep(table) => {
            emit("sweep.csv", &|p| write_sweep_table(p, table))?;
        }
        ReportBundle::Flock(study) => {
            emit("series.csv", &|p| write_metric_series(p, &study.series))?;
            emit("trajectory.csv", &|p| write_trajectory(p, &study.episode))?;
            for snapshot in &study.snapshots {
                let name = format!("snapshot_{:05}.csv", snapshot.step);
                let path = out_dir.join(&name);
                write_snapshot(&path, snapshot)?;
                written.push(path);
            }
            for (step, hist) in &study.histograms {
                let name = format!("histogram_{step:05}.csv");
                let path = out_dir.join(&name);
                write_histogram(&path, hist)?;
                written.push(path);
            }
        }
        ReportBundle::Episode(episode) => {
            emit("trajectory.csv", &|p| write_trajectory(p, episode))?;
        }
        ReportBundle::Game(report) => {
            emit("game.csv", &|p| write_game_report(p, report))?;
        }
    }

    let meta_path = out_dir.join("run.meta");
    write_metadata(&meta_path, metadata)?;
    written.push(meta_path);

    if plot_scripts {
        written.extend(write_plot_scripts(out_dir)?);
    }
    Ok(written)
}

/// Drops small matplotlib scripts next to the data so the study figures can
/// be rendered with `python3 plot_*.py`.
pub fn write_plot_scripts(out_dir: &Path) -> Result<Vec<PathBuf>> {
    let heatmap = r#"#!/usr/bin/env python3
"""Render the torque-sweep heatmap from sweep.csv."""
import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("sweep.csv")))
taus_l = sorted({float(r["tau_left"]) for r in rows})
taus_r = sorted({float(r["tau_right"]) for r in rows})
colors = {"LeftUp": 0, "RightUp": 1, "BothUp": 2, "NeitherUp": 3, "": 3}
grid = [[3] * len(taus_r) for _ in taus_l]
for r in rows:
    i = taus_l.index(float(r["tau_left"]))
    j = taus_r.index(float(r["tau_right"]))
    grid[i][j] = colors[r["outcome"]]
plt.imshow(grid, origin="lower", cmap="viridis",
           extent=[min(taus_r), max(taus_r), min(taus_l), max(taus_l)],
           aspect="auto")
plt.xlabel("right torque bound")
plt.ylabel("left torque bound")
plt.title("outcomes (0=LeftUp 1=RightUp 2=BothUp 3=NeitherUp)")
plt.colorbar()
plt.savefig("sweep.png", dpi=150)
"#;
    let series = r#"#!/usr/bin/env python3
"""Render order parameter and mean empowerment from series.csv."""
import csv
import matplotlib.pyplot as plt

rows = list(csv.DictReader(open("series.csv")))
t = [float(r["time"]) for r in rows]
fig, (a, b) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
a.plot(t, [float(r["mean_empowerment"]) for r in rows])
a.set_ylabel("mean empowerment (nats)")
b.plot(t, [float(r["order_parameter"]) for r in rows])
b.set_ylabel("order parameter")
b.set_ylim(0, 1.05)
b.set_xlabel("time (s)")
fig.savefig("series.png", dpi=150)
"#;
    let mut written = Vec::new();
    for (name, body) in [("plot_sweep.py", heatmap), ("plot_series.py", series)] {
        let path = out_dir.join(name);
        fs::write(&path, body)?;
        written.push(path);
    }
    Ok(written)
}
