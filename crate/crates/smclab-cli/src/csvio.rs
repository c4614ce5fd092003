//! CSV readers and writers.
//!
//! Dialect: comma separator, `.` decimal point, header row, LF line
//! endings, `NaN` literal for missing map cells. Floats render with
//! Rust's shortest round-trip formatting, so identical runs produce
//! byte-identical files.

use crate::error::CliError;
use smclab::harmonic_balance::SensitivityMap;
use smclab::sim::{SimTrace, WindowMetrics};
use smclab::sysid::FrfPoint;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

fn open_out(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::domain("io", format!("{}: {e}", path.display())))
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::domain("io", format!("{}: {e}", path.display()))
}

/// Reads a trace CSV with `t`, `u`, `y` columns (extra columns ignored).
pub fn read_uy_trace(path: &Path) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut lines = reader.lines();
    let header = lines
        .next()
        .ok_or_else(|| CliError::domain("parse", format!("{}: empty file", path.display())))?
        .map_err(|e| io_err(path, e))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let col_of = |name: &str| -> Result<usize, CliError> {
        cols.iter().position(|c| *c == name).ok_or_else(|| {
            CliError::domain(
                "parse",
                format!("{}: missing column {name:?} in header {header:?}", path.display()),
            )
        })
    };
    let (ui, yi) = (col_of("u")?, col_of("y")?);
    let mut u = Vec::new();
    let mut y = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let parse = |i: usize| -> Result<f64, CliError> {
            fields
                .get(i)
                .and_then(|f| f.trim().parse::<f64>().ok())
                .ok_or_else(|| {
                    CliError::domain(
                        "parse",
                        format!("{}: bad value on data row {}", path.display(), lineno + 1),
                    )
                })
        };
        u.push(parse(ui)?);
        y.push(parse(yi)?);
    }
    Ok((u, y))
}

/// Trace CSV with the fixed column order
/// `t,y,y_dot_red,u,d,e,saturated` (saturated as 0/1).
pub fn write_trace_csv(path: &Path, trace: &SimTrace) -> Result<(), CliError> {
    let mut w = open_out(path)?;
    let mut run = || -> std::io::Result<()> {
        writeln!(w, "t,y,y_dot_red,u,d,e,saturated")?;
        for i in 0..trace.t.len() {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                trace.t[i],
                trace.y[i],
                trace.y_dot_red[i],
                trace.u[i],
                trace.d[i],
                trace.e[i],
                u8::from(trace.saturated[i])
            )?;
        }
        w.flush()
    };
    run().map_err(|e| io_err(path, e))
}

/// Estimated frequency-response points.
pub fn write_frf_csv(path: &Path, points: &[FrfPoint]) -> Result<(), CliError> {
    let mut w = open_out(path)?;
    let mut run = || -> std::io::Result<()> {
        writeln!(w, "omega,magnitude,magnitude_dB,phase_deg")?;
        for p in points {
            writeln!(
                w,
                "{},{},{},{}",
                p.omega,
                p.magnitude,
                20.0 * p.magnitude.log10(),
                p.phase.to_degrees()
            )?;
        }
        w.flush()
    };
    run().map_err(|e| io_err(path, e))
}

/// Magnitude sweep of the PD and PID disturbance sensitivities. The
/// numerically located PID peak is appended as a final row flagged by the
/// `is_peak` column.
pub fn write_syd_sweep_csv(
    path: &Path,
    rows: &[(f64, f64, f64)],
    omega_max: f64,
    peak_db: f64,
) -> Result<(), CliError> {
    let mut w = open_out(path)?;
    let mut run = || -> std::io::Result<()> {
        writeln!(w, "omega,syd_pd_db,syd_pid_db,is_peak")?;
        for &(omega, pd_db, pid_db) in rows {
            writeln!(w, "{omega},{pd_db},{pid_db},0")?;
        }
        writeln!(w, "{omega_max},,{peak_db},1")?;
        w.flush()
    };
    run().map_err(|e| io_err(path, e))
}

/// Sensitivity map: header row of frequencies, first column of
/// amplitudes, body in dB with `NaN` for near-limit-cycle cells.
pub fn write_map_csv(path: &Path, map: &SensitivityMap) -> Result<(), CliError> {
    let mut w = open_out(path)?;
    let mut run = || -> std::io::Result<()> {
        write!(w, "A")?;
        for omega in &map.omega_grid {
            write!(w, ",{omega}")?;
        }
        writeln!(w)?;
        for (i, a) in map.a_grid.iter().enumerate() {
            write!(w, "{a}")?;
            for v in &map.magnitude_db[i] {
                if v.is_nan() {
                    write!(w, ",NaN")?;
                } else {
                    write!(w, ",{v}")?;
                }
            }
            writeln!(w)?;
        }
        w.flush()
    };
    run().map_err(|e| io_err(path, e))
}

/// Windowed comparison table for the chirp run.
pub fn write_compare_metrics_csv(
    path: &Path,
    pid: &[WindowMetrics],
    csmc: &[WindowMetrics],
    inst_freq: impl Fn(f64) -> f64,
    disturbance_amplitude: f64,
) -> Result<(), CliError> {
    let mut w = open_out(path)?;
    let att = |amp: f64| {
        if amp > 0.0 {
            (20.0 * (amp / disturbance_amplitude).log10()).max(-200.0)
        } else {
            -200.0
        }
    };
    let mut run = || -> std::io::Result<()> {
        writeln!(
            w,
            "t_center,omega_inst,pid_error_amplitude,csmc_error_amplitude,\
             pid_attenuation_db,csmc_attenuation_db,pid_control_amplitude,\
             csmc_control_amplitude,pid_control_rms_power,csmc_control_rms_power"
        )?;
        for (p, c) in pid.iter().zip(csmc) {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                p.t_center,
                inst_freq(p.t_center),
                p.error_amplitude,
                c.error_amplitude,
                att(p.error_amplitude),
                att(c.error_amplitude),
                p.control_amplitude,
                c.control_amplitude,
                p.control_rms_power,
                c.control_rms_power
            )?;
        }
        w.flush()
    };
    run().map_err(|e| io_err(path, e))
}
