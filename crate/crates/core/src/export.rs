//! CSV writers for simulation and study outputs.
//!
//! All files are UTF-8 with a header row, `,` separators and `\n` line
//! terminators. Floating-point values are written in scientific notation with
//! 17 significant digits (`{:.16e}`), which round-trips every `f64`. Integer
//! columns are plain decimal.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fluctuation::{FluctuationSample, LimitCovariance};
use crate::model::{apply_event, PopulationState};
use crate::ode::OdeSolution;
use crate::sim::Trajectory;
use crate::stats::{NormalityReport, ScalingPoint};

/// Format a float the way every CSV column does.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn row<W: Write>(out: &mut W, cells: &[String]) -> std::io::Result<()> {
    out.write_all(cells.join(",").as_bytes())?;
    out.write_all(b"\n")
}

/// `t,kind,s,i,r`: one row per event with the post-event state.
pub fn write_event_log<W: Write>(out: &mut W, traj: &Trajectory) -> Result<()> {
    let events = traj.events.as_ref().ok_or(Error::MissingEventLog)?;
    let io = |e| Error::io("<event log>", e);
    row(out, &["t", "kind", "s", "i", "r"].map(String::from)).map_err(io)?;
    let mut state = traj.initial;
    for ev in events {
        state = apply_event(state, ev.kind)?;
        row(
            out,
            &[
                fmt_f64(ev.t),
                ev.kind.as_str().to_string(),
                state.s.to_string(),
                state.i.to_string(),
                state.r.to_string(),
            ],
        )
        .map_err(io)?;
    }
    Ok(())
}

/// `t,s,i,r,x,y,z` where `(x, y, z) = (S, I, R) / T`.
pub fn write_grid<W, I>(out: &mut W, grid: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (f64, PopulationState)>,
{
    row(out, &["t", "s", "i", "r", "x", "y", "z"].map(String::from))?;
    for (t, state) in grid {
        let f = state.fractions();
        row(
            out,
            &[
                fmt_f64(t),
                state.s.to_string(),
                state.i.to_string(),
                state.r.to_string(),
                fmt_f64(f.x),
                fmt_f64(f.y),
                fmt_f64(f.z),
            ],
        )?;
    }
    Ok(())
}

/// `t,x,y,z`, optionally thinned to every `stride`-th step (the last point is always kept).
pub fn write_ode<W: Write>(out: &mut W, ode: &OdeSolution, stride: usize) -> std::io::Result<()> {
    let stride = stride.max(1);
    let last = ode.len().saturating_sub(1);
    row(out, &["t", "x", "y", "z"].map(String::from))?;
    for (k, (t, s)) in ode.iter().enumerate() {
        if k % stride == 0 || k == last {
            row(out, &[fmt_f64(t), fmt_f64(s.x), fmt_f64(s.y), fmt_f64(s.z)])?;
        }
    }
    Ok(())
}

/// `t,s11,s12,s13,s22,s23,s33`.
pub fn write_sigma<W: Write>(out: &mut W, sigma: &LimitCovariance, stride: usize) -> std::io::Result<()> {
    let stride = stride.max(1);
    let last = sigma.times.len().saturating_sub(1);
    row(out, &["t", "s11", "s12", "s13", "s22", "s23", "s33"].map(String::from))?;
    for (k, (t, m)) in sigma.times.iter().zip(&sigma.sigma).enumerate() {
        if k % stride == 0 || k == last {
            let mut cells = vec![fmt_f64(*t)];
            cells.extend(m.upper().iter().map(|v| fmt_f64(*v)));
            row(out, &cells)?;
        }
    }
    Ok(())
}

/// `run_index,t,w1,w2,w3`; `samples[i]` belongs to run `i`.
pub fn write_w_samples<W: Write>(out: &mut W, samples: &[FluctuationSample]) -> std::io::Result<()> {
    row(out, &["run_index", "t", "w1", "w2", "w3"].map(String::from))?;
    for (i, s) in samples.iter().enumerate() {
        row(
            out,
            &[i.to_string(), fmt_f64(s.t), fmt_f64(s.w[0]), fmt_f64(s.w[1]), fmt_f64(s.w[2])],
        )?;
    }
    Ok(())
}

/// `n,sigma_i,f_i,ratio`.
pub fn write_scaling<W: Write>(out: &mut W, points: &[ScalingPoint]) -> std::io::Result<()> {
    row(out, &["n", "sigma_i", "f_i", "ratio"].map(String::from))?;
    for p in points {
        row(out, &[p.n.to_string(), fmt_f64(p.sigma_i), fmt_f64(p.f_i), fmt_f64(p.ratio)])?;
    }
    Ok(())
}

/// `left,right,count,density,fitted_pdf,theory_pdf`.
pub fn write_histogram<W: Write>(out: &mut W, report: &NormalityReport) -> std::io::Result<()> {
    row(
        out,
        &["left", "right", "count", "density", "fitted_pdf", "theory_pdf"].map(String::from),
    )?;
    for r in report.histogram_rows() {
        row(
            out,
            &[
                fmt_f64(r[0]),
                fmt_f64(r[1]),
                (r[2] as u64).to_string(),
                fmt_f64(r[3]),
                fmt_f64(r[4]),
                fmt_f64(r[5]),
            ],
        )?;
    }
    Ok(())
}

/// Create `path` and hand a buffered writer to `f`.
pub fn write_file<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<()>,
{
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    f(&mut out)?;
    out.flush().map_err(|e| Error::io(path, e))
}

/// Like [`write_file`] for writers that only fail on I/O.
pub fn write_file_io<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    write_file(path, |out| f(out).map_err(|e| Error::io(path, e)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EventKind, FractionState, ModelParams};
    use crate::ode::integrate;
    use crate::sim::{Event, StopTimes};

    fn text(f: impl FnOnce(&mut Vec<u8>)) -> String {
        let mut buf = Vec::new();
        f(&mut buf);
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn float_format_round_trips() {
        for v in [0.0, 1.0, -2.5e-300, 0.1 + 0.2, std::f64::consts::PI, 1e300] {
            let s = fmt_f64(v);
            assert_eq!(s.parse::<f64>().unwrap(), v, "{s}");
        }
        assert_eq!(fmt_f64(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn event_log_layout() {
        let traj = Trajectory {
            initial: PopulationState::new(5, 3, 2),
            n_scale: 10,
            t_end: 1.0,
            events: Some(vec![
                Event { t: 0.25, kind: EventKind::Infection },
                Event { t: 0.5, kind: EventKind::RecoveredDeath },
            ]),
            grid: None,
            final_state: PopulationState::new(4, 4, 1),
            event_count: 2,
            rejected_proposals: 0,
            drift_integral: [0.0; 3],
            stop_times: StopTimes::default(),
        };
        let s = text(|b| write_event_log(b, &traj).unwrap());
        assert_eq!(
            s,
            "t,kind,s,i,r\n\
             2.5000000000000000e-1,infection,4,4,2\n\
             5.0000000000000000e-1,recovered_death,4,4,1\n"
        );
    }

    #[test]
    fn grid_layout() {
        let grid = [(0.0, PopulationState::new(3, 1, 0))];
        let s = text(|b| write_grid(b, grid).unwrap());
        assert_eq!(
            s,
            "t,s,i,r,x,y,z\n0.0000000000000000e0,3,1,0,7.5000000000000000e-1,2.5000000000000000e-1,0.0000000000000000e0\n"
        );
    }

    #[test]
    fn ode_stride_keeps_endpoints() {
        let p = ModelParams::seasonal_default(1);
        let ode = integrate(&p, FractionState::new(0.92, 0.08, 0.0), 0.0105, 1e-3).unwrap();
        let s = text(|b| write_ode(b, &ode, 5).unwrap());
        let lines: Vec<&str> = s.lines().collect();
        // header, k = 0, 5, 10 and the final shortened step
        assert_eq!(lines.len(), 5);
        assert!(lines[4].starts_with(&format!("{},", fmt_f64(0.0105))));
    }
}
