//! Deterministic policy evaluation against a commanded-velocity schedule.

use std::path::Path;

use crate::error::{GfError, Result};
use crate::gait::GaitMode;
use crate::policy::Policy;
use crate::sim::centroidal_momenta;

use super::env::{BipedEnv, CONTROL_DT};

/// Piecewise-linear command profile over (time s, v_cmd m/s) breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub breakpoints: Vec<(f64, f64)>,
}

impl Schedule {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(GfError::Config(
                "schedule breakpoint times must be strictly increasing".into(),
            ));
        }
        Ok(Schedule { breakpoints })
    }

    /// Symmetric ramp 0 → peak → 0 over `duration` seconds.
    pub fn ramp(peak: f64, duration: f64) -> Self {
        Schedule {
            breakpoints: vec![(0.0, 0.0), (duration / 2.0, peak), (duration, 0.0)],
        }
    }

    /// Loads a two-column CSV of `time,v_cmd` rows (header optional).
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut breakpoints = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with(|c: char| c.is_alphabetic())) {
                continue;
            }
            let mut parts = line.split(',');
            let parse = |s: Option<&str>| -> Result<f64> {
                s.map(str::trim)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| {
                        GfError::Config(format!("schedule line {}: expected time,v_cmd", lineno + 1))
                    })
            };
            let t = parse(parts.next())?;
            let v = parse(parts.next())?;
            breakpoints.push((t, v));
        }
        if breakpoints.is_empty() {
            return Err(GfError::Config("schedule file has no breakpoints".into()));
        }
        Schedule::new(breakpoints)
    }

    pub fn duration(&self) -> f64 {
        self.breakpoints.last().map_or(0.0, |b| b.0)
    }

    /// Linear interpolation, clamped at the ends.
    pub fn command_at(&self, t: f64) -> f64 {
        let b = &self.breakpoints;
        if b.is_empty() {
            return 0.0;
        }
        if t <= b[0].0 {
            return b[0].1;
        }
        if t >= b[b.len() - 1].0 {
            return b[b.len() - 1].1;
        }
        let k = b.partition_point(|p| p.0 <= t) - 1;
        let (t0, v0) = b[k];
        let (t1, v1) = b[k + 1];
        v0 + (v1 - v0) * (t - t0) / (t1 - t0)
    }
}

/// One control step of the evaluation trace.
#[derive(Debug, Clone)]
pub struct EvalRow {
    pub t: f64,
    pub v_cmd: f64,
    pub v_actual: f64,
    pub contact_left: bool,
    pub contact_right: bool,
    pub mode: GaitMode,
    pub l_legs: f64,
    pub l_arms: f64,
    pub l_total: f64,
    /// Raw per-term reward values, registry order.
    pub terms: Vec<f64>,
}

pub struct EvalTrace {
    pub rows: Vec<EvalRow>,
    /// The robot fell and the trace was truncated.
    pub fell: bool,
    pub term_names: Vec<String>,
}

impl EvalTrace {
    pub fn csv_header(&self) -> String {
        let mut header = String::from(
            "t,v_cmd,v_actual,contact_left,contact_right,gait_mode,L_legs,L_arms,L_total",
        );
        for name in &self.term_names {
            header.push_str(",term_");
            header.push_str(name);
        }
        header.push_str(",fell");
        header
    }

    pub fn csv_row(&self, row: &EvalRow, last: bool) -> String {
        let mut s = format!(
            "{},{},{},{},{},{},{},{},{}",
            row.t,
            row.v_cmd,
            row.v_actual,
            row.contact_left as u8,
            row.contact_right as u8,
            row.mode.name(),
            row.l_legs,
            row.l_arms,
            row.l_total,
        );
        for v in &row.terms {
            s.push(',');
            s.push_str(&v.to_string());
        }
        s.push(',');
        s.push_str(if last && self.fell { "1" } else { "0" });
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        use std::io::Write;
        let mut file = std::fs::File::create(path)?;
        writeln!(file, "{}", self.csv_header())?;
        for (i, row) in self.rows.iter().enumerate() {
            writeln!(file, "{}", self.csv_row(row, i + 1 == self.rows.len()))?;
        }
        Ok(())
    }
}

/// Runs the deterministic (mean-action) policy on an un-randomized env
/// against the schedule. A fall truncates the trace with `fell` set.
pub fn evaluate(policy: &Policy, env: &mut BipedEnv, schedule: &Schedule) -> EvalTrace {
    use crate::trainer::env::Environment;
    let term_names = env.term_names();
    let phase = crate::curriculum::default_phases().pop().expect("non-empty");
    // a single-breakpoint schedule still produces one constant-command step
    let steps = if schedule.breakpoints.is_empty() {
        0
    } else {
        ((schedule.duration() / CONTROL_DT).round() as usize).max(1)
    };
    let mut trace = EvalTrace {
        rows: Vec::with_capacity(steps),
        fell: false,
        term_names,
    };
    if steps == 0 {
        return trace;
    }

    env.set_command(schedule.command_at(0.0));
    let (mut obs, _) = env.reset(&phase);
    let (mut actor_state, _) = policy.initial_state(1);
    for k in 0..steps {
        let t = k as f64 * CONTROL_DT;
        let v_cmd = schedule.command_at(t);
        env.set_command(v_cmd);
        let action = policy.act(&obs, &mut actor_state).mode();
        let out = env.step(&action, &phase);

        // eval envs never auto-reset or time out, so done means a fall
        let fell = out.done;
        let state = env.state();
        let momenta = centroidal_momenta(state, env.spec());
        trace.rows.push(EvalRow {
            t,
            v_cmd,
            v_actual: state.qd[0],
            contact_left: state.contacts[0].in_contact,
            contact_right: state.contacts[1].in_contact,
            mode: GaitMode::from_index(out.mode).expect("env emits valid modes"),
            l_legs: momenta.legs,
            l_arms: momenta.arms,
            l_total: momenta.total,
            terms: out.terms,
        });
        obs = out.obs;
        if fell {
            trace.fell = true;
            break;
        }
    }
    trace
}
