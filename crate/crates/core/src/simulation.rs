//! Time loop: step scheduling, gauges, snapshots and the global mass audit.

use crate::network::Network;
use crate::scheme::{FlowState, Solver, SolverError, StepReport};

/// Where a gauge samples the flow.
#[derive(Clone, Debug, PartialEq)]
pub enum GaugeSite {
    Cell { link: usize, cell: usize, x: f64 },
    Junction { junction: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gauge {
    pub name: String,
    pub site: GaugeSite,
}

/// Surface, depth and discharge at a gauge.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GaugeReading {
    pub w: f64,
    pub h: f64,
    pub q: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GaugeSample {
    pub time: f64,
    pub readings: Vec<GaugeReading>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AuditRow {
    pub time: f64,
    pub volume: f64,
    /// Cumulative volume that entered through boundaries.
    pub boundary_inflow: f64,
    /// Cumulative lateral inflow at junctions.
    pub lateral_inflow: f64,
    /// `(volume - initial - inflows) / max(volume, initial)`.
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Schedule {
    pub end_time: f64,
    /// Use this step instead of the CFL step.
    pub fixed_dt: Option<f64>,
    /// Gauge and audit sampling interval; every step when `None`.
    pub output_interval: Option<f64>,
    /// Times at which full states are kept (hit exactly).
    pub snapshots: Vec<f64>,
    /// Stop early once the largest relative rate of change drops below this.
    /// With an output interval the rate is measured between output samples.
    pub steady_tol: Option<f64>,
    pub max_steps: Option<u64>,
}

impl Schedule {
    pub fn until(end_time: f64) -> Self {
        Self {
            end_time,
            fixed_dt: None,
            output_interval: None,
            snapshots: Vec::new(),
            steady_tol: None,
            max_steps: None,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub steps: u64,
    pub final_time: f64,
    pub min_dt: f64,
    pub max_dt: f64,
    /// Smallest depth seen after any step.
    pub min_depth: f64,
    /// Largest single-step relative mass residual.
    pub max_step_residual: f64,
    pub drained_faces: u64,
    pub boundary_fallbacks: u64,
    pub supercritical_steps: u64,
    pub dry_stub_events: u64,
    pub steady: bool,
    pub all_finite: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub final_state: FlowState,
    pub gauges: Vec<GaugeSample>,
    pub snapshots: Vec<FlowState>,
    pub audit: Vec<AuditRow>,
    pub summary: RunSummary,
}

/// Gauge reading for one state.
pub fn read_gauge(solver: &Solver, state: &FlowState, site: &GaugeSite) -> GaugeReading {
    let net = solver.network();
    match *site {
        GaugeSite::Cell { link, cell, x } => {
            let l = &net.links[link];
            let c = l.cell(cell);
            let a = state.links[link].area[cell];
            let h = solver
                .cell_shape(link, cell)
                .mean
                .depth_for_area(a)
                .unwrap_or(0.0);
            let theta = ((x - c.left.x) / c.dx).clamp(0.0, 1.0);
            let bed = c.left.bed + theta * (c.right.bed - c.left.bed);
            GaugeReading {
                w: bed + h,
                h,
                q: state.links[link].discharge[cell],
            }
        }
        GaugeSite::Junction { junction } => {
            let j = &net.junctions[junction];
            let y = state.junctions[junction].level;
            let floor = crate::junction::min_bed(net, j);
            GaugeReading {
                w: y,
                h: (y - floor).max(0.0),
                q: state.junctions[junction].discharge,
            }
        }
    }
}

fn sample(solver: &Solver, state: &FlowState, gauges: &[Gauge]) -> GaugeSample {
    GaugeSample {
        time: state.time,
        readings: gauges.iter().map(|g| read_gauge(solver, state, &g.site)).collect(),
    }
}

fn relative_rate(net: &Network, a: &FlowState, b: &FlowState, dt: f64) -> f64 {
    let mut amax = 0.0_f64;
    let mut qmax = 0.0_f64;
    let mut da = 0.0_f64;
    let mut dq = 0.0_f64;
    for (x, y) in a.links.iter().zip(&b.links) {
        for j in 0..x.area.len() {
            amax = amax.max(y.area[j]);
            qmax = qmax.max(y.discharge[j].abs());
            da = da.max((y.area[j] - x.area[j]).abs());
            dq = dq.max((y.discharge[j] - x.discharge[j]).abs());
        }
    }
    let _ = net;
    let ra = if amax > 0.0 { da / amax } else { 0.0 };
    let rq = if qmax > 1e-12 { dq / qmax } else { dq };
    ra.max(rq) / dt
}

/// Advance `initial` according to `schedule`, calling `observer` after every step.
pub fn run_with<F>(
    solver: &mut Solver,
    initial: FlowState,
    schedule: &Schedule,
    gauges: &[Gauge],
    mut observer: F,
) -> Result<RunOutput, SolverError>
where
    F: FnMut(&Solver, &FlowState, &StepReport),
{
    let net = std::sync::Arc::clone(solver.network());
    let v0 = initial.storage(&net);
    let mut state = initial;
    let mut summary = RunSummary {
        min_dt: f64::INFINITY,
        min_depth: f64::INFINITY,
        all_finite: true,
        ..RunSummary::default()
    };
    let mut out_gauges = vec![sample(solver, &state, gauges)];
    let mut audit = vec![AuditRow {
        time: state.time,
        volume: v0,
        ..AuditRow::default()
    }];
    let mut snapshots = Vec::new();
    let mut pending: Vec<f64> = schedule.snapshots.clone();
    pending.sort_by(f64::total_cmp);
    pending.retain(|&t| t >= state.time && t <= schedule.end_time);
    while pending.first().is_some_and(|&t| t <= state.time) {
        snapshots.push(state.clone());
        pending.remove(0);
    }
    let mut inflow = 0.0;
    let mut lateral = 0.0;
    let mut next_output = schedule.output_interval.map(|dt| state.time + dt);
    let mut window = state.clone();
    let end = schedule.end_time;

    while state.time < end {
        if schedule.max_steps.is_some_and(|m| summary.steps >= m) {
            break;
        }
        let mut cap = end - state.time;
        if let Some(&t) = pending.first() {
            cap = cap.min(t - state.time);
        }
        let (next, report) = solver.step(&state, schedule.fixed_dt, cap)?;
        let remaining = end - next.time;
        let mut next = next;
        if end.is_finite() && remaining.abs() <= 1e-12 * end.abs().max(1.0) {
            next.time = end;
        }
        summary.steps += 1;
        summary.min_dt = summary.min_dt.min(report.dt);
        summary.max_dt = summary.max_dt.max(report.dt);
        summary.min_depth = summary.min_depth.min(report.min_depth);
        summary.max_step_residual = summary.max_step_residual.max(report.mass_residual.abs());
        summary.drained_faces += report.drained_faces as u64;
        summary.boundary_fallbacks += report.boundary_fallbacks as u64;
        summary.supercritical_steps += u64::from(report.supercritical_junction);
        summary.dry_stub_events += report.dry_stubs as u64;
        if !next.is_finite() {
            summary.all_finite = false;
        }
        inflow += report.boundary_inflow;
        lateral += report.lateral_inflow;
        observer(solver, &next, &report);

        let per_step = schedule.output_interval.is_none();
        let mut steady = per_step
            && schedule
                .steady_tol
                .is_some_and(|tol| relative_rate(&net, &state, &next, report.dt) < tol);
        state = next;

        while pending.first().is_some_and(|&t| t <= state.time * (1.0 + 1e-14)) {
            snapshots.push(state.clone());
            pending.remove(0);
        }
        let due = match next_output {
            None => true,
            Some(t) => state.time >= t * (1.0 - 1e-12) || state.time >= end,
        };
        if due && !per_step {
            let span = state.time - window.time;
            steady = span > 0.0
                && schedule
                    .steady_tol
                    .is_some_and(|tol| relative_rate(&net, &window, &state, span) < tol);
            window = state.clone();
        }
        if due || steady {
            if let (Some(t), Some(iv)) = (next_output.as_mut(), schedule.output_interval) {
                while *t <= state.time * (1.0 + 1e-12) {
                    *t += iv;
                }
            }
            out_gauges.push(sample(solver, &state, gauges));
            let v = state.storage(&net);
            audit.push(AuditRow {
                time: state.time,
                volume: v,
                boundary_inflow: inflow,
                lateral_inflow: lateral,
                residual: (v - v0 - inflow - lateral) / v.max(v0).max(f64::MIN_POSITIVE),
            });
        }
        if steady {
            summary.steady = true;
            break;
        }
    }
    if audit.last().is_some_and(|r| r.time != state.time) {
        let v = state.storage(&net);
        audit.push(AuditRow {
            time: state.time,
            volume: v,
            boundary_inflow: inflow,
            lateral_inflow: lateral,
            residual: (v - v0 - inflow - lateral) / v.max(v0).max(f64::MIN_POSITIVE),
        });
        out_gauges.push(sample(solver, &state, gauges));
    }
    summary.final_time = state.time;
    if summary.steps == 0 {
        summary.min_dt = 0.0;
        summary.min_depth = 0.0;
    }
    Ok(RunOutput {
        final_state: state,
        gauges: out_gauges,
        snapshots,
        audit,
        summary,
    })
}

pub fn run(
    solver: &mut Solver,
    initial: FlowState,
    schedule: &Schedule,
    gauges: &[Gauge],
) -> Result<RunOutput, SolverError> {
    run_with(solver, initial, schedule, gauges, |_, _, _| {})
}
