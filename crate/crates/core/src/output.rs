//! CSV and text outputs of a run.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use crate::scenario::Prepared;
use crate::scheme::{FlowState, Solver, SolverError};
use crate::simulation::{AuditRow, GaugeSample, RunOutput};

/// One row per cell of a profile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileRow {
    pub link: usize,
    pub x: f64,
    pub bed: f64,
    pub w: f64,
    pub h: f64,
    pub q: f64,
}

/// Cell-centre profile of every link; `w` is the reconstructed level.
pub fn profile(solver: &mut Solver, state: &FlowState) -> Result<Vec<ProfileRow>, SolverError> {
    solver.evaluate(state)?;
    let net = std::sync::Arc::clone(solver.network());
    let mut rows = Vec::with_capacity(net.cell_count());
    for (li, link) in net.links.iter().enumerate() {
        let rec = solver.reconstruction(li);
        for (j, c) in link.cells().enumerate() {
            let r = &rec[j];
            let bed = 0.5 * (c.left.bed + c.right.bed);
            let w = if r.empty { bed } else { r.w };
            rows.push(ProfileRow {
                link: li,
                x: c.center(),
                bed,
                w,
                h: r.h_av,
                q: state.links[li].discharge[j],
            });
        }
    }
    Ok(rows)
}

pub fn profile_csv(net_links: &[String], rows: &[ProfileRow]) -> String {
    let mut s = String::from("link,x,B,w,h,Q\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            net_links[r.link], r.x, r.bed, r.w, r.h, r.q
        );
    }
    s
}

pub fn gauges_csv(names: &[String], samples: &[GaugeSample]) -> String {
    let mut s = String::from("t");
    for n in names {
        let _ = write!(s, ",{n}_w,{n}_h,{n}_Q");
    }
    s.push('\n');
    for g in samples {
        let _ = write!(s, "{:.16e}", g.time);
        for r in &g.readings {
            let _ = write!(s, ",{:.16e},{:.16e},{:.16e}", r.w, r.h, r.q);
        }
        s.push('\n');
    }
    s
}

pub fn audit_csv(rows: &[AuditRow]) -> String {
    let mut s = String::from("t,volume,boundary_inflow,lateral_inflow,mass_residual\n");
    for r in rows {
        let _ = writeln!(
            s,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.time, r.volume, r.boundary_inflow, r.lateral_inflow, r.residual
        );
    }
    s
}

pub fn report_text(prepared: &Prepared, out: &RunOutput) -> String {
    let m = &out.summary;
    let mut s = String::new();
    let _ = writeln!(s, "scenario: {}", prepared.file.scenario.name);
    let _ = writeln!(s, "cells: {}", prepared.network.cell_count());
    let _ = writeln!(s, "steps: {}", m.steps);
    let _ = writeln!(s, "final_time: {:.16e}", m.final_time);
    let _ = writeln!(s, "dt_min: {:.16e}", m.min_dt);
    let _ = writeln!(s, "dt_max: {:.16e}", m.max_dt);
    let _ = writeln!(s, "min_depth: {:.16e}", m.min_depth);
    let _ = writeln!(s, "max_step_mass_residual: {:.16e}", m.max_step_residual);
    if let Some(last) = out.audit.last() {
        let _ = writeln!(s, "cumulative_mass_residual: {:.16e}", last.residual);
    }
    let _ = writeln!(s, "draining_limited_faces: {}", m.drained_faces);
    let _ = writeln!(s, "boundary_fallbacks: {}", m.boundary_fallbacks);
    let _ = writeln!(s, "supercritical_junction_steps: {}", m.supercritical_steps);
    let _ = writeln!(s, "dry_stub_events: {}", m.dry_stub_events);
    let _ = writeln!(s, "steady: {}", m.steady);
    s
}

/// File-name label for a time.
pub fn time_label(t: f64) -> String {
    let s = format!("{t:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() {
        "0".into()
    } else {
        s.into()
    }
}

/// Write every output file of a finished run into `dir`.
pub fn write_run(dir: &Path, prepared: &Prepared, solver: &mut Solver, out: &RunOutput) -> io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let names: Vec<String> = prepared.gauges.iter().map(|g| g.name.clone()).collect();
    let links: Vec<String> = prepared.network.links.iter().map(|l| l.id.clone()).collect();
    std::fs::write(dir.join("gauges.csv"), gauges_csv(&names, &out.gauges))?;
    std::fs::write(dir.join("audit.csv"), audit_csv(&out.audit))?;
    std::fs::write(dir.join("report.txt"), report_text(prepared, out))?;
    let mut states: Vec<&FlowState> = vec![&prepared.initial];
    states.extend(out.snapshots.iter());
    states.push(&out.final_state);
    let mut seen = Vec::new();
    for st in states {
        let label = time_label(st.time);
        if seen.contains(&label) {
            continue;
        }
        let rows = profile(solver, st).map_err(|e| io::Error::other(e.to_string()))?;
        std::fs::write(dir.join(format!("profile_{label}.csv")), profile_csv(&links, &rows))?;
        seen.push(label);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels() {
        assert_eq!(time_label(0.0), "0");
        assert_eq!(time_label(18.0), "18");
        assert_eq!(time_label(0.05), "0.05");
    }
}
