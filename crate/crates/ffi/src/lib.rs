//! C interface to the chanflow solver.
//!
//! A simulation lives behind an opaque [`ChanflowSimulation`] handle. Every
//! fallible call returns a [`ChanflowStatus`]; after a failure the message is
//! available from [`chanflow_last_error`] on the same thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use chanflow::presets;
use chanflow::scenario::{prepare, Prepared, ScenarioFile};
use chanflow::scheme::{FlowState, Solver};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChanflowStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    SolverFailure = 4,
    OutOfRange = 5,
    Panic = 6,
}

/// Opaque simulation handle.
pub struct ChanflowSimulation {
    prepared: Prepared,
    solver: Solver,
    state: FlowState,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn guard<F>(f: F) -> ChanflowStatus
where
    F: FnOnce() -> Result<(), (ChanflowStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            ChanflowStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ChanflowStatus::Panic
        }
    }
}

fn null(what: &str) -> (ChanflowStatus, String) {
    (ChanflowStatus::NullPointer, format!("{what} is null"))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, (ChanflowStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| (ChanflowStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn sim_mut<'a>(p: *mut ChanflowSimulation) -> Result<&'a mut ChanflowSimulation, (ChanflowStatus, String)> {
    p.as_mut().ok_or_else(|| null("simulation"))
}

unsafe fn sim_ref<'a>(p: *const ChanflowSimulation) -> Result<&'a ChanflowSimulation, (ChanflowStatus, String)> {
    p.as_ref().ok_or_else(|| null("simulation"))
}

fn create(file: ScenarioFile, out: *mut *mut ChanflowSimulation) -> Result<(), (ChanflowStatus, String)> {
    let prepared = prepare(file).map_err(|e| (ChanflowStatus::InvalidInput, e.to_string()))?;
    let solver = prepared.solver();
    let state = prepared.initial.clone();
    let sim = Box::new(ChanflowSimulation { prepared, solver, state });
    unsafe { *out = Box::into_raw(sim) };
    Ok(())
}

/// Build a simulation from scenario JSON.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chanflow_simulation_from_json(
    json: *const c_char,
    out: *mut *mut ChanflowSimulation,
) -> ChanflowStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = read_str(json, "json")?;
        let file = ScenarioFile::from_json(text).map_err(|e| (ChanflowStatus::InvalidInput, e.to_string()))?;
        create(file, out)
    })
}

/// Build one of the built-in scenarios. `cells` of 0 keeps its default grid.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn chanflow_simulation_from_preset(
    name: *const c_char,
    cells: usize,
    out: *mut *mut ChanflowSimulation,
) -> ChanflowStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let name = read_str(name, "name")?;
        if !presets::NAMES.contains(&name) {
            return Err((ChanflowStatus::InvalidInput, format!("unknown scenario '{name}'")));
        }
        let file = presets::build(name, (cells > 0).then_some(cells)).map_err(|e| (ChanflowStatus::InvalidInput, e))?;
        create(file, out)
    })
}

/// Release a simulation. Null is ignored.
///
/// # Safety
/// `sim` must come from a constructor above and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn chanflow_simulation_free(sim: *mut ChanflowSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

fn advance(sim: &mut ChanflowSimulation, cap: f64) -> Result<f64, (ChanflowStatus, String)> {
    let fixed = sim.prepared.schedule.fixed_dt;
    let (next, report) = sim
        .solver
        .step(&sim.state, fixed, cap)
        .map_err(|e| (ChanflowStatus::SolverFailure, e.to_string()))?;
    sim.state = next;
    Ok(report.dt)
}

/// Take one time step; the step length is written to `dt` when non-null.
///
/// # Safety
/// `sim` must be a live handle; `dt` null or valid.
#[no_mangle]
pub unsafe extern "C" fn chanflow_simulation_step(sim: *mut ChanflowSimulation, dt: *mut f64) -> ChanflowStatus {
    guard(|| {
        let sim = sim_mut(sim)?;
        let taken = advance(sim, f64::INFINITY)?;
        if let Some(dt) = dt.as_mut() {
            *dt = taken;
        }
        Ok(())
    })
}

/// Step until `time` is reached exactly. Earlier times are a no-op.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn chanflow_simulation_run_until(sim: *mut ChanflowSimulation, time: f64) -> ChanflowStatus {
    guard(|| {
        let sim = sim_mut(sim)?;
        if !time.is_finite() {
            return Err((ChanflowStatus::OutOfRange, format!("end time {time} is not finite")));
        }
        while sim.state.time < time {
            let cap = time - sim.state.time;
            advance(sim, cap)?;
            if (time - sim.state.time).abs() <= 1e-12 * time.abs().max(1.0) {
                sim.state.time = time;
            }
        }
        Ok(())
    })
}

/// Current simulation time.
///
/// # Safety
/// `sim` must be a live handle and `time` valid.
#[no_mangle]
pub unsafe extern "C" fn chanflow_simulation_time(sim: *const ChanflowSimulation, time: *mut f64) -> ChanflowStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        *time.as_mut().ok_or_else(|| null("time"))? = sim.state.time;
        Ok(())
    })
}

/// Total stored volume in links and junctions.
///
/// # Safety
/// `sim` must be a live handle and `volume` valid.
#[no_mangle]
pub unsafe extern "C" fn chanflow_simulation_volume(sim: *const ChanflowSimulation, volume: *mut f64) -> ChanflowStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        *volume.as_mut().ok_or_else(|| null("volume"))? = sim.state.storage(&sim.prepared.network);
        Ok(())
    })
}

/// Number of links.
///
/// # Safety
/// `sim` must be a live handle and `count` valid.
#[no_mangle]
pub unsafe extern "C" fn chanflow_simulation_link_count(sim: *const ChanflowSimulation, count: *mut usize) -> ChanflowStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        *count.as_mut().ok_or_else(|| null("count"))? = sim.prepared.network.links.len();
        Ok(())
    })
}

/// Number of cells on `link`.
///
/// # Safety
/// `sim` must be a live handle and `count` valid.
#[no_mangle]
pub unsafe extern "C" fn chanflow_simulation_cell_count(
    sim: *const ChanflowSimulation,
    link: usize,
    count: *mut usize,
) -> ChanflowStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        let l = sim
            .prepared
            .network
            .links
            .get(link)
            .ok_or_else(|| (ChanflowStatus::OutOfRange, format!("link {link} does not exist")))?;
        *count.as_mut().ok_or_else(|| null("count"))? = l.cell_count();
        Ok(())
    })
}

/// Copy cell-average wetted areas and discharges of `link` into caller buffers
/// of length `len`, which must equal the cell count. Either buffer may be null.
///
/// # Safety
/// Non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn chanflow_simulation_link_state(
    sim: *const ChanflowSimulation,
    link: usize,
    area: *mut f64,
    discharge: *mut f64,
    len: usize,
) -> ChanflowStatus {
    guard(|| {
        let sim = sim_ref(sim)?;
        let s = sim
            .state
            .links
            .get(link)
            .ok_or_else(|| (ChanflowStatus::OutOfRange, format!("link {link} does not exist")))?;
        if len != s.area.len() {
            return Err((
                ChanflowStatus::OutOfRange,
                format!("buffer length {len} does not match {} cells", s.area.len()),
            ));
        }
        if !area.is_null() {
            std::slice::from_raw_parts_mut(area, len).copy_from_slice(&s.area);
        }
        if !discharge.is_null() {
            std::slice::from_raw_parts_mut(discharge, len).copy_from_slice(&s.discharge);
        }
        Ok(())
    })
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next call into the library on the same thread.
#[no_mangle]
pub extern "C" fn chanflow_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn chanflow_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
