//! Central-upwind fluxes, draining-limited explicit update with implicit
//! friction, and the time-step controls.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::boundary::{self, BoundaryCondition, BoundaryParams};
use crate::geometry::{self, CrossSection, FaceGeometry, WetSpan};
use crate::junction::{self, JunctionError, JunctionModel, JunctionState};
use crate::network::{Attachment, Link, LinkEnd, Network, StubRole};
pub use crate::reconstruction::desingularize_velocity;
use crate::reconstruction::{
    classify_and_level, interface_values, limited_slopes, CellReconstruction, CellShape,
    ReconstructionError, Stencil, WetSide,
};

/// Faces whose speeds differ by less than this carry no flux.
pub const DRY_FACE_SPEED: f64 = 1e-12;
/// Cell areas below `-NEGATIVE_AREA_TRAP · max(1, Ā)` abort the step.
pub const NEGATIVE_AREA_TRAP: f64 = 1e-14;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Integrator {
    #[default]
    Euler,
    Ssp2,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeParams {
    pub gravity: f64,
    pub epsilon: f64,
    pub q_still: f64,
    pub cfl: f64,
    pub dt_max: f64,
    pub integrator: Integrator,
    /// Used by junctions that do not choose a model themselves.
    pub junction_model: JunctionModel,
}

impl Default for SchemeParams {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            epsilon: 1e-12,
            q_still: 1e-12,
            cfl: 0.5,
            dt_max: f64::INFINITY,
            integrator: Integrator::Euler,
            junction_model: JunctionModel::Cuj1,
        }
    }
}

/// One side of a cell interface.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SideState {
    pub h: f64,
    pub area: f64,
    /// Discharge recomputed from the regularized velocity.
    pub q: f64,
    pub u: f64,
    /// Celerity `√(gA/σ_T)`.
    pub c: f64,
    /// Hydrostatic moment of the face section at depth `h`.
    pub i1: f64,
}

impl SideState {
    pub fn new(section: &CrossSection, h: f64, q: f64, g: f64, eps: f64) -> Self {
        let h = h.max(0.0);
        if h == 0.0 {
            return Self::default();
        }
        let area = section.area(h);
        let u = desingularize_velocity(area, q, eps);
        let top = section.width(h);
        let c = if area > 0.0 && top > 0.0 { (g * area / top).sqrt() } else { 0.0 };
        Self {
            h,
            area,
            q: area * u,
            u,
            c,
            i1: section.moment(h),
        }
    }

    pub fn froude(&self) -> f64 {
        if self.c > 0.0 {
            self.u.abs() / self.c
        } else {
            0.0
        }
    }

    /// The same state with the x axis reversed.
    pub fn mirrored(&self) -> Self {
        Self {
            q: -self.q,
            u: -self.u,
            ..*self
        }
    }
}

/// Numerical flux through one face.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FaceFlux {
    pub h1: f64,
    /// Advective part of the momentum flux.
    pub h2a: f64,
    /// Gravity part of the momentum flux.
    pub h2g: f64,
    pub a_plus: f64,
    pub a_minus: f64,
}

impl FaceFlux {
    pub fn h2(&self) -> f64 {
        self.h2a + self.h2g
    }
}

/// One-sided local speeds `(a⁺, a⁻)`.
#[inline]
pub fn local_speeds(minus: &SideState, plus: &SideState) -> (f64, f64) {
    let ap = (minus.u + minus.c).max(plus.u + plus.c).max(0.0);
    let am = (minus.u - minus.c).min(plus.u - plus.c).min(0.0);
    (ap, am)
}

/// Central-upwind flux between the left (`minus`) and right (`plus`) states.
#[inline]
pub fn face_flux(minus: &SideState, plus: &SideState, g: f64) -> FaceFlux {
    let (ap, am) = local_speeds(minus, plus);
    let d = ap - am;
    if d < DRY_FACE_SPEED {
        return FaceFlux {
            a_plus: ap,
            a_minus: am,
            ..FaceFlux::default()
        };
    }
    // (ap fl - am fr) / d written as fl + am (fl - fr) / d: exact when fl == fr.
    let lam = am / d;
    let diff = ap * lam;
    let fm = minus.q * minus.u;
    let fp = plus.q * plus.u;
    FaceFlux {
        h1: minus.q + lam * (minus.q - plus.q) + diff * (plus.area - minus.area),
        h2a: fm + lam * (fm - fp) + diff * (plus.q - minus.q),
        h2g: g * (minus.i1 + lam * (minus.i1 - plus.i1)),
        a_plus: ap,
        a_minus: am,
    }
}

/// Manning friction coefficient `G = g n² |Q| / max(A R^{4/3}, ε)`.
pub fn friction_coefficient(
    left: &FaceGeometry,
    right: &FaceGeometry,
    mean: &CrossSection,
    manning_n: f64,
    area: f64,
    q: f64,
    g: f64,
    eps: f64,
) -> f64 {
    if manning_n == 0.0 || q == 0.0 || area <= 0.0 {
        return 0.0;
    }
    let h = mean.depth_for_area(area).unwrap_or(0.0);
    let p = 0.5 * (left.section.perimeter(h) + right.section.perimeter(h));
    let r = if p > 0.0 { area / p } else { 0.0 };
    g * manning_n * manning_n * q.abs() / (area * r.powf(4.0 / 3.0)).max(eps)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkState {
    pub area: Vec<f64>,
    pub discharge: Vec<f64>,
}

/// Cell averages on every link plus the junction states.
#[derive(Clone, Debug, PartialEq)]
pub struct FlowState {
    pub time: f64,
    pub links: Vec<LinkState>,
    pub junctions: Vec<JunctionState>,
}

impl FlowState {
    /// Empty channels with junction levels at their lowest stub bed.
    pub fn dry(net: &Network) -> Self {
        Self {
            time: 0.0,
            links: net
                .links
                .iter()
                .map(|l| LinkState {
                    area: vec![0.0; l.cell_count()],
                    discharge: vec![0.0; l.cell_count()],
                })
                .collect(),
            junctions: net
                .junctions
                .iter()
                .map(|j| JunctionState {
                    level: junction::min_bed(net, j),
                    discharge: 0.0,
                })
                .collect(),
        }
    }

    /// Water stored in links and junctions.
    pub fn storage(&self, net: &Network) -> f64 {
        let links: f64 = net
            .links
            .iter()
            .zip(&self.links)
            .map(|(l, s)| l.cells().zip(&s.area).map(|(c, a)| c.dx * a).sum::<f64>())
            .sum();
        let junctions: f64 = net
            .junctions
            .iter()
            .zip(&self.junctions)
            .map(|(j, s)| junction::storage(net, j, s.level))
            .sum();
        links + junctions
    }

    pub fn is_finite(&self) -> bool {
        self.links
            .iter()
            .all(|l| l.area.iter().chain(&l.discharge).all(|v| v.is_finite()))
            && self
                .junctions
                .iter()
                .all(|j| j.level.is_finite() && j.discharge.is_finite())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    /// Smallest bed-parallel depth over all cells after the step.
    pub min_depth: f64,
    pub min_area: f64,
    /// Storage change minus boundary and lateral inflow, relative to storage.
    pub mass_residual: f64,
    pub boundary_inflow: f64,
    pub lateral_inflow: f64,
    pub drained_faces: usize,
    pub boundary_fallbacks: usize,
    /// A continuity-only junction saw a supercritical terminal face.
    pub supercritical_junction: bool,
    /// Dry stubs next to wet ones at a momentum junction.
    pub dry_stubs: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("t={time}: link '{link}' cell {cell}: {source}")]
    Reconstruction {
        time: f64,
        link: String,
        cell: usize,
        source: ReconstructionError,
    },
    #[error("t={time}: link '{link}' cell {cell}: area {area} below the positivity trap")]
    NegativeArea {
        time: f64,
        link: String,
        cell: usize,
        area: f64,
    },
    #[error("t={time}: {source}")]
    Junction { time: f64, source: JunctionError },
    #[error("t={time}: link '{link}' cell {cell}: non-finite state")]
    NonFinite { time: f64, link: String, cell: usize },
    #[error("t={time}: time step {dt} is not positive and finite")]
    BadTimeStep { time: f64, dt: f64 },
}

#[derive(Clone, Debug, Default)]
struct LinkWork {
    rec: Vec<CellReconstruction>,
    stencil: Vec<Stencil>,
    /// Left state of each face.
    minus: Vec<SideState>,
    /// Right state of each face.
    plus: Vec<SideState>,
    flux: Vec<FaceFlux>,
    /// Reconstructed surface at the left and right face inside each cell.
    inner: Vec<[f64; 2]>,
    drain: Vec<f64>,
    dt_face: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
struct LinkIncrement {
    da: Vec<f64>,
    dq: Vec<f64>,
    g: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
struct Increment {
    links: Vec<LinkIncrement>,
    /// Net inflow volume per junction.
    dv: Vec<f64>,
    dq: Vec<f64>,
    g: Vec<f64>,
    boundary_inflow: f64,
    lateral_inflow: f64,
    drained_faces: usize,
    boundary_fallbacks: usize,
    supercritical_junction: bool,
    dry_stubs: usize,
}

/// Reusable solver for one network.
pub struct Solver {
    net: Arc<Network>,
    params: SchemeParams,
    shapes: Vec<Vec<CellShape>>,
    stub_shapes: Vec<Vec<CellShape>>,
    models: Vec<JunctionModel>,
    work: Vec<LinkWork>,
    stub_drain: Vec<Vec<f64>>,
    fallbacks: usize,
}

impl Solver {
    pub fn new(net: Arc<Network>, params: SchemeParams) -> Self {
        let shapes = net
            .links
            .iter()
            .map(|l| l.cells().map(|c| CellShape::new(c.left, c.right)).collect())
            .collect();
        let stub_shapes = net
            .junctions
            .iter()
            .map(|j| {
                j.stubs
                    .iter()
                    .map(|s| {
                        let (l, r) = junction::stub_faces(&net, s);
                        CellShape::new(l, r)
                    })
                    .collect()
            })
            .collect();
        let models = net
            .junctions
            .iter()
            .map(|j| j.model.unwrap_or(params.junction_model))
            .collect();
        let work = net
            .links
            .iter()
            .map(|l| {
                let n = l.cell_count();
                LinkWork {
                    rec: vec![CellReconstruction::default(); n],
                    stencil: Vec::with_capacity(n),
                    minus: vec![SideState::default(); n + 1],
                    plus: vec![SideState::default(); n + 1],
                    flux: vec![FaceFlux::default(); n + 1],
                    inner: vec![[0.0; 2]; n],
                    drain: vec![f64::INFINITY; n],
                    dt_face: vec![0.0; n + 1],
                }
            })
            .collect();
        let stub_drain = net.junctions.iter().map(|j| vec![f64::INFINITY; j.stubs.len()]).collect();
        Self {
            net,
            params,
            shapes,
            stub_shapes,
            models,
            work,
            stub_drain,
            fallbacks: 0,
        }
    }

    pub fn network(&self) -> &Arc<Network> {
        &self.net
    }

    pub fn params(&self) -> &SchemeParams {
        &self.params
    }

    pub fn junction_model(&self, junction: usize) -> JunctionModel {
        self.models[junction]
    }

    pub fn cell_shape(&self, link: usize, cell: usize) -> &CellShape {
        &self.shapes[link][cell]
    }

    /// Reconstruction from the most recent flux evaluation.
    pub fn reconstruction(&self, link: usize) -> &[CellReconstruction] {
        &self.work[link].rec
    }

    /// Face fluxes from the most recent flux evaluation.
    pub fn face_fluxes(&self, link: usize) -> &[FaceFlux] {
        &self.work[link].flux
    }

    /// Left and right face states from the most recent flux evaluation.
    pub fn face_states(&self, link: usize) -> (&[SideState], &[SideState]) {
        (&self.work[link].minus, &self.work[link].plus)
    }

    /// Face time steps from the most recent update.
    pub fn face_time_steps(&self, link: usize) -> &[f64] {
        &self.work[link].dt_face
    }

    fn bc_params(&self) -> BoundaryParams {
        BoundaryParams {
            gravity: self.params.gravity,
            epsilon: self.params.epsilon,
        }
    }

    /// Reconstruct, evaluate every face flux and return the CFL time step.
    pub fn evaluate(&mut self, state: &FlowState) -> Result<f64, SolverError> {
        let net = Arc::clone(&self.net);
        let g = self.params.gravity;
        let eps = self.params.epsilon;
        self.fallbacks = 0;
        for (li, link) in net.links.iter().enumerate() {
            self.reconstruct_link(li, link, state)?;
            let n = link.cell_count();
            let up = self.end_side(li, link, LinkEnd::Upstream, state);
            let down = self.end_side(li, link, LinkEnd::Downstream, state);
            let w = &mut self.work[li];
            w.minus[0] = up;
            w.plus[n] = down;
            for f in 0..=n {
                w.flux[f] = face_flux(&w.minus[f], &w.plus[f], g);
            }
            let _ = eps;
        }
        Ok(self.cfl_time_step())
    }

    fn reconstruct_link(&mut self, li: usize, link: &Link, state: &FlowState) -> Result<(), SolverError> {
        let n = link.cell_count();
        let s = &state.links[li];
        let qs = self.params.q_still;
        let shapes = &self.shapes[li];
        {
            let w = &mut self.work[li];
            w.stencil.clear();
            for j in 0..n {
                let quiet = s.discharge[j].abs() <= qs
                    && (j == 0 || s.discharge[j - 1].abs() <= qs)
                    && (j + 1 == n || s.discharge[j + 1].abs() <= qs);
                let c = link.cell(j);
                let rec = classify_and_level(c.left, c.right, &shapes[j], s.area[j], s.discharge[j], quiet)
                    .map_err(|source| SolverError::Reconstruction {
                        time: state.time,
                        link: link.id.clone(),
                        cell: j,
                        source,
                    })?;
                w.rec[j] = rec;
                w.stencil.push(Stencil::new(&rec, c.left, c.right));
            }
        }
        let ghost_up = self.end_stencil(li, link, LinkEnd::Upstream, state);
        let ghost_down = self.end_stencil(li, link, LinkEnd::Downstream, state);
        let g = self.params.gravity;
        let eps = self.params.epsilon;
        let w = &mut self.work[li];
        for j in 0..n {
            let prev = if j > 0 { Some(&w.stencil[j - 1]) } else { ghost_up.as_ref() };
            let next = if j + 1 < n { Some(&w.stencil[j + 1]) } else { ghost_down.as_ref() };
            let (sw, sq) = limited_slopes(prev, &w.stencil[j], next);
            w.rec[j].slope_w = sw;
            w.rec[j].slope_q = sq;
        }
        for j in 0..n {
            let c = link.cell(j);
            let rec = &w.rec[j];
            if rec.empty {
                w.plus[j] = SideState::default();
                w.minus[j + 1] = SideState::default();
                w.inner[j] = [c.left.bed, c.right.bed];
                continue;
            }
            let (ws, qv) = interface_values(rec, c.dx);
            w.plus[j] = SideState::new(&c.left.section, ws[0] - c.left.bed, qv[0], g, eps);
            w.minus[j + 1] = SideState::new(&c.right.section, ws[1] - c.right.bed, qv[1], g, eps);
            w.inner[j] = ws;
        }
        Ok(())
    }

    /// Neighbour stencil beyond a link end, if the end provides one.
    fn end_stencil(&self, li: usize, link: &Link, end: LinkEnd, state: &FlowState) -> Option<Stencil> {
        let n = link.cell_count();
        let cell = match end {
            LinkEnd::Upstream => 0,
            LinkEnd::Downstream => n - 1,
        };
        let w = &self.work[li];
        match link.attachment(end) {
            Attachment::Boundary { boundary } => match self.net.boundaries[boundary].condition {
                BoundaryCondition::Wall { .. } => {
                    let mut m = w.stencil[cell].mirrored();
                    m.q = -m.q;
                    Some(m)
                }
                // Zero-gradient ghost cell beyond a wet open end.
                BoundaryCondition::Outflow if w.stencil[cell].wet => Some(w.stencil[cell]),
                _ => None,
            },
            Attachment::Junction { junction: k, stub } => {
                let j = &self.net.junctions[k];
                let s = &j.stubs[stub];
                let (l, r) = junction::stub_faces(&self.net, s);
                let js = state.junctions[k];
                let y = js.level;
                let shape = &self.stub_shapes[k][stub];
                let area = junction::stub_volume(&self.net, s, y) / s.length;
                let q = match self.models[k] {
                    JunctionModel::Cuj2 => js.discharge,
                    JunctionModel::Cuj1 => state.links[li].discharge[cell],
                };
                let mut rec = CellReconstruction {
                    w: 0.5 * (l.bed + r.bed),
                    w_st: y,
                    h_av: 0.0,
                    wet: false,
                    fraction: 1.0,
                    side: WetSide::Full,
                    q,
                    slope_w: 0.0,
                    slope_q: 0.0,
                    empty: area <= 0.0,
                };
                if area > 0.0 {
                    rec.h_av = shape.mean.depth_for_area(area).unwrap_or(0.0);
                    rec.w = y;
                    if y >= l.bed.max(r.bed) {
                        rec.wet = true;
                    } else {
                        let lo = l.bed.min(r.bed);
                        rec.fraction = ((y - lo) / (r.bed - l.bed).abs()).clamp(0.0, 1.0);
                        rec.side = if l.bed < r.bed { WetSide::Left } else { WetSide::Right };
                    }
                }
                Some(Stencil::new(&rec, l, r))
            }
        }
    }

    /// Face state on the far side of a link end.
    fn end_side(&mut self, li: usize, link: &Link, end: LinkEnd, state: &FlowState) -> SideState {
        let n = link.cell_count();
        let (face, interior) = match end {
            LinkEnd::Upstream => (&link.faces[0], self.work[li].plus[0]),
            LinkEnd::Downstream => (&link.faces[n], self.work[li].minus[n]),
        };
        let g = self.params.gravity;
        let eps = self.params.epsilon;
        match link.attachment(end) {
            Attachment::Junction { junction: k, .. } => {
                let js = state.junctions[k];
                let q = match self.models[k] {
                    JunctionModel::Cuj2 => js.discharge,
                    JunctionModel::Cuj1 => interior.q,
                };
                SideState::new(&face.section, js.level - face.bed, q, g, eps)
            }
            Attachment::Boundary { boundary } => {
                // Solve in the frame where the ghost lies to the left.
                let int = match end {
                    LinkEnd::Upstream => interior,
                    LinkEnd::Downstream => interior.mirrored(),
                };
                let p = self.bc_params();
                let t = state.time;
                let ghost = match &self.net.boundaries[boundary].condition {
                    BoundaryCondition::Discharge { discharge } => {
                        boundary::discharge_bc(&face.section, discharge.eval(t), &int, p)
                    }
                    BoundaryCondition::Surface { level } => {
                        boundary::surface_bc(&face.section, face.bed, level.eval(t), &int, false, p)
                    }
                    BoundaryCondition::SurfaceSimple { level } => {
                        boundary::surface_bc(&face.section, face.bed, level.eval(t), &int, true, p)
                    }
                    BoundaryCondition::Outflow => boundary::outflow_bc(&int),
                    BoundaryCondition::Wall { source } => {
                        let qs = source.as_ref().map_or(0.0, |h| h.eval(t));
                        if qs != 0.0 {
                            boundary::discharge_bc(&face.section, qs, &int, p)
                        } else {
                            boundary::wall_bc(&int)
                        }
                    }
                };
                if !ghost.converged {
                    self.fallbacks += 1;
                }
                let q = match end {
                    LinkEnd::Upstream => ghost.q,
                    LinkEnd::Downstream => -ghost.q,
                };
                SideState::new(&face.section, ghost.h, q, g, eps)
            }
        }
    }

    fn cfl_time_step(&self) -> f64 {
        let mut dt = f64::INFINITY;
        for (li, link) in self.net.links.iter().enumerate() {
            let f = &self.work[li].flux;
            for j in 0..link.cell_count() {
                let den = f[j].a_plus - f[j + 1].a_minus;
                if den > 0.0 {
                    dt = dt.min((link.faces[j + 1].x - link.faces[j].x) / den);
                }
            }
        }
        for j in &self.net.junctions {
            for s in &j.stubs {
                let f = &self.work[s.link].flux[junction::terminal_face_index(&self.net, s)];
                match s.role {
                    StubRole::Inflow if f.a_plus > 0.0 => dt = dt.min(s.length / f.a_plus),
                    StubRole::Outflow if f.a_minus < 0.0 => dt = dt.min(-s.length / f.a_minus),
                    _ => {}
                }
            }
        }
        (self.params.cfl * dt).min(self.params.dt_max)
    }

    fn end_drain(&self, link: &Link, end: LinkEnd) -> f64 {
        match link.attachment(end) {
            Attachment::Boundary { .. } => f64::INFINITY,
            Attachment::Junction { junction, stub } => self.stub_drain[junction][stub],
        }
    }

    /// Explicit increments for a step of length `dt` from the evaluated state.
    fn increment(&mut self, state: &FlowState, dt: f64) -> Increment {
        let net = Arc::clone(&self.net);
        let g = self.params.gravity;
        let eps = self.params.epsilon;
        let mut inc = Increment {
            boundary_fallbacks: self.fallbacks,
            ..Increment::default()
        };

        for (li, link) in net.links.iter().enumerate() {
            let s = &state.links[li];
            let w = &mut self.work[li];
            for j in 0..link.cell_count() {
                let out = w.flux[j + 1].h1.max(0.0) + (-w.flux[j].h1).max(0.0);
                w.drain[j] = if out > 0.0 {
                    (link.faces[j + 1].x - link.faces[j].x) * s.area[j] / out
                } else {
                    f64::INFINITY
                };
            }
        }
        for (k, j) in net.junctions.iter().enumerate() {
            let y = state.junctions[k].level;
            for (si, stub) in j.stubs.iter().enumerate() {
                let fi = junction::terminal_face_index(&net, stub);
                let w = &self.work[stub.link];
                let f = &w.flux[fi];
                let d = f.a_plus - f.a_minus;
                let out = if d < DRY_FACE_SPEED {
                    0.0
                } else {
                    match stub.role {
                        StubRole::Inflow => {
                            let js = &w.plus[fi];
                            -f.a_minus * (f.a_plus - js.u) / d * js.area
                        }
                        StubRole::Outflow => {
                            let js = &w.minus[fi];
                            f.a_plus * (js.u - f.a_minus) / d * js.area
                        }
                    }
                };
                self.stub_drain[k][si] = if out > 0.0 {
                    junction::stub_volume(&net, stub, y) / out
                } else {
                    f64::INFINITY
                };
            }
        }

        for (li, link) in net.links.iter().enumerate() {
            let n = link.cell_count();
            let up = self.end_drain(link, LinkEnd::Upstream);
            let down = self.end_drain(link, LinkEnd::Downstream);
            let w = &mut self.work[li];
            for f in 0..=n {
                let h1 = w.flux[f].h1;
                let upwind = if h1 > 0.0 {
                    if f > 0 { w.drain[f - 1] } else { up }
                } else if h1 < 0.0 {
                    if f < n { w.drain[f] } else { down }
                } else {
                    f64::INFINITY
                };
                if upwind < dt {
                    inc.drained_faces += 1;
                }
                w.dt_face[f] = dt.min(upwind);
            }
        }

        for (li, link) in net.links.iter().enumerate() {
            let n = link.cell_count();
            let s = &state.links[li];
            let w = &self.work[li];
            let mut li_inc = LinkIncrement {
                da: vec![0.0; n],
                dq: vec![0.0; n],
                g: vec![0.0; n],
            };
            for j in 0..n {
                let c = link.cell(j);
                let (fl, fr) = (&w.flux[j], &w.flux[j + 1]);
                let (tl, tr) = (w.dt_face[j], w.dt_face[j + 1]);
                li_inc.da[j] = -(tr * fr.h1 - tl * fl.h1) / c.dx;
                let mut source = 0.0;
                if !w.rec[j].empty {
                    let [wl, wr] = w.inner[j];
                    if let Some(span) = WetSpan::under_surface(c.left, c.right, c.left.x, c.right.x, wl, wr) {
                        let i2 = geometry::span_wall_force(c.left, c.right, &span);
                        let slope = (c.right.bed - c.left.bed) / c.dx;
                        let bx = if slope != 0.0 {
                            slope * geometry::span_volume(c.left, c.right, &span)
                        } else {
                            0.0
                        };
                        source = g * (bx - i2);
                    }
                }
                li_inc.dq[j] =
                    -(tr * fr.h2a - tl * fl.h2a) / c.dx - dt / c.dx * (fr.h2g - fl.h2g + source);
                li_inc.g[j] = friction_coefficient(
                    c.left,
                    c.right,
                    &self.shapes[li][j].mean,
                    c.manning_n,
                    s.area[j],
                    s.discharge[j],
                    g,
                    eps,
                );
            }
            for (end, face) in [(LinkEnd::Upstream, 0), (LinkEnd::Downstream, n)] {
                if let Attachment::Boundary { .. } = link.attachment(end) {
                    let v = w.dt_face[face] * w.flux[face].h1;
                    inc.boundary_inflow += if end == LinkEnd::Upstream { v } else { -v };
                }
            }
            inc.links.push(li_inc);
        }

        let t = state.time;
        for (k, j) in net.junctions.iter().enumerate() {
            let js = state.junctions[k];
            let mut dv = 0.0;
            let mut momentum = 0.0;
            let mut gl = 0.0;
            let total = j.total_stub_length();
            let stored = junction::storage(&net, j, js.level);
            for (si, stub) in j.stubs.iter().enumerate() {
                let fi = junction::terminal_face_index(&net, stub);
                let w = &self.work[stub.link];
                let f = &w.flux[fi];
                let tf = w.dt_face[fi];
                let sign = match stub.role {
                    StubRole::Inflow => 1.0,
                    StubRole::Outflow => -1.0,
                };
                dv += sign * tf * f.h1;
                let link_side = match stub.role {
                    StubRole::Inflow => &w.minus[fi],
                    StubRole::Outflow => &w.plus[fi],
                };
                match self.models[k] {
                    JunctionModel::Cuj1 => {
                        if link_side.froude() > 1.0 {
                            inc.supercritical_junction = true;
                        }
                    }
                    JunctionModel::Cuj2 => {
                        let (l, r) = junction::stub_faces(&net, stub);
                        let hs = (js.level - stub.face.bed).max(0.0);
                        if hs == 0.0 && stored > 0.0 {
                            inc.dry_stubs += 1;
                        }
                        let i1s = stub.face.section.moment(hs);
                        let (i2, v) = WetSpan::under_surface(l, r, l.x, r.x, js.level, js.level)
                            .map_or((0.0, 0.0), |sp| {
                                (geometry::span_wall_force(l, r, &sp), geometry::span_volume(l, r, &sp))
                            });
                        let bx = (r.bed - l.bed) / stub.length * v;
                        let adv = tf * f.h2a + dt * f.h2g;
                        match stub.role {
                            StubRole::Inflow => momentum += adv - dt * g * (i1s - i2 + bx),
                            StubRole::Outflow => momentum += -adv + dt * g * (i1s + i2 - bx),
                        }
                        let area = v / stub.length;
                        let link = &net.links[stub.link];
                        let cell = if fi == 0 { 0 } else { fi - 1 };
                        let gs = friction_coefficient(
                            l,
                            r,
                            &self.stub_shapes[k][si].mean,
                            link.manning[cell],
                            area,
                            js.discharge,
                            g,
                            eps,
                        );
                        gl += gs * stub.length;
                    }
                }
            }
            let lateral = j.lateral_inflow.as_ref().map_or(0.0, |h| h.eval(t)) * dt;
            inc.lateral_inflow += lateral;
            inc.dv.push(dv + lateral);
            if total > 0.0 {
                inc.dq.push(momentum / total);
                inc.g.push(gl / total);
            } else {
                inc.dq.push(0.0);
                inc.g.push(0.0);
            }
        }
        inc
    }

    fn apply(&self, state: &FlowState, inc: &Increment, dt: f64) -> Result<FlowState, SolverError> {
        let net = &self.net;
        let mut links = Vec::with_capacity(state.links.len());
        for (li, link) in net.links.iter().enumerate() {
            let s = &state.links[li];
            let d = &inc.links[li];
            let n = link.cell_count();
            let mut area = Vec::with_capacity(n);
            let mut discharge = Vec::with_capacity(n);
            for j in 0..n {
                let a = s.area[j] + d.da[j];
                if a < -NEGATIVE_AREA_TRAP * s.area[j].max(1.0) {
                    return Err(SolverError::NegativeArea {
                        time: state.time,
                        link: link.id.clone(),
                        cell: j,
                        area: a,
                    });
                }
                let a = a.max(0.0);
                let q = if a == 0.0 {
                    0.0
                } else {
                    (s.discharge[j] + d.dq[j]) / (1.0 + dt * d.g[j])
                };
                if !a.is_finite() || !q.is_finite() {
                    return Err(SolverError::NonFinite {
                        time: state.time,
                        link: link.id.clone(),
                        cell: j,
                    });
                }
                area.push(a);
                discharge.push(q);
            }
            links.push(LinkState { area, discharge });
        }
        let mut junctions = Vec::with_capacity(state.junctions.len());
        for (k, j) in net.junctions.iter().enumerate() {
            let js = state.junctions[k];
            let target = junction::storage(net, j, js.level) + inc.dv[k];
            let level = junction::level_for_storage(net, j, target, js.level)
                .map_err(|source| SolverError::Junction {
                    time: state.time,
                    source,
                })?;
            let discharge = match self.models[k] {
                JunctionModel::Cuj2 if target > 0.0 => {
                    junction::solve_junction_discharge(js.discharge, inc.dq[k], dt, inc.g[k])
                }
                _ => 0.0,
            };
            junctions.push(JunctionState { level, discharge });
        }
        Ok(FlowState {
            time: state.time + dt,
            links,
            junctions,
        })
    }

    /// Average of two states in conserved variables.
    fn average(&self, a: &FlowState, b: &FlowState) -> Result<FlowState, SolverError> {
        let links = a
            .links
            .iter()
            .zip(&b.links)
            .map(|(x, y)| LinkState {
                area: x.area.iter().zip(&y.area).map(|(p, q)| 0.5 * (p + q)).collect(),
                discharge: x.discharge.iter().zip(&y.discharge).map(|(p, q)| 0.5 * (p + q)).collect(),
            })
            .collect();
        let mut junctions = Vec::with_capacity(a.junctions.len());
        for (k, j) in self.net.junctions.iter().enumerate() {
            let (x, y) = (a.junctions[k], b.junctions[k]);
            let target = 0.5 * (junction::storage(&self.net, j, x.level) + junction::storage(&self.net, j, y.level));
            let level = junction::level_for_storage(&self.net, j, target, y.level).map_err(|source| {
                SolverError::Junction {
                    time: b.time,
                    source,
                }
            })?;
            junctions.push(JunctionState {
                level,
                discharge: 0.5 * (x.discharge + y.discharge),
            });
        }
        Ok(FlowState {
            time: b.time,
            links,
            junctions,
        })
    }

    /// One forward-Euler step of length `dt` from a state already passed to [`Solver::evaluate`].
    pub fn step_euler(&mut self, state: &FlowState, dt: f64) -> Result<(FlowState, StepReport), SolverError> {
        check_dt(state, dt)?;
        let before = state.storage(&self.net);
        let inc = self.increment(state, dt);
        let next = self.apply(state, &inc, dt)?;
        Ok(self.report(before, next, dt, &[&inc], 1.0))
    }

    /// Second-order semi-implicit step of length `dt` from an evaluated state.
    pub fn step_ssp2(&mut self, state: &FlowState, dt: f64) -> Result<(FlowState, StepReport), SolverError> {
        check_dt(state, dt)?;
        let before = state.storage(&self.net);
        let inc0 = self.increment(state, dt);
        let u1 = self.apply(state, &inc0, dt)?;
        self.evaluate(&u1)?;
        let inc1 = self.increment(&u1, dt);
        let mut e1 = self.apply(&u1, &inc1, dt)?;
        e1.time = state.time + dt;
        let mut u2 = self.average(state, &e1)?;
        let stiff = inc1.links.iter().any(|l| l.g.iter().any(|&g| g > 0.0))
            || inc0.links.iter().any(|l| l.g.iter().any(|&g| g > 0.0))
            || inc1.g.iter().any(|&g| g > 0.0);
        if stiff {
            u2.time = state.time + dt;
            self.evaluate(&u2)?;
            let inc2 = self.increment(&u2, dt);
            for (ls, d) in u2.links.iter_mut().zip(&inc2.links) {
                for j in 0..ls.discharge.len() {
                    let gdt = dt * d.g[j];
                    if gdt > 0.0 && ls.area[j] > 0.0 {
                        ls.discharge[j] = (ls.discharge[j] + d.dq[j] * gdt) / (1.0 + gdt * gdt);
                    }
                }
            }
            for (k, js) in u2.junctions.iter_mut().enumerate() {
                let gdt = dt * inc2.g[k];
                if gdt > 0.0 {
                    js.discharge = (js.discharge + inc2.dq[k] * gdt) / (1.0 + gdt * gdt);
                }
            }
        }
        u2.time = state.time + dt;
        Ok(self.report(before, u2, dt, &[&inc0, &inc1], 0.5))
    }

    fn report(
        &self,
        before: f64,
        next: FlowState,
        dt: f64,
        incs: &[&Increment],
        weight: f64,
    ) -> (FlowState, StepReport) {
        let after = next.storage(&self.net);
        let boundary_inflow: f64 = incs.iter().map(|i| i.boundary_inflow).sum::<f64>() * weight;
        let lateral_inflow: f64 = incs.iter().map(|i| i.lateral_inflow).sum::<f64>() * weight;
        let residual = (after - before) - boundary_inflow - lateral_inflow;
        let scale = before.max(after).max(f64::MIN_POSITIVE);
        let mut min_depth = f64::INFINITY;
        let mut min_area = f64::INFINITY;
        for (li, ls) in next.links.iter().enumerate() {
            for (j, &a) in ls.area.iter().enumerate() {
                min_area = min_area.min(a);
                let h = self.shapes[li][j].mean.depth_for_area(a.max(0.0)).unwrap_or(f64::NAN);
                min_depth = min_depth.min(h);
            }
        }
        let report = StepReport {
            dt,
            min_depth,
            min_area,
            mass_residual: residual / scale,
            boundary_inflow,
            lateral_inflow,
            drained_faces: incs.iter().map(|i| i.drained_faces).sum(),
            boundary_fallbacks: incs.iter().map(|i| i.boundary_fallbacks).sum(),
            supercritical_junction: incs.iter().any(|i| i.supercritical_junction),
            dry_stubs: incs.iter().map(|i| i.dry_stubs).sum(),
        };
        (next, report)
    }

    /// Advance one step: evaluate fluxes, pick `dt` (the CFL step capped by
    /// `dt_cap`, or `fixed_dt` when given) and integrate.
    pub fn step(
        &mut self,
        state: &FlowState,
        fixed_dt: Option<f64>,
        dt_cap: f64,
    ) -> Result<(FlowState, StepReport), SolverError> {
        let mut cfl = self.evaluate(state)?;
        if !cfl.is_finite() {
            cfl = self.forcing_step(state.time);
        }
        let dt = fixed_dt.unwrap_or(cfl).min(dt_cap);
        match self.params.integrator {
            Integrator::Euler => self.step_euler(state, dt),
            Integrator::Ssp2 => self.step_ssp2(state, dt),
        }
    }
}

impl Solver {
    /// Step limit from the boundary and lateral forcing, for states without wave speeds.
    fn forcing_step(&self, t: f64) -> f64 {
        let boundaries = self.net.boundaries.iter().map(|b| match &b.condition {
            BoundaryCondition::Discharge { discharge } => discharge.quiet_step(t),
            BoundaryCondition::Surface { level } | BoundaryCondition::SurfaceSimple { level } => level.quiet_step(t),
            BoundaryCondition::Wall { source } => source.as_ref().map_or(f64::INFINITY, |h| h.quiet_step(t)),
            BoundaryCondition::Outflow => f64::INFINITY,
        });
        let lateral = self
            .net
            .junctions
            .iter()
            .map(|j| j.lateral_inflow.as_ref().map_or(f64::INFINITY, |h| h.quiet_step(t)));
        boundaries.chain(lateral).fold(f64::INFINITY, f64::min)
    }
}

fn check_dt(state: &FlowState, dt: f64) -> Result<(), SolverError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(SolverError::BadTimeStep { time: state.time, dt })
    }
}

/// CFL time step of `state` (evaluates the solver).
pub fn stable_dt(solver: &mut Solver, state: &FlowState) -> Result<f64, SolverError> {
    solver.evaluate(state)
}

/// Draining time of a cell with mean area `area` and length `dx`.
pub fn draining_time(dx: f64, area: f64, h1_left: f64, h1_right: f64) -> f64 {
    let out = h1_right.max(0.0) + (-h1_left).max(0.0);
    if out > 0.0 {
        dx * area / out
    } else {
        f64::INFINITY
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect() -> CrossSection {
        CrossSection::rectangular("r", 1.0).unwrap()
    }

    #[test]
    fn speeds_at_rest() {
        let s = SideState::new(&rect(), 1.0, 0.0, 9.81, 1e-12);
        let (ap, am) = local_speeds(&s, &s);
        assert!((ap - 3.132_091_952_673_165).abs() < 1e-12);
        assert!((am + 3.132_091_952_673_165).abs() < 1e-12);
        let d = SideState::default();
        assert_eq!(local_speeds(&d, &d), (0.0, 0.0));
        let fast = SideState::new(&rect(), 0.1, 1.0, 9.81, 1e-12);
        assert_eq!(local_speeds(&fast, &fast).1, 0.0);
    }

    #[test]
    fn flux_collapses_to_physical_flux() {
        let s = SideState::new(&rect(), 0.7, 0.4, 9.81, 1e-12);
        let f = face_flux(&s, &s, 9.81);
        assert!((f.h1 - s.q).abs() < 1e-15);
        assert!((f.h2() - (s.q * s.u + 9.81 * s.i1)).abs() < 1e-14);
        let rest = SideState::new(&rect(), 0.7, 0.0, 9.81, 1e-12);
        let f = face_flux(&rest, &rest, 9.81);
        assert_eq!(f.h1, 0.0);
        assert!((f.h2() - 9.81 * 0.245).abs() < 1e-14);
        let dry = SideState::default();
        assert_eq!(face_flux(&dry, &dry, 9.81).h1, 0.0);
    }

    #[test]
    fn friction_and_drain() {
        let sec = Arc::new(rect());
        let l = FaceGeometry::new(0.0, 0.0, sec.clone());
        let r = FaceGeometry::new(1.0, 0.0, sec.clone());
        assert_eq!(friction_coefficient(&l, &r, &sec, 0.01, 1.0, 0.0, 9.81, 1e-12), 0.0);
        assert_eq!(friction_coefficient(&l, &r, &sec, 0.0, 1.0, 1.0, 9.81, 1e-12), 0.0);
        assert!((draining_time(1.0, 1.0, -1.0, 2.0) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(draining_time(1.0, 1.0, 1.0, -1.0), f64::INFINITY);
    }
}
