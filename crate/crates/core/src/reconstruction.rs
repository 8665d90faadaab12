//! Wet/dry piecewise-linear reconstruction of the water surface and discharge.

use std::sync::Arc;

use thiserror::Error;

use crate::geometry::{self, CrossSection, FaceGeometry, WetSpan};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconstructionError {
    #[error("still-water level did not converge (area {area}, residual {residual})")]
    NoConvergence { area: f64, residual: f64 },
    #[error("negative cell area {0}")]
    NegativeArea(f64),
}

/// Which part of a partially flooded cell holds the water.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum WetSide {
    /// The surface is defined over the whole cell.
    #[default]
    Full,
    /// Water pools against the left face (bed rises to the right).
    Left,
    /// Water pools against the right face (bed rises to the left).
    Right,
}

impl WetSide {
    pub fn mirrored(self) -> Self {
        match self {
            WetSide::Full => WetSide::Full,
            WetSide::Left => WetSide::Right,
            WetSide::Right => WetSide::Left,
        }
    }
}

/// Geometry of one cell that does not depend on the flow.
#[derive(Clone, Debug)]
pub struct CellShape {
    /// Mean of the two face sections, for the bed-parallel depth.
    pub mean: Arc<CrossSection>,
    /// Area at which the still-water level reaches the higher face bed.
    pub full_area: f64,
}

impl CellShape {
    pub fn new(left: &FaceGeometry, right: &FaceGeometry) -> Self {
        let mean = CrossSection::mean(&left.section, &right.section);
        let top = left.bed.max(right.bed);
        let full_area = geometry::volume(left, right, left.x, right.x, top, top) / (right.x - left.x);
        Self { mean, full_area }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CellReconstruction {
    /// Surface elevation used by the slope stencils.
    pub w: f64,
    /// Horizontal surface holding the cell volume.
    pub w_st: f64,
    /// Depth of the bed-parallel surface holding the cell volume.
    pub h_av: f64,
    pub wet: bool,
    /// Wet fraction of the cell length, 1 unless the cell holds still water.
    pub fraction: f64,
    pub side: WetSide,
    pub q: f64,
    pub slope_w: f64,
    pub slope_q: f64,
    /// True when the cell is empty.
    pub empty: bool,
}

impl CellReconstruction {
    /// Signed wet fraction: `f` when the water sits on the left, `f − 1` when on the right.
    pub fn l(&self) -> f64 {
        match self.side {
            WetSide::Full => 1.0,
            WetSide::Left => self.fraction,
            WetSide::Right => self.fraction - 1.0,
        }
    }
}

/// `√2·A·Q / √(A⁴ + max(A⁴, ε))`.
#[inline]
pub fn desingularize_velocity(a: f64, q: f64, eps: f64) -> f64 {
    if a <= 0.0 {
        return 0.0;
    }
    let a4 = a * a * a * a;
    std::f64::consts::SQRT_2 * a * q / (a4 + a4.max(eps)).sqrt()
}

#[inline]
pub fn minmod(a: f64, b: f64) -> f64 {
    if a > 0.0 && b > 0.0 {
        a.min(b)
    } else if a < 0.0 && b < 0.0 {
        a.max(b)
    } else {
        0.0
    }
}

/// Depth of the bed-parallel surface holding mean area `area`.
pub fn average_depth(left: &FaceGeometry, right: &FaceGeometry, area: f64) -> Result<f64, ReconstructionError> {
    if area < 0.0 {
        return Err(ReconstructionError::NegativeArea(area));
    }
    let mean = CrossSection::mean(&left.section, &right.section);
    mean.depth_for_area(area)
        .map_err(|_| ReconstructionError::NoConvergence { area, residual: f64::NAN })
}

/// Horizontal surface elevation holding mean area `area` in the cell.
pub fn still_water_level(left: &FaceGeometry, right: &FaceGeometry, area: f64) -> Result<f64, ReconstructionError> {
    let shape = CellShape::new(left, right);
    still_water_level_with(left, right, &shape, area, None)
}

pub(crate) fn still_water_level_with(
    left: &FaceGeometry,
    right: &FaceGeometry,
    shape: &CellShape,
    area: f64,
    h_av: Option<f64>,
) -> Result<f64, ReconstructionError> {
    if area < 0.0 {
        return Err(ReconstructionError::NegativeArea(area));
    }
    let b_lo = left.bed.min(right.bed);
    let b_hi = left.bed.max(right.bed);
    if area == 0.0 {
        return Ok(b_lo);
    }
    let h_av = match h_av {
        Some(h) => h,
        None => shape
            .mean
            .depth_for_area(area)
            .map_err(|_| ReconstructionError::NoConvergence { area, residual: f64::NAN })?,
    };
    if (b_hi - b_lo).abs() < 1e-12 {
        return Ok(0.5 * (left.bed + right.bed) + h_av);
    }
    let dx = right.x - left.x;
    let target = area * dx;
    let residual = |w: f64| geometry::volume(left, right, left.x, right.x, w, w) - target;
    // Depth is at most h_av somewhere and at least h_av somewhere.
    let mut lo = b_lo + h_av;
    let mut hi = b_hi + h_av;
    let mut w = if area >= shape.full_area { hi } else { 0.5 * (lo + hi) };
    let mut r = residual(w);
    for _ in 0..100 {
        if r == 0.0 {
            return Ok(w);
        }
        if r > 0.0 {
            hi = hi.min(w);
        } else {
            lo = lo.max(w);
        }
        let slope = WetSpan::under_surface(left, right, left.x, right.x, w, w)
            .map_or(0.0, |s| geometry::span_volume_rate(left, right, &s));
        let mut next = if slope > 0.0 { w - r / slope } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - w).abs();
        w = next;
        r = residual(w);
        if step <= 4.0 * f64::EPSILON * w.abs().max(1.0) || hi - lo <= 4.0 * f64::EPSILON * w.abs().max(1.0) {
            if r.abs() <= 1e-12 * area.max(1.0) * dx {
                return Ok(w);
            }
            break;
        }
    }
    if r.abs() <= 1e-12 * area.max(1.0) * dx {
        return Ok(w);
    }
    Err(ReconstructionError::NoConvergence { area, residual: r / dx })
}

/// Classify a cell and pick the surface elevation used for slopes.
///
/// `quiet` says the cell and its neighbours carry no discharge, which allows a
/// dry cell to hold still water.
pub fn classify_and_level(
    left: &FaceGeometry,
    right: &FaceGeometry,
    shape: &CellShape,
    area: f64,
    q: f64,
    quiet: bool,
) -> Result<CellReconstruction, ReconstructionError> {
    let mid_bed = 0.5 * (left.bed + right.bed);
    let b_lo = left.bed.min(right.bed);
    let mut rec = CellReconstruction {
        w: mid_bed,
        w_st: b_lo,
        h_av: 0.0,
        wet: false,
        fraction: 1.0,
        side: WetSide::Full,
        q,
        slope_w: 0.0,
        slope_q: 0.0,
        empty: area <= 0.0,
    };
    if area < 0.0 {
        return Err(ReconstructionError::NegativeArea(area));
    }
    if area == 0.0 {
        return Ok(rec);
    }
    let h_av = shape
        .mean
        .depth_for_area(area)
        .map_err(|_| ReconstructionError::NoConvergence { area, residual: f64::NAN })?;
    rec.h_av = h_av;
    if area >= shape.full_area {
        rec.w_st = still_water_level_with(left, right, shape, area, Some(h_av))?;
        rec.w = rec.w_st;
        rec.wet = true;
        return Ok(rec);
    }
    rec.w = h_av + mid_bed;
    if quiet {
        let w_st = still_water_level_with(left, right, shape, area, Some(h_av))?;
        rec.w_st = w_st;
        if w_st > b_lo {
            let db = (right.bed - left.bed).abs();
            rec.w = w_st;
            rec.fraction = ((w_st - b_lo) / db).clamp(0.0, 1.0);
            rec.side = if left.bed < right.bed { WetSide::Left } else { WetSide::Right };
        }
    }
    Ok(rec)
}

/// Cell data read by the slope stencils.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Stencil {
    pub w: f64,
    pub q: f64,
    pub wet: bool,
    pub l: f64,
    pub h_av: f64,
    pub b_left: f64,
    pub b_right: f64,
    pub dx: f64,
}

impl Stencil {
    pub fn new(rec: &CellReconstruction, left: &FaceGeometry, right: &FaceGeometry) -> Self {
        Self {
            w: rec.w,
            q: rec.q,
            wet: rec.wet,
            l: rec.l(),
            h_av: rec.h_av,
            b_left: left.bed,
            b_right: right.bed,
            dx: right.x - left.x,
        }
    }

    /// The same cell seen with the x axis reversed.
    pub fn mirrored(&self) -> Self {
        let l = if self.l >= 1.0 {
            1.0
        } else if self.l >= 0.0 {
            self.l - 1.0
        } else {
            self.l + 1.0
        };
        Self {
            l,
            b_left: self.b_right,
            b_right: self.b_left,
            ..*self
        }
    }

    fn lead(&self) -> f64 {
        // Wet fraction measured from the left face (1 + l for cells wet on the right).
        if self.l < 0.0 {
            1.0 + self.l
        } else {
            self.l
        }
    }
}

/// Backward differences `(Δw, ΔQ)` between `prev` and `cur`.
pub fn backward_difference(prev: &Stencil, cur: &Stencil) -> (f64, f64) {
    let dist = |lp: f64, lc: f64| 0.5 * (lp * prev.dx + lc * cur.dx);
    let plain = |d: f64| ((cur.w - prev.w) / d, (cur.q - prev.q) / d);
    match (prev.wet, cur.wet) {
        (true, true) => plain(dist(1.0, 1.0)),
        (true, false) => {
            if cur.b_right > cur.b_left {
                plain(dist(1.0, cur.lead()))
            } else {
                (
                    2.0 * (cur.b_left + cur.h_av - prev.w) / cur.dx,
                    2.0 * (cur.q - prev.q) / cur.dx,
                )
            }
        }
        (false, true) => {
            if prev.b_left > prev.b_right {
                plain(dist(1.0 + prev.l, 1.0))
            } else {
                (
                    2.0 * (cur.w - cur.b_left - prev.h_av) / cur.dx,
                    2.0 * (cur.q - prev.q) / cur.dx,
                )
            }
        }
        (false, false) => {
            if prev.b_left > prev.b_right && cur.b_right > cur.b_left {
                plain(dist(1.0 + prev.l, cur.lead()))
            } else {
                ((cur.b_right - cur.b_left) / cur.dx, 0.0)
            }
        }
    }
}

/// Forward differences `(Δw, ΔQ)` between `cur` and `next`, by mirroring.
pub fn forward_difference(cur: &Stencil, next: &Stencil) -> (f64, f64) {
    let (dw, dq) = backward_difference(&next.mirrored(), &cur.mirrored());
    (-dw, -dq)
}

/// Limited slopes from optional neighbour stencils; a missing side reuses the other.
pub fn limited_slopes(prev: Option<&Stencil>, cur: &Stencil, next: Option<&Stencil>) -> (f64, f64) {
    let back = prev.map(|p| backward_difference(p, cur));
    let fwd = next.map(|n| forward_difference(cur, n));
    match (back, fwd) {
        (Some(b), Some(f)) => (minmod(b.0, f.0), minmod(b.1, f.1)),
        (Some(b), None) => b,
        (None, Some(f)) => f,
        (None, None) => (0.0, 0.0),
    }
}

/// One-sided values `(w⁺ at the left face, w⁻ at the right face)` and the same for Q.
pub fn interface_values(rec: &CellReconstruction, dx: f64) -> ([f64; 2], [f64; 2]) {
    let (to_left, to_right) = match rec.side {
        WetSide::Full => (0.5 * dx, 0.5 * dx),
        WetSide::Left => (0.5 * rec.fraction * dx, (1.0 - 0.5 * rec.fraction) * dx),
        WetSide::Right => ((1.0 - 0.5 * rec.fraction) * dx, 0.5 * rec.fraction * dx),
    };
    (
        [rec.w - rec.slope_w * to_left, rec.w + rec.slope_w * to_right],
        [rec.q - rec.slope_q * to_left, rec.q + rec.slope_q * to_right],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(w: f64) -> Arc<CrossSection> {
        Arc::new(CrossSection::rectangular("r", w).unwrap())
    }

    fn wedge() -> (FaceGeometry, FaceGeometry) {
        let s = rect(1.0);
        (FaceGeometry::new(0.0, 0.0, s.clone()), FaceGeometry::new(1.0, 1.0, s))
    }

    #[test]
    fn velocity_regularization() {
        assert_eq!(desingularize_velocity(1.0, 1.0, 1e-12), 1.0);
        assert_eq!(desingularize_velocity(0.0, 1.0, 1e-12), 0.0);
        let u = desingularize_velocity(1e-6, 1e-6, 1e-12);
        assert!((u - 2f64.sqrt() * 1e-6).abs() < 1e-18);
    }

    #[test]
    fn minmod_values() {
        assert_eq!(minmod(-1.0, 2.0), 0.0);
        assert_eq!(minmod(2.0, 1.0), 1.0);
        assert_eq!(minmod(-3.0, -2.0), -2.0);
    }

    #[test]
    fn levels_and_depths() {
        let s = rect(1.0);
        let l = FaceGeometry::new(0.0, 0.0, s.clone());
        let r = FaceGeometry::new(1.0, 0.0, s);
        assert!((still_water_level(&l, &r, 0.5).unwrap() - 0.5).abs() < 1e-15);
        let (l, r) = wedge();
        assert!((still_water_level(&l, &r, 0.125).unwrap() - 0.5).abs() < 1e-14);
        assert_eq!(still_water_level(&l, &r, 0.0).unwrap(), 0.0);
        let l1 = FaceGeometry::new(0.0, 0.0, rect(1.0));
        let r3 = FaceGeometry::new(1.0, 0.0, rect(3.0));
        assert!((average_depth(&l1, &r3, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(average_depth(&l1, &r3, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn classification() {
        let (l, r) = wedge();
        let shape = CellShape::new(&l, &r);
        let rec = classify_and_level(&l, &r, &shape, 0.125, 0.0, true).unwrap();
        assert!(!rec.wet);
        assert!((rec.l() - 0.5).abs() < 1e-14);
        assert!((rec.w - 0.5).abs() < 1e-14);
        let rec = classify_and_level(&l, &r, &shape, 0.0, 0.0, true).unwrap();
        assert!(!rec.wet && rec.l() == 1.0 && rec.w == 0.5);
        let (r2, l2) = (
            FaceGeometry::new(1.0, 0.0, rect(1.0)),
            FaceGeometry::new(0.0, 1.0, rect(1.0)),
        );
        let shape = CellShape::new(&l2, &r2);
        let rec = classify_and_level(&l2, &r2, &shape, 0.125, 0.0, true).unwrap();
        assert!((rec.l() + 0.5).abs() < 1e-14);
    }

    #[test]
    fn dry_pair_uses_bed_slope() {
        let p = Stencil { w: 0.5, q: 0.0, wet: false, l: 1.0, h_av: 0.0, b_left: 0.0, b_right: 1.0, dx: 1.0 };
        let c = Stencil { w: 1.5, q: 0.3, wet: false, l: 1.0, h_av: 0.0, b_left: 1.0, b_right: 2.0, dx: 1.0 };
        assert_eq!(backward_difference(&p, &c), (1.0, 0.0));
    }

    #[test]
    fn interface_values_full_cell() {
        let rec = CellReconstruction { w: 1.0, slope_w: 2.0, fraction: 1.0, ..Default::default() };
        let (w, _) = interface_values(&rec, 0.1);
        assert!((w[0] - 0.9).abs() < 1e-15 && (w[1] - 1.1).abs() < 1e-15);
    }
}
