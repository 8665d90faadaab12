//! Cross-section tables and closed-form hydrostatic integrals over a cell.
//!
//! A cross-section is a piecewise-linear width profile `σ(y)` over depth.
//! Between two faces the geometry is blended linearly in `x`, the bed is
//! linear and the water surface is linear, so every cell integral reduces to
//! polynomial moments of `σ` that are evaluated segment by segment.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("negative depth {0}")]
    NegativeDepth(f64),
    #[error("negative area {0}")]
    NegativeArea(f64),
    #[error("coordinate {x} outside cell [{lo}, {hi}]")]
    OutsideCell { x: f64, lo: f64, hi: f64 },
    #[error("cross-section '{name}': {reason}")]
    InvalidSection { name: String, reason: String },
    #[error("area {area} exceeds the capacity of cross-section '{name}'")]
    Capacity { name: String, area: f64 },
}

/// Piecewise-linear depth to width table.
///
/// Above the last knot the final segment is extended linearly. A narrowing
/// final segment is extended with constant width instead so that the section
/// never closes.
#[derive(Clone)]
pub struct CrossSection {
    name: String,
    depths: Vec<f64>,
    widths: Vec<f64>,
    /// Width slope of segment k; the last entry applies above the top knot.
    slopes: Vec<f64>,
    area_at: Vec<f64>,
    moment_at: Vec<f64>,
    perimeter_at: Vec<f64>,
}

impl fmt::Debug for CrossSection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CrossSection")
            .field("name", &self.name)
            .field("points", &self.points())
            .finish()
    }
}

impl PartialEq for CrossSection {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.depths == other.depths && self.widths == other.widths
    }
}

/// Zeroth, first and second moments `∫(top − y)^n σ(y) dy` over a depth range.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub m0: f64,
    pub m1: f64,
    pub m2: f64,
}

impl CrossSection {
    pub fn new(name: impl Into<String>, points: &[(f64, f64)]) -> Result<Self, GeometryError> {
        let name = name.into();
        let invalid = |reason: String| GeometryError::InvalidSection {
            name: name.clone(),
            reason,
        };
        if points.len() < 2 {
            return Err(invalid(format!("needs at least 2 points, got {}", points.len())));
        }
        if points[0].0 != 0.0 {
            return Err(invalid(format!("first depth must be 0, got {}", points[0].0)));
        }
        for (k, &(h, s)) in points.iter().enumerate() {
            if !h.is_finite() || !s.is_finite() {
                return Err(invalid(format!("point {k} is not finite")));
            }
            if s < 0.0 {
                return Err(invalid(format!("point {k} has negative width {s}")));
            }
            if k > 0 && h <= points[k - 1].0 {
                return Err(invalid(format!("depths not strictly increasing at point {k}")));
            }
        }
        let depths: Vec<f64> = points.iter().map(|p| p.0).collect();
        let widths: Vec<f64> = points.iter().map(|p| p.1).collect();
        let n = depths.len();
        let mut slopes = Vec::with_capacity(n);
        for k in 0..n - 1 {
            slopes.push((widths[k + 1] - widths[k]) / (depths[k + 1] - depths[k]));
        }
        slopes.push(slopes[n - 2].max(0.0));
        if widths[n - 1] == 0.0 && slopes[n - 1] == 0.0 {
            return Err(invalid("section closes at its top knot".into()));
        }
        let mut area_at = vec![0.0; n];
        let mut moment_at = vec![0.0; n];
        let mut perimeter_at = vec![widths[0]; n];
        for k in 0..n - 1 {
            let d = depths[k + 1] - depths[k];
            let (sa, sb) = (widths[k], widths[k + 1]);
            area_at[k + 1] = area_at[k] + 0.5 * d * (sa + sb);
            moment_at[k + 1] = moment_at[k] + d * area_at[k] + d * d * (sb / 6.0 + sa / 3.0);
            perimeter_at[k + 1] = perimeter_at[k] + bank_length(d, sb - sa);
        }
        Ok(Self {
            name,
            depths,
            widths,
            slopes,
            area_at,
            moment_at,
            perimeter_at,
        })
    }

    /// Rectangular section of the given width.
    pub fn rectangular(name: impl Into<String>, width: f64) -> Result<Self, GeometryError> {
        Self::new(name, &[(0.0, width), (1.0, width)])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn points(&self) -> Vec<(f64, f64)> {
        self.depths.iter().copied().zip(self.widths.iter().copied()).collect()
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    #[inline]
    fn segment(&self, h: f64) -> usize {
        let n = self.depths.len();
        if h >= self.depths[n - 1] {
            return n - 1;
        }
        self.depths.partition_point(|&d| d <= h).saturating_sub(1)
    }

    #[inline]
    fn width_in(&self, k: usize, y: f64) -> f64 {
        (self.widths[k] + self.slopes[k] * (y - self.depths[k])).max(0.0)
    }

    /// Width at depth `h` (negative depths read as 0).
    #[inline]
    pub fn width(&self, h: f64) -> f64 {
        let h = h.max(0.0);
        self.width_in(self.segment(h), h)
    }

    /// Wetted area `∫₀ʰ σ dy`.
    #[inline]
    pub fn area(&self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        let k = self.segment(h);
        let d = h - self.depths[k];
        self.area_at[k] + d * (self.widths[k] + 0.5 * self.slopes[k] * d)
    }

    /// Hydrostatic moment `∫₀ʰ (h − y) σ dy`.
    #[inline]
    pub fn moment(&self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        let k = self.segment(h);
        let d = h - self.depths[k];
        let s_top = self.width_in(k, h);
        self.moment_at[k] + d * self.area_at[k] + d * d * (s_top / 6.0 + self.widths[k] / 3.0)
    }

    /// Wetted perimeter with symmetric banks.
    pub fn perimeter(&self, h: f64) -> f64 {
        let h = h.max(0.0);
        let k = self.segment(h);
        let d = h - self.depths[k];
        self.perimeter_at[k] + bank_length(d, self.slopes[k] * d)
    }

    pub fn hydraulic_radius(&self, h: f64) -> f64 {
        if h <= 0.0 {
            return 0.0;
        }
        let p = self.perimeter(h);
        if p > 0.0 {
            self.area(h) / p
        } else {
            0.0
        }
    }

    /// Inverse of [`CrossSection::area`].
    pub fn depth_for_area(&self, a: f64) -> Result<f64, GeometryError> {
        if a < 0.0 {
            return Err(GeometryError::NegativeArea(a));
        }
        if a == 0.0 {
            return Ok(0.0);
        }
        let n = self.depths.len();
        let k = self.area_at.partition_point(|&v| v <= a).saturating_sub(1).min(n - 1);
        let rem = a - self.area_at[k];
        let s = self.widths[k];
        let disc = (s * s + 2.0 * self.slopes[k] * rem).max(0.0);
        let denom = s + disc.sqrt();
        if denom <= 0.0 {
            if rem == 0.0 {
                return Ok(self.depths[k]);
            }
            return Err(GeometryError::Capacity {
                name: self.name.clone(),
                area: a,
            });
        }
        Ok(self.depths[k] + 2.0 * rem / denom)
    }

    /// Moments `∫_lo^hi (hi − y)^n σ(y) dy`, n = 0, 1, 2, accumulated per segment
    /// from non-negative terms only.
    pub fn moments(&self, lo: f64, hi: f64) -> Moments {
        let mut m = Moments::default();
        let lo = lo.max(0.0);
        if hi <= lo {
            return m;
        }
        let n = self.depths.len();
        let mut k = self.segment(lo);
        let mut p = lo;
        loop {
            let q = if k + 1 < n { self.depths[k + 1].min(hi) } else { hi };
            let len = q - p;
            if len > 0.0 {
                let sb = self.width_in(k, p);
                let sa = self.width_in(k, q);
                let va = hi - q;
                let half = 0.5 * (sa + sb);
                let lin = sa / 6.0 + sb / 3.0;
                let quad = sa / 12.0 + sb / 4.0;
                m.m0 += len * half;
                m.m1 += len * (va * half + len * lin);
                m.m2 += len * (va * va * half + 2.0 * va * len * lin + len * len * quad);
            }
            if q >= hi || k + 1 >= n {
                break;
            }
            p = q;
            k += 1;
        }
        m
    }

    /// Section whose width is the mean of two sections' widths.
    pub fn mean(a: &Arc<CrossSection>, b: &Arc<CrossSection>) -> Arc<CrossSection> {
        if Arc::ptr_eq(a, b) || a == b {
            return Arc::clone(a);
        }
        let mut knots: Vec<f64> = a.depths.iter().chain(b.depths.iter()).copied().collect();
        knots.sort_by(f64::total_cmp);
        knots.dedup();
        let mut pts: Vec<(f64, f64)> = knots
            .iter()
            .map(|&y| (y, 0.5 * (a.width(y) + b.width(y))))
            .collect();
        // Carry the mean extrapolation slope past the last shared knot.
        let top = *knots.last().unwrap();
        let step = 1.0 + top;
        pts.push((top + step, 0.5 * (a.width(top + step) + b.width(top + step))));
        let name = format!("mean({},{})", a.name, b.name);
        Arc::new(CrossSection::new(name, &pts).expect("mean of valid sections is valid"))
    }
}

#[inline]
fn bank_length(dh: f64, dwidth: f64) -> f64 {
    2.0 * (dh * dh + 0.25 * dwidth * dwidth).sqrt()
}

/// A cell interface: longitudinal position, bed elevation and cross-section.
#[derive(Clone, Debug, PartialEq)]
pub struct FaceGeometry {
    pub x: f64,
    pub bed: f64,
    pub section: Arc<CrossSection>,
}

impl FaceGeometry {
    pub fn new(x: f64, bed: f64, section: Arc<CrossSection>) -> Self {
        Self { x, bed, section }
    }
}

/// Wet part of a sub-interval `[a, b]` with non-negative end depths.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WetSpan {
    pub a: f64,
    pub b: f64,
    pub ha: f64,
    pub hb: f64,
}

impl WetSpan {
    /// Clip the linear depth profile through `(x1, h1)`, `(x2, h2)` to its wet part.
    pub fn clip(x1: f64, x2: f64, h1: f64, h2: f64) -> Option<WetSpan> {
        if x2 <= x1 || (h1 <= 0.0 && h2 <= 0.0) {
            return None;
        }
        if h1 >= 0.0 && h2 >= 0.0 {
            return Some(WetSpan { a: x1, b: x2, ha: h1, hb: h2 });
        }
        let xs = (x1 + (x2 - x1) * h1 / (h1 - h2)).clamp(x1, x2);
        if h1 < 0.0 {
            (xs < x2).then_some(WetSpan { a: xs, b: x2, ha: 0.0, hb: h2 })
        } else {
            (xs > x1).then_some(WetSpan { a: x1, b: xs, ha: h1, hb: 0.0 })
        }
    }

    /// Wet part of `[x1, x2]` under the surface through `(xL, wL)` and `(xR, wR)`.
    pub fn under_surface(
        left: &FaceGeometry,
        right: &FaceGeometry,
        x1: f64,
        x2: f64,
        wl: f64,
        wr: f64,
    ) -> Option<WetSpan> {
        let hl = wl - left.bed;
        let hr = wr - right.bed;
        let h1 = depth_between(left.x, right.x, hl, hr, x1);
        let h2 = depth_between(left.x, right.x, hl, hr, x2);
        WetSpan::clip(x1, x2, h1, h2)
    }

    #[inline]
    fn oriented(&self) -> (f64, f64, f64, f64) {
        // (h_lo, h_hi, x at h_hi, direction from the deep end toward the shallow end)
        if self.ha >= self.hb {
            (self.hb, self.ha, self.a, 1.0)
        } else {
            (self.ha, self.hb, self.b, -1.0)
        }
    }
}

#[inline]
fn depth_between(xl: f64, xr: f64, hl: f64, hr: f64, x: f64) -> f64 {
    if x == xl {
        return hl;
    }
    if x == xr {
        return hr;
    }
    let dx = xr - xl;
    ((xr - x) * hl + (x - xl) * hr) / dx
}

/// Linear blend weights of the left and right face at `x`.
#[inline]
fn weights(left: &FaceGeometry, right: &FaceGeometry, x: f64) -> (f64, f64) {
    let dx = right.x - left.x;
    ((right.x - x) / dx, (x - left.x) / dx)
}

/// Water volume over a wet span, exact for the blended geometry.
pub fn span_volume(left: &FaceGeometry, right: &FaceGeometry, s: &WetSpan) -> f64 {
    let dx = right.x - left.x;
    let len = s.b - s.a;
    let (h_lo, h_hi, x_hi, dir) = s.oriented();
    let depth_range = h_hi - h_lo;
    let (wl_mid, wr_mid) = weights(left, right, 0.5 * (s.a + s.b));
    let (wl_hi, wr_hi) = weights(left, right, x_hi);
    let mut v = 0.0;
    for (face, w_mid, w_hi, dw) in [
        (left, wl_mid, wl_hi, -1.0 / dx),
        (right, wr_mid, wr_hi, 1.0 / dx),
    ] {
        let sec = &face.section;
        if depth_range <= 0.0 {
            v += len * w_mid * sec.area(h_hi);
            continue;
        }
        let r = len / depth_range;
        let m = sec.moments(h_lo, h_hi);
        v += len * w_mid * sec.area(h_lo) + w_hi * r * m.m1 + dw * dir * 0.5 * r * r * m.m2;
    }
    v.max(0.0)
}

/// Wall-pressure source over a wet span.
pub fn span_wall_force(left: &FaceGeometry, right: &FaceGeometry, s: &WetSpan) -> f64 {
    if Arc::ptr_eq(&left.section, &right.section) {
        return 0.0;
    }
    let dx = right.x - left.x;
    let len = s.b - s.a;
    let (h_lo, h_hi, _, _) = s.oriented();
    let depth_range = h_hi - h_lo;
    let face_term = |sec: &CrossSection| {
        let mut t = sec.moment(h_lo);
        if depth_range > 0.0 {
            t += 0.5 * depth_range * sec.area(h_lo) + sec.moments(h_lo, h_hi).m2 / (2.0 * depth_range);
        }
        t
    };
    len / dx * (face_term(&right.section) - face_term(&left.section))
}

/// Derivative of the span volume with respect to a horizontal surface level.
pub fn span_volume_rate(left: &FaceGeometry, right: &FaceGeometry, s: &WetSpan) -> f64 {
    let dx = right.x - left.x;
    let len = s.b - s.a;
    let (h_lo, h_hi, x_hi, dir) = s.oriented();
    let depth_range = h_hi - h_lo;
    let (wl_mid, wr_mid) = weights(left, right, 0.5 * (s.a + s.b));
    let (wl_hi, wr_hi) = weights(left, right, x_hi);
    let mut r_total = 0.0;
    for (face, w_mid, w_hi, dw) in [
        (left, wl_mid, wl_hi, -1.0 / dx),
        (right, wr_mid, wr_hi, 1.0 / dx),
    ] {
        let sec = &face.section;
        if depth_range <= 0.0 {
            r_total += len * w_mid * sec.width(h_hi);
            continue;
        }
        let r = len / depth_range;
        let m = sec.moments(h_lo, h_hi);
        r_total += r * (w_hi * m.m0 + dw * dir * r * m.m1);
    }
    r_total.max(0.0)
}

/// Width at depth `h`.
pub fn width_at(section: &CrossSection, h: f64) -> Result<f64, GeometryError> {
    check_depth(h)?;
    Ok(section.width(h))
}

/// Wetted area at depth `h`.
pub fn area(section: &CrossSection, h: f64) -> Result<f64, GeometryError> {
    check_depth(h)?;
    Ok(section.area(h))
}

/// Depth holding area `a`.
pub fn depth_from_area(section: &CrossSection, a: f64) -> Result<f64, GeometryError> {
    section.depth_for_area(a)
}

pub fn wetted_perimeter(section: &CrossSection, h: f64) -> Result<f64, GeometryError> {
    check_depth(h)?;
    Ok(section.perimeter(h))
}

pub fn hydraulic_radius(section: &CrossSection, h: f64) -> Result<f64, GeometryError> {
    check_depth(h)?;
    Ok(section.hydraulic_radius(h))
}

/// Hydrostatic pressure force at `x_i` for depth `h_i`, blended between faces.
pub fn pressure_i1(
    left: &FaceGeometry,
    right: &FaceGeometry,
    x_i: f64,
    h_i: f64,
) -> Result<f64, GeometryError> {
    check_depth(h_i)?;
    check_inside(left, right, x_i)?;
    let (wl, wr) = weights(left, right, x_i);
    let mut v = 0.0;
    if wl != 0.0 {
        v += wl * left.section.moment(h_i);
    }
    if wr != 0.0 {
        v += wr * right.section.moment(h_i);
    }
    Ok(v)
}

/// Water volume over `[x1, x2]` under the linear surface through `(xL, wL)`, `(xR, wR)`.
pub fn volume(left: &FaceGeometry, right: &FaceGeometry, x1: f64, x2: f64, wl: f64, wr: f64) -> f64 {
    WetSpan::under_surface(left, right, x1, x2, wl, wr)
        .map_or(0.0, |s| span_volume(left, right, &s))
}

/// Wall-pressure source over `[x1, x2]` for non-negative end depths `h1`, `h2`.
pub fn wall_force_i2(
    left: &FaceGeometry,
    right: &FaceGeometry,
    x1: f64,
    x2: f64,
    h1: f64,
    h2: f64,
) -> Result<f64, GeometryError> {
    check_depth(h1)?;
    check_depth(h2)?;
    check_inside(left, right, x1)?;
    check_inside(left, right, x2)?;
    Ok(WetSpan::clip(x1, x2, h1, h2).map_or(0.0, |s| span_wall_force(left, right, &s)))
}

/// Bed-slope source `(B_R − B_L)/Δx · V` over `[x1, x2]`.
pub fn bed_slope_term_bx(
    left: &FaceGeometry,
    right: &FaceGeometry,
    x1: f64,
    x2: f64,
    wl: f64,
    wr: f64,
) -> f64 {
    let slope = (right.bed - left.bed) / (right.x - left.x);
    if slope == 0.0 {
        return 0.0;
    }
    slope * volume(left, right, x1, x2, wl, wr)
}

/// Derivative of the whole-cell volume with respect to a horizontal surface `y`.
pub fn volume_rate(left: &FaceGeometry, right: &FaceGeometry, y: f64) -> f64 {
    WetSpan::under_surface(left, right, left.x, right.x, y, y)
        .map_or(0.0, |s| span_volume_rate(left, right, &s))
}

fn check_depth(h: f64) -> Result<(), GeometryError> {
    if h < 0.0 || h.is_nan() {
        Err(GeometryError::NegativeDepth(h))
    } else {
        Ok(())
    }
}

fn check_inside(left: &FaceGeometry, right: &FaceGeometry, x: f64) -> Result<(), GeometryError> {
    if x < left.x || x > right.x || x.is_nan() {
        Err(GeometryError::OutsideCell {
            x,
            lo: left.x,
            hi: right.x,
        })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rect(w: f64) -> Arc<CrossSection> {
        Arc::new(CrossSection::rectangular("r", w).unwrap())
    }

    fn trapezoid() -> CrossSection {
        CrossSection::new("t", &[(0.0, 1.0), (2.0, 1.6)]).unwrap()
    }

    #[test]
    fn width_area_and_inverse() {
        let r = rect(1.0);
        assert_eq!(r.width(0.5), 1.0);
        assert_eq!(r.area(0.5), 0.5);
        let t = trapezoid();
        assert!((t.width(1.0) - 1.3).abs() < 1e-15);
        assert!((t.area(1.0) - 1.15).abs() < 1e-15);
        assert!((t.depth_for_area(1.15).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(t.depth_for_area(0.0).unwrap(), 0.0);
        assert_eq!(t.width(0.0), 1.0);
        assert!(matches!(area(&t, -1.0), Err(GeometryError::NegativeDepth(_))));
        assert!(t.depth_for_area(-1.0).is_err());
    }

    #[test]
    fn extrapolates_above_top() {
        let t = trapezoid();
        assert!((t.width(4.0) - 2.2).abs() < 1e-14);
        assert!((t.area(4.0) - (4.0 + 0.15 * 16.0)).abs() < 1e-13);
    }

    #[test]
    fn perimeter_and_radius() {
        let r = rect(1.0);
        assert!((r.perimeter(0.5) - 2.0).abs() < 1e-15);
        assert!((r.hydraulic_radius(0.5) - 0.25).abs() < 1e-15);
        let tri = CrossSection::new("tri", &[(0.0, 0.0), (1.0, 2.0)]).unwrap();
        assert!((tri.perimeter(1.0) - 2.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!((tri.area(1.0) - 1.0).abs() < 1e-15);
        assert!((tri.hydraulic_radius(1.0) - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-15);
        assert_eq!(r.perimeter(0.0), 1.0);
        assert_eq!(r.hydraulic_radius(0.0), 0.0);
    }

    #[test]
    fn moment_matches_closed_forms() {
        let l = FaceGeometry::new(0.0, 0.0, rect(1.0));
        let r = FaceGeometry::new(1.0, 0.0, rect(1.0));
        assert!((pressure_i1(&l, &r, 0.3, 2.0).unwrap() - 2.0).abs() < 1e-15);
        assert_eq!(pressure_i1(&l, &r, 0.3, 0.0).unwrap(), 0.0);
        assert!(pressure_i1(&l, &r, 1.5, 1.0).is_err());
        let t = trapezoid();
        // ∫₀ʰ (h−y)(1+0.3y) dy = h²/2 + 0.05h³
        assert!((t.moment(1.5) - (1.125 + 0.05 * 3.375)).abs() < 1e-14);
    }

    #[test]
    fn volume_examples() {
        let sec = rect(1.0);
        let l = FaceGeometry::new(0.0, 0.0, sec.clone());
        let r = FaceGeometry::new(1.0, 0.0, sec.clone());
        assert!((volume(&l, &r, 0.0, 1.0, 0.5, 0.5) - 0.5).abs() < 1e-15);
        let r1 = FaceGeometry::new(1.0, 1.0, sec.clone());
        assert!((volume(&l, &r1, 0.0, 1.0, 0.5, 0.5) - 0.125).abs() < 1e-15);
        assert_eq!(volume(&l, &r1, 0.0, 1.0, -1.0, 0.5), 0.0);
        assert!((bed_slope_term_bx(&l, &r1, 0.0, 1.0, 2.0, 2.0) - 1.5).abs() < 1e-14);
        assert_eq!(bed_slope_term_bx(&l, &r, 0.0, 1.0, 2.0, 2.0), 0.0);
    }

    #[test]
    fn wall_force_examples() {
        let l = FaceGeometry::new(0.0, 0.0, rect(1.0));
        let r = FaceGeometry::new(1.0, 0.0, rect(2.0));
        assert!((wall_force_i2(&l, &r, 0.0, 1.0, 1.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(wall_force_i2(&l, &r, 0.0, 1.0, 0.0, 0.0).unwrap(), 0.0);
        let same = rect(1.0);
        let l2 = FaceGeometry::new(0.0, 0.0, same.clone());
        let r2 = FaceGeometry::new(1.0, 0.0, same);
        assert_eq!(wall_force_i2(&l2, &r2, 0.0, 1.0, 1.0, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn volume_rate_of_prism_is_storage_area() {
        let l = FaceGeometry::new(0.0, 0.0, rect(2.0));
        let r = FaceGeometry::new(0.5, 0.0, rect(2.0));
        assert!((volume_rate(&l, &r, 0.7) - 1.0).abs() < 1e-15);
        assert_eq!(volume_rate(&l, &r, -0.1), 0.0);
    }

    #[test]
    fn mean_section() {
        let a = rect(1.0);
        let b = rect(3.0);
        let m = CrossSection::mean(&a, &b);
        assert!((m.area(0.5) - 1.0).abs() < 1e-15);
        assert!((m.depth_for_area(1.0).unwrap() - 0.5).abs() < 1e-15);
    }
}
