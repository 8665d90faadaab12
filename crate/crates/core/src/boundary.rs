//! Boundary conditions: ghost states for discharge, surface, outflow and wall ends.

use serde::{Deserialize, Serialize};

use crate::geometry::CrossSection;
use crate::scheme::{desingularize_velocity, face_flux, SideState};

/// Time series given as a constant, a `[t, value]` table or a built-in shape.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Hydrograph {
    Constant(f64),
    Table(Vec<[f64; 2]>),
    Builtin(BuiltinHydrograph),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinHydrograph {
    /// Sum of half-sine pulses, zero outside every pulse.
    SinePulses { pulses: Vec<SinePulse> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SinePulse {
    pub amplitude: f64,
    pub start: f64,
    pub duration: f64,
    /// Defaults to `duration`, giving a single positive lobe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_period: Option<f64>,
}

impl SinePulse {
    pub fn new(amplitude: f64, start: f64, duration: f64) -> Self {
        Self {
            amplitude,
            start,
            duration,
            half_period: None,
        }
    }
}

/// Fraction of an active forcing segment taken per step when the flow sets no limit.
const RESOLVE: f64 = 1e-3;

impl Hydrograph {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Hydrograph::Constant(v) => *v,
            Hydrograph::Table(rows) => {
                let k = rows.partition_point(|r| r[0] <= t);
                if k == 0 {
                    return rows[0][1];
                }
                if k == rows.len() {
                    return rows[k - 1][1];
                }
                let (a, b) = (rows[k - 1], rows[k]);
                if t == a[0] {
                    return a[1];
                }
                a[1] + (b[1] - a[1]) * (t - a[0]) / (b[0] - a[0])
            }
            Hydrograph::Builtin(BuiltinHydrograph::SinePulses { pulses }) => pulses
                .iter()
                .filter(|p| t >= p.start && t <= p.start + p.duration)
                .map(|p| {
                    let period = p.half_period.unwrap_or(p.duration);
                    p.amplitude * (std::f64::consts::PI * (t - p.start) / period).sin()
                })
                .sum(),
        }
    }

    /// Longest step from `t` that cannot skip a change of the forcing, for use
    /// when the flow itself sets no limit. Infinite for a constant.
    pub fn quiet_step(&self, t: f64) -> f64 {
        match self {
            Hydrograph::Constant(_) => f64::INFINITY,
            Hydrograph::Table(rows) => {
                let k = rows.partition_point(|r| r[0] <= t);
                if k == rows.len() {
                    return f64::INFINITY;
                }
                if k > 0 && rows[k - 1][1] != rows[k][1] {
                    return RESOLVE * (rows[k][0] - rows[k - 1][0]);
                }
                rows[k][0] - t
            }
            Hydrograph::Builtin(BuiltinHydrograph::SinePulses { pulses }) => pulses
                .iter()
                .map(|p| {
                    if t < p.start {
                        p.start - t
                    } else if t < p.start + p.duration {
                        RESOLVE * p.duration
                    } else {
                        f64::INFINITY
                    }
                })
                .fold(f64::INFINITY, f64::min),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        match self {
            Hydrograph::Constant(v) if !v.is_finite() => Err("constant is not finite".into()),
            Hydrograph::Constant(_) => Ok(()),
            Hydrograph::Table(rows) => {
                if rows.is_empty() {
                    return Err("hydrograph table is empty".into());
                }
                for (k, r) in rows.iter().enumerate() {
                    if !r[0].is_finite() || !r[1].is_finite() {
                        return Err(format!("hydrograph row {k} is not finite"));
                    }
                    if k > 0 && r[0] <= rows[k - 1][0] {
                        return Err(format!("hydrograph times not strictly increasing at row {k}"));
                    }
                }
                Ok(())
            }
            Hydrograph::Builtin(BuiltinHydrograph::SinePulses { pulses }) => {
                for (k, p) in pulses.iter().enumerate() {
                    let period = p.half_period.unwrap_or(p.duration);
                    if !(p.duration > 0.0) || !(period > 0.0) || !p.amplitude.is_finite() {
                        return Err(format!("pulse {k} needs positive duration and finite amplitude"));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Condition attached to a boundary node.
///
/// Discharges count positive into the network, whichever link end is attached.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryCondition {
    Discharge { discharge: Hydrograph },
    Surface { level: Hydrograph },
    SurfaceSimple { level: Hydrograph },
    Outflow,
    Wall {
        /// Optional source entering through the wall.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        source: Option<Hydrograph>,
    },
}

impl BoundaryCondition {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            BoundaryCondition::Discharge { discharge: h }
            | BoundaryCondition::Surface { level: h }
            | BoundaryCondition::SurfaceSimple { level: h }
            | BoundaryCondition::Wall { source: Some(h) } => h.validate(),
            _ => Ok(()),
        }
    }
}

/// Ghost state `(Q⁻, h⁻)` outside the domain, in the frame where the ghost
/// sits on the left of the boundary face.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ghost {
    pub q: f64,
    pub h: f64,
    /// False when the nonlinear solve fell back to its default state.
    pub converged: bool,
}

/// Physical constants shared by the ghost-state solvers.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryParams {
    pub gravity: f64,
    pub epsilon: f64,
}

const MAX_ITER: usize = 50;
const TOL: f64 = 1e-10;

/// Ghost state imposing the mass flux `q_target` through the face.
pub fn discharge_bc(
    section: &CrossSection,
    q_target: f64,
    interior: &SideState,
    p: BoundaryParams,
) -> Ghost {
    let residual = |q: f64, h: f64| {
        let ghost = SideState::new(section, h, q, p.gravity, p.epsilon);
        let f = face_flux(&ghost, interior, p.gravity);
        let a = section.area(h);
        let u = desingularize_velocity(a, q_target, p.epsilon);
        [f.h1 - q_target, f.h2() - (q_target * u + p.gravity * section.moment(h))]
    };
    let start = [(interior.q, interior.h), (q_target, critical_depth(section, q_target, p.gravity))];
    for (q0, h0) in start {
        if let Some((q, h)) = newton2(&residual, q0, h0) {
            return Ghost { q, h, converged: true };
        }
    }
    Ghost {
        q: q_target,
        h: interior.h,
        converged: false,
    }
}

/// Ghost state imposing the surface level `level` at a face with bed `bed`.
pub fn surface_bc(
    section: &CrossSection,
    bed: f64,
    level: f64,
    interior: &SideState,
    simplified: bool,
    p: BoundaryParams,
) -> Ghost {
    let h_imp = (level - bed).max(0.0);
    if h_imp == 0.0 {
        return Ghost {
            q: 0.0,
            h: 0.0,
            converged: true,
        };
    }
    if simplified {
        return Ghost {
            q: interior.q,
            h: h_imp,
            converged: true,
        };
    }
    let a_imp = section.area(h_imp);
    let i1_imp = section.moment(h_imp);
    let residual = |q: f64, h: f64| {
        let ghost = SideState::new(section, h, q, p.gravity, p.epsilon);
        let f = face_flux(&ghost, interior, p.gravity);
        let u = desingularize_velocity(a_imp, q, p.epsilon);
        [f.h1 - q, f.h2() - (q * u + p.gravity * i1_imp)]
    };
    match newton2(&residual, interior.q, h_imp) {
        Some((q, h)) => Ghost { q, h, converged: true },
        None => Ghost {
            q: interior.q,
            h: h_imp,
            converged: false,
        },
    }
}

/// Zero-order extrapolation of the interior state.
pub fn outflow_bc(interior: &SideState) -> Ghost {
    Ghost {
        q: interior.q,
        h: interior.h,
        converged: true,
    }
}

/// Reflection of the interior state.
pub fn wall_bc(interior: &SideState) -> Ghost {
    Ghost {
        q: -interior.q,
        h: interior.h,
        converged: true,
    }
}

/// Depth at which discharge `q` is critical.
pub fn critical_depth(section: &CrossSection, q: f64, g: f64) -> f64 {
    if q == 0.0 {
        return 0.0;
    }
    let f = |h: f64| {
        let a = section.area(h);
        g * a * a * a - q * q * section.width(h)
    };
    let mut hi = 1e-3;
    while f(hi) < 0.0 && hi < 1e6 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Damped Newton for a 2×2 system in `(q, h)` with `h ≥ 0`, finite-difference Jacobian.
fn newton2(f: &impl Fn(f64, f64) -> [f64; 2], q0: f64, h0: f64) -> Option<(f64, f64)> {
    let norm = |r: [f64; 2]| r[0].abs().max(r[1].abs());
    let (mut q, mut h) = (q0, h0.max(0.0));
    let mut r = f(q, h);
    if !r[0].is_finite() || !r[1].is_finite() {
        return None;
    }
    for _ in 0..MAX_ITER {
        if norm(r) <= TOL {
            return Some((q, h));
        }
        let dq = 1e-7 * q.abs().max(1e-6);
        let dh = 1e-7 * h.max(1e-6);
        let rq = f(q + dq, h);
        let rh = f(q, h + dh);
        let j = [
            [(rq[0] - r[0]) / dq, (rh[0] - r[0]) / dh],
            [(rq[1] - r[1]) / dq, (rh[1] - r[1]) / dh],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        let sq = (r[0] * j[1][1] - r[1] * j[0][1]) / det;
        let sh = (j[0][0] * r[1] - j[1][0] * r[0]) / det;
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..12 {
            let nq = q - lambda * sq;
            let nh = (h - lambda * sh).max(0.0);
            let nr = f(nq, nh);
            if nr[0].is_finite() && nr[1].is_finite() && norm(nr) < norm(r) {
                q = nq;
                h = nh;
                r = nr;
                accepted = true;
                break;
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    (norm(r) <= TOL).then_some((q, h))
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: BoundaryParams = BoundaryParams {
        gravity: 9.81,
        epsilon: 1e-12,
    };

    fn rect() -> CrossSection {
        CrossSection::rectangular("r", 1.0).unwrap()
    }

    #[test]
    fn hydrograph_table_and_pulses() {
        let h = Hydrograph::Table(vec![[0.0, 1.0], [2.0, 3.0]]);
        assert_eq!(h.eval(0.0), 1.0);
        assert_eq!(h.eval(1.0), 2.0);
        assert_eq!(h.eval(2.0), 3.0);
        assert_eq!(h.eval(5.0), 3.0);
        let s = Hydrograph::Builtin(BuiltinHydrograph::SinePulses {
            pulses: vec![SinePulse::new(0.002, 1.0, 60.0)],
        });
        assert_eq!(s.eval(0.5), 0.0);
        assert!((s.eval(31.0) - 0.002).abs() < 1e-15);
        assert_eq!(s.eval(62.0), 0.0);
        assert!(Hydrograph::Table(vec![[1.0, 0.0], [1.0, 1.0]]).validate().is_err());
    }

    #[test]
    fn discharge_consistent_with_uniform_state() {
        let sec = rect();
        let int = SideState::new(&sec, 1.0, 0.5, P.gravity, P.epsilon);
        let g = discharge_bc(&sec, 0.5, &int, P);
        assert!(g.converged);
        assert!((g.q - 0.5).abs() < 1e-9 && (g.h - 1.0).abs() < 1e-9);
        let still = SideState::new(&sec, 0.7, 0.0, P.gravity, P.epsilon);
        let g = discharge_bc(&sec, 0.0, &still, P);
        assert!(g.converged && g.q.abs() < 1e-12 && (g.h - 0.7).abs() < 1e-12);
    }

    #[test]
    fn discharge_into_dry_channel_delivers_target() {
        let sec = rect();
        let dry = SideState::new(&sec, 0.0, 0.0, P.gravity, P.epsilon);
        let g = discharge_bc(&sec, 0.02, &dry, P);
        assert!(g.converged);
        let ghost = SideState::new(&sec, g.h, g.q, P.gravity, P.epsilon);
        let f = face_flux(&ghost, &dry, P.gravity);
        assert!((f.h1 - 0.02).abs() < 1e-10);
    }

    #[test]
    fn surface_bc_cases() {
        let sec = rect();
        let still = SideState::new(&sec, 0.8, 0.0, P.gravity, P.epsilon);
        let g = surface_bc(&sec, 0.0, 0.8, &still, false, P);
        assert!(g.converged && g.q.abs() < 1e-12 && (g.h - 0.8).abs() < 1e-12);
        let g = surface_bc(&sec, 1.0, 0.5, &still, false, P);
        assert_eq!((g.q, g.h), (0.0, 0.0));
        let g = surface_bc(&sec, 0.0, 0.9, &still, true, P);
        assert_eq!((g.q, g.h), (0.0, 0.9));
    }

    #[test]
    fn wall_passes_no_mass() {
        let sec = rect();
        let int = SideState::new(&sec, 0.4, 0.9, P.gravity, P.epsilon);
        let g = wall_bc(&int);
        let ghost = SideState::new(&sec, g.h, g.q, P.gravity, P.epsilon);
        assert!(face_flux(&ghost, &int, P.gravity).h1.abs() < 1e-15);
        assert_eq!(outflow_bc(&int).q, int.q);
    }
}
