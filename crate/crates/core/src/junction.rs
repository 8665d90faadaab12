//! Junction control volumes: storage with a horizontal surface and, optionally,
//! a lumped momentum balance.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, FaceGeometry, WetSpan};
use crate::network::{Junction, Network, Stub, StubRole};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JunctionModel {
    /// Continuity only; terminal-face discharges are copied from the link side.
    #[default]
    Cuj1,
    /// Continuity plus a momentum balance for the junction discharge.
    Cuj2,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct JunctionState {
    /// Water surface elevation.
    pub level: f64,
    /// Junction discharge (momentum model only).
    pub discharge: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum JunctionError {
    #[error("junction '{id}': level solve did not converge (residual {residual})")]
    NoConvergence { id: String, residual: f64 },
    #[error("junction '{id}': stored volume would become negative ({volume})")]
    NegativeVolume { id: String, volume: f64 },
    #[error("junction '{id}': total stub length is zero")]
    ZeroLength { id: String },
}

/// Faces bounding a stub, ordered by x.
pub fn stub_faces<'a>(net: &'a Network, stub: &'a Stub) -> (&'a FaceGeometry, &'a FaceGeometry) {
    let link = &net.links[stub.link];
    match stub.role {
        StubRole::Inflow => (&link.faces[link.cell_count()], &stub.face),
        StubRole::Outflow => (&stub.face, &link.faces[0]),
    }
}

/// The link face shared with the stub.
pub fn terminal_face_index(net: &Network, stub: &Stub) -> usize {
    match stub.role {
        StubRole::Inflow => net.links[stub.link].cell_count(),
        StubRole::Outflow => 0,
    }
}

pub fn stub_volume(net: &Network, stub: &Stub, level: f64) -> f64 {
    let (l, r) = stub_faces(net, stub);
    geometry::volume(l, r, l.x, r.x, level, level)
}

pub fn stub_volume_rate(net: &Network, stub: &Stub, level: f64) -> f64 {
    let (l, r) = stub_faces(net, stub);
    WetSpan::under_surface(l, r, l.x, r.x, level, level)
        .map_or(0.0, |s| geometry::span_volume_rate(l, r, &s))
}

pub fn storage(net: &Network, j: &Junction, level: f64) -> f64 {
    j.stubs.iter().map(|s| stub_volume(net, s, level)).sum()
}

/// Lowest bed over all stub spans; the storage is zero at and below it.
pub fn min_bed(net: &Network, j: &Junction) -> f64 {
    j.stubs.iter().map(|s| stub_bed_min(net, s)).fold(f64::INFINITY, f64::min)
}

fn stub_bed_min(net: &Network, s: &Stub) -> f64 {
    let (l, r) = stub_faces(net, s);
    l.bed.min(r.bed)
}

/// Continuity residual: storage change at `level` minus the net inflow volume
/// over the step (face fluxes, already limited by their draining times, plus
/// lateral inflow).
pub fn junction_continuity_residual(
    net: &Network,
    j: &Junction,
    level_old: f64,
    net_inflow: f64,
    level: f64,
) -> f64 {
    storage(net, j, level) - storage(net, j, level_old) - net_inflow
}

/// Derivative of [`junction_continuity_residual`] with respect to the level.
pub fn junction_continuity_jacobian(net: &Network, j: &Junction, level: f64) -> f64 {
    j.stubs.iter().map(|s| stub_volume_rate(net, s, level)).sum()
}

/// Level holding `target` volume, by Newton with a bisection safeguard.
pub fn level_for_storage(net: &Network, j: &Junction, target: f64, guess: f64) -> Result<f64, JunctionError> {
    let floor = min_bed(net, j);
    if target <= 0.0 {
        if target < -1e-14 * storage(net, j, guess).max(1.0) {
            return Err(JunctionError::NegativeVolume {
                id: j.id.clone(),
                volume: target,
            });
        }
        return Ok(floor);
    }
    let f = |y: f64| storage(net, j, y) - target;
    let mut lo = floor;
    let mut hi = guess.max(floor);
    let mut fhi = f(hi);
    let mut grow = 1e-3_f64.max(hi - lo);
    while fhi < 0.0 {
        lo = hi;
        hi += grow;
        grow *= 2.0;
        fhi = f(hi);
        if !hi.is_finite() {
            return Err(JunctionError::NoConvergence {
                id: j.id.clone(),
                residual: fhi,
            });
        }
    }
    let mut y = if guess > lo && guess < hi { guess } else { hi };
    let mut r = f(y);
    let tol = 1e-12 * target.max(1.0);
    for _ in 0..200 {
        if r == 0.0 {
            return Ok(y);
        }
        if r > 0.0 {
            hi = y;
        } else {
            lo = y;
        }
        let d = junction_continuity_jacobian(net, j, y);
        let mut next = if d > 0.0 { y - r / d } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let step = (next - y).abs();
        y = next;
        r = f(y);
        if step <= 4.0 * f64::EPSILON * y.abs().max(1.0) {
            break;
        }
    }
    if r.abs() <= tol {
        Ok(y)
    } else {
        Err(JunctionError::NoConvergence {
            id: j.id.clone(),
            residual: r,
        })
    }
}

/// New level after a step that brings `net_inflow` volume into the junction.
pub fn solve_junction_level(
    net: &Network,
    j: &Junction,
    level_old: f64,
    net_inflow: f64,
) -> Result<f64, JunctionError> {
    let target = storage(net, j, level_old) + net_inflow;
    level_for_storage(net, j, target, level_old)
}

/// Junction discharge after a step of the momentum model, given the explicit
/// increment `dq` (frozen flux and source terms divided by the total stub
/// length) and the length-weighted friction coefficient `g_mean`.
pub fn solve_junction_discharge(q_old: f64, dq: f64, dt: f64, g_mean: f64) -> f64 {
    (q_old + dq) / (1.0 + dt * g_mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_network, NetworkConfig};

    fn tee() -> Network {
        let c: NetworkConfig = serde_json::from_str(
            r#"{
              "cross_sections": {"r": [[0,2],[1,2]], "s": [[0,1],[1,1]]},
              "boundary_conditions": {"wall": {"kind": "wall"}},
              "nodes": [
                {"kind": "boundary", "id": "a", "condition": "wall"},
                {"kind": "junction", "id": "j"},
                {"kind": "boundary", "id": "b", "condition": "wall"}
              ],
              "links": [
                {"id": "L1", "from": "a", "to": "j", "uniform": {"cells": 4, "length": 1,
                  "bed_upstream": 0.3, "bed_downstream": 0.2, "cross_section": "r"}},
                {"id": "L2", "from": "j", "to": "b", "uniform": {"cells": 4, "x0": 2, "length": 1,
                  "bed_upstream": 0.1, "bed_downstream": 0.0, "cross_section": "s"}}
              ]
            }"#,
        )
        .unwrap();
        build_network(&c).unwrap()
    }

    #[test]
    fn prism_storage_rate() {
        let net = tee();
        let j = &net.junctions[0];
        // stubs of length 0.125: widths 2 and 1
        let rate = junction_continuity_jacobian(&net, j, 0.5);
        assert!((rate - 0.125 * 3.0).abs() < 1e-14);
        assert_eq!(junction_continuity_jacobian(&net, j, 0.05), 0.0);
    }

    #[test]
    fn rest_is_a_root_and_inflow_raises_level() {
        let net = tee();
        let j = &net.junctions[0];
        assert_eq!(junction_continuity_residual(&net, j, 0.5, 0.0, 0.5), 0.0);
        let y = solve_junction_level(&net, j, 0.5, 0.0375).unwrap();
        assert!((y - 0.6).abs() < 1e-13);
        let y = solve_junction_level(&net, j, 0.15, 0.01).unwrap();
        assert!(y > 0.15);
        assert!(junction_continuity_residual(&net, j, 0.15, 0.01, y).abs() < 1e-14);
    }
}
