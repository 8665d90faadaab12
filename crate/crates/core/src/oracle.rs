//! Reference solutions: steady profiles, the Ritter dam break, cached
//! fine-grid runs and error norms.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::geometry::FaceGeometry;
use crate::scenario::{prepare, ScenarioError, ScenarioFile};
use crate::scheme::{LinkState, SolverError};
use crate::simulation::{run, Schedule};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("no admissible steady depth at x={x} (energy {energy} below the critical {critical})")]
    NoRoot { x: f64, energy: f64, critical: f64 },
    #[error("{0}")]
    Domain(String),
    #[error("length mismatch: {computed} computed values against {reference} reference values")]
    Mismatch { computed: usize, reference: usize },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("reference cache: {0}")]
    Io(#[from] std::io::Error),
}

/// Channel geometry sampled at faces, blended linearly in between.
#[derive(Clone, Debug)]
pub struct Channel<'a> {
    faces: &'a [FaceGeometry],
}

impl<'a> Channel<'a> {
    pub fn new(faces: &'a [FaceGeometry]) -> Self {
        Self { faces }
    }

    fn locate(&self, x: f64) -> (usize, f64) {
        let k = self.faces.partition_point(|f| f.x <= x).clamp(1, self.faces.len() - 1) - 1;
        let (l, r) = (&self.faces[k], &self.faces[k + 1]);
        (k, ((x - l.x) / (r.x - l.x)).clamp(0.0, 1.0))
    }

    pub fn bed(&self, x: f64) -> f64 {
        let (k, t) = self.locate(x);
        (1.0 - t) * self.faces[k].bed + t * self.faces[k + 1].bed
    }

    pub fn area(&self, x: f64, h: f64) -> f64 {
        let (k, t) = self.locate(x);
        (1.0 - t) * self.faces[k].section.area(h) + t * self.faces[k + 1].section.area(h)
    }

    pub fn width(&self, x: f64, h: f64) -> f64 {
        let (k, t) = self.locate(x);
        (1.0 - t) * self.faces[k].section.width(h) + t * self.faces[k + 1].section.width(h)
    }

    pub fn moment(&self, x: f64, h: f64) -> f64 {
        let (k, t) = self.locate(x);
        (1.0 - t) * self.faces[k].section.moment(h) + t * self.faces[k + 1].section.moment(h)
    }

    /// `u²/2 + g(B + h)`.
    pub fn energy(&self, x: f64, h: f64, q: f64, g: f64) -> f64 {
        let a = self.area(x, h);
        0.5 * (q / a) * (q / a) + g * (self.bed(x) + h)
    }

    /// `Q²/A + g I1`.
    pub fn momentum_function(&self, x: f64, h: f64, q: f64, g: f64) -> f64 {
        q * q / self.area(x, h) + g * self.moment(x, h)
    }

    /// Depth where the Froude number is one.
    pub fn critical_depth(&self, x: f64, q: f64, g: f64) -> f64 {
        let fr2 = |h: f64| {
            let a = self.area(x, h);
            q * q * self.width(x, h) / (g * a * a * a)
        };
        let mut lo = 1e-12;
        let mut hi = 1.0;
        while fr2(hi) > 1.0 {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if fr2(mid) > 1.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Depth with energy `e` on the sub- or supercritical branch.
    pub fn depth_for_energy(&self, x: f64, q: f64, e: f64, g: f64, supercritical: bool) -> Result<f64, OracleError> {
        let hc = self.critical_depth(x, q, g);
        let ec = self.energy(x, hc, q, g);
        if e < ec {
            if (ec - e) <= 1e-12 * ec.abs() {
                return Ok(hc);
            }
            return Err(OracleError::NoRoot { x, energy: e, critical: ec });
        }
        let f = |h: f64| self.energy(x, h, q, g) - e;
        let (mut lo, mut hi) = if supercritical {
            let mut lo = hc;
            while f(lo) < 0.0 {
                lo *= 0.5;
            }
            (lo, hc)
        } else {
            let mut hi = hc.max(1e-3);
            while f(hi) < 0.0 {
                hi *= 2.0;
            }
            (hc, hi)
        };
        // f decreases on the supercritical branch and increases on the subcritical one
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let below = f(mid) < 0.0;
            if below != supercritical {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 4.0 * f64::EPSILON * hi {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyPoint {
    pub x: f64,
    pub h: f64,
    pub w: f64,
    pub q: f64,
    pub energy: f64,
    pub supercritical: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyProfile {
    pub points: Vec<SteadyPoint>,
    /// Energy of the upstream smooth branch.
    pub upstream_energy: f64,
    /// Energy of the branch fixed by the downstream level.
    pub downstream_energy: f64,
    pub control_point: Option<f64>,
    pub shock: Option<f64>,
}

/// Steady profile with discharge `q` and outlet surface `outlet_level`.
///
/// Subcritical when the outlet energy clears every critical energy; otherwise
/// the flow passes critical at the control point and a hydraulic jump joins the
/// supercritical branch to the outlet branch.
pub fn steady_profile(
    faces: &[FaceGeometry],
    xs: &[f64],
    q: f64,
    outlet_level: f64,
    g: f64,
) -> Result<SteadyProfile, OracleError> {
    if faces.len() < 2 {
        return Err(OracleError::Domain("need at least two faces".into()));
    }
    let ch = Channel::new(faces);
    let x_out = faces[faces.len() - 1].x;
    let h_out = outlet_level - ch.bed(x_out);
    if h_out <= 0.0 {
        return Err(OracleError::Domain("outlet level is below the bed".into()));
    }
    let e_down = ch.energy(x_out, h_out, q, g);
    if q == 0.0 {
        let points = xs
            .iter()
            .map(|&x| {
                let h = (outlet_level - ch.bed(x)).max(0.0);
                SteadyPoint {
                    x,
                    h,
                    w: ch.bed(x) + h,
                    q,
                    energy: g * outlet_level,
                    supercritical: false,
                }
            })
            .collect();
        return Ok(SteadyProfile {
            points,
            upstream_energy: g * outlet_level,
            downstream_energy: g * outlet_level,
            control_point: None,
            shock: None,
        });
    }

    // Largest critical energy along the channel, refined by golden section.
    let ec = |x: f64| ch.energy(x, ch.critical_depth(x, q, g), q, g);
    let samples = 2000;
    let x0 = faces[0].x;
    let span = x_out - x0;
    let (mut xc, mut emax) = (x0, f64::NEG_INFINITY);
    for i in 0..=samples {
        let x = x0 + span * i as f64 / samples as f64;
        let e = ec(x);
        if e > emax {
            emax = e;
            xc = x;
        }
    }
    let (mut a, mut b) = ((xc - span / samples as f64).max(x0), (xc + span / samples as f64).min(x_out));
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let c = b - phi * (b - a);
        let d = a + phi * (b - a);
        if ec(c) > ec(d) {
            b = d;
        } else {
            a = c;
        }
    }
    xc = 0.5 * (a + b);
    emax = emax.max(ec(xc));

    if e_down >= emax {
        let points = xs
            .iter()
            .map(|&x| {
                let h = ch.depth_for_energy(x, q, e_down, g, false)?;
                Ok(SteadyPoint {
                    x,
                    h,
                    w: ch.bed(x) + h,
                    q,
                    energy: e_down,
                    supercritical: false,
                })
            })
            .collect::<Result<Vec<_>, OracleError>>()?;
        return Ok(SteadyProfile {
            points,
            upstream_energy: e_down,
            downstream_energy: e_down,
            control_point: None,
            shock: None,
        });
    }

    let e_up = emax;
    let jump = |x: f64| -> Result<f64, OracleError> {
        let hs = ch.depth_for_energy(x, q, e_up, g, true)?;
        let hd = ch.depth_for_energy(x, q, e_down, g, false)?;
        Ok(ch.momentum_function(x, hs, q, g) - ch.momentum_function(x, hd, q, g))
    };
    // The outlet branch only exists where the critical energy is below its
    // energy; at that edge the supercritical momentum is the larger one.
    let mut lo = xc;
    let mut hi = x_out;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ec(mid) > e_down {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo = hi;
    let mut hi = x_out;
    let f_lo = jump(lo)?;
    let f_hi = jump(hi)?;
    if f_lo.signum() == f_hi.signum() {
        return Err(OracleError::Domain(format!(
            "no hydraulic jump between x={lo} and x={hi} (momentum gaps {f_lo}, {f_hi})"
        )));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if jump(mid)?.signum() == f_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let xs_shock = 0.5 * (lo + hi);
    let points = xs
        .iter()
        .map(|&x| {
            let (e, sup) = if x <= xc {
                (e_up, false)
            } else if x < xs_shock {
                (e_up, true)
            } else {
                (e_down, false)
            };
            let h = ch.depth_for_energy(x, q, e, g, sup)?;
            Ok(SteadyPoint {
                x,
                h,
                w: ch.bed(x) + h,
                q,
                energy: e,
                supercritical: sup,
            })
        })
        .collect::<Result<Vec<_>, OracleError>>()?;
    Ok(SteadyProfile {
        points,
        upstream_energy: e_up,
        downstream_energy: e_down,
        control_point: Some(xc),
        shock: Some(xs_shock),
    })
}

/// Depth and velocity of the dry-bed dam break in a horizontal rectangular channel.
pub fn ritter_drybed(h0: f64, x_dam: f64, t: f64, g: f64, x: f64) -> Result<(f64, f64), OracleError> {
    if !(t > 0.0) {
        return Err(OracleError::Domain(format!("time must be positive, got {t}")));
    }
    let c0 = (g * h0).sqrt();
    let xi = (x - x_dam) / t;
    Ok(if xi <= -c0 {
        (h0, 0.0)
    } else if xi >= 2.0 * c0 {
        (0.0, 0.0)
    } else {
        let s = 2.0 * c0 - xi;
        (s * s / (9.0 * g), 2.0 / 3.0 * (c0 + xi))
    })
}

/// Position of the dry-bed front.
pub fn ritter_front(h0: f64, x_dam: f64, t: f64, g: f64) -> f64 {
    x_dam + 2.0 * t * (g * h0).sqrt()
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ErrorNorms {
    pub l1: f64,
    /// `sqrt(1/(b−a) ∫ ((f − f_ref)/f_ref)² dx)`.
    pub l2_relative: f64,
    pub linf: f64,
}

/// Norms of `computed − reference` on cells of widths `dx`.
pub fn error_norms(computed: &[f64], reference: &[f64], dx: &[f64]) -> Result<ErrorNorms, OracleError> {
    if computed.len() != reference.len() || dx.len() != computed.len() {
        return Err(OracleError::Mismatch {
            computed: computed.len(),
            reference: reference.len(),
        });
    }
    let mut n = ErrorNorms::default();
    let mut rel = 0.0;
    let mut len = 0.0;
    for ((&f, &r), &d) in computed.iter().zip(reference).zip(dx) {
        let e = (f - r).abs();
        n.l1 += e * d;
        n.linf = n.linf.max(e);
        if r != 0.0 {
            rel += (e / r) * (e / r) * d;
        }
        len += d;
    }
    n.l2_relative = if len > 0.0 { (rel / len).sqrt() } else { 0.0 };
    Ok(n)
}

/// Average groups of `ratio` consecutive fine cells.
pub fn restrict(fine: &[f64], ratio: usize) -> Result<Vec<f64>, OracleError> {
    if ratio == 0 || fine.len() % ratio != 0 {
        return Err(OracleError::Domain(format!(
            "{} fine cells do not split into groups of {ratio}",
            fine.len()
        )));
    }
    Ok(fine.chunks(ratio).map(|c| c.iter().sum::<f64>() / ratio as f64).collect())
}

/// Hex digest of a scenario, used as its cache key.
pub fn scenario_key(file: &ScenarioFile) -> String {
    let digest = Sha256::digest(file.to_json().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

fn write_cache(path: &Path, links: &[LinkState]) -> std::io::Result<()> {
    let mut s = String::from("link,cell,area,discharge\n");
    for (li, l) in links.iter().enumerate() {
        for j in 0..l.area.len() {
            let _ = writeln!(s, "{li},{j},{:.16e},{:.16e}", l.area[j], l.discharge[j]);
        }
    }
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, s)?;
    std::fs::rename(tmp, path)
}

fn read_cache(path: &Path, shape: &[usize]) -> Option<Vec<LinkState>> {
    let text = std::fs::read_to_string(path).ok()?;
    let mut links: Vec<LinkState> = shape
        .iter()
        .map(|&n| LinkState {
            area: vec![f64::NAN; n],
            discharge: vec![f64::NAN; n],
        })
        .collect();
    for line in text.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return None;
        }
        let li: usize = f[0].parse().ok()?;
        let j: usize = f[1].parse().ok()?;
        let l = links.get_mut(li)?;
        *l.area.get_mut(j)? = f[2].parse().ok()?;
        *l.discharge.get_mut(j)? = f[3].parse().ok()?;
    }
    links
        .iter()
        .all(|l| l.area.iter().chain(&l.discharge).all(|v| v.is_finite()))
        .then_some(links)
}

/// Final cell averages of `file`, reusing a CSV cache under `cache_dir` when present.
pub fn fine_grid_reference(file: &ScenarioFile, cache_dir: Option<&Path>) -> Result<Vec<LinkState>, OracleError> {
    let path: Option<PathBuf> = cache_dir.map(|d| d.join(format!("{}.csv", scenario_key(file))));
    let prepared = prepare(file.clone())?;
    let shape: Vec<usize> = prepared.network.links.iter().map(|l| l.cell_count()).collect();
    if let Some(p) = &path {
        if let Some(links) = read_cache(p, &shape) {
            return Ok(links);
        }
    }
    let mut solver = prepared.solver();
    let schedule = Schedule {
        snapshots: Vec::new(),
        output_interval: Some(f64::INFINITY),
        ..prepared.schedule.clone()
    };
    let out = run(&mut solver, prepared.initial.clone(), &schedule, &[])?;
    if let Some(p) = &path {
        write_cache(p, &out.final_state.links)?;
    }
    Ok(out.final_state.links)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::CrossSection;
    use std::sync::Arc;

    #[test]
    fn ritter_points() {
        let g = 9.81;
        let (h, _) = ritter_drybed(1.0, 0.0, 1.0, g, 0.0).unwrap();
        assert!((h - 4.0 / 9.0).abs() < 1e-15);
        assert_eq!(ritter_drybed(1.0, 0.0, 1.0, g, 100.0).unwrap().0, 0.0);
        assert_eq!(ritter_drybed(1.0, 0.0, 1.0, g, -100.0).unwrap().0, 1.0);
        assert!(ritter_drybed(1.0, 0.0, 0.0, g, 0.0).is_err());
    }

    #[test]
    fn ritter_fan_solves_the_characteristic_equations() {
        // Inside the fan u + 2c is constant and x/t = u − c.
        let g: f64 = 9.81;
        let c0 = g.sqrt();
        for &x in &[-2.5, -1.0, 0.0, 1.7, 5.0] {
            let (h, u) = ritter_drybed(1.0, 0.0, 1.0, g, x).unwrap();
            let c = (g * h).sqrt();
            assert!((u + 2.0 * c - 2.0 * c0).abs() < 1e-10);
            assert!((u - c - x).abs() < 1e-10);
        }
    }

    #[test]
    fn norms() {
        let r = vec![2.0; 4];
        let dx = vec![0.25; 4];
        assert_eq!(error_norms(&r, &r, &dx).unwrap(), ErrorNorms::default());
        let c = vec![2.1; 4];
        let n = error_norms(&c, &r, &dx).unwrap();
        assert!((n.l2_relative - 0.05).abs() < 1e-14);
        assert!((n.l1 - 0.1).abs() < 1e-14);
        assert!(error_norms(&c[..3], &r, &dx).is_err());
        assert_eq!(restrict(&[1.0, 3.0, 5.0, 7.0], 2).unwrap(), vec![2.0, 6.0]);
    }

    #[test]
    fn lake_profile_and_prismatic_subcritical() {
        let sec = Arc::new(CrossSection::rectangular("r", 1.0).unwrap());
        let faces = vec![FaceGeometry::new(0.0, 0.0, sec.clone()), FaceGeometry::new(1.0, 0.0, sec)];
        let p = steady_profile(&faces, &[0.0, 0.5, 1.0], 0.0, 0.7, 9.81).unwrap();
        assert!(p.points.iter().all(|pt| (pt.w - 0.7).abs() < 1e-15));
        let p = steady_profile(&faces, &[0.25, 0.75], 0.3, 0.7, 9.81).unwrap();
        assert!(p.points.iter().all(|pt| (pt.h - 0.7).abs() < 1e-12));
    }
}
