//! Built-in property suites with measured values and thresholds.

use std::fmt::Write as _;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::geometry::{self, CrossSection, FaceGeometry};
use crate::junction::{self, JunctionModel};
use crate::network::{build_network, LinkConfig, ManningConfig, NetworkConfig, NodeConfig, UniformLink};
use crate::presets;
use crate::scenario::{prepare, InitialCondition, Prepared, ScenarioConfig, ScenarioFile};
use crate::scheme::{FlowState, Solver};
use crate::simulation::{run_with, Schedule};

pub const SUITES: &[&str] = &["well-balance", "positivity", "conservation", "junction-jacobian", "geometry-oracle"];

#[derive(Clone, Debug, PartialEq)]
pub struct CheckItem {
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
}

impl CheckItem {
    /// Passes when `measured <= threshold`.
    pub fn at_most(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            passed: measured <= threshold,
        }
    }

    /// Passes when `measured >= threshold`.
    pub fn at_least(name: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            threshold,
            passed: measured >= threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub suite: String,
    pub items: Vec<CheckItem>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    /// One `suite,item,measured,threshold,PASS|FAIL` line per item.
    pub fn to_text(&self) -> String {
        let mut s = String::from("suite,check,measured,threshold,result\n");
        for i in &self.items {
            let _ = writeln!(
                s,
                "{},{},{:.6e},{:.6e},{}",
                self.suite,
                i.name,
                i.measured,
                i.threshold,
                if i.passed { "PASS" } else { "FAIL" }
            );
        }
        s
    }
}

pub fn run_suite(name: &str, seed: u64) -> Result<CheckReport, String> {
    let items = match name {
        "well-balance" => well_balance()?,
        "positivity" => positivity(seed, 50)?,
        "conservation" => conservation()?,
        "junction-jacobian" => vec![junction_jacobian(seed, 200)],
        "geometry-oracle" => vec![geometry_oracle(seed, 200)],
        _ => return Err(format!("unknown suite '{name}' (one of {})", SUITES.join(", "))),
    };
    Ok(CheckReport {
        suite: name.into(),
        items,
    })
}

/// Largest `|Q|` and largest wet-cell `|w − level|` / junction `|Y − level|`.
/// Junctions shallower than this count as dry.
const DRY_DEPTH: f64 = 1e-10;

pub fn rest_deviation(solver: &mut Solver, state: &FlowState, level: f64) -> Result<(f64, f64), String> {
    solver.evaluate(state).map_err(|e| e.to_string())?;
    let mut q: f64 = 0.0;
    let mut w: f64 = 0.0;
    for (li, ls) in state.links.iter().enumerate() {
        let rec = solver.reconstruction(li);
        for j in 0..ls.area.len() {
            q = q.max(ls.discharge[j].abs());
            if rec[j].wet {
                w = w.max((rec[j].w - level).abs());
            }
        }
    }
    for (k, js) in state.junctions.iter().enumerate() {
        q = q.max(js.discharge.abs());
        let floor = junction::min_bed(solver.network(), &solver.network().junctions[k]);
        if js.level - floor > DRY_DEPTH {
            w = w.max((js.level - level).abs());
        }
    }
    Ok((q, w))
}

/// Run `steps` steps from the prepared initial state and measure the drift from rest.
pub fn lake_at_rest_drift(p: &Prepared, level: f64, steps: u64) -> Result<(f64, f64), String> {
    let mut solver = p.solver();
    let schedule = Schedule {
        max_steps: Some(steps),
        output_interval: Some(f64::INFINITY),
        ..Schedule::until(f64::INFINITY)
    };
    let out = run_with(&mut solver, p.initial.clone(), &schedule, &[], |_, _, _| {}).map_err(|e| e.to_string())?;
    if out.summary.steps != steps {
        return Err(format!("only {} of {steps} steps ran", out.summary.steps));
    }
    rest_deviation(&mut solver, &out.final_state, level)
}

fn well_balance() -> Result<Vec<CheckItem>, String> {
    let mut items = Vec::new();
    let p = prepare(presets::build("spline_lake_at_rest", None)?).map_err(|e| e.to_string())?;
    let (q, w) = lake_at_rest_drift(&p, 0.8, 1000)?;
    items.push(CheckItem::at_most("spline max|Q|", q, 1e-12));
    items.push(CheckItem::at_most("spline max|w-w0|", w, 1e-12));
    for model in [JunctionModel::Cuj1, JunctionModel::Cuj2] {
        let mut f = presets::build("network_lake_at_rest", None)?;
        f.scenario.junction_model = Some(model);
        let p = prepare(f).map_err(|e| e.to_string())?;
        let (q, w) = lake_at_rest_drift(&p, 0.27, 1000)?;
        let tag = format!("{model:?}").to_lowercase();
        items.push(CheckItem::at_most(format!("network {tag} max|Q|"), q, 1e-12));
        items.push(CheckItem::at_most(format!("network {tag} max|w-w0|"), w, 1e-12));
    }
    Ok(items)
}

/// A random single-link dam break: section, slope, levels and resolution drawn from `rng`.
pub fn random_dam_break(rng: &mut ChaCha8Rng) -> ScenarioFile {
    let kind = rng.gen_range(0..3);
    let section = match kind {
        0 => vec![[0.0, rng.gen_range(0.2..3.0)], [2.0, rng.gen_range(0.2..3.0)]],
        1 => vec![[0.0, 0.0], [1.0, rng.gen_range(0.5..3.0)]],
        _ => vec![[0.0, rng.gen_range(0.1..1.0)], [0.5, rng.gen_range(1.0..2.0)], [2.0, rng.gen_range(2.0..4.0)]],
    };
    let length = rng.gen_range(5.0..50.0);
    let cells = rng.gen_range(40..120);
    let b_up: f64 = rng.gen_range(-0.5..0.5);
    let b_down: f64 = rng.gen_range(-0.5..0.5);
    let x_dam = rng.gen_range(0.2..0.8) * length;
    let up = b_up.max(b_down) + rng.gen_range(0.1..1.5);
    let down = if rng.gen_bool(0.5) { -10.0 } else { b_up.min(b_down) + rng.gen_range(0.0..0.3) };
    let bc = if rng.gen_bool(0.5) {
        crate::boundary::BoundaryCondition::Wall { source: None }
    } else {
        crate::boundary::BoundaryCondition::Outflow
    };
    let net = NetworkConfig {
        nodes: vec![
            NodeConfig::Boundary {
                id: "a".into(),
                condition: "bc".into(),
            },
            NodeConfig::Boundary {
                id: "b".into(),
                condition: "bc".into(),
            },
        ],
        links: vec![LinkConfig {
            id: "L".into(),
            from: "a".into(),
            to: "b".into(),
            manning_n: ManningConfig::Uniform(if rng.gen_bool(0.5) { 0.0 } else { 0.03 }),
            faces: None,
            uniform: Some(UniformLink {
                cells,
                x0: 0.0,
                length,
                bed_upstream: b_up,
                bed_downstream: b_down,
                cross_section: "s".into(),
            }),
        }],
        cross_sections: [("s".to_string(), section)].into_iter().collect(),
        boundary_conditions: [("bc".to_string(), bc)].into_iter().collect(),
    };
    let scenario = ScenarioConfig::new(
        "random_dam_break",
        f64::INFINITY,
        InitialCondition::DamBreak {
            x_dam,
            level_upstream: up,
            level_downstream: down,
        },
    );
    ScenarioFile::from_parts(net, scenario)
}

/// Minimum depth and finiteness over `count` random dam breaks of 300 steps each.
pub fn positivity(seed: u64, count: usize) -> Result<Vec<CheckItem>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_depth = f64::INFINITY;
    let mut nonfinite = 0.0;
    for _ in 0..count {
        let mut f = random_dam_break(&mut rng);
        f.scenario.end_time = 1e6;
        let p = prepare(f).map_err(|e| e.to_string())?;
        let mut solver = p.solver();
        let schedule = Schedule {
            max_steps: Some(300),
            output_interval: Some(f64::INFINITY),
            ..Schedule::until(1e6)
        };
        let out = run_with(&mut solver, p.initial.clone(), &schedule, &[], |_, _, r| {
            min_depth = min_depth.min(r.min_depth).min(r.min_area);
        })
        .map_err(|e| e.to_string())?;
        if !out.summary.all_finite {
            nonfinite += 1.0;
        }
    }
    Ok(vec![
        CheckItem::at_least("min depth over all steps", min_depth, 0.0),
        CheckItem::at_most("runs with non-finite values", nonfinite, 0.0),
    ])
}

fn conservation() -> Result<Vec<CheckItem>, String> {
    let mut items = Vec::new();
    for model in [JunctionModel::Cuj1, JunctionModel::Cuj2] {
        let mut f = presets::build("junction_dam_break", None)?;
        f.scenario.junction_model = Some(model);
        let p = prepare(f).map_err(|e| e.to_string())?;
        let mut solver = p.solver();
        let v0 = p.initial.storage(&p.network);
        let out = crate::simulation::run(&mut solver, p.initial.clone(), &p.schedule, &[]).map_err(|e| e.to_string())?;
        let v1 = out.final_state.storage(&p.network);
        let tag = format!("{model:?}").to_lowercase();
        items.push(CheckItem::at_most(format!("{tag} volume drift"), ((v1 - v0) / v0).abs(), 1e-10));
        items.push(CheckItem::at_most(
            format!("{tag} max step residual"),
            out.summary.max_step_residual,
            1e-10,
        ));
    }
    Ok(items)
}

fn random_section(rng: &mut ChaCha8Rng, name: &str) -> Vec<[f64; 2]> {
    let knots = rng.gen_range(2..5);
    let mut h = 0.0;
    let mut pts = Vec::with_capacity(knots);
    for k in 0..knots {
        if k > 0 {
            h += rng.gen_range(0.1..1.0);
        }
        pts.push([h, rng.gen_range(if k == 0 { 0.0 } else { 0.05 }..3.0)]);
    }
    let _ = name;
    pts
}

/// Junction with two to four stubs of random sections and bed levels.
pub fn random_junction(rng: &mut ChaCha8Rng) -> crate::network::Network {
    let arms = rng.gen_range(2..5);
    let mut nodes = vec![NodeConfig::Junction {
        id: "J".into(),
        stubs: Vec::new(),
        lateral_inflow: None,
        junction_model: None,
    }];
    let mut links = Vec::new();
    let mut sections = std::collections::BTreeMap::new();
    for a in 0..arms {
        let id = format!("b{a}");
        nodes.push(NodeConfig::Boundary {
            id: id.clone(),
            condition: "wall".into(),
        });
        let sec = format!("s{a}");
        sections.insert(sec.clone(), random_section(rng, &sec));
        let incoming = a == 0 || rng.gen_bool(0.5);
        let length = rng.gen_range(1.0..5.0);
        let (from, to, x0) = if incoming {
            (id.clone(), "J".to_string(), -length)
        } else {
            ("J".to_string(), id.clone(), rng.gen_range(0.0..0.5))
        };
        links.push(LinkConfig {
            id: format!("L{a}"),
            from,
            to,
            manning_n: ManningConfig::Uniform(0.0),
            faces: None,
            uniform: Some(UniformLink {
                cells: rng.gen_range(2..10),
                x0,
                length,
                bed_upstream: rng.gen_range(-1.0..1.0),
                bed_downstream: rng.gen_range(-1.0..1.0),
                cross_section: sec,
            }),
        });
    }
    let cfg = NetworkConfig {
        nodes,
        links,
        cross_sections: sections,
        boundary_conditions: [("wall".to_string(), crate::boundary::BoundaryCondition::Wall { source: None })]
            .into_iter()
            .collect(),
    };
    build_network(&cfg).expect("random junction is valid")
}

/// Worst relative gap between the analytic storage rate and central differences.
pub fn junction_jacobian(seed: u64, count: usize) -> CheckItem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..count {
        let net = random_junction(&mut rng);
        let j = &net.junctions[0];
        let lo = junction::min_bed(&net, j);
        let y = lo + rng.gen_range(0.05..2.0);
        let d = 1e-6;
        let fd = (junction::storage(&net, j, y + d) - junction::storage(&net, j, y - d)) / (2.0 * d);
        let an = junction::junction_continuity_jacobian(&net, j, y);
        let rel = (an - fd).abs() / an.abs().max(1e-300);
        worst = worst.max(rel);
    }
    CheckItem::at_most("jacobian vs central difference", worst, 1e-6)
}

/// `∫ A(x, h(x)) dx` by Simpson's rule on pieces split at every knot crossing.
pub fn volume_by_quadrature(l: &FaceGeometry, r: &FaceGeometry, x1: f64, x2: f64, wl: f64, wr: f64) -> f64 {
    let dx = r.x - l.x;
    let surf = |x: f64| wl + (wr - wl) * (x - l.x) / dx;
    let bed = |x: f64| l.bed + (r.bed - l.bed) * (x - l.x) / dx;
    let depth = |x: f64| surf(x) - bed(x);
    let area = |x: f64| {
        let h = depth(x).max(0.0);
        let t = (x - l.x) / dx;
        (1.0 - t) * l.section.area(h) + t * r.section.area(h)
    };
    let (h1, h2) = (depth(x1), depth(x2));
    let mut cuts = vec![x1, x2];
    let mut knots: Vec<f64> = l.section.depths().to_vec();
    knots.extend_from_slice(r.section.depths());
    knots.push(0.0);
    if h1 != h2 {
        for k in knots {
            let s = (k - h1) / (h2 - h1);
            if s > 0.0 && s < 1.0 {
                cuts.push(x1 + s * (x2 - x1));
            }
        }
    }
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .map(|p| {
            let (a, b) = (p[0], p[1]);
            let m = 0.5 * (a + b);
            (b - a) / 6.0 * (area(a) + 4.0 * area(m) + area(b))
        })
        .sum()
}

/// Worst relative gap between closed-form volumes and quadrature.
pub fn geometry_oracle(seed: u64, count: usize) -> CheckItem {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut k = 0;
    while k < count {
        let sl = CrossSection::new("l", &to_pairs(&random_section(&mut rng, "l"))).expect("valid");
        let sr = CrossSection::new("r", &to_pairs(&random_section(&mut rng, "r"))).expect("valid");
        let dx = rng.gen_range(0.1..5.0);
        let l = FaceGeometry::new(0.0, rng.gen_range(-1.0..1.0), Arc::new(sl));
        let r = FaceGeometry::new(dx, rng.gen_range(-1.0..1.0), Arc::new(sr));
        let mut x1 = rng.gen_range(0.0..dx);
        let mut x2 = rng.gen_range(0.0..dx);
        if x1 > x2 {
            std::mem::swap(&mut x1, &mut x2);
        }
        let lo = l.bed.min(r.bed);
        let wl = lo + rng.gen_range(-0.3..2.0);
        let wr = lo + rng.gen_range(-0.3..2.0);
        let exact = geometry::volume(&l, &r, x1, x2, wl, wr);
        let quad = volume_by_quadrature(&l, &r, x1, x2, wl, wr);
        if quad <= 0.0 && exact == 0.0 {
            continue;
        }
        k += 1;
        worst = worst.max((exact - quad).abs() / quad.abs().max(1e-300));
    }
    CheckItem::at_most("volume vs quadrature", worst, 1e-10)
}

fn to_pairs(p: &[[f64; 2]]) -> Vec<(f64, f64)> {
    p.iter().map(|v| (v[0], v[1])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_matches_hand_values() {
        let s = Arc::new(CrossSection::rectangular("r", 1.0).unwrap());
        let l = FaceGeometry::new(0.0, 0.0, s.clone());
        let r = FaceGeometry::new(1.0, 1.0, s);
        assert!((volume_by_quadrature(&l, &r, 0.0, 1.0, 0.5, 0.5) - 0.125).abs() < 1e-15);
    }

    #[test]
    fn unknown_suite_is_rejected() {
        assert!(run_suite("nope", 1).is_err());
    }

    #[test]
    fn small_random_suites_pass() {
        assert!(junction_jacobian(7, 20).passed);
        assert!(geometry_oracle(7, 20).passed);
    }
}
