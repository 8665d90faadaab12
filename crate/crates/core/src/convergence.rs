//! Grid-refinement studies against a fine-grid reference.

use std::path::Path;

use crate::oracle::{error_norms, fine_grid_reference, restrict, OracleError};
use crate::reconstruction::CellShape;
use crate::scenario::{prepare, ScenarioFile};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub cells: usize,
    pub l1_w: f64,
    pub order_w: Option<f64>,
    pub l1_q: f64,
    pub order_q: Option<f64>,
}

/// Copy of a single-link uniform scenario with `cells` cells.
pub fn with_cells(file: &ScenarioFile, cells: usize) -> Result<ScenarioFile, OracleError> {
    if file.links.len() != 1 {
        return Err(OracleError::Domain("grid studies need a single-link scenario".into()));
    }
    let mut f = file.clone();
    match f.links[0].uniform.as_mut() {
        Some(u) => u.cells = cells,
        None => return Err(OracleError::Domain("grid studies need a link given as 'uniform'".into())),
    }
    Ok(f)
}

/// Surface elevation per cell from cell-average areas.
pub fn cell_levels(file: &ScenarioFile, areas: &[f64]) -> Result<Vec<f64>, OracleError> {
    let p = prepare(file.clone())?;
    let link = &p.network.links[0];
    Ok(link
        .cells()
        .zip(areas)
        .map(|(c, &a)| {
            let shape = CellShape::new(c.left, c.right);
            0.5 * (c.left.bed + c.right.bed) + shape.mean.depth_for_area(a).unwrap_or(0.0)
        })
        .collect())
}

/// L1 errors of `w` and `Q` on each grid against the run on `reference_cells`.
pub fn convergence_study(
    build: &dyn Fn(usize) -> Result<ScenarioFile, OracleError>,
    grids: &[usize],
    reference_cells: usize,
    cache_dir: Option<&Path>,
) -> Result<Vec<ConvergenceRow>, OracleError> {
    if grids.is_empty() {
        return Err(OracleError::Domain("no grids given".into()));
    }
    if grids.iter().any(|&n| n >= reference_cells || n == 0) {
        return Err(OracleError::Domain(format!(
            "every grid must be coarser than the reference ({reference_cells} cells)"
        )));
    }
    let ref_file = build(reference_cells)?;
    let reference = fine_grid_reference(&ref_file, cache_dir)?;
    let mut rows: Vec<ConvergenceRow> = Vec::new();
    for &n in grids {
        if reference_cells % n != 0 {
            return Err(OracleError::Domain(format!(
                "reference {reference_cells} is not a multiple of {n}"
            )));
        }
        let file = build(n)?;
        let p = prepare(file.clone())?;
        let computed = fine_grid_reference(&file, None)?;
        let ratio = reference_cells / n;
        let ref_a = restrict(&reference[0].area, ratio)?;
        let ref_q = restrict(&reference[0].discharge, ratio)?;
        let w = cell_levels(&file, &computed[0].area)?;
        let w_ref = cell_levels(&file, &ref_a)?;
        let dx: Vec<f64> = p.network.links[0].cells().map(|c| c.dx).collect();
        let ew = error_norms(&w, &w_ref, &dx)?.l1;
        let eq = error_norms(&computed[0].discharge, &ref_q, &dx)?.l1;
        let order = |prev: Option<&ConvergenceRow>, e: f64, pick: fn(&ConvergenceRow) -> f64| {
            prev.map(|r| (pick(r) / e).ln() / (n as f64 / r.cells as f64).ln())
        };
        let prev = rows.last();
        rows.push(ConvergenceRow {
            cells: n,
            l1_w: ew,
            order_w: order(prev, ew, |r| r.l1_w),
            l1_q: eq,
            order_q: order(prev, eq, |r| r.l1_q),
        });
    }
    Ok(rows)
}

pub fn convergence_csv(rows: &[ConvergenceRow]) -> String {
    let fmt = |o: Option<f64>| o.map_or(String::new(), |v| format!("{v:.6}"));
    let mut s = String::from("N,L1_w,order_w,L1_Q,order_Q\n");
    for r in rows {
        s.push_str(&format!(
            "{},{:.16e},{},{:.16e},{}\n",
            r.cells,
            r.l1_w,
            fmt(r.order_w),
            r.l1_q,
            fmt(r.order_q)
        ));
    }
    s
}
