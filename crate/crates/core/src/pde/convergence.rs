use super::coefficients::PdeCoefficients;
use super::grid::GridSpec;
use super::solver::solve_pde;
use crate::error::{Error, Result};
use crate::instruments::Instrument;

/// One level of a grid-refinement study.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub num_space: usize,
    pub num_time: usize,
    pub value: f64,
    /// `|value − reference|` when a reference is given, otherwise the
    /// Richardson estimate `|V_k − V_{k−1}| / 3` (nominal order 2).
    pub error_estimate: Option<f64>,
    /// `log2` of successive error (or difference) ratios.
    pub observed_order: Option<f64>,
}

/// Solves on `levels` grids, doubling both dimensions each time.
pub fn convergence_study(
    coeffs: &PdeCoefficients,
    inst: &Instrument,
    base_grid: &GridSpec,
    levels: usize,
    reference: Option<f64>,
) -> Result<Vec<ConvergenceRow>> {
    if levels < 2 {
        return Err(Error::InvalidGrid(format!(
            "convergence study needs at least 2 levels, got {levels}"
        )));
    }
    let mut values = Vec::with_capacity(levels);
    let mut grids = Vec::with_capacity(levels);
    for k in 0..levels {
        let grid = base_grid.refined(1 << k);
        values.push(solve_pde(coeffs, inst, &grid)?.price());
        grids.push(grid);
    }

    // Errors (reference) or successive differences (self-convergence).
    let gaps: Vec<Option<f64>> = match reference {
        Some(r) => values.iter().map(|v| Some((v - r).abs())).collect(),
        None => (0..levels)
            .map(|k| (k > 0).then(|| (values[k] - values[k - 1]).abs()))
            .collect(),
    };
    let rows = (0..levels)
        .map(|k| {
            let error_estimate = match reference {
                Some(_) => gaps[k],
                None => gaps[k].map(|d| d / 3.0),
            };
            let observed_order = match (k.checked_sub(1).and_then(|i| gaps[i]), gaps[k]) {
                (Some(a), Some(b)) if a > 0.0 && b > 0.0 => Some((a / b).log2()),
                _ => None,
            };
            ConvergenceRow {
                num_space: grids[k].num_space,
                num_time: grids[k].num_time,
                value: values[k],
                error_estimate,
                observed_order,
            }
        })
        .collect();
    Ok(rows)
}
