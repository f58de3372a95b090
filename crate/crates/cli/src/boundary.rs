//! Decision-function samples on a lattice, for plotting boundaries.

use dsvkernel::linalg::Matrix;
use dsvkernel::svm::{decision_value, sign, MulticlassModel};
use dsvkernel::Error;

use crate::error::Result;

pub const DEFAULT_RESOLUTION: usize = 200;
pub const PADDING: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub x1: f64,
    pub x2: f64,
    pub decision_value: f64,
    pub label: usize,
}

/// Bounding box of `points` padded by 10% of its extent on each side.
pub fn padded_bounds(points: &Matrix) -> Result<[(f64, f64); 2]> {
    if points.cols() != 2 {
        return Err(Error::InvalidDimension(format!(
            "boundary grids need 2 features, got {}",
            points.cols()
        ))
        .into());
    }
    if points.rows() == 0 {
        return Err(Error::InvalidInput("no points to bound".into()).into());
    }
    let mut out = [(f64::INFINITY, f64::NEG_INFINITY); 2];
    for row in points.iter_rows() {
        for (b, v) in out.iter_mut().zip(row) {
            b.0 = b.0.min(*v);
            b.1 = b.1.max(*v);
        }
    }
    for b in &mut out {
        let pad = PADDING * (b.1 - b.0);
        *b = (b.0 - pad, b.1 + pad);
    }
    Ok(out)
}

/// Score and label at `x`. With two classes the score is the single
/// machine's decision value (positive favours class 0); otherwise it is the
/// summed |decision value| of the votes won by the predicted class.
pub fn score(model: &MulticlassModel, x: &[f64]) -> Result<(f64, usize)> {
    if let [((a, b), machine)] = model.machines.as_slice() {
        let v = decision_value(machine, x)?;
        return Ok((v, if sign(v) > 0 { *a } else { *b }));
    }
    let label = dsvkernel::svm::predict_multiclass(model, x)?;
    let mut total = 0.0;
    for ((a, b), machine) in &model.machines {
        let v = decision_value(machine, x)?;
        let winner = if sign(v) > 0 { *a } else { *b };
        if winner == label {
            total += v.abs();
        }
    }
    Ok((total, label))
}

/// `resolution × resolution` lattice over `bounds`, row-major with `x1`
/// varying fastest.
pub fn boundary_grid(
    model: &MulticlassModel,
    bounds: [(f64, f64); 2],
    resolution: usize,
) -> Result<Vec<GridPoint>> {
    if resolution < 2 {
        return Err(Error::InvalidInput(format!(
            "resolution must be at least 2, got {resolution}"
        ))
        .into());
    }
    let dims = model.machines.first().map_or(0, |(_, m)| m.n_features());
    if dims != 2 {
        return Err(Error::InvalidDimension(format!(
            "boundary grids need a 2-feature model, got {dims}"
        ))
        .into());
    }
    let step = |(lo, hi): (f64, f64), i: usize| lo + (hi - lo) * i as f64 / (resolution - 1) as f64;
    let mut out = Vec::with_capacity(resolution * resolution);
    for j in 0..resolution {
        let x2 = step(bounds[1], j);
        for i in 0..resolution {
            let x1 = step(bounds[0], i);
            let (decision_value, label) = score(model, &[x1, x2])?;
            out.push(GridPoint {
                x1,
                x2,
                decision_value,
                label,
            });
        }
    }
    Ok(out)
}
