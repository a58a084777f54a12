//! Tabulated alpha and beta functions.
//!
//! Alpha is tabulated class by class with the value iteration, replaced by
//! its lower convex envelope, and conjugated on a grid of rotation vectors
//! to give beta. Both tables expose one-sided secant slopes through
//! [`subderivative_interval`].

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::exec::Execution;
use crate::fmt::{f17, join17};
use crate::mather::grid::TensorGrid;
use crate::mather::lax_oleinik::{iterate, LaxOleinik, ValueIteration};
use crate::tonelli::{verify_tonelli, ClosedOneForm, Lagrangian};

/// Default bound on the lower-envelope adjustment.
pub const CONVEXITY_LIMIT: f64 = 2e-3;

/// Refinement of the slope grid used by the 2D envelope.
const SLOPE_REFINEMENT: usize = 4;

/// Tabulated alpha over a tensor grid of classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaTable {
    pub model: String,
    pub params: ValueIteration,
    pub grid: TensorGrid,
    /// Current values (the envelope once convexified).
    pub alpha: Vec<f64>,
    /// Values straight from the value iteration.
    pub raw_alpha: Vec<f64>,
    pub residual: Vec<f64>,
    /// False where the value iteration did not converge.
    pub valid: Vec<bool>,
    pub convexified: bool,
    pub max_adjustment: f64,
}

/// Tabulated beta over a tensor grid of rotation vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BetaTable {
    pub grid: TensorGrid,
    pub beta: Vec<f64>,
    /// Maximizing class of each entry.
    pub argmax: Vec<Vec<f64>>,
    /// True where the maximizing class sits on the boundary of the alpha grid.
    pub extrapolated: Vec<bool>,
    pub convex: bool,
}

/// Common view of alpha and beta tables.
pub trait ConvexTable {
    fn grid(&self) -> &TensorGrid;
    fn values(&self) -> &[f64];
    fn is_convex(&self) -> bool;
}

impl ConvexTable for AlphaTable {
    fn grid(&self) -> &TensorGrid {
        &self.grid
    }
    fn values(&self) -> &[f64] {
        &self.alpha
    }
    fn is_convex(&self) -> bool {
        self.convexified
    }
}

impl ConvexTable for BetaTable {
    fn grid(&self) -> &TensorGrid {
        &self.grid
    }
    fn values(&self) -> &[f64] {
        &self.beta
    }
    fn is_convex(&self) -> bool {
        self.convex
    }
}

/// Runs the value iteration at every class of `grid`, in parallel over classes.
///
/// Entries whose iteration does not converge are marked invalid and hold NaN;
/// any other error aborts the tabulation.
pub fn alpha_table<L: Lagrangian + ?Sized>(
    l: &L,
    model: &str,
    grid: &TensorGrid,
    params: &ValueIteration,
) -> Result<AlphaTable> {
    if grid.is_empty() {
        return Err(invalid("class grid is empty"));
    }
    if grid.dim() != l.dim() {
        return Err(invalid("class grid and Lagrangian dimensions differ"));
    }
    params.validate(l.dim())?;
    let report = verify_tonelli(l, 50, 0);
    if !report.passed {
        return Err(invalid(format!(
            "Lagrangian is not Tonelli: {}",
            report.failures.join("; ")
        )));
    }
    let inner = ValueIteration {
        exec: Execution::Sequential,
        ..*params
    };
    let entries = params.exec.map_range(grid.len(), |i| {
        let eta = ClosedOneForm::constant(&grid.point(i));
        let op = LaxOleinik::new(l, &eta, &inner)?;
        match iterate(&op, &inner) {
            Ok(cv) => Ok((cv.alpha, cv.residual, true)),
            Err(Error::NoConvergence { residual, .. }) => Ok((f64::NAN, residual, false)),
            Err(e) => Err(e),
        }
    });
    let mut alpha = Vec::with_capacity(grid.len());
    let mut residual = Vec::with_capacity(grid.len());
    let mut valid = Vec::with_capacity(grid.len());
    for e in entries {
        let (a, r, v) = e?;
        alpha.push(a);
        residual.push(r);
        valid.push(v);
    }
    Ok(AlphaTable {
        model: model.to_string(),
        params: *params,
        grid: grid.clone(),
        raw_alpha: alpha.clone(),
        alpha,
        residual,
        valid,
        convexified: false,
        max_adjustment: 0.0,
    })
}

impl AlphaTable {
    /// Builds a table from given values, e.g. an oracle.
    pub fn from_values(model: &str, grid: TensorGrid, alpha: Vec<f64>) -> Result<Self> {
        if alpha.len() != grid.len() {
            return Err(invalid("one value per grid point expected"));
        }
        let valid = alpha.iter().map(|a| a.is_finite()).collect();
        Ok(AlphaTable {
            model: model.to_string(),
            params: ValueIteration::default(),
            raw_alpha: alpha.clone(),
            residual: vec![0.0; alpha.len()],
            alpha,
            valid,
            grid,
            convexified: false,
            max_adjustment: 0.0,
        })
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|v| **v).count()
    }

    /// Replaces alpha by its lower convex envelope over the valid entries.
    ///
    /// Fails with `ConvexityViolation`, leaving the table untouched, when
    /// some value drops by more than `limit`.
    pub fn convexify(&mut self, limit: f64) -> Result<f64> {
        if self.valid_count() == 0 {
            return Err(invalid("no valid alpha entries to convexify"));
        }
        let envelope = if self.grid.dim() == 1 {
            lower_hull_1d(self.grid.axes()[0].as_slice(), &self.raw_alpha, &self.valid)
        } else {
            biconjugate_2d(&self.grid, &self.raw_alpha, &self.valid)
        };
        let adjustment = self
            .raw_alpha
            .iter()
            .zip(&envelope)
            .zip(&self.valid)
            .filter(|(_, v)| **v)
            .map(|((a, e), _)| a - e)
            .fold(0.0, f64::max);
        if adjustment > limit {
            return Err(Error::ConvexityViolation { adjustment, limit });
        }
        self.alpha = envelope;
        self.max_adjustment = adjustment;
        self.convexified = true;
        Ok(adjustment)
    }

    /// CSV `c1[,c2],alpha,residual`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(if self.grid.dim() == 1 { "c1" } else { "c1,c2" });
        out.push_str(",alpha,residual\n");
        for i in 0..self.grid.len() {
            out.push_str(&join17(self.grid.point(i)));
            out.push(',');
            out.push_str(&f17(self.alpha[i]));
            out.push(',');
            out.push_str(&f17(self.residual[i]));
            out.push('\n');
        }
        out
    }

    /// JSON with metadata and rows.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "model": self.model,
            "N": self.params.n,
            "dt": f17(self.params.dt),
            "tol": f17(self.params.tol),
            "v_max": f17(self.params.v_max),
            "convexified": self.convexified,
            "convexification_adjustment": f17(self.max_adjustment),
            "invalid_entries": self.grid.len() - self.valid_count(),
            "c": (0..self.grid.len()).map(|i| self.grid.point(i).into_iter().map(f17).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "alpha": self.alpha.iter().map(|a| f17(*a)).collect::<Vec<_>>(),
            "residual": self.residual.iter().map(|a| f17(*a)).collect::<Vec<_>>(),
        })
    }
}

/// Lower convex hull of valid points, evaluated at every node (NaN where invalid).
fn lower_hull_1d(xs: &[f64], ys: &[f64], valid: &[bool]) -> Vec<f64> {
    let mut hull: Vec<(f64, f64)> = Vec::new();
    for i in (0..xs.len()).filter(|&i| valid[i]) {
        let p = (xs[i], ys[i]);
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // drop b when it lies on or above the chord a-p
            if (b.1 - a.1) * (p.0 - a.0) >= (p.1 - a.1) * (b.0 - a.0) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut seg = 0;
    xs.iter()
        .zip(valid)
        .map(|(&x, &ok)| {
            if !ok {
                return f64::NAN;
            }
            while seg + 1 < hull.len() && hull[seg + 1].0 < x {
                seg += 1;
            }
            if hull.len() == 1 || x <= hull[0].0 {
                return hull[0].1;
            }
            let (a, b) = (hull[seg], hull[(seg + 1).min(hull.len() - 1)]);
            if b.0 == a.0 {
                a.1
            } else {
                a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
            }
        })
        .collect()
}

/// Discrete biconjugate over a refined slope grid; never exceeds the data.
fn biconjugate_2d(grid: &TensorGrid, ys: &[f64], valid: &[bool]) -> Vec<f64> {
    let pts: Vec<(Vec<f64>, f64)> = (0..grid.len())
        .filter(|&i| valid[i])
        .map(|i| (grid.point(i), ys[i]))
        .collect();
    let mut slope_axes = Vec::new();
    for axis in 0..2 {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..grid.len() {
            let m = grid.multi_index(i);
            if m[axis] + 1 >= grid.axes()[axis].len() {
                continue;
            }
            let mut next = m.clone();
            next[axis] += 1;
            let j = grid.flat_index(&next);
            if valid[i] && valid[j] {
                let s = (ys[j] - ys[i]) / (grid.axes()[axis][m[axis] + 1] - grid.axes()[axis][m[axis]]);
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        if !lo.is_finite() {
            lo = 0.0;
            hi = 0.0;
        }
        let k = SLOPE_REFINEMENT * grid.axes()[axis].len();
        slope_axes.push(
            (0..=k)
                .map(|j| lo + (hi - lo) * j as f64 / k as f64)
                .collect::<Vec<_>>(),
        );
    }
    let slopes: Vec<[f64; 2]> = slope_axes[1]
        .iter()
        .flat_map(|&b| slope_axes[0].iter().map(move |&a| [a, b]))
        .collect();
    let conj: Vec<f64> = slopes
        .iter()
        .map(|h| {
            pts.iter()
                .map(|(c, a)| c[0] * h[0] + c[1] * h[1] - a)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    (0..grid.len())
        .map(|i| {
            if !valid[i] {
                return f64::NAN;
            }
            let c = grid.point(i);
            let env = slopes
                .iter()
                .zip(&conj)
                .map(|(h, s)| c[0] * h[0] + c[1] * h[1] - s)
                .fold(f64::NEG_INFINITY, f64::max);
            env.min(ys[i])
        })
        .collect()
}

/// Discrete Legendre–Fenchel transform `beta(h) = max_c <c,h> - alpha(c)`.
pub fn beta_from_alpha(at: &AlphaTable, h_grid: &TensorGrid) -> Result<BetaTable> {
    if !at.convexified {
        return Err(invalid("alpha table must be convexified before conjugation"));
    }
    if h_grid.dim() != at.grid.dim() {
        return Err(invalid("rotation grid and class grid dimensions differ"));
    }
    let classes: Vec<(usize, Vec<f64>)> = (0..at.grid.len())
        .filter(|&i| at.valid[i])
        .map(|i| (i, at.grid.point(i)))
        .collect();
    let mut beta = Vec::with_capacity(h_grid.len());
    let mut argmax = Vec::with_capacity(h_grid.len());
    let mut extrapolated = Vec::with_capacity(h_grid.len());
    for j in 0..h_grid.len() {
        let h = h_grid.point(j);
        let mut best = f64::NEG_INFINITY;
        let mut arg = 0;
        for (i, c) in &classes {
            let val = dot(c, &h) - at.alpha[*i];
            if val > best {
                best = val;
                arg = *i;
            }
        }
        beta.push(best);
        argmax.push(at.grid.point(arg));
        extrapolated.push(at.grid.on_boundary(arg));
    }
    let convex = secants_nondecreasing(h_grid, &beta);
    Ok(BetaTable {
        grid: h_grid.clone(),
        beta,
        argmax,
        extrapolated,
        convex,
    })
}

impl BetaTable {
    /// CSV `h1[,h2],beta,extrapolated`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(if self.grid.dim() == 1 { "h1" } else { "h1,h2" });
        out.push_str(",beta,extrapolated\n");
        for i in 0..self.grid.len() {
            out.push_str(&join17(self.grid.point(i)));
            out.push(',');
            out.push_str(&f17(self.beta[i]));
            out.push_str(if self.extrapolated[i] { ",1\n" } else { ",0\n" });
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "convex": self.convex,
            "extrapolated_entries": self.extrapolated.iter().filter(|e| **e).count(),
            "h": (0..self.grid.len()).map(|i| self.grid.point(i).into_iter().map(f17).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "beta": self.beta.iter().map(|b| f17(*b)).collect::<Vec<_>>(),
            "extrapolated": self.extrapolated,
        })
    }
}

/// Conjugates beta back onto a class grid: `max_h <c,h> - beta(h)`.
pub fn conjugate_back(bt: &BetaTable, c_grid: &TensorGrid) -> Vec<f64> {
    let hs = bt.grid.points();
    (0..c_grid.len())
        .map(|i| {
            let c = c_grid.point(i);
            hs.iter()
                .zip(&bt.beta)
                .map(|(h, b)| dot(&c, h) - b)
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Product of the largest class spacing and the largest slope spacing.
pub fn grid_modulus(c_grid: &TensorGrid, h_grid: &TensorGrid) -> f64 {
    c_grid.max_spacing() * h_grid.max_spacing()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn secants_nondecreasing(grid: &TensorGrid, ys: &[f64]) -> bool {
    for axis in 0..grid.dim() {
        let ax = &grid.axes()[axis];
        for i in 0..grid.len() {
            let m = grid.multi_index(i);
            if m[axis] + 2 >= ax.len() {
                continue;
            }
            let mut m1 = m.clone();
            m1[axis] += 1;
            let mut m2 = m.clone();
            m2[axis] += 2;
            let (y0, y1, y2) = (ys[i], ys[grid.flat_index(&m1)], ys[grid.flat_index(&m2)]);
            let s1 = (y1 - y0) / (ax[m[axis] + 1] - ax[m[axis]]);
            let s2 = (y2 - y1) / (ax[m[axis] + 2] - ax[m[axis] + 1]);
            if s2 < s1 - 1e-9 * (1.0 + s1.abs()) {
                return false;
            }
        }
    }
    true
}

/// One-sided secant slopes of a convex table at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subdifferential {
    pub point: Vec<f64>,
    /// Lower slope bound per axis.
    pub lower: Vec<f64>,
    /// Upper slope bound per axis.
    pub upper: Vec<f64>,
    /// The interval endpoints (1D) or the box corners (2D).
    pub vertices: Vec<Vec<f64>>,
    /// Largest `upper - lower` over the axes.
    pub width: f64,
    /// Largest grid spacing next to the point.
    pub secant_gap: f64,
    pub differentiable: bool,
}

impl Subdifferential {
    /// True when `x` lies in the box widened by `tol`.
    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lower.iter().zip(&self.upper))
            .all(|(v, (lo, hi))| *v >= lo - tol && *v <= hi + tol)
    }
}

/// Subderivative from neighboring secants.
///
/// At a node, each axis contributes the interval between its backward and
/// forward secants; strictly between nodes, the slope of the containing
/// segment. Other coordinates are snapped to the nearest node.
pub fn subderivative_interval<T: ConvexTable + ?Sized>(table: &T, point: &[f64]) -> Result<Subdifferential> {
    let grid = table.grid();
    let ys = table.values();
    if !table.is_convex() {
        return Err(invalid("subderivatives need a convex table"));
    }
    if point.len() != grid.dim() {
        return Err(invalid("point has the wrong dimension"));
    }
    // locate the point along each axis: (node index, exact node?)
    let mut loc = Vec::with_capacity(grid.dim());
    for (x, ax) in point.iter().zip(grid.axes()) {
        let scale = ax.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let tol = if scale.is_finite() { 1e-9 * scale } else { 1e-12 };
        if ax.len() < 2 || *x < ax[0] - tol || *x > ax[ax.len() - 1] + tol {
            return Err(invalid(format!("point {point:?} is outside the grid hull")));
        }
        let pos = ax.partition_point(|a| *a < x - tol);
        if pos < ax.len() && (ax[pos] - x).abs() <= tol {
            loc.push((pos, true));
        } else {
            loc.push((pos - 1, false));
        }
    }
    let base: Vec<usize> = loc
        .iter()
        .zip(point.iter().zip(grid.axes()))
        .map(|(&(i, exact), (x, ax))| {
            if exact || i + 1 >= ax.len() || (x - ax[i]) <= (ax[i + 1] - x) {
                i
            } else {
                i + 1
            }
        })
        .collect();
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    let mut gap: f64 = 0.0;
    for (axis, &(i, exact)) in loc.iter().enumerate() {
        let ax = &grid.axes()[axis];
        let value_at = |k: usize| {
            let mut m = base.clone();
            m[axis] = k;
            ys[grid.flat_index(&m)]
        };
        let secant = |k: usize| (value_at(k + 1) - value_at(k)) / (ax[k + 1] - ax[k]);
        if exact {
            if i == 0 || i + 1 >= ax.len() {
                return Err(Error::Extrapolation(format!("{point:?}")));
            }
            lower.push(secant(i - 1));
            upper.push(secant(i));
            gap = gap.max(ax[i] - ax[i - 1]).max(ax[i + 1] - ax[i]);
        } else {
            let s = secant(i);
            lower.push(s);
            upper.push(s);
            gap = gap.max(ax[i + 1] - ax[i]);
        }
    }
    if lower.iter().chain(&upper).any(|s| !s.is_finite()) {
        return Err(invalid("subderivative touches an invalid table entry"));
    }
    let vertices = if grid.dim() == 1 {
        vec![vec![lower[0]], vec![upper[0]]]
    } else {
        vec![
            vec![lower[0], lower[1]],
            vec![upper[0], lower[1]],
            vec![upper[0], upper[1]],
            vec![lower[0], upper[1]],
        ]
    };
    let width = lower.iter().zip(&upper).map(|(a, b)| b - a).fold(0.0, f64::max);
    Ok(Subdifferential {
        point: point.to_vec(),
        lower,
        upper,
        vertices,
        width,
        secant_gap: gap,
        differentiable: width <= 2.0 * gap,
    })
}

/// Extent of the interior nodes of a 1D table whose subderivative contains
/// zero within `tol`: the flat piece of alpha, or the corner of beta.
pub fn flat_interval<T: ConvexTable + ?Sized>(table: &T, tol: f64) -> Result<Option<(f64, f64)>> {
    let grid = table.grid();
    if grid.dim() != 1 {
        return Err(invalid("flat intervals are defined for one-dimensional tables"));
    }
    let ax = &grid.axes()[0];
    let mut found: Option<(f64, f64)> = None;
    for &c in ax.iter().take(ax.len().saturating_sub(1)).skip(1) {
        let s = subderivative_interval(table, &[c])?;
        if s.lower[0] <= tol && s.upper[0] >= -tol {
            found = Some(match found {
                None => (c, c),
                Some((a, _)) => (a, c),
            });
        }
    }
    Ok(found)
}
