use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Values of a periodic function on the uniform grid `{k / n}` of T^dim.
///
/// Index `i0 + n * i1`: the first coordinate varies fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridPotential {
    dim: usize,
    n: usize,
    values: Vec<f64>,
}

impl GridPotential {
    pub fn zeros(dim: usize, n: usize) -> Result<Self> {
        Self::new(dim, n, vec![0.0; n.pow(dim as u32)])
    }

    pub fn new(dim: usize, n: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 || dim > 2 || n == 0 {
            return Err(invalid("grid potential needs dim in {1,2} and n > 0"));
        }
        if values.len() != n.pow(dim as u32) {
            return Err(invalid(format!(
                "expected {} values, got {}",
                n.pow(dim as u32),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("grid potential must be finite"));
        }
        Ok(GridPotential { dim, n, values })
    }

    /// Samples a function at the grid points.
    pub fn from_fn(dim: usize, n: usize, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let len = n.pow(dim as u32);
        let values = (0..len).map(|i| f(&point_of(dim, n, i))).collect();
        Self::new(dim, n, values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.n as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        point_of(self.dim, self.n, index)
    }

    /// Multi-index of a flat index.
    pub fn cell(&self, index: usize) -> [usize; 2] {
        [index % self.n, if self.dim == 2 { index / self.n } else { 0 }]
    }

    /// Flat index of a (periodically reduced) multi-index.
    pub fn index(&self, cell: [i64; 2]) -> usize {
        let n = self.n as i64;
        let i0 = cell[0].rem_euclid(n) as usize;
        if self.dim == 1 {
            i0
        } else {
            i0 + self.n * cell[1].rem_euclid(n) as usize
        }
    }

    /// Periodic (bi)linear interpolation.
    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let n = self.n as f64;
        let s0 = x[0] * n;
        let f0 = s0.floor();
        let t0 = s0 - f0;
        let i0 = f0 as i64;
        if self.dim == 1 {
            return (1.0 - t0) * self.values[self.index([i0, 0])] + t0 * self.values[self.index([i0 + 1, 0])];
        }
        let s1 = x[1] * n;
        let f1 = s1.floor();
        let t1 = s1 - f1;
        let i1 = f1 as i64;
        let v = |a: i64, b: i64| self.values[self.index([a, b])];
        (1.0 - t0) * (1.0 - t1) * v(i0, i1)
            + t0 * (1.0 - t1) * v(i0 + 1, i1)
            + (1.0 - t0) * t1 * v(i0, i1 + 1)
            + t0 * t1 * v(i0 + 1, i1 + 1)
    }

    /// Centered-difference gradient at a grid point.
    pub fn centered_gradient(&self, index: usize) -> Vec<f64> {
        let [i0, i1] = self.cell(index);
        let (i0, i1) = (i0 as i64, i1 as i64);
        let h2 = 2.0 * self.spacing();
        let mut g = vec![(self.values[self.index([i0 + 1, i1])] - self.values[self.index([i0 - 1, i1])]) / h2];
        if self.dim == 2 {
            g.push((self.values[self.index([i0, i1 + 1])] - self.values[self.index([i0, i1 - 1])]) / h2);
        }
        g
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Adds a constant to every value.
    pub fn shift(&mut self, k: f64) {
        self.values.iter_mut().for_each(|v| *v += k);
    }

    pub fn sup_distance(&self, other: &GridPotential) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

pub(crate) fn point_of(dim: usize, n: usize, index: usize) -> Vec<f64> {
    let h = 1.0 / n as f64;
    if dim == 1 {
        vec![index as f64 * h]
    } else {
        vec![(index % n) as f64 * h, (index / n) as f64 * h]
    }
}

/// A tensor-product grid of points of R^dim (classes c or rotation vectors h).
///
/// Flat index `i0 + len0 * i1`, first axis fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TensorGrid {
    axes: Vec<Vec<f64>>,
}

impl TensorGrid {
    pub fn new(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 || axes.iter().any(|a| a.is_empty()) {
            return Err(invalid("tensor grid needs one or two nonempty axes"));
        }
        if axes.iter().any(|a| a.windows(2).any(|w| !(w[1] > w[0]))) {
            return Err(invalid("grid axes must be strictly increasing"));
        }
        Ok(TensorGrid { axes })
    }

    /// `steps` evenly spaced points of `[min, max]` on each of `dim` axes.
    pub fn uniform(dim: usize, min: f64, max: f64, steps: usize) -> Result<Self> {
        if steps == 0 || (steps > 1 && !(max > min)) {
            return Err(invalid("uniform grid needs min < max and steps > 0"));
        }
        let axis: Vec<f64> = if steps == 1 {
            vec![min]
        } else {
            (0..steps)
                .map(|k| min + (max - min) * k as f64 / (steps - 1) as f64)
                .collect()
        };
        Self::new(vec![axis; dim])
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Vec<f64>] {
        &self.axes
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(Vec::len).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn shape(&self) -> Vec<usize> {
        self.axes.iter().map(Vec::len).collect()
    }

    pub fn multi_index(&self, index: usize) -> Vec<usize> {
        let l0 = self.axes[0].len();
        if self.dim() == 1 {
            vec![index]
        } else {
            vec![index % l0, index / l0]
        }
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        if self.dim() == 1 {
            multi[0]
        } else {
            multi[0] + self.axes[0].len() * multi[1]
        }
    }

    pub fn point(&self, index: usize) -> Vec<f64> {
        self.multi_index(index)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a[i])
            .collect()
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// True when some coordinate sits at the first or last node of its axis.
    pub fn on_boundary(&self, index: usize) -> bool {
        self.multi_index(index)
            .iter()
            .zip(&self.axes)
            .any(|(&i, a)| a.len() > 1 && (i == 0 || i + 1 == a.len()))
    }

    /// Largest spacing between consecutive nodes over all axes.
    pub fn max_spacing(&self) -> f64 {
        self.axes
            .iter()
            .flat_map(|a| a.windows(2).map(|w| w[1] - w[0]))
            .fold(0.0, f64::max)
    }

    /// Index of the node equal to `x` (within a relative tolerance).
    pub fn find_node(&self, x: &[f64]) -> Option<usize> {
        if x.len() != self.dim() {
            return None;
        }
        let mut multi = Vec::with_capacity(self.dim());
        for (xi, axis) in x.iter().zip(&self.axes) {
            let scale = axis.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            let tol = if scale.is_finite() { 1e-9 * scale } else { 1e-12 };
            let pos = axis.partition_point(|a| *a < xi - tol);
            if pos < axis.len() && (axis[pos] - xi).abs() <= tol {
                multi.push(pos);
            } else {
                return None;
            }
        }
        Some(self.flat_index(&multi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_exact_at_nodes_and_periodic() {
        let u = GridPotential::from_fn(2, 8, |x| (x[0] * 5.0).sin() + x[1]).unwrap();
        for i in 0..u.len() {
            assert!((u.interpolate(&u.point(i)) - u.values()[i]).abs() < 1e-14);
        }
        let a = u.interpolate(&[0.93, 0.97]);
        let v = u.values();
        assert!(a.is_finite() && a <= v.iter().cloned().fold(f64::MIN, f64::max));
        let one = GridPotential::from_fn(1, 4, |x| x[0]).unwrap();
        // between the last node and the wrapped first node
        assert!((one.interpolate(&[0.875]) - 0.375).abs() < 1e-15);
    }

    #[test]
    fn centered_gradient_of_linear_in_cell() {
        let u = GridPotential::from_fn(1, 64, |x| (2.0 * std::f64::consts::PI * x[0]).sin()).unwrap();
        let g = u.centered_gradient(0)[0];
        assert!((g - 2.0 * std::f64::consts::PI).abs() < 0.02);
    }

    #[test]
    fn tensor_grid_indexing() {
        let g = TensorGrid::uniform(2, -1.0, 1.0, 5).unwrap();
        assert_eq!(g.len(), 25);
        assert_eq!(g.point(6), vec![-0.5, -0.5]);
        assert_eq!(g.point(7), vec![0.0, -0.5]);
        assert_eq!(g.find_node(&[-0.5, -0.5]), Some(6));
        assert_eq!(g.find_node(&[-0.4, -0.5]), None);
        assert!(g.on_boundary(0) && !g.on_boundary(12));
        assert!((g.max_spacing() - 0.5).abs() < 1e-15);
        assert!(TensorGrid::new(vec![vec![1.0, 0.0]]).is_err());
    }
}
