//! Torus arithmetic and continuous lifting of torus- and circle-valued paths.
//!
//! Points of T^n = R^n/Z^n are stored by their canonical representative in
//! `[0, 1)^n`. A sampled path is lifted to R^n by choosing, at each step, the
//! integer shift that makes the displacement smallest; this is unambiguous as
//! long as every per-coordinate jump stays strictly below one half.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::fmt::join17;

/// Largest per-coordinate jump accepted by the default lifting rule.
pub const HALF_TURN: f64 = 0.5;

/// A point of T^n, n in {1, 2}, stored as its representative in `[0, 1)^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn origin(dim: usize) -> Self {
        TorusPoint { coords: vec![0.0; dim] }
    }

    /// Translates by a vector of R^n and wraps the result.
    pub fn translate(&self, v: &[f64]) -> Result<TorusPoint> {
        if v.len() != self.dim() {
            return Err(invalid("translation has wrong dimension"));
        }
        let moved: Vec<f64> = self.coords.iter().zip(v).map(|(a, b)| a + b).collect();
        wrap(&moved)
    }
}

impl AsRef<[f64]> for TorusPoint {
    fn as_ref(&self) -> &[f64] {
        &self.coords
    }
}

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Canonical projection R^n -> T^n.
pub fn wrap(x: &[f64]) -> Result<TorusPoint> {
    if x.is_empty() || x.len() > 2 {
        return Err(invalid(format!("torus dimension must be 1 or 2, got {}", x.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(invalid("non-finite coordinate"));
    }
    Ok(TorusPoint {
        coords: x.iter().copied().map(frac).collect(),
    })
}

/// Projection without the dimension check, for hot loops on valid data.
pub(crate) fn wrap_unchecked(x: &[f64]) -> TorusPoint {
    TorusPoint {
        coords: x.iter().copied().map(frac).collect(),
    }
}

/// Signed minimal representative of `d` modulo 1, in `[-0.5, 0.5]`.
pub fn min_image(d: f64) -> f64 {
    d - d.round()
}

/// Geodesic distance on the flat torus.
pub fn torus_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| min_image(x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// A continuous lift to R^n of a sampled path on T^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftedPath {
    times: Vec<f64>,
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl LiftedPath {
    /// Builds a path from already-lifted coordinates, checking the sampling condition.
    pub fn from_lifted(times: Vec<f64>, points: Vec<Vec<f64>>) -> Result<Self> {
        check_times(&times, points.len())?;
        let dim = points.first().map_or(0, Vec::len);
        if dim == 0 || dim > 2 || points.iter().any(|p| p.len() != dim) {
            return Err(invalid("lifted points must share a dimension of 1 or 2"));
        }
        for (k, w) in points.windows(2).enumerate() {
            for (i, (a, b)) in w[0].iter().zip(&w[1]).enumerate() {
                let jump = (b - a).abs();
                if !(jump < HALF_TURN) {
                    return Err(Error::AmbiguousLift {
                        index: k + 1,
                        coord: i,
                        jump,
                        bound: HALF_TURN,
                    });
                }
            }
        }
        Ok(LiftedPath { times, points, dim })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn duration(&self) -> f64 {
        match (self.times.first(), self.times.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// The sub-path with sample indices in `range`.
    pub fn slice(&self, range: std::ops::Range<usize>) -> LiftedPath {
        LiftedPath {
            times: self.times[range.clone()].to_vec(),
            points: self.points[range].to_vec(),
            dim: self.dim,
        }
    }

    /// The sub-path covering `[t_start, t_start + window]` (nearest samples).
    pub fn window(&self, t_start: f64, window: f64) -> LiftedPath {
        let lo = self.times.partition_point(|&t| t < t_start);
        let end = t_start + window;
        let hi = self.times.partition_point(|&t| t <= end + 1e-9 * window.abs().max(1.0));
        self.slice(lo.min(self.len().saturating_sub(1))..hi.max(lo + 1).min(self.len()))
    }

    /// CSV with header `t,x1[,x2]`, lifted coordinates.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for i in 1..=self.dim {
            out.push_str(&format!(",x{i}"));
        }
        out.push('\n');
        for (t, p) in self.times.iter().zip(&self.points) {
            out.push_str(&join17(std::iter::once(*t).chain(p.iter().copied())));
            out.push('\n');
        }
        out
    }
}

fn check_times(times: &[f64], n: usize) -> Result<()> {
    if times.len() != n {
        return Err(invalid(format!("{} times for {} samples", times.len(), n)));
    }
    if n == 0 {
        return Err(invalid("empty path"));
    }
    if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("times must be finite and strictly increasing"));
    }
    Ok(())
}

/// Lifts samples of a torus path using the minimal-jump rule with bound 1/2.
pub fn lift_path(samples: &[TorusPoint], times: &[f64]) -> Result<LiftedPath> {
    lift_path_with_bound(samples, times, HALF_TURN)
}

/// Lifts samples of a torus path, rejecting any step whose minimal
/// per-coordinate jump reaches `bound` (`0 < bound <= 0.5`).
pub fn lift_path_with_bound(samples: &[TorusPoint], times: &[f64], bound: f64) -> Result<LiftedPath> {
    if !(bound > 0.0 && bound <= HALF_TURN) {
        return Err(invalid("jump bound must lie in (0, 0.5]"));
    }
    check_times(times, samples.len())?;
    let dim = samples[0].dim();
    if samples.iter().any(|s| s.dim() != dim) {
        return Err(invalid("samples of mixed dimension"));
    }
    let mut points = Vec::with_capacity(samples.len());
    let mut current = samples[0].coords.clone();
    points.push(current.clone());
    for (k, w) in samples.windows(2).enumerate() {
        for i in 0..dim {
            let d = min_image(w[1].coords[i] - w[0].coords[i]);
            if d.abs() >= bound {
                return Err(Error::AmbiguousLift {
                    index: k + 1,
                    coord: i,
                    jump: d.abs(),
                    bound,
                });
            }
            current[i] += d;
        }
        points.push(current.clone());
    }
    Ok(LiftedPath {
        times: times.to_vec(),
        points,
        dim,
    })
}

/// Average velocity of the lift: (last - first) / duration.
pub fn winding_estimate(path: &LiftedPath) -> Result<Vec<f64>> {
    let t = path.duration();
    if !(t > 0.0) {
        return Err(invalid("winding estimate needs a path of positive duration"));
    }
    let first = &path.points[0];
    let last = &path.points[path.len() - 1];
    Ok(first.iter().zip(last).map(|(a, b)| (b - a) / t).collect())
}

/// Samples of a circle-valued observable along an orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleSeries {
    times: Vec<f64>,
    values: Vec<f64>,
}

impl CircleSeries {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        check_times(&times, values.len())?;
        if values.iter().any(|v| !(0.0..1.0).contains(v)) {
            return Err(invalid("circle values must lie in [0, 1)"));
        }
        Ok(CircleSeries { times, values })
    }

    /// Builds a series from arbitrary reals, wrapping each value.
    pub fn from_reals(times: Vec<f64>, values: &[f64]) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite circle value"));
        }
        CircleSeries::new(times, values.iter().copied().map(frac).collect())
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Total continuous increment of a circle-valued series.
pub fn circle_increment(series: &CircleSeries) -> Result<f64> {
    let mut total = 0.0;
    for (k, w) in series.values.windows(2).enumerate() {
        let d = min_image(w[1] - w[0]);
        if d.abs() >= HALF_TURN {
            return Err(Error::AmbiguousLift {
                index: k + 1,
                coord: 0,
                jump: d.abs(),
                bound: HALF_TURN,
            });
        }
        total += d;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pts(xs: &[f64]) -> Vec<TorusPoint> {
        xs.iter().map(|&x| wrap(&[x]).unwrap()).collect()
    }

    fn times(n: usize) -> Vec<f64> {
        (0..n).map(|k| k as f64).collect()
    }

    #[test]
    fn wrap_examples() {
        assert_eq!(wrap(&[0.0]).unwrap().coords(), &[0.0]);
        assert_eq!(wrap(&[1.25, -0.25]).unwrap().coords(), &[0.25, 0.75]);
        assert_eq!(wrap(&[3.0]).unwrap().coords(), &[0.0]);
        assert!(matches!(wrap(&[f64::NAN]), Err(Error::InvalidInput(_))));
        assert!(matches!(wrap(&[0.1, 0.2, 0.3]), Err(Error::InvalidInput(_))));
        assert_eq!(wrap(&[-1e-18]).unwrap().coords(), &[0.0]);
    }

    #[test]
    fn lift_examples() {
        let lifted = lift_path(&pts(&[0.0, 0.4, 0.8, 0.2]), &times(4)).unwrap();
        let xs: Vec<f64> = lifted.points().iter().map(|p| p[0]).collect();
        for (a, b) in xs.iter().zip([0.0, 0.4, 0.8, 1.2]) {
            assert!((a - b).abs() < 1e-15);
        }
        let constant = lift_path(&pts(&[0.3, 0.3, 0.3]), &times(3)).unwrap();
        assert!(constant.points().iter().all(|p| p[0] == 0.3));
    }

    #[test]
    fn half_turn_jumps_are_ambiguous() {
        assert!(matches!(
            lift_path(&pts(&[0.0, 0.5]), &times(2)),
            Err(Error::AmbiguousLift { index: 1, .. })
        ));
        // (0.0, 0.6) has minimal jump -0.4: accepted under the default bound,
        // rejected once the caller declares a tighter step bound.
        let ok = lift_path(&pts(&[0.0, 0.6]), &times(2)).unwrap();
        assert!((ok.points()[1][0] + 0.4).abs() < 1e-15);
        assert!(matches!(
            lift_path_with_bound(&pts(&[0.0, 0.6]), &times(2), 0.35),
            Err(Error::AmbiguousLift { .. })
        ));
    }

    #[test]
    fn lift_rejects_bad_times() {
        assert!(lift_path(&pts(&[0.0, 0.1]), &[0.0, 0.0]).is_err());
        assert!(lift_path(&pts(&[0.0, 0.1]), &[0.0]).is_err());
    }

    #[test]
    fn winding_of_linear_flow() {
        let alpha = [1.0, 0.4142];
        let n = 10_001;
        let ts: Vec<f64> = (0..n).map(|k| k as f64 * 0.01).collect();
        let samples: Vec<TorusPoint> = ts
            .iter()
            .map(|t| wrap(&[alpha[0] * t, alpha[1] * t]).unwrap())
            .collect();
        let path = lift_path(&samples, &ts).unwrap();
        let w = winding_estimate(&path).unwrap();
        assert!((w[0] - alpha[0]).abs() < 1e-12);
        assert!((w[1] - alpha[1]).abs() < 1e-12);

        let still = lift_path(&pts(&[0.7, 0.7]), &[0.0, 1.0]).unwrap();
        assert_eq!(winding_estimate(&still).unwrap(), vec![0.0]);
        let single = lift_path(&pts(&[0.7]), &[0.0]).unwrap();
        assert!(winding_estimate(&single).is_err());
    }

    #[test]
    fn circle_increment_examples() {
        let s = CircleSeries::new(times(5), vec![0.0, 0.25, 0.5, 0.75, 0.0]).unwrap();
        assert!((circle_increment(&s).unwrap() - 1.0).abs() < 1e-12);
        // five forward jumps of 0.4 under the minimal-jump rule
        let s = CircleSeries::new(times(6), vec![0.0, 0.4, 0.8, 0.2, 0.6, 0.0]).unwrap();
        assert!((circle_increment(&s).unwrap() - 2.0).abs() < 1e-12);
        let c = CircleSeries::new(times(3), vec![0.25; 3]).unwrap();
        assert_eq!(circle_increment(&c).unwrap(), 0.0);
        let back = CircleSeries::new(times(4), vec![0.0, 0.7, 0.4, 0.1]).unwrap();
        assert!((circle_increment(&back).unwrap() + 0.9).abs() < 1e-12);
        let bad = CircleSeries::new(times(2), vec![0.0, 0.5]).unwrap();
        assert!(matches!(circle_increment(&bad), Err(Error::AmbiguousLift { .. })));
    }

    #[test]
    fn csv_header_and_rows() {
        let path = lift_path(&pts(&[0.0, 0.4]), &[0.0, 0.5]).unwrap();
        let csv = path.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("t,x1"));
        assert_eq!(lines.count(), 2);
    }

    fn smooth_path(a: f64, b: f64, t: f64) -> [f64; 2] {
        [a * t + 0.1 * (3.0 * t).sin(), b * t - 0.2 * (t).cos()]
    }

    proptest! {
        #[test]
        fn wrap_is_integer_periodic(x in -50.0f64..50.0, y in -50.0f64..50.0, k in -20i32..20, l in -20i32..20) {
            let a = wrap(&[x, y]).unwrap();
            let b = wrap(&[x + k as f64, y + l as f64]).unwrap();
            prop_assert!(torus_distance(a.coords(), b.coords()) < 1e-9);
            prop_assert!(a.coords().iter().all(|c| (0.0..1.0).contains(c)));
        }

        #[test]
        fn lift_reproduces_samples(a in -3.0f64..3.0, b in -3.0f64..3.0, shift in -5i32..5) {
            let ts: Vec<f64> = (0..400).map(|k| k as f64 * 0.02).collect();
            let samples: Vec<TorusPoint> = ts.iter().map(|&t| wrap(&smooth_path(a, b, t)).unwrap()).collect();
            let path = lift_path(&samples, &ts).unwrap();
            for (p, s) in path.points().iter().zip(&samples) {
                prop_assert!(torus_distance(wrap(p).unwrap().coords(), s.coords()) < 1e-12);
            }
            prop_assert_eq!(&path.points()[0], &samples[0].coords().to_vec());
            // the lift from an integer-shifted representative is the same lift, shifted
            let shifted: Vec<Vec<f64>> = path.points().iter()
                .map(|p| p.iter().map(|c| c + shift as f64).collect()).collect();
            let relifted = LiftedPath::from_lifted(ts.clone(), shifted).unwrap();
            for (p, q) in relifted.points().iter().zip(path.points()) {
                for (u, v) in p.iter().zip(q) {
                    prop_assert!((u - v - shift as f64).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn winding_is_refinement_invariant(a in -3.0f64..3.0, b in -3.0f64..3.0) {
            let coarse: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
            let fine: Vec<f64> = (0..=800).map(|k| k as f64 * 0.0125).collect();
            let est = |ts: &[f64]| {
                let s: Vec<TorusPoint> = ts.iter().map(|&t| wrap(&smooth_path(a, b, t)).unwrap()).collect();
                winding_estimate(&lift_path(&s, ts).unwrap()).unwrap()
            };
            let (w1, w2) = (est(&coarse), est(&fine));
            prop_assert!((w1[0] - w2[0]).abs() < 1e-12 && (w1[1] - w2[1]).abs() < 1e-12);
        }

        #[test]
        fn circle_increment_is_additive(vals in proptest::collection::vec(-0.45f64..0.45, 2..40), split in 1usize..39) {
            let mut acc = 0.3;
            let reals: Vec<f64> = std::iter::once(acc).chain(vals.iter().map(|d| { acc += d; acc })).collect();
            let split = split.min(reals.len() - 1);
            let ts = |n: usize, off: usize| (0..n).map(|k| (k + off) as f64).collect::<Vec<_>>();
            let whole = CircleSeries::from_reals(ts(reals.len(), 0), &reals).unwrap();
            let left = CircleSeries::from_reals(ts(split + 1, 0), &reals[..=split]).unwrap();
            let right = CircleSeries::from_reals(ts(reals.len() - split, split), &reals[split..]).unwrap();
            let total = circle_increment(&whole).unwrap();
            prop_assert!((total - circle_increment(&left).unwrap() - circle_increment(&right).unwrap()).abs() < 1e-12);
            prop_assert!((total - (reals[reals.len() - 1] - reals[0])).abs() < 1e-12);
        }
    }
}
