//! Tonelli Lagrangians and Hamiltonians on T^n x R^n and the Legendre
//! transform between them.
//!
//! A Lagrangian is Tonelli when it is fiberwise strictly convex and
//! superlinear in the velocity. The built-in family is the mechanical one,
//!
//! ```text
//! L(x, v) = 1/2 <A v, v> - V(x) + <W(x), v>
//! H(x, p) = 1/2 <A^{-1}(p - W(x)), p - W(x)> + V(x)
//! ```
//!
//! with `A` symmetric positive definite and `V`, `W` trigonometric
//! polynomials. Arbitrary models implement [`Lagrangian`] / [`Hamiltonian`]
//! directly; derivatives they do not provide fall back to central finite
//! differences, which [`verify_tonelli`] flags.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::TorusPoint;

/// Step of the central finite differences used when a model has no analytic derivative.
pub const FD_STEP: f64 = 1e-6;

/// Newton tolerance floor when derivatives come from finite differences,
/// whose rounding noise is about `1e-16 / FD_STEP`.
pub const FD_NEWTON_TOL: f64 = 1e-9;

fn effective(opts: NewtonOptions, analytic: bool) -> NewtonOptions {
    if analytic {
        opts
    } else {
        NewtonOptions {
            tol: opts.tol.max(FD_NEWTON_TOL),
            ..opts
        }
    }
}

fn fd_gradient(f: impl Fn(&[f64]) -> f64, z: &[f64]) -> Vec<f64> {
    let mut buf = z.to_vec();
    (0..z.len())
        .map(|i| {
            buf[i] = z[i] + FD_STEP;
            let up = f(&buf);
            buf[i] = z[i] - FD_STEP;
            let down = f(&buf);
            buf[i] = z[i];
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

fn fd_jacobian(g: impl Fn(&[f64]) -> Vec<f64>, z: &[f64]) -> DMatrix<f64> {
    let n = z.len();
    let mut jac = DMatrix::zeros(n, n);
    let mut buf = z.to_vec();
    for j in 0..n {
        buf[j] = z[j] + FD_STEP;
        let up = g(&buf);
        buf[j] = z[j] - FD_STEP;
        let down = g(&buf);
        buf[j] = z[j];
        for i in 0..n {
            jac[(i, j)] = (up[i] - down[i]) / (2.0 * FD_STEP);
        }
    }
    jac
}

/// A Lagrangian on the tangent bundle of T^n.
pub trait Lagrangian: Send + Sync {
    fn dim(&self) -> usize;

    fn lagrangian(&self, x: &[f64], v: &[f64]) -> f64;

    fn dl_dv(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        fd_gradient(|w| self.lagrangian(x, w), v)
    }

    fn dl_dx(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        fd_gradient(|y| self.lagrangian(y, v), x)
    }

    fn d2l_dv2(&self, x: &[f64], v: &[f64]) -> DMatrix<f64> {
        let h = fd_jacobian(|w| self.dl_dv(x, w), v);
        (&h + h.transpose()) * 0.5
    }

    /// Whether the derivative methods are exact rather than finite differences.
    fn analytic_derivatives(&self) -> bool {
        false
    }
}

/// A Hamiltonian on the cotangent bundle of T^n.
pub trait Hamiltonian: Send + Sync {
    fn dim(&self) -> usize;

    fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64;

    fn dh_dp(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        fd_gradient(|q| self.hamiltonian(x, q), p)
    }

    fn dh_dx(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        fd_gradient(|y| self.hamiltonian(y, p), x)
    }

    fn d2h_dp2(&self, x: &[f64], p: &[f64]) -> DMatrix<f64> {
        let h = fd_jacobian(|q| self.dh_dp(x, q), p);
        (&h + h.transpose()) * 0.5
    }

    fn analytic_derivatives(&self) -> bool {
        false
    }
}

/// One term `a cos(2 pi <k, x> + phase)` of a trigonometric polynomial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CosTerm {
    pub amplitude: f64,
    pub wavevector: Vec<i32>,
    #[serde(default)]
    pub phase: f64,
}

/// Periodic scalar field `constant + sum_k a_k cos(2 pi <k, x> + phase_k)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrigSeries {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub terms: Vec<CosTerm>,
}

impl TrigSeries {
    pub fn constant(value: f64) -> Self {
        TrigSeries {
            constant: value,
            terms: Vec::new(),
        }
    }

    pub fn cosine(amplitude: f64, wavevector: Vec<i32>) -> Self {
        TrigSeries {
            constant: 0.0,
            terms: vec![CosTerm {
                amplitude,
                wavevector,
                phase: 0.0,
            }],
        }
    }

    pub fn with_term(mut self, amplitude: f64, wavevector: Vec<i32>, phase: f64) -> Self {
        self.terms.push(CosTerm {
            amplitude,
            wavevector,
            phase,
        });
        self
    }

    fn angle(term: &CosTerm, x: &[f64]) -> f64 {
        2.0 * PI * term.wavevector.iter().zip(x).map(|(k, xi)| *k as f64 * xi).sum::<f64>() + term.phase
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|t| t.amplitude * Self::angle(t, x).cos())
                .sum::<f64>()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for t in &self.terms {
            let s = -t.amplitude * Self::angle(t, x).sin() * 2.0 * PI;
            for (gi, k) in g.iter_mut().zip(&t.wavevector) {
                *gi += s * *k as f64;
            }
        }
        g
    }

    pub fn is_constant(&self) -> bool {
        self.terms.iter().all(|t| t.amplitude == 0.0)
    }

    /// Sum of absolute amplitudes, an upper bound for the oscillation.
    pub fn amplitude_bound(&self) -> f64 {
        self.terms.iter().map(|t| t.amplitude.abs()).sum()
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.terms.iter().any(|t| t.wavevector.len() != dim) {
            return Err(invalid(format!(
                "trigonometric term with wavevector not of dimension {dim}"
            )));
        }
        Ok(())
    }
}

/// Mechanical Tonelli system `1/2 <A v, v> - V(x) + <W(x), v>`.
#[derive(Debug, Clone, PartialEq)]
pub struct MechanicalModel {
    name: String,
    kinetic: DMatrix<f64>,
    kinetic_inv: DMatrix<f64>,
    potential: TrigSeries,
    magnetic: Vec<TrigSeries>,
}

impl MechanicalModel {
    pub fn new(
        name: impl Into<String>,
        kinetic: DMatrix<f64>,
        potential: TrigSeries,
        magnetic: Vec<TrigSeries>,
    ) -> Result<Self> {
        let n = kinetic.nrows();
        if n == 0 || n > 2 || kinetic.ncols() != n {
            return Err(invalid("kinetic matrix must be square of size 1 or 2"));
        }
        if (&kinetic - kinetic.transpose()).amax() > 1e-12 {
            return Err(invalid("kinetic matrix must be symmetric"));
        }
        let chol = kinetic
            .clone()
            .cholesky()
            .ok_or_else(|| invalid("kinetic matrix must be positive definite"))?;
        potential.check_dim(n)?;
        if magnetic.len() != n {
            return Err(invalid("magnetic term needs one component per dimension"));
        }
        for w in &magnetic {
            w.check_dim(n)?;
        }
        Ok(MechanicalModel {
            name: name.into(),
            kinetic_inv: chol.inverse(),
            kinetic,
            potential,
            magnetic,
        })
    }

    /// Free motion `H = |p|^2 / 2`.
    pub fn integrable(dim: usize) -> Result<Self> {
        Self::new(
            "integrable",
            DMatrix::identity(dim, dim),
            TrigSeries::default(),
            vec![TrigSeries::default(); dim],
        )
    }

    /// `H = p^2/2 + a cos(2 pi x)` on T^1.
    pub fn pendulum(amplitude: f64) -> Result<Self> {
        Self::new(
            "pendulum",
            DMatrix::identity(1, 1),
            TrigSeries::cosine(amplitude, vec![1]),
            vec![TrigSeries::default()],
        )
    }

    /// Two uncoupled pendula, `V = a (cos 2 pi x1 + cos 2 pi x2)`.
    pub fn two_dof_pendulum(amplitude: f64) -> Result<Self> {
        Self::new(
            "two_dof_pendulum",
            DMatrix::identity(2, 2),
            TrigSeries::cosine(amplitude, vec![1, 0]).with_term(amplitude, vec![0, 1], 0.0),
            vec![TrigSeries::default(); 2],
        )
    }

    /// Free motion with a constant magnetic term `W = w`.
    pub fn magnetic(w: &[f64]) -> Result<Self> {
        Self::new(
            "magnetic",
            DMatrix::identity(w.len(), w.len()),
            TrigSeries::default(),
            w.iter().map(|&c| TrigSeries::constant(c)).collect(),
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kinetic(&self) -> &DMatrix<f64> {
        &self.kinetic
    }

    pub fn potential(&self) -> &TrigSeries {
        &self.potential
    }

    pub fn magnetic_field(&self, x: &[f64]) -> Vec<f64> {
        self.magnetic.iter().map(|w| w.value(x)).collect()
    }

    /// Jacobian `dW_i/dx_j`.
    fn magnetic_jacobian(&self, x: &[f64]) -> Vec<Vec<f64>> {
        self.magnetic.iter().map(|w| w.gradient(x)).collect()
    }

    fn matvec(m: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
        (0..m.nrows())
            .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * v[j]).sum())
            .collect()
    }

    fn quad(m: &DMatrix<f64>, v: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..v.len() {
            for j in 0..v.len() {
                s += m[(i, j)] * v[i] * v[j];
            }
        }
        s
    }

    fn shifted(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        p.iter().zip(&self.magnetic).map(|(pi, w)| pi - w.value(x)).collect()
    }
}

impl Lagrangian for MechanicalModel {
    fn dim(&self) -> usize {
        self.kinetic.nrows()
    }

    fn lagrangian(&self, x: &[f64], v: &[f64]) -> f64 {
        let mut magnetic = 0.0;
        for (w, vi) in self.magnetic.iter().zip(v) {
            if !w.is_constant() || w.constant != 0.0 {
                magnetic += w.value(x) * vi;
            }
        }
        0.5 * Self::quad(&self.kinetic, v) - self.potential.value(x) + magnetic
    }

    fn dl_dv(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        Self::matvec(&self.kinetic, v)
            .into_iter()
            .zip(self.magnetic_field(x))
            .map(|(a, w)| a + w)
            .collect()
    }

    fn dl_dx(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let jac = self.magnetic_jacobian(x);
        let mut g: Vec<f64> = self.potential.gradient(x).into_iter().map(|d| -d).collect();
        for (i, row) in jac.iter().enumerate() {
            for (j, d) in row.iter().enumerate() {
                g[j] += d * v[i];
            }
        }
        g
    }

    fn d2l_dv2(&self, _x: &[f64], _v: &[f64]) -> DMatrix<f64> {
        self.kinetic.clone()
    }

    fn analytic_derivatives(&self) -> bool {
        true
    }
}

impl Hamiltonian for MechanicalModel {
    fn dim(&self) -> usize {
        self.kinetic.nrows()
    }

    fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64 {
        let q = self.shifted(x, p);
        0.5 * Self::quad(&self.kinetic_inv, &q) + self.potential.value(x)
    }

    fn dh_dp(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        Self::matvec(&self.kinetic_inv, &self.shifted(x, p))
    }

    fn dh_dx(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        let v = self.dh_dp(x, p);
        let jac = self.magnetic_jacobian(x);
        let mut g = self.potential.gradient(x);
        for (i, row) in jac.iter().enumerate() {
            for (j, d) in row.iter().enumerate() {
                g[j] -= d * v[i];
            }
        }
        g
    }

    fn d2h_dp2(&self, _x: &[f64], _p: &[f64]) -> DMatrix<f64> {
        self.kinetic_inv.clone()
    }

    fn analytic_derivatives(&self) -> bool {
        true
    }
}

/// Parameters of the built-in model registry.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Dimension for `integrable` (default 1).
    #[serde(default)]
    pub dim: Option<usize>,
    /// Potential amplitude for the pendulum models (default 1).
    #[serde(default)]
    pub amplitude: Option<f64>,
    /// Constant magnetic term for `magnetic`.
    #[serde(default)]
    pub w: Option<Vec<f64>>,
}

/// Names accepted by [`build_model`].
pub const MODEL_NAMES: [&str; 4] = ["integrable", "pendulum", "two_dof_pendulum", "magnetic"];

/// Looks up a built-in model by name.
pub fn build_model(name: &str, params: &ModelParams) -> Result<MechanicalModel> {
    let amplitude = params.amplitude.unwrap_or(1.0);
    match name {
        "integrable" => MechanicalModel::integrable(params.dim.unwrap_or(1)),
        "pendulum" => MechanicalModel::pendulum(amplitude),
        "two_dof_pendulum" => MechanicalModel::two_dof_pendulum(amplitude),
        "magnetic" => {
            let w = params
                .w
                .as_ref()
                .ok_or_else(|| invalid("model `magnetic` needs parameter `w`"))?;
            MechanicalModel::magnetic(w)
        }
        other => Err(invalid(format!(
            "unknown model `{other}` (expected one of {})",
            MODEL_NAMES.join(", ")
        ))),
    }
}

/// A closed one-form `eta = c + du` on T^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedOneForm {
    pub cohomology: Vec<f64>,
    #[serde(default)]
    pub exact_part: Option<TrigSeries>,
}

impl ClosedOneForm {
    pub fn constant(c: &[f64]) -> Self {
        ClosedOneForm {
            cohomology: c.to_vec(),
            exact_part: None,
        }
    }

    pub fn with_exact_part(c: &[f64], u: TrigSeries) -> Self {
        ClosedOneForm {
            cohomology: c.to_vec(),
            exact_part: Some(u),
        }
    }

    pub fn dim(&self) -> usize {
        self.cohomology.len()
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        match &self.exact_part {
            None => self.cohomology.clone(),
            Some(u) => self.cohomology.iter().zip(u.gradient(x)).map(|(c, d)| c + d).collect(),
        }
    }

    /// `<eta(x), v>`.
    pub fn pair(&self, x: &[f64], v: &[f64]) -> f64 {
        let mut s: f64 = self.cohomology.iter().zip(v).map(|(c, vi)| c * vi).sum();
        if let Some(u) = &self.exact_part {
            s += u.gradient(x).iter().zip(v).map(|(d, vi)| d * vi).sum::<f64>();
        }
        s
    }
}

/// The modified Lagrangian `L_eta(x, v) = L(x, v) - <eta(x), v>`.
pub fn modified_lagrangian<L: Lagrangian + ?Sized>(l: &L, eta: &ClosedOneForm, x: &[f64], v: &[f64]) -> f64 {
    l.lagrangian(x, v) - eta.pair(x, v)
}

/// Options of the damped Newton solves behind the Legendre transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewtonOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            max_iter: 50,
            tol: 1e-12,
        }
    }
}

/// Minimizes the strictly convex `f(z) - <target, z>` by damped Newton,
/// i.e. solves `grad f(z) = target`.
fn solve_gradient_equation(
    f: impl Fn(&[f64]) -> f64,
    grad: impl Fn(&[f64]) -> Vec<f64>,
    hess: impl Fn(&[f64]) -> DMatrix<f64>,
    target: &[f64],
    init: &[f64],
    opts: NewtonOptions,
    what: &str,
) -> Result<Vec<f64>> {
    let n = target.len();
    let scale = 1.0 + target.iter().map(|t| t.abs()).fold(0.0, f64::max);
    let residual = |z: &[f64]| -> Vec<f64> { grad(z).iter().zip(target).map(|(g, t)| g - t).collect() };
    let norm = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();
    let merit = |z: &[f64]| f(z) - z.iter().zip(target).map(|(a, b)| a * b).sum::<f64>();

    let mut z = init.to_vec();
    let mut r = residual(&z);
    let mut rn = norm(&r);
    for _ in 0..opts.max_iter {
        if !rn.is_finite() {
            break;
        }
        if rn <= opts.tol * scale {
            return Ok(z);
        }
        let h = hess(&z);
        let step = h
            .lu()
            .solve(&DVector::from_iterator(n, r.iter().map(|x| -x)))
            .ok_or_else(|| Error::NoConvergence {
                what: format!("{what} (singular Hessian)"),
                iterations: 0,
                residual: rn,
            })?;
        let slope: f64 = step.iter().zip(&r).map(|(s, g)| s * g).sum();
        let m0 = merit(&z);
        let mut lambda = 1.0;
        let mut next;
        loop {
            next = z
                .iter()
                .zip(step.iter())
                .map(|(a, s)| a + lambda * s)
                .collect::<Vec<_>>();
            let m1 = merit(&next);
            let r1 = norm(&residual(&next));
            if m1 <= m0 + 1e-4 * lambda * slope || r1 < rn || lambda < 1e-6 {
                break;
            }
            lambda *= 0.5;
        }
        z = next;
        r = residual(&z);
        rn = norm(&r);
    }
    if rn <= opts.tol * scale {
        return Ok(z);
    }
    Err(Error::NoConvergence {
        what: what.to_string(),
        iterations: opts.max_iter,
        residual: rn,
    })
}

/// Legendre transform `(x, v) -> (x, dL/dv(x, v))`.
pub fn legendre<L: Lagrangian + ?Sized>(l: &L, x: &TorusPoint, v: &[f64]) -> (TorusPoint, Vec<f64>) {
    (x.clone(), l.dl_dv(x.coords(), v))
}

/// Inverse Legendre transform: solves `dL/dv(x, v) = p` by damped Newton
/// started from `v = p`.
pub fn inverse_legendre<L: Lagrangian + ?Sized>(l: &L, x: &TorusPoint, p: &[f64]) -> Result<(TorusPoint, Vec<f64>)> {
    inverse_legendre_with(l, x, p, NewtonOptions::default())
}

pub fn inverse_legendre_with<L: Lagrangian + ?Sized>(
    l: &L,
    x: &TorusPoint,
    p: &[f64],
    opts: NewtonOptions,
) -> Result<(TorusPoint, Vec<f64>)> {
    let xs = x.coords();
    let v = solve_gradient_equation(
        |v| l.lagrangian(xs, v),
        |v| l.dl_dv(xs, v),
        |v| l.d2l_dv2(xs, v),
        p,
        p,
        effective(opts, l.analytic_derivatives()),
        "inverse Legendre transform",
    )?;
    Ok((x.clone(), v))
}

/// The Lagrangian `sup_p <p, v> - H(x, p)` of a Tonelli Hamiltonian.
#[derive(Debug, Clone)]
pub struct ConjugateLagrangian<H> {
    hamiltonian: H,
    opts: NewtonOptions,
}

/// Builds the Legendre-Fenchel dual Lagrangian of `h`.
pub fn lagrangian_from_hamiltonian<H: Hamiltonian>(h: H) -> ConjugateLagrangian<H> {
    ConjugateLagrangian {
        hamiltonian: h,
        opts: NewtonOptions::default(),
    }
}

impl<H: Hamiltonian> ConjugateLagrangian<H> {
    /// The maximizing momentum, `p` with `dH/dp(x, p) = v`.
    pub fn momentum(&self, x: &[f64], v: &[f64]) -> Result<Vec<f64>> {
        let h = &self.hamiltonian;
        solve_gradient_equation(
            |p| h.hamiltonian(x, p),
            |p| h.dh_dp(x, p),
            |p| h.d2h_dp2(x, p),
            v,
            v,
            effective(self.opts, h.analytic_derivatives()),
            "Legendre-Fenchel maximization",
        )
    }

    pub fn try_lagrangian(&self, x: &[f64], v: &[f64]) -> Result<f64> {
        let p = self.momentum(x, v)?;
        Ok(p.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() - self.hamiltonian.hamiltonian(x, &p))
    }

    pub fn hamiltonian(&self) -> &H {
        &self.hamiltonian
    }
}

impl<H: Hamiltonian> Lagrangian for ConjugateLagrangian<H> {
    fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    /// NaN when the inner maximization fails; use `try_lagrangian` to see why.
    fn lagrangian(&self, x: &[f64], v: &[f64]) -> f64 {
        self.try_lagrangian(x, v).unwrap_or(f64::NAN)
    }

    fn dl_dv(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        self.momentum(x, v).unwrap_or_else(|_| vec![f64::NAN; v.len()])
    }

    fn dl_dx(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        match self.momentum(x, v) {
            Ok(p) => self.hamiltonian.dh_dx(x, &p).into_iter().map(|d| -d).collect(),
            Err(_) => vec![f64::NAN; x.len()],
        }
    }

    fn d2l_dv2(&self, x: &[f64], v: &[f64]) -> DMatrix<f64> {
        match self.momentum(x, v) {
            Ok(p) => self
                .hamiltonian
                .d2h_dp2(x, &p)
                .try_inverse()
                .unwrap_or_else(|| DMatrix::from_element(v.len(), v.len(), f64::NAN)),
            Err(_) => DMatrix::from_element(v.len(), v.len(), f64::NAN),
        }
    }

    fn analytic_derivatives(&self) -> bool {
        self.hamiltonian.analytic_derivatives()
    }
}

/// The Hamiltonian `sup_v <p, v> - L(x, v)` of a Tonelli Lagrangian.
#[derive(Debug, Clone)]
pub struct ConjugateHamiltonian<L> {
    lagrangian: L,
    opts: NewtonOptions,
}

pub fn hamiltonian_from_lagrangian<L: Lagrangian>(l: L) -> ConjugateHamiltonian<L> {
    ConjugateHamiltonian {
        lagrangian: l,
        opts: NewtonOptions::default(),
    }
}

impl<L: Lagrangian> ConjugateHamiltonian<L> {
    pub fn velocity(&self, x: &[f64], p: &[f64]) -> Result<Vec<f64>> {
        let l = &self.lagrangian;
        solve_gradient_equation(
            |v| l.lagrangian(x, v),
            |v| l.dl_dv(x, v),
            |v| l.d2l_dv2(x, v),
            p,
            p,
            effective(self.opts, l.analytic_derivatives()),
            "Legendre-Fenchel maximization",
        )
    }

    pub fn try_hamiltonian(&self, x: &[f64], p: &[f64]) -> Result<f64> {
        let v = self.velocity(x, p)?;
        Ok(p.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() - self.lagrangian.lagrangian(x, &v))
    }
}

impl<L: Lagrangian> Hamiltonian for ConjugateHamiltonian<L> {
    fn dim(&self) -> usize {
        self.lagrangian.dim()
    }

    fn hamiltonian(&self, x: &[f64], p: &[f64]) -> f64 {
        self.try_hamiltonian(x, p).unwrap_or(f64::NAN)
    }

    fn dh_dp(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        self.velocity(x, p).unwrap_or_else(|_| vec![f64::NAN; p.len()])
    }

    fn dh_dx(&self, x: &[f64], p: &[f64]) -> Vec<f64> {
        match self.velocity(x, p) {
            Ok(v) => self.lagrangian.dl_dx(x, &v).into_iter().map(|d| -d).collect(),
            Err(_) => vec![f64::NAN; x.len()],
        }
    }

    fn analytic_derivatives(&self) -> bool {
        self.lagrangian.analytic_derivatives()
    }
}

/// Outcome of the sampled Tonelli checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TonelliReport {
    pub samples: usize,
    pub min_hessian_eigenvalue: f64,
    pub argmin_x: Vec<f64>,
    pub argmin_v: Vec<f64>,
    /// Smallest `L(x, 10 w)/10` over the probed rays.
    pub min_ratio_r10: f64,
    /// Smallest `L(x, 100 w)/100` over the probed rays.
    pub min_ratio_r100: f64,
    /// Smallest increase `L(x,100w)/100 - L(x,10w)/10` over the probed rays.
    pub min_ratio_increase: f64,
    pub finite_difference_derivatives: bool,
    pub passed: bool,
    pub failures: Vec<String>,
}

/// Eigenvalues at or below this floor count as degenerate.
pub const CONVEXITY_FLOOR: f64 = 1e-8;

/// Probes fiberwise strict convexity and superlinearity at random points.
///
/// Every fifth sample is taken at `v = 0`, where degenerate quartic
/// Lagrangians fail.
pub fn verify_tonelli<L: Lagrangian + ?Sized>(l: &L, samples: usize, seed: u64) -> TonelliReport {
    let n = l.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_eig = f64::INFINITY;
    let mut argmin = (vec![0.0; n], vec![0.0; n]);
    let mut r10 = f64::INFINITY;
    let mut r100 = f64::INFINITY;
    let mut increase = f64::INFINITY;
    for k in 0..samples.max(1) {
        let x: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let v: Vec<f64> = if k % 5 == 0 {
            vec![0.0; n]
        } else {
            (0..n).map(|_| rng.random_range(-3.0..3.0)).collect()
        };
        let hess = l.d2l_dv2(&x, &v);
        let eig = hess.symmetric_eigenvalues().min();
        if !(eig >= min_eig) {
            min_eig = eig;
            argmin = (x.clone(), v.clone());
        }
        let mut dir: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-12);
        dir.iter_mut().for_each(|d| *d /= norm);
        let ray = |r: f64| {
            let w: Vec<f64> = dir.iter().map(|d| d * r).collect();
            l.lagrangian(&x, &w) / r
        };
        let (a, b) = (ray(10.0), ray(100.0));
        r10 = r10.min(a);
        r100 = r100.min(b);
        increase = increase.min(b - a);
    }
    let mut failures = Vec::new();
    if !(min_eig > CONVEXITY_FLOOR) {
        failures.push(format!(
            "Hessian in v not positive definite: eigenvalue {min_eig:e} at x={:?}, v={:?}",
            argmin.0, argmin.1
        ));
    }
    if !(increase > 0.0) {
        failures.push(format!("superlinearity probe failed: ratio increase {increase:e}"));
    }
    TonelliReport {
        samples: samples.max(1),
        min_hessian_eigenvalue: min_eig,
        argmin_x: argmin.0,
        argmin_v: argmin.1,
        min_ratio_r10: r10,
        min_ratio_r100: r100,
        min_ratio_increase: increase,
        finite_difference_derivatives: !l.analytic_derivatives(),
        passed: failures.is_empty(),
        failures,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::wrap;
    use proptest::prelude::*;

    fn pt(x: &[f64]) -> TorusPoint {
        wrap(x).unwrap()
    }

    struct Quartic;

    impl Lagrangian for Quartic {
        fn dim(&self) -> usize {
            1
        }
        fn lagrangian(&self, _x: &[f64], v: &[f64]) -> f64 {
            0.5 * v[0].powi(4)
        }
    }

    #[test]
    fn legendre_examples() {
        let free = MechanicalModel::integrable(1).unwrap();
        assert_eq!(legendre(&free, &pt(&[0.2]), &[0.7]).1, vec![0.7]);

        let w0 = [0.3, -0.1];
        let mag = MechanicalModel::new(
            "m",
            DMatrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
            TrigSeries::default(),
            w0.iter().map(|&c| TrigSeries::constant(c)).collect(),
        )
        .unwrap();
        let v = [0.4, -1.1];
        let p = legendre(&mag, &pt(&[0.1, 0.9]), &v).1;
        assert!((p[0] - (2.0 * 0.4 + 0.5 * -1.1 + 0.3)).abs() < 1e-15);
        assert!((p[1] - (0.5 * 0.4 + 1.0 * -1.1 - 0.1)).abs() < 1e-15);

        let pend = MechanicalModel::pendulum(1.0).unwrap();
        for x in [0.0, 0.25, 0.8] {
            assert_eq!(legendre(&pend, &pt(&[x]), &[1.3]).1, vec![1.3]);
        }
    }

    #[test]
    fn fenchel_equality_at_legendre_pairs() {
        let pend = MechanicalModel::pendulum(1.0).unwrap();
        let x = [0.37];
        let v = [-0.9];
        let p = pend.dl_dv(&x, &v);
        let gap = pend.lagrangian(&x, &v) + pend.hamiltonian(&x, &p) - p[0] * v[0];
        assert!(gap.abs() < 1e-10);
    }

    #[test]
    fn inverse_legendre_examples() {
        let free = MechanicalModel::integrable(1).unwrap();
        let v = inverse_legendre(&free, &pt(&[0.5]), &[-0.4]).unwrap().1;
        assert!((v[0] + 0.4).abs() < 1e-14);

        let a = MechanicalModel::new(
            "diag",
            DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0])),
            TrigSeries::default(),
            vec![TrigSeries::default(); 2],
        )
        .unwrap();
        let v = inverse_legendre(&a, &pt(&[0.0, 0.0]), &[2.0, 3.0]).unwrap().1;
        assert!((v[0] - 1.0).abs() < 1e-14 && (v[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn inverse_legendre_reports_degenerate_convexity() {
        // an affine Lagrangian has a singular fiber Hessian
        struct Flat;
        impl Lagrangian for Flat {
            fn dim(&self) -> usize {
                1
            }
            fn lagrangian(&self, _x: &[f64], v: &[f64]) -> f64 {
                v[0]
            }
        }
        assert!(matches!(
            inverse_legendre(&Flat, &pt(&[0.0]), &[2.0]),
            Err(Error::NoConvergence { .. })
        ));
        let v = inverse_legendre(&Quartic, &pt(&[0.0]), &[2.0]).unwrap().1;
        assert!((2.0 * v[0].powi(3) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn conjugate_lagrangian_examples() {
        let free = lagrangian_from_hamiltonian(MechanicalModel::integrable(1).unwrap());
        let pend = lagrangian_from_hamiltonian(MechanicalModel::pendulum(1.0).unwrap());
        let shifted = lagrangian_from_hamiltonian(MechanicalModel::magnetic(&[0.3]).unwrap());
        for &x in &[0.0, 0.13, 0.5, 0.77] {
            for &v in &[-2.0, -0.3, 0.0, 0.9, 2.5] {
                let c = (2.0 * PI * x).cos();
                assert!((free.try_lagrangian(&[x], &[v]).unwrap() - 0.5 * v * v).abs() < 1e-10);
                assert!((pend.try_lagrangian(&[x], &[v]).unwrap() - (0.5 * v * v - c)).abs() < 1e-10);
                assert!((shifted.try_lagrangian(&[x], &[v]).unwrap() - (0.5 * v * v + 0.3 * v)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn verify_tonelli_examples() {
        let free = MechanicalModel::integrable(1).unwrap();
        let r = verify_tonelli(&free, 200, 7);
        assert!(r.passed);
        assert!((r.min_hessian_eigenvalue - 1.0).abs() < 1e-12);
        assert!(!r.finite_difference_derivatives);

        let q = verify_tonelli(&Quartic, 200, 7);
        assert!(!q.passed);
        assert_eq!(q.argmin_v, vec![0.0]);
        assert!(q.finite_difference_derivatives);

        assert!(verify_tonelli(&MechanicalModel::pendulum(1.0).unwrap(), 200, 7).passed);
        assert!(verify_tonelli(&MechanicalModel::two_dof_pendulum(1.0).unwrap(), 200, 7).passed);
    }

    #[test]
    fn registry() {
        let p = ModelParams::default();
        assert_eq!(build_model("pendulum", &p).unwrap().name(), "pendulum");
        assert_eq!(Lagrangian::dim(&build_model("two_dof_pendulum", &p).unwrap()), 2);
        assert!(build_model("magnetic", &p).is_err());
        let w = ModelParams {
            w: Some(vec![0.2, 0.1]),
            ..Default::default()
        };
        assert_eq!(Hamiltonian::dim(&build_model("magnetic", &w).unwrap()), 2);
        assert!(build_model("duffing", &p).is_err());
    }

    #[test]
    fn closed_form_class_ignores_exact_part() {
        let eta = ClosedOneForm::with_exact_part(&[0.4], TrigSeries::cosine(0.2, vec![1]));
        // integral of eta over one turn is the class
        let n = 2000;
        let integral: f64 = (0..n).map(|k| eta.eval(&[(k as f64 + 0.5) / n as f64])[0]).sum::<f64>() / n as f64;
        assert!((integral - 0.4).abs() < 1e-12);
    }

    fn magnetic_model() -> MechanicalModel {
        MechanicalModel::new(
            "wavy",
            DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.8]),
            TrigSeries::cosine(0.7, vec![1, 0]).with_term(0.3, vec![1, 1], 0.4),
            vec![TrigSeries::cosine(0.2, vec![0, 1]), TrigSeries::constant(-0.1)],
        )
        .unwrap()
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        let m = magnetic_model();
        let (x, v) = ([0.31, 0.72], [0.4, -1.3]);
        let fd_x = fd_gradient(|y| m.lagrangian(y, &v), &x);
        for (a, b) in m.dl_dx(&x, &v).iter().zip(&fd_x) {
            assert!((a - b).abs() < 1e-7);
        }
        let p = m.dl_dv(&x, &v);
        let fd_hx = fd_gradient(|y| m.hamiltonian(y, &p), &x);
        for (a, b) in m.dh_dx(&x, &p).iter().zip(&fd_hx) {
            assert!((a - b).abs() < 1e-7);
        }
    }

    proptest! {
        #[test]
        fn fenchel_young(x in 0.0f64..1.0, y in 0.0f64..1.0, v0 in -3.0f64..3.0, v1 in -3.0f64..3.0,
                         p0 in -3.0f64..3.0, p1 in -3.0f64..3.0) {
            let m = magnetic_model();
            let (x, v, p) = ([x, y], [v0, v1], [p0, p1]);
            let gap = m.lagrangian(&x, &v) + m.hamiltonian(&x, &p) - (p[0] * v[0] + p[1] * v[1]);
            prop_assert!(gap >= -1e-12);
            let q = m.dl_dv(&x, &v);
            let eq = m.lagrangian(&x, &v) + m.hamiltonian(&x, &q) - (q[0] * v[0] + q[1] * v[1]);
            prop_assert!(eq.abs() < 1e-10);
        }

        #[test]
        fn legendre_round_trip(x in 0.0f64..1.0, y in 0.0f64..1.0, v0 in -4.0f64..4.0, v1 in -4.0f64..4.0) {
            let m = magnetic_model();
            let point = wrap(&[x, y]).unwrap();
            let p = legendre(&m, &point, &[v0, v1]).1;
            let v = inverse_legendre(&m, &point, &p).unwrap().1;
            prop_assert!((v[0] - v0).abs() <= 1e-10 && (v[1] - v1).abs() <= 1e-10);
            let direct = m.dh_dp(&[x, y], &p);
            prop_assert!((direct[0] - v0).abs() <= 1e-12 && (direct[1] - v1).abs() <= 1e-12);
        }

        #[test]
        fn double_transform_idempotence(x in 0.0f64..1.0, v in -3.0f64..3.0) {
            let pend = MechanicalModel::pendulum(1.0).unwrap();
            let twice = lagrangian_from_hamiltonian(hamiltonian_from_lagrangian(pend.clone()));
            let a = twice.try_lagrangian(&[x], &[v]).unwrap();
            prop_assert!((a - pend.lagrangian(&[x], &[v])).abs() <= 1e-8);
        }
    }
}
