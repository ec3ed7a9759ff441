//! Resolvent kernels r(x; z, y) built from α, and the identities that single
//! out the true resolvent.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fundamental::{check_grid_kind, AlphaKernel};
use crate::kernels::{GeneralKernel, Involution};
use crate::numerics::{integrate_over, quad, Grid, IntervalKind, Quadrature};
use crate::Mat;

type Eval<const N: usize> = Arc<dyn Fn(f64, f64) -> Result<Mat<N>> + Send + Sync>;

/// r(x; z, y) at a fixed anchor x.
#[derive(Clone)]
pub struct ResolventKernel<const N: usize> {
    kind: IntervalKind,
    x: f64,
    eval: Eval<N>,
}

impl<const N: usize> fmt::Debug for ResolventKernel<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ResolventKernel").field("kind", &self.kind).field("x", &self.x).finish()
    }
}

impl<const N: usize> ResolventKernel<N> {
    pub fn new(kind: IntervalKind, x: f64, f: impl Fn(f64, f64) -> Result<Mat<N>> + Send + Sync + 'static) -> Self {
        ResolventKernel { kind, x, eval: Arc::new(f) }
    }

    pub fn from_fn(kind: IntervalKind, x: f64, f: impl Fn(f64, f64) -> Mat<N> + Send + Sync + 'static) -> Self {
        ResolventKernel::new(kind, x, move |z, y| Ok(f(z, y)))
    }

    pub fn zero(kind: IntervalKind, x: f64) -> Self {
        ResolventKernel::from_fn(kind, x, |_, _| Mat::<N>::zeros())
    }

    pub fn kind(&self) -> IntervalKind {
        self.kind
    }

    pub fn anchor(&self) -> f64 {
        self.x
    }

    pub fn eval(&self, z: f64, y: f64) -> Result<Mat<N>> {
        (self.eval)(z, y)
    }
}

impl ResolventKernel<1> {
    pub fn scalar(kind: IntervalKind, x: f64, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        ResolventKernel::from_fn(kind, x, move |z, y| Mat::<1>::new(f(z, y)))
    }
}

fn in_domain(kind: IntervalKind, x: f64, z: f64) -> bool {
    match kind {
        IntervalKind::RightHalf => z >= x,
        IntervalKind::LeftHalf => z <= x,
        IntervalKind::FiniteLeft => z >= 0.0 && z <= x,
    }
}

/// Resolvent kernel at anchor `x` expressed through α.
///
/// On `(x, +inf)`, for z ≤ y,
/// `r = α(z,y) + ∫ₓᶻ Jα(s,z)†J α(s,y) ds`, and for z > y
/// `r = Jα(y,z)†J + ∫ₓʸ Jα(s,z)†J α(s,y) ds`.
/// On `(-inf, x)` and `(0, x)`, for y ≤ z,
/// `r = α(z,y) + ∫_zˣ Jα(s,z)†J α(s,y) ds`, and for y > z
/// `r = Jα(y,z)†J + ∫_yˣ Jα(s,z)†J α(s,y) ds`.
pub fn resolvent_from_alpha<const N: usize>(
    alpha: Arc<dyn AlphaKernel<N>>,
    j: &Involution,
    x: f64,
    quadrature: Quadrature,
) -> Result<ResolventKernel<N>> {
    j.check_dim(N)?;
    let kind = alpha.kind();
    let j = j.clone();
    let step = quadrature.step;
    Ok(ResolventKernel::new(kind, x, move |z, y| {
        if !in_domain(kind, x, z) || !in_domain(kind, x, y) {
            return Err(Error::OutOfDomain(format!("resolvent at x = {x} evaluated at ({z}, {y})")));
        }
        let first_branch = match kind {
            IntervalKind::RightHalf => z <= y,
            _ => y <= z,
        };
        let (lead, limit) = if first_branch {
            (alpha.eval(z, y)?, z)
        } else {
            (j.conjugate(&alpha.eval(y, z)?), y)
        };
        let integrand = |s: f64| -> Result<Mat<N>> {
            let row = alpha.row(s)?;
            Ok(j.conjugate(&row(z)?) * row(y)?)
        };
        let integral: Mat<N> = match kind {
            IntervalKind::RightHalf => quad(integrand, x, limit, step, &[])?,
            _ => quad(integrand, limit, x, step, &[])?,
        };
        Ok(lead + integral)
    }))
}

fn pair_breaks(omega_kink: bool, z: f64, y: f64) -> Vec<f64> {
    if omega_kink {
        vec![z, y]
    } else {
        vec![z]
    }
}

/// Largest ‖r(x;z,y) + ω(z,y) + ∫ r(x;z,s) ω(s,y) ds‖ over all grid pairs.
pub fn resolvent_residual<const N: usize>(
    r: &ResolventKernel<N>,
    omega: &GeneralKernel<N>,
    x: f64,
    grid: &Grid,
    quadrature: &Quadrature,
) -> Result<f64> {
    check_grid_kind(r.kind(), grid)?;
    let kind = r.kind();
    let mut worst = 0.0f64;
    for &z in grid.points() {
        for &y in grid.points() {
            let breaks = pair_breaks(omega.diagonal_kink, z, y);
            let integral: Mat<N> = integrate_over(kind, x, quadrature, |s| Ok(r.eval(z, s)? * omega.eval(s, y)), &breaks)?;
            let res = r.eval(z, y)? + omega.eval(z, y) + integral;
            worst = worst.max(res.norm());
        }
    }
    Ok(worst)
}

/// Largest ‖r(x;y,z) − J r(x;z,y)† J‖ over grid pairs.
pub fn resolvent_symmetry_defect<const N: usize>(r: &ResolventKernel<N>, j: &Involution, grid: &Grid) -> Result<f64> {
    j.check_dim(N)?;
    let mut worst = 0.0f64;
    for &z in grid.points() {
        for &y in grid.points() {
            let d = r.eval(y, z)? - j.conjugate(&r.eval(z, y)?);
            worst = worst.max(d.norm());
        }
    }
    Ok(worst)
}

/// Largest ‖α(x,y) + ω(x,y) + ∫ ω(x,z) r(x;z,y) dz‖ over grid pairs in the
/// support, with `resolvent(x)` supplying the kernel at each anchor.
pub fn reconstruction_residual<const N: usize>(
    alpha: &dyn AlphaKernel<N>,
    omega: &GeneralKernel<N>,
    resolvent: impl Fn(f64) -> Result<ResolventKernel<N>>,
    grid: &Grid,
    quadrature: &Quadrature,
) -> Result<f64> {
    let kind = alpha.kind();
    check_grid_kind(kind, grid)?;
    let mut worst = 0.0f64;
    for &x in grid.points() {
        let r = resolvent(x)?;
        kind.ensure(r.kind())?;
        for &y in grid.points() {
            if !kind.in_support(x, y) {
                continue;
            }
            let breaks = pair_breaks(omega.diagonal_kink, y, x);
            let integral: Mat<N> = integrate_over(kind, x, quadrature, |z| Ok(omega.eval(x, z) * r.eval(z, y)?), &breaks)?;
            let res = alpha.eval(x, y)? + omega.eval(x, y) + integral;
            worst = worst.max(res.norm());
        }
    }
    Ok(worst)
}
