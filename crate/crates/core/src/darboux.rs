//! Generalized Darboux pipeline: from α and a finite-rank edit f(x)g(y) of ω
//! to n, q, g̃, Γ, the perturbed kernel α̃ and the potential shift.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::fundamental::{inverse_with_cond, small_inverse_with_cond, AlphaKernel, Row, COND_LIMIT};
use crate::kernels::{perturbation_pair, BoundStateSpec, Factor, Involution, SeparableKernel};
use crate::numerics::{
    derivative, diagonal_limit, differentiate_fourth, integrate_over, interval_count, quad, Grid, IntervalKind, Quadrature,
    RealSamples, Tabulated,
};
use crate::resolvent::ResolventKernel;
use crate::Mat;

/// Offset used for one-sided diagonal limits.
pub const DIAGONAL_STEP: f64 = 1e-4;
/// Step of pointwise finite differences in x.
pub const FD_STEP: f64 = 2e-3;

/// Sign s in Δu = 2s d/dx[α̃(x,x) − α(x,x)]; also the sign of Γ'(x) = s q(x) n(x).
pub fn kind_sign(kind: IntervalKind) -> f64 {
    match kind {
        IntervalKind::RightHalf => -1.0,
        _ => 1.0,
    }
}

/// n(x) = f(x) + ∫ α(x,z) f(z) dz.
pub fn compute_n<const N: usize>(
    alpha: &dyn AlphaKernel<N>,
    f: &Factor<N>,
    kind: IntervalKind,
    x: f64,
    quadrature: &Quadrature,
) -> Result<Mat<N>> {
    kind.ensure(alpha.kind())?;
    let row = alpha.row(x)?;
    let integral: Mat<N> = integrate_over(kind, x, quadrature, |z| Ok(row(z)? * f.eval(z)), &[])?;
    Ok(f.eval(x) + integral)
}

/// q(y) = g(y) + ∫ g(z) J α(y,z)† J dz over the interval attached to y.
pub fn compute_q<const N: usize>(
    alpha: &dyn AlphaKernel<N>,
    g: &Factor<N>,
    j: &Involution,
    kind: IntervalKind,
    y: f64,
    quadrature: &Quadrature,
) -> Result<Mat<N>> {
    kind.ensure(alpha.kind())?;
    j.check_dim(N)?;
    let row = alpha.row(y)?;
    let integral: Mat<N> = integrate_over(kind, y, quadrature, |z| Ok(g.eval(z) * j.conjugate(&row(z)?)), &[])?;
    Ok(g.eval(y) + integral)
}

fn check_in_interval(kind: IntervalKind, x: f64, y: f64) -> Result<()> {
    if kind.in_closed_support(x, y) {
        Ok(())
    } else {
        Err(Error::OutOfDomain(format!("y = {y} is outside the {} interval at x = {x}", kind.tag())))
    }
}

/// g̃(x,y) = q(y) + ∫ q(z) α(z,y) dz with z between x and y.
pub fn compute_gtilde<const N: usize>(
    q: &dyn Fn(f64) -> Result<Mat<N>>,
    alpha: &dyn AlphaKernel<N>,
    kind: IntervalKind,
    x: f64,
    y: f64,
    quadrature: &Quadrature,
) -> Result<Mat<N>> {
    kind.ensure(alpha.kind())?;
    check_in_interval(kind, x, y)?;
    let integrand = |z: f64| Ok(q(z)? * alpha.eval(z, y)?);
    let integral: Mat<N> = match kind {
        IntervalKind::RightHalf => quad(integrand, x, y, quadrature.step, &[])?,
        _ => quad(integrand, y, x, quadrature.step, &[])?,
    };
    Ok(q(y)? + integral)
}

/// g̃(x,y) = g(y) + ∫ g(z) r(x;z,y) dz.
pub fn compute_gtilde_via_resolvent<const N: usize>(
    g: &Factor<N>,
    r: &ResolventKernel<N>,
    kind: IntervalKind,
    x: f64,
    y: f64,
    quadrature: &Quadrature,
) -> Result<Mat<N>> {
    kind.ensure(r.kind())?;
    check_in_interval(kind, x, y)?;
    let integral: Mat<N> = integrate_over(kind, x, quadrature, |z| Ok(g.eval(z) * r.eval(z, y)?), &[y])?;
    Ok(g.eval(y) + integral)
}

/// Γ(x) = I + ∫ g̃(x,z) f(z) dz, with `gtilde(z)` standing for g̃(x, z).
pub fn compute_gamma<const N: usize>(
    gtilde: &dyn Fn(f64) -> Result<Mat<N>>,
    f: &Factor<N>,
    kind: IntervalKind,
    x: f64,
    quadrature: &Quadrature,
) -> Result<Mat<N>> {
    let integral: Mat<N> = integrate_over(kind, x, quadrature, |z| Ok(gtilde(z)? * f.eval(z)), &[])?;
    Ok(Mat::<N>::identity() + integral)
}

/// α̃(x,y) = α(x,y) − n(x) Γ(x)⁻¹ g̃(x,y).
pub fn compute_alpha_tilde<const N: usize>(
    alpha: &Mat<N>,
    n: &Mat<N>,
    gamma: &Mat<N>,
    gtilde: &Mat<N>,
    x: f64,
) -> Result<Mat<N>> {
    let (inv, cond) = small_inverse_with_cond(gamma);
    let cond = match inv {
        Some(inv) => identity_scaled_cond(one_norm(gamma.as_view()), one_norm(inv.as_view()), cond),
        None => f64::INFINITY,
    };
    match inv {
        Some(inv) if cond <= COND_LIMIT => Ok(alpha - n * inv * gtilde),
        _ => Err(Error::SingularGamma { x, cond }),
    }
}

fn one_norm(m: nalgebra::DMatrixView<'_, f64>) -> f64 {
    m.column_iter().map(|c| c.lp_norm(1)).fold(0.0, f64::max)
}

/// Condition of Γ measured against the unit scale of the identity it perturbs,
/// so a scalar Γ crossing zero registers as singular.
fn identity_scaled_cond(norm: f64, inv_norm: f64, cond: f64) -> f64 {
    cond.max(norm.max(1.0) * inv_norm)
}

fn gamma_inverse(gamma: DMatrix<f64>, x: f64) -> Result<DMatrix<f64>> {
    let norm = one_norm(gamma.as_view());
    let (inv, cond) = inverse_with_cond(gamma);
    match inv {
        Some(inv) => {
            let cond = identity_scaled_cond(norm, one_norm(inv.as_view()), cond);
            if cond <= COND_LIMIT {
                Ok(inv)
            } else {
                Err(Error::SingularGamma { x, cond })
            }
        }
        None => Err(Error::SingularGamma { x, cond }),
    }
}

/// Simpson weight of position `p` on a run of `len` intervals of width `h`,
/// closing with the 3/8 rule when `len` is odd.
fn run_weight(len: usize, p: usize, h: f64) -> f64 {
    match len {
        0 => 0.0,
        1 => h / 2.0,
        _ if len.is_multiple_of(2) => {
            if p == 0 || p == len {
                h / 3.0
            } else if p % 2 == 1 {
                4.0 * h / 3.0
            } else {
                2.0 * h / 3.0
            }
        }
        _ => {
            let s = len - 3;
            let simpson = if s == 0 {
                0.0
            } else if p == 0 || p == s {
                h / 3.0
            } else if p < s && p % 2 == 1 {
                4.0 * h / 3.0
            } else if p < s {
                2.0 * h / 3.0
            } else {
                0.0
            };
            let eighths = match p.checked_sub(s) {
                Some(0) | Some(3) => 3.0 * h / 8.0,
                Some(1) | Some(2) => 9.0 * h / 8.0,
                _ => 0.0,
            };
            simpson + eighths
        }
    }
}

/// Intermediate quantities of one finite-rank edit of ω.
///
/// The edit is `Σᵢ fᵢ(x) gᵢ(y)`; rank m > 1 uses the block Γ of size mN.
pub struct DarbouxTransform<const N: usize> {
    alpha: Arc<dyn AlphaKernel<N>>,
    perturbation: SeparableKernel<N>,
    j: Involution,
    kind: IntervalKind,
    quad: Quadrature,
    q_tables: Vec<Tabulated<Mat<N>>>,
}

/// Per-x data shared by α̃(x, ·): Γ(x) and the row blocks of n(x) Γ(x)⁻¹.
pub struct Coupling<const N: usize> {
    pub gamma: DMatrix<f64>,
    pub blocks: Vec<Mat<N>>,
}

impl<const N: usize> DarbouxTransform<N> {
    pub fn new(
        alpha: Arc<dyn AlphaKernel<N>>,
        perturbation: SeparableKernel<N>,
        j: Involution,
        quadrature: Quadrature,
    ) -> Result<Self> {
        j.check_dim(N)?;
        let kind = alpha.kind();
        Ok(DarbouxTransform { alpha, perturbation, j, kind, quad: quadrature, q_tables: Vec::new() })
    }

    /// Tabulates every qᵢ on the span reached by anchors in `[lo, hi]`.
    pub fn tabulate(mut self, lo: f64, hi: f64) -> Result<Self> {
        let (a, b) = match self.kind {
            IntervalKind::RightHalf => (lo, hi + self.quad.tail),
            IntervalKind::LeftHalf => (lo - self.quad.tail, hi),
            IntervalKind::FiniteLeft => (0.0, hi),
        };
        let mut tables = Vec::with_capacity(self.rank());
        for i in 0..self.rank() {
            tables.push(Tabulated::build(a, b, self.quad.step, |y| self.q_direct(i, y))?);
        }
        self.q_tables = tables;
        Ok(self)
    }

    pub fn kind(&self) -> IntervalKind {
        self.kind
    }

    pub fn rank(&self) -> usize {
        self.perturbation.rank()
    }

    pub fn quadrature(&self) -> &Quadrature {
        &self.quad
    }

    pub fn alpha(&self) -> &Arc<dyn AlphaKernel<N>> {
        &self.alpha
    }

    pub fn perturbation(&self) -> &SeparableKernel<N> {
        &self.perturbation
    }

    pub fn n(&self, i: usize, x: f64) -> Result<Mat<N>> {
        compute_n(self.alpha.as_ref(), &self.perturbation.terms[i].0, self.kind, x, &self.quad)
    }

    fn q_direct(&self, i: usize, y: f64) -> Result<Mat<N>> {
        compute_q(self.alpha.as_ref(), &self.perturbation.terms[i].1, &self.j, self.kind, y, &self.quad)
    }

    pub fn q(&self, i: usize, y: f64) -> Result<Mat<N>> {
        if let Some(v) = self.q_tables.get(i).and_then(|t| t.eval(y)) {
            return Ok(v);
        }
        self.q_direct(i, y)
    }

    pub fn gtilde(&self, i: usize, x: f64, y: f64) -> Result<Mat<N>> {
        let q = |z: f64| self.q(i, z);
        compute_gtilde(&q, self.alpha.as_ref(), self.kind, x, y, &self.quad)
    }

    /// Block Γ(x) with blocks δᵢⱼ I + ∫ g̃ᵢ(x,z) fⱼ(z) dz.
    ///
    /// The inner integrals defining g̃ reuse the outer Simpson nodes, so each
    /// α row is built once per node.
    pub fn gamma(&self, x: f64) -> Result<DMatrix<f64>> {
        let m = self.rank();
        let dim = m * N;
        let mut gamma = DMatrix::<f64>::identity(dim, dim);
        let (a, b) = self.kind.window(x, self.quad.tail);
        if m == 0 || b <= a {
            return Ok(gamma);
        }
        let k = interval_count(b - a, self.quad.step);
        let h = (b - a) / k as f64;
        let nodes: Vec<f64> = (0..=k).map(|i| if i == k { b } else { a + h * i as f64 }).collect();
        let qv: Vec<Vec<Mat<N>>> =
            (0..m).map(|i| nodes.iter().map(|&z| self.q(i, z)).collect::<Result<Vec<_>>>()).collect::<Result<_>>()?;
        let rows: Vec<Row<'_, N>> = nodes.iter().map(|&z| self.alpha.row(z)).collect::<Result<_>>()?;
        let mut blocks = vec![Mat::<N>::zeros(); m * m];
        let mut peak = 0.0f64;
        let mut edge = 0.0f64;
        for (jn, &z) in nodes.iter().enumerate() {
            let (lo, hi) = match self.kind {
                IntervalKind::RightHalf => (0, jn),
                _ => (jn, k),
            };
            let len = hi - lo;
            let mut gt = qv.iter().map(|q| q[jn]).collect::<Vec<_>>();
            if len > 0 {
                for kn in lo..=hi {
                    let w = run_weight(len, kn - lo, h);
                    let a_kz = rows[kn](z)?;
                    for (i, g) in gt.iter_mut().enumerate() {
                        *g += qv[i][kn] * a_kz * w;
                    }
                }
            }
            let w_outer = run_weight(k, jn, h);
            let mut mag = 0.0;
            for (i, g) in gt.iter().enumerate() {
                for (jj, (f, _)) in self.perturbation.terms.iter().enumerate() {
                    let v = g * f.eval(z);
                    mag += v.norm();
                    blocks[i * m + jj] += v * w_outer;
                }
            }
            peak = peak.max(mag);
            let at_cutoff = match self.kind {
                IntervalKind::RightHalf => jn == k,
                IntervalKind::LeftHalf => jn == 0,
                IntervalKind::FiniteLeft => false,
            };
            if at_cutoff {
                edge = mag;
            }
        }
        if peak > 0.0 && edge > self.quad.tail_tol * peak {
            let cutoff = if self.kind == IntervalKind::RightHalf { b } else { a };
            return Err(Error::NonconvergentTail { cutoff, ratio: edge / peak });
        }
        for i in 0..m {
            for jj in 0..m {
                let blk = blocks[i * m + jj];
                for r in 0..N {
                    for c in 0..N {
                        gamma[(i * N + r, jj * N + c)] += blk[(r, c)];
                    }
                }
            }
        }
        Ok(gamma)
    }

    /// Γ(x) together with the row blocks of n(x) Γ(x)⁻¹.
    pub fn coupling(&self, x: f64) -> Result<Coupling<N>> {
        let m = self.rank();
        let gamma = self.gamma(x)?;
        if m == 0 {
            return Ok(Coupling { gamma, blocks: Vec::new() });
        }
        let inv = gamma_inverse(gamma.clone(), x)?;
        let ns: Vec<Mat<N>> = (0..m).map(|i| self.n(i, x)).collect::<Result<_>>()?;
        let mut blocks = vec![Mat::<N>::zeros(); m];
        for (jj, blk) in blocks.iter_mut().enumerate() {
            for (i, n) in ns.iter().enumerate() {
                let sub = Mat::<N>::from_fn(|r, c| inv[(i * N + r, jj * N + c)]);
                *blk += n * sub;
            }
        }
        Ok(Coupling { gamma, blocks })
    }

    /// α̃(x,x) − α(x,x) = −n(x) Γ(x)⁻¹ q(x).
    pub fn diagonal_shift(&self, x: f64) -> Result<Mat<N>> {
        let c = self.coupling(x)?;
        let mut d = Mat::<N>::zeros();
        for (jj, p) in c.blocks.iter().enumerate() {
            d -= p * self.q(jj, x)?;
        }
        Ok(d)
    }

    /// Γ'(x) = s q(x) n(x) in block form.
    pub fn gamma_derivative(&self, x: f64) -> Result<DMatrix<f64>> {
        let m = self.rank();
        let s = kind_sign(self.kind);
        let ns: Vec<Mat<N>> = (0..m).map(|i| self.n(i, x)).collect::<Result<_>>()?;
        let mut d = DMatrix::<f64>::zeros(m * N, m * N);
        for i in 0..m {
            let qi = self.q(i, x)?;
            for (jj, nj) in ns.iter().enumerate() {
                let blk = qi * nj * s;
                for r in 0..N {
                    for c in 0..N {
                        d[(i * N + r, jj * N + c)] = blk[(r, c)];
                    }
                }
            }
        }
        Ok(d)
    }

    pub fn alpha_tilde(self: &Arc<Self>) -> PerturbedAlpha<N> {
        PerturbedAlpha { t: self.clone() }
    }
}

impl DarbouxTransform<1> {
    /// Transform adding or removing one bound state on top of α.
    pub fn bound_state(alpha: Arc<dyn AlphaKernel<1>>, spec: &BoundStateSpec, quadrature: Quadrature) -> Result<Self> {
        spec.flavor.interval().ensure(alpha.kind())?;
        DarbouxTransform::new(alpha, perturbation_pair(spec)?, Involution::identity(1), quadrature)
    }

    /// Scalar Γ(x) of a rank-one edit.
    pub fn gamma_scalar(&self, x: f64) -> Result<f64> {
        Ok(self.gamma(x)?[(0, 0)])
    }

    /// Δu(x) = 2s d/dx[α̃(x,x) − α(x,x)] by a five-point difference of the
    /// diagonal shift −nΓ⁻¹q.
    pub fn delta_u_diagonal_at(&self, x: f64, h: f64) -> Result<f64> {
        let d = derivative(|t| Ok(self.diagonal_shift(t)?[0]), x, h, 1)?;
        Ok(2.0 * kind_sign(self.kind) * d)
    }

    /// Δu(x) = −2 (ln det Γ)'' with Γ' = s q n exact and Γ'' by a five-point
    /// difference of Γ'.
    pub fn delta_u_log_gamma_at(&self, x: f64, h: f64) -> Result<f64> {
        let gamma = self.gamma(x)?;
        let det = gamma.determinant();
        if !(det > 0.0) {
            return Err(Error::NonpositiveGamma { x, value: det });
        }
        let inv = gamma_inverse(gamma, x)?;
        let d1 = self.gamma_derivative(x)?;
        let m = self.rank();
        let mut d2 = DMatrix::<f64>::zeros(m, m);
        for i in 0..m {
            for jj in 0..m {
                d2[(i, jj)] = derivative(|t| Ok(self.gamma_derivative(t)?[(i, jj)]), x, h, 1)?;
            }
        }
        let a = &inv * &d1;
        let second = (&inv * &d2).trace() - (&a * &a).trace();
        Ok(-2.0 * second)
    }
}

/// α̃ as a kernel, evaluated through the intermediate quantities.
#[derive(Clone)]
pub struct PerturbedAlpha<const N: usize> {
    t: Arc<DarbouxTransform<N>>,
}

impl<const N: usize> PerturbedAlpha<N> {
    pub fn transform(&self) -> &Arc<DarbouxTransform<N>> {
        &self.t
    }

    fn combine(&self, c: &Coupling<N>, base: Mat<N>, x: f64, y: f64) -> Result<Mat<N>> {
        let mut v = base;
        for (jj, p) in c.blocks.iter().enumerate() {
            v -= p * self.t.gtilde(jj, x, y)?;
        }
        Ok(v)
    }
}

impl<const N: usize> AlphaKernel<N> for PerturbedAlpha<N> {
    fn kind(&self) -> IntervalKind {
        self.t.kind
    }

    fn eval(&self, x: f64, y: f64) -> Result<Mat<N>> {
        let c = self.t.coupling(x)?;
        let base = self.t.alpha.eval(x, y)?;
        self.combine(&c, base, x, y)
    }

    fn row(&self, x: f64) -> Result<Row<'_, N>> {
        let c = self.t.coupling(x)?;
        let base = self.t.alpha.row(x)?;
        Ok(Box::new(move |y| self.combine(&c, base(y)?, x, y)))
    }
}

/// Δu = 2s d/dx[α̃(x,x) − α(x,x)] on the grid, fourth-order differences.
pub fn potential_shift_from_diagonal(
    alpha_tilde: &dyn AlphaKernel<1>,
    alpha: &dyn AlphaKernel<1>,
    grid: &Grid,
) -> Result<RealSamples> {
    let kind = alpha.kind();
    kind.ensure(alpha_tilde.kind())?;
    let d = grid.try_sample(|x| {
        Ok(diagonal_limit(alpha_tilde, x, DIAGONAL_STEP)?[0] - diagonal_limit(alpha, x, DIAGONAL_STEP)?[0])
    })?;
    let s = 2.0 * kind_sign(kind);
    Ok(differentiate_fourth(&d, grid, 1)?.into_iter().map(|v| s * v).collect())
}

/// Δu = −2 (ln Γ)'' from Γ samples on the grid, fourth-order differences.
pub fn potential_shift_log_gamma(gamma: &[f64], grid: &Grid) -> Result<RealSamples> {
    if let Some((i, &v)) = gamma.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        let x = grid.points().get(i).copied().unwrap_or(f64::NAN);
        return Err(Error::NonpositiveGamma { x, value: v });
    }
    let ln: Vec<f64> = gamma.iter().map(|v| v.ln()).collect();
    Ok(differentiate_fourth(&ln, grid, 2)?.into_iter().map(|v| -2.0 * v).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fundamental::{solve_separable, AlphaFn};
    use crate::kernels::{Edit, Flavor};
    use proptest::prelude::*;

    fn zero_alpha(kind: IntervalKind) -> Arc<dyn AlphaKernel<1>> {
        Arc::new(AlphaFn::<1>::zero(kind))
    }

    fn one_state(kind: IntervalKind, spec: BoundStateSpec, q: Quadrature) -> Arc<DarbouxTransform<1>> {
        Arc::new(DarbouxTransform::bound_state(zero_alpha(kind), &spec, q).unwrap())
    }

    #[test]
    fn zero_background_full_line_right() {
        let (k, c) = (1.2, 0.9);
        let spec = BoundStateSpec::add(k, c, Flavor::FullRight).unwrap();
        let t = one_state(IntervalKind::LeftHalf, spec, Quadrature::new(2.5e-3, 40.0 / (2.0 * k)));
        let b = c * c / (2.0 * k);
        for &x in &[-2.0, 0.0, 1.5] {
            let g = t.gamma_scalar(x).unwrap();
            let exact = 1.0 + b * (2.0 * k * x).exp();
            assert!((g / exact - 1.0).abs() < 1e-10, "{g} {exact}");
            let e = (2.0 * k * x).exp();
            let du = -8.0 * k * k * b * e / (1.0 + b * e).powi(2);
            assert!((t.delta_u_diagonal_at(x, FD_STEP).unwrap() - du).abs() < 1e-8);
            assert!((t.delta_u_log_gamma_at(x, FD_STEP).unwrap() - du).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_background_full_line_left() {
        let (k, c) = (0.8, 1.1);
        let spec = BoundStateSpec::add(k, c, Flavor::FullLeft).unwrap();
        let t = one_state(IntervalKind::RightHalf, spec, Quadrature::new(5e-3, 40.0 / (2.0 * k)));
        let b = c * c / (2.0 * k);
        for &x in &[-1.0, 0.3, 2.0] {
            let e = (-2.0 * k * x).exp();
            assert!((t.gamma_scalar(x).unwrap() / (1.0 + b * e) - 1.0).abs() < 1e-10);
            let du = -8.0 * k * k * b * e / (1.0 + b * e).powi(2);
            assert!((t.delta_u_diagonal_at(x, FD_STEP).unwrap() - du).abs() < 1e-8);
            assert!((t.delta_u_log_gamma_at(x, FD_STEP).unwrap() - du).abs() < 1e-8);
            let at = t.alpha_tilde();
            let y = x + 0.7;
            let exact = -c * c * (-k * (x + y)).exp() / (1.0 + b * e);
            assert!((at.eval(x, y).unwrap()[0] - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_perturbation_keeps_alpha() {
        let a: Arc<dyn AlphaKernel<1>> = Arc::new(AlphaFn::scalar(IntervalKind::FiniteLeft, |x, y| x - y));
        let t = Arc::new(DarbouxTransform::new(a, SeparableKernel::zero(), Involution::identity(1), Quadrature::default()).unwrap());
        assert_eq!(t.alpha_tilde().eval(1.0, 0.3).unwrap()[0], 0.7);
        assert_eq!(t.gamma(1.0).unwrap().nrows(), 0);
        let fz = SeparableKernel::new(vec![(Factor::zero(), Factor::zero())]);
        let a: Arc<dyn AlphaKernel<1>> = Arc::new(AlphaFn::scalar(IntervalKind::FiniteLeft, |x, y| x * y));
        let t = Arc::new(DarbouxTransform::new(a, fz, Involution::identity(1), Quadrature::default()).unwrap());
        assert_eq!(t.gamma_scalar(1.0).unwrap(), 1.0);
        assert!((t.alpha_tilde().eval(1.0, 0.3).unwrap()[0] - 0.3).abs() < 1e-15);
        assert_eq!(t.delta_u_diagonal_at(1.0, FD_STEP).unwrap(), 0.0);
    }

    #[test]
    fn gamma_from_closure_matches_lattice() {
        let (k1, c1) = (1.0, 1.0);
        let alpha: Arc<dyn AlphaKernel<1>> = Arc::new(AlphaFn::scalar(IntervalKind::FiniteLeft, move |_, _| k1));
        let spec = BoundStateSpec::add(k1, c1, Flavor::NonDirichlet).unwrap();
        let q = Quadrature::new(2e-3, 0.0);
        let t = DarbouxTransform::bound_state(alpha.clone(), &spec, q).unwrap();
        let x = 1.0;
        let gt = |z: f64| t.gtilde(0, x, z);
        let f = &t.perturbation().terms[0].0;
        let g1 = compute_gamma(&gt, f, IntervalKind::FiniteLeft, x, &q).unwrap()[0];
        let exact = 1.0 + c1 * c1 * (k1 * x).exp() * (k1 * x).sinh() / k1;
        assert!((g1 - exact).abs() < 1e-10);
        assert!((t.gamma_scalar(x).unwrap() - exact).abs() < 1e-10);
        assert_eq!(compute_gamma(&gt, &Factor::zero(), IntervalKind::FiniteLeft, x, &q).unwrap()[0], 1.0);
    }

    #[test]
    fn gtilde_domain_checked() {
        let t = one_state(IntervalKind::FiniteLeft, BoundStateSpec::add(1.0, 1.0, Flavor::Dirichlet).unwrap(), Quadrature::default());
        assert!(matches!(t.gtilde(0, 1.0, 1.5), Err(Error::OutOfDomain(_))));
        let g = t.perturbation().terms[0].1.clone();
        let r = ResolventKernel::<1>::zero(IntervalKind::FiniteLeft, 1.0);
        let v = compute_gtilde_via_resolvent(&g, &r, IntervalKind::FiniteLeft, 1.0, 0.5, &Quadrature::default()).unwrap();
        assert_eq!(v, g.eval(0.5));
    }

    #[test]
    fn singular_gamma_reported() {
        // removing a state that was never there: Γ = 1 − C²∫₀ˣ sinh²/κ² hits zero
        let spec = BoundStateSpec::new(1.0, 2.0, Edit::Remove, Flavor::Dirichlet).unwrap();
        let t = one_state(IntervalKind::FiniteLeft, spec, Quadrature::new(1e-3, 0.0));
        let mut lo = 0.5;
        let mut hi = 1.2;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if t.gamma_scalar(mid).unwrap() > 0.0 { lo = mid } else { hi = mid }
        }
        assert!(matches!(t.coupling(lo), Err(Error::SingularGamma { .. })));
        assert!(matches!(t.delta_u_log_gamma_at(1.2, FD_STEP), Err(Error::NonpositiveGamma { .. })));
    }

    #[test]
    fn nonconvergent_tail_reported() {
        // adding a left-half state on (−∞, x) with the growing exponential of the wrong side
        let pert = perturbation_pair(&BoundStateSpec::add(1.0, 1.0, Flavor::FullLeft).unwrap()).unwrap();
        let t = DarbouxTransform::new(zero_alpha(IntervalKind::LeftHalf), pert, Involution::identity(1), Quadrature::new(1e-2, 10.0)).unwrap();
        assert!(matches!(t.gamma(0.0), Err(Error::NonconvergentTail { .. })));
    }

    #[test]
    fn alpha_tilde_formula() {
        let (c1sq, k1) = (2.0, 1.0);
        let c = f64::sqrt(c1sq);
        let w = SeparableKernel::new(vec![(Factor::scalar_exp(c, vec![(1.0, k1)]), Factor::scalar_exp(c, vec![(1.0, k1)]))]);
        let alpha = solve_separable(&w, IntervalKind::LeftHalf);
        let a = alpha.eval(0.2, -0.3).unwrap();
        let v = compute_alpha_tilde(&a, &Mat::<1>::new(2.0), &Mat::<1>::new(4.0), &Mat::<1>::new(1.0), 0.2).unwrap();
        assert!((v[0] - (a[0] - 0.5)).abs() < 1e-15);
        assert!(matches!(
            compute_alpha_tilde(&a, &a, &Mat::<1>::zeros(), &a, 0.2),
            Err(Error::SingularGamma { .. })
        ));
    }

    #[test]
    fn grid_potential_shifts_agree() {
        let spec = BoundStateSpec::add(1.0, 1.0, Flavor::Dirichlet).unwrap();
        let t = one_state(IntervalKind::FiniteLeft, spec, Quadrature::new(5e-3, 0.0));
        let grid = Grid::lattice(0.5, 2.0, 61).unwrap();
        let at = t.alpha_tilde();
        let du_d = potential_shift_from_diagonal(&at, t.alpha().as_ref(), &grid).unwrap();
        let gam = grid.try_sample(|x| t.gamma_scalar(x)).unwrap();
        let du_g = potential_shift_log_gamma(&gam, &grid).unwrap();
        let scale = du_d.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in du_d.iter().zip(&du_g) {
            assert!((a - b).abs() <= 1e-5 * scale);
        }
        assert_eq!(potential_shift_log_gamma(&vec![1.0; 61], &grid).unwrap(), vec![0.0; 61]);
        let mut bad = vec![1.0; 61];
        bad[3] = -0.1;
        assert!(matches!(potential_shift_log_gamma(&bad, &grid), Err(Error::NonpositiveGamma { .. })));
    }

    #[test]
    fn gamma_equals_integral_of_q_n() {
        let spec = BoundStateSpec::add(1.3, 0.7, Flavor::NonDirichlet).unwrap();
        let alpha: Arc<dyn AlphaKernel<1>> = Arc::new(AlphaFn::scalar(IntervalKind::FiniteLeft, |x, y| 0.3 * (x - y).cos()));
        let t = DarbouxTransform::bound_state(alpha, &spec, Quadrature::new(2e-3, 0.0)).unwrap();
        let x = 1.4;
        let qn: f64 = quad(|s| Ok(t.q(0, s)?[0] * t.n(0, s)?[0]), 0.0, x, 2e-3, &[]).unwrap();
        assert!((t.gamma_scalar(x).unwrap() - 1.0 - qn).abs() < 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn dirichlet_gamma_monotone_and_above_one(k in 0.3f64..2.0, c in 0.1f64..2.0) {
            let spec = BoundStateSpec::add(k, c, Flavor::Dirichlet).unwrap();
            let t = one_state(IntervalKind::FiniteLeft, spec, Quadrature::new(1e-2, 0.0));
            let mut prev = 1.0;
            for i in 1..=8 {
                let g = t.gamma_scalar(0.25 * i as f64).unwrap();
                prop_assert!(g >= 1.0 && g >= prev - 1e-12);
                prev = g;
            }
        }

        #[test]
        fn remove_then_add_round_trip(k in 0.5f64..1.5, c in 0.3f64..1.2, x in 0.3f64..1.2) {
            let q = Quadrature::new(2e-2, 0.0);
            let add = BoundStateSpec::add(k, c, Flavor::Dirichlet).unwrap();
            let rem = BoundStateSpec { edit: Edit::Remove, ..add };
            let with = one_state(IntervalKind::FiniteLeft, add, q);
            let with_alpha: Arc<dyn AlphaKernel<1>> = Arc::new(with.alpha_tilde());
            let back = Arc::new(DarbouxTransform::bound_state(with_alpha, &rem, q).unwrap());
            let v = back.alpha_tilde().eval(x, 0.5 * x).unwrap()[0];
            prop_assert!(v.abs() < 1e-6, "{}", v);
        }
    }
}
