//! The unperturbed fundamental equation
//! α(x,y) + ω(x,y) + ∫ α(x,z) ω(z,y) dz = 0 on the interval attached to x.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kernels::{ExpSum, Factor, GeneralKernel, SeparableKernel};
use crate::numerics::{integrate_over, simpson_weights, Grid, IntervalKind, Quadrature};
use crate::Mat;

/// Condition number above which a linear solve is reported as singular.
pub const COND_LIMIT: f64 = 1e12;

pub type Row<'a, const N: usize> = Box<dyn Fn(f64) -> Result<Mat<N>> + 'a>;

/// Solution α(x, y) of a fundamental equation, supported on the interval of
/// its kind.
pub trait AlphaKernel<const N: usize>: Send + Sync {
    fn kind(&self) -> IntervalKind;

    fn eval(&self, x: f64, y: f64) -> Result<Mat<N>>;

    /// α(x, ·) at fixed x. Implementations cache whatever depends on x only.
    fn row(&self, x: f64) -> Result<Row<'_, N>> {
        Ok(Box::new(move |y| self.eval(x, y)))
    }
}

impl<const N: usize, T: AlphaKernel<N> + ?Sized> AlphaKernel<N> for Arc<T> {
    fn kind(&self) -> IntervalKind {
        (**self).kind()
    }
    fn eval(&self, x: f64, y: f64) -> Result<Mat<N>> {
        (**self).eval(x, y)
    }
    fn row(&self, x: f64) -> Result<Row<'_, N>> {
        (**self).row(x)
    }
}

/// α given by a closed-form evaluator.
#[derive(Clone)]
pub struct AlphaFn<const N: usize> {
    kind: IntervalKind,
    f: Arc<dyn Fn(f64, f64) -> Mat<N> + Send + Sync>,
}

impl<const N: usize> AlphaFn<N> {
    pub fn new(kind: IntervalKind, f: impl Fn(f64, f64) -> Mat<N> + Send + Sync + 'static) -> Self {
        AlphaFn { kind, f: Arc::new(f) }
    }

    pub fn zero(kind: IntervalKind) -> Self {
        AlphaFn::new(kind, |_, _| Mat::<N>::zeros())
    }
}

impl AlphaFn<1> {
    pub fn scalar(kind: IntervalKind, f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        AlphaFn::new(kind, move |x, y| Mat::<1>::new(f(x, y)))
    }
}

impl<const N: usize> AlphaKernel<N> for AlphaFn<N> {
    fn kind(&self) -> IntervalKind {
        self.kind
    }
    fn eval(&self, x: f64, y: f64) -> Result<Mat<N>> {
        Ok((self.f)(x, y))
    }
}

/// ∫ e^{s z} dz over the interval of `kind` at `x`.
pub fn exp_integral(kind: IntervalKind, x: f64, s: f64) -> Result<f64> {
    match kind {
        IntervalKind::RightHalf if s < 0.0 => Ok(-(s * x).exp() / s),
        IntervalKind::LeftHalf if s > 0.0 => Ok((s * x).exp() / s),
        IntervalKind::FiniteLeft if s == 0.0 => Ok(x),
        IntervalKind::FiniteLeft => Ok((s * x).exp_m1() / s),
        _ => Err(Error::NonconvergentTail { cutoff: if kind == IntervalKind::RightHalf { f64::INFINITY } else { f64::NEG_INFINITY }, ratio: 1.0 }),
    }
}

/// ∫ g(z) f(z) dz, analytic when both factors are exponential sums.
pub fn gram_entry<const N: usize>(
    g: &Factor<N>,
    f: &Factor<N>,
    kind: IntervalKind,
    x: f64,
    quad: &Quadrature,
) -> Result<Mat<N>> {
    match (g, f) {
        (Factor::Exp(ge), Factor::Exp(fe)) => exp_sum_product_integral(ge, fe, kind, x),
        _ => integrate_over(kind, x, quad, |z| Ok(g.eval(z) * f.eval(z)), &[]),
    }
}

fn exp_sum_product_integral<const N: usize>(g: &ExpSum<N>, f: &ExpSum<N>, kind: IntervalKind, x: f64) -> Result<Mat<N>> {
    let mut s = 0.0;
    for &(ag, rg) in &g.terms {
        for &(af, rf) in &f.terms {
            s += ag * af * exp_integral(kind, x, rg + rf)?;
        }
    }
    Ok(g.coef * f.coef * s)
}

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// Inverse together with its 1-norm condition number.
pub(crate) fn inverse_with_cond(m: DMatrix<f64>) -> (Option<DMatrix<f64>>, f64) {
    let n1 = norm1(&m);
    match m.try_inverse() {
        Some(inv) => {
            let c = n1 * norm1(&inv);
            (Some(inv), if c.is_finite() { c } else { f64::INFINITY })
        }
        None => (None, f64::INFINITY),
    }
}

pub(crate) fn small_inverse_with_cond<const N: usize>(m: &Mat<N>) -> (Option<Mat<N>>, f64) {
    let n1 = |a: &Mat<N>| a.column_iter().map(|c| c.abs().sum()).fold(0.0, f64::max);
    match m.try_inverse() {
        Some(inv) => {
            let c = n1(m) * n1(&inv);
            (Some(inv), if c.is_finite() { c } else { f64::INFINITY })
        }
        None => (None, f64::INFINITY),
    }
}

/// α from a separable ω: α(x,y) = −Σⱼ aⱼ(x) gⱼ(y) with a(x)(I + G(x)) = f(x).
#[derive(Debug, Clone)]
pub struct SeparableAlpha<const N: usize> {
    omega: SeparableKernel<N>,
    kind: IntervalKind,
    quad: Quadrature,
}

pub fn solve_separable<const N: usize>(omega: &SeparableKernel<N>, kind: IntervalKind) -> SeparableAlpha<N> {
    solve_separable_with(omega, kind, Quadrature::default())
}

/// As [`solve_separable`], with the quadrature used for non-exponential Gram entries.
pub fn solve_separable_with<const N: usize>(
    omega: &SeparableKernel<N>,
    kind: IntervalKind,
    quad: Quadrature,
) -> SeparableAlpha<N> {
    SeparableAlpha { omega: omega.clone(), kind, quad }
}

impl<const N: usize> SeparableAlpha<N> {
    pub fn omega(&self) -> &SeparableKernel<N> {
        &self.omega
    }

    /// Coefficient row a(x) = (a₁(x), …, a_m(x)).
    pub fn coefficients(&self, x: f64) -> Result<Vec<Mat<N>>> {
        let terms = &self.omega.terms;
        let m = terms.len();
        if m == 0 {
            return Ok(Vec::new());
        }
        if m == 1 {
            let (f, g) = &terms[0];
            let sys = Mat::<N>::identity() + gram_entry(g, f, self.kind, x, &self.quad)?;
            let (inv, cond) = small_inverse_with_cond(&sys);
            return match inv {
                Some(inv) if cond <= COND_LIMIT => Ok(vec![f.eval(x) * inv]),
                _ => Err(Error::SingularSystem { x, cond }),
            };
        }
        let dim = m * N;
        let mut sys = DMatrix::<f64>::identity(dim, dim);
        for (j, (_, gj)) in terms.iter().enumerate() {
            for (i, (fi, _)) in terms.iter().enumerate() {
                let blk = gram_entry(gj, fi, self.kind, x, &self.quad)?;
                for r in 0..N {
                    for c in 0..N {
                        sys[(j * N + r, i * N + c)] += blk[(r, c)];
                    }
                }
            }
        }
        let (inv, cond) = inverse_with_cond(sys);
        let inv = match inv {
            Some(inv) if cond <= COND_LIMIT => inv,
            _ => return Err(Error::SingularSystem { x, cond }),
        };
        let mut rhs = DMatrix::<f64>::zeros(N, dim);
        for (i, (fi, _)) in terms.iter().enumerate() {
            let v = fi.eval(x);
            for r in 0..N {
                for c in 0..N {
                    rhs[(r, i * N + c)] = v[(r, c)];
                }
            }
        }
        let a = rhs * inv;
        Ok((0..m).map(|j| Mat::<N>::from_fn(|r, c| a[(r, j * N + c)])).collect())
    }
}

fn combine<const N: usize>(coef: &[Mat<N>], omega: &SeparableKernel<N>, y: f64) -> Mat<N> {
    coef.iter().zip(&omega.terms).fold(Mat::<N>::zeros(), |acc, (a, (_, g))| acc - a * g.eval(y))
}

impl<const N: usize> AlphaKernel<N> for SeparableAlpha<N> {
    fn kind(&self) -> IntervalKind {
        self.kind
    }

    fn eval(&self, x: f64, y: f64) -> Result<Mat<N>> {
        let a = self.coefficients(x)?;
        Ok(combine(&a, &self.omega, y))
    }

    fn row(&self, x: f64) -> Result<Row<'_, N>> {
        let a = self.coefficients(x)?;
        Ok(Box::new(move |y| Ok(combine(&a, &self.omega, y))))
    }
}

/// Row α(x, ·) on the nodes of a Nyström grid.
#[derive(Debug, Clone)]
pub struct NystromRow<const N: usize> {
    pub x: f64,
    pub nodes: Vec<f64>,
    pub values: Vec<Mat<N>>,
}

/// Quadrature weights for ∫ over the grid split at node `split`, so a kink
/// of the kernel there does not spoil the order.
fn split_weights(n: usize, h: f64, split: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    if split > 0 {
        for (i, v) in simpson_weights(split + 1, h).into_iter().enumerate() {
            w[i] += v;
        }
    }
    if split + 1 < n {
        for (i, v) in simpson_weights(n - split, h).into_iter().enumerate() {
            w[split + i] += v;
        }
    }
    w
}

/// Dense Nyström solve of the fundamental equation at fixed `x` on `grid`
/// with Simpson weights.
pub fn solve_nystrom<const N: usize>(
    omega: &GeneralKernel<N>,
    kind: IntervalKind,
    x: f64,
    grid: &Grid,
) -> Result<NystromRow<N>> {
    if let Some(gk) = grid.kind() {
        kind.ensure(gk)?;
    }
    let anchor = match kind {
        IntervalKind::RightHalf => grid.first(),
        _ => grid.last(),
    };
    if (anchor - x).abs() > 1e-12 * (1.0 + x.abs()) {
        return Err(Error::OutOfDomain(format!("grid anchored at {anchor}, row requested at {x}")));
    }
    let nodes = grid.points().to_vec();
    let n = nodes.len();
    let h = grid.spacing();
    let plain = simpson_weights(n, h);
    let dim = n * N;
    // for each target node i the row of weights over source nodes j
    let weights: Vec<Vec<f64>> = (0..n)
        .map(|i| if omega.diagonal_kink { split_weights(n, h, i) } else { plain.clone() })
        .collect();
    // a · B = −ω_x with B(j,i) = δ + w⁽ⁱ⁾ⱼ ω(y_j, y_i)
    let mut b = DMatrix::<f64>::identity(dim, dim);
    for (i, &yi) in nodes.iter().enumerate() {
        for (j, &yj) in nodes.iter().enumerate() {
            let blk = omega.eval(yj, yi) * weights[i][j];
            for r in 0..N {
                for c in 0..N {
                    b[(j * N + r, i * N + c)] += blk[(r, c)];
                }
            }
        }
    }
    let (inv, cond) = inverse_with_cond(b);
    let inv = match inv {
        Some(inv) if cond <= COND_LIMIT => inv,
        _ => return Err(Error::SingularSystem { x, cond }),
    };
    let mut rhs = DMatrix::<f64>::zeros(N, dim);
    for (i, &yi) in nodes.iter().enumerate() {
        let v = omega.eval(x, yi);
        for r in 0..N {
            for c in 0..N {
                rhs[(r, i * N + c)] = -v[(r, c)];
            }
        }
    }
    let a = rhs * inv;
    let values = (0..n).map(|i| Mat::<N>::from_fn(|r, c| a[(r, i * N + c)])).collect();
    Ok(NystromRow { x, nodes, values })
}

pub(crate) fn check_grid_kind(kind: IntervalKind, grid: &Grid) -> Result<()> {
    match grid.kind() {
        Some(gk) => kind.ensure(gk),
        None => Ok(()),
    }
}

/// Largest ‖α(x,y) + ω(x,y) + ∫ α(x,z)ω(z,y) dz‖ over grid pairs in the support.
pub fn fundamental_residual<const N: usize>(
    alpha: &dyn AlphaKernel<N>,
    omega: &GeneralKernel<N>,
    kind: IntervalKind,
    grid: &Grid,
    quad: &Quadrature,
) -> Result<f64> {
    kind.ensure(alpha.kind())?;
    check_grid_kind(kind, grid)?;
    let mut worst = 0.0f64;
    for &x in grid.points() {
        let row = alpha.row(x)?;
        for &y in grid.points() {
            if !kind.in_support(x, y) {
                continue;
            }
            let breaks: &[f64] = if omega.diagonal_kink { &[y] } else { &[] };
            let integral: Mat<N> = integrate_over(kind, x, quad, |z| Ok(row(z)? * omega.eval(z, y)), breaks)?;
            let res = row(y)? + omega.eval(x, y) + integral;
            worst = worst.max(res.norm());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::build_grid;
    use proptest::prelude::*;

    fn ex52_omega(c1sq: f64, k1: f64) -> SeparableKernel<1> {
        let c = c1sq.sqrt();
        SeparableKernel::new(vec![(Factor::scalar_exp(c, vec![(1.0, k1)]), Factor::scalar_exp(c, vec![(1.0, k1)]))])
    }

    fn ex52_alpha(c1sq: f64, k1: f64, x: f64, y: f64) -> f64 {
        -c1sq * (k1 * (x + y)).exp() / (1.0 + c1sq / (2.0 * k1) * (2.0 * k1 * x).exp())
    }

    #[test]
    fn separable_full_line_matches_closed_form() {
        let (c1sq, k1) = (2.0, 1.0);
        let a = solve_separable(&ex52_omega(c1sq, k1), IntervalKind::LeftHalf);
        for &(x, y) in &[(0.0, -1.0), (1.3, 0.2), (-2.0, -4.5)] {
            let v = a.eval(x, y).unwrap()[0];
            assert!((v - ex52_alpha(c1sq, k1, x, y)).abs() < 1e-14);
        }
    }

    #[test]
    fn separable_dirichlet_matches_closed_form() {
        let (c1, k1) = (1.3f64, 0.8f64);
        let w = SeparableKernel::new(vec![(
            Factor::scalar_exp(c1 / k1, vec![(0.5, k1), (-0.5, -k1)]),
            Factor::scalar_exp(c1 / k1, vec![(0.5, k1), (-0.5, -k1)]),
        )]);
        let a = solve_separable(&w, IntervalKind::FiniteLeft);
        let r = c1 * c1 / (k1 * k1);
        let exact = |x: f64, y: f64| {
            -r * (k1 * x).sinh() * (k1 * y).sinh() / (1.0 + r * ((2.0 * k1 * x).sinh() / (4.0 * k1) - x / 2.0))
        };
        for &(x, y) in &[(1.0, 0.5), (2.5, 0.1), (0.3, 0.29)] {
            assert!((a.eval(x, y).unwrap()[0] - exact(x, y)).abs() < 1e-13);
        }
    }

    #[test]
    fn closure_factors_use_quadrature() {
        let (c1sq, k1) = (2.0, 1.0);
        let c = f64::sqrt(c1sq);
        let w = SeparableKernel::new(vec![(
            Factor::scalar_fn(move |x| c * (k1 * x).exp()),
            Factor::scalar_fn(move |x| c * (k1 * x).exp()),
        )]);
        let a = solve_separable_with(&w, IntervalKind::LeftHalf, Quadrature::new(0.005, 20.0));
        assert!((a.eval(0.5, -0.5).unwrap()[0] - ex52_alpha(c1sq, k1, 0.5, -0.5)).abs() < 1e-10);
    }

    #[test]
    fn zero_kernel_gives_zero_alpha() {
        let a = solve_separable(&SeparableKernel::<1>::zero(), IntervalKind::RightHalf);
        assert_eq!(a.eval(0.0, 1.0).unwrap()[0], 0.0);
        let g = build_grid(IntervalKind::RightHalf, 0.0, 11, 4.0).unwrap();
        let row = solve_nystrom(&GeneralKernel::<1>::zero(), IntervalKind::RightHalf, 0.0, &g).unwrap();
        assert!(row.values.iter().all(|v| v[0] == 0.0));
    }

    #[test]
    fn singular_systems_are_reported() {
        // 1 + ∫₀ˣ g f with g = −f makes the system vanish at ∫₀ˣ f² = 1.
        let w = SeparableKernel::new(vec![(Factor::scalar_exp(1.0, vec![(1.0, 0.0)]), Factor::scalar_exp(-1.0, vec![(1.0, 0.0)]))]);
        let a = solve_separable(&w, IntervalKind::FiniteLeft);
        assert!(matches!(a.eval(1.0, 0.5), Err(Error::SingularSystem { .. })));
        assert!(a.eval(0.5, 0.25).is_ok());
    }

    #[test]
    fn rank_two_block_solve() {
        // two exponentials: compare with a Nyström row
        let w = SeparableKernel::new(vec![
            (Factor::scalar_exp(1.0, vec![(1.0, 1.0)]), Factor::scalar_exp(1.0, vec![(1.0, 1.0)])),
            (Factor::scalar_exp(0.5, vec![(1.0, 2.0)]), Factor::scalar_exp(0.5, vec![(1.0, 2.0)])),
        ]);
        let a = solve_separable(&w, IntervalKind::LeftHalf);
        let g = build_grid(IntervalKind::LeftHalf, 0.3, 801, 16.0).unwrap();
        let row = solve_nystrom(&w.to_general(), IntervalKind::LeftHalf, 0.3, &g).unwrap();
        for (y, v) in row.nodes.iter().zip(&row.values).step_by(40) {
            assert!((a.eval(0.3, *y).unwrap()[0] - v[0]).abs() < 1e-7);
        }
    }

    #[test]
    fn nystrom_full_line_row() {
        let w = ex52_omega(2.0, 1.0).to_general();
        let g = build_grid(IntervalKind::LeftHalf, 0.0, 801, 16.0).unwrap();
        let row = solve_nystrom(&w, IntervalKind::LeftHalf, 0.0, &g).unwrap();
        for (y, v) in row.nodes.iter().zip(&row.values) {
            assert!((v[0] + y.exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn nystrom_kinked_kernel_row() {
        let k1 = 1.0;
        let w = GeneralKernel::scalar(move |x, y| -k1 / 2.0 * ((-k1 * (x + y)).exp() + (-k1 * (x - y).abs()).exp()))
            .with_diagonal_kink();
        let g = build_grid(IntervalKind::FiniteLeft, 1.0, 201, 0.0).unwrap();
        let row = solve_nystrom(&w, IntervalKind::FiniteLeft, 1.0, &g).unwrap();
        for v in &row.values {
            assert!((v[0] - k1).abs() < 1e-6, "{}", v[0]);
        }
    }

    #[test]
    fn nystrom_checks_grid() {
        let g = build_grid(IntervalKind::LeftHalf, 0.0, 11, 4.0).unwrap();
        let w = GeneralKernel::<1>::zero();
        assert!(matches!(
            solve_nystrom(&w, IntervalKind::RightHalf, 0.0, &g),
            Err(Error::KindMismatch { .. })
        ));
        assert!(matches!(solve_nystrom(&w, IntervalKind::LeftHalf, 1.0, &g), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn residual_examples() {
        let (c1sq, k1) = (2.0, 1.0);
        let w = ex52_omega(c1sq, k1);
        let a = solve_separable(&w, IntervalKind::LeftHalf);
        let g = Grid::lattice(-3.0, 2.0, 11).unwrap();
        let q = Quadrature::new(0.005, 20.0);
        let r = fundamental_residual(&a, &w.to_general(), IntervalKind::LeftHalf, &g, &q).unwrap();
        assert!(r <= 1e-8, "{r}");
        let zero = AlphaFn::<1>::zero(IntervalKind::LeftHalf);
        assert_eq!(fundamental_residual(&zero, &GeneralKernel::zero(), IntervalKind::LeftHalf, &g, &q).unwrap(), 0.0);
        let r = fundamental_residual(&zero, &w.to_general(), IntervalKind::LeftHalf, &g, &q).unwrap();
        assert!((r - 2.0 * (2.0 + 1.5f64).exp()).abs() < 1e-9);
        assert!(matches!(
            fundamental_residual(&zero, &w.to_general(), IntervalKind::RightHalf, &g, &q),
            Err(Error::KindMismatch { .. })
        ));
    }

    #[test]
    fn alpha_violates_naive_symmetry() {
        let a = solve_separable(&ex52_omega(2.0, 1.0), IntervalKind::LeftHalf);
        let d = (a.eval(0.5, -0.5).unwrap() - a.eval(-0.5, 0.5).unwrap())[0].abs();
        assert!(d > 0.1);
    }

    proptest! {
        #[test]
        fn separable_residual_small(c in 0.3f64..2.0, k in 0.5f64..2.0, x in -1.0f64..1.0) {
            let w = ex52_omega(c * c, k);
            let a = solve_separable(&w, IntervalKind::LeftHalf);
            let g = Grid::lattice(x - 2.0, x, 5).unwrap();
            let q = Quadrature::new(0.01, 40.0 / (2.0 * k));
            let scale = (0..5).map(|i| w.eval(g.points()[i], x).norm()).fold(0.0, f64::max);
            let r = fundamental_residual(&a, &w.to_general(), IntervalKind::LeftHalf, &g, &q).unwrap();
            prop_assert!(r <= 1e-8 * scale.max(1.0));
        }
    }
}
