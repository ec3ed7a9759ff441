//! Kernel representations, the J-involution and the rank-one bound-state
//! perturbations.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::numerics::{Grid, IntervalKind};
use crate::Mat;

/// Diagonal signature matrix J with entries ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct Involution {
    signs: Vec<f64>,
}

impl Involution {
    pub fn new(signs: &[f64]) -> Result<Self> {
        if signs.is_empty() || signs.iter().any(|&s| s != 1.0 && s != -1.0) {
            return Err(Error::InvalidSpec(format!("involution entries must be +1 or -1, got {signs:?}")));
        }
        Ok(Involution { signs: signs.to_vec() })
    }

    pub fn identity(n: usize) -> Self {
        Involution { signs: vec![1.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.signs.len()
    }

    pub fn signs(&self) -> &[f64] {
        &self.signs
    }

    pub fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() == n {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: n, found: self.dim() })
        }
    }

    pub fn matrix<const N: usize>(&self) -> Mat<N> {
        Mat::<N>::from_fn(|i, j| if i == j { self.signs[i] } else { 0.0 })
    }

    /// `J m† J` for a real matrix (the adjoint is the transpose).
    pub fn conjugate<const N: usize>(&self, m: &Mat<N>) -> Mat<N> {
        Mat::<N>::from_fn(|i, j| self.signs[i] * m[(j, i)] * self.signs[j])
    }
}

/// Sum of exponentials `coef · Σ amp e^{rate x}`. Every hyperbolic factor of
/// the bound-state perturbations takes this form, which keeps Gram
/// integrals analytic.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpSum<const N: usize> {
    pub coef: Mat<N>,
    pub terms: Vec<(f64, f64)>,
}

impl<const N: usize> ExpSum<N> {
    pub fn eval(&self, x: f64) -> Mat<N> {
        let s: f64 = self.terms.iter().map(|&(a, r)| a * (r * x).exp()).sum();
        self.coef * s
    }
}

type Func<const N: usize> = Arc<dyn Fn(f64) -> Mat<N> + Send + Sync>;

/// Single-variable matrix factor fᵢ or gᵢ of a separable kernel.
#[derive(Clone)]
pub enum Factor<const N: usize> {
    Exp(ExpSum<N>),
    Func(Func<N>),
}

impl<const N: usize> fmt::Debug for Factor<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Factor::Exp(e) => f.debug_tuple("Exp").field(e).finish(),
            Factor::Func(_) => f.write_str("Func(..)"),
        }
    }
}

impl<const N: usize> Factor<N> {
    pub fn exp_sum(coef: Mat<N>, terms: Vec<(f64, f64)>) -> Self {
        Factor::Exp(ExpSum { coef, terms })
    }

    pub fn from_fn(f: impl Fn(f64) -> Mat<N> + Send + Sync + 'static) -> Self {
        Factor::Func(Arc::new(f))
    }

    pub fn zero() -> Self {
        Factor::exp_sum(Mat::<N>::zeros(), Vec::new())
    }

    pub fn eval(&self, x: f64) -> Mat<N> {
        match self {
            Factor::Exp(e) => e.eval(x),
            Factor::Func(f) => f(x),
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        match self {
            Factor::Exp(e) => Factor::Exp(ExpSum { coef: e.coef * s, terms: e.terms.clone() }),
            Factor::Func(f) => {
                let f = f.clone();
                Factor::from_fn(move |x| f(x) * s)
            }
        }
    }
}

impl Factor<1> {
    pub fn scalar_exp(coef: f64, terms: Vec<(f64, f64)>) -> Self {
        Factor::exp_sum(Mat::<1>::new(coef), terms)
    }

    pub fn scalar_fn(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Factor::from_fn(move |x| Mat::<1>::new(f(x)))
    }
}

/// Finite-rank kernel Σᵢ fᵢ(x) gᵢ(y).
#[derive(Debug, Clone)]
pub struct SeparableKernel<const N: usize> {
    pub terms: Vec<(Factor<N>, Factor<N>)>,
}

impl<const N: usize> SeparableKernel<N> {
    pub fn new(terms: Vec<(Factor<N>, Factor<N>)>) -> Self {
        SeparableKernel { terms }
    }

    pub fn zero() -> Self {
        SeparableKernel { terms: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.terms.len()
    }

    pub fn eval(&self, x: f64, y: f64) -> Mat<N> {
        self.terms.iter().fold(Mat::<N>::zeros(), |acc, (f, g)| acc + f.eval(x) * g.eval(y))
    }

    /// Kernel sum with the terms of `other` appended.
    pub fn plus(&self, other: &SeparableKernel<N>) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        SeparableKernel { terms }
    }

    pub fn to_general(&self) -> GeneralKernel<N> {
        let k = self.clone();
        GeneralKernel::from_fn(move |x, y| k.eval(x, y))
    }
}

type Func2<const N: usize> = Arc<dyn Fn(f64, f64) -> Mat<N> + Send + Sync>;

/// Arbitrary kernel ω(x, y). `diagonal_kink` marks kernels whose first
/// derivative jumps across y = x, so quadrature splits there.
#[derive(Clone)]
pub struct GeneralKernel<const N: usize> {
    eval: Func2<N>,
    pub diagonal_kink: bool,
}

impl<const N: usize> fmt::Debug for GeneralKernel<N> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GeneralKernel").field("diagonal_kink", &self.diagonal_kink).finish()
    }
}

impl<const N: usize> GeneralKernel<N> {
    pub fn from_fn(f: impl Fn(f64, f64) -> Mat<N> + Send + Sync + 'static) -> Self {
        GeneralKernel { eval: Arc::new(f), diagonal_kink: false }
    }

    pub fn with_diagonal_kink(mut self) -> Self {
        self.diagonal_kink = true;
        self
    }

    pub fn zero() -> Self {
        GeneralKernel::from_fn(|_, _| Mat::<N>::zeros())
    }

    pub fn eval(&self, x: f64, y: f64) -> Mat<N> {
        (self.eval)(x, y)
    }

    pub fn plus(&self, other: &GeneralKernel<N>) -> Self {
        let (a, b) = (self.clone(), other.clone());
        let kink = a.diagonal_kink || b.diagonal_kink;
        GeneralKernel { eval: Arc::new(move |x, y| a.eval(x, y) + b.eval(x, y)), diagonal_kink: kink }
    }
}

impl GeneralKernel<1> {
    pub fn scalar(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Self {
        GeneralKernel::from_fn(move |x, y| Mat::<1>::new(f(x, y)))
    }
}

/// Boundary setting of the bound-state edit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Flavor {
    FullLeft,
    FullRight,
    Dirichlet,
    NonDirichlet,
}

impl Flavor {
    pub fn interval(self) -> IntervalKind {
        match self {
            Flavor::FullLeft => IntervalKind::RightHalf,
            Flavor::FullRight => IntervalKind::LeftHalf,
            Flavor::Dirichlet | Flavor::NonDirichlet => IntervalKind::FiniteLeft,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Flavor::FullLeft => "FULL_LEFT",
            Flavor::FullRight => "FULL_RIGHT",
            Flavor::Dirichlet => "DIRICHLET",
            Flavor::NonDirichlet => "NON_DIRICHLET",
        }
    }
}

/// Adding (`+1`) or removing (`-1`) a bound state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Edit {
    Add,
    Remove,
}

impl Edit {
    pub fn sign(self) -> f64 {
        match self {
            Edit::Add => 1.0,
            Edit::Remove => -1.0,
        }
    }
}

/// Bound state at k = iκ with norming constant c (C on the half line).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundStateSpec {
    pub kappa: f64,
    pub c: f64,
    pub edit: Edit,
    pub flavor: Flavor,
}

impl BoundStateSpec {
    pub fn new(kappa: f64, c: f64, edit: Edit, flavor: Flavor) -> Result<Self> {
        let s = BoundStateSpec { kappa, c, edit, flavor };
        s.validate()?;
        Ok(s)
    }

    pub fn add(kappa: f64, c: f64, flavor: Flavor) -> Result<Self> {
        BoundStateSpec::new(kappa, c, Edit::Add, flavor)
    }

    /// κ must be positive and finite; c = 0 is accepted as the empty edit.
    pub fn validate(&self) -> Result<()> {
        if !(self.kappa > 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidSpec(format!("kappa must be positive, got {}", self.kappa)));
        }
        if !(self.c >= 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidSpec(format!("norming constant must be nonnegative, got {}", self.c)));
        }
        Ok(())
    }

    /// Seed wavefunction evaluated at k = iκ, the unscaled perturbation factor.
    pub fn seed(&self) -> ExpSum<1> {
        let k = self.kappa;
        let (coef, terms) = match self.flavor {
            Flavor::FullLeft => (1.0, vec![(1.0, -k)]),
            Flavor::FullRight => (1.0, vec![(1.0, k)]),
            Flavor::Dirichlet => (1.0 / k, vec![(0.5, k), (-0.5, -k)]),
            Flavor::NonDirichlet => (1.0, vec![(0.5, k), (0.5, -k)]),
        };
        ExpSum { coef: Mat::<1>::new(coef), terms }
    }
}

/// Rank-one pair (f, g) of the bound-state edit; removal negates g.
pub fn perturbation_pair(spec: &BoundStateSpec) -> Result<SeparableKernel<1>> {
    spec.validate()?;
    let seed = spec.seed();
    let f = Factor::Exp(ExpSum { coef: seed.coef * spec.c, terms: seed.terms.clone() });
    let g = f.scaled(spec.edit.sign());
    Ok(SeparableKernel::new(vec![(f, g)]))
}

/// Largest deviation of ω(y, z) from J ω(z, y)† J over grid pairs.
pub fn j_selfadjoint_defect<const N: usize>(omega: &GeneralKernel<N>, j: &Involution, grid: &Grid) -> Result<f64> {
    j.check_dim(N)?;
    let mut worst = 0.0f64;
    for &y in grid.points() {
        for &z in grid.points() {
            let d = omega.eval(y, z) - j.conjugate(&omega.eval(z, y));
            worst = worst.max(d.norm());
        }
    }
    Ok(worst)
}
