//! Scalar Schrödinger reading: wavefunctions built from α, closed-form
//! wavefunction shifts, ODE residuals and the two standard-method comparators.

use std::sync::Arc;

use num_complex::Complex64;

use crate::darboux::{kind_sign, FD_STEP};
use crate::error::{Error, Result};
use crate::fundamental::{solve_separable_with, AlphaKernel};
use crate::kernels::{BoundStateSpec, Factor, Flavor, SeparableKernel};
use crate::numerics::{derivative, differentiate_fourth, integrate_over, Grid, IntervalKind, Quadrature, RealSamples, Tabulated};
use crate::Mat;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum WavefunctionKind {
    /// f_l, asymptotic to e^{ikx} as x → +∞.
    JostLeft,
    /// f_r, asymptotic to e^{−ikx} as x → −∞.
    JostRight,
    /// φ(k,0) = 0, φ′(k,0) = 1.
    RegularDirichlet,
    /// φ(k,0) = 1, φ′(k,0) = −cot θ.
    RegularNonDirichlet,
}

impl WavefunctionKind {
    pub fn interval(self) -> IntervalKind {
        self.flavor().interval()
    }

    pub fn flavor(self) -> Flavor {
        match self {
            WavefunctionKind::JostLeft => Flavor::FullLeft,
            WavefunctionKind::JostRight => Flavor::FullRight,
            WavefunctionKind::RegularDirichlet => Flavor::Dirichlet,
            WavefunctionKind::RegularNonDirichlet => Flavor::NonDirichlet,
        }
    }

    pub fn from_flavor(flavor: Flavor) -> Self {
        match flavor {
            Flavor::FullLeft => WavefunctionKind::JostLeft,
            Flavor::FullRight => WavefunctionKind::JostRight,
            Flavor::Dirichlet => WavefunctionKind::RegularDirichlet,
            Flavor::NonDirichlet => WavefunctionKind::RegularNonDirichlet,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            WavefunctionKind::JostLeft => "JOST_LEFT",
            WavefunctionKind::JostRight => "JOST_RIGHT",
            WavefunctionKind::RegularDirichlet => "REGULAR_DIRICHLET",
            WavefunctionKind::RegularNonDirichlet => "REGULAR_NON_DIRICHLET",
        }
    }

    /// Free solution the kernel acts on.
    pub fn seed(self, k: Complex64, x: f64) -> Complex64 {
        match self {
            WavefunctionKind::JostLeft => (I * k * x).exp(),
            WavefunctionKind::JostRight => (-I * k * x).exp(),
            WavefunctionKind::RegularDirichlet => {
                if k == Complex64::new(0.0, 0.0) {
                    Complex64::new(x, 0.0)
                } else {
                    (k * x).sin() / k
                }
            }
            WavefunctionKind::RegularNonDirichlet => (k * x).cos(),
        }
    }

    fn ensure(self, found: WavefunctionKind) -> Result<()> {
        if self == found {
            Ok(())
        } else {
            Err(Error::KindMismatch { expected: self.tag(), found: found.tag() })
        }
    }
}

type WaveFn = Arc<dyn Fn(Complex64, f64) -> Result<Complex64> + Send + Sync>;

/// ψ(k, x) as an evaluator.
#[derive(Clone)]
pub struct Wavefunction {
    kind: WavefunctionKind,
    eval: WaveFn,
}

impl std::fmt::Debug for Wavefunction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Wavefunction").field("kind", &self.kind).finish_non_exhaustive()
    }
}

impl Wavefunction {
    pub fn new(kind: WavefunctionKind, f: impl Fn(Complex64, f64) -> Result<Complex64> + Send + Sync + 'static) -> Self {
        Wavefunction { kind, eval: Arc::new(f) }
    }

    pub fn from_fn(kind: WavefunctionKind, f: impl Fn(Complex64, f64) -> Complex64 + Send + Sync + 'static) -> Self {
        Wavefunction::new(kind, move |k, x| Ok(f(k, x)))
    }

    /// Wavefunction of the zero potential.
    pub fn free(kind: WavefunctionKind) -> Self {
        Wavefunction::from_fn(kind, move |k, x| kind.seed(k, x))
    }

    pub fn from_alpha(alpha: Arc<dyn AlphaKernel<1>>, kind: WavefunctionKind, quadrature: Quadrature) -> Result<Self> {
        kind.interval().ensure(alpha.kind())?;
        Ok(Wavefunction::new(kind, move |k, x| wavefunction_from_alpha(alpha.as_ref(), kind, k, x, &quadrature)))
    }

    pub fn kind(&self) -> WavefunctionKind {
        self.kind
    }

    pub fn eval(&self, k: Complex64, x: f64) -> Result<Complex64> {
        (self.eval)(k, x)
    }

    /// ψ′(k, x) by a five-point difference.
    pub fn derivative(&self, k: Complex64, x: f64) -> Result<Complex64> {
        derivative(|t| self.eval(k, t), x, FD_STEP, 1)
    }

    /// Real value ψ(iκ, x) at a bound state.
    pub fn at_bound_state(&self, kappa: f64, x: f64) -> Result<f64> {
        Ok(self.eval(Complex64::new(0.0, kappa), x)?.re)
    }

    pub fn sample(&self, k: Complex64, grid: &Grid) -> Result<Vec<Complex64>> {
        grid.points().iter().map(|&x| self.eval(k, x)).collect()
    }
}

/// Seed plus the quadrature of α against the seed over the interval at x.
pub fn wavefunction_from_alpha(
    alpha: &dyn AlphaKernel<1>,
    kind: WavefunctionKind,
    k: Complex64,
    x: f64,
    quadrature: &Quadrature,
) -> Result<Complex64> {
    let interval = kind.interval();
    interval.ensure(alpha.kind())?;
    let row = alpha.row(x)?;
    let integral = integrate_over(interval, x, quadrature, |y| Ok(kind.seed(k, y) * row(y)?[0]), &[])?;
    Ok(kind.seed(k, x) + integral)
}

/// Sampled potential u(x).
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialProfile {
    grid: Grid,
    u: RealSamples,
}

impl PotentialProfile {
    pub fn new(grid: Grid, u: RealSamples) -> Result<Self> {
        if u.len() != grid.len() {
            return Err(Error::LengthMismatch { samples: u.len(), grid: grid.len() });
        }
        if let Some((i, v)) = u.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidSpec(format!("potential value {v} at x = {}", grid.points()[i])));
        }
        Ok(PotentialProfile { grid, u })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> Result<f64>) -> Result<Self> {
        let u = grid.try_sample(f)?;
        PotentialProfile::new(grid, u)
    }

    pub fn zero(grid: Grid) -> Self {
        let u = vec![0.0; grid.len()];
        PotentialProfile { grid, u }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    /// u + Δu on the same grid.
    pub fn shifted(&self, delta: &[f64]) -> Result<Self> {
        if delta.len() != self.u.len() {
            return Err(Error::LengthMismatch { samples: delta.len(), grid: self.u.len() });
        }
        PotentialProfile::new(self.grid.clone(), self.u.iter().zip(delta).map(|(a, b)| a + b).collect())
    }
}

/// max over interior grid points of |−ψ″ + uψ − k²ψ|, with ψ″ by central
/// second differences.
pub fn schrodinger_residual(psi: &Wavefunction, u: &PotentialProfile, k: Complex64, grid: &Grid) -> Result<f64> {
    if grid.len() < 3 {
        return Err(Error::TooFewPoints { have: grid.len(), need: 3 });
    }
    if u.values().len() != grid.len() {
        return Err(Error::LengthMismatch { samples: u.values().len(), grid: grid.len() });
    }
    let h = grid.spacing();
    let v = psi.sample(k, grid)?;
    let uu = u.values();
    let k2 = k * k;
    let mut worst = 0.0f64;
    for i in 1..v.len() - 1 {
        let d2 = (v[i + 1] - v[i] * 2.0 + v[i - 1]) / (h * h);
        worst = worst.max((-d2 + v[i] * (uu[i] - k2)).norm());
    }
    Ok(worst)
}

/// How the numerator ∫ψ(k,y)ψ(iκ,y)dy of the wavefunction shift is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftMethod {
    #[default]
    Quadrature,
    /// ±[ψ′(k)ψ(iκ) − ψ(k)ψ′(iκ)]/(k² + κ²) at the anchor.
    Wronskian,
}

/// ψ(iκ, ·) tabulated over every point reached from anchors in `[lo, hi]`.
pub fn tabulate_bound_state(
    psi: &Wavefunction,
    kappa: f64,
    lo: f64,
    hi: f64,
    quadrature: &Quadrature,
) -> Result<Tabulated<f64>> {
    let (a, b) = match psi.kind.interval() {
        IntervalKind::RightHalf => (lo, hi + quadrature.tail),
        IntervalKind::LeftHalf => (lo - quadrature.tail, hi),
        IntervalKind::FiniteLeft => (0.0, hi),
    };
    Tabulated::build(a, b, quadrature.step.min(1e-2), |y| psi.at_bound_state(kappa, y))
}

/// ψ̃(k,x) − ψ(k,x) = −s c² ψ(iκ,x) ∫ψ(k,y)ψ(iκ,y)dy / (1 + s c² ∫ψ(iκ,z)²dz),
/// with s = +1 for an added and −1 for a removed state.
#[allow(clippy::too_many_arguments)]
pub fn darboux_wavefunction_shift(
    psi: &Wavefunction,
    psi_at_ikappa: &dyn Fn(f64) -> Result<f64>,
    spec: &BoundStateSpec,
    k: Complex64,
    x: f64,
    method: ShiftMethod,
    quadrature: &Quadrature,
) -> Result<Complex64> {
    spec.validate()?;
    WavefunctionKind::from_flavor(spec.flavor).ensure(psi.kind)?;
    if spec.c == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let kind = spec.flavor.interval();
    let kappa = spec.kappa;
    let sc2 = spec.edit.sign() * spec.c * spec.c;
    let norm: f64 = integrate_over(kind, x, quadrature, |z| Ok(psi_at_ikappa(z)?.powi(2)), &[])?;
    let den = 1.0 + sc2 * norm;
    if den.abs() <= 1e-12 * (sc2 * norm).abs().max(1.0) || !den.is_finite() {
        return Err(Error::ZeroDenominator(format!("1 + c²∫ψ(iκ)² = {den} at x = {x}")));
    }
    let pk = psi_at_ikappa(x)?;
    let num = match method {
        ShiftMethod::Quadrature => {
            integrate_over(kind, x, quadrature, |y| Ok(psi.eval(k, y)? * psi_at_ikappa(y)?), &[])?
        }
        ShiftMethod::Wronskian => {
            let k2 = k * k + kappa * kappa;
            if k2.norm() < f64::EPSILON {
                return Err(Error::ZeroDenominator(format!("k² + κ² vanishes at k = {k}")));
            }
            let dpk = derivative(psi_at_ikappa, x, FD_STEP, 1)?;
            let w = psi.derivative(k, x)? * pk - psi.eval(k, x)? * dpk;
            -w * kind_sign(kind) / k2
        }
    };
    Ok(-num * (sc2 * pk / den))
}

/// The perturbed wavefunction ψ + shift as an evaluator, with ψ(iκ, ·)
/// tabulated for anchors in `[lo, hi]`.
pub fn darboux_wavefunction(
    psi: &Wavefunction,
    spec: &BoundStateSpec,
    method: ShiftMethod,
    quadrature: Quadrature,
    lo: f64,
    hi: f64,
) -> Result<Wavefunction> {
    WavefunctionKind::from_flavor(spec.flavor).ensure(psi.kind)?;
    let row = Arc::new(tabulate_bound_state(psi, spec.kappa, lo, hi, &quadrature)?);
    let base = psi.clone();
    let spec = *spec;
    Ok(Wavefunction::new(psi.kind, move |k, x| {
        let kappa = spec.kappa;
        let b = base.clone();
        let row_fn = |y: f64| match row.eval(y) {
            Some(v) => Ok(v),
            None => b.at_bound_state(kappa, y),
        };
        Ok(base.eval(k, x)? + darboux_wavefunction_shift(&base, &row_fn, &spec, k, x, method, &quadrature)?)
    }))
}

/// Outputs of the standard full-line method.
#[derive(Debug, Clone)]
pub struct StandardDarboux {
    pub u_tilde: PotentialProfile,
    pub f_l: Wavefunction,
    pub f_r: Wavefunction,
}

/// Standard full-line Darboux step built on η = f_l(iκ,·) + γ f_r(iκ,·).
pub fn standard_darboux_fullline(
    u: &PotentialProfile,
    f_l: &Wavefunction,
    f_r: &Wavefunction,
    kappa: f64,
    gamma_dep: f64,
) -> Result<StandardDarboux> {
    WavefunctionKind::JostLeft.ensure(f_l.kind)?;
    WavefunctionKind::JostRight.ensure(f_r.kind)?;
    if !(kappa > 0.0) {
        return Err(Error::InvalidSpec(format!("kappa must be positive, got {kappa}")));
    }
    let (fl, fr) = (f_l.clone(), f_r.clone());
    let eta = Arc::new(move |x: f64| Ok(fl.at_bound_state(kappa, x)? + gamma_dep * fr.at_bound_state(kappa, x)?));
    let grid = u.grid();
    let eta_s = grid.try_sample(|x| eta(x))?;
    if let Some((i, &v)) = eta_s.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(Error::EtaNotPositive { x: grid.points()[i], value: v });
    }
    let ln: Vec<f64> = eta_s.iter().map(|v| v.ln()).collect();
    let d2 = differentiate_fourth(&ln, grid, 2)?;
    let u_tilde = PotentialProfile::new(grid.clone(), u.values().iter().zip(&d2).map(|(a, b)| a - 2.0 * b).collect())?;

    let log_slope = {
        let eta = eta.clone();
        move |x: f64| -> Result<f64> {
            let e = eta(x)?;
            if !(e > 0.0) {
                return Err(Error::EtaNotPositive { x, value: e });
            }
            Ok(derivative(|t| eta(t), x, FD_STEP, 1)? / e)
        }
    };
    let ik = Complex64::new(0.0, kappa);
    let (base_l, slope_l) = (f_l.clone(), log_slope.clone());
    let new_l = Wavefunction::new(WavefunctionKind::JostLeft, move |k, x| {
        let den = I * (k + ik);
        if den.norm() < f64::EPSILON {
            return Err(Error::ZeroDenominator(format!("k + iκ vanishes at k = {k}")));
        }
        Ok((base_l.derivative(k, x)? - base_l.eval(k, x)? * slope_l(x)?) / den)
    });
    let (base_r, slope_r) = (f_r.clone(), log_slope);
    let new_r = Wavefunction::new(WavefunctionKind::JostRight, move |k, x| {
        let den = k + ik;
        if den.norm() < f64::EPSILON {
            return Err(Error::ZeroDenominator(format!("k + iκ vanishes at k = {k}")));
        }
        Ok(I * (base_r.derivative(k, x)? - base_r.eval(k, x)? * slope_r(x)?) / den)
    });
    Ok(StandardDarboux { u_tilde, f_l: new_l, f_r: new_r })
}

/// Gel'fand–Levitan step on (0, x): solves A + M + AM = 0 with the separable
/// M(x,y) = C²φ(iκ,x)φ(iκ,y) and returns Δu = 2 d/dx A(x,x) and φ̃(k, x).
pub fn gelfand_levitan_dirichlet(
    phi: &Wavefunction,
    kappa: f64,
    c: f64,
    k: Complex64,
    x: f64,
    quadrature: &Quadrature,
) -> Result<(f64, Complex64)> {
    if !matches!(phi.kind, WavefunctionKind::RegularDirichlet | WavefunctionKind::RegularNonDirichlet) {
        return Err(Error::KindMismatch { expected: WavefunctionKind::RegularDirichlet.tag(), found: phi.kind.tag() });
    }
    if !(kappa > 0.0) {
        return Err(Error::InvalidSpec(format!("kappa must be positive, got {kappa}")));
    }
    if c == 0.0 {
        return Ok((0.0, phi.eval(k, x)?));
    }
    let span = x + 4.0 * FD_STEP;
    let row = Arc::new(Tabulated::build(0.0, span, quadrature.step.min(1e-2), |y| phi.at_bound_state(kappa, y))?);
    let factor = Factor::from_fn(move |y| Mat::<1>::new(c * row.eval(y).unwrap_or(f64::NAN)));
    let m = SeparableKernel::new(vec![(factor.clone(), factor)]);
    let a = solve_separable_with(&m, IntervalKind::FiniteLeft, *quadrature);
    let du = 2.0 * derivative(|t| Ok(a.eval(t, t)?[0]), x, FD_STEP, 1)?;
    let arow = a.row(x)?;
    let integral = integrate_over(IntervalKind::FiniteLeft, x, quadrature, |y| Ok(phi.eval(k, y)? * arow(y)?[0]), &[])?;
    Ok((du, phi.eval(k, x)? + integral))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fundamental::AlphaFn;
    use crate::kernels::Edit;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn free_right_jost() {
        let a: Arc<dyn AlphaKernel<1>> = Arc::new(AlphaFn::<1>::zero(IntervalKind::LeftHalf));
        let psi = Wavefunction::from_alpha(a, WavefunctionKind::JostRight, Quadrature::default()).unwrap();
        let v = psi.eval(c(1.3), 0.4).unwrap();
        assert!((v - (-I * 1.3 * 0.4).exp()).norm() < 1e-15);
    }

    #[test]
    fn constant_alpha_non_dirichlet() {
        let k1 = 0.9;
        let a: Arc<dyn AlphaKernel<1>> = Arc::new(AlphaFn::scalar(IntervalKind::FiniteLeft, move |_, _| k1));
        let psi = Wavefunction::from_alpha(a, WavefunctionKind::RegularNonDirichlet, Quadrature::new(2e-3, 0.0)).unwrap();
        for &(k, x) in &[(0.5f64, 0.7f64), (2.0, 1.9), (4.5, 0.3)] {
            let exact = (k * x).cos() + k1 * (k * x).sin() / k;
            assert!((psi.eval(c(k), x).unwrap() - exact).norm() < 1e-10);
        }
        assert!(Wavefunction::from_alpha(
            Arc::new(AlphaFn::<1>::zero(IntervalKind::RightHalf)),
            WavefunctionKind::RegularDirichlet,
            Quadrature::default()
        )
        .is_err());
    }

    #[test]
    fn profile_checks() {
        let g = Grid::lattice(0.0, 1.0, 5).unwrap();
        assert!(matches!(PotentialProfile::new(g.clone(), vec![0.0; 4]), Err(Error::LengthMismatch { .. })));
        assert!(PotentialProfile::new(g.clone(), vec![0.0, 1.0, f64::NAN, 0.0, 0.0]).is_err());
        let p = PotentialProfile::zero(g).shifted(&[1.0; 5]).unwrap();
        assert_eq!(p.values(), &[1.0; 5]);
    }

    #[test]
    fn plane_wave_residual_is_second_order() {
        let psi = Wavefunction::free(WavefunctionKind::JostLeft);
        let k = c(2.0);
        let mut prev = f64::INFINITY;
        for n in [101, 201, 401] {
            let g = Grid::lattice(-1.0, 1.0, n).unwrap();
            let r = schrodinger_residual(&psi, &PotentialProfile::zero(g.clone()), k, &g).unwrap();
            assert!(r < 4.0 * g.spacing().powi(2) * 16.0 / 12.0 + 1e-9);
            assert!(r < prev);
            prev = r;
        }
        let g = Grid::lattice(-1.0, 1.0, 2).unwrap();
        assert!(matches!(
            schrodinger_residual(&psi, &PotentialProfile::zero(g.clone()), k, &g),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn zero_norming_constant_no_shift() {
        let psi = Wavefunction::free(WavefunctionKind::RegularDirichlet);
        let spec = BoundStateSpec::add(1.0, 0.0, Flavor::Dirichlet).unwrap();
        let row = |y: f64| psi.at_bound_state(1.0, y);
        let v = darboux_wavefunction_shift(&psi, &row, &spec, c(1.0), 0.8, ShiftMethod::Quadrature, &Quadrature::default());
        assert_eq!(v.unwrap(), c(0.0));
    }

    #[test]
    fn full_line_left_shift_closed_form() {
        let (kappa, cn) = (0.8, 1.3);
        let psi = Wavefunction::free(WavefunctionKind::JostLeft);
        let spec = BoundStateSpec::add(kappa, cn, Flavor::FullLeft).unwrap();
        let q = Quadrature::new(2e-3, 40.0 / kappa);
        let row = |y: f64| psi.at_bound_state(kappa, y);
        let b = cn * cn / (2.0 * kappa);
        for &(k, x) in &[(0.5, -1.0), (2.0, 0.4), (1.0, 2.0)] {
            let g = 1.0 + b * (-2.0 * kappa * x).exp();
            let exact = -cn * cn * (-kappa * x).exp() * ((I * k - kappa) * x).exp() / ((kappa - I * k) * g);
            for method in [ShiftMethod::Quadrature, ShiftMethod::Wronskian] {
                let v = darboux_wavefunction_shift(&psi, &row, &spec, c(k), x, method, &q).unwrap();
                assert!((v - exact).norm() < 1e-9, "{method:?} {v} {exact}");
            }
        }
    }

    #[test]
    fn wronskian_matches_quadrature_for_right_flavor() {
        let (kappa, cn) = (1.1, 0.6);
        let psi = Wavefunction::free(WavefunctionKind::JostRight);
        let spec = BoundStateSpec::new(kappa, cn, Edit::Remove, Flavor::FullRight).unwrap();
        let q = Quadrature::new(2e-3, 40.0 / kappa);
        let row = |y: f64| psi.at_bound_state(kappa, y);
        for &k in &[c(0.5), c(3.0), Complex64::new(0.0, 0.4)] {
            let a = darboux_wavefunction_shift(&psi, &row, &spec, k, -0.5, ShiftMethod::Quadrature, &q).unwrap();
            let b = darboux_wavefunction_shift(&psi, &row, &spec, k, -0.5, ShiftMethod::Wronskian, &q).unwrap();
            assert!((a - b).norm() < 1e-8);
        }
        let psi_l = Wavefunction::free(WavefunctionKind::JostLeft);
        let r = darboux_wavefunction_shift(&psi_l, &row, &spec, c(1.0), 0.0, ShiftMethod::Quadrature, &q);
        assert!(matches!(r, Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn removal_can_hit_zero_denominator() {
        let psi = Wavefunction::free(WavefunctionKind::RegularDirichlet);
        let spec = BoundStateSpec::new(1.0, 2.0, Edit::Remove, Flavor::Dirichlet).unwrap();
        let row = |y: f64| psi.at_bound_state(1.0, y);
        let q = Quadrature::new(1e-3, 0.0);
        let den = |x: f64| {
            1.0 - 4.0 * integrate_over(IntervalKind::FiniteLeft, x, &q, |z| Ok(row(z)?.powi(2)), &[]).unwrap()
        };
        let (mut a, mut b) = (0.5, 1.2);
        let mut x = a;
        for _ in 0..200 {
            x = 0.5 * (a + b);
            if den(x) > 0.0 { a = x } else { b = x }
        }
        let r = darboux_wavefunction_shift(&psi, &row, &spec, c(1.0), x, ShiftMethod::Quadrature, &q);
        assert!(matches!(r, Err(Error::ZeroDenominator(_))), "{r:?}");
    }

    #[test]
    fn standard_method_zero_background() {
        let kappa = 0.9;
        let g = Grid::lattice(-3.0, 3.0, 601).unwrap();
        let u = PotentialProfile::zero(g.clone());
        let fl = Wavefunction::free(WavefunctionKind::JostLeft);
        let fr = Wavefunction::free(WavefunctionKind::JostRight);
        let out = standard_darboux_fullline(&u, &fl, &fr, kappa, 1.0).unwrap();
        for (x, v) in g.points().iter().zip(out.u_tilde.values()) {
            let exact = -2.0 * kappa * kappa / (kappa * x).cosh().powi(2);
            assert!((v - exact).abs() < 1e-6, "{x} {v} {exact}");
        }
        let k = c(1.5);
        let (x, t) = (0.3, (kappa * 0.3f64).tanh());
        let exact = (I * k * x).exp() * (k + I * kappa * t) / (k + I * kappa);
        let v = out.f_l.eval(k, x).unwrap();
        assert!((v - exact).norm() < 1e-8, "{v} {exact}");
        assert!(matches!(
            standard_darboux_fullline(&u, &fl, &fr, kappa, -1.0),
            Err(Error::EtaNotPositive { .. })
        ));
        assert!(matches!(standard_darboux_fullline(&u, &fr, &fl, kappa, 1.0), Err(Error::KindMismatch { .. })));
    }

    #[test]
    fn gelfand_levitan_matches_generalized_dirichlet() {
        let (kappa, cc) = (1.2, 0.8);
        let phi = Wavefunction::free(WavefunctionKind::RegularDirichlet);
        let q = Quadrature::new(2e-3, 0.0);
        let spec = BoundStateSpec::add(kappa, cc, Flavor::Dirichlet).unwrap();
        let row = |y: f64| phi.at_bound_state(kappa, y);
        for &x in &[0.4, 1.0, 2.2] {
            let (du, pt) = gelfand_levitan_dirichlet(&phi, kappa, cc, c(1.7), x, &q).unwrap();
            let s = (kappa * x).sinh();
            let gm = 1.0 + cc * cc / (kappa * kappa) * ((2.0 * kappa * x).sinh() / (4.0 * kappa) - x / 2.0);
            let exact = -2.0 * (cc * cc * (2.0 * kappa * x).sinh() / kappa / gm - (cc * s / kappa).powi(4) / (gm * gm));
            assert!((du - exact).abs() < 1e-6, "{du} {exact}");
            let shift = darboux_wavefunction_shift(&phi, &row, &spec, c(1.7), x, ShiftMethod::Quadrature, &q).unwrap();
            assert!((pt - phi.eval(c(1.7), x).unwrap() - shift).norm() < 1e-8);
        }
        let (du, pt) = gelfand_levitan_dirichlet(&phi, kappa, 0.0, c(1.0), 0.5, &q).unwrap();
        assert_eq!(du, 0.0);
        assert_eq!(pt, phi.eval(c(1.0), 0.5).unwrap());
    }

    #[test]
    fn wavefunction_shift_keeps_dirichlet_data() {
        let phi = Wavefunction::free(WavefunctionKind::RegularDirichlet);
        let spec = BoundStateSpec::add(1.0, 1.5, Flavor::Dirichlet).unwrap();
        let q = Quadrature::new(1e-3, 0.0);
        let pt = darboux_wavefunction(&phi, &spec, ShiftMethod::Quadrature, q, 0.0, 1.0).unwrap();
        let k = c(2.0);
        assert!(pt.eval(k, 0.0).unwrap().norm() < 1e-12);
        let d0 = (pt.eval(k, 1e-3).unwrap() - pt.eval(k, 0.0).unwrap()) / 1e-3;
        assert!((d0 - 1.0).norm() < 1e-5);
    }
}
