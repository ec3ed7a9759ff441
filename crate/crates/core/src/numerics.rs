//! Grids over the three interval families, Simpson quadrature, finite
//! differences and one-sided diagonal limits.

use std::ops::{Add, Mul};

use nalgebra::SMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fundamental::AlphaKernel;
use crate::Mat;

/// Interval of integration attached to the anchor `x`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum IntervalKind {
    /// `(x, +inf)`
    RightHalf,
    /// `(-inf, x)`
    LeftHalf,
    /// `(0, x)`
    FiniteLeft,
}

impl IntervalKind {
    pub fn tag(self) -> &'static str {
        match self {
            IntervalKind::RightHalf => "RIGHT_HALF",
            IntervalKind::LeftHalf => "LEFT_HALF",
            IntervalKind::FiniteLeft => "FINITE_LEFT",
        }
    }

    pub fn is_infinite(self) -> bool {
        !matches!(self, IntervalKind::FiniteLeft)
    }

    /// Strict support of α(x, ·).
    pub fn in_support(self, x: f64, y: f64) -> bool {
        match self {
            IntervalKind::RightHalf => y > x,
            IntervalKind::LeftHalf => y < x,
            IntervalKind::FiniteLeft => 0.0 < y && y < x,
        }
    }

    /// Closed support, diagonal included.
    pub fn in_closed_support(self, x: f64, y: f64) -> bool {
        match self {
            IntervalKind::RightHalf => y >= x,
            IntervalKind::LeftHalf => y <= x,
            IntervalKind::FiniteLeft => 0.0 <= y && y <= x,
        }
    }

    /// Truncated integration window of the interval anchored at `x`.
    pub fn window(self, x: f64, tail: f64) -> (f64, f64) {
        match self {
            IntervalKind::RightHalf => (x, x + tail),
            IntervalKind::LeftHalf => (x - tail, x),
            IntervalKind::FiniteLeft => (0.0, x),
        }
    }

    pub fn ensure(self, found: IntervalKind) -> Result<()> {
        if self == found {
            Ok(())
        } else {
            Err(Error::KindMismatch { expected: self.tag(), found: found.tag() })
        }
    }
}

/// Step size and tail length used by closure-based quadrature.
///
/// Infinite intervals are cut `tail` away from the anchor. An integrand whose
/// magnitude at the cutoff exceeds `tail_tol` times its peak is reported as
/// `NONCONVERGENT_TAIL`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub step: f64,
    pub tail: f64,
    pub tail_tol: f64,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature { step: 1e-2, tail: 20.0, tail_tol: 1e-8 }
    }
}

impl Quadrature {
    pub fn new(step: f64, tail: f64) -> Self {
        Quadrature { step, tail, ..Default::default() }
    }

    /// Tail of `40 / rate`, the default for kernels decaying like `e^{-rate |z|}`.
    pub fn for_decay(step: f64, rate: f64) -> Self {
        Quadrature::new(step, 40.0 / rate)
    }
}

/// Uniform sample axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    h: f64,
    kind: Option<IntervalKind>,
    truncation: f64,
}

pub type RealSamples = Vec<f64>;

/// Uniform grid covering `[x, L]`, `[-L, x]` or `[0, x]` per kind.
pub fn build_grid(kind: IntervalKind, anchor_x: f64, n_points: usize, truncation: f64) -> Result<Grid> {
    if n_points < 3 || n_points.is_multiple_of(2) {
        return Err(Error::BadPointCount(n_points));
    }
    let (lo, hi) = match kind {
        IntervalKind::RightHalf => (anchor_x, truncation),
        IntervalKind::LeftHalf => (-truncation, anchor_x),
        IntervalKind::FiniteLeft => (0.0, anchor_x),
    };
    if !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::NonPositiveSpan { lo, hi });
    }
    let mut grid = Grid::lattice(lo, hi, n_points)?;
    grid.kind = Some(kind);
    grid.truncation = match kind {
        IntervalKind::FiniteLeft => anchor_x,
        _ => truncation,
    };
    Ok(grid)
}

impl Grid {
    /// Untagged uniform lattice on `[a, b]`, used for sampling and test boxes.
    pub fn lattice(a: f64, b: f64, n_points: usize) -> Result<Grid> {
        if n_points < 2 {
            return Err(Error::BadPointCount(n_points));
        }
        if !(b > a) {
            return Err(Error::NonPositiveSpan { lo: a, hi: b });
        }
        let h = (b - a) / (n_points - 1) as f64;
        let mut points: Vec<f64> = (0..n_points).map(|i| a + h * i as f64).collect();
        points[n_points - 1] = b;
        Ok(Grid { points, h, kind: None, truncation: b.abs().max(a.abs()) })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn kind(&self) -> Option<IntervalKind> {
        self.kind
    }

    pub fn truncation(&self) -> f64 {
        self.truncation
    }

    pub fn first(&self) -> f64 {
        self.points[0]
    }

    pub fn last(&self) -> f64 {
        self.points[self.points.len() - 1]
    }

    pub fn sample(&self, f: impl Fn(f64) -> f64) -> RealSamples {
        self.points.iter().map(|&x| f(x)).collect()
    }

    pub fn try_sample(&self, f: impl Fn(f64) -> Result<f64>) -> Result<RealSamples> {
        self.points.iter().map(|&x| f(x)).collect()
    }
}

/// Values that quadrature and difference formulas can combine linearly.
pub trait Sample: Copy + Add<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Sample for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Sample for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl<const R: usize, const C: usize> Sample for SMatrix<f64, R, C> {
    fn zero() -> Self {
        SMatrix::zeros()
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Composite Simpson weights for `n` uniform nodes; the last three intervals
/// switch to the 3/8 rule when the interval count is odd.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    let mut w = vec![0.0; n];
    if n < 2 {
        return w;
    }
    if n == 2 {
        w[0] = h / 2.0;
        w[1] = h / 2.0;
        return w;
    }
    let intervals = n - 1;
    let simpson_end = if intervals.is_multiple_of(2) { n - 1 } else { n - 4 };
    let mut i = 0;
    while i + 2 <= simpson_end {
        w[i] += h / 3.0;
        w[i + 1] += 4.0 * h / 3.0;
        w[i + 2] += h / 3.0;
        i += 2;
    }
    if simpson_end != n - 1 {
        let s = simpson_end;
        w[s] += 3.0 * h / 8.0;
        w[s + 1] += 9.0 * h / 8.0;
        w[s + 2] += 9.0 * h / 8.0;
        w[s + 3] += 3.0 * h / 8.0;
    }
    w
}

/// Composite Simpson integral of grid samples.
pub fn integrate(samples: &[f64], grid: &Grid) -> Result<f64> {
    if samples.len() != grid.len() {
        return Err(Error::LengthMismatch { samples: samples.len(), grid: grid.len() });
    }
    let w = simpson_weights(grid.len(), grid.spacing());
    Ok(samples.iter().zip(&w).map(|(s, w)| s * w).sum())
}

struct QuadTerms<T> {
    value: T,
    first: f64,
    last: f64,
    peak: f64,
}

/// Even interval count with spacing no larger than `step`.
pub(crate) fn interval_count(len: f64, step: f64) -> usize {
    let m = (len / step).ceil().max(2.0) as usize;
    m + m % 2
}

fn simpson_fn<T: Sample>(f: &mut impl FnMut(f64) -> Result<T>, a: f64, b: f64, step: f64) -> Result<QuadTerms<T>> {
    let m = interval_count(b - a, step);
    let h = (b - a) / m as f64;
    let mut acc = T::zero();
    let mut peak = 0.0f64;
    let mut first = 0.0;
    let mut last = 0.0;
    for i in 0..=m {
        let z = if i == m { b } else { a + h * i as f64 };
        let v = f(z)?;
        let mag = v.magnitude();
        peak = peak.max(mag);
        if i == 0 {
            first = mag;
        }
        if i == m {
            last = mag;
        }
        let c = if i == 0 || i == m {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc = acc + v * c;
    }
    Ok(QuadTerms { value: acc * (h / 3.0), first, last, peak })
}

fn split_quad<T: Sample>(
    f: &mut impl FnMut(f64) -> Result<T>,
    a: f64,
    b: f64,
    step: f64,
    breaks: &[f64],
) -> Result<QuadTerms<T>> {
    let mut cuts: Vec<f64> = breaks.iter().copied().filter(|&c| c > a && c < b).collect();
    cuts.sort_by(|p, q| p.total_cmp(q));
    let mut total = QuadTerms { value: T::zero(), first: 0.0, last: 0.0, peak: 0.0 };
    let mut lo = a;
    let ends = cuts.into_iter().chain(std::iter::once(b));
    let mut started = false;
    for hi in ends {
        if hi - lo <= 1e-14 * (1.0 + hi.abs()) {
            continue;
        }
        let part = simpson_fn(f, lo, hi, step)?;
        if !started {
            total.first = part.first;
            started = true;
        }
        total.last = part.last;
        total.peak = total.peak.max(part.peak);
        total.value = total.value + part.value;
        lo = hi;
    }
    Ok(total)
}

/// Simpson integral of `f` over `[a, b]` with spacing at most `step`,
/// splitting at the given breakpoints. Reversed limits flip the sign.
pub fn quad<T: Sample>(mut f: impl FnMut(f64) -> Result<T>, a: f64, b: f64, step: f64, breaks: &[f64]) -> Result<T> {
    if a == b {
        return Ok(T::zero());
    }
    if b < a {
        return Ok(split_quad(&mut f, b, a, step, breaks)?.value * -1.0);
    }
    Ok(split_quad(&mut f, a, b, step, breaks)?.value)
}

/// Integral of `f` over the interval of `kind` anchored at `x`, truncated per
/// `q` and checked for tail convergence on infinite intervals.
pub fn integrate_over<T: Sample>(
    kind: IntervalKind,
    x: f64,
    q: &Quadrature,
    mut f: impl FnMut(f64) -> Result<T>,
    breaks: &[f64],
) -> Result<T> {
    let (a, b) = kind.window(x, q.tail);
    if b <= a {
        return Ok(T::zero());
    }
    let t = split_quad(&mut f, a, b, q.step, breaks)?;
    let (cutoff, edge) = match kind {
        IntervalKind::RightHalf => (b, t.last),
        IntervalKind::LeftHalf => (a, t.first),
        IntervalKind::FiniteLeft => return Ok(t.value),
    };
    if t.peak > 0.0 && edge > q.tail_tol * t.peak {
        return Err(Error::NonconvergentTail { cutoff, ratio: edge / t.peak });
    }
    Ok(t.value)
}

/// Nodes and composite Simpson weights on `[a, b]` with spacing at most `step`.
pub fn simpson_rule(a: f64, b: f64, step: f64) -> (Vec<f64>, Vec<f64>) {
    if b <= a {
        return (vec![a], vec![0.0]);
    }
    let m = interval_count(b - a, step);
    let h = (b - a) / m as f64;
    let nodes = (0..=m).map(|i| if i == m { b } else { a + h * i as f64 }).collect();
    (nodes, simpson_weights(m + 1, h))
}

/// Fornberg's finite-difference weights for the `m`-th derivative at `z`
/// from the nodes `xs`.
pub fn fd_weights(z: f64, xs: &[f64], m: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; m + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[m]).collect()
}

fn stencil_derivative(samples: &[f64], grid: &Grid, order: usize, interior: usize, edge: usize) -> Result<RealSamples> {
    if samples.len() != grid.len() {
        return Err(Error::LengthMismatch { samples: samples.len(), grid: grid.len() });
    }
    let n = grid.len();
    let need = interior.max(edge).max(5);
    if n < need {
        return Err(Error::TooFewPoints { have: n, need });
    }
    if order != 1 && order != 2 {
        return Err(Error::InvalidSpec(format!("derivative order {order} (expected 1 or 2)")));
    }
    let pts = grid.points();
    let half = interior / 2;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (start, width) = if i >= half && i + half < n {
            (i - half, interior)
        } else {
            let w = edge;
            (i.saturating_sub(w / 2).min(n - w), w)
        };
        let w = fd_weights(pts[i], &pts[start..start + width], order);
        out.push(w.iter().zip(&samples[start..start + width]).map(|(w, s)| w * s).sum());
    }
    Ok(out)
}

/// Second-order finite differences: central in the interior, one-sided at
/// the endpoints.
pub fn differentiate(samples: &[f64], grid: &Grid, order: usize) -> Result<RealSamples> {
    let edge = if order == 2 { 4 } else { 3 };
    stencil_derivative(samples, grid, order, 3, edge)
}

/// Fourth-order finite differences (five-point central, six-point one-sided).
pub fn differentiate_fourth(samples: &[f64], grid: &Grid, order: usize) -> Result<RealSamples> {
    let edge = if order == 2 { 6 } else { 5 };
    stencil_derivative(samples, grid, order, 5, edge)
}

/// Five-point central derivative of `f` at `x` with step `h`.
pub fn derivative<T: Sample>(f: impl Fn(f64) -> Result<T>, x: f64, h: f64, order: usize) -> Result<T> {
    let fm2 = f(x - 2.0 * h)?;
    let fm1 = f(x - h)?;
    let fp1 = f(x + h)?;
    let fp2 = f(x + 2.0 * h)?;
    match order {
        1 => Ok((fm2 + fm1 * -8.0 + fp1 * 8.0 + fp2 * -1.0) * (1.0 / (12.0 * h))),
        2 => {
            let f0 = f(x)?;
            Ok((fm2 * -1.0 + fm1 * 16.0 + f0 * -30.0 + fp1 * 16.0 + fp2 * -1.0) * (1.0 / (12.0 * h * h)))
        }
        _ => Err(Error::InvalidSpec(format!("derivative order {order} (expected 1 or 2)"))),
    }
}

/// One-sided limit of α(x, y) as y approaches x from inside the support,
/// by Richardson extrapolation over the offsets `h` and `h/2`.
pub fn diagonal_limit<const N: usize>(alpha: &dyn AlphaKernel<N>, x: f64, h: f64) -> Result<Mat<N>> {
    let dir = match alpha.kind() {
        IntervalKind::RightHalf => 1.0,
        _ => -1.0,
    };
    let y1 = x + dir * h;
    let y2 = x + dir * h * 0.5;
    if !(h > 0.0) || !alpha.kind().in_support(x, y1) {
        return Err(Error::OutOfSupport { x, y: y1 });
    }
    let row = alpha.row(x)?;
    let a1 = row(y1)?;
    let a2 = row(y2)?;
    Ok(a2 * 2.0 - a1)
}

/// Samples of `f` on a uniform lattice with local degree-5 Lagrange
/// interpolation between nodes.
#[derive(Debug, Clone)]
pub struct Tabulated<T> {
    a: f64,
    h: f64,
    values: Vec<T>,
}

const INTERP_POINTS: usize = 6;

impl<T: Sample> Tabulated<T> {
    pub fn build(a: f64, b: f64, step: f64, f: impl Fn(f64) -> Result<T>) -> Result<Self> {
        let m = ((b - a) / step).ceil().max(INTERP_POINTS as f64) as usize;
        let h = (b - a) / m as f64;
        let values = (0..=m).map(|i| f(a + h * i as f64)).collect::<Result<Vec<T>>>()?;
        Ok(Tabulated { a, h, values })
    }

    pub fn range(&self) -> (f64, f64) {
        (self.a, self.a + self.h * (self.values.len() - 1) as f64)
    }

    pub fn contains(&self, x: f64) -> bool {
        let (lo, hi) = self.range();
        x >= lo && x <= hi
    }

    /// Interpolated value, `None` outside the tabulated range.
    pub fn eval(&self, x: f64) -> Option<T> {
        if !self.contains(x) {
            return None;
        }
        let n = self.values.len();
        let t = (x - self.a) / self.h;
        let centre = t.floor() as isize - (INTERP_POINTS as isize / 2 - 1);
        let start = centre.clamp(0, (n - INTERP_POINTS) as isize) as usize;
        let s = t - start as f64;
        let mut acc = T::zero();
        for j in 0..INTERP_POINTS {
            let mut w = 1.0;
            for m in 0..INTERP_POINTS {
                if m != j {
                    w *= (s - m as f64) / (j as f64 - m as f64);
                }
            }
            acc = acc + self.values[start + j] * w;
        }
        Some(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fundamental::AlphaFn;
    use proptest::prelude::*;

    #[test]
    fn grids_partition_uniformly() {
        let g = build_grid(IntervalKind::FiniteLeft, 1.0, 3, 0.0).unwrap();
        assert_eq!(g.points(), &[0.0, 0.5, 1.0]);
        let g = build_grid(IntervalKind::LeftHalf, 0.0, 5, 2.0).unwrap();
        assert_eq!(g.points(), &[-2.0, -1.5, -1.0, -0.5, 0.0]);
        assert_eq!(g.first(), -g.truncation());
        let g = build_grid(IntervalKind::RightHalf, 0.0, 7, 3.0).unwrap();
        assert_eq!(g.last(), g.truncation());
    }

    #[test]
    fn grid_errors() {
        assert_eq!(build_grid(IntervalKind::RightHalf, 0.0, 4, 3.0), Err(Error::BadPointCount(4)));
        assert_eq!(build_grid(IntervalKind::RightHalf, 0.0, 1, 3.0), Err(Error::BadPointCount(1)));
        assert!(matches!(build_grid(IntervalKind::FiniteLeft, 0.0, 5, 1.0), Err(Error::NonPositiveSpan { .. })));
        assert!(matches!(build_grid(IntervalKind::RightHalf, 4.0, 5, 3.0), Err(Error::NonPositiveSpan { .. })));
    }

    #[test]
    fn simpson_examples() {
        let g = build_grid(IntervalKind::FiniteLeft, 1.0, 3, 0.0).unwrap();
        assert!((integrate(&[1.0, 1.0, 1.0], &g).unwrap() - 1.0).abs() < 1e-15);
        let g = build_grid(IntervalKind::FiniteLeft, 1.0, 101, 0.0).unwrap();
        let v = integrate(&g.sample(|z| z * z), &g).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-10);
        let g = build_grid(IntervalKind::LeftHalf, 0.0, 2001, 20.0).unwrap();
        let v = integrate(&g.sample(|z| (2.0 * z).exp()), &g).unwrap();
        assert!((v - 0.5).abs() < 1e-6);
        assert!(matches!(integrate(&[1.0, 2.0], &g), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn three_eighths_tail_keeps_cubic_exactness() {
        let g = Grid::lattice(0.0, 2.0, 8).unwrap();
        let v = integrate(&g.sample(|z| z * z * z - z), &g).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn differentiation_examples() {
        let g = Grid::lattice(-1.0, 2.0, 31).unwrap();
        let d = differentiate(&g.sample(|x| x), &g, 1).unwrap();
        assert!(d.iter().all(|v| (v - 1.0).abs() < 1e-10));
        let d = differentiate(&g.sample(|x| x * x), &g, 2).unwrap();
        assert!(d.iter().all(|v| (v - 2.0).abs() < 1e-8));
        let g = Grid::lattice(0.0, 1.0, 1001).unwrap();
        let d = differentiate(&g.sample(f64::sin), &g, 1).unwrap();
        for (x, v) in g.points().iter().zip(&d) {
            assert!((v - x.cos()).abs() < 1e-6);
        }
        let g = Grid::lattice(0.0, 1.0, 4).unwrap();
        assert_eq!(differentiate(&[0.0; 4], &g, 1), Err(Error::TooFewPoints { have: 4, need: 5 }));
    }

    #[test]
    fn fourth_order_differences_converge() {
        let err = |n: usize| {
            let g = Grid::lattice(0.0, 2.0, n).unwrap();
            let d = differentiate_fourth(&g.sample(|x| (1.5 * x).exp()), &g, 2).unwrap();
            g.points().iter().zip(&d).map(|(x, v)| (v - 2.25 * (1.5 * x).exp()).abs()).fold(0.0, f64::max)
        };
        let ratio = err(41) / err(81);
        assert!(ratio > 12.0, "ratio {ratio}");
    }

    #[test]
    fn pointwise_derivative() {
        let d = derivative(|x| Ok(x.sin()), 0.3, 1e-3, 1).unwrap();
        assert!((d - 0.3f64.cos()).abs() < 1e-11);
        let d = derivative(|x| Ok(x.sin()), 0.3, 1e-3, 2).unwrap();
        assert!((d + 0.3f64.sin()).abs() < 1e-7);
    }

    #[test]
    fn diagonal_limit_examples() {
        let k1 = 1.7;
        let a = AlphaFn::scalar(IntervalKind::FiniteLeft, move |_, _| k1);
        assert!((diagonal_limit(&a, 0.8, 1e-4).unwrap()[0] - k1).abs() < 1e-14);
        let a = AlphaFn::scalar(IntervalKind::LeftHalf, |x, y| x * y);
        assert!((diagonal_limit(&a, 2.0, 1e-3).unwrap()[0] - 4.0).abs() < 1e-12);
        let a = AlphaFn::scalar(IntervalKind::LeftHalf, |x, y| -2.0 * (x + y).exp() / (1.0 + (2.0 * x).exp()));
        assert!((diagonal_limit(&a, 0.0, 1e-4).unwrap()[0] + 1.0).abs() < 1e-8);
        let a = AlphaFn::scalar(IntervalKind::FiniteLeft, |_, _| 1.0);
        assert!(matches!(diagonal_limit(&a, 0.5, 1.0), Err(Error::OutOfSupport { .. })));
    }

    #[test]
    fn diagonal_limit_handles_kinks() {
        // |x - y| kink on the diagonal: the one-sided limit stays exact.
        let a = AlphaFn::scalar(IntervalKind::RightHalf, |x, y| (x - y).abs() + x);
        assert!((diagonal_limit(&a, 0.4, 1e-3).unwrap()[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn tail_check_flags_slow_decay() {
        let q = Quadrature::new(0.01, 5.0);
        let r = integrate_over(IntervalKind::RightHalf, 0.0, &q, |z| Ok((-0.5 * z).exp()), &[]);
        assert!(matches!(r, Err(Error::NonconvergentTail { .. })));
        let v: f64 = integrate_over(IntervalKind::LeftHalf, 1.0, &Quadrature::new(0.01, 20.0), |z| Ok((2.0 * z).exp()), &[])
            .unwrap();
        assert!((v - (2.0f64).exp() / 2.0).abs() < 1e-8);
    }

    #[test]
    fn breakpoints_restore_accuracy() {
        let f = |z: f64| Ok((z - 0.3).abs());
        let v: f64 = quad(f, 0.0, 1.0, 0.1, &[0.3]).unwrap();
        assert!((v - (0.045 + 0.245)).abs() < 1e-14);
        let r: f64 = quad(Ok, 1.0, 0.0, 0.1, &[]).unwrap();
        assert!((r + 0.5).abs() < 1e-14);
    }

    #[test]
    fn tabulation_interpolates() {
        let t = Tabulated::build(-1.0, 2.0, 0.01, |x| Ok((0.7 * x).sin())).unwrap();
        for &x in &[-1.0, -0.995, 0.123, 1.9999, 2.0] {
            assert!((t.eval(x).unwrap() - (0.7 * x).sin()).abs() < 1e-13);
        }
        assert!(t.eval(2.1).is_none());
    }

    proptest! {
        #[test]
        fn simpson_exact_on_cubics(c in proptest::array::uniform4(-3.0f64..3.0), n in 1usize..40) {
            let g = Grid::lattice(-0.7, 1.9, 2 * n + 1).unwrap();
            let p = |z: f64| c[0] + c[1] * z + c[2] * z * z + c[3] * z * z * z;
            let anti = |z: f64| c[0] * z + c[1] * z * z / 2.0 + c[2] * z.powi(3) / 3.0 + c[3] * z.powi(4) / 4.0;
            let exact = anti(1.9) - anti(-0.7);
            let v = integrate(&g.sample(p), &g).unwrap();
            prop_assert!((v - exact).abs() <= 1e-12 * exact.abs().max(1.0));
        }

        #[test]
        fn repeated_first_derivative_matches_second(a in 0.2f64..1.5, n in 20usize..60) {
            let g = Grid::lattice(0.0, 1.0, 2 * n + 1).unwrap();
            let f = g.sample(|x| (a * x).sin());
            let d1 = differentiate(&f, &g, 1).unwrap();
            let d11 = differentiate(&d1, &g, 1).unwrap();
            let d2 = differentiate(&f, &g, 2).unwrap();
            let h = g.spacing();
            for i in 2..g.len() - 2 {
                prop_assert!((d11[i] - d2[i]).abs() < 5.0 * h * h);
            }
        }

        #[test]
        fn diagonal_limit_of_continuous_kernel(x in 0.5f64..3.0, b in -2.0f64..2.0) {
            let a = AlphaFn::scalar(IntervalKind::FiniteLeft, move |x, y| (b * x).cos() * (y * y + 1.0));
            let h = 1e-3;
            let v = diagonal_limit(&a, x, h).unwrap()[0];
            prop_assert!((v - (b * x).cos() * (x * x + 1.0)).abs() < 10.0 * h * h);
        }
    }
}
