//! Closed-form catalog of the worked examples, used as golden oracles.
//!
//! Full-line examples use the norming constants c₁, c₂ and the half-line ones
//! C₁, C₂; both are stored in the `c1`, `c2` slots of [`Params`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fundamental::AlphaFn;
use crate::kernels::{BoundStateSpec, Factor, Flavor, GeneralKernel, SeparableKernel};
use crate::numerics::IntervalKind;
use crate::schrodinger::WavefunctionKind;

pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type Fn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
/// r(x; z, y).
pub type Fn3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
pub type WaveFn = Arc<dyn Fn(Complex64, f64) -> Complex64 + Send + Sync>;

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ExampleId {
    Ex5_1,
    Ex5_2,
    Ex5_3,
    Ex5_4,
    Ex5_5,
    Ex5_6,
    Ex5_7,
    Ex5_8,
    Ex5_9,
    FullLineLeftGen,
    FullLineRightGen,
    DirichletGen,
    NonDirichletGen,
}

impl ExampleId {
    pub const ALL: [ExampleId; 13] = [
        ExampleId::Ex5_1,
        ExampleId::Ex5_2,
        ExampleId::Ex5_3,
        ExampleId::Ex5_4,
        ExampleId::Ex5_5,
        ExampleId::Ex5_6,
        ExampleId::Ex5_7,
        ExampleId::Ex5_8,
        ExampleId::Ex5_9,
        ExampleId::FullLineLeftGen,
        ExampleId::FullLineRightGen,
        ExampleId::DirichletGen,
        ExampleId::NonDirichletGen,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExampleId::Ex5_1 => "EX5_1",
            ExampleId::Ex5_2 => "EX5_2",
            ExampleId::Ex5_3 => "EX5_3",
            ExampleId::Ex5_4 => "EX5_4",
            ExampleId::Ex5_5 => "EX5_5",
            ExampleId::Ex5_6 => "EX5_6",
            ExampleId::Ex5_7 => "EX5_7",
            ExampleId::Ex5_8 => "EX5_8",
            ExampleId::Ex5_9 => "EX5_9",
            ExampleId::FullLineLeftGen => "FULLLINE_LEFT_GEN",
            ExampleId::FullLineRightGen => "FULLLINE_RIGHT_GEN",
            ExampleId::DirichletGen => "DIRICHLET_GEN",
            ExampleId::NonDirichletGen => "NONDIRICHLET_GEN",
        }
    }

    pub fn kind(self) -> IntervalKind {
        match self {
            ExampleId::FullLineLeftGen => IntervalKind::RightHalf,
            ExampleId::Ex5_1
            | ExampleId::Ex5_2
            | ExampleId::Ex5_3
            | ExampleId::Ex5_4
            | ExampleId::Ex5_5
            | ExampleId::FullLineRightGen => IntervalKind::LeftHalf,
            _ => IntervalKind::FiniteLeft,
        }
    }

    /// Parameter slots the example reads.
    pub fn required(self) -> &'static [&'static str] {
        match self {
            ExampleId::Ex5_5 | ExampleId::Ex5_8 => &["kappa1", "c1", "kappa2", "c2"],
            _ => &["kappa1", "c1"],
        }
    }

    pub fn default_params(self) -> Params {
        match self {
            ExampleId::Ex5_8 => Params::new(1.0, 1.2).with_second(1.7, 0.8),
            ExampleId::Ex5_9 => Params::new(1.0, 1.0),
            ExampleId::DirichletGen | ExampleId::NonDirichletGen => Params::new(1.0, 1.0),
            ExampleId::FullLineLeftGen | ExampleId::FullLineRightGen => Params::new(1.0, 2f64.sqrt()),
            _ => Params::new(1.0, 2f64.sqrt()).with_second(2.0, 1.0),
        }
    }

    pub fn summary(self) -> &'static str {
        match self {
            ExampleId::Ex5_1 => "resolvent of a rank-one exponential kernel on (-inf, x)",
            ExampleId::Ex5_2 => "alpha of the same kernel and a false resolvent that still reconstructs alpha",
            ExampleId::Ex5_3 => "resolvent rebuilt from alpha on (-inf, x)",
            ExampleId::Ex5_4 => "wrong resolvent from a symmetric reading of alpha",
            ExampleId::Ex5_5 => "full-line Darboux step adding a second bound state",
            ExampleId::Ex5_6 => "alpha of a rank-one sinh kernel on (0, x)",
            ExampleId::Ex5_7 => "resolvent rebuilt from alpha on (0, x)",
            ExampleId::Ex5_8 => "half-line Dirichlet Darboux step adding a second bound state",
            ExampleId::Ex5_9 => "half-line non-Dirichlet step with a potential-free choice of C",
            ExampleId::FullLineLeftGen => "one bound state on zero background, left Jost solution",
            ExampleId::FullLineRightGen => "one bound state on zero background, right Jost solution",
            ExampleId::DirichletGen => "one bound state on zero background, Dirichlet regular solution",
            ExampleId::NonDirichletGen => "one bound state on zero background, Neumann regular solution",
        }
    }
}

impl fmt::Display for ExampleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExampleId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().to_ascii_uppercase().replace(['.', '-'], "_");
        ExampleId::ALL.into_iter().find(|id| id.name() == t).ok_or_else(|| Error::UnknownId(s.to_string()))
    }
}

/// Bound-state parameters (κ₁, c₁) and optionally (κ₂, c₂).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Params {
    pub kappa1: Option<f64>,
    pub c1: Option<f64>,
    pub kappa2: Option<f64>,
    pub c2: Option<f64>,
}

impl Params {
    pub fn new(kappa1: f64, c1: f64) -> Self {
        Params { kappa1: Some(kappa1), c1: Some(c1), kappa2: None, c2: None }
    }

    pub fn with_second(mut self, kappa2: f64, c2: f64) -> Self {
        self.kappa2 = Some(kappa2);
        self.c2 = Some(c2);
        self
    }

    /// Accepts `kappa1`, `kappa2`, `c1`, `c2` and the squared forms `c1sq`, `c2sq`.
    pub fn from_map(map: &BTreeMap<String, f64>) -> Result<Self> {
        let mut p = Params::default();
        for (key, &v) in map {
            p.set(key, v)?;
        }
        Ok(p)
    }

    pub fn set(&mut self, key: &str, v: f64) -> Result<()> {
        let sqrt = |v: f64| {
            if v >= 0.0 {
                Ok(v.sqrt())
            } else {
                Err(Error::InvalidSpec(format!("{key} must be nonnegative, got {v}")))
            }
        };
        match key.to_ascii_lowercase().as_str() {
            "kappa1" | "k1" => self.kappa1 = Some(v),
            "kappa2" | "k2" => self.kappa2 = Some(v),
            "c1" => self.c1 = Some(v),
            "c2" => self.c2 = Some(v),
            "c1sq" => self.c1 = Some(sqrt(v)?),
            "c2sq" => self.c2 = Some(sqrt(v)?),
            _ => return Err(Error::InvalidSpec(format!("unknown parameter {key}"))),
        }
        Ok(())
    }

    /// Fills unset slots from `other`.
    pub fn or(self, other: Params) -> Params {
        Params {
            kappa1: self.kappa1.or(other.kappa1),
            c1: self.c1.or(other.c1),
            kappa2: self.kappa2.or(other.kappa2),
            c2: self.c2.or(other.c2),
        }
    }

    pub fn to_map(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        for (k, v) in [("kappa1", self.kappa1), ("c1", self.c1), ("kappa2", self.kappa2), ("c2", self.c2)] {
            if let Some(v) = v {
                m.insert(k.to_string(), v);
            }
        }
        m
    }

    fn get(&self, key: &str) -> Option<f64> {
        match key {
            "kappa1" => self.kappa1,
            "c1" => self.c1,
            "kappa2" => self.kappa2,
            "c2" => self.c2,
            _ => None,
        }
    }
}

/// Named closed-form evaluators of one example; absent entries are not
/// part of that example.
#[derive(Clone)]
pub struct OracleBundle {
    pub id: ExampleId,
    pub params: Params,
    pub kind: IntervalKind,
    pub wavefunction_kind: Option<WavefunctionKind>,
    pub omega: Option<Fn2>,
    /// Separable form of ω when one exists.
    pub omega_separable: Option<SeparableKernel<1>>,
    pub omega_kink: bool,
    pub alpha: Option<Fn2>,
    pub resolvent: Option<Fn3>,
    pub false_resolvent: Option<Fn3>,
    /// Bound-state edit applied on top of the unperturbed data.
    pub edit: Option<BoundStateSpec>,
    pub n: Option<Fn1>,
    pub q: Option<Fn1>,
    pub gtilde: Option<Fn2>,
    pub gamma: Option<Fn1>,
    pub alpha_tilde: Option<Fn2>,
    pub u: Option<Fn1>,
    pub u_tilde: Option<Fn1>,
    pub psi: Option<WaveFn>,
    pub psi_tilde: Option<WaveFn>,
}

impl fmt::Debug for OracleBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OracleBundle").field("id", &self.id).field("params", &self.params).finish_non_exhaustive()
    }
}

impl OracleBundle {
    fn empty(id: ExampleId, params: Params) -> Self {
        OracleBundle {
            id,
            params,
            kind: id.kind(),
            wavefunction_kind: None,
            omega: None,
            omega_separable: None,
            omega_kink: false,
            alpha: None,
            resolvent: None,
            false_resolvent: None,
            edit: None,
            n: None,
            q: None,
            gtilde: None,
            gamma: None,
            alpha_tilde: None,
            u: None,
            u_tilde: None,
            psi: None,
            psi_tilde: None,
        }
    }

    /// Names of the evaluators present, in a fixed order.
    pub fn available(&self) -> Vec<&'static str> {
        let flags = [
            ("omega", self.omega.is_some()),
            ("alpha", self.alpha.is_some()),
            ("resolvent", self.resolvent.is_some()),
            ("false_resolvent", self.false_resolvent.is_some()),
            ("n", self.n.is_some()),
            ("q", self.q.is_some()),
            ("gtilde", self.gtilde.is_some()),
            ("Gamma", self.gamma.is_some()),
            ("alpha_tilde", self.alpha_tilde.is_some()),
            ("u", self.u.is_some()),
            ("u_tilde", self.u_tilde.is_some()),
            ("psi", self.psi.is_some()),
            ("psi_tilde", self.psi_tilde.is_some()),
        ];
        flags.into_iter().filter(|(_, on)| *on).map(|(n, _)| n).collect()
    }

    /// ω as a general kernel, flagged when it kinks on the diagonal.
    pub fn omega_kernel(&self) -> Option<GeneralKernel<1>> {
        let w = self.omega.clone()?;
        let k = GeneralKernel::scalar(move |x, y| w(x, y));
        Some(if self.omega_kink { k.with_diagonal_kink() } else { k })
    }

    /// The closed-form unperturbed α as a kernel.
    pub fn alpha_kernel(&self) -> Option<AlphaFn<1>> {
        let a = self.alpha.clone()?;
        Some(AlphaFn::scalar(self.kind, move |x, y| a(x, y)))
    }

    pub fn alpha_tilde_kernel(&self) -> Option<AlphaFn<1>> {
        let a = self.alpha_tilde.clone()?;
        Some(AlphaFn::scalar(self.kind, move |x, y| a(x, y)))
    }
}

fn required(id: ExampleId, p: &Params, key: &str) -> Result<f64> {
    match p.get(key) {
        Some(v) if v > 0.0 && v.is_finite() => Ok(v),
        Some(v) => Err(Error::InvalidSpec(format!("{id} needs {key} > 0, got {v}"))),
        None => Err(Error::InvalidSpec(format!("{id} needs parameter {key}"))),
    }
}

fn f1(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Option<Fn1> {
    Some(Arc::new(f))
}

fn f2(f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static) -> Option<Fn2> {
    Some(Arc::new(f))
}

fn f3(f: impl Fn(f64, f64, f64) -> f64 + Send + Sync + 'static) -> Option<Fn3> {
    Some(Arc::new(f))
}

fn wave(f: impl Fn(Complex64, f64) -> Complex64 + Send + Sync + 'static) -> Option<WaveFn> {
    Some(Arc::new(f))
}

fn sinc(k: Complex64, x: f64) -> Complex64 {
    WavefunctionKind::RegularDirichlet.seed(k, x)
}

/// Builds the closed-form bundle of `id` at `params`.
pub fn oracle(id: ExampleId, params: &Params) -> Result<OracleBundle> {
    for key in id.required() {
        required(id, params, key)?;
    }
    let mut b = OracleBundle::empty(id, *params);
    match id {
        ExampleId::Ex5_1 | ExampleId::Ex5_2 | ExampleId::Ex5_3 | ExampleId::Ex5_4 | ExampleId::Ex5_5 => {
            exponential_left(&mut b, params)?
        }
        ExampleId::Ex5_6 | ExampleId::Ex5_7 | ExampleId::Ex5_8 => sinh_half_line(&mut b, params)?,
        ExampleId::Ex5_9 => constant_alpha(&mut b, params)?,
        ExampleId::FullLineLeftGen | ExampleId::FullLineRightGen => free_full_line(&mut b, params)?,
        ExampleId::DirichletGen => free_dirichlet(&mut b, params)?,
        ExampleId::NonDirichletGen => free_neumann(&mut b, params)?,
    }
    Ok(b)
}

fn check_distinct(id: ExampleId, k1: f64, k2: f64) -> Result<()> {
    if (k1 - k2).abs() <= 1e-12 * k1.abs().max(k2.abs()) {
        return Err(Error::DegenerateParams(format!("{id} needs kappa1 != kappa2, got {k1} and {k2}")));
    }
    Ok(())
}

fn exponential_left(b: &mut OracleBundle, p: &Params) -> Result<()> {
    let id = b.id;
    let k1 = required(id, p, "kappa1")?;
    let c1 = required(id, p, "c1")?;
    let c1s = c1 * c1;
    let a = c1s / (2.0 * k1);
    let den = move |t: f64| 1.0 + a * (2.0 * k1 * t).exp();

    b.omega = f2(move |x, y| c1s * (k1 * (x + y)).exp());
    b.omega_separable =
        Some(SeparableKernel::new(vec![(Factor::scalar_exp(c1, vec![(1.0, k1)]), Factor::scalar_exp(c1, vec![(1.0, k1)]))]));
    let alpha = move |x: f64, y: f64| -c1s * (k1 * (x + y)).exp() / den(x);
    let resolvent = move |x: f64, z: f64, y: f64| -c1s * (k1 * (z + y)).exp() / den(x);
    match id {
        ExampleId::Ex5_1 => b.resolvent = f3(resolvent),
        ExampleId::Ex5_2 => {
            b.alpha = f2(alpha);
            b.resolvent = f3(resolvent);
            b.false_resolvent = f3(move |_x, z, y| -c1s * (k1 * (z + y)).exp() / den(z).powi(2));
        }
        ExampleId::Ex5_3 => {
            b.alpha = f2(alpha);
            b.resolvent = f3(resolvent);
        }
        ExampleId::Ex5_4 => {
            b.alpha = f2(alpha);
            b.resolvent = f3(resolvent);
            b.false_resolvent = f3(move |x, z, y| {
                let m = if y < z { z } else { y };
                let lg = |t: f64| (c1s * (2.0 * k1 * t).exp() + 2.0 * k1).ln();
                c1s * (k1 * (z + y)).exp() * (-1.0 + lg(x) - lg(m)) / den(z)
            });
        }
        _ => {
            let k2 = required(id, p, "kappa2")?;
            let c2 = required(id, p, "c2")?;
            check_distinct(id, k1, k2)?;
            b.alpha = f2(alpha);
            b.resolvent = f3(resolvent);
            full_line_two_states(b, k1, c1, k2, c2)?;
        }
    }
    Ok(())
}

fn full_line_two_states(b: &mut OracleBundle, k1: f64, c1: f64, k2: f64, c2: f64) -> Result<()> {
    let (c1s, c2s) = (c1 * c1, c2 * c2);
    let a = c1s / (2.0 * k1);
    let den = move |t: f64| 1.0 + a * (2.0 * k1 * t).exp();
    let sp = k1 + k2;
    let dm = k1 - k2;
    b.wavefunction_kind = Some(WavefunctionKind::JostRight);
    b.edit = Some(BoundStateSpec::add(k2, c2, Flavor::FullRight)?);
    b.u = f1(move |x| -4.0 * c1s * k1 * (2.0 * k1 * x).exp() / den(x).powi(2));
    b.psi = wave(move |k, x| {
        let e = (-I * k * x).exp();
        e * (1.0 - I * c1s * (2.0 * k1 * x).exp() / ((k + I * k1) * den(x)))
    });
    let nq = move |t: f64| c2 * (k2 * t).exp() - c1s * c2 * ((2.0 * k1 + k2) * t).exp() / (sp * den(t));
    b.n = f1(nq);
    b.q = f1(nq);
    b.gtilde = f2(move |x, y| c2 * (k2 * y).exp() - c1s * c2 * (k1 * (x + y) + k2 * x).exp() / (sp * den(x)));
    b.gamma = f1(move |x| {
        let e1 = (2.0 * k1 * x).exp();
        1.0 + c2s * (2.0 * k2 * x).exp() * (c1s * dm * dm * e1 + 2.0 * k1 * sp * sp)
            / (2.0 * k2 * sp * sp * (c1s * e1 + 2.0 * k1))
    });
    let q3 = move |x: f64| {
        2.0 * k1 * sp * sp * (c2s * (2.0 * k2 * x).exp() + 2.0 * k2)
            + c1s * (2.0 * k1 * x).exp() * (c2s * (2.0 * k2 * x).exp() * dm * dm + 2.0 * k2 * sp * sp)
    };
    b.alpha_tilde = f2(move |x, y| {
        let q1 = 4.0 * sp * sp * k1 * k2 * (c1s * (k1 * (x + y)).exp() + c2s * (k2 * (x + y)).exp());
        let q2 = 2.0
            * (k1 * k1 - k2 * k2)
            * c1s
            * c2s
            * (k1 * (2.0 * k2 * x + k1 * (x + y)).exp() - k2 * (2.0 * k1 * x + k2 * (x + y)).exp());
        -(q1 + q2) / q3(x)
    });
    b.psi_tilde = wave(move |k, x| {
        let e1 = (2.0 * k1 * x).exp();
        let e2 = (2.0 * k2 * x).exp();
        let e12 = (2.0 * sp * x).exp();
        let q4 = -2.0 * I * k * c1s * c2s * sp * dm * dm * e12;
        let q5 = 4.0 * k1 * k2 * sp * sp * ((k1 - I * k) * c2s * e2 + (k2 - I * k) * c1s * e1);
        let q6 = c1s * c2s * dm * dm * e12 + 2.0 * sp * sp * (k1 * c2s * e2 + k2 * c1s * e1 + 2.0 * k1 * k2);
        (-I * k * x).exp() * (1.0 + (q4 + q5) / ((k + I * k1) * (k + I * k2) * q6))
    });
    b.u_tilde = f1(move |x| {
        let q7 = 4.0 * c2s * k1 * k1 * k2.powi(3) * sp * sp * (2.0 * k2 * x).exp()
            + c1s * c1s * c2s * k2.powi(3) * dm * dm * ((4.0 * k1 + 2.0 * k2) * x).exp();
        let q8 = 4.0 * c1s * k1.powi(3) * k2 * k2 * sp * sp * (2.0 * k1 * x).exp()
            + 4.0 * c1s * c2s * k1 * k2 * (k1 * k1 - k2 * k2).powi(2) * (2.0 * sp * x).exp()
            + c1s * c2s * c2s * k1.powi(3) * dm * dm * ((2.0 * k1 + 4.0 * k2) * x).exp();
        -16.0 * sp * sp * (q7 + q8) / q3(x).powi(2)
    });
    Ok(())
}

fn sinh_half_line(b: &mut OracleBundle, p: &Params) -> Result<()> {
    let id = b.id;
    let k1 = required(id, p, "kappa1")?;
    let c1 = required(id, p, "c1")?;
    let c1s = c1 * c1;
    let d = move |t: f64| 4.0 * k1.powi(3) - 2.0 * c1s * k1 * t + c1s * (2.0 * k1 * t).sinh();
    b.omega = f2(move |x, y| c1s / (k1 * k1) * (k1 * x).sinh() * (k1 * y).sinh());
    let fac = Factor::scalar_exp(c1 / k1, vec![(0.5, k1), (-0.5, -k1)]);
    b.omega_separable = Some(SeparableKernel::new(vec![(fac.clone(), fac)]));
    b.alpha = f2(move |x, y| {
        let s = c1s / (k1 * k1);
        -s * (k1 * x).sinh() * (k1 * y).sinh() / (1.0 + s * ((2.0 * k1 * x).sinh() / (4.0 * k1) - x / 2.0))
    });
    if id == ExampleId::Ex5_6 {
        return Ok(());
    }
    b.resolvent = f3(move |x, z, y| -4.0 * c1s * k1 * (k1 * z).sinh() * (k1 * y).sinh() / d(x));
    if id == ExampleId::Ex5_7 {
        return Ok(());
    }
    let k2 = required(id, p, "kappa2")?;
    let c2 = required(id, p, "c2")?;
    check_distinct(id, k1, k2)?;
    let c2s = c2 * c2;
    let dk = k1 * k1 - k2 * k2;
    b.wavefunction_kind = Some(WavefunctionKind::RegularDirichlet);
    b.edit = Some(BoundStateSpec::add(k2, c2, Flavor::Dirichlet)?);
    b.psi = wave(move |k, x| {
        let sh = (k1 * x).sinh();
        let bracket = if x == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            k1 * (k1 * x).cosh() / sh * (k * x).sin() - k * (k * x).cos()
        };
        let corr = 4.0 * c1s * k1 * sh * sh * bracket / (k * (k * k + k1 * k1) * d(x));
        sinc(k, x) - corr
    });
    b.u = f1(move |x| {
        let (s, c) = ((k1 * x).sinh(), (k1 * x).cosh());
        32.0 * c1s * k1 * k1 * s * ((-2.0 * k1.powi(3) + c1s * k1 * x) * c - c1s * s) / d(x).powi(2)
    });
    let nq = move |t: f64| {
        c2 * (k2 * t).sinh() / k2
            - 4.0 * c1s * c2 * k1 * (k1 * t).sinh()
                * (k1 * (k1 * t).cosh() * (k2 * t).sinh() - k2 * (k1 * t).sinh() * (k2 * t).cosh())
                / (dk * (4.0 * k1.powi(3) * k2 - 2.0 * c1s * k1 * k2 * t + c1s * k2 * (2.0 * k1 * t).sinh()))
    };
    b.n = f1(nq);
    b.q = f1(nq);
    b.gtilde = f2(move |x, y| {
        let q10 = 4.0 * c1s * c2 * k1 * (k1 * y).sinh()
            * (k2 * (k1 * x).sinh() * (k2 * x).cosh() - k1 * (k1 * x).cosh() * (k2 * x).sinh());
        let q11 = c2 * dk * (k2 * y).sinh() * d(x);
        let q12 = k2 * dk * d(x);
        (q10 + q11) / q12
    });
    let q13 = move |x: f64| {
        16.0 * c1s * c2s * k1 * k2
            * (k2 * k2 * (k1 * x).sinh().powi(2) * (k2 * x).cosh().powi(2)
                + k1 * k1 * (k1 * x).cosh().powi(2) * (k2 * x).sinh().powi(2))
    };
    let quartic = k1.powi(4) + 6.0 * k1 * k1 * k2 * k2 + k2.powi(4);
    b.gamma = f1(move |x| {
        let q14 = 2.0 * c2s * k1 * dk * dk * (2.0 * k1 * k1 - c1s * x) * (2.0 * k2 * x - (2.0 * k2 * x).sinh());
        let q15 = c1s * c2s * (2.0 * k1 * x).sinh() * (2.0 * k2 * dk * dk * x - quartic * (2.0 * k2 * x).sinh());
        let q16 = 4.0 * k2.powi(3) * dk * dk * d(x);
        1.0 - (q13(x) + q14 + q15) / q16
    });
    b.alpha_tilde = f2(move |x, y| {
        let q17 = 4.0 * c1s * k1 * (k1 * x).sinh() * (k1 * y).sinh();
        let q18 = 16.0 * c1s * c2s * k1 * k2 * k2 * (k1 * x).sinh().powi(2) * (k2 * x).cosh();
        let q19 = (k2 * x).sinh()
            * (8.0 * c2s * k1 * k2 * dk * (2.0 * k1 * k1 - c1s * x)
                - 4.0 * c1s * c2s * k2 * (k1 * k1 + k2 * k2) * (2.0 * k1 * x).sinh());
        let q20 = 4.0 * c1s * k1 * (k1 * y).sinh()
            * (k2 * (k1 * x).sinh() * (k2 * x).cosh() - k1 * (k1 * x).cosh() * (k2 * x).sinh());
        let q21 = dk * (k2 * y).sinh() * d(x);
        let q22 = 2.0 * k1 * dk * dk * (2.0 * k1 * k1 - c1s * x)
            * (4.0 * k2.powi(3) - 2.0 * c2s * k2 * x + c2s * (2.0 * k2 * x).sinh());
        let q23 = c1s * (2.0 * k1 * x).sinh()
            * (2.0 * k2 * dk * dk * (2.0 * k2 * k2 - c2s * x) + c2s * quartic * (2.0 * k2 * x).sinh());
        let bb = q13(x) - q22 - q23;
        (-q17 * bb + (q18 + q19) * (q20 + q21)) / (d(x) * bb)
    });
    Ok(())
}

fn constant_alpha(b: &mut OracleBundle, p: &Params) -> Result<()> {
    let id = b.id;
    let k1 = required(id, p, "kappa1")?;
    let c1 = required(id, p, "c1")?;
    let c1s = c1 * c1;
    b.wavefunction_kind = Some(WavefunctionKind::RegularNonDirichlet);
    b.edit = Some(BoundStateSpec::add(k1, c1, Flavor::NonDirichlet)?);
    b.omega = f2(move |x, y| -k1 / 2.0 * ((-k1 * (x + y)).exp() + (-k1 * (x - y).abs()).exp()));
    b.omega_kink = true;
    b.alpha = f2(move |_, _| k1);
    b.resolvent = f3(move |x, z, y| k1 + k1 * k1 * (x - z.max(y)));
    b.false_resolvent = f3(move |x, _z, y| k1 / (k1 * x).sinh() * ((k1 * x).exp() - (k1 * y).cosh()));
    b.psi = wave(move |k, x| (k * x).cos() + k1 * sinc(k, x));
    b.u = f1(|_| 0.0);
    let nq = move |t: f64| c1 * (k1 * t).cosh() + c1 * (k1 * t).sinh();
    b.n = f1(nq);
    b.q = f1(nq);
    b.gtilde = f2(move |x, _| c1 * (k1 * x).exp());
    b.gamma = f1(move |x| 1.0 + c1s * (k1 * x).exp() * (k1 * x).sinh() / k1);
    let at = move |x: f64| {
        let e = (k1 * x).exp();
        k1 * (k1 - c1s * e * (k1 * x).cosh()) / (k1 + c1s * e * (k1 * x).sinh())
    };
    b.alpha_tilde = f2(move |x, _| at(x));
    b.psi_tilde = wave(move |k, x| (k * x).cos() + sinc(k, x) * at(x));
    b.u_tilde = f1(move |x| {
        let e = (k1 * x).exp();
        2.0 * c1s * k1 * k1 * e * e * (c1s - 2.0 * k1) / (k1 + c1s * e * (k1 * x).sinh()).powi(2)
    });
    Ok(())
}

fn set_free_background(b: &mut OracleBundle, kind: WavefunctionKind) {
    b.wavefunction_kind = Some(kind);
    b.omega = f2(|_, _| 0.0);
    b.omega_separable = Some(SeparableKernel::zero());
    b.alpha = f2(|_, _| 0.0);
    b.resolvent = f3(|_, _, _| 0.0);
    b.u = f1(|_| 0.0);
    b.psi = wave(move |k, x| kind.seed(k, x));
}

fn free_full_line(b: &mut OracleBundle, p: &Params) -> Result<()> {
    let id = b.id;
    let k1 = required(id, p, "kappa1")?;
    let c1 = required(id, p, "c1")?;
    let c1s = c1 * c1;
    let bb = c1s / (2.0 * k1);
    // s = −1 mirrors the left construction onto (−∞, x)
    let (s, wk, flavor) = if id == ExampleId::FullLineLeftGen {
        (1.0, WavefunctionKind::JostLeft, Flavor::FullLeft)
    } else {
        (-1.0, WavefunctionKind::JostRight, Flavor::FullRight)
    };
    set_free_background(b, wk);
    b.edit = Some(BoundStateSpec::add(k1, c1, flavor)?);
    let gamma = move |x: f64| 1.0 + bb * (-2.0 * s * k1 * x).exp();
    let nq = move |t: f64| c1 * (-s * k1 * t).exp();
    b.n = f1(nq);
    b.q = f1(nq);
    b.gtilde = f2(move |_, y| nq(y));
    b.gamma = f1(gamma);
    b.alpha_tilde = f2(move |x, y| -c1s * (-s * k1 * (x + y)).exp() / gamma(x));
    b.u_tilde = f1(move |x| -8.0 * k1 * k1 * bb * (-2.0 * s * k1 * x).exp() / gamma(x).powi(2));
    b.psi_tilde = wave(move |k, x| {
        let e = (s * I * k * x).exp();
        e - c1s * (-2.0 * s * k1 * x).exp() * e / ((k1 - I * k) * gamma(x))
    });
    Ok(())
}

fn free_dirichlet(b: &mut OracleBundle, p: &Params) -> Result<()> {
    let id = b.id;
    let k1 = required(id, p, "kappa1")?;
    let c1 = required(id, p, "c1")?;
    let c1s = c1 * c1;
    set_free_background(b, WavefunctionKind::RegularDirichlet);
    b.edit = Some(BoundStateSpec::add(k1, c1, Flavor::Dirichlet)?);
    let d = move |t: f64| 4.0 * k1.powi(3) - 2.0 * c1s * k1 * t + c1s * (2.0 * k1 * t).sinh();
    let s = c1s / (k1 * k1);
    let gamma = move |x: f64| 1.0 + s * ((2.0 * k1 * x).sinh() / (4.0 * k1) - x / 2.0);
    let nq = move |t: f64| c1 * (k1 * t).sinh() / k1;
    b.n = f1(nq);
    b.q = f1(nq);
    b.gtilde = f2(move |_, y| nq(y));
    b.gamma = f1(gamma);
    b.alpha_tilde = f2(move |x, y| -s * (k1 * x).sinh() * (k1 * y).sinh() / gamma(x));
    b.u_tilde = f1(move |x| {
        let (sh, ch) = ((k1 * x).sinh(), (k1 * x).cosh());
        32.0 * c1s * k1 * k1 * sh * ((-2.0 * k1.powi(3) + c1s * k1 * x) * ch - c1s * sh) / d(x).powi(2)
    });
    b.psi_tilde = wave(move |k, x| {
        let sh = (k1 * x).sinh();
        if x == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let bracket = k1 * (k1 * x).cosh() / sh * (k * x).sin() - k * (k * x).cos();
        sinc(k, x) - 4.0 * c1s * k1 * sh * sh * bracket / (k * (k * k + k1 * k1) * d(x))
    });
    Ok(())
}

fn free_neumann(b: &mut OracleBundle, p: &Params) -> Result<()> {
    let id = b.id;
    let k1 = required(id, p, "kappa1")?;
    let c1 = required(id, p, "c1")?;
    let c1s = c1 * c1;
    set_free_background(b, WavefunctionKind::RegularNonDirichlet);
    b.edit = Some(BoundStateSpec::add(k1, c1, Flavor::NonDirichlet)?);
    let gamma = move |x: f64| 1.0 + c1s * (x / 2.0 + (2.0 * k1 * x).sinh() / (4.0 * k1));
    let nq = move |t: f64| c1 * (k1 * t).cosh();
    b.n = f1(nq);
    b.q = f1(nq);
    b.gtilde = f2(move |_, y| nq(y));
    b.gamma = f1(gamma);
    b.alpha_tilde = f2(move |x, y| -c1s * (k1 * x).cosh() * (k1 * y).cosh() / gamma(x));
    b.u_tilde = f1(move |x| {
        let g = gamma(x);
        let g1 = c1s * (k1 * x).cosh().powi(2);
        let g2 = c1s * k1 * (2.0 * k1 * x).sinh();
        -2.0 * (g2 / g - (g1 / g).powi(2))
    });
    b.psi_tilde = wave(move |k, x| {
        let (sh, ch) = ((k1 * x).sinh(), (k1 * x).cosh());
        let inner = k * (k * x).sin() * ch + k1 * (k * x).cos() * sh;
        (k * x).cos() - c1s * ch * inner / ((k * k + k1 * k1) * gamma(x))
    });
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_examples() {
        let p = Params::new(1.0, 2f64.sqrt()).with_second(2.0, 1.0);
        let b = oracle(ExampleId::Ex5_5, &p).unwrap();
        assert!((b.u.unwrap()(0.0) + 2.0).abs() < 1e-15);
        let b = oracle(ExampleId::Ex5_9, &Params::new(1.0, 1.0)).unwrap();
        let g = b.gamma.unwrap()(1.0);
        assert!((g - (1.0 + 1f64.exp() * 1f64.sinh())).abs() < 1e-14);
        assert!((g - 4.19453).abs() < 1e-5);
        let b = oracle(ExampleId::Ex5_1, &Params::new(1.0, 2f64.sqrt())).unwrap();
        let r = b.resolvent.unwrap()(0.0, -1.0, -2.0);
        assert!((r + (-3f64).exp()).abs() < 1e-15);
        assert!((r + 0.0497871).abs() < 1e-7);
    }

    #[test]
    fn ids_and_errors() {
        assert_eq!("ex5_5".parse::<ExampleId>().unwrap(), ExampleId::Ex5_5);
        assert_eq!("NONDIRICHLET_GEN".parse::<ExampleId>().unwrap(), ExampleId::NonDirichletGen);
        assert!(matches!("EX6_1".parse::<ExampleId>(), Err(Error::UnknownId(_))));
        let p = Params::new(1.0, 1.0).with_second(1.0, 1.0);
        assert!(matches!(oracle(ExampleId::Ex5_5, &p), Err(Error::DegenerateParams(_))));
        assert!(matches!(oracle(ExampleId::Ex5_8, &p), Err(Error::DegenerateParams(_))));
        assert!(matches!(oracle(ExampleId::Ex5_5, &Params::new(1.0, 1.0)), Err(Error::InvalidSpec(_))));
        assert!(matches!(oracle(ExampleId::Ex5_9, &Params::new(-1.0, 1.0)), Err(Error::InvalidSpec(_))));
        for id in ExampleId::ALL {
            assert!(oracle(id, &id.default_params()).is_ok(), "{id}");
        }
    }

    #[test]
    fn params_from_map() {
        let mut m = BTreeMap::new();
        m.insert("kappa1".to_string(), 1.0);
        m.insert("c1sq".to_string(), 2.0);
        let p = Params::from_map(&m).unwrap();
        assert_eq!(p.c1, Some(2f64.sqrt()));
        m.insert("zeta".to_string(), 1.0);
        assert!(Params::from_map(&m).is_err());
        let q = Params::new(3.0, 1.0).or(ExampleId::Ex5_5.default_params());
        assert_eq!((q.kappa1, q.kappa2), (Some(3.0), Some(2.0)));
    }

    #[test]
    fn potential_free_choice() {
        let k1 = 1.3;
        let b = oracle(ExampleId::Ex5_9, &Params::new(k1, (2.0 * k1).sqrt())).unwrap();
        let ut = b.u_tilde.unwrap();
        let pt = b.psi_tilde.unwrap();
        for &x in &[0.0, 0.5, 2.0] {
            assert!(ut(x).abs() < 1e-14);
            let k = Complex64::new(1.7, 0.0);
            let exact = (k * x).cos() - k1 * (k * x).sin() / k;
            assert!((pt(k, x) - exact).norm() < 1e-12);
        }
    }

    #[test]
    fn generic_dirichlet_matches_sinh_background() {
        let p = Params::new(1.1, 0.7);
        let g = oracle(ExampleId::DirichletGen, &p).unwrap();
        let e = oracle(ExampleId::Ex5_6, &p).unwrap();
        let (at, a) = (g.alpha_tilde.unwrap(), e.alpha.unwrap());
        for &(x, y) in &[(0.5, 0.2), (2.0, 1.9)] {
            assert!((at(x, y) - a(x, y)).abs() < 1e-14);
        }
    }
}
