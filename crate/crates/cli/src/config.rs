//! Scenario files: a TOML table describing one background, its bound-state
//! edits, the sample grid and where to write results.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use darboux_core::kernels::{BoundStateSpec, Edit, Factor, Flavor, SeparableKernel};
use darboux_core::numerics::IntervalKind;
use darboux_core::reference::{ExampleId, Params};
use darboux_core::Error;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format {other} (csv or json)")),
        }
    }
}

/// On-disk form of a scenario.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub kind: Option<String>,
    #[serde(default)]
    pub verify_only: bool,
    pub source: RawSource,
    #[serde(default)]
    pub edits: Vec<RawEdit>,
    #[serde(default)]
    pub grid: RawGrid,
    pub quadrature: Option<RawQuadrature>,
    pub k_list: Option<Vec<RawComplex>>,
    #[serde(default)]
    pub output: RawOutput,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSource {
    pub example: Option<String>,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
    pub terms: Option<Vec<RawTerm>>,
}

/// One product f(x) g(y) of a separable ω.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTerm {
    pub f: RawExpSum,
    pub g: RawExpSum,
}

/// coef · Σ a e^{b x}, written as `exps = [[a, b], ...]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawExpSum {
    #[serde(default = "one")]
    pub coef: f64,
    pub exps: Vec<[f64; 2]>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawEdit {
    pub kappa: f64,
    pub c: Option<f64>,
    pub c_squared: Option<f64>,
    #[serde(default)]
    pub action: Option<String>,
    pub flavor: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawGrid {
    pub n_points: Option<usize>,
    pub truncation: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawQuadrature {
    pub step: Option<f64>,
    pub tail: Option<f64>,
}

/// A complex sample, either a number or a string such as `"1+0.5i"`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RawComplex {
    Real(f64),
    Text(String),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Where the unperturbed ω comes from.
#[derive(Debug, Clone)]
pub enum Source {
    Example { id: ExampleId, params: Params },
    Separable(SeparableKernel<1>),
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub kind: IntervalKind,
    pub source: Source,
    pub edits: Vec<BoundStateSpec>,
    pub verify_only: bool,
    pub n_points: usize,
    pub truncation: f64,
    pub step: f64,
    pub tail: Option<f64>,
    pub k_list: Vec<(String, Complex64)>,
    pub out_dir: PathBuf,
    pub format: Format,
}

/// Command-line settings that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub grid_n: Option<usize>,
    pub truncation: Option<f64>,
}

pub const DEFAULT_POINTS: usize = 201;
pub const DEFAULT_STEP: f64 = 1e-2;
/// Finite intervals are short, so a finer step is affordable and keeps the
/// jumps in the quadrature error small when the interval count changes.
pub const DEFAULT_FINITE_STEP: f64 = 2.5e-3;

pub fn parse_kind(s: &str) -> Result<IntervalKind, Error> {
    let t = s.trim().to_ascii_uppercase().replace('-', "_");
    [IntervalKind::RightHalf, IntervalKind::LeftHalf, IntervalKind::FiniteLeft]
        .into_iter()
        .find(|k| k.tag() == t)
        .ok_or_else(|| Error::InvalidSpec(format!("unknown interval kind {s} (RIGHT_HALF, LEFT_HALF, FINITE_LEFT)")))
}

pub fn parse_flavor(s: &str) -> Result<Flavor, Error> {
    let t = s.trim().to_ascii_uppercase().replace('-', "_");
    [Flavor::FullLeft, Flavor::FullRight, Flavor::Dirichlet, Flavor::NonDirichlet]
        .into_iter()
        .find(|f| f.tag() == t)
        .ok_or_else(|| {
            Error::InvalidSpec(format!("unknown flavor {s} (FULL_LEFT, FULL_RIGHT, DIRICHLET, NON_DIRICHLET)"))
        })
}

pub fn parse_complex(raw: &RawComplex) -> Result<(String, Complex64), Error> {
    match raw {
        RawComplex::Real(v) => Ok((format!("{v}"), Complex64::new(*v, 0.0))),
        RawComplex::Text(s) => {
            let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
            let z = Complex64::from_str(&t).map_err(|_| Error::InvalidSpec(format!("cannot read {s} as a complex number")))?;
            if !(z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::InvalidSpec(format!("k = {s} is not finite")));
            }
            Ok((t, z))
        }
    }
}

fn default_flavor(kind: IntervalKind, example: Option<ExampleId>) -> Result<Flavor, Error> {
    match kind {
        IntervalKind::RightHalf => Ok(Flavor::FullLeft),
        IntervalKind::LeftHalf => Ok(Flavor::FullRight),
        IntervalKind::FiniteLeft => match example {
            Some(ExampleId::Ex5_9 | ExampleId::NonDirichletGen) => Ok(Flavor::NonDirichlet),
            Some(_) => Ok(Flavor::Dirichlet),
            None => Err(Error::InvalidSpec("edits on FINITE_LEFT need a flavor (DIRICHLET or NON_DIRICHLET)".into())),
        },
    }
}

fn build_edit(raw: &RawEdit, kind: IntervalKind, example: Option<ExampleId>) -> Result<BoundStateSpec, Error> {
    let c = match (raw.c, raw.c_squared) {
        (Some(c), None) => c,
        (None, Some(c2)) if c2 >= 0.0 => c2.sqrt(),
        (None, Some(c2)) => return Err(Error::InvalidSpec(format!("c_squared must be nonnegative, got {c2}"))),
        (Some(_), Some(_)) => return Err(Error::InvalidSpec("give either c or c_squared, not both".into())),
        (None, None) => return Err(Error::InvalidSpec("an edit needs c or c_squared".into())),
    };
    let edit = match raw.action.as_deref().map(|s| s.to_ascii_lowercase()) {
        None => Edit::Add,
        Some(a) if a == "add" => Edit::Add,
        Some(a) if a == "remove" => Edit::Remove,
        Some(a) => return Err(Error::InvalidSpec(format!("unknown action {a} (add or remove)"))),
    };
    let flavor = match &raw.flavor {
        Some(f) => parse_flavor(f)?,
        None => default_flavor(kind, example)?,
    };
    if flavor.interval() != kind {
        return Err(Error::KindMismatch { expected: kind.tag(), found: flavor.interval().tag() });
    }
    BoundStateSpec::new(raw.kappa, c, edit, flavor)
}

fn exp_sum(raw: &RawExpSum) -> Result<Factor<1>, Error> {
    if raw.exps.is_empty() || raw.exps.iter().flatten().any(|v| !v.is_finite()) || !raw.coef.is_finite() {
        return Err(Error::InvalidSpec("each factor needs finite exps = [[a, b], ...]".into()));
    }
    Ok(Factor::scalar_exp(raw.coef, raw.exps.iter().map(|[a, b]| (*a, *b)).collect()))
}

impl ScenarioConfig {
    pub fn from_raw(raw: RawConfig, ov: &Overrides) -> Result<Self, Error> {
        let src = &raw.source;
        let (source, example_kind) = match (&src.example, &src.terms) {
            (Some(id), None) => {
                let id: ExampleId = id.parse()?;
                let params = Params::from_map(&src.params)?.or(id.default_params());
                // fails early on missing or degenerate parameters
                darboux_core::reference::oracle(id, &params)?;
                (Source::Example { id, params }, Some(id.kind()))
            }
            (None, Some(terms)) => {
                if !src.params.is_empty() {
                    return Err(Error::InvalidSpec("params only apply to an example source".into()));
                }
                let terms =
                    terms.iter().map(|t| Ok((exp_sum(&t.f)?, exp_sum(&t.g)?))).collect::<Result<Vec<_>, Error>>()?;
                (Source::Separable(SeparableKernel::new(terms)), None)
            }
            (None, None) => {
                return Err(Error::InvalidSpec("source needs an example id or a list of separable terms".into()))
            }
            (Some(_), Some(_)) => return Err(Error::InvalidSpec("source takes an example or terms, not both".into())),
        };
        let kind = match (&raw.kind, example_kind) {
            (Some(k), None) => parse_kind(k)?,
            (Some(k), Some(ek)) => {
                let k = parse_kind(k)?;
                ek.ensure(k)?;
                k
            }
            (None, Some(ek)) => ek,
            (None, None) => return Err(Error::InvalidSpec("a separable source needs an interval kind".into())),
        };
        let example = match &source {
            Source::Example { id, .. } => Some(*id),
            Source::Separable(_) => None,
        };
        let edits = raw.edits.iter().map(|e| build_edit(e, kind, example)).collect::<Result<Vec<_>, Error>>()?;
        if edits.is_empty() && !raw.verify_only {
            return Err(Error::InvalidSpec("no bound-state edits; add one or set verify_only = true".into()));
        }
        if !edits.is_empty() && raw.verify_only {
            return Err(Error::InvalidSpec("verify_only scenarios take no edits".into()));
        }
        if let Some(first) = edits.first() {
            if edits.iter().any(|e| e.flavor != first.flavor) {
                return Err(Error::InvalidSpec("all edits must share one flavor".into()));
            }
        }
        let n_points = ov.grid_n.or(raw.grid.n_points).unwrap_or(DEFAULT_POINTS);
        if n_points < 5 || n_points.is_multiple_of(2) {
            return Err(Error::BadPointCount(n_points));
        }
        let truncation = ov.truncation.or(raw.grid.truncation).unwrap_or(match kind {
            IntervalKind::FiniteLeft => 3.0,
            _ => 5.0,
        });
        if !(truncation > 0.0 && truncation.is_finite()) {
            return Err(Error::NonPositiveSpan { lo: 0.0, hi: truncation });
        }
        let default_step = if kind.is_infinite() { DEFAULT_STEP } else { DEFAULT_FINITE_STEP };
        let (step, tail) = match &raw.quadrature {
            Some(q) => (q.step.unwrap_or(default_step), q.tail),
            None => (default_step, None),
        };
        if !(step > 0.0 && step.is_finite()) || tail.is_some_and(|t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidSpec("quadrature step and tail must be positive".into()));
        }
        let k_list = match &raw.k_list {
            Some(ks) => ks.iter().map(parse_complex).collect::<Result<Vec<_>, Error>>()?,
            None => vec![
                ("0.5".to_string(), Complex64::new(0.5, 0.0)),
                ("1".to_string(), Complex64::new(1.0, 0.0)),
                ("2".to_string(), Complex64::new(2.0, 0.0)),
            ],
        };
        Ok(ScenarioConfig {
            kind,
            source,
            edits,
            verify_only: raw.verify_only,
            n_points,
            truncation,
            step,
            tail,
            k_list,
            out_dir: ov.out.clone().or(raw.output.dir).unwrap_or_else(|| PathBuf::from("out")),
            format: ov.format.or(raw.output.format).unwrap_or_default(),
        })
    }

    pub fn load(path: &Path, ov: &Overrides) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidSpec(format!("cannot read {}: {e}", path.display())))?;
        let raw: RawConfig = toml::from_str(&text).map_err(|e| Error::InvalidSpec(format!("{}: {e}", path.display())))?;
        ScenarioConfig::from_raw(raw, ov)
    }

    /// Scenario reproducing one catalog entry, with its own edit when it has one.
    pub fn for_example(id: ExampleId, params: &BTreeMap<String, f64>, ov: &Overrides) -> Result<Self, Error> {
        let p = Params::from_map(params)?.or(id.default_params());
        let bundle = darboux_core::reference::oracle(id, &p)?;
        let edits: Vec<RawEdit> = bundle
            .edit
            .iter()
            .map(|e| RawEdit {
                kappa: e.kappa,
                c: Some(e.c),
                c_squared: None,
                action: None,
                flavor: Some(e.flavor.tag().to_string()),
            })
            .collect();
        let raw = RawConfig {
            kind: None,
            verify_only: edits.is_empty(),
            source: RawSource { example: Some(id.name().to_string()), params: p.to_map(), terms: None },
            edits,
            grid: RawGrid::default(),
            quadrature: None,
            k_list: None,
            output: RawOutput { dir: Some(PathBuf::from("out").join(id.name())), format: None },
        };
        ScenarioConfig::from_raw(raw, ov)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig, Error> {
        ScenarioConfig::from_raw(toml::from_str(text).map_err(|e| Error::InvalidSpec(e.to_string()))?, &Overrides::default())
    }

    #[test]
    fn example_scenario_defaults() {
        let c = parse(
            r#"
            [source]
            example = "EX5_5"
            params = { kappa1 = 1.0, c1sq = 2.0, kappa2 = 2.0, c2 = 1.0 }
            [[edits]]
            kappa = 2.0
            c = 1.0
            "#,
        )
        .unwrap();
        assert_eq!(c.kind, IntervalKind::LeftHalf);
        assert_eq!(c.edits[0].flavor, Flavor::FullRight);
        assert_eq!(c.n_points, DEFAULT_POINTS);
        assert_eq!(c.k_list.len(), 3);
    }

    #[test]
    fn degenerate_and_invalid() {
        let e = parse(
            r#"
            [source]
            example = "EX5_5"
            params = { kappa1 = 1.0, c1 = 1.0, kappa2 = 1.0, c2 = 1.0 }
            [[edits]]
            kappa = 1.0
            c = 1.0
            "#,
        );
        assert!(matches!(e, Err(Error::DegenerateParams(_))));
        assert!(matches!(parse("[source]\nexample = \"EX5_6\"\n"), Err(Error::InvalidSpec(_))));
        assert!(parse("[source]\nexample = \"EX7_1\"\nverify_only = true\n").is_err());
        let e = parse("verify_only = true\n[source]\nexample = \"EX5_6\"\n[grid]\nn_points = 10\n");
        assert!(matches!(e, Err(Error::BadPointCount(10))));
    }

    #[test]
    fn separable_source_needs_kind_and_flavor() {
        let base = r#"
            [source]
            terms = [{ f = { coef = 1.0, exps = [[1.0, 1.0]] }, g = { exps = [[1.0, 1.0]] } }]
            [[edits]]
            kappa = 1.0
            c = 1.0
        "#;
        assert!(parse(base).is_err());
        let c = parse(&format!("kind = \"LEFT_HALF\"\n{base}")).unwrap();
        assert!(matches!(c.source, Source::Separable(ref k) if k.rank() == 1));
        assert!(parse(&format!("kind = \"FINITE_LEFT\"\n{base}")).is_err());
    }

    #[test]
    fn complex_samples() {
        assert_eq!(parse_complex(&RawComplex::Text("1+0.5i".into())).unwrap().1, Complex64::new(1.0, 0.5));
        assert_eq!(parse_complex(&RawComplex::Text("1.5i".into())).unwrap().1, Complex64::new(0.0, 1.5));
        assert_eq!(parse_complex(&RawComplex::Real(2.0)).unwrap().1, Complex64::new(2.0, 0.0));
        assert!(parse_complex(&RawComplex::Text("one".into())).is_err());
    }
}
