//! Scenario files: what to compute, on which base, with which run controls.

use std::path::{Path, PathBuf};

use lyap_core::base::{BaseSystem, Potential, Scalar};
use lyap_core::cocycle::{Cocycle, LyapunovOptions};
use lyap_core::linalg::Mat2;
use lyap_core::search;
use lyap_core::C64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Every top-level scenario field, in declaration order.
pub const FIELDS: [&str; 12] = [
    "schema_version",
    "operation",
    "base",
    "potential",
    "cocycle",
    "params",
    "seed",
    "samples",
    "n",
    "tol",
    "out",
    "threads",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Operation {
    Lyapunov,
    Certify,
    Bands,
    Ids,
    Phi,
    AbCheck,
    Search,
    QuantitaScan,
    Reproduce,
}

/// A cocycle over the scenario's base.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CocycleSpec {
    /// The same matrix at every point, given as rows.
    Constant { matrix: [[Scalar; 2]; 2] },
    /// `[[E − v(x), −1], [1, 0]]`.
    Schrodinger {
        potential: Potential,
        #[serde(default = "zero")]
        energy: Scalar,
    },
    /// `[[u(x), −1], [1, 0]]`.
    Symbol { potential: Potential },
    /// `R_{2π(1−α)}` over the rotation by `α`.
    ResonantRotation,
}

fn zero() -> Scalar {
    Scalar::Real(0.0)
}

impl CocycleSpec {
    /// The cocycle, with the energy of a Schrödinger spec replaced by
    /// `energy` when given.
    pub fn build(&self, base: &BaseSystem, energy: Option<C64>) -> Result<Cocycle, CliError> {
        Ok(match self {
            CocycleSpec::Constant { matrix } => {
                let m = Mat2 { a: matrix[0][0].into(), b: matrix[0][1].into(), c: matrix[1][0].into(), d: matrix[1][1].into() };
                Cocycle::constant(base.clone(), m)?
            }
            CocycleSpec::Schrodinger { potential, energy: e } => {
                Cocycle::schrodinger(base.clone(), potential, energy.unwrap_or((*e).into()))?
            }
            CocycleSpec::Symbol { potential } => Cocycle::with_symbol(base.clone(), potential.clone())?,
            CocycleSpec::ResonantRotation => search::resonant_rotation_cocycle(base)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operation: Option<Operation>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base: Option<BaseSystem>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Potential>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cocycle: Option<CocycleSpec>,
    /// Operation-specific parameters, validated by the operation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

/// Values given on the command line; each one replaces the scenario's.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub base: Option<String>,
    pub potential: Option<String>,
    pub cocycle: Option<String>,
    pub params: Option<String>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub n: Option<usize>,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
}

fn inline<T: DeserializeOwned>(flag: &str, text: &Option<String>) -> Result<Option<T>, CliError> {
    text.as_deref()
        .map(|t| serde_json::from_str(t).map_err(|e| CliError::Schema(format!("--{flag}: {e}"))))
        .transpose()
}

impl Scenario {
    pub fn empty() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            operation: None,
            base: None,
            potential: None,
            cocycle: None,
            params: None,
            seed: None,
            samples: None,
            n: None,
            tol: None,
            out: None,
            threads: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| CliError::Schema(e.to_string()))?;
        if s.schema_version != SCHEMA_VERSION {
            return Err(CliError::Schema(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                s.schema_version
            )));
        }
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Schema(format!("cannot read scenario {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Schema(m) => CliError::Schema(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Loads `path` (or starts empty), applies the overrides and checks that
    /// the scenario is meant for `op`.
    pub fn resolve(path: Option<&Path>, op: Operation, o: &Overrides) -> Result<Self, CliError> {
        let mut s = match path {
            Some(p) => Self::load(p)?,
            None => Self::empty(),
        };
        match s.operation {
            Some(declared) if declared != op => {
                return Err(CliError::Schema(format!("scenario is for {declared:?}, not {op:?}")));
            }
            _ => s.operation = Some(op),
        }
        if let Some(b) = inline("base", &o.base)? {
            s.base = Some(b);
        }
        if let Some(p) = inline("potential", &o.potential)? {
            s.potential = Some(p);
        }
        if let Some(c) = inline("cocycle", &o.cocycle)? {
            s.cocycle = Some(c);
        }
        if let Some(p) = inline("params", &o.params)? {
            s.params = Some(p);
        }
        s.seed = o.seed.or(s.seed);
        s.samples = o.samples.or(s.samples);
        s.n = o.n.or(s.n);
        s.tol = o.tol.or(s.tol);
        s.out = o.out.clone().or(s.out);
        s.threads = o.threads.or(s.threads);
        if let Some(b) = &s.base {
            b.validate().map_err(|e| CliError::Schema(format!("base: {e}")))?;
        }
        if s.tol.is_some_and(|t| !(t > 0.0)) {
            return Err(CliError::Schema("tol must be positive".into()));
        }
        if s.threads == Some(0) || s.samples == Some(0) || s.n == Some(0) {
            return Err(CliError::Schema("threads, samples and n must be positive".into()));
        }
        Ok(s)
    }

    /// SHA-256 of the scenario without the fields that cannot change
    /// results (`out`, `threads`).
    pub fn hash(&self) -> String {
        let canonical = Scenario { out: None, threads: None, ..self.clone() };
        let bytes = serde_json::to_vec(&canonical).expect("scenarios serialize");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn operation(&self) -> Operation {
        self.operation.expect("resolved scenarios carry their operation")
    }

    pub fn params<T: DeserializeOwned>(&self) -> Result<T, CliError> {
        let v = self.params.clone().unwrap_or_else(|| serde_json::json!({}));
        serde_json::from_value(v).map_err(|e| CliError::Schema(format!("params: {e}")))
    }

    pub fn base(&self) -> Result<&BaseSystem, CliError> {
        self.base.as_ref().ok_or_else(|| CliError::Schema("this operation needs a base".into()))
    }

    pub fn potential(&self) -> Result<&Potential, CliError> {
        self.potential.as_ref().ok_or_else(|| CliError::Schema("this operation needs a potential".into()))
    }

    pub fn cocycle_spec(&self) -> Result<&CocycleSpec, CliError> {
        self.cocycle.as_ref().ok_or_else(|| CliError::Schema("this operation needs a cocycle".into()))
    }

    /// The library defaults with `n`, `samples` and `seed` replaced where
    /// the scenario sets them.
    pub fn lyapunov_options(&self, defaults: LyapunovOptions) -> LyapunovOptions {
        LyapunovOptions {
            n: self.n.unwrap_or(defaults.n),
            samples: self.samples.unwrap_or(defaults.samples),
            seed: self.seed.unwrap_or(defaults.seed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full() -> Scenario {
        Scenario {
            operation: Some(Operation::Lyapunov),
            base: Some(BaseSystem::periodic(1)),
            potential: Some(Potential::constant(0.0)),
            cocycle: Some(CocycleSpec::ResonantRotation),
            params: Some(serde_json::json!({})),
            seed: Some(1),
            samples: Some(2),
            n: Some(3),
            tol: Some(1e-3),
            out: Some("x".into()),
            threads: Some(2),
            ..Scenario::empty()
        }
    }

    #[test]
    fn field_list_matches_serialization() {
        let v = serde_json::to_value(full()).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        let mut expected = FIELDS.to_vec();
        expected.sort();
        assert_eq!(keys, expected);
        assert_eq!(Scenario::parse(&v.to_string()).unwrap(), full());
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = Scenario::parse(r#"{"schema_version": 1, "sed": 4}"#).unwrap_err();
        assert!(matches!(err, CliError::Schema(_)));
        let err = Scenario::parse(r#"{"schema_version": 1, "cocycle": {"kind": "symbol", "potential": {"kind": "constant", "value": 1}, "energy": 0}}"#);
        assert!(err.is_err());
        assert!(Scenario::parse(r#"{"schema_version": 2}"#).is_err());
    }

    #[test]
    fn hash_ignores_output_and_threads() {
        let a = full();
        let b = Scenario { out: None, threads: Some(7), ..full() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), Scenario { seed: Some(2), ..full() }.hash());
    }

    #[test]
    fn overrides_replace_scenario_values() {
        let o = Overrides { seed: Some(9), params: Some(r#"{"method": "birkhoff"}"#.into()), ..Overrides::default() };
        let s = Scenario::resolve(None, Operation::Lyapunov, &o).unwrap();
        assert_eq!(s.seed, Some(9));
        assert_eq!(s.params, Some(serde_json::json!({"method": "birkhoff"})));
        let bad = Overrides { base: Some("{".into()), ..Overrides::default() };
        assert!(matches!(Scenario::resolve(None, Operation::Lyapunov, &bad), Err(CliError::Schema(_))));
    }
}
