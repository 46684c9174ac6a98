//! Flat `key = value` experiment configs. See `docs/config.md` for the grammar.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use conic_ma::metric::CompactSet;
use conic_ma::regularization::TwistSpec;
use conic_ma::solver::SolverConfig;
use conic_ma::sphere::{Cone, ConeData, Harmonic, Point, SphereGrid};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("key `{key}`: {msg}")]
    Value { key: String, msg: String },
    #[error("{0}")]
    Invalid(String),
}

fn value_err(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        msg: msg.into(),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeometryConfig {
    pub n: usize,
    pub r_overlap: f64,
    pub depth: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConeConfig {
    pub position: Point,
    pub beta: f64,
    pub twist: [f64; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct TwistConfig {
    pub mu: f64,
    /// Declared degree, checked against the degree identity.
    pub s: Option<f64>,
    pub chi: [f64; 4],
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSettings {
    pub family_size: usize,
    pub samples: usize,
    pub margin: f64,
    pub radii: Vec<f64>,
    pub eps: Vec<f64>,
    pub betas: Vec<f64>,
    pub compact: CompactSet,
    pub alphas: Vec<f64>,
    pub alpha_cap: f64,
    /// Re-solve on the N/2 grid and with doubled t-steps for the order checks.
    pub order_checks: bool,
    /// Count the extrapolated-versus-closed-form comparison toward the exit code.
    pub strict_reference: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub geometry: GeometryConfig,
    pub cones: Vec<ConeConfig>,
    pub twist: TwistConfig,
    pub solver: SolverConfig,
    pub seed: u64,
    pub experiment: ExperimentSettings,
    pub output_dir: Option<PathBuf>,
    /// Normalized `key = value` lines, echoed into summary.json.
    pub entries: BTreeMap<String, String>,
}

fn number(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v
        .trim()
        .parse()
        .map_err(|_| value_err(key, format!("`{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(value_err(key, "must be finite"));
    }
    Ok(x)
}

fn integer(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim()
        .parse()
        .map_err(|_| value_err(key, format!("`{v}` is not a nonnegative integer")))
}

fn list(key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    v.split(',').map(|p| number(key, p)).collect()
}

fn four(key: &str, v: &str) -> Result<[f64; 4], ConfigError> {
    let l = list(key, v)?;
    l.try_into()
        .map_err(|_| value_err(key, "expects four numbers c0, c1, c2, c3"))
}

fn boolean(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v.trim() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(value_err(key, "expects true or false")),
    }
}

fn position(key: &str, v: &str) -> Result<Point, ConfigError> {
    match v.trim() {
        "inf" => Ok(Point::Infinity),
        "0" => Ok(Point::ZERO),
        s => {
            let l = list(key, s)?;
            match l[..] {
                [x, y] => Ok(Point::finite(Complex64::new(x, y))),
                _ => Err(value_err(key, "expects 0, inf or x,y")),
            }
        }
    }
}

/// Splits the text into `key -> value`, rejecting malformed lines and duplicates.
pub fn parse_entries(text: &str) -> Result<BTreeMap<String, String>, ConfigError> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax {
            line: i + 1,
            msg: "expected `key = value`".into(),
        })?;
        let (k, v) = (k.trim(), v.trim());
        let valid = !k.is_empty()
            && k.split('.')
                .all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'));
        if !valid {
            return Err(ConfigError::Syntax {
                line: i + 1,
                msg: format!("bad key `{k}`"),
            });
        }
        if v.is_empty() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                msg: format!("empty value for `{k}`"),
            });
        }
        if out.insert(k.to_string(), v.to_string()).is_some() {
            return Err(ConfigError::Syntax {
                line: i + 1,
                msg: format!("duplicate key `{k}`"),
            });
        }
    }
    Ok(out)
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let entries = parse_entries(text)?;
        let mut geometry = GeometryConfig {
            n: 256,
            r_overlap: conic_ma::sphere::DEFAULT_OVERLAP,
            depth: conic_ma::sphere::DEFAULT_DEPTH,
        };
        let mut cones: BTreeMap<usize, (Option<Point>, Option<f64>, [f64; 4])> = BTreeMap::new();
        let mut twist = TwistConfig {
            mu: 0.0,
            s: None,
            chi: [0.0; 4],
        };
        let mut solver = SolverConfig::default();
        let mut seed = 7;
        let mut experiment = ExperimentSettings {
            family_size: 64,
            samples: 16,
            margin: 0.1,
            radii: vec![0.1, 0.25, 0.5],
            eps: vec![1e-3, 1e-2, 1e-1],
            betas: vec![0.3, 0.5, 0.7],
            compact: CompactSet::default(),
            alphas: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0],
            alpha_cap: 100.0,
            order_checks: true,
            strict_reference: false,
        };
        let mut output_dir = None;

        for (key, v) in &entries {
            let k = key.as_str();
            let parts: Vec<&str> = k.split('.').collect();
            match parts[..] {
                ["geometry", "n"] => geometry.n = integer(k, v)?,
                ["geometry", "r_overlap"] => geometry.r_overlap = number(k, v)?,
                ["geometry", "depth"] => geometry.depth = number(k, v)?,
                ["cone", idx, field] => {
                    let i: usize = idx
                        .parse()
                        .map_err(|_| ConfigError::UnknownKey(key.clone()))?;
                    let e = cones.entry(i).or_insert((None, None, [0.0; 4]));
                    match field {
                        "position" => e.0 = Some(position(k, v)?),
                        "beta" => e.1 = Some(number(k, v)?),
                        "twist" => e.2 = four(k, v)?,
                        _ => return Err(ConfigError::UnknownKey(key.clone())),
                    }
                }
                ["twist", "mu"] => twist.mu = number(k, v)?,
                ["twist", "s"] => twist.s = Some(number(k, v)?),
                ["twist", "chi"] => twist.chi = four(k, v)?,
                ["solver", "tol"] => solver.tol = number(k, v)?,
                ["solver", "target"] => solver.target = number(k, v)?,
                ["solver", "max_iter"] => solver.max_iter = integer(k, v)?,
                ["solver", "t_steps"] => solver.t_steps = integer(k, v)?,
                ["solver", "max_halvings"] => solver.max_halvings = integer(k, v)?,
                ["solver", "deltas"] => solver.deltas = list(k, v)?,
                ["solver", "lambda_check"] => solver.lambda_check = boolean(k, v)?,
                ["solver", "seed"] => seed = integer(k, v)? as u64,
                ["experiment", "family_size"] => experiment.family_size = integer(k, v)?,
                ["experiment", "samples"] => experiment.samples = integer(k, v)?,
                ["experiment", "margin"] => experiment.margin = number(k, v)?,
                ["experiment", "radii"] => experiment.radii = list(k, v)?,
                ["experiment", "eps"] => experiment.eps = list(k, v)?,
                ["experiment", "betas"] => experiment.betas = list(k, v)?,
                ["experiment", "k_inner"] => experiment.compact.r_lo = number(k, v)?,
                ["experiment", "k_outer"] => experiment.compact.r_hi = number(k, v)?,
                ["experiment", "alphas"] => experiment.alphas = list(k, v)?,
                ["experiment", "alpha_cap"] => experiment.alpha_cap = number(k, v)?,
                ["experiment", "order_checks"] => experiment.order_checks = boolean(k, v)?,
                ["experiment", "strict_reference"] => experiment.strict_reference = boolean(k, v)?,
                ["output", "dir"] => output_dir = Some(PathBuf::from(v)),
                _ => return Err(ConfigError::UnknownKey(key.clone())),
            }
        }

        let mut cone_list = Vec::with_capacity(cones.len());
        for (expected, (i, (p, b, tw))) in cones.into_iter().enumerate() {
            if i != expected {
                return Err(ConfigError::Invalid(format!(
                    "cone indices must be 0, 1, 2, ...; found cone.{i} without cone.{expected}"
                )));
            }
            let position = p.ok_or_else(|| value_err(&format!("cone.{i}.position"), "missing"))?;
            let beta = b.ok_or_else(|| value_err(&format!("cone.{i}.beta"), "missing"))?;
            cone_list.push(ConeConfig {
                position,
                beta,
                twist: tw,
            });
        }
        let cfg = ExperimentConfig {
            geometry,
            cones: cone_list,
            twist,
            solver,
            seed,
            experiment,
            output_dir,
            entries,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        self.solver.validate().map_err(ConfigError::Invalid)?;
        let e = &self.experiment;
        if e.family_size < 2 {
            return Err(value_err("experiment.family_size", "must be at least 2"));
        }
        if e.samples == 0 {
            return Err(value_err("experiment.samples", "must be positive"));
        }
        if !(e.margin > 0.0 && e.margin < 1.0) {
            return Err(value_err("experiment.margin", "must lie in (0, 1)"));
        }
        if !(0.0 < e.compact.r_lo && e.compact.r_lo < e.compact.r_hi) {
            return Err(ConfigError::Invalid(
                "compact set needs 0 < k_inner < k_outer".into(),
            ));
        }
        if e.betas.iter().any(|&b| !(b > 0.0 && b < 1.0)) {
            return Err(value_err("experiment.betas", "must lie in (0, 1)"));
        }
        if e.eps.iter().chain(&e.radii).any(|&x| !(x > 0.0)) {
            return Err(ConfigError::Invalid(
                "radii and eps must be positive".into(),
            ));
        }
        self.cone_data()
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        self.twist_spec()?;
        Ok(())
    }

    pub fn cone_data(&self) -> ConeData {
        ConeData::new(
            self.cones
                .iter()
                .map(|c| Cone::new(c.position, c.beta).with_twist(Harmonic::new(c.twist)))
                .collect(),
        )
    }

    pub fn twist_spec(&self) -> Result<TwistSpec, ConfigError> {
        let cones = self.cone_data();
        let chi = Harmonic::new(self.twist.chi);
        let spec = match self.twist.s {
            Some(s) => TwistSpec::with_declared_s(self.twist.mu, &cones, chi, s),
            None => TwistSpec::new(self.twist.mu, &cones, chi),
        };
        spec.map_err(|e| ConfigError::Invalid(e.to_string()))
    }

    pub fn grid(&self) -> Result<SphereGrid, ConfigError> {
        SphereGrid::with_depth(
            self.geometry.n,
            self.cone_data(),
            self.geometry.r_overlap,
            self.geometry.depth,
        )
        .map_err(|e| ConfigError::Invalid(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FOOTBALL: &str = "
        geometry.n = 64   # small
        cone.0.position = 0
        cone.0.beta = 0.5
        cone.1.position = inf
        cone.1.beta = 0.5
        twist.mu = 1
        solver.deltas = 1e-1, 1e-2
    ";

    #[test]
    fn parses_football() {
        let c = ExperimentConfig::parse(FOOTBALL).unwrap();
        assert_eq!(c.geometry.n, 64);
        assert_eq!(c.cones.len(), 2);
        assert_eq!(c.cones[1].position, Point::Infinity);
        assert_eq!(c.solver.deltas, vec![1e-1, 1e-2]);
        assert!(c.cone_data().is_football());
    }

    #[test]
    fn rejects_unknown_and_duplicate_keys() {
        assert!(matches!(
            ExperimentConfig::parse("geometry.m = 3"),
            Err(ConfigError::UnknownKey(_))
        ));
        assert!(matches!(
            parse_entries("a.b = 1\na.b = 2"),
            Err(ConfigError::Syntax { line: 2, .. })
        ));
        assert!(parse_entries("no equals sign").is_err());
    }

    #[test]
    fn infeasible_degree_names_identity() {
        let text = FOOTBALL.replace("twist.mu = 1", "twist.mu = 1.5");
        let err = ExperimentConfig::parse(&text).unwrap_err().to_string();
        assert!(err.contains("s = 2 - mu"), "{err}");
    }

    #[test]
    fn deltas_must_decrease() {
        let text = FOOTBALL.replace("1e-1, 1e-2", "1e-2, 1e-1");
        assert!(ExperimentConfig::parse(&text).is_err());
    }

    #[test]
    fn finite_cone_position() {
        let text = "cone.0.position = 1.5, -2\ncone.0.beta = 0.9";
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(
            c.cones[0].position,
            Point::finite(Complex64::new(1.5, -2.0))
        );
    }
}
