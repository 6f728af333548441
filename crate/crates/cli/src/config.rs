//! Solver settings layered as: method defaults, then a JSON object of
//! overrides, then individual command-line flags.

use std::fmt;
use std::str::FromStr;

use osc::pipeline::Method;
use osc::SolverConfig;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use crate::{CliError, CliResult};

/// Applies a JSON object of overrides on top of `method`'s defaults.
/// Keys that are not `SolverConfig` fields are rejected.
pub fn resolve_config(method: Method, overrides: Option<&Value>) -> CliResult<SolverConfig> {
    let mut base = serde_json::to_value(method.default_config())?;
    if let Some(over) = overrides {
        let over = over.as_object().ok_or_else(|| {
            CliError::Usage(format!("solver overrides for {method} must be a JSON object"))
        })?;
        let fields = base.as_object_mut().expect("config serializes to an object");
        for (key, value) in over {
            if !fields.contains_key(key) {
                return Err(CliError::Usage(format!("unknown solver field '{key}'")));
            }
            fields.insert(key.clone(), value.clone());
        }
    }
    let config: SolverConfig = serde_json::from_value(base)?;
    config.validate()?;
    Ok(config)
}

/// A PSNR level in dB; written as the string "inf" for noiseless data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Psnr(pub f64);

impl Psnr {
    pub const CLEAN: Psnr = Psnr(f64::INFINITY);

    pub fn is_clean(self) -> bool {
        self.0.is_infinite()
    }
}

impl fmt::Display for Psnr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_clean() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl FromStr for Psnr {
    type Err = CliError;

    fn from_str(s: &str) -> CliResult<Self> {
        let v = match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "clean" => f64::INFINITY,
            other => other
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad PSNR value '{s}'")))?,
        };
        if v > 0.0 {
            Ok(Psnr(v))
        } else {
            Err(CliError::Usage(format!("PSNR must be positive, got '{s}'")))
        }
    }
}

impl Serialize for Psnr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.is_clean() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Psnr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        let text = match Raw::deserialize(d)? {
            Raw::Number(v) => v.to_string(),
            Raw::Text(t) => t,
        };
        text.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn overrides_layer_on_method_defaults() {
        let c = resolve_config(Method::Spatsc, Some(&json!({"lambda1": 0.3}))).unwrap();
        assert_eq!(c.lambda1, 0.3);
        assert_eq!(c.lambda2, 0.01);
        assert!(c.diag_zero);
        let plain = resolve_config(Method::OscRelaxed, None).unwrap();
        assert_eq!(plain, SolverConfig::default());
    }

    #[test]
    fn unknown_or_invalid_fields_are_rejected() {
        assert!(resolve_config(Method::OscExact, Some(&json!({"lamda1": 1.0}))).is_err());
        assert!(resolve_config(Method::OscExact, Some(&json!({"lambda1": -1.0}))).is_err());
        assert!(resolve_config(Method::OscExact, Some(&json!([1, 2]))).is_err());
    }

    #[test]
    fn psnr_text_and_json() {
        assert!("inf".parse::<Psnr>().unwrap().is_clean());
        assert_eq!("15".parse::<Psnr>().unwrap(), Psnr(15.0));
        assert!("-3".parse::<Psnr>().is_err());
        let grid: Vec<Psnr> = serde_json::from_str(r#"["inf", 40, 12.5]"#).unwrap();
        assert_eq!(grid, vec![Psnr::CLEAN, Psnr(40.0), Psnr(12.5)]);
        assert_eq!(serde_json::to_string(&grid).unwrap(), r#"["inf",40.0,12.5]"#);
        assert_eq!(Psnr::CLEAN.to_string(), "inf");
    }
}
