//! Lifetime density families behind a common interface.
//!
//! Each family exposes its CDF, closed-form survival function, and inverse
//! CDF; families are selected by name from a spec document, e.g.
//! `{"family": "weibull", "shape": 1.5, "scale": 1.0}`.

use serde_json::Value;

use super::McError;

/// A positive lifetime law with closed-form `F`, `1 − F`, and `F^{-1}`,
/// with `F` strictly increasing on its support.
pub trait Density: Send + Sync {
    fn name(&self) -> String;
    fn cdf(&self, t: f64) -> f64;
    /// `1 − F(t)` evaluated in closed form (no cancellation).
    fn survival(&self, t: f64) -> f64;
    /// Inverse CDF on `[0, 1)`.
    fn quantile(&self, u: f64) -> f64;
}

pub struct Exponential {
    rate: f64,
}

impl Exponential {
    pub fn new(rate: f64) -> Result<Self, McError> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(McError::InvalidDensity(format!(
                "exponential rate must be positive, got {rate}"
            )));
        }
        Ok(Exponential { rate })
    }
}

impl Density for Exponential {
    fn name(&self) -> String {
        format!("exponential({})", self.rate)
    }
    fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            -(-self.rate * t).exp_m1()
        }
    }
    fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            1.0
        } else {
            (-self.rate * t).exp()
        }
    }
    fn quantile(&self, u: f64) -> f64 {
        -(-u).ln_1p() / self.rate
    }
}

pub struct Uniform01;

impl Density for Uniform01 {
    fn name(&self) -> String {
        "uniform(0,1)".to_string()
    }
    fn cdf(&self, t: f64) -> f64 {
        t.clamp(0.0, 1.0)
    }
    fn survival(&self, t: f64) -> f64 {
        (1.0 - t).clamp(0.0, 1.0)
    }
    fn quantile(&self, u: f64) -> f64 {
        u
    }
}

pub struct Weibull {
    shape: f64,
    scale: f64,
}

impl Weibull {
    pub fn new(shape: f64, scale: f64) -> Result<Self, McError> {
        if !(shape > 0.0 && scale > 0.0) || !shape.is_finite() || !scale.is_finite() {
            return Err(McError::InvalidDensity(format!(
                "weibull parameters must be positive, got shape {shape}, scale {scale}"
            )));
        }
        Ok(Weibull { shape, scale })
    }
}

impl Density for Weibull {
    fn name(&self) -> String {
        format!("weibull({},{})", self.shape, self.scale)
    }
    fn cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            0.0
        } else {
            -(-(t / self.scale).powf(self.shape)).exp_m1()
        }
    }
    fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            1.0
        } else {
            (-(t / self.scale).powf(self.shape)).exp()
        }
    }
    fn quantile(&self, u: f64) -> f64 {
        self.scale * (-(-u).ln_1p()).powf(1.0 / self.shape)
    }
}

pub const FAMILY_NAMES: [&str; 3] = ["exponential", "uniform", "weibull"];

/// Look up a density family by name with its parameters.
pub fn density_from_spec(spec: &Value) -> Result<Box<dyn Density>, McError> {
    let family = spec
        .get("family")
        .and_then(|v| v.as_str())
        .ok_or_else(|| McError::InvalidDensity("density spec needs a \"family\"".into()))?;
    let param = |key: &str, default: Option<f64>| -> Result<f64, McError> {
        match spec.get(key) {
            Some(v) => v
                .as_f64()
                .ok_or_else(|| McError::InvalidDensity(format!("{key} must be a number"))),
            None => default
                .ok_or_else(|| McError::InvalidDensity(format!("{family} needs {key:?}"))),
        }
    };
    match family {
        "exponential" => Ok(Box::new(Exponential::new(param("rate", Some(1.0))?)?)),
        "uniform" => Ok(Box::new(Uniform01)),
        "weibull" => Ok(Box::new(Weibull::new(
            param("shape", None)?,
            param("scale", Some(1.0))?,
        )?)),
        other => Err(McError::InvalidDensity(format!(
            "unknown family {other:?} (known: {})",
            FAMILY_NAMES.join(", ")
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_inverts_cdf() {
        let densities: Vec<Box<dyn Density>> = vec![
            Box::new(Exponential::new(1.0).unwrap()),
            Box::new(Exponential::new(2.5).unwrap()),
            Box::new(Uniform01),
            Box::new(Weibull::new(1.5, 1.0).unwrap()),
            Box::new(Weibull::new(0.8, 2.0).unwrap()),
        ];
        for d in &densities {
            for u in [0.0, 0.1, 0.5, 0.9, 0.999] {
                let t = d.quantile(u);
                assert!((d.cdf(t) - u).abs() < 1e-12, "{} at {u}", d.name());
                assert!(
                    (d.survival(t) - (1.0 - u)).abs() < 1e-12,
                    "{} survival at {u}",
                    d.name()
                );
            }
        }
    }

    #[test]
    fn registry_lookup() {
        let d = density_from_spec(&serde_json::json!({"family": "weibull", "shape": 1.5})).unwrap();
        assert_eq!(d.name(), "weibull(1.5,1)");
        assert!(density_from_spec(&serde_json::json!({"family": "cauchy"})).is_err());
        assert!(
            density_from_spec(&serde_json::json!({"family": "exponential", "rate": -1.0})).is_err()
        );
    }
}
