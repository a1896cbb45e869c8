//! File formats: parameter blocks and scenarios.

use std::path::Path;

use serde::{Deserialize, Serialize};
use seorder_core::mc::McConfig;
use seorder_core::nalgebra::DMatrix;
use seorder_core::orders::{Mode, OrderKind};
use seorder_core::{GeneratorKind, SkewEllipticalParams};

use crate::error::InputError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorJson {
    Normal,
    StudentT { nu: f64 },
    Cauchy,
}

impl From<GeneratorJson> for GeneratorKind {
    fn from(g: GeneratorJson) -> Self {
        match g {
            GeneratorJson::Normal => GeneratorKind::Normal,
            GeneratorJson::StudentT { nu } => GeneratorKind::StudentT { nu },
            GeneratorJson::Cauchy => GeneratorKind::Cauchy,
        }
    }
}

impl From<GeneratorKind> for GeneratorJson {
    fn from(g: GeneratorKind) -> Self {
        match g {
            GeneratorKind::Normal => GeneratorJson::Normal,
            GeneratorKind::StudentT { nu } => GeneratorJson::StudentT { nu },
            GeneratorKind::Cauchy => GeneratorJson::Cauchy,
        }
    }
}

/// One distribution: location, scale matrix (row-major rows), skewness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub mu: Vec<f64>,
    pub omega: Vec<Vec<f64>>,
    pub delta: Vec<f64>,
    pub generator: GeneratorJson,
}

impl ParamsJson {
    /// Validates, naming `side.field[index]` on failure.
    pub fn to_params(&self, side: &str) -> Result<SkewEllipticalParams, InputError> {
        let n = self.n.unwrap_or(self.mu.len());
        if n == 0 {
            return Err(InputError::invalid(format!("{side}.mu"), "dimension must be positive"));
        }
        let expect = |field: String, len: usize| {
            if len == n {
                Ok(())
            } else {
                Err(InputError::invalid(field, format!("has {len} entries, expected {n}")))
            }
        };
        expect(format!("{side}.mu"), self.mu.len())?;
        expect(format!("{side}.delta"), self.delta.len())?;
        expect(format!("{side}.omega"), self.omega.len())?;
        for (i, row) in self.omega.iter().enumerate() {
            expect(format!("{side}.omega[{i}]"), row.len())?;
        }
        for (name, v) in [("mu", &self.mu), ("delta", &self.delta)] {
            if let Some(i) = v.iter().position(|x| !x.is_finite()) {
                return Err(InputError::invalid(format!("{side}.{name}[{i}]"), "not a finite number"));
            }
        }
        let omega = DMatrix::from_fn(n, n, |i, j| self.omega[i][j]);
        SkewEllipticalParams::new(self.mu.clone(), omega, self.delta.clone(), self.generator.into())
            .map_err(|e| InputError::from_params(side, e))
    }

    pub fn from_params(p: &SkewEllipticalParams) -> Self {
        let n = p.dim();
        ParamsJson {
            n: Some(n),
            mu: p.mu().iter().copied().collect(),
            omega: (0..n).map(|i| (0..n).map(|j| p.omega()[(i, j)]).collect()).collect(),
            delta: p.delta().iter().copied().collect(),
            generator: p.generator().into(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum OrdersJson {
    Keyword(String),
    List(Vec<String>),
}

impl Default for OrdersJson {
    fn default() -> Self {
        OrdersJson::Keyword("all".into())
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeJson {
    #[serde(default)]
    pub centered: bool,
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McJson {
    pub m: usize,
    pub seed: u64,
    pub family_size: usize,
    pub z: f64,
    pub common_random_numbers: bool,
}

impl Default for McJson {
    fn default() -> Self {
        let c = McConfig::default();
        McJson {
            m: c.m,
            seed: c.seed,
            family_size: c.family_size,
            z: c.z,
            common_random_numbers: c.common_random_numbers,
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioJson {
    #[serde(rename = "X")]
    pub x: ParamsJson,
    #[serde(rename = "Y")]
    pub y: ParamsJson,
    #[serde(default)]
    pub orders: OrdersJson,
    #[serde(default)]
    pub mode: ModeJson,
    #[serde(default)]
    pub mc: McJson,
    #[serde(default)]
    pub tol: Option<f64>,
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub x: SkewEllipticalParams,
    pub y: SkewEllipticalParams,
    pub orders: Vec<OrderKind>,
    pub mode: Mode,
    pub mc: McConfig,
    pub tol: f64,
}

pub fn read_text(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|source| InputError::Read {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| InputError::parse(&path.display().to_string(), &e))
}

pub fn parse_orders(names: &[String], field: &str) -> Result<Vec<OrderKind>, InputError> {
    if names.len() == 1 && names[0].eq_ignore_ascii_case("all") {
        return Ok(OrderKind::ALL.to_vec());
    }
    if names.is_empty() {
        return Err(InputError::invalid(field, "no orders given"));
    }
    let mut out = Vec::new();
    for (i, s) in names.iter().enumerate() {
        let o = OrderKind::from_name(s)
            .ok_or_else(|| InputError::invalid(format!("{field}[{i}]"), format!("unknown order '{s}'")))?;
        if !out.contains(&o) {
            out.push(o);
        }
    }
    Ok(out)
}

impl ScenarioJson {
    pub fn resolve(&self) -> Result<Scenario, InputError> {
        let x = self.x.to_params("X")?;
        let y = self.y.to_params("Y")?;
        if x.dim() != y.dim() {
            return Err(InputError::invalid(
                "Y.mu",
                format!("dimension {} differs from X dimension {}", y.dim(), x.dim()),
            ));
        }
        if x.generator() != y.generator() {
            return Err(InputError::invalid("Y.generator", "differs from X.generator"));
        }
        let orders = match &self.orders {
            OrdersJson::Keyword(k) => parse_orders(std::slice::from_ref(k), "orders")?,
            OrdersJson::List(v) => parse_orders(v, "orders")?,
        };
        let tol = self.tol.unwrap_or(seorder_core::orders::DEFAULT_TOL);
        if !(tol.is_finite() && tol >= 0.0) {
            return Err(InputError::invalid("tol", "must be finite and nonnegative"));
        }
        if self.mc.m == 0 {
            return Err(InputError::invalid("mc.m", "must be positive"));
        }
        if self.mc.family_size == 0 {
            return Err(InputError::invalid("mc.family_size", "must be positive"));
        }
        if !(self.mc.z.is_finite() && self.mc.z > 0.0) {
            return Err(InputError::invalid("mc.z", "must be finite and positive"));
        }
        Ok(Scenario {
            x,
            y,
            orders,
            mode: Mode {
                centered: self.mode.centered,
            },
            mc: McConfig {
                m: self.mc.m,
                seed: self.mc.seed,
                family_size: self.mc.family_size,
                z: self.mc.z,
                centered: self.mode.centered,
                common_random_numbers: self.mc.common_random_numbers,
            },
            tol,
        })
    }
}

pub fn read_scenario(path: &Path) -> Result<Scenario, InputError> {
    read_json::<ScenarioJson>(path)?.resolve()
}

pub fn read_params(path: &Path) -> Result<SkewEllipticalParams, InputError> {
    read_json::<ParamsJson>(path)?.to_params("params")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario(text: &str) -> Result<Scenario, InputError> {
        serde_json::from_str::<ScenarioJson>(text)
            .map_err(|e| InputError::parse("s.json", &e))?
            .resolve()
    }

    const X: &str = r#"{"mu":[0,0],"omega":[[1,0],[0,1]],"delta":[0,0],"generator":{"kind":"normal"}}"#;

    #[test]
    fn defaults_fill_in() {
        let s = scenario(&format!(r#"{{"X":{X},"Y":{X}}}"#)).unwrap();
        assert_eq!(s.orders.len(), 18);
        assert_eq!(s.mc, McConfig::default());
        assert!(!s.mode.centered);
    }

    #[test]
    fn non_symmetric_names_entry_pair() {
        let bad = r#"{"mu":[0,0],"omega":[[1,0.5],[0,1]],"delta":[0,0],"generator":{"kind":"normal"}}"#;
        let e = scenario(&format!(r#"{{"X":{X},"Y":{bad}}}"#)).unwrap_err().to_string();
        assert!(e.starts_with("Y.omega:") && e.contains("(0,1)") && e.contains("(1,0)"), "{e}");
    }

    #[test]
    fn short_row_and_unknown_order() {
        let bad = r#"{"mu":[0,0],"omega":[[1,0],[0]],"delta":[0,0],"generator":{"kind":"normal"}}"#;
        let e = scenario(&format!(r#"{{"X":{bad},"Y":{X}}}"#)).unwrap_err().to_string();
        assert!(e.starts_with("X.omega[1]:"), "{e}");
        let e = scenario(&format!(r#"{{"X":{X},"Y":{X},"orders":["cx","lst"]}}"#))
            .unwrap_err()
            .to_string();
        assert!(e.starts_with("orders[1]:"), "{e}");
    }

    #[test]
    fn generator_mismatch_rejected() {
        let t = r#"{"mu":[0,0],"omega":[[1,0],[0,1]],"delta":[0,0],"generator":{"kind":"student_t","nu":4}}"#;
        let e = scenario(&format!(r#"{{"X":{X},"Y":{t}}}"#)).unwrap_err().to_string();
        assert!(e.starts_with("Y.generator"), "{e}");
    }

    #[test]
    fn parse_error_has_position() {
        let e = scenario("{\n  \"X\": [1,\n}").unwrap_err();
        assert!(matches!(e, InputError::Parse { line: 3, .. }), "{e}");
    }

    #[test]
    fn params_round_trip() {
        let p: ParamsJson = serde_json::from_str(X).unwrap();
        let q = ParamsJson::from_params(&p.to_params("X").unwrap());
        assert_eq!(q.mu, p.mu);
        assert_eq!(q.omega, p.omega);
        assert_eq!(q.generator, GeneratorJson::Normal);
    }
}
