//! JSON instance files.
//!
//! ```json
//! {"m": 2, "n": 2, "mode": "decoupled",
//!  "variables": [[{"atoms": [0, 1], "probs": [0.5, 0.5]}, ...], ...],
//!  "kernels": [{"index": [1, 1], "table": [[0, 0], [0, 1]]}, ...],
//!  "flags": {"nonnegative": true}}
//! ```
//!
//! Kernel indices are one-based. `flags` is optional; declared flags are
//! verified on load.

use std::path::Path;

use serde_json::{json, Map, Value};
use thiserror::Error;

use super::{
    flat_index, validate_instance, DiscreteDistribution, Flags, KernelTensor, Mode, Table,
    UStatInstance, VariableGrid, Violation,
};

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("{}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("\n"))]
    Invalid(Vec<Violation>),
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> ParseError {
    ParseError::Schema {
        path: path.into(),
        message: message.into(),
    }
}

fn field<'a>(obj: &'a Map<String, Value>, key: &str, path: &str) -> Result<&'a Value, ParseError> {
    obj.get(key)
        .ok_or_else(|| schema(join(path, key), "missing field"))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn as_usize(v: &Value, path: &str) -> Result<usize, ParseError> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| schema(path, "expected a nonnegative integer"))
}

fn as_reals(v: &Value, path: &str) -> Result<Vec<f64>, ParseError> {
    let arr = v.as_array().ok_or_else(|| schema(path, "expected an array of numbers"))?;
    arr.iter()
        .enumerate()
        .map(|(k, x)| x.as_f64().ok_or_else(|| schema(format!("{path}[{k}]"), "expected a number")))
        .collect()
}

impl UStatInstance {
    /// Parses and validates an instance document.
    pub fn from_json_str(text: &str) -> Result<Self, ParseError> {
        let value: Value = serde_json::from_str(text)?;
        Self::from_json(&value)
    }

    pub fn from_json(value: &Value) -> Result<Self, ParseError> {
        let root = value
            .as_object()
            .ok_or_else(|| schema("$", "expected an object"))?;
        let m = as_usize(field(root, "m", "")?, "m")?;
        let n = as_usize(field(root, "n", "")?, "n")?;
        if m == 0 || n == 0 {
            return Err(schema(if m == 0 { "m" } else { "n" }, "must be positive"));
        }
        let mode = match root.get("mode") {
            None => Mode::Decoupled,
            Some(v) => serde_json::from_value(v.clone())
                .map_err(|_| schema("mode", "expected \"decoupled\" or \"undecoupled\""))?,
        };
        let flags: Flags = match root.get("flags") {
            None | Some(Value::Null) => Flags::default(),
            Some(v) => serde_json::from_value(v.clone()).map_err(|e| schema("flags", e.to_string()))?,
        };

        let vars = field(root, "variables", "")?
            .as_array()
            .ok_or_else(|| schema("variables", "expected an array of slots"))?;
        // Undecoupled files may list the shared laws once.
        let rows_given = vars.len();
        if !(rows_given == m || (mode == Mode::Undecoupled && rows_given == 1)) {
            return Err(schema("variables", format!("expected {m} slots, found {rows_given}")));
        }
        let mut laws = Vec::with_capacity(m);
        for (j, row) in vars.iter().enumerate() {
            let path = format!("variables[{j}]");
            let row = row.as_array().ok_or_else(|| schema(&path, "expected an array of laws"))?;
            if row.len() != n {
                return Err(schema(&path, format!("expected {n} laws, found {}", row.len())));
            }
            let mut out = Vec::with_capacity(n);
            for (i, law) in row.iter().enumerate() {
                let path = format!("variables[{j}][{i}]");
                let obj = law.as_object().ok_or_else(|| schema(&path, "expected an object"))?;
                let atoms = as_reals(field(obj, "atoms", &path)?, &join(&path, "atoms"))?;
                let probs = as_reals(field(obj, "probs", &path)?, &join(&path, "probs"))?;
                out.push(DiscreteDistribution::from_raw(atoms, probs));
            }
            laws.push(out);
        }
        while laws.len() < m {
            laws.push(laws[0].clone());
        }
        let grid = VariableGrid::new(m, n, laws);

        // Law problems come first so table shapes below are meaningful.
        let probe = UStatInstance::from_parts(
            grid.clone(),
            KernelTensor::new(m, n, Vec::new()),
            mode,
            Flags::default(),
        );
        let law_issues: Vec<Violation> = validate_instance(&probe)
            .into_iter()
            .filter(|v| v.path.starts_with("variables"))
            .filter(|v| !v.message.starts_with("zero-mass"))
            .collect();
        if !law_issues.is_empty() {
            return Err(ParseError::Invalid(law_issues));
        }

        let count = n
            .checked_pow(m as u32)
            .ok_or_else(|| schema("kernels", "index space too large"))?;
        let entries = field(root, "kernels", "")?
            .as_array()
            .ok_or_else(|| schema("kernels", "expected an array"))?;
        let mut tables: Vec<Option<Table>> = vec![None; count];
        for (k, entry) in entries.iter().enumerate() {
            let path = format!("kernels[{k}]");
            let obj = entry.as_object().ok_or_else(|| schema(&path, "expected an object"))?;
            let idx_path = join(&path, "index");
            let idx = field(obj, "index", &path)?
                .as_array()
                .ok_or_else(|| schema(&idx_path, "expected an array"))?;
            if idx.len() != m {
                return Err(schema(&idx_path, format!("expected {m} indices, found {}", idx.len())));
            }
            let mut mi = Vec::with_capacity(m);
            for (j, v) in idx.iter().enumerate() {
                let i = as_usize(v, &format!("{idx_path}[{j}]"))?;
                if i == 0 || i > n {
                    return Err(schema(format!("{idx_path}[{j}]"), format!("index {i} outside 1..={n}")));
                }
                mi.push(i - 1);
            }
            let flat = flat_index(&mi, n);
            if tables[flat].is_some() {
                return Err(schema(&idx_path, format!("kernel index {} repeated", one_based(&mi))));
            }
            let shape = grid.shape_for(&mi);
            let table = Table::from_json(field(obj, "table", &path)?, &shape)
                .map_err(|e| schema(format!("{path}.table"), e.trim_start_matches(": ").to_string()))?;
            tables[flat] = Some(table);
        }
        let mut full = Vec::with_capacity(count);
        for (flat, t) in tables.into_iter().enumerate() {
            match t {
                Some(t) => full.push(t),
                None => {
                    let mi = super::unflatten(flat, m, n);
                    return Err(schema("kernels", format!("kernel index {} absent", one_based(&mi))));
                }
            }
        }
        let kernel = KernelTensor::new(m, n, full);
        UStatInstance::new(grid, kernel, mode, flags).map_err(|e| match e {
            super::ModelError::Violations(v) => ParseError::Invalid(v),
            other => schema("$", other.to_string()),
        })
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ParseError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ParseError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> Value {
        let variables: Vec<Value> = self
            .grid()
            .rows()
            .iter()
            .map(|row| {
                Value::Array(
                    row.iter()
                        .map(|law| json!({"atoms": law.atoms(), "probs": law.probs()}))
                        .collect(),
                )
            })
            .collect();
        let kernels: Vec<Value> = super::multi_indices(self.m(), self.n())
            .map(|mi| {
                let index: Vec<usize> = mi.iter().map(|i| i + 1).collect();
                json!({"index": index, "table": self.kernel().table(&mi).to_json()})
            })
            .collect();
        json!({
            "m": self.m(),
            "n": self.n(),
            "mode": self.mode(),
            "flags": self.flags(),
            "variables": variables,
            "kernels": kernels,
        })
    }

    /// Compact serialization; parse of the output reproduces the instance exactly.
    pub fn to_json_string(&self) -> String {
        self.to_json().to_string()
    }
}

fn one_based(mi: &[usize]) -> String {
    let parts: Vec<String> = mi.iter().map(|i| (i + 1).to_string()).collect();
    format!("({})", parts.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_instance, Family};

    fn two_by_two(probs01: [f64; 2], drop_kernel: Option<[usize; 2]>) -> String {
        let mut kernels = Vec::new();
        for a in 1..=2 {
            for b in 1..=2 {
                if drop_kernel == Some([a, b]) {
                    continue;
                }
                kernels.push(json!({"index": [a, b], "table": [[0.0, 0.0], [0.0, 1.0]]}));
            }
        }
        let law = json!({"atoms": [0.0, 1.0], "probs": [0.5, 0.5]});
        let odd = json!({"atoms": [0.0, 1.0], "probs": probs01});
        json!({
            "m": 2, "n": 2, "mode": "decoupled",
            "variables": [[law, odd], [law, law]],
            "kernels": kernels,
        })
        .to_string()
    }

    #[test]
    fn generated_instances_round_trip() {
        for family in Family::ALL {
            let inst = generate_instance(family, 2, 2, 3, 11).unwrap();
            let text = inst.to_json_string();
            let back = UStatInstance::from_json_str(&text).unwrap();
            assert_eq!(back, inst, "{family:?}");
            assert_eq!(back.to_json_string(), text);
        }
    }

    #[test]
    fn bad_probs_are_located() {
        let err = UStatInstance::from_json_str(&two_by_two([0.5, 0.4], None)).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("variables[0][1].probs"), "{msg}");
    }

    #[test]
    fn missing_kernel_is_named() {
        let err = UStatInstance::from_json_str(&two_by_two([0.5, 0.5], Some([2, 1]))).unwrap_err();
        assert!(err.to_string().contains("kernel index (2,1) absent"), "{err}");
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let text = r#"{"m":1,"n":1,"variables":[[{"atoms":[0,1],"probs":[0.5,0.5]}]],
                      "kernels":[{"index":[1],"table":[1,2,3]}]}"#;
        let err = UStatInstance::from_json_str(text).unwrap_err();
        assert!(err.to_string().starts_with("kernels[0].table"), "{err}");
    }
}
