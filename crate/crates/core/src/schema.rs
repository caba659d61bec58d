//! Parameter schemas shared by capability tools and skills.

use std::collections::BTreeMap;

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use serde_json::{Map, Value};

use crate::media::{ArtifactId, MediaKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamType {
    /// Non-blank string.
    String,
    /// Any string, blank included; emptiness is the consumer's concern.
    Text,
    Integer,
    PositiveInteger,
    Number,
    StringList,
    /// Reference to a stored artifact, optionally of a fixed kind.
    Artifact(Option<MediaKind>),
    ArtifactList(Option<MediaKind>),
    OneOf(&'static [&'static str]),
    /// Arbitrary JSON object, checked by the consumer.
    Json,
}

impl ParamType {
    fn name(self) -> &'static str {
        match self {
            ParamType::String => "string",
            ParamType::Text => "text",
            ParamType::Integer => "integer",
            ParamType::PositiveInteger => "positive_integer",
            ParamType::Number => "number",
            ParamType::StringList => "string_list",
            ParamType::Artifact(_) => "artifact_id",
            ParamType::ArtifactList(_) => "artifact_id_list",
            ParamType::OneOf(_) => "enum",
            ParamType::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub ty: ParamType,
    pub required: bool,
    pub default: Option<Value>,
}

impl ParamSpec {
    pub fn required(name: &str, ty: ParamType) -> Self {
        ParamSpec {
            name: name.to_string(),
            ty,
            required: true,
            default: None,
        }
    }

    pub fn optional(name: &str, ty: ParamType) -> Self {
        ParamSpec {
            required: false,
            ..Self::required(name, ty)
        }
    }

    pub fn with_default(mut self, value: impl Into<Value>) -> Self {
        self.default = Some(value.into());
        self
    }
}

impl Serialize for ParamSpec {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        map.serialize_entry("name", &self.name)?;
        map.serialize_entry("type", self.ty.name())?;
        map.serialize_entry("required", &self.required)?;
        if let Some(default) = &self.default {
            map.serialize_entry("default", default)?;
        }
        match self.ty {
            ParamType::Artifact(Some(kind)) | ParamType::ArtifactList(Some(kind)) => {
                map.serialize_entry("artifact_kind", &kind)?;
            }
            ParamType::OneOf(choices) => map.serialize_entry("choices", choices)?,
            _ => {}
        }
        map.end()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parameter {param:?}: {reason}")]
pub struct SchemaViolation {
    pub param: String,
    pub reason: String,
}

impl SchemaViolation {
    pub fn new(param: impl Into<String>, reason: impl Into<String>) -> Self {
        SchemaViolation {
            param: param.into(),
            reason: reason.into(),
        }
    }
}

/// Checks `params` against `schema`, filling defaults. Unknown keys are
/// rejected. Artifact references are only checked for shape here; resolving
/// them against a store is the caller's job.
pub fn validate(schema: &[ParamSpec], params: &Map<String, Value>) -> Result<BTreeMap<String, Value>, SchemaViolation> {
    for key in params.keys() {
        if !schema.iter().any(|s| &s.name == key) {
            return Err(SchemaViolation::new(key, "unknown parameter"));
        }
    }
    let mut out = BTreeMap::new();
    for spec in schema {
        let value = match params.get(&spec.name) {
            Some(Value::Null) | None => match (&spec.default, spec.required) {
                (Some(d), _) => d.clone(),
                (None, true) => return Err(SchemaViolation::new(&spec.name, "required")),
                (None, false) => continue,
            },
            Some(v) => v.clone(),
        };
        check_type(&spec.name, spec.ty, &value)?;
        out.insert(spec.name.clone(), value);
    }
    Ok(out)
}

fn check_type(name: &str, ty: ParamType, value: &Value) -> Result<(), SchemaViolation> {
    let fail = |reason: &str| Err(SchemaViolation::new(name, reason));
    match ty {
        ParamType::String => match value {
            Value::String(s) if !s.trim().is_empty() => Ok(()),
            Value::String(_) => fail("must be a non-empty string"),
            _ => fail("expected string"),
        },
        ParamType::Text => match value {
            Value::String(_) => Ok(()),
            _ => fail("expected string"),
        },
        ParamType::Integer => match value.as_i64() {
            Some(_) => Ok(()),
            None => fail("expected integer"),
        },
        ParamType::PositiveInteger => match value.as_u64() {
            Some(n) if n > 0 => Ok(()),
            _ => fail("expected positive integer"),
        },
        ParamType::Number => match value.as_f64() {
            Some(x) if x.is_finite() => Ok(()),
            _ => fail("expected number"),
        },
        ParamType::StringList => match value.as_array() {
            Some(items) if items.iter().all(Value::is_string) => Ok(()),
            _ => fail("expected list of strings"),
        },
        ParamType::Artifact(_) => match value {
            Value::String(s) if !s.is_empty() => Ok(()),
            _ => fail("expected artifact id"),
        },
        ParamType::ArtifactList(_) => match value.as_array() {
            Some(items) if items.is_empty() => fail("expected at least one artifact id"),
            Some(items) if items.iter().all(|v| v.as_str().is_some_and(|s| !s.is_empty())) => Ok(()),
            _ => fail("expected list of artifact ids"),
        },
        ParamType::OneOf(choices) => match value.as_str() {
            Some(s) if choices.contains(&s) => Ok(()),
            _ => fail(&format!("expected one of {}", choices.join(", "))),
        },
        ParamType::Json => match value {
            Value::Object(_) => Ok(()),
            _ => fail("expected JSON object"),
        },
    }
}

/// Every artifact reference in validated params: (param, id, required kind).
pub fn artifact_refs(
    schema: &[ParamSpec],
    params: &BTreeMap<String, Value>,
) -> Vec<(String, ArtifactId, Option<MediaKind>)> {
    let mut refs = Vec::new();
    for spec in schema {
        let Some(value) = params.get(&spec.name) else {
            continue;
        };
        match spec.ty {
            ParamType::Artifact(kind) => {
                if let Some(id) = value.as_str() {
                    refs.push((spec.name.clone(), ArtifactId::from(id), kind));
                }
            }
            ParamType::ArtifactList(kind) => {
                for id in value.as_array().into_iter().flatten().filter_map(Value::as_str) {
                    refs.push((spec.name.clone(), ArtifactId::from(id), kind));
                }
            }
            _ => {}
        }
    }
    refs
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn schema() -> Vec<ParamSpec> {
        vec![
            ParamSpec::required("prompt", ParamType::String),
            ParamSpec::optional("duration_ms", ParamType::PositiveInteger).with_default(5000),
            ParamSpec::optional("mode", ParamType::OneOf(&["a", "b"])),
        ]
    }

    fn obj(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn fills_defaults() {
        let out = validate(&schema(), &obj(json!({"prompt": "x"}))).unwrap();
        assert_eq!(out["duration_ms"], json!(5000));
        assert!(!out.contains_key("mode"));
    }

    #[test]
    fn rejects_missing_unknown_and_mistyped() {
        assert_eq!(validate(&schema(), &obj(json!({}))).unwrap_err().param, "prompt");
        assert_eq!(
            validate(&schema(), &obj(json!({"prompt": "x", "zzz": 1})))
                .unwrap_err()
                .param,
            "zzz"
        );
        assert_eq!(
            validate(&schema(), &obj(json!({"prompt": "x", "duration_ms": 0})))
                .unwrap_err()
                .param,
            "duration_ms"
        );
        assert_eq!(
            validate(&schema(), &obj(json!({"prompt": "x", "mode": "c"})))
                .unwrap_err()
                .param,
            "mode"
        );
        assert_eq!(
            validate(&schema(), &obj(json!({"prompt": " "}))).unwrap_err().param,
            "prompt"
        );
    }

    #[test]
    fn collects_artifact_refs() {
        let schema = vec![
            ParamSpec::required("image", ParamType::Artifact(Some(MediaKind::Image))),
            ParamSpec::required("images", ParamType::ArtifactList(None)),
        ];
        let out = validate(&schema, &obj(json!({"image": "a", "images": ["b", "c"]}))).unwrap();
        let refs: Vec<_> = artifact_refs(&schema, &out).into_iter().map(|r| r.1 .0).collect();
        assert_eq!(refs, vec!["a", "b", "c"]);
    }
}
