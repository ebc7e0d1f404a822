use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;

/// Every JSON document we write is wrapped in this envelope.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope<T> {
    pub tm_schema: u32,
    pub kind: String,
    pub data: T,
}

#[derive(Debug, Error)]
pub enum JsonError {
    #[error("malformed JSON: {0}")]
    Syntax(#[from] serde_json::Error),
    #[error("unsupported schema version {0}")]
    Schema(u32),
    #[error("expected a `{expected}` document, found `{found}`")]
    Kind { expected: String, found: String },
}

/// Pretty JSON with a trailing newline.
pub fn export_json<T: Serialize>(kind: &str, data: &T) -> String {
    let env = Envelope {
        tm_schema: SCHEMA_VERSION,
        kind: kind.to_string(),
        data,
    };
    let mut s = serde_json::to_string_pretty(&env).expect("value serializes");
    s.push('\n');
    s
}

pub fn import_json<T: DeserializeOwned>(kind: &str, text: &str) -> Result<T, JsonError> {
    let env: Envelope<serde_json::Value> = serde_json::from_str(text)?;
    if env.tm_schema != SCHEMA_VERSION {
        return Err(JsonError::Schema(env.tm_schema));
    }
    if env.kind != kind {
        return Err(JsonError::Kind {
            expected: kind.to_string(),
            found: env.kind,
        });
    }
    Ok(serde_json::from_value(env.data)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transform::UseCaseDiagram;

    #[test]
    fn envelope_round_trip_and_kind_check() {
        let d = UseCaseDiagram {
            actors: vec!["A".into()],
            use_cases: vec!["U".into()],
            associations: vec![("A".into(), "U".into())],
        };
        let text = export_json("usecase", &d);
        assert!(text.contains("\"tm_schema\": 1"));
        assert_eq!(import_json::<UseCaseDiagram>("usecase", &text).unwrap(), d);
        assert!(matches!(
            import_json::<UseCaseDiagram>("model", &text),
            Err(JsonError::Kind { .. })
        ));
        let future = text.replace("\"tm_schema\": 1", "\"tm_schema\": 9");
        assert!(matches!(
            import_json::<UseCaseDiagram>("usecase", &future),
            Err(JsonError::Schema(9))
        ));
    }
}
