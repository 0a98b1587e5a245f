//! Prompt assembly and the closed response schema.

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use super::anonymize::Anonymizer;
use super::AnnotatorError;
use crate::codebook::{parse_date, Codebook, Dimension, ValueKind};
use crate::corpus::PolicyDocument;

/// Version tag of the nine-field response schema.
pub const SCHEMA_VERSION: &str = "codebook-9-v1";
/// Version tag of the discovery variant carrying the extra `org` field.
pub const DISCOVERY_SCHEMA_VERSION: &str = "codebook-9-org-v1";

const SYSTEM_MESSAGE: &str = "You are a legal annotation assistant. You read one website privacy \
policy at a time and answer a fixed set of codebook questions about it. The policy may be written \
in German, French, Italian or English; read it in its original language and do not translate it. \
Annotate only what the policy explicitly states about the website operator's own practices and \
ignore sections that concern jurisdictions other than Switzerland or the European Union. \
Boolean fields are true only when the policy explicitly mentions the element. Global rules: if \
ispol is false, every other boolean must be false and upd must be \"NA\". Dates are formatted \
DD/MM/YYYY; when several dates are mentioned choose the most recent one; when none is mentioned \
answer \"NA\". Reply with a single JSON object that conforms to the provided schema and nothing \
else.";

const ORG_INSTRUCTIONS: &str = "Exploratory field `org`: if the policy states that it was \
created with the help of a tool, generator, template or service, copy the name of that tool or \
provider verbatim; otherwise answer with an empty string.";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_message: String,
    pub codebook_message: String,
    pub policy_message: String,
    pub schema_version: String,
}

impl PromptBundle {
    /// The three chat messages in request order.
    pub fn messages(&self) -> Value {
        json!([
            {"role": "system", "content": self.system_message},
            {"role": "user", "content": self.codebook_message},
            {"role": "user", "content": self.policy_message},
        ])
    }
}

/// Renders the codebook as the first user message.
pub fn codebook_message(codebook: &Codebook, discovery: bool) -> String {
    let mut out = String::from("Answer the following codebook questions for the policy in the next message.\n");
    for (i, dim) in codebook.dimensions().iter().enumerate() {
        out.push_str(&format!("\nQ{} `{}`: {}\n", i + 1, dim.code, dim.question));
        out.push_str(&format!("Legal basis: {}\n", dim.legal_basis));
        let kind = match dim.value_kind {
            ValueKind::Boolean => "boolean",
            ValueKind::Date => "string, DD/MM/YYYY or \"NA\"",
        };
        out.push_str(&format!("Answer type: {kind}\n"));
        if !dim.instructions.is_empty() {
            out.push_str(&format!("Decision rule: {}\n", dim.instructions));
        }
        if !dim.positive_example.is_empty() {
            out.push_str(&format!("Positive example: {}\n", dim.positive_example));
        }
        if !dim.negative_example.is_empty() {
            out.push_str(&format!("Negative example: {}\n", dim.negative_example));
        }
    }
    if discovery {
        out.push('\n');
        out.push_str(ORG_INSTRUCTIONS);
        out.push('\n');
    }
    out
}

/// Assembles the system message and the two user messages for one policy.
pub fn build_prompt(
    codebook: &Codebook,
    policy: &PolicyDocument,
    anonymizer: &dyn Anonymizer,
    discovery: bool,
) -> Result<PromptBundle, AnnotatorError> {
    let anonymized = anonymizer.anonymize(&policy.text);
    if anonymized.text.trim().is_empty() {
        return Err(AnnotatorError::EmptyPolicy(policy.doc_id.clone()));
    }
    Ok(PromptBundle {
        system_message: SYSTEM_MESSAGE.to_string(),
        codebook_message: codebook_message(codebook, discovery),
        policy_message: anonymized.text,
        schema_version: if discovery { DISCOVERY_SCHEMA_VERSION } else { SCHEMA_VERSION }.to_string(),
    })
}

/// JSON schema sent with the structured-output request.
pub fn response_schema(discovery: bool) -> Value {
    let mut properties = Map::new();
    let mut required = Vec::new();
    for dim in Dimension::ALL {
        let ty = match dim.value_kind() {
            ValueKind::Boolean => json!({"type": "boolean"}),
            ValueKind::Date => json!({"type": "string", "description": "DD/MM/YYYY or NA"}),
        };
        properties.insert(dim.code().to_string(), ty);
        required.push(Value::from(dim.code()));
    }
    if discovery {
        properties.insert("org".into(), json!({"type": "string"}));
        required.push(Value::from("org"));
    }
    json!({
        "type": "object",
        "properties": properties,
        "required": required,
        "additionalProperties": false,
    })
}

/// Checks a parsed response against the closed schema and returns the list
/// of violations (empty when valid).
pub fn schema_violations(value: &Value, discovery: bool) -> Vec<String> {
    let Some(obj) = value.as_object() else {
        return vec!["response is not a JSON object".into()];
    };
    let mut violations = Vec::new();
    for dim in Dimension::ALL {
        match (obj.get(dim.code()), dim.value_kind()) {
            (None, _) => violations.push(format!("missing field `{dim}`")),
            (Some(Value::Bool(_)), ValueKind::Boolean) => {}
            (Some(Value::String(s)), ValueKind::Date) => {
                if s.trim() != "NA" && parse_date(s).is_none() {
                    violations.push(format!("`upd` is not a valid date: `{s}`"));
                }
            }
            (Some(other), kind) => {
                violations.push(format!("field `{dim}` has wrong type ({kind:?} expected, got {other})"))
            }
        }
    }
    match obj.get("org") {
        Some(Value::String(_)) if discovery => {}
        Some(_) if discovery => violations.push("field `org` must be a string".into()),
        None if discovery => violations.push("missing field `org`".into()),
        _ => {}
    }
    for key in obj.keys() {
        let known = Dimension::ALL.iter().any(|d| d.code() == key) || (discovery && key == "org");
        if !known {
            violations.push(format!("unknown field `{key}`"));
        }
    }
    violations
}
