use serde::{Deserialize, Serialize};

/// Output contract appended to every instruction: one quoted span per line.
pub const DEFAULT_FORMAT_SUFFIX: &str = "\n\nList every highlighted part on its own line, wrapped in double quotes \
and copied exactly from the text. Output nothing else. If nothing should be highlighted, output nothing.\n\nText: ";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTemplate {
    pub id: String,
    pub instruction: String,
    #[serde(default = "default_suffix")]
    pub format_suffix: String,
}

fn default_suffix() -> String {
    DEFAULT_FORMAT_SUFFIX.to_string()
}

impl PromptTemplate {
    pub fn new(id: impl Into<String>, instruction: impl Into<String>) -> Self {
        PromptTemplate { id: id.into(), instruction: instruction.into(), format_suffix: default_suffix() }
    }

    /// `instruction + format_suffix + text`.
    pub fn render(&self, text: &str) -> String {
        let mut out = String::with_capacity(self.instruction.len() + self.format_suffix.len() + text.len());
        out.push_str(&self.instruction);
        out.push_str(&self.format_suffix);
        out.push_str(text);
        out
    }

    /// Highlight mentions of, or implicit references to, the target.
    pub fn prompt1() -> Self {
        PromptTemplate::new(
            "prompt1",
            "Given the text highlight or underline parts of the text that mention or refer to the specific target. \
The target is sometimes not explicitly mentioned and you have to look for parts that implicitly refer to the target.",
        )
    }

    /// Highlight several spans referring to a targeted protected group.
    pub fn prompt2() -> Self {
        PromptTemplate::new(
            "prompt2",
            "The task is to highlight multiple text spans from the given input hate speech content that explicitly \
and/or implicitly mentions, refers to a specific protected group or their representation or characteristics that \
have been targeted.",
        )
    }

    pub fn builtin() -> Vec<Self> {
        vec![Self::prompt1(), Self::prompt2()]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn render_concatenates() {
        let p = PromptTemplate { id: "x".into(), instruction: "Find.".into(), format_suffix: "|".into() };
        assert_eq!(p.render("body"), "Find.|body");
        let p = PromptTemplate::prompt1();
        assert!(p.render("abc").starts_with(&p.instruction));
        assert!(p.render("abc").ends_with("Text: abc"));
    }

    #[test]
    fn suffix_defaults_when_missing() {
        let p: PromptTemplate = serde_json::from_str(r#"{"id":"p","instruction":"i"}"#).unwrap();
        assert_eq!(p.format_suffix, DEFAULT_FORMAT_SUFFIX);
    }
}
