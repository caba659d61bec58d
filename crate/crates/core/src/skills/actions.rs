//! Sentence splitting and keyword-driven action matching for digital humans.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    NewsBroadcasting,
    CourseLecture,
    ProductIntroduction,
    WelcomeSpeech,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::NewsBroadcasting,
        Scenario::CourseLecture,
        Scenario::ProductIntroduction,
        Scenario::WelcomeSpeech,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::NewsBroadcasting => "news_broadcasting",
            Scenario::CourseLecture => "course_lecture",
            Scenario::ProductIntroduction => "product_introduction",
            Scenario::WelcomeSpeech => "welcome_speech",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        Scenario::ALL.into_iter().find(|s| s.as_str() == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRule {
    pub keywords: Vec<String>,
    pub action_id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionRuleSet {
    /// A built-in scenario name or any custom label.
    pub scenario: String,
    pub rules: Vec<ActionRule>,
    pub default_action_id: String,
}

impl ActionRuleSet {
    pub fn builtin(scenario: Scenario) -> Self {
        let table: (&[(&[&str], &str)], &str) = match scenario {
            Scenario::NewsBroadcasting => (
                &[
                    (&["breaking", "urgent"], "emphasize_point"),
                    (&["welcome", "hello"], "wave_hand"),
                    (&["data", "percent", "%"], "present_chart"),
                ],
                "neutral_stand",
            ),
            Scenario::CourseLecture => (
                &[
                    (&["example", "for instance"], "point_board"),
                    (&["question", "?"], "open_palms"),
                    (&["summary", "remember", "key"], "count_fingers"),
                ],
                "explain_gesture",
            ),
            Scenario::ProductIntroduction => (
                &[
                    (&["price", "discount", "offer"], "present_price_tag"),
                    (&["feature", "design", "new"], "show_product"),
                    (&["buy", "order", "now"], "invite_gesture"),
                ],
                "neutral_stand",
            ),
            Scenario::WelcomeSpeech => (
                &[
                    (&["welcome", "hello", "greet"], "wave_hand"),
                    (&["thank", "grateful"], "bow"),
                    (&["enjoy", "hope"], "open_arms"),
                ],
                "smile_stand",
            ),
        };
        ActionRuleSet {
            scenario: scenario.as_str().to_string(),
            rules: table
                .0
                .iter()
                .map(|(keywords, action)| ActionRule {
                    keywords: keywords.iter().map(|k| k.to_string()).collect(),
                    action_id: action.to_string(),
                })
                .collect(),
            default_action_id: table.1.to_string(),
        }
    }

    /// Empty default ids and keyword lists are rejected.
    pub fn check(&self) -> Result<(), String> {
        if self.default_action_id.trim().is_empty() {
            return Err("default_action_id must be non-empty".into());
        }
        for (i, rule) in self.rules.iter().enumerate() {
            if rule.action_id.trim().is_empty() || rule.keywords.iter().all(|k| k.is_empty()) {
                return Err(format!("rule {i} needs an action_id and at least one keyword"));
            }
        }
        Ok(())
    }
}

/// First rule with any keyword occurring case-insensitively in `sentence`.
pub fn match_action<'a>(sentence: &str, rules: &'a ActionRuleSet) -> &'a str {
    let haystack = sentence.to_lowercase();
    rules
        .rules
        .iter()
        .find(|rule| {
            rule.keywords
                .iter()
                .any(|k| !k.is_empty() && haystack.contains(&k.to_lowercase()))
        })
        .map_or(rules.default_action_id.as_str(), |rule| rule.action_id.as_str())
}

const TERMINATORS: [char; 8] = ['.', '!', '?', ';', '。', '！', '？', '；'];

/// Splits after each terminator; fragments are trimmed and empty ones dropped.
pub fn split_sentences(script: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut current = String::new();
    for c in script.chars() {
        current.push(c);
        if TERMINATORS.contains(&c) {
            push_trimmed(&mut out, &current);
            current.clear();
        }
    }
    push_trimmed(&mut out, &current);
    out
}

fn push_trimmed(out: &mut Vec<String>, fragment: &str) {
    let trimmed = fragment.trim();
    if !trimmed.is_empty() && !trimmed.chars().all(|c| TERMINATORS.contains(&c)) {
        out.push(trimmed.to_string());
    }
}
