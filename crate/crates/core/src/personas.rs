//! Heat-sensitive agent profiles and the perception prompt they condition.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum PersonaError {
    #[error("unresolved placeholder `{{{0}}}`")]
    MissingPlaceholder(String),
    #[error("invalid persona `{name}`: {reason}")]
    Invalid { name: String, reason: String },
    #[error("malformed persona file: {0}")]
    Parse(String),
    #[error("malformed prompt template: {0}")]
    Template(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Male,
    Female,
}

impl fmt::Display for Gender {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gender::Male => "male",
            Gender::Female => "female",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncomeLevel {
    Low,
    #[serde(alias = "low-middle")]
    LowMiddle,
    Middle,
    High,
}

impl IncomeLevel {
    pub fn label(self) -> &'static str {
        match self {
            IncomeLevel::Low => "low",
            IncomeLevel::LowMiddle => "low_middle",
            IncomeLevel::Middle => "middle",
            IncomeLevel::High => "high",
        }
    }
}

impl fmt::Display for IncomeLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IncomeLevel::Low => "low",
            IncomeLevel::LowMiddle => "low-middle",
            IncomeLevel::Middle => "middle",
            IncomeLevel::High => "high",
        })
    }
}

/// Age bands used for grouping: young < 40, middle 40–59, senior ≥ 60.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgeBand {
    Young,
    Middle,
    Senior,
}

impl AgeBand {
    pub fn of(age: u32) -> Self {
        match age {
            0..=39 => AgeBand::Young,
            40..=59 => AgeBand::Middle,
            _ => AgeBand::Senior,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            AgeBand::Young => "young",
            AgeBand::Middle => "middle",
            AgeBand::Senior => "senior",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Persona {
    pub name: String,
    pub gender: Gender,
    pub age: u32,
    pub income: IncomeLevel,
    pub occupation: String,
    /// Comfort weight in the planning cost.
    pub heat_sensitivity_lambda: f64,
    /// Propensity to pick candidates other than the cheapest, in `[0, 1]`.
    pub exploration: f64,
}

/// Default heat sensitivity: older walkers weight comfort more.
pub fn derived_lambda(age: u32) -> f64 {
    0.5 + 0.02 * (age as f64 - 40.0).max(0.0)
}

/// Default exploration: high-income walkers roam more freely.
pub fn derived_exploration(income: IncomeLevel) -> f64 {
    if income == IncomeLevel::High {
        0.6
    } else {
        0.3
    }
}

impl Persona {
    /// Builds a persona with derived λ and exploration.
    pub fn new(name: &str, gender: Gender, age: u32, income: IncomeLevel, occupation: &str) -> Self {
        Persona {
            name: name.to_string(),
            gender,
            age,
            income,
            occupation: occupation.to_string(),
            heat_sensitivity_lambda: derived_lambda(age),
            exploration: derived_exploration(income),
        }
    }

    pub fn age_band(&self) -> AgeBand {
        AgeBand::of(self.age)
    }

    pub fn validate(&self) -> Result<(), PersonaError> {
        let invalid = |reason: &str| PersonaError::Invalid {
            name: self.name.clone(),
            reason: reason.to_string(),
        };
        if self.name.trim().is_empty() {
            return Err(invalid("empty name"));
        }
        if self.age == 0 {
            return Err(invalid("age must be positive"));
        }
        if !(self.heat_sensitivity_lambda.is_finite() && self.heat_sensitivity_lambda >= 0.0) {
            return Err(invalid("heat_sensitivity_lambda must be finite and >= 0"));
        }
        if !(0.0..=1.0).contains(&self.exploration) {
            return Err(invalid("exploration must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// The eight built-in heat-sensitive profiles.
pub fn builtin_personas() -> Vec<Persona> {
    use Gender::*;
    use IncomeLevel::*;
    vec![
        Persona::new("Alex", Male, 31, Middle, "Graphic designer"),
        Persona::new("Bob", Male, 68, LowMiddle, "Retired worker"),
        Persona::new("Emma", Female, 75, High, "Retired teacher"),
        Persona::new("Lisa", Female, 42, High, "Company CEO"),
        Persona::new("Maria", Female, 55, LowMiddle, "School janitor"),
        Persona::new("Ryan", Male, 23, Middle, "Software engineer"),
        Persona::new("Sara", Female, 28, Low, "Hospital nurse"),
        Persona::new("Tom", Male, 35, Middle, "Urban planner"),
    ]
}

#[derive(Deserialize)]
struct PersonaRecord {
    name: String,
    gender: Gender,
    age: u32,
    income: IncomeLevel,
    occupation: String,
    heat_sensitivity_lambda: Option<f64>,
    exploration: Option<f64>,
}

/// Parses a JSON list of personas; missing λ / exploration are derived.
pub fn load_personas(source: &str) -> Result<Vec<Persona>, PersonaError> {
    let records: Vec<PersonaRecord> = serde_json::from_str(source).map_err(|e| PersonaError::Parse(e.to_string()))?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(records.len());
    for r in records {
        let p = Persona {
            heat_sensitivity_lambda: r.heat_sensitivity_lambda.unwrap_or_else(|| derived_lambda(r.age)),
            exploration: r.exploration.unwrap_or_else(|| derived_exploration(r.income)),
            name: r.name,
            gender: r.gender,
            age: r.age,
            income: r.income,
            occupation: r.occupation,
        };
        p.validate()?;
        if !seen.insert(p.name.clone()) {
            return Err(PersonaError::Invalid {
                name: p.name,
                reason: "duplicate name".into(),
            });
        }
        out.push(p);
    }
    Ok(out)
}

pub const DEFAULT_TEMPLATE: &str = include_str!("assets/default_prompt.txt");

/// Task sentence substituted for `{task}`.
pub const SCORING_TASK: &str = "Rate how thermally comfortable walking through this scene would feel to you right now, from 0 (unbearable) to 1 (fully comfortable), and explain the main reason briefly.";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    pub system_text: String,
    pub user_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RenderedPrompt {
    pub system: String,
    pub user: String,
}

impl RenderedPrompt {
    pub fn text(&self) -> String {
        format!("{}\n\n{}", self.system, self.user)
    }
}

impl PromptTemplate {
    pub fn new(system_text: impl Into<String>, user_text: impl Into<String>) -> Self {
        PromptTemplate {
            system_text: system_text.into(),
            user_text: user_text.into(),
        }
    }

    /// Parses a template asset split by `[system]` and `[user]` header lines.
    pub fn parse(text: &str) -> Result<Self, PersonaError> {
        let mut system = None::<Vec<&str>>;
        let mut user = None::<Vec<&str>>;
        let mut current: Option<&mut Vec<&str>> = None;
        for line in text.lines() {
            match line.trim() {
                "[system]" => current = Some(system.insert(Vec::new())),
                "[user]" => current = Some(user.insert(Vec::new())),
                _ => match current.as_mut() {
                    Some(buf) => buf.push(line),
                    None if line.trim().is_empty() => {}
                    None => return Err(PersonaError::Template("text before the [system] header".into())),
                },
            }
        }
        match (system, user) {
            (Some(s), Some(u)) => Ok(PromptTemplate::new(
                s.join("\n").trim().to_string(),
                u.join("\n").trim().to_string(),
            )),
            _ => Err(PersonaError::Template(
                "template needs both [system] and [user] sections".into(),
            )),
        }
    }
}

impl Default for PromptTemplate {
    fn default() -> Self {
        PromptTemplate::parse(DEFAULT_TEMPLATE).expect("shipped template parses")
    }
}

/// Substitutes `{key}` placeholders. Only brace groups made of lowercase
/// letters and underscores are placeholders; any other brace text is kept.
fn substitute(text: &str, lookup: &dyn Fn(&str) -> Option<String>) -> Result<String, PersonaError> {
    let mut out = String::with_capacity(text.len());
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let key_len = after
            .find(|c: char| !(c.is_ascii_lowercase() || c == '_'))
            .unwrap_or(after.len());
        if key_len > 0 && after[key_len..].starts_with('}') {
            let key = &after[..key_len];
            let value = lookup(key).ok_or_else(|| PersonaError::MissingPlaceholder(key.to_string()))?;
            out.push_str(&value);
            rest = &after[key_len + 1..];
        } else {
            out.push('{');
            rest = after;
        }
    }
    out.push_str(rest);
    Ok(out)
}

/// Renders the template for one persona and scene with the default task.
pub fn render_prompt(tpl: &PromptTemplate, p: &Persona, scene_ref: &str) -> Result<RenderedPrompt, PersonaError> {
    render_prompt_with_task(tpl, p, scene_ref, SCORING_TASK)
}

pub fn render_prompt_with_task(
    tpl: &PromptTemplate,
    p: &Persona,
    scene_ref: &str,
    task: &str,
) -> Result<RenderedPrompt, PersonaError> {
    let lookup = |key: &str| -> Option<String> {
        Some(match key {
            "name" => p.name.clone(),
            "gender" => p.gender.to_string(),
            "age" => p.age.to_string(),
            "income" => p.income.to_string(),
            "occupation" => p.occupation.clone(),
            "scene_ref" => scene_ref.to_string(),
            "task" => task.to_string(),
            _ => return None,
        })
    };
    Ok(RenderedPrompt {
        system: substitute(&tpl.system_text, &lookup)?,
        user: substitute(&tpl.user_text, &lookup)?,
    })
}
