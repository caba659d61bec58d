//! Run records and the event fold that rebuilds them.

use std::collections::BTreeMap;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::media::{ArtifactId, MediaKind};
use crate::registry::CapabilityId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunState {
    Pending,
    Running,
    Succeeded,
    Failed,
}

impl RunState {
    pub fn is_terminal(self) -> bool {
        matches!(self, RunState::Succeeded | RunState::Failed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepState {
    Pending,
    Running,
    Succeeded,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub code: String,
    pub message: String,
}

/// What a step does: call capabilities through the registry, or transform
/// artifacts in-process.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StepAction {
    Invoke { capabilities: Vec<CapabilityId> },
    Internal,
}

impl StepAction {
    pub fn invoke(capabilities: &[CapabilityId]) -> Self {
        StepAction::Invoke {
            capabilities: capabilities.to_vec(),
        }
    }
}

/// Static description of a step, as published with its skill.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepHeader {
    pub name: String,
    pub action: StepAction,
    pub parallel: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    #[serde(flatten)]
    pub header: StepHeader,
    pub state: StepState,
    pub attempts: u32,
    /// Every artifact stored while the step ran, in emission order.
    pub produced: Vec<ArtifactId>,
    /// The artifacts the step hands to later steps, in declared order.
    pub outputs: Vec<ArtifactId>,
    pub value: Value,
    pub error: Option<ErrorInfo>,
}

impl StepRecord {
    fn pending(header: StepHeader) -> Self {
        StepRecord {
            header,
            state: StepState::Pending,
            attempts: 0,
            produced: Vec::new(),
            outputs: Vec::new(),
            value: Value::Null,
            error: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkillRun {
    pub run_id: String,
    pub skill_name: String,
    pub params: BTreeMap<String, Value>,
    pub state: RunState,
    pub steps: Vec<StepRecord>,
    pub final_outputs: Vec<ArtifactId>,
    pub started_at: Option<DateTime<Utc>>,
    pub ended_at: Option<DateTime<Utc>>,
    pub error: Option<ErrorInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum EventPayload {
    RunStarted {
        skill_name: String,
        params: BTreeMap<String, Value>,
        steps: Vec<StepHeader>,
    },
    StepStarted {
        step_index: usize,
        step: String,
    },
    ArtifactProduced {
        step_index: usize,
        step: String,
        artifact_id: ArtifactId,
        artifact_kind: MediaKind,
    },
    StepRetried {
        step_index: usize,
        step: String,
        /// The attempt that failed, counting from 1.
        attempt: u32,
        error: ErrorInfo,
    },
    StepFailed {
        step_index: usize,
        step: String,
        error: ErrorInfo,
    },
    StepSucceeded {
        step_index: usize,
        step: String,
        outputs: Vec<ArtifactId>,
        value: Value,
    },
    RunFinished {
        state: RunState,
        final_outputs: Vec<ArtifactId>,
        error: Option<ErrorInfo>,
    },
}

impl EventPayload {
    pub fn kind(&self) -> &'static str {
        match self {
            EventPayload::RunStarted { .. } => "run_started",
            EventPayload::StepStarted { .. } => "step_started",
            EventPayload::ArtifactProduced { .. } => "artifact_produced",
            EventPayload::StepRetried { .. } => "step_retried",
            EventPayload::StepFailed { .. } => "step_failed",
            EventPayload::StepSucceeded { .. } => "step_succeeded",
            EventPayload::RunFinished { .. } => "run_finished",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEvent {
    pub run_id: String,
    /// Gapless per run, starting at 0.
    pub seq: u64,
    pub at: DateTime<Utc>,
    #[serde(flatten)]
    pub event: EventPayload,
}

impl RunEvent {
    pub fn kind(&self) -> &'static str {
        self.event.kind()
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.event, EventPayload::RunFinished { .. })
    }
}

impl SkillRun {
    /// A run that has been accepted but has not emitted anything.
    pub fn pending(
        run_id: impl Into<String>,
        skill_name: impl Into<String>,
        params: BTreeMap<String, Value>,
        steps: Vec<StepHeader>,
    ) -> Self {
        SkillRun {
            run_id: run_id.into(),
            skill_name: skill_name.into(),
            params,
            state: RunState::Pending,
            steps: steps.into_iter().map(StepRecord::pending).collect(),
            final_outputs: Vec::new(),
            started_at: None,
            ended_at: None,
            error: None,
        }
    }

    /// Folds one event into the record. Live execution and replay both go
    /// through here.
    pub fn apply(&mut self, event: &RunEvent) {
        match &event.event {
            EventPayload::RunStarted {
                skill_name,
                params,
                steps,
            } => {
                *self = SkillRun::pending(&event.run_id, skill_name, params.clone(), steps.clone());
                self.state = RunState::Running;
                self.started_at = Some(event.at);
            }
            EventPayload::StepStarted { step_index, .. } => {
                if let Some(s) = self.steps.get_mut(*step_index) {
                    s.state = StepState::Running;
                    s.attempts = 1;
                }
            }
            EventPayload::ArtifactProduced {
                step_index,
                artifact_id,
                ..
            } => {
                if let Some(s) = self.steps.get_mut(*step_index) {
                    s.produced.push(artifact_id.clone());
                }
            }
            EventPayload::StepRetried { step_index, .. } => {
                if let Some(s) = self.steps.get_mut(*step_index) {
                    s.attempts += 1;
                }
            }
            EventPayload::StepFailed { step_index, error, .. } => {
                if let Some(s) = self.steps.get_mut(*step_index) {
                    s.state = StepState::Failed;
                    s.error = Some(error.clone());
                }
            }
            EventPayload::StepSucceeded {
                step_index,
                outputs,
                value,
                ..
            } => {
                if let Some(s) = self.steps.get_mut(*step_index) {
                    s.state = StepState::Succeeded;
                    s.outputs = outputs.clone();
                    s.value = value.clone();
                }
            }
            EventPayload::RunFinished {
                state,
                final_outputs,
                error,
            } => {
                self.state = *state;
                self.final_outputs = final_outputs.clone();
                self.error = error.clone();
                self.ended_at = Some(event.at);
            }
        }
    }

    /// Rebuilds a record from its full event log.
    pub fn replay<'a>(run_id: &str, events: impl IntoIterator<Item = &'a RunEvent>) -> SkillRun {
        let mut run = SkillRun::pending(run_id, "", BTreeMap::new(), Vec::new());
        for event in events {
            run.apply(event);
        }
        run
    }

    /// The failed step, if any.
    pub fn failure_frontier(&self) -> Option<usize> {
        self.steps.iter().position(|s| s.state == StepState::Failed)
    }
}
