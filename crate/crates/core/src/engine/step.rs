//! Step definitions and the context a step body runs in.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::future::Future;
use std::sync::Arc;
use std::time::Duration;

use futures::future::BoxFuture;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::log::RunLog;
use super::run::{ErrorInfo, EventPayload, StepAction, StepHeader};
use crate::error::{ErrorCode, RetryClass};
use crate::media::{ArtifactId, Lineage, MediaArtifact, MediaKind, Producer, SynthMedia};
use crate::registry::{InvokeRequest, InvokeResult, Registry};

/// Delay between attempts of a retried capability call.
pub const RETRY_BACKOFF: Duration = Duration::from_millis(100);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Total attempts per capability call, at least 1.
    pub max_attempts: u32,
    pub retry_on: BTreeSet<RetryClass>,
}

impl RetryPolicy {
    pub fn none() -> Self {
        RetryPolicy {
            max_attempts: 1,
            retry_on: BTreeSet::new(),
        }
    }

    pub fn attempts(max_attempts: u32) -> Self {
        RetryPolicy {
            max_attempts: max_attempts.max(1),
            retry_on: RetryClass::ALL.into_iter().collect(),
        }
    }

    pub fn allows(&self, class: Option<RetryClass>, attempt: u32) -> bool {
        attempt < self.max_attempts && class.is_some_and(|c| self.retry_on.contains(&c))
    }
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy::attempts(3)
    }
}

/// Failure of a step body, carrying the stable code of its cause.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepError {
    pub code: &'static str,
    pub message: String,
    pub retry: Option<RetryClass>,
}

impl StepError {
    pub fn new(code: &'static str, message: impl Into<String>) -> Self {
        StepError {
            code,
            message: message.into(),
            retry: None,
        }
    }

    pub fn info(&self) -> ErrorInfo {
        ErrorInfo {
            code: self.code.to_string(),
            message: self.message.clone(),
        }
    }
}

impl<E: ErrorCode> From<E> for StepError {
    fn from(e: E) -> Self {
        StepError {
            code: e.code(),
            message: e.to_string(),
            retry: e.retry_class(),
        }
    }
}

impl fmt::Display for StepError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

/// What a step hands to later steps.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StepOutput {
    pub artifacts: Vec<ArtifactId>,
    pub value: Value,
}

impl StepOutput {
    pub fn new(artifacts: Vec<ArtifactId>, value: Value) -> Self {
        StepOutput { artifacts, value }
    }

    pub fn artifact(id: ArtifactId) -> Self {
        StepOutput {
            artifacts: vec![id],
            value: Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InputRef {
    Param(String),
    Step(String),
}

/// The declared inputs of a step, resolved.
#[derive(Debug, Clone, Default)]
pub struct StepInputs {
    params: Arc<BTreeMap<String, Value>>,
    steps: Arc<BTreeMap<String, StepOutput>>,
}

impl StepInputs {
    pub(crate) fn new(params: BTreeMap<String, Value>, steps: BTreeMap<String, StepOutput>) -> Self {
        StepInputs {
            params: Arc::new(params),
            steps: Arc::new(steps),
        }
    }

    pub fn param(&self, name: &str) -> Result<&Value, StepError> {
        self.params
            .get(name)
            .ok_or_else(|| StepError::new("MISSING_INPUT", format!("parameter {name:?} is not an input")))
    }

    pub fn opt_param(&self, name: &str) -> Option<&Value> {
        self.params.get(name)
    }

    pub fn str(&self, name: &str) -> Result<&str, StepError> {
        self.param(name)?
            .as_str()
            .ok_or_else(|| StepError::new("BAD_INPUT", format!("parameter {name:?} is not a string")))
    }

    pub fn u64(&self, name: &str) -> Result<u64, StepError> {
        self.param(name)?
            .as_u64()
            .ok_or_else(|| StepError::new("BAD_INPUT", format!("parameter {name:?} is not an integer")))
    }

    pub fn step(&self, name: &str) -> Result<&StepOutput, StepError> {
        self.steps
            .get(name)
            .ok_or_else(|| StepError::new("MISSING_INPUT", format!("step {name:?} is not an input")))
    }

    pub fn step_value<T: for<'de> Deserialize<'de>>(&self, name: &str) -> Result<T, StepError> {
        serde_json::from_value(self.step(name)?.value.clone())
            .map_err(|e| StepError::new("BAD_INPUT", format!("value of step {name:?}: {e}")))
    }
}

pub type StepFuture = BoxFuture<'static, Result<StepOutput, StepError>>;
type SingleFn = dyn Fn(StepContext, StepInputs) -> StepFuture + Send + Sync;
type PlanFn = dyn Fn(&StepInputs) -> Result<Vec<Value>, StepError> + Send + Sync;
type TaskFn = dyn Fn(StepContext, StepInputs, Value) -> StepFuture + Send + Sync;

#[derive(Clone)]
pub enum StepBody {
    Single(Arc<SingleFn>),
    /// One task per planned item, run concurrently and joined in plan order.
    FanOut {
        plan: Arc<PlanFn>,
        task: Arc<TaskFn>,
    },
}

#[derive(Clone)]
pub struct StepSpec {
    pub name: String,
    pub action: StepAction,
    pub inputs: Vec<InputRef>,
    pub retry: RetryPolicy,
    pub body: StepBody,
}

impl StepSpec {
    pub fn single<F, Fut>(name: &str, action: StepAction, body: F) -> Self
    where
        F: Fn(StepContext, StepInputs) -> Fut + Send + Sync + 'static,
        Fut: Future<Output = Result<StepOutput, StepError>> + Send + 'static,
    {
        StepSpec {
            name: name.to_string(),
            action,
            inputs: Vec::new(),
            retry: RetryPolicy::default(),
            body: StepBody::Single(Arc::new(move |ctx, inputs| Box::pin(body(ctx, inputs)))),
        }
    }

    pub fn fan_out<P, F, Fut>(name: &str, action: StepAction, plan: P, task: F) -> Self
    where
        P: Fn(&StepInputs) -> Result<Vec<Value>, StepError> + Send + Sync + 'static,
        F: Fn(StepContext, StepInputs, Value) -> Fut + Send + Sync + 'static,
        Fut: Future<Output = Result<StepOutput, StepError>> + Send + 'static,
    {
        StepSpec {
            name: name.to_string(),
            action,
            inputs: Vec::new(),
            retry: RetryPolicy::default(),
            body: StepBody::FanOut {
                plan: Arc::new(plan),
                task: Arc::new(move |ctx, inputs, item| Box::pin(task(ctx, inputs, item))),
            },
        }
    }

    pub fn param(mut self, name: &str) -> Self {
        self.inputs.push(InputRef::Param(name.to_string()));
        self
    }

    pub fn after(mut self, step: &str) -> Self {
        self.inputs.push(InputRef::Step(step.to_string()));
        self
    }

    pub fn retry(mut self, policy: RetryPolicy) -> Self {
        self.retry = policy;
        self
    }

    pub fn header(&self) -> StepHeader {
        StepHeader {
            name: self.name.clone(),
            action: self.action.clone(),
            parallel: matches!(self.body, StepBody::FanOut { .. }),
        }
    }
}

impl fmt::Debug for StepSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StepSpec")
            .field("name", &self.name)
            .field("action", &self.action)
            .field("inputs", &self.inputs)
            .field("retry", &self.retry)
            .finish_non_exhaustive()
    }
}

/// Handle a step body uses to call capabilities and store artifacts. Every
/// artifact is stored with this step as producer before its
/// `artifact_produced` event is emitted.
#[derive(Clone)]
pub struct StepContext {
    pub(crate) registry: Arc<Registry>,
    pub(crate) log: Arc<RunLog>,
    pub(crate) step_index: usize,
    pub(crate) step_name: String,
    pub(crate) retry: RetryPolicy,
}

impl StepContext {
    pub fn run_id(&self) -> &str {
        self.log.run_id()
    }

    pub fn step_index(&self) -> usize {
        self.step_index
    }

    fn producer(&self) -> Producer {
        Producer::Step {
            run_id: self.log.run_id().to_string(),
            step_index: self.step_index,
        }
    }

    fn produced(&self, artifact_id: &ArtifactId, artifact_kind: MediaKind) {
        self.log.emit(EventPayload::ArtifactProduced {
            step_index: self.step_index,
            step: self.step_name.clone(),
            artifact_id: artifact_id.clone(),
            artifact_kind,
        });
    }

    /// Calls a capability through the registry under this step's retry
    /// policy, emitting `step_retried` before each further attempt.
    pub async fn invoke(&self, request: InvokeRequest) -> Result<InvokeResult, StepError> {
        let mut attempt = 1;
        loop {
            match self.registry.invoke_as(&request, self.producer()).await {
                Ok(result) => {
                    self.produced(&result.artifact_id, request.capability.output_kind());
                    return Ok(result);
                }
                Err(e) => {
                    let err = StepError::from(e);
                    if !self.retry.allows(err.retry, attempt) {
                        return Err(err);
                    }
                    self.log.emit(EventPayload::StepRetried {
                        step_index: self.step_index,
                        step: self.step_name.clone(),
                        attempt,
                        error: err.info(),
                    });
                    attempt += 1;
                    tokio::time::sleep(RETRY_BACKOFF).await;
                }
            }
        }
    }

    /// Stores an artifact computed in-process.
    pub fn put(&self, payload: SynthMedia, inputs: Vec<ArtifactId>) -> Result<ArtifactId, StepError> {
        let kind = payload.kind;
        let id = self.registry.store().put(
            payload,
            Lineage {
                producer: self.producer(),
                inputs,
            },
        )?;
        self.produced(&id, kind);
        Ok(id)
    }

    pub fn load(&self, id: &ArtifactId) -> Result<Arc<MediaArtifact>, StepError> {
        Ok(self.registry.store().get(id)?)
    }

    /// Text of a text artifact.
    pub fn load_text(&self, id: &ArtifactId) -> Result<String, StepError> {
        let artifact = self.load(id)?;
        artifact.payload.expect_kind(MediaKind::Text)?;
        Ok(artifact.payload.text.clone())
    }
}
