//! Skill workflow runtime: ordered steps with optional fan-out, per-call
//! retry, lineage-stamped artifacts and a replayable event log per run.

mod log;
pub mod run;
pub mod step;

pub use log::{EVENTS_FILE, RECORD_FILE};
pub use run::{ErrorInfo, EventPayload, RunEvent, RunState, SkillRun, StepAction, StepHeader, StepRecord, StepState};
pub use step::{
    InputRef, RetryPolicy, StepBody, StepContext, StepError, StepFuture, StepInputs, StepOutput, StepSpec,
    RETRY_BACKOFF,
};

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io;
use std::panic::AssertUnwindSafe;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Duration;

use futures::{FutureExt, Stream, StreamExt};
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;
use tokio::task::JoinHandle;

use self::log::RunLog;
use crate::error::ErrorCode;
use crate::media::ArtifactId;
use crate::registry::Registry;
use crate::schema::{self, ParamSpec, SchemaViolation};

/// Code recorded on runs that were interrupted by a shutdown or crash.
pub const RESTART_CODE: &str = "RESTART";

/// A registered workflow template.
#[derive(Debug, Clone)]
pub struct Skill {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
    pub steps: Vec<StepSpec>,
    /// Steps whose outputs, concatenated in this order, are the run's
    /// final outputs.
    pub final_steps: Vec<String>,
}

impl Skill {
    /// Every step input names a parameter or an earlier step, and every
    /// final step exists.
    pub fn check(&self) -> Result<(), String> {
        let mut seen: Vec<&str> = Vec::new();
        for step in &self.steps {
            if seen.contains(&step.name.as_str()) {
                return Err(format!("duplicate step {:?}", step.name));
            }
            if step.retry.max_attempts == 0 {
                return Err(format!("step {:?}: max_attempts must be at least 1", step.name));
            }
            for input in &step.inputs {
                match input {
                    InputRef::Param(p) if !self.params.iter().any(|s| &s.name == p) => {
                        return Err(format!("step {:?} reads unknown parameter {p:?}", step.name));
                    }
                    InputRef::Step(s) if !seen.contains(&s.as_str()) => {
                        return Err(format!(
                            "step {:?} reads {s:?}, which does not run before it",
                            step.name
                        ));
                    }
                    _ => {}
                }
            }
            seen.push(&step.name);
        }
        if let Some(missing) = self.final_steps.iter().find(|f| !seen.contains(&f.as_str())) {
            return Err(format!("final step {missing:?} does not exist"));
        }
        Ok(())
    }

    pub fn descriptor(&self) -> SkillDescriptor {
        SkillDescriptor {
            name: self.name.clone(),
            description: self.description.clone(),
            params: self.params.clone(),
            steps: self.steps.iter().map(StepSpec::header).collect(),
            final_steps: self.final_steps.clone(),
        }
    }
}

/// Published shape of a skill.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkillDescriptor {
    pub name: String,
    pub description: String,
    pub params: Vec<ParamSpec>,
    pub steps: Vec<StepHeader>,
    pub final_steps: Vec<String>,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("unknown skill {0:?}")]
    UnknownSkill(String),
    #[error("skill {0:?} is already registered")]
    DuplicateSkill(String),
    #[error("invalid skill definition: {0}")]
    InvalidSkill(String),
    #[error("parameter violation: {0}")]
    ParamViolation(SchemaViolation),
    #[error("unknown run {0:?}")]
    UnknownRun(String),
    #[error("run storage: {0}")]
    Io(#[from] io::Error),
}

impl ErrorCode for EngineError {
    fn code(&self) -> &'static str {
        match self {
            EngineError::UnknownSkill(_) => "UNKNOWN_SKILL",
            EngineError::DuplicateSkill(_) => "DUPLICATE_SKILL",
            EngineError::InvalidSkill(_) => "INVALID_SKILL",
            EngineError::ParamViolation(_) => "PARAM_VIOLATION",
            EngineError::UnknownRun(_) => "UNKNOWN_RUN",
            EngineError::Io(_) => "IO_ERROR",
        }
    }

    fn details(&self) -> Map<String, Value> {
        match self {
            EngineError::ParamViolation(e) => e.details(),
            _ => Map::new(),
        }
    }
}

pub struct Engine {
    registry: Arc<Registry>,
    runs_dir: PathBuf,
    skills: RwLock<BTreeMap<String, Arc<Skill>>>,
    runs: RwLock<HashMap<String, Arc<RunLog>>>,
    tasks: Mutex<Vec<JoinHandle<()>>>,
}

impl Engine {
    /// Opens the run directory. Runs left unfinished by a previous process
    /// are closed as failed with [`RESTART_CODE`].
    pub fn open(registry: Arc<Registry>, runs_dir: impl Into<PathBuf>) -> Result<Self, EngineError> {
        let runs_dir = runs_dir.into();
        fs::create_dir_all(&runs_dir)?;
        let mut runs = HashMap::new();
        for entry in fs::read_dir(&runs_dir)? {
            let path = entry?.path();
            if !path.is_dir() {
                continue;
            }
            let log = Arc::new(RunLog::load(path)?);
            if !log.is_finished() {
                fail_run(&log, "run interrupted by restart");
            }
            runs.insert(log.run_id().to_string(), log);
        }
        Ok(Engine {
            registry,
            runs_dir,
            skills: RwLock::new(BTreeMap::new()),
            runs: RwLock::new(runs),
            tasks: Mutex::new(Vec::new()),
        })
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn runs_dir(&self) -> &Path {
        &self.runs_dir
    }

    pub fn register_skill(&self, skill: Skill) -> Result<(), EngineError> {
        skill.check().map_err(EngineError::InvalidSkill)?;
        let mut skills = self.skills.write().expect("skills lock poisoned");
        if skills.contains_key(&skill.name) {
            return Err(EngineError::DuplicateSkill(skill.name));
        }
        skills.insert(skill.name.clone(), Arc::new(skill));
        Ok(())
    }

    /// Registered skills in name order.
    pub fn skills(&self) -> Vec<SkillDescriptor> {
        self.skills
            .read()
            .expect("skills lock poisoned")
            .values()
            .map(|s| s.descriptor())
            .collect()
    }

    pub fn skill(&self, name: &str) -> Result<Arc<Skill>, EngineError> {
        self.skills
            .read()
            .expect("skills lock poisoned")
            .get(name)
            .cloned()
            .ok_or_else(|| EngineError::UnknownSkill(name.to_string()))
    }

    /// Validates params, records a pending run and starts it in the
    /// background. Must be called inside a Tokio runtime.
    pub fn run_skill(&self, name: &str, params: &Map<String, Value>) -> Result<String, EngineError> {
        let skill = self.skill(name)?;
        let params = schema::validate(&skill.params, params).map_err(EngineError::ParamViolation)?;
        for (param, id, kind) in schema::artifact_refs(&skill.params, &params) {
            let artifact = self
                .registry
                .store()
                .get(&id)
                .map_err(|e| EngineError::ParamViolation(SchemaViolation::new(&param, e.to_string())))?;
            if let Some(kind) = kind.filter(|k| *k != artifact.kind) {
                return Err(EngineError::ParamViolation(SchemaViolation::new(
                    param,
                    format!("{id} is {}, expected {kind}", artifact.kind),
                )));
            }
        }

        let run_id = format!("run_{}", uuid::Uuid::new_v4().simple());
        let headers = skill.steps.iter().map(StepSpec::header).collect();
        let record = SkillRun::pending(&run_id, &skill.name, params.clone(), headers);
        let log = Arc::new(RunLog::create(self.runs_dir.join(&run_id), record)?);

        let task = tokio::spawn(execute(self.registry.clone(), skill, params, log.clone()));
        self.runs
            .write()
            .expect("runs lock poisoned")
            .insert(run_id.clone(), log);
        let mut tasks = self.tasks.lock().expect("tasks lock poisoned");
        tasks.retain(|t| !t.is_finished());
        tasks.push(task);
        Ok(run_id)
    }

    fn log(&self, run_id: &str) -> Result<Arc<RunLog>, EngineError> {
        self.runs
            .read()
            .expect("runs lock poisoned")
            .get(run_id)
            .cloned()
            .ok_or_else(|| EngineError::UnknownRun(run_id.to_string()))
    }

    pub fn get_run(&self, run_id: &str) -> Result<SkillRun, EngineError> {
        Ok(self.log(run_id)?.record())
    }

    /// The record together with every event folded into it.
    pub fn run_view(&self, run_id: &str) -> Result<(SkillRun, Vec<RunEvent>), EngineError> {
        Ok(self.log(run_id)?.view())
    }

    /// All runs, oldest first; pending runs last.
    pub fn list_runs(&self) -> Vec<SkillRun> {
        let mut runs: Vec<SkillRun> = self
            .runs
            .read()
            .expect("runs lock poisoned")
            .values()
            .map(|log| log.record())
            .collect();
        runs.sort_by(|a, b| {
            (a.started_at.is_none(), a.started_at, &a.run_id).cmp(&(b.started_at.is_none(), b.started_at, &b.run_id))
        });
        runs
    }

    /// Events with `seq >= from_seq`, in order, ending after `run_finished`.
    pub fn stream_events(
        &self,
        run_id: &str,
        from_seq: u64,
    ) -> Result<impl Stream<Item = RunEvent> + Send + 'static, EngineError> {
        Ok(self.log(run_id)?.stream(from_seq))
    }

    /// Waits for the run to finish and returns its final record.
    pub async fn wait(&self, run_id: &str) -> Result<SkillRun, EngineError> {
        let log = self.log(run_id)?;
        let mut stream = Box::pin(log.stream(0));
        while stream.next().await.is_some() {}
        Ok(log.record())
    }

    /// Starts a run and waits for it.
    pub async fn run_to_completion(&self, name: &str, params: &Map<String, Value>) -> Result<SkillRun, EngineError> {
        let run_id = self.run_skill(name, params)?;
        self.wait(&run_id).await
    }

    /// Gives in-flight runs up to `grace` to finish; the rest are stopped
    /// and closed as failed with [`RESTART_CODE`]. Returns how many were
    /// stopped.
    pub async fn shutdown(&self, grace: Duration) -> usize {
        let tasks: Vec<JoinHandle<()>> = std::mem::take(&mut *self.tasks.lock().expect("tasks lock poisoned"));
        let deadline = tokio::time::Instant::now() + grace;
        let mut stopped = 0;
        for mut task in tasks {
            if tokio::time::timeout_at(deadline, &mut task).await.is_err() {
                task.abort();
            }
        }
        let logs: Vec<Arc<RunLog>> = self
            .runs
            .read()
            .expect("runs lock poisoned")
            .values()
            .cloned()
            .collect();
        for log in logs {
            if !log.is_finished() {
                fail_run(&log, "run interrupted by shutdown");
                stopped += 1;
            }
        }
        stopped
    }
}

fn fail_run(log: &RunLog, message: &str) {
    let error = ErrorInfo {
        code: RESTART_CODE.into(),
        message: message.into(),
    };
    let record = log.record();
    if let Some(i) = record.steps.iter().position(|s| s.state == StepState::Running) {
        log.emit(EventPayload::StepFailed {
            step_index: i,
            step: record.steps[i].header.name.clone(),
            error: error.clone(),
        });
    }
    log.emit(EventPayload::RunFinished {
        state: RunState::Failed,
        final_outputs: Vec::new(),
        error: Some(error),
    });
}

async fn execute(registry: Arc<Registry>, skill: Arc<Skill>, params: BTreeMap<String, Value>, log: Arc<RunLog>) {
    log.emit(EventPayload::RunStarted {
        skill_name: skill.name.clone(),
        params: params.clone(),
        steps: skill.steps.iter().map(StepSpec::header).collect(),
    });
    let mut outputs: BTreeMap<String, StepOutput> = BTreeMap::new();
    for (index, step) in skill.steps.iter().enumerate() {
        log.emit(EventPayload::StepStarted {
            step_index: index,
            step: step.name.clone(),
        });
        let mut step_params = BTreeMap::new();
        let mut step_inputs = BTreeMap::new();
        for input in &step.inputs {
            match input {
                InputRef::Param(p) => {
                    if let Some(v) = params.get(p) {
                        step_params.insert(p.clone(), v.clone());
                    }
                }
                InputRef::Step(s) => {
                    if let Some(o) = outputs.get(s) {
                        step_inputs.insert(s.clone(), o.clone());
                    }
                }
            }
        }
        let inputs = StepInputs::new(step_params, step_inputs);
        let ctx = StepContext {
            registry: registry.clone(),
            log: log.clone(),
            step_index: index,
            step_name: step.name.clone(),
            retry: step.retry.clone(),
        };
        let result = AssertUnwindSafe(run_body(&step.body, ctx, inputs))
            .catch_unwind()
            .await
            .unwrap_or_else(|panic| {
                let message = panic
                    .downcast_ref::<&str>()
                    .map(|s| s.to_string())
                    .or_else(|| panic.downcast_ref::<String>().cloned())
                    .unwrap_or_else(|| "step panicked".into());
                Err(StepError::new("STEP_PANICKED", message))
            });
        match result {
            Ok(output) => {
                log.emit(EventPayload::StepSucceeded {
                    step_index: index,
                    step: step.name.clone(),
                    outputs: output.artifacts.clone(),
                    value: output.value.clone(),
                });
                outputs.insert(step.name.clone(), output);
            }
            Err(error) => {
                log.emit(EventPayload::StepFailed {
                    step_index: index,
                    step: step.name.clone(),
                    error: error.info(),
                });
                log.emit(EventPayload::RunFinished {
                    state: RunState::Failed,
                    final_outputs: Vec::new(),
                    error: Some(error.info()),
                });
                return;
            }
        }
    }
    let final_outputs: Vec<ArtifactId> = skill
        .final_steps
        .iter()
        .filter_map(|s| outputs.get(s))
        .flat_map(|o| o.artifacts.iter().cloned())
        .collect();
    log.emit(EventPayload::RunFinished {
        state: RunState::Succeeded,
        final_outputs,
        error: None,
    });
}

async fn run_body(body: &StepBody, ctx: StepContext, inputs: StepInputs) -> Result<StepOutput, StepError> {
    match body {
        StepBody::Single(f) => f(ctx, inputs).await,
        StepBody::FanOut { plan, task } => {
            let items = plan(&inputs)?;
            let handles: Vec<JoinHandle<Result<StepOutput, StepError>>> = items
                .into_iter()
                .map(|item| tokio::spawn(task(ctx.clone(), inputs.clone(), item)))
                .collect();
            let mut joined = StepOutput {
                artifacts: Vec::new(),
                value: Value::Array(Vec::new()),
            };
            let mut first_error = None;
            for handle in handles {
                let result = handle
                    .await
                    .unwrap_or_else(|e| Err(StepError::new("STEP_PANICKED", e.to_string())));
                match result {
                    Ok(out) => {
                        joined.artifacts.extend(out.artifacts);
                        if let Value::Array(values) = &mut joined.value {
                            values.push(out.value);
                        }
                    }
                    Err(e) => {
                        first_error.get_or_insert(e);
                    }
                }
            }
            match first_error {
                Some(e) => Err(e),
                None => Ok(joined),
            }
        }
    }
}
