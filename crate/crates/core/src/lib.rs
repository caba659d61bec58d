//! MediaClaw: a deterministic capability middle layer for multimodal media
//! generation.
//!
//! Ten meta-capabilities sit behind one [`registry::Registry::invoke`]
//! entry point. Routed tools resolve a provider through
//! [`routing::resolve_route`] (request hint, then capability default, then
//! global default); local tools run in process. The [`engine::Engine`]
//! runs skills as ordered step lists with fan-out, per-call retry and an
//! append-only event log, and [`gateway`] exposes all of it over HTTP and
//! the `mediaclaw` CLI.
//!
//! Media are [`media::SynthMedia`] manifests: frames carry a fill color and
//! overlays, audio carries timed segments, so every orchestration property
//! is checkable to the field.

pub mod app;
pub mod canonical;
pub mod engine;
pub mod error;
pub mod gateway;
pub mod media;
pub mod providers;
pub mod registry;
pub mod routing;
pub mod schema;
pub mod skills;

pub use app::MediaClaw;
