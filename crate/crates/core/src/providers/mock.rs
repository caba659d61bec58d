//! Deterministic mock provider.
//!
//! Every output is a pure function of the call: colors come from the FNV-1a
//! hash of the prompt, speech durations from character counts. Repeating a
//! call yields a bit-identical manifest.

use std::sync::Arc;

use async_trait::async_trait;

use super::{CapabilityHandler, HandlerCall, HandlerMap, ProviderError};
use crate::media::{rgb_string, AudioSegment, MediaKind, Rgb, SynthMedia};
use crate::registry::CapabilityId;
use crate::skills::templates;

pub const MOCK_WIDTH: u32 = 640;
pub const MOCK_HEIGHT: u32 = 360;
pub const MOCK_FPS: u32 = 5;
/// Frame period of mock videos; durations must be multiples of it.
pub const MOCK_GRID_MS: u64 = 200;
pub const TTS_MS_PER_CHAR: u64 = 80;
pub const MOCK_LOUDNESS_LUFS: f64 = -20.0;
const LABEL_CHARS: usize = 32;

const FNV_OFFSET_BASIS: u64 = 14695981039346656037;
const FNV_PRIME: u64 = 1099511628211;

/// 64-bit FNV-1a over the UTF-8 bytes of `input`.
pub fn fnv1a64(input: &str) -> u64 {
    input.bytes().fold(FNV_OFFSET_BASIS, |hash, byte| {
        (hash ^ u64::from(byte)).wrapping_mul(FNV_PRIME)
    })
}

/// Color derived from a hash: its three most significant bytes.
pub fn color_of(hash: u64) -> Rgb {
    let b = hash.to_be_bytes();
    [b[0], b[1], b[2]]
}

pub fn prompt_color(prompt: &str) -> Rgb {
    color_of(fnv1a64(prompt))
}

/// Channel-wise linear interpolation from `from` (frame 0) to `to` (frame
/// `frames - 1`), rounding half up.
pub fn interpolate(from: Rgb, to: Rgb, index: u64, frames: u64) -> Rgb {
    if frames <= 1 {
        return from;
    }
    let den = frames - 1;
    let mut out = [0u8; 3];
    for c in 0..3 {
        let (a, b) = (i128::from(from[c]), i128::from(to[c]));
        // Convex combination, so the numerator is never negative.
        let num = a * i128::from(den) + (b - a) * i128::from(index);
        let den = i128::from(den);
        out[c] = ((2 * num + den) / (2 * den)) as u8;
    }
    out
}

fn gradient_video(from: Rgb, to: Rgb, duration_ms: u64) -> Result<SynthMedia, ProviderError> {
    if duration_ms == 0 || !duration_ms.is_multiple_of(MOCK_GRID_MS) {
        return Err(ProviderError::BadParams(format!(
            "duration_ms {duration_ms} must be a positive multiple of {MOCK_GRID_MS}"
        )));
    }
    let n = duration_ms / MOCK_GRID_MS;
    Ok(SynthMedia::video_with(
        MOCK_WIDTH,
        MOCK_HEIGHT,
        MOCK_FPS,
        duration_ms,
        |k| interpolate(from, to, k, n),
    ))
}

/// One speech segment per whitespace-delimited token, 80 ms per character,
/// abutting from t = 0.
pub fn tts_segments(text: &str) -> Vec<AudioSegment> {
    let mut t = 0;
    text.split_whitespace()
        .map(|token| {
            let d = TTS_MS_PER_CHAR * token.chars().count() as u64;
            let seg = AudioSegment::speech(t, t + d, token, MOCK_LOUDNESS_LUFS);
            t += d;
            seg
        })
        .collect()
}

/// Avatar clip length for `text`: speech length rounded up to the frame grid.
pub fn avatar_duration_ms(text: &str) -> u64 {
    let speech: u64 = tts_segments(text).iter().map(AudioSegment::duration_ms).sum();
    speech.div_ceil(MOCK_GRID_MS) * MOCK_GRID_MS
}

fn hash_hex(s: &str) -> String {
    format!("{:016x}", fnv1a64(s))
}

fn image_fill(media: &SynthMedia) -> Result<Rgb, ProviderError> {
    if media.kind != MediaKind::Image {
        return Err(ProviderError::BadParams(format!("expected image, got {}", media.kind)));
    }
    media
        .fill()
        .ok_or_else(|| ProviderError::BadParams("image has no frame".into()))
}

/// The mock rule set for every routed capability.
pub fn mock_generate(call: &HandlerCall) -> Result<SynthMedia, ProviderError> {
    match call.capability {
        CapabilityId::TextToImage => {
            let prompt = call.str("prompt")?;
            let mut img = SynthMedia::image(MOCK_WIDTH, MOCK_HEIGHT, prompt_color(prompt));
            let label: String = prompt.chars().take(LABEL_CHARS).collect();
            img.frames[0].overlays.push(crate::media::OverlayEvent {
                text: label,
                role: crate::media::OverlayRole::Label,
                position: crate::media::OverlayPosition::Top,
            });
            Ok(img.with_meta("prompt_hash", hash_hex(prompt)))
        }
        CapabilityId::TextToVideo => {
            let prompt = call.str("prompt")?;
            let end = format!("{prompt}|end");
            Ok(
                gradient_video(prompt_color(prompt), prompt_color(&end), call.uint("duration_ms")?)?
                    .with_meta("prompt_hash", hash_hex(prompt)),
            )
        }
        CapabilityId::ImageToVideo => {
            let (_, image) = call.artifact("image")?;
            let prompt = call.str("prompt")?;
            Ok(
                gradient_video(image_fill(image)?, prompt_color(prompt), call.uint("duration_ms")?)?
                    .with_meta("prompt_hash", hash_hex(prompt)),
            )
        }
        CapabilityId::MultiImageToVideo => {
            let prompt = call.str("prompt")?;
            let duration = call.uint("duration_ms")?;
            let images = call.artifact_list("images")?;
            match call.str("mode")? {
                "first_last" => {
                    if images.len() < 2 {
                        return Err(ProviderError::BadParams("first_last needs two images".into()));
                    }
                    Ok(
                        gradient_video(image_fill(images[0].1)?, image_fill(images[1].1)?, duration)?
                            .with_meta("prompt_hash", hash_hex(prompt)),
                    )
                }
                "reference" => {
                    let ids: Vec<&str> = images.iter().map(|(id, _)| id.as_str()).collect();
                    let end = format!("{prompt}|end");
                    Ok(gradient_video(prompt_color(prompt), prompt_color(&end), duration)?
                        .with_meta("prompt_hash", hash_hex(prompt))
                        .with_meta("reference_ids", ids.join(",")))
                }
                other => Err(ProviderError::BadParams(format!("unknown mode {other:?}"))),
            }
        }
        CapabilityId::TextToSpeech => {
            let segments = tts_segments(call.str("text")?);
            if segments.is_empty() {
                return Err(ProviderError::BadParams("text has no tokens".into()));
            }
            Ok(SynthMedia::audio(segments))
        }
        CapabilityId::DigitalAvatar => {
            let text = call.str("text")?;
            let avatar_id = call.str("avatar_id")?;
            let action_id = call.str("action_id")?;
            let speech = tts_segments(text);
            if speech.is_empty() {
                return Err(ProviderError::BadParams("text has no tokens".into()));
            }
            let fill = prompt_color(avatar_id);
            let mut video = gradient_video(fill, fill, avatar_duration_ms(text))?;
            for frame in &mut video.frames {
                let token = speech
                    .iter()
                    .find(|s| s.t0_ms <= frame.t_ms && frame.t_ms < s.t1_ms)
                    .map(|s| s.text.clone())
                    .unwrap_or_default();
                frame.tags.insert("action_id".into(), action_id.to_string());
                frame.tags.insert("lip_token".into(), token);
            }
            Ok(video
                .with_meta("avatar_id", avatar_id)
                .with_meta("action_id", action_id))
        }
        CapabilityId::ImageQa => {
            let (_, image) = call.artifact("image")?;
            let fill = image_fill(image)?;
            let question = call.str("question")?;
            let answer = if let Some(rest) = question.strip_prefix("score:") {
                let dimension = rest.split('|').next().unwrap_or_default().trim();
                format!("{dimension}={}", templates::poster_score(fill, dimension))
            } else if let Some(rest) = question.strip_prefix("refine:") {
                format!("{} | palette:{}", rest.trim_start(), rgb_string(fill))
            } else {
                format!("image({}): {question}", rgb_string(fill))
            };
            Ok(SynthMedia::text(answer))
        }
        CapabilityId::TextGeneration => {
            let prompt = call.str("prompt")?;
            let mode = call.opt_str("mode").unwrap_or("freeform");
            let text = templates::generate_text(mode, prompt).map_err(ProviderError::BadParams)?;
            Ok(SynthMedia::text(text))
        }
        local @ (CapabilityId::BurnSubtitles | CapabilityId::ReplaceBackground) => Err(ProviderError::BadParams(
            format!("{local} is a local tool, not a generation capability"),
        )),
    }
}

/// Handler running [`mock_generate`].
#[derive(Debug, Default, Clone, Copy)]
pub struct MockProvider;

#[async_trait]
impl CapabilityHandler for MockProvider {
    async fn handle(&self, call: &HandlerCall) -> Result<SynthMedia, ProviderError> {
        mock_generate(call)
    }
}

/// Mock handlers for every routed capability.
pub fn mock_handlers() -> HandlerMap {
    let handler: Arc<dyn CapabilityHandler> = Arc::new(MockProvider);
    CapabilityId::ALL
        .into_iter()
        .filter(|c| c.is_routed())
        .map(|c| (c, handler.clone()))
        .collect()
}
