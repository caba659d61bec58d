use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::media::MediaKind;
use crate::schema::{ParamSpec, ParamType};

/// The closed set of meta-capabilities behind the unified tool interface.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapabilityId {
    TextToImage,
    ImageQa,
    TextToVideo,
    ImageToVideo,
    MultiImageToVideo,
    TextToSpeech,
    DigitalAvatar,
    BurnSubtitles,
    ReplaceBackground,
    TextGeneration,
}

impl CapabilityId {
    /// Catalog order: the nine media capabilities, then text generation.
    pub const ALL: [CapabilityId; 10] = [
        CapabilityId::TextToImage,
        CapabilityId::ImageQa,
        CapabilityId::TextToVideo,
        CapabilityId::ImageToVideo,
        CapabilityId::MultiImageToVideo,
        CapabilityId::TextToSpeech,
        CapabilityId::DigitalAvatar,
        CapabilityId::BurnSubtitles,
        CapabilityId::ReplaceBackground,
        CapabilityId::TextGeneration,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            CapabilityId::TextToImage => "text_to_image",
            CapabilityId::ImageQa => "image_qa",
            CapabilityId::TextToVideo => "text_to_video",
            CapabilityId::ImageToVideo => "image_to_video",
            CapabilityId::MultiImageToVideo => "multi_image_to_video",
            CapabilityId::TextToSpeech => "text_to_speech",
            CapabilityId::DigitalAvatar => "digital_avatar",
            CapabilityId::BurnSubtitles => "burn_subtitles",
            CapabilityId::ReplaceBackground => "replace_background",
            CapabilityId::TextGeneration => "text_generation",
        }
    }

    pub fn tool_name(self) -> &'static str {
        match self {
            CapabilityId::TextToImage => "mediaclaw_text_to_image",
            CapabilityId::ImageQa => "mediaclaw_image_qa",
            CapabilityId::TextToVideo => "mediaclaw_text_to_video",
            CapabilityId::ImageToVideo => "mediaclaw_image_to_video",
            CapabilityId::MultiImageToVideo => "mediaclaw_images_to_video",
            CapabilityId::TextToSpeech => "mediaclaw_text_to_speech",
            CapabilityId::DigitalAvatar => "mediaclaw_digital_avatar",
            CapabilityId::BurnSubtitles => "mediaclaw_burn_subtitles",
            CapabilityId::ReplaceBackground => "mediaclaw_replace_background",
            CapabilityId::TextGeneration => "mediaclaw_text_generation",
        }
    }

    pub fn from_tool_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.tool_name() == name)
    }

    pub fn routing_class(self) -> RoutingClass {
        match self {
            CapabilityId::BurnSubtitles | CapabilityId::ReplaceBackground => RoutingClass::Local,
            _ => RoutingClass::Routed,
        }
    }

    pub fn is_routed(self) -> bool {
        self.routing_class() == RoutingClass::Routed
    }

    pub fn output_kind(self) -> MediaKind {
        match self {
            CapabilityId::TextToImage => MediaKind::Image,
            CapabilityId::ImageQa | CapabilityId::TextGeneration => MediaKind::Text,
            CapabilityId::TextToSpeech => MediaKind::Audio,
            CapabilityId::TextToVideo
            | CapabilityId::ImageToVideo
            | CapabilityId::MultiImageToVideo
            | CapabilityId::DigitalAvatar
            | CapabilityId::BurnSubtitles
            | CapabilityId::ReplaceBackground => MediaKind::Video,
        }
    }

    pub fn descriptor(self) -> ToolDescriptor {
        use ParamType::*;
        let p = ParamSpec::required;
        let o = ParamSpec::optional;
        let params = match self {
            CapabilityId::TextToImage => vec![p("prompt", String)],
            CapabilityId::ImageQa => vec![p("image", Artifact(Some(MediaKind::Image))), p("question", String)],
            CapabilityId::TextToVideo => vec![
                p("prompt", String),
                o("duration_ms", PositiveInteger).with_default(5000),
            ],
            CapabilityId::ImageToVideo => vec![
                p("image", Artifact(Some(MediaKind::Image))),
                p("prompt", String),
                o("duration_ms", PositiveInteger).with_default(5000),
            ],
            CapabilityId::MultiImageToVideo => vec![
                p("mode", OneOf(&["reference", "first_last"])),
                p("images", ArtifactList(Some(MediaKind::Image))),
                p("prompt", String),
                o("duration_ms", PositiveInteger).with_default(5000),
            ],
            CapabilityId::TextToSpeech => vec![p("text", String)],
            CapabilityId::DigitalAvatar => vec![p("text", String), p("avatar_id", String), p("action_id", String)],
            CapabilityId::BurnSubtitles => {
                vec![p("video", Artifact(Some(MediaKind::Video))), p("subtitles_ass", String)]
            }
            CapabilityId::ReplaceBackground => vec![
                p("video", Artifact(Some(MediaKind::Video))),
                p("background", Artifact(Some(MediaKind::Image))),
            ],
            CapabilityId::TextGeneration => vec![
                p("prompt", String),
                o("mode", OneOf(&["freeform", "storyboard", "brief", "action_plan"])).with_default("freeform"),
            ],
        };
        ToolDescriptor {
            capability: self,
            tool_name: self.tool_name(),
            routing_class: self.routing_class(),
            param_schema: params,
            output_kind: self.output_kind(),
        }
    }
}

impl fmt::Display for CapabilityId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CapabilityId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown capability {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RoutingClass {
    Routed,
    Local,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ToolDescriptor {
    pub capability: CapabilityId,
    pub tool_name: &'static str,
    pub routing_class: RoutingClass,
    pub param_schema: Vec<ParamSpec>,
    pub output_kind: MediaKind,
}
