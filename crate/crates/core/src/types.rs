//! Shared domain vocabulary: identifiers, the four-way verdict algebra,
//! the error taxonomy and rationales.

use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(pub String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }
    };
}

string_id!(
    /// Opaque claim identifier; canonical ordering of benchmark entries follows it.
    ClaimId
);
string_id!(ReportId);
string_id!(
    /// A human expert, an agent auditor, a challenger model, or a service caller.
    ActorId
);

/// Sentence-level factuality label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Supported,
    Inconclusive,
    Contradictory,
    /// No verifiable factual content; never scored.
    NoneVerifiable,
}

impl Verdict {
    pub const ALL: [Verdict; 4] = [
        Verdict::Supported,
        Verdict::Inconclusive,
        Verdict::Contradictory,
        Verdict::NoneVerifiable,
    ];

    /// Binary scoring label. `None` for [`Verdict::NoneVerifiable`].
    pub fn collapse(self) -> Option<BinaryLabel> {
        match self {
            Verdict::Supported => Some(BinaryLabel::Supported),
            Verdict::Inconclusive | Verdict::Contradictory => Some(BinaryLabel::Unsupported),
            Verdict::NoneVerifiable => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Supported => "supported",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Contradictory => "contradictory",
            Verdict::NoneVerifiable => "none_verifiable",
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown label `{0}`")]
pub struct UnknownLabel(pub String);

impl FromStr for Verdict {
    type Err = UnknownLabel;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "supported" | "s" => Ok(Verdict::Supported),
            "inconclusive" | "i" => Ok(Verdict::Inconclusive),
            "contradictory" | "c" => Ok(Verdict::Contradictory),
            "none_verifiable" | "none" | "noneverifiable" | "n" => Ok(Verdict::NoneVerifiable),
            other => Err(UnknownLabel(other.to_owned())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinaryLabel {
    Supported,
    Unsupported,
}

/// Phase of the research process in which a factual error originates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorStage {
    Collection,
    Analysis,
    Generalization,
}

macro_rules! error_codes {
    ($($variant:ident => $code:literal, $name:literal;)*) => {
        /// Factuality error taxonomy code. The stage is fixed by the prefix.
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum ErrorCode {
            $($variant,)*
        }

        impl ErrorCode {
            pub const ALL: &'static [ErrorCode] = &[$(ErrorCode::$variant,)*];

            pub fn as_str(self) -> &'static str {
                match self {
                    $(ErrorCode::$variant => $code,)*
                }
            }

            /// Short human-readable name of the failure pattern.
            pub fn name(self) -> &'static str {
                match self {
                    $(ErrorCode::$variant => $name,)*
                }
            }
        }

        impl FromStr for ErrorCode {
            type Err = UnknownLabel;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim() {
                    $($code => Ok(ErrorCode::$variant),)*
                    other => Err(UnknownLabel(other.to_owned())),
                }
            }
        }
    };
}

error_codes! {
    CAu => "C-AU", "Fabricated Source";
    CPv => "C-PV", "Mis-sourced Evidence";
    CCp => "C-CP", "Omitted Counter-Evidence";
    CCu => "C-CU", "Out-of-Date Source";
    CRe => "C-RE", "Biased Sampling";
    CCx => "C-CX", "Contextual Mismatch";
    AN1 => "A-N1", "Numeric Distortion";
    AS1 => "A-S1", "Semantic/Entity Swap";
    AP1 => "A-P1", "Causal Projection";
    AX1 => "A-X1", "Cross-Study Conflation";
    AB1 => "A-B1", "Cherry-Picked Synthesis";
    AT1 => "A-T1", "Temporal Misalignment";
    AO1 => "A-O1", "Over-Aggregation";
    AC1 => "A-C1", "Contradiction Ignorance";
    AL1 => "A-L1", "Chain-of-Thought Leap";
    GO1 => "G-O1", "Over-Scope Leap";
    GH1 => "G-H1", "Hyperbolic Statement";
    GT1 => "G-T1", "Taxonomy Oversimplification";
    GC1 => "G-C1", "Conditional Collapse";
    GR1 => "G-R1", "Recency Extrapolation";
    GB1 => "G-B1", "Base-Rate Neglect";
    GS1 => "G-S1", "Single-Study Certainty";
}

impl ErrorCode {
    pub fn stage(self) -> ErrorStage {
        match self.as_str().as_bytes()[0] {
            b'C' => ErrorStage::Collection,
            b'A' => ErrorStage::Analysis,
            _ => ErrorStage::Generalization,
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Serialize for ErrorCode {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for ErrorCode {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Justification attached to a verdict.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rationale {
    pub text: String,
    #[serde(default)]
    pub evidence_refs: Vec<String>,
    pub author: ActorId,
    pub created_at: DateTime<Utc>,
}

impl Rationale {
    pub fn new(text: impl Into<String>, author: impl Into<ActorId>) -> Self {
        Self {
            text: text.into(),
            evidence_refs: Vec::new(),
            author: author.into(),
            created_at: Utc::now(),
        }
    }

    pub fn with_evidence(mut self, refs: impl IntoIterator<Item = impl Into<String>>) -> Self {
        self.evidence_refs.extend(refs.into_iter().map(Into::into));
        self
    }

    pub fn at(mut self, created_at: DateTime<Utc>) -> Self {
        self.created_at = created_at;
        self
    }
}

/// Centrality of a claim to its report, 1 (off-topic) to 5 (backbone).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct Importance(u8);

impl Importance {
    pub const LEVELS: [Importance; 5] = [
        Importance(1),
        Importance(2),
        Importance(3),
        Importance(4),
        Importance(5),
    ];

    pub fn new(level: u8) -> Option<Self> {
        (1..=5).contains(&level).then_some(Self(level))
    }

    pub fn level(self) -> u8 {
        self.0
    }
}

impl TryFrom<u8> for Importance {
    type Error = String;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Importance::new(v).ok_or_else(|| format!("importance must be in 1..=5, got {v}"))
    }
}

impl From<Importance> for u8 {
    fn from(i: Importance) -> u8 {
        i.0
    }
}

impl fmt::Display for Importance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Tag assigned by an automatic pre-screening evaluator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RiskTag {
    SupportedByEvaluator,
    FlaggedByEvaluator,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    /// A real sentence deliberately corrupted with a taxonomy error.
    AdversarialUnsupported,
    /// A narrowly scoped, citation-checked supported sentence.
    ValidatedSupported,
}

/// Hidden known-answer calibration data carried by a micro-gold claim.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MicroGold {
    pub gold_label: Verdict,
    pub construction: Construction,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error_code: Option<ErrorCode>,
    #[serde(default)]
    pub manually_confirmed: bool,
}

impl MicroGold {
    pub fn supported() -> Self {
        Self {
            gold_label: Verdict::Supported,
            construction: Construction::ValidatedSupported,
            error_code: None,
            manually_confirmed: true,
        }
    }

    pub fn adversarial(gold_label: Verdict, code: ErrorCode) -> Self {
        Self {
            gold_label,
            construction: Construction::AdversarialUnsupported,
            error_code: Some(code),
            manually_confirmed: true,
        }
    }

    /// Checks the construction/label/error-code consistency rules.
    pub fn validate(&self) -> Result<(), String> {
        match self.construction {
            Construction::AdversarialUnsupported => {
                if !matches!(self.gold_label, Verdict::Inconclusive | Verdict::Contradictory) {
                    return Err(format!(
                        "adversarial micro-gold must be inconclusive or contradictory, got {}",
                        self.gold_label
                    ));
                }
                if self.error_code.is_none() {
                    return Err("adversarial micro-gold requires an error code".into());
                }
            }
            Construction::ValidatedSupported => {
                if self.gold_label != Verdict::Supported {
                    return Err(format!(
                        "validated micro-gold must be supported, got {}",
                        self.gold_label
                    ));
                }
                if self.error_code.is_some() {
                    return Err("validated micro-gold cannot carry an error code".into());
                }
            }
        }
        Ok(())
    }
}

/// Round `x` to the nearest integer, halves away from zero (for non-negative input: half-up).
pub(crate) fn round_half_up(x: f64) -> usize {
    // guard against 2.4999999 style representation error on exact halves
    (x + 0.5 + 1e-9).floor().max(0.0) as usize
}
