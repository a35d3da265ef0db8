use serde::{Deserialize, Serialize};

use super::ScanGenError;
use crate::dataset::{Technique, Tool};

/// Probe-rate regime of a scanner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RateClass {
    Slow,
    Fast,
    Massive,
}

/// TCP flags set on each probe packet.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlagPattern {
    pub syn: bool,
    pub ack: bool,
    pub fin: bool,
    pub psh: bool,
    pub urg: bool,
}

/// How the target side answers a probe.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResponseBehavior {
    /// SYN-ACK, scanner completes the handshake and tears it down.
    HandshakeThenTeardown,
    /// Open ports answer SYN-ACK and the scanner resets; closed ports RST.
    SynAckThenReset,
    /// Open or filtered ports stay silent; closed ports RST.
    SilentOrReset,
    /// No reply, or an ICMP port-unreachable.
    SilentOrIcmp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScanProfile {
    pub tool: Tool,
    pub technique: Technique,
    pub rate_class: RateClass,
    pub completes_handshake: bool,
    pub flag_pattern: FlagPattern,
    pub response_behavior: ResponseBehavior,
}

/// Whether the generator models `technique` for `tool`.
pub fn supports(tool: Tool, technique: Technique) -> bool {
    use Technique::*;
    match tool {
        Tool::Nmap => matches!(technique, Connect | Syn | Fin | Null | Xmas),
        Tool::Masscan | Tool::Zmap => matches!(technique, Connect | Syn),
        Tool::Unicornscan => true,
        Tool::Hping => matches!(technique, Syn | Fin | Null | Xmas | Udp),
    }
}

fn default_rate(tool: Tool) -> RateClass {
    match tool {
        Tool::Masscan | Tool::Zmap => RateClass::Massive,
        Tool::Unicornscan => RateClass::Slow,
        Tool::Nmap | Tool::Hping => RateClass::Fast,
    }
}

impl ScanProfile {
    pub fn new(tool: Tool, technique: Technique) -> Result<Self, ScanGenError> {
        if !supports(tool, technique) {
            return Err(ScanGenError::UnsupportedCombination { tool, technique });
        }
        let flags = match technique {
            Technique::Connect | Technique::Syn => FlagPattern {
                syn: true,
                ..Default::default()
            },
            Technique::Fin => FlagPattern {
                fin: true,
                ..Default::default()
            },
            Technique::Null | Technique::Udp => FlagPattern::default(),
            Technique::Xmas => FlagPattern {
                fin: true,
                psh: true,
                urg: true,
                ..Default::default()
            },
        };
        let response_behavior = match technique {
            Technique::Connect => ResponseBehavior::HandshakeThenTeardown,
            Technique::Syn => ResponseBehavior::SynAckThenReset,
            Technique::Fin | Technique::Null | Technique::Xmas => ResponseBehavior::SilentOrReset,
            Technique::Udp => ResponseBehavior::SilentOrIcmp,
        };
        Ok(ScanProfile {
            tool,
            technique,
            rate_class: default_rate(tool),
            completes_handshake: technique == Technique::Connect,
            flag_pattern: flags,
            response_behavior,
        })
    }

    /// Override the rate class. Only unicornscan, nmap and hping are
    /// adjustable; masscan and zmap always run massive.
    pub fn with_rate(mut self, rate: RateClass) -> Result<Self, ScanGenError> {
        if matches!(self.tool, Tool::Masscan | Tool::Zmap) && rate != RateClass::Massive {
            return Err(ScanGenError::InvalidConfig(format!(
                "{} profiles are always massive-rate",
                self.tool
            )));
        }
        self.rate_class = rate;
        Ok(self)
    }
}
