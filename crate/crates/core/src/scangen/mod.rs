//! Deterministic synthetic flow corpus: benign traffic plus port scans from
//! five scanner profiles.
//!
//! Every row is drawn from its own random stream keyed by (seed, stream,
//! row index), so generation order and thread count never change output.

mod profile;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use profile::{supports, FlagPattern, RateClass, ResponseBehavior, ScanProfile};

use crate::dataset::{Dataset, FlowRecord, Technique, Tool};
use crate::seed;

pub const SCHEMA_VERSION: u32 = 1;
pub const N_FEATURES: usize = 14;

/// Default blend probability for scan rows.
pub const DEFAULT_OVERLAP: f64 = 0.10;

pub const FEATURES: [&str; N_FEATURES] = [
    "duration_s",
    "fwd_packets",
    "bwd_packets",
    "fwd_bytes",
    "bwd_bytes",
    "syn_count",
    "ack_count",
    "rst_count",
    "fin_count",
    "psh_count",
    "mean_iat_ms",
    "distinct_dst_ports_in_window",
    "handshake_completed",
    "mean_pkt_size_bytes",
];

const DURATION: usize = 0;
const FWD_PACKETS: usize = 1;
const BWD_PACKETS: usize = 2;
const FWD_BYTES: usize = 3;
const BWD_BYTES: usize = 4;
const SYN: usize = 5;
const ACK: usize = 6;
const RST: usize = 7;
const FIN: usize = 8;
const PSH: usize = 9;
const MEAN_IAT_MS: usize = 10;
const DISTINCT_PORTS: usize = 11;
const HANDSHAKE: usize = 12;
const MEAN_PKT_SIZE: usize = 13;

/// Columns holding integer counts (kept integral through blending).
const COUNT_COLUMNS: [usize; 8] = [FWD_PACKETS, BWD_PACKETS, SYN, ACK, RST, FIN, PSH, DISTINCT_PORTS];

#[derive(Debug, Error)]
pub enum ScanGenError {
    #[error("{tool} does not support the {technique} technique")]
    UnsupportedCombination { tool: Tool, technique: Technique },
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// The fixed 14-column flow feature schema.
pub fn feature_schema() -> Vec<String> {
    FEATURES.iter().map(|s| s.to_string()).collect()
}

fn lognormal<R: Rng>(rng: &mut R, median: f64, sigma: f64) -> f64 {
    LogNormal::new(median.ln(), sigma)
        .expect("finite parameters")
        .sample(rng)
}

fn benign_features<R: Rng>(rng: &mut R) -> [f64; N_FEATURES] {
    let mut f = [0.0; N_FEATURES];
    let short = rng.random_bool(0.12);
    let (fwd, bwd, fwd_size, bwd_size, duration) = if short {
        let fwd = rng.random_range(3..=5) as f64;
        let bwd = rng.random_range(2..=4) as f64;
        (
            fwd,
            bwd,
            rng.random_range(54.0..140.0),
            rng.random_range(60.0..220.0),
            lognormal(rng, 0.05, 0.9),
        )
    } else {
        let fwd = 3.0 + lognormal(rng, 8.0, 1.0).floor();
        let bwd = (fwd * rng.random_range(0.6..1.6)).round().max(2.0);
        (
            fwd,
            bwd,
            lognormal(rng, 180.0, 0.6).clamp(54.0, 1460.0),
            lognormal(rng, 600.0, 0.6).clamp(54.0, 1460.0),
            lognormal(rng, 1.5, 1.2),
        )
    };
    let graceful = rng.random_bool(0.9);
    f[DURATION] = duration;
    f[FWD_PACKETS] = fwd;
    f[BWD_PACKETS] = bwd;
    f[FWD_BYTES] = (fwd * fwd_size).round();
    f[BWD_BYTES] = (bwd * bwd_size).round();
    f[SYN] = 2.0;
    f[ACK] = fwd + bwd - 1.0;
    f[RST] = if graceful { 0.0 } else { 1.0 };
    f[FIN] = if graceful { 2.0 } else { 0.0 };
    f[PSH] = if short {
        rng.random_range(1..=2) as f64
    } else {
        ((fwd + bwd) * rng.random_range(0.2..0.5)).round()
    };
    f[MEAN_IAT_MS] = duration * 1000.0 / (fwd + bwd - 1.0);
    f[DISTINCT_PORTS] = match rng.random_range(0.0..1.0) {
        u if u < 0.80 => 1.0,
        u if u < 0.95 => 2.0,
        _ => 3.0,
    };
    f[HANDSHAKE] = 1.0;
    f[MEAN_PKT_SIZE] = (f[FWD_BYTES] + f[BWD_BYTES]) / (fwd + bwd);
    f
}

fn probe_size<R: Rng>(rng: &mut R, tool: Tool) -> f64 {
    match tool {
        Tool::Masscan => 40.0,
        Tool::Zmap => 54.0,
        Tool::Nmap => 44.0,
        Tool::Unicornscan => rng.random_range(40.0..60.0f64).round(),
        Tool::Hping => rng.random_range(40.0..54.0f64).round(),
    }
}

fn scan_features<R: Rng>(profile: &ScanProfile, rng: &mut R) -> [f64; N_FEATURES] {
    let mut f = [0.0; N_FEATURES];
    let size = probe_size(rng, profile.tool);
    let reply = rng.random_range(40.0..60.0f64).round();
    let rtt = lognormal(rng, 0.002, 0.8);
    let retransmit = rng.random_bool(0.12);
    let probes = if retransmit { 2.0 } else { 1.0 };

    let (fwd, bwd, fwd_bytes, bwd_bytes) = match profile.technique {
        Technique::Connect => {
            let banner = if rng.random_bool(0.3) {
                rng.random_range(10.0..120.0f64).round()
            } else {
                0.0
            };
            let graceful = rng.random_bool(0.2);
            let fwd = if graceful { 3.0 } else { 2.0 } + probes - 1.0;
            let bwd = if banner > 0.0 { 2.0 } else { 1.0 } + if graceful { 1.0 } else { 0.0 };
            f[SYN] = probes + 1.0;
            f[ACK] = fwd - probes + bwd;
            f[RST] = if graceful { 0.0 } else { 1.0 };
            f[FIN] = if graceful { 2.0 } else { 0.0 };
            f[PSH] = if banner > 0.0 { 1.0 } else { 0.0 };
            f[HANDSHAKE] = 1.0;
            f[DURATION] = rtt * rng.random_range(1.5..3.0);
            (fwd, bwd, fwd * size, bwd * reply + banner)
        }
        Technique::Syn => {
            let u: f64 = rng.random_range(0.0..1.0);
            let (fwd, bwd) = if u < 0.10 {
                // open: SYN-ACK, then the scanner's RST
                f[SYN] = probes + 1.0;
                f[ACK] = 1.0;
                f[RST] = 1.0;
                (probes + 1.0, 1.0)
            } else if u < 0.90 {
                f[SYN] = probes;
                f[ACK] = 1.0;
                f[RST] = 1.0;
                (probes, 1.0)
            } else {
                f[SYN] = probes;
                (probes, 0.0)
            };
            f[DURATION] = if bwd > 0.0 { rtt } else { rtt * 0.1 };
            (fwd, bwd, fwd * size, bwd * reply)
        }
        Technique::Fin | Technique::Null | Technique::Xmas => {
            let closed = rng.random_bool(0.3);
            let bwd = if closed { 1.0 } else { 0.0 };
            let flags = profile.flag_pattern;
            f[FIN] = if flags.fin { probes } else { 0.0 };
            f[PSH] = if flags.psh { probes } else { 0.0 };
            f[RST] = bwd;
            f[ACK] = bwd;
            f[DURATION] = if closed { rtt } else { rtt * 0.1 };
            (probes, bwd, probes * size, bwd * reply)
        }
        Technique::Udp => {
            let payload = rng.random_range(28.0..80.0f64).round();
            let icmp = rng.random_bool(0.2);
            let bwd = if icmp { 1.0 } else { 0.0 };
            f[DURATION] = if icmp { rtt } else { rtt * 0.1 };
            (
                probes,
                bwd,
                probes * payload,
                bwd * rng.random_range(56.0..70.0f64).round(),
            )
        }
    };
    f[FWD_PACKETS] = fwd;
    f[BWD_PACKETS] = bwd;
    f[FWD_BYTES] = fwd_bytes;
    f[BWD_BYTES] = bwd_bytes;

    let (iat, ports) = match profile.rate_class {
        RateClass::Slow => (lognormal(rng, 400.0, 0.8), rng.random_range(4..=40)),
        RateClass::Fast => (lognormal(rng, 5.0, 0.6), rng.random_range(40..=800)),
        RateClass::Massive => (lognormal(rng, 0.05, 0.6), rng.random_range(500..=6000)),
    };
    f[MEAN_IAT_MS] = iat;
    f[DISTINCT_PORTS] = ports as f64;
    f[MEAN_PKT_SIZE] = (f[FWD_BYTES] + f[BWD_BYTES]) / (fwd + bwd);
    f
}

/// Pull a scan row toward a benign one by factor `t` in [0, 1]: magnitudes
/// interpolate geometrically (on `1 + x`), counts stay integral and the
/// handshake flag switches to the benign value once `t >= 0.5`.
fn blend(scan: &mut [f64; N_FEATURES], benign: &[f64; N_FEATURES], t: f64) {
    for j in 0..N_FEATURES {
        if j == HANDSHAKE {
            if t >= 0.5 {
                scan[j] = benign[j];
            }
            continue;
        }
        let v = ((1.0 - t) * scan[j].ln_1p() + t * benign[j].ln_1p()).exp_m1();
        scan[j] = if COUNT_COLUMNS.contains(&j) { v.round() } else { v };
    }
}

/// Blend factor for an overlapped scan row. Uniform on a band that moves
/// from mid-way (`overlap` near 0) up to indistinguishable (`overlap` = 1).
fn blend_factor<R: Rng>(rng: &mut R, overlap: f64) -> f64 {
    let lo = 0.5 + 0.45 * overlap;
    let hi = 0.85 + 0.15 * overlap;
    rng.random_range(lo..=hi)
}

fn row_rng(stream_seed: u64, index: usize) -> rand_chacha::ChaCha8Rng {
    seed::rng(seed::derive(stream_seed, &[index as u64]))
}

/// `n` benign flows. Deterministic per `seed`.
pub fn generate_benign(n: usize, seed: u64) -> Vec<FlowRecord> {
    (0..n)
        .into_par_iter()
        .map(|i| FlowRecord::benign(benign_features(&mut row_rng(seed, i)).to_vec()))
        .collect()
}

/// `n` scan flows for `profile` with no overlap toward benign traffic.
pub fn generate_scan(profile: &ScanProfile, n: usize, seed: u64) -> Vec<FlowRecord> {
    generate_scan_with_overlap(profile, n, 0.0, seed)
}

/// `n` scan flows; each row is blended toward a freshly drawn benign flow
/// with probability `overlap`.
pub fn generate_scan_with_overlap(profile: &ScanProfile, n: usize, overlap: f64, seed: u64) -> Vec<FlowRecord> {
    let overlap = overlap.clamp(0.0, 1.0);
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = row_rng(seed, i);
            let mut f = scan_features(profile, &mut rng);
            if overlap > 0.0 && rng.random_bool(overlap) {
                let target = benign_features(&mut rng);
                let t = blend_factor(&mut rng, overlap);
                blend(&mut f, &target, t);
            }
            FlowRecord::scan(f.to_vec(), profile.tool, profile.technique)
        })
        .collect()
}

/// One scan profile in a corpus mix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixEntry {
    pub tool: Tool,
    pub technique: Technique,
    pub weight: f64,
    /// Overrides the tool's default rate class.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_class: Option<RateClass>,
    /// Overrides [`GeneratorConfig::overlap`] for this profile.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub overlap: Option<f64>,
}

impl MixEntry {
    pub fn new(tool: Tool, technique: Technique, weight: f64) -> Self {
        MixEntry {
            tool,
            technique,
            weight,
            rate_class: None,
            overlap: None,
        }
    }

    pub fn profile(&self) -> Result<ScanProfile, ScanGenError> {
        let p = ScanProfile::new(self.tool, self.technique)?;
        match self.rate_class {
            Some(rate) => p.with_rate(rate),
            None => Ok(p),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub total_flows: usize,
    pub benign_fraction: f64,
    pub tool_mix: Vec<MixEntry>,
    /// Probability that a scan row is blended toward benign traffic.
    #[serde(default = "default_overlap")]
    pub overlap: f64,
    pub seed: u64,
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
}

fn default_overlap() -> f64 {
    DEFAULT_OVERLAP
}

fn default_schema_version() -> u32 {
    SCHEMA_VERSION
}

/// Five tools with two techniques each, equally weighted.
pub fn default_mix() -> Vec<MixEntry> {
    let pairs = [
        (Tool::Nmap, Technique::Syn),
        (Tool::Nmap, Technique::Connect),
        (Tool::Masscan, Technique::Syn),
        (Tool::Masscan, Technique::Connect),
        (Tool::Unicornscan, Technique::Syn),
        (Tool::Unicornscan, Technique::Connect),
        (Tool::Zmap, Technique::Syn),
        (Tool::Zmap, Technique::Connect),
        (Tool::Hping, Technique::Syn),
        (Tool::Hping, Technique::Xmas),
    ];
    pairs
        .iter()
        .map(|&(tool, technique)| MixEntry::new(tool, technique, 1.0 / pairs.len() as f64))
        .collect()
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            total_flows: 20_000,
            benign_fraction: 0.85,
            tool_mix: default_mix(),
            overlap: DEFAULT_OVERLAP,
            seed: 0,
            schema_version: SCHEMA_VERSION,
        }
    }
}

impl GeneratorConfig {
    pub fn from_json(text: &str) -> Result<Self, ScanGenError> {
        let cfg: GeneratorConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String, ScanGenError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<(), ScanGenError> {
        let fail = |m: String| Err(ScanGenError::InvalidConfig(m));
        if self.schema_version != SCHEMA_VERSION {
            return fail(format!("unknown feature schema version {}", self.schema_version));
        }
        if self.total_flows == 0 {
            return fail("total_flows must be positive".into());
        }
        if !(self.benign_fraction > 0.0 && self.benign_fraction < 1.0) {
            return fail(format!("benign_fraction {} outside (0, 1)", self.benign_fraction));
        }
        if self.tool_mix.is_empty() {
            return fail("tool_mix is empty".into());
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return fail(format!("overlap {} outside [0, 1]", self.overlap));
        }
        let mut sum = 0.0;
        for entry in &self.tool_mix {
            if !(entry.weight >= 0.0 && entry.weight.is_finite()) {
                return fail(format!(
                    "weight for {}/{} must be finite and >= 0",
                    entry.tool, entry.technique
                ));
            }
            if let Some(o) = entry.overlap {
                if !(0.0..=1.0).contains(&o) {
                    return fail(format!(
                        "overlap {o} for {}/{} outside [0, 1]",
                        entry.tool, entry.technique
                    ));
                }
            }
            entry.profile()?;
            sum += entry.weight;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return fail(format!("tool_mix weights sum to {sum}, not 1"));
        }
        Ok(())
    }

    /// Set the overlap of every mix entry matching `tool` and `technique`.
    pub fn with_profile_overlap(mut self, tool: Tool, technique: Technique, overlap: f64) -> Self {
        for e in self
            .tool_mix
            .iter_mut()
            .filter(|e| e.tool == tool && e.technique == technique)
        {
            e.overlap = Some(overlap);
        }
        self
    }
}

/// Largest-remainder apportionment of `total` over `weights`; ties in the
/// remainder go to the earlier entry.
pub fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Mixed, shuffled corpus for `config`.
pub fn generate_corpus(config: &GeneratorConfig) -> Result<Dataset, ScanGenError> {
    config.validate()?;
    let n_benign = (config.total_flows as f64 * config.benign_fraction).round() as usize;
    let n_scan = config.total_flows - n_benign;
    let weights: Vec<f64> = config.tool_mix.iter().map(|e| e.weight).collect();
    let per_profile = apportion(n_scan, &weights);

    let mut rows = generate_benign(n_benign, seed::derive(config.seed, &[seed::tag("benign")]));
    for (j, (entry, &n)) in config.tool_mix.iter().zip(&per_profile).enumerate() {
        let stream = seed::derive(config.seed, &[seed::tag("scan"), j as u64]);
        let overlap = entry.overlap.unwrap_or(config.overlap);
        rows.extend(generate_scan_with_overlap(&entry.profile()?, n, overlap, stream));
    }
    rows.shuffle(&mut seed::rng(seed::derive(config.seed, &[seed::tag("shuffle")])));
    Ok(Dataset::new(feature_schema(), rows).expect("generated rows match the schema"))
}
