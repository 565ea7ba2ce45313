//! Flat `key = value` experiment configs.
//!
//! ```text
//! # two packets, detector at 10
//! [detector]
//! D = 10
//! T = auto
//!
//! [packet]
//! x0 = 4
//! k = 0
//! sigma = 1
//!
//! [packet]
//! x0 = -4
//! k = 0
//! sigma = 1
//! coeff_re = -1
//!
//! [run]
//! n_samples = 10000
//! ```
//!
//! `T = auto` resolves through [`window_t`] for the packet furthest from the
//! detector. Packets may carry `group = psi | phi` for the `nogo` command.

use std::collections::BTreeMap;
use std::fmt;
use std::hash::Hasher;

use num_complex::Complex64;

use crate::experiments::window_t;
use crate::flux::DetectorWindow;
use crate::wavepacket::{GaussianPacket, WaveState};

/// A config problem, located by line (1-based, 0 when not tied to a line).
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line > 0 {
            write!(f, "line {}: {}: {}", self.line, self.field, self.message)
        } else {
            write!(f, "{}: {}", self.field, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

type ConfigResult<T> = std::result::Result<T, ConfigError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Group {
    Psi,
    Phi,
}

impl Group {
    pub fn as_str(&self) -> &'static str {
        match self {
            Group::Psi => "psi",
            Group::Phi => "phi",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketSpec {
    pub x0: f64,
    pub k: f64,
    pub sigma: f64,
    pub coeff: Complex64,
    pub group: Group,
    pub line: usize,
}

impl PacketSpec {
    pub fn packet(&self) -> ConfigResult<GaussianPacket> {
        GaussianPacket::with_coeff(self.x0, self.k, self.sigma, self.coeff)
            .map_err(|e| ConfigError::new(self.line, "packet", e.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WindowEnd {
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorSpec {
    pub position: f64,
    pub t_end: WindowEnd,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
struct RunEntry {
    value: String,
    line: usize,
}

/// Keys accepted in the `[run]` section.
pub const RUN_KEYS: &[&str] = &[
    "atol",
    "bins",
    "eps_rel",
    "half_separation",
    "k1",
    "k_max",
    "k_min",
    "k_step",
    "max_halvings",
    "max_nodes",
    "max_step_fraction",
    "n_coarse",
    "n_samples",
    "n_times",
    "quad_tol",
    "ratio_max",
    "ratio_min",
    "ratio_step",
    "refine_tol_rel",
    "rtol",
    "seed",
    "sigma",
    "special",
    "t_max",
    "t_min",
    "tol",
    "x_init",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentConfig {
    pub packets: Vec<PacketSpec>,
    pub detector: Option<DetectorSpec>,
    run: BTreeMap<String, RunEntry>,
}

fn parse_number(line: usize, field: &str, raw: &str) -> ConfigResult<f64> {
    let v: f64 = raw
        .parse()
        .map_err(|_| ConfigError::new(line, field, format!("expected a number, found `{raw}`")))?;
    if !v.is_finite() {
        return Err(ConfigError::new(
            line,
            field,
            format!("value `{raw}` is not finite"),
        ));
    }
    Ok(v)
}

#[derive(Default)]
struct PacketDraft {
    line: usize,
    fields: BTreeMap<&'static str, (f64, usize)>,
    group: Option<Group>,
}

const PACKET_KEYS: &[&str] = &["x0", "k", "sigma", "coeff_re", "coeff_im"];

impl PacketDraft {
    fn finish(self) -> ConfigResult<PacketSpec> {
        let get = |key: &str| self.fields.get(key).map(|v| v.0);
        let need = |key: &str| {
            get(key).ok_or_else(|| ConfigError::new(self.line, key, "missing in [packet] section"))
        };
        let spec = PacketSpec {
            x0: need("x0")?,
            k: need("k")?,
            sigma: need("sigma")?,
            coeff: Complex64::new(
                get("coeff_re").unwrap_or(1.0),
                get("coeff_im").unwrap_or(0.0),
            ),
            group: self.group.unwrap_or(Group::Psi),
            line: self.line,
        };
        if !(spec.sigma > 0.0) {
            let line = self.fields["sigma"].1;
            return Err(ConfigError::new(line, "sigma", "must be positive"));
        }
        Ok(spec)
    }
}

enum Section {
    None,
    Packet(PacketDraft),
    Detector,
    Run,
}

impl ExperimentConfig {
    /// Parses config text. Output files carrying an embedded config (lines
    /// starting with `#@ `, or an NDJSON footer record) are accepted as well.
    pub fn parse(text: &str) -> ConfigResult<Self> {
        match embedded_config(text) {
            Some(inner) => Self::parse_plain(&inner),
            None => Self::parse_plain(text),
        }
    }

    fn parse_plain(text: &str) -> ConfigResult<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut section = Section::None;
        let mut detector_pos: Option<(f64, usize)> = None;
        let mut detector_t: Option<(WindowEnd, usize)> = None;
        let mut detector_line = 0;
        let mut seen_detector = false;

        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            if content.starts_with('[') {
                if let Section::Packet(draft) = std::mem::replace(&mut section, Section::None) {
                    cfg.packets.push(draft.finish()?);
                }
                section = match content {
                    "[packet]" => Section::Packet(PacketDraft {
                        line,
                        ..Default::default()
                    }),
                    "[detector]" => {
                        if seen_detector {
                            return Err(ConfigError::new(
                                line,
                                "[detector]",
                                "section appears twice",
                            ));
                        }
                        seen_detector = true;
                        detector_line = line;
                        Section::Detector
                    }
                    "[run]" => Section::Run,
                    other => {
                        return Err(ConfigError::new(line, other, "unknown section"));
                    }
                };
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .map(|(k, v)| (k.trim(), v.trim()))
                .ok_or_else(|| ConfigError::new(line, content, "expected `key = value`"))?;
            if key.is_empty() {
                return Err(ConfigError::new(line, "", "empty key"));
            }
            match &mut section {
                Section::None => {
                    return Err(ConfigError::new(line, key, "key outside of any section"));
                }
                Section::Packet(draft) => {
                    if key == "group" {
                        if draft.group.is_some() {
                            return Err(ConfigError::new(line, key, "given twice"));
                        }
                        draft.group = Some(match value {
                            "psi" => Group::Psi,
                            "phi" => Group::Phi,
                            _ => {
                                return Err(ConfigError::new(
                                    line,
                                    key,
                                    format!("expected psi or phi, found `{value}`"),
                                ))
                            }
                        });
                        continue;
                    }
                    let Some(&name) = PACKET_KEYS.iter().find(|&&k| k == key) else {
                        return Err(ConfigError::new(line, key, "unknown [packet] key"));
                    };
                    let v = parse_number(line, key, value)?;
                    if draft.fields.insert(name, (v, line)).is_some() {
                        return Err(ConfigError::new(line, key, "given twice"));
                    }
                }
                Section::Detector => match key {
                    "D" => {
                        if detector_pos.is_some() {
                            return Err(ConfigError::new(line, key, "given twice"));
                        }
                        detector_pos = Some((parse_number(line, key, value)?, line));
                    }
                    "T" => {
                        if detector_t.is_some() {
                            return Err(ConfigError::new(line, key, "given twice"));
                        }
                        let t = if value == "auto" {
                            WindowEnd::Auto
                        } else {
                            let t = parse_number(line, key, value)?;
                            if !(t > 0.0) {
                                return Err(ConfigError::new(
                                    line,
                                    key,
                                    "window length must be positive",
                                ));
                            }
                            WindowEnd::Fixed(t)
                        };
                        detector_t = Some((t, line));
                    }
                    _ => return Err(ConfigError::new(line, key, "unknown [detector] key")),
                },
                Section::Run => {
                    if !RUN_KEYS.contains(&key) {
                        return Err(ConfigError::new(line, key, "unknown [run] key"));
                    }
                    let entry = RunEntry {
                        value: value.to_string(),
                        line,
                    };
                    if cfg.run.insert(key.to_string(), entry).is_some() {
                        return Err(ConfigError::new(line, key, "given twice"));
                    }
                }
            }
        }
        if let Section::Packet(draft) = section {
            cfg.packets.push(draft.finish()?);
        }
        if seen_detector {
            let (position, _) = detector_pos.ok_or_else(|| {
                ConfigError::new(detector_line, "D", "missing in [detector] section")
            })?;
            cfg.detector = Some(DetectorSpec {
                position,
                t_end: detector_t.map_or(WindowEnd::Auto, |t| t.0),
                line: detector_line,
            });
        }
        Ok(cfg)
    }

    /// Superposition of every packet.
    pub fn state(&self) -> ConfigResult<WaveState> {
        self.state_of(|_| true)
    }

    pub fn group_state(&self, group: Group) -> ConfigResult<WaveState> {
        self.state_of(|p| p.group == group)
    }

    fn state_of(&self, keep: impl Fn(&PacketSpec) -> bool) -> ConfigResult<WaveState> {
        let packets = self
            .packets
            .iter()
            .filter(|p| keep(p))
            .map(PacketSpec::packet)
            .collect::<ConfigResult<Vec<_>>>()?;
        if packets.is_empty() {
            return Err(ConfigError::new(0, "[packet]", "no packets given"));
        }
        WaveState::new(packets).map_err(|e| ConfigError::new(0, "[packet]", e.to_string()))
    }

    pub fn detector(&self) -> ConfigResult<DetectorSpec> {
        self.detector
            .ok_or_else(|| ConfigError::new(0, "[detector]", "section required by this command"))
    }

    /// Detector window, resolving `T = auto` from the packet furthest from
    /// the detector.
    pub fn window(&self) -> ConfigResult<DetectorWindow> {
        let det = self.detector()?;
        let t_end = match det.t_end {
            WindowEnd::Fixed(t) => t,
            WindowEnd::Auto => {
                let far = self
                    .packets
                    .iter()
                    .max_by(|a, b| {
                        (det.position - a.x0)
                            .abs()
                            .total_cmp(&(det.position - b.x0).abs())
                    })
                    .ok_or_else(|| {
                        ConfigError::new(det.line, "T", "auto needs at least one packet")
                    })?;
                window_t((det.position - far.x0).abs(), far.sigma, far.k)
                    .map_err(|e| ConfigError::new(det.line, "T", e.to_string()))?
            }
        };
        DetectorWindow::new(det.position, t_end)
            .map_err(|e| ConfigError::new(det.line, "[detector]", e.to_string()))
    }

    pub fn has(&self, key: &str) -> bool {
        self.run.contains_key(key)
    }

    fn raw(&self, key: &str) -> Option<&RunEntry> {
        debug_assert!(RUN_KEYS.contains(&key), "undeclared run key {key}");
        self.run.get(key)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> ConfigResult<f64> {
        match self.raw(key) {
            Some(e) => parse_number(e.line, key, &e.value),
            None => Ok(default),
        }
    }

    pub fn opt_f64(&self, key: &str) -> ConfigResult<Option<f64>> {
        self.raw(key)
            .map(|e| parse_number(e.line, key, &e.value))
            .transpose()
    }

    pub fn positive_f64_or(&self, key: &str, default: f64) -> ConfigResult<f64> {
        let v = self.f64_or(key, default)?;
        if !(v > 0.0) {
            let line = self.raw(key).map_or(0, |e| e.line);
            return Err(ConfigError::new(line, key, "must be positive"));
        }
        Ok(v)
    }

    pub fn u64_or(&self, key: &str, default: u64) -> ConfigResult<u64> {
        match self.raw(key) {
            Some(e) => e.value.parse().map_err(|_| {
                ConfigError::new(
                    e.line,
                    key,
                    format!("expected a nonnegative integer, found `{}`", e.value),
                )
            }),
            None => Ok(default),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> ConfigResult<usize> {
        Ok(self.u64_or(key, default as u64)? as usize)
    }

    pub fn bool_or(&self, key: &str, default: bool) -> ConfigResult<bool> {
        match self.raw(key) {
            Some(e) => match e.value.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(ConfigError::new(
                    e.line,
                    key,
                    format!("expected true or false, found `{other}`"),
                )),
            },
            None => Ok(default),
        }
    }

    /// Sets a `[run]` value, as done for `--seed`.
    pub fn set_run(&mut self, key: &str, value: String) {
        self.run
            .insert(key.to_string(), RunEntry { value, line: 0 });
    }

    /// Normalized config text: fixed section order, every packet field
    /// spelled out, `[run]` keys sorted. Parsing it yields the same config.
    pub fn canonical(&self) -> String {
        let mut out = String::new();
        if let Some(det) = &self.detector {
            out.push_str("[detector]\n");
            out.push_str(&format!("D = {}\n", det.position));
            match det.t_end {
                WindowEnd::Auto => out.push_str("T = auto\n"),
                WindowEnd::Fixed(t) => out.push_str(&format!("T = {t}\n")),
            }
        }
        for p in &self.packets {
            out.push_str("[packet]\n");
            out.push_str(&format!(
                "x0 = {}\nk = {}\nsigma = {}\n",
                p.x0, p.k, p.sigma
            ));
            out.push_str(&format!(
                "coeff_re = {}\ncoeff_im = {}\n",
                p.coeff.re, p.coeff.im
            ));
            out.push_str(&format!("group = {}\n", p.group.as_str()));
        }
        if !self.run.is_empty() {
            out.push_str("[run]\n");
            for (k, e) in &self.run {
                out.push_str(&format!("{k} = {}\n", e.value));
            }
        }
        out
    }

    /// 64-bit FNV-1a hash of the canonical text.
    pub fn hash(&self) -> u64 {
        let mut h = fnv::FnvHasher::default();
        h.write(self.canonical().as_bytes());
        h.finish()
    }
}

/// Prefix of config lines embedded in CSV output.
pub const EMBED_PREFIX: &str = "#@ ";

fn embedded_config(text: &str) -> Option<String> {
    let mut embedded = String::new();
    let mut found = false;
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix(EMBED_PREFIX) {
            embedded.push_str(rest);
            embedded.push('\n');
            found = true;
        } else if line.starts_with("{\"footer\"") {
            let v: serde_json::Value = serde_json::from_str(line).ok()?;
            return v["footer"]["config"].as_str().map(str::to_string);
        }
    }
    found.then_some(embedded)
}
