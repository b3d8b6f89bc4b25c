//! Flat `key = value` experiment configuration with `[section]` headers.
//!
//! The canonical text form (sorted sections and keys, output directory
//! omitted) is what gets hashed, so two runs agree on the hash exactly when
//! they would compute the same thing.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::construction::{DeltaPolicy, SyntheticLayout};
use crate::distribution::{default_t_grid, DistributionConfig};
use crate::error::{Error, Result};
use crate::frac::{parse_frac, Frac};
use crate::index_seq::{Enrollment, IndexSequence, MergeConfig};
use crate::systems::{IntervalMap, ShiftPair};

const KEYS: &[(&str, &[&str])] = &[
    ("", &["seed", "horizon", "out", "checkpoint_stride"]),
    (
        "system",
        &["kind", "alphabet", "members", "block_lengths", "base", "blocks", "pair", "map", "points", "max_iterations", "select"],
    ),
    ("sequence", &["source"]),
    ("density", &["p"]),
    ("merge", &["inputs", "min_target_denominator", "enrollment"]),
    ("distribution", &["eps_zero", "eps_one", "li_yorke_margin", "tail_fraction", "t_grid", "delta"]),
    ("witness", &["delta", "search_budget", "min_count", "max_count"]),
    ("uniform", &["layout", "points", "run", "unit_growth", "min_precision", "levels"]),
];

#[derive(Clone, Debug, PartialEq)]
pub enum SystemSpec {
    /// Geometric-style block family on `alphabet` symbols.
    Family { alphabet: u32, members: usize, block_lengths: Vec<u64> },
    /// One explicit shift pair.
    Shift(ShiftPair),
    Interval { map: IntervalMap, points: Points, max_iterations: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub enum Points {
    Given(Vec<f64>),
    /// Drawn uniformly from `(0, 1)` with the config seed.
    Random(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub enum SequenceSource {
    Builtin(String),
    File(PathBuf),
}

impl SequenceSource {
    pub fn load(&self) -> Result<IndexSequence> {
        match self {
            SequenceSource::File(p) => {
                let f = std::fs::File::open(p).map_err(|e| Error::InvalidArgument(format!("{}: {e}", p.display())))?;
                IndexSequence::read_from(std::io::BufReader::new(f))
            }
            SequenceSource::Builtin(name) => {
                let (head, arg) = name.split_once(':').unwrap_or((name, ""));
                let num = |s: &str| -> Result<u64> {
                    s.parse().map_err(|_| Error::InvalidArgument(format!("bad number {s:?} in sequence {name:?}")))
                };
                match head {
                    "naturals" => Ok(IndexSequence::naturals()),
                    "evens" => Ok(IndexSequence::evens()),
                    "odds" => Ok(IndexSequence::odds()),
                    "squares" => Ok(IndexSequence::squares()),
                    "multiples" => IndexSequence::multiples(num(arg)?),
                    "ap" => {
                        let (a, d) = arg
                            .split_once(':')
                            .ok_or_else(|| Error::InvalidArgument(format!("expected ap:first:step, got {name:?}")))?;
                        IndexSequence::arithmetic(num(a)?, num(d)?)
                    }
                    _ => Err(Error::InvalidArgument(format!("unknown sequence {name:?}"))),
                }
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub horizon: usize,
    pub out: PathBuf,
    pub checkpoint_stride: usize,
    pub system: SystemSpec,
    /// Point indices used by `distfn`.
    pub select: (usize, usize),
    pub sequence: SequenceSource,
    pub density_of: SequenceSource,
    pub merge_inputs: Vec<SequenceSource>,
    pub merge: MergeConfig,
    pub distribution: DistributionConfig,
    pub delta: f64,
    pub witness_delta: DeltaPolicy,
    pub search_budget: Option<u64>,
    pub min_count: usize,
    pub max_count: Option<usize>,
    pub layout: SyntheticLayout,
    raw: BTreeMap<String, BTreeMap<String, String>>,
}

struct Entry {
    value: String,
    line: usize,
}

type Raw = BTreeMap<String, BTreeMap<String, Entry>>;

fn parse_raw(text: &str) -> Result<Raw> {
    let mut raw: Raw = BTreeMap::new();
    let mut section = String::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let perr = |msg: String| Error::Parse { line: line_no, msg };
        let line = line.split_once('#').map_or(line, |(l, _)| l).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| perr(format!("unterminated section header {line:?}")))?;
            let name = name.trim();
            if !KEYS.iter().any(|(s, _)| *s == name) || name.is_empty() {
                return Err(perr(format!("unknown section [{name}]")));
            }
            section = name.to_string();
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| perr(format!("expected key = value, got {line:?}")))?;
        let key = key.trim();
        let allowed = KEYS.iter().find(|(s, _)| *s == section).map(|(_, k)| *k).unwrap_or(&[]);
        if !allowed.contains(&key) {
            let place = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
            return Err(perr(format!("unknown key {key:?} in {place}")));
        }
        let slot = raw.entry(section.clone()).or_default();
        if slot.contains_key(key) {
            return Err(perr(format!("duplicate key {key:?}")));
        }
        slot.insert(key.to_string(), Entry { value: value.trim().to_string(), line: line_no });
    }
    Ok(raw)
}

struct Reader<'a> {
    raw: &'a Raw,
}

impl Reader<'_> {
    fn entry(&self, section: &str, key: &str) -> Option<&Entry> {
        self.raw.get(section).and_then(|s| s.get(key))
    }

    fn get<T>(&self, section: &str, key: &str, parse: impl FnOnce(&str) -> std::result::Result<T, String>) -> Result<Option<T>> {
        match self.entry(section, key) {
            None => Ok(None),
            Some(e) => parse(&e.value).map(Some).map_err(|msg| Error::Parse {
                line: e.line,
                msg: format!("{key}: {msg}"),
            }),
        }
    }

    fn num<T: std::str::FromStr>(&self, section: &str, key: &str) -> Result<Option<T>> {
        self.get(section, key, |v| v.parse().map_err(|_| format!("not a valid number: {v:?}")))
    }

    fn frac(&self, section: &str, key: &str) -> Result<Option<Frac>> {
        self.get(section, key, |v| parse_frac(v).map_err(|e| e.to_string()))
    }
}

fn list<T: std::str::FromStr>(v: &str) -> std::result::Result<Vec<T>, String> {
    v.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| format!("bad list item {s:?}")))
        .collect()
}

fn source(base: &Path, v: &str) -> SequenceSource {
    match v.strip_prefix("file:") {
        Some(p) => SequenceSource::File(base.join(p.trim())),
        None => SequenceSource::Builtin(v.trim().to_string()),
    }
}

impl ExperimentConfig {
    /// Parses `text`; relative file paths resolve against `base`.
    /// Each override is `(section, key, value)` and wins over the file.
    pub fn parse(text: &str, base: &Path, overrides: &[(&str, &str, String)]) -> Result<Self> {
        let mut raw = parse_raw(text)?;
        for (section, key, value) in overrides {
            raw.entry(section.to_string())
                .or_default()
                .insert(key.to_string(), Entry { value: value.clone(), line: 0 });
        }
        let r = Reader { raw: &raw };

        let horizon = r.num("", "horizon")?.unwrap_or(10_000);
        let seed = r.num("", "seed")?.unwrap_or(0);
        let checkpoint_stride = r.num("", "checkpoint_stride")?.unwrap_or(1);
        let out = r.get("", "out", |v| Ok(PathBuf::from(v)))?.unwrap_or_else(|| PathBuf::from("."));

        let kind = r.get("system", "kind", |v| Ok(v.to_string()))?.unwrap_or_else(|| "family".into());
        let system = match kind.as_str() {
            "family" => {
                let alphabet = r.num("system", "alphabet")?.unwrap_or(3);
                let members = r.num("system", "members")?.unwrap_or(3);
                let block_lengths = match r.get("system", "block_lengths", list::<u64>)? {
                    Some(l) => l,
                    None => {
                        let base: u64 = r.num("system", "base")?.unwrap_or(4);
                        let blocks: u32 = r.num("system", "blocks")?.unwrap_or(8);
                        (1..=blocks).map(|k| base.pow(k)).collect()
                    }
                };
                SystemSpec::Family { alphabet, members, block_lengths }
            }
            "shift" => {
                let pair = r
                    .get("system", "pair", |v| v.replace(';', "\n").parse::<ShiftPair>().map_err(|e| e.to_string()))?
                    .ok_or_else(|| Error::InvalidArgument("[system] kind = shift needs pair = ...".into()))?;
                SystemSpec::Shift(pair)
            }
            "interval" => {
                let map = r
                    .get("system", "map", |v| v.parse::<IntervalMap>().map_err(|e| e.to_string()))?
                    .unwrap_or(IntervalMap::Tent { slope: 2.0 });
                let points = r
                    .get("system", "points", |v| match v.strip_prefix("random:") {
                        Some(n) => n.trim().parse().map(Points::Random).map_err(|_| format!("bad count {n:?}")),
                        None => list::<f64>(v).map(Points::Given),
                    })?
                    .unwrap_or(Points::Random(3));
                let max_iterations = r.num("system", "max_iterations")?.unwrap_or(10_000_000);
                SystemSpec::Interval { map, points, max_iterations }
            }
            other => {
                let line = r.entry("system", "kind").map_or(0, |e| e.line);
                return Err(Error::Parse {
                    line,
                    msg: format!("kind: expected family, shift or interval, got {other:?}"),
                });
            }
        };
        let select = r
            .get("system", "select", |v| match list::<usize>(v)?.as_slice() {
                [a, b] if a != b => Ok((*a, *b)),
                _ => Err("expected two distinct point indices".into()),
            })?
            .unwrap_or((0, 1));

        let sequence = r.get("sequence", "source", |v| Ok(source(base, v)))?.unwrap_or(SequenceSource::Builtin("naturals".into()));
        let density_of = r.get("density", "p", |v| Ok(source(base, v)))?.unwrap_or(SequenceSource::Builtin("evens".into()));
        let merge_inputs = r
            .get("merge", "inputs", |v| Ok(v.split(',').map(|s| source(base, s.trim())).collect()))?
            .unwrap_or_else(|| vec![SequenceSource::Builtin("evens".into()), SequenceSource::Builtin("odds".into())]);
        let mut merge = MergeConfig::default();
        if let Some(j0) = r.num("merge", "min_target_denominator")? {
            merge.min_target_denominator = j0;
        }
        if let Some(e) = r.get("merge", "enrollment", |v| match v {
            "round_robin" => Ok(Enrollment::RoundRobin),
            "diagonal" => Ok(Enrollment::Diagonal),
            _ => Err(format!("expected round_robin or diagonal, got {v:?}")),
        })? {
            merge.enrollment = e;
        }

        let mut distribution = match system {
            SystemSpec::Interval { .. } => DistributionConfig::for_interval(horizon),
            _ => DistributionConfig::for_shift(horizon),
        };
        distribution.checkpoint_stride = checkpoint_stride;
        if let Some(v) = r.num("distribution", "eps_zero")? {
            distribution.eps_zero = v;
        }
        if let Some(v) = r.frac("distribution", "eps_one")? {
            distribution.eps_one = v;
        }
        if let Some(v) = r.num("distribution", "li_yorke_margin")? {
            distribution.li_yorke_margin = v;
        }
        if let Some(v) = r.frac("distribution", "tail_fraction")? {
            distribution.tail_fraction = v;
        }
        distribution.t_grid = r
            .get("distribution", "t_grid", |v| if v == "default" { Ok(default_t_grid()) } else { list::<f64>(v) })?
            .unwrap_or_else(default_t_grid);
        let delta = r.num("distribution", "delta")?.unwrap_or(0.5);

        let witness_delta = r
            .get("witness", "delta", |v| match v {
                "adaptive" => Ok(DeltaPolicy::Adaptive),
                _ => v.parse().map(DeltaPolicy::Fixed).map_err(|_| format!("expected a number or adaptive, got {v:?}")),
            })?
            .unwrap_or(DeltaPolicy::Fixed(delta));
        let search_budget = r.num("witness", "search_budget")?;
        let min_count = r.num("witness", "min_count")?.unwrap_or(10);
        let max_count = r.num("witness", "max_count")?;

        let layout_name = r.get("uniform", "layout", |v| Ok(v.to_string()))?.unwrap_or_else(|| "two_level".into());
        let mut layout = match layout_name.as_str() {
            "two_level" | "custom" => SyntheticLayout::two_level(),
            other => {
                let line = r.entry("uniform", "layout").map_or(0, |e| e.line);
                return Err(Error::Parse { line, msg: format!("layout: expected two_level or custom, got {other:?}") });
            }
        };
        if let Some(v) = r.num("uniform", "points")? {
            layout.points = v;
        }
        if let Some(v) = r.num("uniform", "run")? {
            layout.run = v;
        }
        if let Some(v) = r.num("uniform", "unit_growth")? {
            layout.unit_growth = v;
        }
        if let Some(v) = r.num("uniform", "min_precision")? {
            layout.min_precision = v;
        }
        if let Some(v) = r.get("uniform", "levels", |v| {
            v.split(',')
                .map(|lv| {
                    let (a, c) = lv.trim().split_once('x').ok_or_else(|| format!("expected ZEROSxCOPIES, got {lv:?}"))?;
                    Ok((
                        a.trim().parse().map_err(|_| format!("bad zero length {a:?}"))?,
                        c.trim().parse().map_err(|_| format!("bad copy count {c:?}"))?,
                    ))
                })
                .collect::<std::result::Result<Vec<(u64, u64)>, String>>()
        })? {
            layout.levels = v;
        }

        let cfg = Self {
            seed,
            horizon,
            out,
            checkpoint_stride,
            system,
            select,
            sequence,
            density_of,
            merge_inputs,
            merge,
            distribution,
            delta,
            witness_delta,
            search_budget,
            min_count,
            max_count,
            layout,
            raw: raw
                .into_iter()
                .map(|(s, kv)| (s, kv.into_iter().map(|(k, e)| (k, e.value)).collect()))
                .collect(),
        };
        cfg.distribution.validate()?;
        Ok(cfg)
    }

    /// Sorted `[section] key = value` lines, without the output directory.
    pub fn canonical_text(&self) -> String {
        let mut out = String::new();
        for (section, kv) in &self.raw {
            if !section.is_empty() {
                out.push_str(&format!("[{section}]\n"));
            }
            for (k, v) in kv {
                if section.is_empty() && k == "out" {
                    continue;
                }
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }

    /// First 16 hex digits of the SHA-256 of the canonical text.
    pub fn hash(&self) -> String {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
    }

    /// Comment lines opening every output file.
    pub fn header(&self, subcommand: &str) -> Vec<String> {
        let mut h = vec![format!(
            "dchaos {subcommand} config_hash={} seed={} horizon={} checkpoint_stride={}",
            self.hash(),
            self.seed,
            self.horizon,
            self.checkpoint_stride
        )];
        h.extend(self.canonical_text().lines().map(|l| format!("config {l}")));
        h
    }
}
