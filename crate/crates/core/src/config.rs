//! Pipeline tunables. Every threshold of the clustering and merging rules is a
//! key here so it can be changed from a flat `key = value` file or the CLI.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How the second special-component disjunct compares height and width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpecialRule2 {
    /// `HT < 3·WD`, as written.
    Literal,
    /// `WD > 3·HT`: only wide, flat fragments such as detached T-bars.
    Inverted,
}

impl FromStr for SpecialRule2 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "literal" => Ok(Self::Literal),
            "inverted" => Ok(Self::Inverted),
            other => Err(Error::Config(format!("special_rule2 must be literal|inverted, got {other:?}"))),
        }
    }
}

impl fmt::Display for SpecialRule2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Literal => "literal",
            Self::Inverted => "inverted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub deskew: bool,
    /// Coarse and fine skew search steps, in degrees.
    pub skew_coarse_deg: f64,
    pub skew_fine_deg: f64,
    /// Components smaller than this are dropped before segmentation (0 = keep all).
    pub despeckle_min_px: usize,
    /// Terminal skeleton branches shorter than this are pruned.
    pub min_branch: usize,
    pub sign_point_window: usize,
    pub line_cap: usize,
    pub candidate_cap: usize,
    pub stroke_special_max: usize,
    pub stroke_break_min: usize,
    pub overlap_stroke_min: usize,
    pub area_ratio: f64,
    pub max_gap_factor: f64,
    pub merge_overlap_factor: f64,
    pub special_rule2: SpecialRule2,
    pub match_threshold: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            deskew: true,
            skew_coarse_deg: 1.0,
            skew_fine_deg: 0.1,
            despeckle_min_px: 0,
            min_branch: 3,
            sign_point_window: 25,
            line_cap: 5,
            candidate_cap: 5,
            stroke_special_max: 5,
            stroke_break_min: 4,
            overlap_stroke_min: 3,
            area_ratio: 0.2,
            max_gap_factor: 3.0,
            merge_overlap_factor: 0.33,
            special_rule2: SpecialRule2::Literal,
            match_threshold: 0.95,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("bad value {value:?} for {key}")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("bad value {value:?} for {key}"))),
    }
}

impl PipelineConfig {
    pub const KEYS: &'static [&'static str] = &[
        "deskew",
        "skew_coarse_deg",
        "skew_fine_deg",
        "despeckle_min_px",
        "min_branch",
        "sign_point_window",
        "line_cap",
        "candidate_cap",
        "stroke_special_max",
        "stroke_break_min",
        "overlap_stroke_min",
        "area_ratio",
        "max_gap_factor",
        "merge_overlap_factor",
        "special_rule2",
        "match_threshold",
    ];

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "deskew" => self.deskew = parse_bool(key, v)?,
            "skew_coarse_deg" => self.skew_coarse_deg = parse(key, v)?,
            "skew_fine_deg" => self.skew_fine_deg = parse(key, v)?,
            "despeckle_min_px" => self.despeckle_min_px = parse(key, v)?,
            "min_branch" => self.min_branch = parse(key, v)?,
            "sign_point_window" => self.sign_point_window = parse(key, v)?,
            "line_cap" => self.line_cap = parse(key, v)?,
            "candidate_cap" => self.candidate_cap = parse(key, v)?,
            "stroke_special_max" => self.stroke_special_max = parse(key, v)?,
            "stroke_break_min" => self.stroke_break_min = parse(key, v)?,
            "overlap_stroke_min" => self.overlap_stroke_min = parse(key, v)?,
            "area_ratio" => self.area_ratio = parse(key, v)?,
            "max_gap_factor" => self.max_gap_factor = parse(key, v)?,
            "merge_overlap_factor" => self.merge_overlap_factor = parse(key, v)?,
            "special_rule2" => self.special_rule2 = v.parse()?,
            "match_threshold" => self.match_threshold = parse(key, v)?,
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Parses a flat `key = value` file on top of the defaults. Blank lines and
    /// `#` comments are ignored.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", no + 1)))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let caps = [
            ("sign_point_window", self.sign_point_window),
            ("line_cap", self.line_cap),
            ("candidate_cap", self.candidate_cap),
            ("stroke_special_max", self.stroke_special_max),
            ("stroke_break_min", self.stroke_break_min),
            ("overlap_stroke_min", self.overlap_stroke_min),
        ];
        for (k, v) in caps {
            if v < 1 {
                return Err(Error::Config(format!("{k} must be at least 1")));
            }
        }
        for (k, v) in [("area_ratio", self.area_ratio), ("merge_overlap_factor", self.merge_overlap_factor)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{k} must lie in (0, 1), got {v}")));
            }
        }
        if !(self.match_threshold > 0.0 && self.match_threshold <= 1.0) {
            return Err(Error::Config(format!("match_threshold must lie in (0, 1], got {}", self.match_threshold)));
        }
        for (k, v) in [
            ("max_gap_factor", self.max_gap_factor),
            ("skew_coarse_deg", self.skew_coarse_deg),
            ("skew_fine_deg", self.skew_fine_deg),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{k} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Renders the config in the same `key = value` format [`parse_str`](Self::parse_str) reads.
    pub fn to_kv_string(&self) -> String {
        let values = [
            self.deskew.to_string(),
            self.skew_coarse_deg.to_string(),
            self.skew_fine_deg.to_string(),
            self.despeckle_min_px.to_string(),
            self.min_branch.to_string(),
            self.sign_point_window.to_string(),
            self.line_cap.to_string(),
            self.candidate_cap.to_string(),
            self.stroke_special_max.to_string(),
            self.stroke_break_min.to_string(),
            self.overlap_stroke_min.to_string(),
            self.area_ratio.to_string(),
            self.max_gap_factor.to_string(),
            self.merge_overlap_factor.to_string(),
            self.special_rule2.to_string(),
            self.match_threshold.to_string(),
        ];
        Self::KEYS
            .iter()
            .zip(values)
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}
