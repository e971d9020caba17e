//! Label traces: per-frame object observations and feasible behavior sets.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("cannot read trace {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed trace: {0}")]
    Format(String),
    #[error("invalid trace: {0}")]
    Validation(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectInfo {
    pub id: String,
    pub class: String,
}

/// One object's observation in one frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectState {
    /// Meters; z is 0 when the file gives 2 coordinates.
    pub pos: [f64; 3],
    /// Radians.
    pub heading: f64,
    pub lane: Option<String>,
    /// Nonempty.
    pub behaviors: BTreeSet<String>,
}

impl ObjectState {
    pub fn xy(&self) -> [f64; 2] {
        [self.pos[0], self.pos[1]]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub t: i64,
    pub objs: BTreeMap<String, ObjectState>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabelTrace {
    pub hz: f64,
    pub objects: Vec<ObjectInfo>,
    pub frames: Vec<Frame>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTrace {
    #[serde(default = "default_hz")]
    hz: f64,
    objects: Vec<ObjectInfo>,
    frames: Vec<RawFrame>,
}

fn default_hz() -> f64 {
    2.0
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    t: i64,
    objs: BTreeMap<String, RawObject>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawObject {
    pos: Vec<f64>,
    heading: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    lane: Option<String>,
    behaviors: Vec<String>,
}

/// A maximal run of consecutive frames in which an object is present,
/// as inclusive frame positions (not `t` values).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Presence {
    pub first: usize,
    pub last: usize,
}

impl Presence {
    pub fn len(&self) -> usize {
        self.last - self.first + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn covers(&self, start: usize, len: usize) -> bool {
        len > 0 && self.first <= start && start + len - 1 <= self.last
    }
}

impl LabelTrace {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn class_of(&self, id: &str) -> Option<&str> {
        self.objects.iter().find(|o| o.id == id).map(|o| o.class.as_str())
    }

    pub fn from_json_str(s: &str) -> Result<LabelTrace, TraceError> {
        let raw: RawTrace = serde_json::from_str(s).map_err(|e| TraceError::Format(e.to_string()))?;
        let mut frames = Vec::with_capacity(raw.frames.len());
        for f in raw.frames {
            let mut objs = BTreeMap::new();
            for (id, o) in f.objs {
                let pos = match o.pos.as_slice() {
                    [x, y] => [*x, *y, 0.0],
                    [x, y, z] => [*x, *y, *z],
                    _ => {
                        return Err(TraceError::Format(format!(
                            "frame {}: object '{id}' position must have 2 or 3 coordinates",
                            f.t
                        )))
                    }
                };
                objs.insert(
                    id,
                    ObjectState {
                        pos,
                        heading: o.heading,
                        lane: o.lane,
                        behaviors: o.behaviors.into_iter().collect(),
                    },
                );
            }
            frames.push(Frame { t: f.t, objs });
        }
        let trace = LabelTrace {
            hz: raw.hz,
            objects: raw.objects,
            frames,
        };
        trace.validate()?;
        Ok(trace)
    }

    pub fn load(path: &Path) -> Result<LabelTrace, TraceError> {
        let text = std::fs::read_to_string(path).map_err(|source| TraceError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        let raw = RawTrace {
            hz: self.hz,
            objects: self.objects.clone(),
            frames: self
                .frames
                .iter()
                .map(|f| RawFrame {
                    t: f.t,
                    objs: f
                        .objs
                        .iter()
                        .map(|(id, o)| {
                            (
                                id.clone(),
                                RawObject {
                                    pos: o.pos.to_vec(),
                                    heading: o.heading,
                                    lane: o.lane.clone(),
                                    behaviors: o.behaviors.iter().cloned().collect(),
                                },
                            )
                        })
                        .collect(),
                })
                .collect(),
        };
        serde_json::to_string(&raw).expect("trace serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), TraceError> {
        std::fs::write(path, self.to_json_string()).map_err(|source| TraceError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn validate(&self) -> Result<(), TraceError> {
        if !(self.hz.is_finite() && self.hz > 0.0) {
            return Err(TraceError::Validation("hz must be positive".into()));
        }
        let mut declared = BTreeSet::new();
        for o in &self.objects {
            if !declared.insert(o.id.as_str()) {
                return Err(TraceError::Validation(format!("duplicate object id '{}'", o.id)));
            }
        }
        for (k, f) in self.frames.iter().enumerate() {
            if k > 0 && f.t != self.frames[k - 1].t + 1 {
                return Err(TraceError::Validation(format!(
                    "frame indices must be consecutive: {} follows {}",
                    f.t,
                    self.frames[k - 1].t
                )));
            }
            for (id, o) in &f.objs {
                if !declared.contains(id.as_str()) {
                    return Err(TraceError::Validation(format!(
                        "frame {}: undeclared object '{id}'",
                        f.t
                    )));
                }
                if o.behaviors.is_empty() {
                    return Err(TraceError::Validation(format!(
                        "frame {}: object '{id}' has an empty behavior set",
                        f.t
                    )));
                }
                if !(o.pos.iter().all(|c| c.is_finite()) && o.heading.is_finite()) {
                    return Err(TraceError::Validation(format!(
                        "frame {}: object '{id}' has a non-finite pose",
                        f.t
                    )));
                }
            }
        }
        Ok(())
    }

    /// Number of frames in which each declared object is present.
    pub fn object_durations(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        if self.frames.is_empty() {
            return out;
        }
        for o in &self.objects {
            out.insert(o.id.clone(), 0);
        }
        for f in &self.frames {
            for id in f.objs.keys() {
                *out.entry(id.clone()).or_insert(0) += 1;
            }
        }
        out
    }

    /// Maximal contiguous presence intervals of `id`, in frame order.
    pub fn presence_intervals(&self, id: &str) -> Vec<Presence> {
        let mut out: Vec<Presence> = Vec::new();
        for (k, f) in self.frames.iter().enumerate() {
            if !f.objs.contains_key(id) {
                continue;
            }
            match out.last_mut() {
                Some(p) if p.last + 1 == k => p.last = k,
                _ => out.push(Presence { first: k, last: k }),
            }
        }
        out
    }

    pub fn longest_presence(&self, id: &str) -> usize {
        self.presence_intervals(id).iter().map(Presence::len).max().unwrap_or(0)
    }

    /// True when `id` is present in every frame of the window.
    pub fn present_throughout(&self, id: &str, start: usize, len: usize) -> bool {
        start + len <= self.frames.len() && self.frames[start..start + len].iter().all(|f| f.objs.contains_key(id))
    }
}
