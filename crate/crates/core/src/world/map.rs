use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::geometry::{self, Point, Projection};

#[derive(Debug, Error)]
pub enum MapError {
    #[error("cannot read map {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed map: {0}")]
    Format(String),
    #[error("invalid map: {0}")]
    Validation(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lane {
    pub id: String,
    pub centerline: Vec<Point>,
    pub polygon: Vec<Point>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub left: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub right: Option<String>,
    #[serde(default)]
    pub successors: Vec<String>,
}

impl Lane {
    pub fn contains(&self, p: Point) -> bool {
        geometry::point_in_polygon(p, &self.polygon)
    }

    pub fn project(&self, p: Point) -> Option<Projection> {
        geometry::project_onto_polyline(p, &self.centerline)
    }

    pub fn length(&self) -> f64 {
        geometry::polyline_length(&self.centerline)
    }

    /// Travel direction of the lane at the point closest to `p`.
    pub fn direction_at(&self, p: Point) -> Option<f64> {
        self.project(p).map(|pr| pr.heading)
    }
}

/// Road network: lanes plus named free-form regions.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RoadMap {
    pub lanes: Vec<Lane>,
    #[serde(default)]
    pub regions: BTreeMap<String, Vec<Point>>,
}

impl RoadMap {
    pub fn from_json_str(s: &str) -> Result<RoadMap, MapError> {
        let map: RoadMap = serde_json::from_str(s).map_err(|e| MapError::Format(e.to_string()))?;
        map.validate()?;
        Ok(map)
    }

    pub fn load(path: &Path) -> Result<RoadMap, MapError> {
        let text = std::fs::read_to_string(path).map_err(|source| MapError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json_str(&text)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("map serializes")
    }

    pub fn save(&self, path: &Path) -> Result<(), MapError> {
        std::fs::write(path, self.to_json_string()).map_err(|source| MapError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn lane(&self, id: &str) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.id == id)
    }

    pub fn region(&self, name: &str) -> Option<&[Point]> {
        self.regions.get(name).map(Vec::as_slice)
    }

    /// First lane (in file order) whose polygon contains `p`.
    pub fn lane_at(&self, p: Point) -> Option<&Lane> {
        self.lanes.iter().find(|l| l.contains(p))
    }

    pub fn on_road(&self, p: Point) -> bool {
        self.lanes.iter().any(|l| l.contains(p))
    }

    pub fn validate(&self) -> Result<(), MapError> {
        let mut ids = BTreeSet::new();
        for lane in &self.lanes {
            if !ids.insert(lane.id.as_str()) {
                return Err(MapError::Validation(format!("duplicate lane id '{}'", lane.id)));
            }
        }
        let finite = |pts: &[Point]| pts.iter().all(|p| p[0].is_finite() && p[1].is_finite());
        for lane in &self.lanes {
            let id = &lane.id;
            if lane.centerline.len() < 2 || !finite(&lane.centerline) {
                return Err(MapError::Validation(format!(
                    "lane '{id}' needs a finite centerline of at least 2 points"
                )));
            }
            if !finite(&lane.polygon) || !geometry::polygon_is_simple(&lane.polygon) {
                return Err(MapError::Validation(format!(
                    "lane '{id}' polygon is not a simple polygon"
                )));
            }
            if let Some(p) = lane.centerline.iter().find(|p| !lane.contains(**p)) {
                return Err(MapError::Validation(format!(
                    "lane '{id}' centerline point ({}, {}) lies outside its polygon",
                    p[0], p[1]
                )));
            }
            for (side, other, back) in [("left", &lane.left, true), ("right", &lane.right, false)] {
                let Some(other) = other else { continue };
                let Some(o) = self.lane(other) else {
                    return Err(MapError::Validation(format!(
                        "lane '{id}' {side} neighbor '{other}' is undefined"
                    )));
                };
                let mirrored = if back { &o.right } else { &o.left };
                if mirrored.as_deref() != Some(id.as_str()) {
                    return Err(MapError::Validation(format!(
                        "adjacency between '{id}' and '{other}' is not symmetric"
                    )));
                }
            }
            if let Some(s) = lane.successors.iter().find(|s| self.lane(s).is_none()) {
                return Err(MapError::Validation(format!(
                    "lane '{id}' successor '{s}' is undefined"
                )));
            }
        }
        for (name, poly) in &self.regions {
            if !finite(poly) || !geometry::polygon_is_simple(poly) {
                return Err(MapError::Validation(format!("region '{name}' is not a simple polygon")));
            }
        }
        Ok(())
    }

    /// Straight parallel lanes along +y, ordered right to left, each `width`
    /// wide and spanning y in [0, length].
    pub fn straight_road(lane_count: usize, width: f64, length: f64) -> RoadMap {
        let mut lanes = Vec::new();
        for k in 0..lane_count {
            let cx = -(k as f64) * width;
            let (lo, hi) = (cx - width / 2.0, cx + width / 2.0);
            lanes.push(Lane {
                id: format!("Lane{}", k + 1),
                centerline: vec![[cx, 0.0], [cx, length]],
                polygon: vec![[lo, 0.0], [hi, 0.0], [hi, length], [lo, length]],
                left: (k + 1 < lane_count).then(|| format!("Lane{}", k + 2)),
                right: (k > 0).then(|| format!("Lane{}", k)),
                successors: vec![],
            });
        }
        RoadMap {
            lanes,
            regions: BTreeMap::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_road_is_valid() {
        let m = RoadMap::straight_road(3, 3.5, 100.0);
        m.validate().unwrap();
        assert_eq!(m.lane_at([0.0, 50.0]).unwrap().id, "Lane1");
        assert_eq!(m.lane_at([-3.5, 50.0]).unwrap().id, "Lane2");
        assert_eq!(m.lane("Lane1").unwrap().left.as_deref(), Some("Lane2"));
        assert!(m.lane_at([5.0, 50.0]).is_none());
    }

    #[test]
    fn json_round_trip() {
        let m = RoadMap::straight_road(2, 3.5, 100.0);
        let again = RoadMap::from_json_str(&m.to_json_string()).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn asymmetric_adjacency_rejected() {
        let mut m = RoadMap::straight_road(2, 3.5, 100.0);
        m.lanes[1].right = None;
        assert!(matches!(m.validate(), Err(MapError::Validation(_))));
    }

    #[test]
    fn centerline_outside_polygon_rejected() {
        let mut m = RoadMap::straight_road(1, 3.5, 100.0);
        m.lanes[0].centerline = vec![[10.0, 0.0], [10.0, 100.0]];
        assert!(matches!(m.validate(), Err(MapError::Validation(_))));
    }

    #[test]
    fn malformed_json_is_format_error() {
        assert!(matches!(
            RoadMap::from_json_str("{\"lanes\": 3}"),
            Err(MapError::Format(_))
        ));
    }
}
