//! JSON instance files.
//!
//! ```json
//! { "space": {"kind": "euclidean2d", "coords": [[0, 0], [3, 4]]},
//!   "clients": [{"point": 1, "color": 1}], "facilities": [0],
//!   "k": 1, "l": 1, "alpha": [0], "beta": [1] }
//! ```
//!
//! Colors are one-based in files and zero-based in memory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric::{MetricSpace, PointId, Space};
use crate::model::{Client, FairInstance};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClientEntry {
    pub point: PointId,
    pub color: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub space: Space,
    pub clients: Vec<ClientEntry>,
    pub facilities: Vec<PointId>,
    pub k: usize,
    pub l: usize,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doubling_dim_hint: Option<u32>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<FairInstance> {
        if self.alpha.len() != self.l || self.beta.len() != self.l {
            return Err(Error::InvalidInstance(format!(
                "l = {} but alpha/beta have {}/{} entries",
                self.l,
                self.alpha.len(),
                self.beta.len()
            )));
        }
        let hint = self.doubling_dim_hint.or(match self.space {
            Space::Euclidean2d { .. } => Some(2),
            Space::Matrix { .. } => None,
        });
        let metric = MetricSpace::new(self.space, hint)?;
        let clients = self
            .clients
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if c.color == 0 || c.color > self.l {
                    Err(Error::InvalidInstance(format!(
                        "client {i} has color {} outside 1..={}",
                        c.color, self.l
                    )))
                } else {
                    Ok(Client {
                        point: c.point,
                        color: c.color - 1,
                    })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        FairInstance::new(
            metric,
            clients,
            self.facilities,
            self.k,
            self.alpha,
            self.beta,
        )
    }

    pub fn from_instance(inst: &FairInstance) -> InstanceFile {
        InstanceFile {
            space: inst.metric.materialize(),
            clients: inst
                .clients
                .iter()
                .map(|c| ClientEntry {
                    point: c.point,
                    color: c.color + 1,
                })
                .collect(),
            facilities: inst.facilities.clone(),
            k: inst.k,
            l: inst.l,
            alpha: inst.alpha.clone(),
            beta: inst.beta.clone(),
            doubling_dim_hint: inst.metric.doubling_dim_hint(),
        }
    }
}

impl FairInstance {
    pub fn from_json(text: &str) -> Result<FairInstance> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        file.into_instance()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&InstanceFile::from_instance(self)).expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::t1;

    #[test]
    fn round_trips_t1() {
        let inst = t1();
        let back = FairInstance::from_json(&inst.to_json()).unwrap();
        assert_eq!(back.clients, inst.clients);
        assert_eq!(back.facilities, inst.facilities);
        assert_eq!(back.metric.dist(0, 1), 10.0);
    }

    #[test]
    fn parses_matrix_instance_with_one_based_colors() {
        let text = r#"{"space": {"kind": "matrix", "matrix": [[0, 2], [2, 0]]},
            "clients": [{"point": 1, "color": 2}], "facilities": [0],
            "k": 1, "l": 2, "alpha": [0, 0], "beta": [1, 1]}"#;
        let inst = FairInstance::from_json(text).unwrap();
        assert_eq!(inst.clients[0].color, 1);
        assert_eq!(inst.metric.dist(0, 1), 2.0);
    }

    #[test]
    fn rejects_malformed_and_multicolor_input() {
        assert!(matches!(
            FairInstance::from_json("{nope"),
            Err(Error::Parse(_))
        ));
        let multi = r#"{"space": {"kind": "matrix", "matrix": [[0, 2], [2, 0]]},
            "clients": [{"point": 1, "color": [1, 2]}], "facilities": [0],
            "k": 1, "l": 2, "alpha": [0, 0], "beta": [1, 1]}"#;
        assert!(matches!(
            FairInstance::from_json(multi),
            Err(Error::Parse(_))
        ));
        let zero_color = r#"{"space": {"kind": "matrix", "matrix": [[0, 2], [2, 0]]},
            "clients": [{"point": 1, "color": 0}], "facilities": [0],
            "k": 1, "l": 1, "alpha": [0], "beta": [1]}"#;
        assert!(matches!(
            FairInstance::from_json(zero_color),
            Err(Error::InvalidInstance(_))
        ));
    }
}
