//! Planted-circle ego-nets written in the SNAP layout, for tests and smoke
//! runs where real data is not at hand.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantedCircles {
    pub egos: usize,
    pub alters_per_ego: usize,
    pub circles_per_ego: usize,
    pub features: usize,
    /// Edge probability between alters sharing a circle.
    pub p_in: f64,
    /// Edge probability between any other pair of alters.
    pub p_out: f64,
    /// Probability that a member also joins a second circle.
    pub overlap: f64,
    /// Fraction of alters left outside every circle.
    pub unlabeled: f64,
    /// Probability that a circle's signature bit is set on a member.
    pub feature_signal: f64,
    pub seed: u64,
}

impl Default for PlantedCircles {
    fn default() -> Self {
        PlantedCircles {
            egos: 4,
            alters_per_ego: 40,
            circles_per_ego: 3,
            features: 24,
            p_in: 0.5,
            p_out: 0.03,
            overlap: 0.1,
            unlabeled: 0.1,
            feature_signal: 0.8,
            seed: 7,
        }
    }
}

/// Ego `i` has id `1000 * (i + 1)`; its alters follow it consecutively.
pub fn ego_id(i: usize) -> u64 {
    1000 * (i as u64 + 1)
}

pub fn write_planted_circles(dir: &Path, params: &PlantedCircles) -> Result<()> {
    if params.alters_per_ego == 0 || params.alters_per_ego >= 1000 || params.circles_per_ego == 0 {
        return Err(Error::InvalidConfig("planted circles need 1..1000 alters and at least one circle".into()));
    }
    fs::create_dir_all(dir).map_err(Error::io(dir))?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let f = params.features;
    let featnames: String = (0..f).map(|j| format!("{j} feature;anonymized feature {j}\n")).collect();
    for e in 0..params.egos {
        let ego = ego_id(e);
        let alters: Vec<u64> = (1..=params.alters_per_ego as u64).map(|k| ego + k).collect();
        let mut member: Vec<Vec<usize>> = vec![Vec::new(); alters.len()];
        for (i, m) in member.iter_mut().enumerate() {
            if rng.gen_bool(params.unlabeled) {
                continue;
            }
            let c = i % params.circles_per_ego;
            m.push(c);
            if params.circles_per_ego > 1 && rng.gen_bool(params.overlap) {
                m.push((c + 1 + rng.gen_range(0..params.circles_per_ego - 1)) % params.circles_per_ego);
            }
        }
        let mut edges = String::new();
        for i in 0..alters.len() {
            for j in i + 1..alters.len() {
                let shared = member[i].iter().any(|c| member[j].contains(c));
                if rng.gen_bool(if shared { params.p_in } else { params.p_out }) {
                    edges.push_str(&format!("{} {}\n", alters[i], alters[j]));
                }
            }
        }
        let mut circles = String::new();
        for c in 0..params.circles_per_ego {
            circles.push_str(&format!("circle{c}"));
            for (i, a) in alters.iter().enumerate() {
                if member[i].contains(&c) {
                    circles.push_str(&format!("\t{a}"));
                }
            }
            circles.push('\n');
        }
        let signature = |c: usize, j: usize| f > 0 && j % params.circles_per_ego.max(1) == c;
        let mut feat = String::new();
        for (i, a) in alters.iter().enumerate() {
            feat.push_str(&a.to_string());
            for j in 0..f {
                let on = if member[i].iter().any(|&c| signature(c, j)) {
                    rng.gen_bool(params.feature_signal)
                } else {
                    rng.gen_bool(0.1)
                };
                feat.push_str(if on { " 1" } else { " 0" });
            }
            feat.push('\n');
        }
        let egofeat: Vec<&str> = (0..f).map(|_| if rng.gen_bool(0.3) { "1" } else { "0" }).collect();
        let put = |suffix: &str, body: String| {
            let p = dir.join(format!("{ego}.{suffix}"));
            fs::write(&p, body).map_err(Error::io(&p))
        };
        put("edges", edges)?;
        put("circles", circles)?;
        put("feat", feat)?;
        put("egofeat", egofeat.join(" ") + "\n")?;
        put("featnames", featnames.clone())?;
    }
    Ok(())
}
