//! Seeded synthetic movement networks with distance-dependent trade.
//!
//! Nodes are placed uniformly in a latitude/longitude box. Each movement
//! either reuses a previously traded link or draws a new one: the source is
//! chosen with weight `1 + hub_bias * degree`, the destination with weight
//! `exp(-decay_rate * distance)`. The generator also reports the counts the
//! pipeline should recover from its output.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geo::{DistanceMatrix, GeoPoint, DEFAULT_DENSE_MAX_NODES};
use crate::graph::{MovementRecord, SplitSpec, YearRange};

const PLACEMENT_STREAM: u64 = 0;
const MOVEMENT_STREAM: u64 = 1;

const SPECIES: [&str; 5] = ["rainbow trout", "brown trout", "atlantic salmon", "common carp", "tench"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub seed: u64,
    pub n_nodes: usize,
    pub years: YearRange,
    pub lat_range: [f64; 2],
    pub lon_range: [f64; 2],
    pub movements_per_year: u64,
    /// When set, overrides `movements_per_year`: the total is spread evenly
    /// over the years, earlier years taking the remainder.
    pub total_movements: Option<u64>,
    /// Destination weight decay per kilometer.
    pub decay_rate: f64,
    pub hub_bias: f64,
    pub repeat_edge_prob: f64,
    /// Windows whose node and edge counts are added to the truth summary.
    pub split: Option<SplitSpec>,
}

impl Default for SynthConfig {
    /// Shaped like a national live-fish movement register: 2,480 sites,
    /// 2010–2023, 16,946 movements.
    fn default() -> Self {
        SynthConfig {
            seed: 20_240_601,
            n_nodes: 2480,
            years: YearRange::new(2010, 2023),
            lat_range: [50.0, 55.5],
            lon_range: [-5.5, 1.8],
            movements_per_year: 1210,
            total_movements: Some(16_946),
            decay_rate: 0.02,
            hub_bias: 3.0,
            repeat_edge_prob: 0.75,
            split: Some(SplitSpec {
                train: YearRange::new(2010, 2021),
                val: YearRange::single(2022),
                test: YearRange::single(2023),
            }),
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(format!("synth: {msg}")));
        if self.years.start > self.years.end {
            return bad("year range is reversed".into());
        }
        let [lat0, lat1] = self.lat_range;
        let [lon0, lon1] = self.lon_range;
        if !(-90.0..=90.0).contains(&lat0) || !(-90.0..=90.0).contains(&lat1) || !(lat0 < lat1) {
            return bad(format!("degenerate latitude range {lat0}..{lat1}"));
        }
        if !(-180.0..=180.0).contains(&lon0) || !(-180.0..=180.0).contains(&lon1) || !(lon0 < lon1) {
            return bad(format!("degenerate longitude range {lon0}..{lon1}"));
        }
        if !(self.decay_rate >= 0.0 && self.decay_rate.is_finite()) {
            return bad(format!("decay_rate {} must be non-negative", self.decay_rate));
        }
        if !(self.hub_bias >= 0.0 && self.hub_bias.is_finite()) {
            return bad(format!("hub_bias {} must be non-negative", self.hub_bias));
        }
        if !(0.0..=1.0).contains(&self.repeat_edge_prob) {
            return bad(format!("repeat_edge_prob {} outside [0, 1]", self.repeat_edge_prob));
        }
        if self.movement_counts().values().any(|&m| m > 0) && self.n_nodes < 2 {
            return bad("movements need at least two nodes".into());
        }
        if let Some(split) = &self.split {
            split.validate()?;
        }
        Ok(())
    }

    /// Movements to draw in each year.
    pub fn movement_counts(&self) -> BTreeMap<i32, u64> {
        let years: Vec<i32> = (self.years.start..=self.years.end).collect();
        match self.total_movements {
            None => years.into_iter().map(|y| (y, self.movements_per_year)).collect(),
            Some(total) => {
                let k = years.len() as u64;
                let (base, extra) = (total / k, total % k);
                years
                    .into_iter()
                    .enumerate()
                    .map(|(i, y)| (y, base + u64::from((i as u64) < extra)))
                    .collect()
            }
        }
    }

    /// Node ids and positions; identical for every call with the same seed.
    pub fn place_nodes(&self) -> Vec<(String, GeoPoint)> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(PLACEMENT_STREAM);
        let round6 = |x: f64| (x * 1e6).round() / 1e6;
        let [lat0, lat1] = self.lat_range;
        let [lon0, lon1] = self.lon_range;
        (0..self.n_nodes)
            .map(|i| {
                let lat = round6(rng.random_range(lat0..lat1));
                let lon = round6(rng.random_range(lon0..lon1));
                (format!("F{i:05}"), GeoPoint { lat, lon })
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PartTruth {
    pub movements: u64,
    /// Distinct `(source, dest, year)` triples.
    pub edges: usize,
    /// Distinct `(source, dest)` pairs.
    pub links: usize,
    /// Nodes incident to those edges.
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitTruth {
    pub train: PartTruth,
    pub val: PartTruth,
    pub test: PartTruth,
}

/// Counts describing a generated record set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub seed: u64,
    /// Nodes placed, whether or not they trade.
    pub n_nodes: usize,
    /// Nodes appearing in at least one movement.
    pub active_nodes: usize,
    pub movements: u64,
    pub edges: usize,
    /// Distinct `(source, dest)` pairs over all years.
    pub links: usize,
    pub per_year: BTreeMap<i32, PartTruth>,
    pub splits: Option<SplitTruth>,
    pub config: SynthConfig,
}

impl SynthTruth {
    pub fn write_json<W: Write>(&self, writer: W) -> Result<()> {
        serde_json::to_writer_pretty(writer, self)?;
        Ok(())
    }
}

fn part_truth(records: &[MovementRecord], years: YearRange) -> PartTruth {
    let mut edges = BTreeSet::new();
    let mut links = BTreeSet::new();
    let mut nodes = BTreeSet::new();
    let mut movements = 0;
    for r in records.iter().filter(|r| years.contains(r.year)) {
        movements += 1;
        edges.insert((r.source_id.as_str(), r.dest_id.as_str(), r.year));
        links.insert((r.source_id.as_str(), r.dest_id.as_str()));
        nodes.insert(r.source_id.as_str());
        nodes.insert(r.dest_id.as_str());
    }
    PartTruth {
        movements,
        edges: edges.len(),
        links: links.len(),
        nodes: nodes.len(),
    }
}

/// Draws index `i` with probability `weights[i] / Σ weights` by a linear scan.
fn sample_weighted(rng: &mut ChaCha8Rng, weights: impl Iterator<Item = f64> + Clone) -> usize {
    let total: f64 = weights.clone().sum();
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (i, w) in weights.enumerate() {
        if w > 0.0 {
            last = i;
            acc += w;
            if target < acc {
                return i;
            }
        }
    }
    last
}

/// Generates movement records and their truth summary.
pub fn generate(cfg: &SynthConfig) -> Result<(Vec<MovementRecord>, SynthTruth)> {
    cfg.validate()?;
    let nodes = cfg.place_nodes();
    let n = nodes.len();
    let distances = DistanceMatrix::from_points(nodes.iter().map(|(_, p)| *p).collect(), DEFAULT_DENSE_MAX_NODES);

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(MOVEMENT_STREAM);

    let mut degree = vec![0u64; n];
    let mut links: Vec<(usize, usize)> = Vec::new();
    let mut seen: HashSet<(usize, usize)> = HashSet::new();
    let mut history: Vec<(usize, usize)> = Vec::new();
    let mut records = Vec::new();

    for (year, count) in cfg.movement_counts() {
        for _ in 0..count {
            // Repeats draw a past movement, so busier links recur more often.
            let (s, d) = if !history.is_empty() && rng.random_bool(cfg.repeat_edge_prob) {
                history[rng.random_range(0..history.len())]
            } else {
                let s = sample_weighted(&mut rng, degree.iter().map(|&k| 1.0 + cfg.hub_bias * k as f64));
                let d = sample_weighted(
                    &mut rng,
                    (0..n).map(|v| {
                        if v == s {
                            0.0
                        } else {
                            (-cfg.decay_rate * distances.get(s, v)).exp()
                        }
                    }),
                );
                (s, d)
            };
            debug_assert_ne!(s, d);
            if seen.insert((s, d)) {
                links.push((s, d));
                degree[s] += 1;
                degree[d] += 1;
            }
            history.push((s, d));
            let species = SPECIES[rng.random_range(0..SPECIES.len())];
            records.push(MovementRecord {
                source_id: nodes[s].0.clone(),
                dest_id: nodes[d].0.clone(),
                year,
                source: nodes[s].1,
                dest: nodes[d].1,
                species: Some(species.to_owned()),
            });
        }
    }

    let per_year = (cfg.years.start..=cfg.years.end)
        .map(|y| (y, part_truth(&records, YearRange::single(y))))
        .collect();
    let all = part_truth(&records, cfg.years);
    let truth = SynthTruth {
        seed: cfg.seed,
        n_nodes: n,
        active_nodes: all.nodes,
        movements: all.movements,
        edges: all.edges,
        links: links.len(),
        per_year,
        splits: cfg.split.map(|s| SplitTruth {
            train: part_truth(&records, s.train),
            val: part_truth(&records, s.val),
            test: part_truth(&records, s.test),
        }),
        config: cfg.clone(),
    };
    Ok((records, truth))
}
