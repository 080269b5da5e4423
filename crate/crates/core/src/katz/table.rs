use std::io::{Read, Write};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::sig6;
use crate::graph::CandidateUniverse;

/// One score per pair of a candidate universe, in universe order.
#[derive(Debug, Clone)]
pub struct ScoreTable {
    model: String,
    universe: Arc<CandidateUniverse>,
    scores: Vec<f64>,
    normalized: bool,
    degenerate: bool,
}

impl ScoreTable {
    pub fn new(model: impl Into<String>, universe: Arc<CandidateUniverse>, scores: Vec<f64>) -> Result<Self> {
        if scores.len() != universe.len() {
            return Err(Error::DimensionMismatch {
                expected: universe.len(),
                found: scores.len(),
            });
        }
        if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite score {bad}")));
        }
        Ok(ScoreTable {
            model: model.into(),
            universe,
            scores,
            normalized: false,
            degenerate: false,
        })
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    pub fn universe(&self) -> &Arc<CandidateUniverse> {
        &self.universe
    }

    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn labels(&self) -> &[bool] {
        self.universe.labels()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// True when normalization found a constant table.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn with_model(mut self, model: impl Into<String>) -> Self {
        self.model = model.into();
        self
    }

    /// Min–max rescaling to `[0, 1]`. A constant table maps to all zeros and
    /// is flagged degenerate.
    pub fn normalize(&self) -> ScoreTable {
        let (lo, hi) = self
            .scores
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &s| (lo.min(s), hi.max(s)));
        let degenerate = !(hi > lo);
        let scores = if degenerate {
            log::warn!("score table {:?} is constant; normalized to zeros", self.model);
            vec![0.0; self.scores.len()]
        } else {
            let span = hi - lo;
            self.scores.iter().map(|&s| (s - lo) / span).collect()
        };
        ScoreTable {
            model: self.model.clone(),
            universe: Arc::clone(&self.universe),
            scores,
            normalized: true,
            degenerate,
        }
    }
}

/// Pairwise fusion rule for two normalized tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineRule {
    #[default]
    Mean,
    Product,
    Max,
}

/// Pairwise combination of two normalized tables, before renormalization.
/// The model name is the concatenation of both names.
pub fn combine_raw(a: &ScoreTable, b: &ScoreTable, rule: CombineRule) -> Result<ScoreTable> {
    if !a.universe.same_as(&b.universe) {
        return Err(Error::UniverseMismatch);
    }
    for t in [a, b] {
        if !t.normalized {
            return Err(Error::NotNormalized(t.model.clone()));
        }
    }
    let f = match rule {
        CombineRule::Mean => |x: f64, y: f64| 0.5 * (x + y),
        CombineRule::Product => |x: f64, y: f64| x * y,
        CombineRule::Max => f64::max,
    };
    let scores = a.scores.iter().zip(&b.scores).map(|(&x, &y)| f(x, y)).collect();
    ScoreTable::new(format!("{}{}", a.model, b.model), Arc::clone(&a.universe), scores)
}

/// [`combine_raw`] followed by renormalization.
pub fn combine(a: &ScoreTable, b: &ScoreTable, rule: CombineRule) -> Result<ScoreTable> {
    Ok(combine_raw(a, b, rule)?.normalize())
}

const EXPORT_HEADER: [&str; 5] = ["source_id", "dest_id", "model", "score", "score_norm"];

/// Writes raw and normalized scores side by side, one row per pair, ordered
/// by source id then destination id.
pub fn write_scores<W: Write>(writer: W, raw: &ScoreTable, norm: &ScoreTable) -> Result<()> {
    if !raw.universe.same_as(&norm.universe) {
        return Err(Error::UniverseMismatch);
    }
    let reg = raw.universe.registry();
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(EXPORT_HEADER)?;
    for ((u, v), (&s, &n)) in raw.universe.pairs().zip(raw.scores.iter().zip(&norm.scores)) {
        w.write_record([reg.id(u), reg.id(v), norm.model(), &sig6(s), &sig6(n)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an exported score file back onto `universe`, returning the raw and
/// normalized tables. Every universe pair must appear exactly once.
pub fn read_scores<R: Read>(reader: R, universe: Arc<CandidateUniverse>) -> Result<(ScoreTable, ScoreTable)> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("score file lacks column {name:?}")))
    };
    let (ci, cj, cm, cs, cn) = (col("source_id")?, col("dest_id")?, col("model")?, col("score")?, col("score_norm")?);

    let reg = Arc::clone(universe.registry());
    let mut raw = vec![f64::NAN; universe.len()];
    let mut norm = vec![f64::NAN; universe.len()];
    let mut model: Option<String> = None;
    for row in rdr.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line());
        let row_err = |message: String| Error::Row { row: line, message };
        let get = |i: usize| row.get(i).unwrap_or("");
        let node = |id: &str| {
            reg.index_of(id)
                .ok_or_else(|| row_err(format!("unknown node {id:?}")))
        };
        let pos = universe
            .position(node(get(ci))?, node(get(cj))?)
            .ok_or_else(|| row_err("pair outside the evaluation universe".into()))?;
        if !raw[pos].is_nan() {
            return Err(row_err("duplicate pair".into()));
        }
        let num = |i: usize| {
            get(i)
                .parse::<f64>()
                .map_err(|_| row_err(format!("bad score {:?}", get(i))))
        };
        raw[pos] = num(cs)?;
        norm[pos] = num(cn)?;
        match &model {
            None => model = Some(get(cm).to_owned()),
            Some(m) if m != get(cm) => return Err(row_err("score file mixes models".into())),
            _ => {}
        }
    }
    if raw.iter().any(|s| s.is_nan()) {
        return Err(Error::InvalidArgument(
            "score file does not cover every candidate pair".into(),
        ));
    }
    let model = model.unwrap_or_default();
    let raw = ScoreTable::new(model.clone(), Arc::clone(&universe), raw)?;
    let mut norm = ScoreTable::new(model, universe, norm)?;
    norm.normalized = true;
    Ok((raw, norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::NodeRegistry;
    use std::collections::BTreeSet;

    fn universe(n: usize) -> Arc<CandidateUniverse> {
        let mut reg = NodeRegistry::new();
        for i in 0..n {
            reg.insert(&format!("N{i}"), None);
        }
        Arc::new(CandidateUniverse::new(Arc::new(reg), 0..n, &BTreeSet::from([(0, 1)])))
    }

    fn table(u: &Arc<CandidateUniverse>, scores: &[f64]) -> ScoreTable {
        ScoreTable::new("T", Arc::clone(u), scores.to_vec()).unwrap()
    }

    #[test]
    fn normalize_rescales() {
        let u = universe(2);
        let t = table(&u, &[5.0, 10.0]).normalize();
        assert_eq!(t.scores(), &[0.0, 1.0]);
        let u3 = universe(3);
        let t = table(&u3, &[0.0, 5.0, 10.0, 5.0, 0.0, 10.0]).normalize();
        assert_eq!(t.scores(), &[0.0, 0.5, 1.0, 0.5, 0.0, 1.0]);
        assert!(!t.is_degenerate());
    }

    #[test]
    fn constant_table_is_degenerate() {
        let u = universe(2);
        let t = table(&u, &[3.0, 3.0]).normalize();
        assert_eq!(t.scores(), &[0.0, 0.0]);
        assert!(t.is_degenerate());
    }

    #[test]
    fn combine_rules() {
        let u = universe(2);
        let a = table(&u, &[0.0, 1.0]).normalize().with_model("KI");
        let mut ones = table(&u, &[1.0, 1.0]).normalize().with_model("EWKI");
        ones.scores = vec![1.0, 1.0];

        let mean = combine_raw(&a, &ones, CombineRule::Mean).unwrap();
        assert_eq!(mean.scores(), &[0.5, 1.0]);
        let mean = combine(&a, &ones, CombineRule::Mean).unwrap();
        assert_eq!(mean.scores(), &[0.0, 1.0]);
        assert_eq!(mean.model(), "KIEWKI");

        let prod = combine_raw(&a, &ones, CombineRule::Product).unwrap();
        assert_eq!(prod.scores(), a.scores());
        let self_mean = combine(&a, &a, CombineRule::Mean).unwrap();
        assert_eq!(self_mean.scores(), a.scores());
    }

    #[test]
    fn combine_checks_preconditions() {
        let a = table(&universe(2), &[0.0, 1.0]);
        let b = table(&universe(2), &[0.0, 1.0]).normalize();
        assert!(matches!(combine(&a.normalize(), &b, CombineRule::Mean), Err(Error::UniverseMismatch)));
        assert!(matches!(combine(&a, &a, CombineRule::Mean), Err(Error::NotNormalized(_))));
    }

    #[test]
    fn export_and_reimport() {
        let u = universe(3);
        let raw = table(&u, &[0.25, 0.0, 1e-7, 2.0, 0.5, 1.0]).with_model("KI");
        let norm = raw.normalize();
        let mut buf = Vec::new();
        write_scores(&mut buf, &raw, &norm).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("source_id,dest_id,model,score,score_norm\nN0,N1,KI,0.25,0.125\n"));
        let (r2, n2) = read_scores(&buf[..], Arc::clone(&u)).unwrap();
        assert_eq!(r2.scores(), raw.scores());
        assert_eq!(n2.model(), "KI");
        assert!(n2.is_normalized());
    }
}
