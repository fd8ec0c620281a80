use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::DocKind;
use crate::error::{Error, Result};
use crate::imagefeat::BaseFeatures;
use crate::pipeline::{PreparedCandidate, PreparedDocument};
use crate::scholarly::ScholarlyFeatures;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    Base,
    Section,
    Caption,
    FigurePosition,
    /// Number of in-text references; only part of `all`.
    References,
}

impl FeatureSet {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSet::Base => "base",
            FeatureSet::Section => "section",
            FeatureSet::Caption => "caption",
            FeatureSet::FigurePosition => "figure_position",
            FeatureSet::References => "references",
        }
    }

    pub fn names(self) -> &'static [&'static str] {
        match self {
            FeatureSet::Base => &BaseFeatures::NAMES,
            FeatureSet::Section => &[
                "section_index",
                "section_index_scaled",
                "char_position_in_section",
                "word_position_in_section",
            ],
            FeatureSet::Caption => &["caption_tf_rank", "caption_tf_rank_scaled", "jaccard_title_caption"],
            FeatureSet::FigurePosition => &["figure_position", "figure_position_scaled"],
            FeatureSet::References => &["reference_count"],
        }
    }

    pub fn is_scholarly(self) -> bool {
        self != FeatureSet::Base
    }

    fn values(self, c: &PreparedCandidate, s: Option<&ScholarlyFeatures>) -> Vec<f64> {
        match (self, s) {
            (FeatureSet::Base, _) => c.base.to_vec().to_vec(),
            (FeatureSet::Section, Some(s)) => vec![
                s.section_index as f64,
                s.section_index_scaled,
                s.char_position_in_section as f64,
                s.word_position_in_section as f64,
            ],
            (FeatureSet::Caption, Some(s)) => vec![s.caption_tf_rank as f64, s.caption_tf_rank_scaled, s.jaccard_title_caption],
            (FeatureSet::FigurePosition, Some(s)) => vec![s.figure_position as f64, s.figure_position_scaled],
            (FeatureSet::References, Some(s)) => vec![s.reference_count as f64],
            (_, None) => unreachable!("checked by caller"),
        }
    }
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "base" => FeatureSet::Base,
            "section" => FeatureSet::Section,
            "caption" => FeatureSet::Caption,
            "figure_position" | "figure-position" => FeatureSet::FigurePosition,
            "references" => FeatureSet::References,
            other => return Err(Error::invalid(format!("unknown feature set {other:?}"))),
        })
    }
}

/// A combination of feature sets with optional individual features removed,
/// written as `base+figure_position` or `base-minus(aspect_ratio,negative_space)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FeatureSpec {
    sets: Vec<FeatureSet>,
    excluded: Vec<String>,
}

impl FeatureSpec {
    pub fn new(sets: impl IntoIterator<Item = FeatureSet>) -> Self {
        let mut sets: Vec<FeatureSet> = sets.into_iter().collect();
        sets.sort();
        sets.dedup();
        FeatureSpec { sets, excluded: Vec::new() }
    }

    pub fn base() -> Self {
        Self::new([FeatureSet::Base])
    }

    pub fn all() -> Self {
        Self::new([
            FeatureSet::Base,
            FeatureSet::Section,
            FeatureSet::Caption,
            FeatureSet::FigurePosition,
            FeatureSet::References,
        ])
    }

    pub fn without(mut self, features: &[&str]) -> Self {
        for f in features {
            if !self.excluded.iter().any(|e| e == f) {
                self.excluded.push(f.to_string());
            }
        }
        self
    }

    pub fn sets(&self) -> &[FeatureSet] {
        &self.sets
    }

    pub fn needs_scholarly(&self) -> bool {
        self.sets.iter().any(|s| s.is_scholarly())
    }

    pub fn schema(&self) -> Vec<String> {
        self.sets
            .iter()
            .flat_map(|s| s.names().iter())
            .filter(|n| !self.excluded.iter().any(|e| e == *n))
            .map(|n| n.to_string())
            .collect()
    }

    pub fn dimension(&self) -> usize {
        self.schema().len()
    }

    pub fn vector(&self, c: &PreparedCandidate) -> Result<Vec<f64>> {
        if self.needs_scholarly() && c.scholarly.is_none() {
            return Err(Error::invalid(format!("feature set {self} needs scholarly features")));
        }
        let mut out = Vec::with_capacity(self.dimension());
        for set in &self.sets {
            for (name, v) in set.names().iter().zip(set.values(c, c.scholarly.as_ref())) {
                if !self.excluded.iter().any(|e| e == name) {
                    out.push(v);
                }
            }
        }
        Ok(out)
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == FeatureSpec::all() {
            return f.write_str("all");
        }
        let joined = self.sets.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("+");
        f.write_str(&joined)?;
        if !self.excluded.is_empty() {
            write!(f, "-minus({})", self.excluded.join(","))?;
        }
        Ok(())
    }
}

impl FromStr for FeatureSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (sets_part, excluded) = match s.find("-minus(") {
            Some(i) => {
                let rest = &s[i + "-minus(".len()..];
                let inner = rest
                    .strip_suffix(')')
                    .ok_or_else(|| Error::invalid(format!("unterminated -minus( in {s:?}")))?;
                let names: Vec<String> = inner.split(',').map(|n| n.trim().to_string()).filter(|n| !n.is_empty()).collect();
                (&s[..i], names)
            }
            None => (s, Vec::new()),
        };
        let mut spec = if sets_part == "all" {
            FeatureSpec::all()
        } else {
            FeatureSpec::new(sets_part.split('+').map(str::parse).collect::<Result<Vec<_>>>()?)
        };
        let known = spec.schema();
        for e in &excluded {
            if !known.contains(e) {
                return Err(Error::invalid(format!("cannot remove {e:?}: not in {sets_part}")));
            }
        }
        spec.excluded = excluded;
        if spec.dimension() == 0 {
            return Err(Error::invalid(format!("feature spec {s:?} selects no features")));
        }
        Ok(spec)
    }
}

impl Serialize for FeatureSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for FeatureSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

/// Values for `schema`, looked up by feature name across every set.
pub fn named_vector(c: &PreparedCandidate, schema: &[String]) -> Result<Vec<f64>> {
    schema
        .iter()
        .map(|name| {
            let set = [
                FeatureSet::Base,
                FeatureSet::Section,
                FeatureSet::Caption,
                FeatureSet::FigurePosition,
                FeatureSet::References,
            ]
            .into_iter()
            .find(|s| s.names().contains(&name.as_str()))
            .ok_or_else(|| Error::invalid(format!("unknown feature {name:?}")))?;
            if set.is_scholarly() && c.scholarly.is_none() {
                return Err(Error::invalid(format!("feature {name} needs a scholarly document")));
            }
            let idx = set.names().iter().position(|n| n == name).expect("found above");
            Ok(set.values(c, c.scholarly.as_ref())[idx])
        })
        .collect()
}

/// Named feature vectors for every candidate of a document.
#[derive(Debug, Clone, PartialEq)]
pub struct AssembledFeatures {
    pub schema: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

pub fn assemble_features(doc: &PreparedDocument, spec: &FeatureSpec) -> Result<AssembledFeatures> {
    if spec.needs_scholarly() && doc.doc_kind != DocKind::Scholarly {
        return Err(Error::invalid(format!(
            "feature set {spec} requested for news document {}",
            doc.doc_id
        )));
    }
    let rows = doc.candidates.iter().map(|c| spec.vector(c)).collect::<Result<_>>()?;
    Ok(AssembledFeatures {
        schema: spec.schema(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        assert_eq!(FeatureSpec::base().dimension(), 7);
        let bf: FeatureSpec = "base+figure_position".parse().unwrap();
        assert_eq!(bf.dimension(), 9);
        let bs: FeatureSpec = "base+section".parse().unwrap();
        assert_eq!(bs.dimension(), 11);
        assert_eq!(FeatureSpec::all().dimension(), 17);
    }

    #[test]
    fn parse_and_display() {
        let s: FeatureSpec = "figure_position+base".parse().unwrap();
        assert_eq!(s.to_string(), "base+figure_position");
        let m: FeatureSpec = "base-minus(aspect_ratio, negative_space)".parse().unwrap();
        assert_eq!(m.to_string(), "base-minus(aspect_ratio,negative_space)");
        assert_eq!(m.dimension(), 5);
        assert!(!m.schema().contains(&"aspect_ratio".to_string()));
        assert_eq!("all".parse::<FeatureSpec>().unwrap(), FeatureSpec::all());
        assert!("base+colour".parse::<FeatureSpec>().is_err());
        assert!("base-minus(figure_position)".parse::<FeatureSpec>().is_err());
        assert!("base-minus(width".parse::<FeatureSpec>().is_err());
    }
}
