use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::LanguageProfile;
use crate::error::{Error, Result};

/// `1 − cos(u, v)` over the dimensions present in both vectors, in `[0, 1]`.
pub fn cosine_distance(u: &[Option<f64>], v: &[Option<f64>]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(Error::Contract(format!(
            "feature vectors differ in length: {} vs {}",
            u.len(),
            v.len()
        )));
    }
    let shared: Vec<(f64, f64)> = u
        .iter()
        .zip(v)
        .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
        .collect();
    if shared.is_empty() {
        return Err(Error::UndefinedDistance("no dimension present in both vectors".into()));
    }
    if shared.iter().all(|(a, b)| a == b) && shared.iter().any(|(a, _)| *a != 0.0) {
        return Ok(0.0);
    }
    let dot: f64 = shared.iter().map(|(a, b)| a * b).sum();
    let nu = shared.iter().map(|(a, _)| a * a).sum::<f64>().sqrt();
    let nv = shared.iter().map(|(_, b)| b * b).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::UndefinedDistance("zero vector after masking".into()));
    }
    Ok((1.0 - dot / (nu * nv)).clamp(0.0, 1.0))
}

/// Great-circle central angle (haversine form) divided by π.
pub fn geographic_distance(a: &LanguageProfile, b: &LanguageProfile) -> f64 {
    great_circle_fraction((a.latitude, a.longitude), (b.latitude, b.longitude))
}

/// Central angle between two `(latitude, longitude)` points in degrees, as a fraction of π.
pub fn great_circle_fraction(p: (f64, f64), q: (f64, f64)) -> f64 {
    let (phi1, phi2) = (p.0.to_radians(), q.0.to_radians());
    let dphi = phi2 - phi1;
    let dlambda = (q.1 - p.1).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    let h = h.clamp(0.0, 1.0);
    let angle = 2.0 * h.sqrt().atan2((1.0 - h).sqrt());
    (angle / PI).clamp(0.0, 1.0)
}

/// `1 − 2·|shared lineage prefix| / (|lineage a| + |lineage b|)`.
pub fn genetic_distance(a: &LanguageProfile, b: &LanguageProfile) -> Result<f64> {
    let shared = a
        .lineage
        .iter()
        .zip(&b.lineage)
        .take_while(|(x, y)| x == y)
        .count();
    if shared == 0 {
        return Err(Error::Spec(format!(
            "{} and {} share no family-tree root",
            a.code, b.code
        )));
    }
    let total = (a.lineage.len() + b.lineage.len()) as f64;
    Ok(1.0 - 2.0 * shared as f64 / total)
}

/// Cosine distance over the concatenated syntax, phonology and inventory
/// vectors.
///
/// With `with_geo_gen`, GEO and GEN each add a 2-D block: `a` gets the unit
/// vector `(1, 0)` and `b` the unit vector at angle `distance · π/2`. The
/// blocks contribute `cos(distance · π/2)` to the dot product and 1 to each
/// squared norm whichever way round the pair is taken, so the result stays
/// symmetric and is zero on identical profiles.
pub fn featural_distance(a: &LanguageProfile, b: &LanguageProfile, with_geo_gen: bool) -> Result<f64> {
    let mut u = a.all_features();
    let mut v = b.all_features();
    if with_geo_gen {
        for d in [geographic_distance(a, b), genetic_distance(a, b)?] {
            let theta = d * PI / 2.0;
            u.extend([Some(1.0), Some(0.0)]);
            v.extend([Some(theta.cos()), Some(theta.sin())]);
        }
    }
    cosine_distance(&u, &v)
}

/// Correlation columns, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Metric {
    #[serde(rename = "DATA")]
    Data,
    #[serde(rename = "SYN")]
    Syn,
    #[serde(rename = "GEO")]
    Geo,
    #[serde(rename = "INV")]
    Inv,
    #[serde(rename = "GEN")]
    Gen,
    #[serde(rename = "PHON")]
    Phon,
    #[serde(rename = "FEA")]
    Fea,
}

impl Metric {
    pub const REPORT_ORDER: [Metric; 7] = [
        Metric::Data,
        Metric::Syn,
        Metric::Geo,
        Metric::Inv,
        Metric::Gen,
        Metric::Phon,
        Metric::Fea,
    ];

    /// The six pairwise distances (everything but DATA).
    pub const DISTANCES: [Metric; 6] = [
        Metric::Syn,
        Metric::Geo,
        Metric::Inv,
        Metric::Gen,
        Metric::Phon,
        Metric::Fea,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Data => "DATA",
            Metric::Syn => "SYN",
            Metric::Geo => "GEO",
            Metric::Inv => "INV",
            Metric::Gen => "GEN",
            Metric::Phon => "PHON",
            Metric::Fea => "FEA",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Switches for the two metric variants left configurable.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricOptions {
    /// Include GEO and GEN blocks in FEA.
    #[serde(default)]
    pub featural_geo_gen: bool,
    /// Use `ln(1 + tokens)` instead of raw token counts for DATA.
    #[serde(default)]
    pub log_data: bool,
}

/// Distance between two profiles under one of the six pairwise metrics.
pub fn distance(metric: Metric, a: &LanguageProfile, b: &LanguageProfile, opts: MetricOptions) -> Result<f64> {
    match metric {
        Metric::Syn => cosine_distance(&a.syntax, &b.syntax),
        Metric::Phon => cosine_distance(&a.phonology, &b.phonology),
        Metric::Inv => cosine_distance(&a.inventory, &b.inventory),
        Metric::Geo => Ok(geographic_distance(a, b)),
        Metric::Gen => genetic_distance(a, b),
        Metric::Fea => featural_distance(a, b, opts.featural_geo_gen),
        Metric::Data => Err(Error::Contract("DATA is a per-language covariate, not a distance".into())),
    }
}

/// The per-language DATA covariate.
pub fn data_covariate(p: &LanguageProfile, opts: MetricOptions) -> f64 {
    if opts.log_data {
        p.pretrain_tokens.ln_1p()
    } else {
        p.pretrain_tokens
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(code: &str, lat: f64, lon: f64, lineage: &[&str]) -> LanguageProfile {
        LanguageProfile {
            code: code.into(),
            syntax: vec![Some(1.0), Some(0.0), Some(1.0)],
            phonology: vec![Some(0.5)],
            inventory: vec![Some(0.0), Some(1.0)],
            latitude: lat,
            longitude: lon,
            lineage: lineage.iter().map(|s| s.to_string()).collect(),
            pretrain_tokens: 10.0,
        }
    }

    #[test]
    fn cosine_cases() {
        let u = [Some(0.2), Some(0.7), Some(1.0)];
        assert_eq!(cosine_distance(&u, &u).unwrap(), 0.0);
        assert_eq!(cosine_distance(&[Some(1.0), Some(0.0)], &[Some(0.0), Some(1.0)]).unwrap(), 1.0);
        let d = cosine_distance(&[Some(1.0), Some(1.0), Some(0.0)], &[Some(1.0), Some(0.0), Some(1.0)]).unwrap();
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cosine_drops_missing_dimensions() {
        let d = cosine_distance(&[Some(1.0), None, Some(0.0)], &[Some(1.0), Some(1.0), None]).unwrap();
        assert_eq!(d, 0.0);
        assert!(matches!(
            cosine_distance(&[Some(1.0), None], &[None, Some(1.0)]),
            Err(Error::UndefinedDistance(_))
        ));
        assert!(matches!(
            cosine_distance(&[Some(0.0)], &[Some(1.0)]),
            Err(Error::UndefinedDistance(_))
        ));
    }

    #[test]
    fn geographic_anchors() {
        let o = at("a", 0.0, 0.0, &["r", "a"]);
        assert_eq!(geographic_distance(&o, &o), 0.0);
        assert!((geographic_distance(&o, &at("b", 0.0, 180.0, &["r", "b"])) - 1.0).abs() < 1e-9);
        assert!((geographic_distance(&o, &at("b", 0.0, 90.0, &["r", "b"])) - 0.5).abs() < 1e-9);
        assert!((geographic_distance(&o, &at("b", 90.0, 0.0, &["r", "b"])) - 0.5).abs() < 1e-9);
    }

    #[test]
    fn genetic_kinship_ordering() {
        let a = at("a", 0.0, 0.0, &["R", "X", "a"]);
        let sib = at("b", 0.0, 0.0, &["R", "X", "b"]);
        let cousin = at("c", 0.0, 0.0, &["R", "Y", "c"]);
        assert_eq!(genetic_distance(&a, &a).unwrap(), 0.0);
        assert!((genetic_distance(&a, &sib).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!((genetic_distance(&a, &cousin).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        let stranger = at("z", 0.0, 0.0, &["Q", "z"]);
        assert!(matches!(genetic_distance(&a, &stranger), Err(Error::Spec(_))));
    }

    #[test]
    fn featural_matches_concatenation_oracle() {
        let a = at("a", 0.0, 0.0, &["R", "a"]);
        let mut b = at("b", 10.0, 20.0, &["R", "b"]);
        b.inventory = vec![Some(1.0), Some(0.0)];
        // Oracle: concatenated vectors written out by hand.
        let u = [1.0, 0.0, 1.0, 0.5, 0.0, 1.0];
        let v = [1.0, 0.0, 1.0, 0.5, 1.0, 0.0];
        let dot: f64 = u.iter().zip(&v).map(|(x, y)| x * y).sum();
        let norm = |w: &[f64]| w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let want = 1.0 - dot / (norm(&u) * norm(&v));
        assert!((featural_distance(&a, &b, false).unwrap() - want).abs() < 1e-12);
        let inv_only = cosine_distance(&a.inventory, &b.inventory).unwrap();
        assert!(want < inv_only, "shared dimensions dilute the inventory difference");

        assert_eq!(featural_distance(&a, &a, true).unwrap(), 0.0);
        let ab = featural_distance(&a, &b, true).unwrap();
        let ba = featural_distance(&b, &a, true).unwrap();
        assert!((ab - ba).abs() < 1e-12);

        let mut empty = a.clone();
        empty.syntax = vec![None; 3];
        empty.phonology = vec![None];
        empty.inventory = vec![None; 2];
        assert!(matches!(featural_distance(&empty, &b, false), Err(Error::UndefinedDistance(_))));
    }
}
