use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Typological and genealogical description of one language.
///
/// Feature arrays use `None` (JSON `null`) for missing values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LanguageProfile {
    pub code: String,
    pub syntax: Vec<Option<f64>>,
    pub phonology: Vec<Option<f64>>,
    pub inventory: Vec<Option<f64>>,
    pub latitude: f64,
    pub longitude: f64,
    /// Root-to-leaf path in the family tree; the last entry is the language.
    pub lineage: Vec<String>,
    /// Size of the language's pre-training corpus, in tokens.
    pub pretrain_tokens: f64,
}

impl LanguageProfile {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Schema(format!("profile {}: {msg}", self.code)));
        if !(-90.0..=90.0).contains(&self.latitude) {
            return bad(format!("latitude {} outside [-90, 90]", self.latitude));
        }
        if !(-180.0..=180.0).contains(&self.longitude) {
            return bad(format!("longitude {} outside [-180, 180]", self.longitude));
        }
        match self.lineage.last() {
            None => return bad("empty lineage".into()),
            Some(last) if *last != self.code => {
                return bad(format!("lineage ends in {last:?}, not the language itself"))
            }
            _ => {}
        }
        for (name, values) in [
            ("syntax", &self.syntax),
            ("phonology", &self.phonology),
            ("inventory", &self.inventory),
        ] {
            if let Some(v) = values.iter().flatten().find(|v| !(0.0..=1.0).contains(*v)) {
                return bad(format!("{name} feature {v} outside [0, 1]"));
            }
        }
        if !(self.pretrain_tokens >= 0.0 && self.pretrain_tokens.is_finite()) {
            return bad(format!("pretrain_tokens {} is not a non-negative number", self.pretrain_tokens));
        }
        Ok(())
    }

    /// Syntax, phonology and inventory features concatenated.
    pub fn all_features(&self) -> Vec<Option<f64>> {
        self.syntax
            .iter()
            .chain(&self.phonology)
            .chain(&self.inventory)
            .copied()
            .collect()
    }
}

pub fn parse_profiles(json: &str) -> Result<Vec<LanguageProfile>> {
    let profiles: Vec<LanguageProfile> = serde_json::from_str(json)?;
    for p in &profiles {
        p.validate()?;
    }
    let mut codes: Vec<&str> = profiles.iter().map(|p| p.code.as_str()).collect();
    codes.sort_unstable();
    if let Some(w) = codes.windows(2).find(|w| w[0] == w[1]) {
        return Err(Error::Schema(format!("duplicate profile for {}", w[0])));
    }
    Ok(profiles)
}

pub fn load_profiles(path: impl AsRef<Path>) -> Result<Vec<LanguageProfile>> {
    let path = path.as_ref();
    let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_profiles(&s)
}

pub fn save_profiles(profiles: &[LanguageProfile], path: impl AsRef<Path>) -> Result<()> {
    let json = serde_json::to_string_pretty(profiles)?;
    crate::model::checkpoint::write_file(path.as_ref(), json.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile() -> LanguageProfile {
        LanguageProfile {
            code: "eng".into(),
            syntax: vec![Some(1.0), None],
            phonology: vec![Some(0.0)],
            inventory: vec![],
            latitude: 52.0,
            longitude: -1.0,
            lineage: vec!["ie".into(), "germanic".into(), "eng".into()],
            pretrain_tokens: 1e6,
        }
    }

    #[test]
    fn json_uses_null_for_missing_features() {
        let json = serde_json::to_string(&vec![profile()]).unwrap();
        assert!(json.contains("[1.0,null]"), "{json}");
        assert_eq!(parse_profiles(&json).unwrap(), vec![profile()]);
    }

    #[test]
    fn validation_catches_each_invariant() {
        let mut p = profile();
        p.latitude = 91.0;
        assert!(p.validate().is_err());
        let mut p = profile();
        p.lineage = vec!["ie".into()];
        assert!(p.validate().is_err());
        let mut p = profile();
        p.syntax[0] = Some(1.5);
        assert!(p.validate().is_err());
        let dup = serde_json::to_string(&vec![profile(), profile()]).unwrap();
        assert!(parse_profiles(&dup).is_err());
    }
}
