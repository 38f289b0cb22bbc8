use std::collections::{BTreeMap, BTreeSet};

use super::results::{aggregate, csv_error, finish, ResultsTable, Setting};
use crate::error::{Error, Result};
use crate::linguistics::{data_covariate, distance, pearson, LanguageProfile, Metric, MetricOptions};

/// Prompt lengths covered by a length sweep.
pub const SWEEP_LENGTHS: [usize; 6] = [1, 2, 5, 10, 20, 30];

/// Fewest languages a correlation column is computed over.
pub const MIN_LANGUAGES: usize = 3;

pub const SIGN_NOTE: &str = "r is computed against distance to the source language \
(DATA: pre-training token count). Negative r means closer languages transfer better; \
read as similarity metrics, the signs flip.";

/// One metric's correlation for one setting.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCell {
    pub metric: Metric,
    /// `None` when the column is unavailable.
    pub r: Option<f64>,
    /// Languages the coefficient was computed over.
    pub languages: Vec<String>,
    /// Target languages left out of this column, with the reason.
    pub dropped: Vec<(String, String)>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationRow {
    pub setting: Setting,
    pub cells: Vec<CorrelationCell>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub source: String,
    pub rows: Vec<CorrelationRow>,
}

/// Per-setting language → mean accuracy, from [`aggregate`].
fn mean_accuracy(results: &ResultsTable) -> Result<BTreeMap<Setting, BTreeMap<String, f64>>> {
    let mut out: BTreeMap<Setting, BTreeMap<String, f64>> = BTreeMap::new();
    for row in aggregate(results)? {
        out.entry(row.setting).or_default().insert(row.language, row.mean);
    }
    Ok(out)
}

/// Pearson r between mean target-language accuracy and each metric, per setting.
///
/// Targets are the languages with results other than `source`. A language
/// whose distance is undefined for a metric (missing features) is dropped
/// from that column only; a column with fewer than [`MIN_LANGUAGES`]
/// languages, or with constant input, is unavailable.
pub fn correlation_table(
    results: &ResultsTable,
    profiles: &[LanguageProfile],
    source: &str,
    opts: MetricOptions,
) -> Result<CorrelationReport> {
    let by_code: BTreeMap<&str, &LanguageProfile> =
        profiles.iter().map(|p| (p.code.as_str(), p)).collect();
    let src = *by_code
        .get(source)
        .ok_or_else(|| Error::Contract(format!("no profile for source language {source}")))?;
    let mut rows = Vec::new();
    for (setting, accuracy) in mean_accuracy(results)? {
        let cells = Metric::REPORT_ORDER
            .iter()
            .map(|&metric| {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                let mut languages = Vec::new();
                let mut dropped = Vec::new();
                for (lang, &acc) in accuracy.iter().filter(|(l, _)| l.as_str() != source) {
                    let Some(p) = by_code.get(lang.as_str()) else {
                        dropped.push((lang.clone(), "no profile".to_string()));
                        continue;
                    };
                    let x = match metric {
                        Metric::Data => Ok(data_covariate(p, opts)),
                        m => distance(m, src, p, opts),
                    };
                    match x {
                        Ok(x) => {
                            xs.push(x);
                            ys.push(acc);
                            languages.push(lang.clone());
                        }
                        Err(e) => dropped.push((lang.clone(), e.to_string())),
                    }
                }
                let (r, note) = if xs.len() < MIN_LANGUAGES {
                    (None, Some(format!("only {} usable languages", xs.len())))
                } else {
                    match pearson(&xs, &ys) {
                        Ok(r) => (Some(r), None),
                        Err(e) => (None, Some(e.to_string())),
                    }
                };
                CorrelationCell {
                    metric,
                    r,
                    languages,
                    dropped,
                    note,
                }
            })
            .collect();
        rows.push(CorrelationRow { setting, cells });
    }
    Ok(CorrelationReport {
        source: source.to_string(),
        rows,
    })
}

fn format_r(r: Option<f64>) -> String {
    r.map_or_else(|| "NA".to_string(), |r| r.to_string())
}

impl CorrelationReport {
    /// `correlations.csv`: one row per setting, one column per metric, `NA`
    /// where unavailable. Footer lines start with `#`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["setting".to_string()];
        header.extend(Metric::REPORT_ORDER.iter().map(|m| m.name().to_string()));
        w.write_record(&header).map_err(csv_error)?;
        for row in &self.rows {
            let mut rec = vec![row.setting.to_string()];
            rec.extend(row.cells.iter().map(|c| format_r(c.r)));
            w.write_record(&rec).map_err(csv_error)?;
        }
        let mut out = finish(w)?;
        out.push_str(&format!("# source language: {}\n# {SIGN_NOTE}\n", self.source));
        for row in &self.rows {
            for c in &row.cells {
                for (lang, why) in &c.dropped {
                    out.push_str(&format!("# {} {}: dropped {lang} ({why})\n", row.setting, c.metric));
                }
                if let Some(note) = &c.note {
                    out.push_str(&format!("# {} {}: unavailable ({note})\n", row.setting, c.metric));
                }
            }
        }
        Ok(out)
    }
}

/// Mean accuracy across languages at one prompt length.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub length: usize,
    pub mean: f64,
    pub languages: usize,
}

/// Mean over languages of the per-language seed means, at every sweep length.
///
/// Rows are matched on `base` with only the prompt length varying. A missing
/// length is a contract error naming it.
pub fn length_sweep_report(results: &ResultsTable, base: Setting) -> Result<Vec<SweepRow>> {
    let means = mean_accuracy(results)?;
    let missing: Vec<usize> = SWEEP_LENGTHS
        .iter()
        .copied()
        .filter(|&n| !means.contains_key(&Setting { prompt_length: n, ..base }))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Contract(format!(
            "length sweep is missing prompt length(s) {missing:?} for {}",
            base
        )));
    }
    Ok(SWEEP_LENGTHS
        .iter()
        .map(|&n| {
            let per_lang = &means[&Setting { prompt_length: n, ..base }];
            SweepRow {
                length: n,
                mean: per_lang.values().sum::<f64>() / per_lang.len() as f64,
                languages: per_lang.len(),
            }
        })
        .collect())
}

/// `sweep.csv`: `length,mean`.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["length", "mean"]).map_err(csv_error)?;
    for r in rows {
        w.write_record([r.length.to_string(), r.mean.to_string()])
            .map_err(csv_error)?;
    }
    finish(w)
}

/// Percent change from reparameterization for one language; `None` when the
/// plain accuracy is 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpactRow {
    pub language: String,
    pub percent: Option<f64>,
}

/// `100 · (with − without) / without` per language.
pub fn reparam_impact(
    with_reparam: &BTreeMap<String, f64>,
    without_reparam: &BTreeMap<String, f64>,
) -> Result<Vec<ImpactRow>> {
    let a: BTreeSet<&String> = with_reparam.keys().collect();
    let b: BTreeSet<&String> = without_reparam.keys().collect();
    if a != b {
        let only_with: Vec<&&String> = a.difference(&b).collect();
        let only_without: Vec<&&String> = b.difference(&a).collect();
        return Err(Error::Contract(format!(
            "language sets differ: only with reparameterization {only_with:?}, only without {only_without:?}"
        )));
    }
    Ok(with_reparam
        .iter()
        .map(|(lang, &r)| {
            let p = without_reparam[lang];
            ImpactRow {
                language: lang.clone(),
                percent: (p != 0.0).then(|| 100.0 * (r - p) / p),
            }
        })
        .collect())
}

/// Impact of every reparameterized setting in `results` against its plain
/// counterpart, computed on per-language seed means.
pub fn impact_from_results(results: &ResultsTable) -> Result<Vec<(Setting, Vec<ImpactRow>)>> {
    let means = mean_accuracy(results)?;
    let mut out = Vec::new();
    for (setting, with) in &means {
        if setting.reparam.is_none() {
            continue;
        }
        if let Some(without) = means.get(&setting.plain()) {
            out.push((*setting, reparam_impact(with, without)?));
        }
    }
    Ok(out)
}

/// `impact.csv`: `setting,language,percent`; undefined entries read `undefined`.
pub fn impact_csv(groups: &[(Setting, Vec<ImpactRow>)]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["setting", "language", "percent"]).map_err(csv_error)?;
    for (setting, rows) in groups {
        for r in rows {
            let pct = r.percent.map_or_else(|| "undefined".to_string(), |p| p.to_string());
            w.write_record([setting.to_string(), r.language.clone(), pct])
                .map_err(csv_error)?;
        }
    }
    finish(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::training::{Mode, TrainConfig};

    fn base() -> Setting {
        Setting::of(&TrainConfig::default())
    }

    #[test]
    fn impact_arithmetic() {
        let m = |xs: &[(&str, f64)]| xs.iter().map(|(l, a)| (l.to_string(), *a)).collect::<BTreeMap<_, _>>();
        let rows = reparam_impact(&m(&[("a", 0.6), ("b", 0.3), ("c", 0.2)]), &m(&[("a", 0.5), ("b", 0.3), ("c", 0.0)])).unwrap();
        assert!((rows[0].percent.unwrap() - 20.0).abs() < 1e-9);
        assert_eq!(rows[1].percent, Some(0.0));
        assert_eq!(rows[2].percent, None);
        let err = reparam_impact(&m(&[("a", 0.6)]), &m(&[("b", 0.5)])).unwrap_err();
        assert!(err.to_string().contains("\"a\"") && err.to_string().contains("\"b\""));
    }

    #[test]
    fn sweep_requires_every_length_and_finds_planted_peak() {
        let mut t = ResultsTable::new();
        for n in SWEEP_LENGTHS {
            let acc = if n == 5 { 0.9 } else { 0.4 };
            for lang in ["eng", "deu"] {
                t.insert(lang, 0, Setting { prompt_length: n, ..base() }, acc).unwrap();
            }
        }
        let rows = length_sweep_report(&t, base()).unwrap();
        assert_eq!(rows.len(), 6);
        let best = rows.iter().max_by(|a, b| a.mean.total_cmp(&b.mean)).unwrap();
        assert_eq!(best.length, 5);

        let mut partial = ResultsTable::new();
        partial.insert("eng", 0, base(), 0.5).unwrap();
        let err = length_sweep_report(&partial, base()).unwrap_err();
        assert!(err.to_string().contains("[1, 2, 5, 20, 30]"));
        let other = Setting { mode: Mode::WithoutMf, ..base() };
        assert!(length_sweep_report(&t, other).is_err());
    }
}
