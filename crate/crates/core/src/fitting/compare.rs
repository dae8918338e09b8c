use std::thread;

use serde::{Deserialize, Serialize};

use super::{fit, safe_load, FitConfig, FitResult, FIFTY_YEARS_H};
use crate::dataset::TtfDataset;
use crate::error::{Error, Result};
use crate::models::{Asymptote, End, ModelKind};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    /// 1-based; failed fits rank after all successful ones.
    pub rank: usize,
    pub kind: ModelKind,
    pub fit: Option<FitResult>,
    pub safe_load: Option<f64>,
    pub long_time_asymptote: Option<Asymptote>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub dataset: String,
    /// Horizon of the `safe_load` column, hours.
    pub service_life: f64,
    pub rows: Vec<CompareRow>,
}

impl CompareReport {
    pub fn row(&self, kind: ModelKind) -> Option<&CompareRow> {
        self.rows.iter().find(|r| r.kind == kind)
    }
}

/// Fits every requested family and ranks them by load-level SSE, fewer free
/// parameters first on ties.
///
/// `configs` overrides the default configuration of a family. Per-family
/// failures become rows with an `error` instead of aborting. Families are
/// fitted on separate threads.
pub fn compare_models(
    dataset: &TtfDataset,
    kinds: &[ModelKind],
    configs: &[FitConfig],
    service_life: f64,
) -> Result<CompareReport> {
    if kinds.is_empty() {
        return Err(Error::InvalidInput("no models requested".into()));
    }
    if !(service_life > 0.0) {
        return Err(Error::InvalidInput(format!(
            "service life {service_life} h must be positive"
        )));
    }
    let config_for = |kind: ModelKind| {
        configs
            .iter()
            .find(|c| c.kind == kind)
            .cloned()
            .unwrap_or_else(|| FitConfig::new(kind))
    };

    let outcomes: Vec<(ModelKind, Result<FitResult>)> = thread::scope(|s| {
        let handles: Vec<_> = kinds
            .iter()
            .map(|&kind| {
                let config = config_for(kind);
                s.spawn(move || (kind, fit(dataset, &config)))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("fit thread panicked"))
            .collect()
    });

    let mut rows: Vec<CompareRow> = outcomes
        .into_iter()
        .map(|(kind, outcome)| match outcome {
            Ok(f) => {
                let (safe, error) = match safe_load(&f, service_life) {
                    Ok(v) => (Some(v), None),
                    Err(e) => (None, Some(e.to_string())),
                };
                CompareRow {
                    rank: 0,
                    kind,
                    safe_load: safe,
                    long_time_asymptote: Some(f.params.asymptote(End::LongTime)),
                    fit: Some(f),
                    error,
                }
            }
            Err(e) => CompareRow {
                rank: 0,
                kind,
                fit: None,
                safe_load: None,
                long_time_asymptote: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    rows.sort_by(|a, b| match (&a.fit, &b.fit) {
        (Some(fa), Some(fb)) => fa
            .load_sse
            .total_cmp(&fb.load_sse)
            .then(fa.free_count().cmp(&fb.free_count())),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.kind.cmp(&b.kind),
    });
    for (i, row) in rows.iter_mut().enumerate() {
        row.rank = i + 1;
    }
    Ok(CompareReport {
        dataset: dataset.id().to_string(),
        service_life,
        rows,
    })
}

/// Convenience for the common 50-year horizon.
pub fn compare_at_fifty_years(dataset: &TtfDataset, kinds: &[ModelKind]) -> Result<CompareReport> {
    compare_models(dataset, kinds, &[], FIFTY_YEARS_H)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::BuiltinDataset;

    #[test]
    fn empty_kind_list() {
        let ds = BuiltinDataset::ProductA.dataset();
        assert!(compare_models(&ds, &[], &[], FIFTY_YEARS_H).is_err());
    }

    #[test]
    fn single_kind_matches_direct_fit() {
        let ds = BuiltinDataset::ProductA.dataset();
        let report = compare_at_fifty_years(&ds, &[ModelKind::Logarithmic]).unwrap();
        assert_eq!(report.rows.len(), 1);
        let direct = fit(&ds, &FitConfig::new(ModelKind::Logarithmic)).unwrap();
        let row = &report.rows[0];
        assert_eq!(row.fit.as_ref().unwrap(), &direct);
        assert_eq!(
            row.safe_load.unwrap(),
            safe_load(&direct, FIFTY_YEARS_H).unwrap()
        );
        assert_eq!(row.rank, 1);
    }

    #[test]
    fn failures_become_rows() {
        let ds = BuiltinDataset::ProductA.dataset();
        let bad = FitConfig::new(ModelKind::Sigmoid).fix("c", -1.0);
        let report = compare_models(
            &ds,
            &[ModelKind::Sigmoid, ModelKind::Logarithmic],
            &[bad],
            FIFTY_YEARS_H,
        )
        .unwrap();
        assert_eq!(report.rows[0].kind, ModelKind::Logarithmic);
        assert!(report.rows[1].error.is_some());
        assert_eq!(report.rows[1].rank, 2);
    }
}
