use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;

use lineseg::eval::{aggregate, evaluate, format_table, EvalReport};
use lineseg::io::load_labels;

/// Page key of a label file: the file stem without a trailing `.labels`, so
/// `p1.labels.png` (pipeline output) pairs with `p1.png` (ground truth).
pub fn page_key(path: &Path) -> Option<String> {
    let stem = path.file_stem()?.to_str()?;
    Some(stem.strip_suffix(".labels").unwrap_or(stem).to_string())
}

fn keyed(dir: &Path) -> std::io::Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for p in crate::list_images(dir)? {
        if let Some(k) = page_key(&p) {
            out.entry(k).or_insert(p);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageScore {
    pub page: String,
    pub report: EvalReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreReport {
    pub threshold: f64,
    pub pages: Vec<PageScore>,
    /// Pages present on only one side, as `gt:<key>` or `result:<key>`.
    pub missing: Vec<String>,
    /// Pages that could not be scored, with the reason.
    pub errors: Vec<(String, String)>,
    /// Counts summed over scored pages, rates recomputed from the sums.
    pub aggregate: EvalReport,
}

impl ScoreReport {
    pub fn to_text(&self) -> String {
        let mut rows: Vec<(String, EvalReport)> = self.pages.iter().map(|p| (p.page.clone(), p.report)).collect();
        rows.push(("total".into(), self.aggregate));
        let mut out = format_table(&rows);
        for m in &self.missing {
            out.push_str(&format!("missing counterpart: {m}\n"));
        }
        for (page, e) in &self.errors {
            out.push_str(&format!("error: {page}: {e}\n"));
        }
        out
    }
}

pub fn run(results_dir: &Path, gt_dir: &Path, threshold: f64) -> lineseg::Result<ScoreReport> {
    let results = keyed(results_dir)?;
    let truth = keyed(gt_dir)?;
    let mut pages = Vec::new();
    let mut missing = Vec::new();
    let mut errors = Vec::new();
    for (key, gt_path) in &truth {
        let Some(res_path) = results.get(key) else {
            missing.push(format!("gt:{key}"));
            continue;
        };
        let scored = load_labels(gt_path)
            .and_then(|gt| load_labels(res_path).and_then(|res| evaluate(&gt, &res, threshold)));
        match scored {
            Ok(report) => pages.push(PageScore { page: key.clone(), report }),
            Err(e) => errors.push((key.clone(), e.to_string())),
        }
    }
    missing.extend(results.keys().filter(|k| !truth.contains_key(*k)).map(|k| format!("result:{k}")));
    let reports: Vec<EvalReport> = pages.iter().map(|p| p.report).collect();
    let aggregate = aggregate(&reports, threshold);
    Ok(ScoreReport { threshold, pages, missing, errors, aggregate })
}
