use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use lineseg::config::PipelineConfig;
use lineseg::io;
use lineseg::pipeline::segment_page;

#[derive(Debug, Clone, Default)]
pub struct SegmentOptions {
    pub overlay: bool,
    pub trace: bool,
    /// Pages processed at once; 0 lets rayon decide.
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PageOutcome {
    pub input: PathBuf,
    pub page: String,
    pub lines: Option<usize>,
    pub deskew_deg: Option<f64>,
    pub outputs: Vec<PathBuf>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentReport {
    pub pages: Vec<PageOutcome>,
}

impl SegmentReport {
    pub fn failures(&self) -> usize {
        self.pages.iter().filter(|p| p.error.is_some()).count()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for p in &self.pages {
            match (&p.error, p.lines) {
                (Some(e), _) => out.push_str(&format!("FAIL {}: {e}\n", p.input.display())),
                (None, Some(n)) => out.push_str(&format!(
                    "ok   {}: {n} lines, deskew {:.2}°\n",
                    p.input.display(),
                    p.deskew_deg.unwrap_or(0.0)
                )),
                (None, None) => {}
            }
        }
        out.push_str(&format!("{} pages, {} failed\n", self.pages.len(), self.failures()));
        out
    }
}

/// Expands directories to the images they contain; files pass through.
pub fn expand_inputs(inputs: &[PathBuf]) -> std::io::Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            out.extend(crate::list_images(p)?);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

fn page_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "page".into())
}

fn process(cfg: &PipelineConfig, input: &Path, page: &str, out_dir: &Path, opts: &SegmentOptions) -> lineseg::Result<PageOutcome> {
    let img = io::load_gray(input)?;
    let res = segment_page(&img, cfg)?;
    let mut outputs = Vec::new();

    let labels = out_dir.join(format!("{page}.labels.png"));
    io::save_labels(&labels, &res.labels)?;
    outputs.push(labels);
    let json = out_dir.join(format!("{page}.json"));
    io::save_json(&json, &res.to_json(page))?;
    outputs.push(json);
    if opts.overlay {
        let path = out_dir.join(format!("{page}.overlay.png"));
        io::save_overlay(&path, &io::overlay(&img, &res.labels)?)?;
        outputs.push(path);
    }
    if opts.trace {
        let path = out_dir.join(format!("{page}.trace.json"));
        let trace = serde_json::json!({ "assignments": res.trace, "merges": res.merges });
        io::save_json(&path, &trace)?;
        outputs.push(path);
    }
    log::info!("{}: {} lines", input.display(), res.lines.len());
    Ok(PageOutcome {
        input: input.to_path_buf(),
        page: page.to_string(),
        lines: Some(res.lines.len()),
        deskew_deg: Some(res.deskew_deg),
        outputs,
        error: None,
    })
}

/// Segments every input into `out_dir`. Failures are recorded per page and do
/// not stop the batch; the report keeps input order.
pub fn run(cfg: &PipelineConfig, inputs: &[PathBuf], out_dir: &Path, opts: &SegmentOptions) -> lineseg::Result<SegmentReport> {
    if inputs.is_empty() {
        return Ok(SegmentReport { pages: Vec::new() });
    }
    std::fs::create_dir_all(out_dir)?;

    // Two inputs with the same stem would overwrite each other's outputs.
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    let jobs: Vec<(PathBuf, String, bool)> = inputs
        .iter()
        .map(|p| {
            let name = page_name(p);
            let n = seen.entry(name.clone()).or_insert(0);
            *n += 1;
            (p.clone(), name, *n > 1)
        })
        .collect();

    let work = || {
        jobs.par_iter()
            .map(|(input, page, duplicate)| {
                let fail = |e: String| PageOutcome {
                    input: input.clone(),
                    page: page.clone(),
                    lines: None,
                    deskew_deg: None,
                    outputs: Vec::new(),
                    error: Some(e),
                };
                if *duplicate {
                    return fail(format!("another input already produces page {page:?}"));
                }
                process(cfg, input, page, out_dir, opts).unwrap_or_else(|e| {
                    log::error!("{}: {e}", input.display());
                    fail(e.to_string())
                })
            })
            .collect::<Vec<_>>()
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| lineseg::Error::Io(std::io::Error::other(e)))?;
    Ok(SegmentReport { pages: pool.install(work) })
}
