use gkcm::sim::{evaluate_selection, LabeledMeasurementSet};
use serde::Serialize;

use crate::error::{read_file, CliError};
use crate::records::{self, Truth};

#[derive(Debug, clap::Args)]
pub struct Args {
    /// Solver output record (with a `clique` field) or whitespace-separated
    /// 1-based indices.
    pub selection: String,
    #[arg(long)]
    pub truth: String,
    /// Measurement file; needed for the chi-squared residual of worlds.
    #[arg(long)]
    pub measurements: Option<String>,
}

#[derive(Debug, Serialize)]
struct EvalRecord {
    tpr: f64,
    fpr: f64,
    chi2: Option<f64>,
    clique_size: usize,
    true_positives: usize,
    false_positives: usize,
}

/// 0-based indices from a solve record or a plain index list.
fn read_selection(text: &str, path: &str) -> Result<Vec<usize>, CliError> {
    let one_based: Vec<u64> = match serde_json::from_str::<serde_json::Value>(text) {
        Ok(serde_json::Value::Object(o)) => {
            let clique = o
                .get("clique")
                .ok_or_else(|| CliError::input(path, "record has no `clique` field"))?;
            serde_json::from_value(clique.clone()).map_err(|e| CliError::input(path, e))?
        }
        _ => {
            let mut out = Vec::new();
            for (i, line) in text.lines().enumerate() {
                for w in line.split_whitespace() {
                    let v = w
                        .parse()
                        .map_err(|_| CliError::format(path, i + 1, format!("`{w}` is not an index")))?;
                    out.push(v);
                }
            }
            out
        }
    };
    one_based
        .into_iter()
        .map(|v| {
            usize::try_from(v)
                .ok()
                .and_then(|v| v.checked_sub(1))
                .ok_or_else(|| CliError::input(path, "indices are 1-based"))
        })
        .collect()
}

pub fn run(a: &Args) -> Result<(), CliError> {
    let selected = read_selection(&read_file(&a.selection)?, &a.selection)?;
    let truth = records::read_truth(&read_file(&a.truth)?, &a.truth)?;
    let out_of_range = |len: usize| {
        selected
            .iter()
            .find(|&&i| i >= len)
            .map(|&i| CliError::input(&a.selection, format!("index {} out of range for {len} items", i + 1)))
    };
    let record = match truth {
        Truth::Planted { inlier } => {
            if let Some(e) = out_of_range(inlier.len()) {
                return Err(e);
            }
            let pos = inlier.iter().filter(|&&l| l).count();
            let neg = inlier.len() - pos;
            let tp = selected.iter().filter(|&&i| inlier[i]).count();
            let fp = selected.len() - tp;
            let rate = |x: usize, d: usize| if d == 0 { 0.0 } else { x as f64 / d as f64 };
            EvalRecord {
                tpr: rate(tp, pos),
                fpr: rate(fp, neg),
                chi2: None,
                clique_size: selected.len(),
                true_positives: tp,
                false_positives: fp,
            }
        }
        Truth::World { inlier, truth } => {
            let Some(mpath) = &a.measurements else {
                return Err(CliError::Usage("world truth files need --measurements".into()));
            };
            let problem = records::read_problem(&read_file(mpath)?, mpath)?;
            if problem.len() != inlier.len() {
                return Err(CliError::input(
                    &a.truth,
                    format!("{} labels for {} measurements", inlier.len(), problem.len()),
                ));
            }
            if let Some(e) = out_of_range(inlier.len()) {
                return Err(e);
            }
            let set = LabeledMeasurementSet { problem, inlier, truth };
            let r = evaluate_selection(&selected, &set)?;
            EvalRecord {
                tpr: r.tpr,
                fpr: r.fpr,
                chi2: r.selected_set_chi2,
                clique_size: r.clique_size,
                true_positives: r.true_positives,
                false_positives: r.false_positives,
            }
        }
    };
    println!("{}", serde_json::to_string(&record).expect("serializable"));
    Ok(())
}
