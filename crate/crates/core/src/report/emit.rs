use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::svg;
use super::EvaluationReport;
use crate::error::{Error, Result};
use crate::interpret::{
    AttributionVector, CosineMatrix, Embedding2D, EntropyStats, IcaaReport, IndecisionReport, OcclusionCurve,
    PrototypeMatch,
};
use crate::model::TrainingHistory;

/// One measured quantity behind a method-utility judgement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityRow {
    pub method: String,
    pub measurement: String,
    pub value: f64,
}

/// Everything `explain`, `embed` and `report` can produce.
#[derive(Debug, Clone, Default)]
pub struct InterpretArtifacts {
    pub feature_names: Vec<String>,
    pub class_names: Vec<String>,
    pub attributions: Vec<AttributionVector>,
    pub icaa: Vec<IcaaReport>,
    pub occlusion: Vec<(usize, OcclusionCurve)>,
    pub prototypes: Vec<(usize, Vec<PrototypeMatch>)>,
    pub indecision: Option<IndecisionReport>,
    pub entropy: Option<EntropyStats>,
    pub similarity: Option<CosineMatrix>,
    pub embedding: Option<Embedding2D>,
    pub utility: Vec<UtilityRow>,
}

impl InterpretArtifacts {
    pub fn is_empty(&self) -> bool {
        self.attributions.is_empty()
            && self.icaa.is_empty()
            && self.occlusion.is_empty()
            && self.prototypes.is_empty()
            && self.indecision.is_none()
            && self.entropy.is_none()
            && self.similarity.is_none()
            && self.embedding.is_none()
            && self.utility.is_empty()
    }
}

struct Writer<'a> {
    dir: &'a Path,
    written: Vec<PathBuf>,
}

impl Writer<'_> {
    fn put(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.put(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }
}

fn class_label(names: &[String], c: usize) -> String {
    names.get(c).cloned().unwrap_or_else(|| c.to_string())
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn history_csv(history: &TrainingHistory) -> String {
    let mut s = String::from("epoch,split,loss,acc\n");
    for e in &history.epochs {
        let _ = writeln!(s, "{},train,{},{}", e.epoch, e.train_loss, e.train_acc);
        let _ = writeln!(s, "{},val,{},{}", e.epoch, e.val_loss, e.val_acc);
        if let (Some(l), Some(a)) = (e.test_loss, e.test_acc) {
            let _ = writeln!(s, "{},test,{l},{a}", e.epoch);
        }
    }
    s
}

fn matrix_csv(labels: &[String], values: &[Vec<Option<f64>>]) -> String {
    let mut s = String::from("row");
    labels.iter().for_each(|l| s.push_str(&format!(",{}", csv_field(l))));
    s.push('\n');
    for (l, row) in labels.iter().zip(values) {
        s.push_str(&csv_field(l));
        row.iter().for_each(|v| s.push_str(&format!(",{}", opt(*v))));
        s.push('\n');
    }
    s
}

/// Writes every available artifact into `outdir` and returns the paths in
/// write order. Names are fixed:
///
/// | file | content |
/// |---|---|
/// | `metrics.json`, `confusion.csv`, `confusion.svg` | test metrics |
/// | `history.csv`, `history.svg` | per-epoch loss and accuracy |
/// | `attributions_<id>_<method>.csv/.svg` | one attribution vector |
/// | `icaa_<id>.json/.svg` | ICAA matrix |
/// | `occlusion_<id>.csv/.svg` | occlusion curve |
/// | `prototypes_<id>.csv` | prototype table |
/// | `indecision.csv` | indecision scan |
/// | `entropy.csv`, `entropy_histogram.csv`, `entropy.svg` | prediction entropy |
/// | `similarity.csv/.svg` | attribution similarity across samples |
/// | `embedding.csv/.svg` | t-SNE coordinates |
/// | `method_utility.csv` | measurements per method |
pub fn emit_report(
    metrics: Option<&EvaluationReport>,
    history: Option<&TrainingHistory>,
    artifacts: &InterpretArtifacts,
    outdir: &Path,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(outdir).map_err(|e| Error::io(outdir, e))?;
    let mut w = Writer {
        dir: outdir,
        written: Vec::new(),
    };
    let classes = &artifacts.class_names;

    if let Some(m) = metrics {
        w.json("metrics.json", m)?;
        let mut s = String::from("true\\predicted");
        m.class_names.iter().for_each(|c| s.push_str(&format!(",{}", csv_field(c))));
        s.push('\n');
        for (c, row) in m.confusion.iter().enumerate() {
            s.push_str(&csv_field(&m.class_names[c]));
            row.iter().for_each(|v| s.push_str(&format!(",{v}")));
            s.push('\n');
        }
        w.put("confusion.csv", &s)?;
        let values: Vec<Vec<Option<f64>>> = m
            .confusion
            .iter()
            .map(|r| r.iter().map(|&v| Some(v as f64)).collect())
            .collect();
        let max = m.confusion.iter().flatten().copied().max().unwrap_or(1).max(1) as f64;
        w.put("confusion.svg", &svg::heatmap("Confusion matrix (rows: true)", &values, &m.class_names, 0.0, max))?;
    }

    if let Some(h) = history {
        w.put("history.csv", &history_csv(h))?;
        let pick = |f: fn(&crate::model::EpochRecord) -> Option<f64>| -> Vec<(f64, f64)> {
            h.epochs.iter().filter_map(|e| f(e).map(|v| (e.epoch as f64, v))).collect()
        };
        let mut series = vec![
            ("train loss".to_string(), pick(|e| Some(e.train_loss))),
            ("val loss".to_string(), pick(|e| Some(e.val_loss))),
            ("train acc".to_string(), pick(|e| Some(e.train_acc))),
            ("val acc".to_string(), pick(|e| Some(e.val_acc))),
        ];
        let test_acc = pick(|e| e.test_acc);
        if !test_acc.is_empty() {
            series.push(("test acc".to_string(), test_acc));
        }
        w.put("history.svg", &svg::line_chart("Training history", "epoch", "loss / accuracy", &series))?;
    }

    let feature = |j: usize| {
        artifacts
            .feature_names
            .get(j)
            .cloned()
            .unwrap_or_else(|| format!("x{j}"))
    };

    for a in &artifacts.attributions {
        let id = a.instance.map_or_else(|| "x".to_string(), |i| i.to_string());
        let stem = format!("attributions_{id}_{}", a.method);
        let mut s = String::from("feature,class,score\n");
        for (j, v) in a.scores.iter().enumerate() {
            let _ = writeln!(s, "{},{},{v}", csv_field(&feature(j)), csv_field(&class_label(classes, a.class)));
        }
        w.put(&format!("{stem}.csv"), &s)?;
        let names: Vec<String> = (0..a.scores.len()).map(feature).collect();
        let title = format!("{} attribution, instance {id}, class {}", a.method, class_label(classes, a.class));
        w.put(&format!("{stem}.svg"), &svg::bar_chart(&title, "score", &names, &a.scores))?;
    }

    for r in &artifacts.icaa {
        let id = r.instance.map_or_else(|| "x".to_string(), |i| i.to_string());
        w.json(&format!("icaa_{id}.json"), r)?;
        let title = format!("ICAA, instance {id} ({})", r.method);
        w.put(&format!("icaa_{id}.svg"), &svg::heatmap(&title, &r.matrix.values, &r.class_names, -1.0, 1.0))?;
    }

    for (id, c) in &artifacts.occlusion {
        let mut s = String::from("k,occluded_feature,probability\n");
        for (k, p) in c.probabilities.iter().enumerate() {
            let f = if k == 0 { String::new() } else { csv_field(&feature(c.ranking[k - 1])) };
            let _ = writeln!(s, "{k},{f},{p}");
        }
        w.put(&format!("occlusion_{id}.csv"), &s)?;
        let pts = c.probabilities.iter().enumerate().map(|(k, &p)| (k as f64, p)).collect();
        let title = format!("Occlusion, instance {id}, class {}", class_label(classes, c.class));
        w.put(
            &format!("occlusion_{id}.svg"),
            &svg::line_chart(&title, "features occluded", "probability", &[("probability".into(), pts)]),
        )?;
    }

    for (id, rows) in &artifacts.prototypes {
        let mut s = String::from("rank,train_index,label,similarity,relation\n");
        for r in rows {
            let rel = if r.same_class { "same" } else { "different" };
            let _ = writeln!(
                s,
                "{},{},{},{},{rel}",
                r.rank,
                r.train_index,
                csv_field(&class_label(classes, r.label)),
                r.similarity
            );
        }
        w.put(&format!("prototypes_{id}.csv"), &s)?;
    }

    if let Some(r) = &artifacts.indecision {
        let mut s = String::from("sample,predicted,std,indecisive\n");
        for row in &r.rows {
            let _ = writeln!(
                s,
                "{},{},{},{}",
                row.sample,
                csv_field(&class_label(classes, row.predicted)),
                row.std,
                row.indecisive
            );
        }
        w.put("indecision.csv", &s)?;
    }

    if let Some(e) = &artifacts.entropy {
        let mut s = String::from("sample,entropy\n");
        e.values.iter().enumerate().for_each(|(i, h)| {
            let _ = writeln!(s, "{i},{h}");
        });
        w.put("entropy.csv", &s)?;
        let mut s = String::from("bin_low,bin_high,count\n");
        let mut low = 0.0;
        for (hi, n) in e.bin_edges.iter().zip(&e.counts) {
            let _ = writeln!(s, "{low},{hi},{n}");
            low = *hi;
        }
        w.put("entropy_histogram.csv", &s)?;
        let labels: Vec<String> = e.bin_edges.iter().map(|b| format!("{b:.2}")).collect();
        let counts: Vec<f64> = e.counts.iter().map(|&c| c as f64).collect();
        w.put("entropy.svg", &svg::bar_chart("Softmax entropy (bin upper edges)", "count", &labels, &counts))?;
    }

    if let Some(m) = &artifacts.similarity {
        let labels: Vec<String> = (0..m.len()).map(|i| i.to_string()).collect();
        w.put("similarity.csv", &matrix_csv(&labels, &m.values))?;
        w.put("similarity.svg", &svg::heatmap("Attribution similarity", &m.values, &labels, -1.0, 1.0))?;
    }

    if let Some(e) = &artifacts.embedding {
        let mut s = String::from("sample,x,y,label\n");
        for (i, (p, l)) in e.coords.iter().zip(&e.labels).enumerate() {
            let _ = writeln!(s, "{i},{},{},{}", p[0], p[1], csv_field(&class_label(classes, *l)));
        }
        w.put("embedding.csv", &s)?;
        let names: Vec<String> = if classes.is_empty() {
            let n = e.labels.iter().max().map_or(0, |m| m + 1);
            (0..n).map(|c| c.to_string()).collect()
        } else {
            classes.clone()
        };
        w.put("embedding.svg", &svg::scatter("Quantum activations (t-SNE)", &e.coords, &e.labels, &names))?;
    }

    if !artifacts.utility.is_empty() {
        let mut s = String::from("method,measurement,value\n");
        for r in &artifacts.utility {
            let _ = writeln!(s, "{},{},{}", csv_field(&r.method), csv_field(&r.measurement), r.value);
        }
        w.put("method_utility.csv", &s)?;
    }

    Ok(w.written)
}
