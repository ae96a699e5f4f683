//! Generates the synthetic end-to-end fixture under `tests/fixtures/e2e`.
//!
//! ```text
//! cargo run -p segfd --example make_fixture -- crates/core/tests/fixtures/e2e
//! ```
//!
//! Layout of the output directory:
//!
//! - `data/`: 24×24 NPY volumes. Ground truth is an outer disk (class 1)
//!   around an inner disk (class 2); predictions are displaced and rescaled
//!   copies whose error grows with a per-case difficulty. Half the cases store
//!   a confidence map (`f32`), the other half three-channel softmax
//!   probabilities (`f64`). Every case has three ensemble member predictions
//!   and a 4-D feature vector; `siteB` cases are shifted in feature space and
//!   flagged out-of-distribution.
//! - `manifest.csv`: the 20 test cases in two folds.
//! - `train.csv`: 12 further cases used to fit the Mahalanobis and forest models.
//! - `config.json`: every method and three risks, with bootstrap ranking.
//! - `golden/`: the report produced by evaluating `manifest.csv` with `config.json`.
//!
//! All randomness comes from ChaCha8 with a fixed seed, so rerunning the
//! script reproduces identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use segfd::io::npy::{write_npy, NpyArray, NpyData};
use segfd::io::{emit_report, read_manifest, Config};
use segfd::pipeline::run_evaluate;

const SIZE: usize = 24;
const N_TEST: usize = 20;
const N_TRAIN: usize = 12;

const CONFIG: &str = r#"{
  "risks": {
    "dsc": { "metric": "dsc" },
    "gdsc": { "metric": "generalized_dsc" },
    "nsd": { "metric": "nsd", "nsd_tolerance": 1.0 }
  },
  "methods": [
    { "kind": "mean" },
    { "kind": "non_boundary", "width": 2 },
    { "kind": "mean_foreground", "width": 2 },
    { "kind": "patch_min", "patch_size": 6 },
    { "kind": "pairwise_dsc" },
    { "kind": "mahalanobis", "train_manifest": "train.csv" },
    { "kind": "rf_simple", "train_manifest": "train.csv", "width": 2, "n_trees": 25 },
    { "kind": "oracle" }
  ],
  "failure_threshold": 0.3,
  "bootstrap": { "n_bootstrap": 100, "metric": "aurc", "risk": "dsc" },
  "seed": 7,
  "per_class_risks": true
}
"#;

#[derive(Clone, Copy)]
struct Shape {
    cy: f64,
    cx: f64,
    r_outer: f64,
    r_inner: f64,
}

impl Shape {
    fn label(&self, y: usize, x: usize) -> u8 {
        let d = ((y as f64 - self.cy).powi(2) + (x as f64 - self.cx).powi(2)).sqrt();
        if d <= self.r_inner {
            2
        } else if d <= self.r_outer {
            1
        } else {
            0
        }
    }

    fn render(&self) -> Vec<u8> {
        (0..SIZE * SIZE).map(|i| self.label(i / SIZE, i % SIZE)).collect()
    }

    /// Signed distance to the nearest label boundary, positive inside.
    fn margin(&self, y: usize, x: usize) -> f64 {
        let d = ((y as f64 - self.cy).powi(2) + (x as f64 - self.cx).powi(2)).sqrt();
        (d - self.r_outer).abs().min((d - self.r_inner).abs())
    }

    fn perturb(&self, rng: &mut ChaCha8Rng, amount: f64) -> Shape {
        Shape {
            cy: self.cy + rng.gen_range(-amount..=amount),
            cx: self.cx + rng.gen_range(-amount..=amount),
            r_outer: (self.r_outer * (1.0 + rng.gen_range(-0.3..=0.3) * amount / 3.0)).max(2.0),
            r_inner: (self.r_inner * (1.0 + rng.gen_range(-0.4..=0.4) * amount / 3.0)).max(0.5),
        }
    }
}

fn npy_u8(path: &Path, data: Vec<u8>) {
    write_npy(path, &NpyArray { shape: vec![SIZE, SIZE], data: NpyData::U8(data) }).unwrap();
}

struct CaseFiles {
    row: String,
}

fn make_case(dir: &Path, id: &str, fold: usize, ood: bool, rng: &mut ChaCha8Rng) -> CaseFiles {
    let data = dir.join("data");
    let gt = Shape {
        cy: rng.gen_range(9.0..15.0),
        cx: rng.gen_range(9.0..15.0),
        r_outer: rng.gen_range(5.0..8.0),
        r_inner: rng.gen_range(1.5..3.5),
    };
    let difficulty: f64 = rng.gen_range(0.0..1.0f64).powi(2) * 4.0 + if ood { 1.5 } else { 0.0 };
    let pred = gt.perturb(rng, difficulty);

    let path = |suffix: &str| format!("{id}_{suffix}.npy");
    npy_u8(&data.join(path("gt")), gt.render());
    npy_u8(&data.join(path("pred")), pred.render());
    let samples: Vec<String> = (0..3)
        .map(|k| {
            let name = path(&format!("s{k}"));
            npy_u8(&data.join(&name), pred.perturb(rng, 0.3 + difficulty / 2.0).render());
            format!("data/{name}")
        })
        .collect();

    // confidence rises with distance from the predicted boundary, falls with difficulty
    let sharpness = 1.5 / (1.0 + difficulty);
    let n = SIZE * SIZE;
    let conf_name = path("conf");
    let mut conf = Vec::with_capacity(n);
    let mut probs = vec![vec![0.0f64; n]; 3];
    for i in 0..n {
        let (y, x) = (i / SIZE, i % SIZE);
        let noise: f64 = rng.gen_range(-0.05..0.05);
        let c = (1.0 - 0.5 * (-sharpness * pred.margin(y, x)).exp() + noise).clamp(0.0, 1.0);
        conf.push(c as f32);
        let top = pred.label(y, x) as usize;
        let top_p = (1.0 / 3.0) + (2.0 / 3.0) * c;
        for (ch, channel) in probs.iter_mut().enumerate() {
            channel[i] = if ch == top { top_p } else { (1.0 - top_p) / 2.0 };
        }
    }
    if fold % 2 == 0 && id.len() % 2 == 0 || fold % 2 == 1 && id.len() % 2 == 1 {
        write_npy(&data.join(&conf_name), &NpyArray { shape: vec![SIZE, SIZE], data: NpyData::F32(conf) }).unwrap();
    } else {
        write_npy(
            &data.join(&conf_name),
            &NpyArray { shape: vec![3, SIZE, SIZE], data: NpyData::F64(probs.concat()) },
        )
        .unwrap();
    }

    let shift = if ood { 3.0 } else { 0.0 };
    let features: Vec<f64> = (0..4)
        .map(|k| rng.gen_range(-1.0..1.0) + shift * (k % 2) as f64 + 0.5 * difficulty * (k == 0) as u8 as f64)
        .collect();
    let feat_name = path("feat");
    write_npy(&data.join(&feat_name), &NpyArray { shape: vec![4], data: NpyData::F64(features) }).unwrap();

    let domain = if ood { "siteB" } else { "siteA" };
    CaseFiles {
        row: format!(
            "{id},{fold},{domain},{ood},data/{},data/{},data/{conf_name},{},data/{feat_name},1;1,exclusive,1;2\n",
            path("gt"),
            path("pred"),
            samples.join(";")
        ),
    }
}

const HEADER: &str = "case_id,fold,domain,is_ood,gt_path,pred_path,conf_path,sample_paths,feature_path,spacing,label_mode,class_ids\n";

fn main() {
    let dir = PathBuf::from(
        std::env::args()
            .nth(1)
            .unwrap_or_else(|| "crates/core/tests/fixtures/e2e".into()),
    );
    if dir.exists() {
        fs::remove_dir_all(&dir).unwrap();
    }
    fs::create_dir_all(dir.join("data")).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_501);

    let mut manifest = HEADER.to_string();
    for i in 0..N_TEST {
        let ood = i % 4 == 3;
        manifest.push_str(&make_case(&dir, &format!("case{i:02}"), i % 2, ood, &mut rng).row);
    }
    let mut train = HEADER.to_string();
    for i in 0..N_TRAIN {
        train.push_str(&make_case(&dir, &format!("train{i:02}"), 0, false, &mut rng).row);
    }
    fs::write(dir.join("manifest.csv"), manifest).unwrap();
    fs::write(dir.join("train.csv"), train).unwrap();
    fs::write(dir.join("config.json"), CONFIG).unwrap();

    let (config, base) = Config::load(&dir.join("config.json")).unwrap();
    let report = run_evaluate(&read_manifest(&dir.join("manifest.csv")).unwrap(), &config, &base).unwrap();
    assert!(report.errors.is_empty(), "fixture evaluation failed: {:?}", report.errors);
    emit_report(&report, &dir.join("golden")).unwrap();
    println!("wrote {} cases to {}", report.cases.len(), dir.display());
}
