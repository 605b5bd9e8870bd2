#![allow(dead_code)]

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dqclean::core::data::Metric;
use dqclean::core::rank::NoiseType;
use dqclean::store::{RegisterDataset, SessionDefaults, Store};
use image::{GrayImage, Luma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn write_manifest(path: &Path, rows: &[(String, String, Option<String>)]) {
    let mut f = fs::File::create(path).unwrap();
    for (id, p, label) in rows {
        let line = serde_json::json!({ "id": id, "path": p, "label": label });
        writeln!(f, "{line}").unwrap();
    }
}

/// 20 points in the plane: classes `a` and `b` in two tight groups, `s07`
/// labelled `b` inside group `a`, `s19` far from both and `s03`/`s04`
/// nearly coincident.
pub struct Small {
    pub manifest: PathBuf,
    pub embeddings: PathBuf,
}

pub fn small_points() -> Vec<(String, [f64; 2], &'static str)> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    (0..20)
        .map(|i| {
            let mut jitter = || rng.random_range(-1.0..1.0);
            let (p, label) = match i {
                3 => ([10.0, 0.0], "a"),
                4 => ([10.0001, 0.0], "a"),
                19 => ([-40.0, 55.0], "a"),
                0..=9 => ([10.0 + jitter(), jitter()], if i == 7 { "b" } else { "a" }),
                _ => ([jitter(), 10.0 + jitter()], "b"),
            };
            (format!("s{i:02}"), p, label)
        })
        .collect()
}

pub fn small_dataset(dir: &Path) -> Small {
    fs::create_dir_all(dir).unwrap();
    let points = small_points();
    let rows: Vec<_> =
        points.iter().map(|(id, _, l)| (id.clone(), format!("img/{id}.png"), Some(l.to_string()))).collect();
    let manifest = dir.join("manifest.jsonl");
    write_manifest(&manifest, &rows);
    let embeddings = dir.join("embeddings.csv");
    let mut f = fs::File::create(&embeddings).unwrap();
    writeln!(f, "id,e0,e1").unwrap();
    for (id, p, _) in &points {
        writeln!(f, "{id},{},{}", p[0], p[1]).unwrap();
    }
    Small { manifest, embeddings }
}

pub fn open_store(root: &Path) -> Store {
    Store::open(root, SessionDefaults::default()).unwrap()
}

/// Store with the small dataset registered as `small` and all rankings
/// computed (euclidean).
pub fn small_store(root: &Path) -> Store {
    let src = small_dataset(&root.join("src"));
    let store = open_store(&root.join("data"));
    store
        .register_dataset(&RegisterDataset {
            name: "small".into(),
            manifest: src.manifest,
            embeddings: Some(src.embeddings),
            baseline: None,
            image_dir: None,
        })
        .unwrap();
    for t in NoiseType::ALL {
        store.rank("small", t, Metric::Euclidean).unwrap();
    }
    store
}

pub fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        let target = to.join(entry.file_name());
        if entry.file_type().unwrap().is_dir() {
            copy_dir(&entry.path(), &target);
        } else {
            fs::copy(entry.path(), target).unwrap();
        }
    }
}

/// The 60-image corpus with its planted issues.
pub struct Synthetic {
    pub manifest: PathBuf,
    pub image_dir: PathBuf,
    pub outliers: Vec<String>,
    pub duplicates: Vec<[String; 2]>,
    pub swaps: Vec<String>,
}

const SIDE: u32 = 32;
const LABELS: [&str; 3] = ["circle", "stripe", "split"];

fn cluster_value(k: usize, x: u32, y: u32) -> f32 {
    let (fx, fy) = (x as f32 / SIDE as f32 - 0.5, y as f32 / SIDE as f32 - 0.5);
    let pattern = match k {
        0 => {
            if fx * fx + fy * fy < 0.09 {
                1.0
            } else {
                -1.0
            }
        }
        1 => {
            if (y / 8).is_multiple_of(2) {
                1.0
            } else {
                -1.0
            }
        }
        _ => {
            if fx < 0.0 {
                1.0
            } else {
                -1.0
            }
        }
    };
    0.5 + 0.15 * pattern
}

fn outlier_value(k: usize, x: u32, y: u32) -> f32 {
    match k {
        0 => {
            if (x / 2 + y / 2).is_multiple_of(2) {
                1.0
            } else {
                0.0
            }
        }
        _ => {
            if x >= 24 && y < 8 {
                1.0
            } else {
                0.0
            }
        }
    }
}

fn save(path: &Path, f: impl Fn(u32, u32) -> f32) {
    let img = GrayImage::from_fn(SIDE, SIDE, |x, y| Luma([(f(x, y).clamp(0.0, 1.0) * 255.0).round() as u8]));
    img.save(path).unwrap();
}

/// 56 cluster images (three visual classes), two outliers and two exact
/// copies of cluster images. Two cluster images carry a wrong label, each a
/// different one.
pub fn synthetic_corpus(dir: &Path) -> Synthetic {
    let image_dir = dir.join("images");
    fs::create_dir_all(&image_dir).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut rows = Vec::new();
    let sizes = [19, 19, 18];
    let swaps = [("c0_05", LABELS[1]), ("c2_11", LABELS[0])];
    for (k, &size) in sizes.iter().enumerate() {
        for i in 0..size {
            let id = format!("c{k}_{i:02}");
            let noise: Vec<f32> = (0..SIDE * SIDE).map(|_| rng.random_range(-0.03..0.03)).collect();
            let file = format!("images/{id}.png");
            save(&dir.join(&file), |x, y| cluster_value(k, x, y) + noise[(y * SIDE + x) as usize]);
            let label = swaps.iter().find(|(s, _)| *s == id).map_or(LABELS[k], |(_, l)| *l);
            rows.push((id, file, Some(label.to_string())));
        }
    }
    let mut outliers = Vec::new();
    for (k, label) in LABELS.iter().take(2).enumerate() {
        let id = format!("odd_{k}");
        let file = format!("images/{id}.png");
        save(&dir.join(&file), |x, y| outlier_value(k, x, y));
        rows.push((id.clone(), file, Some(label.to_string())));
        outliers.push(id);
    }
    let mut duplicates = Vec::new();
    for (k, orig) in ["c1_03", "c2_07"].into_iter().enumerate() {
        let id = format!("copy_{k}");
        let file = format!("images/{id}.png");
        fs::copy(image_dir.join(format!("{orig}.png")), dir.join(&file)).unwrap();
        let label = rows.iter().find(|r| r.0 == orig).unwrap().2.clone();
        rows.push((id.clone(), file, label));
        duplicates.push([orig.to_string(), id]);
    }
    let manifest = dir.join("manifest.jsonl");
    write_manifest(&manifest, &rows);
    Synthetic { manifest, image_dir, outliers, duplicates, swaps: swaps.iter().map(|(s, _)| s.to_string()).collect() }
}
