//! Regenerates the files under `fixtures/`.
//!
//! `desk/` is a bag-of-words stand-in for a frozen text encoder: every word
//! has a fixed random direction `u(w)` seeded from its SHA-256, a text is the
//! normalized sum of its word vectors, and a few common words leak into
//! related dictionary concepts so decompositions pick up some noise. The
//! dictionary is the raw `u(w)` of every concept word the sample scripts
//! mention plus the domain words used to build instance features. The store
//! holds every text the scripts use.
//!
//! `synthetic/` is the orthonormal eight-concept world used by
//! `scripts/synthetic_unselect.txt`.
//!
//! Run with `cargo run -p classrefine-cli --example make_fixtures`.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use classrefine_cli::script;
use classrefine_core::store::{save_dictionary, save_store, EmbeddingStore};
use classrefine_core::ConceptDictionary;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

const DESK_DIM: usize = 128;

const LEAKS: &[(&str, &[(&str, f64)])] = &[
    ("a", &[("another", 0.5), ("seen", 0.4), ("than", 0.4), ("reminds", 0.35), ("potential", 0.3), ("used", 0.3)]),
    ("jet", &[("aircraft", 0.6), ("quick", 0.3), ("jets", 0.3)]),
    ("plane", &[("aircraft", 0.5), ("uses", 0.25), ("takes", 0.25)]),
    ("fighter", &[("military", 0.5), ("sleek", 0.3), ("tactical", 0.3)]),
    ("passenger", &[("windows", 0.3), ("baggage", 0.3)]),
];

const DOMAIN_WORDS: &[&str] = &[
    "airplane", "passenger", "windows", "white", "engine", "engines", "wings", "cockpit", "fighter",
    "commercial", "airline", "fuselage", "tail", "nose", "canopy", "weapons", "missiles", "combat", "gray",
    "camouflage", "propeller", "cabin", "turbine", "warplane",
];

fn unit(mut v: Vec<f64>) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= n);
    v
}

fn word_seed(word: &str) -> u64 {
    let digest = Sha256::digest(word.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Raw direction of one word.
fn u(word: &str) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(word_seed(word));
    unit((0..DESK_DIM).map(|_| StandardNormal.sample(&mut rng)).collect())
}

/// Encoder view of one word: its direction plus any leaks.
fn g(word: &str) -> Vec<f64> {
    let mut v = u(word);
    if let Some((_, leaks)) = LEAKS.iter().find(|(w, _)| *w == word) {
        for (other, s) in *leaks {
            for (x, y) in v.iter_mut().zip(u(other)) {
                *x += s * y;
            }
        }
    }
    v
}

fn tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

fn encode(text: &str) -> Vec<f64> {
    let mut v = vec![0.0; DESK_DIM];
    for t in tokens(text) {
        for (x, y) in v.iter_mut().zip(g(&t)) {
            *x += y;
        }
    }
    unit(v)
}

fn mix(parts: &[(&str, f64)], noise: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = Normal::new(0.0, noise / (DESK_DIM as f64).sqrt()).expect("valid sigma");
    let mut v: Vec<f64> = (0..DESK_DIM).map(|_| n.sample(rng)).collect();
    for (w, s) in parts {
        for (x, y) in v.iter_mut().zip(u(w)) {
            *x += s * y;
        }
    }
    unit(v)
}

fn f32s(v: &[f64]) -> Vec<f32> {
    v.iter().map(|&x| x as f32).collect()
}

fn bbox(rng: &mut ChaCha8Rng) -> Value {
    let w = rng.random_range(40.0..240.0_f64).round();
    let h = rng.random_range(30.0..160.0_f64).round();
    let x = rng.random_range(0.0..(640.0 - w)).round();
    let y = rng.random_range(0.0..(480.0 - h)).round();
    json!([x, y, w, h])
}

fn write_json(path: &Path, value: &Value) {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    fs::write(path, s).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
}

fn desk(root: &Path, scripts: &Path) {
    let mut texts = BTreeSet::new();
    let mut concepts: BTreeSet<String> = DOMAIN_WORDS.iter().map(|s| s.to_string()).collect();
    for (_, leaks) in LEAKS {
        concepts.extend(leaks.iter().map(|(w, _)| w.to_string()));
    }
    for entry in fs::read_dir(scripts).expect("scripts dir") {
        let path = entry.expect("dir entry").path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
        if !name.starts_with("experiment") {
            continue;
        }
        let s = script::parse(&fs::read_to_string(&path).expect("script")).expect("valid script");
        texts.insert(s.base.clone());
        for it in s.users.iter().flat_map(|u| &u.iterations) {
            texts.extend(it.added.iter().cloned());
            texts.extend(it.removed.iter().cloned());
            concepts.extend(it.unselected.iter().cloned());
        }
    }
    for extra in ["fighter jet", "airplane", "jet plane", "military airplane", "warplane"] {
        texts.insert(extra.to_owned());
    }
    for t in &texts {
        concepts.extend(tokens(t));
    }
    concepts.remove("a");

    let store = EmbeddingStore::from_entries(DESK_DIM, true, texts.iter().map(|t| (t.clone(), f32s(&encode(t)))))
        .expect("valid store");
    let labels: Vec<String> = concepts.into_iter().collect();
    let vectors = labels.iter().map(|l| u(l)).collect();
    let dict = ConceptDictionary::new(labels, vectors, None).expect("valid dictionary");
    let dir = root.join("desk");
    fs::create_dir_all(&dir).expect("create desk dir");
    save_store(&store, dir.join("store.bin")).expect("write store");
    save_dictionary(&dict, dir.join("concepts.bin")).expect("write dictionary");

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let kinds: [(&str, usize, &[(&str, f64)]); 3] = [
        ("fighter jet", 12, &[("fighter", 1.0), ("jet", 1.0), ("military", 1.0), ("aircraft", 0.6), ("sleek", 0.5)]),
        ("airplane", 20, &[("airplane", 1.0), ("plane", 1.0), ("passenger", 1.0), ("windows", 1.0), ("white", 0.8), ("aircraft", 0.6)]),
        ("jet plane", 6, &[("jet", 1.0), ("plane", 1.0), ("engine", 1.0), ("white", 0.8), ("aircraft", 0.6)]),
    ];
    let mut images = Vec::new();
    let mut annotations = Vec::new();
    for (category, count, parts) in kinds {
        for _ in 0..count {
            let id = format!("img{:03}", images.len() + 1);
            images.push(json!({"id": id, "width": 640, "height": 480}));
            for _ in 0..rng.random_range(1..=3) {
                annotations.push(json!({
                    "image_id": id,
                    "category": category,
                    "bbox": bbox(&mut rng),
                    "feature": mix(parts, 0.9, &mut rng),
                }));
            }
        }
    }
    write_json(&dir.join("dataset.json"), &json!({"images": images, "annotations": annotations}));
}

fn synthetic(root: &Path) {
    const LABELS: [&str; 8] = ["jet", "aircraft", "windows", "plane body", "sky", "runway", "wing", "tail"];
    let axis = |i: usize| {
        let mut v = vec![0.0; LABELS.len()];
        v[i] = 1.0;
        v
    };
    let dict = ConceptDictionary::new(
        LABELS.iter().map(|s| s.to_string()).collect(),
        (0..LABELS.len()).map(axis).collect(),
        None,
    )
    .expect("valid dictionary");
    let base = unit(vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    let store = EmbeddingStore::from_entries(LABELS.len(), false, [("a jet plane".to_owned(), f32s(&base))])
        .expect("valid store");
    let dir = root.join("synthetic");
    fs::create_dir_all(&dir).expect("create synthetic dir");
    save_store(&store, dir.join("store.bin")).expect("write store");
    save_dictionary(&dict, dir.join("concepts.bin")).expect("write dictionary");

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let noise = Normal::new(0.0, 0.35).expect("valid sigma");
    let mut images = Vec::new();
    let mut annotations = Vec::new();
    for i in 0..60 {
        let id = format!("img{i:03}");
        images.push(json!({"id": id, "width": 640, "height": 480}));
        let (category, feature) = if i < 40 {
            let v: Vec<f64> = [1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]
                .iter()
                .map(|x| x + noise.sample(&mut rng))
                .collect();
            ("fighter jet", unit(v))
        } else {
            ("airplane", unit(vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]))
        };
        annotations.push(json!({
            "image_id": id,
            "category": category,
            "bbox": [10.0 + i as f64, 20.0, 100.0, 80.0],
            "feature": feature,
        }));
    }
    write_json(&dir.join("dataset.json"), &json!({"images": images, "annotations": annotations}));
}

fn main() {
    let crate_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let root = std::env::args().nth(1).map_or_else(|| crate_dir.join("fixtures"), PathBuf::from);
    desk(&root, &crate_dir.join("scripts"));
    synthetic(&root);
    println!("wrote {}", root.display());
}
