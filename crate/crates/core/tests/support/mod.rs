//! Reference implementations and fixtures shared by the integration tests.
//! The top-level helpers never call into the code under test.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

pub fn unit_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v = gaussian_vec(rng, d);
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-3 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

/// `C^T w - e` for atoms stored row-wise.
pub fn residual(atoms: &[Vec<f64>], e: &[f64], w: &[f64]) -> Vec<f64> {
    let mut r: Vec<f64> = e.iter().map(|x| -x).collect();
    for (c, &wi) in atoms.iter().zip(w) {
        for (rj, cj) in r.iter_mut().zip(c) {
            *rj += wi * cj;
        }
    }
    r
}

pub fn objective(atoms: &[Vec<f64>], e: &[f64], w: &[f64], lambda: f64) -> f64 {
    let r = residual(atoms, e, w);
    r.iter().map(|x| x * x).sum::<f64>() + lambda * w.iter().sum::<f64>()
}

/// `2 C (C^T w - e) + lambda`, the gradient of the smooth part plus the
/// penalty slope.
pub fn kkt_gradient(atoms: &[Vec<f64>], e: &[f64], w: &[f64], lambda: f64) -> Vec<f64> {
    let r = residual(atoms, e, w);
    atoms
        .iter()
        .map(|c| 2.0 * c.iter().zip(&r).map(|(a, b)| a * b).sum::<f64>() + lambda)
        .collect()
}

/// Largest violation of the nonnegative-lasso optimality conditions.
pub fn kkt_violation(atoms: &[Vec<f64>], e: &[f64], w: &[f64], lambda: f64) -> f64 {
    kkt_gradient(atoms, e, w, lambda)
        .iter()
        .zip(w)
        .map(|(&g, &wi)| if wi > 0.0 { g.abs() } else { (-g).max(0.0) })
        .fold(0.0, f64::max)
}

fn gram_spectral_norm(atoms: &[Vec<f64>]) -> f64 {
    let v = atoms.len();
    let gram: Vec<Vec<f64>> = (0..v)
        .map(|i| {
            (0..v)
                .map(|j| atoms[i].iter().zip(&atoms[j]).map(|(a, b)| a * b).sum())
                .collect()
        })
        .collect();
    let mut x = vec![1.0; v];
    let mut est = 0.0;
    for _ in 0..500 {
        let y: Vec<f64> = gram.iter().map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum()).collect();
        let n = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        if n == 0.0 {
            return 1.0;
        }
        est = n;
        x = y.into_iter().map(|a| a / n).collect();
    }
    // a slight overestimate keeps the step safe
    est * 1.01
}

/// Accelerated projected gradient, run until the KKT violation is
/// negligible. Returns the weights.
pub fn projected_gradient(atoms: &[Vec<f64>], e: &[f64], lambda: f64) -> Vec<f64> {
    let v = atoms.len();
    let step = 1.0 / (2.0 * gram_spectral_norm(atoms));
    let mut w = vec![0.0; v];
    let mut y = w.clone();
    let mut t = 1.0_f64;
    let mut prev_obj = f64::INFINITY;
    for k in 0..200_000 {
        let g = kkt_gradient(atoms, e, &y, lambda);
        let next: Vec<f64> = y.iter().zip(&g).map(|(yi, gi)| (yi - step * gi).max(0.0)).collect();
        let obj = objective(atoms, e, &next, lambda);
        if obj > prev_obj {
            // restart momentum
            t = 1.0;
            y = w.clone();
            prev_obj = objective(atoms, e, &w, lambda);
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        y = next
            .iter()
            .zip(&w)
            .map(|(n, o)| n + (t - 1.0) / t_next * (n - o))
            .collect();
        w = next;
        t = t_next;
        prev_obj = obj;
        if k % 100 == 0 && kkt_violation(atoms, e, &w, lambda) < 1e-9 {
            break;
        }
    }
    w
}

pub fn soft_threshold(e: &[f64], lambda: f64) -> Vec<f64> {
    e.iter().map(|x| (x - lambda / 2.0).max(0.0)).collect()
}

pub fn random_orthonormal(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Vec<Vec<f64>> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k);
    while basis.len() < k {
        let mut v = gaussian_vec(rng, d);
        for b in &basis {
            let p: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
            for (vi, bi) in v.iter_mut().zip(b) {
                *vi -= p * bi;
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    basis
}

pub fn uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

pub mod synthetic {
    //! Desk-scale distractor scenario: an orthonormal 8-concept world with
    //! noisy target instances and clean distractor instances that share the
    //! "windows" concept with the baseline query.

    use classrefine_core::detmetrics::{BBox, EvalDataset, GroundTruthInstance, ImageInfo};
    use classrefine_core::ConceptDictionary;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    pub const LABELS: [&str; 8] = ["jet", "aircraft", "windows", "plane body", "sky", "runway", "wing", "tail"];
    pub const TARGET: &str = "fighter jet";
    pub const DISTRACTOR: &str = "airplane";
    pub const SCORE_FLOOR: f64 = 0.3;
    pub const NOISE: f64 = 0.35;

    fn axis(i: usize) -> Vec<f64> {
        let mut v = vec![0.0; LABELS.len()];
        v[i] = 1.0;
        v
    }

    fn unit(v: Vec<f64>) -> Vec<f64> {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        v.into_iter().map(|x| x / n).collect()
    }

    pub fn dictionary() -> ConceptDictionary {
        ConceptDictionary::new(
            LABELS.iter().map(|s| s.to_string()).collect(),
            (0..LABELS.len()).map(axis).collect(),
            None,
        )
        .unwrap()
    }

    /// normalize(jet + aircraft + windows)
    pub fn baseline_query() -> Vec<f64> {
        unit(vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    pub fn dataset(seed: u64, targets: usize, distractors: usize) -> EvalDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, NOISE).unwrap();
        let mut images = Vec::new();
        let mut gts = Vec::new();
        for i in 0..targets + distractors {
            let id = format!("img{i:03}");
            images.push(ImageInfo { id: id.clone(), width: Some(640), height: Some(480) });
            let bbox = BBox::new(10.0 + i as f64, 20.0, 100.0, 80.0).unwrap();
            let (category, feature) = if i < targets {
                let mut v = vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0];
                for x in v.iter_mut() {
                    *x += noise.sample(&mut rng);
                }
                (TARGET, unit(v))
            } else {
                (DISTRACTOR, unit(vec![0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]))
            };
            gts.push(GroundTruthInstance {
                image_id: id,
                category: category.into(),
                bbox,
                feature: Some(feature),
            });
        }
        EvalDataset::new(images, gts).unwrap()
    }
}

pub mod detcases {
    //! Small random detection datasets over one target category.

    use classrefine_core::detmetrics::{BBox, Detection, EvalDataset, GroundTruthInstance, ImageInfo};
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    pub const T: &str = "t";

    pub fn random_box(rng: &mut ChaCha8Rng) -> BBox {
        BBox::new(
            rng.random_range(0.0..40.0),
            rng.random_range(0.0..40.0),
            rng.random_range(5.0..30.0),
            rng.random_range(5.0..30.0),
        )
        .unwrap()
    }

    pub fn near(rng: &mut ChaCha8Rng, b: &BBox) -> BBox {
        BBox::new(
            b.x() + rng.random_range(-3.0..3.0),
            b.y() + rng.random_range(-3.0..3.0),
            b.w() * rng.random_range(0.8..1.2),
            b.h() * rng.random_range(0.8..1.2),
        )
        .unwrap()
    }

    /// At most 5 images and 6 boxes; at least one target box. Detection scores
    /// are distinct.
    pub fn random_case(rng: &mut ChaCha8Rng) -> (EvalDataset, Vec<Detection>) {
        let n_img = rng.random_range(1..=5);
        let images: Vec<ImageInfo> = (0..n_img)
            .map(|i| ImageInfo { id: format!("i{i}"), width: None, height: None })
            .collect();
        let n_box = rng.random_range(1..=6);
        let mut gts = Vec::new();
        for k in 0..n_box {
            gts.push(GroundTruthInstance {
                image_id: format!("i{}", rng.random_range(0..n_img)),
                category: if k == 0 || rng.random_bool(0.6) { T.into() } else { "d".into() },
                bbox: random_box(rng),
                feature: None,
            });
        }
        let mut scores: Vec<f64> = (0..12).map(|s| s as f64 / 12.0 + 0.01).collect();
        let mut dets = Vec::new();
        for g in &gts {
            if rng.random_bool(0.8) {
                let s = scores.swap_remove(rng.random_range(0..scores.len()));
                dets.push(Detection::new(g.image_id.clone(), T, near(rng, &g.bbox), s).unwrap());
            }
        }
        for _ in 0..rng.random_range(0..=3) {
            let s = scores.swap_remove(rng.random_range(0..scores.len()));
            let img = format!("i{}", rng.random_range(0..n_img));
            dets.push(Detection::new(img, T, random_box(rng), s).unwrap());
        }
        (EvalDataset::new(images, gts).unwrap(), dets)
    }
}

pub mod worlds {
    //! Random refinement worlds and sessions.

    use std::collections::BTreeSet;
    use std::sync::Arc;

    use classrefine_core::concepts::{ConceptDictionary, DecomposeOptions};
    use classrefine_core::refine::{FeedbackAdjustment, RefineEngine, Session};
    use classrefine_core::store::EmbeddingStore;
    use classrefine_core::vectormath::AdjustmentWeights;
    use classrefine_core::Embedding;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::unit_vec;

    pub const DIM: usize = 6;
    pub const TEXTS: usize = 16;
    pub const CONCEPTS: usize = 10;

    /// Random world: 16 texts "t00".."t15" and 10 concepts "k0".."k9" in 6
    /// dimensions.
    pub fn world(seed: u64) -> (RefineEngine, EmbeddingStore) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let store = EmbeddingStore::from_entries(
            DIM,
            false,
            (0..TEXTS).map(|i| {
                let v = unit_vec(&mut rng, DIM).into_iter().map(|x| x as f32).collect();
                (format!("t{i:02}"), v)
            }),
        )
        .unwrap();
        let dict = ConceptDictionary::new(
            (0..CONCEPTS).map(|i| format!("k{i}")).collect(),
            (0..CONCEPTS).map(|_| unit_vec(&mut rng, DIM)).collect(),
            None,
        )
        .unwrap();
        (RefineEngine::new(Arc::new(dict), DecomposeOptions::default()), store)
    }

    pub fn random_adjustment(rng: &mut ChaCha8Rng) -> FeedbackAdjustment {
        loop {
            let pick = |rng: &mut ChaCha8Rng, n: usize, prefix: &str, width: usize| -> Vec<String> {
                (0..rng.random_range(0..=2))
                    .map(|_| format!("{prefix}{:0width$}", rng.random_range(0..n)))
                    .collect()
            };
            let added = pick(rng, TEXTS, "t", 2);
            let removed = pick(rng, TEXTS, "t", 2);
            let unselected: BTreeSet<String> = pick(rng, CONCEPTS, "k", 1).into_iter().collect();
            let weights = AdjustmentWeights::new(rng.random_range(0.0..0.6), rng.random_range(0.0..0.6)).unwrap();
            if let Ok(a) = FeedbackAdjustment::new(added, removed, unselected, weights) {
                return a;
            }
        }
    }

    pub fn max_abs_diff(a: &Embedding, b: &Embedding) -> f64 {
        a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    /// Runs random rounds against every class, skipping rounds that cancel to
    /// the zero vector.
    pub fn random_session(seed: u64, rounds: usize) -> (RefineEngine, EmbeddingStore, Session) {
        let (engine, store) = world(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut s = engine.create_session(&["t00", "t01", "t02"], &store, AdjustmentWeights::default()).unwrap();
        for _ in 0..rounds {
            let label = format!("t0{}", rng.random_range(0..3));
            let adj = random_adjustment(&mut rng);
            let _ = engine.apply_feedback(&mut s, &label, adj, &store);
        }
        (engine, store, s)
    }
}
