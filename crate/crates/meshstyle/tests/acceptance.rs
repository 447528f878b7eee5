//! Acceptance suite. Prints one PASS/FAIL line per criterion with its
//! runtime and budget, and exits nonzero if any criterion fails or runs
//! over budget.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::data;
use meshstyle::config::RunConfig;
use meshstyle::meshio::load_mesh;
use meshstyle::run::{export_results, fresh_model, Content, ExportSettings, Layout};
use meshstyle_core::augment::{clip_normalize, crop_side};
use meshstyle_core::camera::sample_views;
use meshstyle_core::field::FourierFeatures;
use meshstyle_core::mesh::uv_sphere;
use meshstyle_core::render::render_mesh;
use meshstyle_core::{
    rng_from_seed, AugmentConfig, Axis, CameraPose, Embedder, EncodingConfig, Image, LossOptions, Mesh,
    MockEmbedder, Objective, PreparedTarget, RenderConfig, StepDecay, StyleField, StyleMode, StyleModel, StyleTarget,
    TargetPart, TrainConfig, TrainObserver, Trainer,
};
use rand::Rng;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn uniform(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn random_points(n: usize, seed: u64) -> Vec<[f64; 3]> {
    let u = uniform(3 * n, -0.5, 0.5, seed);
    u.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect()
}

fn perturbed(mut field: StyleField, scale: f64, seed: u64) -> StyleField {
    let noise = uniform(field.params().len(), -scale, scale, seed);
    for (p, n) in field.params_mut().iter_mut().zip(&noise) {
        *p += n;
    }
    field
}

fn three_triangles() -> Mesh {
    Mesh::new(
        vec![[-0.5, -0.4, 0.1], [0.5, -0.45, -0.1], [0.05, 0.5, 0.0], [0.6, 0.45, 0.2], [-0.55, 0.35, -0.15]],
        vec![[0, 1, 2], [1, 3, 2], [0, 2, 4]],
    )
    .unwrap()
}

fn pose(azimuth: f64, elevation: f64) -> CameraPose {
    CameraPose::new(azimuth, elevation, 2.0, std::f64::consts::FRAC_PI_3, [0.0; 3])
}

fn zero_init_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in ["cube.obj", "torus.obj", "octahedron.ply"] {
        let source = load_mesh(&data(name)).map_err(|e| e.to_string())?;
        let content = Content::prepare(&source, 0);
        let cfg = RunConfig::default();
        let model = fresh_model(&cfg, &content).map_err(|e| e.to_string())?;
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let layout = Layout::create(dir.path()).map_err(|e| e.to_string())?;
        let mut render = cfg.train.render;
        render.width = 64;
        render.height = 64;
        let settings = ExportSettings {
            mode: StyleMode::Full,
            anchor: cfg.train.views.pose(&content.mesh, 0.0, 0.0),
            render,
            iteration: 0,
        };
        export_results(&model, &content, &settings, &layout).map_err(|e| e.to_string())?;
        let out = load_mesh(&layout.meshes.join("stylized.obj")).map_err(|e| e.to_string())?;
        ensure(out.vertex_count() == source.vertex_count(), || format!("{name}: vertex count changed"))?;
        for (a, b) in out.vertices().iter().zip(source.vertices()) {
            for k in 0..3 {
                worst = worst.max((a[k] - b[k]).abs());
            }
        }
        let colors = out.colors().ok_or_else(|| format!("{name}: no colors exported"))?;
        ensure(colors.iter().all(|c| *c == [0.5, 0.5, 0.5]), || format!("{name}: colors are not uniform gray"))?;
    }
    ensure(worst <= 1e-6, || format!("max position error {worst:e} > 1e-6"))?;
    Ok(format!("3 meshes, max position error {worst:.1e}, colors exactly 0.5"))
}

fn output_bounds() -> Outcome {
    // 20 fields x 5000 points; weight scales up to 20x the init bound push
    // preactivations far into saturation.
    let mut evaluations = 0usize;
    let (mut max_d, mut min_c, mut max_c) = (0.0f64, 1.0f64, 0.0f64);
    for f in 0..20u64 {
        let mut field = StyleField::new(EncodingConfig { seed: f, ..Default::default() }).map_err(|e| e.to_string())?;
        let scale = 0.05 * (1.0 + f as f64);
        let noise = uniform(field.params().len(), -scale, scale, 1000 + f);
        field.params_mut().copy_from_slice(&noise);
        let pts = random_points(5000, 2000 + f);
        let out = field.evaluate(&pts).map_err(|e| e.to_string())?;
        for (d, c) in out.displacements.iter().zip(&out.colors) {
            if !(*d > -0.1 && *d < 0.1) {
                return Err(format!("displacement {d} outside (-0.1, 0.1)"));
            }
            if !c.iter().all(|v| *v > 0.0 && *v < 1.0) {
                return Err(format!("color {c:?} outside (0, 1)"));
            }
            max_d = max_d.max(d.abs());
            for v in c {
                min_c = min_c.min(*v);
                max_c = max_c.max(*v);
            }
            evaluations += 1;
        }
    }
    ensure(evaluations == 100_000, || format!("{evaluations} evaluations"))?;
    Ok(format!("{evaluations} evaluations, max |d| = 0.1 - {:.1e}, colors in [{min_c:.3e}, 1 - {:.1e}]", 0.1 - max_d, 1.0 - max_c))
}

fn gradient_routing() -> Outcome {
    let mesh = three_triangles();
    let emb = MockEmbedder::new(1);
    let target = vec![emb.embed_text("a red brick wall").map_err(|e| e.to_string())?];
    let render = RenderConfig::square(64);
    let augment = AugmentConfig::default();
    let options = LossOptions { term_gradients: true, ..Default::default() };
    let objective = Objective { embedder: &emb, render: &render, augment: &augment, options };
    let views = [pose(0.1, 0.1), pose(-0.4, 0.3)];
    let fields = [
        StyleField::new(EncodingConfig::default()).map_err(|e| e.to_string())?,
        perturbed(StyleField::new(EncodingConfig { seed: 3, ..Default::default() }).unwrap(), 0.05, 103),
    ];
    let mut color_params = 0;
    for field in &fields {
        let eval = objective.evaluate(field, &mesh, &target, &views, &mut rng_from_seed(9)).map_err(|e| e.to_string())?;
        let terms = eval.terms.ok_or("term gradients missing")?;
        let part = field.partition();
        let colors: Vec<usize> = part.color_indices().collect();
        color_params = colors.len();
        ensure(colors.iter().all(|&i| terms.displ[i] == 0.0), || "displacement term touched the color branch".into())?;
        ensure(colors.iter().any(|&i| terms.full[i] != 0.0), || "full term gives no color gradient".into())?;
        ensure(colors.iter().any(|&i| terms.local[i] != 0.0), || "local term gives no color gradient".into())?;
    }
    Ok(format!("{color_params} color-branch parameters, displacement-term gradient exactly 0 on all"))
}

fn end_to_end_gradient() -> Outcome {
    let mesh = three_triangles();
    let emb = MockEmbedder::new(8);
    let field = perturbed(StyleField::new(EncodingConfig { seed: 9, ..Default::default() }).unwrap(), 0.05, 109);
    let render = RenderConfig::square(64);
    let augment = AugmentConfig::default();
    let objective = Objective { embedder: &emb, render: &render, augment: &augment, options: LossOptions::default() };
    let target = vec![emb.embed_text("a golden trophy").map_err(|e| e.to_string())?];
    let views = [pose(0.25, 0.15), pose(-0.5, 0.3)];
    let rng = rng_from_seed(77);
    let total = |f: &StyleField| objective.evaluate(f, &mesh, &target, &views, &mut rng.clone()).map(|e| e.breakdown.total);
    let eval = objective.evaluate(&field, &mesh, &target, &views, &mut rng.clone()).map_err(|e| e.to_string())?;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for pick in uniform(20, 0.0, field.params().len() as f64, 10) {
        let i = pick as usize;
        let mut f = field.clone();
        f.params_mut()[i] += h;
        let up = total(&f).map_err(|e| e.to_string())?;
        f.params_mut()[i] -= 2.0 * h;
        let down = total(&f).map_err(|e| e.to_string())?;
        let fd = (up - down) / (2.0 * h);
        let err = (fd - eval.gradient[i]).abs() / fd.abs().max(eval.gradient[i].abs()).max(1e-6);
        worst = worst.max(err);
    }
    ensure(worst < 1e-3, || format!("worst relative error {worst:e}"))?;
    Ok(format!("20 weights, worst relative error {worst:.2e}"))
}

fn symmetry_prior() -> Outcome {
    let enc = EncodingConfig { symmetry: vec![Axis::Z], seed: 5, ..Default::default() };
    let field = perturbed(StyleField::new(enc).map_err(|e| e.to_string())?, 0.05, 105);
    let pts = random_points(1000, 55);
    let mirrored: Vec<[f64; 3]> = pts.iter().map(|p| [p[0], p[1], -p[2]]).collect();
    let a = field.evaluate(&pts).map_err(|e| e.to_string())?;
    let b = field.evaluate(&mirrored).map_err(|e| e.to_string())?;
    let bits = |s: &meshstyle_core::field::StyleOutput| -> Vec<u64> {
        s.colors.iter().flatten().chain(&s.displacements).map(|v| v.to_bits()).collect()
    };
    ensure(bits(&a) == bits(&b), || "outputs differ under z mirroring".into())?;
    ensure(a.displacements.iter().any(|d| *d != 0.0), || "trivial field".into())?;
    Ok("1000 points, bit-identical".into())
}

fn area(vertices: &[[f64; 3]], faces: &[[u32; 3]]) -> f64 {
    faces
        .iter()
        .map(|f| {
            let [a, b, c] = f.map(|i| vertices[i as usize]);
            let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
            let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
            let x = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
            0.5 * (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
        })
        .sum()
}

fn subdivision_law() -> Outcome {
    let mut worst: f64 = 0.0;
    for name in ["cube.obj", "torus.obj", "octahedron.ply"] {
        let mesh = load_mesh(&data(name)).map_err(|e| e.to_string())?;
        let (n, m) = (mesh.vertex_count(), mesh.face_count());
        let sub = mesh.subdivide_barycentric();
        ensure(sub.vertex_count() == n + m && sub.face_count() == 3 * m, || {
            format!("{name}: ({}, {}) vs ({}, {})", sub.vertex_count(), sub.face_count(), n + m, 3 * m)
        })?;
        ensure(sub.vertices()[..n] == *mesh.vertices(), || format!("{name}: original vertices moved"))?;
        for (k, f) in mesh.faces().iter().enumerate() {
            let [a, b, c] = f.map(|i| mesh.vertices()[i as usize]);
            let centre = [0, 1, 2].map(|j| (a[j] + b[j] + c[j]) / 3.0);
            ensure(sub.vertices()[n + k] == centre, || format!("{name}: vertex {} is not the barycenter", n + k))?;
        }
        let (before, after) = (area(mesh.vertices(), mesh.faces()), area(sub.vertices(), sub.faces()));
        worst = worst.max((before - after).abs());
    }
    ensure(worst < 1e-9, || format!("area changed by {worst:e}"))?;
    Ok(format!("3 meshes, exact barycenters, max area change {worst:.1e}"))
}

fn schedule() -> Outcome {
    let s = StepDecay::default();
    for i in [0usize, 99, 100, 250, 1499] {
        let expected = 5e-4 * 0.9f64.powi((i / 100) as i32);
        let got = s.lr(i);
        ensure((got - expected).abs() <= 1e-15 * expected, || format!("lr({i}) = {got:e}, expected {expected:e}"))?;
    }
    ensure((s.lr(250) - 4.05e-4).abs() <= 1e-15 * 4.05e-4, || format!("lr(250) = {:e}", s.lr(250)))?;
    ensure(s.lr(99) == 5e-4 && s.lr(0) == 5e-4, || "no decay expected before iteration 100".into())?;
    Ok(format!("lr(250) = {:e}, lr(1499) = {:e}", s.lr(250), s.lr(1499)))
}

struct CheckpointScores<'a> {
    score: &'a dyn Fn(&StyleField) -> meshstyle_core::Result<f64>,
    scores: Vec<(usize, f64)>,
}

impl TrainObserver<StyleField> for CheckpointScores<'_> {
    fn on_checkpoint(&mut self, iteration: usize, model: &StyleField, _diagnostic: bool) -> meshstyle_core::Result<()> {
        self.scores.push((iteration, (self.score)(model)?));
        Ok(())
    }
}

fn convergence_smoke() -> Outcome {
    let sphere = uv_sphere(0.5, 25, 11).map_err(|e| e.to_string())?.normalize_to_unit_box().mesh;
    ensure(sphere.face_count() == 500, || format!("{} faces", sphere.face_count()))?;
    let red = sphere.clone().with_colors(vec![[0.9, 0.2, 0.2]; sphere.vertex_count()]).map_err(|e| e.to_string())?;
    // Default training settings; the target is rendered on the neutral
    // gray of the training background range.
    let cfg = TrainConfig { iterations: 200, checkpoint_every: 20, ..TrainConfig::default() }.with_seed(7);
    let bg = cfg.render.background.neutral();
    let front = cfg.views.pose(&sphere, 0.0, 0.0);
    let target_image: Image = render_mesh(&red, &front, &cfg.render, bg).image;
    let emb = MockEmbedder::new(7);
    let target = PreparedTarget::new(&StyleTarget::new(vec![TargetPart::Image(target_image)]).unwrap(), &emb)
        .map_err(|e| e.to_string())?;

    let eval_views = sample_views(&front, &cfg.views, &mut rng_from_seed(99));
    let targets = target.embeddings(&eval_views, &emb, &cfg.render).map_err(|e| e.to_string())?;
    let objective = Objective { embedder: &emb, render: &cfg.render, augment: &cfg.augment, options: cfg.options };
    let score = |f: &StyleField| objective.score(f, &sphere, &targets, &eval_views);

    let mut field = StyleField::new(cfg.encoding.clone()).map_err(|e| e.to_string())?;
    let s0 = score(&field).map_err(|e| e.to_string())?;
    let mut observer = CheckpointScores { score: &score, scores: vec![(0, s0)] };
    Trainer::new(&sphere, &target, &emb, &cfg).run(&mut field, &mut observer).map_err(|e| e.to_string())?;
    let s_final = score(&field).map_err(|e| e.to_string())?;

    // Similarity is the un-augmented score at fixed views around the target
    // pose. Checkpoints every 20 iterations, iteration 0 included.
    let reduction = |s: f64| 1.0 - (1.0 - s) / (1.0 - s0);
    let mut best = f64::NEG_INFINITY;
    let mut best_so_far = Vec::new();
    for &(_, s) in &observer.scores {
        best = best.max(s);
        best_so_far.push(best);
    }
    ensure(observer.scores.len() == 11, || format!("{} checkpoints", observer.scores.len()))?;
    ensure(observer.scores.last().map(|c| c.1) == Some(s_final), || "last checkpoint is not the final model".into())?;
    ensure(best_so_far.windows(2).all(|w| w[1] >= w[0]), || format!("best-so-far decreased: {best_so_far:?}"))?;
    ensure(reduction(best) >= 0.5, || {
        format!("best 1 - sim within 200 iterations {:.5} vs {:.5} at start, reduction {:.1}% < 50%", 1.0 - best, 1.0 - s0, 100.0 * reduction(best))
    })?;
    let at = observer.scores.iter().find(|c| c.1 == best).map_or(0, |c| c.0);
    Ok(format!(
        "sim {s0:.5} at start, best {best:.5} at iteration {at} ((1 - sim) reduced {:.1}%), final {s_final:.5} ({:.1}%)",
        100.0 * reduction(best),
        100.0 * reduction(s_final)
    ))
}

/// Mean absolute Jacobian entry of the encoding, computed directly from the
/// frequency matrix.
fn mean_abs_jacobian(b: &[[f64; 3]], points: &[[f64; 3]]) -> f64 {
    let tau = 2.0 * std::f64::consts::PI;
    let mut sum = 0.0;
    for p in points {
        for row in b {
            let phase = tau * (row[0] * p[0] + row[1] * p[1] + row[2] * p[2]);
            let (s, c) = phase.sin_cos();
            for r in row {
                sum += (tau * r * s).abs() + (tau * r * c).abs();
            }
        }
    }
    sum / (points.len() * b.len() * 6) as f64
}

fn spectral_control() -> Outcome {
    let points = random_points(500, 31);
    let mut values = Vec::new();
    for sigma in [3.0, 5.0, 8.0] {
        let ff = FourierFeatures::sample(&EncodingConfig { sigma, seed: 4, ..Default::default() }).map_err(|e| e.to_string())?;
        let oracle = mean_abs_jacobian(ff.matrix(), &points);
        let lib = ff.mean_abs_jacobian(&points);
        ensure((oracle - lib).abs() <= 1e-9 * oracle, || format!("sigma {sigma}: library {lib} vs direct {oracle}"))?;
        values.push(oracle);
    }
    ensure(values[0] < values[1] && values[1] < values[2], || format!("not increasing: {values:?}"))?;
    Ok(format!("mean |dgamma/dp| = {:.2} < {:.2} < {:.2}", values[0], values[1], values[2]))
}

fn augmentation_geometry() -> Outcome {
    let side = crop_side(224, 0.10);
    ensure(side == 70, || format!("crop side {side}"))?;
    let mean = [0.48145466, 0.4578275, 0.40821073];
    let out = clip_normalize(&Image::filled(224, 224, mean));
    ensure(out.data().iter().all(|v| *v == 0.0), || "mean triple does not map to zero".into())?;
    Ok("crop side 70 px, mean triple maps to (0, 0, 0)".into())
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, u64); 10] = [
        ("zero-init identity", zero_init_identity, 10),
        ("output bounds", output_bounds, 30),
        ("gradient routing", gradient_routing, 30),
        ("end-to-end gradient", end_to_end_gradient, 120),
        ("symmetry prior", symmetry_prior, 5),
        ("subdivision law", subdivision_law, 10),
        ("learning-rate schedule", schedule, 1),
        ("offline convergence smoke", convergence_smoke, 300),
        ("positional-encoding spectral control", spectral_control, 10),
        ("augmentation geometry", augmentation_geometry, 1),
    ];
    let mut failed = 0;
    for (name, run, budget) in criteria {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let over = elapsed > Duration::from_secs(budget);
        let (tag, detail) = match (&outcome, over) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over budget")),
            (Err(e), _) => ("FAIL", e.clone()),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("{tag} {name}: {detail} [{:.2}s / {budget}s]", elapsed.as_secs_f64());
    }
    println!("SKIP extended real-encoder comparison: needs pretrained weights and a GPU backend");
    if failed == 0 {
        println!("acceptance: 10/10 passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} of 10 failed");
        ExitCode::FAILURE
    }
}
