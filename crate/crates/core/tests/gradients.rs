//! Analytic gradients against central differences.

mod common;

use common::{pose, rel_err, three_triangles, uniform};
use meshstyle_core::augment::clip_normalize;
use meshstyle_core::render::{render, render_backward, Scene};
use meshstyle_core::{
    Background, Embedder, EncodingConfig, Image, MockEmbedder, RenderConfig, StyleField, StyleModel,
};

fn weighted_sum(img: &Image, w: &Image) -> f64 {
    img.data().iter().zip(w.data()).map(|(a, b)| a * b).sum()
}

#[test]
fn renderer_gradients_match_central_differences() {
    let mesh = three_triangles();
    let colors: Vec<[f64; 3]> = uniform(15, 0.05, 0.95, 1).chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    let cfg = RenderConfig::square(64);
    let view = pose(0.3, 0.2);
    let bg = [0.3, 0.5, 0.7];
    let w = Image::from_raw(64, 64, uniform(64 * 64 * 3, -1.0, 1.0, 2));
    let loss = |p: &[[f64; 3]], c: &[[f64; 3]]| {
        let scene = Scene::new(p, c, mesh.faces()).unwrap();
        weighted_sum(&render(&scene, &view, &cfg, bg).image, &w)
    };

    let positions = mesh.vertices().to_vec();
    let scene = Scene::new(&positions, &colors, mesh.faces()).unwrap();
    let rendered = render(&scene, &view, &cfg, bg);
    assert!(rendered.fragment_count() > 500);
    let grad = render_backward(&scene, &view, &cfg, &rendered, &w, true);
    let d_colors = grad.colors.unwrap();

    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for v in 0..positions.len() {
        for k in 0..3 {
            let mut p = positions.clone();
            p[v][k] += h;
            let up = loss(&p, &colors);
            p[v][k] -= 2.0 * h;
            let down = loss(&p, &colors);
            let fd = (up - down) / (2.0 * h);
            worst = worst.max(rel_err(fd, grad.positions[v][k], 1e-3));

            let mut c = colors.clone();
            c[v][k] += h;
            let up = loss(&positions, &c);
            c[v][k] -= 2.0 * h;
            let down = loss(&positions, &c);
            let fd = (up - down) / (2.0 * h);
            assert!(rel_err(fd, d_colors[v][k], 1e-6) < 1e-6, "color grad {v},{k}: fd {fd} vs {}", d_colors[v][k]);
        }
    }
    assert!(worst < 1e-4, "worst position gradient error {worst}");
}

#[test]
fn field_gradients_match_central_differences() {
    let mut field = StyleField::new(EncodingConfig { seed: 11, ..Default::default() }).unwrap();
    // move away from the zero-initialized heads so every layer carries gradient
    let noise = uniform(field.params().len(), -0.05, 0.05, 12);
    for (p, n) in field.params_mut().iter_mut().zip(&noise) {
        *p += n;
    }
    let points: Vec<[f64; 3]> = uniform(18, -0.5, 0.5, 13).chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    let wc = uniform(18, -1.0, 1.0, 14);
    let wd = uniform(6, -1.0, 1.0, 15);
    let loss = |f: &StyleField| {
        let out = f.evaluate(&points).unwrap();
        let c: f64 = out.colors.iter().flatten().zip(&wc).map(|(a, b)| a * b).sum();
        let d: f64 = out.displacements.iter().zip(&wd).map(|(a, b)| a * b).sum();
        c + d
    };
    let (_, cache) = field.forward(&points).unwrap();
    let dc: Vec<[f64; 3]> = wc.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
    let grad = field.backward(&cache, Some(&dc), Some(&wd));

    let picks = uniform(20, 0.0, field.params().len() as f64, 16);
    let h = 1e-5;
    for pick in picks {
        let i = pick as usize;
        let mut f = field.clone();
        f.params_mut()[i] += h;
        let up = loss(&f);
        f.params_mut()[i] -= 2.0 * h;
        let down = loss(&f);
        let fd = (up - down) / (2.0 * h);
        assert!(rel_err(fd, grad[i], 1e-7) < 1e-4, "param {i}: fd {fd} vs analytic {}", grad[i]);
    }
}

#[test]
fn mock_embedding_pixel_gradient_matches_central_differences() {
    let emb = MockEmbedder::new(5);
    let img = clip_normalize(&Image::from_raw(48, 48, uniform(48 * 48 * 3, 0.0, 1.0, 6)));
    let d = uniform(512, -1.0, 1.0, 7);
    let f = |im: &Image| -> f64 { emb.embed_image(im).unwrap().as_slice().iter().zip(&d).map(|(a, b)| a * b).sum() };
    let g = emb.embed_image_vjp(&img, &d).unwrap();
    let h = 1e-5;
    for idx in [0usize, 101, 2000, 48 * 48 * 3 - 1] {
        let mut p = img.clone();
        p.data_mut()[idx] += h;
        let up = f(&p);
        p.data_mut()[idx] -= 2.0 * h;
        let down = f(&p);
        let fd = (up - down) / (2.0 * h);
        assert!(rel_err(fd, g.data()[idx], 1e-12) < 1e-5, "pixel {idx}: fd {fd} vs {}", g.data()[idx]);
    }
}

#[test]
fn render_backward_skips_colors_on_request() {
    let mesh = three_triangles();
    let gray = vec![[0.5; 3]; mesh.vertex_count()];
    let scene = Scene::new(mesh.vertices(), &gray, mesh.faces()).unwrap();
    let cfg = RenderConfig { background: Background::Constant([0.0; 3]), ..RenderConfig::square(32) };
    let r = render(&scene, &pose(0.0, 0.0), &cfg, [0.0; 3]);
    let g = render_backward(&scene, &pose(0.0, 0.0), &cfg, &r, &Image::filled(32, 32, [1.0; 3]), false);
    assert!(g.colors.is_none());
}
