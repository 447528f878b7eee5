mod common;

use common::{data, CORPUS};
use meshstyle::checkpoint::Checkpoint;
use meshstyle::meshio::{load_mesh, parse_obj};
use meshstyle::run::{export_results, fresh_model, Content, ExportSettings, Layout};
use meshstyle::config::RunConfig;
use meshstyle_core::{Model, StyleMode, StyleModel};

fn settings(content: &Content) -> ExportSettings {
    let cfg = RunConfig::default();
    let mut render = cfg.train.render;
    render.width = 48;
    render.height = 48;
    ExportSettings { mode: StyleMode::Full, anchor: cfg.train.views.pose(&content.mesh, 0.3, 0.2), render, iteration: 0 }
}

#[test]
fn corpus_meshes_load() {
    for name in CORPUS {
        let m = load_mesh(&data(name)).unwrap();
        assert!(m.face_count() >= 4, "{name}");
    }
    assert_eq!(load_mesh(&data("cube.obj")).unwrap().face_count(), 12);
    assert_eq!(load_mesh(&data("torus.obj")).unwrap().face_count(), 256);
}

#[test]
fn fresh_export_reproduces_the_input() {
    for name in CORPUS {
        let source = load_mesh(&data(name)).unwrap();
        let content = Content::prepare(&source, 0);
        let model = fresh_model(&RunConfig::default(), &content).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let layout = Layout::create(dir.path()).unwrap();
        export_results(&model, &content, &settings(&content), &layout).unwrap();

        let out = load_mesh(&layout.meshes.join("stylized.obj")).unwrap();
        assert_eq!(out.faces(), source.faces());
        for (a, b) in out.vertices().iter().zip(source.vertices()) {
            for k in 0..3 {
                assert!((a[k] - b[k]).abs() <= 1e-6, "{name}: {a:?} vs {b:?}");
            }
        }
        assert!(out.colors().unwrap().iter().all(|c| *c == [0.5; 3]), "{name}");
        let displ = load_mesh(&layout.meshes.join("displaced_only.obj")).unwrap();
        assert!(displ.colors().unwrap().iter().all(|c| *c == [0.5; 3]));
    }
}

#[test]
fn displaced_only_is_gray_for_a_trained_style() {
    let content = Content::prepare(&load_mesh(&data("torus.obj")).unwrap(), 0);
    let mut model = fresh_model(&RunConfig::default(), &content).unwrap();
    let Model::Field(f) = &mut model else { unreachable!() };
    let (d, c) = f.output_layer_params();
    for i in d.chain(c) {
        f.params_mut()[i] = 0.01 * ((i % 7) as f64 - 3.0);
    }
    let dir = tempfile::tempdir().unwrap();
    let layout = Layout::create(dir.path()).unwrap();
    export_results(&model, &content, &settings(&content), &layout).unwrap();
    let stylized = load_mesh(&layout.meshes.join("stylized.obj")).unwrap();
    let displ = load_mesh(&layout.meshes.join("displaced_only.obj")).unwrap();
    assert!(stylized.colors().unwrap().iter().any(|c| *c != [0.5; 3]));
    assert!(displ.colors().unwrap().iter().all(|c| *c == [0.5; 3]));
    assert_eq!(stylized.vertices(), displ.vertices());
    let source = load_mesh(&data("torus.obj")).unwrap();
    assert!(stylized.vertices().iter().zip(source.vertices()).any(|(a, b)| (a[0] - b[0]).abs() > 1e-4));
}

#[test]
fn exported_checkpoint_reloads_bit_identically() {
    let content = Content::prepare(&load_mesh(&data("cube.obj")).unwrap(), 1);
    let mut cfg = RunConfig::default();
    cfg.seed = 11;
    cfg.finish().unwrap();
    let mut model = fresh_model(&cfg, &content).unwrap();
    for (i, p) in model.params_mut().iter_mut().enumerate() {
        *p += 1e-3 * ((i % 13) as f64 - 6.0);
    }
    let dir = tempfile::tempdir().unwrap();
    let layout = Layout::create(dir.path()).unwrap();
    export_results(&model, &content, &settings(&content), &layout).unwrap();
    let back = Checkpoint::load(&layout.checkpoints.join("final.ckpt")).unwrap();
    assert_eq!(back.header.mesh_hash, content.hash);
    assert_eq!(back.header.subdivisions, 1);
    assert_eq!(back.model, model);
    let pts = content.mesh.vertices();
    let (a, b) = (model.evaluate(pts).unwrap(), back.model.evaluate(pts).unwrap());
    let bits = |s: &meshstyle_core::field::StyleOutput| -> Vec<u64> {
        s.colors.iter().flatten().chain(&s.displacements).map(|v| v.to_bits()).collect()
    };
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn obj_round_trip_preserves_geometry() {
    let source = load_mesh(&data("torus.obj")).unwrap();
    let text = meshstyle::meshio::obj_string(&source);
    let back = parse_obj(&text, std::path::Path::new("mem.obj")).unwrap();
    assert_eq!(back.vertices(), source.vertices());
    assert_eq!(back.faces(), source.faces());
}

#[test]
fn unwritable_directory_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let err = Layout::create(&blocker.join("run")).unwrap_err();
    assert!(matches!(err, meshstyle::Error::Io { .. }));
    assert_eq!(err.exit_code(), 4);
}
