//! Training loop behavior on small problems.

mod common;

use meshstyle_core::mesh::uv_sphere;
use meshstyle_core::{
    IterationRecord, MockEmbedder, PreparedTarget, RenderConfig, StyleField, StyleModel, StyleTarget, TargetPart,
    TrainConfig, TrainObserver, Trainer,
};

#[derive(Default)]
struct Recorder {
    iterations: Vec<usize>,
    checkpoints: Vec<usize>,
}

impl TrainObserver<StyleField> for Recorder {
    fn on_iteration(&mut self, record: &IterationRecord, _: &StyleField) -> meshstyle_core::Result<()> {
        self.iterations.push(record.iteration);
        Ok(())
    }

    fn on_checkpoint(&mut self, iteration: usize, _: &StyleField, _: bool) -> meshstyle_core::Result<()> {
        self.checkpoints.push(iteration);
        Ok(())
    }
}

#[test]
fn observer_sees_every_step_and_checkpoint() {
    let mesh = common::three_triangles();
    let emb = MockEmbedder::new(0);
    let target = PreparedTarget::new(&StyleTarget::text("wood"), &emb).unwrap();
    let mut cfg = small_config(5, 4);
    cfg.checkpoint_every = 2;
    let mut field = StyleField::new(cfg.encoding.clone()).unwrap();
    let mut rec = Recorder::default();
    Trainer::new(&mesh, &target, &emb, &cfg).run(&mut field, &mut rec).unwrap();
    assert_eq!(rec.iterations, vec![0, 1, 2, 3, 4]);
    assert_eq!(rec.checkpoints, vec![2, 4]);
}

struct Refuse;

impl TrainObserver<StyleField> for Refuse {
    fn on_iteration(&mut self, _: &IterationRecord, _: &StyleField) -> meshstyle_core::Result<()> {
        Err(meshstyle_core::Error::Observer("stop".into()))
    }
}

#[test]
fn observer_errors_abort_the_run() {
    let mesh = common::three_triangles();
    let emb = MockEmbedder::new(0);
    let target = PreparedTarget::new(&StyleTarget::text("wood"), &emb).unwrap();
    let cfg = small_config(3, 4);
    let mut field = StyleField::new(cfg.encoding.clone()).unwrap();
    let err = Trainer::new(&mesh, &target, &emb, &cfg).run(&mut field, &mut Refuse).unwrap_err();
    assert_eq!(err, meshstyle_core::Error::Observer("stop".into()));
}

fn small_config(iterations: usize, seed: u64) -> TrainConfig {
    let mut cfg = TrainConfig { iterations, checkpoint_every: 10, ..Default::default() }.with_seed(seed);
    cfg.render = RenderConfig::square(64);
    cfg.views.n_theta = 2;
    cfg.views.anchor_grid_count = 8;
    cfg
}

#[test]
fn zero_iterations_leave_the_field_untouched() {
    let mesh = common::three_triangles();
    let emb = MockEmbedder::new(0);
    let target = PreparedTarget::new(&StyleTarget::text("a glass vase"), &emb).unwrap();
    let cfg = small_config(0, 1);
    let mut field = StyleField::new(cfg.encoding.clone()).unwrap();
    let fresh = field.clone();
    let report = Trainer::new(&mesh, &target, &emb, &cfg).run(&mut field, &mut ()).unwrap();
    assert!(report.history.is_empty());
    assert_eq!(field, fresh);
    assert_eq!(report.anchor.grid.len(), 8);
}

#[test]
fn fixed_seed_gives_identical_loss_logs() {
    let mesh = common::three_triangles();
    let emb = MockEmbedder::new(0);
    let target = PreparedTarget::new(&StyleTarget::text("a glass vase"), &emb).unwrap();
    let cfg = small_config(4, 2);
    let run = || {
        let mut field = StyleField::new(cfg.encoding.clone()).unwrap();
        let report = Trainer::new(&mesh, &target, &emb, &cfg).run(&mut field, &mut ()).unwrap();
        (report.history, field)
    };
    let (a, fa) = run();
    let (b, fb) = run();
    assert_eq!(a, b);
    assert_eq!(fa.params(), fb.params());
    assert_eq!(a[3].lr, 5e-4);
}

#[test]
fn mesh_target_with_identical_views_matches_single_view() {
    let emb = MockEmbedder::new(3);
    let sphere = uv_sphere(0.5, 12, 6).unwrap();
    let target = PreparedTarget::new(&StyleTarget::new(vec![TargetPart::Mesh(sphere), TargetPart::Text("moss".into())]).unwrap(), &emb).unwrap();
    let cfg = RenderConfig::square(64);
    let pose = common::pose(0.4, 0.2);
    let one = target.embeddings(&[pose], &emb, &cfg).unwrap();
    let three = target.embeddings(&[pose, pose, pose], &emb, &cfg).unwrap();
    assert_eq!(one.len(), 2);
    for (a, b) in one.iter().zip(&three) {
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
    assert!(target.embeddings(&[], &emb, &cfg).is_err());
}
