//! Training-loop contracts on micro datasets: early-stopping patience,
//! checkpoint determinism, degenerate-input errors, and both MMD pairing
//! modes.

use ecgdk_model::{BetaMode, ModelConfig, MmdConfig};
use ecgdk_train::dataset::{build_domain_dataset, DomainProfile};
use ecgdk_train::{scenario_split, train, ScenarioMode, TrainConfig};

fn micro_model() -> ModelConfig {
    ModelConfig {
        d_model: 8,
        encoder_layers: 1,
        heads: 2,
        ff_dim: 16,
        ..ModelConfig::default()
    }
}

fn micro_data(domains: &[&str], records_per_class: usize, seed: u64) -> Vec<ecgdk_core::io::FeaturedSegment> {
    let profiles: Vec<DomainProfile> = domains
        .iter()
        .map(|d| DomainProfile {
            record_seconds: 20.0,
            ..DomainProfile::new(d, records_per_class)
        })
        .collect();
    build_domain_dataset(&profiles, seed).unwrap()
}

fn micro_train_cfg(seed: u64) -> TrainConfig {
    TrainConfig {
        max_epochs: 3,
        warmup_steps: 20,
        seed,
        ..TrainConfig::default()
    }
}

#[test]
fn same_seed_same_checkpoint_bytes() {
    let data = micro_data(&["site-a"], 2, 4);
    let split = scenario_split(&data, ScenarioMode::SeenDomain, None, 4).unwrap();
    let dir = std::env::temp_dir().join(format!("ecgdk-train-det-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();

    let run = |path: &std::path::Path| {
        let out = train(
            &split.train,
            &split.val,
            None,
            &micro_train_cfg(7),
            &micro_model(),
        )
        .unwrap();
        out.model.save_checkpoint(path).unwrap();
        out
    };
    let p1 = dir.join("a.ckpt");
    let p2 = dir.join("b.ckpt");
    let o1 = run(&p1);
    let o2 = run(&p2);
    assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    assert_eq!(o1.best_epoch, o2.best_epoch);
    assert_eq!(o1.log.len(), o2.log.len());
    for (a, b) in o1.log.iter().zip(&o2.log) {
        assert_eq!(a.task_loss, b.task_loss);
        assert_eq!(a.total_loss, b.total_loss);
    }
}

#[test]
fn patience_halts_exactly_after_best() {
    // A separable micro set drives validation F1 to its ceiling quickly;
    // once the best value cannot improve, training must stop exactly
    // `patience` epochs after the best epoch.
    let data = micro_data(&["site-a"], 3, 11);
    let split = scenario_split(&data, ScenarioMode::SeenDomain, None, 11).unwrap();
    let cfg = TrainConfig {
        max_epochs: 60,
        warmup_steps: 15,
        early_stop_patience: 7,
        seed: 11,
        ..TrainConfig::default()
    };
    let out = train(&split.train, &split.val, None, &cfg, &micro_model()).unwrap();
    assert!(
        out.epochs_run < cfg.max_epochs,
        "expected early stop, ran all {} epochs",
        out.epochs_run
    );
    assert_eq!(
        out.epochs_run,
        out.best_epoch + cfg.early_stop_patience,
        "stopped at {} with best at {}",
        out.epochs_run,
        out.best_epoch
    );
    // The returned checkpoint is the best-validation one.
    let val_f1s: Vec<f64> = out.log.iter().filter_map(|r| r.val_f1_macro).collect();
    let max_seen = val_f1s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(out.best_val_f1 >= max_seen - 1e-12);
}

#[test]
fn degenerate_training_sets_error() {
    let data = micro_data(&["site-a"], 1, 2);
    let only_normal: Vec<_> = data
        .iter()
        .filter(|s| s.segment.label == Some(ecgdk_core::Class::Normal))
        .cloned()
        .collect();
    let err = train(
        &only_normal,
        &only_normal,
        None,
        &micro_train_cfg(0),
        &micro_model(),
    )
    .unwrap_err();
    assert!(err.to_string().contains("only class"));

    let empty: Vec<ecgdk_core::io::FeaturedSegment> = Vec::new();
    assert!(train(&empty, &data, None, &micro_train_cfg(0), &micro_model()).is_err());
}

#[test]
fn mmd_runs_with_target_pool_and_intra_batch() {
    let data = micro_data(&["site-a", "site-b"], 1, 5);
    let split = scenario_split(&data, ScenarioMode::SeenDomain, None, 5).unwrap();
    let mmd_cfg = TrainConfig {
        max_epochs: 2,
        warmup_steps: 10,
        seed: 5,
        mmd: MmdConfig {
            beta: BetaMode::MedianHeuristic,
            lambda_mmd: 1.0,
        },
        ..TrainConfig::default()
    };

    // Target-pool mode.
    let target = micro_data(&["wearable"], 1, 6);
    let out = train(&split.train, &split.val, Some(&target), &mmd_cfg, &micro_model()).unwrap();
    assert!(
        out.log.iter().any(|r| r.mmd != 0.0),
        "target-pool MMD never contributed"
    );
    // Total loss carries the weighted MMD term.
    for row in &out.log {
        assert!((row.total_loss - row.task_loss - row.mmd).abs() < 1e-9);
    }

    // Intra-batch pairing mode: two source domains, no target pool.
    let out = train(&split.train, &split.val, None, &mmd_cfg, &micro_model()).unwrap();
    let active = out.log.iter().filter(|r| r.mmd != 0.0).count();
    assert!(
        active + out.mmd_skipped_steps > 0,
        "intra-batch pairing produced no activity"
    );
    assert!(active > 0, "no mixed-domain batch in two epochs");
}

#[test]
fn lambda_zero_total_equals_task_exactly() {
    let data = micro_data(&["site-a"], 2, 9);
    let split = scenario_split(&data, ScenarioMode::SeenDomain, None, 9).unwrap();
    let out = train(
        &split.train,
        &split.val,
        None,
        &micro_train_cfg(9),
        &micro_model(),
    )
    .unwrap();
    for row in &out.log {
        assert_eq!(row.total_loss, row.task_loss);
        assert_eq!(row.mmd, 0.0);
    }
}
