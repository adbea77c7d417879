use kernel_rank::experiments::{emit, parse_csv, parse_json, run_experiment, EmitFormat, ExperimentConfig};
use kernel_rank::geometry::InteractionKind;
use kernel_rank::kernels::KernelId;
use kernel_rank::Error;

fn small() -> ExperimentConfig {
    ExperimentConfig::new(1, InteractionKind::SharedSurface(0), &[KernelId::K1, KernelId::K3], vec![32, 64], 4, 77)
}

#[test]
fn csv_and_json_round_trip() {
    let stats = run_experiment(&small()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let json = dir.path().join("s.json");
    emit(&stats, EmitFormat::Csv, &csv, false).unwrap();
    emit(&stats, EmitFormat::Json, &json, false).unwrap();

    let rows = parse_csv(&csv).unwrap();
    assert_eq!(rows, stats.summary_rows());
    let back = parse_json(&json).unwrap();
    assert_eq!(back.cells.len(), stats.cells.len());
    for (a, b) in back.cells.iter().zip(&stats.cells) {
        assert_eq!((a.sum, a.sum_sq, a.trials), (b.sum, b.sum_sq, b.trials));
    }
    assert!(matches!(emit(&stats, EmitFormat::Csv, &csv, false), Err(Error::OutputExists { .. })));
}

#[test]
fn rerun_is_identical() {
    let a = run_experiment(&small()).unwrap();
    let b = run_experiment(&small()).unwrap();
    assert_eq!(a.summary_rows(), b.summary_rows());
}
