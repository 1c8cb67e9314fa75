use factor_repro::metrics::delta_pair;
use factor_repro::model::{build_simple_structure, implied_sigma, LoadingMode};
use factor_repro::sim::{run_sample_sweep, SampleCell, SampleGrid};

#[test]
fn larger_samples_approach_population_gap() {
    let grid = SampleGrid {
        cells: vec![
            SampleCell { q: 1, oblique: false },
            SampleCell { q: 3, oblique: false },
            SampleCell { q: 3, oblique: true },
        ],
        per_factor_values: vec![4, 8],
        l_levels: vec![0.40, 0.80],
        loading_modes: vec![LoadingMode::Constant],
        n_levels: vec![150, 900],
        replications: 100,
        master_seed: 5,
        ..SampleGrid::default()
    };
    let records = run_sample_sweep(&grid, |_, _| {}).unwrap();
    let conditions = grid.conditions();
    let mut closer = 0;
    let mut cells = 0;
    for pair in records.chunks(2).zip(conditions.chunks(2)) {
        let (recs, conds) = pair;
        assert_eq!((conds[0].n, conds[1].n), (150, 900));
        let model = build_simple_structure(&conds[0].spec()).unwrap();
        let population = delta_pair(&model, &implied_sigma(&model).unwrap()).unwrap().gap;
        let (small, large) = (
            (recs[0].gap_mean - population).abs(),
            (recs[1].gap_mean - population).abs(),
        );
        println!(
            "{:?} population {population:.6} n=150 {:.6} n=900 {:.6}",
            conds[0].cell, recs[0].gap_mean, recs[1].gap_mean
        );
        cells += 1;
        closer += usize::from(large < small);
    }
    assert_eq!(cells, 12);
    assert!(closer * 10 >= cells * 8, "{closer} of {cells} cells closer at n = 900");
}

#[test]
fn same_seed_same_records() {
    let grid = SampleGrid {
        cells: vec![SampleCell { q: 3, oblique: true }],
        per_factor_values: vec![3],
        l_levels: vec![0.6],
        loading_modes: vec![LoadingMode::Variable],
        n_levels: vec![150],
        replications: 20,
        ..SampleGrid::default()
    };
    let a = run_sample_sweep(&grid, |_, _| {}).unwrap();
    let b = run_sample_sweep(&grid, |_, _| {}).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0].gap_mean.to_bits(), b[0].gap_mean.to_bits());
}
