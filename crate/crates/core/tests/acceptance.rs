use equistab::acceptance::{run_all, CRITERIA};

#[test]
fn acceptance_criteria() {
    let reports = run_all(42);
    assert_eq!(reports.len(), CRITERIA.len());
    for r in &reports {
        println!("{}", r.line());
    }
    let failed: Vec<u8> = reports.iter().filter(|r| !r.passed).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
