use lensopt::bridge::pi0_recovery;

#[test]
fn components_are_erase_fibers() {
    let report = pi0_recovery(3).unwrap();
    assert!(report.partitions_equal, "{report:?}");
    assert!(report.composites_joined);
    assert_eq!(report.search.depth, 3);
    assert!(report.classes < report.optics);
}
