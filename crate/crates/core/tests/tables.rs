//! Fixed-layout renderings checked against hand-transcribed fixtures.

use std::collections::BTreeMap;

use cwevd::eval::{render_breakdown_table, TpBreakdown};
use cwevd::CweId;

fn cwe(id: u32) -> CweId {
    CweId::new(id).unwrap()
}

#[test]
fn out_of_bounds_read_breakdown() {
    // true positives of the out-of-bounds-read model on the pooled test set
    let mut counts: BTreeMap<CweId, usize> = [
        (125, 137),
        (787, 52),
        (119, 46),
        (190, 31),
        (476, 29),
        (703, 21),
        (20, 21),
        (189, 15),
        (416, 13),
        (120, 13),
    ]
    .into_iter()
    .map(|(c, n)| (cwe(c), n))
    .collect();
    // 117 true positives spread below the top ten
    for (i, n) in [12, 12, 11, 10, 10, 9, 9, 8, 8, 7, 7, 6, 5, 3].into_iter().enumerate() {
        counts.insert(cwe(1000 + i as u32), n);
    }
    let b = TpBreakdown::from_counts("m_125", "d_test_all", Some(cwe(125)), 150, &counts, 0);
    assert_eq!(b.total_tp, 495);
    assert_eq!(b.own_tp, 137);
    assert_eq!(b.rest, 117);
    assert_eq!(
        b.predictions_cell(),
        "125:137, 787:52, 119:46, 190:31, 476:29, 20:21, 703:21, 189:15, 120:13, 416:13, Rest:117"
    );
    let cell = "125:137, 787:52, 119:46, 190:31, 476:29, 20:21, 703:21, 189:15, 120:13, 416:13, Rest:117";
    let expected = format!(
        "CWE | Sum Test | {:>w$}\n125 |      150 | {cell}\n",
        "Predictions (CWE:Sum)",
        w = cell.len()
    );
    assert_eq!(render_breakdown_table(&[b]), expected);
}

#[test]
fn unattributed_true_positives_join_rest() {
    let counts = BTreeMap::from([(cwe(787), 4), (cwe(125), 9)]);
    let b = TpBreakdown::from_counts("m_787", "d", Some(cwe(787)), 10, &counts, 3);
    assert_eq!(b.predictions_cell(), "125:9, 787:4, Rest:3");
    assert_eq!(b.total_tp, 16);
}
