use std::path::Path;

use battid::csvio::{load_csv, read_csv, write_record, CsvSchema};
use battid_core::signals::SampledRecord;
use proptest::prelude::*;

fn record() -> impl Strategy<Value = SampledRecord> {
    (2usize..60, 1e-3f64..100.0, -1e4f64..1e4, any::<bool>()).prop_flat_map(|(n, ts, t0, with_soc)| {
        (
            proptest::collection::vec(-50.0f64..50.0, n),
            proptest::collection::vec(2.0f64..4.5, n),
            proptest::collection::vec(0.0f64..=1.0, n),
        )
            .prop_map(move |(i, v, z)| {
                let rec = SampledRecord::new(ts, t0, i, v).unwrap();
                if with_soc {
                    rec.with_soc(z).unwrap()
                } else {
                    rec
                }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_read_is_identity(rec in record(), negate in any::<bool>()) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        let schema = CsvSchema { negate_current: negate, ..CsvSchema::default() };
        write_record(&path, &rec, &schema, "# battid test").unwrap();
        let back = load_csv(&path, &schema).unwrap();
        prop_assert_eq!(back.len(), rec.len());
        prop_assert_eq!(back.current(), rec.current());
        prop_assert_eq!(back.voltage(), rec.voltage());
        prop_assert_eq!(back.soc(), rec.soc());
        prop_assert!((back.ts() - rec.ts()).abs() <= 1e-9 * rec.ts());
        for j in 0..rec.len() {
            prop_assert!((back.time(j) - rec.time(j)).abs() <= 1e-9 * (1.0 + rec.time(j).abs()));
        }
    }
}

#[test]
fn renamed_columns() {
    let schema = CsvSchema {
        time: "Test_Time(s)".into(),
        current: "Current(A)".into(),
        voltage: "Voltage(V)".into(),
        soc: None,
        ..CsvSchema::default()
    };
    let text = "Step,Test_Time(s),Voltage(V),Current(A)\n1,10,3.7,0.5\n1,11,3.69,0.5\n1,12,3.68,0.0\n";
    let rec = read_csv(text.as_bytes(), &schema, Path::new("calce.csv")).unwrap();
    assert_eq!(rec.t0(), 10.0);
    assert_eq!(rec.voltage(), &[3.7, 3.69, 3.68]);
    assert!(rec.soc().is_none());
}
