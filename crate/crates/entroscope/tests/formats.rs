//! Randomized round trips through the CSV and JSON encodings.

use entroscope::output::{parse_csv, parse_json, to_csv, to_json};
use entroscope_core::scaling::EntropySeries;
use proptest::prelude::*;

fn series() -> impl Strategy<Value = EntropySeries> {
    (
        proptest::collection::vec((1e-12f64..1e6, -1e12f64..1e12), 1..40),
        proptest::collection::btree_map("[a-z][a-z0-9_.]{0,10}", "[ -~]{0,24}", 0..6),
    )
        .prop_map(|(mut pts, meta)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            pts.dedup_by(|a, b| a.0 == b.0);
            let mut s = EntropySeries::new("x", pts).unwrap();
            for (k, v) in meta.into_iter().filter(|(k, _)| k != "param_name") {
                s.insert_meta(k, v.trim_end());
            }
            s
        })
}

proptest! {
    #[test]
    fn csv_and_json_round_trip_exactly(s in series()) {
        prop_assert_eq!(&parse_csv(&to_csv(&s, None)).unwrap(), &s);
        prop_assert_eq!(&parse_json(&to_json(&s, None)).unwrap(), &s);
        prop_assert_eq!(to_csv(&s, None), to_csv(&parse_csv(&to_csv(&s, None)).unwrap(), None));
    }
}
