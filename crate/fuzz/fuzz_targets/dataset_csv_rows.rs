#![no_main]

use fndepth::io::{read_dataset, write_dataset, DatasetLayout};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(ds) = read_dataset(data, DatasetLayout::RowsAreCurves) else {
        return;
    };
    let mut out = Vec::new();
    write_dataset(&mut out, &ds, DatasetLayout::RowsAreCurves).expect("writing a parsed dataset");
    let back = read_dataset(out.as_slice(), DatasetLayout::RowsAreCurves).expect("re-reading written dataset");
    assert_eq!(back.grid().points(), ds.grid().points());
    assert_eq!(back.labels(), ds.labels());
    assert!(back.values().iter().zip(ds.values()).all(|(a, b)| a.to_bits() == b.to_bits()));
});
