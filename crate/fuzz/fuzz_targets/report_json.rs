#![no_main]

use fndepth::io::{parse_report_json, render_report, ReportFormat};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(report) = parse_report_json(data) else {
        return;
    };
    let rendered = render_report(&report, ReportFormat::Json).expect("rendering a parsed report");
    let again = parse_report_json(&rendered).expect("re-parsing a rendered report");
    assert_eq!(again, report);
    assert_eq!(render_report(&again, ReportFormat::Json).unwrap(), rendered);
    let _ = render_report(&report, ReportFormat::Csv);
});
