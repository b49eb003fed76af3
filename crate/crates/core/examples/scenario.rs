//! Parses a scenario, runs it, and prints the report in all three formats.

use zdlab::scenario::{emit_report, parse_report, parse_scenario, run, Format};

const SCENARIO: &str = r#"
id = "demo"

[space]
kind = "lp"
p = "2"

[symbols.u]
type = "weight"
exceptions = { "1" = "0" }
tail = { kind = "inv", params = ["1"] }

[symbols.phi]
type = "map"
exceptions = { "1" = 1 }
tail = { kind = "shift", params = [1] }

[[tasks]]
kind = "verify_all"

[[tasks]]
kind = "tdz_demo"
operator = "weighted"
probes = ["e2", "harmonic"]
n = 12
"#;

fn main() {
    let scenario = parse_scenario(SCENARIO).unwrap_or_else(|e| panic!("{e}"));
    let report = run(&scenario);
    print!("{}", emit_report(&report, Format::Table)[0].content);
    for file in emit_report(&report, Format::Csv) {
        println!("--- {}\n{}", file.name, file.content);
    }
    let structured = &emit_report(&report, Format::Structured)[0].content;
    assert_eq!(parse_report(structured).unwrap(), report);
    println!("structured report: {} bytes, round-trips", structured.len());

    let broken = SCENARIO.replace("\"shift\"", "\"twist\"");
    for e in parse_scenario(&broken).unwrap_err().0 {
        println!("schema error: {e}");
    }
}
