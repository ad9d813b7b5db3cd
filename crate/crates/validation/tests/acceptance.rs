use std::process::ExitCode;
use std::time::Instant;

use quorum_risk_validation::criteria;

fn main() -> ExitCode {
    let mut failed = Vec::new();
    for c in criteria() {
        let start = Instant::now();
        let v = (c.check)();
        let tag = if v.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {} {} ({:.2}s): {}", c.id, c.title, start.elapsed().as_secs_f64(), v.detail);
        if !v.pass {
            failed.push(c.id);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failed {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
