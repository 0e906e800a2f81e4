//! Acceptance battery: one PASS/FAIL line per criterion, nonzero exit on any failure.
mod criteria;

fn main() {
    let failed = criteria::run_all(|n, name, out, secs| {
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {n:>2} {status} {name} ({secs:.1}s): {}",
            out.detail
        );
    });
    if failed.is_empty() {
        println!("acceptance: all 10 criteria passed");
    } else {
        println!("acceptance: failed criteria {failed:?}");
        std::process::exit(1);
    }
}
