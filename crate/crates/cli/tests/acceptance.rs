//! Runs every acceptance criterion and prints one line per criterion.
//! Exits nonzero if any criterion fails.

use std::process::ExitCode;

use coopreg_cli::verify::{criterion, ALL};

fn main() -> ExitCode {
    let mut failed = 0;
    for id in ALL {
        let r = criterion(id, None);
        println!("{r}");
        if !r.passed {
            failed += 1;
        }
    }
    println!("acceptance: {} of {} criteria passed", ALL.len() - failed, ALL.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
