//! Runs the seven acceptance criteria on the shipped configuration.

use pulselab::acceptance;
use pulselab::Config;

fn main() {
    println!("acceptance: running 7 criteria on the default configuration");
    let results = match acceptance::run_all(&Config::default_config(), |r| println!("{}", r.line())) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("acceptance run aborted: {e}");
            std::process::exit(1);
        }
    };
    let failed = results.iter().filter(|r| !r.pass).count();
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
