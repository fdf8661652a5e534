use std::io::Write;

fn main() {
    let outcome = sclkit::cli::run(std::env::args_os());
    print!("{}", outcome.stdout);
    eprint!("{}", outcome.stderr);
    std::io::stdout().flush().ok();
    std::process::exit(outcome.code);
}
