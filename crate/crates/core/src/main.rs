use std::io;

fn main() {
    let stdout = io::stdout();
    let stderr = io::stderr();
    let code = fermat_weber::cli::run_command(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock());
    std::process::exit(code);
}
