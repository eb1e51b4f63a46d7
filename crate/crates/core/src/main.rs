fn main() {
    std::process::exit(levy_expfunc::cli::run_command(std::env::args_os()));
}
