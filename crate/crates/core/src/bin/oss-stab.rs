fn main() {
    std::process::exit(oss_stab::cli::run(std::env::args_os()));
}
