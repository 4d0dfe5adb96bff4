fn main() {
    std::process::exit(stagetest::cli::main(std::env::args_os()));
}
