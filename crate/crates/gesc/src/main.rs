fn main() -> std::process::ExitCode {
    gesc::cli::main()
}
