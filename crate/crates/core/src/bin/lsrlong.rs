fn main() -> std::process::ExitCode {
    lsrlong::cli::main()
}
