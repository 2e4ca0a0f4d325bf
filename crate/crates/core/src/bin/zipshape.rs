fn main() -> std::process::ExitCode {
    zipshape::cli::main()
}
