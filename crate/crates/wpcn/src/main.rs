fn main() -> std::process::ExitCode {
    wpcn::cli::main()
}
