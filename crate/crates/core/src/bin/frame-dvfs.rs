fn main() -> std::process::ExitCode {
    frame_dvfs::cli::main()
}
