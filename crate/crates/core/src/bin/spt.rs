fn main() -> std::process::ExitCode {
    spt_core::cli::main_entry()
}
