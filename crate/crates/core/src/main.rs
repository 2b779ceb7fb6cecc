fn main() -> std::process::ExitCode {
    entclass::cli::main_entry()
}
