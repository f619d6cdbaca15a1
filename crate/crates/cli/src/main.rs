use std::process::ExitCode;

fn main() -> ExitCode {
    ExitCode::from(dfs_kerr_cli::run(std::env::args_os()))
}
