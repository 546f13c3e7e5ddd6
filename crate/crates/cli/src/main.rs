use std::process::ExitCode;

fn main() -> ExitCode {
    let result = kwaudit_cli::run(std::env::args_os());
    for line in &result.summary {
        println!("{line}");
    }
    if let Some(diagnostic) = &result.diagnostic {
        eprintln!("{}", diagnostic.trim_end());
    }
    ExitCode::from(result.exit_code as u8)
}
