use std::process::ExitCode;

fn main() -> ExitCode {
    match gscale::run_args(std::env::args_os()) {
        Ok(out) => {
            print!("{}", out.stdout);
            for n in &out.notes {
                eprintln!("{n}");
            }
            ExitCode::SUCCESS
        }
        Err((0, text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err((code, text)) => {
            eprintln!("{text}");
            ExitCode::from(code as u8)
        }
    }
}
