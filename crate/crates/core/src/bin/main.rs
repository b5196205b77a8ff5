use clap::error::ErrorKind;
use clap::Parser;
use irdetect::cli::{dispatch, CliArgs};

fn main() {
    let args = match CliArgs::try_parse() {
        Ok(a) => a,
        Err(e) => {
            // Help and version requests are successes, not usage errors.
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    std::process::exit(dispatch(args));
}
