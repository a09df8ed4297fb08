use clap::Parser;

fn main() {
    let cli = modeconv_cli::Cli::parse();
    std::process::exit(modeconv_cli::run(cli));
}
