fn main() {
    std::process::exit(iotnet_cli::run(std::env::args_os()));
}
