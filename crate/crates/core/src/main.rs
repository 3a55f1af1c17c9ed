fn main() {
    std::process::exit(beaconnav_core::cli::run(std::env::args_os()));
}
