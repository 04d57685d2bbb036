fn main() {
    std::process::exit(lattice_film::cli::run(std::env::args_os()));
}
