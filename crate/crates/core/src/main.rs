fn main() {
    std::process::exit(kfat_lab::cli::main_with_args(std::env::args_os()));
}
