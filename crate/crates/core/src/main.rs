fn main() {
    std::process::exit(memchan::cli::run(std::env::args_os()));
}
