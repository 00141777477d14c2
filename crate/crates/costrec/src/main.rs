fn main() {
    let args: Vec<_> = std::env::args_os().collect();
    let code = costrec::harness::with_big_stack(move || costrec::harness::cli_main(args));
    std::process::exit(code);
}
