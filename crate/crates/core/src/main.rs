fn main() {
    let code = relqc_core::cli::run(
        std::env::args_os(),
        &mut std::io::stdout(),
        &mut std::io::stderr(),
        &|k| std::env::var(k).ok(),
    );
    std::process::exit(code);
}
