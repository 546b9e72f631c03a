use std::io::Write;

fn main() {
    let color = p4ifc_cli::color_from_env();
    let (mut out, mut err) = (std::io::stdout().lock(), std::io::stderr().lock());
    let code = p4ifc_cli::run_cli(
        std::env::args_os(),
        &mut p4ifc_cli::Io {
            out: &mut out,
            err: &mut err,
            color,
        },
    );
    let _ = out.flush();
    std::process::exit(code);
}
