//! Drive the command-line interface in-process and print each JSON result.

fn main() {
    let runs: &[&[&str]] = &[
        &["embed-check", "--dist", "ap3_full_p3"],
        &["lines", "--n", "3", "--enumerate"],
        &["patterns", "--p", "3", "--n", "2", "--max-free", "--method", "exhaustive"],
        &["gap3", "--dist", "ap3_somewhat_p3", "--seed", "1", "--restarts", "3"],
    ];
    for args in runs {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = kwise::cli::run_with(std::iter::once("kwise").chain(args.iter().copied()), &mut out, &mut err);
        println!("$ kwise {} (exit {code})", args.join(" "));
        print!("{}", String::from_utf8_lossy(&out));
    }
}
