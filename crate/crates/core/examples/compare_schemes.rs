//! Joint decode statistics and P_err of the 3-server diversity and coded
//! layouts for both trellis terminations.
//!
//! `cargo run --release -p coded-nfv --example compare_schemes [trials]`

use coded_nfv::convcode::{ConvCode, Termination};
use coded_nfv::estimators::{estimate_joint_pmf, exact_enum_perr, paper_formula_perr, PaperScheme};
use coded_nfv::nfv::NfvScheme;

fn main() -> coded_nfv::Result<()> {
    let trials: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(50_000);
    let p = 0.05;
    let layouts = [
        (NfvScheme::diversity(3, 2)?, PaperScheme::Diversity3x2),
        (NfvScheme::coded_xor(3, 2)?, PaperScheme::Coded3x2),
    ];
    for term in [Termination::Unterminated, Termination::ZeroTail] {
        let code = ConvCode::standard_k7(70, term)?;
        println!("termination {term}, p = {p}, {trials} trials");
        for (scheme, kind) in &layouts {
            let pmf = estimate_joint_pmf(&code, scheme, p, trials, 1)?;
            let fer: Vec<String> = (0..3).map(|j| format!("{:.3e}", pmf.marginal_error(j))).collect();
            println!("  {:<9} server frame error rates [{}]", scheme.name(), fer.join(", "));
            for q in [1e-4, 1e-3, 1e-2] {
                let exact = exact_enum_perr(&pmf, q, scheme)?;
                let paper = paper_formula_perr(&pmf, q, *kind)?;
                println!(
                    "    q = {q:<6} exact {:.4e} ± {:.1e}   closed form {:.4e}",
                    exact.p_err, exact.ci_halfwidth, paper.p_err
                );
            }
        }
    }
    Ok(())
}
