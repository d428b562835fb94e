//! Inputs shared by the benchmarks.

use asyncver::corpus;
use asyncver::model::parse_program;
use asyncver::AsyncProgram;

/// `main` posts `a` exactly `2^n` times through `n` doubling variables.
pub fn doubling_program(n: usize) -> AsyncProgram {
    let mut rules = vec!["    A0 -> a;".to_string()];
    for i in 1..=n {
        rules.push(format!("    A{i} -> A{} A{};", i - 1, i - 1));
    }
    let src = format!(
        "program {{\n  states: d;\n  init: d;\n  handlers: main a;\n  buffer: main;\n  grammar {{\n    Xmain -> A{n};\n    Xa -> ;\n{}\n  }}\n  flow {{\n    * -a-> *;\n    * -main-> *;\n  }}\n}}\n",
        rules.join("\n")
    );
    parse_program(&src).expect("doubling program")
}

/// The example programs by name.
pub fn examples() -> Vec<(&'static str, AsyncProgram)> {
    [
        ("fig3", corpus::FIG3),
        ("twice", corpus::TWICE),
        ("server", corpus::SERVER),
        ("wrpc_n1_w1", corpus::WRPC_N1_W1),
        ("wrpc_n2_w1", corpus::WRPC_N2_W1),
    ]
    .into_iter()
    .map(|(name, src)| (name, parse_program(src).expect("corpus program")))
    .collect()
}
