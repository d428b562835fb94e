//! Example programs shipped with the library.

/// `h1` reposts itself and `h2` while a bit is clear; `h2` sets the bit.
pub const FIG3: &str = include_str!("../corpus/fig3.ap");
/// A handler that posts itself twice.
pub const TWICE: &str = include_str!("../corpus/twice.ap");
/// A single handler that does nothing.
pub const EMPTY: &str = include_str!("../corpus/empty.ap");
/// A connection server whose read path forgets to return after disconnecting.
pub const SERVER: &str = include_str!("../corpus/server.ap");
pub const WRPC_N1_W1: &str = include_str!("../corpus/wrpc_n1_w1.ap");
pub const WRPC_N2_W1: &str = include_str!("../corpus/wrpc_n2_w1.ap");
/// `f` cancels all pending `g` and posts one fresh `g`.
pub const CANCEL: &str = include_str!("../corpus/cancel.ap");

/// Windowed RPC: `wrpc` issues `n` calls to `rpccall`, at most `w` pending at a time,
/// and reposts itself until all `n` have completed.
///
/// Global states are `s<sent>r<recv>`.
pub fn windowed_rpc(n: u32, w: u32) -> String {
    let name = |s: u32, r: u32| format!("s{s}r{r}");
    let mut states = Vec::new();
    let mut flow = Vec::new();
    for s in 0..=n {
        for r in 0..=s {
            states.push(name(s, r));
            if r < n {
                if s < n && s - r < w {
                    flow.push(format!("    {} -send-> {};", name(s, r), name(s + 1, r)));
                } else {
                    flow.push(format!("    {} -wait-> {};", name(s, r), name(s, r)));
                }
            } else {
                flow.push(format!("    {} -done-> {};", name(s, r), name(s, r)));
            }
            if r < s {
                flow.push(format!("    {} -recv-> {};", name(s, r), name(s, r + 1)));
            }
        }
    }
    format!(
        "# Windowed RPC with n = {n} calls and window w = {w}.\n\
         program {{\n  states: {};\n  init: {};\n  handlers: wrpc rpccall;\n  internal: send wait done recv;\n  \
         cancels: off;\n  buffer: wrpc:1;\n  grammar {{\n    Xwrpc -> send rpccall wrpc | wait wrpc | done;\n    \
         Xrpccall -> recv;\n  }}\n  flow {{\n{}\n    * -wrpc-> *;\n    * -rpccall-> *;\n  }}\n}}\n",
        states.join(" "),
        name(0, 0),
        flow.join("\n")
    )
}
