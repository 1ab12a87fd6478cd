//! Line-oriented query loop.

use std::io::{BufRead, Write};

use medgraph_core::pipeline::{PipelineError, QueryEngine};

use crate::{describe_matches, print_outcome};

const PROMPT: &str = "medgraph> ";

/// Reads one query per line until `exit`, `quit` or end of input.
pub fn run(engine: &QueryEngine, k: usize, input: impl BufRead, out: &mut impl Write) -> anyhow::Result<()> {
    let mut n = 0usize;
    write!(out, "{PROMPT}")?;
    out.flush()?;
    for line in input.lines() {
        let line = line?;
        let text = line.trim();
        if text == "exit" || text == "quit" {
            return Ok(());
        }
        if !text.is_empty() {
            n += 1;
            match engine.query(&format!("repl{n}"), text, k) {
                Ok(o) => {
                    for d in describe_matches(&o) {
                        writeln!(out, "# {d}")?;
                    }
                    print_outcome(out, &o)?;
                }
                Err(e @ PipelineError::NoMatch { .. }) => writeln!(out, "error: {e}")?,
                Err(e) => return Err(e.into()),
            }
        }
        write!(out, "{PROMPT}")?;
        out.flush()?;
    }
    writeln!(out)?;
    Ok(())
}
