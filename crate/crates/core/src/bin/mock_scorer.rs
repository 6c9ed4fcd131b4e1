//! Deterministic scorer speaking the oracle's JSON Lines protocol.
//!
//! Flags alter its behaviour so protocol failure paths can be exercised:
//!
//! ```text
//! --props LETTERS     letters announced in the hello (default BDHMPQS)
//! --exit-after N      exit after answering N requests
//! --hang-after N      stop answering after N requests but keep running
//! --error-on SMILES   answer requests for this SMILES with an error object
//! --shuffle           answer each burst of queued requests in reverse order
//! --garbage-after N   print a non-JSON line after N answers
//! --no-hello          skip the handshake line
//! ```

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::sync::mpsc;
use std::time::Duration;

use molforge::molgraph::canonicalize;
use molforge::oracle::{mock_vector, MOCK_PROPERTIES};
use molforge::propmodel::{parse_letters, PropertyId};
use serde_json::{json, Value};

#[derive(Default)]
struct Flags {
    props: Option<String>,
    exit_after: Option<usize>,
    hang_after: Option<usize>,
    garbage_after: Option<usize>,
    error_on: Vec<String>,
    shuffle: bool,
    no_hello: bool,
}

fn parse_flags() -> Result<Flags, String> {
    let mut f = Flags::default();
    let mut args = std::env::args().skip(1);
    let count = |v: Option<String>, name: &str| -> Result<usize, String> {
        v.ok_or(format!("{name} needs a value"))?
            .parse()
            .map_err(|e| format!("{name}: {e}"))
    };
    while let Some(a) = args.next() {
        match a.as_str() {
            "--props" => f.props = Some(args.next().ok_or("--props needs a value")?),
            "--exit-after" => f.exit_after = Some(count(args.next(), "--exit-after")?),
            "--hang-after" => f.hang_after = Some(count(args.next(), "--hang-after")?),
            "--garbage-after" => f.garbage_after = Some(count(args.next(), "--garbage-after")?),
            "--error-on" => f.error_on.push(args.next().ok_or("--error-on needs a value")?),
            "--shuffle" => f.shuffle = true,
            "--no-hello" => f.no_hello = true,
            "--mode" => {
                args.next();
            }
            other => return Err(format!("unknown flag {other}")),
        }
    }
    Ok(f)
}

fn answer(line: &str, served: &BTreeSet<PropertyId>, flags: &Flags) -> Option<Value> {
    let req: Value = serde_json::from_str(line).ok()?;
    let id = req.get("id")?.as_u64()?;
    let smiles = req.get("smiles").and_then(Value::as_str).unwrap_or("");
    if flags.error_on.iter().any(|e| e == smiles) {
        return Some(json!({"id": id, "error": format!("refusing {smiles}")}));
    }
    let mut wanted = BTreeSet::new();
    for p in req.get("props").and_then(Value::as_array).into_iter().flatten() {
        match p.as_str().and_then(|s| s.parse::<PropertyId>().ok()) {
            Some(id) if served.contains(&id) => {
                wanted.insert(id);
            }
            _ => return Some(json!({"id": id, "error": format!("unsupported property {p}")})),
        }
    }
    let canonical = match canonicalize(smiles) {
        Ok(c) => c,
        Err(e) => return Some(json!({"id": id, "error": format!("bad smiles: {e}")})),
    };
    let scores: serde_json::Map<String, Value> = mock_vector(canonical.as_str(), &wanted)
        .scores
        .into_iter()
        .map(|(k, v)| (k.to_string(), json!(v)))
        .collect();
    Some(json!({"id": id, "scores": scores}))
}

fn main() {
    let flags = match parse_flags() {
        Ok(f) => f,
        Err(e) => {
            eprintln!("mock-scorer: {e}");
            std::process::exit(2);
        }
    };
    let letters = flags.props.clone().unwrap_or_else(|| MOCK_PROPERTIES.to_string());
    let served = match parse_letters(&letters) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("mock-scorer: {e}");
            std::process::exit(2);
        }
    };
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    if !flags.no_hello {
        let props: Vec<String> = served.iter().map(|p| p.to_string()).collect();
        let hello = json!({"hello": "scorer", "version": 1, "props": props});
        if writeln!(out, "{hello}").and_then(|_| out.flush()).is_err() {
            return;
        }
    }

    let (tx, rx) = mpsc::channel::<String>();
    std::thread::spawn(move || {
        for line in std::io::stdin().lock().lines() {
            let Ok(line) = line else { break };
            if tx.send(line).is_err() {
                break;
            }
        }
    });

    let mut answered = 0usize;
    let mut held: Vec<Value> = Vec::new();
    loop {
        // hold replies while more requests are queued, then flush reversed
        let next = if flags.shuffle && !held.is_empty() {
            match rx.recv_timeout(Duration::from_millis(20)) {
                Ok(l) => Some(l),
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    for v in held.drain(..).rev() {
                        if writeln!(out, "{v}").is_err() {
                            return;
                        }
                    }
                    let _ = out.flush();
                    continue;
                }
                Err(mpsc::RecvTimeoutError::Disconnected) => None,
            }
        } else {
            rx.recv().ok()
        };
        let Some(line) = next else { break };
        if line.trim().is_empty() {
            continue;
        }
        if flags.hang_after.is_some_and(|n| answered >= n) {
            continue;
        }
        let Some(reply) = answer(&line, &served, &flags) else {
            continue;
        };
        answered += 1;
        if flags.shuffle {
            held.push(reply);
        } else if writeln!(out, "{reply}").and_then(|_| out.flush()).is_err() {
            return;
        }
        if flags.garbage_after == Some(answered) {
            let _ = writeln!(out, "this is not json").and_then(|_| out.flush());
        }
        if flags.exit_after == Some(answered) {
            for v in held.drain(..).rev() {
                let _ = writeln!(out, "{v}");
            }
            let _ = out.flush();
            std::process::exit(0);
        }
    }
    for v in held.drain(..).rev() {
        let _ = writeln!(out, "{v}");
    }
    let _ = out.flush();
}
