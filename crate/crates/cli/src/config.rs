//! Flat `key=value` config files. Keys are long flag names of the chosen
//! subcommand; the values are spliced in ahead of the command line, so
//! explicit flags win.

use std::ffi::OsString;

use clap::CommandFactory;

use crate::args::Cli;

fn parse_lines(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key=value", no + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if k.is_empty() {
            return Err(format!("line {}: empty key", no + 1));
        }
        out.push((k.to_string(), v.to_string()));
    }
    Ok(out)
}

/// Expands `--config PATH` into flags.
pub fn splice(args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let pos = strs.iter().position(|a| a == "--config" || a.starts_with("--config="));
    let Some(pos) = pos else { return Ok(args) };
    let (path, used) = match strs[pos].strip_prefix("--config=") {
        Some(p) => (p.to_string(), 1),
        None => (strs.get(pos + 1).cloned().ok_or("--config needs a path")?, 2),
    };
    let sub_name = strs.get(1).filter(|s| !s.starts_with('-')).ok_or("--config must follow a subcommand")?;
    if pos < 2 {
        return Err("--config must follow a subcommand".into());
    }
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let cmd = Cli::command();
    let sub = cmd.find_subcommand(sub_name).ok_or_else(|| format!("unknown subcommand {sub_name:?}"))?;
    let mut flags = Vec::new();
    for (key, value) in parse_lines(&text).map_err(|e| format!("{path}: {e}"))? {
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| format!("{path}: unknown key {key:?}"))?;
        if arg.get_action().takes_values() {
            flags.push(format!("--{key}"));
            flags.push(value);
        } else {
            match value.as_str() {
                "true" => flags.push(format!("--{key}")),
                "false" => {}
                _ => return Err(format!("{path}: {key} takes true or false, got {value:?}")),
            }
        }
    }
    let mut out: Vec<OsString> = args[..2].to_vec();
    out.extend(flags.into_iter().map(OsString::from));
    out.extend(args[2..pos].iter().cloned());
    out.extend(args[pos + used..].iter().cloned());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn lines_skip_comments_and_blanks() {
        let kv = parse_lines("# c\n\ntau = 3/2\n w=1/5,4/5\n").unwrap();
        assert_eq!(kv, vec![("tau".into(), "3/2".into()), ("w".into(), "1/5,4/5".into())]);
        assert!(parse_lines("tau").is_err());
        assert!(parse_lines("=1").is_err());
    }

    #[test]
    fn splices_before_explicit_flags() {
        let dir = std::env::temp_dir().join(format!("exactapprox-cfg-{}", std::process::id()));
        std::fs::write(&dir, "tau=2\ndelta=1/10\nfaithful=true\ntoy=false\n").unwrap();
        let p = dir.to_string_lossy().into_owned();
        let out = splice(os(&["x", "schedule", "-w", "1/2,1/2", "--config", &p])).unwrap();
        assert_eq!(out, os(&["x", "schedule", "--tau", "2", "--delta", "1/10", "--faithful", "-w", "1/2,1/2"]));
        std::fs::write(&dir, "tau=2\nbogus=1\n").unwrap();
        assert!(splice(os(&["x", "schedule", "--config", &p])).unwrap_err().contains("unknown key"));
        std::fs::write(&dir, "faithful=yes\n").unwrap();
        assert!(splice(os(&["x", "schedule", "--config", &p])).is_err());
        std::fs::remove_file(&dir).unwrap();
    }
}
