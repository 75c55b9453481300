//! Terminal annotation sessions.

use std::collections::VecDeque;
use std::io::{self, BufRead, IsTerminal, Write};
use std::path::Path;

use claimcheck_core::{Corpus, Label, Labeling};
use thiserror::Error;

use crate::clock::Clock;
use crate::jsonl::{AnnotationFile, LabelFileError};

#[derive(Debug, Error)]
pub enum AnnotateError {
    #[error("annotation needs an interactive terminal")]
    NonInteractiveChannel,
    #[error("could not save annotations: {0}")]
    WriteFailure(#[source] LabelFileError),
    #[error("could not read existing annotations: {0}")]
    Resume(#[source] LabelFileError),
    #[error("existing file belongs to annotator {found:?}, not {expected:?}")]
    AnnotatorMismatch { expected: String, found: String },
    #[error("existing file labels {0:?}, which is not in the sample")]
    ForeignId(String),
    #[error("console error: {0}")]
    Console(#[from] io::Error),
}

/// A line-oriented text channel.
pub trait Console {
    fn is_interactive(&self) -> bool;
    fn show(&mut self, text: &str) -> io::Result<()>;
    /// Reads one answer; `None` at end of input.
    fn read_answer(&mut self, prompt: &str) -> io::Result<Option<String>>;
}

pub struct TerminalConsole;

impl Console for TerminalConsole {
    fn is_interactive(&self) -> bool {
        io::stdin().is_terminal()
    }

    fn show(&mut self, text: &str) -> io::Result<()> {
        let mut err = io::stderr().lock();
        writeln!(err, "{text}")
    }

    fn read_answer(&mut self, prompt: &str) -> io::Result<Option<String>> {
        let mut err = io::stderr().lock();
        write!(err, "{prompt}")?;
        err.flush()?;
        let mut line = String::new();
        if io::stdin().lock().read_line(&mut line)? == 0 {
            return Ok(None);
        }
        Ok(Some(line))
    }
}

/// Replays a fixed list of answers.
#[derive(Debug, Default)]
pub struct ScriptedConsole {
    answers: VecDeque<String>,
    pub shown: Vec<String>,
}

impl ScriptedConsole {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(answers: I) -> Self {
        Self { answers: answers.into_iter().map(Into::into).collect(), shown: Vec::new() }
    }
}

impl Console for ScriptedConsole {
    fn is_interactive(&self) -> bool {
        true
    }

    fn show(&mut self, text: &str) -> io::Result<()> {
        self.shown.push(text.to_owned());
        Ok(())
    }

    fn read_answer(&mut self, _prompt: &str) -> io::Result<Option<String>> {
        Ok(self.answers.pop_front())
    }
}

enum Answer {
    Label(Label),
    Skip,
    Quit,
}

fn interpret(raw: &str) -> Option<Answer> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "y" | "yes" => Some(Answer::Label(Label::Yes)),
        "n" | "no" => Some(Answer::Label(Label::No)),
        "s" | "skip" => Some(Answer::Skip),
        "q" | "quit" => Some(Answer::Quit),
        _ => None,
    }
}

/// Walks the sample in order, asking for a label per unlabeled instance.
///
/// An existing file at `out` is resumed: its labels and `created_at` are kept
/// and already-labeled ids are not asked again. The file is rewritten after
/// every answer, so quitting (or end of input) loses nothing.
pub fn annotate_session(
    sample: &Corpus,
    annotator_id: &str,
    out: &Path,
    console: &mut dyn Console,
    clock: &dyn Clock,
) -> Result<AnnotationFile, AnnotateError> {
    if !console.is_interactive() {
        return Err(AnnotateError::NonInteractiveChannel);
    }
    let mut file = if out.exists() {
        let f = AnnotationFile::read(out).map_err(AnnotateError::Resume)?;
        if f.annotator_id != annotator_id {
            return Err(AnnotateError::AnnotatorMismatch { expected: annotator_id.into(), found: f.annotator_id });
        }
        if let Some(id) = f.labels.keys().find(|id| sample.get(id).is_none()) {
            return Err(AnnotateError::ForeignId(id.clone()));
        }
        f
    } else {
        AnnotationFile { annotator_id: annotator_id.into(), labels: Labeling::new(), created_at: clock.now_utc() }
    };

    let pending: Vec<_> = sample.instances().iter().filter(|i| !file.labels.contains_key(&i.id)).collect();
    let total = pending.len();
    'outer: for (n, inst) in pending.into_iter().enumerate() {
        console.show(&format!("[{}/{}] {}\n{}", n + 1, total, inst.id, inst.text))?;
        loop {
            let Some(raw) = console.read_answer("check-worthy? [y]es/[n]o/[s]kip/[q]uit: ")? else {
                break 'outer;
            };
            match interpret(&raw) {
                Some(Answer::Label(l)) => {
                    file.labels.insert(inst.id.clone(), l);
                    file.write(out).map_err(AnnotateError::WriteFailure)?;
                    break;
                }
                Some(Answer::Skip) => break,
                Some(Answer::Quit) => break 'outer,
                None => console.show("please answer y, n, s or q")?,
            }
        }
    }
    if !out.exists() {
        file.write(out).map_err(AnnotateError::WriteFailure)?;
    }
    Ok(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clock::SimClock;
    use claimcheck_core::{LabeledInstance, Language, Split};

    fn sample(n: usize) -> Corpus {
        let inst =
            (0..n).map(|i| LabeledInstance::new(format!("s{i}"), format!("text {i}"), None, Language::Ar)).collect();
        Corpus::new(Language::Ar, Split::Test, inst, "").unwrap()
    }

    #[test]
    fn direct_mapping() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("a.json");
        let mut c = ScriptedConsole::new(["y", "n", "y"]);
        let f = annotate_session(&sample(3), "ann1", &out, &mut c, &SimClock::default()).unwrap();
        let labels: Vec<_> = f.labels.values().copied().collect();
        assert_eq!(labels, [Label::Yes, Label::No, Label::Yes]);
        assert_eq!(AnnotationFile::read(&out).unwrap(), f);
    }

    #[test]
    fn resume_matches_uninterrupted() {
        let dir = tempfile::tempdir().unwrap();
        let clock = SimClock::default();
        let whole = dir.path().join("whole.json");
        annotate_session(&sample(3), "a", &whole, &mut ScriptedConsole::new(["y", "n", "y"]), &clock).unwrap();

        let clock = SimClock::default();
        let split = dir.path().join("split.json");
        annotate_session(&sample(3), "a", &split, &mut ScriptedConsole::new(["y", "q"]), &clock).unwrap();
        assert_eq!(AnnotationFile::read(&split).unwrap().labels.len(), 1);
        clock.advance(60_000);
        let mut c = ScriptedConsole::new(["n", "y"]);
        annotate_session(&sample(3), "a", &split, &mut c, &clock).unwrap();
        assert_eq!(c.shown.len(), 2);
        assert_eq!(std::fs::read(&whole).unwrap(), std::fs::read(&split).unwrap());
    }

    #[test]
    fn skip_and_retry_invalid() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("a.json");
        let mut c = ScriptedConsole::new(["s", "maybe", "N"]);
        let f = annotate_session(&sample(2), "a", &out, &mut c, &SimClock::default()).unwrap();
        assert_eq!(f.labels.len(), 1);
        assert_eq!(f.labels["s1"], Label::No);
    }

    #[test]
    fn refuses_non_interactive() {
        struct Pipe;
        impl Console for Pipe {
            fn is_interactive(&self) -> bool {
                false
            }
            fn show(&mut self, _: &str) -> io::Result<()> {
                Ok(())
            }
            fn read_answer(&mut self, _: &str) -> io::Result<Option<String>> {
                Ok(None)
            }
        }
        let dir = tempfile::tempdir().unwrap();
        let r = annotate_session(&sample(1), "a", &dir.path().join("x.json"), &mut Pipe, &SimClock::default());
        assert!(matches!(r, Err(AnnotateError::NonInteractiveChannel)));
    }

    #[test]
    fn other_annotators_file_is_not_resumed() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("a.json");
        annotate_session(&sample(1), "a", &out, &mut ScriptedConsole::new(["y"]), &SimClock::default()).unwrap();
        let r = annotate_session(&sample(1), "b", &out, &mut ScriptedConsole::new(["y"]), &SimClock::default());
        assert!(matches!(r, Err(AnnotateError::AnnotatorMismatch { .. })));
    }
}
