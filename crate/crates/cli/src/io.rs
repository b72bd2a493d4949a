//! Line I/O that keeps each record's original terminator, so pure
//! transformations can be byte-identical on round trips.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terminator {
    None,
    Lf,
    CrLf,
}

impl Terminator {
    pub fn as_bytes(self) -> &'static [u8] {
        match self {
            Terminator::None => b"",
            Terminator::Lf => b"\n",
            Terminator::CrLf => b"\r\n",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawLine {
    pub body: Vec<u8>,
    pub term: Terminator,
}

pub struct RawLines<R> {
    reader: R,
}

impl<R: BufRead> Iterator for RawLines<R> {
    type Item = io::Result<RawLine>;

    fn next(&mut self) -> Option<Self::Item> {
        let mut buf = Vec::new();
        match self.reader.read_until(b'\n', &mut buf) {
            Ok(0) => None,
            Ok(_) => {
                let term = if buf.ends_with(b"\r\n") {
                    buf.truncate(buf.len() - 2);
                    Terminator::CrLf
                } else if buf.ends_with(b"\n") {
                    buf.pop();
                    Terminator::Lf
                } else {
                    Terminator::None
                };
                Some(Ok(RawLine { body: buf, term }))
            }
            Err(e) => Some(Err(e)),
        }
    }
}

pub fn raw_lines<R: BufRead>(reader: R) -> RawLines<R> {
    RawLines { reader }
}

pub fn open_input(path: Option<&Path>) -> Result<Box<dyn BufRead + Send>, CliError> {
    match path {
        Some(p) => {
            let f = File::open(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufReader::with_capacity(1 << 16, f)))
        }
        None => Ok(Box::new(BufReader::with_capacity(1 << 16, io::stdin()))),
    }
}

pub fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    match path {
        Some(p) => {
            let f =
                File::create(p).map_err(|e| CliError::Usage(format!("{}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::with_capacity(1 << 16, f)))
        }
        None => Ok(Box::new(BufWriter::with_capacity(
            1 << 16,
            io::stdout().lock(),
        ))),
    }
}
