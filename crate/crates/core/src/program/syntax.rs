//! Micro-syntaxes inside attribute values: numbers, lengths, point lists,
//! path data and transform lists.

use crate::geom::{Point, Transform};
use crate::program::document::{PathCommand, PathOp};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxError(pub String);

type Result<T> = std::result::Result<T, SyntaxError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(SyntaxError(msg.into()))
}

/// Cursor over an attribute value that yields SVG numbers separated by
/// whitespace and/or a single comma.
struct Scanner<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Scanner<'a> {
    fn new(s: &'a str) -> Self {
        Self { s: s.as_bytes(), pos: 0 }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn skip_separator(&mut self) {
        self.skip_ws();
        if self.peek() == Some(b',') {
            self.pos += 1;
            self.skip_ws();
        }
    }

    fn peek(&self) -> Option<u8> {
        self.s.get(self.pos).copied()
    }

    fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.s.len()
    }

    fn starts_number(&mut self) -> bool {
        self.skip_ws();
        matches!(self.peek(), Some(b'0'..=b'9' | b'.' | b'-' | b'+'))
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let start = self.pos;
        if matches!(self.peek(), Some(b'+' | b'-')) {
            self.pos += 1;
        }
        let mut digits = 0;
        while matches!(self.peek(), Some(b'0'..=b'9')) {
            self.pos += 1;
            digits += 1;
        }
        if self.peek() == Some(b'.') {
            self.pos += 1;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
                digits += 1;
            }
        }
        if digits == 0 {
            self.pos = start;
            return err(format!("expected number at offset {start}"));
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            let exp_start = self.pos;
            while matches!(self.peek(), Some(b'0'..=b'9')) {
                self.pos += 1;
            }
            if self.pos == exp_start {
                self.pos = mark;
            }
        }
        let text = std::str::from_utf8(&self.s[start..self.pos]).expect("ascii slice");
        let value: f64 = text.parse().map_err(|_| SyntaxError(format!("bad number {text:?}")))?;
        if !value.is_finite() {
            return err(format!("non-finite number {text:?}"));
        }
        self.skip_separator();
        Ok(value)
    }

    fn flag(&mut self) -> Result<bool> {
        self.skip_ws();
        let v = match self.peek() {
            Some(b'0') => false,
            Some(b'1') => true,
            _ => return err(format!("expected arc flag at offset {}", self.pos)),
        };
        self.pos += 1;
        self.skip_separator();
        Ok(v)
    }

    fn point(&mut self) -> Result<Point> {
        Ok(Point::new(self.number()?, self.number()?))
    }
}

/// Parses a plain number (no units).
pub fn parse_number(value: &str) -> Result<f64> {
    let mut sc = Scanner::new(value);
    let v = sc.number()?;
    if !sc.at_end() {
        return err(format!("trailing characters in number {value:?}"));
    }
    Ok(v)
}

/// Parses a length in user units; a `px` suffix is accepted.
pub fn parse_length(value: &str) -> Result<f64> {
    let v = value.trim();
    let v = v.strip_suffix("px").unwrap_or(v);
    parse_number(v)
}

pub fn parse_number_list(value: &str) -> Result<Vec<f64>> {
    let mut sc = Scanner::new(value);
    let mut out = Vec::new();
    while !sc.at_end() {
        out.push(sc.number()?);
    }
    Ok(out)
}

pub fn parse_points(value: &str) -> Result<Vec<Point>> {
    let nums = parse_number_list(value)?;
    // An odd trailing coordinate is dropped, as SVG user agents do.
    Ok(nums.chunks_exact(2).map(|c| Point::new(c[0], c[1])).collect())
}

/// Parses path data restricted to M, L, H, V, C, Q, A, Z (either case).
pub fn parse_path_data(d: &str) -> Result<Vec<PathCommand>> {
    let mut sc = Scanner::new(d);
    let mut out = Vec::new();
    let mut current: Option<(u8, bool)> = None;
    while !sc.at_end() {
        let c = sc.peek().unwrap();
        let (letter, relative) = if c.is_ascii_alphabetic() {
            sc.pos += 1;
            let upper = c.to_ascii_uppercase();
            if !b"MLHVCQAZ".contains(&upper) {
                return err(format!("unsupported path command {:?}", c as char));
            }
            (upper, c.is_ascii_lowercase())
        } else {
            match current {
                // Repeated coordinates continue the previous command; after a
                // moveto they are implicit linetos.
                Some((b'M', rel)) => (b'L', rel),
                Some((b'Z', _)) | None => {
                    return err(format!("path data must start with a command at offset {}", sc.pos))
                }
                Some(prev) => prev,
            }
        };
        if out.is_empty() && letter != b'M' {
            return err("path data must begin with a moveto");
        }
        let op = match letter {
            b'M' => PathOp::MoveTo(sc.point()?),
            b'L' => PathOp::LineTo(sc.point()?),
            b'H' => PathOp::Horizontal(sc.number()?),
            b'V' => PathOp::Vertical(sc.number()?),
            b'C' => PathOp::Cubic { c1: sc.point()?, c2: sc.point()?, to: sc.point()? },
            b'Q' => PathOp::Quad { c: sc.point()?, to: sc.point()? },
            b'A' => {
                let rx = sc.number()?;
                let ry = sc.number()?;
                let rotation = sc.number()?;
                let large_arc = sc.flag()?;
                let sweep = sc.flag()?;
                let to = sc.point()?;
                PathOp::Arc { rx, ry, rotation, large_arc, sweep, to }
            }
            b'Z' => {
                sc.skip_separator();
                PathOp::Close
            }
            _ => unreachable!(),
        };
        out.push(PathCommand { relative, op });
        current = Some((letter, relative));
        if letter != b'Z' && !sc.starts_number() && !sc.at_end() {
            let next = sc.peek().unwrap();
            if !next.is_ascii_alphabetic() {
                return err(format!("unexpected {:?} in path data", next as char));
            }
        }
    }
    Ok(out)
}

/// Parses a transform list of translate/scale/rotate/matrix functions.
pub fn parse_transform(value: &str) -> Result<Transform> {
    let mut total = Transform::IDENTITY;
    let mut rest = value.trim();
    while !rest.is_empty() {
        let open = rest.find('(').ok_or_else(|| SyntaxError(format!("malformed transform {value:?}")))?;
        let close = rest.find(')').ok_or_else(|| SyntaxError(format!("malformed transform {value:?}")))?;
        if close < open {
            return err(format!("malformed transform {value:?}"));
        }
        let name = rest[..open].trim();
        let args = parse_number_list(&rest[open + 1..close])?;
        let t = match (name, args.as_slice()) {
            ("translate", [tx]) => Transform::translate(*tx, 0.0),
            ("translate", [tx, ty]) => Transform::translate(*tx, *ty),
            ("scale", [s]) => Transform::scale(*s, *s),
            ("scale", [sx, sy]) => Transform::scale(*sx, *sy),
            ("rotate", [a]) => Transform::rotate(*a),
            ("rotate", [a, cx, cy]) => Transform::translate(*cx, *cy)
                .then_apply_to(&Transform::rotate(*a))
                .then_apply_to(&Transform::translate(-cx, -cy)),
            ("matrix", [a, b, c, d, e, f]) => Transform::new(*a, *b, *c, *d, *e, *f),
            ("translate" | "scale" | "rotate" | "matrix", _) => {
                return err(format!("wrong argument count for {name}"))
            }
            _ => return err(format!("unsupported transform function {name:?}")),
        };
        total = total.then_apply_to(&t);
        rest = rest[close + 1..].trim_start();
        rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn letters(cmds: &[PathCommand]) -> String {
        cmds.iter()
            .map(|c| if c.relative { c.op.letter().to_ascii_lowercase() } else { c.op.letter() })
            .collect()
    }

    #[test]
    fn hand_tokenized_path() {
        let cmds = parse_path_data("M 0 0 L 10 10 Z").unwrap();
        assert_eq!(cmds.len(), 3);
        assert_eq!(cmds[0].op, PathOp::MoveTo(Point::new(0.0, 0.0)));
        assert_eq!(cmds[1].op, PathOp::LineTo(Point::new(10.0, 10.0)));
        assert_eq!(cmds[2].op, PathOp::Close);
    }

    #[test]
    fn implicit_lineto_after_moveto() {
        let cmds = parse_path_data("m1 2 3 4 5 6z").unwrap();
        assert_eq!(letters(&cmds), "mllz");
    }

    #[test]
    fn compact_numbers_and_flags() {
        let cmds = parse_path_data("M0,0a1 1 0 011 1L-.5.5").unwrap();
        assert_eq!(letters(&cmds), "MaL");
        match cmds[1].op {
            PathOp::Arc { large_arc, sweep, to, .. } => {
                assert!(!large_arc);
                assert!(sweep);
                assert_eq!(to, Point::new(1.0, 1.0));
            }
            _ => panic!("expected arc"),
        }
        assert_eq!(cmds[2].op, PathOp::LineTo(Point::new(-0.5, 0.5)));
    }

    #[test]
    fn rejects_out_of_subset_commands() {
        assert!(parse_path_data("M0 0 S 1 1 2 2").is_err());
        assert!(parse_path_data("M0 0 T 1 1").is_err());
        assert!(parse_path_data("L 1 1").is_err());
        assert!(parse_path_data("M 0 0 L 1").is_err());
        assert!(parse_path_data("M 0 0 L 1e999 1").is_err());
    }

    #[test]
    fn transform_lists_compose_left_to_right() {
        let t = parse_transform("translate(10, 5) scale(2)").unwrap();
        assert_eq!(t.apply(Point::new(1.0, 1.0)), Point::new(12.0, 7.0));
        let r = parse_transform("rotate(90 5 5)").unwrap();
        let p = r.apply(Point::new(10.0, 5.0));
        assert!((p.x - 5.0).abs() < 1e-12 && (p.y - 10.0).abs() < 1e-12);
        assert!(parse_transform("skewX(10)").is_err());
        assert!(parse_transform("matrix(1 0 0 1)").is_err());
    }

    #[test]
    fn lengths_accept_px() {
        assert_eq!(parse_length("12px").unwrap(), 12.0);
        assert_eq!(parse_length(" 3.5 ").unwrap(), 3.5);
        assert!(parse_length("50%").is_err());
    }
}
