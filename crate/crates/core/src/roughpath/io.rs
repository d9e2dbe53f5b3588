//! Plain-text serialization.
//!
//! Header line `J n_steps T alpha`, then one row per node
//! `t_i Z^1..Z^J z^{11}..z^{JJ}` where `z` is the second level of the step
//! starting at `t_i` (zero on the final row).

use std::io::{BufRead, Write};

use super::{RoughPath, SampledPath, TimeGrid};
use crate::error::{invalid, Result};

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

impl RoughPath {
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        let d = self.dim();
        let n = self.grid().n_steps();
        writeln!(w, "{} {} {} {}", d, n, fmt(self.grid().horizon()), fmt(self.alpha()))?;
        let zero = vec![0.0; d * d];
        for k in 0..=n {
            let mut row = vec![fmt(self.grid().time(k))];
            row.extend(self.path().at(k).iter().map(|v| fmt(*v)));
            let second = if k < n { self.step_second(k) } else { &zero[..] };
            row.extend(second.iter().map(|v| fmt(*v)));
            writeln!(w, "{}", row.join(" "))?;
        }
        Ok(())
    }

    pub fn read_text<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines.next().ok_or_else(|| invalid!("empty rough path file"))??;
        let h: Vec<&str> = header.split_whitespace().collect();
        if h.len() != 4 {
            return Err(invalid!("header must have 4 fields, got {:?}", header));
        }
        let d: usize = h[0].parse().map_err(|_| invalid!("bad dimension {:?}", h[0]))?;
        let n: usize = h[1].parse().map_err(|_| invalid!("bad step count {:?}", h[1]))?;
        let horizon: f64 = h[2].parse().map_err(|_| invalid!("bad horizon {:?}", h[2]))?;
        let alpha: f64 = h[3].parse().map_err(|_| invalid!("bad alpha {:?}", h[3]))?;
        let grid = TimeGrid::new(horizon, n)?;
        let width = 1 + d + d * d;
        let mut values = Vec::with_capacity((n + 1) * d);
        let mut steps = Vec::with_capacity(n * d * d);
        let mut rows = 0;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>().map_err(|_| invalid!("bad number {s:?}")))
                .collect::<Result<_>>()?;
            if row.len() != width {
                return Err(invalid!("row {rows} has {} fields, expected {width}", row.len()));
            }
            values.extend_from_slice(&row[1..1 + d]);
            if rows < n {
                steps.extend_from_slice(&row[1 + d..]);
            }
            rows += 1;
        }
        if rows != n + 1 {
            return Err(invalid!("expected {} rows, found {rows}", n + 1));
        }
        RoughPath::from_parts(alpha, SampledPath::new(grid, d, values)?, steps)
    }
}

#[cfg(test)]
mod tests {
    use crate::roughpath::{lift_brownian, Convention, TimeGrid};

    #[test]
    fn text_round_trip_is_exact() {
        let rp = lift_brownian(17, TimeGrid::new(0.7, 33).unwrap(), 2, Convention::Ito).unwrap();
        let mut buf = Vec::new();
        rp.write_text(&mut buf).unwrap();
        let back = crate::roughpath::RoughPath::read_text(&buf[..]).unwrap();
        assert_eq!(back, rp);
    }

    #[test]
    fn truncated_file_rejected() {
        let rp = lift_brownian(1, TimeGrid::new(1.0, 4).unwrap(), 1, Convention::Ito).unwrap();
        let mut buf = Vec::new();
        rp.write_text(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(3).collect::<Vec<_>>().join("\n");
        assert!(crate::roughpath::RoughPath::read_text(cut.as_bytes()).is_err());
    }
}
