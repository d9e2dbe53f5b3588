use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

impl Status {
    fn label(self) -> &'static str {
        match self {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::Skip => "SKIP",
        }
    }

    fn of(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

/// One named invariant with its measured value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub metric: String,
    /// `None` for non-finite values (e.g. the exact-germ sentinel).
    pub value: Option<f64>,
    pub expected: String,
    pub status: Status,
    pub detail: String,
}

fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

impl Check {
    fn new(name: &str, metric: &str, value: f64, expected: String, ok: bool) -> Self {
        Self {
            name: name.to_string(),
            metric: metric.to_string(),
            value: finite(value),
            expected,
            status: Status::of(ok),
            detail: String::new(),
        }
    }

    pub fn at_least(name: &str, metric: &str, value: f64, bound: f64) -> Self {
        Self::new(name, metric, value, format!("≥{}", short(bound)), value >= bound)
    }

    pub fn at_most(name: &str, metric: &str, value: f64, bound: f64) -> Self {
        Self::new(name, metric, value, format!("≤{}", short(bound)), value <= bound)
    }

    pub fn greater(name: &str, metric: &str, value: f64, bound: f64) -> Self {
        Self::new(name, metric, value, format!(">{}", short(bound)), value > bound)
    }

    pub fn less(name: &str, metric: &str, value: f64, bound: f64) -> Self {
        Self::new(name, metric, value, format!("<{}", short(bound)), value < bound)
    }

    pub fn within(name: &str, metric: &str, value: f64, target: f64, tol: f64) -> Self {
        Self::new(
            name,
            metric,
            value,
            format!("={}±{}", short(target), short(tol)),
            (value - target).abs() <= tol,
        )
    }

    /// A check whose pass condition is computed by the caller.
    pub fn holds(name: &str, metric: &str, value: f64, expected: &str, ok: bool) -> Self {
        Self::new(name, metric, value, expected.to_string(), ok)
    }

    pub fn skip(name: &str, reason: &str) -> Self {
        Self {
            name: name.to_string(),
            metric: String::new(),
            value: None,
            expected: String::new(),
            status: Status::Skip,
            detail: reason.to_string(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Table cells: name, `metric=value`, `expected…`, status.
    pub fn row(&self) -> [String; 4] {
        let measured = match (self.status, self.value) {
            (Status::Skip, _) => format!("skipped: {}", self.detail),
            (_, Some(v)) => format!("{}={}", self.metric, short(v)),
            (_, None) if self.detail.is_empty() => format!("{}=inf", self.metric),
            (_, None) => format!("{}={}", self.metric, self.detail),
        };
        let expected = if self.expected.is_empty() { String::new() } else { format!("expected{}", self.expected) };
        [self.name.clone(), measured, expected, self.status.label().to_string()]
    }
}

/// Compact human-readable number.
fn short(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if (1e-2..1e4).contains(&a) {
        let s = format!("{v:.2}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{v:.2e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_render_expectations() {
        let c = Check::at_least("sewing-power-rate", "slope", 1.4912, 1.35);
        assert_eq!(c.row()[1], "slope=1.49");
        assert_eq!(c.row()[2], "expected≥1.35");
        assert_eq!(c.row()[3], "PASS");
        let f = Check::greater("zeta", "zeta", 0.8, 1.0);
        assert_eq!(f.status, Status::Fail);
        assert_eq!(f.row()[2], "expected>1");
        assert_eq!(Check::at_most("chen", "defect", 3e-14, 1e-12).row()[1], "defect=3.00e-14");
    }
}
