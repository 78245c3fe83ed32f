//! Verification reports.

use crate::wide::WideReal;
use serde::ser::SerializeStruct;
use serde::Serialize;

/// Where in a step-function constancy interval a checked point sits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckSide {
    /// At a jump point, with the post-jump value.
    At,
    /// At the integer just before the next jump.
    IntBefore,
    /// At the next jump point, with the pre-jump value (left limit).
    Before,
    /// At the requested range end, with the running value.
    RangeEnd,
}

/// Outcome of verifying one named inequality over a range.
#[derive(Clone, Debug)]
pub struct InequalityReport {
    pub name: String,
    pub lo: u64,
    pub hi: u64,
    /// `worst_margin > 0`.
    pub holds: bool,
    /// Minimum of (bound minus quantity) over all checked points.
    pub worst_margin: WideReal,
    /// The x attaining the worst margin.
    pub witness: u64,
    pub witness_side: CheckSide,
    pub points_checked: u64,
    pub notes: Option<String>,
}

impl InequalityReport {
    pub fn new(
        name: impl Into<String>,
        lo: u64,
        hi: u64,
        worst_margin: WideReal,
        witness: u64,
        witness_side: CheckSide,
        points_checked: u64,
    ) -> Self {
        let holds = worst_margin.is_positive();
        InequalityReport {
            name: name.into(),
            lo,
            hi,
            holds,
            worst_margin,
            witness,
            witness_side,
            points_checked,
            notes: None,
        }
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        self.notes = Some(notes.into());
        self
    }
}

impl Serialize for InequalityReport {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut st = s.serialize_struct("InequalityReport", 9)?;
        st.serialize_field("name", &self.name)?;
        st.serialize_field("range", &[self.lo, self.hi])?;
        st.serialize_field("holds", &self.holds)?;
        st.serialize_field("worst_margin", &self.worst_margin.to_sci(25))?;
        st.serialize_field("witness", &self.witness)?;
        st.serialize_field("witness_side", &self.witness_side)?;
        st.serialize_field("points_checked", &self.points_checked)?;
        st.serialize_field("notes", &self.notes)?;
        st.end()
    }
}

/// Running minimum-margin tracker with deterministic tie-breaking
/// (first point in ascending walk order wins).
#[derive(Clone, Debug, Default)]
pub struct WorstTracker {
    pub worst: Option<(WideReal, u64, CheckSide)>,
    pub points: u64,
}

impl WorstTracker {
    pub fn observe(&mut self, margin: WideReal, x: u64, side: CheckSide) {
        self.points += 1;
        match &self.worst {
            Some((m, _, _)) if *m <= margin => {}
            _ => self.worst = Some((margin, x, side)),
        }
    }

    /// Folds `other` in as the continuation of this tracker (the caller
    /// guarantees `other` covers later x).
    pub fn merge_after(&mut self, other: WorstTracker) {
        self.points += other.points;
        if let Some((m, x, s)) = other.worst {
            match &self.worst {
                Some((m0, _, _)) if *m0 <= m => {}
                _ => self.worst = Some((m, x, s)),
            }
        }
    }

    pub fn into_report(self, name: impl Into<String>, lo: u64, hi: u64) -> InequalityReport {
        let (margin, witness, side) = self
            .worst
            .expect("tracker observed at least one point");
        InequalityReport::new(name, lo, hi, margin, witness, side, self.points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tracker_keeps_first_minimum() {
        let mut t = WorstTracker::default();
        t.observe(WideReal::from_u64(5, 30), 10, CheckSide::At);
        t.observe(WideReal::from_u64(3, 30), 20, CheckSide::Before);
        t.observe(WideReal::from_u64(3, 30), 30, CheckSide::At);
        let (m, x, _) = t.worst.clone().unwrap();
        assert_eq!(x, 20);
        assert_eq!(m, WideReal::from_u64(3, 30));
        assert_eq!(t.points, 3);
    }

    #[test]
    fn merge_is_order_respecting() {
        let mut a = WorstTracker::default();
        a.observe(WideReal::from_u64(4, 30), 10, CheckSide::At);
        let mut b = WorstTracker::default();
        b.observe(WideReal::from_u64(4, 30), 99, CheckSide::At);
        a.merge_after(b);
        assert_eq!(a.worst.clone().unwrap().1, 10);
        assert_eq!(a.points, 2);
    }

    #[test]
    fn report_serializes_margin_as_decimal_string() {
        let r = InequalityReport::new(
            "demo",
            2,
            100,
            WideReal::parse("0.0115401", 30).unwrap(),
            66,
            CheckSide::IntBefore,
            42,
        );
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["holds"], true);
        assert!(json["worst_margin"].as_str().unwrap().starts_with("1.15401"));
        assert_eq!(json["witness"], 66);
    }
}
