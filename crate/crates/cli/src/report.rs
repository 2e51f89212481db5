use std::fmt::Write as _;

/// An ordered list of named fields, printed either as `key=value` lines or as
/// a CSV row. Field order is the column order.
#[derive(Debug, Clone, Default)]
pub struct Report {
    fields: Vec<(&'static str, String)>,
}

impl Report {
    pub fn new(command: &str) -> Self {
        let mut r = Report::default();
        r.push("command", command);
        r
    }

    pub fn push(&mut self, key: &'static str, value: impl ToString) -> &mut Self {
        let value = value.to_string();
        debug_assert!(!value.contains(['\n', ',']), "field {key} is not CSV-safe");
        self.fields.push((key, value));
        self
    }

    /// Floats use the shortest representation that round-trips.
    pub fn num(&mut self, key: &'static str, value: f64) -> &mut Self {
        assert!(value.is_finite(), "field {key} is not finite: {value}");
        self.push(key, value)
    }

    pub fn flag(&mut self, key: &'static str, value: bool) -> &mut Self {
        self.push(key, if value { "pass" } else { "fail" })
    }

    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.fields {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    pub fn csv_header(&self) -> String {
        let names: Vec<&str> = self.fields.iter().map(|(k, _)| *k).collect();
        names.join(",")
    }

    pub fn csv_row(&self) -> String {
        let values: Vec<&str> = self.fields.iter().map(|(_, v)| v.as_str()).collect();
        values.join(",")
    }
}
